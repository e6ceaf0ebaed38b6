//! Lyapunov spectrum by propagating an orthonormal tangent frame with periodic QR.

use nalgebra::{DMatrix, DVector};

use super::{LyapunovSpectrum, Method};
use crate::embedding::NeighborIndex;
use crate::error::{Error, Result};
use crate::refsys::{ReferenceSystem, SystemKind};

/// Where the tangent dynamics come from.
pub enum BenettinSource<'a> {
    /// Jacobians estimated by local least squares over `k_neighbors` neighbors.
    Data { idx: &'a NeighborIndex<'a>, k_neighbors: usize },
    /// Exact Jacobians of a reference system. Flows are sampled every `dt` with
    /// `substeps` RK4 steps per sample; maps ignore both.
    Exact { sys: &'a ReferenceSystem, x0: Vec<f64>, dt: f64, substeps: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenettinConfig {
    pub n_exp: usize,
    /// Accumulated samples (data mode: `0` uses the whole embedding).
    pub steps: usize,
    /// Samples between re-orthonormalizations.
    pub renorm_interval: usize,
    /// Initial samples used only to align the frame.
    pub warmup: usize,
    /// Data mode: samples spanned by each estimated Jacobian.
    pub jacobian_step: usize,
}

impl BenettinConfig {
    pub fn new(n_exp: usize, steps: usize) -> Self {
        Self { n_exp, steps, renorm_interval: 1, warmup: 0, jacobian_step: 1 }
    }
}

/// Accumulates `ln |R_ii|` of successive QR factorizations.
struct Frame {
    q: DMatrix<f64>,
    sums: Vec<f64>,
    since_qr: usize,
}

impl Frame {
    fn new(dim: usize, n_exp: usize) -> Self {
        Self { q: DMatrix::identity(dim, n_exp), sums: vec![0.0; n_exp], since_qr: 0 }
    }

    fn orthonormalize(&mut self, accumulate: bool, step: usize) -> Result<()> {
        if self.q.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step, message: "tangent vectors became non-finite".into() });
        }
        let qr = self.q.clone().qr();
        let r = qr.r();
        if accumulate {
            for (i, s) in self.sums.iter_mut().enumerate() {
                let d = r[(i, i)].abs();
                if !(d > 0.0) {
                    return Err(Error::Divergence { step, message: "tangent frame collapsed".into() });
                }
                *s += d.ln();
            }
        }
        self.q = qr.q();
        self.since_qr = 0;
        Ok(())
    }

    /// Applies `jac` (dim x dim) and re-orthonormalizes when due.
    fn advance(&mut self, jac: &DMatrix<f64>, interval: usize, accumulate: bool, step: usize) -> Result<()> {
        self.q = jac * &self.q;
        self.since_qr += 1;
        if self.since_qr >= interval {
            self.orthonormalize(accumulate, step)?;
        }
        Ok(())
    }
}

pub fn benettin_spectrum(source: &BenettinSource<'_>, config: &BenettinConfig) -> Result<LyapunovSpectrum> {
    if config.n_exp == 0 {
        return Err(Error::invalid("n_exp must be at least 1"));
    }
    if config.renorm_interval == 0 {
        return Err(Error::invalid("renorm_interval must be at least 1"));
    }
    match source {
        BenettinSource::Exact { sys, x0, dt, substeps } => exact(sys, x0, *dt, *substeps, config),
        BenettinSource::Data { idx, k_neighbors } => data(idx, *k_neighbors, config),
    }
}

fn exact(sys: &ReferenceSystem, x0: &[f64], dt: f64, substeps: usize, cfg: &BenettinConfig) -> Result<LyapunovSpectrum> {
    let d = sys.dimension;
    if cfg.n_exp > d {
        return Err(Error::invalid(format!("n_exp {} exceeds state dimension {d}", cfg.n_exp)));
    }
    if x0.len() != d {
        return Err(Error::ShapeMismatch(format!("initial state has {} components, system has {d}", x0.len())));
    }
    if cfg.steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    let mut frame = Frame::new(d, cfg.n_exp);
    let mut x = x0.to_vec();
    let total = cfg.warmup + cfg.steps;
    let mut jac = vec![0.0; d * d];
    let sample_dt = match sys.kind {
        SystemKind::Map => 1.0,
        SystemKind::Flow => {
            if !(dt > 0.0) || substeps == 0 {
                return Err(Error::invalid("dt must be positive and substeps at least 1"));
            }
            dt
        }
    };
    let mut next = vec![0.0; d];
    for s in 0..total {
        let accumulate = s >= cfg.warmup;
        if s == cfg.warmup && frame.since_qr > 0 {
            frame.orthonormalize(false, s)?;
        }
        match sys.kind {
            SystemKind::Map => {
                sys.jacobian(s as f64, &x, &mut jac);
                sys.eval(s as f64, &x, &mut next);
                x.copy_from_slice(&next);
                let j = DMatrix::from_row_slice(d, d, &jac);
                frame.advance(&j, cfg.renorm_interval, accumulate, s + 1)?;
            }
            SystemKind::Flow => {
                let h = dt / substeps as f64;
                for sub in 0..substeps {
                    let t = s as f64 * dt + sub as f64 * h;
                    variational_rk4(sys, t, h, &mut x, &mut frame.q);
                }
                frame.since_qr += 1;
                if frame.since_qr >= cfg.renorm_interval {
                    frame.orthonormalize(accumulate, s + 1)?;
                }
            }
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Divergence { step: s + 1, message: "state became non-finite".into() });
        }
    }
    if frame.since_qr > 0 {
        frame.orthonormalize(true, total)?;
    }
    let exps = frame.sums.iter().map(|s| s / cfg.steps as f64).collect();
    Ok(LyapunovSpectrum::new(Method::Benettin, exps, sample_dt, cfg.steps))
}

/// One RK4 step of the joint system `x' = f(t, x)`, `V' = J(t, x) V`.
fn variational_rk4(sys: &ReferenceSystem, t: f64, h: f64, x: &mut Vec<f64>, v: &mut DMatrix<f64>) {
    let d = x.len();
    let deriv = |t: f64, x: &[f64], v: &DMatrix<f64>| -> (DVector<f64>, DMatrix<f64>) {
        let f = DVector::from_vec(sys.eval_vec(t, x));
        let j = DMatrix::from_row_slice(d, d, &sys.jacobian_vec(t, x));
        (f, j * v)
    };
    let xv = DVector::from_column_slice(x);
    let (k1, l1) = deriv(t, x, v);
    let x2 = &xv + &k1 * (0.5 * h);
    let v2 = &*v + &l1 * (0.5 * h);
    let (k2, l2) = deriv(t + 0.5 * h, x2.as_slice(), &v2);
    let x3 = &xv + &k2 * (0.5 * h);
    let v3 = &*v + &l2 * (0.5 * h);
    let (k3, l3) = deriv(t + 0.5 * h, x3.as_slice(), &v3);
    let x4 = &xv + &k3 * h;
    let v4 = &*v + &l3 * h;
    let (k4, l4) = deriv(t + h, x4.as_slice(), &v4);
    let xn = xv + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0);
    *v += (l1 + l2 * 2.0 + l3 * 2.0 + l4) * (h / 6.0);
    x.copy_from_slice(xn.as_slice());
}

/// Least-squares Jacobian of `z(row) -> z(row + step)` from neighbor displacements,
/// with an intercept absorbing the offset of the local linearization.
fn local_jacobian(idx: &NeighborIndex<'_>, row: usize, step: usize, k: usize) -> Result<DMatrix<f64>> {
    let emb = idx.embedding();
    let d = emb.width();
    let last = emb.len() - step;
    let hood = idx.knn_where(row, k, |r| r < last)?;
    let z0 = emb.row(row);
    let z1 = emb.row(row + step);
    let mut x = DMatrix::zeros(hood.len(), d + 1);
    let mut y = DMatrix::zeros(hood.len(), d);
    for (i, nb) in hood.iter().enumerate() {
        x[(i, 0)] = 1.0;
        for (c, (a, b)) in emb.row(nb.row).iter().zip(z0).enumerate() {
            x[(i, c + 1)] = a - b;
        }
        for (c, (a, b)) in emb.row(nb.row + step).iter().zip(z1).enumerate() {
            y[(i, c)] = a - b;
        }
    }
    let svd = x.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * 1e-10 * (hood.len().max(d + 1) as f64);
    let rank = svd.rank(tol);
    if rank < d + 1 {
        return Err(Error::Singular(format!(
            "neighborhood of row {row} has rank {rank} < {}; increase k_neighbors",
            d + 1
        )));
    }
    let coef = svd.solve(&y, tol).map_err(|e| Error::Singular(format!("row {row}: {e}")))?;
    // coef is (d+1) x d; rows 1.. hold J^T.
    Ok(coef.rows(1, d).transpose())
}

fn data(idx: &NeighborIndex<'_>, k: usize, cfg: &BenettinConfig) -> Result<LyapunovSpectrum> {
    let emb = idx.embedding();
    let d = emb.width();
    if cfg.n_exp > d {
        return Err(Error::invalid(format!("n_exp {} exceeds embedding width {d}", cfg.n_exp)));
    }
    if k < cfg.n_exp + 1 || k < d + 1 {
        return Err(Error::invalid(format!("k_neighbors must be at least {}", (cfg.n_exp + 1).max(d + 1))));
    }
    let step = cfg.jacobian_step.max(1);
    if emb.len() <= step + k {
        return Err(Error::TooShort { required: step + k + 1, available: emb.len() });
    }
    let available = (emb.len() - step - 1) / step;
    let steps = if cfg.steps == 0 { available.saturating_sub(cfg.warmup) } else { cfg.steps };
    if cfg.warmup + steps > available || steps == 0 {
        return Err(Error::TooShort { required: (cfg.warmup + steps.max(1)) * step + step + 1, available: emb.len() });
    }
    let mut frame = Frame::new(d, cfg.n_exp);
    let mut row = 0;
    for s in 0..cfg.warmup + steps {
        if s == cfg.warmup && frame.since_qr > 0 {
            frame.orthonormalize(false, s)?;
        }
        let j = local_jacobian(idx, row, step, k)?;
        frame.advance(&j, cfg.renorm_interval, s >= cfg.warmup, s + 1)?;
        row += step;
    }
    if frame.since_qr > 0 {
        frame.orthonormalize(true, cfg.warmup + steps)?;
    }
    let samples = (steps * step) as f64;
    let exps = frame.sums.iter().map(|s| s / samples).collect();
    Ok(LyapunovSpectrum::new(Method::Benettin, exps, emb.source_dt(), steps * step))
}
