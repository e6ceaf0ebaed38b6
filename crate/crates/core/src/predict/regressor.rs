//! Regressors mapping feature vectors to a scalar forecast.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::lstsq;

/// Upper limit on hidden units.
pub const MAX_HIDDEN: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegressorKind {
    Mean,
    Linear,
    Net,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    pub hidden: usize,
    /// Independent trainings from different seeded initializations.
    pub restarts: usize,
    pub max_iter: usize,
    pub seed: u64,
    /// Initial damping factor.
    pub damping: f64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self { hidden: 4, restarts: 5, max_iter: 500, seed: crate::DEFAULT_SEED, damping: 1e-3 }
    }
}

/// One hidden sigmoid layer with a linear output unit. Inputs and target are
/// standardized internally with the stored statistics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Net {
    pub hidden: usize,
    pub inputs: usize,
    /// `hidden x inputs`, row-major.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    pub w2: Vec<f64>,
    pub b2: f64,
    pub x_mean: Vec<f64>,
    pub x_scale: Vec<f64>,
    pub y_mean: f64,
    pub y_scale: f64,
    /// Training mean squared error in original units.
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Regressor {
    Mean { value: f64 },
    Linear { coef: Vec<f64>, intercept: f64 },
    Net(Net),
}

fn sigmoid(v: f64) -> f64 {
    1.0 / (1.0 + (-v).exp())
}

impl Regressor {
    pub fn kind(&self) -> RegressorKind {
        match self {
            Regressor::Mean { .. } => RegressorKind::Mean,
            Regressor::Linear { .. } => RegressorKind::Linear,
            Regressor::Net(_) => RegressorKind::Net,
        }
    }

    pub fn predict(&self, x: &[f64]) -> f64 {
        match self {
            Regressor::Mean { value } => *value,
            Regressor::Linear { coef, intercept } => intercept + coef.iter().zip(x).map(|(a, b)| a * b).sum::<f64>(),
            Regressor::Net(net) => {
                let xs: Vec<f64> = x
                    .iter()
                    .zip(net.x_mean.iter().zip(&net.x_scale))
                    .map(|(v, (m, s))| (v - m) / s)
                    .collect();
                let params = net.flat();
                net.y_mean + net.y_scale * forward(&params, net.hidden, net.inputs, &xs)
            }
        }
    }
}

impl Net {
    fn flat(&self) -> Vec<f64> {
        let mut p = self.w1.clone();
        p.extend(&self.b1);
        p.extend(&self.w2);
        p.push(self.b2);
        p
    }
}

/// Parameter layout: `w1 (h*d) | b1 (h) | w2 (h) | b2`.
fn forward(p: &[f64], h: usize, d: usize, x: &[f64]) -> f64 {
    let (w1, rest) = p.split_at(h * d);
    let (b1, rest) = rest.split_at(h);
    let (w2, b2) = rest.split_at(h);
    let mut out = b2[0];
    for j in 0..h {
        let a = b1[j] + w1[j * d..(j + 1) * d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        out += w2[j] * sigmoid(a);
    }
    out
}

/// Residuals and Jacobian of the residuals with respect to the parameters.
fn residuals_and_jacobian(p: &[f64], h: usize, d: usize, xs: &[Vec<f64>], ys: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
    let np = p.len();
    let (w1, rest) = p.split_at(h * d);
    let (b1, rest) = rest.split_at(h);
    let (w2, b2) = rest.split_at(h);
    let mut r = DVector::zeros(xs.len());
    let mut jac = DMatrix::zeros(xs.len(), np);
    for (i, (x, &y)) in xs.iter().zip(ys).enumerate() {
        let mut out = b2[0];
        for j in 0..h {
            let a = b1[j] + w1[j * d..(j + 1) * d].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
            let s = sigmoid(a);
            out += w2[j] * s;
            let ds = s * (1.0 - s) * w2[j];
            for c in 0..d {
                jac[(i, j * d + c)] = ds * x[c];
            }
            jac[(i, h * d + j)] = ds;
            jac[(i, h * d + h + j)] = s;
        }
        jac[(i, np - 1)] = 1.0;
        r[i] = out - y;
    }
    (r, jac)
}

fn standardize_columns(xs: &[Vec<f64>]) -> (Vec<f64>, Vec<f64>) {
    let d = xs[0].len();
    let n = xs.len() as f64;
    let mean: Vec<f64> = (0..d).map(|c| xs.iter().map(|x| x[c]).sum::<f64>() / n).collect();
    let scale = (0..d)
        .map(|c| {
            let var = xs.iter().map(|x| (x[c] - mean[c]).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                var.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    (mean, scale)
}

/// Damped Gauss-Newton from one initialization; returns parameters and scaled SSE.
fn train_once(mut p: Vec<f64>, h: usize, d: usize, xs: &[Vec<f64>], ys: &[f64], cfg: &NetConfig) -> Result<(Vec<f64>, f64)> {
    let (mut r, mut jac) = residuals_and_jacobian(&p, h, d, xs, ys);
    let mut sse = r.norm_squared();
    let mut mu = cfg.damping;
    for _ in 0..cfg.max_iter {
        if !sse.is_finite() {
            return Err(Error::Divergence { step: 0, message: "network loss became non-finite".into() });
        }
        let jt = jac.transpose();
        let g = &jt * &r;
        if g.amax() < 1e-12 || sse < 1e-20 {
            break;
        }
        let jtj = &jt * &jac;
        let mut improved = false;
        while mu < 1e12 {
            let mut a = jtj.clone();
            for i in 0..a.nrows() {
                a[(i, i)] += mu;
            }
            let step = match a.cholesky() {
                Some(ch) => ch.solve(&(-&g)),
                None => {
                    mu *= 10.0;
                    continue;
                }
            };
            let trial: Vec<f64> = p.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let (tr, tj) = residuals_and_jacobian(&trial, h, d, xs, ys);
            let tsse = tr.norm_squared();
            if tsse.is_finite() && tsse < sse {
                p = trial;
                r = tr;
                jac = tj;
                sse = tsse;
                mu = (mu / 10.0).max(1e-15);
                improved = true;
                break;
            }
            mu *= 10.0;
        }
        if !improved {
            break;
        }
    }
    if !sse.is_finite() {
        return Err(Error::Divergence { step: cfg.max_iter, message: "network loss became non-finite".into() });
    }
    Ok((p, sse))
}

/// Fits a regressor to `(features, target)` pairs.
pub fn train_regressor(xs: &[Vec<f64>], ys: &[f64], kind: RegressorKind, config: &NetConfig) -> Result<Regressor> {
    if xs.len() != ys.len() {
        return Err(Error::ShapeMismatch("feature and target counts differ".into()));
    }
    if xs.is_empty() {
        return Err(Error::EmptyInput("no training samples".into()));
    }
    let d = xs[0].len();
    if xs.iter().any(|x| x.len() != d) {
        return Err(Error::ShapeMismatch("feature vectors differ in length".into()));
    }
    if xs.iter().flatten().chain(ys).any(|v| !v.is_finite()) {
        return Err(Error::invalid("training data must be finite"));
    }
    let n = xs.len();
    match kind {
        RegressorKind::Mean => Ok(Regressor::Mean { value: ys.iter().sum::<f64>() / n as f64 }),
        RegressorKind::Linear => {
            if n < d + 1 {
                return Err(Error::InsufficientData(format!("linear fit needs at least {} samples", d + 1)));
            }
            let a = DMatrix::from_fn(n, d + 1, |i, j| if j < d { xs[i][j] } else { 1.0 });
            let b = DMatrix::from_column_slice(n, 1, ys);
            let sol = lstsq(&a, &b)?;
            Ok(Regressor::Linear { coef: (0..d).map(|j| sol[j]).collect(), intercept: sol[d] })
        }
        RegressorKind::Net => {
            let h = config.hidden;
            if h == 0 || h > MAX_HIDDEN {
                return Err(Error::invalid(format!("hidden units must be in 1..={MAX_HIDDEN}")));
            }
            if config.restarts == 0 {
                return Err(Error::invalid("restarts must be at least 1"));
            }
            let (x_mean, x_scale) = standardize_columns(xs);
            let y_mean = ys.iter().sum::<f64>() / n as f64;
            let y_var = ys.iter().map(|y| (y - y_mean).powi(2)).sum::<f64>() / n as f64;
            let y_scale = if y_var > 0.0 { y_var.sqrt() } else { 1.0 };
            let sx: Vec<Vec<f64>> = xs
                .iter()
                .map(|x| x.iter().zip(x_mean.iter().zip(&x_scale)).map(|(v, (m, s))| (v - m) / s).collect())
                .collect();
            let sy: Vec<f64> = ys.iter().map(|y| (y - y_mean) / y_scale).collect();
            let np = h * (d + 2) + 1;
            let mut best: Option<(Vec<f64>, f64)> = None;
            for restart in 0..config.restarts {
                let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(restart as u64));
                let bound = 1.0 / (d.max(1) as f64).sqrt();
                let mut p: Vec<f64> = (0..np).map(|_| rng.gen_range(-2.0..2.0) * bound).collect();
                // Output layer starts small so early steps fit the hidden features.
                for v in &mut p[h * (d + 1)..] {
                    *v *= 0.5;
                }
                let (params, sse) = train_once(p, h, d, &sx, &sy, config)?;
                if best.as_ref().is_none_or(|(_, b)| sse < *b) {
                    best = Some((params, sse));
                }
            }
            let (p, sse) = best.expect("at least one restart");
            let (w1, rest) = p.split_at(h * d);
            let (b1, rest) = rest.split_at(h);
            let (w2, b2) = rest.split_at(h);
            Ok(Regressor::Net(Net {
                hidden: h,
                inputs: d,
                w1: w1.to_vec(),
                b1: b1.to_vec(),
                w2: w2.to_vec(),
                b2: b2[0],
                x_mean,
                x_scale,
                y_mean,
                y_scale,
                mse: sse / n as f64 * y_scale * y_scale,
            }))
        }
    }
}
