//! Identification of reduced evolution models `x(t+1) = B x(t) + Psi0(t)` (or
//! `dx/dt = A x + Psi0(t)`) with outputs `y = C x + d`, fitted by least squares on
//! principal-component states of a delay embedding.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::embedding::DelayEmbedding;
use crate::error::{Error, Result};
use crate::linalg::lstsq;
use crate::series::TimeSeries;

/// Largest power allowed in a time-basis term.
pub const MAX_POWER: u32 = 8;

/// Simulated state norms above this are treated as a blow-up.
pub const INSTABILITY_NORM: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "term", rename_all = "lowercase")]
pub enum BasisTerm {
    /// `t^p`
    Power { p: u32 },
    /// `sin(omega t + phi)`
    Sin { omega: f64, phi: f64 },
    /// `exp(alpha t)`
    Exp { alpha: f64 },
}

impl BasisTerm {
    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            BasisTerm::Power { p } => t.powi(p as i32),
            BasisTerm::Sin { omega, phi } => (omega * t + phi).sin(),
            BasisTerm::Exp { alpha } => (alpha * t).exp(),
        }
    }

    /// Parses `t^2`, `t`, `1`, `sin(2,0.5)` (omega, optional phase) or `exp(-0.1)`.
    pub fn parse(text: &str) -> Result<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Config(format!("cannot parse basis term `{text}`"));
        let args = |inner: &str| -> Result<Vec<f64>> {
            inner.split(',').map(|v| v.parse::<f64>().map_err(|_| bad())).collect()
        };
        let term = if s == "1" {
            BasisTerm::Power { p: 0 }
        } else if s == "t" {
            BasisTerm::Power { p: 1 }
        } else if let Some(p) = s.strip_prefix("t^") {
            BasisTerm::Power { p: p.parse().map_err(|_| bad())? }
        } else if let Some(inner) = s.strip_prefix("sin(").and_then(|r| r.strip_suffix(')')) {
            match args(inner)?.as_slice() {
                [omega] => BasisTerm::Sin { omega: *omega, phi: 0.0 },
                [omega, phi] => BasisTerm::Sin { omega: *omega, phi: *phi },
                _ => return Err(bad()),
            }
        } else if let Some(inner) = s.strip_prefix("exp(").and_then(|r| r.strip_suffix(')')) {
            match args(inner)?.as_slice() {
                [alpha] => BasisTerm::Exp { alpha: *alpha },
                _ => return Err(bad()),
            }
        } else {
            return Err(bad());
        };
        term.validate()?;
        Ok(term)
    }

    fn validate(&self) -> Result<()> {
        match *self {
            BasisTerm::Power { p } if p > MAX_POWER => {
                Err(Error::invalid(format!("power {p} exceeds the maximum of {MAX_POWER}")))
            }
            BasisTerm::Sin { omega, phi } if !omega.is_finite() || !phi.is_finite() => {
                Err(Error::invalid("sin term parameters must be finite"))
            }
            BasisTerm::Exp { alpha } if !alpha.is_finite() => Err(Error::invalid("exp rate must be finite")),
            _ => Ok(()),
        }
    }
}

/// Ordered list of scalar functions of time forming the forcing part of the model.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TimeBasis {
    pub terms: Vec<BasisTerm>,
}

impl TimeBasis {
    pub fn new(terms: Vec<BasisTerm>) -> Result<Self> {
        for t in &terms {
            t.validate()?;
        }
        Ok(Self { terms })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn eval(&self, t: f64) -> Vec<f64> {
        self.terms.iter().map(|b| b.eval(t)).collect()
    }

    /// Values at every time of `times`, row-major, with a finiteness check.
    fn grid(&self, times: &[f64]) -> Result<Vec<f64>> {
        let mut out = Vec::with_capacity(times.len() * self.len());
        for &t in times {
            for term in &self.terms {
                let v = term.eval(t);
                if !v.is_finite() {
                    return Err(Error::invalid(format!("basis term {term:?} is not finite at t = {t}")));
                }
                out.push(v);
            }
        }
        Ok(out)
    }
}

/// Model states over time together with the map back to embedding coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StateSequence {
    pub n: usize,
    /// `K x n`, row-major.
    pub states: Vec<f64>,
    /// Source-sample index of each row.
    pub times: Vec<usize>,
    pub dt: f64,
    /// Mean of the embedded vectors that was removed.
    pub mean: Vec<f64>,
    /// `width x n`, row-major: embedded vector = mean + projection * state.
    pub projection: Vec<f64>,
    /// Variance captured by each retained component.
    pub variances: Vec<f64>,
}

impl StateSequence {
    /// Wraps states that are already model coordinates (identity projection, zero mean).
    pub fn from_states(n: usize, states: Vec<f64>, times: Vec<usize>, dt: f64) -> Result<Self> {
        if n == 0 || states.len() != n * times.len() {
            return Err(Error::ShapeMismatch("states must hold n values per time".into()));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("states must be finite"));
        }
        if times.windows(2).any(|w| w[1] != w[0] + 1) {
            return Err(Error::invalid("state times must be consecutive"));
        }
        let mut projection = vec![0.0; n * n];
        for i in 0..n {
            projection[i * n + i] = 1.0;
        }
        Ok(Self { n, states, times, dt, mean: vec![0.0; n], projection, variances: vec![] })
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn state(&self, r: usize) -> &[f64] {
        &self.states[r * self.n..(r + 1) * self.n]
    }

    /// Physical time of row `r`.
    pub fn time(&self, r: usize) -> f64 {
        self.times[r] as f64 * self.dt
    }
}

/// Leading-`n` principal components of the mean-centered embedded vectors.
pub fn build_state_sequence(emb: &DelayEmbedding, n: usize) -> Result<StateSequence> {
    let w = emb.width();
    let k = emb.len();
    if n == 0 || n > w {
        return Err(Error::invalid(format!("state dimension must be in 1..={w}")));
    }
    if k <= 10 * n {
        return Err(Error::TooShort { required: 10 * n + 1, available: k });
    }
    let mut mean = vec![0.0; w];
    for row in emb.rows() {
        for (m, v) in mean.iter_mut().zip(row) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= k as f64);
    let centered = DMatrix::from_fn(k, w, |r, c| emb.row(r)[c] - mean[c]);
    let svd = centered.clone().svd(false, true);
    let v_t = svd.v_t.as_ref().expect("requested V");
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let smax = svd.singular_values[order[0]];
    let tol = smax * f64::EPSILON * k.max(w) as f64;
    let rank = order.iter().filter(|&&i| svd.singular_values[i] > tol).count();
    if rank < n {
        return Err(Error::RankDeficient { rank, requested: n });
    }
    let variances: Vec<f64> = order[..n]
        .iter()
        .map(|&i| svd.singular_values[i].powi(2) / k as f64)
        .collect();
    let projection = if n == w {
        DMatrix::identity(w, w)
    } else {
        let mut p = DMatrix::zeros(w, n);
        for (j, &i) in order[..n].iter().enumerate() {
            let mut v = v_t.row(i).transpose();
            // Deterministic sign: largest-magnitude entry positive.
            let big = v.iter().copied().max_by(|a, b| a.abs().total_cmp(&b.abs())).unwrap_or(1.0);
            if big < 0.0 {
                v.neg_mut();
            }
            p.set_column(j, &v);
        }
        p
    };
    let states = &centered * &projection;
    let mut row_major = Vec::with_capacity(k * n);
    for r in 0..k {
        row_major.extend(states.row(r).iter());
    }
    let mut proj_rm = Vec::with_capacity(w * n);
    for r in 0..w {
        proj_rm.extend(projection.row(r).iter());
    }
    Ok(StateSequence {
        n,
        states: row_major,
        times: emb.times().to_vec(),
        dt: emb.source_dt(),
        mean,
        projection: proj_rm,
        variances,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelMode {
    Discrete,
    Continuous,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsiTerm {
    #[serde(flatten)]
    pub term: BasisTerm,
    /// One coefficient per state.
    pub coeffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReducedModel {
    pub mode: ModelMode,
    pub n: usize,
    pub dt: f64,
    /// `B` (discrete) or `A` (continuous), `n x n`, rows.
    #[serde(rename = "B")]
    pub dynamics: Vec<Vec<f64>>,
    pub psi: Vec<PsiTerm>,
    /// `outputs x n`, rows.
    #[serde(rename = "C")]
    pub c: Vec<Vec<f64>>,
    /// Output offset `d` in `y = C x + d`.
    pub offset: Vec<f64>,
    /// Initial state and time of the training run.
    pub x0: Vec<f64>,
    pub t0: f64,
    /// Training-horizon fit percentage per output channel.
    pub fit: Vec<f64>,
    /// RMS of the one-step state-equation residuals per state.
    pub residual_rms: Vec<f64>,
}

impl ReducedModel {
    pub fn outputs(&self) -> usize {
        self.c.len()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let m: Self = serde_json::from_str(text)?;
        m.check()?;
        Ok(m)
    }

    fn check(&self) -> Result<()> {
        let n = self.n;
        let ok = self.dynamics.len() == n
            && self.dynamics.iter().all(|r| r.len() == n)
            && self.psi.iter().all(|p| p.coeffs.len() == n)
            && self.c.iter().all(|r| r.len() == n)
            && self.offset.len() == self.c.len()
            && self.x0.len() == n;
        if ok {
            Ok(())
        } else {
            Err(Error::ShapeMismatch("model matrices have inconsistent dimensions".into()))
        }
    }

    /// `B x + Psi0(t)` (discrete) or `A x + Psi0(t)` (continuous).
    fn rhs(&self, t: f64, x: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.dynamics[i].iter().zip(x).map(|(a, b)| a * b).sum();
        }
        for p in &self.psi {
            let phi = p.term.eval(t);
            for (o, c) in out.iter_mut().zip(&p.coeffs) {
                *o += c * phi;
            }
        }
    }

    fn output(&self, x: &[f64]) -> Vec<f64> {
        self.c
            .iter()
            .zip(&self.offset)
            .map(|(row, d)| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() + d)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FitOptions {
    /// Continuous mode: centered moving-average window applied to states before differencing.
    pub smoother: Option<usize>,
}

fn moving_average(seq: &StateSequence, w: usize) -> Vec<f64> {
    let (k, n) = (seq.len(), seq.n);
    let half = w / 2;
    let mut out = vec![0.0; k * n];
    for r in 0..k {
        let lo = r.saturating_sub(half);
        let hi = (r + half).min(k - 1);
        let cnt = (hi - lo + 1) as f64;
        for c in 0..n {
            out[r * n + c] = (lo..=hi).map(|i| seq.states[i * n + c]).sum::<f64>() / cnt;
        }
    }
    out
}

/// Central differences in the interior, one-sided at the ends.
fn derivative(states: &[f64], k: usize, n: usize, dt: f64) -> Vec<f64> {
    let mut d = vec![0.0; k * n];
    for r in 0..k {
        let (a, b, h) = if r == 0 {
            (0, 1, dt)
        } else if r == k - 1 {
            (k - 2, k - 1, dt)
        } else {
            (r - 1, r + 1, 2.0 * dt)
        };
        for c in 0..n {
            d[r * n + c] = (states[b * n + c] - states[a * n + c]) / h;
        }
    }
    d
}

/// Least-squares fit of the state equation and the output map.
///
/// `outputs` is the observed series the embedding was built from; its samples at
/// the state times are the regression targets for `C` and `d`.
pub fn fit_model(
    seq: &StateSequence,
    basis: &TimeBasis,
    outputs: &TimeSeries,
    mode: ModelMode,
    options: &FitOptions,
) -> Result<ReducedModel> {
    let (k, n, b) = (seq.len(), seq.n, basis.len());
    if k < 2 {
        return Err(Error::InsufficientData("need at least two states".into()));
    }
    if seq.times.last().is_some_and(|&t| t >= outputs.len()) {
        return Err(Error::ShapeMismatch("state times extend past the output series".into()));
    }
    let times: Vec<f64> = (0..k).map(|r| seq.time(r)).collect();
    let phi = basis.grid(&times)?;
    let (rows, target): (usize, Vec<f64>) = match mode {
        ModelMode::Discrete => (k - 1, seq.states[n..].to_vec()),
        ModelMode::Continuous => {
            let smoothed;
            let src = match options.smoother {
                Some(w) if w > 1 => {
                    smoothed = moving_average(seq, w);
                    &smoothed
                }
                _ => &seq.states,
            };
            (k, derivative(src, k, n, seq.dt))
        }
    };
    let cols = n + b;
    if rows < cols + 1 {
        return Err(Error::InsufficientData(format!(
            "{rows} usable transitions for {cols} regressors; need at least {}",
            cols + 1
        )));
    }
    let x = DMatrix::from_fn(rows, cols, |r, c| if c < n { seq.states[r * n + c] } else { phi[r * b + c - n] });
    let y = DMatrix::from_row_slice(rows, n, &target[..rows * n]);
    let theta = lstsq(&x, &y).map_err(|e| match e {
        Error::Singular(msg) => Error::Singular(format!("{msg}; try removing basis terms")),
        other => other,
    })?;
    let resid = &y - &x * &theta;
    let residual_rms = (0..n).map(|c| (resid.column(c).norm_squared() / rows as f64).sqrt()).collect();
    // theta is (n + b) x n; its transpose holds [B | Psi].
    let dynamics = (0..n).map(|i| (0..n).map(|j| theta[(j, i)]).collect()).collect();
    let psi = basis
        .terms
        .iter()
        .enumerate()
        .map(|(t, term)| PsiTerm { term: *term, coeffs: (0..n).map(|i| theta[(n + t, i)]).collect() })
        .collect();

    let p = outputs.channels();
    let xs = DMatrix::from_fn(k, n + 1, |r, c| if c < n { seq.states[r * n + c] } else { 1.0 });
    let ys = DMatrix::from_fn(k, p, |r, c| outputs.value(seq.times[r], c));
    let cd = lstsq(&xs, &ys)?;
    let c = (0..p).map(|o| (0..n).map(|j| cd[(j, o)]).collect()).collect();
    let offset = (0..p).map(|o| cd[(n, o)]).collect();

    let mut model = ReducedModel {
        mode,
        n,
        dt: seq.dt,
        dynamics,
        psi,
        c,
        offset,
        x0: seq.state(0).to_vec(),
        t0: times[0],
        fit: vec![],
        residual_rms,
    };
    let sim = simulate(&model, &model.x0.clone(), k)?;
    model.fit = (0..p)
        .map(|o| {
            let obs: Vec<f64> = (0..k).map(|r| ys[(r, o)]).collect();
            let hat: Vec<f64> = sim.iter().map(|y| y[o]).collect();
            fit_percent(&obs, &hat)
        })
        .collect::<Result<_>>()?;
    Ok(model)
}

fn overflow(x: &[f64], step: usize) -> Result<()> {
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm.is_finite() && norm <= INSTABILITY_NORM {
        Ok(())
    } else {
        Err(Error::Divergence { step, message: format!("state norm {norm:e} exceeds {INSTABILITY_NORM:e}") })
    }
}

/// Outputs `y(t0 + i dt) = C x + d` for `i = 0..steps`, starting from `x0` at the
/// model's `t0`.
pub fn simulate(model: &ReducedModel, x0: &[f64], steps: usize) -> Result<Vec<Vec<f64>>> {
    model.check()?;
    if steps == 0 {
        return Err(Error::invalid("steps must be at least 1"));
    }
    if x0.len() != model.n {
        return Err(Error::ShapeMismatch(format!("x0 has {} entries, model has n = {}", x0.len(), model.n)));
    }
    let n = model.n;
    let mut x = x0.to_vec();
    let mut out = Vec::with_capacity(steps);
    let mut next = vec![0.0; n];
    let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n], vec![0.0; n]);
    for i in 0..steps {
        overflow(&x, i)?;
        out.push(model.output(&x));
        if i + 1 == steps {
            break;
        }
        let t = model.t0 + i as f64 * model.dt;
        match model.mode {
            ModelMode::Discrete => {
                model.rhs(t, &x, &mut next);
                x.copy_from_slice(&next);
            }
            ModelMode::Continuous => {
                let h = model.dt;
                model.rhs(t, &x, &mut k1);
                for j in 0..n {
                    tmp[j] = x[j] + 0.5 * h * k1[j];
                }
                model.rhs(t + 0.5 * h, &tmp, &mut k2);
                for j in 0..n {
                    tmp[j] = x[j] + 0.5 * h * k2[j];
                }
                model.rhs(t + 0.5 * h, &tmp, &mut k3);
                for j in 0..n {
                    tmp[j] = x[j] + h * k3[j];
                }
                model.rhs(t + h, &tmp, &mut k4);
                for j in 0..n {
                    x[j] += h / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]);
                }
            }
        }
    }
    Ok(out)
}

/// `100 (1 - ||y - yhat|| / ||y - mean(y)||)`; may be negative.
pub fn fit_percent(y: &[f64], yhat: &[f64]) -> Result<f64> {
    if y.len() != yhat.len() {
        return Err(Error::ShapeMismatch("observed and simulated lengths differ".into()));
    }
    if y.len() < 2 {
        return Err(Error::InsufficientData("fit needs at least two samples".into()));
    }
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let spread = y.iter().map(|v| (v - mean).powi(2)).sum::<f64>().sqrt();
    if !(spread > 0.0) {
        return Err(Error::Undefined("observed channel is constant".into()));
    }
    let err = y.iter().zip(yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    Ok(100.0 * (1.0 - err / spread))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::embed;

    fn scalar_model(b: f64) -> ReducedModel {
        ReducedModel {
            mode: ModelMode::Discrete,
            n: 1,
            dt: 1.0,
            dynamics: vec![vec![b]],
            psi: vec![],
            c: vec![vec![1.0]],
            offset: vec![0.0],
            x0: vec![1.0],
            t0: 0.0,
            fit: vec![],
            residual_rms: vec![],
        }
    }

    #[test]
    fn fit_percent_examples() {
        let y = [1.0, 3.0, 2.0, 5.0];
        assert_eq!(fit_percent(&y, &y).unwrap(), 100.0);
        let m = [2.75; 4];
        assert!(fit_percent(&y, &m).unwrap().abs() < 1e-12);
        let f = fit_percent(&[0.0, 2.0], &[0.0, 0.0]).unwrap();
        assert!((f - 100.0 * (1.0 - 2.0 / 2f64.sqrt())).abs() < 1e-12);
        assert!(matches!(fit_percent(&[1.0, 1.0], &[1.0, 2.0]), Err(Error::Undefined(_))));
    }

    #[test]
    fn simulate_examples() {
        let out = simulate(&scalar_model(0.5), &[1.0], 3).unwrap();
        assert_eq!(out, vec![vec![1.0], vec![0.5], vec![0.25]]);
        let out = simulate(&scalar_model(1.0), &[2.0], 4).unwrap();
        assert!(out.iter().all(|y| y == &[2.0]));
        let out = simulate(&scalar_model(0.0), &[0.0], 5).unwrap();
        assert!(out.iter().all(|y| y == &[0.0]));
    }

    #[test]
    fn simulate_blowup_reports_step() {
        match simulate(&scalar_model(1e3), &[1.0], 10) {
            Err(Error::Divergence { step, .. }) => assert_eq!(step, 5),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn basis_parsing() {
        assert_eq!(BasisTerm::parse("t^2").unwrap(), BasisTerm::Power { p: 2 });
        assert_eq!(BasisTerm::parse("t").unwrap(), BasisTerm::Power { p: 1 });
        assert_eq!(BasisTerm::parse("sin(2, 0.5)").unwrap(), BasisTerm::Sin { omega: 2.0, phi: 0.5 });
        assert_eq!(BasisTerm::parse("exp(-0.1)").unwrap(), BasisTerm::Exp { alpha: -0.1 });
        assert!(BasisTerm::parse("t^9").is_err());
        assert!(BasisTerm::parse("cos(1)").is_err());
    }

    #[test]
    fn identity_projection_at_full_width() {
        let y: Vec<f64> = (0..200).map(|i| (i as f64 * 0.3).sin()).collect();
        let s = TimeSeries::from_scalar("s", 0.1, y).unwrap();
        let e = embed(&s, 2, 3).unwrap();
        let seq = build_state_sequence(&e, 2).unwrap();
        assert_eq!(seq.projection, vec![1.0, 0.0, 0.0, 1.0]);
        for r in 0..e.len() {
            for c in 0..2 {
                assert!((seq.state(r)[c] - (e.row(r)[c] - seq.mean[c])).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn rank_one_data_rejected() {
        let y: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let s = TimeSeries::from_scalar("ramp", 1.0, y).unwrap();
        let e = embed(&s, 2, 1).unwrap();
        assert!(matches!(
            build_state_sequence(&e, 2),
            Err(Error::RankDeficient { rank: 1, requested: 2 })
        ));
    }

    #[test]
    fn ellipse_variances() {
        // (sin, cos) columns with amplitudes 3 and 1: PCA variances 9/2 and 1/2.
        let pts: Vec<f64> = (0..400)
            .flat_map(|i| {
                let a = std::f64::consts::TAU * i as f64 / 40.0;
                [3.0 * a.sin(), a.cos()]
            })
            .collect();
        let e = DelayEmbedding::from_points(2, pts, 1.0).unwrap();
        let seq = build_state_sequence(&e, 1).unwrap();
        assert!((seq.variances[0] - 4.5).abs() < 1e-9);
    }

    #[test]
    fn recovers_diagonal_map() {
        let mut x = vec![1.0, -2.0];
        let mut states = vec![];
        for _ in 0..60 {
            states.extend_from_slice(&x);
            x = vec![0.9 * x[0], 0.5 * x[1]];
        }
        let seq = StateSequence::from_states(2, states.clone(), (0..60).collect(), 1.0).unwrap();
        let y = TimeSeries::new("y", 1.0, 2, states).unwrap();
        let m = fit_model(&seq, &TimeBasis::default(), &y, ModelMode::Discrete, &FitOptions::default()).unwrap();
        let truth = [[0.9, 0.0], [0.0, 0.5]];
        for i in 0..2 {
            for j in 0..2 {
                assert!((m.dynamics[i][j] - truth[i][j]).abs() < 1e-8);
            }
        }
        assert!(m.fit.iter().all(|&f| f > 99.99));
    }

    #[test]
    fn continuous_mode_recovers_rate() {
        // x' = -0.5 x sampled at dt = 0.01: central differences are second-order accurate.
        let dt = 0.01;
        let states: Vec<f64> = (0..500).map(|i| (-0.5 * i as f64 * dt).exp()).collect();
        let seq = StateSequence::from_states(1, states.clone(), (0..500).collect(), dt).unwrap();
        let y = TimeSeries::from_scalar("y", dt, states).unwrap();
        let m = fit_model(&seq, &TimeBasis::default(), &y, ModelMode::Continuous, &FitOptions::default()).unwrap();
        assert!((m.dynamics[0][0] + 0.5).abs() < 1e-3, "{:?}", m.dynamics);
        assert!(m.fit[0] > 99.0);
    }

    #[test]
    fn singular_basis_reported() {
        let states: Vec<f64> = (0..50).map(|i| (i as f64 * 0.2).sin()).collect();
        let seq = StateSequence::from_states(1, states.clone(), (0..50).collect(), 1.0).unwrap();
        let y = TimeSeries::from_scalar("y", 1.0, states).unwrap();
        let basis = TimeBasis::new(vec![BasisTerm::Power { p: 1 }, BasisTerm::Power { p: 1 }]).unwrap();
        assert!(matches!(
            fit_model(&seq, &basis, &y, ModelMode::Discrete, &FitOptions::default()),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn json_round_trip_is_exact() {
        let mut m = scalar_model(0.1 + 0.2);
        m.psi.push(PsiTerm { term: BasisTerm::Sin { omega: 1.0 / 3.0, phi: 0.7 }, coeffs: vec![std::f64::consts::PI] });
        let back = ReducedModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
    }
}
