//! Reference dynamical systems used as signal generators and exact-Jacobian oracles.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Samples dropped from the start of generated trajectories before analysis.
pub const DEFAULT_TRANSIENT: usize = 1000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SystemKind {
    Flow,
    Map,
}

/// `f(t, x, out)`: derivative for flows, next state for maps.
pub type Evaluator = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;
/// `j(t, x, out)`: row-major `n x n` Jacobian of the evaluator with respect to `x`.
pub type Jacobian = Arc<dyn Fn(f64, &[f64], &mut [f64]) + Send + Sync>;

#[derive(Clone)]
pub struct ReferenceSystem {
    pub name: String,
    pub kind: SystemKind,
    pub dimension: usize,
    pub parameters: Vec<(String, f64)>,
    evaluator: Evaluator,
    jacobian: Jacobian,
}

impl fmt::Debug for ReferenceSystem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ReferenceSystem")
            .field("name", &self.name)
            .field("kind", &self.kind)
            .field("dimension", &self.dimension)
            .field("parameters", &self.parameters)
            .finish()
    }
}

impl ReferenceSystem {
    pub fn new(
        name: impl Into<String>,
        kind: SystemKind,
        dimension: usize,
        parameters: Vec<(String, f64)>,
        evaluator: Evaluator,
        jacobian: Jacobian,
    ) -> Self {
        Self { name: name.into(), kind, dimension, parameters, evaluator, jacobian }
    }

    /// `x -> A x` (map) or `dx/dt = A x` (flow) for a row-major square matrix.
    pub fn linear(kind: SystemKind, matrix: Vec<f64>) -> Result<Self> {
        let n = (matrix.len() as f64).sqrt().round() as usize;
        if n == 0 || n * n != matrix.len() {
            return Err(Error::ShapeMismatch("linear system needs a square matrix".into()));
        }
        let a = Arc::new(matrix);
        let a2 = Arc::clone(&a);
        Ok(Self::new(
            "linear",
            kind,
            n,
            Vec::new(),
            Arc::new(move |_, x, out| {
                for i in 0..n {
                    out[i] = (0..n).map(|j| a[i * n + j] * x[j]).sum();
                }
            }),
            Arc::new(move |_, _, out| out.copy_from_slice(&a2)),
        ))
    }

    pub fn parameter(&self, name: &str) -> Option<f64> {
        self.parameters.iter().find(|(n, _)| n == name).map(|p| p.1)
    }

    pub fn eval(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.evaluator)(t, x, out)
    }

    pub fn eval_vec(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension];
        self.eval(t, x, &mut out);
        out
    }

    pub fn jacobian(&self, t: f64, x: &[f64], out: &mut [f64]) {
        (self.jacobian)(t, x, out)
    }

    pub fn jacobian_vec(&self, t: f64, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dimension * self.dimension];
        self.jacobian(t, x, &mut out);
        out
    }

    /// Largest relative discrepancy (Frobenius) between the analytic Jacobian and a
    /// central finite-difference estimate over `samples` random states in `[-scale, scale]^n`.
    pub fn jacobian_fd_error<R: Rng>(&self, rng: &mut R, samples: usize, scale: f64) -> f64 {
        let n = self.dimension;
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-scale..=scale)).collect();
            let t = rng.gen_range(0.0..10.0);
            let analytic = self.jacobian_vec(t, &x);
            let mut fd = vec![0.0; n * n];
            for j in 0..n {
                let h = 1e-6 * x[j].abs().max(1.0);
                let mut xp = x.clone();
                let mut xm = x.clone();
                xp[j] += h;
                xm[j] -= h;
                let fp = self.eval_vec(t, &xp);
                let fm = self.eval_vec(t, &xm);
                for i in 0..n {
                    fd[i * n + j] = (fp[i] - fm[i]) / (2.0 * h);
                }
            }
            let diff: f64 = analytic.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
            let norm: f64 = analytic.iter().map(|a| a * a).sum::<f64>().sqrt().max(1.0);
            worst = worst.max(diff / norm);
        }
        worst
    }
}

/// Names accepted by [`catalog`].
pub const CATALOG: [&str; 6] = ["lorenz", "rossler", "henon", "test42", "example2", "example3"];

fn params(list: &[(&str, f64)]) -> Vec<(String, f64)> {
    list.iter().map(|(n, v)| (n.to_string(), *v)).collect()
}

pub fn catalog(name: &str) -> Result<ReferenceSystem> {
    let sys = match name {
        "lorenz" => {
            let (s, r, b) = (10.0, 28.0, 8.0 / 3.0);
            ReferenceSystem::new(
                name,
                SystemKind::Flow,
                3,
                params(&[("sigma", s), ("rho", r), ("beta", b)]),
                Arc::new(move |_, x, o| {
                    o[0] = -s * (x[0] - x[1]);
                    o[1] = x[0] * (r - x[2]) - x[1];
                    o[2] = x[0] * x[1] - b * x[2];
                }),
                Arc::new(move |_, x, j| {
                    j.copy_from_slice(&[-s, s, 0.0, r - x[2], -1.0, -x[0], x[1], x[0], -b]);
                }),
            )
        }
        "rossler" => {
            let (a, b, c) = (0.2, 0.2, 5.7);
            ReferenceSystem::new(
                name,
                SystemKind::Flow,
                3,
                params(&[("a", a), ("b", b), ("c", c)]),
                Arc::new(move |_, x, o| {
                    o[0] = -(x[1] + x[2]);
                    o[1] = x[0] + a * x[1];
                    o[2] = b + x[2] * (x[0] - c);
                }),
                Arc::new(move |_, x, j| {
                    j.copy_from_slice(&[0.0, -1.0, -1.0, 1.0, a, 0.0, x[2], 0.0, x[0] - c]);
                }),
            )
        }
        "henon" => {
            let (a, b) = (1.4, 0.3);
            ReferenceSystem::new(
                name,
                SystemKind::Map,
                2,
                params(&[("a", a), ("b", b)]),
                Arc::new(move |_, x, o| {
                    o[0] = 1.0 - a * x[0] * x[0] + x[1];
                    o[1] = b * x[0];
                }),
                Arc::new(move |_, x, j| {
                    j.copy_from_slice(&[-2.0 * a * x[0], 1.0, b, 0.0]);
                }),
            )
        }
        "test42" => {
            let (k, d) = (0.375, 0.23);
            ReferenceSystem::new(
                name,
                SystemKind::Flow,
                3,
                params(&[("k", k), ("d", d)]),
                Arc::new(move |_, x, o| {
                    o[0] = -x[1] - x[2];
                    o[1] = x[0];
                    o[2] = k * (x[1] - x[1] * x[1]) - d * x[2];
                }),
                Arc::new(move |_, x, j| {
                    j.copy_from_slice(&[0.0, -1.0, -1.0, 1.0, 0.0, 0.0, 0.0, k * (1.0 - 2.0 * x[1]), -d]);
                }),
            )
        }
        "example2" => {
            let (amp, omega) = (0.05, 2.0);
            ReferenceSystem::new(
                name,
                SystemKind::Flow,
                2,
                params(&[("forcing", amp), ("omega", omega)]),
                Arc::new(move |t, x, o| {
                    o[0] = x[1];
                    o[1] = -x[0] + x[0] * x[0] - amp * (omega * t).sin();
                }),
                Arc::new(move |_, x, j| {
                    j.copy_from_slice(&[0.0, 1.0, -1.0 + 2.0 * x[0], 0.0]);
                }),
            )
        }
        "example3" => {
            let (a, b, c) = (1.25, 1.3, 0.1);
            ReferenceSystem::new(
                name,
                SystemKind::Map,
                2,
                params(&[("a", a), ("b", b), ("c", c)]),
                Arc::new(move |_, x, o| {
                    o[0] = a * x[0] * (1.0 - x[1]);
                    o[1] = b * x[1] * (1.0 - x[0]) + c * (x[0] - x[1]);
                }),
                Arc::new(move |_, x, j| {
                    j.copy_from_slice(&[
                        a * (1.0 - x[1]),
                        -a * x[0],
                        -b * x[1] + c,
                        b * (1.0 - x[0]) - c,
                    ]);
                }),
            )
        }
        other => return Err(Error::UnknownSystem(other.to_string())),
    };
    Ok(sys)
}

/// Suggested initial state for each catalog entry.
pub fn default_initial_state(name: &str) -> Result<Vec<f64>> {
    Ok(match name {
        "lorenz" => vec![1.0, 1.0, 1.0],
        "rossler" => vec![1.0, 1.0, 0.0],
        "henon" => vec![0.0, 0.0],
        "test42" => vec![0.1, 0.1, 0.1],
        "example2" => vec![0.0, 0.042],
        "example3" => vec![0.3, 0.4],
        other => return Err(Error::UnknownSystem(other.to_string())),
    })
}

/// States of a generated trajectory, row-major, sampled every `dt` time units.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub dimension: usize,
    pub dt: f64,
    /// Time of the first stored state.
    pub t0: f64,
    pub states: Vec<f64>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.states.len() / self.dimension
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn state(&self, i: usize) -> &[f64] {
        &self.states[i * self.dimension..(i + 1) * self.dimension]
    }

    pub fn component(&self, c: usize) -> Vec<f64> {
        self.states.iter().skip(c).step_by(self.dimension).copied().collect()
    }

    /// Drops the first `count` states.
    pub fn discard(mut self, count: usize) -> Self {
        let count = count.min(self.len());
        self.states.drain(..count * self.dimension);
        self.t0 += count as f64 * self.dt;
        self
    }

    /// Series observing the listed state components.
    pub fn observe(&self, name: &str, components: &[usize]) -> Result<TimeSeries> {
        if components.iter().any(|&c| c >= self.dimension) {
            return Err(Error::invalid("observed component out of range"));
        }
        let cols: Vec<Vec<f64>> = components.iter().map(|&c| self.component(c)).collect();
        TimeSeries::from_columns(name, self.dt, &cols)
    }
}

fn check_finite(x: &[f64], step: usize) -> Result<()> {
    if x.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::Divergence { step, message: "state became non-finite".into() })
    }
}

/// One classical Runge-Kutta step of size `h` from `(t, x)`, written into `x`.
pub fn rk4_step(sys: &ReferenceSystem, t: f64, x: &mut [f64], h: f64, work: &mut [Vec<f64>; 5]) {
    let n = x.len();
    let [k1, k2, k3, k4, tmp] = work;
    sys.eval(t, x, k1);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k1[i];
    }
    sys.eval(t + 0.5 * h, tmp, k2);
    for i in 0..n {
        tmp[i] = x[i] + 0.5 * h * k2[i];
    }
    sys.eval(t + 0.5 * h, tmp, k3);
    for i in 0..n {
        tmp[i] = x[i] + h * k3[i];
    }
    sys.eval(t + h, tmp, k4);
    for i in 0..n {
        x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
}

fn rk4_work(n: usize) -> [Vec<f64>; 5] {
    std::array::from_fn(|_| vec![0.0; n])
}

/// Fixed-step RK4; returns `steps + 1` states starting with `x0` at `t = 0`.
pub fn integrate(sys: &ReferenceSystem, x0: &[f64], dt: f64, steps: usize) -> Result<Trajectory> {
    sample_flow(sys, x0, dt, 1, steps)
}

/// RK4 with `substeps` internal steps per stored sample; returns `samples + 1` states.
pub fn sample_flow(
    sys: &ReferenceSystem,
    x0: &[f64],
    dt: f64,
    substeps: usize,
    samples: usize,
) -> Result<Trajectory> {
    if sys.kind != SystemKind::Flow {
        return Err(Error::invalid(format!("{} is a map; use iterate", sys.name)));
    }
    if !(dt > 0.0) || substeps == 0 {
        return Err(Error::invalid("dt must be positive and substeps at least 1"));
    }
    if x0.len() != sys.dimension {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} components, system has {}",
            x0.len(),
            sys.dimension
        )));
    }
    let n = sys.dimension;
    let h = dt / substeps as f64;
    let mut x = x0.to_vec();
    let mut states = Vec::with_capacity((samples + 1) * n);
    states.extend_from_slice(&x);
    let mut work = rk4_work(n);
    for s in 0..samples {
        for sub in 0..substeps {
            let t = s as f64 * dt + sub as f64 * h;
            rk4_step(sys, t, &mut x, h, &mut work);
        }
        check_finite(&x, s + 1)?;
        states.extend_from_slice(&x);
    }
    Ok(Trajectory { dimension: n, dt, t0: 0.0, states })
}

/// Repeated application of a map; returns `steps + 1` states starting with `x0`.
pub fn iterate(sys: &ReferenceSystem, x0: &[f64], steps: usize) -> Result<Trajectory> {
    if sys.kind != SystemKind::Map {
        return Err(Error::invalid(format!("{} is a flow; use integrate", sys.name)));
    }
    if x0.len() != sys.dimension {
        return Err(Error::ShapeMismatch(format!(
            "initial state has {} components, system has {}",
            x0.len(),
            sys.dimension
        )));
    }
    let n = sys.dimension;
    let mut x = x0.to_vec();
    let mut next = vec![0.0; n];
    let mut states = Vec::with_capacity((steps + 1) * n);
    states.extend_from_slice(&x);
    for s in 0..steps {
        sys.eval(s as f64, &x, &mut next);
        check_finite(&next, s + 1)?;
        x.copy_from_slice(&next);
        states.extend_from_slice(&x);
    }
    Ok(Trajectory { dimension: n, dt: 1.0, t0: 0.0, states })
}

/// Generates an observed series from a catalog system: `samples` states kept after
/// dropping `transient`, flows sampled every `dt` with `substeps` RK4 steps per sample.
pub fn generate(
    sys: &ReferenceSystem,
    x0: &[f64],
    dt: f64,
    substeps: usize,
    transient: usize,
    samples: usize,
) -> Result<Trajectory> {
    let total = transient + samples - 1;
    let traj = match sys.kind {
        SystemKind::Flow => sample_flow(sys, x0, dt, substeps, total)?,
        SystemKind::Map => iterate(sys, x0, total)?,
    };
    Ok(traj.discard(transient))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn exp_flow() -> ReferenceSystem {
        ReferenceSystem::linear(SystemKind::Flow, vec![1.0]).unwrap()
    }

    #[test]
    fn zero_flow_is_constant() {
        let sys = ReferenceSystem::linear(SystemKind::Flow, vec![0.0; 4]).unwrap();
        let tr = integrate(&sys, &[1.5, -2.0], 0.1, 50).unwrap();
        assert!(tr.states.chunks(2).all(|s| s == [1.5, -2.0]));
    }

    #[test]
    fn exponential_growth() {
        let tr = integrate(&exp_flow(), &[1.0], 0.01, 100).unwrap();
        assert!((tr.state(100)[0] - std::f64::consts::E).abs() < 1e-7);
    }

    #[test]
    fn rk4_is_fourth_order() {
        let err = |dt: f64| {
            let steps = (1.0 / dt).round() as usize;
            let tr = integrate(&exp_flow(), &[1.0], dt, steps).unwrap();
            (tr.state(steps)[0] - std::f64::consts::E).abs()
        };
        let ratio = err(0.1) / err(0.05);
        assert!((12.0..=20.0).contains(&ratio), "ratio {ratio}");
    }

    #[test]
    fn harmonic_energy_drift() {
        let sys = ReferenceSystem::linear(SystemKind::Flow, vec![0.0, 1.0, -1.0, 0.0]).unwrap();
        let tr = integrate(&sys, &[1.0, 0.0], 0.01, 10_000).unwrap();
        let e = |s: &[f64]| 0.5 * (s[0] * s[0] + s[1] * s[1]);
        assert!((e(tr.state(10_000)) - 0.5).abs() < 1e-6);
    }

    #[test]
    fn henon_first_steps() {
        let tr = iterate(&catalog("henon").unwrap(), &[0.0, 0.0], 2).unwrap();
        assert_eq!(tr.state(1), &[1.0, 0.0]);
        assert!((tr.state(2)[0] + 0.4).abs() < 1e-15);
        assert!((tr.state(2)[1] - 0.3).abs() < 1e-15);
    }

    #[test]
    fn identity_map_constant() {
        let sys = ReferenceSystem::linear(SystemKind::Map, vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let tr = iterate(&sys, &[0.7, 0.2], 10).unwrap();
        assert!(tr.states.chunks(2).all(|s| s == [0.7, 0.2]));
    }

    #[test]
    fn example3_first_step() {
        let tr = iterate(&catalog("example3").unwrap(), &[0.3, 0.4], 1).unwrap();
        assert!((tr.state(1)[0] - 0.225).abs() < 1e-15);
        assert!((tr.state(1)[1] - 0.354).abs() < 1e-15);
    }

    #[test]
    fn catalog_values() {
        let r = catalog("rossler").unwrap();
        let p: Vec<f64> = r.parameters.iter().map(|p| p.1).collect();
        assert_eq!(p, vec![0.2, 0.2, 5.7]);
        let t = catalog("test42").unwrap();
        assert_eq!(t.eval_vec(0.0, &[0.0, 1.0, 0.0]), vec![-1.0, 0.0, 0.0]);
        let h = catalog("henon").unwrap();
        for x in [[0.0, 0.0], [0.7, -0.2], [-1.3, 0.4]] {
            let j = h.jacobian_vec(0.0, &x);
            assert!((j[0] * j[3] - j[1] * j[2] + 0.3).abs() < 1e-15);
        }
        assert!(matches!(catalog("chua"), Err(Error::UnknownSystem(_))));
    }

    #[test]
    fn catalog_jacobians_match_finite_differences() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for name in CATALOG {
            let sys = catalog(name).unwrap();
            let err = sys.jacobian_fd_error(&mut rng, 100, 2.0);
            assert!(err < 1e-6, "{name}: {err}");
        }
    }

    #[test]
    fn divergence_reports_step() {
        let sys = ReferenceSystem::linear(SystemKind::Map, vec![1e200]).unwrap();
        match iterate(&sys, &[1e200], 5) {
            Err(Error::Divergence { step, .. }) => assert_eq!(step, 1),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn kind_mismatch_rejected() {
        assert!(iterate(&catalog("lorenz").unwrap(), &[1.0, 1.0, 1.0], 3).is_err());
        assert!(integrate(&catalog("henon").unwrap(), &[0.0, 0.0], 0.1, 3).is_err());
    }
}
