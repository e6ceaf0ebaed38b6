//! Lyapunov exponent estimators.
//!
//! All exponents are reported per sample (per iteration for maps); multiply by
//! `1 / dt` for per-time-unit values. Logarithms are natural unless a caller asks
//! for bits.

mod benettin;
mod divergence;
mod wolf;

pub use benettin::{benettin_spectrum, BenettinConfig, BenettinSource};
pub use divergence::{kantz_curve, rosenstein_curve, CurveOptions, DivergenceCurve};
pub use wolf::{wolf_lambda1, WolfEstimate, WolfParams};

use serde::{Deserialize, Serialize};

use crate::refsys::SystemKind;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Wolf,
    Rosenstein,
    Kantz,
    Benettin,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Wolf => "wolf",
            Method::Rosenstein => "rosenstein",
            Method::Kantz => "kantz",
            Method::Benettin => "benettin",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovSpectrum {
    pub method: Method,
    /// Descending, per sample.
    pub exponents: Vec<f64>,
    /// Sampling step used for per-time conversion.
    pub dt: f64,
    /// Number of steps accumulated.
    pub horizon: usize,
}

impl LyapunovSpectrum {
    pub fn new(method: Method, mut exponents: Vec<f64>, dt: f64, horizon: usize) -> Self {
        exponents.sort_by(|a, b| b.total_cmp(a));
        Self { method, exponents, dt, horizon }
    }

    pub fn per_time(&self) -> Vec<f64> {
        self.exponents.iter().map(|l| l / self.dt).collect()
    }

    /// Partial sums `k_m = sum_{i <= m} lambda_i`.
    pub fn partial_sums(&self) -> Vec<f64> {
        self.exponents
            .iter()
            .scan(0.0, |acc, &l| {
                *acc += l;
                Some(*acc)
            })
            .collect()
    }
}

/// Default tolerance for calling an exponent zero.
pub const ZERO_EXPONENT_TOL: f64 = 0.005;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    /// For flows: whether some exponent lies within the tolerance of zero. `None` for maps.
    pub zero_exponent: Option<bool>,
    /// Index of the exponent closest to zero.
    pub closest_to_zero: usize,
    /// Sum of all exponents.
    pub total: f64,
    /// `total < 0`.
    pub dissipative: bool,
    /// Upper bound on the metric entropy: the sum of positive exponents.
    pub entropy_bound: f64,
}

pub fn spectrum_checks(exponents: &[f64], kind: SystemKind, zero_tol: f64) -> SpectrumReport {
    let closest_to_zero = exponents
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .map(|(i, _)| i)
        .unwrap_or(0);
    let total: f64 = exponents.iter().sum();
    let zero_exponent = match kind {
        SystemKind::Flow => Some(exponents.iter().any(|l| l.abs() < zero_tol)),
        SystemKind::Map => None,
    };
    SpectrumReport {
        zero_exponent,
        closest_to_zero,
        total,
        dissipative: total < 0.0,
        entropy_bound: exponents.iter().filter(|&&l| l > 0.0).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn checks_flow() {
        let r = spectrum_checks(&[0.9, 0.0, -14.5], SystemKind::Flow, ZERO_EXPONENT_TOL);
        assert_eq!(r.zero_exponent, Some(true));
        assert!(r.dissipative);
        assert_eq!(r.entropy_bound, 0.9);
        assert_eq!(r.closest_to_zero, 1);
    }

    #[test]
    fn checks_map() {
        let r = spectrum_checks(&[0.419, -1.623], SystemKind::Map, ZERO_EXPONENT_TOL);
        assert_eq!(r.zero_exponent, None);
        assert!(r.total < 0.0 && r.dissipative);
    }

    #[test]
    fn checks_expanding() {
        let r = spectrum_checks(&[0.1, 0.1, 0.1], SystemKind::Flow, ZERO_EXPONENT_TOL);
        assert!(!r.dissipative);
        assert_eq!(r.zero_exponent, Some(false));
    }

    #[test]
    fn spectrum_sorted_and_scaled() {
        let s = LyapunovSpectrum::new(Method::Benettin, vec![-1.0, 0.5, 0.0], 0.1, 10);
        assert_eq!(s.exponents, vec![0.5, 0.0, -1.0]);
        assert_eq!(s.per_time(), vec![5.0, 0.0, -10.0]);
        assert_eq!(s.partial_sums(), vec![0.5, 0.5, -0.5]);
    }
}
