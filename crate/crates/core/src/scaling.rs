//! Straight-line fits and automatic selection of the most linear stretch of a curve.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LineFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope; zero for two points or an exact line.
    pub stderr: f64,
}

/// Ordinary least-squares line through `(x, y)`.
pub fn fit_line(x: &[f64], y: &[f64]) -> Result<LineFit> {
    let n = x.len();
    if n != y.len() {
        return Err(Error::ShapeMismatch("x and y differ in length".into()));
    }
    if n < 2 {
        return Err(Error::InsufficientData("a line fit needs at least two points".into()));
    }
    let xm = x.iter().sum::<f64>() / n as f64;
    let ym = y.iter().sum::<f64>() / n as f64;
    let sxx: f64 = x.iter().map(|v| (v - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::Degenerate("all abscissae coincide".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - xm) * (b - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let stderr = if n > 2 {
        let rss: f64 = x
            .iter()
            .zip(y)
            .map(|(a, b)| (b - intercept - slope * a).powi(2))
            .sum();
        (rss / (n - 2) as f64 / sxx).sqrt()
    } else {
        0.0
    };
    Ok(LineFit { slope, intercept, stderr })
}

/// Rule for picking the most linear stretch of a curve.
///
/// A window of consecutive points qualifies when the spread (max - min) of its
/// local slopes is below `rel_tol * max(|mean local slope|, abs_floor)`.
/// The longest qualifying window wins; ties go to the smaller spread, then the
/// earlier window.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearWindowRule {
    pub rel_tol: f64,
    pub min_points: usize,
    pub abs_floor: f64,
}

impl LinearWindowRule {
    pub const DIMENSION: Self = Self { rel_tol: 0.1, min_points: 3, abs_floor: 0.0 };
    pub const DIVERGENCE: Self = Self { rel_tol: 0.1, min_points: 5, abs_floor: 0.005 };
}

/// Inclusive index range `(lo, hi)` of the selected window, or `None`.
pub fn most_linear_window(x: &[f64], y: &[f64], rule: LinearWindowRule) -> Option<(usize, usize)> {
    let n = x.len().min(y.len());
    let min_points = rule.min_points.max(2);
    if n < min_points {
        return None;
    }
    let slopes: Vec<f64> = (0..n - 1)
        .map(|i| (y[i + 1] - y[i]) / (x[i + 1] - x[i]))
        .collect();
    let mut best: Option<(usize, usize, f64)> = None;
    for lo in 0..n {
        let (mut smin, mut smax, mut ssum) = (f64::INFINITY, f64::NEG_INFINITY, 0.0);
        for hi in lo + 1..n {
            let s = slopes[hi - 1];
            if !s.is_finite() {
                break;
            }
            smin = smin.min(s);
            smax = smax.max(s);
            ssum += s;
            let count = hi - lo + 1;
            let mean = ssum / (hi - lo) as f64;
            let scale = mean.abs().max(rule.abs_floor);
            let spread = smax - smin;
            if !(spread < rule.rel_tol * scale) {
                // Spread can only grow as the window extends.
                break;
            }
            if count < min_points {
                continue;
            }
            let rel = spread / scale;
            let better = match best {
                None => true,
                Some((blo, bhi, brel)) => {
                    let bcount = bhi - blo + 1;
                    count > bcount || (count == bcount && rel < brel)
                }
            };
            if better {
                best = Some((lo, hi, rel));
            }
        }
    }
    best.map(|(lo, hi, _)| (lo, hi))
}
