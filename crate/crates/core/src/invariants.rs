//! Correlation integral, generalized (Renyi) dimensions and the Kaplan-Yorke dimension.
//!
//! Logarithms are base 2 throughout; slopes do not depend on the base.

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{dist, DelayEmbedding};
use crate::error::{Error, Result};
use crate::scaling::{fit_line, most_linear_window, LinearWindowRule};

/// Number of radii in the default grid.
pub const DEFAULT_GRID_POINTS: usize = 24;

/// Geometric grid of `points` radii spanning `[lo, hi]`.
pub fn geometric_grid(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0) || !(hi > lo) || points < 2 {
        return Err(Error::invalid(format!(
            "geometric grid needs 0 < lo < hi and at least two points (lo={lo}, hi={hi}, points={points})"
        )));
    }
    let ratio = (hi / lo).ln() / (points - 1) as f64;
    Ok((0..points).map(|i| lo * (ratio * i as f64).exp()).collect())
}

/// Default grid: 24 geometric radii over `[1e-3, 1]` times the attractor diameter.
pub fn default_grid(emb: &DelayEmbedding) -> Result<Vec<f64>> {
    let diam = emb.bounding_diagonal();
    if !(diam > 0.0) {
        return Err(Error::Degenerate("all embedded points coincide".into()));
    }
    geometric_grid(1e-3 * diam, diam, DEFAULT_GRID_POINTS)
}

/// Dyadic box sides `L / 2^k` for box counting, `L` the longest bounding-box side,
/// down to `1e-3` times the diameter; increasing. Each side divides the bounding box
/// evenly, so box counts carry no partial-box rounding.
pub fn box_grid(emb: &DelayEmbedding) -> Result<Vec<f64>> {
    let (lo, hi) = emb.bounds();
    let side = lo.iter().zip(&hi).map(|(a, b)| b - a).fold(0.0, f64::max);
    if !(side > 0.0) {
        return Err(Error::Degenerate("all embedded points coincide".into()));
    }
    let floor = 1e-3 * emb.bounding_diagonal();
    let mut grid: Vec<f64> = (0..64).map(|k| side / 2f64.powi(k)).take_while(|&e| e >= floor).collect();
    grid.reverse();
    Ok(grid)
}

/// Pair normalization of the correlation sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairNormalization {
    /// `1 / M^2` over ordered pairs `i != j`.
    #[default]
    Squared,
    /// `1 / (number of admissible ordered pairs)`.
    Admissible,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCurve {
    pub epsilons: Vec<f64>,
    pub values: Vec<f64>,
    /// Number of admissible ordered pairs.
    pub pair_count: u64,
    pub points: usize,
    pub normalization: PairNormalization,
}

impl CorrelationCurve {
    /// Wraps precomputed values, e.g. a synthetic curve.
    pub fn from_values(epsilons: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        validate_grid(&epsilons)?;
        if values.len() != epsilons.len() {
            return Err(Error::ShapeMismatch("one value per radius required".into()));
        }
        Ok(Self { epsilons, values, pair_count: 0, points: 0, normalization: PairNormalization::Squared })
    }

    /// `(log2 eps, log2 C)` for every radius with `C > 0`, for plotting.
    pub fn log_log(&self) -> Vec<(f64, f64)> {
        self.epsilons
            .iter()
            .zip(&self.values)
            .filter(|(_, &c)| c > 0.0)
            .map(|(e, c)| (e.log2(), c.log2()))
            .collect()
    }

    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("log2_eps,log2_c\n");
        for (x, y) in self.log_log() {
            out.push_str(&format!("{x},{y}\n"));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionEstimate {
    pub value: f64,
    pub fit_range: (f64, f64),
    /// `(log2 eps, numerator)` pairs used in the fit.
    pub slope_points: Vec<(f64, f64)>,
    pub stderr: f64,
}

fn validate_grid(eps: &[f64]) -> Result<()> {
    if eps.is_empty() || eps[0] <= 0.0 || eps.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::invalid("radius grid must be positive and strictly increasing"));
    }
    Ok(())
}

/// Correlation sum `C(eps)` over ordered pairs with `|t_i - t_j| > theiler`.
///
/// Distances equal to `eps` count (Heaviside step with `H(0) = 1`). Pair counts are
/// integers, so the result does not depend on how the work is split across threads.
pub fn correlation_integral(
    emb: &DelayEmbedding,
    epsilons: &[f64],
    theiler: usize,
    normalization: PairNormalization,
) -> Result<CorrelationCurve> {
    validate_grid(epsilons)?;
    let m = emb.len();
    let times = emb.times();
    let eps_max = *epsilons.last().unwrap();
    let g = epsilons.len();
    let (hist, admissible) = (0..m)
        .into_par_iter()
        .fold(
            || (vec![0u64; g], 0u64),
            |(mut hist, mut adm), i| {
                let zi = emb.row(i);
                for j in i + 1..m {
                    if times[i].abs_diff(times[j]) <= theiler {
                        continue;
                    }
                    adm += 1;
                    let d = dist(zi, emb.row(j));
                    if d <= eps_max {
                        hist[epsilons.partition_point(|&e| e < d)] += 1;
                    }
                }
                (hist, adm)
            },
        )
        .reduce(
            || (vec![0u64; g], 0u64),
            |(mut a, x), (b, y)| {
                for (p, q) in a.iter_mut().zip(b) {
                    *p += q;
                }
                (a, x + y)
            },
        );
    if admissible == 0 {
        return Err(Error::InsufficientData(format!(
            "no point pairs separated by more than {theiler} samples"
        )));
    }
    let denom = match normalization {
        PairNormalization::Squared => (m as f64) * (m as f64),
        PairNormalization::Admissible => 2.0 * admissible as f64,
    };
    let mut cum = 0u64;
    let values = hist
        .iter()
        .map(|&c| {
            cum += c;
            2.0 * cum as f64 / denom
        })
        .collect();
    Ok(CorrelationCurve {
        epsilons: epsilons.to_vec(),
        values,
        pair_count: 2 * admissible,
        points: m,
        normalization,
    })
}

fn slope_estimate(
    x: &[f64],
    y: &[f64],
    eps: &[f64],
    fit_range: Option<(f64, f64)>,
    what: &str,
) -> Result<DimensionEstimate> {
    let (lo, hi) = match fit_range {
        Some((a, b)) => {
            let idx: Vec<usize> = (0..x.len()).filter(|&i| eps[i] >= a && eps[i] <= b).collect();
            if idx.len() < 3 {
                return Err(Error::NoScalingRegion(format!(
                    "fewer than 3 usable radii of the {what} lie in [{a}, {b}]"
                )));
            }
            if idx.windows(2).any(|w| w[1] != w[0] + 1) {
                return Err(Error::NoScalingRegion("fit range is not contiguous".into()));
            }
            (idx[0], *idx.last().unwrap())
        }
        None => most_linear_window(x, y, LinearWindowRule::DIMENSION).ok_or_else(|| {
            Error::NoScalingRegion(format!(
                "no window of the {what} has local slopes within 10%; supply a fit range manually"
            ))
        })?,
    };
    let fit = fit_line(&x[lo..=hi], &y[lo..=hi])?;
    Ok(DimensionEstimate {
        value: fit.slope,
        fit_range: (eps[lo], eps[hi]),
        slope_points: (lo..=hi).map(|i| (x[i], y[i])).collect(),
        stderr: fit.stderr,
    })
}

/// Correlation dimension: slope of `log2 C` against `log2 eps` over radii with `0 < C < 1`.
pub fn correlation_dimension(curve: &CorrelationCurve, fit_range: Option<(f64, f64)>) -> Result<DimensionEstimate> {
    let valid: Vec<usize> = (0..curve.values.len())
        .filter(|&i| curve.values[i] > 0.0 && curve.values[i] < 1.0)
        .collect();
    if valid.len() < 3 {
        return Err(Error::NoScalingRegion(
            "fewer than 3 radii with 0 < C < 1; widen the radius grid".into(),
        ));
    }
    let eps: Vec<f64> = valid.iter().map(|&i| curve.epsilons[i]).collect();
    let x: Vec<f64> = eps.iter().map(|e| e.log2()).collect();
    let y: Vec<f64> = valid.iter().map(|&i| curve.values[i].log2()).collect();
    slope_estimate(&x, &y, &eps, fit_range, "correlation curve")
}

/// Box occupation probabilities for boxes of side `eps` anchored at `origin`.
///
/// Boxes are closed on the far face of the bounding box, so a point on `upper`
/// shares the last box instead of opening a new one.
fn box_probabilities(emb: &DelayEmbedding, origin: &[f64], upper: &[f64], eps: f64) -> Vec<f64> {
    let last: Vec<i64> = origin
        .iter()
        .zip(upper)
        .map(|(o, u)| (((u - o) / eps).ceil() as i64 - 1).max(0))
        .collect();
    let mut counts: HashMap<Vec<i64>, u64> = HashMap::new();
    for row in emb.rows() {
        let key: Vec<i64> = row
            .iter()
            .zip(origin)
            .zip(&last)
            .map(|((v, o), &l)| (((v - o) / eps).floor() as i64).min(l))
            .collect();
        *counts.entry(key).or_insert(0) += 1;
    }
    let total = emb.len() as f64;
    let mut p: Vec<f64> = counts.into_values().map(|c| c as f64 / total).collect();
    // Fixed summation order independent of hash iteration.
    p.sort_by(|a, b| a.total_cmp(b));
    p
}

/// Numerator whose slope against `log2 eps` is `D_q`.
fn renyi_numerator(p: &[f64], q: f64) -> f64 {
    if q == 0.0 {
        -(p.len() as f64).log2()
    } else if q == 1.0 {
        p.iter().map(|&pi| pi * pi.log2()).sum()
    } else {
        p.iter().map(|&pi| pi.powf(q)).sum::<f64>().log2() / (q - 1.0)
    }
}

/// Generalized dimension `D_q` by box counting, boxes anchored at the bounding-box corner.
pub fn generalized_dimension(
    emb: &DelayEmbedding,
    q: f64,
    epsilons: &[f64],
    fit_range: Option<(f64, f64)>,
) -> Result<DimensionEstimate> {
    validate_grid(epsilons)?;
    if !q.is_finite() {
        return Err(Error::invalid("q must be finite"));
    }
    let (origin, upper) = emb.bounds();
    let per_eps: Vec<(f64, usize)> = epsilons
        .par_iter()
        .map(|&e| {
            let p = box_probabilities(emb, &origin, &upper, e);
            (renyi_numerator(&p, q), p.len())
        })
        .collect();
    if per_eps.iter().all(|&(_, boxes)| boxes <= 1) {
        return Err(Error::Degenerate("all mass falls in a single box at every radius".into()));
    }
    let m = emb.len();
    // Radii where every point sits alone or all share one box carry no scaling information.
    let valid: Vec<usize> = (0..epsilons.len())
        .filter(|&i| per_eps[i].1 > 1 && per_eps[i].1 < m)
        .collect();
    if valid.len() < 3 {
        return Err(Error::NoScalingRegion("fewer than 3 informative radii".into()));
    }
    let eps: Vec<f64> = valid.iter().map(|&i| epsilons[i]).collect();
    let x: Vec<f64> = eps.iter().map(|e| e.log2()).collect();
    let y: Vec<f64> = valid.iter().map(|&i| per_eps[i].0).collect();
    slope_estimate(&x, &y, &eps, fit_range, "box-counting curve")
}

/// Kaplan-Yorke (Lyapunov) dimension of a spectrum.
pub fn kaplan_yorke(spectrum: &[f64]) -> Result<f64> {
    if spectrum.is_empty() {
        return Err(Error::EmptyInput("spectrum has no exponents".into()));
    }
    if spectrum.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("spectrum contains non-finite exponents"));
    }
    let mut l = spectrum.to_vec();
    l.sort_by(|a, b| b.total_cmp(a));
    if l[0] < 0.0 {
        return Ok(0.0);
    }
    let mut sum = 0.0;
    let mut k = 0;
    let mut sum_k = 0.0;
    for (i, &v) in l.iter().enumerate() {
        sum += v;
        if sum >= 0.0 {
            k = i + 1;
            sum_k = sum;
        }
    }
    if k == l.len() {
        return Ok(l.len() as f64);
    }
    let next = l[k];
    if next == 0.0 {
        return Err(Error::Undefined(format!("exponent {} is zero", k + 1)));
    }
    Ok(k as f64 + sum_k / next.abs())
}
