//! Average log-divergence curves (Rosenstein and Kantz) and their linear-region slopes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{dist, NeighborIndex};
use crate::error::{Error, Result};
use crate::scaling::{fit_line, most_linear_window, LinearWindowRule};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DivergenceCurve {
    pub horizons: Vec<usize>,
    pub values: Vec<f64>,
    /// Fitted largest exponent, per sample.
    pub slope: f64,
    pub intercept: f64,
    /// Inclusive horizon range of the fit.
    pub fit_window: (usize, usize),
    /// Number of reference points that contributed.
    pub references: usize,
}

impl DivergenceCurve {
    pub fn to_csv_string(&self) -> String {
        let mut out = String::from("step,value\n");
        for (h, v) in self.horizons.iter().zip(&self.values) {
            out.push_str(&format!("{h},{v}\n"));
        }
        out
    }
}

/// Options shared by the divergence-curve estimators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurveOptions {
    /// Use every `reference_stride`-th row as a reference point.
    pub reference_stride: usize,
    /// Kantz only: keep at most this many closest neighbors per neighborhood.
    pub max_neighbors: Option<usize>,
    /// Manual fit range (inclusive horizons); automatic selection when `None`.
    pub fit_window: Option<(usize, usize)>,
}

impl Default for CurveOptions {
    fn default() -> Self {
        Self { reference_stride: 1, max_neighbors: Some(64), fit_window: None }
    }
}

fn finish_curve(sums: Vec<f64>, counts: Vec<u64>, references: usize, opts: &CurveOptions) -> Result<DivergenceCurve> {
    let mut horizons = Vec::new();
    let mut values = Vec::new();
    for (i, (s, c)) in sums.into_iter().zip(counts).enumerate() {
        if c > 0 {
            horizons.push(i);
            values.push(s / c as f64);
        }
    }
    let x: Vec<f64> = horizons.iter().map(|&h| h as f64).collect();
    let (lo, hi) = match opts.fit_window {
        Some((a, b)) => {
            let lo = horizons.iter().position(|&h| h >= a);
            let hi = horizons.iter().rposition(|&h| h <= b);
            match (lo, hi) {
                (Some(lo), Some(hi)) if hi >= lo + 1 => (lo, hi),
                _ => return Err(Error::invalid(format!("fit window {a}..={b} holds fewer than two horizons"))),
            }
        }
        None => most_linear_window(&x, &values, LinearWindowRule::DIVERGENCE).ok_or_else(|| {
            Error::NoScalingRegion("divergence curve has no linear stretch; pass a fit window".into())
        })?,
    };
    let fit = fit_line(&x[lo..=hi], &values[lo..=hi])?;
    Ok(DivergenceCurve {
        fit_window: (horizons[lo], horizons[hi]),
        horizons,
        values,
        slope: fit.slope,
        intercept: fit.intercept,
        references,
    })
}

fn reduce_rows(rows: Vec<Option<Vec<f64>>>, horizon: usize) -> (Vec<f64>, Vec<u64>, usize) {
    let mut sums = vec![0.0; horizon + 1];
    let mut counts = vec![0u64; horizon + 1];
    let mut refs = 0;
    // Indexed reduction in row order keeps results bit-stable across thread counts.
    for row in rows.into_iter().flatten() {
        refs += 1;
        for (i, v) in row.into_iter().enumerate() {
            if v.is_finite() {
                sums[i] += v;
                counts[i] += 1;
            }
        }
    }
    (sums, counts, refs)
}

fn check_horizon(len: usize, horizon: usize) -> Result<()> {
    if horizon == 0 {
        return Err(Error::invalid("horizon must be at least 1 step"));
    }
    if horizon + 2 > len {
        return Err(Error::TooShort { required: horizon + 2, available: len });
    }
    Ok(())
}

/// Mean log distance between each reference point and its nearest admissible
/// neighbor as both evolve for `0..=horizon` steps.
pub fn rosenstein_curve(idx: &NeighborIndex<'_>, horizon: usize, opts: &CurveOptions) -> Result<DivergenceCurve> {
    let emb = idx.embedding();
    let k = emb.len();
    check_horizon(k, horizon)?;
    let last = k - horizon;
    let stride = opts.reference_stride.max(1);
    let rows: Vec<Option<Vec<f64>>> = (0..last)
        .into_par_iter()
        .filter(|j| j % stride == 0)
        .map(|j| {
            let nb = idx.knn_where(j, 1, |r| r < last).ok()?;
            let n = nb[0].row;
            if nb[0].distance == 0.0 {
                return None;
            }
            Some(
                (0..=horizon)
                    .map(|i| dist(emb.row(j + i), emb.row(n + i)).ln())
                    .collect(),
            )
        })
        .collect();
    let (sums, counts, refs) = reduce_rows(rows, horizon);
    if refs == 0 {
        return Err(Error::InsufficientData(
            "no reference point has an admissible neighbor with the full horizon".into(),
        ));
    }
    finish_curve(sums, counts, refs, opts)
}

/// `S(eps0, i)`: mean over reference points of the log of the average distance to all
/// admissible neighbors initially within `eps0`, after `i` steps.
pub fn kantz_curve(idx: &NeighborIndex<'_>, eps0: f64, horizon: usize, opts: &CurveOptions) -> Result<DivergenceCurve> {
    if !(eps0 > 0.0) {
        return Err(Error::invalid("eps0 must be positive"));
    }
    let emb = idx.embedding();
    let k = emb.len();
    check_horizon(k, horizon)?;
    let last = k - horizon;
    let stride = opts.reference_stride.max(1);
    let rows: Vec<Option<Vec<f64>>> = (0..last)
        .into_par_iter()
        .filter(|j| j % stride == 0)
        .map(|j| {
            let mut hood = idx.radius_where(j, eps0, |r| r < last);
            if let Some(cap) = opts.max_neighbors {
                hood.truncate(cap);
            }
            if hood.is_empty() {
                return None;
            }
            Some(
                (0..=horizon)
                    .map(|i| {
                        let zi = emb.row(j + i);
                        let mean = hood.iter().map(|nb| dist(zi, emb.row(nb.row + i))).sum::<f64>()
                            / hood.len() as f64;
                        mean.ln()
                    })
                    .collect(),
            )
        })
        .collect();
    let (sums, counts, refs) = reduce_rows(rows, horizon);
    if refs == 0 {
        return Err(Error::InsufficientData(format!(
            "no reference point has a neighbor within eps0 = {eps0}; try a larger radius"
        )));
    }
    finish_curve(sums, counts, refs, opts)
}
