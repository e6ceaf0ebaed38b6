//! Wolf's fixed-evolution-time estimator of the largest exponent.

use serde::{Deserialize, Serialize};

use crate::embedding::{dist, DelayEmbedding, NeighborIndex};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfParams {
    /// Steps each pair is evolved before the separation is inspected.
    pub evolve_steps: usize,
    /// Separation above which the neighbor is replaced.
    pub max_len: f64,
    /// Replacement candidates closer than this are ignored.
    pub min_len: f64,
    /// Minimum cosine between the old and new separation directions.
    pub angle_tol: f64,
    /// Report bits per sample instead of nats.
    pub bits: bool,
}

impl WolfParams {
    /// Lengths scaled to the embedding's bounding diagonal.
    pub fn for_embedding(emb: &DelayEmbedding, evolve_steps: usize) -> Self {
        let diag = emb.bounding_diagonal();
        Self { evolve_steps, max_len: 0.1 * diag, min_len: 1e-4 * diag, angle_tol: 0.8, bits: false }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WolfEstimate {
    /// Per sample, natural log unless `bits` was requested.
    pub lambda1: f64,
    pub replacements: usize,
    pub total_steps: usize,
}

/// Minimum replacement events for a trustworthy estimate.
const MIN_REPLACEMENTS: usize = 10;

fn pick_neighbor(
    idx: &NeighborIndex<'_>,
    fiducial: usize,
    last: usize,
    params: &WolfParams,
    direction: Option<&[f64]>,
) -> Option<usize> {
    let emb = idx.embedding();
    let zf = emb.row(fiducial);
    if let Some(dir) = direction {
        let dnorm = dir.iter().map(|v| v * v).sum::<f64>().sqrt();
        if dnorm > 0.0 {
            let hood = idx.radius_where(fiducial, params.max_len, |r| r < last);
            for nb in hood.iter().filter(|nb| nb.distance >= params.min_len) {
                let zc = emb.row(nb.row);
                let dot: f64 = zc.iter().zip(zf).zip(dir).map(|((c, f), d)| (c - f) * d).sum();
                if dot / (nb.distance * dnorm) >= params.angle_tol {
                    return Some(nb.row);
                }
            }
        }
    }
    // Angle constraint relaxed: nearest admissible point that is not a duplicate.
    let near = idx.knn_where(fiducial, 16.min(last.saturating_sub(1)).max(1), |r| r < last).ok()?;
    near.iter()
        .find(|nb| nb.distance >= params.min_len)
        .or_else(|| near.iter().find(|nb| nb.distance > 0.0))
        .map(|nb| nb.row)
}

/// Largest exponent from repeated evolve-and-replace cycles along the fiducial trajectory.
pub fn wolf_lambda1(idx: &NeighborIndex<'_>, params: &WolfParams) -> Result<WolfEstimate> {
    if params.evolve_steps == 0 {
        return Err(Error::invalid("evolve_steps must be at least 1"));
    }
    if !(params.max_len > params.min_len && params.min_len >= 0.0) {
        return Err(Error::invalid("need 0 <= min_len < max_len"));
    }
    let emb = idx.embedding();
    let k = emb.len();
    let step = params.evolve_steps;
    if k <= step + 1 {
        return Err(Error::TooShort { required: step + 2, available: k });
    }
    let last = k - step;

    let mut fid = 0usize;
    let mut nb = pick_neighbor(idx, fid, last, params, None)
        .ok_or_else(|| Error::InsufficientData("no admissible starting neighbor".into()))?;
    let mut sum = 0.0;
    let mut total = 0usize;
    let mut replacements = 0usize;
    while fid < last && nb < last {
        let l0 = dist(emb.row(fid), emb.row(nb));
        let (f1, n1) = (fid + step, nb + step);
        let l1 = dist(emb.row(f1), emb.row(n1));
        if l0 > 0.0 && l1 > 0.0 {
            sum += (l1 / l0).ln();
        }
        total += step;
        fid = f1;
        if fid >= last {
            break;
        }
        if l1 > params.max_len || n1 >= last || l1 == 0.0 {
            let dir: Vec<f64> = emb.row(n1).iter().zip(emb.row(f1)).map(|(a, b)| a - b).collect();
            match pick_neighbor(idx, fid, last, params, Some(&dir)) {
                Some(r) => {
                    nb = r;
                    replacements += 1;
                }
                None => break,
            }
        } else {
            nb = n1;
        }
    }
    if replacements < MIN_REPLACEMENTS {
        return Err(Error::InsufficientData(format!(
            "only {replacements} neighbor replacements (need {MIN_REPLACEMENTS}); use a longer series or smaller max_len"
        )));
    }
    let mut lambda1 = sum / total as f64;
    if params.bits {
        lambda1 /= std::f64::consts::LN_2;
    }
    Ok(WolfEstimate { lambda1, replacements, total_steps: total })
}
