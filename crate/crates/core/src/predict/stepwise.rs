//! Stepwise reconstruction: search over feature subsets and delays for the
//! embedding whose current neighborhood is most stable and most populated,
//! then forecast from that neighborhood.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{embed_features, NeighborIndex};
use crate::error::{Error, Result};

use super::scoring::{composite_j, local_predict, local_stability};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSeries {
    pub name: String,
    pub values: Vec<f64>,
}

impl FeatureSeries {
    pub fn new(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self { name: name.into(), values }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseConfig {
    pub m_min: usize,
    pub m_max: usize,
    pub tau_min: usize,
    pub tau_max: usize,
    /// Required stability of the neighborhood.
    pub lambda_min: f64,
    /// Absolute radius of the neighborhood around the current point.
    pub radius: f64,
    /// Theiler window; `None` uses the embedding default.
    pub theiler: Option<usize>,
    pub dt: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigScore {
    pub m: usize,
    pub tau: usize,
    /// Indices into the feature catalog.
    pub features: Vec<usize>,
    /// `None` when the neighborhood has fewer than two points.
    pub lambda_d: Option<f64>,
    pub neighbors: usize,
    pub j: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepwiseResult {
    pub best: ConfigScore,
    pub feature_names: Vec<String>,
    /// Forecast of the next embedded state.
    pub forecast: Vec<f64>,
    pub evaluated: usize,
}

/// `sign` with `sign(0) = 0`.
fn sign(v: f64) -> f64 {
    if v > 0.0 {
        1.0
    } else if v < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Structural-stability feature pair: `z1 = sign(yhat) / e_psi` and
/// `z2 = sign(y(t) - y(t-1))` (0 at the first sample).
pub fn stability_features(y: &[f64], yhat: &[f64], e_psi: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if y.len() != yhat.len() || y.len() != e_psi.len() {
        return Err(Error::ShapeMismatch("series, forecasts and errors differ in length".into()));
    }
    if let Some(i) = e_psi.iter().position(|&e| e == 0.0 || !e.is_finite()) {
        return Err(Error::Undefined(format!("model error at sample {i} is zero or non-finite")));
    }
    let z1 = yhat.iter().zip(e_psi).map(|(&f, &e)| sign(f) / e).collect();
    let z2 = (0..y.len()).map(|t| if t == 0 { 0.0 } else { sign(y[t] - y[t - 1]) }).collect();
    Ok((z1, z2))
}

/// All `m`-subsets of `0..n` in lexicographic order.
fn combinations(n: usize, m: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, m: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == m {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < m - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, m, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, m, &mut Vec::with_capacity(m), &mut out);
    out
}

fn evaluate(catalog: &[FeatureSeries], features: &[usize], tau: usize, cfg: &StepwiseConfig) -> Result<(ConfigScore, Vec<f64>)> {
    let cols: Vec<&[f64]> = features.iter().map(|&i| catalog[i].values.as_slice()).collect();
    let emb = embed_features(&cols, tau, cfg.dt)?;
    let theiler = cfg.theiler.unwrap_or_else(|| emb.default_theiler());
    let idx = NeighborIndex::with_theiler(&emb, theiler);
    let t = emb.len() - 1;
    let region: Vec<usize> = idx.radius_where(t, cfg.radius, |u| u < t).iter().map(|nb| nb.row).collect();
    let mut score =
        ConfigScore { m: features.len(), tau, features: features.to_vec(), lambda_d: None, neighbors: region.len(), j: 0 };
    let mut forecast = Vec::new();
    if region.len() >= 2 {
        let st = local_stability(&emb, &region)?;
        score.lambda_d = Some(st.lambda_d);
        score.j = composite_j(st.j1, st.j2, cfg.lambda_min);
        forecast = local_predict(&idx, t, region.len())?;
    }
    Ok((score, forecast))
}

/// Runs the search and forecasts with the best configuration.
///
/// Ties in `J` go to smaller `m`, then smaller `tau`, then the
/// lexicographically smaller feature set.
pub fn stepwise_reconstruct(catalog: &[FeatureSeries], cfg: &StepwiseConfig) -> Result<StepwiseResult> {
    if catalog.is_empty() {
        return Err(Error::EmptyInput("feature catalog is empty".into()));
    }
    if cfg.m_min == 0 || cfg.m_min > cfg.m_max || cfg.tau_min == 0 || cfg.tau_min > cfg.tau_max {
        return Err(Error::invalid("m and tau ranges must be non-empty and start at 1 or more"));
    }
    if cfg.m_max > catalog.len() {
        return Err(Error::invalid(format!("m up to {} but only {} features", cfg.m_max, catalog.len())));
    }
    if !(cfg.radius > 0.0) {
        return Err(Error::invalid("neighborhood radius must be positive"));
    }
    let mut jobs = Vec::new();
    for m in cfg.m_min..=cfg.m_max {
        for tau in cfg.tau_min..=cfg.tau_max {
            for combo in combinations(catalog.len(), m) {
                jobs.push((combo, tau));
            }
        }
    }
    let results: Vec<(ConfigScore, Vec<f64>)> =
        jobs.par_iter().map(|(combo, tau)| evaluate(catalog, combo, *tau, cfg)).collect::<Result<_>>()?;
    let evaluated = results.len();
    let (best, forecast) = results
        .into_iter()
        .min_by(|(a, _), (b, _)| {
            b.j.cmp(&a.j).then(a.m.cmp(&b.m)).then(a.tau.cmp(&b.tau)).then_with(|| a.features.cmp(&b.features))
        })
        .expect("at least one configuration");
    if best.j == 0 {
        return Err(Error::NoStableRegion(format!(
            "no configuration reaches lambda_min = {} with at least two neighbors within radius {}",
            cfg.lambda_min, cfg.radius
        )));
    }
    let feature_names = best.features.iter().map(|&i| catalog[i].name.clone()).collect();
    Ok(StepwiseResult { best, feature_names, forecast, evaluated })
}
