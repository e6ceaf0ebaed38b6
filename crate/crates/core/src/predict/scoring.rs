//! Model error on neighbor trajectories, selection, local stability and the
//! local averaging forecast.

use serde::{Deserialize, Serialize};

use crate::embedding::{dist, DelayEmbedding, NeighborIndex};
use crate::error::{Error, Result};

use super::features::{preprocess_features, ErrorHistory, FeatureSpec};
use super::regressor::{train_regressor, NetConfig, Regressor, RegressorKind};
use crate::series::TimeSeries;

/// Rows with a successor inside the embedding.
fn has_successor(emb: &DelayEmbedding) -> impl Fn(usize) -> bool {
    let last = emb.len().saturating_sub(1);
    move |u| u < last
}

/// Feature pipeline followed by a regressor; forecasts the next scalar value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PredictorModel {
    pub features: Vec<FeatureSpec>,
    pub regressor: Regressor,
}

impl PredictorModel {
    /// Trains on embedding `rows`, each targeting the series value one sample later.
    pub fn train(
        series: &TimeSeries,
        idx: &NeighborIndex<'_>,
        rows: &[usize],
        features: Vec<FeatureSpec>,
        kind: RegressorKind,
        config: &NetConfig,
    ) -> Result<Self> {
        let emb = idx.embedding();
        let history = ErrorHistory::default();
        let mut xs = Vec::with_capacity(rows.len());
        let mut ys = Vec::with_capacity(rows.len());
        for &r in rows {
            let s = emb.times().get(r).copied().ok_or_else(|| Error::invalid(format!("row {r} out of range")))?;
            if s + 1 >= series.len() {
                return Err(Error::InsufficientData(format!("row {r} has no successor sample")));
            }
            xs.push(preprocess_features(series, idx, r, &features, Some(&history))?.values);
            ys.push(series.value(s + 1, 0));
        }
        let regressor = train_regressor(&xs, &ys, kind, config)?;
        Ok(Self { features, regressor })
    }

    pub fn predict(&self, series: &TimeSeries, idx: &NeighborIndex<'_>, row: usize, history: Option<&ErrorHistory>) -> Result<f64> {
        let fv = preprocess_features(series, idx, row, &self.features, history)?;
        let want: usize = self.features.iter().map(FeatureSpec::output_len).sum();
        if fv.values.len() != want {
            return Err(Error::ShapeMismatch(format!("{} features, model expects {want}", fv.values.len())));
        }
        Ok(self.regressor.predict(&fv.values))
    }

    /// Neighbor error of this model around row `t`.
    pub fn e_psi(&self, series: &TimeSeries, idx: &NeighborIndex<'_>, t: usize, k: usize, history: Option<&ErrorHistory>) -> Result<f64> {
        e_psi(idx, t, k, |u| Ok(vec![self.predict(series, idx, u, history)?]))
    }
}

/// Summed squared error of `predict` on the successors of the `k` nearest
/// neighbors of row `t`.
///
/// `predict(u)` forecasts the state after row `u`. A one-element forecast is
/// compared with the first coordinate of the successor row, a full-width
/// forecast with the whole row.
pub fn e_psi(idx: &NeighborIndex<'_>, t: usize, k: usize, predict: impl Fn(usize) -> Result<Vec<f64>>) -> Result<f64> {
    let emb = idx.embedding();
    let nbs = idx.knn_where(t, k, has_successor(emb))?;
    let mut total = 0.0;
    for nb in nbs {
        let next = emb.row(nb.row + 1);
        let yhat = predict(nb.row)?;
        let target = match yhat.len() {
            1 => &next[..1],
            w if w == next.len() => next,
            w => return Err(Error::ShapeMismatch(format!("forecast of length {w} for rows of width {}", next.len()))),
        };
        total += target.iter().zip(&yhat).map(|(a, b)| (a - b).powi(2)).sum::<f64>();
    }
    Ok(total)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Selection {
    /// Zero-based index of the candidate with the smallest error.
    pub index: usize,
    pub e_psi: f64,
    /// Winning forecast, or 0 when gated.
    pub forecast: f64,
    /// The winner's error reached the gate, so no forecast is issued.
    pub gated: bool,
}

/// Picks the candidate `(forecast, e_psi)` with the smallest error; ties go to
/// the lowest index. With a gate `d`, a winner with `e_psi >= d` yields no forecast.
pub fn select_prediction(candidates: &[(f64, f64)], gate: Option<f64>) -> Result<Selection> {
    let mut best: Option<(usize, f64, f64)> = None;
    for (i, &(y, e)) in candidates.iter().enumerate() {
        if e.is_nan() {
            return Err(Error::invalid(format!("candidate {i} has a NaN error")));
        }
        if best.is_none_or(|(_, _, be)| e < be) {
            best = Some((i, y, e));
        }
    }
    let (index, y, e) = best.ok_or_else(|| Error::EmptyInput("no candidate predictions".into()))?;
    let gated = gate.is_some_and(|d| e >= d);
    Ok(Selection { index, e_psi: e, forecast: if gated { 0.0 } else { y }, gated })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalStability {
    /// Reciprocal of the largest distance between successors; infinite when they coincide.
    #[serde(with = "infinite_as_null")]
    pub lambda_d: f64,
    pub j1: f64,
    pub j2: usize,
}

mod infinite_as_null {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            v.serialize(s)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }
}

/// Stability of the region `D` given as embedding rows.
pub fn local_stability(emb: &DelayEmbedding, region: &[usize]) -> Result<LocalStability> {
    if region.len() < 2 {
        return Err(Error::InsufficientData(format!("region has {} points, need at least 2", region.len())));
    }
    if let Some(&u) = region.iter().find(|&&u| u + 1 >= emb.len()) {
        return Err(Error::InsufficientData(format!("row {u} has no successor")));
    }
    let mut max = 0.0f64;
    for (i, &a) in region.iter().enumerate() {
        for &b in &region[i + 1..] {
            max = max.max(dist(emb.row(a + 1), emb.row(b + 1)));
        }
    }
    let lambda_d = if max > 0.0 { 1.0 / max } else { f64::INFINITY };
    Ok(LocalStability { lambda_d, j1: lambda_d, j2: region.len() })
}

/// `J2` when the region is at least as stable as `lambda_min`, otherwise 0.
pub fn composite_j(j1: f64, j2: usize, lambda_min: f64) -> usize {
    if j1 >= lambda_min {
        j2
    } else {
        0
    }
}

/// Mean successor of the `n_neighbors` nearest neighbors of row `t`.
pub fn local_predict(idx: &NeighborIndex<'_>, t: usize, n_neighbors: usize) -> Result<Vec<f64>> {
    local_predict_where(idx, t, n_neighbors, |_| true)
}

/// [`local_predict`] restricted to neighbor rows passing `filter`, e.g. a
/// training segment.
pub fn local_predict_where(
    idx: &NeighborIndex<'_>,
    t: usize,
    n_neighbors: usize,
    filter: impl Fn(usize) -> bool,
) -> Result<Vec<f64>> {
    let emb = idx.embedding();
    let ok = has_successor(emb);
    let nbs = idx.knn_where(t, n_neighbors, |u| ok(u) && filter(u))?;
    Ok(mean_successor(emb, nbs.iter().map(|nb| nb.row)))
}

/// Running mean, so identical successors come back bit-for-bit.
pub(crate) fn mean_successor(emb: &DelayEmbedding, rows: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut acc = vec![0.0; emb.width()];
    for (i, u) in rows.enumerate() {
        for (a, v) in acc.iter_mut().zip(emb.row(u + 1)) {
            *a += (v - *a) / (i + 1) as f64;
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn emb1(pts: Vec<f64>) -> DelayEmbedding {
        DelayEmbedding::from_points(1, pts, 1.0).unwrap()
    }

    #[test]
    fn selection_examples() {
        let c = [(10.0, 0.5), (20.0, 0.2), (30.0, 0.9)];
        let s = select_prediction(&c, None).unwrap();
        assert_eq!((s.index, s.forecast, s.gated), (1, 20.0, false));
        let s = select_prediction(&[(1.0, 0.3)], Some(0.2)).unwrap();
        assert_eq!((s.forecast, s.gated), (0.0, true));
        let s = select_prediction(&[(1.0, 0.2), (2.0, 0.2)], None).unwrap();
        assert_eq!(s.index, 0);
        assert!(select_prediction(&[], None).is_err());
        // Gate boundary is inclusive.
        assert!(select_prediction(&[(1.0, 0.2)], Some(0.2)).unwrap().gated);
    }

    #[test]
    fn composite_examples() {
        assert_eq!(composite_j(3.0, 7, 2.0), 7);
        assert_eq!(composite_j(1.0, 7, 2.0), 0);
        assert_eq!(composite_j(2.0, 7, 2.0), 7);
    }

    #[test]
    fn stability_examples() {
        let e = DelayEmbedding::from_points(2, vec![0.0, 0.0, 0.3, 0.4, 5.0, 5.0, 0.0, 0.0, 9.0, 9.0], 1.0).unwrap();
        // Successors of rows 0 and 2 are (0.3, 0.4) and (0, 0): distance 0.5.
        let s = local_stability(&e, &[0, 2]).unwrap();
        assert!((s.lambda_d - 2.0).abs() < 1e-12);
        assert_eq!(s.j1, s.lambda_d);
        let same = emb1(vec![0.0, 1.0, 5.0, 1.0, 3.0, 1.0]);
        assert_eq!(local_stability(&same, &[0, 2, 4]).unwrap().lambda_d, f64::INFINITY);
        let line = emb1((0..10).map(f64::from).collect());
        assert_eq!(local_stability(&line, &[0, 1, 2, 3, 4]).unwrap().j2, 5);
        assert!(local_stability(&line, &[3]).is_err());
        assert!(local_stability(&line, &[3, 9]).is_err());
    }

    #[test]
    fn infinite_lambda_serializes_as_null() {
        let s = LocalStability { lambda_d: f64::INFINITY, j1: 1.0, j2: 3 };
        let text = serde_json::to_string(&s).unwrap();
        assert!(text.contains("\"lambda_d\":null"));
        let back: LocalStability = serde_json::from_str(&text).unwrap();
        assert_eq!(back.lambda_d, f64::INFINITY);
    }

    #[test]
    fn local_predict_examples() {
        let e = DelayEmbedding::from_points(2, vec![0.0, 0.0, 1.0, 2.0, 9.0, 9.0, 0.1, 0.0, 3.0, 4.0, 50.0, 50.0], 1.0).unwrap();
        let idx = NeighborIndex::with_theiler(&e, 0);
        // Nearest to (0, 0) is row 3, whose successor is (3, 4).
        assert_eq!(local_predict(&idx, 0, 1).unwrap(), vec![3.0, 4.0]);
        // Nearest to (3, 4) with successors: rows 1 and 3, successors (9, 9) and (3, 4).
        assert_eq!(local_predict(&idx, 4, 2).unwrap(), vec![6.0, 6.5]);
    }

    #[test]
    fn mean_of_pairs() {
        let e = DelayEmbedding::from_points(2, vec![0.0, 0.0, 1.0, 2.0, 0.0, 0.1, 3.0, 4.0], 1.0).unwrap();
        assert_eq!(mean_successor(&e, [0usize, 2].into_iter()), vec![2.0, 3.0]);
    }

    #[test]
    fn e_psi_examples() {
        let e = emb1(vec![0.0, 1.0, 0.1, 2.0, 0.2, 3.0, 7.0]);
        let idx = NeighborIndex::with_theiler(&e, 0);
        // Neighbors of row 0 with successors: rows 2 and 4 (next 2.0 and 3.0).
        let exact = e_psi(&idx, 0, 2, |u| Ok(vec![e.row(u + 1)[0]])).unwrap();
        assert_eq!(exact, 0.0);
        let off = e_psi(&idx, 0, 2, |u| Ok(vec![e.row(u + 1)[0] + if u == 2 { 0.3 } else { -0.4 }])).unwrap();
        assert!((off - 0.25).abs() < 1e-12);
        assert!(e_psi(&idx, 0, 10, |_| Ok(vec![0.0])).is_err());
    }

    #[test]
    fn model_round_trip() {
        let y: Vec<f64> = (0..200).map(|i| (i as f64 * 0.3).sin()).collect();
        let s = TimeSeries::from_scalar("y", 1.0, y).unwrap();
        let e = crate::embedding::embed(&s, 2, 1).unwrap();
        let idx = NeighborIndex::with_theiler(&e, 2);
        let rows: Vec<usize> = (5..150).collect();
        let specs = vec![FeatureSpec::parse("m1(0,1)").unwrap()];
        let m = PredictorModel::train(&s, &idx, &rows, specs, RegressorKind::Linear, &NetConfig::default()).unwrap();
        // A sampled sinusoid obeys an exact two-term linear recurrence.
        let err = m.e_psi(&s, &idx, 160, 3, None).unwrap();
        assert!(err < 1e-20, "{err}");
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(serde_json::from_str::<PredictorModel>(&json).unwrap(), m);
    }
}
