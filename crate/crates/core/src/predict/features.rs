//! Preprocessing features computed from a scalar series around an embedding row.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::embedding::{DelayEmbedding, NeighborIndex};
use crate::error::{Error, Result};
use crate::series::TimeSeries;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureMethod {
    /// Raw lagged values `y(t - k_i)`, one per lag.
    M1,
    /// Mean of the listed previous points (point 1 is `y(t)`, point 2 is `y(t-1)`, ...).
    M2,
    /// Mean next value of the `k_i` nearest neighbors, one per count.
    M3,
    /// Linearly weighted mean of the listed previous points, recent points heavier.
    M4,
    /// Past prediction errors of the same model structure at the listed lags.
    M5,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub method: FeatureMethod,
    pub lags: Vec<usize>,
}

impl FeatureSpec {
    pub fn new(method: FeatureMethod, lags: Vec<usize>) -> Self {
        Self { method, lags }
    }

    /// Parses `m1(0,1)` style text.
    pub fn parse(text: &str) -> Result<Self> {
        let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
        let bad = || Error::Config(format!("cannot parse feature `{text}`; expected e.g. m1(0,1)"));
        let (head, rest) = s.split_once('(').ok_or_else(bad)?;
        let inner = rest.strip_suffix(')').ok_or_else(bad)?;
        let method = match head {
            "m1" => FeatureMethod::M1,
            "m2" => FeatureMethod::M2,
            "m3" => FeatureMethod::M3,
            "m4" => FeatureMethod::M4,
            "m5" => FeatureMethod::M5,
            _ => return Err(bad()),
        };
        let lags = inner.split(',').map(|v| v.parse::<usize>().map_err(|_| bad())).collect::<Result<Vec<_>>>()?;
        let spec = Self { method, lags };
        spec.validate()?;
        Ok(spec)
    }

    fn validate(&self) -> Result<()> {
        if self.lags.is_empty() {
            return Err(Error::Config(format!("{self} lists no lags")));
        }
        let one_based = matches!(self.method, FeatureMethod::M2 | FeatureMethod::M3 | FeatureMethod::M4 | FeatureMethod::M5);
        if one_based && self.lags.contains(&0) {
            return Err(Error::Config(format!("{self}: lags start at 1 for this method")));
        }
        Ok(())
    }

    /// Number of values this spec contributes.
    pub fn output_len(&self) -> usize {
        match self.method {
            FeatureMethod::M2 | FeatureMethod::M4 => 1,
            _ => self.lags.len(),
        }
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self.method {
            FeatureMethod::M1 => "m1",
            FeatureMethod::M2 => "m2",
            FeatureMethod::M3 => "m3",
            FeatureMethod::M4 => "m4",
            FeatureMethod::M5 => "m5",
        };
        let lags: Vec<String> = self.lags.iter().map(|l| l.to_string()).collect();
        write!(f, "{name}({})", lags.join(","))
    }
}

/// Stable key of a feature list (FNV-1a over its canonical text).
pub fn structure_key(specs: &[FeatureSpec]) -> u64 {
    let text: Vec<String> = specs.iter().map(|s| s.to_string()).collect();
    text.join(";").bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x0100_0000_01b3))
}

/// Chronological prediction errors per model structure.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ErrorHistory {
    errors: BTreeMap<u64, Vec<f64>>,
}

impl ErrorHistory {
    pub fn push(&mut self, structure: u64, error: f64) {
        self.errors.entry(structure).or_default().push(error);
    }

    /// Error recorded `lag` entries ago (`lag = 1` is the latest), if any.
    pub fn get(&self, structure: u64, lag: usize) -> Option<f64> {
        let list = self.errors.get(&structure)?;
        list.len().checked_sub(lag).map(|i| list[i])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    /// `m5` lags with no recorded error were filled with zeros.
    pub cold_start: bool,
}

/// Feature values for embedding row `t` of `series`, in list order.
pub fn preprocess_features(
    series: &TimeSeries,
    idx: &NeighborIndex<'_>,
    t: usize,
    specs: &[FeatureSpec],
    history: Option<&ErrorHistory>,
) -> Result<FeatureVector> {
    let emb: &DelayEmbedding = idx.embedding();
    if t >= emb.len() {
        return Err(Error::invalid(format!("row {t} outside embedding of {} rows", emb.len())));
    }
    let s = emb.times()[t];
    if s >= series.len() {
        return Err(Error::ShapeMismatch("embedding row refers past the end of the series".into()));
    }
    let y = |i: usize| series.value(i, 0);
    let key = structure_key(specs);
    let mut values = Vec::new();
    let mut cold_start = false;
    for spec in specs {
        spec.validate()?;
        let max_lag = *spec.lags.iter().max().expect("validated non-empty");
        match spec.method {
            FeatureMethod::M1 => {
                if max_lag > s {
                    return Err(Error::InsufficientData(format!("{spec} needs {max_lag} past samples at sample {s}")));
                }
                values.extend(spec.lags.iter().map(|&k| y(s - k)));
            }
            FeatureMethod::M2 | FeatureMethod::M4 => {
                if max_lag > s + 1 {
                    return Err(Error::InsufficientData(format!("{spec} needs {max_lag} points at sample {s}")));
                }
                let weight = |k: usize| match spec.method {
                    FeatureMethod::M2 => 1.0,
                    _ => (max_lag + 1 - k) as f64,
                };
                let (num, den) = spec.lags.iter().fold((0.0, 0.0), |(n, d), &k| {
                    let w = weight(k);
                    (n + w * y(s + 1 - k), d + w)
                });
                values.push(num / den);
            }
            FeatureMethod::M3 => {
                let last = emb.len() - 1;
                let nbs = idx.knn_where(t, max_lag, |u| u < last)?;
                for &k in &spec.lags {
                    let mean = nbs[..k].iter().map(|nb| emb.row(nb.row + 1)[0]).sum::<f64>() / k as f64;
                    values.push(mean);
                }
            }
            FeatureMethod::M5 => {
                let hist = history.ok_or_else(|| Error::Config(format!("{spec} requires a model error history")))?;
                for &k in &spec.lags {
                    match hist.get(key, k) {
                        Some(e) => values.push(e),
                        None => {
                            cold_start = true;
                            values.push(0.0);
                        }
                    }
                }
            }
        }
    }
    Ok(FeatureVector { values, cold_start })
}
