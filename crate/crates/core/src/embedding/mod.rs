//! Delay-coordinate reconstruction, delay selection and neighbor search.

mod mutual_info;
mod neighbors;

pub use mutual_info::{default_bins, mutual_information_profile, select_delay, DelaySelection};
pub use neighbors::{Neighbor, NeighborIndex};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Reconstructed state vectors.
///
/// Row `r` corresponds to sample `t = (m - 1) * tau + r` and holds, for each
/// channel in turn, the block `(y(t), y(t - tau), ..., y(t - (m - 1) tau))`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayEmbedding {
    m: usize,
    tau: usize,
    width: usize,
    points: Vec<f64>,
    times: Vec<usize>,
    source_dt: f64,
}

impl DelayEmbedding {
    /// Wraps arbitrary state vectors (one per row, consecutive samples) as an embedding.
    pub fn from_points(width: usize, points: Vec<f64>, source_dt: f64) -> Result<Self> {
        if width == 0 || points.is_empty() || points.len() % width != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not form rows of width {width}",
                points.len()
            )));
        }
        let k = points.len() / width;
        Ok(Self {
            m: width,
            tau: 1,
            width,
            points,
            times: (0..k).collect(),
            source_dt,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn tau(&self) -> usize {
        self.tau
    }

    /// Number of coordinates per state vector (`m * channels`).
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn source_dt(&self) -> f64 {
        self.source_dt
    }

    /// Sample index in the source series of each row.
    pub fn times(&self) -> &[usize] {
        &self.times
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    #[inline]
    pub fn row(&self, r: usize) -> &[f64] {
        &self.points[r * self.width..(r + 1) * self.width]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.points.chunks_exact(self.width)
    }

    /// Largest Euclidean distance from the bounding-box diagonal (an upper bound on the diameter).
    pub fn bounding_diagonal(&self) -> f64 {
        let (lo, hi) = self.bounds();
        lo.iter().zip(&hi).map(|(a, b)| (b - a).powi(2)).sum::<f64>().sqrt()
    }

    pub fn bounds(&self) -> (Vec<f64>, Vec<f64>) {
        let mut lo = vec![f64::INFINITY; self.width];
        let mut hi = vec![f64::NEG_INFINITY; self.width];
        for row in self.rows() {
            for (d, &v) in row.iter().enumerate() {
                lo[d] = lo[d].min(v);
                hi[d] = hi[d].max(v);
            }
        }
        (lo, hi)
    }

    /// Default Theiler window `tau * (m - 1) + 1`.
    pub fn default_theiler(&self) -> usize {
        self.tau * (self.m - 1) + 1
    }

    /// CSV with one state vector per row; columns are named `z1..zm` per channel.
    pub fn to_csv_string(&self) -> String {
        let channels = self.width / self.m;
        let mut header = Vec::with_capacity(self.width);
        for c in 1..=channels {
            for j in 1..=self.m {
                if channels == 1 {
                    header.push(format!("z{j}"));
                } else {
                    header.push(format!("y{c}_z{j}"));
                }
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for row in self.rows() {
            let fields: Vec<String> = row.iter().map(|v| format!("{v}")).collect();
            out.push_str(&fields.join(","));
            out.push('\n');
        }
        out
    }
}

/// Delay-coordinate embedding of every channel of `series`.
pub fn embed(series: &TimeSeries, m: usize, tau: usize) -> Result<DelayEmbedding> {
    if m == 0 {
        return Err(Error::invalid("embedding dimension must be at least 1"));
    }
    if tau == 0 {
        return Err(Error::invalid("delay must be at least 1 sample"));
    }
    let n = series.len();
    let span = (m - 1) * tau;
    if n <= span {
        return Err(Error::TooShort { required: span + 1, available: n });
    }
    let channels = series.channels();
    let width = m * channels;
    let k = n - span;
    let mut points = Vec::with_capacity(k * width);
    let mut times = Vec::with_capacity(k);
    for r in 0..k {
        let t = span + r;
        times.push(t);
        for c in 0..channels {
            for j in 0..m {
                points.push(series.value(t - j * tau, c));
            }
        }
    }
    Ok(DelayEmbedding { m, tau, width, points, times, source_dt: series.dt() })
}

/// Embedding built from `m` separate feature series: coordinate `i` of the row at
/// time `t` is `features[i][t - i * tau]`.
pub fn embed_features(features: &[&[f64]], tau: usize, dt: f64) -> Result<DelayEmbedding> {
    let m = features.len();
    if m == 0 {
        return Err(Error::invalid("at least one feature is required"));
    }
    if tau == 0 {
        return Err(Error::invalid("delay must be at least 1 sample"));
    }
    let n = features[0].len();
    if features.iter().any(|f| f.len() != n) {
        return Err(Error::ShapeMismatch("feature series differ in length".into()));
    }
    let span = (m - 1) * tau;
    if n <= span {
        return Err(Error::TooShort { required: span + 1, available: n });
    }
    let k = n - span;
    let mut points = Vec::with_capacity(k * m);
    let mut times = Vec::with_capacity(k);
    for r in 0..k {
        let t = span + r;
        times.push(t);
        for (i, f) in features.iter().enumerate() {
            points.push(f[t - i * tau]);
        }
    }
    Ok(DelayEmbedding { m, tau, width: m, points, times, source_dt: dt })
}

#[inline]
pub(crate) fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

#[inline]
pub(crate) fn dist(a: &[f64], b: &[f64]) -> f64 {
    sq_dist(a, b).sqrt()
}
