use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::TimeSeries;

/// Cube-root rule clamped to `[8, 64]`.
pub fn default_bins(n: usize) -> usize {
    ((n as f64).cbrt().ceil() as usize).clamp(8, 64)
}

/// Histogram mutual information (nats) between `x(t)` and `x(t + tau)` for `tau = 1..=tau_max`.
///
/// Bins are equal-width over the channel's full range. Marginals are taken from the
/// joint histogram of each lag, so the profile is symmetric under time reversal.
pub fn mutual_information_profile(
    series: &TimeSeries,
    channel: usize,
    tau_max: usize,
    bins: usize,
) -> Result<Vec<(usize, f64)>> {
    if channel >= series.channels() {
        return Err(Error::invalid(format!("channel {channel} out of range")));
    }
    if bins < 2 {
        return Err(Error::invalid("at least two bins are required"));
    }
    let n = series.len();
    if tau_max == 0 || 2 * tau_max >= n {
        return Err(Error::invalid(format!(
            "tau_max must satisfy 1 <= tau_max < N/2 (N = {n}), got {tau_max}"
        )));
    }
    let x = series.channel(channel);
    let lo = x.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Err(Error::Degenerate(format!(
            "channel {channel} is constant; histograms collapse to one bin"
        )));
    }
    let scale = bins as f64 / (hi - lo);
    let idx: Vec<usize> = x
        .iter()
        .map(|&v| (((v - lo) * scale) as usize).min(bins - 1))
        .collect();

    Ok((1..=tau_max)
        .into_par_iter()
        .map(|tau| (tau, lagged_mi(&idx, tau, bins)))
        .collect())
}

fn lagged_mi(idx: &[usize], tau: usize, bins: usize) -> f64 {
    let pairs = idx.len() - tau;
    let mut joint = vec![0u64; bins * bins];
    for t in 0..pairs {
        joint[idx[t] * bins + idx[t + tau]] += 1;
    }
    let mut row = vec![0u64; bins];
    let mut col = vec![0u64; bins];
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            row[i] += c;
            col[j] += c;
        }
    }
    let total = pairs as f64;
    let mut mi = 0.0;
    for i in 0..bins {
        for j in 0..bins {
            let c = joint[i * bins + j];
            if c == 0 {
                continue;
            }
            // p_ij ln(p_ij / (p_i p_j)) with counts: c/T * ln(c T / (r_i c_j))
            let pij = c as f64 / total;
            mi += pij * ((c as f64 * total) / (row[i] as f64 * col[j] as f64)).ln();
        }
    }
    mi.max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DelaySelection {
    pub tau: usize,
    /// False when the profile has no interior local minimum and `tau` is the global argmin.
    pub interior_minimum: bool,
}

/// First local minimum of a mutual-information profile.
///
/// A run of equal values counts as a minimum when it is strictly lower than both
/// of its neighbors; the first lag of the run is returned.
pub fn select_delay(profile: &[(usize, f64)]) -> Result<DelaySelection> {
    if profile.is_empty() {
        return Err(Error::EmptyInput("mutual-information profile is empty".into()));
    }
    let v: Vec<f64> = profile.iter().map(|p| p.1).collect();
    let mut i = 1;
    while i < v.len() {
        if v[i] < v[i - 1] {
            let mut j = i;
            while j + 1 < v.len() && v[j + 1] == v[i] {
                j += 1;
            }
            if j + 1 < v.len() && v[j + 1] > v[i] {
                return Ok(DelaySelection { tau: profile[i].0, interior_minimum: true });
            }
            i = j + 1;
        } else {
            i += 1;
        }
    }
    let mut best = 0;
    for (k, &val) in v.iter().enumerate() {
        if val < v[best] {
            best = k;
        }
    }
    Ok(DelaySelection { tau: profile[best].0, interior_minimum: false })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn prof(v: &[f64]) -> Vec<(usize, f64)> {
        v.iter().enumerate().map(|(i, &x)| (i + 1, x)).collect()
    }

    #[test]
    fn select_delay_examples() {
        let s = select_delay(&prof(&[3.0, 2.0, 1.0, 2.0, 3.0])).unwrap();
        assert_eq!(s, DelaySelection { tau: 3, interior_minimum: true });
        let s = select_delay(&prof(&[5.0, 4.0, 3.0, 2.0, 1.0])).unwrap();
        assert_eq!(s, DelaySelection { tau: 5, interior_minimum: false });
        let s = select_delay(&prof(&[3.0, 1.0, 1.0, 2.0])).unwrap();
        assert_eq!(s, DelaySelection { tau: 2, interior_minimum: true });
    }

    #[test]
    fn select_delay_plateau_without_rise_is_not_interior() {
        let s = select_delay(&prof(&[3.0, 1.0, 1.0])).unwrap();
        assert_eq!(s, DelaySelection { tau: 2, interior_minimum: false });
        assert!(select_delay(&[]).is_err());
    }

    #[test]
    fn default_bins_clamped() {
        assert_eq!(default_bins(10), 8);
        assert_eq!(default_bins(100_000), 47);
        assert_eq!(default_bins(10_000_000), 64);
    }

    #[test]
    fn constant_channel_is_degenerate() {
        let s = TimeSeries::from_scalar("c", 1.0, vec![2.0; 50]).unwrap();
        assert!(matches!(
            mutual_information_profile(&s, 0, 5, 8),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn tau_max_bounded_by_half_length() {
        let s = TimeSeries::from_scalar("c", 1.0, (0..20).map(|i| i as f64).collect()).unwrap();
        assert!(mutual_information_profile(&s, 0, 10, 8).is_err());
        assert!(mutual_information_profile(&s, 0, 9, 8).is_ok());
    }
}
