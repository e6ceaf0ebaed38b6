//! Uniformly sampled time series, CSV ingestion and elementary preprocessing.
//!
//! Samples are stored row-major: sample `i` occupies `data[i * channels..(i + 1) * channels]`.
//! Every estimator downstream assumes gap-free uniform sampling, so missing or
//! non-finite values are rejected at load time rather than imputed.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for the spacing of an explicit time column.
pub const TIME_UNIFORMITY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    name: String,
    dt: f64,
    channels: usize,
    data: Vec<f64>,
}

impl TimeSeries {
    /// Builds a series from row-major samples.
    pub fn new(name: impl Into<String>, dt: f64, channels: usize, data: Vec<f64>) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(Error::invalid(format!("sampling step must be positive, got {dt}")));
        }
        if channels == 0 {
            return Err(Error::invalid("a series needs at least one channel"));
        }
        if data.len() % channels != 0 {
            return Err(Error::ShapeMismatch(format!(
                "{} values do not split into {} channels",
                data.len(),
                channels
            )));
        }
        let n = data.len() / channels;
        if n < 2 {
            return Err(Error::TooShort { required: 2, available: n });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "non-finite value at sample {}, channel {}",
                pos / channels,
                pos % channels
            )));
        }
        Ok(Self { name: name.into(), dt, channels, data })
    }

    pub fn from_scalar(name: impl Into<String>, dt: f64, values: Vec<f64>) -> Result<Self> {
        Self::new(name, dt, 1, values)
    }

    /// Builds a multi-channel series from per-channel columns of equal length.
    pub fn from_columns(name: impl Into<String>, dt: f64, columns: &[Vec<f64>]) -> Result<Self> {
        let channels = columns.len();
        if channels == 0 {
            return Err(Error::invalid("a series needs at least one channel"));
        }
        let n = columns[0].len();
        if columns.iter().any(|c| c.len() != n) {
            return Err(Error::ShapeMismatch("columns differ in length".into()));
        }
        let mut data = Vec::with_capacity(n * channels);
        for i in 0..n {
            data.extend(columns.iter().map(|c| c[i]));
        }
        Self::new(name, dt, channels, data)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.channels
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.data[i * self.channels..(i + 1) * self.channels]
    }

    #[inline]
    pub fn value(&self, i: usize, channel: usize) -> f64 {
        self.data[i * self.channels + channel]
    }

    pub fn channel(&self, channel: usize) -> Vec<f64> {
        self.data.iter().skip(channel).step_by(self.channels).copied().collect()
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    /// Keeps samples `start..end`.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if start >= end || end > self.len() {
            return Err(Error::invalid(format!(
                "slice {start}..{end} out of range for length {}",
                self.len()
            )));
        }
        Self::new(
            self.name.clone(),
            self.dt,
            self.channels,
            self.data[start * self.channels..end * self.channels].to_vec(),
        )
    }

    /// Keeps a single channel.
    pub fn select_channel(&self, channel: usize) -> Result<Self> {
        if channel >= self.channels {
            return Err(Error::invalid(format!(
                "channel {channel} out of range ({} channels)",
                self.channels
            )));
        }
        Self::new(self.name.clone(), self.dt, 1, self.channel(channel))
    }

    fn map_channels(&self, mut f: impl FnMut(usize, &mut Vec<f64>) -> Result<()>) -> Result<Self> {
        let mut out = self.data.clone();
        for c in 0..self.channels {
            let mut col = self.channel(c);
            f(c, &mut col)?;
            for (i, v) in col.into_iter().enumerate() {
                out[i * self.channels + c] = v;
            }
        }
        Self::new(self.name.clone(), self.dt, self.channels, out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Delimiter {
    /// Comma if the first data line contains one, whitespace otherwise.
    #[default]
    Auto,
    Comma,
    Whitespace,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DtSource {
    /// Sampling step supplied by the caller; every column is data.
    Fixed(f64),
    /// The first column holds sample times and must be uniformly spaced.
    TimeColumn,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CsvOptions {
    pub delimiter: Delimiter,
    pub header: bool,
    pub dt: DtSource,
}

impl Default for CsvOptions {
    fn default() -> Self {
        Self { delimiter: Delimiter::Auto, header: false, dt: DtSource::Fixed(1.0) }
    }
}

fn split_fields<'a>(line: &'a str, delimiter: Delimiter) -> Vec<&'a str> {
    match delimiter {
        Delimiter::Comma => line.split(',').map(str::trim).collect(),
        Delimiter::Whitespace => line.split_whitespace().collect(),
        Delimiter::Auto => {
            if line.contains(',') {
                line.split(',').map(str::trim).collect()
            } else {
                line.split_whitespace().collect()
            }
        }
    }
}

/// Parses CSV text. `origin` is only used in error messages.
pub fn parse_csv(text: &str, origin: &Path, options: &CsvOptions) -> Result<TimeSeries> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty());
    if options.header {
        lines.next();
    }
    let delimiter = options.delimiter;
    let mut width = None;
    let mut rows: Vec<f64> = Vec::new();
    for (lineno, line) in lines {
        let fields = split_fields(line, delimiter);
        let expected = *width.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(Error::Parse {
                path: origin.to_path_buf(),
                row: lineno,
                message: format!("expected {expected} fields, found {}", fields.len()),
            });
        }
        for field in fields {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                path: origin.to_path_buf(),
                row: lineno,
                message: format!("cannot parse `{field}` as a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    row: lineno,
                    message: format!("missing or non-finite value `{field}`"),
                });
            }
            rows.push(v);
        }
    }
    let Some(width) = width else {
        return Err(Error::EmptyInput(format!("{} contains no data rows", origin.display())));
    };
    let name = origin
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    match options.dt {
        DtSource::Fixed(dt) => TimeSeries::new(name, dt, width, rows),
        DtSource::TimeColumn => {
            if width < 2 {
                return Err(Error::Format("time column requires at least one data column".into()));
            }
            let n = rows.len() / width;
            if n < 2 {
                return Err(Error::TooShort { required: 2, available: n });
            }
            let times: Vec<f64> = rows.iter().step_by(width).copied().collect();
            let dt = (times[n - 1] - times[0]) / (n - 1) as f64;
            if !(dt > 0.0) {
                return Err(Error::Format("time column is not increasing".into()));
            }
            for (i, w) in times.windows(2).enumerate() {
                let step = w[1] - w[0];
                if ((step - dt) / dt).abs() > TIME_UNIFORMITY_TOL {
                    return Err(Error::Format(format!(
                        "non-uniform time column: step {step} between rows {} and {} differs from {dt}",
                        i + 1,
                        i + 2
                    )));
                }
            }
            let data: Vec<f64> = rows
                .chunks(width)
                .flat_map(|r| r[1..].iter().copied())
                .collect();
            TimeSeries::new(name, dt, width - 1, data)
        }
    }
}

pub fn load_csv(path: impl AsRef<Path>, options: &CsvOptions) -> Result<TimeSeries> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_csv(&text, path, options)
}

/// Renders a series as comma-separated text with a single header line.
/// Values use the shortest representation that parses back to the same `f64`.
pub fn to_csv_string(series: &TimeSeries, with_time: bool) -> String {
    let mut out = String::new();
    let mut header: Vec<String> = Vec::new();
    if with_time {
        header.push("t".into());
    }
    header.extend((1..=series.channels()).map(|c| format!("y{c}")));
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..series.len() {
        let mut fields: Vec<String> = Vec::with_capacity(series.channels() + 1);
        if with_time {
            fields.push(format!("{}", i as f64 * series.dt()));
        }
        fields.extend(series.sample(i).iter().map(|v| format!("{v}")));
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn write_csv(series: &TimeSeries, path: impl AsRef<Path>, with_time: bool) -> Result<()> {
    let path = path.as_ref();
    let io_err = |source| Error::Io { path: path.to_path_buf(), source };
    let mut file = fs::File::create(path).map_err(io_err)?;
    file.write_all(to_csv_string(series, with_time).as_bytes()).map_err(io_err)
}

/// Subtracts the per-channel least-squares polynomial of degree 0 or 1.
pub fn detrend(series: &TimeSeries, order: usize) -> Result<TimeSeries> {
    if order > 1 {
        return Err(Error::invalid(format!("detrend order must be 0 or 1, got {order}")));
    }
    let n = series.len();
    if n <= order + 1 {
        return Err(Error::TooShort { required: order + 2, available: n });
    }
    let tbar = (n - 1) as f64 / 2.0;
    let stt: f64 = (0..n).map(|i| (i as f64 - tbar).powi(2)).sum();
    series.map_channels(|_, col| {
        let mean = col.iter().sum::<f64>() / n as f64;
        let slope = if order == 1 {
            col.iter()
                .enumerate()
                .map(|(i, v)| (i as f64 - tbar) * (v - mean))
                .sum::<f64>()
                / stt
        } else {
            0.0
        };
        for (i, v) in col.iter_mut().enumerate() {
            *v -= mean + slope * (i as f64 - tbar);
        }
        Ok(())
    })
}

/// Rescales every channel to zero mean and unit population variance.
pub fn standardize(series: &TimeSeries) -> Result<TimeSeries> {
    let n = series.len() as f64;
    series.map_channels(|c, col| {
        let mean = col.iter().sum::<f64>() / n;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        let sd = var.sqrt();
        if !(sd > 0.0) || sd <= f64::EPSILON * mean.abs() {
            return Err(Error::ZeroVariance { channel: c });
        }
        for v in col.iter_mut() {
            *v = (*v - mean) / sd;
        }
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str, opts: CsvOptions) -> Result<TimeSeries> {
        parse_csv(text, Path::new("mem.csv"), &opts)
    }

    #[test]
    fn three_rows_one_column() {
        let s = parse("1\n2\n3\n", CsvOptions::default()).unwrap();
        assert_eq!(s.len(), 3);
        assert_eq!(s.channels(), 1);
        assert_eq!(s.channel(0), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn time_column_sets_dt() {
        let opts = CsvOptions { dt: DtSource::TimeColumn, ..Default::default() };
        let s = parse("0,5\n0.1,6\n0.2,7\n", opts).unwrap();
        assert!((s.dt() - 0.1).abs() < 1e-15);
        assert_eq!(s.channels(), 1);
        assert_eq!(s.channel(0), vec![5.0, 6.0, 7.0]);
    }

    #[test]
    fn non_uniform_time_rejected() {
        let opts = CsvOptions { dt: DtSource::TimeColumn, ..Default::default() };
        let err = parse("0,1\n0.1,2\n0.25,3\n", opts).unwrap_err();
        assert!(matches!(err, Error::Format(_)), "{err}");
    }

    #[test]
    fn ragged_rows_report_row_number() {
        let err = parse("1,2\n3,4\n5\n", CsvOptions::default()).unwrap_err();
        match err {
            Error::Parse { row, .. } => assert_eq!(row, 3),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn empty_file_rejected() {
        let err = parse("\n\n", CsvOptions::default()).unwrap_err();
        assert!(matches!(err, Error::EmptyInput(_)));
        let opts = CsvOptions { header: true, ..Default::default() };
        assert!(matches!(parse("a,b\n", opts).unwrap_err(), Error::EmptyInput(_)));
    }

    #[test]
    fn header_whitespace_and_scientific() {
        let opts = CsvOptions { header: true, ..Default::default() };
        let s = parse("x y\n1e-3  2.5E2\n-4 5\n", opts).unwrap();
        assert_eq!(s.channels(), 2);
        assert_eq!(s.sample(0), &[1e-3, 250.0]);
    }

    #[test]
    fn missing_values_rejected() {
        assert!(parse("1,2\n3,\n", CsvOptions::default()).is_err());
        assert!(parse("1,2\n3,NaN\n", CsvOptions::default()).is_err());
    }

    #[test]
    fn detrend_examples() {
        let s = TimeSeries::from_scalar("a", 1.0, vec![1.0, 2.0, 3.0]).unwrap();
        for v in detrend(&s, 1).unwrap().channel(0) {
            assert!(v.abs() < 1e-15);
        }
        let s = TimeSeries::from_scalar("a", 1.0, vec![5.0, 5.0, 5.0]).unwrap();
        assert_eq!(detrend(&s, 0).unwrap().channel(0), vec![0.0; 3]);

        // Best line through (0,1),(1,2),(2,4): slope 1.5, intercept 5/6.
        let s = TimeSeries::from_scalar("a", 1.0, vec![1.0, 2.0, 4.0]).unwrap();
        let r = detrend(&s, 1).unwrap().channel(0);
        let expected = [1.0 - 5.0 / 6.0, 2.0 - (5.0 / 6.0 + 1.5), 4.0 - (5.0 / 6.0 + 3.0)];
        for (a, b) in r.iter().zip(expected) {
            assert!((a - b).abs() < 1e-12);
        }
        assert!(r.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn detrend_needs_enough_points() {
        let s = TimeSeries::from_scalar("a", 1.0, vec![1.0, 2.0]).unwrap();
        assert!(matches!(detrend(&s, 1), Err(Error::TooShort { .. })));
    }

    #[test]
    fn standardize_examples() {
        let s = TimeSeries::from_scalar("a", 1.0, vec![0.0, 2.0]).unwrap();
        assert_eq!(standardize(&s).unwrap().channel(0), vec![-1.0, 1.0]);
        let s = TimeSeries::from_scalar("a", 1.0, vec![3.0, 3.0, 3.0]).unwrap();
        assert!(matches!(standardize(&s), Err(Error::ZeroVariance { channel: 0 })));
    }

    #[test]
    fn zero_variance_names_the_channel() {
        let s = TimeSeries::from_columns("a", 1.0, &[vec![1.0, 2.0, 3.0], vec![4.0, 4.0, 4.0]])
            .unwrap();
        assert!(matches!(standardize(&s), Err(Error::ZeroVariance { channel: 1 })));
    }
}
