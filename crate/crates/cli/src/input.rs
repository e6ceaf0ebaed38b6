//! Loading series and resolving embedding parameters shared by several commands.

use std::fs;
use std::path::Path;

use phasekit::embedding::{default_bins, mutual_information_profile, select_delay};
use phasekit::series::{parse_csv, CsvOptions, Delimiter, DtSource, TimeSeries};

use crate::args::InputArgs;
use crate::CliError;

pub fn read_text(path: Option<&Path>, flag: &str) -> Result<(String, std::path::PathBuf), CliError> {
    let path = path.ok_or_else(|| CliError::usage(format!("the {flag} flag is required")))?;
    if !path.is_file() {
        return Err(CliError::usage(format!("input file {} does not exist", path.display())));
    }
    let text = fs::read_to_string(path).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    Ok((text, path.to_path_buf()))
}

/// A first line whose first field is not a number is taken as a header.
fn looks_like_header(text: &str) -> bool {
    let Some(line) = text.lines().map(str::trim).find(|l| !l.is_empty()) else {
        return false;
    };
    let first = line.split(',').next().unwrap_or("").split_whitespace().next().unwrap_or("");
    first.parse::<f64>().is_err()
}

/// The whole input table.
pub fn load_table(args: &InputArgs) -> Result<TimeSeries, CliError> {
    let (text, path) = read_text(args.input.as_deref(), "--input")?;
    let options = CsvOptions {
        delimiter: Delimiter::Auto,
        header: args.header || looks_like_header(&text),
        dt: if args.time_column { DtSource::TimeColumn } else { DtSource::Fixed(args.dt) },
    };
    Ok(parse_csv(&text, &path, &options)?)
}

/// The selected channel as a scalar series.
pub fn load_scalar(args: &InputArgs) -> Result<TimeSeries, CliError> {
    let table = load_table(args)?;
    if args.column >= table.channels() {
        return Err(CliError::usage(format!(
            "--column {} out of range; the input has {} channel(s)",
            args.column,
            table.channels()
        )));
    }
    Ok(table.select_channel(args.column)?)
}

pub fn default_tau_max(n: usize) -> usize {
    100.min(n / 4).max(1)
}

/// Explicit delay, or the first mutual-information minimum with default settings.
pub fn resolve_tau(series: &TimeSeries, tau: Option<usize>) -> Result<usize, CliError> {
    match tau {
        Some(t) => Ok(t),
        None => {
            let n = series.len();
            let profile = mutual_information_profile(series, 0, default_tau_max(n), default_bins(n))?;
            Ok(select_delay(&profile)?.tau)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn header_detection() {
        assert!(looks_like_header("y1,y2\n1,2\n"));
        assert!(looks_like_header("\n t x\n0 1\n"));
        assert!(!looks_like_header("1.5,2\n"));
        assert!(!looks_like_header("-3e-2 4\n"));
        assert!(!looks_like_header(""));
    }
}
