//! Small dense least-squares helpers on top of nalgebra.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Solves `min ||A X - B||` for full-column-rank `A`. Columns are scaled to unit
/// norm before the SVD so that badly scaled regressors (e.g. `t^2`) do not
/// trip the rank test.
pub(crate) fn lstsq(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (rows, cols) = a.shape();
    if rows < cols {
        return Err(Error::InsufficientData(format!("{rows} equations for {cols} unknowns")));
    }
    let scales: Vec<f64> = (0..cols).map(|j| a.column(j).norm()).collect();
    if let Some(j) = scales.iter().position(|s| !(*s > 0.0) || !s.is_finite()) {
        return Err(Error::Singular(format!("regressor column {j} is zero or non-finite")));
    }
    let mut scaled = a.clone();
    for (j, s) in scales.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let svd = scaled.svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * f64::EPSILON * rows.max(cols) as f64;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < cols {
        return Err(Error::Singular(format!("regressor matrix has rank {rank} < {cols} columns")));
    }
    let mut x = svd.solve(b, tol).map_err(|e| Error::Singular(e.to_string()))?;
    for (j, s) in scales.iter().enumerate() {
        x.row_mut(j).scale_mut(1.0 / s);
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_solution() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 1.0, 1.0, 1.0, 2.0]);
        let b = DMatrix::from_row_slice(3, 1, &[1.0, 3.0, 5.0]);
        let x = lstsq(&a, &b).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn rank_deficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 2.0, 4.0, 3.0, 6.0]);
        let b = DMatrix::zeros(3, 1);
        assert!(matches!(lstsq(&a, &b), Err(Error::Singular(_))));
    }

    #[test]
    fn badly_scaled_columns() {
        let t: Vec<f64> = (0..50).map(|i| i as f64 * 100.0).collect();
        let a = DMatrix::from_fn(50, 2, |i, j| if j == 0 { 1.0 } else { t[i] * t[i] });
        let b = DMatrix::from_fn(50, 1, |i, _| 0.5 + 1e-7 * t[i] * t[i]);
        let x = lstsq(&a, &b).unwrap();
        assert!((x[0] - 0.5).abs() < 1e-9 && (x[1] - 1e-7).abs() < 1e-18);
    }
}
