//! Column-restricted least squares.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

/// Least-squares fit restricted to a set of columns.
#[derive(Debug, Clone, PartialEq)]
pub struct RestrictedFit {
    /// One coefficient per selected column, in selection order.
    pub coefficients: Vec<f64>,
    pub residual: DVector<f64>,
    /// The restricted matrix lacked full column rank; the minimum-norm solution was used.
    pub rank_deficient: bool,
}

impl RestrictedFit {
    pub fn residual_norm(&self) -> f64 {
        self.residual.norm()
    }
}

/// Submatrix of `a` with the given rows (all when `None`) and columns.
pub fn select(a: &DMatrix<f64>, rows: Option<&[usize]>, cols: &[usize]) -> DMatrix<f64> {
    match rows {
        Some(rows) => DMatrix::from_fn(rows.len(), cols.len(), |i, j| a[(rows[i], cols[j])]),
        None => DMatrix::from_fn(a.nrows(), cols.len(), |i, j| a[(i, cols[j])]),
    }
}

pub fn select_rows(y: &DVector<f64>, rows: Option<&[usize]>) -> DVector<f64> {
    match rows {
        Some(rows) => DVector::from_fn(rows.len(), |i, _| y[rows[i]]),
        None => y.clone(),
    }
}

const RANK_TOL: f64 = 1e-12;

/// Solves `min ‖A z - y‖` by Householder QR, falling back to the SVD
/// pseudo-inverse when `A` is (numerically) column-rank deficient.
///
/// Columns are scaled to unit norm first, so the rank test does not depend
/// on the units of each column.
pub fn least_squares(a: &DMatrix<f64>, y: &DVector<f64>) -> RestrictedFit {
    let n = a.ncols();
    if n == 0 {
        return RestrictedFit { coefficients: Vec::new(), residual: -y.clone(), rank_deficient: false };
    }
    let norms: Vec<f64> =
        a.column_iter().map(|c| c.norm()).map(|v| if v > 0.0 && v.is_finite() { v } else { 1.0 }).collect();
    let mut scaled = a.clone();
    for (j, s) in norms.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }
    let (mut z, rank_deficient) = solve_equilibrated(&scaled, y);
    for (zj, s) in z.iter_mut().zip(&norms) {
        *zj /= s;
    }
    let residual = a * &z - y;
    RestrictedFit { coefficients: z.iter().copied().collect(), residual, rank_deficient }
}

fn solve_equilibrated(a: &DMatrix<f64>, y: &DVector<f64>) -> (DVector<f64>, bool) {
    let (m, n) = a.shape();
    let mut z = None;
    if m >= n {
        let qr = a.clone().qr();
        let r = qr.r();
        let diag_max = (0..n).map(|i| r[(i, i)].abs()).fold(0.0, f64::max);
        let diag_min = (0..n).map(|i| r[(i, i)].abs()).fold(f64::INFINITY, f64::min);
        if diag_max > 0.0 && diag_min > RANK_TOL * diag_max * m as f64 {
            let qty = qr.q().transpose() * y;
            z = r.solve_upper_triangular(&qty);
        }
    }
    match z {
        Some(z) => (z, false),
        None => (min_norm_solution(a, y), true),
    }
}

fn min_norm_solution(a: &DMatrix<f64>, y: &DVector<f64>) -> DVector<f64> {
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let (m, n) = a.shape();
    let eps = smax * RANK_TOL * m.max(n) as f64;
    svd.solve(y, eps).unwrap_or_else(|_| DVector::zeros(n))
}

/// Ratio of extreme singular values; infinite when rank deficient.
pub fn condition_number(a: &DMatrix<f64>) -> f64 {
    if a.ncols() == 0 || a.nrows() == 0 {
        return 1.0;
    }
    let sv = a.clone().singular_values();
    let smax = sv.iter().copied().fold(0.0, f64::max);
    let smin = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_fit() {
        let a = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 2.0, -1.0]);
        let y = &a * DVector::from_column_slice(&[3.0, -2.0]);
        let fit = least_squares(&a, &y);
        assert!(!fit.rank_deficient);
        assert!((fit.coefficients[0] - 3.0).abs() < 1e-14);
        assert!((fit.coefficients[1] + 2.0).abs() < 1e-14);
        assert!(fit.residual_norm() < 1e-13);
    }

    #[test]
    fn duplicate_columns_use_min_norm() {
        let a = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, -1.0, -1.0]);
        let y = DVector::from_column_slice(&[2.0, 4.0, -2.0]);
        let fit = least_squares(&a, &y);
        assert!(fit.rank_deficient);
        assert!((fit.coefficients[0] - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn badly_scaled_columns_are_not_rank_deficient() {
        let a = DMatrix::from_row_slice(3, 2, &[1e20, 1e-4, 2e20, 0.0, 0.0, 3e-4]);
        let y = &a * DVector::from_column_slice(&[1e-20, 1e4]);
        let fit = least_squares(&a, &y);
        assert!(!fit.rank_deficient);
        assert!((fit.coefficients[0] * 1e20 - 1.0).abs() < 1e-12);
        assert!((fit.coefficients[1] * 1e-4 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn condition_of_identity() {
        assert!((condition_number(&DMatrix::identity(5, 3)) - 1.0).abs() < 1e-14);
    }
}
