//! Discrete weak form `W a = b` built by quadrature over each test-function support.
//!
//! Every entry is a sum `Σ f · ∂_t^γ ∂^α φ_h · Δx Δt` over the grid points of
//! the support of `φ_h`. The trapezoidal rule on that support reduces to this
//! uniform sum because every admissible derivative of `φ_h` is zero on the
//! support boundary. Sums are evaluated separably, contracting x, then y, then t.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::grid::Dataset;
use crate::library::{Coefficients, FeatureLibrary, FeatureSpec};
use crate::test_fn::{TestFunction, TestFunctionGrid, TestFunctionParams};

/// The `H × L` weak feature matrix and right-hand side.
#[derive(Debug, Clone, PartialEq)]
pub struct WeakSystem {
    pub w: DMatrix<f64>,
    pub b: DVector<f64>,
    pub library: FeatureLibrary,
    pub tf_params: TestFunctionParams,
}

impl WeakSystem {
    pub fn rows(&self) -> usize {
        self.w.nrows()
    }

    pub fn cols(&self) -> usize {
        self.w.ncols()
    }

    /// `W a - b`.
    pub fn residual(&self, a: &Coefficients) -> Result<DVector<f64>> {
        if a.len() != self.cols() {
            return Err(Error::DimensionMismatch { expected: self.cols(), actual: a.len() });
        }
        Ok(&self.w * DVector::from_column_slice(a.values()) - &self.b)
    }
}

/// `u^power` pointwise, by repeated multiplication.
pub fn power_field(values: &[f64], power: usize) -> Vec<f64> {
    values
        .iter()
        .map(|&u| {
            let mut acc = 1.0;
            for _ in 0..power {
                acc *= u;
            }
            acc
        })
        .collect()
}

// out[o][c][i] = Σ_k kernel[k] · data[o][center_c - m + k][i]
fn contract_axis(data: &[f64], shape: &mut [usize], axis: usize, centers: &[usize], kernel: &[f64]) -> Vec<f64> {
    let outer: usize = shape[..axis].iter().product();
    let len = shape[axis];
    let inner: usize = shape[axis + 1..].iter().product();
    let m = kernel.len() / 2;
    let mut out = alloc::vec![0.0; outer * centers.len() * inner];
    for o in 0..outer {
        for (c, &center) in centers.iter().enumerate() {
            let dst = &mut out[(o * centers.len() + c) * inner..][..inner];
            for (k, &wk) in kernel.iter().enumerate() {
                if wk == 0.0 {
                    continue;
                }
                let src = &data[(o * len + center - m + k) * inner..][..inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += wk * s;
                }
            }
        }
    }
    shape[axis] = centers.len();
    out
}

/// `Q_h(field · ∂_t^γ ∂^α φ_h)` for every test function `h`.
pub fn weak_integrals(
    field: &[f64],
    dataset: &Dataset,
    tfs: &TestFunctionGrid,
    alpha: [usize; 2],
    gamma: usize,
) -> Result<Vec<f64>> {
    let grid = dataset.grid();
    if grid.spatial_dims() != tfs.spatial_dims() {
        return Err(Error::DimensionMismatch { expected: tfs.spatial_dims(), actual: grid.spatial_dims() });
    }
    if field.len() != grid.num_points() {
        return Err(Error::ShapeMismatch { expected: grid.num_points(), actual: field.len() });
    }
    tfs.check_orders(alpha, gamma)?;
    let mut shape = grid.shape();
    let dims = grid.spatial_dims();
    // storage axes: 0 = t, then y (2D), last = x
    let mut data = contract_axis(field, &mut shape, dims, &tfs.centers()[0], tfs.kernel(0).values(alpha[0])?);
    if dims == 2 {
        data = contract_axis(&data, &mut shape, 1, &tfs.centers()[1], tfs.kernel(1).values(alpha[1])?);
    }
    data = contract_axis(&data, &mut shape, 0, tfs.centers_t(), tfs.kernel_t().values(gamma)?);
    let vol = grid.cell_volume();
    data.iter_mut().for_each(|v| *v *= vol);
    Ok(data)
}

fn sign(feature: &FeatureSpec) -> f64 {
    if feature.alpha_total() % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Builds `W[h,l] = (-1)^|α_l| Q_h(Û^β_l ∂^α_l φ_h)` and `b[h] = -Q_h(Û ∂_t φ_h)`
/// from the observed values.
pub fn assemble(dataset: &Dataset, library: &FeatureLibrary, tfs: &TestFunctionGrid) -> Result<WeakSystem> {
    let u = dataset.values();
    let h = tfs.len();
    let mut w = DMatrix::zeros(h, library.len());
    let mut cached_power = None::<(usize, Vec<f64>)>;
    for (l, feature) in library.features().iter().enumerate() {
        if cached_power.as_ref().map(|(p, _)| *p) != Some(feature.beta) {
            cached_power = Some((feature.beta, power_field(u, feature.beta)));
        }
        let field = &cached_power.as_ref().expect("cached").1;
        let col = weak_integrals(field, dataset, tfs, feature.alpha, 0)?;
        let s = sign(feature);
        for (row, v) in col.into_iter().enumerate() {
            w[(row, l)] = s * v;
        }
    }
    let bt = weak_integrals(u, dataset, tfs, [0, 0], 1)?;
    let b = DVector::from_iterator(h, bt.into_iter().map(|v| -v));
    Ok(WeakSystem { w, b, library: library.clone(), tf_params: *tfs.params() })
}

/// Leading noise-error coefficient `β |Q_h(Û^(β-1) ∂_t^γ ∂^α φ_h)|` per test function.
///
/// Shared by the dynamics indicators and the column rescaling of the final fit.
pub fn leading_error(dataset: &Dataset, tfs: &TestFunctionGrid, feature: &FeatureSpec) -> Result<Vec<f64>> {
    if feature.beta == 0 {
        return Ok(alloc::vec![0.0; tfs.len()]);
    }
    let field = power_field(dataset.values(), feature.beta - 1);
    let q = weak_integrals(&field, dataset, tfs, feature.alpha, feature.gamma)?;
    let beta = feature.beta as f64;
    Ok(q.into_iter().map(|v| beta * v.abs()).collect())
}

/// Average leading error coefficient `e<l> = mean_h e(h, l)` for every library feature.
pub fn average_leading_error(dataset: &Dataset, library: &FeatureLibrary, tfs: &TestFunctionGrid) -> Result<Vec<f64>> {
    library
        .features()
        .iter()
        .map(|f| {
            let e = leading_error(dataset, tfs, f)?;
            Ok(e.iter().sum::<f64>() / e.len() as f64)
        })
        .collect()
}

/// Pointwise residual `R(Û, x, t) = Û ∂_t φ + Σ_l a_l (-1)^|α_l| Û^β_l ∂^α_l φ`
/// of one test function, on the full grid (zero off its support).
pub fn pointwise_residual(
    dataset: &Dataset,
    library: &FeatureLibrary,
    coefficients: &Coefficients,
    tfs: &TestFunctionGrid,
    tf: &TestFunction,
) -> Result<Vec<f64>> {
    if coefficients.len() != library.len() {
        return Err(Error::DimensionMismatch { expected: library.len(), actual: coefficients.len() });
    }
    let grid = dataset.grid();
    let u = dataset.values();
    let active: Vec<(&FeatureSpec, f64)> = library
        .features()
        .iter()
        .zip(coefficients.values())
        .filter(|(_, a)| **a != 0.0)
        .map(|(f, a)| (f, *a))
        .collect();
    for (f, _) in &active {
        tfs.check_orders(f.alpha, 0)?;
    }
    tfs.check_orders([0, 0], 1)?;
    let mut out = alloc::vec![0.0; grid.num_points()];
    let p = tfs.params();
    let dims = grid.spatial_dims();
    let t_lo = tf.center_t - p.halfwidth_t;
    let x_lo = tf.center[0] - p.halfwidth_x;
    let (y_lo, y_n) = if dims == 2 { (tf.center[1] - p.halfwidth_x, 2 * p.halfwidth_x + 1) } else { (0, 1) };
    for n in t_lo..=tf.center_t + p.halfwidth_t {
        for j in y_lo..y_lo + y_n {
            for i in x_lo..=tf.center[0] + p.halfwidth_x {
                let spatial = [i, j];
                let spatial = &spatial[..dims];
                let idx = grid.index(n, spatial);
                let v = u[idx];
                let mut r = v * tfs.eval_derivative(tf, [0, 0], 1, n, spatial)?;
                for (f, a) in &active {
                    let mut pw = 1.0;
                    for _ in 0..f.beta {
                        pw *= v;
                    }
                    r += a * sign(f) * pw * tfs.eval_derivative(tf, f.alpha, 0, n, spatial)?;
                }
                out[idx] = r;
            }
        }
    }
    Ok(out)
}

/// `(e_a)_h = Σ_{Ω_h} r_h R Δx Δt`, summed directly from the pointwise residual.
/// `weights` defaults to all ones.
pub fn e_astar(
    dataset: &Dataset,
    library: &FeatureLibrary,
    coefficients: &Coefficients,
    tfs: &TestFunctionGrid,
    weights: Option<&[f64]>,
) -> Result<Vec<f64>> {
    if let Some(r) = weights {
        if r.len() != tfs.len() {
            return Err(Error::DimensionMismatch { expected: tfs.len(), actual: r.len() });
        }
    }
    let vol = dataset.grid().cell_volume();
    tfs.iter()
        .enumerate()
        .map(|(h, tf)| {
            let res = pointwise_residual(dataset, library, coefficients, tfs, &tf)?;
            let r_h = weights.map_or(1.0, |r| r[h]);
            Ok(r_h * res.iter().sum::<f64>() * vol)
        })
        .collect()
}
