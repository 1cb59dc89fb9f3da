//! Localized separable polynomial bump test functions.
//!
//! Along each axis the bump is `(1 - s^2)^p` with `s = (z - z_c) / (m Δ)`,
//! supported on `|s| ≤ 1`. Its derivatives of order `< p` vanish at `s = ±1`,
//! so an order-`k` derivative is admissible only for `k ≤ p - 1`. The full test
//! function is the product of the per-axis bumps over x, (y,) and t.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::library::FeatureLibrary;

/// `(1 - s^2)^p` as a dense polynomial in `s`, with closed-form derivatives.
#[derive(Debug, Clone, PartialEq)]
pub struct Bump {
    power: usize,
    coeffs: Vec<f64>,
}

impl Bump {
    pub fn new(power: usize) -> Self {
        let mut coeffs = alloc::vec![0.0; 2 * power + 1];
        let mut binom = 1.0f64;
        for j in 0..=power {
            coeffs[2 * j] = if j % 2 == 0 { binom } else { -binom };
            binom = binom * (power - j) as f64 / (j + 1) as f64;
        }
        Self { power, coeffs }
    }

    pub fn power(&self) -> usize {
        self.power
    }

    /// Coefficients of the `k`-th derivative in `s`.
    pub fn derivative_coeffs(&self, k: usize) -> Vec<f64> {
        let mut c = self.coeffs.clone();
        for _ in 0..k {
            if c.len() <= 1 {
                return alloc::vec![0.0];
            }
            c = c.iter().enumerate().skip(1).map(|(i, a)| a * i as f64).collect();
        }
        c
    }

    /// `d^k/ds^k (1 - s^2)^p` at `s`; zero outside `[-1, 1]`.
    pub fn eval(&self, k: usize, s: f64) -> f64 {
        if !(-1.0..=1.0).contains(&s) {
            return 0.0;
        }
        horner(&self.derivative_coeffs(k), s)
    }
}

fn horner(coeffs: &[f64], s: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * s + c)
}

/// Tabulated bump derivatives at the `2m + 1` grid offsets of one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisKernel {
    halfwidth: usize,
    step: f64,
    bump: Bump,
    // table[k][offset + m] = d^k φ / dz^k at z_c + offset·Δ
    table: Vec<Vec<f64>>,
}

impl AxisKernel {
    pub fn new(halfwidth: usize, step: f64, power: usize) -> Self {
        let bump = Bump::new(power);
        let m = halfwidth as i64;
        let scale = 1.0 / (halfwidth as f64 * step);
        let table = (0..power)
            .map(|k| {
                let coeffs = bump.derivative_coeffs(k);
                let factor = libm::pow(scale, k as f64);
                (-m..=m)
                    .map(|off| {
                        if off.abs() == m {
                            // exact zero on the support boundary for admissible orders
                            0.0
                        } else {
                            factor * horner(&coeffs, off as f64 / m as f64)
                        }
                    })
                    .collect()
            })
            .collect();
        Self { halfwidth, step, bump, table }
    }

    pub fn halfwidth(&self) -> usize {
        self.halfwidth
    }

    pub fn power(&self) -> usize {
        self.bump.power
    }

    /// Highest admissible derivative order, `p - 1`.
    pub fn max_order(&self) -> usize {
        self.bump.power - 1
    }

    /// Derivative values at offsets `-m..=m`.
    pub fn values(&self, order: usize) -> Result<&[f64]> {
        self.table
            .get(order)
            .map(Vec::as_slice)
            .ok_or(Error::OrderTooHigh { order, limit: self.max_order() })
    }

    /// Derivative at a continuous displacement `dz` from the center.
    pub fn eval_continuous(&self, order: usize, dz: f64) -> Result<f64> {
        if order > self.max_order() {
            return Err(Error::OrderTooHigh { order, limit: self.max_order() });
        }
        let width = self.halfwidth as f64 * self.step;
        Ok(libm::pow(1.0 / width, order as f64) * self.bump.eval(order, dz / width))
    }
}

/// Test-function shape and placement; `None` fields take grid-dependent defaults.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct TestFunctionConfig {
    pub halfwidth_x: Option<usize>,
    pub halfwidth_t: Option<usize>,
    pub stride_x: Option<usize>,
    pub stride_t: Option<usize>,
    pub order_x: Option<usize>,
    pub order_t: Option<usize>,
}

/// Fully resolved test-function parameters. Spatial values apply to every spatial axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestFunctionParams {
    pub halfwidth_x: usize,
    pub halfwidth_t: usize,
    pub stride_x: usize,
    pub stride_t: usize,
    pub order_x: usize,
    pub order_t: usize,
}

impl TestFunctionConfig {
    /// Defaults: orders `p_x = ᾱ + 2` and `p_t = 5`; half-widths `n/16` cells
    /// but at least `2p` (capped at `n/2`); strides equal to the half-widths.
    pub fn resolve(&self, grid: &Grid, library: &FeatureLibrary) -> TestFunctionParams {
        let order_x = self.order_x.unwrap_or(library.alpha_max() + 2);
        let order_t = self.order_t.unwrap_or(5);
        let n_x = grid.space().iter().map(|a| a.cells).min().unwrap_or(1);
        let n_t = grid.n_t();
        let halfwidth_x = self.halfwidth_x.unwrap_or_else(|| (n_x / 16).max(2 * order_x).min(n_x / 2).max(1));
        let halfwidth_t = self.halfwidth_t.unwrap_or_else(|| (n_t / 16).max(2 * order_t).min(n_t / 2).max(1));
        TestFunctionParams {
            halfwidth_x,
            halfwidth_t,
            stride_x: self.stride_x.unwrap_or(halfwidth_x),
            stride_t: self.stride_t.unwrap_or(halfwidth_t),
            order_x,
            order_t,
        }
    }
}

/// One test function, identified by its center grid indices (x, (y,) t).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TestFunction {
    pub center: [usize; 2],
    pub center_t: usize,
}

/// The collection `{φ_h}` placed on a uniform lattice of centers.
///
/// Test functions are numbered time-major: `h = (c_t · C_y + c_y) · C_x + c_x`
/// where `c_*` index the per-axis center lists and `C_*` are their lengths.
#[derive(Debug, Clone, PartialEq)]
pub struct TestFunctionGrid {
    params: TestFunctionParams,
    spatial_dims: usize,
    // per spatial axis, x first
    centers: Vec<Vec<usize>>,
    centers_t: Vec<usize>,
    kernels: Vec<AxisKernel>,
    kernel_t: AxisKernel,
}

fn axis_centers(cells: usize, halfwidth: usize, stride: usize) -> Result<Vec<usize>> {
    if halfwidth == 0 || 2 * halfwidth > cells {
        return Err(Error::NoValidCenters { halfwidth, cells });
    }
    Ok((halfwidth..=cells - halfwidth).step_by(stride).collect())
}

impl TestFunctionGrid {
    /// Centers at `m, m + s, ... ≤ n - m` along every axis.
    pub fn place_uniform(grid: &Grid, params: TestFunctionParams) -> Result<Self> {
        if params.stride_x == 0 || params.stride_t == 0 {
            return Err(Error::InvalidParameter("test-function strides must be positive".into()));
        }
        if params.order_x == 0 || params.order_t == 0 {
            return Err(Error::InvalidParameter(format!(
                "test-function orders must be positive (got {}, {})",
                params.order_x, params.order_t
            )));
        }
        let mut centers = Vec::new();
        let mut kernels = Vec::new();
        for axis in grid.space() {
            centers.push(axis_centers(axis.cells, params.halfwidth_x, params.stride_x)?);
            kernels.push(AxisKernel::new(params.halfwidth_x, axis.step(), params.order_x));
        }
        let centers_t = axis_centers(grid.n_t(), params.halfwidth_t, params.stride_t)?;
        let kernel_t = AxisKernel::new(params.halfwidth_t, grid.dt(), params.order_t);
        Ok(Self { params, spatial_dims: grid.spatial_dims(), centers, centers_t, kernels, kernel_t })
    }

    /// Places test functions with `config` defaults resolved against the grid and library.
    pub fn for_library(grid: &Grid, library: &FeatureLibrary, config: &TestFunctionConfig) -> Result<Self> {
        Self::place_uniform(grid, config.resolve(grid, library))
    }

    pub fn params(&self) -> &TestFunctionParams {
        &self.params
    }

    pub fn spatial_dims(&self) -> usize {
        self.spatial_dims
    }

    pub fn len(&self) -> usize {
        self.centers_t.len() * self.centers.iter().map(Vec::len).product::<usize>()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn centers(&self) -> &[Vec<usize>] {
        &self.centers
    }

    pub fn centers_t(&self) -> &[usize] {
        &self.centers_t
    }

    pub fn kernel(&self, axis: usize) -> &AxisKernel {
        &self.kernels[axis]
    }

    pub fn kernel_t(&self) -> &AxisKernel {
        &self.kernel_t
    }

    pub fn get(&self, h: usize) -> TestFunction {
        let nx = self.centers[0].len();
        let mut rest = h;
        let cx = rest % nx;
        rest /= nx;
        let mut center = [self.centers[0][cx], 0];
        if self.spatial_dims == 2 {
            let ny = self.centers[1].len();
            center[1] = self.centers[1][rest % ny];
            rest /= ny;
        }
        TestFunction { center, center_t: self.centers_t[rest] }
    }

    pub fn iter(&self) -> impl Iterator<Item = TestFunction> + '_ {
        (0..self.len()).map(move |h| self.get(h))
    }

    /// Checks that spatial orders `alpha` and time order `gamma` are admissible.
    pub fn check_orders(&self, alpha: [usize; 2], gamma: usize) -> Result<()> {
        for &a in &alpha[..self.spatial_dims] {
            if a > self.kernels[0].max_order() {
                return Err(Error::OrderTooHigh { order: a, limit: self.kernels[0].max_order() });
            }
        }
        if self.spatial_dims == 1 && alpha[1] != 0 {
            return Err(Error::DimensionMismatch { expected: 1, actual: 2 });
        }
        if gamma > self.kernel_t.max_order() {
            return Err(Error::OrderTooHigh { order: gamma, limit: self.kernel_t.max_order() });
        }
        Ok(())
    }

    /// Exact `∂_t^γ ∂^α φ` of `tf` at grid point `(n, spatial)`; zero off the support.
    pub fn eval_derivative(
        &self,
        tf: &TestFunction,
        alpha: [usize; 2],
        gamma: usize,
        n: usize,
        spatial: &[usize],
    ) -> Result<f64> {
        self.check_orders(alpha, gamma)?;
        let mut value = offset_value(&self.kernel_t, gamma, n, tf.center_t)?;
        for d in 0..self.spatial_dims {
            value *= offset_value(&self.kernels[d], alpha[d], spatial[d], tf.center[d])?;
        }
        Ok(value)
    }
}

fn offset_value(kernel: &AxisKernel, order: usize, index: usize, center: usize) -> Result<f64> {
    let m = kernel.halfwidth() as i64;
    let off = index as i64 - center as i64;
    if off.abs() > m {
        return Ok(0.0);
    }
    Ok(kernel.values(order)?[(off + m) as usize])
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn params(m_x: usize, m_t: usize, s_x: usize, s_t: usize, p_x: usize, p_t: usize) -> TestFunctionParams {
        TestFunctionParams {
            halfwidth_x: m_x,
            halfwidth_t: m_t,
            stride_x: s_x,
            stride_t: s_t,
            order_x: p_x,
            order_t: p_t,
        }
    }

    #[test]
    fn bump_coefficients() {
        // (1 - s^2)^3 = 1 - 3 s^2 + 3 s^4 - s^6
        assert_eq!(Bump::new(3).coeffs, vec![1.0, 0.0, -3.0, 0.0, 3.0, 0.0, -1.0]);
        assert_eq!(Bump::new(3).derivative_coeffs(7), vec![0.0]);
    }

    #[test]
    fn center_value_is_one() {
        let g = Grid::new_1d(0.0, 1.0, 100, 1.0, 100).unwrap();
        let tfs = TestFunctionGrid::place_uniform(&g, params(10, 10, 10, 10, 5, 3)).unwrap();
        let tf = tfs.get(0);
        assert_eq!(tfs.eval_derivative(&tf, [0, 0], 0, tf.center_t, &[tf.center[0]]).unwrap(), 1.0);
    }

    #[test]
    fn vanishes_on_support_boundary() {
        let g = Grid::new_1d(0.0, 1.0, 100, 1.0, 100).unwrap();
        let tfs = TestFunctionGrid::place_uniform(&g, params(10, 8, 10, 8, 5, 3)).unwrap();
        let tf = tfs.get(5);
        for ax in 0..5 {
            for gt in 0..3 {
                for (n, i) in [(tf.center_t - 8, tf.center[0]), (tf.center_t, tf.center[0] + 10), (0, 0)] {
                    assert_eq!(tfs.eval_derivative(&tf, [ax, 0], gt, n, &[i]).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn order_too_high() {
        let g = Grid::new_1d(0.0, 1.0, 100, 1.0, 100).unwrap();
        let tfs = TestFunctionGrid::place_uniform(&g, params(10, 10, 10, 10, 4, 2)).unwrap();
        let tf = tfs.get(0);
        assert_eq!(
            tfs.eval_derivative(&tf, [4, 0], 0, 10, &[10]),
            Err(Error::OrderTooHigh { order: 4, limit: 3 })
        );
        assert!(tfs.eval_derivative(&tf, [0, 0], 2, 10, &[10]).is_err());
    }

    #[test]
    fn derivative_matches_refined_central_difference() {
        // finite-difference oracle on a 10x refined axis around a mid-support point
        let g = Grid::new_1d(0.0, 1.0, 100, 1.0, 100).unwrap();
        let tfs = TestFunctionGrid::place_uniform(&g, params(10, 10, 10, 10, 6, 3)).unwrap();
        let kx = tfs.kernel(0);
        let dx = g.x().step();
        let h = dx / 10.0;
        let central = |z: f64, h: f64| {
            (kx.eval_continuous(0, z + h).unwrap() - kx.eval_continuous(0, z - h).unwrap()) / (2.0 * h)
        };
        for off in [-7i64, -4, 3, 5] {
            let z = off as f64 * dx;
            // Richardson-extrapolated central difference, O(h^4)
            let fd = (4.0 * central(z, h / 2.0) - central(z, h)) / 3.0;
            let exact = kx.values(1).unwrap()[(off + 10) as usize];
            let rel = ((fd - exact) / exact).abs();
            assert!(rel <= 1e-6, "off {off}: {fd} vs {exact} ({rel})");
        }
    }

    #[test]
    fn place_uniform_counts() {
        let g = Grid::new_1d(0.0, 1.0, 100, 1.0, 100).unwrap();
        let tfs = TestFunctionGrid::place_uniform(&g, params(10, 10, 10, 10, 4, 3)).unwrap();
        assert_eq!(tfs.len(), 81);
        let single = TestFunctionGrid::place_uniform(&g, params(50, 10, 10, 10, 4, 3)).unwrap();
        assert_eq!(single.centers()[0], vec![50]);
        assert_eq!(
            TestFunctionGrid::place_uniform(&g, params(51, 10, 10, 10, 4, 3)),
            Err(Error::NoValidCenters { halfwidth: 51, cells: 100 })
        );
    }

    #[test]
    fn numbering_is_time_major() {
        let g = Grid::new(
            vec![crate::grid::Axis::new(0.0, 1.0, 40).unwrap(), crate::grid::Axis::new(0.0, 1.0, 40).unwrap()],
            1.0,
            40,
        )
        .unwrap();
        let tfs = TestFunctionGrid::place_uniform(&g, params(10, 10, 10, 10, 4, 3)).unwrap();
        assert_eq!(tfs.len(), 27);
        assert_eq!(tfs.get(0), TestFunction { center: [10, 10], center_t: 10 });
        assert_eq!(tfs.get(1), TestFunction { center: [20, 10], center_t: 10 });
        assert_eq!(tfs.get(3), TestFunction { center: [10, 20], center_t: 10 });
        assert_eq!(tfs.get(9), TestFunction { center: [10, 10], center_t: 20 });
    }

    #[test]
    fn default_resolution() {
        let g = Grid::new_1d(0.0, 1.0, 256, 1.0, 300).unwrap();
        let lib = FeatureLibrary::default_for(1).unwrap();
        let p = TestFunctionConfig::default().resolve(&g, &lib);
        assert_eq!(p, params(16, 18, 16, 18, 8, 5));
        let small = Grid::new_1d(0.0, 1.0, 64, 1.0, 32).unwrap();
        let p = TestFunctionConfig::default().resolve(&small, &lib);
        assert_eq!((p.halfwidth_x, p.halfwidth_t), (16, 10));
    }
}
