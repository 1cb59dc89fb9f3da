//! Uniform space-time grids, sampled datasets and the observation noise model.
//!
//! Values are stored time-major: the flat index of `(n, j, i)` (time, y, x) is
//! `(n * (n_y + 1) + j) * (n_x + 1) + i`, with x contiguous.

use alloc::format;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};

/// One uniformly partitioned spatial axis `[min, max]` with `cells` sub-intervals.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub cells: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(Error::InvalidGrid("axis needs at least one cell".into()));
        }
        if !(max > min) || !min.is_finite() || !max.is_finite() {
            return Err(Error::InvalidGrid(format!("axis bounds [{min}, {max}]")));
        }
        Ok(Self { min, max, cells })
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / self.cells as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step()
    }

    pub fn len(&self) -> f64 {
        self.max - self.min
    }
}

/// Space-time grid with one or two spatial dimensions over `[0, t_max]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    space: Vec<Axis>,
    t_max: f64,
    n_t: usize,
}

impl Grid {
    pub fn new(space: Vec<Axis>, t_max: f64, n_t: usize) -> Result<Self> {
        if space.is_empty() || space.len() > 2 {
            return Err(Error::UnsupportedDimension(space.len()));
        }
        if n_t == 0 {
            return Err(Error::InvalidGrid("n_t must be at least 1".into()));
        }
        if !(t_max > 0.0) || !t_max.is_finite() {
            return Err(Error::InvalidGrid(format!("t_max = {t_max}")));
        }
        Ok(Self { space, t_max, n_t })
    }

    pub fn new_1d(x_min: f64, x_max: f64, n_x: usize, t_max: f64, n_t: usize) -> Result<Self> {
        Self::new(alloc::vec![Axis::new(x_min, x_max, n_x)?], t_max, n_t)
    }

    pub fn spatial_dims(&self) -> usize {
        self.space.len()
    }

    /// Spatial axes, x first.
    pub fn space(&self) -> &[Axis] {
        &self.space
    }

    pub fn x(&self) -> &Axis {
        &self.space[0]
    }

    pub fn t_max(&self) -> f64 {
        self.t_max
    }

    pub fn n_t(&self) -> usize {
        self.n_t
    }

    pub fn dt(&self) -> f64 {
        self.t_max / self.n_t as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        n as f64 * self.dt()
    }

    /// Product of all spatial steps and the time step.
    pub fn cell_volume(&self) -> f64 {
        self.space.iter().map(Axis::step).product::<f64>() * self.dt()
    }

    /// Storage shape, slowest axis first: `[n_t+1, (n_y+1,) n_x+1]`.
    pub fn shape(&self) -> Vec<usize> {
        let mut shape = Vec::with_capacity(self.space.len() + 1);
        shape.push(self.n_t + 1);
        for axis in self.space.iter().rev() {
            shape.push(axis.cells + 1);
        }
        shape
    }

    pub fn num_points(&self) -> usize {
        self.shape().iter().product()
    }

    /// Number of points in one time slice.
    pub fn slice_len(&self) -> usize {
        self.space.iter().map(|a| a.cells + 1).product()
    }

    /// Flat index of the point `(n, spatial)` where `spatial` is `[i]` or `[i, j]`.
    pub fn index(&self, n: usize, spatial: &[usize]) -> usize {
        debug_assert_eq!(spatial.len(), self.space.len());
        let mut idx = n;
        for (axis, &k) in self.space.iter().zip(spatial).rev() {
            idx = idx * (axis.cells + 1) + k;
        }
        idx
    }
}

/// Sampled field values on a grid, optionally paired with the clean values
/// the noisy ones were generated from.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    grid: Grid,
    values: Vec<f64>,
    clean: Option<Vec<f64>>,
}

impl Dataset {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        Ok(Self { grid, values, clean: None })
    }

    pub fn with_clean(grid: Grid, values: Vec<f64>, clean: Vec<f64>) -> Result<Self> {
        check_values(&grid, &values)?;
        check_values(&grid, &clean)?;
        Ok(Self { grid, values, clean: Some(clean) })
    }

    /// Samples `f(x, t)` (1D) on the grid; in 2D `f` receives `(x, y, t)` via [`Dataset::from_fn_2d`].
    pub fn from_fn(grid: Grid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        if grid.spatial_dims() != 1 {
            return Err(Error::UnsupportedDimension(grid.spatial_dims()));
        }
        let x = *grid.x();
        let mut values = Vec::with_capacity(grid.num_points());
        for n in 0..=grid.n_t() {
            let t = grid.time(n);
            for i in 0..=x.cells {
                values.push(f(x.point(i), t));
            }
        }
        Self::new(grid, values)
    }

    pub fn from_fn_2d(grid: Grid, f: impl Fn(f64, f64, f64) -> f64) -> Result<Self> {
        if grid.spatial_dims() != 2 {
            return Err(Error::UnsupportedDimension(grid.spatial_dims()));
        }
        let (x, y) = (grid.space()[0], grid.space()[1]);
        let mut values = Vec::with_capacity(grid.num_points());
        for n in 0..=grid.n_t() {
            let t = grid.time(n);
            for j in 0..=y.cells {
                for i in 0..=x.cells {
                    values.push(f(x.point(i), y.point(j), t));
                }
            }
        }
        Self::new(grid, values)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn clean_values(&self) -> Option<&[f64]> {
        self.clean.as_deref()
    }

    /// Clean values when present, observed values otherwise.
    pub fn reference_values(&self) -> &[f64] {
        self.clean.as_deref().unwrap_or(&self.values)
    }

    pub fn into_parts(self) -> (Grid, Vec<f64>, Option<Vec<f64>>) {
        (self.grid, self.values, self.clean)
    }

    /// Same data with every value shifted by `c` (clean values included).
    pub fn shifted(&self, c: f64) -> Self {
        Self {
            grid: self.grid.clone(),
            values: self.values.iter().map(|v| v + c).collect(),
            clean: self.clean.as_ref().map(|cl| cl.iter().map(|v| v + c).collect()),
        }
    }

    /// Keeps every `stride_x`-th point along each spatial axis and every
    /// `stride_t`-th time slice.
    pub fn subsample(&self, stride_x: usize, stride_t: usize) -> Result<Self> {
        if stride_x == 0 || stride_t == 0 {
            return Err(Error::InvalidParameter("strides must be positive".into()));
        }
        let g = &self.grid;
        let mut space = Vec::with_capacity(g.spatial_dims());
        for axis in g.space() {
            if axis.cells % stride_x != 0 {
                return Err(Error::StrideMismatch { stride: stride_x, count: axis.cells });
            }
            space.push(Axis { cells: axis.cells / stride_x, ..*axis });
        }
        if g.n_t() % stride_t != 0 {
            return Err(Error::StrideMismatch { stride: stride_t, count: g.n_t() });
        }
        let coarse = Grid::new(space, g.t_max(), g.n_t() / stride_t)?;
        let pick = |src: &[f64]| -> Vec<f64> {
            let mut out = Vec::with_capacity(coarse.num_points());
            for n in 0..=coarse.n_t() {
                match coarse.spatial_dims() {
                    1 => {
                        for i in 0..=coarse.x().cells {
                            out.push(src[g.index(n * stride_t, &[i * stride_x])]);
                        }
                    }
                    _ => {
                        for j in 0..=coarse.space()[1].cells {
                            for i in 0..=coarse.x().cells {
                                out.push(src[g.index(n * stride_t, &[i * stride_x, j * stride_x])]);
                            }
                        }
                    }
                }
            }
            out
        };
        Ok(Self {
            values: pick(&self.values),
            clean: self.clean.as_deref().map(pick),
            grid: coarse,
        })
    }
}

fn check_values(grid: &Grid, values: &[f64]) -> Result<()> {
    if values.len() != grid.num_points() {
        return Err(Error::ShapeMismatch { expected: grid.num_points(), actual: values.len() });
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite);
    }
    Ok(())
}

/// Noise level as a noise-to-signal ratio plus the generator seed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub sigma_nsr: f64,
    pub seed: u64,
}

/// Standard deviation matching the noise-to-signal ratio `sigma_nsr`.
///
/// The signal energy is the mean square deviation of the clean data from its
/// midrange `(max + min) / 2`, so the result does not change when a constant
/// is added to the data.
pub fn nsr_sigma(dataset: &Dataset, sigma_nsr: f64) -> Result<f64> {
    if !(sigma_nsr >= 0.0) {
        return Err(Error::InvalidParameter(format!("sigma_nsr = {sigma_nsr}")));
    }
    let u = dataset.reference_values();
    let (lo, hi) = u
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let mid = (hi + lo) / 2.0;
    let energy = u.iter().map(|v| (v - mid) * (v - mid)).sum::<f64>() / u.len() as f64;
    if energy == 0.0 {
        return Err(Error::DegenerateSignal);
    }
    Ok(sigma_nsr * libm::sqrt(energy))
}

/// Adds i.i.d. Gaussian noise at the requested NSR to the clean values.
///
/// Draws come from ChaCha8 seeded with `spec.seed` through the ziggurat
/// standard-normal sampler, both platform independent. Points are visited in
/// storage order.
pub fn add_noise(dataset: &Dataset, spec: NoiseSpec) -> Result<Dataset> {
    let clean = dataset.reference_values().to_vec();
    if spec.sigma_nsr == 0.0 {
        return Ok(Dataset { grid: dataset.grid.clone(), values: clean.clone(), clean: Some(clean) });
    }
    let sigma = nsr_sigma(dataset, spec.sigma_nsr)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let values = clean
        .iter()
        .map(|&u| {
            let z: f64 = StandardNormal.sample(&mut rng);
            u + sigma * z
        })
        .collect();
    Ok(Dataset { grid: dataset.grid.clone(), values, clean: Some(clean) })
}
