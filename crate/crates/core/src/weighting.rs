//! Dynamics indicators and the row weights they induce.

use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Dataset;
use crate::library::FeatureSpec;
use crate::test_fn::TestFunctionGrid;
use crate::weak::{leading_error, WeakSystem};

/// A reference feature `∂_t^γ ∂^α u^β` with `γ ≤ 1`, `|α| ≤ 2`, `β ∈ {1, 2}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReferenceFeature(FeatureSpec);

impl ReferenceFeature {
    pub fn new(spec: FeatureSpec) -> Result<Self> {
        if spec.gamma > 1 || spec.alpha_total() > 2 || !(1..=2).contains(&spec.beta) {
            return Err(Error::InvalidParameter(alloc::format!("reference feature {}", spec.name())));
        }
        Ok(Self(spec))
    }

    pub fn spec(&self) -> &FeatureSpec {
        &self.0
    }

    pub fn name(&self) -> String {
        self.0.name()
    }
}

/// `u, u^2, (u^2)_x, (u^2)_{xx}, (u^2)_t` in 1D; in 2D `u, u^2`, all first and
/// second spatial derivatives of `u^2`, and `(u^2)_t`.
pub fn default_reference_set(spatial_dims: usize) -> Result<Vec<ReferenceFeature>> {
    let specs: Vec<FeatureSpec> = match spatial_dims {
        1 => alloc::vec![
            FeatureSpec::new(0, 1),
            FeatureSpec::new(0, 2),
            FeatureSpec::new(1, 2),
            FeatureSpec::new(2, 2),
            FeatureSpec::new(0, 2).with_time(1),
        ],
        2 => alloc::vec![
            FeatureSpec::new_2d(0, 0, 1),
            FeatureSpec::new_2d(0, 0, 2),
            FeatureSpec::new_2d(1, 0, 2),
            FeatureSpec::new_2d(0, 1, 2),
            FeatureSpec::new_2d(2, 0, 2),
            FeatureSpec::new_2d(1, 1, 2),
            FeatureSpec::new_2d(0, 2, 2),
            FeatureSpec::new_2d(0, 0, 2).with_time(1),
        ],
        d => return Err(Error::UnsupportedDimension(d)),
    };
    specs.into_iter().map(ReferenceFeature::new).collect()
}

/// The single uniform reference `u` (plain, unweighted weak form).
pub fn uniform_reference_set() -> Vec<ReferenceFeature> {
    alloc::vec![ReferenceFeature(FeatureSpec::new(0, 1))]
}

/// Nonnegative per-test-function weights.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightVector {
    pub r: Vec<f64>,
    pub normalized: bool,
}

impl WeightVector {
    pub fn uniform(len: usize) -> Self {
        Self { r: alloc::vec![1.0; len], normalized: true }
    }

    /// Scales to max 1; an all-zero vector becomes uniform.
    pub fn normalize(mut self) -> Self {
        let max = self.r.iter().copied().fold(0.0, f64::max);
        if max > 0.0 && max.is_finite() {
            self.r.iter_mut().for_each(|v| *v /= max);
        } else {
            self.r.iter_mut().for_each(|v| *v = 1.0);
        }
        self.normalized = true;
        self
    }

    pub fn len(&self) -> usize {
        self.r.len()
    }

    pub fn is_empty(&self) -> bool {
        self.r.is_empty()
    }
}

/// Raw indicator `r_h = β |Q_h(Û^(β-1) ∂_t^γ ∂^α φ_h)|`, before normalization.
pub fn raw_indicator(dataset: &Dataset, tfs: &TestFunctionGrid, g: &ReferenceFeature) -> Result<WeightVector> {
    Ok(WeightVector { r: leading_error(dataset, tfs, g.spec())?, normalized: false })
}

/// Dynamics indicator of `g` from the observed data, normalized to max 1.
pub fn dynamics_indicator(dataset: &Dataset, tfs: &TestFunctionGrid, g: &ReferenceFeature) -> Result<WeightVector> {
    Ok(raw_indicator(dataset, tfs, g)?.normalize())
}

/// Row-scales the system: `(diag(r) W, diag(r) b)`.
pub fn apply_weights(sys: &WeakSystem, r: &WeightVector) -> Result<WeakSystem> {
    if r.len() != sys.rows() {
        return Err(Error::DimensionMismatch { expected: sys.rows(), actual: r.len() });
    }
    let mut out = sys.clone();
    for (h, &rh) in r.r.iter().enumerate() {
        out.w.row_mut(h).scale_mut(rh);
        out.b[h] *= rh;
    }
    Ok(out)
}
