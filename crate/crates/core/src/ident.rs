//! Weighted solves, occurrence and coefficient voting, and the final rescaled fit.

use alloc::vec::Vec;

use nalgebra::DVector;

use crate::error::{Error, Result};
use crate::grid::Dataset;
use crate::library::{Coefficients, FeatureLibrary};
use crate::linalg::{self, least_squares};
use crate::solver::{solve_sparse, SolveDiagnostics, SparseSolveParams};
use crate::test_fn::TestFunctionGrid;
use crate::weak::{assemble, average_leading_error, WeakSystem};
use crate::weighting::{apply_weights, dynamics_indicator, ReferenceFeature, WeightVector};

/// Voting thresholds: occurrence `rho` and relative coefficient `v`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VotingConfig {
    pub rho: f64,
    pub v: f64,
}

impl Default for VotingConfig {
    fn default() -> Self {
        Self { rho: 0.25, v: 0.05 }
    }
}

impl VotingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::InvalidParameter(alloc::format!("rho = {}", self.rho)));
        }
        if !(0.0..1.0).contains(&self.v) {
            return Err(Error::InvalidParameter(alloc::format!("v = {}", self.v)));
        }
        Ok(())
    }
}

/// Fraction of subresults selecting each feature, and the features at or above `rho`.
pub fn occurrence_vote(subresults: &[Coefficients], rho: f64) -> Result<(Vec<f64>, Vec<usize>)> {
    let Some(first) = subresults.first() else {
        return Err(Error::InvalidParameter("occurrence vote needs at least one subresult".into()));
    };
    let len = first.len();
    if let Some(bad) = subresults.iter().find(|c| c.len() != len) {
        return Err(Error::DimensionMismatch { expected: len, actual: bad.len() });
    }
    let m = subresults.len() as f64;
    let occurrence: Vec<f64> = (0..len)
        .map(|l| subresults.iter().filter(|c| c.0[l] != 0.0).count() as f64 / m)
        .collect();
    let support = (0..len).filter(|&l| occurrence[l] >= rho).collect();
    Ok((occurrence, support))
}

/// Mean magnitude `ā_l` over subresults (zero outside `b`).
pub fn average_magnitudes(subresults: &[Coefficients], b: &[usize]) -> Vec<f64> {
    let len = subresults.first().map_or(0, Coefficients::len);
    let m = subresults.len() as f64;
    let mut avg = alloc::vec![0.0; len];
    for &l in b {
        avg[l] = subresults.iter().map(|c| c.0[l].abs()).sum::<f64>() / m;
    }
    avg
}

/// Keeps `l ∈ b` with `ā_l / max ā ≥ v`.
pub fn coefficient_vote(subresults: &[Coefficients], b: &[usize], v: f64) -> Vec<usize> {
    select_by_magnitude(&average_magnitudes(subresults, b), b, v)
}

fn select_by_magnitude(avg: &[f64], b: &[usize], v: f64) -> Vec<usize> {
    let max = b.iter().map(|&l| avg[l]).fold(0.0, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    b.iter().copied().filter(|&l| avg[l] / max >= v).collect()
}

/// Final coefficients on support `c`: least squares of `W D̃^-1 z = b` over
/// `supp(z) ⊆ c` with `D̃ = diag(e<l>)`, mapped back by `D̃^-1`. Zero scales
/// are replaced by 1. Returns the coefficients and a rank-deficiency flag.
pub fn final_recovery_with_scale(sys: &WeakSystem, column_scale: &[f64], c: &[usize]) -> Result<(Coefficients, bool)> {
    if c.is_empty() {
        return Err(Error::EmptySupport);
    }
    if column_scale.len() != sys.cols() {
        return Err(Error::DimensionMismatch { expected: sys.cols(), actual: column_scale.len() });
    }
    let scale: Vec<f64> = c
        .iter()
        .map(|&l| {
            let e = column_scale[l];
            if e > 0.0 && e.is_finite() {
                e
            } else {
                1.0
            }
        })
        .collect();
    let mut wc = linalg::select(&sys.w, None, c);
    for (j, s) in scale.iter().enumerate() {
        wc.column_mut(j).scale_mut(1.0 / s);
    }
    let fit = least_squares(&wc, &sys.b);
    let mut a = Coefficients::zeros(sys.cols());
    for ((&l, z), s) in c.iter().zip(&fit.coefficients).zip(&scale) {
        a.0[l] = z / s;
    }
    Ok((a, fit.rank_deficient))
}

/// [`final_recovery_with_scale`] with `e<l>` computed from the observed data.
pub fn final_recovery(
    sys: &WeakSystem,
    dataset: &Dataset,
    tfs: &TestFunctionGrid,
    c: &[usize],
) -> Result<(Coefficients, bool)> {
    let scale = average_leading_error(dataset, &sys.library, tfs)?;
    final_recovery_with_scale(sys, &scale, c)
}

/// One weighted solve.
#[derive(Debug, Clone, PartialEq)]
pub struct SubResult {
    pub reference: ReferenceFeature,
    pub weights: WeightVector,
    pub coefficients: Coefficients,
    pub diagnostics: SolveDiagnostics,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct IdentDiagnostics {
    /// Both votes eliminated every feature; coefficients are zero.
    pub empty_support: bool,
    pub rank_deficient: bool,
    /// `‖W â - b‖ / ‖b‖` on the unweighted system.
    pub relative_residual: f64,
    /// Condition number of `W D̃^-1` restricted to the final support.
    pub condition_number: f64,
    pub rows: usize,
}

/// Everything produced by one identification.
#[derive(Debug, Clone, PartialEq)]
pub struct IdentResult {
    pub coefficients: Coefficients,
    /// Support after both votes.
    pub support_c: Vec<usize>,
    /// Support after occurrence voting.
    pub support_b: Vec<usize>,
    pub occurrence: Vec<f64>,
    pub average_magnitude: Vec<f64>,
    /// `e<l>` used to rescale the columns.
    pub column_scale: Vec<f64>,
    pub subresults: Vec<SubResult>,
    pub voting: VotingConfig,
    pub solver: SparseSolveParams,
    pub diagnostics: IdentDiagnostics,
}

/// Full pipeline: assemble once, solve once per reference feature with its
/// dynamics weights, vote, and refit on the voted support.
pub fn identify(
    dataset: &Dataset,
    library: &FeatureLibrary,
    tfs: &TestFunctionGrid,
    refs: &[ReferenceFeature],
    solver: &SparseSolveParams,
    voting: &VotingConfig,
) -> Result<IdentResult> {
    if refs.is_empty() {
        return Err(Error::InvalidParameter("at least one reference feature is required".into()));
    }
    voting.validate()?;
    solver.validate()?;
    let sys = assemble(dataset, library, tfs)?;
    let column_scale = average_leading_error(dataset, library, tfs)?;
    let mut subresults = Vec::with_capacity(refs.len());
    for g in refs {
        let weights = dynamics_indicator(dataset, tfs, g)?;
        let weighted = apply_weights(&sys, &weights)?;
        let sol = solve_sparse(&weighted, &column_scale, solver)?;
        subresults.push(SubResult {
            reference: *g,
            weights,
            coefficients: sol.coefficients,
            diagnostics: sol.diagnostics,
        });
    }
    let votes: Vec<Coefficients> = subresults.iter().map(|s| s.coefficients.clone()).collect();
    let (occurrence, support_b) = occurrence_vote(&votes, voting.rho)?;
    let average_magnitude = average_magnitudes(&votes, &support_b);
    let support_c = select_by_magnitude(&average_magnitude, &support_b, voting.v);

    let mut diagnostics = IdentDiagnostics { rows: sys.rows(), ..Default::default() };
    let coefficients = if support_c.is_empty() {
        diagnostics.empty_support = true;
        Coefficients::zeros(library.len())
    } else {
        let (a, rank_deficient) = final_recovery_with_scale(&sys, &column_scale, &support_c)?;
        diagnostics.rank_deficient = rank_deficient;
        let mut wc = linalg::select(&sys.w, None, &support_c);
        for (j, &l) in support_c.iter().enumerate() {
            let e = column_scale[l];
            if e > 0.0 && e.is_finite() {
                wc.column_mut(j).scale_mut(1.0 / e);
            }
        }
        diagnostics.condition_number = linalg::condition_number(&wc);
        a
    };
    let residual = &sys.w * DVector::from_column_slice(coefficients.values()) - &sys.b;
    let b_norm = sys.b.norm();
    diagnostics.relative_residual = if b_norm > 0.0 { residual.norm() / b_norm } else { residual.norm() };
    Ok(IdentResult {
        coefficients,
        support_c,
        support_b,
        occurrence,
        average_magnitude,
        column_scale,
        subresults,
        voting: *voting,
        solver: *solver,
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::library::FeatureSpec;
    use crate::weak::leading_error;
    use crate::weighting::default_reference_set;
    use nalgebra::DMatrix;

    fn coeffs(v: &[f64]) -> Coefficients {
        Coefficients(v.to_vec())
    }

    #[test]
    fn occurrence_counts() {
        let subs = [
            coeffs(&[1.0, 0.5, 0.0]),
            coeffs(&[1.0, 0.0, 0.0]),
            coeffs(&[1.0, 0.3, 0.2]),
            coeffs(&[0.0, 0.0, 0.0]),
            coeffs(&[0.9, 0.0, 0.0]),
        ];
        let (occ, b) = occurrence_vote(&subs, 0.25).unwrap();
        assert_eq!(occ, alloc::vec![0.8, 0.4, 0.2]);
        assert_eq!(b, alloc::vec![0, 1]);
        let three_of_five = [
            coeffs(&[1.0]),
            coeffs(&[1.0]),
            coeffs(&[1.0]),
            coeffs(&[0.0]),
            coeffs(&[0.0]),
        ];
        assert_eq!(occurrence_vote(&three_of_five, 0.25).unwrap(), (alloc::vec![0.6], alloc::vec![0]));
    }

    #[test]
    fn unanimous_vote_keeps_common_support() {
        let subs = [coeffs(&[0.0, 2.0, -1.0]), coeffs(&[0.0, 1.5, -0.7])];
        for rho in [0.0, 0.3, 1.0] {
            let (_, b) = occurrence_vote(&subs, rho).unwrap();
            if rho == 0.0 {
                assert_eq!(b, alloc::vec![0, 1, 2]);
            } else {
                assert_eq!(b, alloc::vec![1, 2]);
            }
        }
        assert!(occurrence_vote(&[], 0.2).is_err());
    }

    #[test]
    fn coefficient_vote_thresholds() {
        let subs = [coeffs(&[1.0, 0.03, 5.0])];
        assert_eq!(coefficient_vote(&subs, &[0, 1], 0.05), alloc::vec![0]);
        assert_eq!(coefficient_vote(&subs, &[1], 0.05), alloc::vec![1]);
        assert_eq!(coefficient_vote(&subs, &[], 0.05), Vec::<usize>::new());
        let scaled = [coeffs(&[123.0, 3.69, 615.0])];
        assert_eq!(coefficient_vote(&scaled, &[0, 1], 0.05), alloc::vec![0]);
    }

    #[test]
    fn rescaled_recovery_equals_plain_least_squares() {
        let w = DMatrix::from_fn(40, 5, |i, j| libm::sin((i * (j + 2)) as f64 * 0.37) + if i == j { 2.0 } else { 0.0 });
        let b = DVector::from_fn(40, |i, _| libm::cos(i as f64 * 0.21));
        let lib = FeatureLibrary::build(4, 1, 1, false).unwrap();
        let sys = WeakSystem { w: w.clone(), b: b.clone(), library: lib, tf_params: dummy_params() };
        let c = [0, 2, 3];
        let (a, rd) = final_recovery_with_scale(&sys, &[3.0, 0.1, 1e-4, 50.0, 0.0], &c).unwrap();
        assert!(!rd);
        let plain = least_squares(&linalg::select(&w, None, &c), &b);
        for (&l, z) in c.iter().zip(&plain.coefficients) {
            assert!((a.0[l] - z).abs() <= 1e-10 * z.abs());
        }
        assert_eq!(a.0[1], 0.0);
        assert_eq!(final_recovery_with_scale(&sys, &[1.0; 5], &[]), Err(Error::EmptySupport));
    }

    fn dummy_params() -> crate::test_fn::TestFunctionParams {
        crate::test_fn::TestFunctionParams {
            halfwidth_x: 1,
            halfwidth_t: 1,
            stride_x: 1,
            stride_t: 1,
            order_x: 1,
            order_t: 1,
        }
    }

    #[test]
    fn column_scale_shares_indicator_kernel() {
        let g = crate::grid::Grid::new_1d(0.0, 1.0, 64, 1.0, 64).unwrap();
        let d = Dataset::from_fn(g.clone(), |x, t| libm::sin(7.0 * x + t) * (1.0 + x)).unwrap();
        let lib = FeatureLibrary::build(2, 2, 1, false).unwrap();
        let tfs = TestFunctionGrid::for_library(&g, &lib, &Default::default()).unwrap();
        let avg = average_leading_error(&d, &lib, &tfs).unwrap();
        for g in default_reference_set(1).unwrap().iter().filter(|g| g.spec().gamma == 0) {
            let l = lib.position(g.spec()).unwrap();
            let raw = crate::weighting::raw_indicator(&d, &tfs, g).unwrap();
            assert_eq!(raw.r, leading_error(&d, &tfs, &lib.features()[l]).unwrap());
            assert_eq!(avg[l], raw.r.iter().sum::<f64>() / raw.r.len() as f64);
        }
        let _ = FeatureSpec::new(0, 1);
    }
}
