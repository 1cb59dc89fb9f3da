//! Sparse regression on a (weighted) weak system.
//!
//! Subspace pursuit produces one candidate support per sparsity level; the level
//! is picked on held-out rows, the winner is refit on all rows and small
//! contributions are trimmed.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::library::Coefficients;
use crate::linalg::{self, least_squares, RestrictedFit};
use crate::weak::WeakSystem;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SparseSolveParams {
    /// Largest sparsity level tried.
    pub s_max: usize,
    /// Fraction of rows held out for choosing the sparsity level.
    pub cv_fraction: f64,
    /// Relative contribution below which a selected feature is dropped.
    pub trim_threshold: f64,
    pub max_sp_iters: usize,
    /// Smallest level whose holdout residual is within `1 + slack` of the best wins.
    pub parsimony_slack: f64,
    /// Relative holdout residuals at or below this count as an exact fit, so
    /// the smallest such level wins outright.
    pub residual_floor: f64,
    pub seed: u64,
}

impl Default for SparseSolveParams {
    fn default() -> Self {
        Self { s_max: 8, cv_fraction: 0.3, trim_threshold: 0.01, max_sp_iters: 20, parsimony_slack: 0.05, residual_floor: 1e-5, seed: 0 }
    }
}

impl SparseSolveParams {
    pub fn validate(&self) -> Result<()> {
        if self.s_max == 0 {
            return Err(Error::InvalidParameter("s_max must be at least 1".into()));
        }
        if !(self.cv_fraction > 0.0 && self.cv_fraction < 1.0) {
            return Err(Error::InvalidParameter(alloc::format!("cv_fraction = {}", self.cv_fraction)));
        }
        if !(0.0..1.0).contains(&self.trim_threshold) {
            return Err(Error::InvalidParameter(alloc::format!("trim_threshold = {}", self.trim_threshold)));
        }
        if !(self.parsimony_slack >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("parsimony_slack = {}", self.parsimony_slack)));
        }
        if !(self.residual_floor >= 0.0) {
            return Err(Error::InvalidParameter(alloc::format!("residual_floor = {}", self.residual_floor)));
        }
        Ok(())
    }
}

/// Outcome of one subspace-pursuit run.
#[derive(Debug, Clone, PartialEq)]
pub struct PursuitResult {
    /// Selected columns, ascending.
    pub support: Vec<usize>,
    /// Coefficients aligned with `support`, in the scale of the input matrix.
    pub coefficients: Vec<f64>,
    pub residual_norm: f64,
    pub iterations: usize,
    pub rank_deficient: bool,
}

/// Columns eligible for selection: nonzero and not a (normalized) copy of an earlier column.
pub fn candidate_columns(a: &DMatrix<f64>) -> Vec<usize> {
    let norms: Vec<f64> = a.column_iter().map(|c| c.norm()).collect();
    let mut kept: Vec<usize> = Vec::new();
    for l in 0..a.ncols() {
        if norms[l] == 0.0 || !norms[l].is_finite() {
            continue;
        }
        let duplicate = kept.iter().any(|&k| {
            let mut diff_same = 0.0f64;
            let mut diff_flip = 0.0f64;
            for i in 0..a.nrows() {
                let x = a[(i, l)] / norms[l];
                let y = a[(i, k)] / norms[k];
                diff_same = diff_same.max((x - y).abs());
                diff_flip = diff_flip.max((x + y).abs());
            }
            diff_same.min(diff_flip) <= 1e-12
        });
        if !duplicate {
            kept.push(l);
        }
    }
    kept
}

// k best by descending score, ties to the lower index
fn top_k(scored: &mut [(usize, f64)], k: usize) -> Vec<usize> {
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out: Vec<usize> = scored.iter().take(k).map(|p| p.0).collect();
    out.sort_unstable();
    out
}

fn fit(a: &DMatrix<f64>, y: &DVector<f64>, rows: Option<&[usize]>, cols: &[usize]) -> RestrictedFit {
    least_squares(&linalg::select(a, rows, cols), &linalg::select_rows(y, rows))
}

/// Subspace pursuit for `min ‖A z - y‖` over supports of size `s`.
///
/// Correlations are ranked on column-normalized `A`; each iteration merges the
/// current support with the `s` columns most correlated with the residual,
/// and prunes the union back to `s` columns by backward elimination on the
/// restricted residual. Stops when the support repeats, the residual stops
/// decreasing, or after `max_iters` iterations; single-column swaps that
/// still lower the residual are then applied until none is left.
pub fn subspace_pursuit(a: &DMatrix<f64>, y: &DVector<f64>, s: usize, max_iters: usize) -> Result<PursuitResult> {
    subspace_pursuit_on(a, y, None, &candidate_columns(a), s, max_iters)
}

fn subspace_pursuit_on(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    rows: Option<&[usize]>,
    candidates: &[usize],
    s: usize,
    max_iters: usize,
) -> Result<PursuitResult> {
    let n_rows = rows.map_or(a.nrows(), <[usize]>::len);
    if s == 0 || s > candidates.len() || s > n_rows {
        return Err(Error::InvalidParameter(alloc::format!(
            "sparsity {s} with {} candidate columns and {n_rows} rows",
            candidates.len()
        )));
    }
    let sub = linalg::select(a, rows, candidates);
    let rhs = linalg::select_rows(y, rows);
    let norms: Vec<f64> = sub.column_iter().map(|c| c.norm()).collect();
    let correlations = |r: &DVector<f64>| -> Vec<f64> {
        (0..sub.ncols()).map(|j| sub.column(j).dot(r).abs() / norms[j]).collect()
    };
    let local_fit = |cols: &[usize]| least_squares(&linalg::select(&sub, None, cols), &rhs);

    let corr = correlations(&rhs);
    let mut support = top_k(&mut corr.iter().copied().enumerate().collect::<Vec<_>>(), s);
    let mut current = local_fit(&support);
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        let corr = correlations(&current.residual);
        let mut outside: Vec<(usize, f64)> =
            corr.iter().copied().enumerate().filter(|(j, _)| !support.contains(j)).collect();
        let mut merged = support.clone();
        merged.extend(top_k(&mut outside, s));
        merged.sort_unstable();
        let pruned = prune_backward(&local_fit, merged, s);
        if pruned == support {
            break;
        }
        let next = local_fit(&pruned);
        if next.residual_norm() >= current.residual_norm() {
            break;
        }
        support = pruned;
        current = next;
    }
    let (support, current) = refine_by_swaps(&local_fit, sub.ncols(), support, current);
    Ok(PursuitResult {
        support: support.iter().map(|&j| candidates[j]).collect(),
        coefficients: current.coefficients.clone(),
        residual_norm: current.residual_norm(),
        iterations,
        rank_deficient: current.rank_deficient,
    })
}

// Drops one column at a time, each time the one whose removal leaves the
// smallest restricted residual, until `s` remain.
fn prune_backward(fit: &impl Fn(&[usize]) -> RestrictedFit, mut set: Vec<usize>, s: usize) -> Vec<usize> {
    while set.len() > s {
        let mut best: Option<(usize, f64)> = None;
        for drop in (0..set.len()).rev() {
            let trial: Vec<usize> = set.iter().enumerate().filter(|(i, _)| *i != drop).map(|(_, &j)| j).collect();
            let r = fit(&trial).residual_norm();
            if best.is_none_or(|(_, b)| r < b) {
                best = Some((drop, r));
            }
        }
        let (drop, _) = best.expect("set is nonempty");
        set.remove(drop);
    }
    set
}

// Best-improvement local search: replaces one selected column by one outside
// column while that lowers the restricted residual.
fn refine_by_swaps(
    fit: &impl Fn(&[usize]) -> RestrictedFit,
    n_cols: usize,
    mut support: Vec<usize>,
    mut current: RestrictedFit,
) -> (Vec<usize>, RestrictedFit) {
    for _ in 0..4 * n_cols {
        let mut best: Option<(Vec<usize>, RestrictedFit)> = None;
        for slot in 0..support.len() {
            for j in (0..n_cols).filter(|j| !support.contains(j)) {
                let mut trial = support.clone();
                trial[slot] = j;
                trial.sort_unstable();
                let f = fit(&trial);
                let bar = best.as_ref().map_or(current.residual_norm(), |(_, b)| b.residual_norm());
                if f.residual_norm() < bar * (1.0 - 1e-12) {
                    best = Some((trial, f));
                }
            }
        }
        match best {
            Some((s, f)) => {
                support = s;
                current = f;
            }
            None => break,
        }
    }
    (support, current)
}

/// Per-solve diagnostics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SolveDiagnostics {
    /// Relative holdout residual for sparsity levels `1..`.
    pub holdout_residuals: Vec<f64>,
    pub selected_sparsity: usize,
    pub trimmed: Vec<usize>,
    pub rank_deficient: bool,
    /// Trimming removed every feature; coefficients are zero.
    pub empty_result: bool,
    /// Condition number of the rescaled matrix restricted to the final support.
    pub condition_number: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseSolution {
    pub coefficients: Coefficients,
    pub diagnostics: SolveDiagnostics,
}

/// Deterministic train/holdout split of `0..n` rows.
pub fn split_rows(n: usize, cv_fraction: f64, seed: u64) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in (1..n).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
    let n_ho = ((cv_fraction * n as f64).round() as usize).clamp(1, n.saturating_sub(1).max(1));
    let mut holdout = idx[..n_ho].to_vec();
    let mut train = idx[n_ho..].to_vec();
    holdout.sort_unstable();
    train.sort_unstable();
    (train, holdout)
}

fn relative_residual(a: &DMatrix<f64>, y: &DVector<f64>, rows: &[usize], cols: &[usize], z: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for &i in rows {
        let pred: f64 = cols.iter().zip(z).map(|(&l, c)| a[(i, l)] * c).sum();
        num += (pred - y[i]) * (pred - y[i]);
        den += y[i] * y[i];
    }
    if den > 0.0 {
        libm::sqrt(num / den)
    } else {
        libm::sqrt(num)
    }
}

/// Sparse solve of `A a ≈ y` with columns rescaled by `column_scale` (entries
/// that are zero or non-finite count as 1). Coefficients come back in the
/// original scale.
pub fn solve_sparse_matrix(
    a: &DMatrix<f64>,
    y: &DVector<f64>,
    column_scale: &[f64],
    params: &SparseSolveParams,
) -> Result<SparseSolution> {
    params.validate()?;
    let (h, l) = a.shape();
    if h < 2 {
        return Err(Error::InvalidParameter(alloc::format!("need at least 2 rows, got {h}")));
    }
    if column_scale.len() != l {
        return Err(Error::DimensionMismatch { expected: l, actual: column_scale.len() });
    }
    if y.len() != h {
        return Err(Error::DimensionMismatch { expected: h, actual: y.len() });
    }
    let scale: Vec<f64> =
        column_scale.iter().map(|&e| if e > 0.0 && e.is_finite() { e } else { 1.0 }).collect();
    let mut scaled = a.clone();
    for (j, s) in scale.iter().enumerate() {
        scaled.column_mut(j).scale_mut(1.0 / s);
    }

    let candidates = candidate_columns(&scaled);
    let (train, holdout) = split_rows(h, params.cv_fraction, params.seed);
    let s_cap = params.s_max.min(candidates.len()).min(train.len());
    let mut diagnostics = SolveDiagnostics::default();
    let mut supports = Vec::with_capacity(s_cap);
    for s in 1..=s_cap {
        let sp = subspace_pursuit_on(&scaled, y, Some(&train), &candidates, s, params.max_sp_iters)?;
        diagnostics.holdout_residuals.push(relative_residual(&scaled, y, &holdout, &sp.support, &sp.coefficients));
        supports.push(sp.support);
    }
    let mut coefficients = Coefficients::zeros(l);
    if supports.is_empty() {
        diagnostics.empty_result = true;
        return Ok(SparseSolution { coefficients, diagnostics });
    }
    let best = diagnostics.holdout_residuals.iter().copied().fold(f64::INFINITY, f64::min);
    let pick = diagnostics
        .holdout_residuals
        .iter()
        .position(|&r| r <= (best * (1.0 + params.parsimony_slack)).max(params.residual_floor))
        .unwrap_or(0);
    diagnostics.selected_sparsity = pick + 1;

    let mut support = supports.swap_remove(pick);
    let mut refit = fit(&scaled, y, None, &support);
    let col_norms: Vec<f64> = support.iter().map(|&j| scaled.column(j).norm()).collect();
    let contributions: Vec<f64> = refit.coefficients.iter().zip(&col_norms).map(|(c, n)| c.abs() * n).collect();
    let max_contribution = contributions.iter().copied().fold(0.0, f64::max);
    if max_contribution == 0.0 {
        diagnostics.trimmed = support;
        diagnostics.empty_result = true;
        return Ok(SparseSolution { coefficients, diagnostics });
    }
    let keep: Vec<usize> = support
        .iter()
        .zip(&contributions)
        .filter(|(_, &c)| c >= params.trim_threshold * max_contribution)
        .map(|(&j, _)| j)
        .collect();
    if keep.len() < support.len() {
        diagnostics.trimmed = support.iter().copied().filter(|j| !keep.contains(j)).collect();
        support = keep;
        refit = fit(&scaled, y, None, &support);
    }
    diagnostics.rank_deficient = refit.rank_deficient;
    diagnostics.condition_number = linalg::condition_number(&linalg::select(&scaled, None, &support));
    for (&j, &c) in support.iter().zip(&refit.coefficients) {
        coefficients.0[j] = c / scale[j];
    }
    if coefficients.support().is_empty() {
        diagnostics.empty_result = true;
    }
    Ok(SparseSolution { coefficients, diagnostics })
}

/// Sparse solve of a weak system, columns rescaled by `column_scale` (typically `e<l>`).
pub fn solve_sparse(sys: &WeakSystem, column_scale: &[f64], params: &SparseSolveParams) -> Result<SparseSolution> {
    solve_sparse_matrix(&sys.w, &sys.b, column_scale, params)
}
