//! Optional overrides shared by the CLI flags and the bench config file.
//!
//! Every `None` resolves to the library default; `*_entries` echo the
//! resolved values for manifests and result files.

use identwv_core::{EquationId, FeatureLibrary, Grid, SparseSolveParams, TestFunctionConfig, VotingConfig};
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::io::{fmt_f64, Metadata};
use crate::sim::SimulationSpec;

fn kv(k: &str, v: impl ToString) -> (String, String) {
    (k.to_string(), v.to_string())
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationOptions {
    pub omega: Option<f64>,
    pub t_max: Option<f64>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub y_min: Option<f64>,
    pub y_max: Option<f64>,
    pub n_x: Option<usize>,
    pub n_y: Option<usize>,
    pub n_t: Option<usize>,
    pub oversample_x: Option<usize>,
    pub oversample_t: Option<usize>,
}

impl SimulationOptions {
    pub fn resolve(&self, equation: EquationId) -> Result<SimulationSpec> {
        let mut spec = SimulationSpec::default_for(equation);
        if let Some(w) = self.omega {
            spec = spec.with_omega(w);
        }
        let set = |slot: &mut f64, v: Option<f64>| {
            if let Some(v) = v {
                *slot = v;
            }
        };
        set(&mut spec.t_max, self.t_max);
        set(&mut spec.x_range.0, self.x_min);
        set(&mut spec.x_range.1, self.x_max);
        if let Some((a, b)) = spec.y_range.as_mut() {
            set(a, self.y_min);
            set(b, self.y_max);
        }
        spec.n_x = self.n_x.unwrap_or(spec.n_x);
        spec.n_y = self.n_y.unwrap_or(spec.n_y);
        spec.n_t = self.n_t.unwrap_or(spec.n_t);
        spec.oversample_x = self.oversample_x.unwrap_or(spec.oversample_x);
        spec.oversample_t = self.oversample_t.unwrap_or(spec.oversample_t);
        spec.validate()?;
        Ok(spec)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LibraryOptions {
    pub alpha_max: Option<usize>,
    pub beta_max: Option<usize>,
    pub include_constant: Option<bool>,
}

impl LibraryOptions {
    pub fn resolve(&self, spatial_dims: usize) -> Result<FeatureLibrary> {
        let default = FeatureLibrary::default_for(spatial_dims)?;
        Ok(FeatureLibrary::build(
            self.alpha_max.unwrap_or(default.alpha_max()),
            self.beta_max.unwrap_or(default.beta_max()),
            spatial_dims,
            self.include_constant.unwrap_or(false),
        )?)
    }
}

pub fn library_entries(library: &FeatureLibrary) -> Metadata {
    vec![
        kv("library.alpha_max", library.alpha_max()),
        kv("library.beta_max", library.beta_max()),
        kv("library.include_constant", library.features().first().is_some_and(|f| f.beta == 0)),
        kv("library.size", library.len()),
        kv("library.features", library.names().join(",")),
    ]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestFunctionOptions {
    pub halfwidth_x: Option<usize>,
    pub halfwidth_t: Option<usize>,
    pub stride_x: Option<usize>,
    pub stride_t: Option<usize>,
    pub order_x: Option<usize>,
    pub order_t: Option<usize>,
}

impl TestFunctionOptions {
    pub fn config(&self) -> TestFunctionConfig {
        TestFunctionConfig {
            halfwidth_x: self.halfwidth_x,
            halfwidth_t: self.halfwidth_t,
            stride_x: self.stride_x,
            stride_t: self.stride_t,
            order_x: self.order_x,
            order_t: self.order_t,
        }
    }

    pub fn entries(&self, grid: &Grid, library: &FeatureLibrary) -> Metadata {
        let p = self.config().resolve(grid, library);
        vec![
            kv("tf.halfwidth_x", p.halfwidth_x),
            kv("tf.halfwidth_t", p.halfwidth_t),
            kv("tf.stride_x", p.stride_x),
            kv("tf.stride_t", p.stride_t),
            kv("tf.order_x", p.order_x),
            kv("tf.order_t", p.order_t),
        ]
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverOptions {
    pub s_max: Option<usize>,
    pub cv_fraction: Option<f64>,
    pub trim_threshold: Option<f64>,
    pub max_sp_iters: Option<usize>,
    pub parsimony_slack: Option<f64>,
    pub residual_floor: Option<f64>,
    pub seed: Option<u64>,
}

impl SolverOptions {
    pub fn resolve(&self) -> Result<SparseSolveParams> {
        let d = SparseSolveParams::default();
        let p = SparseSolveParams {
            s_max: self.s_max.unwrap_or(d.s_max),
            cv_fraction: self.cv_fraction.unwrap_or(d.cv_fraction),
            trim_threshold: self.trim_threshold.unwrap_or(d.trim_threshold),
            max_sp_iters: self.max_sp_iters.unwrap_or(d.max_sp_iters),
            parsimony_slack: self.parsimony_slack.unwrap_or(d.parsimony_slack),
            residual_floor: self.residual_floor.unwrap_or(d.residual_floor),
            seed: self.seed.unwrap_or(d.seed),
        };
        p.validate()?;
        Ok(p)
    }
}

pub fn solver_entries(p: &SparseSolveParams) -> Metadata {
    vec![
        kv("solver.s_max", p.s_max),
        kv("solver.cv_fraction", fmt_f64(p.cv_fraction)),
        kv("solver.trim_threshold", fmt_f64(p.trim_threshold)),
        kv("solver.max_sp_iters", p.max_sp_iters),
        kv("solver.parsimony_slack", fmt_f64(p.parsimony_slack)),
        kv("solver.residual_floor", fmt_f64(p.residual_floor)),
        kv("solver.seed", p.seed),
    ]
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VotingOptions {
    pub rho: Option<f64>,
    pub v: Option<f64>,
}

impl VotingOptions {
    pub fn resolve(&self) -> Result<VotingConfig> {
        let d = VotingConfig::default();
        let c = VotingConfig { rho: self.rho.unwrap_or(d.rho), v: self.v.unwrap_or(d.v) };
        c.validate()?;
        Ok(c)
    }
}

pub fn voting_entries(c: &VotingConfig) -> Metadata {
    vec![kv("voting.rho", fmt_f64(c.rho)), kv("voting.v", fmt_f64(c.v)), kv("voting.indicators", "normalized")]
}

/// Which reference set drives the weighted solves.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// The default reference set for the dimension.
    #[default]
    IdentWv,
    /// The single uniform reference `u` (unweighted ablation).
    Uniform,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::IdentWv => "ident_wv",
            Method::Uniform => "uniform",
        }
    }

    pub fn references(&self, spatial_dims: usize) -> Result<Vec<identwv_core::ReferenceFeature>> {
        Ok(match self {
            Method::IdentWv => identwv_core::default_reference_set(spatial_dims)?,
            Method::Uniform => identwv_core::uniform_reference_set(),
        })
    }
}

pub fn parse_equation(s: &str) -> Result<EquationId> {
    s.parse().map_err(|_| Error::UnsupportedEquation(s.to_string()))
}
