//! Candidate terms `∂^α(u^β)` and coefficient bookkeeping.
//!
//! Term names follow a small LaTeX-like grammar used in every report:
//!
//! ```text
//! name      := base [ "_" subscript ]
//! base      := "1" | "u" | "u^" β          (β ≥ 2; wrapped as "(u^β)" when a subscript follows)
//! subscript := letters                    (one letter)
//!            | "{" letters "}"            (two or more)
//! letters   := "x"*α_x "y"*α_y "t"*γ
//! ```
//!
//! so `u_{xx}`, `(u^2)_x` and `(u^2)_t` are all valid names.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use crate::error::{Error, Result};

/// Derivative orders `(α_x, α_y)`, monomial power `β` and time order `γ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FeatureSpec {
    pub alpha: [usize; 2],
    pub beta: usize,
    pub gamma: usize,
}

impl FeatureSpec {
    pub const fn new(alpha_x: usize, beta: usize) -> Self {
        Self { alpha: [alpha_x, 0], beta, gamma: 0 }
    }

    pub const fn new_2d(alpha_x: usize, alpha_y: usize, beta: usize) -> Self {
        Self { alpha: [alpha_x, alpha_y], beta, gamma: 0 }
    }

    pub const fn with_time(mut self, gamma: usize) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn alpha_total(&self) -> usize {
        self.alpha[0] + self.alpha[1]
    }

    pub fn name(&self) -> String {
        let mut letters = String::new();
        for _ in 0..self.alpha[0] {
            letters.push('x');
        }
        for _ in 0..self.alpha[1] {
            letters.push('y');
        }
        for _ in 0..self.gamma {
            letters.push('t');
        }
        let base = match self.beta {
            0 => "1".to_string(),
            1 => "u".to_string(),
            b if letters.is_empty() => format!("u^{b}"),
            b => format!("(u^{b})"),
        };
        match letters.len() {
            0 => base,
            1 => format!("{base}_{letters}"),
            _ => format!("{base}_{{{letters}}}"),
        }
    }
}

impl fmt::Display for FeatureSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name())
    }
}

/// Ordered candidate terms with `γ = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureLibrary {
    features: Vec<FeatureSpec>,
    alpha_max: usize,
    beta_max: usize,
    spatial_dims: usize,
}

impl FeatureLibrary {
    /// Every `∂^α(u^β)` with `1 ≤ β ≤ beta_max` and `|α| ≤ alpha_max`.
    ///
    /// Ordered by `β`, then total order `|α|`, then decreasing `α_x`; the
    /// constant term (α = 0, β = 0) comes first when requested.
    pub fn build(alpha_max: usize, beta_max: usize, spatial_dims: usize, include_constant: bool) -> Result<Self> {
        if !(1..=2).contains(&spatial_dims) {
            return Err(Error::UnsupportedDimension(spatial_dims));
        }
        if beta_max == 0 {
            return Err(Error::InvalidParameter("beta_max must be at least 1".into()));
        }
        let mut features = Vec::new();
        if include_constant {
            features.push(FeatureSpec::new(0, 0));
        }
        for beta in 1..=beta_max {
            for order in 0..=alpha_max {
                if spatial_dims == 1 {
                    features.push(FeatureSpec::new(order, beta));
                } else {
                    for ay in 0..=order {
                        features.push(FeatureSpec::new_2d(order - ay, ay, beta));
                    }
                }
            }
        }
        Ok(Self { features, alpha_max, beta_max, spatial_dims })
    }

    /// Library used when none is configured: `ᾱ = β̄ = 6` in 1D, `ᾱ = 2, β̄ = 3` in 2D.
    pub fn default_for(spatial_dims: usize) -> Result<Self> {
        match spatial_dims {
            1 => Self::build(6, 6, 1, false),
            2 => Self::build(2, 3, 2, false),
            d => Err(Error::UnsupportedDimension(d)),
        }
    }

    pub fn features(&self) -> &[FeatureSpec] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    pub fn alpha_max(&self) -> usize {
        self.alpha_max
    }

    pub fn beta_max(&self) -> usize {
        self.beta_max
    }

    pub fn spatial_dims(&self) -> usize {
        self.spatial_dims
    }

    /// Largest derivative order along any single spatial axis.
    pub fn max_axis_order(&self) -> usize {
        self.features.iter().map(|f| f.alpha[0].max(f.alpha[1])).max().unwrap_or(0)
    }

    pub fn position(&self, feature: &FeatureSpec) -> Option<usize> {
        self.features.iter().position(|f| f == feature)
    }

    pub fn names(&self) -> Vec<String> {
        self.features.iter().map(FeatureSpec::name).collect()
    }
}

/// Coefficient vector aligned with a library.
#[derive(Debug, Clone, PartialEq)]
pub struct Coefficients(pub Vec<f64>);

impl Coefficients {
    pub fn zeros(len: usize) -> Self {
        Self(alloc::vec![0.0; len])
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    /// Indices of nonzero entries, ascending.
    pub fn support(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, v)| **v != 0.0).map(|(l, _)| l).collect()
    }

    /// Renders `u_t = c1 name1 + c2 name2 ...` with three decimals.
    pub fn format_equation(&self, library: &FeatureLibrary) -> String {
        let mut out = String::from("u_t =");
        let mut first = true;
        for (l, &c) in self.0.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let name = library.features()[l].name();
            if first {
                out.push_str(&format!(" {c:.3} {name}"));
            } else if c < 0.0 {
                out.push_str(&format!(" - {:.3} {name}", -c));
            } else {
                out.push_str(&format!(" + {c:.3} {name}"));
            }
            first = false;
        }
        if first {
            out.push_str(" 0");
        }
        out
    }
}

/// Benchmark equations with known right-hand sides.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EquationId {
    Heat,
    Transport,
    TransportDiffusion,
    Burgers,
    BurgersDiffusion,
    Kdv,
    Ks,
    Pm2d,
}

impl EquationId {
    pub const ALL: [EquationId; 8] = [
        EquationId::Heat,
        EquationId::Transport,
        EquationId::TransportDiffusion,
        EquationId::Burgers,
        EquationId::BurgersDiffusion,
        EquationId::Kdv,
        EquationId::Ks,
        EquationId::Pm2d,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            EquationId::Heat => "heat",
            EquationId::Transport => "transport",
            EquationId::TransportDiffusion => "transport_diffusion",
            EquationId::Burgers => "burgers",
            EquationId::BurgersDiffusion => "burgers_diffusion",
            EquationId::Kdv => "kdv",
            EquationId::Ks => "ks",
            EquationId::Pm2d => "pm2d",
        }
    }

    pub fn spatial_dims(&self) -> usize {
        match self {
            EquationId::Pm2d => 2,
            _ => 1,
        }
    }

    /// Right-hand side terms. Advective `u u_x` appears in divergence form as `0.5 (u^2)_x`.
    pub fn terms(&self) -> Vec<(FeatureSpec, f64)> {
        let u = |a| FeatureSpec::new(a, 1);
        let u2 = |a| FeatureSpec::new(a, 2);
        match self {
            EquationId::Heat => alloc::vec![(u(2), 0.1592)],
            EquationId::Transport => alloc::vec![(u(1), -1.0)],
            EquationId::TransportDiffusion => alloc::vec![(u(1), -10.0), (u(2), 1.0)],
            EquationId::Burgers => alloc::vec![(u2(1), -0.5)],
            EquationId::BurgersDiffusion => alloc::vec![(u2(1), -0.5), (u(2), 0.2)],
            EquationId::Kdv => alloc::vec![(u(3), -1.0), (u2(1), -0.5)],
            EquationId::Ks => alloc::vec![(u2(1), -0.5), (u(2), -1.0), (u(4), -1.0)],
            EquationId::Pm2d => alloc::vec![
                (FeatureSpec::new_2d(0, 2, 1), 0.3),
                (FeatureSpec::new_2d(1, 1, 1), -0.8),
                (FeatureSpec::new_2d(2, 0, 1), 1.0),
            ],
        }
    }

    /// Ground-truth coefficients expressed in `library` coordinates.
    pub fn true_coefficients(&self, library: &FeatureLibrary) -> Result<Coefficients> {
        if library.spatial_dims() != self.spatial_dims() {
            return Err(Error::DimensionMismatch { expected: self.spatial_dims(), actual: library.spatial_dims() });
        }
        let mut a = Coefficients::zeros(library.len());
        for (feature, c) in self.terms() {
            let l = library.position(&feature).ok_or_else(|| Error::MissingFeature(feature.name()))?;
            a.0[l] = c;
        }
        Ok(a)
    }
}

impl fmt::Display for EquationId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for EquationId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        EquationId::ALL
            .iter()
            .copied()
            .find(|e| e.as_str() == s)
            .ok_or_else(|| Error::UnsupportedEquation(s.to_string()))
    }
}
