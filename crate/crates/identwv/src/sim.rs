//! Clean benchmark trajectories on periodic domains.
//!
//! Every equation is solved on an oversampled Fourier grid and subsampled to
//! the observation grid. Linear 1D equations are advanced by their exact
//! Fourier exponential, nonlinear 1D equations by ETDRK4 with two-thirds
//! dealiasing, and the 2D porous-medium problem by classical RK4 on the
//! Fourier modes with a step checked against the RK4 stability interval.
//!
//! Defaults per equation (`SimulationSpec::default_for`):
//!
//! | equation              | domain          | T        | n_x × n_t  |
//! |-----------------------|-----------------|----------|------------|
//! | `heat`                | [0, 1]          | 0.05     | 256 × 256  |
//! | `transport`           | [0, 2]          | 1        | 256 × 128  |
//! | `transport_diffusion` | [0, 3]          | 0.03     | 384 × 256  |
//! | `burgers`             | [0, 2]          | 1/(200ωπ)| 256 × 256  |
//! | `burgers_diffusion`   | [0, 2]          | 0.001    | 256 × 256  |
//! | `kdv`                 | [-π, π]         | 0.006    | 512 × 1000 |
//! | `ks`                  | [0, 32π]        | 150      | 256 × 300  |
//! | `pm2d`                | [-5, 5]²        | 0.5      | 64² × 100  |

use std::f64::consts::PI;

use identwv_core::{Axis, Dataset, EquationId, FeatureSpec, Grid};
use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Etdrk4, Periodic1d};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationSpec {
    pub equation: EquationId,
    /// Initial-condition frequency; ignored by `kdv`, `ks` and `pm2d`.
    pub omega: f64,
    pub x_range: (f64, f64),
    /// Second spatial axis, `pm2d` only.
    pub y_range: Option<(f64, f64)>,
    pub t_max: f64,
    pub n_x: usize,
    /// Cells along y, `pm2d` only.
    pub n_y: usize,
    pub n_t: usize,
    /// Fine cells per observed cell.
    pub oversample_x: usize,
    /// Fine steps per observed time interval.
    pub oversample_t: usize,
}

impl SimulationSpec {
    pub fn default_for(equation: EquationId) -> Self {
        let base = Self {
            equation,
            omega: 2.0,
            x_range: (0.0, 1.0),
            y_range: None,
            t_max: 1.0,
            n_x: 256,
            n_y: 0,
            n_t: 256,
            oversample_x: 2,
            oversample_t: 1,
        };
        match equation {
            EquationId::Heat => Self { t_max: 0.05, ..base },
            EquationId::Transport => Self { x_range: (0.0, 2.0), n_t: 128, oversample_x: 1, ..base },
            EquationId::TransportDiffusion => Self { x_range: (0.0, 3.0), t_max: 0.03, n_x: 384, ..base },
            EquationId::Burgers => Self {
                x_range: (0.0, 2.0),
                t_max: 1.0 / (200.0 * 2.0 * PI),
                oversample_x: 4,
                oversample_t: 2,
                ..base
            },
            EquationId::BurgersDiffusion => Self {
                x_range: (0.0, 2.0),
                t_max: 0.001,
                oversample_x: 8,
                oversample_t: 4,
                ..base
            },
            EquationId::Kdv => Self {
                omega: 0.0,
                x_range: (-PI, PI),
                t_max: 0.006,
                n_x: 512,
                n_t: 1000,
                oversample_x: 2,
                oversample_t: 4,
                ..base
            },
            EquationId::Ks => Self {
                omega: 0.0,
                x_range: (0.0, 32.0 * PI),
                t_max: 150.0,
                n_t: 300,
                oversample_x: 2,
                oversample_t: 8,
                ..base
            },
            EquationId::Pm2d => Self {
                equation,
                omega: 0.0,
                x_range: (-5.0, 5.0),
                y_range: Some((-5.0, 5.0)),
                t_max: 0.5,
                n_x: 64,
                n_y: 64,
                n_t: 100,
                oversample_x: 2,
                oversample_t: 8,
            },
        }
    }

    /// Same spec with the Burgers final time tied to `omega` (half the shock time).
    pub fn with_omega(mut self, omega: f64) -> Self {
        self.omega = omega;
        if self.equation == EquationId::Burgers && omega > 0.0 {
            self.t_max = 1.0 / (200.0 * omega * PI);
        }
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.oversample_x == 0 || self.oversample_t == 0 {
            return bad("oversampling factors must be at least 1");
        }
        if self.n_x < 4 || self.n_t == 0 {
            return bad("grid too small");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive");
        }
        if !(self.x_range.1 > self.x_range.0) {
            return bad("x_range must be increasing");
        }
        if self.equation.spatial_dims() == 2 {
            match self.y_range {
                Some((a, b)) if b > a && self.n_y >= 4 => {}
                _ => return bad("pm2d needs y_range and n_y >= 4"),
            }
        }
        let uses_omega = !matches!(self.equation, EquationId::Kdv | EquationId::Ks | EquationId::Pm2d);
        if uses_omega && !(self.omega > 0.0) {
            return bad("omega must be positive for this equation");
        }
        Ok(())
    }

    /// Observation grid.
    pub fn grid(&self) -> Result<Grid> {
        let mut space = vec![Axis::new(self.x_range.0, self.x_range.1, self.n_x)?];
        if let Some((a, b)) = self.y_range.filter(|_| self.equation.spatial_dims() == 2) {
            space.push(Axis::new(a, b, self.n_y)?);
        }
        Ok(Grid::new(space, self.t_max, self.n_t)?)
    }

    /// Key/value echo of every field, in a fixed order.
    pub fn metadata(&self) -> Vec<(String, String)> {
        let mut m = vec![
            ("equation".to_string(), self.equation.to_string()),
            ("omega".to_string(), fmt_f64(self.omega)),
            ("x_min".to_string(), fmt_f64(self.x_range.0)),
            ("x_max".to_string(), fmt_f64(self.x_range.1)),
        ];
        if let Some((a, b)) = self.y_range {
            m.push(("y_min".to_string(), fmt_f64(a)));
            m.push(("y_max".to_string(), fmt_f64(b)));
            m.push(("n_y".to_string(), self.n_y.to_string()));
        }
        m.extend([
            ("t_max".to_string(), fmt_f64(self.t_max)),
            ("n_x".to_string(), self.n_x.to_string()),
            ("n_t".to_string(), self.n_t.to_string()),
            ("oversample_x".to_string(), self.oversample_x.to_string()),
            ("oversample_t".to_string(), self.oversample_t.to_string()),
        ]);
        m
    }
}

fn fmt_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Initial condition of `equation` at `(x, y)` (`y` ignored in 1D).
pub fn initial_value(equation: EquationId, omega: f64, x: f64, y: f64) -> f64 {
    let inside = |a: f64, b: f64| (a..=b).contains(&x);
    match equation {
        EquationId::Heat => (omega * PI * x).sin().powi(2),
        EquationId::Transport => {
            if inside(0.0, 0.7) {
                (omega * PI * x / 0.7).sin().powi(2)
            } else {
                0.0
            }
        }
        EquationId::TransportDiffusion => {
            if inside(1.0, 2.0) {
                (omega * PI * (x - 1.0)).sin().powi(3)
            } else {
                0.0
            }
        }
        EquationId::Burgers => 100.0 * (omega * PI * x).sin(),
        EquationId::BurgersDiffusion => {
            if inside(0.5, 1.5) {
                100.0 * (omega * PI * (x - 0.5)).sin()
            } else {
                0.0
            }
        }
        EquationId::Kdv => {
            let sech2 = |z: f64| 1.0 / z.cosh().powi(2);
            3.0 * 625.0 * sech2(0.5 * 25.0 * (x + 2.0)) + 3.0 * 256.0 * sech2(0.5 * 16.0 * (x + 1.0))
        }
        EquationId::Ks => (x / 16.0).cos() * (1.0 + (x / 16.0).sin()),
        EquationId::Pm2d => (-0.26786 * x * x - 0.71429 * x * y - 0.89286 * y * y + 0.4611).max(0.0),
    }
}

/// Initial condition sampled on a 1D grid.
pub fn initial_condition(equation: EquationId, omega: f64, x: &[f64]) -> Vec<f64> {
    x.iter().map(|&x| initial_value(equation, omega, x, 0.0)).collect()
}

/// Simulates `spec` from its documented initial condition.
pub fn simulate(spec: &SimulationSpec) -> Result<Dataset> {
    let (eq, omega) = (spec.equation, spec.omega);
    simulate_from(spec, |x, y| initial_value(eq, omega, x, y))
}

/// Simulates `spec` from a caller-supplied initial condition `u0(x, y)`.
pub fn simulate_from(spec: &SimulationSpec, u0: impl Fn(f64, f64) -> f64) -> Result<Dataset> {
    spec.validate()?;
    let grid = spec.grid()?;
    let values = match spec.equation {
        EquationId::Pm2d => solve_linear_2d(spec, &u0)?,
        EquationId::Heat | EquationId::Transport | EquationId::TransportDiffusion => solve_linear_1d(spec, &u0),
        _ => solve_nonlinear_1d(spec, &u0)?,
    };
    Ok(Dataset::with_clean(grid, values.clone(), values)?)
}

fn fine_points(range: (f64, f64), n: usize) -> Vec<f64> {
    let dx = (range.1 - range.0) / n as f64;
    (0..n).map(|j| range.0 + j as f64 * dx).collect()
}

/// Appends the periodic copy of fine point 0 after every `stride`-th point.
fn push_observed(out: &mut Vec<f64>, fine: &[f64], stride: usize) {
    out.extend(fine.iter().step_by(stride));
    out.push(fine[0]);
}

/// `Σ c (ik)^α` over the linear (`β = 1`) terms.
fn linear_symbol(equation: EquationId, ik: &[Complex64]) -> Vec<Complex64> {
    let mut l = vec![Complex64::new(0.0, 0.0); ik.len()];
    for (f, c) in equation.terms().into_iter().filter(|(f, _)| f.beta == 1) {
        for (lj, k) in l.iter_mut().zip(ik) {
            *lj += c * k.powu(f.alpha[0] as u32);
        }
    }
    l
}

fn solve_linear_1d(spec: &SimulationSpec, u0: &impl Fn(f64, f64) -> f64) -> Vec<f64> {
    let n = spec.n_x * spec.oversample_x;
    let length = spec.x_range.1 - spec.x_range.0;
    let fft = Periodic1d::new(n, length);
    let x = fine_points(spec.x_range, n);
    let v0 = fft.forward(&x.iter().map(|&x| u0(x, 0.0)).collect::<Vec<_>>());
    // Full wavenumbers, Nyquist included, so grid-aligned shifts are exact.
    let ik: Vec<Complex64> = fft.wavenumbers().iter().map(|&k| Complex64::new(0.0, k)).collect();
    let symbol = linear_symbol(spec.equation, &ik);
    let dt = spec.t_max / spec.n_t as f64;
    let mut out = Vec::with_capacity((spec.n_t + 1) * (spec.n_x + 1));
    for step in 0..=spec.n_t {
        let t = step as f64 * dt;
        let v: Vec<Complex64> = v0.iter().zip(&symbol).map(|(v, l)| v * (l * t).exp()).collect();
        push_observed(&mut out, &fft.inverse(&v), spec.oversample_x);
    }
    out
}

/// RK4 imaginary-axis stability bound with a margin.
const ADVECTIVE_LIMIT: f64 = 2.5;
/// RK4 real-axis stability bound.
const DIFFUSIVE_LIMIT: f64 = 2.78;

fn solve_nonlinear_1d(spec: &SimulationSpec, u0: &impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
    let n = spec.n_x * spec.oversample_x;
    let length = spec.x_range.1 - spec.x_range.0;
    let fft = Periodic1d::new(n, length);
    let x = fine_points(spec.x_range, n);
    let ik = fft.ik();
    let mask = fft.dealias_mask();
    let k_max = fft
        .wavenumbers()
        .iter()
        .zip(&mask)
        .filter(|(_, &m)| m > 0.0)
        .map(|(k, _)| k.abs())
        .fold(0.0, f64::max);
    let nonlinear_terms: Vec<(FeatureSpec, f64)> =
        spec.equation.terms().into_iter().filter(|(f, _)| f.beta >= 2).collect();
    let h = spec.t_max / (spec.n_t * spec.oversample_t) as f64;
    let integrator = Etdrk4::new(&linear_symbol(spec.equation, &ik), h);

    let mut v = fft.forward(&x.iter().map(|&x| u0(x, 0.0)).collect::<Vec<_>>());
    v[n / 2] = Complex64::new(0.0, 0.0);
    let nonlinear = |w: &[Complex64]| -> Vec<Complex64> {
        let mut phys = w.to_vec();
        fft.inverse_in_place(&mut phys);
        let mut out = vec![Complex64::new(0.0, 0.0); n];
        for (f, c) in &nonlinear_terms {
            let mut p: Vec<Complex64> = phys.iter().map(|u| Complex64::new(u.re.powi(f.beta as i32), 0.0)).collect();
            fft.forward_in_place(&mut p);
            for j in 0..n {
                out[j] += *c * ik[j].powu(f.alpha[0] as u32) * p[j] * mask[j];
            }
        }
        out
    };
    let audit = |u: &[f64], t: f64| -> Result<()> {
        let umax = u.iter().map(|v| v.abs()).fold(0.0, f64::max);
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::UnstableStep(format!("non-finite state at t = {t}")));
        }
        let speed: f64 = nonlinear_terms
            .iter()
            .map(|(f, c)| c.abs() * f.beta as f64 * umax.powi(f.beta as i32 - 1))
            .sum();
        let cfl = h * k_max * speed;
        if cfl > ADVECTIVE_LIMIT {
            return Err(Error::UnstableStep(format!(
                "advective number {cfl:.3} exceeds {ADVECTIVE_LIMIT} at t = {t}; raise oversample_t"
            )));
        }
        Ok(())
    };

    let mut out = Vec::with_capacity((spec.n_t + 1) * (spec.n_x + 1));
    let u_init: Vec<f64> = x.iter().map(|&x| u0(x, 0.0)).collect();
    audit(&u_init, 0.0)?;
    push_observed(&mut out, &u_init, spec.oversample_x);
    for step in 1..=spec.n_t {
        for _ in 0..spec.oversample_t {
            integrator.step(&mut v, nonlinear);
        }
        let u = fft.inverse(&v);
        audit(&u, step as f64 * spec.t_max / spec.n_t as f64)?;
        push_observed(&mut out, &u, spec.oversample_x);
    }
    Ok(out)
}

fn solve_linear_2d(spec: &SimulationSpec, u0: &impl Fn(f64, f64) -> f64) -> Result<Vec<f64>> {
    let y_range = spec.y_range.ok_or_else(|| Error::Config("pm2d needs y_range".into()))?;
    let (nx, ny) = (spec.n_x * spec.oversample_x, spec.n_y * spec.oversample_x);
    let fx = Periodic1d::new(nx, spec.x_range.1 - spec.x_range.0);
    let fy = Periodic1d::new(ny, y_range.1 - y_range.0);
    let (xs, ys) = (fine_points(spec.x_range, nx), fine_points(y_range, ny));
    let (ikx, iky) = (fx.ik(), fy.ik());
    let terms = spec.equation.terms();
    if terms.iter().any(|(f, _)| f.beta != 1) {
        return Err(Error::UnsupportedEquation(spec.equation.to_string()));
    }
    // Row-major fine field, index j * nx + i.
    let mut symbol = vec![Complex64::new(0.0, 0.0); nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            for (f, c) in &terms {
                symbol[j * nx + i] += *c * ikx[i].powu(f.alpha[0] as u32) * iky[j].powu(f.alpha[1] as u32);
            }
        }
    }
    let h = spec.t_max / (spec.n_t * spec.oversample_t) as f64;
    let stiffness = symbol.iter().map(|l| l.norm()).fold(0.0, f64::max) * h;
    if stiffness > DIFFUSIVE_LIMIT {
        return Err(Error::UnstableStep(format!(
            "h |L| = {stiffness:.3} exceeds {DIFFUSIVE_LIMIT}; raise oversample_t"
        )));
    }
    let amplification: Vec<Complex64> = symbol
        .iter()
        .map(|l| {
            let z = l * h;
            1.0 + z + z * z / 2.0 + z * z * z / 6.0 + z * z * z * z / 24.0
        })
        .collect();

    let mut field: Vec<Complex64> = Vec::with_capacity(nx * ny);
    for &y in &ys {
        field.extend(xs.iter().map(|&x| Complex64::new(u0(x, y), 0.0)));
    }
    let u_init: Vec<f64> = field.iter().map(|c| c.re).collect();
    transform_2d(&mut field, &fx, &fy, true);

    let mut out = Vec::with_capacity((spec.n_t + 1) * (spec.n_x + 1) * (spec.n_y + 1));
    push_observed_2d(&mut out, &u_init, nx, ny, spec.oversample_x);
    for _ in 1..=spec.n_t {
        for _ in 0..spec.oversample_t {
            field.iter_mut().zip(&amplification).for_each(|(v, a)| *v *= a);
        }
        let mut phys = field.clone();
        transform_2d(&mut phys, &fx, &fy, false);
        let u: Vec<f64> = phys.iter().map(|c| c.re).collect();
        if !u.iter().all(|v| v.is_finite()) {
            return Err(Error::UnstableStep("non-finite state".into()));
        }
        push_observed_2d(&mut out, &u, nx, ny, spec.oversample_x);
    }
    Ok(out)
}

fn transform_2d(field: &mut [Complex64], fx: &Periodic1d, fy: &Periodic1d, forward: bool) {
    let (nx, ny) = (fx.len(), fy.len());
    for row in field.chunks_mut(nx) {
        if forward {
            fx.forward_in_place(row);
        } else {
            fx.inverse_in_place(row);
        }
    }
    let mut col = vec![Complex64::new(0.0, 0.0); ny];
    for i in 0..nx {
        for j in 0..ny {
            col[j] = field[j * nx + i];
        }
        if forward {
            fy.forward_in_place(&mut col);
        } else {
            fy.inverse_in_place(&mut col);
        }
        for j in 0..ny {
            field[j * nx + i] = col[j];
        }
    }
}

fn push_observed_2d(out: &mut Vec<f64>, fine: &[f64], nx: usize, ny: usize, stride: usize) {
    let rows: Vec<usize> = (0..ny).step_by(stride).chain(std::iter::once(0)).collect();
    for j in rows {
        push_observed(out, &fine[j * nx..(j + 1) * nx], stride);
    }
}
