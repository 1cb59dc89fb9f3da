//! Periodic Fourier transforms and the ETDRK4 integrator for `û_t = L û + N(û)`.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Complex FFT pair on `n` periodic points of a domain of length `length`.
pub(crate) struct Periodic1d {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Angular wavenumbers in FFT order; the Nyquist entry is positive.
    k: Vec<f64>,
}

impl Periodic1d {
    pub(crate) fn new(n: usize, length: f64) -> Self {
        let mut planner = FftPlanner::new();
        let k = (0..n).map(|j| 2.0 * PI / length * signed_index(j, n) as f64).collect();
        Self { n, forward: planner.plan_fft_forward(n), inverse: planner.plan_fft_inverse(n), k }
    }

    pub(crate) fn len(&self) -> usize {
        self.n
    }

    pub(crate) fn wavenumbers(&self) -> &[f64] {
        &self.k
    }

    /// `ik`, with the Nyquist mode zeroed so odd derivatives of real data stay real.
    pub(crate) fn ik(&self) -> Vec<Complex64> {
        self.k
            .iter()
            .enumerate()
            .map(|(j, &k)| if 2 * j == self.n { Complex64::new(0.0, 0.0) } else { Complex64::new(0.0, k) })
            .collect()
    }

    /// Two-thirds rule mask.
    pub(crate) fn dealias_mask(&self) -> Vec<f64> {
        (0..self.n)
            .map(|j| if 3 * signed_index(j, self.n).unsigned_abs() < self.n as u64 { 1.0 } else { 0.0 })
            .collect()
    }

    pub(crate) fn forward(&self, u: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = u.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    pub(crate) fn forward_in_place(&self, buf: &mut [Complex64]) {
        self.forward.process(buf);
    }

    pub(crate) fn inverse(&self, v: &[Complex64]) -> Vec<f64> {
        let mut buf = v.to_vec();
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.n as f64;
        buf.iter().map(|c| c.re * scale).collect()
    }

    pub(crate) fn inverse_in_place(&self, buf: &mut [Complex64]) {
        self.inverse.process(buf);
        let scale = 1.0 / self.n as f64;
        buf.iter_mut().for_each(|c| *c *= scale);
    }
}

pub(crate) fn signed_index(j: usize, n: usize) -> i64 {
    if 2 * j <= n {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

const CONTOUR_POINTS: usize = 64;

/// Per-mode ETDRK4 coefficients, evaluated by contour averaging so that
/// `hL → 0` does not cancel catastrophically.
pub(crate) struct Etdrk4 {
    e: Vec<Complex64>,
    e2: Vec<Complex64>,
    q: Vec<Complex64>,
    f1: Vec<Complex64>,
    f2: Vec<Complex64>,
    f3: Vec<Complex64>,
}

impl Etdrk4 {
    pub(crate) fn new(linear: &[Complex64], h: f64) -> Self {
        let n = linear.len();
        let mut s = Self {
            e: Vec::with_capacity(n),
            e2: Vec::with_capacity(n),
            q: Vec::with_capacity(n),
            f1: Vec::with_capacity(n),
            f2: Vec::with_capacity(n),
            f3: Vec::with_capacity(n),
        };
        let roots: Vec<Complex64> = (0..CONTOUR_POINTS)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.5) / CONTOUR_POINTS as f64))
            .collect();
        let m = CONTOUR_POINTS as f64;
        for &l in linear {
            let hl = l * h;
            s.e.push(hl.exp());
            s.e2.push((hl * 0.5).exp());
            let (mut q, mut f1, mut f2, mut f3) = Default::default();
            for &r in &roots {
                let z = hl + r;
                let ez = z.exp();
                let z3 = z * z * z;
                q += ((z * 0.5).exp() - 1.0) / z;
                f1 += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
                f2 += (2.0 + z + ez * (z - 2.0)) / z3;
                f3 += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
            }
            let finish = |v: Complex64| v * (h / m);
            s.q.push(finish(q));
            s.f1.push(finish(f1));
            s.f2.push(finish(f2));
            s.f3.push(finish(f3));
        }
        s
    }

    /// Advances `v` by one step; `nonlinear` maps a spectral state to `N(v)`.
    pub(crate) fn step(&self, v: &mut [Complex64], mut nonlinear: impl FnMut(&[Complex64]) -> Vec<Complex64>) {
        let nv = nonlinear(v);
        let a: Vec<Complex64> = (0..v.len()).map(|j| self.e2[j] * v[j] + self.q[j] * nv[j]).collect();
        let na = nonlinear(&a);
        let b: Vec<Complex64> = (0..v.len()).map(|j| self.e2[j] * v[j] + self.q[j] * na[j]).collect();
        let nb = nonlinear(&b);
        let c: Vec<Complex64> = (0..v.len())
            .map(|j| self.e2[j] * a[j] + self.q[j] * (2.0 * nb[j] - nv[j]))
            .collect();
        let nc = nonlinear(&c);
        for j in 0..v.len() {
            v[j] = self.e[j] * v[j] + nv[j] * self.f1[j] + 2.0 * (na[j] + nb[j]) * self.f2[j] + nc[j] * self.f3[j];
        }
    }
}
