//! The half-Laplacian `(-d^2/dx^2)^(1/2)` on a truncated line.
//!
//! Two independent evaluations are provided. [`HalfLaplacianOperator`] applies
//! the Fourier multiplier `|k|` on a zero-padded lattice; [`apply_quadrature`]
//! evaluates the principal-value integral
//!
//! ```text
//! v(x) = (1/pi) p.v. int (u(x) - u(y)) / (x - y)^2 dy
//! ```
//!
//! directly. Outside the grid `u` is continued by its end values, which for
//! `u = sin(theta) - h` is zero up to the boundary slack.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::Grid;

/// Transform length is the next power of two at or above this many grid lengths.
pub const PAD_FACTOR: usize = 8;

/// Zero-padded periodic lattice shared by the spectral operators.
#[derive(Clone)]
pub(crate) struct PaddedLattice {
    n: usize,
    dx: f64,
    len: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for PaddedLattice {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PaddedLattice")
            .field("n", &self.n)
            .field("dx", &self.dx)
            .field("len", &self.len)
            .finish()
    }
}

impl PaddedLattice {
    pub(crate) fn new(grid: &Grid, min_factor: usize) -> Self {
        let len = (min_factor * grid.len()).next_power_of_two();
        let mut planner = FftPlanner::new();
        Self {
            n: grid.len(),
            dx: grid.spacing(),
            len,
            forward: planner.plan_fft_forward(len),
            inverse: planner.plan_fft_inverse(len),
        }
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    /// Angular wave number of lattice mode `j`, in `(-pi/dx, pi/dx]`.
    pub(crate) fn wavenumber(&self, j: usize) -> f64 {
        let p = self.len as f64;
        let jj = if j <= self.len / 2 {
            j as f64
        } else {
            j as f64 - p
        };
        2.0 * PI * jj / (p * self.dx)
    }

    pub(crate) fn forward(&self, samples: &[f64]) -> Vec<Complex<f64>> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.len];
        for (b, s) in buf.iter_mut().zip(samples) {
            b.re = *s;
        }
        self.forward.process(&mut buf);
        buf
    }

    /// Inverse transform including the `1/len` normalization; real parts.
    pub(crate) fn inverse(&self, mut spectrum: Vec<Complex<f64>>, keep: usize) -> Vec<f64> {
        self.inverse.process(&mut spectrum);
        let scale = 1.0 / self.len as f64;
        spectrum[..keep].iter().map(|c| c.re * scale).collect()
    }

    /// Multiplies `samples` (zero beyond their length) by a real even symbol
    /// and restricts the result to the first `keep` lattice points.
    pub(crate) fn apply_symbol(&self, samples: &[f64], symbol: &[f64], keep: usize) -> Vec<f64> {
        let mut spec = self.forward(samples);
        for (c, s) in spec.iter_mut().zip(symbol) {
            *c *= *s;
        }
        self.inverse(spec, keep)
    }
}

/// Spectral half-Laplacian on a grid.
#[derive(Debug, Clone)]
pub struct HalfLaplacianOperator {
    grid: Grid,
    lattice: PaddedLattice,
    multipliers: Vec<f64>,
    tail_tol: f64,
}

impl HalfLaplacianOperator {
    pub const DEFAULT_TAIL_TOL: f64 = 1e-2;

    pub fn new(grid: &Grid) -> Self {
        let lattice = PaddedLattice::new(grid, PAD_FACTOR);
        let multipliers = (0..lattice.len())
            .map(|j| lattice.wavenumber(j).abs())
            .collect();
        Self {
            grid: grid.clone(),
            lattice,
            multipliers,
            tail_tol: Self::DEFAULT_TAIL_TOL,
        }
    }

    pub fn with_tail_tol(mut self, tol: f64) -> Self {
        self.tail_tol = tol;
        self
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn padded_len(&self) -> usize {
        self.lattice.len()
    }

    pub fn multipliers(&self) -> &[f64] {
        &self.multipliers
    }

    pub fn tail_tol(&self) -> f64 {
        self.tail_tol
    }

    /// Signed wave numbers and multipliers as two-column text.
    pub fn dump_multipliers(&self) -> String {
        let k: Vec<f64> = (0..self.padded_len())
            .map(|j| self.lattice.wavenumber(j))
            .collect();
        crate::io::two_columns(&k, &self.multipliers)
    }

    fn check(&self, u: &[f64]) -> Result<f64> {
        let n = self.grid.len();
        if u.len() != n {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {n} nodes",
                u.len()
            )));
        }
        let (left, right) = (u[0], u[n - 1]);
        let level = 0.5 * (left + right);
        // Only the end values relative to their common level matter: a
        // constant is annihilated, a rotation left in `u` is not.
        if (left - level).abs() > self.tail_tol || !level.is_finite() {
            return Err(Error::TailTooLarge {
                left,
                right,
                tol: self.tail_tol,
            });
        }
        Ok(level)
    }

    fn centred(u: &[f64], level: f64) -> Vec<f64> {
        u.iter().map(|v| v - level).collect()
    }

    /// `(-d^2/dx^2)^(1/2) u` on the grid nodes.
    pub fn apply_spectral(&self, u: &[f64]) -> Result<Vec<f64>> {
        let level = self.check(u)?;
        Ok(self
            .lattice
            .apply_symbol(&Self::centred(u, level), &self.multipliers, u.len()))
    }

    /// Applies the multiplier to a full periodic lattice signal, no padding.
    pub fn apply_periodic(&self, samples: &[f64]) -> Result<Vec<f64>> {
        if samples.len() != self.padded_len() {
            return Err(Error::InvalidArgument(format!(
                "periodic signal must have {} samples",
                self.padded_len()
            )));
        }
        Ok(self
            .lattice
            .apply_symbol(samples, &self.multipliers, samples.len()))
    }

    /// `int u (-d^2/dx^2)^(1/2) w dx` as a lattice sum.
    ///
    /// The end level of each argument is removed first, so the sum runs over
    /// functions that vanish off the grid and is symmetric to roundoff.
    pub fn pairing(&self, u: &[f64], w: &[f64]) -> Result<f64> {
        let lu = self.check(u)?;
        let vw = self.apply_spectral(w)?;
        Ok(self.grid.spacing()
            * u.iter()
                .zip(&vw)
                .map(|(a, b)| (a - lu) * b)
                .sum::<f64>())
    }

    /// `(dx/P) sum |k| |U_k|^2` over the padded lattice.
    pub fn parseval(&self, u: &[f64]) -> Result<f64> {
        let level = self.check(u)?;
        let spec = self.lattice.forward(&Self::centred(u, level));
        let sum: f64 = spec
            .iter()
            .zip(&self.multipliers)
            .map(|(c, m)| m * c.norm_sqr())
            .sum();
        Ok(self.grid.spacing() * sum / self.padded_len() as f64)
    }
}

const GAUSS8: [(f64, f64); 8] = [
    (-0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
    (-0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (-0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (-0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.183_434_642_495_649_8, 0.362_683_783_378_362),
    (0.525_532_409_916_329, 0.313_706_645_877_887_3),
    (0.796_666_477_413_626_7, 0.222_381_034_453_374_47),
    (0.960_289_856_497_536_3, 0.101_228_536_290_376_26),
];

fn gauss<F: FnMut(f64) -> f64>(a: f64, b: f64, mut f: F) -> f64 {
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    half * GAUSS8
        .iter()
        .map(|(t, w)| w * f(mid + half * t))
        .sum::<f64>()
}

/// Six-point Lagrange interpolation of `value(k)` at fractional index `pos`,
/// using nodes `base..base + 6`.
fn lagrange6<F: Fn(i64) -> f64>(pos: f64, base: i64, value: F) -> f64 {
    let t = pos - base as f64;
    let mut acc = 0.0;
    for j in 0..6 {
        let mut l = 1.0;
        for m in 0..6 {
            if m != j {
                l *= (t - m as f64) / (j as f64 - m as f64);
            }
        }
        acc += l * value(base + j);
    }
    acc
}

/// Interpolant of grid samples at an arbitrary abscissa, stencil kept inside.
fn interpolate(u: &[f64], x0: f64, dx: f64, y: f64) -> f64 {
    let pos = (y - x0) / dx;
    let base = (pos.floor() as i64 - 2).clamp(0, u.len() as i64 - 6);
    lagrange6(pos, base, |k| u[k as usize])
}

/// Principal-value quadrature for the half-Laplacian at node `index`.
///
/// The integral is split at distance `delta`. The near part uses the
/// symmetric second difference `(2u(x) - u(x+s) - u(x-s)) / s^2`, whose limit
/// at `s = 0` is `-u''(x)`; the far part integrates an interpolant of `u` and
/// adds the closed-form tails beyond the grid.
pub fn apply_quadrature(u: &[f64], grid: &Grid, index: usize, delta: f64) -> Result<f64> {
    let n = grid.len();
    if u.len() != n {
        return Err(Error::InvalidArgument(format!(
            "{} samples for a grid of {n} nodes",
            u.len()
        )));
    }
    if !(delta > 0.0) || delta >= grid.half_width() {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} must lie in (0, {})",
            grid.half_width()
        )));
    }
    let dx = grid.spacing();
    let reach = (delta / dx).ceil() as usize + 3;
    if index < reach || index + reach > n - 1 {
        return Err(Error::InvalidArgument(format!(
            "node {index} lies within {reach} nodes of the boundary"
        )));
    }
    let x = grid.nodes()[index];
    let ux = u[index];

    let second = (u[index - 3] + u[index + 3]) / 90.0 - 3.0 * (u[index - 2] + u[index + 2]) / 20.0
        + 1.5 * (u[index - 1] + u[index + 1])
        - 49.0 / 18.0 * ux;
    let q: Vec<f64> = (0..=reach)
        .map(|j| {
            if j == 0 {
                -second / (dx * dx)
            } else {
                let s = j as f64 * dx;
                (2.0 * ux - u[index + j] - u[index - j]) / (s * s)
            }
        })
        .collect();
    let q_at = |s: f64| {
        let pos = s / dx;
        let base = pos.floor() as i64 - 2;
        lagrange6(pos, base, |k| q[k.unsigned_abs() as usize])
    };
    let mut inner = 0.0;
    let mut a = 0.0;
    while a < delta {
        let b = (a + dx).min(delta);
        inner += gauss(a, b, q_at);
        a = b;
    }

    let x0 = grid.nodes()[0];
    let far = |y: f64| {
        let d = x - y;
        (ux - interpolate(u, x0, dx, y)) / (d * d)
    };
    let mut outer = 0.0;
    let right_start = x + delta;
    let mut a = right_start;
    let mut k = ((right_start - x0) / dx).floor() as usize + 1;
    while k < n {
        let b = grid.nodes()[k];
        if b > a {
            outer += gauss(a, b, far);
        }
        a = b;
        k += 1;
    }
    let left_end = x - delta;
    let mut b = left_end;
    let mut k = ((left_end - x0) / dx).ceil() as i64 - 1;
    while k >= 0 {
        let a = grid.nodes()[k as usize];
        if b > a {
            outer += gauss(a, b, far);
        }
        b = a;
        k -= 1;
    }
    let (xl, xr) = (grid.nodes()[0], grid.nodes()[n - 1]);
    outer += (ux - u[n - 1]) / (xr - x) + (ux - u[0]) / (x - xl);

    Ok((inner + outer) / PI)
}

/// `(1/2 pi) int int (u(x) - u(y))^2 / (x - y)^2 dx dy` by direct double
/// quadrature, with `u` continued by its (common) end value off the grid.
pub fn seminorm_double_integral(u: &[f64], grid: &Grid) -> Result<f64> {
    let n = grid.len();
    if u.len() != n {
        return Err(Error::InvalidArgument("length mismatch".into()));
    }
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    if (u[0] - u[n - 1]).abs() > 1e-12 * scale {
        return Err(Error::InvalidArgument(
            "the double integral diverges unless both end values agree".into(),
        ));
    }
    let dx = grid.spacing();
    let x = grid.nodes();
    let w = grid.trapezoid_weights();
    let slope: Vec<f64> = (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * u[0] + 4.0 * u[1] - u[2]) / (2.0 * dx)
            } else if i == n - 1 {
                (3.0 * u[n - 1] - 4.0 * u[n - 2] + u[n - 3]) / (2.0 * dx)
            } else if i == 1 || i == n - 2 {
                (u[i + 1] - u[i - 1]) / (2.0 * dx)
            } else {
                (u[i - 2] - 8.0 * u[i - 1] + 8.0 * u[i + 1] - u[i + 2]) / (12.0 * dx)
            }
        })
        .collect();
    let mut inside = 0.0;
    for i in 0..n {
        let mut row = w[i] * slope[i] * slope[i];
        for j in (i + 1)..n {
            let q = (u[i] - u[j]) / (x[i] - x[j]);
            row += 2.0 * w[j] * q * q;
        }
        inside += w[i] * row;
    }
    let (ul, ur) = (u[0], u[n - 1]);
    let (xl, xr) = (x[0], x[n - 1]);
    let mut tails = 0.0;
    for i in 1..n - 1 {
        tails += w[i] * ((u[i] - ur).powi(2) / (xr - x[i]) + (u[i] - ul).powi(2) / (x[i] - xl));
    }
    Ok((inside + 2.0 * tails) / (2.0 * PI))
}
