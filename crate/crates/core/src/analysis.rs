//! Structural checks on computed wall profiles.
//!
//! Covers monotonicity, the reflection symmetry `theta(x) = pi - theta(-x)`,
//! the quadratic tail `x^2 (theta - theta_h) -> c`, and a-priori bounds on
//! `theta_x`, `theta_xx` and the stray field `v = (-d^2/dx^2)^(1/2)(sin theta - h)`.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::energy::energy;
use crate::error::{Error, Result};
use crate::halflap::{apply_quadrature, HalfLaplacianOperator};
use crate::model::WallProfile;

pub const MONOTONE_TOL: f64 = 1e-10;
pub const DECAY_WINDOW: (f64, f64) = (0.5, 0.9);
pub const MAX_PLATEAU_SPREAD: f64 = 0.5;
pub const TAIL_FRACTION: f64 = 0.9;
pub const TAIL_DROP: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotoneCheck {
    pub monotone: bool,
    /// Largest forward difference `theta[i+1] - theta[i]`.
    pub max_violation: f64,
}

pub fn check_monotone(p: &WallProfile) -> MonotoneCheck {
    let max_violation = p
        .theta()
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::NEG_INFINITY, f64::max);
    MonotoneCheck {
        monotone: max_violation <= MONOTONE_TOL,
        max_violation,
    }
}

/// `max |theta(x) + theta(-x) - pi|` over mirrored node pairs.
pub fn symmetry_defect(p: &WallProfile) -> f64 {
    let t = p.theta();
    let n = t.len();
    (0..=n / 2)
        .map(|i| (t[i] + t[n - 1 - i] - PI).abs())
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayFit {
    /// Median of `x^2 (theta - theta_h)` over the right window.
    pub c_plus: f64,
    /// Median of `x^2 (pi - theta_h - theta)` over the mirrored left window.
    pub c_minus: f64,
    pub window: (f64, f64),
    /// Larger of the two relative spreads `(max - min) / median`.
    pub plateau_spread: f64,
    pub spread_plus: f64,
    pub spread_minus: f64,
}

fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let k = values.len();
    if k % 2 == 1 {
        values[k / 2]
    } else {
        0.5 * (values[k / 2 - 1] + values[k / 2])
    }
}

/// Median and relative spread of `samples`.
pub fn plateau(samples: &[f64]) -> (f64, f64) {
    let mut v = samples.to_vec();
    let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let m = median(&mut v);
    let spread = if m.abs() > 0.0 {
        (hi - lo) / m.abs()
    } else {
        f64::INFINITY
    };
    (m, spread)
}

/// Indices of the nodes with `|x|` inside the decay window, right side first.
pub fn window_nodes(p: &WallProfile) -> (Vec<usize>, Vec<usize>) {
    let l = p.grid().half_width();
    let (a, b) = (DECAY_WINDOW.0 * l, DECAY_WINDOW.1 * l);
    let x = p.grid().nodes();
    let right = (0..x.len()).filter(|&i| x[i] >= a && x[i] <= b).collect();
    let left = (0..x.len()).filter(|&i| -x[i] >= a && -x[i] <= b).collect();
    (right, left)
}

/// Like [`fit_decay`] but returns the fit even when the plateau is noisy.
pub fn fit_decay_unchecked(p: &WallProfile) -> DecayFit {
    let x = p.grid().nodes();
    let t = p.theta();
    let th = p.params().theta_h();
    let (right, left) = window_nodes(p);
    let gr: Vec<f64> = right.iter().map(|&i| x[i] * x[i] * (t[i] - th)).collect();
    let gl: Vec<f64> = left
        .iter()
        .map(|&i| x[i] * x[i] * (PI - th - t[i]))
        .collect();
    let (c_plus, spread_plus) = plateau(&gr);
    let (c_minus, spread_minus) = plateau(&gl);
    let l = p.grid().half_width();
    DecayFit {
        c_plus,
        c_minus,
        window: (DECAY_WINDOW.0 * l, DECAY_WINDOW.1 * l),
        plateau_spread: spread_plus.max(spread_minus),
        spread_plus,
        spread_minus,
    }
}

pub fn fit_decay(p: &WallProfile) -> Result<DecayFit> {
    let fit = fit_decay_unchecked(p);
    if !(fit.plateau_spread <= MAX_PLATEAU_SPREAD) {
        return Err(Error::WindowTooNoisy {
            spread: fit.plateau_spread,
            limit: MAX_PLATEAU_SPREAD,
        });
    }
    Ok(fit)
}

/// Central-difference derivative of the given order on the nodes where the
/// stencil fits; returns `(first_index, values)`.
pub fn derivative_field(p: &WallProfile, order: usize) -> Result<(usize, Vec<f64>)> {
    let t = p.theta();
    let n = t.len();
    let dx = p.grid().spacing();
    let vals = match order {
        1 => (1..n - 1)
            .map(|i| (t[i + 1] - t[i - 1]) / (2.0 * dx))
            .collect(),
        2 => (1..n - 1)
            .map(|i| (t[i + 1] - 2.0 * t[i] + t[i - 1]) / (dx * dx))
            .collect(),
        3 => (2..n - 2)
            .map(|i| (t[i + 2] - 2.0 * t[i + 1] + 2.0 * t[i - 1] - t[i - 2]) / (2.0 * dx.powi(3)))
            .collect(),
        other => {
            return Err(Error::InvalidArgument(format!(
                "derivative order {other} not in 1..=3"
            )))
        }
    };
    Ok((if order == 3 { 2 } else { 1 }, vals))
}

pub fn derivative_sup(p: &WallProfile, order: usize) -> Result<f64> {
    let (_, v) = derivative_field(p, order)?;
    Ok(v.iter().fold(0.0, |m, d| m.max(d.abs())))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TailDecay {
    /// `sup |D^k theta|` over the grid, `k = 1, 2, 3`.
    pub global_sup: [f64; 3],
    /// Same over nodes with `|x| >= 0.9 L`.
    pub tail_sup: [f64; 3],
    pub passed: bool,
}

pub fn tail_decay_check(p: &WallProfile) -> Result<TailDecay> {
    let x = p.grid().nodes();
    let cut = TAIL_FRACTION * p.grid().half_width();
    let mut global_sup = [0.0; 3];
    let mut tail_sup = [0.0; 3];
    let mut passed = true;
    for k in 0..3 {
        let (first, v) = derivative_field(p, k + 1)?;
        for (j, d) in v.iter().enumerate() {
            let a = d.abs();
            global_sup[k] = f64::max(global_sup[k], a);
            if x[first + j].abs() >= cut {
                tail_sup[k] = f64::max(tail_sup[k], a);
            }
        }
        passed &= tail_sup[k] * TAIL_DROP <= global_sup[k] || global_sup[k] == 0.0;
    }
    Ok(TailDecay {
        global_sup,
        tail_sup,
        passed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundsReport {
    pub energy: f64,
    pub sup_theta_x: f64,
    pub bound_theta_x: f64,
    pub sup_v: f64,
    pub bound_v: f64,
    pub sup_theta_xx: f64,
    pub bound_theta_xx: f64,
    pub theta_x_ok: bool,
    pub v_ok: bool,
    pub theta_xx_ok: bool,
    /// Largest `|v_spectral - v_quadrature| / max|u|` over the sampled nodes.
    pub quadrature_mismatch: f64,
}

impl BoundsReport {
    pub fn satisfied(&self) -> bool {
        self.theta_x_ok && self.v_ok && self.theta_xx_ok
    }
}

pub const QUADRATURE_SAMPLES: usize = 5;

pub fn check_bounds(p: &WallProfile) -> Result<BoundsReport> {
    check_bounds_with(p, &HalfLaplacianOperator::new(p.grid()), 0)
}

pub fn check_bounds_with(p: &WallProfile, op: &HalfLaplacianOperator, seed: u64) -> Result<BoundsReport> {
    let nu = p.params().nu();
    let h = p.params().h().abs();
    let e = energy(p, op)?.total;
    let u = p.u();
    let v = op.apply_spectral(&u)?;
    let sup_v = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let sup_theta_x = derivative_sup(p, 1)?;
    let sup_theta_xx = derivative_sup(p, 2)?;

    let bound_theta_x = ((1.0 + h).powi(2) + 2.0 * nu * e).sqrt();
    let bound_v = if nu > 0.0 {
        4.0 * nu / (PI * PI) + (2.0 / nu) * (1.0 + h + (1.0 + h).powi(2)) + 4.0 * e
    } else {
        f64::INFINITY
    };
    let bound_theta_xx = 1.0 + h + 0.5 * nu * sup_v;

    let grid = p.grid();
    let delta = if nu > 0.0 { PI / nu } else { f64::INFINITY }.min(0.25 * grid.half_width());
    let reach = (delta / grid.spacing()).ceil() as usize + 3;
    let umax = u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mut quadrature_mismatch = 0.0f64;
    if umax > 0.0 && 2 * reach + 1 < grid.len() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..QUADRATURE_SAMPLES {
            let i = rng.gen_range(reach..grid.len() - reach);
            let q = apply_quadrature(&u, grid, i, delta)?;
            quadrature_mismatch = quadrature_mismatch.max((q - v[i]).abs() / umax);
        }
    }

    Ok(BoundsReport {
        energy: e,
        sup_theta_x,
        bound_theta_x,
        sup_v,
        bound_v,
        sup_theta_xx,
        bound_theta_xx,
        theta_x_ok: sup_theta_x <= bound_theta_x,
        v_ok: sup_v <= bound_v,
        theta_xx_ok: sup_theta_xx <= bound_theta_xx,
        quadrature_mismatch,
    })
}
