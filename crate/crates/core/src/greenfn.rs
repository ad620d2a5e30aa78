//! Linearization about the vacuum and its fundamental solution.
//!
//! Folding the wall, `rho = theta` for `x >= 0` and `rho = pi - theta` for
//! `x < 0`, gives an even function with a corner at the origin. With
//! `c2 = cos^2(theta_h)` the operator
//!
//! ```text
//! L = -d^2/dx^2 + (nu/2) c2 (-d^2/dx^2)^(1/2) + c2,   symbol k^2 + (nu/2) c2 |k| + c2
//! ```
//!
//! is invertible, and `L(rho - theta_h) = a delta + f` with `a = 2|theta'(0)|`
//! and a forcing `f` that is smooth away from the origin. Hence
//! `rho = theta_h + a G + G * f`, and the tail of `G`, `nu / (2 pi c2 x^2)`,
//! carries the quadratic decay of the wall.

use std::f64::consts::PI;

use serde::Serialize;

use crate::analysis::{plateau, window_nodes};
use crate::error::{Error, Result};
use crate::halflap::PaddedLattice;
use crate::model::{Grid, ModelParams, WallProfile};
use crate::path::RECENTRED_TOL;

/// Symbol of `L` on the zero-padded lattice of a grid.
#[derive(Debug, Clone)]
pub struct LinearizedOperator {
    params: ModelParams,
    grid: Grid,
    lattice: PaddedLattice,
    symbol: Vec<f64>,
}

impl LinearizedOperator {
    pub fn new(params: &ModelParams, grid: &Grid) -> Result<Self> {
        if !(params.nu() > 0.0) {
            return Err(Error::InvalidParams(
                "the linearized operator needs nu > 0".into(),
            ));
        }
        let lattice = PaddedLattice::new(grid, crate::halflap::PAD_FACTOR);
        let c2 = params.theta_h().cos().powi(2);
        let half_nu = 0.5 * params.nu();
        let symbol = (0..lattice.len())
            .map(|j| {
                let k = lattice.wavenumber(j);
                k * k + half_nu * c2 * k.abs() + c2
            })
            .collect();
        Ok(Self {
            params: *params,
            grid: grid.clone(),
            lattice,
            symbol,
        })
    }

    pub fn symbol(&self) -> &[f64] {
        &self.symbol
    }

    pub fn padded_len(&self) -> usize {
        self.lattice.len()
    }

    pub fn cos2(&self) -> f64 {
        self.params.theta_h().cos().powi(2)
    }

    /// Predicted tail constant `lim x^2 G(x) = nu / (2 pi c2)`.
    pub fn tail_constant(&self) -> f64 {
        self.params.nu() / (2.0 * PI * self.cos2())
    }

    /// `G` on every lattice point, lattice index `m` at `x = m dx` (wrapped).
    pub fn green_lattice(&self) -> Vec<f64> {
        let p = self.lattice.len();
        let spec = self
            .symbol
            .iter()
            .map(|s| rustfft::num_complex::Complex::new(1.0 / s, 0.0))
            .collect();
        let raw = self.lattice.inverse(spec, p);
        let scale = 1.0 / self.grid.spacing();
        let mut g = vec![0.0; p];
        g[0] = raw[0] * scale;
        for m in 1..p {
            // Exact evenness: average the two mirrored samples.
            g[m] = 0.5 * (raw[m] + raw[p - m]) * scale;
        }
        g
    }

    /// `L w` on the padded lattice for grid samples `w` (zero elsewhere).
    /// Returns the grid part and the part beyond the grid separately.
    pub fn apply_discrete(&self, w: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let p = self.lattice.len();
        let n = self.grid.len();
        let dx = self.grid.spacing();
        let c2 = self.cos2();
        let abs_k: Vec<f64> = (0..p).map(|j| self.lattice.wavenumber(j).abs()).collect();
        let half = self.lattice.apply_symbol(w, &abs_k, p);
        let at = |m: usize| if m < n { w[m] } else { 0.0 };
        let full: Vec<f64> = (0..p)
            .map(|m| {
                let left = at((m + p - 1) % p);
                let right = at((m + 1) % p);
                let lap = (2.0 * at(m) - left - right) / (dx * dx);
                lap + 0.5 * self.params.nu() * c2 * half[m] + c2 * at(m)
            })
            .collect();
        (full[..n].to_vec(), full[n..].to_vec())
    }

    /// `L w` through the symbol; grid samples in, grid samples out.
    pub fn apply_spectral(&self, w: &[f64]) -> Vec<f64> {
        self.lattice.apply_symbol(w, &self.symbol, w.len())
    }

    /// `G * f` on the lattice; `f` holds lattice samples from index 0.
    pub fn convolve(&self, f: &[f64], keep: usize) -> Vec<f64> {
        let inv: Vec<f64> = self.symbol.iter().map(|s| 1.0 / s).collect();
        self.lattice.apply_symbol(f, &inv, keep)
    }
}

/// `G` sampled on the grid nodes, centred at `x = 0`.
pub fn fundamental_solution(params: &ModelParams, grid: &Grid) -> Result<Vec<f64>> {
    let op = LinearizedOperator::new(params, grid)?;
    Ok(green_on_grid(&op))
}

fn green_on_grid(op: &LinearizedOperator) -> Vec<f64> {
    let g = op.green_lattice();
    let p = g.len();
    let c = op.grid.center() as i64;
    (0..op.grid.len() as i64)
        .map(|i| g[(i - c).rem_euclid(p as i64) as usize])
        .collect()
}

/// Folded wall with the numerically defined forcing.
#[derive(Debug, Clone, Serialize)]
pub struct FoldedProfile {
    pub rho: Vec<f64>,
    pub a: f64,
    /// `L(rho - theta_h)` on grid nodes, the centre value extrapolated from
    /// its neighbours.
    pub forcing: Vec<f64>,
    /// `L(rho - theta_h)` on the lattice points beyond the grid.
    pub exterior: Vec<f64>,
    pub theta_h: f64,
}

pub fn fold(p: &WallProfile) -> Result<FoldedProfile> {
    let op = LinearizedOperator::new(p.params(), p.grid())?;
    fold_with(p, &op)
}

pub fn fold_with(p: &WallProfile, op: &LinearizedOperator) -> Result<FoldedProfile> {
    let off = p.center_value() - std::f64::consts::FRAC_PI_2;
    if off.abs() > RECENTRED_TOL {
        return Err(Error::NotRecentred(off));
    }
    let grid = p.grid();
    let c = grid.center();
    let dx = grid.spacing();
    let th = p.params().theta_h();
    let rho: Vec<f64> = p
        .theta()
        .iter()
        .enumerate()
        .map(|(i, &t)| if i >= c { t } else { PI - t })
        .collect();
    let w: Vec<f64> = rho.iter().map(|r| r - th).collect();
    let a = (2.0 * w[c] - w[c + 1] - w[c - 1]) / dx;
    let (mut forcing, exterior) = op.apply_discrete(&w);
    let near = 0.5 * (forcing[c + 1] + forcing[c - 1]);
    let next = 0.5 * (forcing[c + 2] + forcing[c - 2]);
    forcing[c] = (4.0 * near - next) / 3.0;
    Ok(FoldedProfile {
        rho,
        a,
        forcing,
        exterior,
        theta_h: th,
    })
}

fn lattice_forcing(fp: &FoldedProfile, include_exterior: bool) -> Vec<f64> {
    let mut f = fp.forcing.clone();
    if include_exterior {
        f.extend_from_slice(&fp.exterior);
    }
    f
}

/// `theta_h + a G + G * f` on the grid.
pub fn reconstruct_profile(fp: &FoldedProfile, op: &LinearizedOperator) -> Vec<f64> {
    let g = green_on_grid(op);
    let conv = op.convolve(&lattice_forcing(fp, true), fp.rho.len());
    g.iter()
        .zip(&conv)
        .map(|(gi, ci)| fp.theta_h + fp.a * gi + ci)
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Reconstruction {
    /// Sup of `|theta_h + a G + G*f - rho|` away from the origin.
    pub sup_residual: f64,
    /// `sup_residual / sup |rho - theta_h|`.
    pub relative_residual: f64,
}

pub const EXCLUDED_CENTER_NODES: usize = 3;

pub fn reconstruct(fp: &FoldedProfile, op: &LinearizedOperator) -> Reconstruction {
    let rec = reconstruct_profile(fp, op);
    let c = op.grid.center();
    let mut sup_residual = 0.0f64;
    let mut scale = 0.0f64;
    for (i, (r, rho)) in rec.iter().zip(&fp.rho).enumerate() {
        scale = scale.max((rho - fp.theta_h).abs());
        if i.abs_diff(c) > EXCLUDED_CENTER_NODES {
            sup_residual = sup_residual.max((r - rho).abs());
        }
    }
    Reconstruction {
        sup_residual,
        relative_residual: if scale > 0.0 { sup_residual / scale } else { sup_residual },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DecayPrediction {
    /// Median of `x^2 (a G + G*f)` over the right window.
    pub c_plus: f64,
    pub c_minus: f64,
    /// Median of `x^2 a G` over the right window.
    pub green_term: f64,
    /// `a` times the predicted `lim x^2 G`.
    pub asymptotic_green_term: f64,
}

pub fn decay_prediction(p: &WallProfile, fp: &FoldedProfile, op: &LinearizedOperator) -> DecayPrediction {
    let g = green_on_grid(op);
    let conv = op.convolve(&lattice_forcing(fp, true), fp.rho.len());
    let x = p.grid().nodes();
    let (right, left) = window_nodes(p);
    let side = |nodes: &[usize]| {
        let v: Vec<f64> = nodes
            .iter()
            .map(|&i| x[i] * x[i] * (fp.a * g[i] + conv[i]))
            .collect();
        plateau(&v).0
    };
    let green: Vec<f64> = right.iter().map(|&i| x[i] * x[i] * fp.a * g[i]).collect();
    DecayPrediction {
        c_plus: side(&right),
        c_minus: side(&left),
        green_term: plateau(&green).0,
        asymptotic_green_term: fp.a * op.tail_constant(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GreenSummary {
    pub min_value: f64,
    /// `sup x^2 G` over the grid.
    pub sup_x2g: f64,
    pub integral: f64,
    pub expected_integral: f64,
    pub tail_constant: f64,
}

pub fn green_summary(op: &LinearizedOperator) -> GreenSummary {
    let g = green_on_grid(op);
    let x = op.grid.nodes();
    GreenSummary {
        min_value: g.iter().copied().fold(f64::INFINITY, f64::min),
        sup_x2g: g.iter().zip(x).map(|(v, x)| x * x * v).fold(0.0, f64::max),
        integral: op.grid.trapezoid(&g),
        expected_integral: 1.0 / op.cos2(),
        tail_constant: op.tail_constant(),
    }
}

/// `x G` as two-column text.
pub fn dump_green(params: &ModelParams, grid: &Grid) -> Result<String> {
    Ok(crate::io::two_columns(
        grid.nodes(),
        &fundamental_solution(params, grid)?,
    ))
}
