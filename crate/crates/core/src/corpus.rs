//! Built-in test functions and the operator oracle suites run on them.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::halflap::{apply_quadrature, seminorm_double_integral, HalfLaplacianOperator};
use crate::model::{make_initial_profile, Grid, InitKind, ModelParams, WallProfile};
use crate::solver::{minimize_with, SolveOptions};

pub const ORACLE_TOL: f64 = 1e-4;
pub const SEMINORM_TOL: f64 = 1e-4;
pub const POISSON_TOL: f64 = 1e-5;
/// Split distance for the principal-value quadrature.
pub const QUADRATURE_DELTA: f64 = 2.0;

pub fn poisson_kernel(x: f64) -> f64 {
    1.0 / (1.0 + x * x)
}

/// Exact half-Laplacian of [`poisson_kernel`].
pub fn poisson_image(x: f64) -> f64 {
    (1.0 - x * x) / (1.0 + x * x).powi(2)
}

#[derive(Debug, Clone)]
pub struct Sample {
    pub name: String,
    pub u: Vec<f64>,
}

/// Sum of a few seeded Gaussians, all well inside `[-L/4, L/4]`.
pub fn random_bump_sum(grid: &Grid, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let l = grid.half_width();
    let terms: Vec<(f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.gen_range(-1.0..1.0),
                rng.gen_range(-0.125 * l..0.125 * l),
                rng.gen_range(0.5..3.0),
            )
        })
        .collect();
    grid.nodes()
        .iter()
        .map(|&x| {
            terms
                .iter()
                .map(|(a, c, s)| a * (-((x - c) / s).powi(2)).exp())
                .sum()
        })
        .collect()
}

/// Wall profiles solved from the template start.
pub fn solved_walls(grid: &Grid, pairs: &[(f64, f64)]) -> Result<Vec<WallProfile>> {
    let op = HalfLaplacianOperator::new(grid);
    pairs
        .par_iter()
        .map(|&(nu, h)| {
            let params = ModelParams::new(nu, h)?;
            let p0 = make_initial_profile(grid, &params, InitKind::Template)?;
            Ok(minimize_with(&p0, &SolveOptions::default(), &op)?.0)
        })
        .collect()
}

/// Poisson kernel, the `u` of a solved wall and three random bump sums.
pub fn operator_corpus(grid: &Grid) -> Result<Vec<Sample>> {
    let mut out = vec![Sample {
        name: "poisson".into(),
        u: grid.nodes().iter().map(|&x| poisson_kernel(x)).collect(),
    }];
    for p in solved_walls(grid, &[(1.0, 0.3)])? {
        out.push(Sample {
            name: format!("wall_nu{}_h{}", p.params().nu(), p.params().h()),
            u: p.u(),
        });
    }
    for seed in 0..3 {
        out.push(Sample {
            name: format!("bumps_{seed}"),
            u: random_bump_sum(grid, seed),
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleLine {
    pub name: String,
    /// `max |spectral - quadrature| / max |u|` over the checked nodes.
    pub operator_discrepancy: f64,
    /// `|pairing - double integral| / pairing`.
    pub seminorm_discrepancy: f64,
}

/// Nodes with `|x| <= L/2` at least the quadrature reach from either end.
fn checked_nodes(grid: &Grid, stride: usize) -> Vec<usize> {
    let l = grid.half_width();
    (0..grid.len())
        .step_by(stride.max(1))
        .filter(|&i| grid.nodes()[i].abs() <= 0.5 * l)
        .collect()
}

pub fn oracle_line(sample: &Sample, op: &HalfLaplacianOperator, stride: usize) -> Result<OracleLine> {
    let grid = op.grid();
    let spectral = op.apply_spectral(&sample.u)?;
    let nodes = checked_nodes(grid, stride);
    let worst = nodes
        .par_iter()
        .map(|&i| -> Result<f64> {
            let q = apply_quadrature(&sample.u, grid, i, QUADRATURE_DELTA)?;
            Ok((q - spectral[i]).abs())
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    let scale = sample.u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let pair = op.pairing(&sample.u, &sample.u)?;
    let direct = seminorm_double_integral(&sample.u, grid)?;
    Ok(OracleLine {
        name: sample.name.clone(),
        operator_discrepancy: worst / scale,
        seminorm_discrepancy: (pair - direct).abs() / pair,
    })
}

/// Max error of the spectral operator against the exact Poisson image over
/// `|x| <= L/2`.
pub fn poisson_error(op: &HalfLaplacianOperator) -> Result<f64> {
    let grid = op.grid();
    let u: Vec<f64> = grid.nodes().iter().map(|&x| poisson_kernel(x)).collect();
    let v = op.apply_spectral(&u)?;
    let l = grid.half_width();
    Ok(grid
        .nodes()
        .iter()
        .zip(&v)
        .filter(|(x, _)| x.abs() <= 0.5 * l)
        .map(|(&x, v)| (v - poisson_image(x)).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, Serialize)]
pub struct OracleReport {
    pub lines: Vec<OracleLine>,
    pub poisson_error: f64,
    pub max_operator_discrepancy: f64,
    pub max_seminorm_discrepancy: f64,
    pub passed: bool,
}

pub fn run_oracle_suite(grid: &Grid, poisson_grid: &Grid, stride: usize) -> Result<OracleReport> {
    let op = HalfLaplacianOperator::new(grid);
    let lines = operator_corpus(grid)?
        .iter()
        .map(|s| oracle_line(s, &op, stride))
        .collect::<Result<Vec<_>>>()?;
    let poisson_error = poisson_error(&HalfLaplacianOperator::new(poisson_grid))?;
    let max_op = lines.iter().map(|l| l.operator_discrepancy).fold(0.0, f64::max);
    let max_semi = lines.iter().map(|l| l.seminorm_discrepancy).fold(0.0, f64::max);
    Ok(OracleReport {
        passed: max_op <= ORACLE_TOL && max_semi <= SEMINORM_TOL && poisson_error <= POISSON_TOL,
        lines,
        poisson_error,
        max_operator_discrepancy: max_op,
        max_seminorm_discrepancy: max_semi,
    })
}

/// Angle samples of the kink `theta_h + (pi - 2 theta_h)(2/pi) atan(e^{-x/w})`.
pub fn kink_theta(grid: &Grid, params: &ModelParams, width: f64) -> Vec<f64> {
    let th = params.theta_h();
    grid.nodes()
        .iter()
        .map(|&x| th + (PI - 2.0 * th) * (2.0 / PI) * (-x / width).exp().atan())
        .collect()
}
