//! Independent solves over a list of `(nu, h)` pairs.

use rayon::prelude::*;
use serde::Serialize;

use super::{minimize_with, SolveOptions};
use crate::analysis::{check_bounds_with, fit_decay_unchecked, tail_decay_check};
use crate::error::Result;
use crate::halflap::HalfLaplacianOperator;
use crate::model::{make_initial_profile, EnergyBreakdown, Grid, InitKind, ModelParams, WallProfile};

#[derive(Debug, Clone, Serialize)]
pub struct SweepSummary {
    pub energy: EnergyBreakdown,
    pub decay_c: f64,
    pub max_grad: f64,
    pub converged: bool,
    pub bounds_ok: bool,
    pub tail_decay_ok: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepRow {
    pub nu: f64,
    pub h: f64,
    /// Either the summary or the error that stopped this row.
    pub outcome: std::result::Result<SweepSummary, String>,
}

fn run_row(nu: f64, h: f64, grid: &Grid, opts: &SolveOptions) -> Result<(WallProfile, SweepSummary)> {
    let params = ModelParams::new(nu, h)?;
    let op = HalfLaplacianOperator::new(grid);
    let p0 = make_initial_profile(grid, &params, InitKind::Template)?;
    let (p, report) = minimize_with(&p0, opts, &op)?;
    let bounds = check_bounds_with(&p, &op, 0)?;
    let tail = tail_decay_check(&p)?;
    let fit = fit_decay_unchecked(&p);
    Ok((
        p,
        SweepSummary {
            energy: report.final_energy,
            decay_c: fit.c_plus,
            max_grad: report.final_grad_norm,
            converged: report.converged,
            bounds_ok: bounds.satisfied(),
            tail_decay_ok: tail.passed,
        },
    ))
}

/// Solves every pair from the template start; rows keep the input order and
/// a failing row does not stop the others.
pub fn sweep(pairs: &[(f64, f64)], grid: &Grid, opts: &SolveOptions) -> Vec<SweepRow> {
    sweep_profiles(pairs, grid, opts)
        .into_iter()
        .map(|(row, _)| row)
        .collect()
}

/// [`sweep`] that also hands back the converged profiles.
pub fn sweep_profiles(
    pairs: &[(f64, f64)],
    grid: &Grid,
    opts: &SolveOptions,
) -> Vec<(SweepRow, Option<WallProfile>)> {
    pairs
        .par_iter()
        .map(|&(nu, h)| match run_row(nu, h, grid, opts) {
            Ok((p, s)) => (
                SweepRow {
                    nu,
                    h,
                    outcome: Ok(s),
                },
                Some(p),
            ),
            Err(e) => {
                log::warn!("sweep row nu={nu} h={h} failed: {e}");
                (
                    SweepRow {
                        nu,
                        h,
                        outcome: Err(e.to_string()),
                    },
                    None,
                )
            }
        })
        .collect()
}

pub const SWEEP_HEADER: &str = "nu,h,exchange,potential,stray,total,decay_c,max_grad,converged";

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_HEADER);
    out.push('\n');
    for r in rows {
        match &r.outcome {
            Ok(s) => out.push_str(&format!(
                "{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{}\n",
                r.nu,
                r.h,
                s.energy.exchange,
                s.energy.potential,
                s.energy.stray,
                s.energy.total,
                s.decay_c,
                s.max_grad,
                s.converged
            )),
            Err(_) => out.push_str(&format!("{},{},NaN,NaN,NaN,NaN,NaN,NaN,false\n", r.nu, r.h)),
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_sweep() {
        let grid = Grid::new(65, 8.0).unwrap();
        assert!(sweep(&[], &grid, &SolveOptions::default()).is_empty());
        assert_eq!(sweep_csv(&[]), format!("{SWEEP_HEADER}\n"));
    }

    #[test]
    fn invalid_row_is_isolated() {
        let grid = Grid::new(257, 16.0).unwrap();
        let rows = sweep(&[(1.0, 0.0), (1.0, 1.0), (1.0, 0.5)], &grid, &SolveOptions::default());
        assert_eq!(rows.len(), 3);
        assert!(rows[0].outcome.is_ok());
        assert!(rows[1].outcome.is_err());
        assert!(rows[2].outcome.is_ok());
        let csv = sweep_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(2).unwrap().contains("NaN"));
    }
}
