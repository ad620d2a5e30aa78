//! Energy minimization with frozen boundary values.
//!
//! Descent runs on the exact gradient of the discrete energy. The default
//! method is limited-memory BFGS whose initial inverse Hessian is the
//! constant-coefficient operator in [`precond`]; a backtracking Armijo search
//! guards every step. Translations are removed by holding the node at `x = 0`
//! at `pi/2`. With `pin_center` off the centre node moves freely and the
//! profile is recentred every `recenter_every` iterations instead, followed by
//! a pinned polish once the free phase has finished.

mod precond;
mod sweep;

use std::collections::VecDeque;
use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::energy::{energy_difference, evaluate, Evaluation};
use crate::error::{Error, Result};
use crate::halflap::HalfLaplacianOperator;
use crate::model::{recenter_with_shift, EnergyBreakdown, ModelParams, WallProfile};

type Recentre<'a> = dyn FnMut(&[f64]) -> Result<Vec<f64>> + 'a;

pub use precond::Preconditioner;
pub use sweep::{sweep, sweep_csv, sweep_profiles, SweepRow, SweepSummary, SWEEP_HEADER};

pub const ARMIJO: f64 = 1e-4;
const MIN_STEP_RATIO: f64 = 1e-16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    GradientFlow,
    QuasiNewton,
}

impl std::str::FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gradient_flow" | "gradient-flow" => Ok(Method::GradientFlow),
            "quasi_newton" | "quasi-newton" | "lbfgs" => Ok(Method::QuasiNewton),
            other => Err(Error::InvalidArgument(format!("unknown method {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveOptions {
    /// Target for the sup-norm of `gradient / dx` over interior nodes.
    pub grad_tol: f64,
    pub max_iter: usize,
    pub method: Method,
    /// Recentring period while the centre node is free.
    pub recenter_every: usize,
    /// Sort each free segment after every step.
    pub monotone_projection: bool,
    pub preconditioned: bool,
    pub pin_center: bool,
    /// Number of stored secant pairs.
    pub history: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            max_iter: 5000,
            method: Method::QuasiNewton,
            recenter_every: 50,
            monotone_projection: false,
            preconditioned: true,
            pin_center: true,
            history: 10,
        }
    }
}

impl SolveOptions {
    pub fn validate(&self) -> Result<()> {
        if !(self.grad_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "grad_tol must be positive, got {}",
                self.grad_tol
            )));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidArgument("max_iter must be >= 1".into()));
        }
        if !self.pin_center && self.recenter_every == 0 {
            return Err(Error::InvalidArgument(
                "recenter_every must be >= 1 when the centre is free".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SolveReport {
    pub iterations: usize,
    pub final_energy: EnergyBreakdown,
    pub final_grad_norm: f64,
    /// Every applied recentring translation, in `x` units.
    pub recenter_shifts: Vec<f64>,
    pub converged: bool,
}

impl SolveReport {
    pub fn ensure_converged(&self) -> Result<()> {
        if self.converged {
            Ok(())
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                grad_norm: self.final_grad_norm,
            })
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain record serializes")
    }
}

/// A smooth function together with a cancellation-free difference.
pub trait Objective {
    type Eval;

    fn evaluate(&self, x: &[f64]) -> Result<Self::Eval>;
    fn point<'a>(&self, e: &'a Self::Eval) -> &'a [f64];
    fn gradient<'a>(&self, e: &'a Self::Eval) -> &'a [f64];
    fn value(&self, e: &Self::Eval) -> f64;

    fn difference(&self, from: &Self::Eval, to: &Self::Eval) -> f64 {
        self.value(to) - self.value(from)
    }
}

/// The discrete wall energy as an [`Objective`].
pub struct WallEnergy<'a> {
    pub params: ModelParams,
    pub op: &'a HalfLaplacianOperator,
}

impl Objective for WallEnergy<'_> {
    type Eval = Evaluation;

    fn evaluate(&self, x: &[f64]) -> Result<Evaluation> {
        evaluate(x, &self.params, self.op)
    }

    fn point<'a>(&self, e: &'a Evaluation) -> &'a [f64] {
        &e.theta
    }

    fn gradient<'a>(&self, e: &'a Evaluation) -> &'a [f64] {
        &e.gradient
    }

    fn value(&self, e: &Evaluation) -> f64 {
        e.energy.total
    }

    fn difference(&self, from: &Evaluation, to: &Evaluation) -> f64 {
        energy_difference(from, to, &self.params, self.op.grid().spacing())
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Backtracking search along `direction` from `current`, starting at `dt`.
///
/// Halves the step until the Armijo condition holds. Returns the accepted
/// evaluation and step.
pub fn line_search<O: Objective>(
    obj: &O,
    current: &O::Eval,
    direction: &[f64],
    dt: f64,
) -> Result<(O::Eval, f64)> {
    let x = obj.point(current);
    let slope = dot(obj.gradient(current), direction);
    let floor = dt * MIN_STEP_RATIO;
    let mut step = dt;
    let mut halvings = 0;
    while step >= floor {
        let trial: Vec<f64> = x.iter().zip(direction).map(|(a, d)| a + step * d).collect();
        // Trial points outside the operator's domain count as rejected steps.
        if let Ok(e) = obj.evaluate(&trial) {
            let change = obj.difference(current, &e);
            if change <= ARMIJO * step * slope && slope < 0.0 {
                return Ok((e, step));
            }
        }
        step *= 0.5;
        halvings += 1;
    }
    Err(Error::StepUnderflow {
        dt: step,
        halvings,
    })
}

/// One explicit step `theta <- theta - dt grad` with backtracking on `dt`.
pub fn gradient_flow_step(p: &WallProfile, dt: f64) -> Result<(WallProfile, f64)> {
    let op = HalfLaplacianOperator::new(p.grid());
    let obj = WallEnergy {
        params: *p.params(),
        op: &op,
    };
    let current = obj.evaluate(p.theta())?;
    let direction: Vec<f64> = current.gradient.iter().map(|g| -g).collect();
    let (next, accepted) = line_search(&obj, &current, &direction, dt)?;
    Ok((p.with_theta(next.theta)?, accepted))
}

struct Memory {
    pairs: VecDeque<(Vec<f64>, Vec<f64>, f64)>,
    capacity: usize,
}

impl Memory {
    fn new(capacity: usize) -> Self {
        Self {
            pairs: VecDeque::with_capacity(capacity),
            capacity,
        }
    }

    fn clear(&mut self) {
        self.pairs.clear();
    }

    fn push(&mut self, s: Vec<f64>, y: Vec<f64>) {
        let sy = dot(&s, &y);
        if !(sy > 1e-300) || self.capacity == 0 {
            return;
        }
        if self.pairs.len() == self.capacity {
            self.pairs.pop_front();
        }
        self.pairs.push_back((s, y, 1.0 / sy));
    }

    /// Two-loop recursion with initial inverse Hessian `gamma * base`.
    fn direction(&self, g: &[f64], base: &dyn Fn(&[f64]) -> Vec<f64>) -> Vec<f64> {
        let mut q = g.to_vec();
        let mut alpha = Vec::with_capacity(self.pairs.len());
        for (s, y, rho) in self.pairs.iter().rev() {
            let a = rho * dot(s, &q);
            for (qi, yi) in q.iter_mut().zip(y) {
                *qi -= a * yi;
            }
            alpha.push(a);
        }
        let mut r = base(&q);
        if let Some((s, y, _)) = self.pairs.back() {
            let by = base(y);
            let gamma = dot(s, y) / dot(y, &by);
            for ri in r.iter_mut() {
                *ri *= gamma;
            }
        }
        for ((s, y, rho), a) in self.pairs.iter().zip(alpha.iter().rev()) {
            let b = rho * dot(y, &r);
            for (ri, si) in r.iter_mut().zip(s) {
                *ri += (a - b) * si;
            }
        }
        r.iter_mut().for_each(|v| *v = -*v);
        r
    }
}

fn interior_sup(gradient: &[f64], dx: f64) -> f64 {
    let n = gradient.len();
    gradient[1..n - 1].iter().fold(0.0f64, |m, g| m.max(g.abs())) / dx
}

fn project_monotone(theta: &mut [f64], free: &[bool]) {
    let n = theta.len();
    let mut i = 0;
    while i < n {
        if !free[i] {
            i += 1;
            continue;
        }
        let start = i;
        while i < n && free[i] {
            i += 1;
        }
        let hi = if start > 0 { theta[start - 1] } else { f64::INFINITY };
        let lo = if i < n { theta[i] } else { f64::NEG_INFINITY };
        let seg = &mut theta[start..i];
        seg.sort_by(|a, b| b.total_cmp(a));
        for v in seg.iter_mut() {
            *v = v.clamp(lo.min(hi), hi.max(lo));
        }
    }
}

struct Phase<'a> {
    obj: WallEnergy<'a>,
    opts: &'a SolveOptions,
    free: Vec<bool>,
    precond: Option<Preconditioner>,
    dx: f64,
}

struct PhaseOutcome {
    eval: Evaluation,
    iterations: usize,
    converged: bool,
}

impl Phase<'_> {
    fn masked(&self, g: &[f64]) -> Vec<f64> {
        g.iter()
            .zip(&self.free)
            .map(|(v, f)| if *f { *v } else { 0.0 })
            .collect()
    }

    fn base(&self, g: &[f64]) -> Vec<f64> {
        match &self.precond {
            Some(p) => p.solve(g),
            None => g.iter().map(|v| v / self.dx).collect(),
        }
    }

    /// Runs at most `budget` iterations. `recenter` is called every
    /// `recenter_every` accepted steps when set and may replace the iterate.
    fn run(
        &self,
        start: Evaluation,
        budget: usize,
        mut recenter: Option<&mut Recentre>,
    ) -> Result<PhaseOutcome> {
        let mut current = start;
        let mut memory = Memory::new(match self.opts.method {
            Method::QuasiNewton => self.opts.history,
            Method::GradientFlow => 0,
        });
        let mut flow_dt = 1.0;
        let mut iterations = 0;
        loop {
            if interior_sup(&current.gradient, self.dx) <= self.opts.grad_tol {
                return Ok(PhaseOutcome {
                    eval: current,
                    iterations,
                    converged: true,
                });
            }
            if iterations >= budget {
                return Ok(PhaseOutcome {
                    eval: current,
                    iterations,
                    converged: false,
                });
            }
            iterations += 1;

            let g = self.masked(&current.gradient);
            let steepest: Vec<f64> = self.base(&g).iter().map(|v| -v).collect();
            let (mut direction, mut dt) = match self.opts.method {
                Method::QuasiNewton => (memory.direction(&g, &|v| self.base(v)), 1.0),
                Method::GradientFlow => (steepest.clone(), flow_dt),
            };
            if !(dot(&g, &direction) < 0.0) {
                memory.clear();
                direction = steepest.clone();
                dt = flow_dt;
            }
            let searched = match line_search(&self.obj, &current, &direction, dt) {
                Ok(r) => Ok(r),
                Err(Error::StepUnderflow { .. }) if !memory.pairs.is_empty() => {
                    memory.clear();
                    line_search(&self.obj, &current, &steepest, 1.0)
                }
                Err(e) => Err(e),
            };
            let (mut next, accepted) = match searched {
                Ok(r) => r,
                Err(Error::StepUnderflow { dt, halvings }) => {
                    log::warn!(
                        "line search stalled after {halvings} halvings (dt = {dt:e}) at gradient norm {:e}",
                        interior_sup(&current.gradient, self.dx)
                    );
                    return Ok(PhaseOutcome {
                        eval: current,
                        iterations,
                        converged: false,
                    });
                }
                Err(e) => return Err(e),
            };
            if self.opts.method == Method::GradientFlow {
                flow_dt = (2.0 * accepted).min(1e6);
            }
            if self.opts.monotone_projection {
                let mut theta = next.theta.clone();
                project_monotone(&mut theta, &self.free);
                if theta != next.theta {
                    next = self.obj.evaluate(&theta)?;
                    memory.clear();
                }
            }
            if let Some(rc) = recenter.as_mut() {
                if iterations % self.opts.recenter_every == 0 {
                    next = self.obj.evaluate(&rc(&next.theta)?)?;
                    memory.clear();
                }
            }
            let s: Vec<f64> = next.theta.iter().zip(&current.theta).map(|(a, b)| a - b).collect();
            let y: Vec<f64> = self
                .masked(&next.gradient)
                .iter()
                .zip(&g)
                .map(|(a, b)| a - b)
                .collect();
            memory.push(s, y);
            log::trace!(
                "iter {iterations}: E = {:.15}, |g| = {:e}",
                next.energy.total,
                interior_sup(&next.gradient, self.dx)
            );
            current = next;
        }
    }
}

/// Minimizes the discrete energy from `p0`.
///
/// The end nodes are set to the exact limits `pi - theta_h`, `theta_h` and
/// kept there. A report with `converged = false` is returned, not an error,
/// when the iteration budget runs out or the line search stalls.
pub fn minimize(p0: &WallProfile, opts: &SolveOptions) -> Result<(WallProfile, SolveReport)> {
    let op = HalfLaplacianOperator::new(p0.grid());
    minimize_with(p0, opts, &op)
}

pub fn minimize_with(
    p0: &WallProfile,
    opts: &SolveOptions,
    op: &HalfLaplacianOperator,
) -> Result<(WallProfile, SolveReport)> {
    opts.validate()?;
    if op.grid() != p0.grid() {
        return Err(Error::Incompatible("operator built for another grid".into()));
    }
    let params = *p0.params();
    let grid = p0.grid();
    let n = grid.len();
    let dx = grid.spacing();
    let c = grid.center();
    let mut shifts = Vec::new();
    let (start, shift) = recenter_with_shift(p0)?;
    p0.check_admissible(params.default_eps_bc())?;
    if shift != 0.0 {
        shifts.push(shift);
    }
    let mut theta = start.into_theta();
    theta[0] = params.left_limit();
    theta[n - 1] = params.right_limit();
    theta[c] = FRAC_PI_2;

    let obj = WallEnergy { params, op };
    let phase = |pinned: bool| {
        let mut free = vec![true; n];
        free[0] = false;
        free[n - 1] = false;
        if pinned {
            free[c] = false;
        }
        let precond = opts
            .preconditioned
            .then(|| Preconditioner::new(&params, dx, &free));
        Phase {
            obj: WallEnergy { params, op },
            opts,
            free,
            precond,
            dx,
        }
    };

    let mut iterations = 0;
    let mut eval = obj.evaluate(&theta)?;
    if !opts.pin_center {
        let mut recentre = |t: &[f64]| -> Result<Vec<f64>> {
            let (q, s) = recenter_with_shift(&start_like(p0, t)?)?;
            shifts.push(s);
            Ok(q.into_theta())
        };
        let out = phase(false).run(eval, opts.max_iter, Some(&mut recentre))?;
        iterations += out.iterations;
        let (q, s) = recenter_with_shift(&start_like(p0, &out.eval.theta)?)?;
        shifts.push(s);
        let mut t = q.into_theta();
        t[c] = FRAC_PI_2;
        eval = obj.evaluate(&t)?;
    }
    let budget = opts.max_iter.saturating_sub(iterations).max(1);
    let out = phase(true).run(eval, budget, None)?;
    iterations += out.iterations;

    let final_grad_norm = interior_sup(&out.eval.gradient, dx);
    let report = SolveReport {
        iterations,
        final_energy: out.eval.energy,
        final_grad_norm,
        recenter_shifts: shifts,
        converged: out.converged && final_grad_norm <= opts.grad_tol,
    };
    log::debug!(
        "minimize: {} iterations, E = {:.12}, |g| = {:e}",
        report.iterations,
        report.final_energy.total,
        report.final_grad_norm
    );
    Ok((p0.with_theta(out.eval.theta)?, report))
}

fn start_like(p: &WallProfile, theta: &[f64]) -> Result<WallProfile> {
    p.with_theta(theta.to_vec())
}
