//! Reduced wall energy
//!
//! ```text
//! E = 1/2 int theta_x^2 + 1/2 int (sin theta - h)^2 + nu/4 int u (-d^2/dx^2)^(1/2) u
//! ```
//!
//! with `u = sin(theta) - h`, its Euler-Lagrange residual, and the exact
//! gradient of the discretized energy. The exchange term uses forward
//! differences so that the discrete gradient is the standard three-point
//! Laplacian. End nodes are Dirichlet data and carry zero gradient.

use crate::error::{Error, Result};
use crate::halflap::HalfLaplacianOperator;
use crate::model::{EnergyBreakdown, ModelParams, WallProfile};

/// Energy, gradient and the intermediate fields of one profile.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub theta: Vec<f64>,
    pub u: Vec<f64>,
    /// `(-d^2/dx^2)^(1/2) u` on the grid.
    pub v: Vec<f64>,
    pub energy: EnergyBreakdown,
    /// `dE/dtheta_i`, zero at both end nodes.
    pub gradient: Vec<f64>,
}

impl Evaluation {
    /// Sup-norm of `gradient / dx` over the free nodes.
    pub fn grad_norm(&self, dx: f64) -> f64 {
        self.gradient.iter().fold(0.0f64, |m, g| m.max(g.abs())) / dx
    }
}

fn check_len(theta: &[f64], op: &HalfLaplacianOperator) -> Result<()> {
    if theta.len() != op.grid().len() {
        return Err(Error::InvalidArgument(format!(
            "{} samples for an operator on {} nodes",
            theta.len(),
            op.grid().len()
        )));
    }
    Ok(())
}

pub fn evaluate(theta: &[f64], params: &ModelParams, op: &HalfLaplacianOperator) -> Result<Evaluation> {
    check_len(theta, op)?;
    let grid = op.grid();
    let dx = grid.spacing();
    let n = theta.len();
    let h = params.h();
    let nu = params.nu();

    let u: Vec<f64> = theta.iter().map(|t| t.sin() - h).collect();
    let v = op.apply_spectral(&u)?;

    let exchange = 0.5 / dx * theta.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum::<f64>();
    let potential = 0.5 * grid.trapezoid(&u.iter().map(|x| x * x).collect::<Vec<_>>());
    let level = 0.5 * (u[0] + u[n - 1]);
    let stray = 0.25 * nu * dx * u.iter().zip(&v).map(|(a, b)| (a - level) * b).sum::<f64>();

    let mut gradient = vec![0.0; n];
    for i in 1..n - 1 {
        let c = theta[i].cos();
        gradient[i] = (2.0 * theta[i] - theta[i - 1] - theta[i + 1]) / dx
            + dx * c * (u[i] + 0.5 * nu * v[i]);
    }
    Ok(Evaluation {
        theta: theta.to_vec(),
        u,
        v,
        energy: EnergyBreakdown::new(exchange, potential, stray),
        gradient,
    })
}

/// `E(to) - E(from)` assembled term by term from differences of the fields,
/// so that it stays accurate when both energies agree to many digits.
pub fn energy_difference(from: &Evaluation, to: &Evaluation, params: &ModelParams, dx: f64) -> f64 {
    let (a, b) = (&from.theta, &to.theta);
    let n = a.len();
    let mut exchange = 0.0;
    for i in 0..n - 1 {
        let da = a[i + 1] - a[i];
        let db = b[i + 1] - b[i];
        let step = (b[i + 1] - a[i + 1]) - (b[i] - a[i]);
        exchange += step * (da + db);
    }
    exchange *= 0.5 / dx;

    let mut potential = 0.0;
    let mut stray = 0.0;
    for i in 0..n {
        let s = b[i] - a[i];
        let du = 2.0 * (a[i] + 0.5 * s).cos() * (0.5 * s).sin();
        let w = if i == 0 || i == n - 1 { 0.5 } else { 1.0 };
        potential += w * du * (from.u[i] + to.u[i]);
        stray += du * (from.v[i] + to.v[i]);
    }
    potential *= 0.5 * dx;
    stray *= 0.25 * params.nu() * dx;
    exchange + potential + stray
}

pub fn energy(p: &WallProfile, op: &HalfLaplacianOperator) -> Result<EnergyBreakdown> {
    Ok(evaluate(p.theta(), p.params(), op)?.energy)
}

pub fn energy_gradient(p: &WallProfile, op: &HalfLaplacianOperator) -> Result<Vec<f64>> {
    Ok(evaluate(p.theta(), p.params(), op)?.gradient)
}

/// `-theta_xx + (sin theta - h) cos theta + nu/2 cos theta (-d^2/dx^2)^(1/2)(sin theta - h)`
/// on interior nodes; the two end entries are zero.
pub fn el_residual(p: &WallProfile, op: &HalfLaplacianOperator) -> Result<Vec<f64>> {
    let theta = p.theta();
    check_len(theta, op)?;
    let dx = p.grid().spacing();
    let nu = p.params().nu();
    let u = p.u();
    let v = op.apply_spectral(&u)?;
    let n = theta.len();
    let mut r = vec![0.0; n];
    for i in 1..n - 1 {
        let txx = (theta[i + 1] - 2.0 * theta[i] + theta[i - 1]) / (dx * dx);
        r[i] = -txx + theta[i].cos() * (u[i] + 0.5 * nu * v[i]);
    }
    Ok(r)
}
