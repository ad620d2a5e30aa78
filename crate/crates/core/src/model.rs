//! Physical parameters, the computational grid and wall-profile containers.
//!
//! The wall is described by the in-plane angle `theta(x)` measured from the
//! easy axis. It connects `pi - theta_h` at `x = -inf` to `theta_h` at
//! `x = +inf`, where `theta_h = asin(h)`. Profiles live on a uniform,
//! node-centred grid on `[-L, L]` that always contains `x = 0`, so that the
//! translation degeneracy can be removed by pinning `theta(0) = pi/2`.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dimensionless model inputs: stray-field strength `nu` and applied field `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModelParams {
    nu: f64,
    h: f64,
    theta_h: f64,
}

impl ModelParams {
    /// Validates `nu >= 0` and `0 <= h < 1`.
    ///
    /// `nu = 0` is the local (sine-Gordon) limit. It is accepted because the
    /// closed-form kink is the main quantitative anchor; operations that only
    /// make sense for a nonlocal model reject it themselves.
    pub fn new(nu: f64, h: f64) -> Result<Self> {
        if !nu.is_finite() || nu < 0.0 {
            return Err(Error::InvalidParams(format!("nu must be >= 0, got {nu}")));
        }
        if !h.is_finite() || !(0.0..1.0).contains(&h) {
            return Err(Error::InvalidParams(format!(
                "h must lie in [0, 1), got {h}"
            )));
        }
        Ok(Self {
            nu,
            h,
            theta_h: h.asin(),
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    /// Vacuum angle `asin(h)` in `[0, pi/2)`.
    pub fn theta_h(&self) -> f64 {
        self.theta_h
    }

    /// Total rotation `pi - 2 theta_h` across the wall.
    pub fn rotation(&self) -> f64 {
        PI - 2.0 * self.theta_h
    }

    pub fn left_limit(&self) -> f64 {
        PI - self.theta_h
    }

    pub fn right_limit(&self) -> f64 {
        self.theta_h
    }

    /// Default boundary slack: `1e-3 (pi - 2 theta_h)`.
    pub fn default_eps_bc(&self) -> f64 {
        1e-3 * self.rotation()
    }
}

/// Strict variant of [`ModelParams::new`] that also rejects `nu = 0`.
pub fn make_params(nu: f64, h: f64) -> Result<ModelParams> {
    if nu <= 0.0 {
        return Err(Error::InvalidParams(format!("nu must be > 0, got {nu}")));
    }
    ModelParams::new(nu, h)
}

/// Uniform symmetric grid on `[-L, L]` with an odd number of nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    n: usize,
    half_width: f64,
    spacing: f64,
    nodes: Vec<f64>,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(n: usize, half_width: f64) -> Result<Self> {
        if n < Self::MIN_POINTS || n.is_multiple_of(2) {
            return Err(Error::InvalidGrid(format!(
                "point count must be odd and >= {}, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !half_width.is_finite() || half_width <= 0.0 {
            return Err(Error::InvalidGrid(format!(
                "half width must be positive, got {half_width}"
            )));
        }
        let m = (n - 1) / 2;
        let spacing = half_width / m as f64;
        // (i - m) * dx is exactly antisymmetric in i.
        let nodes = (0..n)
            .map(|i| (i as f64 - m as f64) * spacing)
            .collect();
        Ok(Self {
            n,
            half_width,
            spacing,
            nodes,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Index of the node at `x = 0`.
    pub fn center(&self) -> usize {
        (self.n - 1) / 2
    }

    /// Trapezoid weights (`dx`, half weight at the two ends).
    pub fn trapezoid_weights(&self) -> Vec<f64> {
        let mut w = vec![self.spacing; self.n];
        w[0] *= 0.5;
        w[self.n - 1] *= 0.5;
        w
    }

    pub fn trapezoid(&self, values: &[f64]) -> f64 {
        debug_assert_eq!(values.len(), self.n);
        let inner: f64 = values[1..self.n - 1].iter().sum();
        self.spacing * (inner + 0.5 * (values[0] + values[self.n - 1]))
    }
}

/// Sampled angle field on a grid.
#[derive(Debug, Clone, PartialEq)]
pub struct WallProfile {
    grid: Grid,
    theta: Vec<f64>,
    params: ModelParams,
}

impl WallProfile {
    pub fn new(grid: Grid, params: ModelParams, theta: Vec<f64>) -> Result<Self> {
        if theta.len() != grid.len() {
            return Err(Error::InvalidArgument(format!(
                "{} samples for a grid of {} nodes",
                theta.len(),
                grid.len()
            )));
        }
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite theta at node {i}"
            )));
        }
        Ok(Self {
            grid,
            theta,
            params,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn into_theta(self) -> Vec<f64> {
        self.theta
    }

    /// Same grid and parameters, new samples.
    pub fn with_theta(&self, theta: Vec<f64>) -> Result<Self> {
        Self::new(self.grid.clone(), self.params, theta)
    }

    pub fn center_value(&self) -> f64 {
        self.theta[self.grid.center()]
    }

    /// `u = sin(theta) - h`, the quantity the stray-field operator acts on.
    pub fn u(&self) -> Vec<f64> {
        let h = self.params.h();
        self.theta.iter().map(|t| t.sin() - h).collect()
    }

    /// Largest deviation of the two end samples from their limits.
    pub fn boundary_defect(&self) -> f64 {
        let n = self.theta.len();
        let left = (self.theta[0] - self.params.left_limit()).abs();
        let right = (self.theta[n - 1] - self.params.right_limit()).abs();
        left.max(right)
    }

    /// Checks the range and end-value invariants for slack `eps_bc`.
    pub fn check_admissible(&self, eps_bc: f64) -> Result<()> {
        let lo = self.params.right_limit() - eps_bc;
        let hi = self.params.left_limit() + eps_bc;
        if let Some(i) = self.theta.iter().position(|&t| t < lo || t > hi) {
            return Err(Error::InvalidArgument(format!(
                "theta[{i}] = {} outside [{lo}, {hi}]",
                self.theta[i]
            )));
        }
        let defect = self.boundary_defect();
        if defect > eps_bc {
            return Err(Error::InvalidArgument(format!(
                "boundary values miss their limits by {defect:e} > {eps_bc:e}"
            )));
        }
        Ok(())
    }

    pub fn same_discretization(&self, other: &WallProfile) -> bool {
        self.grid == other.grid && self.params == other.params
    }
}

/// Per-term energy of a profile.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub exchange: f64,
    pub potential: f64,
    pub stray: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(exchange: f64, potential: f64, stray: f64) -> Self {
        Self {
            exchange,
            potential,
            stray,
            total: exchange + potential + stray,
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain record serializes")
    }
}

/// Compactly supported bump added to a kink.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Perturbation {
    pub amplitude: f64,
    pub center: f64,
    pub radius: f64,
}

impl Perturbation {
    /// Seeded bump whose support stays clear of `x = 0`, so the perturbed
    /// kink still crosses `pi/2` exactly once and only at the origin.
    pub fn from_seed(seed: u64, width: f64, params: &ModelParams) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let side = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let center = side * width * rng.gen_range(1.5..3.0);
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let amplitude = sign * params.rotation() * rng.gen_range(0.05..0.15);
        Self {
            amplitude,
            center,
            radius: width,
        }
    }

    fn eval(&self, x: f64) -> f64 {
        let s = (x - self.center) / self.radius;
        if s.abs() >= 1.0 {
            0.0
        } else {
            self.amplitude * (1.0 - s * s).powi(3)
        }
    }
}

/// Initial-guess families.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum InitKind {
    /// Smooth step equal to the limits outside `[-1, 1]`.
    Template,
    /// `theta_h + (pi - 2 theta_h) (2/pi) atan(exp(-x/w))`.
    Kink { width: f64 },
    /// Kink plus a bump, clamped to `[theta_h, pi - theta_h]`.
    Perturbed { width: f64, bump: Perturbation },
}

/// `C^inf` step: 0 for `y <= -1`, 1 for `y >= 1`, 1/2 at 0.
fn smooth_step(y: f64) -> f64 {
    fn psi(s: f64) -> f64 {
        if s <= 0.0 {
            0.0
        } else {
            (-1.0 / s).exp()
        }
    }
    let a = psi((1.0 + y) / 2.0);
    let b = psi((1.0 - y) / 2.0);
    a / (a + b)
}

fn kink_value(x: f64, width: f64, params: &ModelParams) -> f64 {
    params.theta_h() + params.rotation() * (2.0 / PI) * (-x / width).exp().atan()
}

pub fn make_initial_profile(grid: &Grid, params: &ModelParams, kind: InitKind) -> Result<WallProfile> {
    let th = params.theta_h();
    let rot = params.rotation();
    let theta: Vec<f64> = match kind {
        InitKind::Template => grid
            .nodes()
            .iter()
            .map(|&x| th + rot * smooth_step(-x))
            .collect(),
        InitKind::Kink { width } => {
            if !(width > 0.0) {
                return Err(Error::InvalidArgument(format!("kink width {width}")));
            }
            grid.nodes()
                .iter()
                .map(|&x| kink_value(x, width, params))
                .collect()
        }
        InitKind::Perturbed { width, bump } => {
            if !(width > 0.0) || !(bump.radius > 0.0) {
                return Err(Error::InvalidArgument(
                    "perturbed init needs positive width and radius".into(),
                ));
            }
            let (lo, hi) = (params.right_limit(), params.left_limit());
            grid.nodes()
                .iter()
                .map(|&x| (kink_value(x, width, params) + bump.eval(x)).clamp(lo, hi))
                .collect()
        }
    };
    let mut theta = theta;
    // Exact pinning: the template and kink formulas give pi/2 at x = 0 only up to rounding.
    theta[grid.center()] = FRAC_PI_2;
    WallProfile::new(grid.clone(), *params, theta)
}

/// Position of the `pi/2` crossing in fractional node-index units.
fn crossing_index(theta: &[f64]) -> Result<f64> {
    let d: Vec<f64> = theta.iter().map(|t| t - FRAC_PI_2).collect();
    let signs: Vec<(usize, f64)> = d
        .iter()
        .enumerate()
        .filter(|(_, v)| **v != 0.0)
        .map(|(i, v)| (i, v.signum()))
        .collect();
    let changes = signs.windows(2).filter(|w| w[0].1 != w[1].1).count();
    match changes {
        0 => return Err(Error::NoCrossing),
        1 => {}
        k => return Err(Error::MultipleCrossings(k)),
    }
    let k = signs
        .windows(2)
        .position(|w| w[0].1 != w[1].1)
        .expect("one sign change");
    let (i, j) = (signs[k].0, signs[k + 1].0);
    if j > i + 1 {
        // Exact zeros in between: take the middle of the zero run.
        return Ok(0.5 * (i + j) as f64);
    }
    Ok(i as f64 + d[i] / (d[i] - d[j]))
}

/// Sub-node location of the `pi/2` crossing in `x` units.
pub fn crossing_offset(p: &WallProfile) -> Result<f64> {
    let idx = crossing_index(p.theta())?;
    Ok((idx - p.grid().center() as f64) * p.grid().spacing())
}

/// Translates the profile so that the `pi/2` crossing sits at `x = 0`.
///
/// Resampling is linear, with constant extension of the end values into the
/// exposed edge. Returns the profile and the applied shift in `x` units.
pub fn recenter_with_shift(p: &WallProfile) -> Result<(WallProfile, f64)> {
    let theta = p.theta();
    let n = theta.len();
    let shift = crossing_index(theta)? - p.grid().center() as f64;
    let out = (0..n)
        .map(|i| {
            let pos = i as f64 + shift;
            if pos <= 0.0 {
                theta[0]
            } else if pos >= (n - 1) as f64 {
                theta[n - 1]
            } else {
                let k = pos.floor() as usize;
                let s = pos - k as f64;
                if s == 0.0 {
                    theta[k]
                } else {
                    (1.0 - s) * theta[k] + s * theta[k + 1]
                }
            }
        })
        .collect();
    Ok((p.with_theta(out)?, shift * p.grid().spacing()))
}

pub fn recenter(p: &WallProfile) -> Result<WallProfile> {
    recenter_with_shift(p).map(|(q, _)| q)
}

/// The symmetry map `x -> pi - theta(-x)`.
pub fn reflect_compose(p: &WallProfile) -> WallProfile {
    let theta = p.theta().iter().rev().map(|t| PI - t).collect();
    p.with_theta(theta).expect("same grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid() -> Grid {
        Grid::new(801, 20.0).unwrap()
    }

    #[test]
    fn params_validation() {
        assert_eq!(make_params(1.0, 0.0).unwrap().theta_h(), 0.0);
        let p = make_params(1.0, 0.5).unwrap();
        assert!((p.theta_h() - PI / 6.0).abs() < 1e-15);
        assert!(make_params(2.0, 1.0).is_err());
        assert!(make_params(0.0, 0.2).is_err());
        assert!(make_params(-1.0, 0.2).is_err());
        assert!(make_params(1.0, -0.1).is_err());
        assert!(ModelParams::new(0.0, 0.0).is_ok());
    }

    #[test]
    fn grid_is_symmetric_and_contains_origin() {
        let g = grid();
        assert_eq!(g.nodes()[g.center()], 0.0);
        for i in 0..g.len() {
            assert_eq!(g.nodes()[i], -g.nodes()[g.len() - 1 - i]);
        }
        assert!(Grid::new(800, 1.0).is_err());
        assert!(Grid::new(15, 1.0).is_err());
        assert!(Grid::new(17, 0.0).is_err());
    }

    #[test]
    fn template_limits_and_center() {
        let params = ModelParams::new(1.0, 0.3).unwrap();
        let g = grid();
        let p = make_initial_profile(&g, &params, InitKind::Template).unwrap();
        for (x, t) in g.nodes().iter().zip(p.theta()) {
            if *x > 1.0 {
                assert_eq!(*t, params.theta_h());
            }
            if *x < -1.0 {
                assert_eq!(*t, params.left_limit());
            }
        }
        assert_eq!(p.center_value(), FRAC_PI_2);
        assert!(p.theta().windows(2).all(|w| w[1] <= w[0]));
        p.check_admissible(params.default_eps_bc()).unwrap();
    }

    #[test]
    fn kink_matches_closed_form() {
        let params = ModelParams::new(1.0, 0.0).unwrap();
        let g = grid();
        let p = make_initial_profile(&g, &params, InitKind::Kink { width: 1.0 }).unwrap();
        assert_eq!(p.center_value(), FRAC_PI_2);
        for (x, t) in g.nodes().iter().zip(p.theta()) {
            assert!((t - 2.0 * (-x).exp().atan()).abs() < 1e-15);
        }
    }

    #[test]
    fn recenter_is_identity_on_centred_profile() {
        let params = ModelParams::new(1.0, 0.2).unwrap();
        let p = make_initial_profile(&grid(), &params, InitKind::Kink { width: 1.5 }).unwrap();
        let (q, shift) = recenter_with_shift(&p).unwrap();
        assert_eq!(shift, 0.0);
        assert_eq!(p, q);
    }

    #[test]
    fn recenter_undoes_node_shift() {
        let params = ModelParams::new(1.0, 0.0).unwrap();
        let g = grid();
        let dx = g.spacing();
        let shifted: Vec<f64> = g
            .nodes()
            .iter()
            .map(|&x| kink_value(x - 2.0 * dx, 1.0, &params))
            .collect();
        let p = WallProfile::new(g.clone(), params, shifted).unwrap();
        let (q, shift) = recenter_with_shift(&p).unwrap();
        assert!((shift - 2.0 * dx).abs() < 1e-12);
        assert!((q.center_value() - FRAC_PI_2).abs() < 1e-12);
        for i in 0..g.len() - 2 {
            assert!((q.theta()[i] - kink_value(g.nodes()[i], 1.0, &params)).abs() < 1e-12);
        }
    }

    #[test]
    fn recenter_errors() {
        let params = ModelParams::new(1.0, 0.3).unwrap();
        let g = grid();
        let flat = WallProfile::new(g.clone(), params, vec![params.theta_h(); g.len()]).unwrap();
        assert!(matches!(recenter(&flat), Err(Error::NoCrossing)));

        let mut wiggly = make_initial_profile(&g, &params, InitKind::Kink { width: 1.0 })
            .unwrap()
            .into_theta();
        let c = g.center();
        wiggly[c + 40] = 2.0;
        assert!(matches!(
            recenter(&WallProfile::new(g, params, wiggly).unwrap()),
            Err(Error::MultipleCrossings(3))
        ));
    }

    #[test]
    fn reflect_fixes_kink_and_moves_bump() {
        let params = ModelParams::new(1.0, 0.0).unwrap();
        let g = grid();
        let kink = make_initial_profile(&g, &params, InitKind::Kink { width: 1.0 }).unwrap();
        let r = reflect_compose(&kink);
        for (a, b) in kink.theta().iter().zip(r.theta()) {
            assert!((a - b).abs() < 1e-15);
        }

        let bump = Perturbation {
            amplitude: 0.2,
            center: 3.0,
            radius: 1.0,
        };
        let p = make_initial_profile(&g, &params, InitKind::Perturbed { width: 1.0, bump }).unwrap();
        let r = reflect_compose(&p);
        let mirrored = Perturbation {
            amplitude: -0.2,
            center: -3.0,
            radius: 1.0,
        };
        let expect = make_initial_profile(
            &g,
            &params,
            InitKind::Perturbed {
                width: 1.0,
                bump: mirrored,
            },
        )
        .unwrap();
        for (a, b) in r.theta().iter().zip(expect.theta()) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn seeded_perturbation_keeps_single_crossing() {
        let params = ModelParams::new(1.0, 0.3).unwrap();
        let g = grid();
        for seed in 0..20 {
            let bump = Perturbation::from_seed(seed, 2.0, &params);
            let p = make_initial_profile(&g, &params, InitKind::Perturbed { width: 2.0, bump })
                .unwrap();
            assert_eq!(crossing_offset(&p).unwrap(), 0.0);
            p.check_admissible(params.default_eps_bc()).unwrap();
        }
        assert_eq!(
            Perturbation::from_seed(7, 2.0, &params),
            Perturbation::from_seed(7, 2.0, &params)
        );
    }
}
