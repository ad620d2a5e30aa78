//! Energy along the arcsin interpolation path.
//!
//! For two recentred monotone walls the path `theta^t` is defined by
//! `sin theta^t = t sin theta_1 + (1 - t) sin theta_2`, taking the branch
//! `asin` for `x >= 0` and `pi - asin` for `x < 0`. Along it `u^t` is affine in
//! `t`, so the potential and stray parts of `f(t) = E(theta^t)` are exact
//! quadratics and the energy is strictly convex. Together with vanishing end
//! derivatives at solutions this forces two solutions to coincide.

use std::f64::consts::{FRAC_PI_2, PI};

use serde::Serialize;

use crate::analysis::check_monotone;
use crate::energy::{evaluate, Evaluation};
use crate::error::{Error, Result};
use crate::halflap::HalfLaplacianOperator;
use crate::model::WallProfile;

pub const RECENTRED_TOL: f64 = 1e-10;
pub const ASIN_SLACK: f64 = 1e-15;
pub const CENTER_SLOPE_MIN: f64 = 1e-8;
pub const FD_STEP: f64 = 0.01;
pub const DEFAULT_T_POINTS: usize = 41;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathPoint {
    pub t: f64,
    pub f: f64,
    pub f_prime: f64,
    pub f_prime_fd: f64,
    pub f_second_fd: f64,
    pub f_second_analytic: f64,
}

/// `theta^t_x`, `theta^t_xt` and `theta^t_xtt` on the grid.
#[derive(Debug, Clone, PartialEq)]
pub struct PathFields {
    pub theta_x: Vec<f64>,
    pub theta_xt: Vec<f64>,
    pub theta_xtt: Vec<f64>,
}

/// Fourth-order central differences, second order at the two ends.
fn slope(theta: &[f64], dx: f64) -> Vec<f64> {
    let n = theta.len();
    (0..n)
        .map(|i| {
            if i == 0 {
                (-3.0 * theta[0] + 4.0 * theta[1] - theta[2]) / (2.0 * dx)
            } else if i == n - 1 {
                (3.0 * theta[n - 1] - 4.0 * theta[n - 2] + theta[n - 3]) / (2.0 * dx)
            } else if i == 1 || i == n - 2 {
                (theta[i + 1] - theta[i - 1]) / (2.0 * dx)
            } else {
                (theta[i - 2] - 8.0 * theta[i - 1] + 8.0 * theta[i + 1] - theta[i + 2]) / (12.0 * dx)
            }
        })
        .collect()
}

fn check_endpoint(p: &WallProfile) -> Result<()> {
    let off = p.center_value() - FRAC_PI_2;
    if off.abs() > RECENTRED_TOL {
        return Err(Error::NotRecentred(off));
    }
    let mono = check_monotone(p);
    if !mono.monotone {
        return Err(Error::InvalidArgument(format!(
            "path endpoints must be non-increasing (violation {:e})",
            mono.max_violation
        )));
    }
    let (lo, hi) = (p.params().right_limit(), p.params().left_limit());
    let slack = 1e-12;
    if let Some(i) = p.theta().iter().position(|&t| t < lo - slack || t > hi + slack) {
        return Err(Error::InvalidArgument(format!(
            "theta[{i}] = {} outside [theta_h, pi - theta_h]",
            p.theta()[i]
        )));
    }
    Ok(())
}

fn check_pair(p1: &WallProfile, p2: &WallProfile) -> Result<()> {
    if !p1.same_discretization(p2) {
        return Err(Error::Incompatible(
            "path endpoints must share grid and parameters".into(),
        ));
    }
    check_endpoint(p1)?;
    check_endpoint(p2)
}

/// Precomputed quantities for one path.
pub struct ArcsinPath<'a> {
    p1: &'a WallProfile,
    p2: &'a WallProfile,
    op: HalfLaplacianOperator,
    identical: bool,
    s1: Vec<f64>,
    s2: Vec<f64>,
    /// `cos(theta_i) * theta_i,x`.
    g1: Vec<f64>,
    g2: Vec<f64>,
    u1: Vec<f64>,
    u2: Vec<f64>,
    /// Centre slopes `theta_i,x(0)`.
    a1: f64,
    a2: f64,
    p11: f64,
    p12: f64,
    p22: f64,
    pdd: f64,
}

impl<'a> ArcsinPath<'a> {
    pub fn new(p1: &'a WallProfile, p2: &'a WallProfile) -> Result<Self> {
        check_pair(p1, p2)?;
        let grid = p1.grid();
        let dx = grid.spacing();
        let c = grid.center();
        let d1 = slope(p1.theta(), dx);
        let d2 = slope(p2.theta(), dx);
        let (a1, a2) = (d1[c], d2[c]);
        for a in [a1, a2] {
            if a.abs() < CENTER_SLOPE_MIN {
                return Err(Error::CenterDegenerate(a));
            }
        }
        let s1: Vec<f64> = p1.theta().iter().map(|t| t.sin()).collect();
        let s2: Vec<f64> = p2.theta().iter().map(|t| t.sin()).collect();
        let g1 = p1.theta().iter().zip(&d1).map(|(t, d)| t.cos() * d).collect();
        let g2 = p2.theta().iter().zip(&d2).map(|(t, d)| t.cos() * d).collect();
        let (u1, u2) = (p1.u(), p2.u());
        let op = HalfLaplacianOperator::new(grid);
        let du: Vec<f64> = u1.iter().zip(&u2).map(|(a, b)| a - b).collect();
        let p11 = op.pairing(&u1, &u1)?;
        let p12 = op.pairing(&u1, &u2)?;
        let p22 = op.pairing(&u2, &u2)?;
        let pdd = op.pairing(&du, &du)?;
        Ok(Self {
            p1,
            p2,
            op,
            identical: p1.theta() == p2.theta(),
            s1,
            s2,
            g1,
            g2,
            u1,
            u2,
            a1,
            a2,
            p11,
            p12,
            p22,
            pdd,
        })
    }

    pub fn operator(&self) -> &HalfLaplacianOperator {
        &self.op
    }

    fn check_t(t: f64) -> Result<()> {
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidArgument(format!("path parameter {t} outside [0, 1]")));
        }
        Ok(())
    }

    /// `t s_1 + (1 - t) s_2`, clamped to `[-1, 1]` within roundoff.
    fn sine(&self, t: f64, i: usize) -> Result<f64> {
        let s = t * self.s1[i] + (1.0 - t) * self.s2[i];
        if s.abs() > 1.0 + ASIN_SLACK {
            return Err(Error::RangeViolation { index: i, value: s });
        }
        Ok(s.clamp(-1.0, 1.0))
    }

    pub fn theta(&self, t: f64) -> Result<Vec<f64>> {
        Self::check_t(t)?;
        if t == 1.0 || self.identical {
            return Ok(self.p1.theta().to_vec());
        }
        if t == 0.0 {
            return Ok(self.p2.theta().to_vec());
        }
        let c = self.p1.grid().center();
        (0..self.s1.len())
            .map(|i| {
                if i == c {
                    return Ok(FRAC_PI_2);
                }
                let a = self.sine(t, i)?.asin();
                Ok(if i > c { a } else { PI - a })
            })
            .collect()
    }

    pub fn profile(&self, t: f64) -> Result<WallProfile> {
        self.p1.with_theta(self.theta(t)?)
    }

    pub fn fields(&self, t: f64) -> Result<PathFields> {
        Self::check_t(t)?;
        let theta = self.theta(t)?;
        let c = self.p1.grid().center();
        let n = theta.len();
        let mut theta_x = vec![0.0; n];
        let mut theta_xt = vec![0.0; n];
        let mut theta_xtt = vec![0.0; n];
        for i in 0..n {
            if i == c {
                let (q1, q2) = (self.a1 * self.a1, self.a2 * self.a2);
                let q = t * q1 + (1.0 - t) * q2;
                let r = q.sqrt();
                theta_x[i] = -r;
                theta_xt[i] = (q2 - q1) / (2.0 * r);
                theta_xtt[i] = (q2 - q1).powi(2) / (4.0 * q * r);
                continue;
            }
            let s = theta[i].sin();
            let cs = theta[i].cos();
            let a = t * self.g1[i] + (1.0 - t) * self.g2[i];
            let b = self.g1[i] - self.g2[i];
            let d = self.s1[i] - self.s2[i];
            let c3 = cs * cs * cs;
            theta_x[i] = a / cs;
            theta_xt[i] = b / cs + s * d * a / c3;
            theta_xtt[i] = 3.0 * d * d * s * s * a / (c3 * cs * cs) + 2.0 * s * d * b / c3 + d * d * a / c3;
        }
        Ok(PathFields {
            theta_x,
            theta_xt,
            theta_xtt,
        })
    }

    pub fn energy_at(&self, t: f64) -> Result<Evaluation> {
        evaluate(&self.theta(t)?, self.p1.params(), &self.op)
    }

    fn f(&self, t: f64) -> Result<f64> {
        Ok(self.energy_at(t)?.energy.total)
    }

    fn mix_u(&self, t: f64) -> Vec<f64> {
        self.u1.iter().zip(&self.u2).map(|(a, b)| t * a + (1.0 - t) * b).collect()
    }

    /// `f'(t)` from the differentiated path energy.
    pub fn f_prime(&self, t: f64, fields: &PathFields) -> f64 {
        let grid = self.p1.grid();
        let ex: Vec<f64> = fields.theta_x.iter().zip(&fields.theta_xt).map(|(a, b)| a * b).collect();
        let ut = self.mix_u(t);
        let pot: Vec<f64> = ut
            .iter()
            .zip(self.u1.iter().zip(&self.u2))
            .map(|(w, (a, b))| w * (a - b))
            .collect();
        let nu = self.p1.params().nu();
        grid.trapezoid(&ex)
            + grid.trapezoid(&pot)
            + 0.5 * nu * (t * (self.p11 - self.p12) - (1.0 - t) * (self.p22 - self.p12))
    }

    /// `f''(t)` from the differentiated path energy, including the cross
    /// pairing of `u_1` and `u_2`.
    pub fn f_second(&self, fields: &PathFields) -> f64 {
        let grid = self.p1.grid();
        let ex: Vec<f64> = (0..fields.theta_x.len())
            .map(|i| fields.theta_xt[i].powi(2) + fields.theta_x[i] * fields.theta_xtt[i])
            .collect();
        let du2: Vec<f64> = self.u1.iter().zip(&self.u2).map(|(a, b)| (a - b).powi(2)).collect();
        let nu = self.p1.params().nu();
        let local = grid.trapezoid(&ex) + grid.trapezoid(&du2);
        let value = local + 0.5 * nu * self.pdd;
        log::debug!(
            "f'' = {value:e}; without the cross pairing it would read {:e}",
            local + 0.5 * nu * (self.p11 + self.p22)
        );
        value
    }

    fn stencil(&self, t: f64) -> Result<(f64, f64)> {
        let h = FD_STEP;
        let fs = |offsets: [f64; 5]| -> Result<[f64; 5]> {
            let mut out = [0.0; 5];
            for (o, k) in out.iter_mut().zip(offsets) {
                *o = self.f(t + k * h)?;
            }
            Ok(out)
        };
        if t - 2.0 * h >= 0.0 && t + 2.0 * h <= 1.0 {
            let f = fs([-2.0, -1.0, 0.0, 1.0, 2.0])?;
            let d1 = (f[0] - 8.0 * f[1] + 8.0 * f[3] - f[4]) / (12.0 * h);
            let d2 = (-f[0] + 16.0 * f[1] - 30.0 * f[2] + 16.0 * f[3] - f[4]) / (12.0 * h * h);
            Ok((d1, d2))
        } else {
            let dir = if t - 2.0 * h < 0.0 { 1.0 } else { -1.0 };
            let f = fs([0.0, dir, 2.0 * dir, 3.0 * dir, 4.0 * dir])?;
            let d1 = dir * (-25.0 * f[0] + 48.0 * f[1] - 36.0 * f[2] + 16.0 * f[3] - 3.0 * f[4]) / (12.0 * h);
            let d2 = (35.0 * f[0] - 104.0 * f[1] + 114.0 * f[2] - 56.0 * f[3] + 11.0 * f[4]) / (12.0 * h * h);
            Ok((d1, d2))
        }
    }

    pub fn point(&self, t: f64) -> Result<PathPoint> {
        let fields = self.fields(t)?;
        let f = self.f(t)?;
        let (f_prime_fd, f_second_fd) = if self.identical {
            (0.0, 0.0)
        } else {
            self.stencil(t)?
        };
        Ok(PathPoint {
            t,
            f,
            f_prime: self.f_prime(t, &fields),
            f_prime_fd,
            f_second_fd,
            f_second_analytic: self.f_second(&fields),
        })
    }
}

pub fn interpolate_profiles(p1: &WallProfile, p2: &WallProfile, t: f64) -> Result<WallProfile> {
    ArcsinPath::new(p1, p2)?.profile(t)
}

pub fn path_derivative_fields(p1: &WallProfile, p2: &WallProfile, t: f64) -> Result<PathFields> {
    ArcsinPath::new(p1, p2)?.fields(t)
}

pub fn uniform_t_grid(points: usize) -> Vec<f64> {
    let m = points.max(2) - 1;
    (0..=m).map(|k| k as f64 / m as f64).collect()
}

pub fn path_scan(p1: &WallProfile, p2: &WallProfile, t_grid: &[f64]) -> Result<Vec<PathPoint>> {
    if t_grid.windows(2).any(|w| w[1] < w[0]) {
        return Err(Error::InvalidArgument("t grid must be sorted".into()));
    }
    let path = ArcsinPath::new(p1, p2)?;
    t_grid.iter().map(|&t| path.point(t)).collect()
}

pub const PATH_HEADER: &str = "t,f,f_prime,f_second_fd,f_second_analytic";

pub fn path_csv(points: &[PathPoint]) -> String {
    let mut out = String::from(PATH_HEADER);
    out.push('\n');
    for p in points {
        out.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            p.t, p.f, p.f_prime, p.f_second_fd, p.f_second_analytic
        ));
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct StationarityDefect {
    /// Derivative of the discrete energy along the path, at the candidate.
    pub defect: f64,
    /// `int |d theta^t / dt| dx` at the candidate.
    pub velocity_norm: f64,
}

/// `f'` at the end of the path occupied by `candidate`, the path running from
/// `other` to `candidate`.
///
/// Computed as the exact directional derivative of the discrete energy,
/// `sum_i dE/dtheta_i * dtheta_i/dt`, with `dtheta/dt = (sin theta_c - sin theta_o) / cos theta_c`.
pub fn stationarity_defect(candidate: &WallProfile, other: &WallProfile) -> Result<StationarityDefect> {
    check_pair(candidate, other)?;
    let op = HalfLaplacianOperator::new(candidate.grid());
    let eval = evaluate(candidate.theta(), candidate.params(), &op)?;
    let c = candidate.grid().center();
    let dx = candidate.grid().spacing();
    let mut defect = 0.0;
    let mut velocity_norm = 0.0;
    for (i, (tc, to)) in candidate.theta().iter().zip(other.theta()).enumerate() {
        let v = if i == c || tc == to {
            0.0
        } else {
            (tc.sin() - to.sin()) / tc.cos()
        };
        defect += eval.gradient[i] * v;
        velocity_norm += v.abs() * dx;
    }
    Ok(StationarityDefect {
        defect,
        velocity_norm,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Verdict {
    Coincide,
    NotBothSolutions,
    /// Both ends stationary, convex, yet distinct.
    Contradiction,
    /// Both ends stationary and distinct, but `f''` was not positive.
    NonConvex,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CertificateOptions {
    pub grad_tol: f64,
    pub coincide_tol: f64,
    pub t_points: usize,
}

impl Default for CertificateOptions {
    fn default() -> Self {
        Self {
            grad_tol: 1e-8,
            coincide_tol: 1e-5,
            t_points: DEFAULT_T_POINTS,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Certificate {
    pub verdict: Verdict,
    pub identical_inputs: bool,
    pub min_f_second: f64,
    /// `f'(0)`, at the second profile.
    pub f_prime_start: f64,
    /// `f'(1)`, at the first profile.
    pub f_prime_end: f64,
    pub start_tolerance: f64,
    pub end_tolerance: f64,
    pub sup_difference: f64,
    pub coincide_tol: f64,
    #[serde(skip)]
    pub scan: Vec<PathPoint>,
}

impl Certificate {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain record serializes")
    }
}

fn stationarity_tol(grad_tol: f64, velocity_norm: f64) -> f64 {
    10.0 * grad_tol * velocity_norm + 1e-14
}

pub fn uniqueness_certificate(
    p1: &WallProfile,
    p2: &WallProfile,
    opts: &CertificateOptions,
) -> Result<Certificate> {
    let scan = path_scan(p1, p2, &uniform_t_grid(opts.t_points))?;
    let end = stationarity_defect(p1, p2)?;
    let start = stationarity_defect(p2, p1)?;
    let min_f_second = scan
        .iter()
        .map(|p| p.f_second_analytic)
        .fold(f64::INFINITY, f64::min);
    let sup_difference = p1
        .theta()
        .iter()
        .zip(p2.theta())
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    let identical_inputs = sup_difference == 0.0;
    let start_tolerance = stationarity_tol(opts.grad_tol, start.velocity_norm);
    let end_tolerance = stationarity_tol(opts.grad_tol, end.velocity_norm);
    let stationary = start.defect.abs() <= start_tolerance && end.defect.abs() <= end_tolerance;
    let verdict = if identical_inputs {
        Verdict::Coincide
    } else if !stationary {
        Verdict::NotBothSolutions
    } else if sup_difference <= opts.coincide_tol {
        Verdict::Coincide
    } else if min_f_second > 0.0 {
        Verdict::Contradiction
    } else {
        Verdict::NonConvex
    };
    Ok(Certificate {
        verdict,
        identical_inputs,
        min_f_second,
        f_prime_start: -start.defect,
        f_prime_end: end.defect,
        start_tolerance,
        end_tolerance,
        sup_difference,
        coincide_tol: opts.coincide_tol,
        scan,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{make_initial_profile, Grid, InitKind, ModelParams};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn pair(n: usize, l: f64) -> (WallProfile, WallProfile) {
        let params = ModelParams::new(1.0, 0.3).unwrap();
        let grid = Grid::new(n, l).unwrap();
        (
            make_initial_profile(&grid, &params, InitKind::Kink { width: 1.0 }).unwrap(),
            make_initial_profile(&grid, &params, InitKind::Kink { width: 2.0 }).unwrap(),
        )
    }

    #[test]
    fn endpoints_and_fixed_point() {
        let (p1, p2) = pair(401, 20.0);
        assert_eq!(interpolate_profiles(&p1, &p2, 1.0).unwrap(), p1);
        assert_eq!(interpolate_profiles(&p1, &p2, 0.0).unwrap(), p2);
        for t in [0.0, 0.3, 0.9] {
            assert_eq!(interpolate_profiles(&p1, &p1, t).unwrap(), p1);
        }
        let f = path_derivative_fields(&p1, &p1, 0.4).unwrap();
        assert!(f.theta_xt.iter().all(|v| *v == 0.0));
        assert!(f.theta_xtt.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn midpoint_matches_direct_formula() {
        let (p1, p2) = pair(401, 20.0);
        let mid = interpolate_profiles(&p1, &p2, 0.5).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..10 {
            let i = rng.gen_range(0..401);
            let s = 0.5 * (p1.theta()[i].sin() + p2.theta()[i].sin());
            let x = p1.grid().nodes()[i];
            let expect = if x >= 0.0 { s.asin() } else { PI - s.asin() };
            assert!((mid.theta()[i] - expect).abs() < 1e-15);
        }
        assert_eq!(mid.center_value(), FRAC_PI_2);
    }

    #[test]
    fn centre_slope_formula() {
        let (p1, p2) = pair(801, 20.0);
        let dx = p1.grid().spacing();
        let c = p1.grid().center();
        let t = 0.3;
        let f = path_derivative_fields(&p1, &p2, t).unwrap();
        let a1 = slope(p1.theta(), dx)[c];
        let a2 = slope(p2.theta(), dx)[c];
        assert_eq!(f.theta_x[c], -(t * a1 * a1 + (1.0 - t) * a2 * a2).sqrt());
        // Neighbours approach the centre value.
        for field in [&f.theta_x, &f.theta_xt, &f.theta_xtt] {
            assert!((field[c + 1] - field[c]).abs() < 0.05 * (1.0 + field[c].abs()));
        }
    }

    #[test]
    fn t_derivatives_match_differences_in_t() {
        let (p1, p2) = pair(401, 20.0);
        let path = ArcsinPath::new(&p1, &p2).unwrap();
        let d = 1e-4;
        let t = 0.4;
        let f0 = path.fields(t).unwrap();
        let fp = path.fields(t + d).unwrap();
        let fm = path.fields(t - d).unwrap();
        for i in 1..400 {
            let xt = (fp.theta_x[i] - fm.theta_x[i]) / (2.0 * d);
            let xtt = (fp.theta_xt[i] - fm.theta_xt[i]) / (2.0 * d);
            assert!((xt - f0.theta_xt[i]).abs() <= 1e-6 * f0.theta_xt[i].abs().max(1e-3), "{i}");
            assert!((xtt - f0.theta_xtt[i]).abs() <= 1e-6 * f0.theta_xtt[i].abs().max(1e-3), "{i}");
        }
    }

    #[test]
    fn scan_of_identical_pair_is_flat() {
        let (p1, _) = pair(201, 12.0);
        let pts = path_scan(&p1, &p1, &uniform_t_grid(5)).unwrap();
        for p in &pts {
            assert_eq!(p.f, pts[0].f);
            assert_eq!(p.f_prime, 0.0);
            assert_eq!(p.f_second_analytic, 0.0);
            assert_eq!(p.f_second_fd, 0.0);
        }
        let cert = uniqueness_certificate(&p1, &p1, &CertificateOptions::default()).unwrap();
        assert_eq!(cert.verdict, Verdict::Coincide);
        assert!(cert.identical_inputs);
    }

    #[test]
    fn swapping_mirrors_the_scan() {
        let (p1, p2) = pair(201, 12.0);
        let grid = uniform_t_grid(11);
        let a = path_scan(&p1, &p2, &grid).unwrap();
        let b = path_scan(&p2, &p1, &grid).unwrap();
        for (x, y) in a.iter().zip(b.iter().rev()) {
            assert!((x.f - y.f).abs() < 1e-13);
        }
        assert_eq!(a[0].f, b[10].f);
    }

    #[test]
    fn preconditions() {
        let (p1, p2) = pair(201, 12.0);
        let mut t = p1.theta().to_vec();
        t[100] += 1e-6;
        let off = p1.with_theta(t).unwrap();
        assert!(matches!(ArcsinPath::new(&off, &p2), Err(Error::NotRecentred(_))));
        let other = make_initial_profile(
            &Grid::new(203, 12.0).unwrap(),
            p1.params(),
            InitKind::Template,
        )
        .unwrap();
        assert!(matches!(ArcsinPath::new(&p1, &other), Err(Error::Incompatible(_))));
        assert!(ArcsinPath::new(&p1, &p2).unwrap().theta(1.5).is_err());
    }

    #[test]
    fn stationarity_of_identical_pair() {
        let (p1, _) = pair(201, 12.0);
        assert_eq!(stationarity_defect(&p1, &p1).unwrap().defect, 0.0);
    }
}
