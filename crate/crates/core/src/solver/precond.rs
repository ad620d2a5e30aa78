//! Constant-coefficient preconditioner for the wall Hessian.
//!
//! Far from the wall core the energy Hessian is close to
//! `dx (-D^2 + nu/2 cos^2(theta_h) (-D^2)^(1/2) + cos^2(theta_h))` with
//! Dirichlet conditions at every frozen node. That operator is diagonal in the
//! discrete sine basis of each free segment, so it is inverted with a DST-I.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::model::ModelParams;

struct Segment {
    start: usize,
    len: usize,
    fft: Arc<dyn Fft<f64>>,
    /// Reciprocal eigenvalues, DST normalization folded in.
    inverse_eigs: Vec<f64>,
}

pub struct Preconditioner {
    segments: Vec<Segment>,
    n: usize,
}

/// Unnormalized DST-I: `y_k = sum_j x_j sin(pi j k / (m + 1))`, `j, k = 1..m`.
fn dst1(fft: &dyn Fft<f64>, x: &[f64]) -> Vec<f64> {
    let m = x.len();
    let len = 2 * (m + 1);
    let mut buf = vec![Complex::new(0.0, 0.0); len];
    for (j, v) in x.iter().enumerate() {
        buf[j + 1].re = *v;
        buf[len - 1 - j].re = -*v;
    }
    fft.process(&mut buf);
    (1..=m).map(|k| -0.5 * buf[k].im).collect()
}

impl Preconditioner {
    /// `free[i]` marks the nodes that move; every other node is Dirichlet data.
    pub fn new(params: &ModelParams, dx: f64, free: &[bool]) -> Self {
        let n = free.len();
        let c2 = params.theta_h().cos().powi(2);
        let half_nu = 0.5 * params.nu();
        let mut planner = FftPlanner::new();
        let mut segments = Vec::new();
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
            let len = i - start;
            let fft = planner.plan_fft_forward(2 * (len + 1));
            let norm = 2.0 / (len + 1) as f64;
            let inverse_eigs = (1..=len)
                .map(|k| {
                    let s = (std::f64::consts::PI * k as f64 / (2.0 * (len + 1) as f64)).sin();
                    let lap = 4.0 * s * s / (dx * dx);
                    let eig = dx * (lap + half_nu * c2 * lap.sqrt() + c2);
                    norm / eig
                })
                .collect();
            segments.push(Segment {
                start,
                len,
                fft,
                inverse_eigs,
            });
        }
        Self { segments, n }
    }

    /// `P^{-1} g`, zero on frozen nodes.
    pub fn solve(&self, g: &[f64]) -> Vec<f64> {
        debug_assert_eq!(g.len(), self.n);
        let mut out = vec![0.0; self.n];
        for seg in &self.segments {
            let rhs = &g[seg.start..seg.start + seg.len];
            let mut coef = dst1(seg.fft.as_ref(), rhs);
            for (c, w) in coef.iter_mut().zip(&seg.inverse_eigs) {
                *c *= w;
            }
            let x = dst1(seg.fft.as_ref(), &coef);
            out[seg.start..seg.start + seg.len].copy_from_slice(&x);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dst_is_self_inverse_up_to_scale() {
        let m = 13;
        let fft = FftPlanner::new().plan_fft_forward(2 * (m + 1));
        let x: Vec<f64> = (0..m).map(|i| (i as f64 * 0.7).cos() + 0.1 * i as f64).collect();
        let direct: Vec<f64> = (1..=m)
            .map(|k| {
                (1..=m)
                    .map(|j| x[j - 1] * (std::f64::consts::PI * (j * k) as f64 / (m + 1) as f64).sin())
                    .sum()
            })
            .collect();
        let y = dst1(fft.as_ref(), &x);
        for (a, b) in y.iter().zip(&direct) {
            assert!((a - b).abs() < 1e-12);
        }
        let back = dst1(fft.as_ref(), &y);
        for (a, b) in back.iter().zip(&x) {
            assert!((a * 2.0 / (m + 1) as f64 - b).abs() < 1e-12);
        }
    }

    #[test]
    fn inverts_local_operator_on_each_segment() {
        let params = ModelParams::new(0.0, 0.5).unwrap();
        let dx = 0.1;
        let n = 21;
        let mut free = vec![true; n];
        free[0] = false;
        free[10] = false;
        free[n - 1] = false;
        let pc = Preconditioner::new(&params, dx, &free);
        let x: Vec<f64> = (0..n)
            .map(|i| if free[i] { (i as f64).sin() } else { 0.0 })
            .collect();
        let c2 = 0.75;
        let apply: Vec<f64> = (0..n)
            .map(|i| {
                if !free[i] {
                    return 0.0;
                }
                let lap = (2.0 * x[i] - x[i - 1] - x[i + 1]) / (dx * dx);
                dx * (lap + c2 * x[i])
            })
            .collect();
        let back = pc.solve(&apply);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
