use neelwall::analysis::fit_decay;
use neelwall::corpus::{solved_walls, QUADRATURE_DELTA};
use neelwall::energy::evaluate;
use neelwall::greenfn::{fold_with, green_summary, reconstruct, LinearizedOperator};
use neelwall::halflap::{apply_quadrature, HalfLaplacianOperator};
use neelwall::model::{make_initial_profile, Grid, InitKind, ModelParams, WallProfile};
use neelwall::path::{path_scan, uniform_t_grid, ArcsinPath};

fn kink(p: &WallProfile, width: f64) -> WallProfile {
    make_initial_profile(p.grid(), p.params(), InitKind::Kink { width }).unwrap()
}

#[test]
fn analytic_path_slope_matches_differences() {
    // f' crosses zero at the minimizer end, so the gap is measured against
    // the largest slope along the path.
    let grid = Grid::new(8193, 40.0).unwrap();
    let m = solved_walls(&grid, &[(1.0, 0.3)]).unwrap().remove(0);
    let k = kink(&m, 2.0);
    let scan = path_scan(&m, &k, &uniform_t_grid(41)).unwrap();
    let scale = scan.iter().map(|p| p.f_prime.abs()).fold(0.0, f64::max);
    let worst = scan[1..40]
        .iter()
        .map(|p| (p.f_prime - p.f_prime_fd).abs())
        .fold(0.0, f64::max);
    assert!(worst <= 1e-5 * scale, "{worst:e} vs {scale}");
}

#[test]
fn energy_is_strictly_convex_along_corpus_paths() {
    let grid = Grid::new(2049, 40.0).unwrap();
    for m in solved_walls(&grid, &[(0.5, 0.0), (1.0, 0.3), (4.0, 0.75)]).unwrap() {
        let pairs = [
            (m.clone(), kink(&m, 1.0)),
            (m.clone(), kink(&m, 3.0)),
            (kink(&m, 0.7), kink(&m, 2.5)),
        ];
        for (a, b) in &pairs {
            let scan = path_scan(a, b, &uniform_t_grid(41)).unwrap();
            assert!(scan.iter().all(|p| p.f_second_analytic > 0.0));
            // f is convex, so its chord lies above it.
            let (f0, f1) = (scan[0].f, scan[40].f);
            for p in &scan {
                assert!(p.f <= p.t * f1 + (1.0 - p.t) * f0 + 1e-12);
            }
        }
    }
}

#[test]
fn path_energy_matches_direct_evaluation() {
    let grid = Grid::new(1025, 20.0).unwrap();
    let params = ModelParams::new(2.0, 0.5).unwrap();
    let a = make_initial_profile(&grid, &params, InitKind::Kink { width: 1.0 }).unwrap();
    let b = make_initial_profile(&grid, &params, InitKind::Template).unwrap();
    let path = ArcsinPath::new(&a, &b).unwrap();
    let op = HalfLaplacianOperator::new(&grid);
    for t in [0.0, 0.3, 0.5, 1.0] {
        let direct = evaluate(&path.theta(t).unwrap(), &params, &op).unwrap();
        assert_eq!(path.energy_at(t).unwrap().energy, direct.energy);
    }
}

#[test]
fn decay_constant_is_stable_under_refinement() {
    let coarse = solved_walls(&Grid::new(4097, 40.0).unwrap(), &[(1.0, 0.3)]).unwrap();
    let fine = solved_walls(&Grid::new(8193, 40.0).unwrap(), &[(1.0, 0.3)]).unwrap();
    let (c1, c2) = (fit_decay(&coarse[0]).unwrap().c_plus, fit_decay(&fine[0]).unwrap().c_plus);
    assert!((c1 - c2).abs() <= 0.05 * c2, "{c1} vs {c2}");
}

#[test]
fn green_function_mass_and_reconstruction() {
    for h in [0.0, 0.3, 0.6] {
        let params = ModelParams::new(1.0, h).unwrap();
        let grid = Grid::new(8193, 80.0).unwrap();
        let s = green_summary(&LinearizedOperator::new(&params, &grid).unwrap());
        assert!((s.integral - s.expected_integral).abs() <= 0.01 * s.expected_integral);
        assert!(s.min_value > 0.0);
    }
    let grid = Grid::new(4097, 40.0).unwrap();
    for p in solved_walls(&grid, &[(0.5, 0.0), (2.0, 0.5), (4.0, 0.25)]).unwrap() {
        let lin = LinearizedOperator::new(p.params(), &grid).unwrap();
        let folded = fold_with(&p, &lin).unwrap();
        let theta_x0 = (p.theta()[grid.center() + 1] - p.theta()[grid.center() - 1]) / (2.0 * grid.spacing());
        assert!((folded.a - 2.0 * theta_x0.abs()).abs() < 1e-2 * folded.a);
        let r = reconstruct(&folded, &lin);
        assert!(r.relative_residual <= 5e-2, "{r:?}");
    }
}

#[test]
fn quadrature_agrees_with_spectral_on_solved_wall() {
    let grid = Grid::new(4097, 40.0).unwrap();
    let p = solved_walls(&grid, &[(1.0, 0.3)]).unwrap().remove(0);
    let op = HalfLaplacianOperator::new(&grid);
    let u = p.u();
    let v = op.apply_spectral(&u).unwrap();
    let c = grid.center();
    let q = apply_quadrature(&u, &grid, c, QUADRATURE_DELTA).unwrap();
    assert!((q - v[c]).abs() <= 1e-5 * v[c].abs(), "{q} vs {}", v[c]);
}

#[test]
fn gradient_difference_quotients_converge() {
    let grid = Grid::new(2049, 30.0).unwrap();
    let params = ModelParams::new(1.5, 0.4).unwrap();
    let p = make_initial_profile(&grid, &params, InitKind::Kink { width: 1.3 }).unwrap();
    let op = HalfLaplacianOperator::new(&grid);
    let base = evaluate(p.theta(), &params, &op).unwrap();
    let n = grid.len();
    let d: Vec<f64> = (0..n)
        .map(|i| if i == 0 || i == n - 1 { 0.0 } else { (0.37 * i as f64).sin() })
        .collect();
    let exact: f64 = base.gradient.iter().zip(&d).map(|(g, di)| g * di).sum();
    let quotient = |eps: f64| {
        let at = |s: f64| {
            let th: Vec<f64> = p.theta().iter().zip(&d).map(|(t, di)| t + s * di).collect();
            evaluate(&th, &params, &op).unwrap().energy.total
        };
        (at(eps) - at(-eps)) / (2.0 * eps)
    };
    let errs: Vec<f64> = [1e-3, 5e-4, 2.5e-4]
        .iter()
        .map(|&e| (quotient(e) - exact).abs())
        .collect();
    // Second order: halving the step quarters the error.
    for w in errs.windows(2) {
        let ratio = w[0] / w[1];
        assert!((3.0..5.0).contains(&ratio), "{errs:?}");
    }
    let richardson = (4.0 * quotient(5e-4) - quotient(1e-3)) / 3.0;
    assert!((richardson - exact).abs() <= 1e-6 * exact.abs());
}
