use trichaos::integrator::{flow, flow_until_exit, IntegratorConfig};
use trichaos::linalg::Matrix;
use trichaos::systems::{LinearSystem, SprottA};
use trichaos::BoxRegion;

use std::f64::consts::PI;

fn oscillator() -> LinearSystem {
    LinearSystem::new(Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]])).unwrap()
}

fn fixed_step_error(steps: usize) -> f64 {
    let h = 2.0 * PI / steps as f64;
    let cfg = IntegratorConfig { rel_tol: 1.0, abs_tol: 1.0, max_step: h, initial_step: Some(h), max_steps: 10 * steps };
    let r = flow(&oscillator(), &[1.0, 0.0], 2.0 * PI, &cfg).unwrap();
    (r[0] - 1.0).hypot(r[1])
}

#[test]
fn convergence_order_at_least_four() {
    let errs: Vec<f64> = [10, 20, 40, 80].iter().map(|&n| fixed_step_error(n)).collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 4.0, "{errs:?}");
    }
}

#[test]
fn tighter_tolerance_never_hurts() {
    let mut prev = f64::INFINITY;
    for k in 4..=11 {
        let cfg = IntegratorConfig::with_tolerance(10f64.powi(-k));
        let r = flow(&oscillator(), &[1.0, 0.0], 2.0 * PI, &cfg).unwrap();
        let err = (r[0] - 1.0).hypot(r[1]);
        assert!(err <= prev, "tol 1e-{k}: {err} > {prev}");
        prev = err;
    }
}

#[test]
fn exit_time_does_not_depend_on_max_step() {
    let spiral = LinearSystem::new(Matrix::from_rows(&[[0.1, 1.0], [-1.0, 0.1]])).unwrap();
    let region = BoxRegion::symmetric(2, 2.0).unwrap();
    let exits: Vec<f64> = [0.05, 0.15, 0.5]
        .iter()
        .map(|&h| {
            let cfg = IntegratorConfig { max_step: h, ..IntegratorConfig::default() };
            flow_until_exit(&spiral, &[1.0, 0.0], 50.0, &region, &cfg).unwrap().exit_time.unwrap()
        })
        .collect();
    for e in &exits {
        assert!((e - exits[0]).abs() < 1e-6, "{exits:?}");
    }

    let region = BoxRegion::symmetric(3, 3.0).unwrap();
    let exits: Vec<f64> = [0.02, 0.2]
        .iter()
        .map(|&h| {
            let cfg = IntegratorConfig { max_step: h, ..IntegratorConfig::default() };
            flow_until_exit(&SprottA, &[2.0, 1.0, -1.0], 100.0, &region, &cfg).unwrap().exit_time.unwrap()
        })
        .collect();
    assert!((exits[0] - exits[1]).abs() < 1e-6, "{exits:?}");
}

#[test]
fn exit_time_of_expanding_line() {
    let sys = LinearSystem::new(Matrix::from_rows(&[[1.0]])).unwrap();
    let region = BoxRegion::symmetric(1, 1.0).unwrap();
    for p in [0.1, 0.5, -0.25, 0.9] {
        let out = flow_until_exit(&sys, &[p], 20.0, &region, &IntegratorConfig::default()).unwrap();
        let exact = (1.0 / f64::abs(p)).ln();
        assert!((out.exit_time.unwrap() - exact).abs() < 1e-6);
        assert!(out.stayed_through(exact - 1e-3) && !out.stayed_through(exact + 1e-3));
    }
}
