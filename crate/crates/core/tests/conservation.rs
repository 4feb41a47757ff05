use trichaos::equilibria::{equilibrium_state, solve_equieq};
use trichaos::geometry::{coords_to_sides, gamma_constraint, heron_gamma, Triangle};
use trichaos::integrator::{sample_orbit, IntegratorConfig};
use trichaos::potential::PotentialParams;
use trichaos::systems::{DoublePendulum, DynamicalSystem, LjReduced, LjSystemParams};

fn max_relative_drift(sys: &dyn DynamicalSystem, p: &[f64]) -> f64 {
    let times: Vec<f64> = (0..=200).map(|k| 0.5 * k as f64).collect();
    let orbit = sample_orbit(sys, p, &times, &IntegratorConfig::default()).unwrap();
    let e0 = sys.energy(p).unwrap().unwrap();
    orbit.iter().map(|x| (sys.energy(x).unwrap().unwrap() - e0).abs() / e0.abs()).fold(0.0, f64::max)
}

fn lj(area: f64) -> LjReduced {
    LjReduced::new(LjSystemParams::new(PotentialParams::lennard_jones(), 1.0, area).unwrap())
}

#[test]
fn lj_energy_drift_at_065() {
    let sys = lj(0.65);
    let eq = solve_equieq(0.65, &PotentialParams::lennard_jones(), Triangle::new(1.28, 1.42, 1.06), None).unwrap();
    let s = equilibrium_state(&eq).unwrap();
    let p = [s[0] + 0.05, s[1] - 0.03, 0.2, -0.15];
    let drift = max_relative_drift(&sys, &p);
    assert!(drift < 1e-6, "{drift}");
}

#[test]
fn lj_energy_drift_at_055() {
    let sys = lj(0.55);
    let drift = max_relative_drift(&sys, &[0.6, 0.95, 0.1, 0.05]);
    assert!(drift < 1e-6, "{drift}");
}

#[test]
fn double_pendulum_energy_drift() {
    let sys = DoublePendulum::default();
    for p in [[0.5, 0.0, -0.3, 0.0], [2.0, 1.0, -1.5, 3.0], [3.0, -2.0, 2.5, 4.0]] {
        let drift = max_relative_drift(&sys, &p);
        assert!(drift < 1e-6, "{p:?}: {drift}");
    }
}

#[test]
fn lj_orbit_keeps_area() {
    let area = 0.65;
    let sys = lj(area);
    let times: Vec<f64> = (0..=100).map(|k| k as f64).collect();
    let orbit = sample_orbit(&sys, &[0.6, 1.0, 0.2, -0.1], &times, &IntegratorConfig::default()).unwrap();
    for x in &orbit {
        let u2 = sys.u2(x[1]);
        assert!(gamma_constraint(x[0], x[1], u2, area).abs() < 1e-14);
        let t = coords_to_sides(x[0], x[1], u2);
        assert!((heron_gamma(&t) - area * area).abs() < 1e-12);
    }
}
