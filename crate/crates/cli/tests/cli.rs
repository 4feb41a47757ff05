use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use trichaos::equilibria::solve_equieq;
use trichaos::geometry::{sides_to_coords, Triangle};
use trichaos::potential::PotentialParams;
use trichaos_cli::bundled_config_dir;
use trichaos_cli::config::ConfigFile;
use trichaos_cli::jobs::{self, Overrides};
use trichaos_cli::run::{run_perturb, run_simulate};

fn trichaos(args: &[&str], config: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trichaos"))
        .args(&args[..1])
        .arg("--config")
        .arg(config)
        .args(&args[1..])
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("run.cfg");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn config_errors_exit_with_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[system]\nname = sprott_a\n[simulate]\ninitial = 1, 0, 0\nt_end = 1\ndt = 0.1\nspeed = 3\n");
    let out = trichaos(&["simulate"], &cfg);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(":7: [simulate] speed: unknown key"), "{err}");

    let out = trichaos(&["entropy"], &dir.path().join("missing.cfg"));
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn numerical_failures_exit_with_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[system]\nname = sprott_a\n[integrator]\nmax_steps = 3\n[simulate]\ninitial = 1, 0, 0\nt_end = 100\ndt = 1\n",
    );
    let out = trichaos(&["simulate"], &cfg);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("numerical failure"));
}

#[test]
fn entropy_csv_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[system]\nname = linear\n[entropy]\nhalf_width = 10\npoints = 50\nsamples = 2\nt_max = 5\nt_points = 5\n",
    );
    let csv = dir.path().join("e.csv");
    let out = trichaos(&["entropy", "--seed", "5", "--out", csv.to_str().unwrap()], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "T,mean_lnE,var_lnE,mean_retained");
    assert_eq!(lines.len(), 6);
    let first: Vec<&str> = lines[1].split(',').collect();
    assert_eq!(first[0], "1.0000000000000000e0");
    let summary = String::from_utf8_lossy(&out.stdout);
    for key in ["slope:", "stderr:", "N: 50", "n_samples: 2", "seed: 5", "wall_time_s:"] {
        assert!(summary.contains(key), "{summary}");
    }
}

#[test]
fn equilibria_command_prints_critical_area() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("eq.csv");
    let out = trichaos(&["equilibria", "--out", csv.to_str().unwrap()], &bundled_config_dir().join("equilibria.cfg"));
    assert!(out.status.success());
    let summary = String::from_utf8_lossy(&out.stdout);
    let a0: f64 = summary.lines().find_map(|l| l.strip_prefix("A0: ")).unwrap().parse().unwrap();
    assert!((a0 - 0.5877).abs() < 1e-3);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("A,kind,a,b,c,lambda,stable,multiplicity\n"));
}

#[test]
fn close_exponents_still_give_an_equilateral_branch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "[potential]\ndelta1 = 6.5\ndelta2 = 6\n[equilibria]\na_start = 0.3\na_end = 1.2\na_step = 0.05\n",
    );
    let csv = dir.path().join("eq.csv");
    let out = trichaos(&["equilibria", "--out", csv.to_str().unwrap()], &cfg);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&csv).unwrap();
    let areas: std::collections::BTreeSet<&str> = text
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(1) == Some("equilateral"))
        .map(|l| l.split(',').next().unwrap())
        .collect();
    assert_eq!(areas.len(), 19);
}

#[test]
fn zero_perturbation_gives_zero_separation() {
    let text = "[system]\nname = lj_reduced\nA = 0.65\n[perturb]\ninitial = 0.6, 1.0, 0.1, 0.0\ndelta = 0, 0, 0, 0\nt_end = 20\ndt = 0.5\n";
    let job = jobs::perturb_job(&mut ConfigFile::parse("p.cfg", text).unwrap(), &Overrides::default()).unwrap();
    let report = run_perturb(&job).unwrap();
    assert!(report.separation.iter().all(|s| *s == 0.0));
}

#[test]
fn stable_linear_separation_decays() {
    // symmetric negative definite: the distance decays monotonically
    let text = "[system]\nname = linear\nn = 2\na1_1 = -1\na1_2 = 0.3\na2_1 = 0.3\na2_2 = -0.5\n\
                [perturb]\ninitial = 1, 1\ndelta = 1e-3, -2e-3\nt_end = 20\ndt = 0.25\n";
    let job = jobs::perturb_job(&mut ConfigFile::parse("p.cfg", text).unwrap(), &Overrides::default()).unwrap();
    let report = run_perturb(&job).unwrap();
    assert!(report.separation.windows(2).all(|w| w[1] < w[0]));
    let exact = 1e-3 * 5f64.sqrt();
    assert!((report.separation[0] - exact).abs() < 1e-15);
}

#[test]
fn exact_equilibrium_is_stationary() {
    let pot = PotentialParams::lennard_jones();
    let eq = solve_equieq(0.65, &pot, Triangle::new(1.28, 1.42, 1.06), None).unwrap();
    let (u1, w1, _) = sides_to_coords(&eq.triangle).unwrap();
    let text = format!(
        "[system]\nname = lj_reduced\nA = 0.65\n[simulate]\ninitial = {u1:e}, {w1:e}, 0, 0\nt_end = 50\ndt = 1\n"
    );
    let job = jobs::simulate_job(&mut ConfigFile::parse("s.cfg", &text).unwrap(), &Overrides::default()).unwrap();
    let report = run_simulate(&job).unwrap();
    assert!(report.energy_drift().unwrap() < 1e-6);
    for x in &report.states {
        assert!((x[0] - u1).abs() < 1e-6 && (x[1] - w1).abs() < 1e-6);
    }
}

#[test]
fn chaotic_orbit_visits_every_scalene_equilibrium() {
    let job = jobs::simulate_job(
        &mut ConfigFile::load(&bundled_config_dir().join("simulate_A065.cfg")).unwrap(),
        &Overrides::default(),
    )
    .unwrap();
    let report = run_simulate(&job).unwrap();
    let pot = PotentialParams::lennard_jones();
    let eq = solve_equieq(0.65, &pot, Triangle::new(1.28, 1.42, 1.06), None).unwrap();
    let [a, b, c] = eq.triangle.sides();
    for s in [[a, b, c], [a, c, b], [b, a, c], [b, c, a], [c, a, b], [c, b, a]] {
        let (u1, w1, _) = sides_to_coords(&Triangle::from_sides(s)).unwrap();
        let closest = report.states.iter().map(|x| (x[0] - u1).hypot(x[1] - w1)).fold(f64::INFINITY, f64::min);
        assert!(closest < 0.1, "equilibrium ({u1:.3}, {w1:.3}) missed by {closest:.3}");
    }
}
