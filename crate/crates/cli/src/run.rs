//! Command execution and report formatting.

use std::io::{self, Write};
use std::time::{Duration, Instant};

use trichaos::entropy::{expansion_entropy, EntropyEstimate};
use trichaos::equilibria::{continuation_scan, critical_area, ScanRow, Stability};
use trichaos::integrator::sample_orbit;
use trichaos::systems::{DynamicalSystem, SystemSpec};

use crate::jobs::{EntropyJob, EquilibriaJob, OrbitJob, PerturbJob};

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool.
pub fn with_threads<T: Send>(threads: Option<usize>, f: impl FnOnce() -> T + Send) -> io::Result<T> {
    match threads {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().map_err(io::Error::other)?;
            Ok(pool.install(f))
        }
        None => Ok(f()),
    }
}

pub fn state_names(spec: &SystemSpec) -> Vec<String> {
    let fixed: &[&str] = match spec {
        SystemSpec::Linear(m) => return (1..=m.rows()).map(|i| format!("x{i}")).collect(),
        SystemSpec::SprottA => &["x", "y", "z"],
        SystemSpec::DoublePendulum(_) => &["theta1", "omega1", "theta2", "omega2"],
        SystemSpec::LjReduced(_) => &["u1", "w1", "v1", "v2"],
    };
    fixed.iter().map(|s| s.to_string()).collect()
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EntropyReport {
    pub estimate: EntropyEstimate,
    pub points: usize,
    pub samples: usize,
    pub seed: u64,
    pub wall_time: Duration,
}

pub fn run_entropy(job: &EntropyJob) -> trichaos::Result<EntropyReport> {
    let sys = job.system.build()?;
    let start = Instant::now();
    let estimate = expansion_entropy(sys.as_ref(), &job.run, &job.integrator)?;
    Ok(EntropyReport {
        estimate,
        points: job.run.points_per_sample,
        samples: job.run.samples,
        seed: job.run.seed,
        wall_time: start.elapsed(),
    })
}

impl EntropyReport {
    pub fn slope(&self) -> f64 {
        self.estimate.slope()
    }

    pub fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "T,mean_lnE,var_lnE,mean_retained")?;
        for r in &self.estimate.table.rows {
            writeln!(w, "{},{},{},{}", fmt_f64(r.t), fmt_f64(r.mean_ln_e), fmt_f64(r.var_ln_e), fmt_f64(r.mean_retained))?;
        }
        Ok(())
    }

    pub fn write_summary(&self, w: &mut dyn Write) -> io::Result<()> {
        let fit = &self.estimate.fit;
        writeln!(w, "slope: {}", fmt_f64(fit.slope))?;
        writeln!(w, "stderr: {}", fmt_f64(fit.stderr))?;
        writeln!(w, "fit_points: {}", fit.points)?;
        writeln!(w, "N: {}", self.points)?;
        writeln!(w, "n_samples: {}", self.samples)?;
        writeln!(w, "seed: {}", self.seed)?;
        writeln!(w, "wall_time_s: {:.3}", self.wall_time.as_secs_f64())?;
        for warning in &self.estimate.table.warnings {
            writeln!(w, "warning: {warning}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct OrbitReport {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
    pub energies: Option<Vec<f64>>,
}

fn output_times(t_end: f64, dt: f64) -> Vec<f64> {
    let n = (t_end / dt + 1e-9).floor() as usize;
    let mut times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    if t_end - times[n] > 1e-9 * t_end {
        times.push(t_end);
    }
    times
}

fn orbit(sys: &dyn DynamicalSystem, job: &OrbitJob, p: &[f64], times: &[f64]) -> trichaos::Result<Vec<Vec<f64>>> {
    sample_orbit(sys, p, times, &job.integrator)
}

pub fn run_simulate(job: &OrbitJob) -> trichaos::Result<OrbitReport> {
    let sys = job.system.build()?;
    let times = output_times(job.t_end, job.dt);
    let states = orbit(sys.as_ref(), job, &job.initial, &times)?;
    let energies = match sys.energy(&job.initial) {
        None => None,
        Some(_) => Some(states.iter().map(|x| sys.energy(x).expect("energy is defined")).collect::<trichaos::Result<_>>()?),
    };
    Ok(OrbitReport { names: state_names(&job.system), times, states, energies })
}

impl OrbitReport {
    /// Largest `|E(t) - E(0)| / |E(0)|` over the output times.
    pub fn energy_drift(&self) -> Option<f64> {
        let e = self.energies.as_ref()?;
        let e0 = e[0];
        Some(e.iter().map(|v| (v - e0).abs() / e0.abs()).fold(0.0, f64::max))
    }

    pub fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        write!(w, "t,{}", self.names.join(","))?;
        if self.energies.is_some() {
            write!(w, ",energy")?;
        }
        writeln!(w)?;
        for (i, (t, x)) in self.times.iter().zip(&self.states).enumerate() {
            write!(w, "{}", fmt_f64(*t))?;
            for v in x {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            if let Some(e) = &self.energies {
                write!(w, ",{}", fmt_f64(e[i]))?;
            }
            writeln!(w)?;
        }
        Ok(())
    }

    pub fn write_summary(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "samples: {}", self.times.len())?;
        writeln!(w, "t_end: {}", fmt_f64(*self.times.last().unwrap_or(&0.0)))?;
        if let Some(d) = self.energy_drift() {
            writeln!(w, "energy_drift: {}", fmt_f64(d))?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct PerturbReport {
    pub names: Vec<String>,
    pub times: Vec<f64>,
    pub reference: Vec<Vec<f64>>,
    pub perturbed: Vec<Vec<f64>>,
    /// Euclidean distance between the two states at each output time.
    pub separation: Vec<f64>,
}

pub fn run_perturb(job: &PerturbJob) -> trichaos::Result<PerturbReport> {
    let sys = job.orbit.system.build()?;
    let times = output_times(job.orbit.t_end, job.orbit.dt);
    let q: Vec<f64> = job.orbit.initial.iter().zip(&job.delta).map(|(a, d)| a + d).collect();
    let reference = orbit(sys.as_ref(), &job.orbit, &job.orbit.initial, &times)?;
    let perturbed = orbit(sys.as_ref(), &job.orbit, &q, &times)?;
    let separation = reference
        .iter()
        .zip(&perturbed)
        .map(|(a, b)| a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
        .collect();
    Ok(PerturbReport { names: state_names(&job.orbit.system), times, reference, perturbed, separation })
}

impl PerturbReport {
    /// First output time at which the separation exceeds `threshold`.
    pub fn first_exceeding(&self, threshold: f64) -> Option<f64> {
        self.times.iter().zip(&self.separation).find(|(_, s)| **s > threshold).map(|(t, _)| *t)
    }

    pub fn max_separation(&self) -> f64 {
        self.separation.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        let a: Vec<String> = self.names.iter().map(|n| format!("{n}_a")).collect();
        let b: Vec<String> = self.names.iter().map(|n| format!("{n}_b")).collect();
        writeln!(w, "t,{},{},separation", a.join(","), b.join(","))?;
        for i in 0..self.times.len() {
            write!(w, "{}", fmt_f64(self.times[i]))?;
            for v in self.reference[i].iter().chain(&self.perturbed[i]) {
                write!(w, ",{}", fmt_f64(*v))?;
            }
            writeln!(w, ",{}", fmt_f64(self.separation[i]))?;
        }
        Ok(())
    }

    pub fn write_summary(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "initial_separation: {}", fmt_f64(self.separation[0]))?;
        writeln!(w, "max_separation: {}", fmt_f64(self.max_separation()))?;
        match self.first_exceeding(0.5) {
            Some(t) => writeln!(w, "separation_above_0.5_at: {}", fmt_f64(t)),
            None => writeln!(w, "separation_above_0.5_at: never"),
        }
    }
}

// ---------------------------------------------------------------------------

#[derive(Debug, Clone)]
pub struct EquilibriaReport {
    pub rows: Vec<ScanRow>,
    /// Root of the equilateral stability indicator, if it changes sign on
    /// the bracket.
    pub critical_area: Option<f64>,
}

pub fn run_equilibria(job: &EquilibriaJob) -> trichaos::Result<EquilibriaReport> {
    let rows = continuation_scan(&job.potential, &job.areas)?;
    let critical_area = match critical_area(&job.potential, job.bracket) {
        Ok(a) => Some(a),
        Err(trichaos::Error::NoSignChange { .. }) => None,
        Err(e) => return Err(e),
    };
    Ok(EquilibriaReport { rows, critical_area })
}

fn stable_label(s: Stability) -> &'static str {
    match s {
        Stability::Stable => "true",
        Stability::Unstable => "false",
        Stability::Marginal => "marginal",
    }
}

impl EquilibriaReport {
    pub fn write_csv(&self, w: &mut dyn Write) -> io::Result<()> {
        writeln!(w, "A,kind,a,b,c,lambda,stable,multiplicity")?;
        for row in &self.rows {
            for eq in &row.equilibria {
                let [a, b, c] = eq.shape();
                writeln!(
                    w,
                    "{},{},{},{},{},{},{},{}",
                    fmt_f64(row.area),
                    eq.kind,
                    fmt_f64(a),
                    fmt_f64(b),
                    fmt_f64(c),
                    fmt_f64(eq.lambda),
                    stable_label(eq.stability),
                    eq.kind.multiplicity()
                )?;
            }
        }
        Ok(())
    }

    pub fn write_summary(&self, w: &mut dyn Write) -> io::Result<()> {
        match self.critical_area {
            Some(a) => writeln!(w, "A0: {}", fmt_f64(a))?,
            None => writeln!(w, "A0: no sign change in bracket")?,
        }
        // where the set of branches changes along the scan
        for pair in self.rows.windows(2) {
            if pair[0].summary() != pair[1].summary() {
                let describe = |r: &ScanRow| {
                    r.summary()
                        .iter()
                        .map(|b| format!("{}x{} {}", b.multiplicity, b.kind, b.stability))
                        .collect::<Vec<_>>()
                        .join(" + ")
                };
                writeln!(
                    w,
                    "change between A = {:.4} ({}) and A = {:.4} ({})",
                    pair[0].area,
                    describe(&pair[0]),
                    pair[1].area,
                    describe(&pair[1])
                )?;
            }
        }
        Ok(())
    }
}
