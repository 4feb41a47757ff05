//! Typed job descriptions built from a [`ConfigFile`].

use std::collections::BTreeMap;
use std::path::PathBuf;

use trichaos::entropy::EntropyRunConfig;
use trichaos::equilibria::area_grid;
use trichaos::geometry::{sides_to_coords, Triangle};
use trichaos::integrator::IntegratorConfig;
use trichaos::potential::PotentialParams;
use trichaos::systems::SystemSpec;
use trichaos::BoxRegion;

use crate::config::{ConfigError, ConfigFile};

/// Settings shared by every command: `[run] output` and `[run] threads`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RunSettings {
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

/// Command-line values that take precedence over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
    pub threads: Option<usize>,
}

#[derive(Debug, Clone)]
pub struct EntropyJob {
    pub system: SystemSpec,
    pub integrator: IntegratorConfig,
    pub run: EntropyRunConfig,
    pub settings: RunSettings,
}

#[derive(Debug, Clone)]
pub struct OrbitJob {
    pub system: SystemSpec,
    pub integrator: IntegratorConfig,
    pub initial: Vec<f64>,
    pub t_end: f64,
    /// Output interval.
    pub dt: f64,
    pub settings: RunSettings,
}

#[derive(Debug, Clone)]
pub struct PerturbJob {
    pub orbit: OrbitJob,
    pub delta: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct EquilibriaJob {
    pub potential: PotentialParams,
    pub areas: Vec<f64>,
    /// Bracket searched for the root of the equilateral stability indicator.
    pub bracket: (f64, f64),
    pub settings: RunSettings,
}

fn read_settings(cfg: &mut ConfigFile, ov: &Overrides) -> Result<RunSettings, ConfigError> {
    let output = cfg.string("run", "output").map(PathBuf::from);
    let threads = cfg.usize("run", "threads")?;
    if threads == Some(0) {
        let line = cfg.line_of("run", "threads").unwrap_or(0);
        return Err(cfg.field_error("run", "threads", line, "must be at least 1"));
    }
    Ok(RunSettings { output: ov.output.clone().or(output), threads: ov.threads.or(threads) })
}

/// `[system]`: `name` plus numeric parameters of that system.
pub fn read_system(cfg: &mut ConfigFile) -> Result<SystemSpec, ConfigError> {
    let name = cfg.require_string("system", "name")?;
    let name_line = cfg.line_of("system", "name").unwrap_or(0);
    let mut params = BTreeMap::new();
    for (key, value, line) in cfg.take_section("system") {
        if key == "name" {
            continue;
        }
        let v = value
            .parse::<f64>()
            .map_err(|_| cfg.field_error("system", &key, line, format!("expected a number, got '{value}'")))?;
        params.insert(key, v);
    }
    SystemSpec::from_name(&name, &params).map_err(|e| cfg.field_error("system", "name", name_line, e.to_string()))
}

/// `[integrator]`: `tol` (both tolerances), or `rel_tol`/`abs_tol`, plus
/// `max_step`, `initial_step`, `max_steps`.
pub fn read_integrator(cfg: &mut ConfigFile) -> Result<IntegratorConfig, ConfigError> {
    let mut ic = IntegratorConfig::default();
    if let Some(tol) = cfg.f64("integrator", "tol")? {
        ic.rel_tol = tol;
        ic.abs_tol = tol;
    }
    ic.rel_tol = cfg.f64_or("integrator", "rel_tol", ic.rel_tol)?;
    ic.abs_tol = cfg.f64_or("integrator", "abs_tol", ic.abs_tol)?;
    ic.max_step = cfg.f64_or("integrator", "max_step", ic.max_step)?;
    ic.initial_step = cfg.f64("integrator", "initial_step")?;
    ic.max_steps = cfg.usize("integrator", "max_steps")?.unwrap_or(ic.max_steps);
    ic.validate().map_err(|e| cfg.missing("integrator", "*", e.to_string()))?;
    Ok(ic)
}

fn read_region(cfg: &mut ConfigFile, dim: usize) -> Result<BoxRegion, ConfigError> {
    let half = cfg.f64("entropy", "half_width")?;
    let lower = cfg.vector("entropy", "lower")?;
    let upper = cfg.vector("entropy", "upper")?;
    let region = match (half, lower, upper) {
        (Some(h), None, None) => BoxRegion::symmetric(dim, h),
        (None, Some(lo), Some(hi)) => BoxRegion::new(lo, hi),
        _ => return Err(cfg.missing("entropy", "lower/upper", "give either half_width or both lower and upper")),
    };
    let region = region.map_err(|e| cfg.missing("entropy", "lower/upper", e.to_string()))?;
    if region.dim() != dim {
        return Err(cfg.missing("entropy", "lower/upper", format!("box has dimension {}, system has {dim}", region.dim())));
    }
    if !region.is_bounded() {
        return Err(cfg.missing("entropy", "lower/upper", "the restraining box must be bounded"));
    }
    Ok(region)
}

/// `[system]`, `[integrator]`, `[entropy]` and `[run]`.
///
/// `[entropy]` keys: `half_width` or `lower`/`upper`, `points`, `samples`,
/// `seed`, `fit_window` (default 0.5), and either `t_grid` or `t_max` with
/// `t_points` (default 60).
pub fn entropy_job(cfg: &mut ConfigFile, ov: &Overrides) -> Result<EntropyJob, ConfigError> {
    let system = read_system(cfg)?;
    let integrator = read_integrator(cfg)?;
    let dim = system_dim(&system);
    let region = read_region(cfg, dim)?;
    let points = cfg.usize("entropy", "points")?.ok_or_else(|| cfg.missing("entropy", "points", "required"))?;
    let samples = cfg.usize("entropy", "samples")?.ok_or_else(|| cfg.missing("entropy", "samples", "required"))?;
    let seed = ov.seed.or(cfg.u64("entropy", "seed")?).unwrap_or(0);
    let fit_window = cfg.f64_or("entropy", "fit_window", 0.5)?;
    let t_grid = match cfg.vector("entropy", "t_grid")? {
        Some(g) => g,
        None => {
            let t_max = cfg.require_f64("entropy", "t_max")?;
            let n = cfg.usize("entropy", "t_points")?.unwrap_or(60);
            EntropyRunConfig::uniform_grid(t_max, n)
        }
    };
    let run = EntropyRunConfig { region, points_per_sample: points, samples, t_grid, seed, fit_window };
    run.validate(dim).map_err(|e| cfg.missing("entropy", "*", e.to_string()))?;
    let settings = read_settings(cfg, ov)?;
    cfg.finish()?;
    Ok(EntropyJob { system, integrator, run, settings })
}

fn system_dim(spec: &SystemSpec) -> usize {
    match spec {
        SystemSpec::Linear(m) => m.rows(),
        SystemSpec::SprottA => 3,
        SystemSpec::DoublePendulum(_) | SystemSpec::LjReduced(_) => 4,
    }
}

fn read_orbit(cfg: &mut ConfigFile, section: &str) -> Result<OrbitJob, ConfigError> {
    let system = read_system(cfg)?;
    let integrator = read_integrator(cfg)?;
    let dim = system_dim(&system);
    let initial = match (cfg.vector(section, "initial")?, cfg.vector(section, "sides")?) {
        (Some(x), None) => x,
        (None, Some(sides)) => {
            let SystemSpec::LjReduced(p) = &system else {
                return Err(cfg.missing(section, "sides", "only valid for lj_reduced"));
            };
            let line = cfg.line_of(section, "sides").unwrap_or(0);
            let [a, b, c] = sides[..] else {
                return Err(cfg.field_error(section, "sides", line, "expected three side lengths"));
            };
            // rescale to the prescribed area, then place in the plane
            let t = Triangle::new(a, b, c);
            let g = trichaos::geometry::heron_gamma(&t);
            if !(g > 0.0) {
                return Err(cfg.field_error(section, "sides", line, "sides do not form a triangle"));
            }
            let scale = (p.area / g.sqrt()).sqrt();
            let t = Triangle::new(a * scale, b * scale, c * scale);
            let (u1, w1, _) = sides_to_coords(&t).map_err(|e| cfg.field_error(section, "sides", line, e.to_string()))?;
            let v = cfg.vector(section, "velocity")?.unwrap_or_else(|| vec![0.0, 0.0]);
            if v.len() != 2 {
                let line = cfg.line_of(section, "velocity").unwrap_or(0);
                return Err(cfg.field_error(section, "velocity", line, "expected two components (v1, v2)"));
            }
            vec![u1, w1, v[0], v[1]]
        }
        _ => return Err(cfg.missing(section, "initial", "give exactly one of 'initial' or 'sides'")),
    };
    if initial.len() != dim {
        let line = cfg.line_of(section, "initial").unwrap_or(0);
        return Err(cfg.field_error(section, "initial", line, format!("expected {dim} components, got {}", initial.len())));
    }
    let t_end = cfg.require_f64(section, "t_end")?;
    let dt = cfg.require_f64(section, "dt")?;
    if !(t_end > 0.0 && t_end.is_finite() && dt > 0.0 && dt <= t_end) {
        return Err(cfg.missing(section, "t_end/dt", format!("need 0 < dt <= t_end, got dt = {dt}, t_end = {t_end}")));
    }
    Ok(OrbitJob { system, integrator, initial, t_end, dt, settings: RunSettings::default() })
}

/// `[system]`, `[integrator]`, `[run]` and `[simulate]` with `t_end`, `dt`
/// and either `initial` (full state) or, for `lj_reduced`, `sides` (rescaled
/// to the prescribed area) with optional `velocity = v1, v2`.
pub fn simulate_job(cfg: &mut ConfigFile, ov: &Overrides) -> Result<OrbitJob, ConfigError> {
    let mut job = read_orbit(cfg, "simulate")?;
    job.settings = read_settings(cfg, ov)?;
    cfg.finish()?;
    Ok(job)
}

/// As [`simulate_job`] but reading `[perturb]`, which also takes `delta`,
/// the offset of the second initial state.
pub fn perturb_job(cfg: &mut ConfigFile, ov: &Overrides) -> Result<PerturbJob, ConfigError> {
    let mut orbit = read_orbit(cfg, "perturb")?;
    let delta = cfg.vector("perturb", "delta")?.ok_or_else(|| cfg.missing("perturb", "delta", "required"))?;
    if delta.len() != orbit.initial.len() {
        let line = cfg.line_of("perturb", "delta").unwrap_or(0);
        return Err(cfg.field_error("perturb", "delta", line, format!("expected {} components", orbit.initial.len())));
    }
    orbit.settings = read_settings(cfg, ov)?;
    cfg.finish()?;
    Ok(PerturbJob { orbit, delta })
}

/// `[potential]` (`c1, c2, delta1, delta2`, defaulting to 1, 2, 12, 6),
/// `[equilibria]` (`a_start`, `a_end`, `a_step`, optional `bracket`) and `[run]`.
pub fn equilibria_job(cfg: &mut ConfigFile, ov: &Overrides) -> Result<EquilibriaJob, ConfigError> {
    let lj = PotentialParams::lennard_jones();
    let potential = PotentialParams::new(
        cfg.f64_or("potential", "c1", lj.c1)?,
        cfg.f64_or("potential", "c2", lj.c2)?,
        cfg.f64_or("potential", "delta1", lj.delta1)?,
        cfg.f64_or("potential", "delta2", lj.delta2)?,
    )
    .map_err(|e| cfg.missing("potential", "*", e.to_string()))?;
    let start = cfg.require_f64("equilibria", "a_start")?;
    let end = cfg.require_f64("equilibria", "a_end")?;
    let step = cfg.require_f64("equilibria", "a_step")?;
    let areas = area_grid(start, end, step).map_err(|e| cfg.missing("equilibria", "a_start/a_end/a_step", e.to_string()))?;
    let bracket = match cfg.vector("equilibria", "bracket")? {
        Some(b) if b.len() == 2 && b[0] > 0.0 && b[1] > b[0] => (b[0], b[1]),
        Some(_) => {
            let line = cfg.line_of("equilibria", "bracket").unwrap_or(0);
            return Err(cfg.field_error("equilibria", "bracket", line, "expected two increasing positive areas"));
        }
        None => (start, end),
    };
    let settings = read_settings(cfg, ov)?;
    cfg.finish()?;
    Ok(EquilibriaJob { potential, areas, bracket, settings })
}
