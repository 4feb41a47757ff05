//! Monte Carlo estimation of the expansion entropy `H0(f, S)`.
//!
//! For `N` points drawn uniformly in a restraining box `S`, the orbit and its
//! tangent matrix `u(T; p)` are integrated until the orbit first leaves `S`.
//! `E_T` is estimated by `(1/N) * sum G(u(T; p_k))` over the points that stay
//! in `S` on `[0, T]`, where `G` multiplies the singular values above one.
//! `ln E_T` is averaged over independent samples and its asymptotic slope in
//! `T` is the entropy estimate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::integrator::{tangent_snapshots_until_exit, IntegratorConfig};
use crate::linalg::{singular_values, Matrix};
use crate::region::BoxRegion;
use crate::systems::DynamicalSystem;

const SVD_TOL: f64 = 1e-12;

/// Product of the singular values of `u` that exceed one (one if none do).
pub fn big_g(u: &Matrix) -> Result<f64> {
    let g: f64 = singular_values(u, SVD_TOL)?.into_iter().filter(|&s| s > 1.0).product();
    if !g.is_finite() {
        return Err(Error::NonFinite("expansion factor G"));
    }
    Ok(g)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyRunConfig {
    pub region: BoxRegion,
    pub points_per_sample: usize,
    pub samples: usize,
    /// Strictly increasing report times.
    pub t_grid: Vec<f64>,
    pub seed: u64,
    /// Trailing fraction of `t_grid` used for the slope fit.
    pub fit_window: f64,
}

impl EntropyRunConfig {
    /// `points` equally spaced times `t_max / points, ..., t_max`.
    pub fn uniform_grid(t_max: f64, points: usize) -> Vec<f64> {
        (1..=points).map(|k| t_max * k as f64 / points as f64).collect()
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        if self.region.dim() != dim {
            return Err(Error::InvalidParameter(format!(
                "restraining box has dimension {}, system has {dim}",
                self.region.dim()
            )));
        }
        if !self.region.is_bounded() {
            return Err(Error::InvalidParameter("restraining box must be bounded".into()));
        }
        if self.points_per_sample == 0 || self.samples == 0 {
            return Err(Error::InvalidParameter("need at least one point and one sample".into()));
        }
        if self.t_grid.is_empty()
            || self.t_grid.iter().any(|t| !(t.is_finite() && *t >= 0.0))
            || self.t_grid.windows(2).any(|w| w[1] <= w[0])
        {
            return Err(Error::InvalidParameter("T grid must be non-empty, non-negative and strictly increasing".into()));
        }
        if !(self.fit_window > 0.0 && self.fit_window <= 1.0) {
            return Err(Error::InvalidParameter(format!("fit_window must lie in (0, 1], got {}", self.fit_window)));
        }
        Ok(())
    }
}

/// Uniform draws in `region` for one sample. The stream depends only on
/// `(seed, sample)`, so samples can be generated in any order.
pub fn draw_points(region: &BoxRegion, count: usize, seed: u64, sample: u64) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(sample);
    (0..count)
        .map(|_| {
            region
                .lower()
                .iter()
                .zip(region.upper())
                // lands in (lower, upper]
                .map(|(lo, hi)| hi - (hi - lo) * rng.gen::<f64>())
                .collect()
        })
        .collect()
}

/// Contribution of one initial point to `E_T` at every grid time.
#[derive(Debug, Clone, PartialEq)]
pub struct PointContribution {
    pub exit_time: Option<f64>,
    /// The integration broke down (step size underflow) at `exit_time`; the
    /// point is counted as having exited there.
    pub breakdown: bool,
    /// `G(u(T; p))` while the orbit has stayed inside, zero afterwards.
    pub g: Vec<f64>,
}

impl PointContribution {
    pub fn retained(&self, i: usize) -> bool {
        self.g[i] > 0.0
    }
}

pub fn point_contribution(
    sys: &dyn DynamicalSystem,
    p: &[f64],
    t_grid: &[f64],
    region: &BoxRegion,
    integ: &IntegratorConfig,
) -> Result<PointContribution> {
    let snaps = tangent_snapshots_until_exit(sys, p, t_grid, region, integ)?;
    let mut g = vec![0.0; t_grid.len()];
    for (gi, st) in g.iter_mut().zip(&snaps.states) {
        *gi = big_g(&st.u)?;
    }
    Ok(PointContribution { exit_time: snaps.exit_time, breakdown: snaps.breakdown, g })
}

/// `E_T` estimates and survivor counts of one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleResult {
    pub e_hat: Vec<f64>,
    pub retained: Vec<usize>,
    /// Points whose integration broke down, counted as exits.
    pub breakdowns: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TRow {
    pub t: f64,
    /// Mean of `ln E_T` over samples; NaN when some sample has `E_T = 0`.
    pub mean_ln_e: f64,
    /// Unbiased sample variance of `ln E_T` (zero for a single sample).
    pub var_ln_e: f64,
    pub mean_retained: f64,
}

impl TRow {
    pub fn is_missing(&self) -> bool {
        self.mean_ln_e.is_nan()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyTable {
    pub rows: Vec<TRow>,
    pub samples: Vec<SampleResult>,
    pub warnings: Vec<String>,
}

fn run_sample(
    sys: &dyn DynamicalSystem,
    cfg: &EntropyRunConfig,
    integ: &IntegratorConfig,
    sample: usize,
) -> Result<SampleResult> {
    let points = draw_points(&cfg.region, cfg.points_per_sample, cfg.seed, sample as u64);
    let contributions: Vec<PointContribution> = points
        .par_iter()
        .map(|p| point_contribution(sys, p, &cfg.t_grid, &cfg.region, integ))
        .collect::<Result<_>>()?;
    let m = cfg.t_grid.len();
    let mut sum = vec![0.0; m];
    let mut retained = vec![0usize; m];
    for c in &contributions {
        for i in 0..m {
            if c.retained(i) {
                sum[i] += c.g[i];
                retained[i] += 1;
            }
        }
    }
    let n = cfg.points_per_sample as f64;
    let breakdowns = contributions.iter().filter(|c| c.breakdown).count();
    Ok(SampleResult { e_hat: sum.into_iter().map(|s| s / n).collect(), retained, breakdowns })
}

/// Per-T statistics of `ln E_T` over `cfg.samples` independent samples.
pub fn estimate_et(
    sys: &dyn DynamicalSystem,
    cfg: &EntropyRunConfig,
    integ: &IntegratorConfig,
) -> Result<EntropyTable> {
    cfg.validate(sys.dim())?;
    integ.validate()?;
    let samples: Vec<SampleResult> =
        (0..cfg.samples).into_par_iter().map(|s| run_sample(sys, cfg, integ, s)).collect::<Result<_>>()?;
    let ns = samples.len() as f64;
    let mut warnings = Vec::new();
    let breakdowns: usize = samples.iter().map(|s| s.breakdowns).sum();
    if breakdowns > 0 {
        warnings.push(format!("{breakdowns} points hit a step size underflow and were counted as exits"));
    }
    let rows = cfg
        .t_grid
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let mean_retained = samples.iter().map(|s| s.retained[i] as f64).sum::<f64>() / ns;
            let empty = samples.iter().filter(|s| s.e_hat[i] == 0.0).count();
            if empty > 0 {
                warnings.push(format!("T = {t}: {empty} of {} samples retained no points; ln E_T undefined", samples.len()));
                return TRow { t, mean_ln_e: f64::NAN, var_ln_e: f64::NAN, mean_retained };
            }
            let logs: Vec<f64> = samples.iter().map(|s| s.e_hat[i].ln()).collect();
            let mean = logs.iter().sum::<f64>() / ns;
            let var = if samples.len() > 1 {
                logs.iter().map(|l| (l - mean) * (l - mean)).sum::<f64>() / (ns - 1.0)
            } else {
                0.0
            };
            TRow { t, mean_ln_e: mean, var_ln_e: var, mean_retained }
        })
        .collect();
    Ok(EntropyTable { rows, samples, warnings })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub points: usize,
}

/// Ordinary least squares line through `(x, y)` with the standard error of
/// the slope.
pub fn least_squares(x: &[f64], y: &[f64]) -> Result<SlopeFit> {
    let n = x.len();
    if n < 3 || y.len() != n {
        return Err(Error::InsufficientData(n.min(y.len())));
    }
    let nf = n as f64;
    let mx = x.iter().sum::<f64>() / nf;
    let my = y.iter().sum::<f64>() / nf;
    let sxx: f64 = x.iter().map(|v| (v - mx) * (v - mx)).sum();
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData(1));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ssr: f64 = x.iter().zip(y).map(|(a, b)| (b - intercept - slope * a).powi(2)).sum();
    let stderr = (ssr / (nf - 2.0) / sxx).sqrt();
    Ok(SlopeFit { slope, intercept, stderr, points: n })
}

/// Slope of mean `ln E_T` against `T` over the trailing `fit_window` fraction
/// of the rows, skipping rows where the estimate is undefined.
pub fn fit_slope(rows: &[TRow], fit_window: f64) -> Result<SlopeFit> {
    if !(fit_window > 0.0 && fit_window <= 1.0) {
        return Err(Error::InvalidParameter(format!("fit_window must lie in (0, 1], got {fit_window}")));
    }
    let take = ((rows.len() as f64 * fit_window).ceil() as usize).min(rows.len());
    let (x, y): (Vec<f64>, Vec<f64>) =
        rows[rows.len() - take..].iter().filter(|r| !r.is_missing()).map(|r| (r.t, r.mean_ln_e)).unzip();
    least_squares(&x, &y)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyEstimate {
    pub table: EntropyTable,
    pub fit: SlopeFit,
}

impl EntropyEstimate {
    /// The expansion entropy estimate.
    pub fn slope(&self) -> f64 {
        self.fit.slope
    }
}

pub fn expansion_entropy(
    sys: &dyn DynamicalSystem,
    cfg: &EntropyRunConfig,
    integ: &IntegratorConfig,
) -> Result<EntropyEstimate> {
    let table = estimate_et(sys, cfg, integ)?;
    let fit = fit_slope(&table.rows, cfg.fit_window)?;
    Ok(EntropyEstimate { table, fit })
}
