//! Adaptive Dormand–Prince 5(4) integration with dense output, optional
//! variational (tangent) equations and first-exit detection against a box.

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::region::BoxRegion;
use crate::systems::DynamicalSystem;

#[derive(Debug, Clone, PartialEq)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    /// Chosen automatically when `None`.
    pub initial_step: Option<f64>,
    pub max_steps: usize,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        Self { rel_tol: 1e-10, abs_tol: 1e-10, max_step: f64::INFINITY, initial_step: None, max_steps: 5_000_000 }
    }
}

impl IntegratorConfig {
    pub fn with_tolerance(tol: f64) -> Self {
        Self { rel_tol: tol, abs_tol: tol, ..Self::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0 && self.abs_tol > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "tolerances must be positive (rel_tol = {}, abs_tol = {})",
                self.rel_tol, self.abs_tol
            )));
        }
        if !(self.max_step > 0.0) {
            return Err(Error::InvalidParameter(format!("max_step must be positive, got {}", self.max_step)));
        }
        if let Some(h) = self.initial_step {
            if !(h > 0.0 && h.is_finite()) {
                return Err(Error::InvalidParameter(format!("initial_step must be positive, got {h}")));
            }
        }
        if self.max_steps == 0 {
            return Err(Error::InvalidParameter("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Flow state together with the tangent matrix `u = D_p r(t; p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentState {
    pub t: f64,
    pub r: Vec<f64>,
    pub u: Matrix,
}

impl TangentState {
    pub fn initial(p: &[f64]) -> Self {
        Self { t: 0.0, r: p.to_vec(), u: Matrix::identity(p.len()) }
    }
}

// ---------------------------------------------------------------------------
// Dormand–Prince tableau

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
// dense output
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

const SAFETY: f64 = 0.9;
const FAC_MIN: f64 = 0.2;
const FAC_MAX: f64 = 10.0;
const BETA: f64 = 0.04;

/// Fourth-order continuous extension over one accepted step.
#[derive(Debug, Clone)]
pub(crate) struct DenseOutput {
    t0: f64,
    h: f64,
    coef: [Vec<f64>; 5],
}

impl DenseOutput {
    fn new(n: usize) -> Self {
        Self { t0: 0.0, h: 0.0, coef: std::array::from_fn(|_| vec![0.0; n]) }
    }

    pub(crate) fn t0(&self) -> f64 {
        self.t0
    }

    pub(crate) fn t1(&self) -> f64 {
        self.t0 + self.h
    }

    /// Interpolates components `0..out.len()` at time `t`.
    pub(crate) fn interpolate(&self, t: f64, out: &mut [f64]) {
        let theta = (t - self.t0) / self.h;
        let theta1 = 1.0 - theta;
        let [r1, r2, r3, r4, r5] = &self.coef;
        for (i, o) in out.iter_mut().enumerate() {
            *o = r1[i] + theta * (r2[i] + theta1 * (r3[i] + theta * (r4[i] + theta1 * r5[i])));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Control {
    Continue,
    Stop,
}

struct Workspace {
    k: [Vec<f64>; 7],
    y1: Vec<f64>,
    ystage: Vec<f64>,
}

fn rms_norm(v: &[f64], y0: &[f64], y1: &[f64], cfg: &IntegratorConfig) -> f64 {
    let n = v.len() as f64;
    let s: f64 = v
        .iter()
        .zip(y0.iter().zip(y1))
        .map(|(e, (a, b))| {
            let sc = cfg.abs_tol + cfg.rel_tol * a.abs().max(b.abs());
            (e / sc) * (e / sc)
        })
        .sum();
    (s / n).sqrt()
}

fn initial_step<F>(f: &mut F, y0: &[f64], f0: &[f64], t_span: f64, cfg: &IntegratorConfig) -> f64
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let hmax = cfg.max_step.min(t_span);
    let d0 = rms_norm(y0, y0, y0, cfg);
    let d1 = rms_norm(f0, y0, y0, cfg);
    let mut h0 = if d0 < 1e-10 || d1 < 1e-10 { 1e-6 } else { 0.01 * d0 / d1 };
    h0 = h0.min(hmax);
    let y1: Vec<f64> = y0.iter().zip(f0).map(|(y, d)| y + h0 * d).collect();
    let mut f1 = vec![0.0; y0.len()];
    if f(&y1, &mut f1).is_err() {
        return h0;
    }
    let diff: Vec<f64> = f1.iter().zip(f0).map(|(a, b)| a - b).collect();
    let d2 = rms_norm(&diff, y0, y0, cfg) / h0;
    let dm = d1.max(d2);
    let h1 = if dm <= 1e-15 { (h0 * 1e-3).max(1e-6) } else { (0.01 / dm).powf(0.2) };
    (100.0 * h0).min(h1).min(hmax)
}

/// Integrates `y' = f(y)` from `t = 0` to `t_end`, handing every accepted step
/// to `observe`. Returns the final time and state (earlier than `t_end` if the
/// observer stopped the run).
///
/// A stage evaluation that fails with [`Error::Domain`], or a trial step that
/// produces non-finite values, is treated as a rejected step.
pub(crate) fn integrate<F, O>(
    f: &mut F,
    y0: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
    mut observe: O,
) -> Result<(f64, Vec<f64>)>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
    O: FnMut(&DenseOutput, &[f64]) -> Result<Control>,
{
    cfg.validate()?;
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter(format!("integration end time must be finite and >= 0, got {t_end}")));
    }
    let n = y0.len();
    let mut y = y0.to_vec();
    if t_end == 0.0 {
        return Ok((0.0, y));
    }
    let mut ws = Workspace { k: std::array::from_fn(|_| vec![0.0; n]), y1: vec![0.0; n], ystage: vec![0.0; n] };
    let mut dense = DenseOutput::new(n);
    let mut err_vec = vec![0.0; n];

    f(&y, &mut ws.k[0])?;
    let mut t = 0.0;
    let mut h = match cfg.initial_step {
        Some(h) => h.min(cfg.max_step),
        None => initial_step(f, &y, &ws.k[0], t_end, cfg),
    };
    let mut fac_old: f64 = 1e-4;
    let mut last_rejected = false;
    let mut steps = 0usize;
    let expo = 0.2 - BETA * 0.75;

    loop {
        if steps >= cfg.max_steps {
            return Err(Error::MaxSteps(cfg.max_steps));
        }
        steps += 1;
        let mut last = false;
        if t + 1.01 * h >= t_end {
            h = t_end - t;
            last = true;
        }
        if h <= 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }

        match attempt_step(f, &y, h, &mut ws) {
            Ok(()) => {}
            Err(Error::Domain { .. }) => {
                h *= 0.25;
                last_rejected = true;
                continue;
            }
            Err(e) => return Err(e),
        }
        let [k1, _k2, k3, k4, k5, k6, k7] = &ws.k;
        for i in 0..n {
            err_vec[i] = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
        }
        let err = rms_norm(&err_vec, &y, &ws.y1, cfg);
        let finite = err.is_finite() && ws.y1.iter().all(|v| v.is_finite());
        if !finite {
            h *= 0.25;
            last_rejected = true;
            continue;
        }

        let fac11 = err.powf(expo);
        if err <= 1.0 {
            // dense output coefficients
            dense.t0 = t;
            dense.h = h;
            {
                let [r1, r2, r3, r4, r5] = &mut dense.coef;
                for i in 0..n {
                    let ydiff = ws.y1[i] - y[i];
                    let bspl = h * k1[i] - ydiff;
                    r1[i] = y[i];
                    r2[i] = ydiff;
                    r3[i] = bspl;
                    r4[i] = ydiff - h * k7[i] - bspl;
                    r5[i] = h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i]);
                }
            }
            t = if last { t_end } else { t + h };
            std::mem::swap(&mut y, &mut ws.y1);
            ws.k.swap(0, 6);
            if y.iter().any(|v| v.abs() > 1e300) {
                return Err(Error::NonFinite("integrated state"));
            }
            if observe(&dense, &y)? == Control::Stop || last {
                return Ok((t, y));
            }
            let fac = (fac11 / fac_old.powf(BETA)).clamp(1.0 / FAC_MAX, 1.0 / FAC_MIN);
            fac_old = err.max(1e-4);
            let mut h_new = (h / (fac / SAFETY).max(1.0 / FAC_MAX)).min(cfg.max_step);
            if last_rejected {
                h_new = h_new.min(h);
            }
            last_rejected = false;
            h = h_new;
        } else {
            h /= (fac11 / SAFETY).min(1.0 / FAC_MIN);
            last_rejected = true;
        }
    }
}

fn attempt_step<F>(f: &mut F, y: &[f64], h: f64, ws: &mut Workspace) -> Result<()>
where
    F: FnMut(&[f64], &mut [f64]) -> Result<()>,
{
    let n = y.len();
    let Workspace { k, y1, ystage } = ws;
    let [k1, k2, k3, k4, k5, k6, k7] = k;
    for i in 0..n {
        ystage[i] = y[i] + h * A21 * k1[i];
    }
    f(ystage, k2)?;
    for i in 0..n {
        ystage[i] = y[i] + h * (A31 * k1[i] + A32 * k2[i]);
    }
    f(ystage, k3)?;
    for i in 0..n {
        ystage[i] = y[i] + h * (A41 * k1[i] + A42 * k2[i] + A43 * k3[i]);
    }
    f(ystage, k4)?;
    for i in 0..n {
        ystage[i] = y[i] + h * (A51 * k1[i] + A52 * k2[i] + A53 * k3[i] + A54 * k4[i]);
    }
    f(ystage, k5)?;
    for i in 0..n {
        ystage[i] = y[i] + h * (A61 * k1[i] + A62 * k2[i] + A63 * k3[i] + A64 * k4[i] + A65 * k5[i]);
    }
    f(ystage, k6)?;
    for i in 0..n {
        y1[i] = y[i] + h * (A71 * k1[i] + A73 * k3[i] + A74 * k4[i] + A75 * k5[i] + A76 * k6[i]);
    }
    f(y1, k7)?;
    let _ = (C2, C3, C4, C5);
    Ok(())
}

// ---------------------------------------------------------------------------

fn plain_rhs<'a>(sys: &'a dyn DynamicalSystem) -> impl FnMut(&[f64], &mut [f64]) -> Result<()> + 'a {
    move |y, dy| sys.rhs(y, dy)
}

/// Right-hand side of the augmented system `r' = f(r)`, `u' = Df(r) u`, with
/// `u` stored column by column after `r`.
fn tangent_rhs<'a>(sys: &'a dyn DynamicalSystem) -> impl FnMut(&[f64], &mut [f64]) -> Result<()> + 'a {
    let n = sys.dim();
    let mut jac = vec![0.0; n * n];
    move |y, dy| {
        let (r, u) = y.split_at(n);
        let (dr, du) = dy.split_at_mut(n);
        sys.rhs(r, dr)?;
        sys.jacobian(r, &mut jac)?;
        for j in 0..n {
            let col = &u[j * n..(j + 1) * n];
            let dcol = &mut du[j * n..(j + 1) * n];
            for i in 0..n {
                let row = &jac[i * n..(i + 1) * n];
                dcol[i] = row.iter().zip(col).map(|(a, b)| a * b).sum();
            }
        }
        Ok(())
    }
}

fn augmented_initial(p: &[f64]) -> Vec<f64> {
    let n = p.len();
    let mut y = vec![0.0; n + n * n];
    y[..n].copy_from_slice(p);
    for j in 0..n {
        y[n + j * n + j] = 1.0;
    }
    y
}

fn tangent_state(t: f64, y: &[f64], n: usize) -> TangentState {
    let mut u = Matrix::zeros(n, n);
    for j in 0..n {
        for i in 0..n {
            u[(i, j)] = y[n + j * n + i];
        }
    }
    TangentState { t, r: y[..n].to_vec(), u }
}

fn check_start(sys: &dyn DynamicalSystem, p: &[f64]) -> Result<()> {
    if p.len() != sys.dim() {
        return Err(Error::InvalidParameter(format!(
            "{}: initial state has length {}, expected {}",
            sys.name(),
            p.len(),
            sys.dim()
        )));
    }
    if !sys.in_domain(p) {
        return Err(Error::LeftDomain { t: 0.0 });
    }
    Ok(())
}

/// `r(T; p)`.
pub fn flow(sys: &dyn DynamicalSystem, p: &[f64], t_end: f64, cfg: &IntegratorConfig) -> Result<Vec<f64>> {
    check_start(sys, p)?;
    let mut f = plain_rhs(sys);
    let (_, y) = integrate(&mut f, p, t_end, cfg, |d, y| {
        if sys.in_domain(y) {
            Ok(Control::Continue)
        } else {
            Err(Error::LeftDomain { t: d.t1() })
        }
    })?;
    Ok(y)
}

/// `r(T; p)` and `u(T; p)` from one coupled integration of the state and the
/// variational equations under a single error control.
pub fn flow_with_tangent(
    sys: &dyn DynamicalSystem,
    p: &[f64],
    t_end: f64,
    cfg: &IntegratorConfig,
) -> Result<TangentState> {
    check_start(sys, p)?;
    let n = sys.dim();
    let mut f = tangent_rhs(sys);
    let (t, y) = integrate(&mut f, &augmented_initial(p), t_end, cfg, |d, y| {
        if sys.in_domain(&y[..n]) {
            Ok(Control::Continue)
        } else {
            Err(Error::LeftDomain { t: d.t1() })
        }
    })?;
    Ok(tangent_state(t, &y, n))
}

/// States at each of the increasing, non-negative `times`.
pub fn sample_orbit(
    sys: &dyn DynamicalSystem,
    p: &[f64],
    times: &[f64],
    cfg: &IntegratorConfig,
) -> Result<Vec<Vec<f64>>> {
    check_start(sys, p)?;
    check_grid(times)?;
    let n = sys.dim();
    let mut out = Vec::with_capacity(times.len());
    let mut next = 0;
    while next < times.len() && times[next] == 0.0 {
        out.push(p.to_vec());
        next += 1;
    }
    let Some(&t_end) = times.last() else { return Ok(out) };
    let mut f = plain_rhs(sys);
    integrate(&mut f, p, t_end, cfg, |d, y| {
        if !sys.in_domain(y) {
            return Err(Error::LeftDomain { t: d.t1() });
        }
        while next < times.len() && times[next] <= d.t1() {
            let mut s = vec![0.0; n];
            if times[next] == d.t1() {
                s.copy_from_slice(y);
            } else {
                d.interpolate(times[next], &mut s);
            }
            out.push(s);
            next += 1;
        }
        Ok(Control::Continue)
    })?;
    Ok(out)
}

fn check_grid(times: &[f64]) -> Result<()> {
    if times.iter().any(|t| !(t.is_finite() && *t >= 0.0)) || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("output times must be finite, non-negative and strictly increasing".into()));
    }
    Ok(())
}

/// Result of following an orbit until it first leaves a restraining box.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitOutcome {
    /// First exit time, or `None` if the orbit stayed inside up to the end time.
    pub exit_time: Option<f64>,
    /// Tangent state at `min(exit_time, T)`.
    pub state: TangentState,
}

impl ExitOutcome {
    /// Whether the initial point belongs to `S_T`, i.e. stays inside on `[0, t]`.
    pub fn stayed_through(&self, t: f64) -> bool {
        self.exit_time.map_or(true, |te| te >= t)
    }
}

/// Tangent snapshots along one orbit, cut off at the first exit.
#[derive(Debug, Clone, PartialEq)]
pub struct ExitSnapshots {
    pub exit_time: Option<f64>,
    /// States at the leading grid times `T <= exit_time` (all of them if the
    /// orbit stayed inside).
    pub states: Vec<TangentState>,
    /// State at the exit time, if there was an exit.
    pub exit_state: Option<TangentState>,
    /// Set when the step size underflowed; `exit_time` then holds the time of
    /// the breakdown and `exit_state` is `None`.
    pub breakdown: bool,
}

const EXIT_SUBDIVISIONS: usize = 8;
const EXIT_TIME_TOL: f64 = 1e-9;

/// Integrates the state and tangent equations from `p`, recording the tangent
/// state at every time of `grid` until the orbit first leaves `region` (or the
/// system's domain). Each accepted step is checked at eight equally spaced
/// points of its dense output; a crossing is then located by bisection.
///
/// A starting point outside the region counts as an exit at `t = 0`. A step
/// size underflow ends the orbit with `breakdown` set instead of failing.
pub fn tangent_snapshots_until_exit(
    sys: &dyn DynamicalSystem,
    p: &[f64],
    grid: &[f64],
    region: &BoxRegion,
    cfg: &IntegratorConfig,
) -> Result<ExitSnapshots> {
    let n = sys.dim();
    if p.len() != n || region.dim() != n {
        return Err(Error::InvalidParameter(format!(
            "{}: state/box dimension mismatch ({} / {}, expected {n})",
            sys.name(),
            p.len(),
            region.dim()
        )));
    }
    check_grid(grid)?;
    let inside_box = region.intersect(&sys.domain()).ok();
    let inside = |x: &[f64]| inside_box.as_ref().is_some_and(|b| b.contains(x)) && sys.in_domain(x);

    let mut snaps = ExitSnapshots {
        exit_time: None,
        states: Vec::with_capacity(grid.len()),
        exit_state: None,
        breakdown: false,
    };
    if !inside(p) {
        snaps.exit_time = Some(0.0);
        snaps.exit_state = Some(TangentState::initial(p));
        return Ok(snaps);
    }
    let mut next = 0;
    while next < grid.len() && grid[next] == 0.0 {
        snaps.states.push(TangentState::initial(p));
        next += 1;
    }
    let Some(&t_end) = grid.last() else { return Ok(snaps) };
    if next == grid.len() {
        return Ok(snaps);
    }

    let mut f = tangent_rhs(sys);
    let mut probe = vec![0.0; n];
    let mut full = vec![0.0; n + n * n];
    let result = integrate(&mut f, &augmented_initial(p), t_end, cfg, |d, y| {
        // locate the first exit inside this step, if any
        let (t0, t1) = (d.t0(), d.t1());
        let mut exit = None;
        let mut t_in = t0;
        for k in 1..=EXIT_SUBDIVISIONS {
            let ts = if k == EXIT_SUBDIVISIONS { t1 } else { t0 + (t1 - t0) * k as f64 / EXIT_SUBDIVISIONS as f64 };
            if k == EXIT_SUBDIVISIONS {
                probe.copy_from_slice(&y[..n]);
            } else {
                d.interpolate(ts, &mut probe);
            }
            if !inside(&probe) {
                let mut t_out = ts;
                while t_out - t_in > EXIT_TIME_TOL {
                    let mid = 0.5 * (t_in + t_out);
                    d.interpolate(mid, &mut probe);
                    if inside(&probe) {
                        t_in = mid;
                    } else {
                        t_out = mid;
                    }
                }
                exit = Some(0.5 * (t_in + t_out));
                break;
            }
            t_in = ts;
        }
        let horizon = exit.unwrap_or(t1);
        while next < grid.len() && grid[next] <= horizon {
            let tg = grid[next];
            if tg == t1 {
                full.copy_from_slice(y);
            } else {
                d.interpolate(tg, &mut full);
            }
            snaps.states.push(tangent_state(tg, &full, n));
            next += 1;
        }
        if let Some(te) = exit {
            d.interpolate(te, &mut full);
            snaps.exit_time = Some(te);
            snaps.exit_state = Some(tangent_state(te, &full, n));
            return Ok(Control::Stop);
        }
        Ok(Control::Continue)
    });
    match result {
        Ok(_) => {}
        Err(Error::StepUnderflow { t }) => {
            snaps.exit_time = Some(t);
            snaps.breakdown = true;
        }
        Err(e) => return Err(e),
    }
    Ok(snaps)
}

/// Follows the orbit of `p` up to time `t_end` or its first exit from
/// `region`, whichever comes first.
pub fn flow_until_exit(
    sys: &dyn DynamicalSystem,
    p: &[f64],
    t_end: f64,
    region: &BoxRegion,
    cfg: &IntegratorConfig,
) -> Result<ExitOutcome> {
    let snaps = tangent_snapshots_until_exit(sys, p, &[t_end], region, cfg)?;
    if snaps.breakdown {
        return Err(Error::StepUnderflow { t: snaps.exit_time.unwrap_or(0.0) });
    }
    match (snaps.exit_time, snaps.exit_state) {
        (Some(te), Some(state)) if te < t_end || snaps.states.is_empty() => Ok(ExitOutcome { exit_time: Some(te), state }),
        (exit_time, _) => {
            let state = snaps.states.into_iter().last().expect("grid end reached without exit");
            Ok(ExitOutcome { exit_time: exit_time.filter(|&te| te < t_end), state })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{LinearSystem, SprottA};

    #[test]
    fn zero_time_is_identity() {
        let sys = SprottA;
        let p = [0.3, -0.2, 1.0];
        assert_eq!(flow(&sys, &p, 0.0, &IntegratorConfig::default()).unwrap(), p.to_vec());
        let ts = flow_with_tangent(&sys, &p, 0.0, &IntegratorConfig::default()).unwrap();
        assert_eq!(ts.u, Matrix::identity(3));
    }

    #[test]
    fn harmonic_oscillator_full_period() {
        let sys = LinearSystem::new(Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]])).unwrap();
        let y = flow(&sys, &[1.0, 0.0], 2.0 * std::f64::consts::PI, &IntegratorConfig::default()).unwrap();
        assert!((y[0] - 1.0).abs() < 1e-8 && y[1].abs() < 1e-8, "{y:?}");
    }

    #[test]
    fn dense_output_is_accurate() {
        let sys = LinearSystem::new(Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]])).unwrap();
        let times: Vec<f64> = (0..=100).map(|k| 0.07 * k as f64).collect();
        let ys = sample_orbit(&sys, &[1.0, 0.0], &times, &IntegratorConfig::default()).unwrap();
        assert_eq!(ys.len(), times.len());
        for (t, y) in times.iter().zip(&ys) {
            assert!((y[0] - t.cos()).abs() < 1e-8 && (y[1] + t.sin()).abs() < 1e-8);
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let sys = SprottA;
        let cfg = IntegratorConfig { rel_tol: 0.0, ..Default::default() };
        assert!(flow(&sys, &[0.0; 3], 1.0, &cfg).is_err());
        assert!(flow(&sys, &[0.0; 3], -1.0, &IntegratorConfig::default()).is_err());
        assert!(flow(&sys, &[0.0; 2], 1.0, &IntegratorConfig::default()).is_err());
    }

    #[test]
    fn max_steps_reported() {
        let cfg = IntegratorConfig { max_steps: 5, ..Default::default() };
        assert!(matches!(flow(&SprottA, &[0.0, 1.0, 0.0], 100.0, &cfg), Err(Error::MaxSteps(5))));
    }

    #[test]
    fn exit_from_expanding_line() {
        let sys = LinearSystem::new(Matrix::from_rows(&[[1.0]])).unwrap();
        let region = BoxRegion::symmetric(1, 2.0).unwrap();
        let out = flow_until_exit(&sys, &[1.0], 10.0, &region, &IntegratorConfig::default()).unwrap();
        let te = out.exit_time.unwrap();
        assert!((te - std::f64::consts::LN_2).abs() < 1e-6, "{te}");
        assert!((out.state.r[0] - 2.0).abs() < 1e-6);
        assert!(!out.stayed_through(1.0) && out.stayed_through(0.5));
    }

    #[test]
    fn contracting_orbit_stays() {
        let sys = LinearSystem::new(Matrix::from_rows(&[[-1.0, 0.0], [0.0, -2.0]])).unwrap();
        let region = BoxRegion::symmetric(2, 1.0).unwrap();
        let out = flow_until_exit(&sys, &[0.9, -0.5], 5.0, &region, &IntegratorConfig::default()).unwrap();
        assert_eq!(out.exit_time, None);
        assert_eq!(out.state.t, 5.0);
        assert!((out.state.u[(0, 0)] - (-5f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn boundary_start_moving_inward_then_crossing() {
        // rotation x' = -y, y' = x starting at (1, 0) on the right face of
        // [-1, 1] x [-0.5, 0.5]; the orbit leaves through y = 0.5 at t = pi/6
        let sys = LinearSystem::new(Matrix::from_rows(&[[0.0, -1.0], [1.0, 0.0]])).unwrap();
        let region = BoxRegion::new(vec![-1.0, -0.5], vec![1.0, 0.5]).unwrap();
        let out = flow_until_exit(&sys, &[1.0, 0.0], 3.0, &region, &IntegratorConfig::default()).unwrap();
        let te = out.exit_time.unwrap();
        assert!((te - std::f64::consts::PI / 6.0).abs() < 1e-6, "{te}");
    }

    #[test]
    fn start_outside_is_immediate_exit() {
        let sys = SprottA;
        let region = BoxRegion::symmetric(3, 1.0).unwrap();
        let out = flow_until_exit(&sys, &[2.0, 0.0, 0.0], 1.0, &region, &IntegratorConfig::default()).unwrap();
        assert_eq!(out.exit_time, Some(0.0));
    }

    #[test]
    fn snapshots_stop_at_exit() {
        let sys = LinearSystem::new(Matrix::from_rows(&[[1.0]])).unwrap();
        let region = BoxRegion::symmetric(1, 2.0).unwrap();
        let grid = [0.0, 0.25, 0.5, 0.75, 1.0];
        let s = tangent_snapshots_until_exit(&sys, &[1.0], &grid, &region, &IntegratorConfig::default()).unwrap();
        assert_eq!(s.states.len(), 3);
        for st in &s.states {
            assert!((st.u[(0, 0)] - st.t.exp()).abs() < 1e-9);
        }
    }
}
