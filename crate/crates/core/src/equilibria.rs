//! Equilibria of the area-constrained three-particle array.
//!
//! An equilibrium with side lengths `(a, b, c)` and multiplier `lambda`
//! solves
//!
//! ```text
//! phi'(a) + lambda * dG/da = 0
//! phi'(b) + lambda * dG/db = 0
//! phi'(c) + lambda * dG/dc = 0
//! G(a, b, c) = A^2
//! ```
//!
//! with `G` Heron's squared area. Stability means the configuration is a
//! constrained minimizer of the potential energy.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{heron_gamma, heron_grad, heron_hessian, sides_to_coords, Triangle};
use crate::linalg::{solve, symmetric_eigenvalues_2x2, Matrix};
use crate::potential::PotentialParams;

/// Relative tolerance for treating two sides as equal.
pub const SIDE_EQUALITY_TOL: f64 = 1e-6;
/// Eigenvalue threshold of the projected Hessian.
pub const STABILITY_TOL: f64 = 1e-10;
const NEWTON_TOL: f64 = 1e-12;
const NEWTON_MAX_ITER: usize = 50;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Equilateral,
    Isosceles,
    Scalene,
}

impl Kind {
    /// Number of labelled configurations sharing one shape.
    pub fn multiplicity(self) -> usize {
        match self {
            Kind::Equilateral => 1,
            Kind::Isosceles => 3,
            Kind::Scalene => 6,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Equilateral => "equilateral",
            Kind::Isosceles => "isosceles",
            Kind::Scalene => "scalene",
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Stability {
    Stable,
    Unstable,
    /// Smallest projected Hessian eigenvalue within tolerance of zero.
    Marginal,
}

impl Stability {
    pub fn as_str(self) -> &'static str {
        match self {
            Stability::Stable => "stable",
            Stability::Unstable => "unstable",
            Stability::Marginal => "marginal",
        }
    }
}

impl fmt::Display for Stability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EquilibriumPoint {
    pub triangle: Triangle,
    pub lambda: f64,
    pub area: f64,
    pub kind: Kind,
    pub stability: Stability,
}

impl EquilibriumPoint {
    pub fn is_stable(&self) -> bool {
        self.stability == Stability::Stable
    }

    /// Sides in ascending order, identifying the shape up to relabelling.
    pub fn shape(&self) -> [f64; 3] {
        let mut s = self.triangle.sides();
        s.sort_by(f64::total_cmp);
        s
    }
}

pub fn classify_kind(t: &Triangle) -> Kind {
    let eq = |x: f64, y: f64| (x - y).abs() <= SIDE_EQUALITY_TOL * x.abs().max(y.abs());
    let (ab, bc, ac) = (eq(t.a, t.b), eq(t.b, t.c), eq(t.a, t.c));
    match (ab, bc, ac) {
        (true, true, _) | (true, _, true) | (_, true, true) => Kind::Equilateral,
        (false, false, false) => Kind::Scalene,
        _ => Kind::Isosceles,
    }
}

/// Side of the equilateral triangle with area `area`.
pub fn equilateral_side(area: f64) -> f64 {
    2.0 * area.sqrt() / 3f64.powf(0.25)
}

fn check_area(area: f64) -> Result<()> {
    if area > 0.0 && area.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("area must be positive, got {area}")))
    }
}

/// Stability indicator of the equilateral branch: `phi''(s) + 3 phi'(s) / s`
/// at the equilateral side `s`.
pub fn rho(area: f64, pot: &PotentialParams) -> Result<f64> {
    check_area(area)?;
    let s = equilateral_side(area);
    let e = pot.eval(s)?;
    Ok(e.d2phi + 3.0 * e.dphi / s)
}

/// The closed-form equilateral equilibrium, which exists for every area.
pub fn equilateral(area: f64, pot: &PotentialParams) -> Result<EquilibriumPoint> {
    check_area(area)?;
    let s = equilateral_side(area);
    let lambda = -4.0 * pot.dphi(s)? / (s * s * s);
    let r = rho(area, pot)?;
    let stability = if r > STABILITY_TOL {
        Stability::Stable
    } else if r < -STABILITY_TOL {
        Stability::Unstable
    } else {
        Stability::Marginal
    };
    Ok(EquilibriumPoint { triangle: Triangle::equilateral(s), lambda, area, kind: Kind::Equilateral, stability })
}

/// Root of [`rho`] in `bracket`, located by bisection.
pub fn critical_area(pot: &PotentialParams, bracket: (f64, f64)) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    let (mut f_lo, f_hi) = (rho(lo, pot)?, rho(hi, pot)?);
    if f_lo == 0.0 {
        return Ok(lo);
    }
    if f_hi == 0.0 {
        return Ok(hi);
    }
    if f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange { lo, hi });
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        let f_mid = rho(mid, pot)?;
        if f_mid == 0.0 {
            return Ok(mid);
        }
        if f_mid.signum() == f_lo.signum() {
            lo = mid;
            f_lo = f_mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Residuals of the four equilibrium equations.
pub fn equieq_residual(t: &Triangle, lambda: f64, area: f64, pot: &PotentialParams) -> Result<[f64; 4]> {
    let g = heron_grad(t);
    let s = t.sides();
    let mut r = [0.0; 4];
    for i in 0..3 {
        r[i] = pot.dphi(s[i])? + lambda * g[i];
    }
    r[3] = heron_gamma(t) - area * area;
    Ok(r)
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Multiplier minimizing the residual of the first three equations.
fn lambda_estimate(t: &Triangle, pot: &PotentialParams) -> Result<f64> {
    let g = heron_grad(t);
    let s = t.sides();
    let (mut num, mut den) = (0.0, 0.0);
    for i in 0..3 {
        num -= pot.dphi(s[i])? * g[i];
        den += g[i] * g[i];
    }
    if den == 0.0 {
        return Err(Error::Singular("multiplier estimate"));
    }
    Ok(num / den)
}

/// Newton's method on `(a, b, c, lambda)` with backtracking on the residual.
/// When `lambda_guess` is `None` it is estimated by least squares.
pub fn solve_equieq(
    area: f64,
    pot: &PotentialParams,
    guess: Triangle,
    lambda_guess: Option<f64>,
) -> Result<EquilibriumPoint> {
    check_area(area)?;
    let mut x = [guess.a, guess.b, guess.c, 0.0];
    x[3] = match lambda_guess {
        Some(l) => l,
        None => lambda_estimate(&guess, pot)?,
    };
    let residual = |x: &[f64; 4]| equieq_residual(&Triangle::new(x[0], x[1], x[2]), x[3], area, pot);
    let mut r = residual(&x)?;
    let mut norm = max_abs(&r);
    for _ in 0..NEWTON_MAX_ITER {
        if norm < NEWTON_TOL {
            let t = Triangle::new(x[0], x[1], x[2]);
            if !t.is_valid() {
                return Err(Error::Domain { what: "equilibrium triangle", value: heron_gamma(&t) });
            }
            let stability = classify_stability(&t, x[3], pot)?;
            return Ok(EquilibriumPoint { triangle: t, lambda: x[3], area, kind: classify_kind(&t), stability });
        }
        let jac = equieq_jacobian(&x, pot)?;
        let neg_r: Vec<f64> = r.iter().map(|v| -v).collect();
        let dx = solve(&jac, &neg_r)?;
        let mut step = 1.0;
        loop {
            let trial = [x[0] + step * dx[0], x[1] + step * dx[1], x[2] + step * dx[2], x[3] + step * dx[3]];
            let ok = trial[..3].iter().all(|&s| s > 0.0);
            if ok {
                if let Ok(rt) = residual(&trial) {
                    let nt = max_abs(&rt);
                    if nt < norm || step < 1e-3 {
                        x = trial;
                        r = rt;
                        norm = nt;
                        break;
                    }
                }
            }
            step *= 0.5;
            if step < 1e-3 {
                return Err(Error::NoConvergence { iterations: NEWTON_MAX_ITER, residual: norm });
            }
        }
    }
    Err(Error::NoConvergence { iterations: NEWTON_MAX_ITER, residual: norm })
}

fn equieq_jacobian(x: &[f64; 4], pot: &PotentialParams) -> Result<Matrix> {
    let t = Triangle::new(x[0], x[1], x[2]);
    let g = heron_grad(&t);
    let h = heron_hessian(&t);
    let s = t.sides();
    let mut j = Matrix::zeros(4, 4);
    for i in 0..3 {
        for k in 0..3 {
            j[(i, k)] = x[3] * h[i][k];
        }
        j[(i, i)] += pot.d2phi(s[i])?;
        j[(i, 3)] = g[i];
        j[(3, i)] = g[i];
    }
    Ok(j)
}

/// Second-order test for a constrained minimum of `U(a, b, c)` on
/// `G(a, b, c) = A^2`: the Hessian of `U + lambda (G - A^2)` restricted to the
/// tangent plane `{v : grad G . v = 0}`.
pub fn projected_hessian_eigenvalues(t: &Triangle, lambda: f64, pot: &PotentialParams) -> Result<[f64; 2]> {
    let g = heron_grad(t);
    let gn = (g[0] * g[0] + g[1] * g[1] + g[2] * g[2]).sqrt();
    if gn == 0.0 {
        return Err(Error::Singular("constraint gradient"));
    }
    let n = [g[0] / gn, g[1] / gn, g[2] / gn];
    // axis least aligned with the normal, Gram-Schmidt, then cross product
    let k = (0..3).min_by(|&i, &j| n[i].abs().total_cmp(&n[j].abs())).unwrap();
    let mut t1 = [0.0; 3];
    t1[k] = 1.0;
    let dot = n[k];
    for i in 0..3 {
        t1[i] -= dot * n[i];
    }
    let t1n = (t1[0] * t1[0] + t1[1] * t1[1] + t1[2] * t1[2]).sqrt();
    t1.iter_mut().for_each(|v| *v /= t1n);
    let t2 = [n[1] * t1[2] - n[2] * t1[1], n[2] * t1[0] - n[0] * t1[2], n[0] * t1[1] - n[1] * t1[0]];

    let hg = heron_hessian(t);
    let s = t.sides();
    let mut hess = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            hess[i][j] = lambda * hg[i][j];
        }
        hess[i][i] += pot.d2phi(s[i])?;
    }
    let quad = |u: &[f64; 3], v: &[f64; 3]| -> f64 {
        (0..3).map(|i| (0..3).map(|j| u[i] * hess[i][j] * v[j]).sum::<f64>()).sum()
    };
    Ok(symmetric_eigenvalues_2x2(quad(&t1, &t1), quad(&t1, &t2), quad(&t2, &t2)))
}

pub fn classify_stability(t: &Triangle, lambda: f64, pot: &PotentialParams) -> Result<Stability> {
    let [lo, _] = projected_hessian_eigenvalues(t, lambda, pot)?;
    Ok(if lo > STABILITY_TOL {
        Stability::Stable
    } else if lo < -STABILITY_TOL {
        Stability::Unstable
    } else {
        Stability::Marginal
    })
}

/// State `(u1, w1, 0, 0)` of the reduced dynamics at an equilibrium.
pub fn equilibrium_state(eq: &EquilibriumPoint) -> Result<[f64; 4]> {
    let (u1, w1, _) = sides_to_coords(&eq.triangle)?;
    Ok([u1, w1, 0.0, 0.0])
}

// ---------------------------------------------------------------------------
// Searching for all equilibria at a given area

/// Residual of the isosceles reduction `b = c`, as a function of the base `a`.
fn isosceles_residual(a: f64, area: f64, pot: &PotentialParams) -> Option<(f64, Triangle)> {
    let b = (4.0 * area * area / (a * a) + 0.25 * a * a).sqrt();
    let t = Triangle::new(a, b, b);
    let g = heron_grad(&t);
    let lambda = -pot.dphi(b).ok()? / g[1];
    Some((pot.dphi(a).ok()? + lambda * g[0], t))
}

/// Seeds on every isosceles branch: sign changes of the reduced residual on a
/// logarithmic grid of base lengths, refined by bisection.
fn isosceles_seeds(area: f64, pot: &PotentialParams) -> Vec<Triangle> {
    const SAMPLES: usize = 4000;
    let (lo, hi) = (0.1 * pot.minimizer(), 5.0 * pot.minimizer());
    let grid: Vec<f64> = (0..=SAMPLES).map(|k| lo * (hi / lo).powf(k as f64 / SAMPLES as f64)).collect();
    let mut seeds = Vec::new();
    let mut prev: Option<(f64, f64)> = None;
    for &a in &grid {
        let Some((r, _)) = isosceles_residual(a, area, pot) else {
            prev = None;
            continue;
        };
        if let Some((a0, r0)) = prev {
            if r0.signum() != r.signum() {
                let (mut x0, mut x1, mut f0) = (a0, a, r0);
                for _ in 0..60 {
                    let m = 0.5 * (x0 + x1);
                    match isosceles_residual(m, area, pot) {
                        Some((fm, _)) if fm.signum() == f0.signum() => {
                            x0 = m;
                            f0 = fm;
                        }
                        Some(_) => x1 = m,
                        None => break,
                    }
                }
                if let Some((_, t)) = isosceles_residual(0.5 * (x0 + x1), area, pot) {
                    seeds.push(t);
                }
            }
        }
        prev = Some((a, r));
    }
    seeds
}

/// Starting triangles spread over a grid of two sides, with the third fixed
/// by the area (both roots).
fn grid_seeds(area: f64, pot: &PotentialParams) -> Vec<Triangle> {
    const N: usize = 24;
    let r0 = pot.minimizer();
    let (lo, hi) = (0.7 * r0, 2.2 * r0);
    let mut out = Vec::new();
    for i in 0..N {
        for j in 0..=i {
            let a = lo + (hi - lo) * i as f64 / (N - 1) as f64;
            let b = lo + (hi - lo) * j as f64 / (N - 1) as f64;
            let disc = 4.0 * a * a * b * b - 16.0 * area * area;
            if disc < 0.0 {
                continue;
            }
            for c2 in [a * a + b * b - disc.sqrt(), a * a + b * b + disc.sqrt()] {
                if c2 > 0.0 {
                    out.push(Triangle::new(a, b, c2.sqrt()));
                }
            }
        }
    }
    out
}

/// Small symmetric-breaking perturbations of a configuration.
fn perturbations(t: &Triangle) -> Vec<Triangle> {
    let s = t.sides();
    let mut out = Vec::new();
    for eps in [1e-3, 1e-2, 5e-2] {
        for (i, j) in [(0, 1), (1, 2), (0, 2)] {
            for sign in [1.0, -1.0] {
                let mut p = s;
                p[i] *= 1.0 + sign * eps;
                p[j] *= 1.0 - sign * eps;
                out.push(Triangle::from_sides(p));
            }
        }
    }
    out
}

fn same_shape(x: &EquilibriumPoint, y: &EquilibriumPoint) -> bool {
    x.shape().iter().zip(y.shape()).all(|(p, q)| (p - q).abs() <= 1e-7 * p.abs().max(1.0))
}

fn insert_unique(found: &mut Vec<EquilibriumPoint>, eq: EquilibriumPoint) {
    if !found.iter().any(|f| same_shape(f, &eq)) {
        found.push(eq);
    }
}

/// All equilibrium shapes found at `area`, one representative per shape
/// (sorted by kind, then by ascending sides). `previous` supplies extra seeds,
/// normally the solutions at a neighbouring area.
pub fn find_equilibria(
    area: f64,
    pot: &PotentialParams,
    previous: &[EquilibriumPoint],
) -> Result<Vec<EquilibriumPoint>> {
    check_area(area)?;
    let mut found = vec![equilateral(area, pot)?];
    let mut seeds = isosceles_seeds(area, pot);
    for prev in previous {
        // rescale the previous shape to the new area
        let scale = (area / prev.area).sqrt();
        let s = prev.triangle.sides().map(|v| v * scale);
        seeds.push(Triangle::from_sides(s));
    }
    seeds.extend(grid_seeds(area, pot));
    for seed in &seeds {
        if let Ok(eq) = solve_equieq(area, pot, *seed, None) {
            insert_unique(&mut found, eq);
        }
    }
    // break the symmetry of every symmetric solution to reach scalene branches
    let symmetric: Vec<EquilibriumPoint> = found.iter().filter(|e| e.kind != Kind::Scalene).copied().collect();
    for eq in symmetric {
        for seed in perturbations(&eq.triangle) {
            if let Ok(sol) = solve_equieq(area, pot, seed, Some(eq.lambda)) {
                insert_unique(&mut found, sol);
            }
        }
    }
    found.sort_by(|x, y| x.kind.cmp(&y.kind).then_with(|| x.shape().partial_cmp(&y.shape()).unwrap()));
    Ok(found)
}

/// One `(kind, stability)` group of equilibria at an area, with the total
/// number of labelled configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BranchSummary {
    pub kind: Kind,
    pub stability: Stability,
    pub multiplicity: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanRow {
    pub area: f64,
    pub equilibria: Vec<EquilibriumPoint>,
}

impl ScanRow {
    pub fn summary(&self) -> Vec<BranchSummary> {
        let mut out: Vec<BranchSummary> = Vec::new();
        for eq in &self.equilibria {
            match out.iter_mut().find(|b| b.kind == eq.kind && b.stability == eq.stability) {
                Some(b) => b.multiplicity += eq.kind.multiplicity(),
                None => out.push(BranchSummary { kind: eq.kind, stability: eq.stability, multiplicity: eq.kind.multiplicity() }),
            }
        }
        out.sort_by_key(|b| (b.kind, b.stability));
        out
    }
}

/// Equilibria at every area in `areas` (ascending). Each area is first
/// searched independently, then solutions are continued to neighbouring
/// areas in both directions to pick up branches a single search missed.
pub fn continuation_scan(pot: &PotentialParams, areas: &[f64]) -> Result<Vec<ScanRow>> {
    let mut rows: Vec<ScanRow> = areas
        .par_iter()
        .map(|&area| Ok(ScanRow { area, equilibria: find_equilibria(area, pot, &[])? }))
        .collect::<Result<_>>()?;
    let continue_from = |rows: &mut Vec<ScanRow>, from: usize, to: usize| {
        let seeds = rows[from].equilibria.clone();
        let target = &mut rows[to];
        for prev in &seeds {
            let scale = (target.area / prev.area).sqrt();
            let guess = Triangle::from_sides(prev.triangle.sides().map(|v| v * scale));
            if let Ok(eq) = solve_equieq(target.area, pot, guess, None) {
                insert_unique(&mut target.equilibria, eq);
            }
        }
    };
    for i in 1..rows.len() {
        continue_from(&mut rows, i - 1, i);
    }
    for i in (1..rows.len()).rev() {
        continue_from(&mut rows, i, i - 1);
    }
    for row in &mut rows {
        row.equilibria
            .sort_by(|x, y| x.kind.cmp(&y.kind).then_with(|| x.shape().partial_cmp(&y.shape()).unwrap()));
    }
    Ok(rows)
}

/// `count` areas from `start` to `end` inclusive with spacing `step`.
pub fn area_grid(start: f64, end: f64, step: f64) -> Result<Vec<f64>> {
    if !(start > 0.0 && end >= start && step > 0.0) {
        return Err(Error::InvalidParameter(format!("bad area range [{start}, {end}] with step {step}")));
    }
    let count = ((end - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + step * k as f64).collect())
}
