//! Autonomous first-order systems `x' = f(x)` with Jacobians.

use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::potential::PotentialParams;
use crate::region::BoxRegion;

/// An autonomous vector field on (a subset of) `R^n`.
pub trait DynamicalSystem: Send + Sync {
    fn name(&self) -> &str;

    fn dim(&self) -> usize;

    /// Writes `f(x)` into `dx`.
    fn rhs(&self, x: &[f64], dx: &mut [f64]) -> Result<()>;

    /// Writes `df_i/dx_j` into `jac[i * n + j]`.
    fn jacobian(&self, x: &[f64], jac: &mut [f64]) -> Result<()>;

    /// Conserved energy, for systems that have one.
    fn energy(&self, _x: &[f64]) -> Option<Result<f64>> {
        None
    }

    /// Closed box outside of which the vector field is not evaluated.
    fn domain(&self) -> BoxRegion {
        BoxRegion::unbounded(self.dim())
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        self.domain().contains(x)
    }
}

/// Central-difference Jacobian with step `h * max(1, |x_j|)`.
pub fn finite_difference_jacobian<S: DynamicalSystem + ?Sized>(
    sys: &S,
    x: &[f64],
    h: f64,
    jac: &mut [f64],
) -> Result<()> {
    let n = sys.dim();
    let mut xp = x.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let step = h * x[j].abs().max(1.0);
        xp[j] = x[j] + step;
        sys.rhs(&xp, &mut fp)?;
        xp[j] = x[j] - step;
        sys.rhs(&xp, &mut fm)?;
        xp[j] = x[j];
        for i in 0..n {
            jac[i * n + j] = (fp[i] - fm[i]) / (2.0 * step);
        }
    }
    Ok(())
}

fn check_len(sys: &dyn DynamicalSystem, x: &[f64]) {
    debug_assert_eq!(x.len(), sys.dim(), "{}: state length", sys.name());
}

// ---------------------------------------------------------------------------

/// `x' = M x`.
#[derive(Debug, Clone)]
pub struct LinearSystem {
    matrix: Matrix,
}

impl LinearSystem {
    pub fn new(matrix: Matrix) -> Result<Self> {
        if matrix.rows() != matrix.cols() || matrix.rows() == 0 {
            return Err(Error::InvalidParameter("linear system matrix must be square".into()));
        }
        if !matrix.is_finite() {
            return Err(Error::NonFinite("linear system matrix"));
        }
        Ok(Self { matrix })
    }

    /// The symmetric 2x2 example with eigenvalues -1 and 0.1.
    pub fn mixed_example() -> Self {
        Self { matrix: Matrix::from_rows(&[[-0.45, -0.55], [-0.55, -0.45]]) }
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }
}

impl DynamicalSystem for LinearSystem {
    fn name(&self) -> &str {
        "linear"
    }

    fn dim(&self) -> usize {
        self.matrix.rows()
    }

    fn rhs(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        check_len(self, x);
        let n = self.dim();
        let m = self.matrix.as_slice();
        for i in 0..n {
            dx[i] = m[i * n..(i + 1) * n].iter().zip(x).map(|(a, b)| a * b).sum();
        }
        Ok(())
    }

    fn jacobian(&self, _x: &[f64], jac: &mut [f64]) -> Result<()> {
        jac.copy_from_slice(self.matrix.as_slice());
        Ok(())
    }
}

// ---------------------------------------------------------------------------

/// Sprott's case A: `x' = y, y' = -x + y z, z' = 1 - y^2`.
#[derive(Debug, Clone, Copy, Default)]
pub struct SprottA;

impl DynamicalSystem for SprottA {
    fn name(&self) -> &str {
        "sprott_a"
    }

    fn dim(&self) -> usize {
        3
    }

    fn rhs(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        check_len(self, x);
        dx[0] = x[1];
        dx[1] = -x[0] + x[1] * x[2];
        dx[2] = 1.0 - x[1] * x[1];
        Ok(())
    }

    fn jacobian(&self, x: &[f64], jac: &mut [f64]) -> Result<()> {
        jac.copy_from_slice(&[0.0, 1.0, 0.0, -1.0, x[2], x[1], 0.0, -2.0 * x[1], 0.0]);
        Ok(())
    }
}

// ---------------------------------------------------------------------------

/// Planar frictionless double pendulum, state `(theta1, theta1', theta2, theta2')`.
/// Shaft tensions are recovered from a 2x2 linear solve at every evaluation.
#[derive(Debug, Clone, Copy)]
pub struct DoublePendulum {
    pub m1: f64,
    pub m2: f64,
    pub l1: f64,
    pub l2: f64,
    pub g: f64,
}

impl Default for DoublePendulum {
    fn default() -> Self {
        Self { m1: 1.0, m2: 1.0, l1: 1.0, l2: 1.0, g: 9.81 }
    }
}

impl DoublePendulum {
    pub fn new(m1: f64, m2: f64, l1: f64, l2: f64, g: f64) -> Result<Self> {
        for (name, v) in [("m1", m1), ("m2", m2), ("l1", l1), ("l2", l2), ("g", g)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!("double pendulum {name} must be positive, got {v}")));
            }
        }
        Ok(Self { m1, m2, l1, l2, g })
    }

    /// Shaft tensions `(T1, T2)`.
    pub fn tensions(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (th1, om1, th2, om2) = (x[0], x[1], x[2], x[3]);
        let cos_d = (th2 - th1).cos();
        let inv1 = 1.0 / self.m1;
        let (a11, a12, a22) = (inv1, -cos_d * inv1, inv1 + 1.0 / self.m2);
        let det = a11 * a22 - a12 * a12;
        if det < 1e-14 {
            return Err(Error::Singular("double pendulum tension system"));
        }
        let b1 = self.l1 * om1 * om1 + self.g * th1.cos();
        let b2 = self.l2 * om2 * om2;
        Ok(((a22 * b1 - a12 * b2) / det, (a11 * b2 - a12 * b1) / det))
    }
}

impl DynamicalSystem for DoublePendulum {
    fn name(&self) -> &str {
        "double_pendulum"
    }

    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        check_len(self, x);
        let (t1, t2) = self.tensions(x)?;
        let sin_d = (x[2] - x[0]).sin();
        dx[0] = x[1];
        dx[1] = ((t2 / self.m1) * sin_d - self.g * x[0].sin()) / self.l1;
        dx[2] = x[3];
        dx[3] = -(t1 / self.m1) * sin_d / self.l2;
        Ok(())
    }

    fn jacobian(&self, x: &[f64], jac: &mut [f64]) -> Result<()> {
        finite_difference_jacobian(self, x, 1e-6, jac)
    }

    fn energy(&self, x: &[f64]) -> Option<Result<f64>> {
        let (th1, om1, th2, om2) = (x[0], x[1], x[2], x[3]);
        let (m1, m2, l1, l2, g) = (self.m1, self.m2, self.l1, self.l2, self.g);
        let kinetic = 0.5 * m1 * (l1 * om1).powi(2)
            + 0.5 * m2 * ((l1 * om1).powi(2) + (l2 * om2).powi(2) + 2.0 * l1 * l2 * om1 * om2 * (th1 - th2).cos());
        let potential = -(m1 + m2) * g * l1 * th1.cos() - m2 * g * l2 * th2.cos();
        Some(Ok(kinetic + potential))
    }
}

// ---------------------------------------------------------------------------

/// Physical parameters of the area-constrained three-particle array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LjSystemParams {
    pub potential: PotentialParams,
    pub mass: f64,
    pub area: f64,
}

impl LjSystemParams {
    pub fn new(potential: PotentialParams, mass: f64, area: f64) -> Result<Self> {
        potential.validate()?;
        if !(mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!("particle mass must be positive, got {mass}")));
        }
        if !(area > 0.0 && area.is_finite()) {
            return Err(Error::InvalidParameter(format!("area must be positive, got {area}")));
        }
        Ok(Self { potential, mass, area })
    }
}

/// Smallest admissible `w1`; states below it are outside the domain.
pub const LJ_W_MIN: f64 = 1e-8;

/// Reduced dynamics of the three-particle array in `(u1, w1, v1, v2)`, with
/// particle 3 at the origin, particle 2 at `(u2, 0)` and `u2 = 2A / w1`
/// enforcing the area constraint.
#[derive(Debug, Clone, Copy)]
pub struct LjReduced {
    params: LjSystemParams,
    w_min: f64,
}

/// Geometry and potential terms shared by the vector field and its Jacobian.
struct LjTerms {
    u2: f64,
    d: f64,
    r12: f64,
    r1: f64,
    psi12: f64,
    psi1: f64,
    dphi2: f64,
    d2phi2: f64,
    dpsi12: f64,
    dpsi1: f64,
}

impl LjReduced {
    pub fn new(params: LjSystemParams) -> Self {
        Self { params, w_min: LJ_W_MIN }
    }

    pub fn with_w_min(mut self, w_min: f64) -> Self {
        self.w_min = w_min;
        self
    }

    pub fn params(&self) -> &LjSystemParams {
        &self.params
    }

    pub fn w_min(&self) -> f64 {
        self.w_min
    }

    /// `u2` from the area constraint.
    pub fn u2(&self, w1: f64) -> f64 {
        2.0 * self.params.area / w1
    }

    fn terms(&self, x: &[f64]) -> Result<LjTerms> {
        let (u1, w1) = (x[0], x[1]);
        if !(w1 > 0.0) {
            return Err(Error::Domain { what: "w1", value: w1 });
        }
        let u2 = self.u2(w1);
        let d = u1 - u2;
        let r12 = d.hypot(w1);
        let r1 = u1.hypot(w1);
        for (what, r) in [("r12", r12), ("r1", r1), ("u2", u2)] {
            if !(r > 0.0 && r.is_finite()) {
                return Err(Error::Domain { what, value: r });
            }
        }
        let pot = &self.params.potential;
        let (e12, e1, e2) = (pot.eval_unchecked(r12), pot.eval_unchecked(r1), pot.eval_unchecked(u2));
        // psi(r) = phi'(r) / r and psi'(r)
        Ok(LjTerms {
            u2,
            d,
            r12,
            r1,
            psi12: e12.dphi / r12,
            psi1: e1.dphi / r1,
            dphi2: e2.dphi,
            d2phi2: e2.d2phi,
            dpsi12: (e12.d2phi - e12.dphi / r12) / r12,
            dpsi1: (e1.d2phi - e1.dphi / r1) / r1,
        })
    }

    fn v2_dot_parts(&self, x: &[f64], t: &LjTerms) -> (f64, f64) {
        let (w1, v2) = (x[1], x[3]);
        let (m, a) = (self.params.mass, self.params.area);
        let w3 = w1 * w1 * w1;
        let num = 2.0 * a * (-t.psi12 * t.d + t.dphi2) - (t.psi12 + t.psi1) * w3
            + 8.0 * m * a * a * v2 * v2 / w3;
        let den = m * (w1 * w1 + t.u2 * t.u2);
        (num, den)
    }

    /// Kinetic and potential energy `(K, U)`.
    pub fn kinetic_potential(&self, x: &[f64]) -> Result<(f64, f64)> {
        let (u1, w1, v1, v2) = (x[0], x[1], x[2], x[3]);
        if !(w1 > 0.0) {
            return Err(Error::Domain { what: "w1", value: w1 });
        }
        let m = self.params.mass;
        let u2 = self.u2(w1);
        let u2_dot = -2.0 * self.params.area * v2 / (w1 * w1);
        let kinetic = 0.5 * m * (v1 * v1 + v2 * v2 + u2_dot * u2_dot);
        let pot = &self.params.potential;
        let potential = pot.phi((u1 - u2).hypot(w1))? + pot.phi(u1.hypot(w1))? + pot.phi(u2)?;
        Ok((kinetic, potential))
    }
}

impl DynamicalSystem for LjReduced {
    fn name(&self) -> &str {
        "lj_reduced"
    }

    fn dim(&self) -> usize {
        4
    }

    fn rhs(&self, x: &[f64], dx: &mut [f64]) -> Result<()> {
        check_len(self, x);
        let t = self.terms(x)?;
        let m = self.params.mass;
        dx[0] = x[2];
        dx[1] = x[3];
        dx[2] = (-t.psi12 * t.d - t.psi1 * x[0]) / m;
        let (num, den) = self.v2_dot_parts(x, &t);
        dx[3] = num / den;
        Ok(())
    }

    fn jacobian(&self, x: &[f64], jac: &mut [f64]) -> Result<()> {
        let t = self.terms(x)?;
        let (u1, w1, v2) = (x[0], x[1], x[3]);
        let (m, a) = (self.params.mass, self.params.area);

        // derivatives of u2, d = u1 - u2, r12 and r1 w.r.t. (u1, w1)
        let u2_w = -t.u2 / w1;
        let d_w = -u2_w;
        let (r12_u, r12_w) = (t.d / t.r12, (t.d * d_w + w1) / t.r12);
        let (r1_u, r1_w) = (u1 / t.r1, w1 / t.r1);
        let (psi12_u, psi12_w) = (t.dpsi12 * r12_u, t.dpsi12 * r12_w);
        let (psi1_u, psi1_w) = (t.dpsi1 * r1_u, t.dpsi1 * r1_w);

        jac.fill(0.0);
        jac[2] = 1.0;
        jac[4 + 3] = 1.0;

        jac[8] = (-(psi12_u * t.d + t.psi12) - (psi1_u * u1 + t.psi1)) / m;
        jac[8 + 1] = (-(psi12_w * t.d + t.psi12 * d_w) - psi1_w * u1) / m;

        let (num, den) = self.v2_dot_parts(x, &t);
        let f4 = num / den;
        let w2 = w1 * w1;
        let w3 = w2 * w1;
        let num_u = -2.0 * a * (psi12_u * t.d + t.psi12) - (psi12_u + psi1_u) * w3;
        let num_w = 2.0 * a * (-(psi12_w * t.d + t.psi12 * d_w) + t.d2phi2 * u2_w)
            - (psi12_w + psi1_w) * w3
            - 3.0 * (t.psi12 + t.psi1) * w2
            - 24.0 * m * a * a * v2 * v2 / (w2 * w2);
        let num_v2 = 16.0 * m * a * a * v2 / w3;
        let den_w = 2.0 * m * (w1 + t.u2 * u2_w);
        jac[12] = num_u / den;
        jac[12 + 1] = (num_w - f4 * den_w) / den;
        jac[12 + 3] = num_v2 / den;
        Ok(())
    }

    fn energy(&self, x: &[f64]) -> Option<Result<f64>> {
        Some(self.kinetic_potential(x).map(|(k, u)| k + u))
    }

    fn domain(&self) -> BoxRegion {
        let mut lower = vec![f64::NEG_INFINITY; 4];
        lower[1] = self.w_min;
        BoxRegion::new(lower, vec![f64::INFINITY; 4]).expect("w_min is finite")
    }

    fn in_domain(&self, x: &[f64]) -> bool {
        x.len() == 4 && x[1] > self.w_min && x.iter().all(|v| v.is_finite())
    }
}

// ---------------------------------------------------------------------------

/// Name-and-parameters description of a catalogue system, as read from a
/// run configuration.
#[derive(Debug, Clone)]
pub enum SystemSpec {
    Linear(Matrix),
    SprottA,
    DoublePendulum(DoublePendulum),
    LjReduced(LjSystemParams),
}

pub const SYSTEM_NAMES: [&str; 4] = ["linear", "sprott_a", "double_pendulum", "lj_reduced"];

fn take(params: &mut BTreeMap<String, f64>, key: &str, default: f64) -> f64 {
    params.remove(key).unwrap_or(default)
}

impl SystemSpec {
    /// Builds a spec from a system name and a numeric parameter map. Missing
    /// parameters take their defaults; unknown keys are rejected.
    ///
    /// * `linear`: `n` and entries `a<i>_<j>` (1-based, missing entries zero);
    ///   with no entries at all the 2x2 mixed-sign example is used.
    /// * `sprott_a`: no parameters.
    /// * `double_pendulum`: `m1, m2, l1, l2, g` (defaults 1, 1, 1, 1, 9.81).
    /// * `lj_reduced`: `c1, c2, delta1, delta2, m, A` (defaults 1, 2, 12, 6, 1, 0.65).
    pub fn from_name(name: &str, params: &BTreeMap<String, f64>) -> Result<Self> {
        let mut p = params.clone();
        let spec = match name {
            "linear" => {
                let has_entries = p.keys().any(|k| k.starts_with('a'));
                if !has_entries && !p.contains_key("n") {
                    SystemSpec::Linear(LinearSystem::mixed_example().matrix().clone())
                } else {
                    let n = take(&mut p, "n", 2.0);
                    if !(n >= 1.0 && n.fract() == 0.0) {
                        return Err(Error::InvalidParameter(format!("linear: n must be a positive integer, got {n}")));
                    }
                    let n = n as usize;
                    let mut m = Matrix::zeros(n, n);
                    for i in 0..n {
                        for j in 0..n {
                            if let Some(v) = p.remove(&format!("a{}_{}", i + 1, j + 1)) {
                                m[(i, j)] = v;
                            }
                        }
                    }
                    SystemSpec::Linear(m)
                }
            }
            "sprott_a" => SystemSpec::SprottA,
            "double_pendulum" => {
                let d = DoublePendulum::default();
                SystemSpec::DoublePendulum(DoublePendulum::new(
                    take(&mut p, "m1", d.m1),
                    take(&mut p, "m2", d.m2),
                    take(&mut p, "l1", d.l1),
                    take(&mut p, "l2", d.l2),
                    take(&mut p, "g", d.g),
                )?)
            }
            "lj_reduced" => {
                let lj = PotentialParams::lennard_jones();
                let potential = PotentialParams::new(
                    take(&mut p, "c1", lj.c1),
                    take(&mut p, "c2", lj.c2),
                    take(&mut p, "delta1", lj.delta1),
                    take(&mut p, "delta2", lj.delta2),
                )?;
                SystemSpec::LjReduced(LjSystemParams::new(potential, take(&mut p, "m", 1.0), take(&mut p, "A", 0.65))?)
            }
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown system '{other}' (expected one of {})",
                    SYSTEM_NAMES.join(", ")
                )))
            }
        };
        if let Some(k) = p.keys().next() {
            return Err(Error::InvalidParameter(format!("system '{name}' has no parameter '{k}'")));
        }
        Ok(spec)
    }

    pub fn build(&self) -> Result<Box<dyn DynamicalSystem>> {
        Ok(match self {
            SystemSpec::Linear(m) => Box::new(LinearSystem::new(m.clone())?),
            SystemSpec::SprottA => Box::new(SprottA),
            SystemSpec::DoublePendulum(d) => Box::new(*d),
            SystemSpec::LjReduced(p) => Box::new(LjReduced::new(*p)),
        })
    }
}
