//! Lennard-Jones type pair potential `phi(r) = c1 / r^delta1 - c2 / r^delta2`.

use crate::error::{Error, Result};

/// Coefficients of the pair potential. Requires `c1, c2 > 0` and
/// `delta1 > delta2 > 2`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialParams {
    pub c1: f64,
    pub c2: f64,
    pub delta1: f64,
    pub delta2: f64,
}

/// Value and first two derivatives at one radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PotentialEval {
    pub phi: f64,
    pub dphi: f64,
    pub d2phi: f64,
}

impl PotentialParams {
    pub fn new(c1: f64, c2: f64, delta1: f64, delta2: f64) -> Result<Self> {
        let p = Self { c1, c2, delta1, delta2 };
        p.validate()?;
        Ok(p)
    }

    /// The 12-6 instance with `c1 = 1`, `c2 = 2` used throughout the examples.
    pub const fn lennard_jones() -> Self {
        Self { c1: 1.0, c2: 2.0, delta1: 12.0, delta2: 6.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.c1, self.c2, self.delta1, self.delta2]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.c1 <= 0.0 || self.c2 <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "potential coefficients must be positive and finite (c1 = {}, c2 = {})",
                self.c1, self.c2
            )));
        }
        if !(self.delta1 > self.delta2 && self.delta2 > 2.0) {
            return Err(Error::InvalidParameter(format!(
                "potential exponents must satisfy delta1 > delta2 > 2 (got {}, {})",
                self.delta1, self.delta2
            )));
        }
        Ok(())
    }

    pub fn phi(&self, r: f64) -> Result<f64> {
        Ok(self.eval(r)?.phi)
    }

    pub fn dphi(&self, r: f64) -> Result<f64> {
        Ok(self.eval(r)?.dphi)
    }

    pub fn d2phi(&self, r: f64) -> Result<f64> {
        Ok(self.eval(r)?.d2phi)
    }

    /// All three quantities from a single pair of power evaluations.
    pub fn eval(&self, r: f64) -> Result<PotentialEval> {
        if !(r > 0.0) || !r.is_finite() {
            return Err(Error::Domain { what: "pair distance", value: r });
        }
        Ok(self.eval_unchecked(r))
    }

    #[inline]
    pub(crate) fn eval_unchecked(&self, r: f64) -> PotentialEval {
        let ln_r = r.ln();
        let rep = self.c1 * (-self.delta1 * ln_r).exp();
        let att = self.c2 * (-self.delta2 * ln_r).exp();
        let inv_r = 1.0 / r;
        PotentialEval {
            phi: rep - att,
            dphi: (-self.delta1 * rep + self.delta2 * att) * inv_r,
            d2phi: (self.delta1 * (self.delta1 + 1.0) * rep
                - self.delta2 * (self.delta2 + 1.0) * att)
                * inv_r
                * inv_r,
        }
    }

    /// The unique critical point of `phi` on `(0, inf)`, which is its minimum.
    pub fn minimizer(&self) -> f64 {
        ((self.delta1 * self.c1) / (self.delta2 * self.c2)).powf(1.0 / (self.delta1 - self.delta2))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const LJ: PotentialParams = PotentialParams::lennard_jones();

    #[test]
    fn unit_distance_values() {
        assert_eq!(LJ.phi(1.0).unwrap(), -1.0);
        assert_eq!(LJ.dphi(1.0).unwrap(), 0.0);
        assert!((LJ.d2phi(1.0).unwrap() - 72.0).abs() < 1e-12);
    }

    #[test]
    fn far_field_is_small_and_negative() {
        let v = LJ.phi(1e3).unwrap();
        assert!(v < 0.0 && v > -1e-17);
    }

    #[test]
    fn matches_extended_precision_arithmetic() {
        // 1/r^12 - 2/r^6 at r = 1.16499, evaluated with 40-digit arithmetic.
        let expected = -0.640_007_541_844_614_186_2;
        let v = LJ.phi(1.16499).unwrap();
        assert!((v - expected).abs() < 1e-14, "{v}");
    }

    #[test]
    fn nonpositive_radius_is_rejected() {
        assert!(matches!(LJ.phi(0.0), Err(Error::Domain { .. })));
        assert!(LJ.dphi(-1.0).is_err());
        assert!(LJ.d2phi(f64::NAN).is_err());
    }

    #[test]
    fn invalid_parameters() {
        assert!(PotentialParams::new(1.0, 2.0, 6.0, 12.0).is_err());
        assert!(PotentialParams::new(1.0, 2.0, 12.0, 2.0).is_err());
        assert!(PotentialParams::new(-1.0, 2.0, 12.0, 6.0).is_err());
        assert!(PotentialParams::new(1.0, 2.0, 9.5, 3.5).is_ok());
    }

    fn check_fd(p: &PotentialParams) {
        for k in 0..40 {
            let r = 0.5 * 10f64.powf(k as f64 / 39.0);
            let h = 1e-6 * r;
            let fd1 = (p.phi(r + h).unwrap() - p.phi(r - h).unwrap()) / (2.0 * h);
            let d1 = p.dphi(r).unwrap();
            let scale = d1.abs().max(p.phi(r).unwrap().abs() / r);
            assert!((fd1 - d1).abs() <= 1e-6 * scale, "dphi at {r}: {d1} vs {fd1}");
            let fd2 = (p.dphi(r + h).unwrap() - p.dphi(r - h).unwrap()) / (2.0 * h);
            let d2 = p.d2phi(r).unwrap();
            let scale = d2.abs().max(d1.abs() / r);
            assert!((fd2 - d2).abs() <= 1e-6 * scale, "d2phi at {r}: {d2} vs {fd2}");
        }
    }

    #[test]
    fn derivatives_match_finite_differences() {
        check_fd(&LJ);
        check_fd(&PotentialParams::new(0.7, 1.3, 9.5, 4.25).unwrap());
    }

    #[test]
    fn dphi_at_two_relative_fd() {
        let h = 1e-6;
        let fd = (LJ.phi(2.0 + h).unwrap() - LJ.phi(2.0 - h).unwrap()) / (2.0 * h);
        let d = LJ.dphi(2.0).unwrap();
        assert!(((fd - d) / d).abs() < 1e-6);
        let fd2 = (LJ.dphi(2.0 + h).unwrap() - LJ.dphi(2.0 - h).unwrap()) / (2.0 * h);
        let d2 = LJ.d2phi(2.0).unwrap();
        assert!(((fd2 - d2) / d2).abs() < 1e-6);
    }

    #[test]
    fn minimizer_is_the_only_critical_point() {
        for p in [LJ, PotentialParams::new(0.3, 5.0, 8.0, 3.0).unwrap()] {
            let r0 = p.minimizer();
            assert!(p.dphi(r0).unwrap().abs() < 1e-10 * p.d2phi(r0).unwrap());
            assert!(p.d2phi(r0).unwrap() > 0.0);
            // sign of dphi on a grid: negative before r0, positive after
            for k in 1..400 {
                let r = 0.2 + 0.01 * k as f64;
                let d = p.dphi(r).unwrap();
                if r < r0 * (1.0 - 1e-9) {
                    assert!(d < 0.0);
                } else if r > r0 * (1.0 + 1e-9) {
                    assert!(d > 0.0);
                }
            }
        }
        assert!((LJ.minimizer() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn rho_root_of_lj_instance() {
        let a = 2.5f64.powf(1.0 / 6.0);
        let e = LJ.eval(a).unwrap();
        assert!((e.d2phi + 3.0 * e.dphi / a).abs() < 1e-12);
    }
}
