//! Triangle geometry of the three-particle array.
//!
//! Particle 3 sits at the origin and particle 2 on the positive x-axis, so a
//! configuration is described either by its side lengths `(a, b, c)` =
//! `(r12, r13, r23)` or by the reduced coordinates `(u1, w1, u2)` with
//! `r1 = (u1, w1)` and `r2 = (u2, 0)`.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    /// `r12`
    pub a: f64,
    /// `r13`
    pub b: f64,
    /// `r23`
    pub c: f64,
}

impl Triangle {
    pub const fn new(a: f64, b: f64, c: f64) -> Self {
        Self { a, b, c }
    }

    pub const fn equilateral(side: f64) -> Self {
        Self { a: side, b: side, c: side }
    }

    pub fn sides(&self) -> [f64; 3] {
        [self.a, self.b, self.c]
    }

    pub fn from_sides(s: [f64; 3]) -> Self {
        Self { a: s[0], b: s[1], c: s[2] }
    }

    /// Strict triangle inequality with positive sides.
    pub fn is_valid(&self) -> bool {
        let [a, b, c] = self.sides();
        a > 0.0 && b > 0.0 && c > 0.0 && a < b + c && b < a + c && c < a + b
    }
}

/// Heron's formula for the squared area. Negative values mean the triangle
/// inequality is violated; zero means a degenerate (collinear) triangle.
pub fn heron_gamma(t: &Triangle) -> f64 {
    let (a2, b2, c2) = (t.a * t.a, t.b * t.b, t.c * t.c);
    (a2 * b2 + a2 * c2 + b2 * c2) / 8.0 - (a2 * a2 + b2 * b2 + c2 * c2) / 16.0
}

/// `(dG/da, dG/db, dG/dc)` of [`heron_gamma`].
pub fn heron_grad(t: &Triangle) -> [f64; 3] {
    let (a2, b2, c2) = (t.a * t.a, t.b * t.b, t.c * t.c);
    [
        0.25 * t.a * (b2 + c2 - a2),
        0.25 * t.b * (a2 + c2 - b2),
        0.25 * t.c * (a2 + b2 - c2),
    ]
}

/// Second partials of [`heron_gamma`], row-major 3x3.
pub fn heron_hessian(t: &Triangle) -> [[f64; 3]; 3] {
    let (a, b, c) = (t.a, t.b, t.c);
    let (a2, b2, c2) = (a * a, b * b, c * c);
    [
        [0.25 * (b2 + c2) - 0.75 * a2, 0.5 * a * b, 0.5 * a * c],
        [0.5 * a * b, 0.25 * (a2 + c2) - 0.75 * b2, 0.5 * b * c],
        [0.5 * a * c, 0.5 * b * c, 0.25 * (a2 + b2) - 0.75 * c2],
    ]
}

/// Area constraint in reduced coordinates: `w1^2 u2^2 / 4 - A^2`.
pub fn gamma_constraint(_u1: f64, w1: f64, u2: f64, area: f64) -> f64 {
    0.25 * w1 * w1 * u2 * u2 - area * area
}

/// Closed-form partials `(dg/du1, dg/dw1, dg/du2)` of [`gamma_constraint`].
pub fn gamma_constraint_grad(_u1: f64, w1: f64, u2: f64) -> [f64; 3] {
    [0.0, 0.5 * w1 * u2 * u2, 0.5 * w1 * w1 * u2]
}

/// The same partials obtained from Heron's gradient by the chain rule through
/// the side lengths; agrees with [`gamma_constraint_grad`] whenever `w1, u2 > 0`.
pub fn gamma_constraint_grad_chain(u1: f64, w1: f64, u2: f64) -> [f64; 3] {
    let t = coords_to_sides(u1, w1, u2);
    let [ga, gb, gc] = heron_grad(&t);
    let d = u1 - u2;
    [
        ga * d / t.a + gb * u1 / t.b,
        ga * w1 / t.a + gb * w1 / t.b,
        -ga * d / t.a + gc * u2 / t.c,
    ]
}

/// Places a triangle with particle 3 at the origin, particle 2 at `(c, 0)` and
/// particle 1 in the upper half plane. Returns `(u1, w1, u2)`.
pub fn sides_to_coords(t: &Triangle) -> Result<(f64, f64, f64)> {
    if !(t.c > 0.0) {
        return Err(Error::Domain { what: "side r23", value: t.c });
    }
    let u1 = (t.b * t.b + t.c * t.c - t.a * t.a) / (2.0 * t.c);
    let h2 = t.b * t.b - u1 * u1;
    if !(h2 > 0.0) {
        return Err(Error::Domain { what: "triangle height squared", value: h2 });
    }
    Ok((u1, h2.sqrt(), t.c))
}

pub fn coords_to_sides(u1: f64, w1: f64, u2: f64) -> Triangle {
    Triangle {
        a: (u1 - u2).hypot(w1),
        b: u1.hypot(w1),
        c: u2.abs(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn heron_examples() {
        assert!(close(heron_gamma(&Triangle::equilateral(1.0)), 3.0 / 16.0, 1e-15));
        assert_eq!(heron_gamma(&Triangle::new(2.0, 1.0, 1.0)), 0.0);
        let g = heron_gamma(&Triangle::new(1.2776, 1.4182, 1.0580));
        assert!(close(g, 0.4225, 1e-4), "{g}");
        // right triangle 3-4-5 has area 6
        assert!(close(heron_gamma(&Triangle::new(3.0, 4.0, 5.0)), 36.0, 1e-12));
        assert!(heron_gamma(&Triangle::new(3.0, 1.0, 1.0)) < 0.0);
    }

    #[test]
    fn heron_grad_unit_equilateral() {
        for g in heron_grad(&Triangle::equilateral(1.0)) {
            assert!(close(g, 0.25, 1e-15));
        }
    }

    #[test]
    fn heron_grad_and_hessian_match_finite_differences() {
        for t in [
            Triangle::new(1.2776, 1.4182, 1.0580),
            Triangle::new(0.7, 1.1, 1.5),
            Triangle::new(2.0, 2.0, 0.5),
        ] {
            let g = heron_grad(&t);
            let hess = heron_hessian(&t);
            for i in 0..3 {
                let h = 1e-6;
                let mut sp = t.sides();
                let mut sm = t.sides();
                sp[i] += h;
                sm[i] -= h;
                let (tp, tm) = (Triangle::from_sides(sp), Triangle::from_sides(sm));
                let fd = (heron_gamma(&tp) - heron_gamma(&tm)) / (2.0 * h);
                assert!((fd - g[i]).abs() <= 1e-6 * g[i].abs().max(1.0));
                let (gp, gm) = (heron_grad(&tp), heron_grad(&tm));
                for j in 0..3 {
                    let fd2 = (gp[j] - gm[j]) / (2.0 * h);
                    assert!((fd2 - hess[j][i]).abs() <= 1e-6 * hess[j][i].abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn constraint_examples() {
        let a = 0.55;
        assert_eq!(gamma_constraint(7.0, 2.0 * a, 1.0, a), 0.0);
        let w1 = 0.9760;
        let u2 = 2.0 * 0.55 / w1;
        assert!(gamma_constraint(0.5635, w1, u2, 0.55).abs() < 1e-12);
        assert_eq!(gamma_constraint(0.0, 1.0, 1.0, 1.0), -0.75);
    }

    #[test]
    fn coords_examples() {
        let (u1, w1, u2) = sides_to_coords(&Triangle::equilateral(1.0)).unwrap();
        assert!(close(u1, 0.5, 1e-15) && close(w1, 3f64.sqrt() / 2.0, 1e-15) && u2 == 1.0);

        let (u1, w1, u2) = sides_to_coords(&Triangle::equilateral(1.1270)).unwrap();
        assert!(close(u1, 0.5635, 1e-12));
        assert!(close(w1, 0.9760, 1e-4));
        assert_eq!(u2, 1.1270);

        let t = coords_to_sides(0.5635, 0.9760, 1.1270);
        for s in t.sides() {
            assert!(close(s, 1.1270, 1e-3));
        }
        let t = coords_to_sides(0.5, 3f64.sqrt() / 2.0, 1.0);
        for s in t.sides() {
            assert!(close(s, 1.0, 1e-15));
        }
    }

    #[test]
    fn scalene_round_trip() {
        let t = Triangle::new(1.2776, 1.4182, 1.0580);
        let (u1, w1, u2) = sides_to_coords(&t).unwrap();
        // pairwise distances of (u1,w1), (u2,0), (0,0)
        let r12 = ((u1 - u2).powi(2) + w1 * w1).sqrt();
        let r13 = (u1 * u1 + w1 * w1).sqrt();
        assert!(close(r12, t.a, 1e-10) && close(r13, t.b, 1e-10) && close(u2, t.c, 1e-10));
    }

    #[test]
    fn invalid_triangle_rejected() {
        assert!(sides_to_coords(&Triangle::new(3.0, 1.0, 1.0)).is_err());
        assert!(sides_to_coords(&Triangle::new(2.0, 1.0, 1.0)).is_err());
        assert!(sides_to_coords(&Triangle::new(1.0, 1.0, 0.0)).is_err());
    }

    #[test]
    fn reduced_partials_agree_with_chain_rule() {
        for &(u1, w1, u2) in &[(0.5635, 0.976, 1.127), (-0.4, 0.3, 2.1), (1.7, 1.2, 0.4)] {
            let closed = gamma_constraint_grad(u1, w1, u2);
            let chain = gamma_constraint_grad_chain(u1, w1, u2);
            for i in 0..3 {
                assert!(close(closed[i], chain[i], 1e-12), "{i}: {closed:?} {chain:?}");
            }
        }
    }

    /// Full planar constraint gradient for particles at r1, r2, r3; the three
    /// gradient vectors sum to zero (translation invariance).
    #[test]
    fn constraint_gradient_sums_to_zero() {
        let r = [[0.3, 1.1], [1.4, -0.2], [-0.5, 0.1]];
        let sub = |p: [f64; 2], q: [f64; 2]| [p[0] - q[0], p[1] - q[1]];
        let norm = |v: [f64; 2]| v[0].hypot(v[1]);
        let (d12, d13, d23) = (sub(r[0], r[1]), sub(r[0], r[2]), sub(r[1], r[2]));
        let t = Triangle::new(norm(d12), norm(d13), norm(d23));
        let [ga, gb, gc] = heron_grad(&t);
        for k in 0..2 {
            let g1 = ga / t.a * d12[k] + gb / t.b * d13[k];
            let g2 = -ga / t.a * d12[k] + gc / t.c * d23[k];
            let g3 = -gb / t.b * d13[k] - gc / t.c * d23[k];
            assert!((g1 + g2 + g3).abs() < 1e-14);
        }
    }

    proptest! {
        #[test]
        fn gamma_is_permutation_invariant(a in 0.1f64..3.0, b in 0.1f64..3.0, c in 0.1f64..3.0) {
            let s = [a, b, c];
            let g0 = heron_gamma(&Triangle::from_sides(s));
            let grad0 = heron_grad(&Triangle::from_sides(s));
            for p in PERMS {
                let t = Triangle::from_sides([s[p[0]], s[p[1]], s[p[2]]]);
                prop_assert!((heron_gamma(&t) - g0).abs() <= 1e-13 * g0.abs().max(1.0));
                let grad = heron_grad(&t);
                for i in 0..3 {
                    prop_assert!((grad[i] - grad0[p[i]]).abs() <= 1e-13 * grad0[p[i]].abs().max(1.0));
                }
            }
        }

        #[test]
        fn degenerate_has_zero_area(b in 0.1f64..3.0, c in 0.1f64..3.0) {
            let g = heron_gamma(&Triangle::new(b + c, b, c));
            prop_assert!(g.abs() <= 1e-13 * (b + c).powi(4));
        }

        #[test]
        fn coords_round_trip(u1 in -2.0f64..2.0, w1 in 0.05f64..2.0, u2 in 0.05f64..3.0) {
            let t = coords_to_sides(u1, w1, u2);
            let (x, y, z) = sides_to_coords(&t).unwrap();
            prop_assert!((x - u1).abs() < 1e-9 && (y - w1).abs() < 1e-9 && (z - u2).abs() < 1e-12);
        }

        #[test]
        fn placement_satisfies_constraint(u1 in -2.0f64..2.0, w1 in 0.05f64..2.0, u2 in 0.05f64..3.0) {
            let t = coords_to_sides(u1, w1, u2);
            let area = heron_gamma(&t).max(0.0).sqrt();
            let (x, y, z) = sides_to_coords(&t).unwrap();
            prop_assert!(gamma_constraint(x, y, z, area).abs() < 1e-10);
        }
    }
}
