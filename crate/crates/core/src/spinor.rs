//! Two-component spinor values and the constant Dirac matrices.

use num_complex::Complex64 as C64;
use std::ops::{Add, Mul, Sub};

pub const I: C64 = C64::new(0.0, 1.0);
pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);

/// Complex 2x2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const fn new(a: C64, b: C64, c: C64, d: C64) -> Self {
        Mat2([[a, b], [c, d]])
    }

    pub fn real(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self::new(a.into(), b.into(), c.into(), d.into())
    }

    pub fn identity() -> Self {
        Self::real(1.0, 0.0, 0.0, 1.0)
    }

    pub fn zero() -> Self {
        Self::default()
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = self.0;
        Self::new(m[0][0] * s, m[0][1] * s, m[1][0] * s, m[1][1] * s)
    }

    pub fn scale_re(&self, s: f64) -> Self {
        self.scale(C64::new(s, 0.0))
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn apply(&self, s: SpinorValue) -> SpinorValue {
        let m = self.0;
        SpinorValue {
            u: m[0][0] * s.u + m[0][1] * s.v,
            v: m[1][0] * s.u + m[1][1] * s.v,
        }
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest singular value.
    pub fn operator_norm(&self) -> f64 {
        let [[a, b], [c, d]] = self.0;
        let f = a.norm_sqr() + b.norm_sqr() + c.norm_sqr() + d.norm_sqr();
        let det = (a * d - b * c).norm();
        (0.5 * (f + (f * f - 4.0 * det * det).max(0.0).sqrt())).sqrt()
    }

    pub fn column(&self, j: usize) -> SpinorValue {
        SpinorValue {
            u: self.0[0][j],
            v: self.0[1][j],
        }
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2::new(
            a[0][0] + b[0][0],
            a[0][1] + b[0][1],
            a[1][0] + b[1][0],
            a[1][1] + b[1][1],
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, o: Mat2) -> Mat2 {
        self + o.scale_re(-1.0)
    }
}

impl Mul for Mat2 {
    type Output = Mat2;
    fn mul(self, o: Mat2) -> Mat2 {
        let (a, b) = (self.0, o.0);
        Mat2::new(
            a[0][0] * b[0][0] + a[0][1] * b[1][0],
            a[0][0] * b[0][1] + a[0][1] * b[1][1],
            a[1][0] * b[0][0] + a[1][1] * b[1][0],
            a[1][0] * b[0][1] + a[1][1] * b[1][1],
        )
    }
}

/// `Gamma^1 = diag(-1, 1)`: asymptotic velocity, `-1` on the in channel.
pub fn gamma1() -> Mat2 {
    Mat2::real(-1.0, 0.0, 0.0, 1.0)
}

/// `Gamma^2 = [[0, -1], [-1, 0]]`.
pub fn gamma2() -> Mat2 {
    Mat2::real(0.0, -1.0, -1.0, 0.0)
}

/// Projection onto the out (second) component.
pub fn proj_out() -> Mat2 {
    Mat2::real(0.0, 0.0, 0.0, 1.0)
}

/// Projection onto the in (first) component.
pub fn proj_in() -> Mat2 {
    Mat2::real(1.0, 0.0, 0.0, 0.0)
}

/// `u` is the in (left-moving) component, `v` the out (right-moving) one.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SpinorValue {
    pub u: C64,
    pub v: C64,
}

impl SpinorValue {
    pub fn new(u: C64, v: C64) -> Self {
        Self { u, v }
    }

    pub fn norm_sqr(&self) -> f64 {
        self.u.norm_sqr() + self.v.norm_sqr()
    }

    pub fn scale(&self, s: C64) -> Self {
        Self {
            u: self.u * s,
            v: self.v * s,
        }
    }

    /// `<self, other>`, conjugate-linear in `self`.
    pub fn dot(&self, other: &SpinorValue) -> C64 {
        self.u.conj() * other.u + self.v.conj() * other.v
    }
}

impl Add for SpinorValue {
    type Output = SpinorValue;
    fn add(self, o: SpinorValue) -> SpinorValue {
        SpinorValue {
            u: self.u + o.u,
            v: self.v + o.v,
        }
    }
}

impl Sub for SpinorValue {
    type Output = SpinorValue;
    fn sub(self, o: SpinorValue) -> SpinorValue {
        SpinorValue {
            u: self.u - o.u,
            v: self.v - o.v,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clifford_relations() {
        let (g1, g2) = (gamma1(), gamma2());
        assert_eq!(g1 * g2 + g2 * g1, Mat2::zero());
        assert_eq!(g1 * g1, Mat2::identity());
        assert_eq!(g2 * g2, Mat2::identity());
        assert_eq!(g1.trace(), ZERO);
        assert_eq!(g2.trace(), ZERO);
        // Gamma^1 Gamma^2 P_out = -P_in Gamma^2
        assert_eq!(g1 * g2 * proj_out(), (proj_in() * g2).scale_re(-1.0));
    }

    #[test]
    fn operator_norm_of_diagonal() {
        let m = Mat2::real(3.0, 0.0, 0.0, -5.0);
        assert!((m.operator_norm() - 5.0).abs() < 1e-14);
        let r = Mat2::real(0.0, 2.0, 0.0, 0.0);
        assert!((r.operator_norm() - 2.0).abs() < 1e-14);
    }
}
