//! 2×2 complex matrices and the free evolution operator.
//!
//! Every operator in the two-level picture (Hamiltonian, evolution operators,
//! transfer matrices, correction matrices) is a [`Mat2`].

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use num_complex::Complex64 as C64;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

/// Column vector with two complex components.
pub type Vec2 = [C64; 2];

/// Row-major 2×2 complex matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub m11: C64,
    pub m12: C64,
    pub m21: C64,
    pub m22: C64,
}

impl Mat2 {
    pub const fn new(m11: C64, m12: C64, m21: C64, m22: C64) -> Self {
        Self { m11, m12, m21, m22 }
    }

    pub const fn identity() -> Self {
        Self::new(ONE, ZERO, ZERO, ONE)
    }

    pub const fn zero() -> Self {
        Self::new(ZERO, ZERO, ZERO, ZERO)
    }

    pub const fn diag(a: C64, b: C64) -> Self {
        Self::new(a, ZERO, ZERO, b)
    }

    pub const fn sigma1() -> Self {
        Self::new(ZERO, ONE, ONE, ZERO)
    }

    pub const fn sigma2() -> Self {
        Self::new(ZERO, C64::new(0.0, -1.0), I, ZERO)
    }

    pub const fn sigma3() -> Self {
        Self::new(ONE, ZERO, ZERO, C64::new(-1.0, 0.0))
    }

    /// `iσ₂ + σ₃`, the coupling matrix of the two-level Hamiltonian.
    pub const fn coupling() -> Self {
        Self::new(ONE, ONE, C64::new(-1.0, 0.0), C64::new(-1.0, 0.0))
    }

    /// Outer product `|a⟩⟨b|` where the bra is the conjugate transpose of `b`.
    pub fn outer(a: Vec2, b: Vec2) -> Self {
        Self::new(a[0] * b[0].conj(), a[0] * b[1].conj(), a[1] * b[0].conj(), a[1] * b[1].conj())
    }

    pub fn from_array(a: [[C64; 2]; 2]) -> Self {
        Self::new(a[0][0], a[0][1], a[1][0], a[1][1])
    }

    pub fn to_array(&self) -> [[C64; 2]; 2] {
        [[self.m11, self.m12], [self.m21, self.m22]]
    }

    pub fn entries(&self) -> [C64; 4] {
        [self.m11, self.m12, self.m21, self.m22]
    }

    pub fn det(&self) -> C64 {
        self.m11 * self.m22 - self.m12 * self.m21
    }

    pub fn trace(&self) -> C64 {
        self.m11 + self.m22
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::new(self.m11.conj(), self.m21.conj(), self.m12.conj(), self.m22.conj())
    }

    pub fn transpose(&self) -> Self {
        Self::new(self.m11, self.m21, self.m12, self.m22)
    }

    /// Inverse via the adjugate. Returns `None` for a singular matrix.
    pub fn inverse(&self) -> Option<Self> {
        let d = self.det();
        if d == ZERO || !d.is_finite() {
            return None;
        }
        let inv = d.inv();
        Some(Self::new(self.m22 * inv, -self.m12 * inv, -self.m21 * inv, self.m11 * inv))
    }

    pub fn scale(&self, s: C64) -> Self {
        Self::new(self.m11 * s, self.m12 * s, self.m21 * s, self.m22 * s)
    }

    pub fn apply(&self, v: Vec2) -> Vec2 {
        [self.m11 * v[0] + self.m12 * v[1], self.m21 * v[0] + self.m22 * v[1]]
    }

    /// Largest entry modulus. This is the norm used for all error reporting.
    pub fn norm_max(&self) -> f64 {
        self.entries().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|z| z.is_finite())
    }

    pub fn commutator(&self, other: &Self) -> Self {
        *self * *other - *other * *self
    }

    /// `exp(A)` for a traceless `A`, using `A² = −det(A)·I`.
    ///
    /// The result has unit determinant up to rounding.
    pub fn exp_traceless(&self) -> Self {
        let s2 = -self.det();
        let s = s2.sqrt();
        let (c, sinc) = if s.norm() < 1e-4 {
            // Taylor series of cosh(s) and sinh(s)/s in s².
            let c = ONE + s2 / 2.0 + s2 * s2 / 24.0 + s2 * s2 * s2 / 720.0;
            let sinc = ONE + s2 / 6.0 + s2 * s2 / 120.0 + s2 * s2 * s2 / 5040.0;
            (c, sinc)
        } else {
            (s.cosh(), s.sinh() / s)
        };
        Self::new(c + sinc * self.m11, sinc * self.m12, sinc * self.m21, c + sinc * self.m22)
    }
}

impl Default for Mat2 {
    fn default() -> Self {
        Self::zero()
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, b: Mat2) -> Mat2 {
        Mat2::new(
            self.m11 * b.m11 + self.m12 * b.m21,
            self.m11 * b.m12 + self.m12 * b.m22,
            self.m21 * b.m11 + self.m22 * b.m21,
            self.m21 * b.m12 + self.m22 * b.m22,
        )
    }
}

impl Mul<C64> for Mat2 {
    type Output = Mat2;

    fn mul(self, s: C64) -> Mat2 {
        self.scale(s)
    }
}

impl Mul<f64> for Mat2 {
    type Output = Mat2;

    fn mul(self, s: f64) -> Mat2 {
        self.scale(C64::new(s, 0.0))
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, b: Mat2) -> Mat2 {
        Mat2::new(self.m11 + b.m11, self.m12 + b.m12, self.m21 + b.m21, self.m22 + b.m22)
    }
}

impl AddAssign for Mat2 {
    fn add_assign(&mut self, b: Mat2) {
        *self = *self + b;
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, b: Mat2) -> Mat2 {
        Mat2::new(self.m11 - b.m11, self.m12 - b.m12, self.m21 - b.m21, self.m22 - b.m22)
    }
}

impl Neg for Mat2 {
    type Output = Mat2;

    fn neg(self) -> Mat2 {
        self.scale(C64::new(-1.0, 0.0))
    }
}

/// Matrix product `a·b`.
pub fn mat2_mul(a: Mat2, b: Mat2) -> Mat2 {
    a * b
}

/// Free evolution operator `exp(iτσ₃) = diag(e^{iτ}, e^{−iτ})`.
pub fn u0(tau: f64) -> Mat2 {
    let e = C64::from_polar(1.0, tau);
    Mat2::diag(e, e.conj())
}

/// `u0(τ)⁻¹ = u0(−τ)`.
pub fn u0_inv(tau: f64) -> Mat2 {
    u0(-tau)
}
