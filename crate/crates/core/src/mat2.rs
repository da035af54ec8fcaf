//! Dense 2×2 complex matrices and closed-form exponentials of traceless ones.
//!
//! Every factor of every scheme in this crate is the exponential of a
//! traceless 2×2 matrix `m = [[d, x], [y, -d]]`. Such a matrix satisfies
//! `m² = k²·I` with `k² = d² + x·y`, so
//!
//! ```text
//! exp(m) = cosh(k)·I + (sinh(k)/k)·m
//! ```
//!
//! Both `cosh(k)` and `sinh(k)/k` are even in `k`, so the branch of the square
//! root never matters.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type Cx = Complex64;

pub(crate) const ZERO: Cx = Cx::new(0.0, 0.0);
pub(crate) const ONE: Cx = Cx::new(1.0, 0.0);

/// Below this `|k|` the ratio `sinh(k)/k` is taken from its Taylor series.
const SERIES_CUTOFF: f64 = 1e-4;

/// Row-major 2×2 complex matrix.
#[derive(Clone, Copy, PartialEq, Default)]
pub struct Mat2 {
    pub a11: Cx,
    pub a12: Cx,
    pub a21: Cx,
    pub a22: Cx,
}

impl Mat2 {
    pub const ZERO: Mat2 = Mat2::new(ZERO, ZERO, ZERO, ZERO);
    pub const IDENTITY: Mat2 = Mat2::new(ONE, ZERO, ZERO, ONE);

    pub const fn new(a11: Cx, a12: Cx, a21: Cx, a22: Cx) -> Self {
        Mat2 { a11, a12, a21, a22 }
    }

    pub const fn diag(d1: Cx, d2: Cx) -> Self {
        Mat2::new(d1, ZERO, ZERO, d2)
    }

    pub fn det(&self) -> Cx {
        self.a11 * self.a22 - self.a12 * self.a21
    }

    pub fn trace(&self) -> Cx {
        self.a11 + self.a22
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Mat2::new(
            self.a11.conj(),
            self.a21.conj(),
            self.a12.conj(),
            self.a22.conj(),
        )
    }

    pub fn scale(&self, s: Cx) -> Self {
        Mat2::new(self.a11 * s, self.a12 * s, self.a21 * s, self.a22 * s)
    }

    /// Matrix-vector product `self · (v1, v2)`.
    #[inline]
    pub fn apply(&self, v: (Cx, Cx)) -> (Cx, Cx) {
        (
            self.a11 * v.0 + self.a12 * v.1,
            self.a21 * v.0 + self.a22 * v.1,
        )
    }

    /// Largest entry modulus.
    pub fn max_abs(&self) -> f64 {
        self.entries().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn entries(&self) -> [Cx; 4] {
        [self.a11, self.a12, self.a21, self.a22]
    }

    pub fn from_entries(e: [Cx; 4]) -> Self {
        Mat2::new(e[0], e[1], e[2], e[3])
    }

    pub fn is_finite(&self) -> bool {
        self.entries().iter().all(|c| c.is_finite())
    }
}

/// Standard 2×2 complex product.
#[inline]
pub fn mat_mul(x: &Mat2, y: &Mat2) -> Mat2 {
    Mat2::new(
        x.a11 * y.a11 + x.a12 * y.a21,
        x.a11 * y.a12 + x.a12 * y.a22,
        x.a21 * y.a11 + x.a22 * y.a21,
        x.a21 * y.a12 + x.a22 * y.a22,
    )
}

impl Mul for Mat2 {
    type Output = Mat2;
    #[inline]
    fn mul(self, rhs: Mat2) -> Mat2 {
        mat_mul(&self, &rhs)
    }
}

impl Add for Mat2 {
    type Output = Mat2;
    fn add(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 + rhs.a11,
            self.a12 + rhs.a12,
            self.a21 + rhs.a21,
            self.a22 + rhs.a22,
        )
    }
}

impl Sub for Mat2 {
    type Output = Mat2;
    fn sub(self, rhs: Mat2) -> Mat2 {
        Mat2::new(
            self.a11 - rhs.a11,
            self.a12 - rhs.a12,
            self.a21 - rhs.a21,
            self.a22 - rhs.a22,
        )
    }
}

impl Neg for Mat2 {
    type Output = Mat2;
    fn neg(self) -> Mat2 {
        Mat2::new(-self.a11, -self.a12, -self.a21, -self.a22)
    }
}

impl fmt::Debug for Mat2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "[[{}, {}], [{}, {}]]",
            self.a11, self.a12, self.a21, self.a22
        )
    }
}

/// A traceless matrix `[[d, x], [y, -d]]`.
///
/// The constructor is the only way in, so `exp_traceless` never sees a matrix
/// with nonzero trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Traceless {
    d: Cx,
    x: Cx,
    y: Cx,
}

impl Traceless {
    /// Accepts `m` only if `m.a22 == -m.a11` exactly.
    pub fn new(m: Mat2) -> Result<Self> {
        if m.a22 != -m.a11 {
            return Err(Error::NotTraceless { trace: m.trace() });
        }
        Ok(Traceless {
            d: m.a11,
            x: m.a12,
            y: m.a21,
        })
    }

    pub const fn from_parts(d: Cx, x: Cx, y: Cx) -> Self {
        Traceless { d, x, y }
    }

    pub fn matrix(&self) -> Mat2 {
        Mat2::new(self.d, self.x, self.y, -self.d)
    }

    /// `k² = d² + x·y`, the eigenvalue square of the matrix.
    pub fn k_squared(&self) -> Cx {
        self.d * self.d + self.x * self.y
    }
}

impl Neg for Traceless {
    type Output = Traceless;
    fn neg(self) -> Traceless {
        Traceless::from_parts(-self.d, -self.x, -self.y)
    }
}

/// `sinh(k)/k` with the removable singularity at zero filled in.
#[inline]
fn sinhc(k: Cx) -> Cx {
    if k.norm() < SERIES_CUTOFF {
        let k2 = k * k;
        ONE + k2 / 6.0 + k2 * k2 / 120.0
    } else {
        k.sinh() / k
    }
}

/// `(cosh k, sinh(k)/k)` from `k²`; uses real arithmetic when `k²` is real.
///
/// For real spectral parameters every generator in this crate has a real
/// `k²`, which makes this the hot path.
#[inline]
fn cosh_sinhc(k2: Cx) -> (Cx, Cx) {
    if k2.im == 0.0 {
        let s = k2.re;
        let r = s.abs().sqrt();
        if r < SERIES_CUTOFF {
            let c = 1.0 + s / 2.0 + s * s / 24.0;
            let sc = 1.0 + s / 6.0 + s * s / 120.0;
            (Cx::new(c, 0.0), Cx::new(sc, 0.0))
        } else if s > 0.0 {
            (Cx::new(r.cosh(), 0.0), Cx::new(r.sinh() / r, 0.0))
        } else {
            (Cx::new(r.cos(), 0.0), Cx::new(r.sin() / r, 0.0))
        }
    } else {
        let k = k2.sqrt();
        (k.cosh(), sinhc(k))
    }
}

#[inline]
fn exp_with(m: &Traceless, c: Cx, sc: Cx) -> Mat2 {
    Mat2::new(c + sc * m.d, sc * m.x, sc * m.y, c - sc * m.d)
}

/// Closed-form exponential of a traceless matrix.
pub fn exp_traceless(m: &Traceless) -> Mat2 {
    let (c, sc) = cosh_sinhc(m.k_squared());
    exp_with(m, c, sc)
}

/// Exponential evaluated through an explicit choice of `k` (either root of
/// `k²`). Exposed for branch-consistency checks.
pub fn exp_traceless_with_root(m: &Traceless, k: Cx) -> Mat2 {
    exp_with(m, k.cosh(), sinhc(k))
}

/// `exp([[0, x], [y, 0]])`.
#[inline]
pub fn exp_offdiag(x: Cx, y: Cx) -> Mat2 {
    exp_traceless(&Traceless::from_parts(ZERO, x, y))
}
