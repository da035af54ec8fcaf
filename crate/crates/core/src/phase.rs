//! Unit-modulus phase factors `exp(i·θ·n)` for large integer multipliers.
//!
//! The fast path raises `W = exp(-2iτξ/3)` to powers in the hundreds of
//! thousands. Forming `θ·n` in plain floating point loses ~`ulp(θ·n)`; here the
//! product is split exactly with an FMA and reduced against a two-word 2π.

use crate::mat2::Cx;

const TWO_PI_HI: f64 = std::f64::consts::TAU;
const TWO_PI_LO: f64 = 2.449_293_598_294_706_4e-16;

/// `θ·n` reduced to roughly `[-π, π]`, accurate to a few ulps of π.
///
/// `n` must be an integer-valued float below 2⁵³.
pub fn reduced_angle(theta: f64, n: f64) -> f64 {
    let p = theta * n;
    let e = theta.mul_add(n, -p);
    let j = (p / TWO_PI_HI).round();
    let r = (-j).mul_add(TWO_PI_HI, p);
    r - j * TWO_PI_LO + e
}

/// `exp(i·θ·n)`.
pub fn cis_multiple(theta: f64, n: f64) -> Cx {
    Cx::cis(reduced_angle(theta, n))
}
