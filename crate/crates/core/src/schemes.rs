//! Per-step transfer matrices.
//!
//! The potential matrix is `Q = A + B` with `A = diag(-iζ, iζ)` and
//! `B = [[0, q], [-σq*, 0]]`. A step centred on node `tₙ` maps the state from
//! `tₙ - τ/2` to `tₙ + τ/2`:
//!
//! * `bo_step`: `exp(τQₙ)`, second order.
//! * `tes4_step`: `E₊ · exp(τQₙ) · E₋`, where the edge factors are built from
//!   central-difference derivatives of `q`; fourth order.
//! * `tes4sb_step`: the same edges around an 11-factor fourth-order splitting
//!   of `exp(τ(A+B))`, 13 exponentials in total.
//!
//! All A-factors of the splitting are powers of `Z = exp(-iτζ/3)`; pulling out
//! `Z⁻⁷` leaves a polynomial of degree at most 7 in `W = Z²` whose matrix
//! coefficients do not depend on ζ. `step_polynomial` builds it.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::mat2::{exp_offdiag, exp_traceless, Cx, Mat2, Traceless, ONE, ZERO};

/// Dispersion sign σ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sigma {
    /// σ = +1, focusing.
    Anomalous,
    /// σ = -1, defocusing.
    Normal,
}

impl Sigma {
    pub fn value(self) -> f64 {
        match self {
            Sigma::Anomalous => 1.0,
            Sigma::Normal => -1.0,
        }
    }

    pub fn from_value(v: i32) -> Option<Self> {
        match v {
            1 => Some(Sigma::Anomalous),
            -1 => Some(Sigma::Normal),
            _ => None,
        }
    }

    /// The weight matrix `D = diag(1, σ)` of the quadratic invariant.
    pub fn metric(self) -> Mat2 {
        Mat2::diag(ONE, Cx::new(self.value(), 0.0))
    }
}

impl fmt::Display for Sigma {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Sigma::Anomalous => "+1",
            Sigma::Normal => "-1",
        })
    }
}

impl FromStr for Sigma {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "+1" | "1" => Ok(Sigma::Anomalous),
            "-1" => Ok(Sigma::Normal),
            other => Err(format!("sigma must be +1 or -1, got {other:?}")),
        }
    }
}

/// Potential samples around one node plus grid step and σ.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepWindow {
    pub q_prev: Cx,
    pub q_curr: Cx,
    pub q_next: Cx,
    pub tau: f64,
    pub sigma: Sigma,
}

impl StepWindow {
    pub fn new(q_prev: Cx, q_curr: Cx, q_next: Cx, tau: f64, sigma: Sigma) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "grid step must be positive, got {tau}"
            )));
        }
        Ok(StepWindow {
            q_prev,
            q_curr,
            q_next,
            tau,
            sigma,
        })
    }

    pub fn constant(q: Cx, tau: f64, sigma: Sigma) -> Result<Self> {
        StepWindow::new(q, q, q, tau, sigma)
    }
}

/// All step windows for samples `q₀ … q_M`; neighbours outside the grid are 0.
pub fn step_windows(samples: &[Cx], tau: f64, sigma: Sigma) -> Vec<StepWindow> {
    let n = samples.len();
    (0..n)
        .map(|i| StepWindow {
            q_prev: if i == 0 { ZERO } else { samples[i - 1] },
            q_curr: samples[i],
            q_next: if i + 1 == n { ZERO } else { samples[i + 1] },
            tau,
            sigma,
        })
        .collect()
}

/// Central-difference estimates of `q'` and `q''` at the window centre.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DerivPair {
    pub q1: Cx,
    pub q2: Cx,
}

pub fn central_derivatives(w: &StepWindow) -> DerivPair {
    let tau = w.tau;
    DerivPair {
        q1: (w.q_next - w.q_prev) / (2.0 * tau),
        q2: (w.q_next - 2.0 * w.q_curr + w.q_prev) / (tau * tau),
    }
}

/// `exp` of the off-diagonal generator with upper-right `x` and lower-left
/// `-σx*`.
#[inline]
fn exp_potential(x: Cx, sigma: Sigma) -> Mat2 {
    exp_offdiag(x, -x.conj() * sigma.value())
}

/// The ζ-independent edge factors `(E₊, E₋)`.
///
/// `E± = exp(±(τ²/12)Q' + (τ³/48)Q'')`; only `B` depends on `t`, so both are
/// off-diagonal exponentials.
pub fn edge_matrices(d: &DerivPair, tau: f64, sigma: Sigma) -> (Mat2, Mat2) {
    let first = d.q1 * (tau * tau / 12.0);
    let second = d.q2 * (tau * tau * tau / 48.0);
    (
        exp_potential(first + second, sigma),
        exp_potential(-first + second, sigma),
    )
}

/// `τQ` as a traceless matrix.
#[inline]
pub(crate) fn step_generator(q: Cx, sigma: Sigma, zeta: Cx, tau: f64) -> Traceless {
    let x = q * tau;
    Traceless::from_parts(Cx::new(0.0, -tau) * zeta, x, -x.conj() * sigma.value())
}

/// One Boffetta-Osborne step `exp(τQ)` with the potential frozen at `q`.
pub fn bo_step(q: Cx, sigma: Sigma, zeta: Cx, tau: f64) -> Mat2 {
    exp_traceless(&step_generator(q, sigma, zeta, tau))
}

pub fn tes4_step(w: &StepWindow, zeta: Cx) -> Mat2 {
    let (e_plus, e_minus) = edge_matrices(&central_derivatives(w), w.tau, w.sigma);
    e_plus * bo_step(w.q_curr, w.sigma, zeta, w.tau) * e_minus
}

/// B-weights of the 11-factor splitting, outermost first. The factor sequence
/// is symmetric so only three distinct B-exponentials occur.
pub const SPLIT_B_WEIGHTS: [f64; 3] = [7.0 / 48.0, 3.0 / 8.0, -1.0 / 48.0];

/// A-weights between consecutive B-factors, left to right.
pub const SPLIT_A_WEIGHTS: [f64; 5] = [1.0 / 3.0, -1.0 / 3.0, 1.0, -1.0 / 3.0, 1.0 / 3.0];

/// Powers of `W` contributed by each A-factor after pulling out `Z⁻⁷`:
/// `(power on the (1,1) entry, power on the (2,2) entry)`.
const SPLIT_A_MONOMIALS: [(usize, usize); 5] = [(1, 0), (0, 1), (3, 0), (0, 1), (1, 0)];

/// Power of `Z` divided out of every step polynomial.
pub const STEP_DENOM_Z_EXP: u64 = 7;

/// Maximum degree in `W` of a step polynomial.
pub const STEP_DEGREE: usize = 7;

/// The three distinct B-exponentials `exp(wτBₙ)` for the split weights.
pub fn split_b_factors(q: Cx, tau: f64, sigma: Sigma) -> [Mat2; 3] {
    SPLIT_B_WEIGHTS.map(|wt| exp_potential(q * (wt * tau), sigma))
}

/// The B-factor sequence G₁ … G₆ as indices into `split_b_factors`.
const SPLIT_B_ORDER: [usize; 6] = [0, 1, 2, 2, 1, 0];

pub fn tes4sb_step(w: &StepWindow, zeta: Cx) -> Mat2 {
    let (e_plus, e_minus) = edge_matrices(&central_derivatives(w), w.tau, w.sigma);
    let g = split_b_factors(w.q_curr, w.tau, w.sigma);
    let mut t = e_plus * g[SPLIT_B_ORDER[0]];
    for (i, &wa) in SPLIT_A_WEIGHTS.iter().enumerate() {
        let phase = Cx::new(0.0, -wa * w.tau) * zeta;
        t = t * Mat2::diag(phase.exp(), (-phase).exp()) * g[SPLIT_B_ORDER[i + 1]];
    }
    t * e_minus
}

/// Degree-≤7 matrix polynomial `Ŝₙ(W)` with `Tₙ = Ŝₙ(Z²)·Z⁻⁷`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepPoly {
    pub coeffs: [Mat2; STEP_DEGREE + 1],
    pub denom_z_exp: u64,
}

/// Right-multiplies `p` by `diag(W^s1, W^s2)`: shifts column 1 by `s1` and
/// column 2 by `s2`.
fn shift_columns(p: &mut [Mat2; STEP_DEGREE + 1], s1: usize, s2: usize) {
    for k in (0..=STEP_DEGREE).rev() {
        let (c1, c3) = if k >= s1 {
            (p[k - s1].a11, p[k - s1].a21)
        } else {
            (ZERO, ZERO)
        };
        let (c2, c4) = if k >= s2 {
            (p[k - s2].a12, p[k - s2].a22)
        } else {
            (ZERO, ZERO)
        };
        p[k] = Mat2::new(c1, c2, c3, c4);
    }
}

pub fn step_polynomial(w: &StepWindow) -> StepPoly {
    let (e_plus, e_minus) = edge_matrices(&central_derivatives(w), w.tau, w.sigma);
    let g = split_b_factors(w.q_curr, w.tau, w.sigma);
    let mut coeffs = [Mat2::ZERO; STEP_DEGREE + 1];
    coeffs[0] = e_plus * g[SPLIT_B_ORDER[0]];
    for (i, &(s1, s2)) in SPLIT_A_MONOMIALS.iter().enumerate() {
        shift_columns(&mut coeffs, s1, s2);
        let right = g[SPLIT_B_ORDER[i + 1]];
        for c in coeffs.iter_mut() {
            *c = *c * right;
        }
    }
    for c in coeffs.iter_mut() {
        *c = *c * e_minus;
    }
    StepPoly {
        coeffs,
        denom_z_exp: STEP_DENOM_Z_EXP,
    }
}
