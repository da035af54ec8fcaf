//! Forward nonlinear Fourier transform for the Zakharov-Shabat problem
//!
//! ```text
//! dΨ/dt = [[-iζ, q], [-σq*, iζ]] Ψ
//! ```
//!
//! on a uniform grid. Provides the second-order Boffetta-Osborne baseline,
//! a fourth-order triple-exponential scheme, its 13-exponential split form,
//! and a fast variant of the split form that multiplies per-step matrix
//! polynomials with FFTs and evaluates the product on the whole spectral grid
//! at once. The conventional schemes conserve `|ψ₁|² + σ|ψ₂|²` to roundoff
//! for real spectral parameters.

pub mod error;
pub mod fastpoly;
pub mod gamma;
pub mod mat2;
pub mod par;
pub mod phase;
pub mod reference;
pub mod scattering;
pub mod schemes;
pub mod timing;

pub use error::{Error, Result};
pub use fastpoly::{evaluate_grid, evaluate_horner, matpoly_mul, tree_product, EvalGrid, MatPoly};
pub use mat2::{exp_offdiag, exp_traceless, mat_mul, Cx, Mat2, Traceless};
pub use scattering::{
    continuous_energy, invariant_error, run_conventional, run_conventional_at, run_fast,
    run_scheme, ScatteringResult, Scheme, Signal,
};
pub use schemes::{
    bo_step, central_derivatives, edge_matrices, step_polynomial, tes4_step, tes4sb_step,
    DerivPair, Sigma, StepPoly, StepWindow,
};
