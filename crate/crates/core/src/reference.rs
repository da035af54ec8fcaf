//! Test signals, reference spectra, error metrics and the convergence study.

use std::time::Duration;

use crate::error::{Error, Result};
use crate::fastpoly::EvalGrid;
use crate::gamma::ln_gamma;
use crate::mat2::{Cx, ZERO};
use crate::par;
use crate::scattering::{run_conventional, run_scheme, Scheme, Signal};
use crate::schemes::Sigma;

/// Default half-width of the time window; `5.2·sech(30) ≈ 5e-13`.
pub const DEFAULT_HALF_WIDTH: f64 = 30.0;
pub const DEFAULT_AMPLITUDE: f64 = 5.2;
pub const DEFAULT_CHIRP: f64 = 4.0;

/// RMSE values at or below this are treated as roundoff-dominated.
pub const ROUNDOFF_FLOOR: f64 = 1e-12;

/// Oracle tolerance used when validating the analytic formulas.
pub const GATE_ORACLE_TOLERANCE: f64 = 1e-8;
/// Largest admissible analytic-vs-oracle deviation.
pub const GATE_TOLERANCE: f64 = 1e-6;

/// `q(t) = A·sech(t)^{1+iC}` on `[-L, L]` with `M` intervals.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChirpedSechSpec {
    pub amplitude: f64,
    pub chirp: f64,
    pub half_width: f64,
    pub m: usize,
}

impl ChirpedSechSpec {
    /// `A = 5.2`, `C = 4`, `L = 30`.
    pub fn standard(m: usize) -> Self {
        ChirpedSechSpec {
            amplitude: DEFAULT_AMPLITUDE,
            chirp: DEFAULT_CHIRP,
            half_width: DEFAULT_HALF_WIDTH,
            m,
        }
    }

    pub fn with_m(self, m: usize) -> Self {
        ChirpedSechSpec { m, ..self }
    }

    pub fn potential(&self) -> impl Fn(f64) -> Cx + Sync + Copy {
        let (a, c) = (self.amplitude, self.chirp);
        move |t| chirped_sech(a, c, t)
    }
}

/// `A·sech(t)·exp(iC·ln sech t)`.
pub fn chirped_sech(amplitude: f64, chirp: f64, t: f64) -> Cx {
    // ln cosh t without overflow for large |t|.
    let at = t.abs();
    let ln_cosh = at + (-2.0 * at).exp().ln_1p() - std::f64::consts::LN_2;
    let modulus = amplitude * (-ln_cosh).exp();
    Cx::from_polar(modulus, -chirp * ln_cosh)
}

pub fn chirped_sech_signal(spec: &ChirpedSechSpec, sigma: Sigma) -> Result<Signal> {
    if spec.amplitude.is_nan() || spec.amplitude <= 0.0 {
        return Err(Error::InvalidSignal(format!(
            "amplitude must be positive, got {}",
            spec.amplitude
        )));
    }
    Signal::sample(spec.potential(), spec.half_width, spec.m, sigma)
}

/// Closed-form `(a(ξ), b(ξ))` for the chirped sech potential on the whole
/// line.
///
/// With `d = 1/2 - i(ξ + C/2)`, `T = √(σA² - C²/4)`, `d± = -iC/2 ± T`:
///
/// ```text
/// a = Γ(d) Γ(d - d₊ - d₋) / (Γ(d - d₊) Γ(d - d₋))
/// b = 2^{-iC} Γ(d) Γ(1 - d + d₊ + d₋) / (A Γ(d₊) Γ(d₋))
/// ```
///
/// Use [`ValidatedSech`] unless the formula has been checked for the
/// parameters at hand.
pub fn analytic_spectrum_sech(amplitude: f64, chirp: f64, xi: f64, sigma: Sigma) -> (Cx, Cx) {
    let i = Cx::new(0.0, 1.0);
    let t = Cx::new(
        sigma.value() * amplitude * amplitude - chirp * chirp / 4.0,
        0.0,
    )
    .sqrt();
    let d = 0.5 - i * (xi + chirp / 2.0);
    let half_chirp = -i * (chirp / 2.0);
    let (dp, dm) = (half_chirp + t, half_chirp - t);
    let ln_a = ln_gamma(d) + ln_gamma(d - dp - dm) - ln_gamma(d - dp) - ln_gamma(d - dm);
    let ln_b = ln_gamma(d) + ln_gamma(1.0 - d + dp + dm) - ln_gamma(dp) - ln_gamma(dm);
    let prefactor = Cx::new(0.0, -chirp * std::f64::consts::LN_2).exp() / amplitude;
    (ln_a.exp(), prefactor * ln_b.exp())
}

/// Error normalisation `φ₀`: the exact value when its modulus exceeds one,
/// else one.
fn scale_of(exact: Cx) -> f64 {
    let m = exact.norm();
    if m > 1.0 {
        m
    } else {
        1.0
    }
}

/// `|comp - exact| / φ₀` with `φ₀ = exact` if `|exact| > 1`, else 1.
pub fn error_ec(ec_comp: f64, ec_exact: f64) -> f64 {
    let phi0 = if ec_exact.abs() > 1.0 { ec_exact } else { 1.0 };
    ((ec_comp - ec_exact) / phi0).abs()
}

/// Scaled root-mean-square error with the same `φ₀` case split per point.
pub fn rmse<T: Copy + Into<Cx>>(comp: &[T], exact: &[T]) -> Result<f64> {
    if comp.len() != exact.len() {
        return Err(Error::LengthMismatch {
            left: comp.len(),
            right: exact.len(),
        });
    }
    if comp.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let sum: f64 = comp
        .iter()
        .zip(exact)
        .map(|(&c, &e)| {
            let (c, e): (Cx, Cx) = (c.into(), e.into());
            ((c - e).norm() / scale_of(e)).powi(2)
        })
        .sum();
    Ok((sum / comp.len() as f64).sqrt())
}

/// Largest scaled pointwise deviation `|comp - exact| / φ₀`.
pub fn max_scaled_deviation(comp: &[Cx], exact: &[Cx]) -> f64 {
    comp.iter()
        .zip(exact)
        .map(|(c, e)| (c - e).norm() / scale_of(*e))
        .fold(0.0, f64::max)
}

/// Reference values of `a` and `b` on a grid.
#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSpectrum {
    pub xi: Vec<f64>,
    pub a: Vec<Cx>,
    pub b: Vec<Cx>,
}

impl ReferenceSpectrum {
    pub fn r(&self) -> Vec<Cx> {
        self.a.iter().zip(&self.b).map(|(a, b)| b / a).collect()
    }

    pub fn analytic_sech(amplitude: f64, chirp: f64, sigma: Sigma, grid: &EvalGrid) -> Self {
        let (a, b) = grid
            .xi()
            .iter()
            .map(|&x| analytic_spectrum_sech(amplitude, chirp, x, sigma))
            .unzip();
        ReferenceSpectrum {
            xi: grid.xi().to_vec(),
            a,
            b,
        }
    }
}

/// Richardson-extrapolated fourth-order reference.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleSpectrum {
    pub spectrum: ReferenceSpectrum,
    /// `max(|a_{2M} - a_M|, |b_{2M} - b_M|) / φ₀` per point.
    pub error_estimate: Vec<f64>,
    pub tolerance: f64,
    pub m: usize,
}

impl OracleSpectrum {
    pub fn max_error_estimate(&self) -> f64 {
        self.error_estimate.iter().copied().fold(0.0, f64::max)
    }

    pub fn converged(&self) -> bool {
        self.max_error_estimate() <= self.tolerance
    }

    pub fn require_converged(self) -> Result<Self> {
        if self.converged() {
            Ok(self)
        } else {
            Err(Error::OracleNotConverged {
                estimate: self.max_error_estimate(),
                tolerance: self.tolerance,
            })
        }
    }
}

/// TES4 at `M` and `2M` combined as `(16·v_{2M} - v_M)/15`.
///
/// Needs the potential itself rather than samples, since the finer run
/// resamples it. Check [`OracleSpectrum::converged`] before trusting it.
pub fn oracle_spectrum(
    potential: impl Fn(f64) -> Cx + Sync,
    half_width: f64,
    m: usize,
    sigma: Sigma,
    grid: &EvalGrid,
    tolerance: f64,
) -> Result<OracleSpectrum> {
    let coarse = Signal::sample(&potential, half_width, m, sigma)?;
    let fine = Signal::sample(&potential, half_width, 2 * m, sigma)?;
    let vc = run_conventional(&coarse, grid, Scheme::Tes4)?;
    let vf = run_conventional(&fine, grid, Scheme::Tes4)?;
    let extrapolate = |c: &[Cx], f: &[Cx]| -> Vec<Cx> {
        c.iter()
            .zip(f)
            .map(|(c, f)| (16.0 * f - c) / 15.0)
            .collect()
    };
    let a = extrapolate(&vc.a, &vf.a);
    let b = extrapolate(&vc.b, &vf.b);
    let error_estimate = (0..grid.len())
        .map(|j| {
            let ea = (vf.a[j] - vc.a[j]).norm() / scale_of(a[j]);
            let eb = (vf.b[j] - vc.b[j]).norm() / scale_of(b[j]);
            ea.max(eb)
        })
        .collect();
    Ok(OracleSpectrum {
        spectrum: ReferenceSpectrum {
            xi: grid.xi().to_vec(),
            a,
            b,
        },
        error_estimate,
        tolerance,
        m,
    })
}

/// Analytic chirped-sech spectrum that has passed the oracle gate.
#[derive(Clone, Debug, PartialEq)]
pub struct ValidatedSech {
    pub amplitude: f64,
    pub chirp: f64,
    pub sigma: Sigma,
    /// Largest scaled deviation from the oracle found during validation.
    pub deviation: f64,
}

impl ValidatedSech {
    /// Compares the closed form with an oracle at `GATE_ORACLE_TOLERANCE` on
    /// `grid`; fails if the oracle does not converge or the deviation exceeds
    /// `GATE_TOLERANCE`.
    pub fn validate(
        amplitude: f64,
        chirp: f64,
        sigma: Sigma,
        grid: &EvalGrid,
        half_width: f64,
        oracle_m: usize,
    ) -> Result<Self> {
        let oracle = oracle_spectrum(
            |t| chirped_sech(amplitude, chirp, t),
            half_width,
            oracle_m,
            sigma,
            grid,
            GATE_ORACLE_TOLERANCE,
        )?;
        Self::from_oracle(amplitude, chirp, sigma, &oracle)
    }

    /// Gate check against an existing oracle, which must have converged to
    /// `GATE_ORACLE_TOLERANCE` or better.
    pub fn from_oracle(
        amplitude: f64,
        chirp: f64,
        sigma: Sigma,
        oracle: &OracleSpectrum,
    ) -> Result<Self> {
        let estimate = oracle.max_error_estimate();
        if estimate.is_nan() || estimate > oracle.tolerance.min(GATE_ORACLE_TOLERANCE) {
            return Err(Error::OracleNotConverged {
                estimate,
                tolerance: oracle.tolerance.min(GATE_ORACLE_TOLERANCE),
            });
        }
        let reference = &oracle.spectrum;
        let mut worst = (0.0, reference.xi[0]);
        for (j, &xi) in reference.xi.iter().enumerate() {
            let (a, b) = analytic_spectrum_sech(amplitude, chirp, xi, sigma);
            let da = (a - reference.a[j]).norm() / scale_of(reference.a[j]);
            let db = (b - reference.b[j]).norm() / scale_of(reference.b[j]);
            let d = da.max(db);
            if d.is_nan() || d > worst.0 {
                worst = (d, xi);
            }
        }
        if worst.0.is_nan() || worst.0 > GATE_TOLERANCE {
            return Err(Error::AnalyticGateFailed {
                deviation: worst.0,
                xi: worst.1,
                limit: GATE_TOLERANCE,
            });
        }
        Ok(ValidatedSech {
            amplitude,
            chirp,
            sigma,
            deviation: worst.0,
        })
    }

    pub fn spectrum_at(&self, xi: f64) -> (Cx, Cx) {
        analytic_spectrum_sech(self.amplitude, self.chirp, xi, self.sigma)
    }

    pub fn spectrum(&self, grid: &EvalGrid) -> ReferenceSpectrum {
        ReferenceSpectrum::analytic_sech(self.amplitude, self.chirp, self.sigma, grid)
    }
}

/// One `(scheme, M)` cell of a convergence study.
#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceRow {
    pub m: usize,
    pub rmse_a: f64,
    pub rmse_b: f64,
    pub rmse_r: f64,
    pub max_h_err: f64,
    pub wall_time: Duration,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SchemeConvergence {
    pub scheme: Scheme,
    pub rows: Vec<ConvergenceRow>,
    /// Observed orders between successive rows; `None` when either RMSE is
    /// at the roundoff floor.
    pub slopes_a: Vec<Option<f64>>,
    pub slopes_b: Vec<Option<f64>>,
    /// Least-squares order over all pre-roundoff rows.
    pub fitted_a: Option<f64>,
    pub fitted_b: Option<f64>,
    pub fitted_r: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConvergenceReport {
    pub sigma: Sigma,
    pub n_xi: usize,
    pub schemes: Vec<SchemeConvergence>,
}

impl ConvergenceReport {
    pub fn scheme(&self, scheme: Scheme) -> Option<&SchemeConvergence> {
        self.schemes.iter().find(|s| s.scheme == scheme)
    }
}

fn successive_slopes(ms: &[usize], errs: &[f64]) -> Vec<Option<f64>> {
    ms.windows(2)
        .zip(errs.windows(2))
        .map(|(m, e)| {
            (e[0] > ROUNDOFF_FLOOR && e[1] > ROUNDOFF_FLOOR)
                .then(|| (e[0] / e[1]).log2() / (m[1] as f64 / m[0] as f64).log2())
        })
        .collect()
}

/// Slope of `-log₂ err` against `log₂ M` by least squares.
fn fitted_slope(ms: &[usize], errs: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = ms
        .iter()
        .zip(errs)
        .filter(|(_, e)| **e > ROUNDOFF_FLOOR && e.is_finite())
        .map(|(m, e)| ((*m as f64).log2(), -e.log2()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    Some(sxy / sxx)
}

/// Runs every scheme at every `M` against `reference` and reports RMSEs and
/// observed orders.
pub fn convergence_study(
    potential: impl Fn(f64) -> Cx + Sync,
    half_width: f64,
    sigma: Sigma,
    grid: &EvalGrid,
    reference: &ReferenceSpectrum,
    schemes: &[Scheme],
    m_list: &[usize],
) -> Result<ConvergenceReport> {
    if m_list.len() < 3 || m_list.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidGridSizes);
    }
    if reference.a.len() != grid.len() {
        return Err(Error::LengthMismatch {
            left: reference.a.len(),
            right: grid.len(),
        });
    }
    let exact_r = reference.r();
    let cells: Vec<(Scheme, usize)> = schemes
        .iter()
        .flat_map(|&s| m_list.iter().map(move |&m| (s, m)))
        .collect();
    let rows: Vec<Result<ConvergenceRow>> = par::map_slice(&cells, |&(scheme, m)| {
        let signal = Signal::sample(&potential, half_width, m, sigma)?;
        let res = run_scheme(&signal, grid, scheme)?;
        let comp_r: Vec<Cx> = res
            .r
            .iter()
            .map(|r| r.unwrap_or(Cx::new(f64::NAN, f64::NAN)))
            .collect();
        Ok(ConvergenceRow {
            m,
            rmse_a: rmse(&res.a, &reference.a)?,
            rmse_b: rmse(&res.b, &reference.b)?,
            rmse_r: rmse(&comp_r, &exact_r)?,
            max_h_err: res.max_h_err(),
            wall_time: res.elapsed,
        })
    });
    let mut rows = rows.into_iter().collect::<Result<Vec<_>>>()?.into_iter();
    let schemes = schemes
        .iter()
        .map(|&scheme| {
            let rows: Vec<ConvergenceRow> = rows.by_ref().take(m_list.len()).collect();
            let col = |f: fn(&ConvergenceRow) -> f64| rows.iter().map(f).collect::<Vec<_>>();
            let (ea, eb, er) = (col(|r| r.rmse_a), col(|r| r.rmse_b), col(|r| r.rmse_r));
            SchemeConvergence {
                scheme,
                slopes_a: successive_slopes(m_list, &ea),
                slopes_b: successive_slopes(m_list, &eb),
                fitted_a: fitted_slope(m_list, &ea),
                fitted_b: fitted_slope(m_list, &eb),
                fitted_r: fitted_slope(m_list, &er),
                rows,
            }
        })
        .collect();
    Ok(ConvergenceReport {
        sigma,
        n_xi: grid.len(),
        schemes,
    })
}

/// Zero potential, for exactness checks.
pub fn zero_potential(_t: f64) -> Cx {
    ZERO
}
