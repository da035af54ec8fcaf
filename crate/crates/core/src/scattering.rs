//! Signal → Jost coefficients `a(ξ)`, `b(ξ)`, reflection coefficient and
//! invariant error.
//!
//! Step `n` maps the state from `tₙ - τ/2` to `tₙ + τ/2`, so the discrete
//! solution runs over `[-L - τ/2, L + τ/2]`, a span of `τ(M+1)`. Starting from
//! `Ψ = (exp(-iζ t_start), 0)` the coefficients are
//! `a = ψ₁ exp(iζ t_end)` and `b = ψ₂ exp(-iζ t_end)`; since the interval is
//! symmetric this is `a = T₁₁ exp(iζτ(M+1))`, `b = T₂₁` for the total
//! transfer matrix `T`.

use std::fmt;
use std::str::FromStr;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::fastpoly::{evaluate_grid, tree_product, z_power, EvalGrid};
use crate::mat2::{exp_traceless, Cx, Mat2, ONE, ZERO};
use crate::par;
use crate::schemes::{
    central_derivatives, edge_matrices, split_b_factors, step_generator, step_polynomial,
    step_windows, Sigma, StepWindow,
};

/// Spectral points processed together so per-step data is reused from cache.
const BLOCK: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Boffetta-Osborne, second order.
    Bo,
    /// Triple-exponential fourth-order scheme.
    Tes4,
    /// Triple-exponential scheme with the split 11-factor middle exponential.
    Tes4sb,
    /// Fast polynomial-product realization of `Tes4sb`.
    Ftes4sb,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [Scheme::Bo, Scheme::Tes4, Scheme::Tes4sb, Scheme::Ftes4sb];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Bo => "bo",
            Scheme::Tes4 => "tes4",
            Scheme::Tes4sb => "tes4sb",
            Scheme::Ftes4sb => "ftes4sb",
        }
    }

    /// Nominal convergence order.
    pub fn order(self) -> u32 {
        match self {
            Scheme::Bo => 2,
            _ => 4,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| format!("unknown scheme {s:?} (expected bo, tes4, tes4sb or ftes4sb)"))
    }
}

/// Potential sampled at `tₙ = -L + τn`, `n = 0..=M`, `τ = 2L/M`.
#[derive(Clone, Debug, PartialEq)]
pub struct Signal {
    samples: Vec<Cx>,
    half_width: f64,
    sigma: Sigma,
}

impl Signal {
    pub fn new(samples: Vec<Cx>, half_width: f64, sigma: Sigma) -> Result<Self> {
        if samples.len() < 3 {
            return Err(Error::InvalidSignal(format!(
                "need at least 3 samples, got {}",
                samples.len()
            )));
        }
        if !(half_width > 0.0 && half_width.is_finite()) {
            return Err(Error::InvalidSignal(format!(
                "half-width must be positive, got {half_width}"
            )));
        }
        if samples.iter().any(|q| !q.is_finite()) {
            return Err(Error::InvalidSignal("non-finite sample".into()));
        }
        Ok(Signal {
            samples,
            half_width,
            sigma,
        })
    }

    /// Samples `potential` on the grid for `[-L, L]` with `M` intervals.
    pub fn sample(
        potential: impl Fn(f64) -> Cx,
        half_width: f64,
        m: usize,
        sigma: Sigma,
    ) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidSignal(format!("need M >= 2, got {m}")));
        }
        let tau = 2.0 * half_width / m as f64;
        let samples = (0..=m)
            .map(|n| potential(-half_width + tau * n as f64))
            .collect();
        Signal::new(samples, half_width, sigma)
    }

    pub fn zero(half_width: f64, m: usize, sigma: Sigma) -> Result<Self> {
        Signal::sample(|_| ZERO, half_width, m, sigma)
    }

    pub fn samples(&self) -> &[Cx] {
        &self.samples
    }

    pub fn half_width(&self) -> f64 {
        self.half_width
    }

    pub fn sigma(&self) -> Sigma {
        self.sigma
    }

    /// Number of grid intervals `M`.
    pub fn m(&self) -> usize {
        self.samples.len() - 1
    }

    pub fn tau(&self) -> f64 {
        2.0 * self.half_width / self.m() as f64
    }

    pub fn time(&self, n: usize) -> f64 {
        -self.half_width + self.tau() * n as f64
    }

    pub fn with_sigma(mut self, sigma: Sigma) -> Self {
        self.sigma = sigma;
        self
    }

    /// Shifts samples by `k` nodes towards later times, filling with zeros.
    pub fn shifted(&self, k: isize) -> Self {
        let n = self.samples.len() as isize;
        let samples = (0..n)
            .map(|i| {
                let src = i - k;
                if (0..n).contains(&src) {
                    self.samples[src as usize]
                } else {
                    ZERO
                }
            })
            .collect();
        Signal {
            samples,
            ..self.clone()
        }
    }
}

/// Per-point scattering data.
#[derive(Clone, Debug, PartialEq)]
pub struct ScatteringResult {
    pub scheme: Scheme,
    pub sigma: Sigma,
    pub m: usize,
    pub zeta: Vec<Cx>,
    pub a: Vec<Cx>,
    pub b: Vec<Cx>,
    /// `b/a`, or `None` where `a` vanishes.
    pub r: Vec<Option<Cx>>,
    pub h_err: Vec<f64>,
    pub elapsed: Duration,
}

impl ScatteringResult {
    fn assemble(
        scheme: Scheme,
        signal: &Signal,
        zeta: Vec<Cx>,
        ab: Vec<(Cx, Cx)>,
        elapsed: Duration,
    ) -> Self {
        let sigma = signal.sigma();
        let (a, b): (Vec<Cx>, Vec<Cx>) = ab.into_iter().unzip();
        let r = a
            .iter()
            .zip(&b)
            .map(|(a, b)| if *a == ZERO { None } else { Some(b / a) })
            .collect();
        let h_err = a
            .iter()
            .zip(&b)
            .map(|(a, b)| invariant_error(*a, *b, sigma))
            .collect();
        ScatteringResult {
            scheme,
            sigma,
            m: signal.m(),
            zeta,
            a,
            b,
            r,
            h_err,
            elapsed,
        }
    }

    pub fn len(&self) -> usize {
        self.zeta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.zeta.is_empty()
    }

    pub fn xi(&self) -> Vec<f64> {
        self.zeta.iter().map(|z| z.re).collect()
    }

    pub fn max_h_err(&self) -> f64 {
        self.h_err.iter().copied().fold(0.0, f64::max)
    }

    /// Points where the reflection coefficient is undefined.
    pub fn undefined_reflection(&self) -> Vec<usize> {
        self.r
            .iter()
            .enumerate()
            .filter_map(|(i, r)| r.is_none().then_some(i))
            .collect()
    }
}

/// `|1 - |a|² - σ|b|²|`.
pub fn invariant_error(a: Cx, b: Cx, sigma: Sigma) -> f64 {
    (1.0 - a.norm_sqr() - sigma.value() * b.norm_sqr()).abs()
}

/// `(a, b)` from the first column of the total transfer matrix.
#[inline]
fn extract(t11: Cx, t21: Cx, zeta: Cx, tau: f64, m: usize) -> (Cx, Cx) {
    let steps = (m + 1) as f64;
    (t11 * z_power(zeta, tau, -3.0 * steps), t21)
}

/// A stretch of steps: either `k` consecutive free steps (zero potential
/// with zero neighbours, so the step is exactly `exp(τA)`) or one ordinary
/// step's precomputed factors.
enum Segment<T> {
    Free(u64),
    Step(T),
}

fn segments<T>(
    windows: &[StepWindow],
    free: impl Fn(&StepWindow) -> bool,
    make: impl Fn(&StepWindow) -> T + Sync + Send,
) -> Vec<Segment<T>>
where
    T: Send,
{
    let mut out = Vec::new();
    let mut run = 0u64;
    let mut pending: Vec<&StepWindow> = Vec::new();
    let flush = |pending: &mut Vec<&StepWindow>, out: &mut Vec<Segment<T>>| {
        out.extend(
            par::map_slice(pending, |w| make(w))
                .into_iter()
                .map(Segment::Step),
        );
        pending.clear();
    };
    for w in windows {
        if free(w) {
            if !pending.is_empty() {
                flush(&mut pending, &mut out);
            }
            run += 1;
        } else {
            if run > 0 {
                out.push(Segment::Free(run));
                run = 0;
            }
            pending.push(w);
        }
    }
    flush(&mut pending, &mut out);
    if run > 0 {
        out.push(Segment::Free(run));
    }
    out
}

/// Precomputed ζ-independent factors of each step.
enum Prepared {
    Bo(Vec<Segment<Cx>>),
    Tes4(Vec<Segment<(Cx, Mat2, Mat2)>>),
    /// `(E₊, E₋, [G(7/48), G(3/8), G(-1/48)])`
    Tes4sb(Vec<Segment<(Mat2, Mat2, [Mat2; 3])>>),
}

impl Prepared {
    fn new(signal: &Signal, scheme: Scheme) -> Prepared {
        let tau = signal.tau();
        let sigma = signal.sigma();
        let windows = step_windows(signal.samples(), tau, sigma);
        let isolated_zero =
            |w: &StepWindow| w.q_prev == ZERO && w.q_curr == ZERO && w.q_next == ZERO;
        match scheme {
            Scheme::Bo => Prepared::Bo(segments(&windows, |w| w.q_curr == ZERO, |w| w.q_curr)),
            Scheme::Tes4 => Prepared::Tes4(segments(&windows, isolated_zero, |w| {
                let (p, m) = edge_matrices(&central_derivatives(w), tau, sigma);
                (w.q_curr, p, m)
            })),
            Scheme::Tes4sb | Scheme::Ftes4sb => {
                Prepared::Tes4sb(segments(&windows, isolated_zero, |w| {
                    let (p, m) = edge_matrices(&central_derivatives(w), tau, sigma);
                    (p, m, split_b_factors(w.q_curr, tau, sigma))
                }))
            }
        }
    }
}

#[inline]
fn diag_apply(v: (Cx, Cx), d1: Cx, d2: Cx) -> (Cx, Cx) {
    (v.0 * d1, v.1 * d2)
}

fn free_apply(state: &mut [(Cx, Cx)], zetas: &[Cx], tau: f64, k: u64) {
    let n = 3.0 * k as f64;
    for (v, &zeta) in state.iter_mut().zip(zetas) {
        *v = diag_apply(*v, z_power(zeta, tau, n), z_power(zeta, tau, -n));
    }
}

/// Runs a block of spectral points through all steps; returns `(T₁₁, T₂₁)`.
fn propagate_block(prep: &Prepared, zetas: &[Cx], tau: f64, sigma: Sigma) -> Vec<(Cx, Cx)> {
    let mut state = vec![(ONE, ZERO); zetas.len()];
    match prep {
        Prepared::Bo(segs) => {
            for seg in segs {
                match seg {
                    Segment::Free(k) => free_apply(&mut state, zetas, tau, *k),
                    Segment::Step(q) => {
                        for (v, &zeta) in state.iter_mut().zip(zetas) {
                            *v = exp_traceless(&step_generator(*q, sigma, zeta, tau)).apply(*v);
                        }
                    }
                }
            }
        }
        Prepared::Tes4(segs) => {
            for seg in segs {
                match seg {
                    Segment::Free(k) => free_apply(&mut state, zetas, tau, *k),
                    Segment::Step((q, e_plus, e_minus)) => {
                        for (v, &zeta) in state.iter_mut().zip(zetas) {
                            let mid = exp_traceless(&step_generator(*q, sigma, zeta, tau));
                            *v = e_plus.apply(mid.apply(e_minus.apply(*v)));
                        }
                    }
                }
            }
        }
        Prepared::Tes4sb(segs) => {
            let powers: Vec<(Cx, Cx, Cx, Cx)> = zetas
                .iter()
                .map(|&zeta| {
                    let z = (Cx::new(0.0, -tau / 3.0) * zeta).exp();
                    let zi = z.inv();
                    (z, zi, z * z * z, zi * zi * zi)
                })
                .collect();
            for seg in segs {
                match seg {
                    Segment::Free(k) => free_apply(&mut state, zetas, tau, *k),
                    Segment::Step((e_plus, e_minus, g)) => {
                        for (v, &(z, zi, z3, z3i)) in state.iter_mut().zip(&powers) {
                            let mut s = g[0].apply(e_minus.apply(*v));
                            s = g[1].apply(diag_apply(s, z, zi));
                            s = g[2].apply(diag_apply(s, zi, z));
                            s = g[2].apply(diag_apply(s, z3, z3i));
                            s = g[1].apply(diag_apply(s, zi, z));
                            s = g[0].apply(diag_apply(s, z, zi));
                            *v = e_plus.apply(s);
                        }
                    }
                }
            }
        }
    }
    state
}

/// Per-point propagation with a conventional scheme on a real grid.
///
/// `Ftes4sb` is accepted and computed the conventional way (identical to
/// `Tes4sb`); use [`run_fast`] for the fast algorithm.
pub fn run_conventional(
    signal: &Signal,
    grid: &EvalGrid,
    scheme: Scheme,
) -> Result<ScatteringResult> {
    let zetas: Vec<Cx> = grid.xi().iter().map(|&x| Cx::new(x, 0.0)).collect();
    run_conventional_at(signal, &zetas, scheme)
}

/// Like [`run_conventional`] but at arbitrary complex spectral points.
pub fn run_conventional_at(
    signal: &Signal,
    zetas: &[Cx],
    scheme: Scheme,
) -> Result<ScatteringResult> {
    if zetas.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let start = Instant::now();
    let tau = signal.tau();
    let sigma = signal.sigma();
    let m = signal.m();
    let prep = Prepared::new(signal, scheme);
    let blocks = par::map_chunks(zetas, BLOCK, |chunk| {
        propagate_block(&prep, chunk, tau, sigma)
            .into_iter()
            .zip(chunk)
            .map(|((t11, t21), &zeta)| extract(t11, t21, zeta, tau, m))
            .collect::<Vec<_>>()
    });
    let ab = blocks.into_iter().flatten().collect();
    Ok(ScatteringResult::assemble(
        scheme,
        signal,
        zetas.to_vec(),
        ab,
        start.elapsed(),
    ))
}

/// Fast variant of the split scheme: step polynomials, tree product, grid
/// evaluation.
pub fn run_fast(signal: &Signal, grid: &EvalGrid) -> Result<ScatteringResult> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let start = Instant::now();
    let tau = signal.tau();
    let m = signal.m();
    let windows = step_windows(signal.samples(), tau, signal.sigma());
    let steps = par::map_slice(&windows, step_polynomial);
    let total = tree_product(&steps)?;
    let values = evaluate_grid(&total, grid, tau);
    let ab = values
        .iter()
        .zip(grid.xi())
        .map(|(t, &xi)| extract(t.a11, t.a21, Cx::new(xi, 0.0), tau, m))
        .collect();
    let zetas = grid.xi().iter().map(|&x| Cx::new(x, 0.0)).collect();
    Ok(ScatteringResult::assemble(
        Scheme::Ftes4sb,
        signal,
        zetas,
        ab,
        start.elapsed(),
    ))
}

/// Dispatches to [`run_fast`] for `Ftes4sb`, [`run_conventional`] otherwise.
pub fn run_scheme(signal: &Signal, grid: &EvalGrid, scheme: Scheme) -> Result<ScatteringResult> {
    match scheme {
        Scheme::Ftes4sb => run_fast(signal, grid),
        _ => run_conventional(signal, grid, scheme),
    }
}

/// Continuous-spectrum energy `(σ/π)∫ln(1 + σ|r|²)dξ`, trapezoid rule over
/// the result's (increasing) real spectral points.
pub fn continuous_energy(res: &ScatteringResult) -> Result<f64> {
    let s = res.sigma.value();
    let mut integrand = Vec::with_capacity(res.len());
    for (r, z) in res.r.iter().zip(&res.zeta) {
        let r = r.ok_or(Error::UndefinedReflection { xi: z.re })?;
        let r2 = r.norm_sqr();
        if res.sigma == Sigma::Normal && r2 >= 1.0 {
            return Err(Error::NonPhysicalReflection { xi: z.re });
        }
        integrand.push((s * r2).ln_1p());
    }
    let xi = res.xi();
    let integral: f64 = xi
        .windows(2)
        .zip(integrand.windows(2))
        .map(|(x, f)| 0.5 * (x[1] - x[0]) * (f[0] + f[1]))
        .sum();
    Ok(s * integral / std::f64::consts::PI)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schemes::{bo_step, tes4_step, tes4sb_step};

    fn gaussian(t: f64) -> Cx {
        Cx::new(0.8, 0.3) * (-t * t / 2.0).exp()
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert_eq!("FTES4SB".parse::<Scheme>().unwrap(), Scheme::Ftes4sb);
        assert!("tes4sa".parse::<Scheme>().is_err());
    }

    #[test]
    fn signal_validation() {
        assert!(Signal::new(vec![ZERO; 2], 1.0, Sigma::Anomalous).is_err());
        assert!(Signal::new(vec![ZERO; 3], 0.0, Sigma::Anomalous).is_err());
        assert!(Signal::new(
            vec![ZERO, Cx::new(f64::NAN, 0.0), ZERO],
            1.0,
            Sigma::Anomalous
        )
        .is_err());
        let s = Signal::zero(5.0, 16, Sigma::Normal).unwrap();
        assert_eq!(s.m(), 16);
        assert_eq!(s.tau(), 10.0 / 16.0);
        assert_eq!(s.time(0), -5.0);
        assert_eq!(s.time(16), 5.0);
    }

    #[test]
    fn invariant_error_cases() {
        let th: f64 = 0.7;
        assert_eq!(invariant_error(ONE, ZERO, Sigma::Anomalous), 0.0);
        assert!(
            invariant_error(
                Cx::new(th.cos(), 0.0),
                Cx::new(th.sin(), 0.0),
                Sigma::Anomalous
            ) < 1e-16
        );
        assert!(
            invariant_error(
                Cx::new(th.cosh(), 0.0),
                Cx::new(th.sinh(), 0.0),
                Sigma::Normal
            ) < 1e-15
        );
    }

    /// The blocked conventional runner must equal the explicit product of
    /// per-step matrices.
    #[test]
    fn conventional_runner_matches_step_products() {
        for sigma in [Sigma::Anomalous, Sigma::Normal] {
            let signal = Signal::sample(gaussian, 6.0, 40, sigma).unwrap();
            let tau = signal.tau();
            let windows = step_windows(signal.samples(), tau, sigma);
            let zetas = [Cx::new(1.3, 0.0), Cx::new(-0.4, 0.25)];
            for scheme in [Scheme::Bo, Scheme::Tes4, Scheme::Tes4sb] {
                let res = run_conventional_at(&signal, &zetas, scheme).unwrap();
                for (j, &zeta) in zetas.iter().enumerate() {
                    let mut t = Mat2::IDENTITY;
                    for w in &windows {
                        let step = match scheme {
                            Scheme::Bo => bo_step(w.q_curr, sigma, zeta, tau),
                            Scheme::Tes4 => tes4_step(w, zeta),
                            _ => tes4sb_step(w, zeta),
                        };
                        t = step * t;
                    }
                    let t_start = -signal.half_width() - tau / 2.0;
                    let t_end = -t_start;
                    let psi = t.apply(((Cx::new(0.0, -t_start) * zeta).exp(), ZERO));
                    let a = psi.0 * (Cx::new(0.0, t_end) * zeta).exp();
                    let b = psi.1 * (Cx::new(0.0, -t_end) * zeta).exp();
                    assert!(
                        (res.a[j] - a).norm() < 1e-12 * a.norm().max(1.0),
                        "{scheme} a"
                    );
                    assert!(
                        (res.b[j] - b).norm() < 1e-12 * b.norm().max(1.0),
                        "{scheme} b"
                    );
                }
            }
        }
    }

    #[test]
    fn free_problem_all_schemes() {
        let signal = Signal::zero(5.0, 64, Sigma::Anomalous).unwrap();
        let grid = EvalGrid::uniform(-20.0, 20.0, 41).unwrap();
        for scheme in Scheme::ALL {
            let res = run_scheme(&signal, &grid, scheme).unwrap();
            for j in 0..res.len() {
                assert!((res.a[j] - ONE).norm() < 1e-13, "{scheme} a {}", res.a[j]);
                assert!(res.b[j].norm() < 1e-15, "{scheme} b {}", res.b[j]);
                assert!(res.h_err[j] < 1e-14, "{scheme} h {}", res.h_err[j]);
            }
            assert_eq!(continuous_energy(&res).unwrap(), 0.0);
        }
    }

    #[test]
    fn fast_matches_conventional_split_scheme() {
        for sigma in [Sigma::Anomalous, Sigma::Normal] {
            let signal = Signal::sample(gaussian, 8.0, 200, sigma).unwrap();
            let grid = EvalGrid::uniform(-10.0, 10.0, 77).unwrap();
            let conv = run_conventional(&signal, &grid, Scheme::Tes4sb).unwrap();
            let fast = run_fast(&signal, &grid).unwrap();
            assert_eq!(fast.scheme, Scheme::Ftes4sb);
            for j in 0..grid.len() {
                assert!((conv.a[j] - fast.a[j]).norm() < 1e-11 * conv.a[j].norm().max(1.0));
                assert!((conv.b[j] - fast.b[j]).norm() < 1e-11 * conv.b[j].norm().max(1.0));
            }
        }
    }

    #[test]
    fn undefined_reflection_is_flagged() {
        let signal = Signal::zero(1.0, 4, Sigma::Anomalous).unwrap();
        let mut res = run_conventional_at(&signal, &[ONE, Cx::new(2.0, 0.0)], Scheme::Bo).unwrap();
        res.a[1] = ZERO;
        let res = ScatteringResult::assemble(
            res.scheme,
            &signal,
            res.zeta.clone(),
            res.a.iter().copied().zip(res.b.iter().copied()).collect(),
            res.elapsed,
        );
        assert_eq!(res.undefined_reflection(), vec![1]);
        assert!(matches!(
            continuous_energy(&res),
            Err(Error::UndefinedReflection { .. })
        ));
    }

    #[test]
    fn energy_flags_nonphysical_normal_reflection() {
        let signal = Signal::zero(1.0, 4, Sigma::Normal).unwrap();
        let ab = vec![(ONE, ZERO), (ONE, Cx::new(1.5, 0.0))];
        let res =
            ScatteringResult::assemble(Scheme::Bo, &signal, vec![ZERO, ONE], ab, Duration::ZERO);
        assert!(matches!(
            continuous_energy(&res),
            Err(Error::NonPhysicalReflection { .. })
        ));
    }

    #[test]
    fn energy_trapezoid_on_known_integrand() {
        // |r|² = e^{-ξ²}·c chosen so ln(1 + |r|²) is integrated against a
        // fine trapezoid reference.
        let signal = Signal::zero(1.0, 4, Sigma::Anomalous).unwrap();
        let grid = EvalGrid::uniform(-8.0, 8.0, 4001).unwrap();
        let ab: Vec<(Cx, Cx)> = grid
            .xi()
            .iter()
            .map(|&x| {
                let r2: f64 = 0.5 * (-x * x).exp();
                let a = 1.0 / (1.0 + r2).sqrt();
                (Cx::new(a, 0.0), Cx::new(a * r2.sqrt(), 0.0))
            })
            .collect();
        let zetas = grid.xi().iter().map(|&x| Cx::new(x, 0.0)).collect();
        let res = ScatteringResult::assemble(Scheme::Bo, &signal, zetas, ab, Duration::ZERO);
        // ∫ln(1 + e^{-ξ²}/2) dξ = √π Σ_{k≥1} (-1)^{k+1} (1/2)^k / (k^{3/2})
        let series: f64 = (1..60)
            .map(|k| {
                let k = k as f64;
                (-1f64).powf(k + 1.0) * 0.5f64.powf(k) / k.powf(1.5)
            })
            .sum::<f64>()
            * std::f64::consts::PI.sqrt();
        let ec = continuous_energy(&res).unwrap();
        assert!((ec - series / std::f64::consts::PI).abs() < 1e-9, "{ec}");
    }
}
