//! File formats and subcommand bodies for the `zsnft` binary.

use std::io::{BufRead, Write};

use anyhow::{bail, ensure, Context, Result};
use serde::Serialize;
use zsnft::reference::{
    convergence_study, oracle_spectrum, ConvergenceReport, ReferenceSpectrum, ValidatedSech,
};
use zsnft::timing::time_median;
use zsnft::{continuous_energy, run_scheme, Cx, EvalGrid, ScatteringResult, Scheme, Sigma, Signal};

pub const SIGNAL_HEADER: &str = "t,q_re,q_im";
pub const SPECTRUM_HEADER: &str = "xi,a_re,a_im,b_re,b_im,r_re,r_im,h_err";
pub const CONVERGENCE_HEADER: &str = "scheme,M,rmse_a,rmse_b,rmse_r,max_h_err,wall_time_s";
pub const BENCH_HEADER: &str = "scheme,M,n_xi,median_s,repeats";
pub const INVARIANT_HEADER: &str = "scheme,max_h_err,rmse_h_err";
pub const FORMAT_VERSION: u32 = 1;

/// 17 significant digits, enough to round-trip any f64.
fn num(x: f64) -> String {
    format!("{x:.16e}")
}

/// Synthetic potentials.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Source {
    ChirpedSech { amplitude: f64, chirp: f64 },
    Zero,
}

impl Source {
    pub fn potential(self) -> impl Fn(f64) -> Cx + Sync + Copy {
        move |t| match self {
            Source::ChirpedSech { amplitude, chirp } => {
                zsnft::reference::chirped_sech(amplitude, chirp, t)
            }
            Source::Zero => Cx::new(0.0, 0.0),
        }
    }

    fn validate(self) -> Result<()> {
        if let Source::ChirpedSech { amplitude, chirp } = self {
            ensure!(
                amplitude > 0.0 && amplitude.is_finite(),
                "--A must be positive, got {amplitude}"
            );
            ensure!(chirp.is_finite(), "--C must be finite");
        }
        Ok(())
    }

    pub fn signal(self, half_width: f64, m: usize, sigma: Sigma) -> Result<Signal> {
        self.validate()?;
        Ok(Signal::sample(self.potential(), half_width, m, sigma)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GridConfig {
    pub xi_min: f64,
    pub xi_max: f64,
    pub n_xi: usize,
}

impl GridConfig {
    pub fn grid(&self) -> Result<EvalGrid> {
        ensure!(self.xi_min < self.xi_max, "--xi-min must be below --xi-max");
        ensure!(self.n_xi >= 1, "--n-xi must be at least 1");
        Ok(EvalGrid::uniform(self.xi_min, self.xi_max, self.n_xi)?)
    }
}

pub fn write_signal_csv(mut w: impl Write, signal: &Signal) -> Result<()> {
    writeln!(w, "{SIGNAL_HEADER}")?;
    for (n, q) in signal.samples().iter().enumerate() {
        writeln!(w, "{},{},{}", num(signal.time(n)), num(q.re), num(q.im))?;
    }
    Ok(())
}

/// Reads a signal file. The grid must be the uniform symmetric one the
/// writer produces: `t₀ = -L`, `t_M = L`.
pub fn read_signal_csv(r: impl BufRead, sigma: Sigma) -> Result<Signal> {
    let mut lines = r.lines();
    let header = lines.next().context("empty signal file")??;
    ensure!(
        header.trim() == SIGNAL_HEADER,
        "bad signal header {header:?}, expected {SIGNAL_HEADER:?}"
    );
    let mut times = Vec::new();
    let mut samples = Vec::new();
    for (i, line) in lines.enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        ensure!(fields.len() == 3, "line {}: expected 3 fields", i + 2);
        let parse = |s: &str| -> Result<f64> {
            s.trim()
                .parse::<f64>()
                .with_context(|| format!("line {}: bad number {s:?}", i + 2))
        };
        times.push(parse(fields[0])?);
        samples.push(Cx::new(parse(fields[1])?, parse(fields[2])?));
    }
    ensure!(samples.len() >= 3, "signal needs at least 3 samples");
    let half_width = -times[0];
    let signal = Signal::new(samples, half_width, sigma)?;
    for (n, &t) in times.iter().enumerate() {
        let want = signal.time(n);
        ensure!(
            (t - want).abs() <= 1e-9 * half_width,
            "non-uniform or asymmetric time grid at row {}: t = {t}, expected {want}",
            n + 2
        );
    }
    Ok(signal)
}

pub fn write_spectrum_csv(mut w: impl Write, res: &ScatteringResult) -> Result<()> {
    writeln!(w, "{SPECTRUM_HEADER}")?;
    for j in 0..res.len() {
        let r = res.r[j].unwrap_or(Cx::new(f64::NAN, f64::NAN));
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            num(res.zeta[j].re),
            num(res.a[j].re),
            num(res.a[j].im),
            num(res.b[j].re),
            num(res.b[j].im),
            num(r.re),
            num(r.im),
            num(res.h_err[j])
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Flags {
    /// Spectral points where `a = 0`, so `r` is undefined.
    pub undefined_reflection: usize,
    /// Reason the continuous energy could not be formed, if any.
    pub energy_error: Option<String>,
}

impl Flags {
    pub fn raised(&self) -> bool {
        self.undefined_reflection > 0 || self.energy_error.is_some()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub format_version: u32,
    pub scheme: String,
    pub sigma: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n_xi: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    pub xi_min: f64,
    pub xi_max: f64,
    pub e_c: Option<f64>,
    pub max_h_err: f64,
    pub wall_time_s: f64,
    pub parallel: bool,
    pub threads: usize,
    pub flags: Flags,
}

pub fn summarize(res: &ScatteringResult, signal: &Signal, grid: &GridConfig) -> Summary {
    let (e_c, energy_error) = match continuous_energy(res) {
        Ok(e) => (Some(e), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Summary {
        format_version: FORMAT_VERSION,
        scheme: res.scheme.name().to_string(),
        sigma: res.sigma.to_string(),
        m: res.m,
        n_xi: res.len(),
        half_width: signal.half_width(),
        xi_min: grid.xi_min,
        xi_max: grid.xi_max,
        e_c,
        max_h_err: res.max_h_err(),
        wall_time_s: res.elapsed.as_secs_f64(),
        parallel: zsnft::par::is_parallel(),
        threads: worker_threads(),
        flags: Flags {
            undefined_reflection: res.undefined_reflection().len(),
            energy_error,
        },
    }
}

pub fn compute(
    signal: &Signal,
    scheme: Scheme,
    grid: &GridConfig,
) -> Result<(ScatteringResult, Summary)> {
    let res = run_scheme(signal, &grid.grid()?, scheme)?;
    let summary = summarize(&res, signal, grid);
    Ok((res, summary))
}

/// Where the convergence study takes its reference spectrum from.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ReferenceKind {
    /// Richardson-extrapolated TES4 at `m` and `2m`, required to converge to
    /// `tolerance`.
    Oracle { m: usize, tolerance: f64 },
    /// Closed form for the chirped sech, validated against an oracle at `m`.
    Analytic { m: usize },
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyConfig {
    pub source: Source,
    pub half_width: f64,
    pub sigma: Sigma,
    pub grid: GridConfig,
    pub schemes: Vec<Scheme>,
    pub m_list: Vec<usize>,
}

impl StudyConfig {
    fn validate(&self) -> Result<EvalGrid> {
        self.source.validate()?;
        ensure!(self.half_width > 0.0, "--L must be positive");
        ensure!(!self.schemes.is_empty(), "no schemes selected");
        ensure!(
            self.m_list.iter().all(|&m| m >= 2),
            "every M must be at least 2"
        );
        self.grid.grid()
    }
}

pub fn reference_spectrum(cfg: &StudyConfig, kind: ReferenceKind) -> Result<ReferenceSpectrum> {
    let grid = cfg.validate()?;
    match (cfg.source, kind) {
        (Source::Zero, _) => Ok(ReferenceSpectrum {
            xi: grid.xi().to_vec(),
            a: vec![Cx::new(1.0, 0.0); grid.len()],
            b: vec![Cx::new(0.0, 0.0); grid.len()],
        }),
        (_, ReferenceKind::Oracle { m, tolerance }) => {
            let o = oracle_spectrum(
                cfg.source.potential(),
                cfg.half_width,
                m,
                cfg.sigma,
                &grid,
                tolerance,
            )?;
            Ok(o.require_converged()?.spectrum)
        }
        (Source::ChirpedSech { amplitude, chirp }, ReferenceKind::Analytic { m }) => {
            let v = ValidatedSech::validate(amplitude, chirp, cfg.sigma, &grid, cfg.half_width, m)?;
            Ok(v.spectrum(&grid))
        }
    }
}

pub fn convergence(cfg: &StudyConfig, reference: &ReferenceSpectrum) -> Result<ConvergenceReport> {
    let grid = cfg.validate()?;
    Ok(convergence_study(
        cfg.source.potential(),
        cfg.half_width,
        cfg.sigma,
        &grid,
        reference,
        &cfg.schemes,
        &cfg.m_list,
    )?)
}

pub fn write_convergence_csv(mut w: impl Write, report: &ConvergenceReport) -> Result<()> {
    writeln!(w, "{CONVERGENCE_HEADER}")?;
    for s in &report.schemes {
        for r in &s.rows {
            writeln!(
                w,
                "{},{},{},{},{},{},{}",
                s.scheme,
                r.m,
                num(r.rmse_a),
                num(r.rmse_b),
                num(r.rmse_r),
                num(r.max_h_err),
                num(r.wall_time.as_secs_f64())
            )?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct SchemeJson {
    scheme: String,
    #[serde(rename = "M")]
    m: Vec<usize>,
    rmse_a: Vec<f64>,
    rmse_b: Vec<f64>,
    rmse_r: Vec<f64>,
    max_h_err: Vec<f64>,
    wall_time_s: Vec<f64>,
    slopes_a: Vec<Option<f64>>,
    slopes_b: Vec<Option<f64>>,
    fitted_slope_a: Option<f64>,
    fitted_slope_b: Option<f64>,
    fitted_slope_r: Option<f64>,
}

#[derive(Serialize)]
struct ReportJson {
    format_version: u32,
    sigma: String,
    #[serde(rename = "N")]
    n_xi: usize,
    schemes: Vec<SchemeJson>,
}

/// JSON with NaN mapped to null, as JSON has no NaN.
pub fn convergence_json(report: &ConvergenceReport) -> Result<String> {
    let schemes = report
        .schemes
        .iter()
        .map(|s| {
            let col =
                |f: fn(&zsnft::reference::ConvergenceRow) -> f64| s.rows.iter().map(f).collect();
            SchemeJson {
                scheme: s.scheme.to_string(),
                m: s.rows.iter().map(|r| r.m).collect(),
                rmse_a: col(|r| r.rmse_a),
                rmse_b: col(|r| r.rmse_b),
                rmse_r: col(|r| r.rmse_r),
                max_h_err: col(|r| r.max_h_err),
                wall_time_s: col(|r| r.wall_time.as_secs_f64()),
                slopes_a: s.slopes_a.clone(),
                slopes_b: s.slopes_b.clone(),
                fitted_slope_a: s.fitted_a,
                fitted_slope_b: s.fitted_b,
                fitted_slope_r: s.fitted_r,
            }
        })
        .collect();
    let json = ReportJson {
        format_version: FORMAT_VERSION,
        sigma: report.sigma.to_string(),
        n_xi: report.n_xi,
        schemes,
    };
    Ok(serde_json::to_string_pretty(&json)?)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub scheme: String,
    #[serde(rename = "M")]
    pub m: usize,
    #[serde(rename = "N")]
    pub n_xi: usize,
    pub median_s: f64,
    pub repeats: usize,
}

/// Median wall time of the compute call for every `(scheme, M)`; signal
/// synthesis and I/O are outside the timed region.
pub fn bench(cfg: &StudyConfig, repeats: usize) -> Result<Vec<BenchRow>> {
    ensure!(repeats >= 3, "--repeats must be at least 3 for a median");
    let grid = cfg.validate()?;
    let mut rows = Vec::new();
    for &scheme in &cfg.schemes {
        for &m in &cfg.m_list {
            let signal = cfg.source.signal(cfg.half_width, m, cfg.sigma)?;
            let (t, res) = time_median(repeats, || run_scheme(&signal, &grid, scheme));
            res?;
            rows.push(BenchRow {
                scheme: scheme.to_string(),
                m,
                n_xi: grid.len(),
                median_s: t.as_secs_f64(),
                repeats,
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv(mut w: impl Write, rows: &[BenchRow]) -> Result<()> {
    writeln!(w, "{BENCH_HEADER}")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.scheme,
            r.m,
            r.n_xi,
            num(r.median_s),
            r.repeats
        )?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InvariantRow {
    pub scheme: String,
    pub max_h_err: f64,
    /// RMSE of `H` against the exact value 1.
    pub rmse_h_err: f64,
}

pub fn invariant(
    signal: &Signal,
    schemes: &[Scheme],
    grid: &GridConfig,
) -> Result<Vec<InvariantRow>> {
    let grid = grid.grid()?;
    schemes
        .iter()
        .map(|&scheme| {
            let res = run_scheme(signal, &grid, scheme)?;
            let zeros = vec![0.0; res.len()];
            Ok(InvariantRow {
                scheme: scheme.to_string(),
                max_h_err: res.max_h_err(),
                rmse_h_err: zsnft::reference::rmse(&res.h_err, &zeros)?,
            })
        })
        .collect()
}

pub fn write_invariant_csv(mut w: impl Write, rows: &[InvariantRow]) -> Result<()> {
    writeln!(w, "{INVARIANT_HEADER}")?;
    for r in rows {
        writeln!(w, "{},{},{}", r.scheme, num(r.max_h_err), num(r.rmse_h_err))?;
    }
    Ok(())
}

/// Sizes the global worker pool. A no-op without the `parallel` feature.
pub fn configure_threads(threads: Option<usize>) -> Result<()> {
    #[cfg(feature = "parallel")]
    if let Some(n) = threads {
        if n == 0 {
            bail!("--threads must be at least 1");
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .context("worker pool already initialised")?;
    }
    #[cfg(not(feature = "parallel"))]
    if threads == Some(0) {
        bail!("--threads must be at least 1");
    }
    Ok(())
}

pub fn worker_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}

/// Parses `1024,2048,4096` or `2^10..2^14` (powers of two, inclusive).
pub fn parse_m_list(s: &str) -> Result<Vec<usize>> {
    if let Some((lo, hi)) = s.split_once("..") {
        let exp = |p: &str| -> Result<u32> {
            let p = p.trim();
            let e = p
                .strip_prefix("2^")
                .with_context(|| format!("range bounds must look like 2^k, got {p:?}"))?;
            Ok(e.parse()?)
        };
        let (lo, hi) = (exp(lo)?, exp(hi)?);
        ensure!(lo <= hi && hi < 40, "bad power range");
        return Ok((lo..=hi).map(|k| 1usize << k).collect());
    }
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<usize>()
                .with_context(|| format!("bad M {p:?}"))
        })
        .collect()
}
