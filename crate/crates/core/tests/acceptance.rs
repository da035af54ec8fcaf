//! Acceptance suite. Runs sequentially (no libtest harness) so the timing
//! criterion is not disturbed by concurrent tests, prints one PASS/FAIL line
//! per criterion and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use zsnft::fastpoly::{evaluate_grid, evaluate_horner, tree_product, EvalGrid, MatPoly};
use zsnft::reference::{
    chirped_sech, chirped_sech_signal, convergence_study, error_ec, oracle_spectrum, rmse,
    ChirpedSechSpec, ConvergenceReport, OracleSpectrum, ValidatedSech, DEFAULT_HALF_WIDTH,
};
use zsnft::schemes::step_windows;
use zsnft::timing::time_median;
use zsnft::{
    bo_step, run_conventional, run_fast, run_scheme, step_polynomial, tes4_step, tes4sb_step, Cx,
    Mat2, ScatteringResult, Scheme, Sigma, Signal, StepWindow,
};

const N_XI: usize = 1025;
const M_LIST: [usize; 5] = [1 << 10, 1 << 11, 1 << 12, 1 << 13, 1 << 14];
const ORACLE_M: usize = 1 << 16;
const ORACLE_TOL: f64 = 1e-10;

const SLOPE_4: (f64, f64) = (3.5, 4.5);
const SLOPE_2: (f64, f64) = (1.7, 2.3);
const H_CONVENTIONAL: f64 = 1e-10;
const H_FAST: f64 = 1e-7;
const H_RATIO: f64 = 1e3;
const EQUIVALENCE: f64 = 1e-8;
const FREE_H: f64 = 1e-14;
const COLLAPSE: f64 = 1e-13;
const DET_STEP: f64 = 1e-13;
const DET_TREE: f64 = 1e-9;
const UNITARITY_STEP: f64 = 1e-12;
const FAST_GROWTH: f64 = 12.0;
const CONV_GROWTH: f64 = 6.0;
const TIMING_RUNS: usize = 5;
const REFLECTIONLESS: f64 = 1e-6;

struct Check {
    pass: bool,
    lines: Vec<String>,
}

impl Check {
    fn new() -> Self {
        Check {
            pass: true,
            lines: Vec::new(),
        }
    }

    fn require(&mut self, ok: bool, line: String) {
        if !ok {
            self.pass = false;
        }
        self.lines
            .push(format!("    [{}] {line}", if ok { "ok" } else { "FAIL" }));
    }
}

fn report(id: &str, title: &str, check: Check, results: &mut Vec<(String, bool)>) {
    for l in &check.lines {
        println!("{l}");
    }
    let tag = if check.pass { "PASS" } else { "FAIL" };
    println!("{tag} criterion {id}: {title}");
    results.push((id.to_string(), check.pass));
}

fn xi_grid() -> EvalGrid {
    EvalGrid::uniform(-20.0, 20.0, N_XI).unwrap()
}

fn standard_signal(m: usize, sigma: Sigma) -> Signal {
    chirped_sech_signal(&ChirpedSechSpec::standard(m), sigma).unwrap()
}

fn scaled(x: Cx, y: Cx) -> f64 {
    (x - y).norm() / y.norm().max(1.0)
}

fn max_dev(a: &ScatteringResult, b: &ScatteringResult) -> f64 {
    (0..a.len())
        .map(|j| scaled(a.a[j], b.a[j]).max(scaled(a.b[j], b.b[j])))
        .fold(0.0, f64::max)
}

fn in_range(x: Option<f64>, (lo, hi): (f64, f64)) -> bool {
    x.is_some_and(|x| x >= lo && x <= hi)
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map_or("undefined".into(), |x| format!("{x:.3}"))
}

struct Studies {
    oracles: Vec<(Sigma, OracleSpectrum)>,
    reports: Vec<ConvergenceReport>,
}

fn studies() -> Studies {
    let grid = xi_grid();
    let spec = ChirpedSechSpec::standard(0);
    let mut oracles = Vec::new();
    let mut reports = Vec::new();
    for sigma in [Sigma::Anomalous, Sigma::Normal] {
        let t = Instant::now();
        let oracle = oracle_spectrum(
            spec.potential(),
            spec.half_width,
            ORACLE_M,
            sigma,
            &grid,
            ORACLE_TOL,
        )
        .unwrap();
        println!(
            "    oracle sigma={sigma}: M={ORACLE_M}/{} estimate {:.2e} ({:.1?})",
            2 * ORACLE_M,
            oracle.max_error_estimate(),
            t.elapsed()
        );
        let report = convergence_study(
            spec.potential(),
            spec.half_width,
            sigma,
            &grid,
            &oracle.spectrum,
            &Scheme::ALL,
            &M_LIST,
        )
        .unwrap();
        oracles.push((sigma, oracle));
        reports.push(report);
    }
    Studies { oracles, reports }
}

fn gate(st: &Studies) -> Check {
    let mut c = Check::new();
    for (sigma, oracle) in &st.oracles {
        match ValidatedSech::from_oracle(5.2, 4.0, *sigma, oracle) {
            Ok(v) => c.require(
                true,
                format!(
                    "sigma={sigma}: analytic vs oracle {:.2e} <= 1e-6",
                    v.deviation
                ),
            ),
            Err(e) => c.require(false, format!("sigma={sigma}: {e}")),
        }
    }
    c
}

fn c1(st: &Studies) -> Check {
    let mut c = Check::new();
    for (sigma, o) in &st.oracles {
        c.require(
            o.converged(),
            format!(
                "sigma={sigma}: oracle estimate {:.2e} <= {ORACLE_TOL:e}",
                o.max_error_estimate()
            ),
        );
    }
    for rep in &st.reports {
        for s in &rep.schemes {
            let range = if s.scheme == Scheme::Bo {
                SLOPE_2
            } else {
                SLOPE_4
            };
            let rm: Vec<String> = s.rows.iter().map(|r| format!("{:.2e}", r.rmse_a)).collect();
            c.require(
                in_range(s.fitted_a, range) && in_range(s.fitted_b, range),
                format!(
                    "sigma={} {:>7}: slope a {} b {} in [{}, {}]; RMSE[a] {}",
                    rep.sigma,
                    s.scheme,
                    fmt_opt(s.fitted_a),
                    fmt_opt(s.fitted_b),
                    range.0,
                    range.1,
                    rm.join(" ")
                ),
            );
        }
    }
    c
}

fn c2(st: &Studies) -> Check {
    let mut c = Check::new();
    let rep = st
        .reports
        .iter()
        .find(|r| r.sigma == Sigma::Anomalous)
        .unwrap();
    for s in &rep.schemes {
        let limit = if s.scheme == Scheme::Ftes4sb {
            H_FAST
        } else {
            H_CONVENTIONAL
        };
        let worst = s.rows.iter().map(|r| r.max_h_err).fold(0.0, f64::max);
        c.require(
            worst <= limit,
            format!("{:>7}: max h_err {worst:.2e} <= {limit:e}", s.scheme),
        );
    }
    c
}

fn c3() -> Check {
    let mut c = Check::new();
    let grid = xi_grid();
    let s = standard_signal(1 << 12, Sigma::Normal);
    let fast = run_fast(&s, &grid).unwrap().max_h_err();
    let conv = run_conventional(&s, &grid, Scheme::Tes4sb)
        .unwrap()
        .max_h_err();
    let ratio = fast / conv;
    c.require(
        ratio <= H_RATIO,
        format!("ftes4sb {fast:.2e} / tes4sb {conv:.2e} = {ratio:.2e} <= {H_RATIO:e}"),
    );
    c
}

fn random_smooth(rng: &mut ChaCha8Rng) -> impl Fn(f64) -> Cx + Copy {
    let mut bumps = [(0.0, 1.0, Cx::new(0.0, 0.0)); 3];
    for b in &mut bumps {
        *b = (
            rng.random_range(-8.0..8.0),
            rng.random_range(0.7..2.5),
            Cx::from_polar(
                rng.random_range(0.3..2.0),
                rng.random_range(0.0..std::f64::consts::TAU),
            ),
        );
    }
    move |t: f64| {
        bumps
            .iter()
            .map(|&(c, w, amp)| amp * (-0.5 * ((t - c) / w).powi(2)).exp())
            .sum()
    }
}

type Potential = Box<dyn Fn(f64) -> Cx>;

fn c4() -> Check {
    let mut c = Check::new();
    let grid = xi_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_2025);
    let mut signals: Vec<(String, Potential, f64)> = vec![(
        "chirped sech".into(),
        Box::new(ChirpedSechSpec::standard(0).potential()),
        DEFAULT_HALF_WIDTH,
    )];
    for k in 0..5 {
        signals.push((
            format!("random #{k}"),
            Box::new(random_smooth(&mut rng)),
            20.0,
        ));
    }
    for (name, pot, half_width) in &signals {
        for sigma in [Sigma::Anomalous, Sigma::Normal] {
            for m in [1024, 4096] {
                let s = Signal::sample(pot, *half_width, m, sigma).unwrap();
                let fast = run_fast(&s, &grid).unwrap();
                let conv = run_conventional(&s, &grid, Scheme::Tes4sb).unwrap();
                let d = max_dev(&fast, &conv);
                c.require(
                    d <= EQUIVALENCE,
                    format!("{name} sigma={sigma} M={m}: {d:.2e} <= {EQUIVALENCE:e}"),
                );
            }
        }
    }
    c
}

fn c5() -> Check {
    let mut c = Check::new();
    let grid = xi_grid();
    for sigma in [Sigma::Anomalous, Sigma::Normal] {
        for m in [16, 4096] {
            let s = Signal::zero(DEFAULT_HALF_WIDTH, m, sigma).unwrap();
            for scheme in Scheme::ALL {
                let r = run_scheme(&s, &grid, scheme).unwrap();
                let da = r.a.iter().map(|a| (a - 1.0).norm()).fold(0.0, f64::max);
                let db = r.b.iter().map(|b| b.norm()).fold(0.0, f64::max);
                let h = r.max_h_err();
                c.require(
                    da <= FREE_H && db == 0.0 && h <= FREE_H,
                    format!("q=0 sigma={sigma} M={m} {scheme:>7}: |a-1| {da:.1e}, |b| {db:.1e}, h_err {h:.1e}"),
                );
            }
        }
    }
    // B = 0: a zero window makes every B-factor and edge factor the identity,
    // so the split step must equal exp(τA). A = 0 (ζ = 0): the split of
    // exp(τB) is exact, so it must equal the triple-exponential step.
    let mut worst_b0: f64 = 0.0;
    let mut worst_a0: f64 = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..200 {
        let tau = rng.random_range(0.01..0.5);
        let sigma = if rng.random_bool(0.5) {
            Sigma::Anomalous
        } else {
            Sigma::Normal
        };
        let zeta = Cx::new(rng.random_range(-20.0..20.0), rng.random_range(-0.5..0.5));
        let free = StepWindow::constant(Cx::new(0.0, 0.0), tau, sigma).unwrap();
        let phase = Cx::new(0.0, -tau) * zeta;
        let want = Mat2::diag(phase.exp(), (-phase).exp());
        worst_b0 = worst_b0.max((tes4sb_step(&free, zeta) - want).max_abs());
        let mut q = || Cx::new(rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0));
        let w = StepWindow::new(q(), q(), q(), tau, sigma).unwrap();
        let zero = Cx::new(0.0, 0.0);
        worst_a0 = worst_a0.max((tes4sb_step(&w, zero) - tes4_step(&w, zero)).max_abs());
    }
    c.require(
        worst_b0 <= COLLAPSE,
        format!("B=0 collapse: {worst_b0:.1e} <= {COLLAPSE:e}"),
    );
    c.require(
        worst_a0 <= COLLAPSE,
        format!("A=0 collapse: {worst_a0:.1e} <= {COLLAPSE:e}"),
    );
    c
}

fn d_unitarity(t: &Mat2, sigma: Sigma) -> f64 {
    let d = sigma.metric();
    (t.adjoint() * d * *t - d).max_abs()
}

fn c6() -> Check {
    let mut c = Check::new();
    let xis: Vec<f64> = (0..41).map(|j| -20.0 + j as f64).collect();
    for sigma in [Sigma::Anomalous, Sigma::Normal] {
        let s = standard_signal(1 << 12, sigma);
        let windows = step_windows(s.samples(), s.tau(), sigma);
        let mut det: [f64; 4] = [0.0; 4];
        let mut unit: [f64; 4] = [0.0; 4];
        for w in windows.iter().step_by(16) {
            let poly = MatPoly::from(step_polynomial(w));
            for &xi in &xis {
                let zeta = Cx::new(xi, 0.0);
                let steps = [
                    bo_step(w.q_curr, sigma, zeta, w.tau),
                    tes4_step(w, zeta),
                    tes4sb_step(w, zeta),
                    evaluate_horner(&poly, zeta, w.tau),
                ];
                for (k, t) in steps.iter().enumerate() {
                    det[k] = det[k].max((t.det() - 1.0).norm());
                    unit[k] = unit[k].max(d_unitarity(t, sigma));
                }
            }
        }
        for (k, name) in ["bo", "tes4", "tes4sb", "step polynomial"]
            .iter()
            .enumerate()
        {
            c.require(
                det[k] <= DET_STEP && unit[k] <= UNITARITY_STEP,
                format!(
                    "sigma={sigma} {name:>15} per step: |det-1| {:.1e} <= {DET_STEP:e}, D-unitarity {:.1e} <= {UNITARITY_STEP:e}",
                    det[k], unit[k]
                ),
            );
        }
    }
    // Total transfer matrices of the fast path. For the standard pulse at
    // sigma=-1 the entries reach ~1e5, so det is a difference of ~1e10-sized
    // products and its rounding floor alone is ~1e-6; that case is reported
    // relative to |T11 T22| + |T12 T21| and does not gate.
    let moderate = ChirpedSechSpec {
        amplitude: 1.5,
        chirp: 1.0,
        ..ChirpedSechSpec::standard(1 << 12)
    };
    let cases = [
        (
            "A=5.2 C=4",
            ChirpedSechSpec::standard(1 << 12),
            Sigma::Anomalous,
            true,
        ),
        ("A=1.5 C=1", moderate, Sigma::Anomalous, true),
        ("A=1.5 C=1", moderate, Sigma::Normal, true),
        (
            "A=5.2 C=4",
            ChirpedSechSpec::standard(1 << 12),
            Sigma::Normal,
            false,
        ),
    ];
    for (label, spec, sigma, gating) in cases {
        let s = chirped_sech_signal(&spec, sigma).unwrap();
        let windows = step_windows(s.samples(), s.tau(), sigma);
        let polys: Vec<_> = windows.iter().map(step_polynomial).collect();
        let total = tree_product(&polys).unwrap();
        let evaluated = evaluate_grid(&total, &xi_grid(), s.tau());
        let worst = evaluated
            .iter()
            .map(|t| (t.det() - 1.0).norm())
            .fold(0.0, f64::max);
        let relative = evaluated
            .iter()
            .map(|t| (t.det() - 1.0).norm() / ((t.a11 * t.a22).norm() + (t.a12 * t.a21).norm()))
            .fold(0.0, f64::max);
        let biggest = evaluated.iter().map(|t| t.max_abs()).fold(0.0, f64::max);
        let line = format!(
            "{label} sigma={sigma} tree product: |det-1| {worst:.1e} <= {DET_TREE:e} (max entry {biggest:.1e}, relative {relative:.1e})"
        );
        if gating {
            c.require(worst <= DET_TREE, line);
        } else {
            c.lines.push(format!(
                "    [info] {line}; not gating, rounding floor ~ max entry^2 * 1.1e-16"
            ));
        }
    }
    c
}

fn c7() -> Check {
    let mut c = Check::new();
    let grid = xi_grid();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let mut times = Vec::new();
    pool.install(|| {
        for m in [1 << 13, 1 << 16] {
            let s = standard_signal(m, Sigma::Anomalous);
            let (tf, _) = time_median(TIMING_RUNS, || run_fast(&s, &grid).unwrap());
            let (tc, _) = time_median(TIMING_RUNS, || run_conventional(&s, &grid, Scheme::Tes4sb).unwrap());
            println!("    M={m:>6}: ftes4sb {tf:.3?}, tes4sb {tc:.3?} (median of {TIMING_RUNS}, 1 thread)");
            times.push((tf.as_secs_f64(), tc.as_secs_f64()));
        }
    });
    let fast_growth = times[1].0 / times[0].0;
    let conv_growth = times[1].1 / times[0].1;
    c.require(
        fast_growth <= FAST_GROWTH,
        format!("ftes4sb growth {fast_growth:.2} <= {FAST_GROWTH}"),
    );
    c.require(
        conv_growth >= CONV_GROWTH,
        format!("tes4sb growth {conv_growth:.2} >= {CONV_GROWTH}"),
    );
    c.require(
        times[1].0 < times[1].1,
        format!(
            "M=65536: ftes4sb {:.3}s < tes4sb {:.3}s",
            times[1].0, times[1].1
        ),
    );
    c
}

fn c8() -> Check {
    let mut c = Check::new();
    let e1 = error_ec(0.6, 0.5);
    c.require(
        e1 == (0.6f64 - 0.5).abs(),
        format!("error_ec(0.6, 0.5) = {e1}"),
    );
    let e2 = error_ec(4.0, 2.0);
    c.require(e2 == 1.0, format!("error_ec(4, 2) = {e2}"));
    let e3 = error_ec(0.37, 0.37);
    c.require(e3 == 0.0, format!("error_ec(x, x) = {e3}"));
    let x = [Cx::new(0.3, -0.2), Cx::new(1.7, 0.4), Cx::new(-0.1, 0.0)];
    let r1 = rmse(&x, &x).unwrap();
    c.require(r1 == 0.0, format!("rmse(x, x) = {r1}"));
    let exact = [0.25, -0.5, 0.75, -1.0];
    let comp: Vec<f64> = exact.iter().map(|e| e + 0.125).collect();
    let r2 = rmse(&comp, &exact).unwrap();
    c.require(r2 == 0.125, format!("rmse(exact + 0.125, exact) = {r2}"));
    let r3 = rmse(&[4.0], &[2.0]).unwrap();
    c.require(r3 == 1.0, format!("rmse([4], [2]) = {r3}"));
    c
}

fn c9() -> Check {
    let mut c = Check::new();
    let grid = EvalGrid::uniform(-10.0, 10.0, N_XI).unwrap();
    let spec = ChirpedSechSpec {
        amplitude: 1.0,
        chirp: 0.0,
        half_width: DEFAULT_HALF_WIDTH,
        m: 1 << 12,
    };
    let s = chirped_sech_signal(&spec, Sigma::Anomalous).unwrap();
    for scheme in [Scheme::Tes4, Scheme::Tes4sb, Scheme::Ftes4sb] {
        let r = run_scheme(&s, &grid, scheme).unwrap();
        let b = r.b.iter().map(|b| b.norm()).fold(0.0, f64::max);
        let a =
            r.a.iter()
                .map(|a| (a.norm() - 1.0).abs())
                .fold(0.0, f64::max);
        c.require(
            b <= REFLECTIONLESS && a <= REFLECTIONLESS,
            format!("{scheme:>7}: max|b| {b:.1e}, max||a|-1| {a:.1e} <= {REFLECTIONLESS:e}"),
        );
    }
    let oracle = oracle_spectrum(
        |t| chirped_sech(1.0, 0.0, t),
        DEFAULT_HALF_WIDTH,
        1 << 13,
        Sigma::Anomalous,
        &grid,
        1e-8,
    )
    .unwrap();
    let b = oracle
        .spectrum
        .b
        .iter()
        .map(|b| b.norm())
        .fold(0.0, f64::max);
    c.require(
        oracle.converged() && b <= REFLECTIONLESS,
        format!(
            "oracle: max|b| {b:.1e}, estimate {:.1e}",
            oracle.max_error_estimate()
        ),
    );
    c
}

fn main() -> ExitCode {
    let start = Instant::now();
    let mut results = Vec::new();
    println!(
        "acceptance: parallel feature = {}",
        zsnft::par::is_parallel()
    );
    // Timing first, before the long convergence runs heat anything up.
    report("7", "performance trend", c7(), &mut results);
    report("8", "metric formulas", c8(), &mut results);
    report("5", "exactness cases", c5(), &mut results);
    report("6", "unimodularity and D-unitarity", c6(), &mut results);
    report("4", "fast/conventional equivalence", c4(), &mut results);
    report(
        "3",
        "invariant degradation bound (sigma=-1)",
        c3(),
        &mut results,
    );
    report("9", "reflectionless fixture", c9(), &mut results);
    let st = studies();
    report(
        "gate",
        "analytic chirped-sech formula vs oracle",
        gate(&st),
        &mut results,
    );
    report("1", "convergence order", c1(&st), &mut results);
    report(
        "2",
        "invariant conservation (sigma=+1)",
        c2(&st),
        &mut results,
    );
    let failed: Vec<&str> = results
        .iter()
        .filter(|r| !r.1)
        .map(|r| r.0.as_str())
        .collect();
    println!("acceptance finished in {:.1?}", start.elapsed());
    if failed.is_empty() {
        println!("ALL CRITERIA PASS");
        ExitCode::SUCCESS
    } else {
        println!("FAILED: {}", failed.join(", "));
        ExitCode::FAILURE
    }
}
