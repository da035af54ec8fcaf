use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use zsnft::{Scheme, Sigma};
use zsnft_cli::*;

#[derive(Parser)]
#[command(
    name = "zsnft",
    version,
    about = "Continuous-spectrum NFT of sampled signals"
)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "ZSNFT_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Kind {
    ChirpedSech,
    Zero,
}

#[derive(Args)]
struct SourceArgs {
    /// Synthetic signal family.
    kind: Kind,
    /// Amplitude of the chirped sech.
    #[arg(long = "A", default_value_t = 5.2)]
    amplitude: f64,
    /// Chirp of the chirped sech.
    #[arg(long = "C", default_value_t = 4.0, allow_hyphen_values = true)]
    chirp: f64,
    /// Half-width of the time window [-L, L].
    #[arg(long = "L", default_value_t = 30.0)]
    half_width: f64,
}

impl SourceArgs {
    fn source(&self) -> Source {
        match self.kind {
            Kind::ChirpedSech => Source::ChirpedSech {
                amplitude: self.amplitude,
                chirp: self.chirp,
            },
            Kind::Zero => Source::Zero,
        }
    }
}

#[derive(Args)]
struct GridArgs {
    #[arg(long, default_value_t = -20.0, allow_hyphen_values = true)]
    xi_min: f64,
    #[arg(long, default_value_t = 20.0, allow_hyphen_values = true)]
    xi_max: f64,
    #[arg(long, default_value_t = 1025)]
    n_xi: usize,
}

impl GridArgs {
    fn config(&self) -> GridConfig {
        GridConfig {
            xi_min: self.xi_min,
            xi_max: self.xi_max,
            n_xi: self.n_xi,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write a sampled synthetic signal as CSV.
    Synth {
        #[command(flatten)]
        source: SourceArgs,
        /// Number of grid intervals; the file has M + 1 rows.
        #[arg(long = "M", default_value_t = 4096)]
        m: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Scattering data of a signal file on a ξ grid.
    Compute {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "+1", allow_hyphen_values = true)]
        sigma: Sigma,
        #[arg(long, default_value = "ftes4sb")]
        scheme: Scheme,
        #[command(flatten)]
        grid: GridArgs,
        /// Spectrum CSV; the JSON summary goes next to it with a .json extension.
        #[arg(long)]
        out: PathBuf,
    },
    /// RMSE against a reference and observed orders for several M.
    Convergence {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "+1", allow_hyphen_values = true)]
        sigma: Sigma,
        #[arg(long, value_delimiter = ',', default_value = "bo,tes4,tes4sb,ftes4sb")]
        scheme: Vec<Scheme>,
        /// Comma list or power range such as 2^10..2^14.
        #[arg(long, default_value = "2^10..2^14")]
        m_list: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, value_enum, default_value_t = RefArg::Oracle)]
        reference: RefArg,
        /// Coarse M of the Richardson oracle (it also runs at twice this).
        #[arg(long, default_value_t = 1 << 16)]
        oracle_m: usize,
        #[arg(long, default_value_t = 1e-10)]
        oracle_tol: f64,
        /// Report CSV; the JSON report goes next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Median compute time per scheme and M.
    Bench {
        #[command(flatten)]
        source: SourceArgs,
        #[arg(long, default_value = "+1", allow_hyphen_values = true)]
        sigma: Sigma,
        #[arg(long, value_delimiter = ',', default_value = "tes4sb,ftes4sb")]
        scheme: Vec<Scheme>,
        #[arg(long, default_value = "2^10..2^16")]
        m_list: String,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long, default_value_t = 3)]
        repeats: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Deviation of |a|² + σ|b|² from 1 for each scheme.
    Invariant {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "+1", allow_hyphen_values = true)]
        sigma: Sigma,
        #[arg(long, value_delimiter = ',', default_value = "bo,tes4,tes4sb,ftes4sb")]
        scheme: Vec<Scheme>,
        #[command(flatten)]
        grid: GridArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum RefArg {
    Oracle,
    Analytic,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn read_signal(path: &Path, sigma: Sigma) -> Result<zsnft::Signal> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    read_signal_csv(BufReader::new(f), sigma).with_context(|| format!("reading {}", path.display()))
}

fn write_json(path: &Path, json: &str) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "{json}")?;
    w.flush()?;
    Ok(())
}

/// `Ok(true)` when everything was written and no validation flag was raised.
fn run(cli: Cli) -> Result<bool> {
    configure_threads(cli.threads)?;
    match cli.command {
        Command::Synth { source, m, out } => {
            let signal = source
                .source()
                .signal(source.half_width, m, Sigma::Anomalous)?;
            let mut w = create(&out)?;
            write_signal_csv(&mut w, &signal)?;
            w.flush()?;
            eprintln!(
                "wrote {} samples to {}",
                signal.samples().len(),
                out.display()
            );
            Ok(true)
        }
        Command::Compute {
            input,
            sigma,
            scheme,
            grid,
            out,
        } => {
            let signal = read_signal(&input, sigma)?;
            let (res, summary) = compute(&signal, scheme, &grid.config())?;
            let mut w = create(&out)?;
            write_spectrum_csv(&mut w, &res)?;
            w.flush()?;
            let json = serde_json::to_string_pretty(&summary)?;
            write_json(&out.with_extension("json"), &json)?;
            println!("{json}");
            if summary.flags.raised() {
                eprintln!("validation flags raised: {:?}", summary.flags);
            }
            Ok(!summary.flags.raised())
        }
        Command::Convergence {
            source,
            sigma,
            scheme,
            m_list,
            grid,
            reference,
            oracle_m,
            oracle_tol,
            out,
        } => {
            let cfg = StudyConfig {
                source: source.source(),
                half_width: source.half_width,
                sigma,
                grid: grid.config(),
                schemes: scheme,
                m_list: parse_m_list(&m_list)?,
            };
            let kind = match reference {
                RefArg::Oracle => ReferenceKind::Oracle {
                    m: oracle_m,
                    tolerance: oracle_tol,
                },
                RefArg::Analytic => ReferenceKind::Analytic { m: oracle_m },
            };
            let reference = reference_spectrum(&cfg, kind)?;
            let report = convergence(&cfg, &reference)?;
            let mut w = create(&out)?;
            write_convergence_csv(&mut w, &report)?;
            w.flush()?;
            let json = convergence_json(&report)?;
            write_json(&out.with_extension("json"), &json)?;
            for s in &report.schemes {
                println!(
                    "{:>8}  fitted order a {:>6}  b {:>6}",
                    s.scheme,
                    s.fitted_a.map_or("-".into(), |x| format!("{x:.3}")),
                    s.fitted_b.map_or("-".into(), |x| format!("{x:.3}"))
                );
            }
            Ok(true)
        }
        Command::Bench {
            source,
            sigma,
            scheme,
            m_list,
            grid,
            repeats,
            out,
        } => {
            let cfg = StudyConfig {
                source: source.source(),
                half_width: source.half_width,
                sigma,
                grid: grid.config(),
                schemes: scheme,
                m_list: parse_m_list(&m_list)?,
            };
            let rows = bench(&cfg, repeats)?;
            println!("{:>8} {:>8} {:>6} {:>12}", "scheme", "M", "N", "median [s]");
            for r in &rows {
                println!(
                    "{:>8} {:>8} {:>6} {:>12.6}",
                    r.scheme, r.m, r.n_xi, r.median_s
                );
            }
            if let Some(out) = out {
                let mut w = create(&out)?;
                write_bench_csv(&mut w, &rows)?;
                w.flush()?;
            }
            Ok(true)
        }
        Command::Invariant {
            input,
            sigma,
            scheme,
            grid,
            out,
        } => {
            let signal = read_signal(&input, sigma)?;
            let rows = invariant(&signal, &scheme, &grid.config())?;
            println!("{:>8} {:>12} {:>12}", "scheme", "max h_err", "rmse h_err");
            for r in &rows {
                println!(
                    "{:>8} {:>12.3e} {:>12.3e}",
                    r.scheme, r.max_h_err, r.rmse_h_err
                );
            }
            if let Some(out) = out {
                let mut w = create(&out)?;
                write_invariant_csv(&mut w, &rows)?;
                w.flush()?;
            }
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
