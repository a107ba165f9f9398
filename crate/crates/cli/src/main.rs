//! `haarlane` command-line front end.
//!
//! Exit codes: 0 converged, 2 Newton did not converge, 1 bad input or I/O.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::ops::RangeInclusive;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use haarlane::haar::{build_grid, GridMatrix};
use haarlane::newton::{solve, JacobianMode, NewtonConfig};
use haarlane::problem::{builtin_example, load_problem, InitialGuess, ProblemSpec};
use haarlane::report::{convergence_study, ErrorReport, Precision};

#[derive(Parser)]
#[command(
    name = "haarlane",
    version,
    about = "Haar wavelet collocation for coupled Lane-Emden systems"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a problem file and print the error table as CSV.
    Solve {
        #[arg(long)]
        problem: PathBuf,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Solve one of the built-in examples (1-6).
    Example {
        #[arg(long)]
        id: usize,
        #[command(flatten)]
        run: RunArgs,
    },
    /// L-infinity errors and observed orders over a range of levels.
    Convergence {
        #[arg(long, conflicts_with = "problem", required_unless_present = "problem")]
        id: Option<usize>,
        #[arg(long)]
        problem: Option<PathBuf>,
        /// Inclusive range such as `1..4`.
        #[arg(long, value_parser = parse_levels)]
        levels: RangeInclusive<u32>,
        #[command(flatten)]
        newton: NewtonArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the collocation matrices of a level, one row per wavelet.
    HaarDump {
        #[arg(long)]
        level: u32,
        #[arg(long, value_parser = parse_matrix)]
        matrix: Option<GridMatrix>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    level: u32,
    /// Uniform initial guess for every coefficient.
    #[arg(long)]
    guess: Option<f64>,
    /// Replace the first right-hand side.
    #[arg(long)]
    f1: Option<String>,
    /// Replace the second right-hand side.
    #[arg(long)]
    f2: Option<String>,
    #[arg(long, value_enum, default_value_t = PrecisionArg::Short)]
    precision: PrecisionArg,
    #[command(flatten)]
    newton: NewtonArgs,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct NewtonArgs {
    /// Residual tolerance (infinity norm).
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long, value_enum, default_value_t = JacobianArg::Analytic)]
    jacobian: JacobianArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum JacobianArg {
    Analytic,
    Fd,
}

#[derive(Clone, Copy, ValueEnum)]
enum PrecisionArg {
    Short,
    Full,
}

fn parse_levels(s: &str) -> Result<RangeInclusive<u32>, String> {
    let (a, b) = s
        .split_once("..=")
        .or_else(|| s.split_once(".."))
        .ok_or_else(|| format!("expected A..B, got `{s}`"))?;
    let a: u32 = a
        .trim()
        .parse()
        .map_err(|e| format!("bad start `{a}`: {e}"))?;
    let b: u32 = b
        .trim()
        .parse()
        .map_err(|e| format!("bad end `{b}`: {e}"))?;
    if a > b {
        return Err(format!("empty level range {a}..{b}"));
    }
    Ok(a..=b)
}

fn parse_matrix(s: &str) -> Result<GridMatrix, String> {
    s.parse().map_err(|e: String| e)
}

impl NewtonArgs {
    fn config(&self) -> Result<NewtonConfig> {
        let mut cfg = NewtonConfig::default();
        if let Some(tol) = self.tol {
            if !(tol.is_finite() && tol > 0.0) {
                bail!("--tol must be positive, got {tol}");
            }
            cfg.tol_residual = tol;
        }
        if let Some(n) = self.max_iter {
            cfg.max_iter = n;
        }
        cfg.jacobian = match self.jacobian {
            JacobianArg::Analytic => JacobianMode::Analytic,
            JacobianArg::Fd => JacobianMode::FiniteDifference,
        };
        Ok(cfg)
    }
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).with_context(|| {
            format!("writing output: cannot create {}", p.display())
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn apply_overrides(spec: &mut ProblemSpec, run: &RunArgs) -> Result<()> {
    if let Some(g) = run.guess {
        spec.guess = InitialGuess::Uniform(g);
    }
    for (src, slot, name) in [
        (&run.f1, &mut spec.f1, "--f1"),
        (&run.f2, &mut spec.f2, "--f2"),
    ] {
        if let Some(src) = src {
            *slot = src
                .parse()
                .with_context(|| format!("loading problem: {name}"))?;
        }
    }
    spec.validate().context("loading problem")?;
    Ok(())
}

fn run_solve(mut spec: ProblemSpec, run: &RunArgs) -> Result<ExitCode> {
    apply_overrides(&mut spec, run)?;
    let cfg = run.newton.config()?;
    let grid = build_grid(run.level).context("building grid")?;
    let (sol, report) = solve(&spec, &grid, &cfg).context("solving")?;
    log::info!(
        "{}: J={} iterations={} residual={:e} converged={}",
        spec.label,
        run.level,
        report.iterations,
        report.final_residual,
        report.converged
    );
    let table = ErrorReport::new(&sol).context("evaluating exact solution")?;
    let precision = match run.precision {
        PrecisionArg::Short => Precision::Short,
        PrecisionArg::Full => Precision::Full,
    };
    let mut out = output(&run.out)?;
    table
        .write_csv(&mut out, precision)
        .context("writing output")?;
    out.flush().context("writing output")?;
    if report.converged {
        Ok(ExitCode::SUCCESS)
    } else {
        log::warn!(
            "Newton did not converge in {} iterations",
            report.iterations
        );
        Ok(ExitCode::from(2))
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve { problem, run } => {
            let spec = load_problem(&problem).context("loading problem")?;
            run_solve(spec, &run)
        }
        Command::Example { id, run } => {
            let spec = builtin_example(id).context("loading problem")?;
            run_solve(spec, &run)
        }
        Command::Convergence {
            id,
            problem,
            levels,
            newton,
            out,
        } => {
            let spec = match (id, problem) {
                (Some(id), _) => builtin_example(id),
                (None, Some(p)) => load_problem(p),
                (None, None) => unreachable!("clap requires one of --id or --problem"),
            }
            .context("loading problem")?;
            let cfg = newton.config()?;
            let (conv, reports) = convergence_study(&spec, levels, &cfg).context("solving")?;
            let mut w = output(&out)?;
            conv.write_csv(&mut w).context("writing output")?;
            w.flush().context("writing output")?;
            if reports.iter().all(|r| r.converged) {
                Ok(ExitCode::SUCCESS)
            } else {
                log::warn!("Newton did not converge at every level");
                Ok(ExitCode::from(2))
            }
        }
        Command::HaarDump { level, matrix, out } => {
            let grid = build_grid(level).context("building grid")?;
            let which: Vec<GridMatrix> = match matrix {
                Some(m) => vec![m],
                None => vec![GridMatrix::H, GridMatrix::P1, GridMatrix::P2],
            };
            let mut w = output(&out)?;
            let header: Vec<String> = (1..=grid.size()).map(|c| format!("x{c}")).collect();
            writeln!(w, "matrix,i,{}", header.join(",")).context("writing output")?;
            for m in which {
                let mat = grid.matrix(m);
                for i in 0..mat.rows() {
                    let row: Vec<String> = mat.row(i).iter().map(|v| v.to_string()).collect();
                    writeln!(w, "{m},{},{}", i + 1, row.join(",")).context("writing output")?;
                }
            }
            w.flush().context("writing output")?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

/// Error chain joined by `: `, skipping causes the previous message already
/// quotes.
fn describe(e: &anyhow::Error) -> String {
    let mut parts: Vec<String> = Vec::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if parts.last().is_some_and(|prev| prev.ends_with(&msg)) {
            continue;
        }
        parts.push(msg);
    }
    parts.join(": ")
}

fn init_logging() {
    let level = match std::env::var("HAARLANE_LOG").as_deref() {
        Ok("quiet") => log::LevelFilter::Off,
        Ok("info") => log::LevelFilter::Info,
        Ok("debug") => log::LevelFilter::Debug,
        _ => log::LevelFilter::Warn,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .format_timestamp(None)
        .target(env_logger::Target::Stderr)
        .init();
}

fn main() -> ExitCode {
    init_logging();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(1)
        }
    }
}
