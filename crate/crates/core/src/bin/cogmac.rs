//! Command-line front end.
//!
//! Exit codes: 0 clean, 2 some minimization did not converge, 1 usage,
//! schema or runtime error.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cogmac::exec::init_thread_pool_from_env;
use cogmac::exponents::Scheme;
use cogmac::io::{execute, manifest_from_output, CommandSpec, DistSpec, OutFormat, ProblemFile, RunManifest};
use cogmac::regions::RegionKind;
use cogmac::sim::EnsembleScheme;
use cogmac::{Error, Exec};

#[derive(Parser)]
#[command(name = "cogmac", version, about = "Rate regions, error exponents and ensemble simulation for mismatched cognitive MACs")]
struct Cli {
    /// Run all loops on the calling thread.
    #[arg(long, global = true)]
    sequential: bool,
    /// Record the wall-clock time in the manifest.
    #[arg(long, global = true)]
    timing: bool,
    /// Output file (standard output when absent).
    #[arg(short, long, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args)]
struct Common {
    /// JSON problem file.
    #[arg(long)]
    problem: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Solver multistarts (command default when absent).
    #[arg(long)]
    starts: Option<usize>,
    /// Bisection tolerance in bits.
    #[arg(long)]
    bisect_tol: Option<f64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Sup,
    Bin,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Subcommand)]
enum Cmd {
    /// Boundary of a rate region on an R1 grid.
    Region {
        #[command(flatten)]
        common: Common,
        /// lm, sup, sup-tilde, bin, bin-tilde, bin-star or matched.
        #[arg(long, value_parser = parse_kind)]
        kind: RegionKind,
        /// `file` (P from the problem) or `sweep N` (hull over N inputs).
        #[arg(long, num_args = 1..=2, default_values_t = ["file".to_string()])]
        dist: Vec<String>,
        /// Number of R1 samples.
        #[arg(long, default_value_t = 41)]
        grid: usize,
        /// Upper end of the R1 grid (log2 of the input alphabet by default).
        #[arg(long)]
        r1_max: Option<f64>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        out: FormatArg,
    },
    /// Error exponents at one rate pair.
    Exponent {
        #[command(flatten)]
        common: Common,
        #[arg(long = "R1")]
        r1: f64,
        #[arg(long = "R2")]
        r2: f64,
        #[arg(long, value_enum, default_value_t = SchemeArg::Sup)]
        scheme: SchemeArg,
    },
    /// Monte Carlo simulation of the random-coding ensemble.
    Simulate {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum, default_value_t = SchemeArg::Sup)]
        scheme: SchemeArg,
        #[arg(long)]
        n: u32,
        #[arg(long = "R1", default_value_t = 0.0)]
        r1: f64,
        #[arg(long = "R2", default_value_t = 0.0)]
        r2: f64,
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        /// Binning excess rate (I(X1;X2) + n^-1/2 by default).
        #[arg(long)]
        gamma: Option<f64>,
        /// Also evaluate the exact type-enumeration probabilities.
        #[arg(long)]
        exact: bool,
        /// Place R1 this fraction beyond the region limit at R2.
        #[arg(long)]
        outside: Option<f64>,
    },
    /// Single-user rate bounds via a two-user split of the input.
    SuBound {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1..=2, default_values_t = ["file".to_string()])]
        dist: Vec<String>,
        /// R1 samples of the non-cognitive bound.
        #[arg(long, default_value_t = 21)]
        points: usize,
    },
    /// Re-run the manifest embedded in a previous output.
    Rerun {
        file: PathBuf,
        /// Compare with the original instead of writing the output.
        #[arg(long)]
        check: bool,
    },
}

fn parse_kind(s: &str) -> Result<RegionKind, String> {
    RegionKind::parse(s).ok_or_else(|| {
        let names: Vec<&str> = RegionKind::ALL.iter().map(|k| k.name()).collect();
        format!("expected one of {}", names.join(", "))
    })
}

fn parse_dist(v: &[String]) -> Result<DistSpec, Error> {
    match v {
        [f] if f == "file" => Ok(DistSpec::File),
        [s] if s == "sweep" => Ok(DistSpec::Sweep { count: 16 }),
        [s, n] if s == "sweep" => match n.parse::<usize>() {
            Ok(count) if count > 0 => Ok(DistSpec::Sweep { count }),
            _ => Err(Error::InvalidArgument(format!("--dist sweep: bad count {n:?}"))),
        },
        _ => Err(Error::InvalidArgument(format!("--dist: expected `file` or `sweep N`, got {v:?}"))),
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn manifest(common: &Common, command: CommandSpec) -> Result<RunManifest, Error> {
    let problem = ProblemFile::parse(&read(&common.problem)?)
        .map_err(|e| Error::Schema(format!("{}: {e}", common.problem.display())))?;
    problem.resolve()?;
    let mut m = RunManifest::new(command, common.seed, problem);
    if let Some(s) = common.starts {
        m.solver.starts = s;
    }
    if let Some(t) = common.bisect_tol {
        if !(t > 0.0) {
            return Err(Error::InvalidArgument("--bisect-tol must be positive".into()));
        }
        m.solver.bisect_tol = t;
    }
    Ok(m)
}

fn scheme(s: SchemeArg) -> Scheme {
    match s {
        SchemeArg::Sup => Scheme::Sup,
        SchemeArg::Bin => Scheme::Bin,
    }
}

fn build(cmd: &Cmd) -> Result<RunManifest, Error> {
    match cmd {
        Cmd::Region { common, kind, dist, grid, r1_max, out } => {
            let dist = parse_dist(dist)?;
            let problem = ProblemFile::parse(&read(&common.problem)?)?;
            let [k1, k2, _] = problem.dims;
            let default_max = if *kind == RegionKind::Lm { (k1 as f64).log2() } else { ((k1 * k2) as f64).log2() };
            let format = match out {
                FormatArg::Json => OutFormat::Json,
                FormatArg::Csv => OutFormat::Csv,
            };
            let c = CommandSpec::Region { kind: *kind, dist, grid: *grid, r1_max: r1_max.unwrap_or(default_max), format };
            manifest(common, c)
        }
        Cmd::Exponent { common, r1, r2, scheme: s } => manifest(common, CommandSpec::Exponent { r1: *r1, r2: *r2, scheme: scheme(*s) }),
        Cmd::Simulate { common, scheme: s, n, r1, r2, trials, gamma, exact, outside } => {
            let scheme = match s {
                SchemeArg::Sup => EnsembleScheme::Superposition,
                SchemeArg::Bin => EnsembleScheme::Binning,
            };
            let c = CommandSpec::Simulate {
                scheme,
                n: *n,
                r1: *r1,
                r2: *r2,
                trials: *trials,
                gamma: *gamma,
                exact: *exact,
                outside: *outside,
            };
            manifest(common, c)
        }
        Cmd::SuBound { common, dist, points } => manifest(common, CommandSpec::SuBound { dist: parse_dist(dist)?, points: *points }),
        Cmd::Rerun { .. } => unreachable!(),
    }
}

fn write(output: &Option<PathBuf>, text: &str) -> Result<(), Error> {
    match output {
        Some(p) => std::fs::write(p, text).map_err(|e| Error::Io(format!("{}: {e}", p.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: &Cli) -> Result<ExitCode, Error> {
    let exec = if cli.sequential { Exec::Sequential } else { Exec::Parallel };
    let start = std::time::Instant::now();
    let (outcome, original) = match &cli.cmd {
        Cmd::Rerun { file, .. } => {
            let text = read(file)?;
            (execute(&manifest_from_output(&text)?, exec, false)?, Some(text))
        }
        cmd => (execute(&build(cmd)?, exec, cli.timing)?, None),
    };
    eprint!("{}", outcome.summary);
    if cli.timing {
        eprintln!("elapsed {:.3} s", start.elapsed().as_secs_f64());
    }
    match (&cli.cmd, original) {
        (Cmd::Rerun { check: true, file }, Some(orig)) => {
            if orig == outcome.text {
                eprintln!("{}: reproduced byte for byte", file.display());
            } else {
                eprintln!("{}: output differs from the recorded one", file.display());
                return Ok(ExitCode::from(1));
            }
        }
        _ => write(&cli.output, &outcome.text)?,
    }
    Ok(if outcome.degraded { ExitCode::from(2) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_thread_pool_from_env();
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
