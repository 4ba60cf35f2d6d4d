//! Command-line driver.
//!
//! Exit codes: 0 verified solution, 1 UNSAT or restarts exhausted (or no
//! verified baseline solution), 2 timeout, 64 usage or I/O error.

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::time::Duration;

use clap::{Args, Parser, Subcommand};
use reas::baseline::baseline_smoothing;
use reas::ir::{parse_program, Assignment, Program};
use reas::synth::{CoreConfig, SolveStats, SolveStatus, Synthesizer};

use crate::report::{Bench, BenchOverrides, RunReport};

pub const EXIT_SAT: i32 = 0;
pub const EXIT_NO_SOLUTION: i32 = 1;
pub const EXIT_TIMEOUT: i32 = 2;
pub const EXIT_USAGE: i32 = 64;

#[derive(Debug, Parser)]
#[command(name = "reas", version, about = "Synthesize real and Boolean unknowns of hybrid programs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a program file or a generated benchmark.
    Solve(SolveArgs),
    /// Print a generated benchmark program in the text format.
    Gen(GenArgs),
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Benchmark name: thermostat, pointcar, quad-obstacle, quad-landing.
    #[arg(long)]
    bench: Option<String>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    dt: Option<f64>,
    /// Thermostat dwell time in seconds.
    #[arg(long)]
    dwell: Option<f64>,
    /// Number of obstacles for the point car.
    #[arg(long)]
    obstacles: Option<usize>,
}

impl BenchArgs {
    fn bench(&self) -> Result<Option<Bench>, String> {
        self.bench
            .as_deref()
            .map(|name| {
                Bench::from_name(
                    name,
                    BenchOverrides {
                        steps: self.steps,
                        dt: self.dt,
                        dwell: self.dwell,
                        obstacles: self.obstacles,
                    },
                )
            })
            .transpose()
    }
}

#[derive(Debug, Args)]
struct SolveArgs {
    /// Program in the text format (omit when using --bench).
    program: Option<PathBuf>,
    #[command(flatten)]
    bench: BenchArgs,
    /// Conflict threshold.
    #[arg(long, default_value_t = 5)]
    eta: usize,
    /// Restarts allowed after SOFT_UNSAT (unlimited when absent).
    #[arg(long)]
    restart_limit: Option<usize>,
    /// Wall-clock limit, e.g. `90s`, `10m`, `500ms` (default 30m).
    #[arg(long, value_parser = parse_duration)]
    timeout: Option<Duration>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated, strictly increasing smoothing parameters.
    #[arg(long, value_delimiter = ',')]
    beta_schedule: Option<Vec<f64>>,
    /// Smoothing parameter of the final feasibility check.
    #[arg(long)]
    check_beta: Option<f64>,
    /// Optimizer iterations allowed at the check smoothing parameter.
    #[arg(long)]
    check_iters: Option<usize>,
    #[arg(long)]
    eps: Option<f64>,
    /// Run the only-smoothing baseline instead of the full search.
    #[arg(long)]
    baseline_smoothing: bool,
    /// Independent trials for the baseline.
    #[arg(long, default_value_t = 300)]
    restarts: usize,
    /// Write the JSON run report here.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Write the simulated trajectory (CSV) here (benchmarks only).
    #[arg(long)]
    traj: Option<PathBuf>,
    /// Write an optimizer trace (JSON lines) here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Write a per-iteration run log (JSON lines) here.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[command(flatten)]
    bench: BenchArgs,
    /// Output file (stdout when absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
}

/// Parses `90s`, `10m`, `1h`, `500ms` or a bare number of seconds.
pub fn parse_duration(s: &str) -> Result<Duration, String> {
    let s = s.trim();
    let (num, scale) = if let Some(n) = s.strip_suffix("ms") {
        (n, 1e-3)
    } else if let Some(n) = s.strip_suffix('s') {
        (n, 1.0)
    } else if let Some(n) = s.strip_suffix('m') {
        (n, 60.0)
    } else if let Some(n) = s.strip_suffix('h') {
        (n, 3600.0)
    } else {
        (s, 1.0)
    };
    let v: f64 = num.trim().parse().map_err(|_| format!("invalid duration `{s}`"))?;
    if !(v >= 0.0 && v.is_finite()) {
        return Err(format!("invalid duration `{s}`"));
    }
    Ok(Duration::from_secs_f64(v * scale))
}

fn create(path: &PathBuf) -> Result<BufWriter<File>, String> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn load(args: &SolveArgs) -> Result<(Program, Option<Bench>), String> {
    let bench = args.bench.bench()?;
    match (&args.program, bench) {
        (Some(_), Some(_)) => Err("give either a program file or --bench, not both".into()),
        (None, None) => Err("missing program file or --bench".into()),
        (None, Some(b)) => Ok((b.program(), Some(b))),
        (Some(path), None) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
            let p = parse_program(&text).map_err(|e| format!("{}: {e}", path.display()))?;
            Ok((p, None))
        }
    }
}

fn config(args: &SolveArgs) -> Result<CoreConfig, String> {
    let mut cfg = CoreConfig {
        eta: args.eta,
        restart_limit: args.restart_limit,
        seed: args.seed,
        ..CoreConfig::default()
    };
    if let Some(t) = args.timeout {
        cfg.timeout = t;
    }
    if let Some(b) = &args.beta_schedule {
        cfg.optimizer.beta_schedule = b.clone();
    }
    if let Some(b) = args.check_beta {
        cfg.optimizer.check_beta = b;
    }
    if let Some(n) = args.check_iters {
        cfg.optimizer.check_iters = n;
    }
    if let Some(e) = args.eps {
        cfg.optimizer.eps = e;
    }
    cfg.optimizer.validate()?;
    if cfg.eta < 1 {
        return Err("--eta must be at least 1".into());
    }
    Ok(cfg)
}

fn write_outputs(
    args: &SolveArgs,
    report: &RunReport,
    bench: Option<&Bench>,
    a: Option<&Assignment>,
) -> Result<(), String> {
    let json = serde_json::to_string_pretty(report).expect("report serializes");
    match &args.report {
        Some(path) => {
            let mut w = create(path)?;
            writeln!(w, "{json}").map_err(|e| e.to_string())?;
        }
        None => println!("{json}"),
    }
    if let Some(path) = &args.traj {
        match (bench, a) {
            (Some(b), Some(a)) => {
                let w = create(path)?;
                b.write_trajectory(a, w).map_err(|e| e.to_string())?;
            }
            (None, _) => return Err("--traj needs --bench".into()),
            (_, None) => {}
        }
    }
    Ok(())
}

fn run_solve(args: SolveArgs) -> Result<i32, String> {
    let (p, bench) = load(&args)?;
    let cfg = config(&args)?;
    if args.baseline_smoothing {
        let res = baseline_smoothing(&p, &cfg.optimizer, args.restarts, cfg.seed, cfg.timeout);
        let status = if res.assignment.is_some() {
            "SAT"
        } else if res.timed_out {
            "TIMEOUT"
        } else {
            "NOT_FOUND"
        };
        let stats = SolveStats {
            numeric_calls: res.trials,
            wall_ms: res.wall_ms,
            ..SolveStats::default()
        };
        let report =
            RunReport::new(&p, status, res.assignment.as_ref(), stats, bench.as_ref()).with_baseline(&res);
        write_outputs(&args, &report, bench.as_ref(), res.assignment.as_ref())?;
        return Ok(match (report.verified, res.timed_out) {
            (true, _) => EXIT_SAT,
            (false, true) => EXIT_TIMEOUT,
            (false, false) => EXIT_NO_SOLUTION,
        });
    }
    let mut synth = Synthesizer::new(&p, cfg);
    if let Some(path) = &args.trace {
        synth = synth.with_optimizer_trace(Box::new(create(path)?));
    }
    if let Some(path) = &args.log {
        synth = synth.with_run_log(Box::new(create(path)?));
    }
    let res = synth.run();
    let status = match res.status {
        SolveStatus::Sat => "SAT",
        SolveStatus::Unsat => "UNSAT",
        SolveStatus::SoftUnsatExhausted => "SOFT_UNSAT_EXHAUSTED",
        SolveStatus::Timeout => "TIMEOUT",
    };
    let report = RunReport::new(&p, status, res.assignment.as_ref(), res.stats, bench.as_ref());
    write_outputs(&args, &report, bench.as_ref(), res.assignment.as_ref())?;
    Ok(match res.status {
        SolveStatus::Sat if report.verified => EXIT_SAT,
        SolveStatus::Timeout => EXIT_TIMEOUT,
        _ => EXIT_NO_SOLUTION,
    })
}

fn run_gen(args: GenArgs) -> Result<i32, String> {
    let bench = args.bench.bench()?.ok_or("missing --bench")?;
    let text = bench.program().to_string();
    match &args.output {
        Some(path) => {
            let mut w = create(path)?;
            w.write_all(text.as_bytes()).map_err(|e| e.to_string())?;
        }
        None => io::stdout().write_all(text.as_bytes()).map_err(|e| e.to_string())?,
    }
    Ok(EXIT_SAT)
}

/// Entry point; returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    let out = match cli.command {
        Command::Solve(a) => run_solve(a),
        Command::Gen(a) => run_gen(a),
    };
    out.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        EXIT_USAGE
    })
}
