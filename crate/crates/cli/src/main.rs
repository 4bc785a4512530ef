use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use rqmc_core::harness::{
    bench_throughput_runs, run_experiment, write_report, ConvergenceReport, ExperimentConfig, GeneratorKind, ModelKind,
    Paradigm, Replica,
};
use rqmc_core::models::{LiborConfig, MbsConfig, YieldCurve};
use rqmc_core::sobol::SobolTable;
use rqmc_core::Error;

/// Randomized quasi-Monte Carlo generators, pricing models and convergence
/// experiments.
#[derive(Debug, Parser)]
#[command(name = "rqmc", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print points of one randomized generator, one tab-separated point per line.
    Gen {
        #[arg(long, short)]
        generator: GeneratorKind,
        #[arg(long, short)]
        dim: usize,
        #[arg(long, short = 'n')]
        count: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Replication whose randomization is used.
        #[arg(long, default_value_t = 0)]
        replication: u64,
    },
    /// Measure single-thread generation throughput.
    Bench {
        #[arg(long, short)]
        generator: GeneratorKind,
        #[arg(long, short)]
        dim: usize,
        #[arg(long, short = 'n', default_value_t = 10_000_000)]
        count: u64,
        #[arg(long, default_value_t = 5)]
        runs: usize,
    },
    /// Caplet price under the LIBOR market model.
    Libor {
        #[command(flatten)]
        run: RunArgs,
        /// Yield curve CSV with header `tenor_years,rate_percent`.
        #[arg(long)]
        curve: Option<PathBuf>,
        #[arg(long, default_value_t = 5.0)]
        fixing: f64,
        #[arg(long, default_value_t = 0.5)]
        accrual: f64,
        #[arg(long, default_value_t = 0.01)]
        strike: f64,
        #[arg(long, default_value_t = 0.04)]
        volatility: f64,
    },
    /// Mortgage-backed security present value.
    Mbs {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, default_value_t = 360)]
        months: usize,
        #[arg(long, default_value_t = 0.0004)]
        variance: f64,
    },
}

#[derive(Debug, Args)]
struct RunArgs {
    /// One or more generators, comma separated.
    #[arg(long, short, value_delimiter = ',', required = true)]
    generator: Vec<GeneratorKind>,
    /// `2^a..2^b` or a comma-separated list such as `1024,2^12`.
    #[arg(long, default_value = "2^10..2^18")]
    n_grid: String,
    #[arg(long, default_value_t = 50)]
    reps: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    workers: usize,
    #[arg(long, default_value = "replication-parallel")]
    paradigm: Paradigm,
    /// Report CSV; the fitted slopes go to `<stem>_summary.csv` beside it.
    #[arg(long)]
    out: Option<PathBuf>,
}

enum Failure {
    Config(String),
    Runtime(String),
    /// Standard output was closed by the reader (e.g. `| head`).
    Closed,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_configuration() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

fn parse_size(s: &str) -> Result<u64, Failure> {
    let bad = || Failure::Config(format!("bad sample size `{s}`"));
    match s.trim().split_once('^') {
        Some((b, e)) => {
            let b: u64 = b.trim().parse().map_err(|_| bad())?;
            let e: u32 = e.trim().parse().map_err(|_| bad())?;
            b.checked_pow(e).ok_or_else(bad)
        }
        None => s.trim().parse().map_err(|_| bad()),
    }
}

/// `2^a..2^b` expands to every power of two in between; otherwise a comma
/// list of sizes.
fn parse_grid(spec: &str) -> Result<Vec<u64>, Failure> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let (lo, hi) = (parse_size(lo)?, parse_size(hi)?);
        if !lo.is_power_of_two() || !hi.is_power_of_two() || lo > hi {
            return Err(Failure::Config(format!(
                "range `{spec}` must run between powers of two, low to high"
            )));
        }
        return Ok((lo.trailing_zeros()..=hi.trailing_zeros()).map(|k| 1u64 << k).collect());
    }
    spec.split(',').map(parse_size).collect()
}

fn write_err(e: io::Error) -> Failure {
    if e.kind() == io::ErrorKind::BrokenPipe {
        Failure::Closed
    } else {
        Failure::Runtime(format!("writing output: {e}"))
    }
}

fn generate(g: GeneratorKind, dim: usize, count: u64, seed: u64, replication: u64) -> Result<(), Failure> {
    let table = if g.is_sobol() {
        Some(SobolTable::joe_kuo(dim)?)
    } else {
        None
    };
    let replica = Replica::new(g, dim, seed, replication, table.as_ref())?;
    let mut stream = replica.stream();
    let mut point = vec![0.0; dim];
    let mut out = BufWriter::new(io::stdout().lock());
    for _ in 0..count {
        stream.next_into(&mut point)?;
        let mut first = true;
        for x in &point {
            if !first {
                out.write_all(b"\t").map_err(write_err)?;
            }
            write!(out, "{x}").map_err(write_err)?;
            first = false;
        }
        out.write_all(b"\n").map_err(write_err)?;
    }
    out.flush().map_err(write_err)
}

fn experiment(model: ModelKind, run: RunArgs, libor: LiborConfig, mbs: MbsConfig) -> Result<(), Failure> {
    let n_grid = parse_grid(&run.n_grid)?;
    let mut reports: Vec<ConvergenceReport> = Vec::new();
    for &generator in &run.generator {
        let config = ExperimentConfig {
            model,
            generator,
            n_grid: n_grid.clone(),
            reps: run.reps,
            seed: run.seed,
            workers: run.workers,
            paradigm: run.paradigm,
            libor: libor.clone(),
            mbs: mbs.clone(),
            test_dimension: 1,
        };
        reports.push(run_experiment(&config)?);
    }

    let mut out = io::stdout().lock();
    for r in &reports {
        writeln!(out, "{} / {} (M = {})", r.model, r.generator, r.reps).map_err(write_err)?;
        writeln!(out, "{:>10}  {:>18}  {:>12}  {:>10}  {:>12}", "N", "mean", "std", "time_s", "efficiency")
            .map_err(write_err)?;
        for row in &r.rows {
            writeln!(
                out,
                "{:>10}  {:>18.12}  {:>12.4e}  {:>10.4}  {:>12.4e}",
                row.n, row.mean, row.std, row.time_s, row.efficiency
            )
            .map_err(write_err)?;
            if row.invalid_paths > 0 {
                writeln!(out, "{:>10}  ({} invalid paths skipped)", "", row.invalid_paths).map_err(write_err)?;
            }
        }
        match r.fit {
            Some(f) => writeln!(out, "slope {:.4}  (max residual {:.3e})\n", f.slope, f.residual),
            None => writeln!(out, "slope: not enough sizes with positive std\n"),
        }
        .map_err(write_err)?;
    }
    if let Some(path) = &run.out {
        write_report(&reports, path)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Gen {
            generator,
            dim,
            count,
            seed,
            replication,
        } => generate(generator, dim, count, seed, replication),
        Command::Bench {
            generator,
            dim,
            count,
            runs,
        } => {
            let rate = bench_throughput_runs(generator, dim, count, runs)?;
            println!("{generator}\tdim={dim}\tcount={count}\t{rate:.4e} numbers/s");
            Ok(())
        }
        Command::Libor {
            run,
            curve,
            fixing,
            accrual,
            strike,
            volatility,
        } => {
            let curve = match curve {
                Some(path) => YieldCurve::from_csv_path(&path).map_err(|e| Failure::Config(e.to_string()))?,
                None => YieldCurve::treasury_2012_02_24(),
            };
            let libor = LiborConfig {
                fixing_time: fixing,
                accrual,
                strike,
                volatility,
                curve,
                ..LiborConfig::default()
            };
            experiment(ModelKind::Libor, run, libor, MbsConfig::default())
        }
        Command::Mbs { run, months, variance } => {
            let mbs = MbsConfig {
                months,
                variance,
                ..MbsConfig::default()
            };
            experiment(ModelKind::Mbs, run, LiborConfig::default(), mbs)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("rqmc: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Closed) => ExitCode::SUCCESS,
        Err(Failure::Runtime(msg)) => {
            eprintln!("rqmc: {msg}");
            ExitCode::from(2)
        }
    }
}
