use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dncouple_core::dn::DEFAULT_MAX_ITER;
use dncouple_core::experiments::{
    self, Case, ExperimentConfig, DEFAULT_BASES, DEFAULT_DELTA, DEFAULT_OMEGA, DEFAULT_REFERENCE_N,
};
use dncouple_core::mesh::{generate_benchmark_pair, write_mesh};
use dncouple_core::LameParams;

/// Number of sweep rows solved concurrently.
const THREADS_ENV: &str = "DNCOUPLE_THREADS";

#[derive(Parser)]
#[command(name = "ncdn", version, about = "Dirichlet-Neumann coupling across noncoincident interfaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Mesh utilities.
    Mesh {
        #[command(subcommand)]
        command: MeshCommand,
    },
    /// Run a convergence sweep and write <case>_<a>x<b>.csv and .txt.
    Run(RunArgs),
}

#[derive(Subcommand)]
enum MeshCommand {
    /// Write the benchmark slave and master meshes.
    Gen {
        #[arg(long)]
        ns: usize,
        #[arg(long)]
        nm: usize,
        #[arg(long, default_value_t = 1.0)]
        ny_factor: f64,
        #[arg(long)]
        out_slave: PathBuf,
        #[arg(long)]
        out_master: PathBuf,
    },
}

#[derive(Args)]
struct RunArgs {
    #[arg(long, value_parser = parse_case)]
    case: Case,
    /// Slave:master interface element ratio.
    #[arg(long, default_value = "1:1", value_parser = parse_ratio)]
    ratio: (usize, usize),
    /// Element counts of the coarser interface, comma separated.
    #[arg(long, value_delimiter = ',')]
    ns: Option<Vec<usize>>,
    #[arg(long, default_value_t = DEFAULT_OMEGA)]
    omega: f64,
    #[arg(long, default_value_t = DEFAULT_DELTA)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_MAX_ITER)]
    max_iter: usize,
    /// Slave Lamé parameters as λ,μ.
    #[arg(long, value_parser = parse_lame)]
    lame_s: Option<LameParams>,
    /// Master Lamé parameters as λ,μ.
    #[arg(long, value_parser = parse_lame)]
    lame_m: Option<LameParams>,
    #[arg(long, default_value_t = 1.0)]
    ny_factor: f64,
    /// Interface element count of the monolithic reference (lame case).
    #[arg(long, default_value_t = DEFAULT_REFERENCE_N)]
    reference_n: usize,
    #[arg(long)]
    out: PathBuf,
    /// Log "k,residual" per iteration to stderr.
    #[arg(long)]
    verbose: bool,
}

fn parse_case(s: &str) -> Result<Case, String> {
    s.parse().map_err(|e: dncouple_core::Error| e.to_string())
}

fn parse_ratio(s: &str) -> Result<(usize, usize), String> {
    let (a, b) = s.split_once(':').ok_or_else(|| format!("expected a:b, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<usize>().map_err(|e| format!("{x:?}: {e}"));
    Ok((parse(a)?, parse(b)?))
}

fn parse_lame(s: &str) -> Result<LameParams, String> {
    let (l, m) = s.split_once(',').ok_or_else(|| format!("expected λ,μ, got {s:?}"))?;
    let parse = |x: &str| x.trim().parse::<f64>().map_err(|e| format!("{x:?}: {e}"));
    LameParams::new(parse(l)?, parse(m)?).map_err(|e| e.to_string())
}

fn threads() -> Result<usize> {
    match std::env::var(THREADS_ENV) {
        Ok(v) => v.parse().with_context(|| format!("{THREADS_ENV}={v:?} is not a thread count")),
        Err(_) => Ok(1),
    }
}

fn run(args: RunArgs) -> Result<bool> {
    let bases = args.ns.unwrap_or_else(|| DEFAULT_BASES.to_vec());
    let sweep = experiments::ratio_sweep(args.ratio, &bases)?;
    let mut cfg = ExperimentConfig::new(args.case, sweep);
    cfg.omega = args.omega;
    cfg.delta = args.delta;
    cfg.max_iter = args.max_iter;
    if let Some(l) = args.lame_s {
        cfg.lame_slave = l;
    }
    if let Some(l) = args.lame_m {
        cfg.lame_master = l;
    }
    cfg.ny_factor = args.ny_factor;
    cfg.reference_n = args.reference_n;
    cfg.threads = threads()?;
    cfg.verbose = args.verbose;

    let report = experiments::run(&cfg)?;
    let stem = format!("{}_{}x{}", args.case.as_str(), args.ratio.0, args.ratio.1);
    let (csv, table) = experiments::emit(&report.rows, report.rates, &args.out, &stem)?;
    print!("{}", experiments::format_table(&report.rows, report.rates));
    if report.outside_points > 0 {
        eprintln!("warning: {} quadrature points fell outside the reference mesh", report.outside_points);
    }
    eprintln!("wrote {} and {}", csv.display(), table.display());
    Ok(report.all_converged())
}

fn main() -> ExitCode {
    // Usage errors exit with 1 so that 2 stays reserved for divergence.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { ExitCode::FAILURE } else { ExitCode::SUCCESS };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Mesh { command: MeshCommand::Gen { ns, nm, ny_factor, out_slave, out_master } } => (|| {
            if out_slave == out_master {
                bail!("slave and master output paths coincide");
            }
            let pair = generate_benchmark_pair(ns, nm, ny_factor)?;
            std::fs::write(&out_slave, write_mesh(&pair.slave)).with_context(|| out_slave.display().to_string())?;
            std::fs::write(&out_master, write_mesh(&pair.master)).with_context(|| out_master.display().to_string())?;
            Ok(true)
        })(),
        Command::Run(args) => run(args),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("some rows did not converge");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
