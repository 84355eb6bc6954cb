//! Command-line front end: solve one instance, generate instances, run
//! benchmark sweeps, query the exact oracle, or compare two methods.
//!
//! Exit codes: 0 success, 1 usage error, 2 numerical failure, 3 I/O error.

use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use ot_core::error::OtError;
use ot_core::harness::{
    competitive_ratio, emit_outputs, run_benchmark, update_scale, BenchConfig, ComparisonSeries,
    EmitFormat, SeriesPoint,
};
use ot_core::instances::{Instance, InstanceSpec};
use ot_core::oracle::exact_ot;
use ot_core::rng::GENERATOR_NAME;
use ot_core::solvers::{
    apdagd, apdamd, approx_ot_custom, greenkhorn, sinkhorn, Method, ScaledSqEuclidean, SolverTrace,
    DEFAULT_MAX_ACCEL_ITERS, DEFAULT_MAX_COORD_ITERS,
};
use ot_core::types::ConstraintOperator;
use ot_core::RegularizedInstance;

#[derive(Parser)]
#[command(
    name = "ot",
    about = "Entropic optimal transport: approximate solvers, exact oracle, benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver through the ε-approximation pipeline on one instance.
    Solve(SolveArgs),
    /// Generate a synthetic image-pair instance.
    Gen(GenArgs),
    /// Run a benchmark sweep from a config file.
    Bench(BenchArgs),
    /// Exact LP value of an instance (n ≤ 256).
    Oracle(OracleArgs),
    /// Competitive-ratio summary of two methods on one instance.
    Compare(CompareArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// Solver: sinkhorn, greenkhorn, apdamd or apdagd.
    #[arg(long)]
    method: String,
    /// Additive approximation target ε.
    #[arg(long)]
    eps: f64,
    /// Override the scheduled η = ε/(4 log n); ε′ still follows ε.
    #[arg(long)]
    eta: Option<f64>,
    /// Iteration safeguard (defaults: 10^6 coordinate, 10^5 accelerated).
    #[arg(long)]
    max_iter: Option<usize>,
    /// Instance JSON path.
    #[arg(long)]
    input: PathBuf,
    /// Trace JSON output path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenArgs {
    /// Image side in pixels (the instance has side² atoms).
    #[arg(long)]
    side: usize,
    /// Foreground fraction of the image area (paper grid: 0.1, 0.5, 0.9).
    #[arg(long)]
    fg: f64,
    /// Pair seed; images A and B use child streams 0 and 1.
    #[arg(long)]
    seed: u64,
    /// Instance JSON output path.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct BenchArgs {
    /// bench.json configuration path.
    #[arg(long)]
    config: PathBuf,
    /// Output directory for records and plot data.
    #[arg(long)]
    out_dir: PathBuf,
    /// Summary table format.
    #[arg(long, default_value = "csv")]
    format: String,
    /// Also emit long-format series.csv and ratios.csv.
    #[arg(long)]
    plotdata: bool,
}

#[derive(Args)]
struct OracleArgs {
    /// Instance JSON path.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Args)]
struct CompareArgs {
    /// First method (the ratio's numerator d-values).
    #[arg(long)]
    method_a: String,
    /// Second method (the denominator).
    #[arg(long)]
    method_b: String,
    /// Regularization η for both raw solver runs.
    #[arg(long, default_value_t = 5.0)]
    eta: f64,
    /// Iteration budget per run.
    #[arg(long)]
    max_iter: Option<usize>,
    /// Instance JSON path.
    #[arg(long)]
    input: PathBuf,
}

#[derive(Serialize)]
struct TraceRow {
    iter: usize,
    residual: f64,
    dual_value: f64,
    ls_doublings: u32,
    oracle_calls: u64,
    elapsed: f64,
}

#[derive(Serialize)]
struct SolveOutput {
    instance_kind: String,
    n: usize,
    algorithm: String,
    eps: f64,
    eta: f64,
    eps_prime: f64,
    iterations: usize,
    status: String,
    final_cost: f64,
    final_d: f64,
    generator: String,
    trace: Vec<TraceRow>,
}

fn trace_rows(trace: &SolverTrace) -> Vec<TraceRow> {
    trace
        .records
        .iter()
        .map(|r| TraceRow {
            iter: r.iter,
            residual: r.residual,
            dual_value: r.dual_value,
            ls_doublings: r.ls_doublings,
            oracle_calls: r.oracle_calls,
            elapsed: r.elapsed,
        })
        .collect()
}

fn cmd_solve(args: SolveArgs) -> Result<(), OtError> {
    let method: Method = args.method.parse()?;
    let inst = Instance::load_json(&args.input)?;
    let res = approx_ot_custom(
        &inst.cost,
        &inst.r,
        &inst.c,
        args.eps,
        args.eta,
        method,
        args.max_iter,
        None,
    )?;
    let d = ot_core::harness::metric_d(&res.plan, &inst.r, &inst.c);
    let out = SolveOutput {
        instance_kind: inst.spec.kind_name().to_string(),
        n: inst.n(),
        algorithm: method.name().to_string(),
        eps: args.eps,
        eta: res.eta,
        eps_prime: res.eps_prime,
        iterations: res.trace.iterations(),
        status: res.trace.status.as_str().to_string(),
        final_cost: res.cost,
        final_d: d,
        generator: GENERATOR_NAME.to_string(),
        trace: trace_rows(&res.trace),
    };
    let body = serde_json::to_string_pretty(&out).map_err(|e| OtError::Parse {
        offset: 0,
        message: e.to_string(),
    })?;
    match &args.out {
        Some(path) => std::fs::write(path, body).map_err(|e| OtError::io(path.clone(), e))?,
        None => println!("{body}"),
    }
    Ok(())
}

fn cmd_gen(args: GenArgs) -> Result<(), OtError> {
    let spec = InstanceSpec::SyntheticPair {
        side: args.side,
        fg_fraction: args.fg,
        seed: args.seed,
    };
    let inst = ot_core::instances::build_instance(&spec)?;
    inst.save_json(&args.out)?;
    println!("wrote {} (n = {})", args.out.display(), inst.n());
    Ok(())
}

fn cmd_bench(args: BenchArgs) -> Result<(), OtError> {
    let body =
        std::fs::read_to_string(&args.config).map_err(|e| OtError::io(args.config.clone(), e))?;
    let config: BenchConfig = serde_json::from_str(&body).map_err(|e| OtError::Parse {
        offset: e.column(),
        message: format!("{}: {e}", args.config.display()),
    })?;
    let format: EmitFormat = args.format.parse()?;
    std::fs::create_dir_all(&args.out_dir).map_err(|e| OtError::io(args.out_dir.clone(), e))?;

    // incremental journal: one JSON line per finished cell
    let journal_path = args.out_dir.join("records.jsonl");
    let mut journal =
        std::fs::File::create(&journal_path).map_err(|e| OtError::io(journal_path.clone(), e))?;
    let cells = run_benchmark(&config, |cell| {
        let line = serde_json::to_string(&cell.record).map_err(|e| OtError::Parse {
            offset: 0,
            message: e.to_string(),
        })?;
        writeln!(journal, "{line}").map_err(|e| OtError::io(journal_path.clone(), e))
    })?;
    let written = emit_outputs(&cells, &args.out_dir, format, args.plotdata)?;
    for path in written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_oracle(args: OracleArgs) -> Result<(), OtError> {
    let inst = Instance::load_json(&args.input)?;
    let sol = exact_ot(&inst.cost, &inst.r, &inst.c)?;
    println!("{{\"n\": {}, \"value\": {}}}", inst.n(), sol.value);
    Ok(())
}

fn raw_series(
    inst: &Instance,
    method: Method,
    eta: f64,
    max_iter: Option<usize>,
) -> Result<Vec<SeriesPoint>, OtError> {
    let reg = RegularizedInstance::new(inst.cost.clone(), inst.r.clone(), inst.c.clone(), eta)?;
    let trace = match method {
        Method::Sinkhorn => sinkhorn(&reg, 1e-9, max_iter.unwrap_or(DEFAULT_MAX_COORD_ITERS))?.1,
        Method::Greenkhorn => {
            greenkhorn(&reg, 1e-9, max_iter.unwrap_or(DEFAULT_MAX_COORD_ITERS))?.1
        }
        Method::Apdamd => {
            let cons = ConstraintOperator::for_instance(&reg);
            let mirror = ScaledSqEuclidean::standard(reg.n());
            apdamd(
                &reg,
                &cons,
                &mirror,
                1e-9,
                max_iter.unwrap_or(DEFAULT_MAX_ACCEL_ITERS),
            )?
            .trace
        }
        Method::Apdagd => {
            let cons = ConstraintOperator::for_instance(&reg);
            apdagd(
                &reg,
                &cons,
                1e-9,
                max_iter.unwrap_or(DEFAULT_MAX_ACCEL_ITERS),
            )?
            .trace
        }
    };
    let scale = update_scale(method, inst.n());
    Ok(trace
        .records
        .iter()
        .map(|r| SeriesPoint {
            update_count: r.iter * scale,
            d: r.residual,
        })
        .collect())
}

fn cmd_compare(args: CompareArgs) -> Result<(), OtError> {
    let method_a: Method = args.method_a.parse()?;
    let method_b: Method = args.method_b.parse()?;
    let inst = Instance::load_json(&args.input)?;
    let series_a = raw_series(&inst, method_a, args.eta, args.max_iter)?;
    let series_b = raw_series(&inst, method_b, args.eta, args.max_iter)?;
    let mut cmp = ComparisonSeries::new();
    cmp.add_aligned(&series_a, &series_b);
    let Some(stats) = cmp.stats() else {
        return Err(OtError::Domain(
            "no matched update counts with positive distances; increase --max-iter".into(),
        ));
    };
    // final-iterate ratio as a convenience headline
    let last = series_a
        .last()
        .zip(series_b.last())
        .and_then(|(a, b)| competitive_ratio(a.d, b.d).ok());
    println!(
        "{{\"method_a\": \"{}\", \"method_b\": \"{}\", \"eta\": {}, \"ratio_min\": {}, \
         \"ratio_median\": {}, \"ratio_max\": {}, \"count\": {}, \"final_ratio\": {}}}",
        method_a,
        method_b,
        args.eta,
        stats.min,
        stats.median,
        stats.max,
        stats.count,
        last.map(|x| x.to_string()).unwrap_or_else(|| "null".into()),
    );
    Ok(())
}

fn exit_code_for(err: &OtError) -> u8 {
    match err {
        OtError::Io { .. } => 3,
        OtError::Overflow { .. } | OtError::SolverFailed { .. } => 2,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = err.print();
            return ExitCode::from(code);
        }
    };
    let result = match cli.command {
        Command::Solve(args) => cmd_solve(args),
        Command::Gen(args) => cmd_gen(args),
        Command::Bench(args) => cmd_bench(args),
        Command::Oracle(args) => cmd_oracle(args),
        Command::Compare(args) => cmd_compare(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
