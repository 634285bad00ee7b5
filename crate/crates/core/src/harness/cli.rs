//! Command-line interface.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Deserialize;

use super::{read_results, run_adaptive, write_results_to, ExperimentConfig, RunResult};
use crate::acquisition::Strategy;
use crate::benchmarks::{list_benchmarks, BenchmarkFilter, BenchmarkFunction};
use crate::error::{Error, Result};
use crate::metrics::{aggregate, fmt_sig10, write_rank_table_csv, write_summary_csv};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "adaptive-sampling", version, about = "Adaptive sampling experiments on analytic benchmarks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run one function with one strategy for several repetitions.
    Run(RunArgs),
    /// Run every strategy on every benchmark of one dimension.
    Suite(SuiteArgs),
    /// Aggregate result files into a per-run summary and a rank table.
    Report(ReportArgs),
    /// List benchmark functions and strategies.
    List(ListArgs),
}

/// Settings shared by `run` and `suite`; every field can also come from the
/// `--config` file.
#[derive(Debug, Default, Clone, Args)]
struct Common {
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    m_init: Option<usize>,
    #[arg(long)]
    m_max: Option<usize>,
    #[arg(long)]
    m_cand: Option<usize>,
    #[arg(long)]
    m_test: Option<usize>,
    #[arg(long)]
    refit_every: Option<usize>,
    /// Store wall-clock fit and proposal times in the result file.
    #[arg(long)]
    record_timing: bool,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct RunArgs {
    #[arg(long)]
    function: Option<String>,
    /// Dimension for dimension-generic functions (e.g. `rosenbrock --dim 4`).
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    strategy: Option<String>,
    /// TOML file with the same keys as the flags; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct SuiteArgs {
    #[arg(long)]
    dim: Option<usize>,
    /// Restrict to these strategies (repeatable); all by default.
    #[arg(long)]
    strategy: Vec<String>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[command(flatten)]
    common: Common,
}

#[derive(Debug, Args)]
struct ReportArgs {
    /// Result files written by `run` or `suite`.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Per-run summary CSV (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Per-strategy mean ranks CSV.
    #[arg(long)]
    ranks: Option<PathBuf>,
    /// Median learning curves and bin IQDs CSV.
    #[arg(long)]
    curves: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct ListArgs {
    #[arg(long)]
    dim: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
struct FileConfig {
    function: Option<String>,
    dim: Option<usize>,
    strategy: Option<StrategyList>,
    reps: Option<usize>,
    seed: Option<u64>,
    m_init: Option<usize>,
    m_max: Option<usize>,
    m_cand: Option<usize>,
    m_test: Option<usize>,
    refit_every: Option<usize>,
    #[serde(default)]
    record_timing: bool,
    out: Option<PathBuf>,
}

impl FileConfig {
    fn common(&self) -> Common {
        Common {
            reps: self.reps,
            seed: self.seed,
            m_init: self.m_init,
            m_max: self.m_max,
            m_cand: self.m_cand,
            m_test: self.m_test,
            refit_every: self.refit_every,
            record_timing: self.record_timing,
            out: self.out.clone(),
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(untagged)]
enum StrategyList {
    One(String),
    Many(Vec<String>),
}

impl StrategyList {
    fn into_vec(self) -> Vec<String> {
        match self {
            StrategyList::One(s) => vec![s],
            StrategyList::Many(v) => v,
        }
    }
}

/// Failure with the exit code it maps to.
struct Failure {
    code: i32,
    error: Error,
}

fn usage(error: Error) -> Failure {
    Failure {
        code: EXIT_USAGE,
        error,
    }
}

fn runtime(error: Error) -> Failure {
    Failure {
        code: EXIT_FAILURE,
        error,
    }
}

fn load_file_config(path: Option<&Path>) -> Result<FileConfig> {
    let Some(path) = path else {
        return Ok(FileConfig::default());
    };
    let text = std::fs::read_to_string(path)?;
    toml::from_str(&text).map_err(|e| Error::Parse {
        line: e
            .span()
            .map_or(0, |s| text[..s.start].matches('\n').count() + 1),
        message: e.message().to_string(),
    })
}

fn merge(cli: &Common, file: &Common) -> Common {
    Common {
        reps: cli.reps.or(file.reps),
        seed: cli.seed.or(file.seed),
        m_init: cli.m_init.or(file.m_init),
        m_max: cli.m_max.or(file.m_max),
        m_cand: cli.m_cand.or(file.m_cand),
        m_test: cli.m_test.or(file.m_test),
        refit_every: cli.refit_every.or(file.refit_every),
        record_timing: cli.record_timing || file.record_timing,
        out: cli.out.clone().or_else(|| file.out.clone()),
    }
}

fn resolve_function(name: &str, dim: Option<usize>) -> Result<BenchmarkFunction> {
    match BenchmarkFunction::by_name(name) {
        Ok(f) => match dim {
            Some(d) if d != f.dim() => Err(Error::Argument(format!(
                "`{}` has dimension {}, not {d}",
                f.name(),
                f.dim()
            ))),
            _ => Ok(f),
        },
        Err(e) => match dim {
            Some(d) => BenchmarkFunction::by_name(&format!("{name}-{d}")).map_err(|_| e),
            None => Err(e),
        },
    }
}

fn build_config(function: &BenchmarkFunction, strategy: Strategy, c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = ExperimentConfig::new(&function.name(), strategy)?;
    cfg.reps = c.reps.unwrap_or(cfg.reps);
    cfg.seed = c.seed.unwrap_or(cfg.seed);
    cfg.m_init = c.m_init.unwrap_or(cfg.m_init);
    cfg.m_max = c.m_max.unwrap_or(cfg.m_max);
    cfg.m_cand = c.m_cand.unwrap_or(cfg.m_cand);
    cfg.m_test = c.m_test.unwrap_or(cfg.m_test);
    cfg.refit_every = c.refit_every.unwrap_or(cfg.refit_every);
    cfg.record_timing = c.record_timing;
    cfg.preflight()?;
    Ok(cfg)
}

fn output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(File::create(p)?),
        None => Box::new(io::stdout().lock()),
    })
}

fn execute(configs: &[ExperimentConfig], out: Option<&Path>) -> std::result::Result<(), Failure> {
    let mut sink = output(out).map_err(runtime)?;
    for cfg in configs {
        for rep in 0..cfg.reps {
            eprintln!("{} / {} / rep {rep}", cfg.function, cfg.strategy);
            let result: RunResult = run_adaptive(cfg, rep).map_err(runtime)?;
            // the area is undefined for single-step budgets
            let area = result.r2_area().map_or_else(|_| "n/a".into(), fmt_sig10);
            eprintln!("  best R2 {}  R2 area {area}", fmt_sig10(result.best_r2()));
            write_results_to(std::slice::from_ref(&result), &mut sink).map_err(runtime)?;
        }
    }
    Ok(())
}

fn cmd_run(args: RunArgs) -> std::result::Result<(), Failure> {
    let file = load_file_config(args.config.as_deref()).map_err(usage)?;
    let common = merge(&args.common, &file.common());
    let name = args
        .function
        .or(file.function)
        .ok_or_else(|| usage(Error::Argument("--function is required".into())))?;
    let strategy = match args.strategy {
        Some(s) => s,
        None => match file.strategy.map(StrategyList::into_vec) {
            Some(v) if v.len() == 1 => v[0].clone(),
            Some(_) => return Err(usage(Error::Argument("`run` takes a single strategy".into()))),
            None => return Err(usage(Error::Argument("--strategy is required".into()))),
        },
    };
    let strategy = Strategy::from_name(&strategy).map_err(usage)?;
    let f = resolve_function(&name, args.dim.or(file.dim)).map_err(usage)?;
    let cfg = build_config(&f, strategy, &common).map_err(usage)?;
    execute(&[cfg], common.out.as_deref())
}

fn cmd_suite(args: SuiteArgs) -> std::result::Result<(), Failure> {
    let file = load_file_config(args.config.as_deref()).map_err(usage)?;
    let common = merge(&args.common, &file.common());
    let dim = args
        .dim
        .or(file.dim)
        .ok_or_else(|| usage(Error::Argument("--dim is required".into())))?;
    let names = if args.strategy.is_empty() {
        file.strategy.map(StrategyList::into_vec).unwrap_or_default()
    } else {
        args.strategy
    };
    let strategies: Vec<Strategy> = if names.is_empty() {
        Strategy::ALL.to_vec()
    } else {
        names
            .iter()
            .map(|s| Strategy::from_name(s))
            .collect::<Result<_>>()
            .map_err(usage)?
    };
    let functions = list_benchmarks(&BenchmarkFilter::Dim(dim)).map_err(usage)?;
    if functions.is_empty() {
        return Err(usage(Error::Argument(format!("no benchmark suite for dimension {dim}"))));
    }
    let mut configs = Vec::new();
    for f in &functions {
        for s in &strategies {
            match build_config(f, *s, &common) {
                Ok(c) => configs.push(c),
                // strategies that cannot handle this dimension are skipped
                Err(Error::Incompatible { reason, .. }) => {
                    eprintln!("skipping {s} on {}: {reason}", f.name());
                }
                Err(e) => return Err(usage(e)),
            }
        }
    }
    execute(&configs, common.out.as_deref())
}

fn cmd_report(args: ReportArgs) -> std::result::Result<(), Failure> {
    let mut runs = Vec::new();
    for p in &args.inputs {
        runs.extend(read_results(p).map_err(runtime)?);
    }
    let scores: Vec<_> = runs.iter().map(RunResult::scores).collect();
    let summary = aggregate(&scores).map_err(runtime)?;
    write_summary_csv(&summary, output(args.out.as_deref()).map_err(runtime)?).map_err(runtime)?;
    if let Some(p) = &args.ranks {
        write_rank_table_csv(&summary, File::create(p).map_err(|e| runtime(e.into()))?).map_err(runtime)?;
    }
    if let Some(p) = &args.curves {
        let mut w = File::create(p).map_err(|e| runtime(e.into()))?;
        let mut text = String::from("function,strategy,kind,index,value\n");
        for c in &summary.curves {
            for (i, v) in c.median_curve.iter().enumerate() {
                text += &format!("{},{},median,{i},{}\n", c.function, c.strategy, fmt_sig10(*v));
            }
            for (i, v) in c.bin_iqd.iter().enumerate() {
                text += &format!("{},{},iqd,{i},{}\n", c.function, c.strategy, fmt_sig10(*v));
            }
        }
        w.write_all(text.as_bytes()).map_err(|e| runtime(e.into()))?;
    }
    Ok(())
}

fn cmd_list(args: ListArgs) -> std::result::Result<(), Failure> {
    let filter = args.dim.map_or(BenchmarkFilter::All, BenchmarkFilter::Dim);
    let functions = list_benchmarks(&filter).map_err(usage)?;
    let mut text = String::from("functions:\n");
    for f in functions {
        text += &format!("  {} (n = {})\n", f.name(), f.dim());
    }
    text += "strategies:\n";
    for s in Strategy::ALL {
        text += &format!("  {s}\n");
    }
    io::stdout()
        .write_all(text.as_bytes())
        .map_err(|e| runtime(e.into()))
}

/// Parse `argv` (including the program name), execute, and return the exit
/// code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    let outcome = match cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Suite(a) => cmd_suite(a),
        Command::Report(a) => cmd_report(a),
        Command::List(a) => cmd_list(a),
    };
    match outcome {
        Ok(()) => EXIT_OK,
        Err(f) => {
            eprintln!("error: {}", f.error);
            f.code
        }
    }
}
