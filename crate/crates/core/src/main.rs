//! `lmopt` command line: run benchmarks, compare traces, verify oracles.
//!
//! Exit codes: 0 success, 2 configuration error, 3 divergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use lmopt::momentum::{MarsAnchor, VariantKind};
use lmopt::norms::{NormEquivConstants, NormKind};
use lmopt::problems::{Activation, Problem};
use lmopt::runner::{
    compare_runs, read_trace, run, trace_to_csv, write_trace, CompareMetric, DataSource,
    ProblemSpec, RunConfig,
};
use lmopt::schedules::{BetaRule, Schedule, ScheduleKind, SmoothnessConfig};
use lmopt::Error;

#[derive(Parser)]
#[command(name = "lmopt", version, about = "LMO-based stochastic optimizers with momentum")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute one optimization run and write its trace.
    Run(RunArgs),
    /// Tabulate final running minima and AUC across trace files.
    Compare(CompareArgs),
    /// Run the verification battery and print a JSON report.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum CliProblem {
    Logreg,
    Mlp,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliNorm {
    L2,
    Linf,
    L1,
}

impl From<CliNorm> for NormKind {
    fn from(n: CliNorm) -> Self {
        match n {
            CliNorm::L2 => NormKind::Euclidean,
            CliNorm::Linf => NormKind::LInf,
            CliNorm::L1 => NormKind::L1,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum CliVariant {
    Polyak,
    Igt,
    Mars,
    Storm,
    SomV1,
    SomV2,
}

#[derive(Clone, Copy, ValueEnum)]
enum CliSchedule {
    PolyakExp,
    IgtExp,
    SomExp,
    TheoremSomV1,
    TheoremSomV2,
    TheoremIgt,
    TheoremMvr,
}

#[derive(Args)]
struct RunArgs {
    /// JSON run-config file; overrides every other flag.
    #[arg(long)]
    config: Option<PathBuf>,

    #[arg(long, value_enum, default_value = "logreg")]
    problem: CliProblem,
    /// libsvm data file; omit to use a reproducible synthetic dataset.
    #[arg(long)]
    data: Option<String>,
    /// Synthetic dataset shape when --data is absent.
    #[arg(long, default_value_t = 1000)]
    synth_n: usize,
    #[arg(long, default_value_t = 60)]
    synth_d: usize,
    #[arg(long, default_value_t = 0.01)]
    lambda: f64,
    #[arg(long, value_delimiter = ',', default_values_t = [32usize, 16])]
    hidden: Vec<usize>,

    #[arg(long, value_enum, default_value = "l2")]
    norm: CliNorm,
    #[arg(long, value_enum, default_value = "polyak")]
    variant: CliVariant,
    /// MARS anchor point: new (analyzed form) or old (literal published form).
    #[arg(long, default_value = "new")]
    mars_anchor: String,
    #[arg(long, value_enum, default_value = "polyak-exp")]
    schedule: CliSchedule,
    #[arg(long, default_value_t = 0.1)]
    eta0: f64,
    /// "auto" for beta = 1 - alpha, or a constant in [0, 1].
    #[arg(long, default_value = "auto")]
    beta: String,
    /// Smoothness constants for the theorem schedules.
    #[arg(long, default_value_t = 0.0)]
    l0: f64,
    #[arg(long, default_value_t = 0.0)]
    l1: f64,
    #[arg(long, default_value_t = 0.0)]
    m0: f64,
    #[arg(long, default_value_t = 0.0)]
    m1: f64,
    #[arg(long, default_value_t = 0.0)]
    cal_l1: f64,

    #[arg(long, default_value_t = 16)]
    batch: usize,
    #[arg(long, default_value_t = 1000)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    eval_every: usize,
    /// Record real per-row wall time (makes trace files nondeterministic).
    #[arg(long)]
    timing: bool,
    /// Use the full dataset at every oracle call (ignores --batch).
    #[arg(long)]
    full_batch: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    #[arg(long, default_value = "loss")]
    metric: String,
    /// Two or more trace CSV files.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    #[arg(long, default_value_t = 7)]
    seed: u64,
}

fn build_config(a: &RunArgs) -> Result<RunConfig, Error> {
    if let Some(path) = &a.config {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
        return serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())));
    }

    let data = match &a.data {
        Some(path) => DataSource::File { path: path.clone() },
        None => DataSource::Synthetic {
            n: a.synth_n,
            d: a.synth_d,
            label_noise: 0.15,
            data_seed: 2024,
        },
    };
    let problem = match a.problem {
        CliProblem::Logreg => ProblemSpec::Logreg { data, lambda: a.lambda },
        CliProblem::Mlp => ProblemSpec::Mlp {
            data,
            lambda: a.lambda,
            hidden: a.hidden.clone(),
            activation: Activation::Tanh,
        },
    };
    let norm: NormKind = a.norm.into();

    let beta_rule = if a.beta == "auto" {
        BetaRule::OneMinusAlpha
    } else {
        let c: f64 = a
            .beta
            .parse()
            .map_err(|_| Error::Config(format!("bad --beta {:?}", a.beta)))?;
        BetaRule::Constant(c)
    };

    let (variant, mars_anchor, beta_rule) = match a.variant {
        CliVariant::Polyak => (VariantKind::Polyak, MarsAnchor::New, beta_rule),
        CliVariant::Igt => (VariantKind::Igt, MarsAnchor::New, beta_rule),
        CliVariant::Mars => {
            let anchor = match a.mars_anchor.as_str() {
                "new" => MarsAnchor::New,
                "old" => MarsAnchor::Old,
                other => return Err(Error::Config(format!("bad --mars-anchor {other:?}"))),
            };
            (VariantKind::Mars, anchor, beta_rule)
        }
        // STORM is MARS with beta = 1 - alpha and the anchor at the new iterate
        CliVariant::Storm => (VariantKind::Mars, MarsAnchor::New, BetaRule::OneMinusAlpha),
        CliVariant::SomV1 => (VariantKind::SomV1, MarsAnchor::New, beta_rule),
        CliVariant::SomV2 => (VariantKind::SomV2, MarsAnchor::New, beta_rule),
    };

    let theorem_kind = |kind: ScheduleKind| -> Result<Schedule, Error> {
        // norm-equivalence constants need the problem dimension
        let dim = problem.build()?.dim();
        let smoothness = SmoothnessConfig {
            l0: a.l0,
            l1: a.l1,
            m0: a.m0,
            m1: a.m1,
            cal_l0: 0.0,
            cal_l1: a.cal_l1,
            sigma_g: 0.0,
            sigma_h: 0.0,
            norm_equiv: NormEquivConstants::exact_for(norm, dim),
        };
        Ok(Schedule::theorem(kind, a.iters, smoothness, beta_rule))
    };

    let schedule = match a.schedule {
        CliSchedule::PolyakExp => {
            Schedule::experimental(ScheduleKind::PolyakExp { eta0: a.eta0 }, beta_rule)
        }
        CliSchedule::IgtExp => {
            Schedule::experimental(ScheduleKind::IgtExp { eta0: a.eta0 }, beta_rule)
        }
        CliSchedule::SomExp => {
            Schedule::experimental(ScheduleKind::SomExp { eta0: a.eta0 }, beta_rule)
        }
        CliSchedule::TheoremSomV1 => theorem_kind(ScheduleKind::TheoremSomV1)?,
        CliSchedule::TheoremSomV2 => theorem_kind(ScheduleKind::TheoremSomV2)?,
        CliSchedule::TheoremIgt => theorem_kind(ScheduleKind::TheoremIgt)?,
        CliSchedule::TheoremMvr => theorem_kind(ScheduleKind::TheoremMvr)?,
    };

    Ok(RunConfig {
        problem,
        norm,
        variant,
        mars_anchor,
        schedule,
        batch_size: a.batch,
        iters: a.iters,
        seed: a.seed,
        eval_every: a.eval_every,
        momentum_init: Default::default(),
        timing: a.timing,
        full_batch: a.full_batch,
    })
}

fn cmd_run(args: &RunArgs) -> Result<u8, Error> {
    let config = build_config(args)?;
    let outcome = run(&config)?;
    if let Some(path) = &args.out {
        write_trace(&outcome.trace, &config, path)?;
        eprintln!("trace written to {}", path.display());
    } else {
        print!("{}", trace_to_csv(&outcome.trace));
    }
    if let Some(last) = outcome.trace.rows.last() {
        eprintln!(
            "final: k={} loss={:.6e} runmin_loss={:.6e} runmin_grad={:.6e}",
            last.k, last.loss, last.runmin_loss, last.runmin_grad
        );
    }
    if let Some(err) = outcome.diverged {
        eprintln!("error: {err}");
        return Ok(3);
    }
    Ok(0)
}

fn cmd_compare(args: &CompareArgs) -> Result<u8, Error> {
    let metric = match args.metric.as_str() {
        "loss" => CompareMetric::Loss,
        "grad" => CompareMetric::Grad,
        other => return Err(Error::Config(format!("bad --metric {other:?}"))),
    };
    let mut traces = Vec::new();
    for path in &args.traces {
        let label = path
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| path.display().to_string());
        traces.push((label, read_trace(path)?));
    }
    let summary = compare_runs(&traces, metric)?;
    println!("{:<24} {:>16} {:>16}", "trace", "final_runmin", "auc");
    for e in &summary.entries {
        println!("{:<24} {:>16.8e} {:>16.8e}", e.label, e.final_runmin, e.auc);
    }
    Ok(0)
}

fn cmd_verify(args: &VerifyArgs) -> Result<u8, Error> {
    let report = lmopt::verify::run_verification(args.seed)?;
    println!("{}", serde_json::to_string_pretty(&report).expect("serializable report"));
    Ok(if report.passed { 0 } else { 1 })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Verify(a) => cmd_verify(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e @ Error::Divergence { .. }) => {
            eprintln!("error: {e}");
            ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
