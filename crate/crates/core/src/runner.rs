//! The optimization loop, deterministic execution, tracing, and persistence.
//!
//! One run owns all mutable state and is bit-reproducible from its seed: the
//! initial point, batch sampling, and the SOM-V1 interpolation draws come
//! from three independently derived sub-streams, so a variant that does not
//! consume one stream cannot perturb the others.

use std::fs;
use std::io::Write as _;
use std::path::Path;
use std::time::Instant;

use ndarray::Array1;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::momentum::{momentum_error_diagnostic, MarsAnchor, MomentumEngine, MomentumInit, VariantKind};
use crate::norms::{dual_norm, lmo, norm, NormKind};
use crate::problems::{
    parse_libsvm, sample_batch, Activation, Dataset, LogisticWelsch, MiniBatch, MlpArchitecture,
    MlpWelsch, Problem,
};
use crate::schedules::Schedule;
use crate::{Error, ParamVector, Result};

/// Environment variable naming the default directory for dataset paths.
pub const DATA_DIR_ENV: &str = "LMOPT_DATA_DIR";

pub const TRACE_HEADER: &str =
    "k,loss,grad_l2,grad_dual,mom_err,step_norm,runmin_loss,runmin_grad,wall_ms";

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "source")]
pub enum DataSource {
    /// libsvm text file; relative paths resolve against `LMOPT_DATA_DIR`.
    File { path: String },
    /// Reproducible Gaussian stand-in when no data file is available.
    Synthetic {
        n: usize,
        d: usize,
        #[serde(default = "default_label_noise")]
        label_noise: f64,
        #[serde(default = "default_data_seed")]
        data_seed: u64,
    },
}

fn default_label_noise() -> f64 {
    0.15
}

fn default_data_seed() -> u64 {
    2024
}

impl DataSource {
    pub fn load(&self) -> Result<Dataset> {
        match self {
            DataSource::File { path } => {
                let mut p = std::path::PathBuf::from(path);
                if p.is_relative() {
                    if let Ok(dir) = std::env::var(DATA_DIR_ENV) {
                        p = Path::new(&dir).join(&p);
                    }
                }
                let text =
                    fs::read_to_string(&p).map_err(|e| Error::io(p.display().to_string(), e))?;
                parse_libsvm(&text, None)
            }
            DataSource::Synthetic {
                n,
                d,
                label_noise,
                data_seed,
            } => {
                let mut rng = ChaCha12Rng::seed_from_u64(*data_seed);
                Ok(Dataset::synthesize(&mut rng, *n, *d, *label_noise))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "problem")]
pub enum ProblemSpec {
    Logreg {
        data: DataSource,
        lambda: f64,
    },
    Mlp {
        data: DataSource,
        lambda: f64,
        #[serde(default = "default_hidden")]
        hidden: Vec<usize>,
        #[serde(default = "default_activation")]
        activation: Activation,
    },
}

fn default_hidden() -> Vec<usize> {
    vec![32, 16]
}

fn default_activation() -> Activation {
    Activation::Tanh
}

pub enum BuiltProblem {
    Logreg(LogisticWelsch),
    Mlp(MlpWelsch),
}

impl Problem for BuiltProblem {
    fn dim(&self) -> usize {
        match self {
            BuiltProblem::Logreg(p) => p.dim(),
            BuiltProblem::Mlp(p) => p.dim(),
        }
    }

    fn n_samples(&self) -> usize {
        match self {
            BuiltProblem::Logreg(p) => p.n_samples(),
            BuiltProblem::Mlp(p) => p.n_samples(),
        }
    }

    fn value_grad(&self, x: &ParamVector, batch: &MiniBatch) -> Result<(f64, ParamVector)> {
        match self {
            BuiltProblem::Logreg(p) => p.value_grad(x, batch),
            BuiltProblem::Mlp(p) => p.value_grad(x, batch),
        }
    }

    fn hvp(&self, x: &ParamVector, v: &ParamVector, batch: &MiniBatch) -> Result<ParamVector> {
        match self {
            BuiltProblem::Logreg(p) => p.hvp(x, v, batch),
            BuiltProblem::Mlp(p) => p.hvp(x, v, batch),
        }
    }
}

impl ProblemSpec {
    pub fn build(&self) -> Result<BuiltProblem> {
        match self {
            ProblemSpec::Logreg { data, lambda } => {
                Ok(BuiltProblem::Logreg(LogisticWelsch::new(data.load()?, *lambda)))
            }
            ProblemSpec::Mlp {
                data,
                lambda,
                hidden,
                activation,
            } => {
                let ds = data.load()?;
                let arch = MlpArchitecture::new(ds.n_features(), hidden.clone(), *activation);
                Ok(BuiltProblem::Mlp(MlpWelsch::new(arch, ds, *lambda)?))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunConfig {
    #[serde(flatten)]
    pub problem: ProblemSpec,
    pub norm: NormKind,
    pub variant: VariantKind,
    #[serde(default)]
    pub mars_anchor: MarsAnchor,
    pub schedule: Schedule,
    pub batch_size: usize,
    pub iters: usize,
    pub seed: u64,
    /// Full-batch metrics every this many iterations.
    #[serde(default = "default_eval_every")]
    pub eval_every: usize,
    #[serde(default)]
    pub momentum_init: MomentumInit,
    /// Record real wall-clock per row. Off by default so trace files are
    /// byte-reproducible; the elapsed time is always reported on stderr.
    #[serde(default)]
    pub timing: bool,
    /// Use the full dataset at every oracle call instead of sampling.
    /// `batch_size` is ignored when set.
    #[serde(default)]
    pub full_batch: bool,
}

fn default_eval_every() -> usize {
    10
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.iters < 1 {
            return Err(Error::Config("iters must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.eval_every < 1 {
            return Err(Error::Config("eval_every must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub loss: f64,
    pub grad_l2: f64,
    pub grad_dual: f64,
    pub mom_err: f64,
    pub step_norm: f64,
    pub runmin_loss: f64,
    pub runmin_grad: f64,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trace {
    pub rows: Vec<TraceRow>,
}

impl Trace {
    pub fn final_runmin_loss(&self) -> Option<f64> {
        self.rows.last().map(|r| r.runmin_loss)
    }

    pub fn final_runmin_grad(&self) -> Option<f64> {
        self.rows.last().map(|r| r.runmin_grad)
    }
}

/// Derive independent sub-seeds from the run seed (splitmix64 over tagged input).
pub fn substream_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

const TAG_INIT: u64 = 1;
const TAG_BATCH: u64 = 2;
const TAG_B_DRAW: u64 = 3;

/// Standard-normal initial point from the run seed's init stream.
pub fn initial_point(seed: u64, dim: usize) -> ParamVector {
    let mut rng = ChaCha12Rng::seed_from_u64(substream_seed(seed, TAG_INIT));
    let normal = StandardNormal;
    Array1::from_vec((0..dim).map(|_| normal.sample(&mut rng)).collect())
}

pub struct RunOutcome {
    pub trace: Trace,
    pub final_x: ParamVector,
    pub diverged: Option<Error>,
}

/// Execute a run. On divergence the partial trace is returned alongside the
/// error instead of being thrown away.
pub fn run(config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let problem = config.problem.build()?;
    run_on(&problem, config)
}

/// Same as [`run`] but over an already-built problem (lets sweeps share data).
pub fn run_on<P: Problem>(problem: &P, config: &RunConfig) -> Result<RunOutcome> {
    config.validate()?;
    let d = problem.dim();
    let n = problem.n_samples();
    let start = Instant::now();

    let mut x = initial_point(config.seed, d);
    let mut batch_rng = ChaCha12Rng::seed_from_u64(substream_seed(config.seed, TAG_BATCH));
    let mut next_batch = || -> Result<MiniBatch> {
        if config.full_batch {
            Ok(MiniBatch::full(n))
        } else {
            sample_batch(&mut batch_rng, n, config.batch_size)
        }
    };

    let m0 = match config.momentum_init {
        MomentumInit::Gradient => {
            let batch = next_batch()?;
            problem.value_grad(&x, &batch)?.1
        }
        MomentumInit::Zero => Array1::zeros(d),
    };
    let mut engine = MomentumEngine::new(config.variant, m0, substream_seed(config.seed, TAG_B_DRAW));
    engine.mars_anchor = config.mars_anchor;

    let mut trace = Trace::default();
    let mut runmin_loss = f64::INFINITY;
    let mut runmin_grad = f64::INFINITY;
    let mut diverged = None;

    for k in 0..config.iters {
        let coeffs = config.schedule.coeffs_at(k)?;
        let step = lmo(config.norm, &engine.m, coeffs.eta)?;
        let x_prev = x.clone();
        x = &x + &step;
        if x.iter().any(|v| !v.is_finite()) {
            diverged = Some(Error::Divergence {
                k,
                what: "iterate became non-finite",
            });
            break;
        }
        let batch = next_batch()?;
        if let Err(e) = engine.update(problem, &batch, &coeffs, &x, &x_prev) {
            diverged = Some(e);
            break;
        }

        if k % config.eval_every == 0 || k + 1 == config.iters {
            let (loss, grad) = problem.full_value_grad(&x)?;
            let grad_l2 = grad.iter().map(|v| v * v).sum::<f64>().sqrt();
            let grad_dual = dual_norm(config.norm, &grad)?;
            let mom_err = momentum_error_diagnostic(problem, &engine.m, &x, config.norm)?;
            runmin_loss = runmin_loss.min(loss);
            runmin_grad = runmin_grad.min(grad_dual);
            trace.rows.push(TraceRow {
                k,
                loss,
                grad_l2,
                grad_dual,
                mom_err,
                step_norm: norm(config.norm, &step)?,
                runmin_loss,
                runmin_grad,
                wall_ms: if config.timing {
                    start.elapsed().as_secs_f64() * 1e3
                } else {
                    0.0
                },
            });
        }
    }

    Ok(RunOutcome {
        trace,
        final_x: x,
        diverged,
    })
}

/// 17 significant digits: exact f64 round-trip, stable across platforms.
fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn trace_to_csv(trace: &Trace) -> String {
    let mut out = String::from(TRACE_HEADER);
    out.push('\n');
    for r in &trace.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.k,
            fmt_f64(r.loss),
            fmt_f64(r.grad_l2),
            fmt_f64(r.grad_dual),
            fmt_f64(r.mom_err),
            fmt_f64(r.step_norm),
            fmt_f64(r.runmin_loss),
            fmt_f64(r.runmin_grad),
            fmt_f64(r.wall_ms),
        ));
    }
    out
}

/// Write the trace CSV plus a `<path>.json` sidecar with the resolved config.
pub fn write_trace(trace: &Trace, config: &RunConfig, path: &Path) -> Result<()> {
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(trace_to_csv(trace).as_bytes())
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    let sidecar = sidecar_path(path);
    let json = serde_json::to_string_pretty(config)
        .map_err(|e| Error::Config(format!("cannot serialize config: {e}")))?;
    fs::write(&sidecar, json).map_err(|e| Error::io(sidecar.display().to_string(), e))?;
    Ok(())
}

pub fn sidecar_path(path: &Path) -> std::path::PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".json");
    std::path::PathBuf::from(s)
}

pub fn parse_trace_csv(text: &str) -> Result<Trace> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRACE_HEADER => {}
        Some(h) => {
            return Err(Error::TraceFormat(format!(
                "header mismatch: expected {TRACE_HEADER:?}, got {h:?}"
            )))
        }
        None => return Err(Error::TraceFormat("empty trace".into())),
    }
    let mut rows = Vec::new();
    for (i, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 9 {
            return Err(Error::TraceFormat(format!(
                "row {}: expected 9 fields, got {}",
                i + 2,
                fields.len()
            )));
        }
        let pf = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::TraceFormat(format!("row {}: bad float {s:?}", i + 2)))
        };
        rows.push(TraceRow {
            k: fields[0]
                .parse()
                .map_err(|_| Error::TraceFormat(format!("row {}: bad index", i + 2)))?,
            loss: pf(fields[1])?,
            grad_l2: pf(fields[2])?,
            grad_dual: pf(fields[3])?,
            mom_err: pf(fields[4])?,
            step_norm: pf(fields[5])?,
            runmin_loss: pf(fields[6])?,
            runmin_grad: pf(fields[7])?,
            wall_ms: pf(fields[8])?,
        });
    }
    Ok(Trace { rows })
}

/// Read a trace; a missing sidecar is a warning, not an error.
pub fn read_trace(path: &Path) -> Result<Trace> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    if !sidecar_path(path).exists() {
        eprintln!("warning: missing config sidecar for {}", path.display());
    }
    parse_trace_csv(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CompareMetric {
    Loss,
    Grad,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareEntry {
    pub label: String,
    pub final_runmin: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CompareSummary {
    pub metric: CompareMetric,
    pub entries: Vec<CompareEntry>,
    /// (winner, loser) pairs by final running minimum.
    pub orderings: Vec<(String, String)>,
}

/// Tabulate >= 2 traces over a common iteration grid.
pub fn compare_runs(traces: &[(String, Trace)], metric: CompareMetric) -> Result<CompareSummary> {
    if traces.len() < 2 {
        return Err(Error::Config("compare needs at least two traces".into()));
    }
    let grid: Vec<usize> = traces[0].1.rows.iter().map(|r| r.k).collect();
    for (label, t) in traces {
        let g: Vec<usize> = t.rows.iter().map(|r| r.k).collect();
        if g != grid {
            return Err(Error::Config(format!(
                "trace {label:?} has a different iteration grid"
            )));
        }
    }
    let pick = |r: &TraceRow| match metric {
        CompareMetric::Loss => (r.runmin_loss, r.loss),
        CompareMetric::Grad => (r.runmin_grad, r.grad_dual),
    };
    let mut entries = Vec::new();
    for (label, t) in traces {
        let final_runmin = pick(t.rows.last().expect("nonempty trace")).0;
        // trapezoid over the k grid of the raw metric
        let mut auc = 0.0;
        for w in t.rows.windows(2) {
            let dk = (w[1].k - w[0].k) as f64;
            auc += 0.5 * dk * (pick(&w[0]).1 + pick(&w[1]).1);
        }
        entries.push(CompareEntry {
            label: label.clone(),
            final_runmin,
            auc,
        });
    }
    let mut orderings = Vec::new();
    for i in 0..entries.len() {
        for j in 0..entries.len() {
            if i != j && entries[i].final_runmin <= entries[j].final_runmin {
                orderings.push((entries[i].label.clone(), entries[j].label.clone()));
            }
        }
    }
    Ok(CompareSummary {
        metric,
        entries,
        orderings,
    })
}
