//! The `distal` command line.
//!
//! Every subcommand reads JSON / JSONL files and writes one JSON document (or
//! JSONL stream) to `--output` (atomically) or stdout. Diagnostics go to
//! stderr as one JSON object per line.
//!
//! `--config FILE` supplies defaults for any flag. Top-level keys are global
//! flags or flags of the invoked subcommand; a nested object named after a
//! subcommand holds flags for that subcommand only. Flags given on the
//! command line win.

use std::collections::HashMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::active::{
    predictions_by_id, run_simulation, select, EmbeddingRecord, EmbeddingTable, MarginMode, Pool, ReplayDir,
    Schedule, ScheduleMode, Strategy, StrategyConfig,
};
use crate::align::{align, check_token_cap, project_teacher_logits, AlignmentMap, DEFAULT_MAX_TOKENS};
use crate::error::{Error, Result};
use crate::formats::{
    index_by_id, pair_tokens, read_answer_predictions, read_logits, read_scores, AlignmentRecord, GoldRecord,
    LogitsRecord, ScoreMetric, TokenPair, TokenRecord,
};
use crate::io;
use crate::loss::{combined_loss, DistillConfig, LossBreakdown, ResampleDirection, DEFAULT_RHO, DEFAULT_TEMPERATURE};
use crate::metrics::{evaluate, MissingPolicy};
use crate::qa_data::{load_squad, QADataset};
use crate::resample::Method;
use crate::stats::{ceil_fraction, paired_bootstrap, sample_eval_subset, DeltaSample, DEFAULT_ALPHA, DEFAULT_RESAMPLES};

#[derive(Debug, Parser, Serialize)]
#[command(name = "distal", version, about = "Distillation and active-learning toolkit for extractive QA")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args, Serialize)]
pub struct GlobalArgs {
    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// JSON file with default flag values
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Fail on missing records instead of skipping / scoring them as zero
    #[arg(long, global = true, conflicts_with = "lenient")]
    pub strict: bool,
    /// Skip or zero-score missing records (default)
    #[arg(long, global = true)]
    pub lenient: bool,
    /// Output file (written atomically); stdout when absent
    #[arg(long, global = true)]
    pub output: Option<PathBuf>,
    /// Worker threads for per-example stages; output order never depends on it
    #[arg(long, global = true, default_value_t = 1)]
    pub threads: usize,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "subcommand", rename_all = "lowercase")]
pub enum Command {
    /// Align student and teacher tokenizations; optionally project teacher logits
    Align(AlignArgs),
    /// Resample logit vectors to a new length
    Resample(ResampleArgs),
    /// Score the distillation loss per context
    Loss(LossArgs),
    /// Exact match / F1 of answer predictions against a SQuAD file
    Evaluate(EvaluateArgs),
    /// Choose the next ids to label from a pool snapshot
    Select(SelectArgs),
    /// Replay a multi-cycle active-learning run from per-cycle prediction files
    Simulate(SimulateArgs),
    /// Paired bootstrap test between two systems' per-example scores
    Bootstrap(BootstrapArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct AlignArgs {
    /// tokens.jsonl with one student and one teacher record per id
    #[arg(long)]
    pub tokens: PathBuf,
    /// Teacher logits.jsonl; when given, emit teacher logits at student positions
    #[arg(long)]
    pub teacher_logits: Option<PathBuf>,
    /// Reject sequences longer than this many tokens
    #[arg(long, default_value_t = DEFAULT_MAX_TOKENS)]
    pub max_tokens: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ResampleArgs {
    /// Input logits.jsonl
    #[arg(long)]
    pub logits: PathBuf,
    /// Fixed output length
    #[arg(long, conflicts_with = "like", required_unless_present = "like")]
    pub target_len: Option<usize>,
    /// logits.jsonl whose per-id lengths are the targets
    #[arg(long)]
    pub like: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Method::Cubic)]
    pub method: Method,
}

#[derive(Debug, Args, Serialize)]
pub struct LossArgs {
    /// Student logits.jsonl
    #[arg(long)]
    pub student: PathBuf,
    /// Teacher logits.jsonl (teacher tokenization)
    #[arg(long)]
    pub teacher: PathBuf,
    /// tokens.jsonl; without it student and teacher lengths must agree
    #[arg(long)]
    pub tokens: Option<PathBuf>,
    /// Gold spans in student token indices: {"id", "start", "end"} per line
    #[arg(long)]
    pub gold: PathBuf,
    /// Weight of the soft term
    #[arg(long, default_value_t = DEFAULT_RHO)]
    pub rho: f64,
    #[arg(long, default_value_t = DEFAULT_TEMPERATURE)]
    pub temperature: f64,
    /// Add the MSE term between resampled student and teacher logits
    #[arg(long)]
    pub interpolate: bool,
    #[arg(long, default_value_t = 1.0)]
    pub mse_weight: f64,
    #[arg(long, value_enum, default_value_t = Method::Cubic)]
    pub method: Method,
    #[arg(long, value_enum, default_value_t = ResampleDirection::StudentToTeacher)]
    pub direction: ResampleDirection,
    /// Compute the soft term on the resampled pair instead of the aligned pair
    #[arg(long)]
    pub interpolated_soft: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ReportFormat {
    Json,
    Text,
}

#[derive(Debug, Args, Serialize)]
pub struct EvaluateArgs {
    /// SQuAD v1.1 JSON file
    #[arg(long)]
    pub dataset: PathBuf,
    /// {id: answer} JSON map or predictions.jsonl (top candidate used)
    #[arg(long)]
    pub predictions: PathBuf,
    /// Also write per-example {id: {"em", "f1"}} scores here
    #[arg(long)]
    pub per_example: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ReportFormat::Json)]
    pub format: ReportFormat,
}

#[derive(Debug, Args, Serialize)]
pub struct StrategyArgs {
    #[arg(long, value_enum, default_value_t = Strategy::Lc)]
    pub strategy: Strategy,
    /// Candidates considered by the entropy strategy
    #[arg(long, default_value_t = 5)]
    pub top_n: usize,
    /// Clusters for lc_cluster (clipped to the candidate count)
    #[arg(long, default_value_t = 10)]
    pub k_clusters: usize,
    /// lc_cluster preselects oversample * budget ids
    #[arg(long, default_value_t = 3)]
    pub oversample: usize,
    #[arg(long, value_enum, default_value_t = MarginMode::PaperLiteral)]
    pub margin_mode: MarginMode,
    /// Renormalize the top-n probabilities before computing entropy
    #[arg(long)]
    pub renormalize_entropy: bool,
    /// embeddings.jsonl, required by lc_cluster
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct SelectArgs {
    /// Pool snapshot {"cycle", "labeled", "unlabeled"}
    #[arg(long, required_unless_present = "dataset")]
    pub pool: Option<PathBuf>,
    /// Start from a fresh pool holding every question of this SQuAD file
    #[arg(long, conflicts_with = "pool")]
    pub dataset: Option<PathBuf>,
    /// predictions.jsonl for the unlabeled ids
    #[arg(long)]
    pub preds: Option<PathBuf>,
    /// Number of ids to select
    #[arg(long, required_unless_present = "schedule")]
    pub budget: Option<usize>,
    /// Cumulative labeled fractions; the budget reaches entry [cycle]
    #[arg(long, value_delimiter = ',', conflicts_with = "budget")]
    pub schedule: Option<Vec<f64>>,
    #[command(flatten)]
    pub strategy: StrategyArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    /// SQuAD v1.1 JSON file providing the pool ids
    #[arg(long)]
    pub dataset: PathBuf,
    /// Directory with cycle_<n>.jsonl prediction files
    #[arg(long)]
    pub preds_dir: Option<PathBuf>,
    /// Cumulative fractions, or [initial, step] with --schedule-mode fraction_of_remaining
    #[arg(long, value_delimiter = ',', default_value = "0.01,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1.0")]
    pub schedule: Vec<f64>,
    #[arg(long, value_enum, default_value_t = ScheduleMode::Cumulative)]
    pub schedule_mode: ScheduleMode,
    #[command(flatten)]
    pub strategy: StrategyArgs,
}

#[derive(Debug, Args, Serialize)]
pub struct BootstrapArgs {
    /// Per-example scores of system A (the candidate improvement)
    #[arg(long)]
    pub system_a: PathBuf,
    /// Per-example scores of system B (the baseline)
    #[arg(long)]
    pub system_b: PathBuf,
    #[arg(long, value_enum, default_value_t = ScoreMetric::Em)]
    pub metric: ScoreMetric,
    /// Share of the shared ids sampled for the test
    #[arg(long, default_value_t = 0.1)]
    pub fraction: f64,
    /// Number of bootstrap resamples
    #[arg(long = "B", default_value_t = DEFAULT_RESAMPLES)]
    pub resamples: usize,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
}

const SUBCOMMANDS: [&str; 7] = ["align", "resample", "loss", "evaluate", "select", "simulate", "bootstrap"];

/// Emits one JSON log line on stderr.
pub fn log_event(level: &str, event: &str, fields: Value) {
    let mut obj = json!({ "level": level, "event": event });
    if let (Value::Object(dst), Value::Object(src)) = (&mut obj, fields) {
        dst.extend(src);
    }
    eprintln!("{obj}");
}

fn flag_args(key: &str, value: &Value) -> Result<Vec<String>> {
    let flag = format!("--{}", key.replace('_', "-"));
    Ok(match value {
        Value::Bool(true) => vec![flag],
        Value::Bool(false) | Value::Null => vec![],
        Value::Number(n) => vec![flag, n.to_string()],
        Value::String(s) => vec![flag, s.clone()],
        Value::Array(items) => {
            let parts: Vec<String> = items
                .iter()
                .map(|v| match v {
                    Value::String(s) => s.clone(),
                    other => other.to_string(),
                })
                .collect();
            vec![flag, parts.join(",")]
        }
        Value::Object(_) => {
            return Err(Error::argument(format!("config key `{key}` must not be an object")));
        }
    })
}

/// Appends config-file values for every flag not already on the command line.
fn merge_config(argv: Vec<OsString>) -> Result<Vec<OsString>> {
    let strs: Vec<String> = argv.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let config_path = strs
        .iter()
        .enumerate()
        .find_map(|(i, a)| match a.strip_prefix("--config") {
            Some("") => strs.get(i + 1).cloned(),
            Some(rest) => rest.strip_prefix('=').map(str::to_string),
            None => None,
        });
    let Some(config_path) = config_path else {
        return Ok(argv);
    };
    let config: serde_json::Map<String, Value> = io::read_json(Path::new(&config_path))?;
    let subcommand = strs.iter().skip(1).find(|a| SUBCOMMANDS.contains(&a.as_str())).cloned();
    let present = |key: &str| {
        let flag = format!("--{}", key.replace('_', "-"));
        let with_eq = format!("{flag}=");
        strs.iter().any(|a| *a == flag || a.starts_with(&with_eq))
    };

    let mut entries: Vec<(String, Value)> = Vec::new();
    for (key, value) in &config {
        match value {
            Value::Object(section) if SUBCOMMANDS.contains(&key.as_str()) => {
                if subcommand.as_deref() == Some(key.as_str()) {
                    entries.extend(section.iter().map(|(k, v)| (k.clone(), v.clone())));
                }
            }
            _ if key == "config" => {}
            _ => entries.push((key.clone(), value.clone())),
        }
    }
    let mut out = argv;
    for (key, value) in entries {
        if !present(&key) {
            out.extend(flag_args(&key, &value)?.into_iter().map(OsString::from));
        }
    }
    Ok(out)
}

fn emit(output: Option<&Path>, content: &str) -> Result<()> {
    match output {
        Some(path) => io::write_atomic(path, content.as_bytes()),
        None => {
            use std::io::Write;
            let mut stdout = std::io::stdout().lock();
            stdout
                .write_all(content.as_bytes())
                .map_err(|e| Error::io("<stdout>", e))
        }
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("output serializes to JSON");
    s.push('\n');
    s
}

fn thread_pool(threads: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads.max(1))
        .build()
        .map_err(|e| Error::argument(format!("cannot start worker pool: {e}")))
}

/// Runs the CLI and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString>,
{
    let argv: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let argv = match merge_config(argv) {
        Ok(a) => a,
        Err(e) => return fail(&e),
    };
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    log_event("info", "config", serde_json::to_value(&cli).unwrap_or(Value::Null));
    match dispatch(&cli) {
        Ok(()) => 0,
        Err(e) => fail(&e),
    }
}

fn fail(e: &Error) -> i32 {
    log_event("error", "failed", json!({ "message": e.to_string() }));
    e.exit_code()
}

fn dispatch(cli: &Cli) -> Result<()> {
    let g = &cli.global;
    let out = g.output.as_deref();
    let content = match &cli.command {
        Command::Align(a) => cmd_align(g, a)?,
        Command::Resample(a) => cmd_resample(g, a)?,
        Command::Loss(a) => cmd_loss(g, a)?,
        Command::Evaluate(a) => cmd_evaluate(g, a)?,
        Command::Select(a) => cmd_select(g, a)?,
        Command::Simulate(a) => cmd_simulate(g, a)?,
        Command::Bootstrap(a) => cmd_bootstrap(g, a)?,
    };
    emit(out, &content)
}

fn align_pair(pair: &TokenPair, max_tokens: usize) -> Result<AlignmentMap> {
    check_token_cap(&pair.student, max_tokens)?;
    check_token_cap(&pair.teacher, max_tokens)?;
    align(&pair.student, &pair.teacher).map_err(|e| Error::Validation {
        id: pair.id.clone(),
        message: e.to_string(),
    })
}

fn cmd_align(g: &GlobalArgs, a: &AlignArgs) -> Result<String> {
    let pairs = pair_tokens(io::read_jsonl::<TokenRecord>(&a.tokens)?)?;
    let teacher = match &a.teacher_logits {
        Some(path) => Some(index_by_id(read_logits(path)?, |r| &r.id)?),
        None => None,
    };
    let pool = thread_pool(g.threads)?;
    let results: Vec<Result<Option<String>>> = pool.install(|| {
        pairs
            .par_iter()
            .map(|pair| {
                let map = align_pair(pair, a.max_tokens)?;
                let line = match &teacher {
                    None => serde_json::to_string(&AlignmentRecord {
                        id: pair.id.clone(),
                        mapping: map.mapping,
                        leader: map.leader,
                        teacher_len: map.teacher_len,
                    }),
                    Some(t) => {
                        let Some(rec) = t.get(&pair.id) else {
                            return missing(g, "teacher logits", &pair.id);
                        };
                        let logits = rec.to_span()?;
                        if logits.len() != map.teacher_len {
                            return Err(Error::Validation {
                                id: pair.id.clone(),
                                message: format!(
                                    "teacher logits have length {}, teacher tokens {}",
                                    logits.len(),
                                    map.teacher_len
                                ),
                            });
                        }
                        let projected = project_teacher_logits(&map, &logits)?;
                        serde_json::to_string(&LogitsRecord::from_span(&pair.id, &projected))
                    }
                };
                Ok(Some(line.expect("record serializes")))
            })
            .collect()
    });
    collect_lines(results)
}

fn missing(g: &GlobalArgs, what: &'static str, id: &str) -> Result<Option<String>> {
    if g.strict {
        Err(Error::Missing { what, id: id.to_string() })
    } else {
        log_event("warn", "skipped", json!({ "id": id, "missing": what }));
        Ok(None)
    }
}

fn collect_lines(results: Vec<Result<Option<String>>>) -> Result<String> {
    let mut out = String::new();
    for line in results {
        if let Some(line) = line? {
            out.push_str(&line);
            out.push('\n');
        }
    }
    Ok(out)
}

fn cmd_resample(g: &GlobalArgs, a: &ResampleArgs) -> Result<String> {
    let records = read_logits(&a.logits)?;
    let like = match &a.like {
        Some(path) => Some(index_by_id(read_logits(path)?, |r| &r.id)?),
        None => None,
    };
    let pool = thread_pool(g.threads)?;
    let results: Vec<Result<Option<String>>> = pool.install(|| {
        records
            .par_iter()
            .map(|rec| {
                let target = match (&like, a.target_len) {
                    (_, Some(n)) => n,
                    (Some(like), None) => match like.get(&rec.id) {
                        Some(r) => r.start.len(),
                        None => return missing(g, "target logits", &rec.id),
                    },
                    (None, None) => return Err(Error::argument("either --target-len or --like is required")),
                };
                let out = rec.to_span()?.resampled(target, a.method)?;
                Ok(Some(serde_json::to_string(&LogitsRecord::from_span(&rec.id, &out)).expect("record serializes")))
            })
            .collect()
    });
    collect_lines(results)
}

#[derive(Debug, Serialize)]
struct LossRow {
    id: String,
    #[serde(flatten)]
    loss: LossBreakdown,
}

fn cmd_loss(g: &GlobalArgs, a: &LossArgs) -> Result<String> {
    let cfg = DistillConfig {
        rho: a.rho,
        temperature: a.temperature,
        mse_weight: a.mse_weight,
        use_interpolation: a.interpolate,
        method: a.method,
        direction: a.direction,
        interpolated_soft: a.interpolated_soft,
    };
    cfg.validate()?;
    let students = read_logits(&a.student)?;
    let teachers = index_by_id(read_logits(&a.teacher)?, |r| &r.id)?;
    let golds = index_by_id(io::read_jsonl::<GoldRecord>(&a.gold)?, |r| &r.id)?;
    let tokens = match &a.tokens {
        Some(path) => {
            let pairs = pair_tokens(io::read_jsonl(path)?)?;
            Some(pairs.into_iter().map(|p| (p.id.clone(), p)).collect::<HashMap<_, _>>())
        }
        None => None,
    };

    let pool = thread_pool(g.threads)?;
    let rows: Vec<Result<Option<LossRow>>> = pool.install(|| {
        students
            .par_iter()
            .map(|srec| {
                let id = srec.id.as_str();
                let (Some(trec), Some(gold)) = (teachers.get(id), golds.get(id)) else {
                    let what = if teachers.contains_key(id) { "gold span" } else { "teacher logits" };
                    return missing(g, what, id).map(|_| None);
                };
                let student = srec.to_span()?;
                let teacher_full = trec.to_span()?;
                let map = match &tokens {
                    Some(tokens) => match tokens.get(id) {
                        Some(pair) => align_pair(pair, usize::MAX)?,
                        None => return missing(g, "tokens", id).map(|_| None),
                    },
                    None => AlignmentMap::identity(teacher_full.len()),
                };
                if map.len() != student.len() || map.teacher_len != teacher_full.len() {
                    return Err(Error::Validation {
                        id: id.to_string(),
                        message: format!(
                            "logit lengths (student {}, teacher {}) disagree with token counts (student {}, teacher {})",
                            student.len(),
                            teacher_full.len(),
                            map.len(),
                            map.teacher_len
                        ),
                    });
                }
                let teacher_aligned = project_teacher_logits(&map, &teacher_full)?;
                let loss = combined_loss(&student, &teacher_aligned, &teacher_full, gold.span()?, &cfg).map_err(
                    |e| Error::Validation {
                        id: id.to_string(),
                        message: e.to_string(),
                    },
                )?;
                Ok(Some(LossRow { id: id.to_string(), loss }))
            })
            .collect()
    });
    let rows: Vec<LossRow> = rows.into_iter().filter_map(Result::transpose).collect::<Result<_>>()?;

    let n = rows.len();
    let mean = |f: fn(&LossBreakdown) -> f64| {
        if n == 0 {
            0.0
        } else {
            rows.iter().map(|r| f(&r.loss)).sum::<f64>() / n as f64
        }
    };
    let summary = json!({
        "records": rows,
        "count": n,
        "mean": {
            "hard": mean(|l| l.hard),
            "soft": mean(|l| l.soft),
            "mse": mean(|l| l.mse),
            "total": mean(|l| l.total),
        },
        "config": cfg,
    });
    Ok(to_json(&summary))
}

fn cmd_evaluate(g: &GlobalArgs, a: &EvaluateArgs) -> Result<String> {
    let dataset = load_squad(&a.dataset)?;
    let preds = read_answer_predictions(&a.predictions)?;
    let policy = if g.strict { MissingPolicy::Strict } else { MissingPolicy::Lenient };
    let mut report = evaluate(&dataset, &preds, policy)?;
    if !report.unknown_ids.is_empty() {
        log_event(
            "warn",
            "unknown_prediction_ids",
            json!({ "count": report.unknown_ids.len(), "ids": report.unknown_ids }),
        );
    }
    let missing = dataset.questions().filter(|q| !preds.contains_key(&q.id)).count();
    if missing > 0 {
        log_event("warn", "missing_predictions", json!({ "count": missing }));
    }
    if let Some(path) = &a.per_example {
        io::write_atomic(path, to_json(&report.per_example).as_bytes())?;
    }
    report.per_example.clear();
    Ok(match a.format {
        ReportFormat::Json => to_json(&json!({ "exact_match": report.exact_match, "f1": report.f1 })),
        ReportFormat::Text => format!(
            "exact_match: {:.2}\nf1: {:.2}\ncount: {}\n",
            report.exact_match, report.f1, report.count
        ),
    })
}

fn strategy_config(g: &GlobalArgs, s: &StrategyArgs) -> StrategyConfig {
    StrategyConfig {
        strategy: s.strategy,
        top_n: s.top_n,
        k_clusters: s.k_clusters,
        oversample_factor: s.oversample,
        margin_mode: s.margin_mode,
        renormalize_entropy: s.renormalize_entropy,
        seed: g.seed,
        lenient: !g.strict,
        ..Default::default()
    }
}

fn load_embeddings(s: &StrategyArgs) -> Result<Option<EmbeddingTable>> {
    match &s.embeddings {
        Some(path) => Ok(Some(EmbeddingTable::new(io::read_jsonl::<EmbeddingRecord>(path)?)?)),
        None => Ok(None),
    }
}

fn dataset_ids(path: &Path) -> Result<Vec<String>> {
    let ds: QADataset = load_squad(path)?;
    Ok(ds.ids())
}

fn cmd_select(g: &GlobalArgs, a: &SelectArgs) -> Result<String> {
    let mut pool = match (&a.pool, &a.dataset) {
        (Some(path), _) => {
            let pool: Pool = io::read_json(path)?;
            pool.validate()?;
            pool
        }
        (None, Some(path)) => Pool::new(dataset_ids(path)?)?,
        (None, None) => return Err(Error::argument("either --pool or --dataset is required")),
    };
    let cfg = strategy_config(g, &a.strategy);
    let budget = match (a.budget, &a.schedule) {
        (Some(b), _) => b,
        (None, Some(schedule)) => {
            let Some(&fraction) = schedule.get(pool.cycle) else {
                return Err(Error::argument(format!(
                    "schedule has no entry for cycle {} ({} entries)",
                    pool.cycle,
                    schedule.len()
                )));
            };
            let target = ceil_fraction(fraction.min(1.0), pool.len());
            target.saturating_sub(pool.labeled.len()).max(1)
        }
        (None, None) => return Err(Error::argument("either --budget or --schedule is required")),
    };
    let preds = match &a.preds {
        Some(path) => predictions_by_id(io::read_jsonl(path)?)?,
        None if cfg.strategy == Strategy::Random => HashMap::new(),
        None => return Err(Error::argument("--preds is required for non-random strategies")),
    };
    let embeddings = load_embeddings(&a.strategy)?;
    let selection = select(&pool, &preds, &cfg, budget, embeddings.as_ref())?;
    if !selection.unscored.is_empty() {
        log_event(
            "warn",
            "unscored_ids",
            json!({ "count": selection.unscored.len(), "ids": selection.unscored }),
        );
    }
    let cycle = pool.cycle;
    pool.label(&selection.ids)?;
    Ok(to_json(&json!({
        "cycle": cycle,
        "budget": budget,
        "selected": selection.ids,
        "pool": pool,
    })))
}

fn cmd_simulate(g: &GlobalArgs, a: &SimulateArgs) -> Result<String> {
    let ids = dataset_ids(&a.dataset)?;
    let cfg = strategy_config(g, &a.strategy);
    let schedule = Schedule {
        mode: a.schedule_mode,
        fractions: a.schedule.clone(),
    };
    let embeddings = load_embeddings(&a.strategy)?;
    let mut source = match &a.preds_dir {
        Some(dir) => ReplayDir::new(dir),
        None if cfg.strategy == Strategy::Random => ReplayDir::new("."),
        None => return Err(Error::argument("--preds-dir is required for non-random strategies")),
    };
    let report = run_simulation(&ids, &schedule, &mut source, &cfg, embeddings.as_ref())?;
    for w in &report.warnings {
        log_event("warn", "simulation", json!({ "message": w }));
    }
    Ok(to_json(&report))
}

fn cmd_bootstrap(g: &GlobalArgs, a: &BootstrapArgs) -> Result<String> {
    let scores_a = read_scores(&a.system_a, a.metric)?;
    let scores_b = read_scores(&a.system_b, a.metric)?;
    let mut shared = Vec::new();
    for id in scores_a.keys() {
        if scores_b.contains_key(id) {
            shared.push(id.clone());
        } else if g.strict {
            return Err(Error::Missing { what: "system B score", id: id.clone() });
        }
    }
    if let Some(id) = scores_b.keys().find(|id| !scores_a.contains_key(*id)) {
        if g.strict {
            return Err(Error::Missing { what: "system A score", id: id.clone() });
        }
    }
    let subset = sample_eval_subset(&shared, a.fraction, g.seed)?;
    let delta = DeltaSample::new(subset.iter().map(|id| scores_a[id] - scores_b[id]).collect())?;
    let result = paired_bootstrap(&delta, a.resamples, g.seed, a.alpha)?;
    Ok(to_json(&result))
}
