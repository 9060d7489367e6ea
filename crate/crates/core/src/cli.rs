//! The `jntm` command line: preprocess, synth, stats, train, gradcheck, eval, bench.
//!
//! Exit codes: 0 success, 1 failed check or diverged run, 2 usage, config or
//! input error. Stdout carries one summary line; data goes to files.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::data::{
    build_dataset, correlation_report, filter_dataset_with, make_splits, parse_checkins, parse_edges, read_dataset,
    write_dataset, Dataset, FilterMode, SplitConfig, Thresholds,
};
use crate::error::{Error, Result};
use crate::eval::{
    eval_friend_rec, eval_next_location, next_location_counts, write_reports_csv, EvalReport, EvalTarget, Mode, Slice,
};
use crate::gradcheck::{check_all, toy_config, toy_dataset, GradCheckOptions};
use crate::model::{read_checkpoint, VariantMask};
use crate::rng::{self, Stream};
use crate::synth::{generate_records, write_tsv, SynthConfig};
use crate::train::{
    init_params, network_pass, train, trajectory_pass, write_log_csv, OptimizerState, TrainConfig,
};

#[derive(Debug, Parser)]
#[command(name = "jntm", version, about = "Joint network and trajectory model for location-based social networks")]
pub struct Cli {
    /// Worker threads; results do not depend on this.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and filter raw check-in and edge dumps into a dataset cache.
    Preprocess(PreprocessArgs),
    /// Generate a synthetic dataset with planted communities.
    Synth(SynthArgs),
    /// Dataset statistics and friend/trajectory correlation analysis.
    Stats(StatsArgs),
    /// Train a model and write the best checkpoint.
    Train(TrainArgs),
    /// Compare analytic gradients with finite differences on a toy.
    Gradcheck(GradcheckArgs),
    /// Recall@K for next-location and friend recommendation.
    Eval(EvalArgs),
    /// Time training iterations.
    Bench(BenchArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Preset {
    Gowalla,
    Brightkite,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Variant {
    Full,
    Base,
    BaseLong,
}

impl From<Variant> for VariantMask {
    fn from(v: Variant) -> Self {
        match v {
            Variant::Full => VariantMask::FULL,
            Variant::Base => VariantMask::BASE,
            Variant::BaseLong => VariantMask::BASE_LONG,
        }
    }
}

#[derive(Debug, Args)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub checkins: PathBuf,
    #[arg(long)]
    pub edges: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Threshold preset; individual thresholds override it.
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub min_user_checkins: Option<usize>,
    #[arg(long)]
    pub min_location_checkins: Option<usize>,
    /// Repeat the filter until nothing changes.
    #[arg(long)]
    pub fixpoint: bool,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub subtrajectories_per_user: Option<usize>,
    #[arg(long)]
    pub users_per_community: Option<usize>,
    /// Also write check-in TSV here.
    #[arg(long, requires = "edges_out")]
    pub checkins_out: Option<PathBuf>,
    /// Also write edge TSV here.
    #[arg(long, requires = "checkins_out")]
    pub edges_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Correlation report JSON.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    pub pairs: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[derive(Debug, Args)]
pub struct TrainOverrides {
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub dim: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<usize>,
    #[arg(long)]
    pub batch_users: Option<usize>,
    #[arg(long)]
    pub n1: Option<usize>,
    #[arg(long)]
    pub n2: Option<usize>,
    #[arg(long)]
    pub patience: Option<usize>,
    #[arg(long, value_enum)]
    pub variant: Option<Variant>,
    /// Write 0 in the log's seconds column.
    #[arg(long)]
    pub no_wall_time: bool,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    pub out: PathBuf,
    /// Per-epoch CSV; defaults to the checkpoint path with `.log.csv`.
    #[arg(long)]
    pub log: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

#[derive(Debug, Args)]
pub struct GradcheckArgs {
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// CSV report.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Report CSV; defaults to the model path with `.eval.csv`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Seed of the train/test split; must match training.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Cutoffs for next-location recall.
    #[arg(long, value_delimiter = ',')]
    pub ks: Option<Vec<usize>>,
    /// Cutoffs for friend recall.
    #[arg(long, value_delimiter = ',')]
    pub friend_ks: Option<Vec<usize>>,
    /// Per-user next-location counts as JSON.
    #[arg(long)]
    pub per_user: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long)]
    pub data: PathBuf,
    /// Timing CSV.
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub iterations: usize,
    #[command(flatten)]
    pub overrides: TrainOverrides,
}

/// Thresholds and filter mode for `preprocess`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PreprocessConfig {
    pub min_user_checkins: usize,
    pub min_location_checkins: usize,
    pub filter_mode: FilterMode,
}

impl Default for PreprocessConfig {
    fn default() -> Self {
        let t = Thresholds::BRIGHTKITE;
        PreprocessConfig {
            min_user_checkins: t.min_user_checkins,
            min_location_checkins: t.min_location_checkins,
            filter_mode: FilterMode::SinglePass,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalConfig {
    pub ks: Vec<usize>,
    pub friend_ks: Vec<usize>,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig { ks: vec![1, 5, 10], friend_ks: vec![5, 10] }
    }
}

/// The JSON config document; each command reads its own sections.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub preprocess: PreprocessConfig,
    pub synth: SynthConfig,
    pub split: SplitConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
    pub gradcheck: GradCheckOptions,
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else { return Ok(RunConfig::default()) };
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let msg = e.into_inner().to_string();
            let key = match path.as_str() {
                "." => msg.split('`').nth(1).unwrap_or("config").to_owned(),
                p => p.to_owned(),
            };
            Error::Config { key, msg }
        })
    }

    /// One seed drives every stream.
    pub fn set_seed(&mut self, seed: u64) {
        self.synth.seed = seed;
        self.split.seed = seed;
        self.train.seed = seed;
        self.gradcheck.seed = seed;
    }

    fn apply_train_overrides(&mut self, o: &TrainOverrides) {
        if let Some(seed) = o.seed {
            self.set_seed(seed);
        }
        let t = &mut self.train;
        if let Some(v) = o.dim {
            t.dim = v;
        }
        if let Some(v) = o.learning_rate {
            t.learning_rate = v;
        }
        if let Some(v) = o.max_iterations {
            t.max_iterations = v;
        }
        if let Some(v) = o.batch_users {
            t.batch_users = v;
        }
        if let Some(v) = o.n1 {
            t.n1_per_user = v;
        }
        if let Some(v) = o.n2 {
            t.n2 = v;
        }
        if let Some(v) = o.patience {
            t.patience = v;
        }
        if let Some(v) = o.variant {
            t.variant = v.into();
        }
        if o.no_wall_time {
            t.record_wall_time = false;
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I, out: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.threads {
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli.command)),
            Err(e) => Err(Error::config("threads", e.to_string())),
        },
        None => dispatch(cli.command),
    };
    match result {
        Ok((line, code)) => {
            let _ = writeln!(out, "{line}");
            code
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFiniteGradient { .. } | Error::NonFiniteLoss(_) => 1,
        Error::Io { .. } | Error::Parse { .. } | Error::Format(_) | Error::Config { .. } | Error::Shape(_) => 2,
    }
}

fn dispatch(command: Command) -> Result<(String, i32)> {
    let line = match command {
        Command::Preprocess(a) => cmd_preprocess(&a)?,
        Command::Synth(a) => cmd_synth(&a)?,
        Command::Stats(a) => cmd_stats(&a)?,
        Command::Train(a) => cmd_train(&a)?,
        Command::Eval(a) => cmd_eval(&a)?,
        Command::Bench(a) => cmd_bench(&a)?,
        Command::Gradcheck(a) => {
            let (line, pass) = cmd_gradcheck(&a)?;
            return Ok((line, if pass { 0 } else { 1 }));
        }
    };
    Ok((line, 0))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

pub fn cmd_preprocess(a: &PreprocessArgs) -> Result<String> {
    let mut cfg = RunConfig::load(a.config.as_deref())?.preprocess;
    if let Some(p) = a.preset {
        let t = match p {
            Preset::Gowalla => Thresholds::GOWALLA,
            Preset::Brightkite => Thresholds::BRIGHTKITE,
        };
        cfg.min_user_checkins = t.min_user_checkins;
        cfg.min_location_checkins = t.min_location_checkins;
    }
    if let Some(v) = a.min_user_checkins {
        cfg.min_user_checkins = v;
    }
    if let Some(v) = a.min_location_checkins {
        cfg.min_location_checkins = v;
    }
    if a.fixpoint {
        cfg.filter_mode = FilterMode::Fixpoint;
    }
    let checkins = parse_checkins(&a.checkins)?;
    let edges = parse_edges(&a.edges)?;
    let thresholds = Thresholds {
        min_user_checkins: cfg.min_user_checkins,
        min_location_checkins: cfg.min_location_checkins,
    };
    let (checkins, edges) = filter_dataset_with(&checkins, &edges, thresholds, cfg.filter_mode);
    let dataset = build_dataset(&checkins, &edges);
    write_dataset(&a.out, &dataset)?;
    Ok(dataset.stats().to_string())
}

pub fn cmd_synth(a: &SynthArgs) -> Result<String> {
    let mut run = RunConfig::load(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        run.set_seed(seed);
    }
    if let Some(v) = a.subtrajectories_per_user {
        run.synth.subtrajectories_per_user = v;
    }
    if let Some(v) = a.users_per_community {
        run.synth.users_per_community = v;
    }
    run.synth.validate()?;
    let records = generate_records(&run.synth);
    if let (Some(c), Some(e)) = (&a.checkins_out, &a.edges_out) {
        write_tsv(&records, c, e)?;
    }
    let dataset = build_dataset(&records.checkins, &records.edges);
    write_dataset(&a.out, &dataset)?;
    Ok(dataset.stats().to_string())
}

pub fn cmd_stats(a: &StatsArgs) -> Result<String> {
    let dataset = read_dataset(&a.data)?;
    let report = correlation_report(&dataset, a.pairs, a.seed);
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    let fmt = |v: Option<f64>| v.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.4}"));
    Ok(format!(
        "{} friend_overlap={} non_friend_overlap={}",
        dataset.stats(),
        fmt(report.friend_mean_overlap),
        fmt(report.non_friend_mean_overlap)
    ))
}

pub fn cmd_train(a: &TrainArgs) -> Result<String> {
    let mut run = RunConfig::load(a.overrides.config.as_deref())?;
    run.apply_train_overrides(&a.overrides);
    run.split.validate()?;
    run.train.validate()?;
    let dataset = read_dataset(&a.data)?;
    let splits = make_splits(&dataset, &run.split);
    let outcome = train(&dataset, &splits, &run.train, Some(&a.out))?;
    let log_path = a.log.clone().unwrap_or_else(|| a.out.with_extension("log.csv"));
    write_log_csv(&log_path, &outcome.log)?;
    let best = outcome
        .best_epoch
        .and_then(|e| outcome.log.iter().find(|r| r.epoch == e))
        .and_then(|r| r.val_recall5);
    Ok(format!(
        "epochs={} best_epoch={} val_recall5={}",
        outcome.log.len(),
        outcome.best_epoch.map_or_else(|| "none".to_owned(), |e| e.to_string()),
        best.map_or_else(|| "n/a".to_owned(), |v| format!("{v:.4}"))
    ))
}

/// Returns the summary line and whether every tensor passed.
pub fn cmd_gradcheck(a: &GradcheckArgs) -> Result<(String, bool)> {
    let run = RunConfig::load(a.config.as_deref())?;
    let opts = GradCheckOptions { seed: a.seed, ..run.gradcheck };
    let report = check_all(&toy_dataset(a.seed), &toy_config(a.seed), &opts)?;
    if let Some(path) = &a.out {
        report.write_csv(path)?;
    }
    if !report.pass {
        eprint!("{}", report.to_text());
    }
    let worst = report.tensors.iter().map(|t| t.max_rel).fold(0.0, f64::max);
    let failing: Vec<&str> = report.failing().map(|t| t.tensor.name()).collect();
    let line = if report.pass {
        format!("gradcheck seed={} pass max_rel={worst:.3e}", a.seed)
    } else {
        format!("gradcheck seed={} FAIL tensors={}", a.seed, failing.join(","))
    };
    Ok((line, report.pass))
}

pub fn cmd_eval(a: &EvalArgs) -> Result<String> {
    let mut run = RunConfig::load(a.config.as_deref())?;
    if let Some(seed) = a.seed {
        run.set_seed(seed);
    }
    run.split.validate()?;
    let ks = a.ks.clone().unwrap_or(run.eval.ks);
    let friend_ks = a.friend_ks.clone().unwrap_or(run.eval.friend_ks);
    if ks.iter().chain(&friend_ks).any(|&k| k == 0) {
        return Err(Error::config("ks", "cutoffs must be at least 1"));
    }
    let ckpt = read_checkpoint(&a.model)?;
    let dataset = read_dataset(&a.data)?;
    if ckpt.users != dataset.users || ckpt.locations != dataset.locations {
        return Err(Error::Shape(format!(
            "model {} and dataset {} index different users or locations",
            a.model.display(),
            a.data.display()
        )));
    }
    let splits = make_splits(&dataset, &run.split);
    let (params, mask) = (&ckpt.params, ckpt.mask);

    let mut reports: Vec<EvalReport> = Vec::new();
    for slice in [Slice::All, Slice::ColdStart] {
        for mode in [Mode::General, Mode::NewOnly] {
            reports.push(eval_next_location(params, mask, &dataset, &splits, &ks, mode, slice));
        }
    }
    for slice in [Slice::All, Slice::LowDegree] {
        reports.push(eval_friend_rec(params, &dataset, &splits, &friend_ks, slice));
    }
    let out = a.out.clone().unwrap_or_else(|| a.model.with_extension("eval.csv"));
    write_reports_csv(&out, &reports)?;
    if let Some(path) = &a.per_user {
        let counts =
            next_location_counts(params, mask, &dataset, &splits, EvalTarget::Test, &ks, Mode::General, Slice::All);
        write_json(path, &serde_json::json!({ "ks": ks, "users": counts }))?;
    }

    let mut line = String::new();
    let first = |r: &EvalReport, k: usize| r.recall(k).map_or_else(|| "n/a".to_owned(), |v| format!("{v:.4}"));
    if let Some(&k) = ks.iter().find(|&&k| k == 5).or(ks.first()) {
        let _ = write!(line, "next_location_recall@{k}={} ", first(&reports[0], k));
    }
    if let Some(&k) = friend_ks.iter().find(|&&k| k == 10).or(friend_ks.last()) {
        let _ = write!(line, "friend_recall@{k}={} ", first(&reports[4], k));
    }
    let _ = write!(line, "report={}", out.display());
    Ok(line)
}

pub const BENCH_HEADER: &str =
    "iteration,network_seconds,trajectory_seconds,checkins,seconds_per_checkin,peak_rss_kb";

/// Peak resident set size of this process in KiB, where the platform reports it.
pub fn peak_rss_kb() -> Option<u64> {
    let status = std::fs::read_to_string("/proc/self/status").ok()?;
    let line = status.lines().find(|l| l.starts_with("VmHWM:"))?;
    line.split_whitespace().nth(1)?.parse().ok()
}

/// One timed network pass and trajectory pass per row.
#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub iteration: usize,
    pub network_seconds: f64,
    pub trajectory_seconds: f64,
    pub checkins: usize,
    pub peak_rss_kb: Option<u64>,
}

impl BenchRow {
    pub fn seconds_per_checkin(&self) -> f64 {
        self.trajectory_seconds / self.checkins as f64
    }
}

/// Runs `iterations` training epochs and times each pass; no rows for a
/// dataset without check-ins.
pub fn bench(dataset: &Dataset, split: &SplitConfig, config: &TrainConfig, iterations: usize) -> Result<Vec<BenchRow>> {
    config.validate()?;
    let checkins = dataset.num_checkins();
    if checkins == 0 {
        return Ok(Vec::new());
    }
    let splits = make_splits(dataset, split);
    let graph = splits.train_graph(dataset.num_users());
    let mut params = init_params(config, dataset.num_users(), dataset.num_locations());
    let mut optimizer = OptimizerState::new(&params);
    let mut link_rng = rng::stream(config.seed, Stream::LinkNegatives);
    let mut loc_rng = rng::stream(config.seed, Stream::LocationNegatives);
    let users: Vec<usize> = (0..dataset.num_users()).collect();
    let mut rows = Vec::with_capacity(iterations);
    for iteration in 1..=iterations {
        let t = Instant::now();
        network_pass(&mut params, &mut optimizer, &graph, &users, config, &mut link_rng)?;
        let network_seconds = t.elapsed().as_secs_f64();
        let t = Instant::now();
        trajectory_pass(&mut params, &mut optimizer, dataset, &splits, &users, config, &mut loc_rng)?;
        let trajectory_seconds = t.elapsed().as_secs_f64();
        rows.push(BenchRow { iteration, network_seconds, trajectory_seconds, checkins, peak_rss_kb: peak_rss_kb() });
    }
    Ok(rows)
}

pub fn format_bench(rows: &[BenchRow]) -> String {
    let mut out = String::from(BENCH_HEADER);
    out.push('\n');
    for r in rows {
        let rss = r.peak_rss_kb.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(
            out,
            "{},{:.6},{:.6},{},{:.9},{}",
            r.iteration,
            r.network_seconds,
            r.trajectory_seconds,
            r.checkins,
            r.seconds_per_checkin(),
            rss
        );
    }
    out
}

pub fn cmd_bench(a: &BenchArgs) -> Result<String> {
    let mut run = RunConfig::load(a.overrides.config.as_deref())?;
    run.apply_train_overrides(&a.overrides);
    run.split.validate()?;
    let dataset = read_dataset(&a.data)?;
    let rows = bench(&dataset, &run.split, &run.train, a.iterations)?;
    std::fs::write(&a.out, format_bench(&rows)).map_err(|e| Error::io(&a.out, e))?;
    let mean = |f: fn(&BenchRow) -> f64| {
        if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(f).sum::<f64>() / rows.len() as f64
        }
    };
    Ok(format!(
        "rows={} network_seconds={:.4} trajectory_seconds={:.4} seconds_per_checkin={:.3e}",
        rows.len(),
        mean(|r| r.network_seconds),
        mean(|r| r.trajectory_seconds),
        mean(BenchRow::seconds_per_checkin)
    ))
}
