//! Command-line front end: `simulate`, `train`, `detect`, `evaluate`.
//!
//! Every numeric option can also come from a TOML file passed with
//! `--config`; flags win over the file, the file wins over defaults.
//! `OUTBREAK_HMM_WORKERS` sets the size of the worker pool.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{build_report, compare_at_sensitivity, EvalReport, Method, ScoredWeek, DEFAULT_SIZE_EDGES};
use crate::hmm::{train, HmmModel, TrainConfig};
use crate::io::{self, BaselineScoreRow, Dataset, HmmScoreRow, ModelFile, TruthFile, TruthSeries};
use crate::pipeline::{
    group_name, random_groups, refit_blocks, rolling_baseline_all, rolling_hmm, RollingConfig,
};
use crate::series::{Label, SeriesGroup, SurveillanceSeries, WeekIndex, YearWeek};
use crate::simulate::{excess_cases, simulate_scenario, ScenarioMeans, ScenarioSpec};

pub const WORKERS_ENV: &str = "OUTBREAK_HMM_WORKERS";

#[derive(Debug, Parser)]
#[command(name = "outbreak-hmm", version, about = "Supervised HMM outbreak detection for weekly counts")]
pub struct Cli {
    /// TOML file with default option values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate benchmark scenarios to counts, labels and truth files.
    Simulate(SimulateArgs),
    /// Train one model per group at a given week.
    Train(TrainArgs),
    /// Score weeks with rolling retraining.
    Detect(DetectArgs),
    /// Compare HMM and baseline scores against labels.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Scenario ids, e.g. `1-14` or `1,5,9`.
    #[arg(long, default_value = "1-14")]
    pub scenarios: String,
    #[arg(long)]
    pub n_series: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub power: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    /// Calendar week of the first simulated week.
    #[arg(long, default_value = "2000-W01")]
    pub start_week: YearWeek,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// CSV `series_id,group_id`; overrides random grouping.
    #[arg(long)]
    pub group_map: Option<PathBuf>,
    #[arg(long)]
    pub n_groups: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Defaults to the last week in the data.
    #[arg(long)]
    pub current_week: Option<YearWeek>,
    #[arg(long)]
    pub window_years: Option<u32>,
    #[arg(long)]
    pub holdout_u: Option<u32>,
    #[arg(long)]
    pub pseudocount: Option<f64>,
    #[arg(long)]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Detector {
    Hmm,
    Baseline,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    #[arg(long, value_enum, default_value = "hmm")]
    pub detector: Detector,
    /// Directory written by `train` (HMM only).
    #[arg(long)]
    pub models: Option<PathBuf>,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub labels: Option<PathBuf>,
    /// First week scored; defaults to the last week in the data.
    #[arg(long)]
    pub from: Option<YearWeek>,
    /// Last week scored; defaults to the last week in the data.
    #[arg(long)]
    pub to: Option<YearWeek>,
    /// Posterior probability at which the HMM alarms.
    #[arg(long)]
    pub threshold: Option<f64>,
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long)]
    pub refit_every: Option<u32>,
    /// Baseline window; HMM windows come from the model files.
    #[arg(long)]
    pub window_years: Option<u32>,
    #[arg(long)]
    pub holdout_u: Option<u32>,
    /// Do not pin labeled weeks in the forward pass.
    #[arg(long)]
    pub no_clamp: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, required = true)]
    pub hmm_scores: Vec<PathBuf>,
    #[arg(long, required = true)]
    pub baseline_scores: Vec<PathBuf>,
    #[arg(long)]
    pub labels: Vec<PathBuf>,
    /// Truth files from `simulate`, for outbreak sizes.
    #[arg(long)]
    pub truth: Vec<PathBuf>,
    /// Also compare both detectors at this sensitivity.
    #[arg(long)]
    pub reference_sensitivity: Option<f64>,
    /// Report each series-id prefix (text before the first `_`) separately.
    #[arg(long)]
    pub by_prefix: bool,
    #[arg(long)]
    pub out_dir: PathBuf,
}

/// Keys accepted in the `--config` file.
#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub window_years: Option<u32>,
    pub holdout_u: Option<u32>,
    pub alpha: Option<f64>,
    pub threshold: Option<f64>,
    pub n_groups: Option<usize>,
    pub seed: Option<u64>,
    pub refit_every: Option<u32>,
    pub pseudocount: Option<f64>,
    pub n_series: Option<usize>,
    pub power: Option<f64>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text).map_err(|e| Error::Usage(format!("config {}: {e}", path.display())))
    }
}

fn pick<T>(flag: Option<T>, file: Option<T>, default: T) -> T {
    flag.or(file).unwrap_or(default)
}

/// Parse, run, and map the outcome to a process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: Cli) -> Result<()> {
    configure_workers()?;
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Simulate(a) => cmd_simulate(&a, &file),
        Command::Train(a) => cmd_train(&a, &file),
        Command::Detect(a) => cmd_detect(&a, &file),
        Command::Evaluate(a) => cmd_evaluate(&a, &file),
    }
}

fn configure_workers() -> Result<()> {
    let Ok(v) = std::env::var(WORKERS_ENV) else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| Error::Usage(format!("{WORKERS_ENV} must be a positive integer, got `{v}`")))?;
    // a pool may already exist when running in-process more than once
    let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    Ok(())
}

/// Parse `1-14`, `3`, or `1,5,9-11`.
pub fn parse_scenarios(s: &str) -> Result<Vec<u32>> {
    let bad = |p: &str| Error::Usage(format!("`{p}` is not a scenario id or range"));
    let mut out = BTreeSet::new();
    for part in s.split(',').map(str::trim) {
        let (a, b) = match part.split_once('-') {
            Some((a, b)) => (a.parse().map_err(|_| bad(part))?, b.parse().map_err(|_| bad(part))?),
            None => {
                let x = part.parse().map_err(|_| bad(part))?;
                (x, x)
            }
        };
        if a > b {
            return Err(bad(part));
        }
        for id in a..=b {
            ScenarioSpec::get(id)?;
            out.insert(id);
        }
    }
    Ok(out.into_iter().collect())
}

pub fn cmd_simulate(a: &SimulateArgs, file: &FileConfig) -> Result<()> {
    let ids = parse_scenarios(&a.scenarios)?;
    let n_series = pick(a.n_series, file.n_series, 100);
    let seed = pick(a.seed, file.seed, 42);
    let power = pick(a.power, file.power, crate::simulate::DEFAULT_POWER);
    let alpha = pick(a.alpha, file.alpha, crate::simulate::DEFAULT_ALPHA);
    if n_series == 0 {
        return Err(Error::Usage("n-series must be at least 1".into()));
    }
    if !(alpha > 0.0 && alpha < power && power < 1.0) {
        return Err(Error::Usage(format!("need 0 < alpha < power < 1, got alpha {alpha}, power {power}")));
    }
    let written: Vec<Vec<PathBuf>> = ids
        .par_iter()
        .map(|&id| {
            let spec = ScenarioSpec::get(id)?;
            let means = ScenarioMeans::with_calibration(&spec, power, alpha)?;
            let sims = simulate_scenario(&means, n_series, seed, a.start_week)?;
            let series: Vec<&SurveillanceSeries> = sims.iter().map(|s| &s.series).collect();
            let stem = a.out_dir.join(format!("scenario_{id:02}"));
            let paths = [
                stem.with_file_name(format!("scenario_{id:02}_counts.csv")),
                stem.with_file_name(format!("scenario_{id:02}_labels.csv")),
                stem.with_file_name(format!("scenario_{id:02}_truth.json")),
            ];
            io::write_counts(&paths[0], &series)?;
            io::write_labels(&paths[1], &series)?;
            let truth = TruthFile {
                schema: io::SCHEMA_VERSION,
                scenario: id,
                beta: spec.beta,
                phi: spec.phi,
                power,
                alpha,
                master_seed: seed,
                start_week: a.start_week,
                endemic_mean: means.endemic.clone(),
                outbreak_mean: means.outbreak.clone(),
                series: sims
                    .iter()
                    .map(|s| TruthSeries {
                        series_id: s.series.id().to_string(),
                        seed: s.seed,
                        a00: s.a00,
                        a11: s.a11,
                    })
                    .collect(),
            };
            io::write_json(&paths[2], &truth)?;
            Ok(paths.to_vec())
        })
        .collect::<Result<_>>()?;
    for p in written.iter().flatten() {
        println!("wrote {}", p.display());
    }
    Ok(())
}

fn require_labels(labels: &Option<PathBuf>, what: &str) -> Result<PathBuf> {
    labels
        .clone()
        .ok_or_else(|| Error::Usage(format!("{what} needs --labels (training is supervised)")))
}

fn has_outbreak_between(s: &SurveillanceSeries, lo: WeekIndex, hi: WeekIndex) -> bool {
    (lo.get()..=hi.get()).any(|t| WeekIndex::new(t).is_ok_and(|t| s.label_at(t) == Label::Outbreak))
}

/// Group assignment `(group_id, member indices)` in group-id order.
fn assign_groups(a: &TrainArgs, file: &FileConfig, data: &Dataset, cur: WeekIndex, cfg: &TrainConfig) -> Result<Vec<(String, Vec<usize>)>> {
    if let Some(path) = &a.group_map {
        let map: HashMap<String, String> = io::read_group_map(path)?.into_iter().collect();
        let mut groups: BTreeMap<String, Vec<usize>> = BTreeMap::new();
        let mut unmapped = Vec::new();
        for (i, s) in data.series.iter().enumerate() {
            match map.get(s.id()) {
                Some(g) => groups.entry(g.clone()).or_default().push(i),
                None => unmapped.push(s.id()),
            }
        }
        if !unmapped.is_empty() {
            return Err(Error::Data(format!("series without a group in {}: {}", path.display(), unmapped.join(", "))));
        }
        return Ok(groups.into_iter().collect());
    }
    let n_groups = pick(a.n_groups, file.n_groups, 20);
    let seed = pick(a.seed, file.seed, 42);
    let window = cfg.window_years * 52;
    let lo = cur.minus(window - 1);
    let hi = cur.minus(cfg.holdout_u);
    let members = random_groups(data.series.len(), n_groups, seed, |m| match (lo, hi) {
        (Some(lo), Some(hi)) => m.iter().any(|&i| has_outbreak_between(&data.series[i], lo, hi)),
        _ => true,
    })?;
    Ok(members.into_iter().enumerate().map(|(g, m)| (group_name(g), m)).collect())
}

pub fn cmd_train(a: &TrainArgs, file: &FileConfig) -> Result<()> {
    let labels = require_labels(&a.labels, "train")?;
    let cfg = TrainConfig {
        window_years: pick(a.window_years, file.window_years, 5),
        holdout_u: pick(a.holdout_u, file.holdout_u, 26),
        pseudocount: pick(a.pseudocount, file.pseudocount, 0.0),
    };
    if cfg.window_years == 0 || !(cfg.pseudocount >= 0.0) {
        return Err(Error::Usage("window-years must be >= 1 and pseudocount >= 0".into()));
    }
    let data = io::load_dataset(&a.data, Some(&labels))?;
    let cur = data.week_index(a.current_week.unwrap_or_else(|| data.last_week()))?;
    let groups = assign_groups(a, file, &data, cur, &cfg)?;
    let models: Vec<HmmModel> = groups
        .par_iter()
        .map(|(gid, m)| {
            let g = SeriesGroup::new(gid.clone(), m.iter().map(|&i| data.series[i].clone()).collect())?;
            train(&g, cur, &cfg)
        })
        .collect::<Result<_>>()?;
    let mut map = Vec::new();
    for (gid, m) in &groups {
        map.extend(m.iter().map(|&i| (data.series[i].id().to_string(), gid.clone())));
    }
    let groups_path = a.out_dir.join("groups.csv");
    io::write_group_map(&groups_path, &map)?;
    println!("wrote {}", groups_path.display());
    for model in models {
        let path = a.out_dir.join(io::model_file_name(&model.group_id));
        io::write_json(&path, &ModelFile::new(data.grid_start, model))?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn week_range(a: &DetectArgs, data: &Dataset) -> Result<(WeekIndex, WeekIndex)> {
    let last = data.last_week();
    let first = data.week_index(a.from.unwrap_or(last))?;
    let to = data.week_index(a.to.unwrap_or(last))?;
    if to < first {
        return Err(Error::Usage("--from is after --to".into()));
    }
    Ok((first, to))
}

pub fn cmd_detect(a: &DetectArgs, file: &FileConfig) -> Result<()> {
    let threshold = pick(a.threshold, file.threshold, 0.5);
    if !(0.0..=1.0).contains(&threshold) {
        return Err(Error::Usage(format!("threshold must lie in [0, 1], got {threshold}")));
    }
    let alpha = pick(a.alpha, file.alpha, 0.01);
    let refit_every = pick(a.refit_every, file.refit_every, 1);
    if refit_every == 0 || !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Usage("refit-every must be >= 1 and alpha in (0, 1)".into()));
    }
    let data = io::load_dataset(&a.data, a.labels.as_deref())?;
    let (first, last) = week_range(a, &data)?;
    match a.detector {
        Detector::Baseline => {
            let cfg = RollingConfig {
                window_years: pick(a.window_years, file.window_years, 5),
                holdout_u: pick(a.holdout_u, file.holdout_u, 26),
                refit_every,
                alpha,
                ..RollingConfig::default()
            };
            let refs: Vec<&SurveillanceSeries> = data.series.iter().collect();
            let rows: Vec<BaselineScoreRow> = rolling_baseline_all(&refs, first, last, &cfg)?
                .into_iter()
                .map(|b| BaselineScoreRow {
                    week: data.grid_start.offset(i64::from(b.week.get()) - 1),
                    series_id: b.series_id,
                    count: b.count,
                    p_value: b.p_value,
                    threshold: b.threshold,
                    expected: b.expected,
                    alarm: b.alarm,
                })
                .collect();
            io::write_baseline_scores(&a.out, &rows)?;
        }
        Detector::Hmm => {
            let dir = a
                .models
                .as_ref()
                .ok_or_else(|| Error::Usage("the hmm detector needs --models".into()))?;
            let models = io::read_models(dir)?;
            let rows = detect_hmm(a, &data, models, first, last, threshold, refit_every)?;
            io::write_hmm_scores(&a.out, &rows)?;
        }
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

fn detect_hmm(
    a: &DetectArgs,
    data: &Dataset,
    models: Vec<ModelFile>,
    first: WeekIndex,
    last: WeekIndex,
    threshold: f64,
    refit_every: u32,
) -> Result<Vec<HmmScoreRow>> {
    let mut owner: HashMap<&str, usize> = HashMap::new();
    for (gi, m) in models.iter().enumerate() {
        if m.grid_start != data.grid_start {
            return Err(Error::Data(format!(
                "model `{}` was trained on data starting {}, but the data starts {}",
                m.model.group_id, m.grid_start, data.grid_start
            )));
        }
        for id in &m.model.series_ids {
            owner.insert(id, gi);
        }
    }
    let orphans: Vec<&str> = data.series.iter().map(|s| s.id()).filter(|id| !owner.contains_key(id)).collect();
    if !orphans.is_empty() {
        return Err(Error::Detection(format!("series without a model: {}", orphans.join(", "))));
    }
    let mut groups = Vec::with_capacity(models.len());
    for m in &models {
        let members = m
            .model
            .series_ids
            .iter()
            .map(|id| {
                data.get(id).cloned().ok_or_else(|| {
                    Error::Detection(format!("model `{}` covers series `{id}` absent from the data", m.model.group_id))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        groups.push(SeriesGroup::new(m.model.group_id.clone(), members)?);
    }
    let needs_training = models
        .iter()
        .any(|m| refit_blocks(first, last, refit_every).iter().any(|b| b.0 != m.model.current_week));
    if needs_training && a.labels.is_none() {
        return Err(Error::Usage(
            "weeks other than the trained week need retraining; pass --labels".into(),
        ));
    }
    let per_group: Vec<Vec<HmmScoreRow>> = models
        .par_iter()
        .zip(groups.par_iter())
        .map(|(m, g)| {
            let c = m.model.config;
            let cfg = RollingConfig {
                window_years: c.window_years,
                holdout_u: c.holdout_u,
                pseudocount: c.pseudocount,
                refit_every,
                alpha: 0.01,
                clamp_labels: !a.no_clamp,
            };
            let post = rolling_hmm(g, first, last, &cfg, std::slice::from_ref(&m.model))?;
            Ok(post
                .into_iter()
                .map(|p| HmmScoreRow {
                    series_id: p.series_id,
                    week: data.grid_start.offset(i64::from(p.week.get()) - 1),
                    alarm: p.p_outbreak >= threshold,
                    p_outbreak: p.p_outbreak,
                })
                .collect())
        })
        .collect::<Result<_>>()?;
    let order: HashMap<&str, usize> = data.series.iter().enumerate().map(|(i, s)| (s.id(), i)).collect();
    let mut rows: Vec<HmmScoreRow> = per_group.into_iter().flatten().collect();
    rows.sort_by_key(|r| (order[r.series_id.as_str()], r.week));
    Ok(rows)
}

type Key = (String, YearWeek);

fn keyed<T, F: Fn(&T) -> Key>(rows: Vec<T>, key: F, what: &str) -> Result<BTreeMap<Key, T>> {
    let mut out = BTreeMap::new();
    for r in rows {
        let k = key(&r);
        if out.contains_key(&k) {
            return Err(Error::Evaluation(format!("duplicate {what} score for `{}` week {}", k.0, k.1)));
        }
        out.insert(k, r);
    }
    Ok(out)
}

/// Tidy outputs of `evaluate`.
#[derive(Clone, Debug, Serialize)]
pub struct EvaluationOutput {
    pub schema: u32,
    pub pooled: EvalReport,
    pub by_prefix: Vec<EvalReport>,
    pub skipped_prefixes: Vec<String>,
}

pub fn cmd_evaluate(a: &EvaluateArgs, file: &FileConfig) -> Result<()> {
    if a.labels.is_empty() {
        return Err(Error::Usage("evaluate needs --labels".into()));
    }
    let mut hmm_rows = Vec::new();
    for p in &a.hmm_scores {
        hmm_rows.extend(io::read_hmm_scores(p)?);
    }
    let mut base_rows = Vec::new();
    for p in &a.baseline_scores {
        base_rows.extend(io::read_baseline_scores(p)?);
    }
    let hmm = keyed(hmm_rows, |r| (r.series_id.clone(), r.week), "HMM")?;
    let base = keyed(base_rows, |r| (r.series_id.clone(), r.week), "baseline")?;
    if let Some(k) = hmm.keys().find(|k| !base.contains_key(*k)).or_else(|| base.keys().find(|k| !hmm.contains_key(*k))) {
        let a_has = hmm.contains_key(k);
        return Err(Error::Evaluation(format!(
            "scores are misaligned: `{}` week {} has {} score only",
            k.0,
            k.1,
            if a_has { "an HMM" } else { "a baseline" }
        )));
    }
    if hmm.is_empty() {
        return Err(Error::Evaluation("no (series, week) is scored by both detectors".into()));
    }
    let mut labels: HashMap<Key, Label> = HashMap::new();
    for p in &a.labels {
        for (_, id, week, l) in io::read_labels(p)? {
            labels.insert((id, week), l);
        }
    }
    let mut truth: HashMap<String, (YearWeek, std::sync::Arc<Vec<f64>>)> = HashMap::new();
    for p in &a.truth {
        let t: TruthFile = io::read_json(p)?;
        let means = std::sync::Arc::new(t.endemic_mean);
        for s in t.series {
            truth.insert(s.series_id, (t.start_week, means.clone()));
        }
    }
    let origin = hmm.keys().map(|k| k.1).min().expect("non-empty");
    let mut scored = Vec::with_capacity(hmm.len());
    for (k, h) in &hmm {
        let b = &base[k];
        let label = *labels
            .get(k)
            .ok_or_else(|| Error::Evaluation(format!("no label for `{}` week {}", k.0, k.1)))?;
        let size = truth.get(&k.0).and_then(|(start, mu)| {
            let off = start.weeks_until(k.1);
            usize::try_from(off).ok().and_then(|i| mu.get(i)).map(|&m| excess_cases(b.count, m))
        });
        scored.push(ScoredWeek {
            series_id: k.0.clone(),
            week: WeekIndex::new(origin.weeks_until(k.1) as u32 + 1)?,
            label,
            hmm_score: Some(h.p_outbreak),
            baseline_score: Some(1.0 - b.p_value),
            baseline_alarm: Some(b.alarm),
            outbreak_size: if label == Label::Outbreak { size } else { None },
        });
    }

    let alpha = pick(None, file.alpha, 0.01);
    let report = |name: &str, s: &[ScoredWeek]| -> Result<EvalReport> {
        let mut r = build_report(name, s, alpha, &DEFAULT_SIZE_EDGES)?;
        if let Some(reference) = a.reference_sensitivity {
            r.reference = Some(compare_at_sensitivity(s, reference)?);
        }
        Ok(r)
    };
    let pooled = report("pooled", &scored)?;
    let mut by_prefix = Vec::new();
    let mut skipped = Vec::new();
    if a.by_prefix {
        let mut parts: BTreeMap<String, Vec<ScoredWeek>> = BTreeMap::new();
        for s in &scored {
            let prefix = s.series_id.split_once('_').map_or(s.series_id.as_str(), |p| p.0);
            parts.entry(prefix.to_string()).or_default().push(s.clone());
        }
        for (prefix, part) in parts {
            match report(&prefix, &part) {
                Ok(r) => by_prefix.push(r),
                Err(Error::Evaluation(msg)) => {
                    log::warn!("prefix `{prefix}` skipped: {msg}");
                    skipped.push(prefix);
                }
                Err(e) => return Err(e),
            }
        }
    }
    let out = EvaluationOutput {
        schema: io::SCHEMA_VERSION,
        pooled,
        by_prefix,
        skipped_prefixes: skipped,
    };
    write_evaluation(&a.out_dir, &out)
}

fn opt(x: Option<f64>) -> String {
    x.map_or_else(|| "NA".to_string(), |v| v.to_string())
}

fn write_evaluation(dir: &Path, out: &EvaluationOutput) -> Result<()> {
    let reports: Vec<&EvalReport> = std::iter::once(&out.pooled).chain(&out.by_prefix).collect();

    let mut roc = csv::Writer::from_writer(Vec::new());
    roc.write_record(["report", "method", "threshold", "fpr", "sensitivity"])?;
    let mut metrics = csv::Writer::from_writer(Vec::new());
    metrics.write_record(["report", "operating_point", "method", "metric", "value"])?;
    let mut strata = csv::Writer::from_writer(Vec::new());
    strata.write_record(["report", "method", "stratum", "n", "min", "q1", "median", "q3", "max", "mean"])?;

    for r in &reports {
        for m in &r.methods {
            for p in &m.roc {
                roc.write_record([&r.label, &m.method, &p.threshold.to_string(), &p.fpr.to_string(), &p.sensitivity.to_string()])?;
            }
            metrics.write_record([&r.label, "all", &m.method, "auc", &m.auc.to_string()])?;
            for s in &m.strata {
                strata.write_record([
                    &r.label,
                    &m.method,
                    &s.stratum,
                    &s.n.to_string(),
                    &opt(s.min),
                    &opt(s.q1),
                    &opt(s.median),
                    &opt(s.q3),
                    &opt(s.max),
                    &opt(s.mean),
                ])?;
            }
        }
        let mut point = |op: &str, method: &str, metric: &str, v: String| {
            metrics.write_record([r.label.as_str(), op, method, metric, &v])
        };
        if let Some(mc) = &r.matched {
            for (method, m, thr) in [
                (Method::Baseline.name(), &mc.baseline, mc.alpha),
                (Method::Hmm.name(), &mc.hmm, mc.hmm_threshold),
            ] {
                point("matched", method, "threshold", thr.to_string())?;
                point("matched", method, "sensitivity", opt(m.sensitivity))?;
                point("matched", method, "fpr", opt(m.fpr))?;
                point("matched", method, "precision", opt(m.precision))?;
                point("matched", method, "tp", m.confusion.tp.to_string())?;
                point("matched", method, "fp", m.confusion.fp.to_string())?;
            }
            point("matched", Method::Hmm.name(), "event_recall", opt(mc.hmm_event_recall))?;
            point("matched", Method::Baseline.name(), "event_recall", opt(mc.baseline_event_recall))?;
            let o = mc.overlap;
            point("matched", "overlap", "both", o.both.to_string())?;
            point("matched", "overlap", "hmm_only", o.hmm_only.to_string())?;
            point("matched", "overlap", "baseline_only", o.baseline_only.to_string())?;
            point("matched", "overlap", "labeled_missed", o.labeled_missed.to_string())?;
        }
        if let Some(rc) = &r.reference {
            for (method, m, thr) in [
                (Method::Baseline.name(), &rc.baseline, rc.baseline_threshold),
                (Method::Hmm.name(), &rc.hmm, rc.hmm_threshold),
            ] {
                point("reference", method, "threshold", thr.to_string())?;
                point("reference", method, "sensitivity", opt(m.sensitivity))?;
                point("reference", method, "fpr", opt(m.fpr))?;
                point("reference", method, "precision", opt(m.precision))?;
            }
        }
    }
    let finish = |w: csv::Writer<Vec<u8>>| w.into_inner().map_err(|e| Error::Io(e.into_error()));
    let files = [
        ("roc.csv", finish(roc)?),
        ("metrics.csv", finish(metrics)?),
        ("strata.csv", finish(strata)?),
    ];
    io::write_json(&dir.join("report.json"), out)?;
    println!("wrote {}", dir.join("report.json").display());
    for (name, bytes) in files {
        io::write_atomic(&dir.join(name), &bytes)?;
        println!("wrote {}", dir.join(name).display());
    }
    Ok(())
}
