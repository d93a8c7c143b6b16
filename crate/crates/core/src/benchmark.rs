//! Simulation benchmark: simulate scenarios, run both detectors with rolling
//! retraining over the final weeks, and score them against the truth.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::eval::{build_report, EvalReport, ScoredWeek, DEFAULT_SIZE_EDGES};
use crate::pipeline::{
    has_outbreaks_for, join_scores, make_groups, random_groups, rolling_baseline_all, rolling_hmm_all,
    RollingConfig,
};
use crate::series::{SurveillanceSeries, WeekIndex, YearWeek};
use crate::simulate::{derive_seed, excess_cases, simulate_scenario, ScenarioMeans, ScenarioSpec};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkConfig {
    pub scenarios: Vec<u32>,
    pub n_series: usize,
    pub seed: u64,
    /// Series per group; groups never mix scenarios.
    pub group_size: usize,
    /// Number of final weeks scored.
    pub eval_weeks: u32,
    pub rolling: RollingConfig,
    pub start_week: YearWeek,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            scenarios: (1..=14).collect(),
            n_series: 50,
            seed: 20_180_101,
            group_size: 10,
            eval_weeks: 8 * 52,
            rolling: RollingConfig {
                window_years: 4,
                refit_every: 4,
                ..RollingConfig::default()
            },
            start_week: YearWeek::new(2005, 1).expect("valid week"),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ScenarioResult {
    pub scenario: u32,
    pub scored: Vec<ScoredWeek>,
    pub report: EvalReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub config: BenchmarkConfig,
    pub scenarios: Vec<ScenarioResult>,
    pub pooled: EvalReport,
}

impl BenchmarkResult {
    pub fn all_scored(&self) -> Vec<ScoredWeek> {
        self.scenarios.iter().flat_map(|s| s.scored.iter().cloned()).collect()
    }
}

/// Score both detectors on one simulated scenario.
pub fn run_scenario(id: u32, cfg: &BenchmarkConfig) -> Result<ScenarioResult> {
    let spec = ScenarioSpec::get(id)?;
    let means = ScenarioMeans::new(&spec)?;
    let sims = simulate_scenario(&means, cfg.n_series, cfg.seed, cfg.start_week)?;
    let series: Vec<SurveillanceSeries> = sims.into_iter().map(|s| s.series).collect();
    let last = WeekIndex::new(spec.length_t)?;
    let first = last
        .minus(cfg.eval_weeks - 1)
        .ok_or_else(|| Error::Argument(format!("{} evaluation weeks exceed the series", cfg.eval_weeks)))?;

    if cfg.group_size == 0 {
        return Err(Error::Argument("group size must be at least 1".into()));
    }
    let n_groups = cfg.n_series.div_ceil(cfg.group_size);
    let members = random_groups(series.len(), n_groups, derive_seed(cfg.seed, id, u64::MAX), |m| {
        has_outbreaks_for(&series, m, first, last, &cfg.rolling)
    })?;
    let groups = make_groups(&series, &members, &format!("sc{id:02}_"))?;

    let hmm = rolling_hmm_all(&groups, first, last, &cfg.rolling)?;
    let refs: Vec<&SurveillanceSeries> = groups.iter().flat_map(|g| g.series()).collect();
    let baseline = rolling_baseline_all(&refs, first, last, &cfg.rolling)?;
    let size = |s: &SurveillanceSeries, t: WeekIndex| {
        let mu = means.endemic[(t.get() - 1) as usize];
        Some(excess_cases(s.count_at(t)?, mu))
    };
    let mut scored = join_scores(&refs, &hmm, &baseline, Some(&size))?;
    scored.sort_by(|a, b| a.series_id.cmp(&b.series_id).then(a.week.cmp(&b.week)));
    let report = build_report(&format!("scenario {id}"), &scored, cfg.rolling.alpha, &DEFAULT_SIZE_EDGES)?;
    Ok(ScenarioResult {
        scenario: id,
        scored,
        report,
    })
}

/// Run every configured scenario and pool the results.
pub fn run_benchmark(cfg: &BenchmarkConfig) -> Result<BenchmarkResult> {
    let scenarios: Vec<ScenarioResult> = cfg
        .scenarios
        .par_iter()
        .map(|&id| run_scenario(id, cfg))
        .collect::<Result<_>>()?;
    let all: Vec<ScoredWeek> = scenarios.iter().flat_map(|s| s.scored.iter().cloned()).collect();
    let pooled = build_report("pooled", &all, cfg.rolling.alpha, &DEFAULT_SIZE_EDGES)?;
    Ok(BenchmarkResult {
        config: cfg.clone(),
        scenarios,
        pooled,
    })
}
