//! Rolling retraining over an evaluation range, grouping of series, and
//! assembly of scored weeks.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baseline::{BaselineConfig, BaselineFit};
use crate::error::{Error, Result};
use crate::eval::ScoredWeek;
use crate::hmm::{rolling_posteriors, train, ForwardOptions, HmmModel, PosteriorResult, TrainConfig};
use crate::series::{Label, SeriesGroup, SurveillanceSeries, WeekIndex};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub window_years: u32,
    pub holdout_u: u32,
    pub pseudocount: f64,
    /// Weeks between refits; 1 retrains for every evaluation week.
    pub refit_every: u32,
    pub alpha: f64,
    pub clamp_labels: bool,
}

impl Default for RollingConfig {
    fn default() -> Self {
        RollingConfig {
            window_years: 5,
            holdout_u: 26,
            pseudocount: 0.0,
            refit_every: 1,
            alpha: 0.01,
            clamp_labels: true,
        }
    }
}

impl RollingConfig {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            window_years: self.window_years,
            holdout_u: self.holdout_u,
            pseudocount: self.pseudocount,
        }
    }

    pub fn baseline_config(&self) -> BaselineConfig {
        BaselineConfig {
            window_years: self.window_years,
            holdout_u: self.holdout_u,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.refit_every == 0 {
            return Err(Error::Argument("refit-every must be at least 1".into()));
        }
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Argument(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if !(self.pseudocount >= 0.0) {
            return Err(Error::Argument("pseudocount must be non-negative".into()));
        }
        Ok(())
    }
}

/// Refit blocks `[start, end]` covering `[first, last]`.
pub fn refit_blocks(first: WeekIndex, last: WeekIndex, refit_every: u32) -> Vec<(WeekIndex, WeekIndex)> {
    let step = refit_every.max(1);
    let mut out = Vec::new();
    let mut w = first.get();
    while w <= last.get() {
        let end = (w + step - 1).min(last.get());
        out.push((WeekIndex::new(w).expect("positive"), WeekIndex::new(end).expect("positive")));
        w += step;
    }
    out
}

fn check_range(first: WeekIndex, last: WeekIndex, grid_last: WeekIndex) -> Result<()> {
    if last < first {
        return Err(Error::Range(format!("empty week range {first}..{last}")));
    }
    if last > grid_last {
        return Err(Error::Range(format!("week {last} is past the last observed week {grid_last}")));
    }
    Ok(())
}

/// HMM posteriors for every series of `group` and week of `[first, last]`,
/// retraining every `refit_every` weeks. `models` may supply pre-trained
/// models keyed by their current week; any block starting at such a week
/// reuses it.
pub fn rolling_hmm(
    group: &SeriesGroup,
    first: WeekIndex,
    last: WeekIndex,
    cfg: &RollingConfig,
    models: &[HmmModel],
) -> Result<Vec<PosteriorResult>> {
    cfg.validate()?;
    check_range(first, last, group.last_t())?;
    let opts = ForwardOptions { clamp_labels: cfg.clamp_labels };
    let train_cfg = cfg.train_config();
    let mut by_series: Vec<Vec<PosteriorResult>> = vec![Vec::new(); group.len()];
    for (start, end) in refit_blocks(first, last, cfg.refit_every) {
        let trained;
        let model = match models.iter().find(|m| m.current_week == start) {
            Some(m) => m,
            None => {
                trained = train(group, start, &train_cfg)?;
                &trained
            }
        };
        for (n, s) in group.series().iter().enumerate() {
            let idx = model.series_index(s.id()).ok_or_else(|| {
                Error::Detection(format!("series `{}` is not in model `{}`", s.id(), model.group_id))
            })?;
            by_series[n].extend(rolling_posteriors(model, s, idx, start, end, cfg.holdout_u, opts)?);
        }
    }
    Ok(by_series.into_iter().flatten().collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineWeek {
    pub series_id: String,
    pub week: WeekIndex,
    pub count: u64,
    pub p_value: f64,
    pub alarm: bool,
    pub threshold: u64,
    pub expected: f64,
}

/// Baseline scores for one series over `[first, last]`.
pub fn rolling_baseline(
    series: &SurveillanceSeries,
    first: WeekIndex,
    last: WeekIndex,
    cfg: &RollingConfig,
) -> Result<Vec<BaselineWeek>> {
    cfg.validate()?;
    check_range(first, last, series.last_t())?;
    let bcfg = cfg.baseline_config();
    let mut out = Vec::with_capacity((last.get() - first.get() + 1) as usize);
    for (start, end) in refit_blocks(first, last, cfg.refit_every) {
        let fit = BaselineFit::fit(series, start, &bcfg)?;
        for w in start.get()..=end.get() {
            let w = WeekIndex::new(w)?;
            let count = series.count_at(w).expect("week within series");
            let sc = fit.score(count, w, cfg.alpha)?;
            out.push(BaselineWeek {
                series_id: series.id().to_string(),
                week: w,
                count,
                p_value: sc.p_value,
                alarm: sc.alarm,
                threshold: sc.threshold,
                expected: sc.expected,
            });
        }
    }
    Ok(out)
}

/// Baseline scores for every series of `groups`, in order.
pub fn rolling_baseline_all(
    series: &[&SurveillanceSeries],
    first: WeekIndex,
    last: WeekIndex,
    cfg: &RollingConfig,
) -> Result<Vec<BaselineWeek>> {
    let parts: Vec<Vec<BaselineWeek>> = series
        .par_iter()
        .map(|s| rolling_baseline(s, first, last, cfg))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// HMM posteriors for several groups, in group order.
pub fn rolling_hmm_all(
    groups: &[SeriesGroup],
    first: WeekIndex,
    last: WeekIndex,
    cfg: &RollingConfig,
) -> Result<Vec<PosteriorResult>> {
    let parts: Vec<Vec<PosteriorResult>> = groups
        .par_iter()
        .map(|g| rolling_hmm(g, first, last, cfg, &[]))
        .collect::<Result<_>>()?;
    Ok(parts.into_iter().flatten().collect())
}

/// Balanced partition of `n_items` into `n_groups` groups after a seeded
/// shuffle. Group sizes differ by at most one; members are sorted.
pub fn balanced_partition(n_items: usize, n_groups: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n_items).collect();
    idx.shuffle(rng);
    let base = n_items / n_groups;
    let extra = n_items % n_groups;
    let mut out = Vec::with_capacity(n_groups);
    let mut pos = 0;
    for g in 0..n_groups {
        let size = base + usize::from(g < extra);
        let mut members = idx[pos..pos + size].to_vec();
        members.sort_unstable();
        out.push(members);
        pos += size;
    }
    out
}

pub const MAX_GROUPING_ATTEMPTS: usize = 100;

/// Random balanced grouping where every group satisfies `accept`,
/// re-randomizing up to [`MAX_GROUPING_ATTEMPTS`] times.
pub fn random_groups<F>(n_items: usize, n_groups: usize, seed: u64, accept: F) -> Result<Vec<Vec<usize>>>
where
    F: Fn(&[usize]) -> bool,
{
    if n_groups == 0 || n_groups > n_items {
        return Err(Error::Argument(format!(
            "cannot split {n_items} series into {n_groups} groups"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 1..=MAX_GROUPING_ATTEMPTS {
        let groups = balanced_partition(n_items, n_groups, &mut rng);
        if groups.iter().all(|g| accept(g)) {
            if attempt > 1 {
                log::info!("grouping accepted on attempt {attempt}");
            }
            return Ok(groups);
        }
    }
    Err(Error::Training(format!(
        "no grouping of {n_items} series into {n_groups} groups gave every group an outbreak \
         after {MAX_GROUPING_ATTEMPTS} attempts; use fewer groups"
    )))
}

/// Group id used for the `g`-th generated group.
pub fn group_name(g: usize) -> String {
    format!("g{:02}", g + 1)
}

/// Build [`SeriesGroup`]s from index sets into `series`.
pub fn make_groups(series: &[SurveillanceSeries], members: &[Vec<usize>], prefix: &str) -> Result<Vec<SeriesGroup>> {
    members
        .iter()
        .enumerate()
        .map(|(g, m)| {
            SeriesGroup::new(
                format!("{prefix}{}", group_name(g)),
                m.iter().map(|&i| series[i].clone()).collect(),
            )
        })
        .collect()
}

/// True when every training window of a rolling run over `[first, last]`
/// contains an outbreak week among `members`.
pub fn has_outbreaks_for(
    series: &[SurveillanceSeries],
    members: &[usize],
    first: WeekIndex,
    last: WeekIndex,
    cfg: &RollingConfig,
) -> bool {
    let window = cfg.window_years * 52;
    refit_blocks(first, last, cfg.refit_every).iter().all(|&(start, _)| {
        let (Some(lo), Some(hi)) = (start.minus(window - 1), start.minus(cfg.holdout_u)) else {
            return false;
        };
        members.iter().any(|&i| {
            (lo.get()..=hi.get())
                .any(|t| WeekIndex::new(t).is_ok_and(|t| series[i].label_at(t) == Label::Outbreak))
        })
    })
}

/// Join per-week HMM and baseline results with labels. `sizes` maps
/// `(series_id, week)` to the outbreak size.
pub fn join_scores(
    series: &[&SurveillanceSeries],
    hmm: &[PosteriorResult],
    baseline: &[BaselineWeek],
    sizes: Option<&dyn Fn(&SurveillanceSeries, WeekIndex) -> Option<u64>>,
) -> Result<Vec<ScoredWeek>> {
    let by_id: HashMap<&str, &SurveillanceSeries> = series.iter().map(|s| (s.id(), *s)).collect();
    let base: HashMap<(&str, WeekIndex), &BaselineWeek> =
        baseline.iter().map(|b| ((b.series_id.as_str(), b.week), b)).collect();
    if base.len() != hmm.len() {
        return Err(Error::Evaluation(format!(
            "{} HMM scores but {} baseline scores",
            hmm.len(),
            base.len()
        )));
    }
    hmm.iter()
        .map(|p| {
            let b = base.get(&(p.series_id.as_str(), p.week)).ok_or_else(|| {
                Error::Evaluation(format!("no baseline score for `{}` week {}", p.series_id, p.week))
            })?;
            let s = by_id
                .get(p.series_id.as_str())
                .ok_or_else(|| Error::Evaluation(format!("unknown series `{}`", p.series_id)))?;
            let label = s.label_at(p.week);
            Ok(ScoredWeek {
                series_id: p.series_id.clone(),
                week: p.week,
                label,
                hmm_score: Some(p.p_outbreak),
                baseline_score: Some(1.0 - b.p_value),
                baseline_alarm: Some(b.alarm),
                outbreak_size: if label == Label::Outbreak { sizes.and_then(|f| f(s, p.week)) } else { None },
            })
        })
        .collect()
}
