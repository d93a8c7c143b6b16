//! Two-state supervised hidden Markov model for outbreak detection.
//!
//! State 0 is endemic, state 1 outbreak. Training sees the state sequences,
//! so the initial distribution and the transition matrix are plain
//! frequency estimates and the emission model is a pooled NB regression.
//! Inference runs the forward recursion in log space and reports
//! `P(state at the last week = outbreak | observations)`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{irls_fit, predict_mu_unchecked, GlmFit, IrlsOptions, PooledDesign};
use crate::nb::nb_log_pmf_unchecked;
use crate::series::{train_test_split, CovariateRow, Label, SeriesGroup, SurveillanceSeries, WeekIndex};

/// Lower bound on per-week log-emissions.
pub const EMISSION_FLOOR: f64 = -700.0;

/// Initial distribution and transition matrix.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Transitions {
    pub pi: [f64; 2],
    pub trans: [[f64; 2]; 2],
    /// Rows with no observed departures, set to `[0.5, 0.5]`.
    #[serde(default)]
    pub defaulted_rows: Vec<usize>,
    #[serde(default)]
    pub pi_defaulted: bool,
}

/// Frequency estimates of `pi` and `a[i][j]` from labeled sequences.
///
/// Week pairs with an unknown label on either side are skipped. With
/// `pseudocount > 0` each count is smoothed by that amount.
pub fn estimate_transitions<'a, I>(sequences: I, pseudocount: f64) -> Result<Transitions>
where
    I: IntoIterator<Item = &'a [Label]>,
{
    if !(pseudocount >= 0.0 && pseudocount.is_finite()) {
        return Err(Error::Argument(format!("pseudocount must be >= 0, got {pseudocount}")));
    }
    let mut pair = [[0u64; 2]; 2];
    let mut first = [0u64; 2];
    let mut n_sequences = 0usize;
    for seq in sequences {
        n_sequences += 1;
        if let Some(s) = seq.first().and_then(|l| l.state()) {
            first[s] += 1;
        }
        for w in seq.windows(2) {
            if let (Some(i), Some(j)) = (w[0].state(), w[1].state()) {
                pair[i][j] += 1;
            }
        }
    }
    if n_sequences == 0 {
        return Err(Error::Argument("no label sequences".into()));
    }

    let mut trans = [[0.5; 2]; 2];
    let mut defaulted_rows = Vec::new();
    for i in 0..2 {
        let departures = (pair[i][0] + pair[i][1]) as f64 + 2.0 * pseudocount;
        if departures > 0.0 {
            trans[i] = [
                (pair[i][0] as f64 + pseudocount) / departures,
                (pair[i][1] as f64 + pseudocount) / departures,
            ];
        } else {
            defaulted_rows.push(i);
        }
    }

    let starts = (first[0] + first[1]) as f64 + 2.0 * pseudocount;
    let (pi, pi_defaulted) = if starts > 0.0 {
        let p = first.map(|c| (c as f64 + pseudocount) / starts);
        (p, false)
    } else {
        ([0.5, 0.5], true)
    };
    Ok(Transitions {
        pi,
        trans,
        defaulted_rows,
        pi_defaulted,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub window_years: u32,
    pub holdout_u: u32,
    pub pseudocount: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            window_years: 5,
            holdout_u: 26,
            pseudocount: 0.0,
        }
    }
}

/// Fitted HMM for one group.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HmmModel {
    pub group_id: String,
    pub series_ids: Vec<String>,
    pub transitions: Transitions,
    pub glm: GlmFit,
    /// Week the model was trained for.
    pub current_week: WeekIndex,
    /// First and last week whose labels entered training.
    pub train_window: (WeekIndex, WeekIndex),
    pub config: TrainConfig,
}

impl HmmModel {
    pub fn pi(&self) -> [f64; 2] {
        self.transitions.pi
    }

    pub fn trans(&self) -> [[f64; 2]; 2] {
        self.transitions.trans
    }

    pub fn n_series(&self) -> usize {
        self.series_ids.len()
    }

    /// Multiplicative outbreak effect `exp(b4)`.
    pub fn outbreak_factor(&self) -> f64 {
        self.glm.outbreak_effect().exp()
    }

    pub fn series_index(&self, id: &str) -> Option<usize> {
        self.series_ids.iter().position(|s| s == id)
    }
}

/// Train the group model for `current_week`.
pub fn train(group: &SeriesGroup, current_week: WeekIndex, config: &TrainConfig) -> Result<HmmModel> {
    let split = train_test_split(group, current_week, config.window_years, config.holdout_u)?;
    let training = &split.training;
    if training.outbreak_weeks() == 0 {
        return Err(Error::Training(format!(
            "group `{}` has no outbreak week in weeks {}..{}; regroup so every group has outbreaks",
            group.id(),
            training.first_t(),
            training.last_t()
        )));
    }
    let transitions = estimate_transitions(
        training.series().iter().filter_map(|s| s.labels()),
        config.pseudocount,
    )?;
    for row in &transitions.defaulted_rows {
        log::warn!("group `{}`: no departures from state {row}; using a uniform row", group.id());
    }
    let design = PooledDesign::from_group(training)?;
    let glm = irls_fit(&design, IrlsOptions::default())?;
    if !glm.converged {
        log::warn!(
            "group `{}` week {current_week}: emission fit stopped after {} iterations",
            group.id(),
            glm.iterations
        );
    }
    Ok(HmmModel {
        group_id: group.id().to_string(),
        series_ids: group.series().iter().map(|s| s.id().to_string()).collect(),
        transitions,
        glm,
        current_week,
        train_window: (training.first_t(), training.last_t()),
        config: *config,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorResult {
    pub series_id: String,
    pub week: WeekIndex,
    pub p_outbreak: f64,
    pub log_evidence: f64,
}

#[derive(Clone, Copy, Debug)]
pub struct ForwardOptions {
    /// Pin weeks with known labels to their labeled state.
    pub clamp_labels: bool,
}

impl Default for ForwardOptions {
    fn default() -> Self {
        ForwardOptions { clamp_labels: true }
    }
}

fn log_sum_exp(a: f64, b: f64) -> f64 {
    let m = a.max(b);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + ((a - m).exp() + (b - m).exp()).ln()
}

/// Per-week log-emissions `[ln psi_0, ln psi_1]` of series `n` over `[from, to]`.
pub fn log_emissions(
    model: &HmmModel,
    series: &SurveillanceSeries,
    n: usize,
    from: WeekIndex,
    to: WeekIndex,
    opts: ForwardOptions,
) -> Result<Vec<[f64; 2]>> {
    let r = model.glm.size_r[n];
    (from.get()..=to.get())
        .map(|t| {
            let t = WeekIndex::new(t)?;
            let count = series.count_at(t).ok_or_else(|| {
                Error::Data(format!("series `{}` has no count for week {t}", series.id()))
            })?;
            let z = CovariateRow::at(t);
            let mut e = [0.0; 2];
            for (state, slot) in e.iter_mut().enumerate() {
                let mu = predict_mu_unchecked(&model.glm, n, &z, state);
                *slot = nb_log_pmf_unchecked(count, mu, r).max(EMISSION_FLOOR);
            }
            if opts.clamp_labels {
                if let Some(s) = series.label_at(t).state() {
                    e[1 - s] = f64::NEG_INFINITY;
                }
            }
            Ok(e)
        })
        .collect()
}

/// Log forward variables `ln alpha_t(i)` for the given log-emissions.
pub fn forward_log(pi: [f64; 2], trans: [[f64; 2]; 2], emissions: &[[f64; 2]]) -> Vec<[f64; 2]> {
    let log_pi = pi.map(f64::ln);
    let log_a = trans.map(|row| row.map(f64::ln));
    let mut alphas = Vec::with_capacity(emissions.len());
    let mut prev = [0.0; 2];
    for (t, e) in emissions.iter().enumerate() {
        let cur = if t == 0 {
            [log_pi[0] + e[0], log_pi[1] + e[1]]
        } else {
            let mut c = [0.0; 2];
            for j in 0..2 {
                c[j] = log_sum_exp(prev[0] + log_a[0][j], prev[1] + log_a[1][j]) + e[j];
            }
            c
        };
        alphas.push(cur);
        prev = cur;
    }
    alphas
}

/// Posterior outbreak probability of series `n` at `upto_week`.
///
/// The recursion starts at the first training week of the model, so the
/// initial distribution applies where it was estimated. Weeks whose label is
/// known are pinned (when `opts.clamp_labels`); all other weeks, including the
/// unlabeled holdout, are marginalized.
pub fn forward_posterior(
    model: &HmmModel,
    series: &SurveillanceSeries,
    series_index: usize,
    upto_week: WeekIndex,
    opts: ForwardOptions,
) -> Result<PosteriorResult> {
    if series_index >= model.n_series() {
        return Err(Error::Argument(format!(
            "series index {series_index} out of range for {} series",
            model.n_series()
        )));
    }
    let from = model.train_window.0;
    if upto_week < from {
        return Err(Error::Range(format!(
            "week {upto_week} precedes the model window starting at {from}"
        )));
    }
    let emissions = log_emissions(model, series, series_index, from, upto_week, opts)?;
    let alphas = forward_log(model.pi(), model.trans(), &emissions);
    let last = *alphas.last().expect("non-empty window");
    let evidence = log_sum_exp(last[0], last[1]);
    if evidence == f64::NEG_INFINITY || evidence.is_nan() {
        // find the first week where the recursion died
        let dead = alphas
            .iter()
            .position(|a| log_sum_exp(a[0], a[1]) == f64::NEG_INFINITY)
            .unwrap_or(alphas.len() - 1);
        return Err(Error::Numerical(format!(
            "series `{}`: zero forward evidence at week {}",
            series.id(),
            from.get() + dead as u32
        )));
    }
    Ok(PosteriorResult {
        series_id: series.id().to_string(),
        week: upto_week,
        p_outbreak: (last[1] - evidence).exp().clamp(0.0, 1.0),
        log_evidence: evidence,
    })
}

/// Posteriors of series `n` at every week of `[first, last]`, computed from
/// one set of emissions. For week `w` only labels at or before `w - label_lag`
/// are pinned, so the holdout stays marginalized as the week advances.
pub fn rolling_posteriors(
    model: &HmmModel,
    series: &SurveillanceSeries,
    n: usize,
    first: WeekIndex,
    last: WeekIndex,
    label_lag: u32,
    opts: ForwardOptions,
) -> Result<Vec<PosteriorResult>> {
    let from = model.train_window.0;
    if first < from || last < first {
        return Err(Error::Range(format!(
            "weeks {first}..{last} do not lie after the model window starting at {from}"
        )));
    }
    let raw = log_emissions(model, series, n, from, last, ForwardOptions { clamp_labels: false })?;
    let labels: Vec<Option<usize>> = (from.get()..=last.get())
        .map(|t| WeekIndex::new(t).map(|t| series.label_at(t).state()))
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity((last.get() - first.get() + 1) as usize);
    let mut e = Vec::with_capacity(raw.len());
    for w in first.get()..=last.get() {
        let len = (w - from.get() + 1) as usize;
        e.clear();
        e.extend_from_slice(&raw[..len]);
        if opts.clamp_labels {
            let known = (w.saturating_sub(label_lag) + 1).saturating_sub(from.get()) as usize;
            for (slot, state) in e.iter_mut().zip(&labels).take(known.min(len)) {
                if let Some(s) = state {
                    slot[1 - s] = f64::NEG_INFINITY;
                }
            }
        }
        let alphas = forward_log(model.pi(), model.trans(), &e);
        let a = alphas[len - 1];
        let evidence = log_sum_exp(a[0], a[1]);
        if evidence == f64::NEG_INFINITY || evidence.is_nan() {
            return Err(Error::Numerical(format!(
                "series `{}`: zero forward evidence up to week {w}",
                series.id()
            )));
        }
        out.push(PosteriorResult {
            series_id: series.id().to_string(),
            week: WeekIndex::new(w)?,
            p_outbreak: (a[1] - evidence).exp().clamp(0.0, 1.0),
            log_evidence: evidence,
        });
    }
    Ok(out)
}

/// Posterior for every series of `group` at `upto_week`.
pub fn posterior_group(
    model: &HmmModel,
    group: &SeriesGroup,
    upto_week: WeekIndex,
    opts: ForwardOptions,
) -> Result<Vec<PosteriorResult>> {
    group
        .series()
        .iter()
        .map(|s| {
            let n = model.series_index(s.id()).ok_or_else(|| {
                Error::Detection(format!("series `{}` is not in model `{}`", s.id(), model.group_id))
            })?;
            forward_posterior(model, s, n, upto_week, opts)
        })
        .collect()
}
