//! Week-level scoring of detectors against outbreak labels.
//!
//! A week is predicted positive when its score is at least the threshold.
//! Weeks with an unknown label never enter a confusion matrix.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{Label, WeekIndex};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Hmm,
    Baseline,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Hmm => "hmm",
            Method::Baseline => crate::baseline::METHOD_NAME,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoredWeek {
    pub series_id: String,
    pub week: WeekIndex,
    pub label: Label,
    /// Posterior outbreak probability.
    pub hmm_score: Option<f64>,
    /// `1 - p_value` of the baseline.
    pub baseline_score: Option<f64>,
    /// Alarm decision of the baseline at its own `alpha`.
    pub baseline_alarm: Option<bool>,
    /// Cases attributed to the outbreak (reported, or simulated excess).
    pub outbreak_size: Option<u64>,
}

impl ScoredWeek {
    pub fn score(&self, method: Method) -> Option<f64> {
        match method {
            Method::Hmm => self.hmm_score,
            Method::Baseline => self.baseline_score,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl Confusion {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }

    pub fn sensitivity(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn fpr(&self) -> Option<f64> {
        ratio(self.fp, self.fp + self.tn)
    }

    /// `None` when nothing was predicted positive.
    pub fn precision(&self) -> Option<f64> {
        ratio(self.tp, self.tp + self.fp)
    }

    pub fn metrics(&self) -> Metrics {
        Metrics {
            confusion: *self,
            sensitivity: self.sensitivity(),
            fpr: self.fpr(),
            precision: self.precision(),
        }
    }
}

fn ratio(a: u64, b: u64) -> Option<f64> {
    (b > 0).then(|| a as f64 / b as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub confusion: Confusion,
    pub sensitivity: Option<f64>,
    pub fpr: Option<f64>,
    /// Undefined (`None`) with no predicted positives, never reported as 0.
    pub precision: Option<f64>,
}

/// Confusion matrix of an arbitrary alarm rule over the labeled weeks.
pub fn confusion_by<F: Fn(&ScoredWeek) -> bool>(scored: &[ScoredWeek], alarm: F) -> Confusion {
    let mut c = Confusion::default();
    for s in scored {
        let positive = match s.label {
            Label::Outbreak => true,
            Label::Endemic => false,
            Label::Unknown => continue,
        };
        match (alarm(s), positive) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    c
}

fn alarms_at(method: Method, threshold: f64) -> impl Fn(&ScoredWeek) -> bool {
    move |s| s.score(method).is_some_and(|x| x >= threshold)
}

pub fn metrics_at(scored: &[ScoredWeek], threshold: f64, method: Method) -> Metrics {
    confusion_by(scored, alarms_at(method, threshold)).metrics()
}

/// Metrics of the baseline's own alarm decisions.
pub fn metrics_at_alarms(scored: &[ScoredWeek]) -> Metrics {
    confusion_by(scored, |s| s.baseline_alarm == Some(true)).metrics()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub sensitivity: f64,
    /// `+inf` for the origin.
    pub threshold: f64,
}

/// Labeled `(score, is_outbreak)` pairs for `method`, sorted by score descending.
fn labeled_scores(scored: &[ScoredWeek], method: Method) -> Result<(Vec<(f64, bool)>, u64, u64)> {
    let mut v: Vec<(f64, bool)> = scored
        .iter()
        .filter_map(|s| Some((s.score(method)?, s.label.state()? == 1)))
        .collect();
    if let Some((x, _)) = v.iter().find(|(x, _)| x.is_nan()) {
        return Err(Error::Evaluation(format!("{} score {x} is not a number", method.name())));
    }
    let pos = v.iter().filter(|(_, y)| *y).count() as u64;
    let neg = v.len() as u64 - pos;
    v.sort_by(|a, b| b.0.total_cmp(&a.0));
    Ok((v, pos, neg))
}

/// ROC sweep over the distinct scores, thresholds descending, from `(0, 0)` to `(1, 1)`.
pub fn roc_curve(scored: &[ScoredWeek], method: Method) -> Result<Vec<RocPoint>> {
    let (v, pos, neg) = labeled_scores(scored, method)?;
    if pos == 0 || neg == 0 {
        return Err(Error::Evaluation(format!(
            "ROC needs both classes; {pos} outbreak and {neg} endemic weeks scored by {}",
            method.name()
        )));
    }
    let mut points = vec![RocPoint {
        fpr: 0.0,
        sensitivity: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < v.len() {
        let thr = v[i].0;
        while i < v.len() && v[i].0 == thr {
            if v[i].1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / neg as f64,
            sensitivity: tp as f64 / pos as f64,
            threshold: thr,
        });
    }
    Ok(points)
}

/// Trapezoidal area under a ROC curve.
pub fn auc(points: &[RocPoint]) -> f64 {
    points
        .windows(2)
        .map(|p| (p[1].fpr - p[0].fpr) * 0.5 * (p[1].sensitivity + p[0].sensitivity))
        .sum()
}

/// Largest threshold reaching `reference_sensitivity`.
pub fn match_sensitivity(scored: &[ScoredWeek], reference_sensitivity: f64, method: Method) -> Result<f64> {
    if !(reference_sensitivity > 0.0 && reference_sensitivity <= 1.0) {
        return Err(Error::Evaluation(format!(
            "reference sensitivity must be in (0, 1], got {reference_sensitivity}"
        )));
    }
    let (v, pos, _) = labeled_scores(scored, method)?;
    if pos == 0 {
        return Err(Error::Evaluation("no outbreak weeks to match sensitivity on".into()));
    }
    let mut tp = 0u64;
    let mut i = 0;
    while i < v.len() {
        let thr = v[i].0;
        while i < v.len() && v[i].0 == thr {
            tp += u64::from(v[i].1);
            i += 1;
        }
        if tp as f64 / pos as f64 >= reference_sensitivity {
            return Ok(thr);
        }
    }
    Err(Error::Evaluation(format!(
        "sensitivity {reference_sensitivity} is not attainable by {}",
        method.name()
    )))
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Overlap {
    pub both: u64,
    pub hmm_only: u64,
    pub baseline_only: u64,
    pub labeled_missed: u64,
}

/// Recall overlap of two alarm rules over the labeled outbreak weeks.
pub fn overlap_by<H, B>(scored: &[ScoredWeek], hmm: H, baseline: B) -> Overlap
where
    H: Fn(&ScoredWeek) -> bool,
    B: Fn(&ScoredWeek) -> bool,
{
    let mut o = Overlap::default();
    for s in scored.iter().filter(|s| s.label == Label::Outbreak) {
        match (hmm(s), baseline(s)) {
            (true, true) => o.both += 1,
            (true, false) => o.hmm_only += 1,
            (false, true) => o.baseline_only += 1,
            (false, false) => o.labeled_missed += 1,
        }
    }
    o
}

pub fn overlap_counts(scored: &[ScoredWeek], hmm_threshold: f64, baseline_threshold: f64) -> Overlap {
    overlap_by(
        scored,
        alarms_at(Method::Hmm, hmm_threshold),
        alarms_at(Method::Baseline, baseline_threshold),
    )
}

/// Fraction of outbreaks (maximal runs of labeled outbreak weeks in one
/// series) with at least one alarmed week.
pub fn event_recall<F: Fn(&ScoredWeek) -> bool>(scored: &[ScoredWeek], alarm: F) -> Option<f64> {
    let mut by_series: BTreeMap<&str, Vec<&ScoredWeek>> = BTreeMap::new();
    for s in scored {
        by_series.entry(&s.series_id).or_default().push(s);
    }
    let (mut events, mut hit) = (0u64, 0u64);
    for weeks in by_series.values_mut() {
        weeks.sort_by_key(|s| s.week);
        let mut in_event = false;
        let mut event_hit = false;
        let mut prev: Option<WeekIndex> = None;
        for s in weeks.iter() {
            let contiguous = prev.is_some_and(|p| p.get() + 1 == s.week.get());
            let outbreak = s.label == Label::Outbreak;
            if in_event && (!outbreak || !contiguous) {
                events += 1;
                hit += u64::from(event_hit);
                in_event = false;
            }
            if outbreak {
                if !in_event {
                    in_event = true;
                    event_hit = false;
                }
                event_hit |= alarm(s);
            }
            prev = Some(s.week);
        }
        if in_event {
            events += 1;
            hit += u64::from(event_hit);
        }
    }
    ratio(hit, events)
}

/// Lower edges of the outbreak-size strata.
pub const DEFAULT_SIZE_EDGES: [u64; 5] = [2, 3, 4, 6, 11];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StratumSummary {
    pub stratum: String,
    pub n: usize,
    pub min: Option<f64>,
    pub q1: Option<f64>,
    pub median: Option<f64>,
    pub q3: Option<f64>,
    pub max: Option<f64>,
    pub mean: Option<f64>,
}

fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    Some(sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64))
}

fn summarize(name: String, mut xs: Vec<f64>) -> StratumSummary {
    xs.sort_by(f64::total_cmp);
    let mean = (!xs.is_empty()).then(|| xs.iter().sum::<f64>() / xs.len() as f64);
    StratumSummary {
        stratum: name,
        n: xs.len(),
        min: xs.first().copied(),
        q1: quantile(&xs, 0.25),
        median: quantile(&xs, 0.5),
        q3: quantile(&xs, 0.75),
        max: xs.last().copied(),
        mean,
    }
}

/// Stratum names for `edges`: `<2`, `2`, `3`, `4-5`, `6-10`, `11+` for the defaults.
pub fn stratum_names(edges: &[u64]) -> Vec<String> {
    let mut names = Vec::with_capacity(edges.len() + 1);
    if let Some(&first) = edges.first() {
        names.push(format!("<{first}"));
    }
    for (i, &lo) in edges.iter().enumerate() {
        names.push(match edges.get(i + 1) {
            Some(&next) if next == lo + 1 => lo.to_string(),
            Some(&next) => format!("{lo}-{}", next - 1),
            None => format!("{lo}+"),
        });
    }
    names
}

fn stratum_of(size: u64, edges: &[u64]) -> usize {
    edges.iter().take_while(|&&e| size >= e).count()
}

/// Score distributions of endemic weeks and of outbreak weeks by size stratum.
pub fn size_strata(scored: &[ScoredWeek], method: Method, edges: &[u64]) -> Vec<StratumSummary> {
    let names = stratum_names(edges);
    let mut endemic = Vec::new();
    let mut unsized_ = Vec::new();
    let mut buckets = vec![Vec::new(); names.len()];
    for s in scored {
        let Some(x) = s.score(method) else { continue };
        match (s.label, s.outbreak_size) {
            (Label::Endemic, _) => endemic.push(x),
            (Label::Outbreak, Some(size)) => buckets[stratum_of(size, edges)].push(x),
            (Label::Outbreak, None) => unsized_.push(x),
            (Label::Unknown, _) => {}
        }
    }
    let mut out = vec![summarize("endemic".into(), endemic)];
    out.extend(names.into_iter().zip(buckets).map(|(n, b)| summarize(n, b)));
    if !unsized_.is_empty() {
        out.push(summarize("unsized".into(), unsized_));
    }
    out
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: String,
    pub auc: f64,
    pub roc: Vec<RocPoint>,
    pub strata: Vec<StratumSummary>,
}

/// Comparison at the baseline's own operating point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MatchedComparison {
    pub alpha: f64,
    pub baseline: Metrics,
    /// HMM threshold reaching the baseline's sensitivity.
    pub hmm_threshold: f64,
    pub hmm: Metrics,
    pub overlap: Overlap,
    pub hmm_event_recall: Option<f64>,
    pub baseline_event_recall: Option<f64>,
}

/// Both detectors thresholded to reach the same reference sensitivity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReferenceComparison {
    pub reference_sensitivity: f64,
    pub hmm_threshold: f64,
    pub hmm: Metrics,
    pub baseline_threshold: f64,
    pub baseline: Metrics,
    pub overlap: Overlap,
}

pub fn compare_at_sensitivity(scored: &[ScoredWeek], reference: f64) -> Result<ReferenceComparison> {
    let hmm_threshold = match_sensitivity(scored, reference, Method::Hmm)?;
    let baseline_threshold = match_sensitivity(scored, reference, Method::Baseline)?;
    Ok(ReferenceComparison {
        reference_sensitivity: reference,
        hmm_threshold,
        hmm: metrics_at(scored, hmm_threshold, Method::Hmm),
        baseline_threshold,
        baseline: metrics_at(scored, baseline_threshold, Method::Baseline),
        overlap: overlap_counts(scored, hmm_threshold, baseline_threshold),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub label: String,
    pub n_weeks: usize,
    pub n_outbreak: u64,
    pub n_endemic: u64,
    pub n_unknown: usize,
    pub methods: Vec<MethodReport>,
    pub matched: Option<MatchedComparison>,
    pub reference: Option<ReferenceComparison>,
}

/// Full comparison report; `matched` is absent when the baseline raised no
/// true alarm to match.
pub fn build_report(label: &str, scored: &[ScoredWeek], alpha: f64, edges: &[u64]) -> Result<EvalReport> {
    let mut methods = Vec::new();
    for m in [Method::Hmm, Method::Baseline] {
        let roc = roc_curve(scored, m)?;
        methods.push(MethodReport {
            method: m.name().to_string(),
            auc: auc(&roc),
            roc,
            strata: size_strata(scored, m, edges),
        });
    }
    let baseline = metrics_at_alarms(scored);
    let matched = match baseline.sensitivity {
        Some(sens) if sens > 0.0 => {
            let hmm_threshold = match_sensitivity(scored, sens, Method::Hmm)?;
            let hmm_alarm = alarms_at(Method::Hmm, hmm_threshold);
            let base_alarm = |s: &ScoredWeek| s.baseline_alarm == Some(true);
            Some(MatchedComparison {
                alpha,
                baseline,
                hmm_threshold,
                hmm: metrics_at(scored, hmm_threshold, Method::Hmm),
                overlap: overlap_by(scored, &hmm_alarm, base_alarm),
                hmm_event_recall: event_recall(scored, &hmm_alarm),
                baseline_event_recall: event_recall(scored, base_alarm),
            })
        }
        _ => None,
    };
    let c = confusion_by(scored, |_| true);
    Ok(EvalReport {
        label: label.to_string(),
        n_weeks: scored.len(),
        n_outbreak: c.tp,
        n_endemic: c.fp,
        n_unknown: scored.iter().filter(|s| s.label == Label::Unknown).count(),
        methods,
        matched,
        reference: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn week(i: usize, label: Label, hmm: f64, base: f64) -> ScoredWeek {
        ScoredWeek {
            series_id: "s".into(),
            week: WeekIndex::new(i as u32 + 1).unwrap(),
            label,
            hmm_score: Some(hmm),
            baseline_score: Some(base),
            baseline_alarm: Some(base >= 0.99),
            outbreak_size: None,
        }
    }

    fn toy(labels: &[u8], scores: &[f64]) -> Vec<ScoredWeek> {
        labels
            .iter()
            .zip(scores)
            .enumerate()
            .map(|(i, (&l, &x))| week(i, Label::from_state(l as usize), x, x))
            .collect()
    }

    #[test]
    fn perfect_separation() {
        let s = toy(&[1, 1, 0, 0, 0], &[0.9, 0.8, 0.3, 0.2, 0.1]);
        assert_eq!(auc(&roc_curve(&s, Method::Hmm).unwrap()), 1.0);
    }

    #[test]
    fn constant_scores_give_diagonal() {
        let s = toy(&[1, 0, 1, 0], &[0.5; 4]);
        let roc = roc_curve(&s, Method::Hmm).unwrap();
        assert_eq!(roc.len(), 2);
        assert_eq!((roc[1].fpr, roc[1].sensitivity), (1.0, 1.0));
        assert_eq!(auc(&roc), 0.5);
    }

    #[test]
    fn six_week_hand_count() {
        // at 0.5: predicted positive = weeks 0, 1, 3 -> TP 2 (0, 1), FP 1 (3), FN 1 (2), TN 2
        let s = toy(&[1, 1, 1, 0, 0, 0], &[0.9, 0.6, 0.2, 0.7, 0.4, 0.1]);
        let roc = roc_curve(&s, Method::Hmm).unwrap();
        let p = roc.iter().find(|p| p.threshold == 0.6).unwrap();
        assert_eq!((p.fpr, p.sensitivity), (1.0 / 3.0, 2.0 / 3.0));
        let m = metrics_at(&s, 0.5, Method::Hmm);
        assert_eq!(m.confusion, Confusion { tp: 2, fp: 1, fn_: 1, tn: 2 });
        assert_eq!(m.precision, Some(2.0 / 3.0));
    }

    #[test]
    fn single_class_is_an_error() {
        let s = toy(&[0, 0, 0], &[0.1, 0.2, 0.3]);
        assert!(matches!(roc_curve(&s, Method::Hmm), Err(Error::Evaluation(_))));
    }

    #[test]
    fn metric_arithmetic() {
        let c = Confusion { tp: 3, fp: 1, fn_: 9, tn: 87 };
        assert_eq!(c.sensitivity(), Some(0.25));
        assert_eq!(c.fpr(), Some(1.0 / 88.0));
        assert_eq!(c.precision(), Some(0.75));
        let s = toy(&[1, 0, 0], &[0.1, 0.2, 0.3]);
        let m = metrics_at(&s, 0.9, Method::Hmm);
        assert_eq!((m.sensitivity, m.fpr, m.precision), (Some(0.0), Some(0.0), None));
    }

    #[test]
    fn matching_full_sensitivity() {
        let s = toy(&[1, 0, 1, 0], &[0.9, 0.5, 0.3, 0.1]);
        let t = match_sensitivity(&s, 1.0, Method::Hmm).unwrap();
        assert!(t <= 0.3);
        assert!(match_sensitivity(&s, 0.0, Method::Hmm).is_err());
    }

    #[test]
    fn matching_prefers_lower_fpr() {
        // sensitivity 0.5 holds at thresholds 0.8 and 0.7; 0.7 adds a false positive
        let s = toy(&[1, 0, 1, 0], &[0.8, 0.7, 0.3, 0.1]);
        let t = match_sensitivity(&s, 0.5, Method::Hmm).unwrap();
        // exhaustive scan over the score grid
        let best = [0.8, 0.7, 0.3, 0.1]
            .into_iter()
            .filter(|&th| metrics_at(&s, th, Method::Hmm).sensitivity.unwrap() >= 0.5)
            .min_by(|a, b| {
                let fa = metrics_at(&s, *a, Method::Hmm).fpr.unwrap();
                let fb = metrics_at(&s, *b, Method::Hmm).fpr.unwrap();
                fa.total_cmp(&fb).then(b.total_cmp(a))
            })
            .unwrap();
        assert_eq!(t, best);
        assert_eq!(t, 0.8);
    }

    #[test]
    fn overlap_identical_and_disjoint() {
        let s = toy(&[1, 1, 1, 0], &[0.9, 0.4, 0.2, 0.1]);
        let o = overlap_counts(&s, 0.3, 0.3);
        assert_eq!((o.hmm_only, o.baseline_only), (0, 0));
        assert_eq!(o.both + o.labeled_missed, 3);
        let mut d = s.clone();
        d[0].baseline_score = Some(0.0);
        d[1].hmm_score = Some(0.0);
        d[1].baseline_score = Some(0.9);
        let o = overlap_counts(&d, 0.5, 0.5);
        assert_eq!(o.both, 0);
        assert_eq!((o.hmm_only, o.baseline_only), (1, 1));
    }

    #[test]
    fn unknown_weeks_are_excluded() {
        let mut s = toy(&[1, 0], &[0.9, 0.1]);
        s.push(week(2, Label::Unknown, 0.95, 0.95));
        let m = metrics_at(&s, 0.5, Method::Hmm);
        assert_eq!(m.confusion.total(), 2);
    }

    #[test]
    fn events_are_runs() {
        let s = toy(&[1, 1, 0, 1, 0, 1, 1, 1], &[0.1, 0.9, 0.0, 0.2, 0.0, 0.0, 0.0, 0.7]);
        assert_eq!(event_recall(&s, |w| w.hmm_score.unwrap() > 0.5), Some(2.0 / 3.0));
    }

    #[test]
    fn strata_names_and_assignment() {
        assert_eq!(stratum_names(&DEFAULT_SIZE_EDGES), ["<2", "2", "3", "4-5", "6-10", "11+"]);
        assert_eq!(stratum_of(1, &DEFAULT_SIZE_EDGES), 0);
        assert_eq!(stratum_of(2, &DEFAULT_SIZE_EDGES), 1);
        assert_eq!(stratum_of(5, &DEFAULT_SIZE_EDGES), 3);
        assert_eq!(stratum_of(10, &DEFAULT_SIZE_EDGES), 4);
        assert_eq!(stratum_of(400, &DEFAULT_SIZE_EDGES), 5);
    }

    proptest! {
        #[test]
        fn roc_is_monotone_and_conserves_totals(
            data in proptest::collection::vec((0u8..2, 0u32..20), 2..80)
        ) {
            let labels: Vec<u8> = data.iter().map(|d| d.0).collect();
            prop_assume!(labels.contains(&0) && labels.contains(&1));
            let scores: Vec<f64> = data.iter().map(|d| f64::from(d.1) / 20.0).collect();
            let s = toy(&labels, &scores);
            let roc = roc_curve(&s, Method::Hmm).unwrap();
            prop_assert_eq!((roc[0].fpr, roc[0].sensitivity), (0.0, 0.0));
            let last = roc.last().unwrap();
            prop_assert_eq!((last.fpr, last.sensitivity), (1.0, 1.0));
            for p in roc.windows(2) {
                prop_assert!(p[1].fpr >= p[0].fpr && p[1].sensitivity >= p[0].sensitivity);
                prop_assert!(p[1].threshold < p[0].threshold);
            }
            for p in &roc[1..] {
                let m = metrics_at(&s, p.threshold, Method::Hmm);
                prop_assert_eq!(m.confusion.total() as usize, s.len());
                prop_assert_eq!(m.sensitivity.unwrap(), p.sensitivity);
            }
        }

        #[test]
        fn matched_threshold_reaches_reference(
            data in proptest::collection::vec((0u8..2, 0u32..50), 2..80),
            reference in 0.01f64..1.0,
        ) {
            let labels: Vec<u8> = data.iter().map(|d| d.0).collect();
            prop_assume!(labels.contains(&1));
            let scores: Vec<f64> = data.iter().map(|d| f64::from(d.1)).collect();
            let s = toy(&labels, &scores);
            let t = match_sensitivity(&s, reference, Method::Hmm).unwrap();
            prop_assert!(metrics_at(&s, t, Method::Hmm).sensitivity.unwrap() >= reference);
            // the next grid point up falls short
            if let Some(up) = scores.iter().copied().filter(|&x| x > t).min_by(f64::total_cmp) {
                prop_assert!(metrics_at(&s, up, Method::Hmm).sensitivity.unwrap() < reference);
            }
        }
    }
}
