//! Weekly surveillance series, series groups and the seasonal covariates.
//!
//! Every series lives on a contiguous weekly grid. Positions on the grid are
//! 1-based [`WeekIndex`] values; a series carries the index of its first week
//! so that windows cut out of a longer series keep their original covariates.
//! The seasonal harmonic uses the raw index with a fixed 52-week period, so
//! ISO years with 53 weeks drift by one week against the calendar.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Weekday};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Weeks per seasonal period.
pub const PERIOD: f64 = 52.0;

/// 1-based position of a week on a series grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "u32", into = "u32")]
pub struct WeekIndex(u32);

impl WeekIndex {
    pub fn new(t: u32) -> Result<Self> {
        if t == 0 {
            return Err(Error::Range("week index must be >= 1".into()));
        }
        Ok(WeekIndex(t))
    }

    pub const fn get(self) -> u32 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        f64::from(self.0)
    }

    /// Index `k` weeks later.
    pub fn plus(self, k: u32) -> WeekIndex {
        WeekIndex(self.0 + k)
    }

    /// Index `k` weeks earlier, if it stays on the grid.
    pub fn minus(self, k: u32) -> Option<WeekIndex> {
        self.0.checked_sub(k).filter(|&t| t >= 1).map(WeekIndex)
    }
}

impl TryFrom<u32> for WeekIndex {
    type Error = Error;
    fn try_from(t: u32) -> Result<Self> {
        WeekIndex::new(t)
    }
}

impl From<WeekIndex> for u32 {
    fn from(w: WeekIndex) -> u32 {
        w.0
    }
}

impl fmt::Display for WeekIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// ISO 8601 year and week, written `YYYY-Www`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct YearWeek {
    year: i32,
    week: u32,
}

impl YearWeek {
    pub fn new(year: i32, week: u32) -> Result<Self> {
        if NaiveDate::from_isoywd_opt(year, week, Weekday::Mon).is_none() {
            return Err(Error::Argument(format!("{year}-W{week:02} is not an ISO week")));
        }
        Ok(YearWeek { year, week })
    }

    pub fn year(self) -> i32 {
        self.year
    }

    pub fn week(self) -> u32 {
        self.week
    }

    fn monday(self) -> NaiveDate {
        NaiveDate::from_isoywd_opt(self.year, self.week, Weekday::Mon)
            .expect("validated on construction")
    }

    fn from_date(date: NaiveDate) -> Self {
        let iso = date.iso_week();
        YearWeek {
            year: iso.year(),
            week: iso.week(),
        }
    }

    /// The ISO week `weeks` weeks after (or before, if negative) this one.
    pub fn offset(self, weeks: i64) -> YearWeek {
        YearWeek::from_date(self.monday() + chrono::Duration::weeks(weeks))
    }

    /// Signed number of weeks from `self` to `other`.
    pub fn weeks_until(self, other: YearWeek) -> i64 {
        (other.monday() - self.monday()).num_days() / 7
    }
}

impl fmt::Display for YearWeek {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-W{:02}", self.year, self.week)
    }
}

impl FromStr for YearWeek {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Argument(format!("`{s}` is not a YYYY-Www week"));
        let (year, week) = s.split_once("-W").ok_or_else(bad)?;
        if year.len() != 4 || week.len() != 2 {
            return Err(bad());
        }
        let year: i32 = year.parse().map_err(|_| bad())?;
        let week: u32 = week.parse().map_err(|_| bad())?;
        YearWeek::new(year, week)
    }
}

impl Serialize for YearWeek {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for YearWeek {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Week label: endemic (state 0), outbreak (state 1), or not known.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Endemic,
    Outbreak,
    Unknown,
}

impl Label {
    pub fn from_state(s: usize) -> Label {
        match s {
            0 => Label::Endemic,
            _ => Label::Outbreak,
        }
    }

    /// Hidden-state index, `None` when unknown.
    pub fn state(self) -> Option<usize> {
        match self {
            Label::Endemic => Some(0),
            Label::Outbreak => Some(1),
            Label::Unknown => None,
        }
    }

    pub fn is_known(self) -> bool {
        self != Label::Unknown
    }
}

/// One region's weekly case counts with optional aligned labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SurveillanceSeries {
    series_id: String,
    /// Calendar week of `counts[0]`.
    start_week: YearWeek,
    /// Grid index of `counts[0]`.
    first_t: WeekIndex,
    counts: Vec<u64>,
    labels: Option<Vec<Label>>,
}

impl SurveillanceSeries {
    pub fn new(
        series_id: impl Into<String>,
        start_week: YearWeek,
        counts: Vec<u64>,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        Self::with_origin(series_id, start_week, WeekIndex(1), counts, labels)
    }

    /// Series whose first element sits at grid index `first_t`.
    pub fn with_origin(
        series_id: impl Into<String>,
        start_week: YearWeek,
        first_t: WeekIndex,
        counts: Vec<u64>,
        labels: Option<Vec<Label>>,
    ) -> Result<Self> {
        let series_id = series_id.into();
        if counts.is_empty() {
            return Err(Error::Data(format!("series `{series_id}` has no weeks")));
        }
        if let Some(l) = &labels {
            if l.len() != counts.len() {
                return Err(Error::Data(format!(
                    "series `{series_id}`: {} labels for {} counts",
                    l.len(),
                    counts.len()
                )));
            }
        }
        Ok(SurveillanceSeries {
            series_id,
            start_week,
            first_t,
            counts,
            labels,
        })
    }

    pub fn id(&self) -> &str {
        &self.series_id
    }

    pub fn start_week(&self) -> YearWeek {
        self.start_week
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn labels(&self) -> Option<&[Label]> {
        self.labels.as_deref()
    }

    pub fn first_t(&self) -> WeekIndex {
        self.first_t
    }

    pub fn last_t(&self) -> WeekIndex {
        self.first_t.plus(self.counts.len() as u32 - 1)
    }

    fn offset_of(&self, t: WeekIndex) -> Option<usize> {
        let off = t.get().checked_sub(self.first_t.get())? as usize;
        (off < self.counts.len()).then_some(off)
    }

    pub fn contains(&self, t: WeekIndex) -> bool {
        self.offset_of(t).is_some()
    }

    pub fn count_at(&self, t: WeekIndex) -> Option<u64> {
        self.offset_of(t).map(|i| self.counts[i])
    }

    /// Label at grid index `t`; `Unknown` when unlabeled or off the grid.
    pub fn label_at(&self, t: WeekIndex) -> Label {
        match (&self.labels, self.offset_of(t)) {
            (Some(l), Some(i)) => l[i],
            _ => Label::Unknown,
        }
    }

    pub fn year_week_at(&self, t: WeekIndex) -> YearWeek {
        self.start_week
            .offset(i64::from(t.get()) - i64::from(self.first_t.get()))
    }

    /// Grid index of a calendar week, if it falls on this series.
    pub fn index_of(&self, week: YearWeek) -> Option<WeekIndex> {
        let off = self.start_week.weeks_until(week);
        if off < 0 || off as usize >= self.counts.len() {
            return None;
        }
        Some(self.first_t.plus(off as u32))
    }

    /// Sub-series covering `[from, to]` with labels after `unknown_after` masked.
    pub fn window(
        &self,
        from: WeekIndex,
        to: WeekIndex,
        unknown_after: Option<WeekIndex>,
    ) -> Result<SurveillanceSeries> {
        let (a, b) = match (self.offset_of(from), self.offset_of(to)) {
            (Some(a), Some(b)) if a <= b => (a, b),
            _ => {
                return Err(Error::Range(format!(
                    "window {from}..{to} outside series `{}` ({}..{})",
                    self.series_id,
                    self.first_t,
                    self.last_t()
                )))
            }
        };
        let labels = self.labels.as_ref().map(|l| {
            l[a..=b]
                .iter()
                .enumerate()
                .map(|(i, &lab)| match unknown_after {
                    Some(cut) if from.get() + i as u32 > cut.get() => Label::Unknown,
                    _ => lab,
                })
                .collect()
        });
        SurveillanceSeries::with_origin(
            self.series_id.clone(),
            self.year_week_at(from),
            from,
            self.counts[a..=b].to_vec(),
            labels,
        )
    }

    /// Copy with labels replaced.
    pub fn with_labels(&self, labels: Option<Vec<Label>>) -> Result<SurveillanceSeries> {
        SurveillanceSeries::with_origin(
            self.series_id.clone(),
            self.start_week,
            self.first_t,
            self.counts.clone(),
            labels,
        )
    }
}

/// Series that share one model and one week grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesGroup {
    group_id: String,
    series: Vec<SurveillanceSeries>,
}

impl SeriesGroup {
    pub fn new(group_id: impl Into<String>, series: Vec<SurveillanceSeries>) -> Result<Self> {
        let group_id = group_id.into();
        let first = series
            .first()
            .ok_or_else(|| Error::Data(format!("group `{group_id}` has no series")))?;
        for s in &series[1..] {
            if s.first_t != first.first_t
                || s.start_week != first.start_week
                || s.len() != first.len()
            {
                return Err(Error::Data(format!(
                    "group `{group_id}`: series `{}` is not on the grid of `{}`",
                    s.id(),
                    first.id()
                )));
            }
        }
        Ok(SeriesGroup { group_id, series })
    }

    pub fn id(&self) -> &str {
        &self.group_id
    }

    pub fn series(&self) -> &[SurveillanceSeries] {
        &self.series
    }

    pub fn len(&self) -> usize {
        self.series.len()
    }

    pub fn is_empty(&self) -> bool {
        self.series.is_empty()
    }

    pub fn first_t(&self) -> WeekIndex {
        self.series[0].first_t()
    }

    pub fn last_t(&self) -> WeekIndex {
        self.series[0].last_t()
    }

    /// Number of weeks on the shared grid.
    pub fn weeks(&self) -> usize {
        self.series[0].len()
    }

    pub fn outbreak_weeks(&self) -> usize {
        self.series
            .iter()
            .filter_map(|s| s.labels())
            .flatten()
            .filter(|&&l| l == Label::Outbreak)
            .count()
    }
}

/// Deterministic covariates at week `t`: trend and the annual harmonic.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CovariateRow {
    pub t: WeekIndex,
    pub trend: f64,
    pub cos_term: f64,
    pub sin_term: f64,
}

impl CovariateRow {
    pub fn at(t: WeekIndex) -> Self {
        let angle = 2.0 * PI * t.as_f64() / PERIOD;
        let (sin_term, cos_term) = angle.sin_cos();
        CovariateRow {
            t,
            trend: t.as_f64(),
            cos_term,
            sin_term,
        }
    }
}

/// One covariate row per week in `[t_start, t_end]`.
pub fn build_covariates(t_start: WeekIndex, t_end: WeekIndex) -> Result<Vec<CovariateRow>> {
    if t_start > t_end {
        return Err(Error::Range(format!("empty covariate range {t_start}..{t_end}")));
    }
    Ok((t_start.get()..=t_end.get())
        .map(|t| CovariateRow::at(WeekIndex(t)))
        .collect())
}

/// Training data and inference window for one evaluation week.
#[derive(Clone, Debug)]
pub struct SplitWindow {
    /// Labeled weeks up to `current_week - holdout_u`.
    pub training: SeriesGroup,
    /// All weeks of the window; the latest `holdout_u` weeks are unlabeled.
    pub full: SeriesGroup,
}

/// Cut the `window_years * 52` weeks ending at `current_week` out of `group`.
///
/// The training part drops the final `holdout_u` weeks; the full part keeps
/// them with their labels masked to [`Label::Unknown`].
pub fn train_test_split(
    group: &SeriesGroup,
    current_week: WeekIndex,
    window_years: u32,
    holdout_u: u32,
) -> Result<SplitWindow> {
    let window_len = window_years * 52;
    if window_len == 0 {
        return Err(Error::Argument("window_years must be >= 1".into()));
    }
    if holdout_u >= window_len {
        return Err(Error::Argument(format!(
            "holdout of {holdout_u} weeks leaves no training data in a {window_len}-week window"
        )));
    }
    if current_week > group.last_t() {
        return Err(Error::Data(format!(
            "week {current_week} is past the end of group `{}` (last week {})",
            group.id(),
            group.last_t()
        )));
    }
    let from = current_week
        .minus(window_len - 1)
        .filter(|&w| w >= group.first_t())
        .ok_or_else(|| {
            let available = current_week.get().saturating_sub(group.first_t().get()) + 1;
            Error::Data(format!(
                "series `{}` has {available} weeks up to week {current_week}; {window_len} required",
                group.series()[0].id()
            ))
        })?;
    let train_end = current_week
        .minus(holdout_u)
        .expect("holdout shorter than window");
    let training = group
        .series()
        .iter()
        .map(|s| s.window(from, train_end, None))
        .collect::<Result<Vec<_>>>()?;
    let full = group
        .series()
        .iter()
        .map(|s| s.window(from, current_week, Some(train_end)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SplitWindow {
        training: SeriesGroup::new(group.id(), training)?,
        full: SeriesGroup::new(group.id(), full)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn w(t: u32) -> WeekIndex {
        WeekIndex::new(t).unwrap()
    }

    fn labeled_group(n: usize, weeks: usize) -> SeriesGroup {
        let start = YearWeek::new(2010, 1).unwrap();
        let series = (0..n)
            .map(|i| {
                let counts = (0..weeks as u64).map(|t| (t + i as u64) % 7).collect();
                let labels = (0..weeks)
                    .map(|t| if t % 10 == 3 { Label::Outbreak } else { Label::Endemic })
                    .collect();
                SurveillanceSeries::new(format!("s{i}"), start, counts, Some(labels)).unwrap()
            })
            .collect();
        SeriesGroup::new("g", series).unwrap()
    }

    #[test]
    fn covariates_full_and_quarter_period() {
        let r = CovariateRow::at(w(52));
        assert!((r.cos_term - 1.0).abs() < 1e-12);
        assert!(r.sin_term.abs() < 1e-12);
        let r = CovariateRow::at(w(13));
        assert!(r.cos_term.abs() < 1e-12);
        assert!((r.sin_term - 1.0).abs() < 1e-12);
    }

    #[test]
    fn covariates_span_simulation_length() {
        let rows = build_covariates(w(1), w(624)).unwrap();
        assert_eq!(rows.len(), 624);
        for (i, r) in rows.iter().enumerate() {
            assert_eq!(r.trend, (i + 1) as f64);
            assert!((r.cos_term.powi(2) + r.sin_term.powi(2) - 1.0).abs() < 1e-12);
        }
        assert!(build_covariates(w(5), w(4)).is_err());
        assert!(WeekIndex::new(0).is_err());
    }

    #[test]
    fn split_window_lengths() {
        let g = labeled_group(3, 286);
        let split = train_test_split(&g, w(286), 5, 26).unwrap();
        assert_eq!(split.full.weeks(), 260);
        assert_eq!(split.training.weeks(), 234);
        assert_eq!(split.full.first_t(), w(27));
        assert_eq!(split.training.last_t(), w(260));

        let split = train_test_split(&g, w(286), 5, 0).unwrap();
        assert_eq!(split.training.weeks(), split.full.weeks());
    }

    #[test]
    fn split_requires_history() {
        let g = labeled_group(2, 200);
        let err = train_test_split(&g, w(200), 5, 26).unwrap_err();
        assert!(matches!(err, Error::Data(ref m) if m.contains("s0") && m.contains("260")));
    }

    #[test]
    fn split_masks_holdout_only() {
        let g = labeled_group(2, 300);
        let split = train_test_split(&g, w(290), 5, 26).unwrap();
        for (orig, full) in g.series().iter().zip(split.full.series()) {
            for t in full.first_t().get()..=full.last_t().get() {
                let t = w(t);
                if t.get() > 264 {
                    assert_eq!(full.label_at(t), Label::Unknown);
                } else {
                    assert_eq!(full.label_at(t), orig.label_at(t));
                    assert_eq!(full.count_at(t), orig.count_at(t));
                }
            }
        }
        for s in split.training.series() {
            assert!(s.labels().unwrap().iter().all(|l| l.is_known()));
        }
    }

    #[test]
    fn year_week_parsing_and_offsets() {
        let yw: YearWeek = "2015-W53".parse().unwrap();
        assert_eq!(yw.to_string(), "2015-W53");
        assert_eq!(yw.offset(1).to_string(), "2016-W01");
        assert!("2014-W53".parse::<YearWeek>().is_err());
        assert!("2014-53".parse::<YearWeek>().is_err());
        let a: YearWeek = "2010-W01".parse().unwrap();
        assert_eq!(a.weeks_until(a.offset(623)), 623);
    }

    #[test]
    fn group_rejects_misaligned_series() {
        let start = YearWeek::new(2010, 1).unwrap();
        let a = SurveillanceSeries::new("a", start, vec![1, 2, 3], None).unwrap();
        let b = SurveillanceSeries::new("b", start, vec![1, 2], None).unwrap();
        assert!(SeriesGroup::new("g", vec![a, b]).is_err());
        assert!(SurveillanceSeries::new("c", start, vec![1], Some(vec![])).is_err());
    }

    proptest! {
        #[test]
        fn harmonic_is_periodic(t in 1u32..10_000) {
            let a = CovariateRow::at(w(t));
            let b = CovariateRow::at(w(t + 52));
            prop_assert!((a.cos_term - b.cos_term).abs() < 1e-9);
            prop_assert!((a.sin_term - b.sin_term).abs() < 1e-9);
        }

        #[test]
        fn series_json_round_trip(
            counts in proptest::collection::vec(0u64..1_000_000, 1..60),
            seed in any::<u64>(),
        ) {
            let labels: Vec<Label> = counts
                .iter()
                .enumerate()
                .map(|(i, _)| match (seed >> (i % 64)) & 3 {
                    0 => Label::Endemic,
                    1 => Label::Outbreak,
                    _ => Label::Unknown,
                })
                .collect();
            let s = SurveillanceSeries::new("x", YearWeek::new(2012, 7).unwrap(), counts, Some(labels)).unwrap();
            let back: SurveillanceSeries = serde_json::from_str(&serde_json::to_string(&s).unwrap()).unwrap();
            prop_assert_eq!(back, s);
        }
    }
}
