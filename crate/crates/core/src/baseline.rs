//! Comparator detector: seasonal NB regression with a plug-in quantile alarm.
//!
//! For each series and evaluation week a single-series NB regression (trend
//! plus annual harmonic, log link) is fit on the window that ends
//! `holdout_u` weeks before the current week. Labeled outbreak weeks are
//! dropped from the fit. The current count alarms when it reaches the
//! smallest `k` with `P(X >= k) < alpha` under the fitted distribution.
//!
//! This is a simplified stand-in with the same alarm semantics as the
//! `nbPlugin` threshold of farringtonFlexible; it has no period factor,
//! no residual reweighting and no power transformation. It is reported as
//! `nb-plugin-baseline`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::glm::{irls_fit, DesignRow, IrlsOptions, PooledDesign};
use crate::nb::CountDist;
use crate::series::{CovariateRow, Label, SurveillanceSeries, WeekIndex};

pub const METHOD_NAME: &str = "nb-plugin-baseline";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineConfig {
    pub window_years: u32,
    pub holdout_u: u32,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        BaselineConfig {
            window_years: 5,
            holdout_u: 26,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineFit {
    /// Intercept, trend, cos, sin.
    pub beta: [f64; 4],
    /// NB size; `None` for the Poisson fallback.
    pub size_r: Option<f64>,
    /// First and last week of the fitting window.
    pub window: (WeekIndex, WeekIndex),
    /// Set when the regression failed and the window mean is used.
    pub fallback: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineScore {
    pub p_value: f64,
    pub alarm: bool,
    pub threshold: u64,
    pub expected: f64,
}

impl BaselineFit {
    /// Fit the baseline for `current_week`.
    pub fn fit(series: &SurveillanceSeries, current_week: WeekIndex, cfg: &BaselineConfig) -> Result<Self> {
        let window_len = cfg.window_years * 52;
        if cfg.holdout_u >= window_len {
            return Err(Error::Argument("holdout must be shorter than the window".into()));
        }
        let from = current_week
            .minus(window_len - 1)
            .filter(|&w| w >= series.first_t() && current_week <= series.last_t())
            .ok_or_else(|| {
                Error::Data(format!(
                    "series `{}` lacks {window_len} weeks of history at week {current_week}",
                    series.id()
                ))
            })?;
        let to = current_week.minus(cfg.holdout_u).expect("holdout shorter than window");
        let rows: Vec<DesignRow> = (from.get()..=to.get())
            .filter_map(|t| {
                let t = WeekIndex::new(t).ok()?;
                if series.label_at(t) == Label::Outbreak {
                    return None;
                }
                Some(DesignRow {
                    series: 0,
                    t,
                    outbreak: false,
                    count: series.count_at(t)?,
                })
            })
            .collect();
        let window_mean = if rows.is_empty() {
            0.0
        } else {
            rows.iter().map(|r| r.count as f64).sum::<f64>() / rows.len() as f64
        };
        let fallback = || BaselineFit {
            beta: [window_mean.max(f64::MIN_POSITIVE).ln(), 0.0, 0.0, 0.0],
            size_r: None,
            window: (from, to),
            fallback: true,
        };
        if window_mean == 0.0 {
            return Ok(fallback());
        }
        let fit = PooledDesign::new(1, false, rows).and_then(|d| irls_fit(&d, IrlsOptions::default()));
        match fit {
            Ok(f) if f.converged && f.zero_series.is_empty() => Ok(BaselineFit {
                beta: [f.beta[0], f.beta[1], f.beta[2], f.beta[3]],
                size_r: Some(f.size_r[0]),
                window: (from, to),
                fallback: false,
            }),
            Ok(_) | Err(Error::Singular { .. }) | Err(Error::Data(_)) | Err(Error::Numerical(_)) => {
                log::debug!("baseline fit for `{}` at {current_week} fell back to Poisson", series.id());
                Ok(fallback())
            }
            Err(e) => Err(e),
        }
    }

    /// Predictive count distribution at week `t`.
    pub fn predict(&self, t: WeekIndex) -> CountDist {
        let z = CovariateRow::at(t);
        let b = &self.beta;
        let mean = if self.fallback {
            b[0].exp()
        } else {
            (b[0] + b[1] * z.trend + b[2] * z.cos_term + b[3] * z.sin_term).exp()
        };
        let mean = if mean.is_finite() { mean } else { f64::MAX.sqrt() };
        match self.size_r {
            Some(r) => CountDist::NegBinom { mean, size: r },
            None => CountDist::Poisson {
                mean: if self.fallback && mean <= 2.0 * f64::MIN_POSITIVE { 0.0 } else { mean },
            },
        }
    }

    /// Score an observed count at week `t`.
    pub fn score(&self, observed: u64, t: WeekIndex, alpha: f64) -> Result<BaselineScore> {
        if !(alpha > 0.0 && alpha < 1.0) {
            return Err(Error::Argument(format!("alpha must be in (0, 1), got {alpha}")));
        }
        let dist = self.predict(t);
        let threshold = if dist.mean() == 0.0 { 1 } else { dist.alarm_threshold(alpha) };
        Ok(BaselineScore {
            p_value: dist.upper_tail(observed),
            alarm: observed >= threshold,
            threshold,
            expected: dist.mean(),
        })
    }
}

/// Fit and score `series` at `current_week`.
pub fn baseline_score(
    series: &SurveillanceSeries,
    current_week: WeekIndex,
    alpha: f64,
    cfg: &BaselineConfig,
) -> Result<BaselineScore> {
    let observed = series
        .count_at(current_week)
        .ok_or_else(|| Error::Data(format!("series `{}` has no week {current_week}", series.id())))?;
    BaselineFit::fit(series, current_week, cfg)?.score(observed, current_week, alpha)
}
