//! Negative-binomial log-link regression over a pooled design.
//!
//! Each series `n` owns four columns (intercept, trend, cos, sin) and all
//! series share one outbreak-indicator column:
//!
//! ```text
//! log mu[n,t] = b[n,0] + b[n,1] t + b[n,2] cos(2 pi t / 52) + b[n,3] sin(2 pi t / 52) + b4 s[n,t]
//! ```
//!
//! The weighted normal equations have arrow structure (4x4 diagonal blocks
//! plus one dense border row), which the solver exploits so a fit costs
//! O(rows + N) per iteration. Fitting alternates IRLS in the coefficients at
//! fixed sizes `r[n]` with a 1-D Newton maximization of each `r[n]`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nb::{digamma_diff, nb_log_pmf_unchecked, trigamma_diff};
use crate::series::{CovariateRow, SeriesGroup, WeekIndex};

pub const SIZE_MIN: f64 = 1e-3;
pub const SIZE_MAX: f64 = 1e6;
/// Intercept used for series whose training counts are all zero.
pub const ZERO_SERIES_INTERCEPT: f64 = -6.907_755_278_982_137; // ln(1e-3)
pub const ZERO_SERIES_SIZE: f64 = 1e3;
/// Bound on |b4|, ln(1000).
pub const OUTBREAK_EFFECT_CAP: f64 = 6.907_755_278_982_137;
const MAX_HALVINGS: usize = 10;
const TREND_SCALE: f64 = 52.0;

/// One observation of the pooled design.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DesignRow {
    pub series: usize,
    pub t: WeekIndex,
    pub outbreak: bool,
    pub count: u64,
}

impl DesignRow {
    /// Design entries in coefficient order: 1, t, cos, sin, outbreak.
    pub fn entries(&self) -> [f64; 5] {
        let z = CovariateRow::at(self.t);
        [1.0, z.trend, z.cos_term, z.sin_term, f64::from(u8::from(self.outbreak))]
    }
}

#[derive(Clone, Debug)]
pub struct PooledDesign {
    n_series: usize,
    with_outbreak: bool,
    rows: Vec<DesignRow>,
}

impl PooledDesign {
    pub fn new(n_series: usize, with_outbreak: bool, rows: Vec<DesignRow>) -> Result<Self> {
        if n_series == 0 {
            return Err(Error::Argument("design needs at least one series".into()));
        }
        if let Some(r) = rows.iter().find(|r| r.series >= n_series) {
            return Err(Error::Argument(format!(
                "row references series {} of {n_series}",
                r.series
            )));
        }
        Ok(PooledDesign {
            n_series,
            with_outbreak,
            rows,
        })
    }

    /// Rows for every labeled week of every series in `group`.
    pub fn from_group(group: &SeriesGroup) -> Result<Self> {
        let mut rows = Vec::with_capacity(group.len() * group.weeks());
        for (n, s) in group.series().iter().enumerate() {
            for (i, &count) in s.counts().iter().enumerate() {
                let t = s.first_t().plus(i as u32);
                if let Some(state) = s.label_at(t).state() {
                    rows.push(DesignRow {
                        series: n,
                        t,
                        outbreak: state == 1,
                        count,
                    });
                }
            }
        }
        PooledDesign::new(group.len(), true, rows)
    }

    pub fn n_series(&self) -> usize {
        self.n_series
    }

    pub fn with_outbreak(&self) -> bool {
        self.with_outbreak
    }

    pub fn rows(&self) -> &[DesignRow] {
        &self.rows
    }

    /// `4N + 1`, or `4N` without the shared column.
    pub fn n_columns(&self) -> usize {
        4 * self.n_series + usize::from(self.with_outbreak)
    }

    /// NB log-likelihood at original-scale coefficients `beta`.
    pub fn log_likelihood(&self, beta: &[f64], size_r: &[f64]) -> f64 {
        self.rows
            .iter()
            .map(|row| {
                let mu = linear_predictor(beta, self.n_series, self.with_outbreak, row).exp();
                nb_log_pmf_unchecked(row.count, mu, size_r[row.series])
            })
            .sum()
    }
}

fn linear_predictor(beta: &[f64], n_series: usize, with_outbreak: bool, row: &DesignRow) -> f64 {
    let x = row.entries();
    let b = &beta[4 * row.series..4 * row.series + 4];
    let mut eta = b[0] * x[0] + b[1] * x[1] + b[2] * x[2] + b[3] * x[3];
    if with_outbreak {
        eta += beta[4 * n_series] * x[4];
    }
    eta
}

#[derive(Clone, Copy, Debug)]
pub struct IrlsOptions {
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for IrlsOptions {
    fn default() -> Self {
        IrlsOptions {
            max_iter: 100,
            tol: 1e-8,
        }
    }
}

/// Per-iteration record of a fit, for diagnostics.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitTrace {
    /// `(outer round, deviance)` for each accepted IRLS step; the sizes are
    /// fixed within a round.
    pub deviance: Vec<(usize, f64)>,
    /// `-2 log L` after each round's size update.
    pub objective: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlmFit {
    /// Original-scale coefficients, four per series then the shared effect.
    pub beta: Vec<f64>,
    pub size_r: Vec<f64>,
    pub with_outbreak: bool,
    pub converged: bool,
    pub iterations: usize,
    pub log_likelihood: f64,
    /// Series fit with the clamped all-zero intercept.
    #[serde(default)]
    pub zero_series: Vec<usize>,
    #[serde(default)]
    pub outbreak_capped: bool,
    #[serde(skip)]
    pub trace: FitTrace,
}

impl GlmFit {
    pub fn n_series(&self) -> usize {
        self.size_r.len()
    }

    pub fn series_coefs(&self, n: usize) -> &[f64] {
        &self.beta[4 * n..4 * n + 4]
    }

    /// `b4`, zero when the design had no outbreak column.
    pub fn outbreak_effect(&self) -> f64 {
        if self.with_outbreak {
            self.beta[4 * self.n_series()]
        } else {
            0.0
        }
    }
}

/// Expected count of series `n` at `z` in hidden state `state`.
pub fn predict_mu(fit: &GlmFit, series_index: usize, z: &CovariateRow, state: usize) -> Result<f64> {
    if series_index >= fit.n_series() {
        return Err(Error::Argument(format!(
            "series index {series_index} out of range for {} series",
            fit.n_series()
        )));
    }
    Ok(predict_mu_unchecked(fit, series_index, z, state))
}

pub(crate) fn predict_mu_unchecked(fit: &GlmFit, n: usize, z: &CovariateRow, state: usize) -> f64 {
    let b = fit.series_coefs(n);
    let eta = b[0] + b[1] * z.trend + b[2] * z.cos_term + b[3] * z.sin_term;
    let effect = if state == 1 { fit.outbreak_effect() } else { 0.0 };
    (eta + effect).exp()
}

/// Arrow-structured symmetric system: per-series 4x4 blocks, an optional
/// border column shared by all series.
struct ArrowSystem {
    blocks: Vec<[[f64; 4]; 4]>,
    border: Vec<[f64; 4]>,
    corner: f64,
    rhs: Vec<[f64; 4]>,
    rhs_border: f64,
}

impl ArrowSystem {
    fn zeros(n: usize) -> Self {
        ArrowSystem {
            blocks: vec![[[0.0; 4]; 4]; n],
            border: vec![[0.0; 4]; n],
            corner: 0.0,
            rhs: vec![[0.0; 4]; n],
            rhs_border: 0.0,
        }
    }

    /// Solve for `(x_blocks, x_border)`; errors name the first failing column.
    fn solve(&self, active: &[bool], with_border: bool) -> Result<(Vec<[f64; 4]>, f64)> {
        let n = self.blocks.len();
        let mut factors = Vec::with_capacity(n);
        for (i, block) in self.blocks.iter().enumerate() {
            if !active[i] {
                factors.push(None);
                continue;
            }
            let l = cholesky4(block).map_err(|j| Error::Singular { column: 4 * i + j })?;
            factors.push(Some(l));
        }
        let mut x_border = 0.0;
        if with_border {
            let mut schur = self.corner;
            let mut reduced = self.rhs_border;
            for i in 0..n {
                if let Some(l) = &factors[i] {
                    let dinv_b = chol_solve4(l, &self.border[i]);
                    let dinv_g = chol_solve4(l, &self.rhs[i]);
                    schur -= dot4(&self.border[i], &dinv_b);
                    reduced -= dot4(&self.border[i], &dinv_g);
                }
            }
            if !(schur > 1e-10 * self.corner.max(f64::MIN_POSITIVE)) {
                return Err(Error::Singular { column: 4 * n });
            }
            x_border = reduced / schur;
        }
        let x = (0..n)
            .map(|i| match &factors[i] {
                Some(l) => {
                    let mut g = self.rhs[i];
                    for (gj, bj) in g.iter_mut().zip(&self.border[i]) {
                        *gj -= bj * x_border;
                    }
                    chol_solve4(l, &g)
                }
                None => [0.0; 4],
            })
            .collect();
        Ok((x, x_border))
    }
}

fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Lower Cholesky factor; `Err(j)` at the first non-positive pivot.
fn cholesky4(a: &[[f64; 4]; 4]) -> std::result::Result<[[f64; 4]; 4], usize> {
    let mut l = [[0.0; 4]; 4];
    for j in 0..4 {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if !(d > 1e-10 * a[j][j]) || a[j][j] <= 0.0 {
            return Err(j);
        }
        let d = d.sqrt();
        l[j][j] = d;
        for i in j + 1..4 {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / d;
        }
    }
    Ok(l)
}

fn chol_solve4(l: &[[f64; 4]; 4], b: &[f64; 4]) -> [f64; 4] {
    let mut y = [0.0; 4];
    for i in 0..4 {
        let mut s = b[i];
        for k in 0..i {
            s -= l[i][k] * y[k];
        }
        y[i] = s / l[i][i];
    }
    let mut x = [0.0; 4];
    for i in (0..4).rev() {
        let mut s = y[i];
        for k in i + 1..4 {
            s -= l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    x
}

/// Unit NB deviance at fixed size.
fn unit_deviance(y: f64, mu: f64, r: f64) -> f64 {
    let a = if y > 0.0 { y * (y / mu).ln() } else { 0.0 };
    2.0 * (a - (y + r) * ((y + r) / (mu + r)).ln())
}

/// Precomputed internal-scale design row.
#[derive(Clone, Copy)]
struct Obs {
    series: usize,
    x: [f64; 4],
    s: f64,
    y: f64,
}

struct Fitter<'a> {
    design: &'a PooledDesign,
    obs: Vec<Obs>,
    active: Vec<bool>,
    trend_center: f64,
    opts: IrlsOptions,
}

impl<'a> Fitter<'a> {
    fn eta(&self, coef: &[[f64; 4]], b4: f64, o: &Obs) -> f64 {
        dot4(&coef[o.series], &o.x) + b4 * o.s
    }

    fn deviance(&self, eta: &[f64], size: &[f64]) -> f64 {
        self.obs
            .iter()
            .zip(eta)
            .map(|(o, &e)| unit_deviance(o.y, e.exp(), size[o.series]))
            .sum()
    }

    fn log_lik(&self, eta: &[f64], size: &[f64]) -> f64 {
        self.obs
            .iter()
            .zip(eta)
            .map(|(o, &e)| nb_log_pmf_unchecked(o.y as u64, e.exp(), size[o.series]))
            .sum()
    }

    fn weighted_system(&self, eta: &[f64], size: &[f64]) -> ArrowSystem {
        let mut sys = ArrowSystem::zeros(self.design.n_series);
        for (o, &e) in self.obs.iter().zip(eta) {
            let mu = e.exp();
            let w = mu / (1.0 + mu / size[o.series]);
            let z = e + (o.y - mu) / mu;
            let n = o.series;
            let block = &mut sys.blocks[n];
            for i in 0..4 {
                let wxi = w * o.x[i];
                for j in 0..=i {
                    block[i][j] += wxi * o.x[j];
                }
                sys.rhs[n][i] += wxi * z;
                sys.border[n][i] += wxi * o.s;
            }
            sys.corner += w * o.s * o.s;
            sys.rhs_border += w * o.s * z;
        }
        for block in &mut sys.blocks {
            for i in 0..4 {
                for j in i + 1..4 {
                    block[i][j] = block[j][i];
                }
            }
        }
        sys
    }

    fn etas(&self, coef: &[[f64; 4]], b4: f64) -> Vec<f64> {
        self.obs.iter().map(|o| self.eta(coef, b4, o)).collect()
    }

    /// Maximize the NB log-likelihood of series `n` over `ln r`.
    fn update_size(&self, n: usize, eta: &[f64], r0: f64) -> f64 {
        let members: Vec<(f64, f64)> = self
            .obs
            .iter()
            .zip(eta)
            .filter(|(o, _)| o.series == n)
            .map(|(o, &e)| (o.y, e.exp()))
            .collect();
        let derivs = |r: f64| {
            let mut d1 = 0.0;
            let mut d2 = 0.0;
            for &(y, mu) in &members {
                d1 += digamma_diff(y, r) + (r / (r + mu)).ln() + (mu - y) / (r + mu);
                d2 += trigamma_diff(y, r) + 1.0 / r - 2.0 / (r + mu) + (y + r) / ((r + mu) * (r + mu));
            }
            // chain rule to theta = ln r
            (r * d1, r * r * d2 + r * d1)
        };
        let ll = |r: f64| -> f64 {
            members
                .iter()
                .map(|&(y, mu)| nb_log_pmf_unchecked(y as u64, mu, r))
                .sum()
        };
        let (lo_bound, hi_bound) = (SIZE_MIN.ln(), SIZE_MAX.ln());
        let mut lo = lo_bound;
        let mut hi = hi_bound;
        let mut theta = r0.clamp(SIZE_MIN, SIZE_MAX).ln();
        for _ in 0..100 {
            let (g, h) = derivs(theta.exp());
            if g.abs() < 1e-12 * (1.0 + members.len() as f64) {
                break;
            }
            if g > 0.0 {
                lo = theta;
            } else {
                hi = theta;
            }
            if (theta >= hi_bound && g > 0.0) || (theta <= lo_bound && g < 0.0) {
                break;
            }
            let newton = theta - g / h;
            let next = if h < 0.0 && newton > lo && newton < hi {
                newton
            } else if lo > lo_bound && hi < hi_bound {
                0.5 * (lo + hi)
            } else if g > 0.0 {
                (theta + 2.0).min(hi_bound)
            } else {
                (theta - 2.0).max(lo_bound)
            };
            if (next - theta).abs() < 1e-12 * (1.0 + theta.abs()) || hi - lo < 1e-12 {
                theta = next;
                break;
            }
            theta = next;
        }
        let r = if theta >= hi_bound {
            SIZE_MAX
        } else if theta <= lo_bound {
            SIZE_MIN
        } else {
            theta.exp()
        };
        // never accept a size that lowers the likelihood
        let before = ll(r0);
        if ll(r) + 1e-9 * (1.0 + before.abs()) < before {
            r0
        } else {
            r
        }
    }
}

/// Fit the pooled NB regression.
///
/// Alternates IRLS on the coefficients (with step halving whenever the
/// deviance increases) and per-series profile updates of `r[n]`, until the
/// relative change of `-2 log L` drops below `opts.tol`. A fit that runs out
/// of iterations is returned with `converged = false`.
pub fn irls_fit(design: &PooledDesign, opts: IrlsOptions) -> Result<GlmFit> {
    let n_series = design.n_series;
    let with_outbreak = design.with_outbreak;

    let mut sums = vec![(0usize, 0.0f64, 0.0f64); n_series];
    for r in &design.rows {
        let e = &mut sums[r.series];
        e.0 += 1;
        e.1 += r.count as f64;
        e.2 += (r.count as f64).powi(2);
    }
    let active: Vec<bool> = sums.iter().map(|&(k, s, _)| k > 0 && s > 0.0).collect();
    let zero_series: Vec<usize> = (0..n_series).filter(|&n| !active[n]).collect();

    let trend_center = {
        let act: Vec<f64> = design
            .rows
            .iter()
            .filter(|r| active[r.series])
            .map(|r| r.t.as_f64())
            .collect();
        if act.is_empty() {
            0.0
        } else {
            act.iter().sum::<f64>() / act.len() as f64
        }
    };
    let obs: Vec<Obs> = design
        .rows
        .iter()
        .filter(|r| active[r.series])
        .map(|r| {
            let e = r.entries();
            Obs {
                series: r.series,
                x: [1.0, (e[1] - trend_center) / TREND_SCALE, e[2], e[3]],
                s: e[4],
                y: r.count as f64,
            }
        })
        .collect();

    let n_active_cols = 4 * (n_series - zero_series.len()) + usize::from(with_outbreak);
    if !obs.is_empty() && obs.len() < n_active_cols {
        return Err(Error::Data(format!(
            "{} observations for {n_active_cols} coefficients",
            obs.len()
        )));
    }

    let mut size: Vec<f64> = sums
        .iter()
        .map(|&(k, s, s2)| {
            if s == 0.0 || k == 0 {
                return ZERO_SERIES_SIZE;
            }
            let k = k as f64;
            let mean = s / k;
            let var = if k > 1.0 { (s2 - k * mean * mean) / (k - 1.0) } else { 0.0 };
            (mean * mean / (var - mean).max(1e-6)).clamp(SIZE_MIN, SIZE_MAX)
        })
        .collect();

    let fitter = Fitter {
        design,
        obs,
        active: active.clone(),
        trend_center,
        opts,
    };

    let mut coef = vec![[0.0f64; 4]; n_series];
    for n in &zero_series {
        coef[*n][0] = ZERO_SERIES_INTERCEPT;
    }
    let mut b4 = 0.0;
    let mut trace = FitTrace::default();
    let mut iterations = 0;
    let mut converged = fitter.obs.is_empty();
    let mut capped = false;

    if !fitter.obs.is_empty() {
        // Starting point: one weighted least-squares step from mu = y + 0.1.
        let mut eta: Vec<f64> = fitter.obs.iter().map(|o| (o.y + 0.1).ln()).collect();
        let mut have_coef = false;
        let mut dev = f64::INFINITY;
        let mut objective = f64::INFINITY;

        'outer: for round in 0.. {
            let mut inner_converged = false;
            if have_coef {
                dev = fitter.deviance(&eta, &size);
                trace.deviance.push((round, dev));
            }
            while iterations < fitter.opts.max_iter {
                iterations += 1;
                let sys = fitter.weighted_system(&eta, &size);
                let (mut new_coef, mut new_b4) = sys.solve(&fitter.active, with_outbreak)?;
                if with_outbreak && new_b4.abs() > OUTBREAK_EFFECT_CAP {
                    new_b4 = new_b4.clamp(-OUTBREAK_EFFECT_CAP, OUTBREAK_EFFECT_CAP);
                    capped = true;
                }
                let mut new_eta = fitter.etas(&new_coef, new_b4);
                let mut new_dev = fitter.deviance(&new_eta, &size);
                if have_coef {
                    let mut halvings = 0;
                    while !(new_dev <= dev) && halvings < MAX_HALVINGS {
                        for (nc, c) in new_coef.iter_mut().zip(&coef) {
                            for j in 0..4 {
                                nc[j] = 0.5 * (nc[j] + c[j]);
                            }
                        }
                        new_b4 = 0.5 * (new_b4 + b4);
                        new_eta = fitter.etas(&new_coef, new_b4);
                        new_dev = fitter.deviance(&new_eta, &size);
                        halvings += 1;
                    }
                    if !(new_dev <= dev) {
                        // no descent direction left at this size
                        inner_converged = true;
                        break;
                    }
                }
                let rel = (dev - new_dev).abs() / (new_dev.abs() + 0.1);
                coef = new_coef;
                b4 = new_b4;
                eta = new_eta;
                dev = new_dev;
                have_coef = true;
                trace.deviance.push((round, dev));
                if rel < fitter.opts.tol {
                    inner_converged = true;
                    break;
                }
            }
            if !inner_converged {
                break 'outer;
            }
            for n in 0..n_series {
                if fitter.active[n] {
                    size[n] = fitter.update_size(n, &eta, size[n]);
                }
            }
            let new_objective = -2.0 * fitter.log_lik(&eta, &size);
            trace.objective.push(new_objective);
            let rel = (objective - new_objective).abs() / (new_objective.abs() + 0.1);
            objective = new_objective;
            if rel < fitter.opts.tol {
                converged = true;
                break;
            }
            if iterations >= fitter.opts.max_iter {
                break;
            }
        }
    }

    // back to the original trend scale
    let mut beta = Vec::with_capacity(design.n_columns());
    for (n, c) in coef.iter().enumerate() {
        if fitter.active[n] {
            let slope = c[1] / TREND_SCALE;
            beta.extend_from_slice(&[c[0] - slope * fitter.trend_center, slope, c[2], c[3]]);
        } else {
            beta.extend_from_slice(&[ZERO_SERIES_INTERCEPT, 0.0, 0.0, 0.0]);
        }
    }
    if with_outbreak {
        beta.push(b4);
    }
    let log_likelihood = design.log_likelihood(&beta, &size);
    if converged && !log_likelihood.is_finite() {
        return Err(Error::Numerical("log-likelihood is not finite at convergence".into()));
    }
    Ok(GlmFit {
        beta,
        size_r: size,
        with_outbreak,
        converged,
        iterations,
        log_likelihood,
        zero_series,
        outbreak_capped: capped,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nb::CountDist;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn w(t: u32) -> WeekIndex {
        WeekIndex::new(t).unwrap()
    }

    #[test]
    fn constant_response() {
        let rows = (1..=104)
            .map(|t| DesignRow {
                series: 0,
                t: w(t),
                outbreak: false,
                count: 5,
            })
            .collect();
        let design = PooledDesign::new(1, false, rows).unwrap();
        let fit = irls_fit(&design, IrlsOptions::default()).unwrap();
        assert!(fit.converged);
        assert!((fit.beta[0] - 5f64.ln()).abs() < 1e-8, "{:?}", fit.beta);
        for b in &fit.beta[1..4] {
            assert!(b.abs() < 1e-8);
        }
        assert_eq!(fit.size_r[0], SIZE_MAX);
    }

    #[test]
    fn predict_uses_multiplicative_effect() {
        let fit = GlmFit {
            beta: vec![2f64.ln(), 0.0, 0.0, 0.0, 3f64.ln()],
            size_r: vec![5.0],
            with_outbreak: true,
            converged: true,
            iterations: 1,
            log_likelihood: 0.0,
            zero_series: vec![],
            outbreak_capped: false,
            trace: FitTrace::default(),
        };
        let z = CovariateRow::at(w(10));
        assert!((predict_mu(&fit, 0, &z, 1).unwrap() - 6.0).abs() < 1e-12);
        let ratio = predict_mu(&fit, 0, &z, 1).unwrap() / predict_mu(&fit, 0, &z, 0).unwrap();
        assert!((ratio - 3.0).abs() < 1e-12);
        assert!(predict_mu(&fit, 1, &z, 0).is_err());
    }

    #[test]
    fn all_zero_series_is_clamped() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut rows = Vec::new();
        for t in 1..=156u32 {
            let outbreak = t % 13 == 0;
            let mu = if outbreak { 15.0 } else { 5.0 };
            rows.push(DesignRow {
                series: 0,
                t: w(t),
                outbreak,
                count: CountDist::neg_binom(mu, 4.0).unwrap().sample(&mut rng),
            });
            rows.push(DesignRow {
                series: 1,
                t: w(t),
                outbreak: false,
                count: 0,
            });
        }
        let fit = irls_fit(&PooledDesign::new(2, true, rows).unwrap(), IrlsOptions::default()).unwrap();
        assert!(fit.converged);
        assert_eq!(fit.zero_series, vec![1]);
        assert_eq!(fit.series_coefs(1), &[ZERO_SERIES_INTERCEPT, 0.0, 0.0, 0.0]);
        assert_eq!(fit.size_r[1], ZERO_SERIES_SIZE);
        assert!(fit.log_likelihood.is_finite());
    }

    #[test]
    fn missing_outbreak_rows_are_singular() {
        let rows = (1..=60)
            .map(|t| DesignRow {
                series: 0,
                t: w(t),
                outbreak: false,
                count: 3 + u64::from(t % 4),
            })
            .collect();
        let err = irls_fit(&PooledDesign::new(1, true, rows).unwrap(), IrlsOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Singular { column: 4 }), "{err}");
    }

    #[test]
    fn collinear_block_names_column() {
        // every row at the same week: trend and harmonic columns are constant
        let rows = (0..30)
            .map(|i| DesignRow {
                series: 0,
                t: w(7),
                outbreak: false,
                count: 2 + i % 3,
            })
            .collect();
        let err = irls_fit(&PooledDesign::new(1, false, rows).unwrap(), IrlsOptions::default()).unwrap_err();
        assert!(matches!(err, Error::Singular { column: 1 }), "{err}");
    }

    #[test]
    fn separated_outbreak_effect_is_capped() {
        let rows = (1..=120)
            .map(|t| {
                let outbreak = t % 10 == 0;
                DesignRow {
                    series: 0,
                    t: w(t),
                    outbreak,
                    count: if outbreak { 50_000 } else { u64::from(t % 2) },
                }
            })
            .collect();
        let fit = irls_fit(&PooledDesign::new(1, true, rows).unwrap(), IrlsOptions::default()).unwrap();
        assert!(fit.outbreak_capped);
        assert!(fit.outbreak_effect() <= OUTBREAK_EFFECT_CAP + 1e-12);
    }

    #[test]
    fn arrow_solver_matches_dense_elimination() {
        // compare against Gaussian elimination on the assembled dense matrix
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        use rand::Rng;
        let n = 3;
        let mut sys = ArrowSystem::zeros(n);
        let dim = 4 * n + 1;
        let mut dense = vec![vec![0.0; dim]; dim];
        let mut rhs = vec![0.0; dim];
        for _ in 0..200 {
            let s = rng.random_range(0..n);
            let x = [1.0, rng.random::<f64>(), rng.random::<f64>() - 0.5, rng.random::<f64>()];
            let o = f64::from(u8::from(rng.random::<f64>() < 0.2));
            let wgt = rng.random::<f64>() + 0.5;
            let z = rng.random::<f64>() * 3.0;
            let mut full = vec![0.0; dim];
            full[4 * s..4 * s + 4].copy_from_slice(&x);
            full[4 * n] = o;
            for i in 0..dim {
                rhs[i] += wgt * full[i] * z;
                for j in 0..dim {
                    dense[i][j] += wgt * full[i] * full[j];
                }
            }
            for i in 0..4 {
                for j in 0..4 {
                    sys.blocks[s][i][j] += wgt * x[i] * x[j];
                }
                sys.border[s][i] += wgt * x[i] * o;
                sys.rhs[s][i] += wgt * x[i] * z;
            }
            sys.corner += wgt * o * o;
            sys.rhs_border += wgt * o * z;
        }
        let (xb, xc) = sys.solve(&[true; 3], true).unwrap();
        // Gaussian elimination with partial pivoting
        let mut a = dense.clone();
        let mut b = rhs.clone();
        for c in 0..dim {
            let p = (c..dim).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
            a.swap(c, p);
            b.swap(c, p);
            for r in c + 1..dim {
                let f = a[r][c] / a[c][c];
                for k in c..dim {
                    a[r][k] -= f * a[c][k];
                }
                b[r] -= f * b[c];
            }
        }
        let mut sol = vec![0.0; dim];
        for r in (0..dim).rev() {
            let s: f64 = (r + 1..dim).map(|k| a[r][k] * sol[k]).sum();
            sol[r] = (b[r] - s) / a[r][r];
        }
        for s in 0..n {
            for j in 0..4 {
                assert!((xb[s][j] - sol[4 * s + j]).abs() < 1e-9);
            }
        }
        assert!((xc - sol[4 * n]).abs() < 1e-9);
    }
}
