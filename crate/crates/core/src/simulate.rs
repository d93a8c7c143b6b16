//! Benchmark series generator for the 14 seasonal scenarios.
//!
//! Each series draws its own transition probabilities, runs a two-state
//! Markov chain from the endemic state, and samples weekly counts with
//! variance `phi * mean`. Outbreak weeks use a mean calibrated so that a
//! one-sided test at level `alpha` against the endemic distribution detects
//! them with probability `target_power`.
//!
//! Sub-seeds for series are derived with [`derive_seed`], a SplitMix64 mix
//! of the master seed, the scenario id and the series index; each series
//! then runs its own `ChaCha8` stream.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nb::CountDist;
use crate::series::{CovariateRow, Label, SurveillanceSeries, WeekIndex, YearWeek};

pub const SERIES_LENGTH: u32 = 624;
pub const DEFAULT_POWER: f64 = 0.5;
pub const DEFAULT_ALPHA: f64 = 0.01;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub id: u32,
    /// Intercept, trend, cos and sin coefficients of the log endemic mean.
    pub beta: [f64; 4],
    /// Variance-to-mean ratio of the counts.
    pub phi: f64,
    pub length_t: u32,
    pub a00_range: (f64, f64),
    pub a11_range: (f64, f64),
}

/// `(beta0, beta1, beta2, beta3, phi)` for scenarios 1..=14.
const TABLE: [[f64; 5]; 14] = [
    [0.1, 0.0, 0.6, 0.6, 1.5],
    [0.1, 0.0025, 0.6, 0.6, 1.5],
    [-2.0, 0.0, 0.1, 0.3, 2.0],
    [-2.0, 0.005, 0.1, 0.3, 2.0],
    [1.5, 0.0, 0.2, -0.4, 1.0],
    [1.5, 0.003, 0.2, -0.4, 1.0],
    [0.5, 0.0, 0.5, 0.5, 5.0],
    [0.5, 0.002, 0.5, 0.5, 5.0],
    [2.5, 0.0, 1.0, 0.1, 3.0],
    [2.5, 0.001, 1.0, 0.1, 3.0],
    [3.75, 0.0, 0.1, -0.1, 1.1],
    [3.75, 0.001, 0.1, -0.1, 1.1],
    [5.0, 0.0, 0.05, 0.01, 1.2],
    [5.0, 0.0001, 0.05, 0.01, 1.2],
];

impl ScenarioSpec {
    pub fn get(id: u32) -> Result<ScenarioSpec> {
        let row = id
            .checked_sub(1)
            .and_then(|i| TABLE.get(i as usize))
            .ok_or_else(|| Error::Usage(format!("scenario id must be in 1..=14, got {id}")))?;
        Ok(ScenarioSpec {
            id,
            beta: [row[0], row[1], row[2], row[3]],
            phi: row[4],
            length_t: SERIES_LENGTH,
            a00_range: (0.9, 1.0),
            a11_range: (0.4, 0.6),
        })
    }

    pub fn all() -> Vec<ScenarioSpec> {
        (1..=14).map(|id| ScenarioSpec::get(id).expect("table id")).collect()
    }
}

/// Endemic mean of `spec` at week `t`.
pub fn endemic_mean(spec: &ScenarioSpec, t: WeekIndex) -> f64 {
    let z = CovariateRow::at(t);
    let b = &spec.beta;
    (b[0] + b[1] * z.trend + b[2] * z.cos_term + b[3] * z.sin_term).exp()
}

/// Alarm threshold `c`: smallest `k` with `P(X >= k) < alpha` under the
/// endemic distribution.
pub fn endemic_threshold(endemic_mu: f64, phi: f64, alpha: f64) -> Result<u64> {
    Ok(CountDist::with_dispersion(endemic_mu, phi)?.alarm_threshold(alpha))
}

/// Outbreak mean whose distribution exceeds the endemic alarm threshold
/// with probability `target_power`.
pub fn calibrate_outbreak_mean(endemic_mu: f64, phi: f64, target_power: f64, alpha: f64) -> Result<f64> {
    if !(endemic_mu > 0.0 && endemic_mu.is_finite()) {
        return Err(Error::Argument(format!("endemic mean must be positive, got {endemic_mu}")));
    }
    if !(phi >= 1.0) {
        return Err(Error::Argument(format!("phi must be >= 1, got {phi}")));
    }
    if !(0.0 < alpha && alpha < target_power && target_power < 1.0) {
        return Err(Error::Argument(format!(
            "need 0 < alpha < power < 1, got alpha {alpha}, power {target_power}"
        )));
    }
    let c = endemic_threshold(endemic_mu, phi, alpha)?;
    let power = |m: f64| -> Result<f64> { Ok(CountDist::with_dispersion(m, phi)?.upper_tail(c)) };
    let mut lo = endemic_mu;
    let mut hi = 1e4 * endemic_mu;
    let (p_lo, p_hi) = (power(lo)?, power(hi)?);
    if !(p_lo <= target_power && p_hi >= target_power) {
        return Err(Error::Calibration(format!(
            "power {target_power} not bracketed for endemic mean {endemic_mu}, phi {phi}: \
             threshold {c}, power range [{p_lo}, {p_hi}]"
        )));
    }
    while hi - lo > 1e-6 * hi {
        let mid = 0.5 * (lo + hi);
        if power(mid)? < target_power {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Endemic and calibrated outbreak means for every week of a scenario.
#[derive(Clone, Debug)]
pub struct ScenarioMeans {
    pub spec: ScenarioSpec,
    pub endemic: Vec<f64>,
    pub outbreak: Vec<f64>,
}

impl ScenarioMeans {
    pub fn new(spec: &ScenarioSpec) -> Result<Self> {
        Self::with_calibration(spec, DEFAULT_POWER, DEFAULT_ALPHA)
    }

    pub fn with_calibration(spec: &ScenarioSpec, power: f64, alpha: f64) -> Result<Self> {
        let endemic: Vec<f64> = (1..=spec.length_t)
            .map(|t| endemic_mean(spec, WeekIndex::new(t).expect("t >= 1")))
            .collect();
        let outbreak = endemic
            .iter()
            .map(|&mu| calibrate_outbreak_mean(mu, spec.phi, power, alpha))
            .collect::<Result<_>>()?;
        Ok(ScenarioMeans {
            spec: *spec,
            endemic,
            outbreak,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SimulatedSeries {
    pub series: SurveillanceSeries,
    pub a00: f64,
    pub a11: f64,
    pub seed: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Seed of series `index` in scenario `scenario` under master seed `master`.
pub fn derive_seed(master: u64, scenario: u32, index: u64) -> u64 {
    splitmix64(master ^ splitmix64((u64::from(scenario) << 40) ^ index))
}

/// One series drawn from `means.spec` with its own seed.
pub fn simulate_series(
    means: &ScenarioMeans,
    series_id: impl Into<String>,
    start_week: YearWeek,
    seed: u64,
) -> Result<SimulatedSeries> {
    let spec = &means.spec;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let uniform = |rng: &mut ChaCha8Rng, (a, b): (f64, f64)| a + (b - a) * rng.random::<f64>();
    let a00 = uniform(&mut rng, spec.a00_range);
    let a11 = uniform(&mut rng, spec.a11_range);

    let n = spec.length_t as usize;
    let mut counts = Vec::with_capacity(n);
    let mut labels = Vec::with_capacity(n);
    let mut state = 0usize;
    for t in 0..n {
        if t > 0 {
            let stay = if state == 0 { a00 } else { a11 };
            if rng.random::<f64>() >= stay {
                state = 1 - state;
            }
        }
        let mean = if state == 0 { means.endemic[t] } else { means.outbreak[t] };
        counts.push(CountDist::with_dispersion(mean, spec.phi)?.sample(&mut rng));
        labels.push(Label::from_state(state));
    }
    Ok(SimulatedSeries {
        series: SurveillanceSeries::new(series_id, start_week, counts, Some(labels))?,
        a00,
        a11,
        seed,
    })
}

/// `n_series` series of one scenario, ids `sc{id:02}_s{index:03}`.
pub fn simulate_scenario(
    means: &ScenarioMeans,
    n_series: usize,
    master_seed: u64,
    start_week: YearWeek,
) -> Result<Vec<SimulatedSeries>> {
    (0..n_series)
        .map(|i| {
            let seed = derive_seed(master_seed, means.spec.id, i as u64);
            simulate_series(means, format!("sc{:02}_s{i:03}", means.spec.id), start_week, seed)
        })
        .collect()
}

/// Excess of an observed count over the endemic mean, rounded, floored at 0.
pub fn excess_cases(count: u64, endemic_mu: f64) -> u64 {
    (count as f64 - endemic_mu).round().max(0.0) as u64
}
