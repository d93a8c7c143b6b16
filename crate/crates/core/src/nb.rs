//! Negative-binomial and Poisson count distributions parameterized by mean.
//!
//! The negative binomial uses the size parameter `r`, so that
//! `Var = mu + mu^2 / r`. The simulation parameterization `Var = phi * mu`
//! maps to `r = mu / (phi - 1)`; `phi = 1` is the Poisson limit.

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};

use crate::error::{Error, Result};

/// Log-probability of `k` under NB(mean `mu`, size `r`).
pub fn nb_log_pmf(k: u64, mu: f64, r: f64) -> Result<f64> {
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(Error::Argument(format!("NB mean must be positive, got {mu}")));
    }
    if !(r > 0.0 && r.is_finite()) {
        return Err(Error::Argument(format!("NB size must be positive, got {r}")));
    }
    Ok(nb_log_pmf_unchecked(k, mu, r))
}

pub(crate) fn nb_log_pmf_unchecked(k: u64, mu: f64, r: f64) -> f64 {
    let kf = k as f64;
    let zero_term = -r * (mu / r).ln_1p();
    if k == 0 {
        return zero_term;
    }
    // Small k, or r so large that lgamma differences cancel badly:
    // sum ln((r + j) / (r + mu)) directly.
    if k <= 64 || (r >= 1e6 && k <= 100_000) {
        let denom = r + mu;
        let mut acc = 0.0;
        for j in 0..k {
            acc += ((j as f64 - mu) / denom).ln_1p();
        }
        acc + kf * mu.ln() - ln_factorial(k) + zero_term
    } else {
        libm::lgamma(kf + r) - libm::lgamma(r) - ln_factorial(k)
            + zero_term
            + kf * (mu.ln() - (r + mu).ln())
    }
}

pub fn poisson_log_pmf(k: u64, mu: f64) -> f64 {
    if mu == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * mu.ln() - mu - ln_factorial(k)
}

fn ln_factorial(k: u64) -> f64 {
    libm::lgamma(k as f64 + 1.0)
}

/// A count distribution given by its mean: Poisson or negative binomial.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum CountDist {
    Poisson { mean: f64 },
    NegBinom { mean: f64, size: f64 },
}

impl CountDist {
    pub fn poisson(mean: f64) -> Result<Self> {
        if !(mean >= 0.0 && mean.is_finite()) {
            return Err(Error::Argument(format!("Poisson mean must be >= 0, got {mean}")));
        }
        Ok(CountDist::Poisson { mean })
    }

    pub fn neg_binom(mean: f64, size: f64) -> Result<Self> {
        nb_log_pmf(0, mean, size)?;
        Ok(CountDist::NegBinom { mean, size })
    }

    /// Distribution with mean `mean` and variance `phi * mean`.
    pub fn with_dispersion(mean: f64, phi: f64) -> Result<Self> {
        if !(phi >= 1.0 && phi.is_finite()) {
            return Err(Error::Argument(format!("dispersion phi must be >= 1, got {phi}")));
        }
        if phi == 1.0 {
            Self::poisson(mean)
        } else {
            Self::neg_binom(mean, mean / (phi - 1.0))
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            CountDist::Poisson { mean } | CountDist::NegBinom { mean, .. } => mean,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            CountDist::Poisson { mean } => mean,
            CountDist::NegBinom { mean, size } => mean + mean * mean / size,
        }
    }

    pub fn log_pmf(&self, k: u64) -> f64 {
        match *self {
            CountDist::Poisson { mean } => poisson_log_pmf(k, mean),
            CountDist::NegBinom { mean, size } => nb_log_pmf_unchecked(k, mean, size),
        }
    }

    /// `pmf(j + 1) / pmf(j)`.
    fn step_up(&self, j: f64) -> f64 {
        match *self {
            CountDist::Poisson { mean } => mean / (j + 1.0),
            CountDist::NegBinom { mean, size } => (j + size) / (j + 1.0) * mean / (size + mean),
        }
    }

    fn mode(&self) -> f64 {
        match *self {
            CountDist::Poisson { mean } => mean.floor(),
            CountDist::NegBinom { mean, size } => {
                if size <= 1.0 {
                    0.0
                } else {
                    ((size - 1.0) * mean / size).floor()
                }
            }
        }
    }

    /// `P(X >= k)`.
    ///
    /// Sums whichever side of `k` lies away from the mode, walking outward
    /// with the pmf ratio so each term costs one multiply.
    pub fn upper_tail(&self, k: u64) -> f64 {
        if k == 0 {
            return 1.0;
        }
        if self.mean() == 0.0 {
            return 0.0;
        }
        let kf = k as f64;
        if kf > self.mode() {
            let mut term = self.log_pmf(k).exp();
            let mut sum = 0.0;
            let mut j = kf;
            while term > 0.0 && term > 1e-18 * sum {
                sum += term;
                term *= self.step_up(j);
                j += 1.0;
            }
            sum.min(1.0)
        } else {
            let mut j = kf - 1.0;
            let mut term = self.log_pmf(k - 1).exp();
            let mut sum = 0.0;
            loop {
                sum += term;
                if j == 0.0 || term == 0.0 || term < 1e-18 * sum {
                    break;
                }
                term /= self.step_up(j - 1.0);
                j -= 1.0;
            }
            (1.0 - sum).max(0.0)
        }
    }

    /// Smallest `k` with `P(X >= k) < alpha`.
    pub fn alarm_threshold(&self, alpha: f64) -> u64 {
        debug_assert!(alpha > 0.0 && alpha < 1.0);
        let mut lo = 0u64; // tail(lo) >= alpha
        let mut hi = (self.mean() + 10.0 * self.variance().sqrt()).ceil() as u64 + 1;
        while self.upper_tail(hi) >= alpha {
            lo = hi;
            hi = hi.saturating_mul(2);
        }
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if self.upper_tail(mid) < alpha {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let lambda = match *self {
            CountDist::Poisson { mean } => mean,
            CountDist::NegBinom { mean, size } => Gamma::new(size, mean / size)
                .expect("validated parameters")
                .sample(rng),
        };
        if lambda <= 0.0 {
            return 0;
        }
        Poisson::new(lambda).expect("positive rate").sample(rng) as u64
    }
}

/// `digamma(y + r) - digamma(r)`.
pub(crate) fn digamma_diff(y: f64, r: f64) -> f64 {
    if y <= 32.0 && y.fract() == 0.0 {
        let mut s = 0.0;
        let mut j = 0.0;
        while j < y {
            s += 1.0 / (r + j);
            j += 1.0;
        }
        s
    } else {
        digamma(y + r) - digamma(r)
    }
}

/// `trigamma(y + r) - trigamma(r)`.
pub(crate) fn trigamma_diff(y: f64, r: f64) -> f64 {
    if y <= 32.0 && y.fract() == 0.0 {
        let mut s = 0.0;
        let mut j = 0.0;
        while j < y {
            s -= 1.0 / ((r + j) * (r + j));
            j += 1.0;
        }
        s
    } else {
        trigamma(y + r) - trigamma(r)
    }
}

pub(crate) fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let x2 = 1.0 / (x * x);
    acc + x.ln() - 0.5 / x
        - x2 * (1.0 / 12.0 - x2 * (1.0 / 120.0 - x2 * (1.0 / 252.0 - x2 * (1.0 / 240.0 - x2 / 132.0))))
}

pub(crate) fn trigamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    while x < 10.0 {
        acc += 1.0 / (x * x);
        x += 1.0;
    }
    let ix = 1.0 / x;
    let x2 = ix * ix;
    acc + ix + 0.5 * x2
        + ix * x2 * (1.0 / 6.0 - x2 * (1.0 / 30.0 - x2 * (1.0 / 42.0 - x2 * (1.0 / 30.0 - x2 * 5.0 / 66.0))))
}
