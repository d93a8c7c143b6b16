#![allow(dead_code)]

use outbreak_hmm::glm::{FitTrace, GlmFit};
use outbreak_hmm::hmm::{HmmModel, TrainConfig, Transitions, EMISSION_FLOOR};
use outbreak_hmm::series::{Label, WeekIndex};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};

pub fn w(t: u32) -> WeekIndex {
    WeekIndex::new(t).unwrap()
}

pub fn lgamma(x: f64) -> f64 {
    libm::lgamma(x)
}

/// NB log pmf straight from the gamma-function formula.
pub fn nb_log_pmf_direct(k: u64, mu: f64, r: f64) -> f64 {
    let k = k as f64;
    lgamma(k + r) - lgamma(r) - lgamma(k + 1.0) + r * (r / (r + mu)).ln() + k * (mu / (r + mu)).ln()
}

pub fn single_series_model(beta: [f64; 4], b4: f64, r: f64, pi: [f64; 2], trans: [[f64; 2]; 2]) -> HmmModel {
    HmmModel {
        group_id: "g".into(),
        series_ids: vec!["s".into()],
        transitions: Transitions {
            pi,
            trans,
            defaulted_rows: vec![],
            pi_defaulted: false,
        },
        glm: GlmFit {
            beta: vec![beta[0], beta[1], beta[2], beta[3], b4],
            size_r: vec![r],
            with_outbreak: true,
            converged: true,
            iterations: 0,
            log_likelihood: 0.0,
            zero_series: vec![],
            outbreak_capped: false,
            trace: FitTrace::default(),
        },
        current_week: w(1),
        train_window: (w(1), w(1)),
        config: TrainConfig::default(),
    }
}

/// Emission log-densities computed without the library.
pub fn oracle_emissions(beta: [f64; 4], b4: f64, r: f64, counts: &[u64]) -> Vec<[f64; 2]> {
    counts
        .iter()
        .enumerate()
        .map(|(i, &k)| {
            let t = (i + 1) as f64;
            let ang = 2.0 * std::f64::consts::PI * t / 52.0;
            let eta = beta[0] + beta[1] * t + beta[2] * ang.cos() + beta[3] * ang.sin();
            [
                nb_log_pmf_direct(k, eta.exp(), r).max(EMISSION_FLOOR),
                nb_log_pmf_direct(k, (eta + b4).exp(), r).max(EMISSION_FLOOR),
            ]
        })
        .collect()
}

/// P(S_T = 1 | o_1..o_T) by summing over all 2^T state paths. Paths that
/// disagree with a known label are excluded.
pub fn brute_force_posterior(pi: [f64; 2], a: [[f64; 2]; 2], e: &[[f64; 2]], labels: &[Option<usize>]) -> f64 {
    let t_len = e.len();
    let mut logs = Vec::with_capacity(1 << t_len);
    let mut last = Vec::with_capacity(1 << t_len);
    'paths: for mask in 0u32..(1 << t_len) {
        let state = |t: usize| ((mask >> t) & 1) as usize;
        for (t, l) in labels.iter().enumerate() {
            if l.is_some_and(|s| s != state(t)) {
                continue 'paths;
            }
        }
        let mut lp = pi[state(0)].ln() + e[0][state(0)];
        for t in 1..t_len {
            lp += a[state(t - 1)][state(t)].ln() + e[t][state(t)];
        }
        logs.push(lp);
        last.push(state(t_len - 1));
    }
    let m = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut num = 0.0;
    let mut den = 0.0;
    for (lp, s) in logs.iter().zip(&last) {
        let x = (lp - m).exp();
        den += x;
        if *s == 1 {
            num += x;
        }
    }
    num / den
}

pub struct CountOracle {
    pub pi: [f64; 2],
    pub trans: [[f64; 2]; 2],
    pub row_seen: [bool; 2],
}

/// Transition frequencies by explicit loops over every adjacent pair.
pub fn naive_transitions(seqs: &[Vec<Label>]) -> CountOracle {
    let mut c = [[0.0f64; 2]; 2];
    let mut f = [0.0f64; 2];
    for s in seqs {
        match s.first() {
            Some(Label::Endemic) => f[0] += 1.0,
            Some(Label::Outbreak) => f[1] += 1.0,
            _ => {}
        }
        for i in 1..s.len() {
            let from = match s[i - 1] {
                Label::Endemic => 0,
                Label::Outbreak => 1,
                Label::Unknown => continue,
            };
            let to = match s[i] {
                Label::Endemic => 0,
                Label::Outbreak => 1,
                Label::Unknown => continue,
            };
            c[from][to] += 1.0;
        }
    }
    let mut trans = [[0.5; 2]; 2];
    let mut row_seen = [false; 2];
    for i in 0..2 {
        let d = c[i][0] + c[i][1];
        if d > 0.0 {
            trans[i] = [c[i][0] / d, c[i][1] / d];
            row_seen[i] = true;
        }
    }
    let d = f[0] + f[1];
    let pi = if d > 0.0 { [f[0] / d, f[1] / d] } else { [0.5, 0.5] };
    CountOracle { pi, trans, row_seen }
}

/// NB(mean, size) draw as a gamma-Poisson mixture, independent of the library.
pub fn draw_nb(rng: &mut ChaCha8Rng, mu: f64, r: f64) -> u64 {
    let lambda = Gamma::new(r, mu / r).unwrap().sample(rng);
    if lambda <= 0.0 {
        return 0;
    }
    Poisson::new(lambda).unwrap().sample(rng) as u64
}

pub fn markov_labels(rng: &mut ChaCha8Rng, n: usize, a00: f64, a11: f64) -> Vec<Label> {
    let mut s = 0usize;
    (0..n)
        .map(|t| {
            if t > 0 {
                let stay = if s == 0 { a00 } else { a11 };
                if rng.random::<f64>() >= stay {
                    s = 1 - s;
                }
            }
            if s == 0 {
                Label::Endemic
            } else {
                Label::Outbreak
            }
        })
        .collect()
}

pub fn covariates(t: u32) -> [f64; 4] {
    let t = f64::from(t);
    let ang = 2.0 * std::f64::consts::PI * t / 52.0;
    [1.0, t, ang.cos(), ang.sin()]
}

/// Poisson log-link regression by plain IRLS with dense Gaussian elimination.
pub fn poisson_irls(xs: &[[f64; 4]], ys: &[u64]) -> [f64; 4] {
    let mean = ys.iter().sum::<u64>() as f64 / ys.len() as f64;
    let mut beta = [mean.ln(), 0.0, 0.0, 0.0];
    for _ in 0..200 {
        let mut m = [[0.0f64; 5]; 4];
        for (x, &y) in xs.iter().zip(ys) {
            let eta: f64 = (0..4).map(|j| x[j] * beta[j]).sum();
            let mu = eta.exp();
            let z = eta + (y as f64 - mu) / mu;
            for i in 0..4 {
                for j in 0..4 {
                    m[i][j] += mu * x[i] * x[j];
                }
                m[i][4] += mu * x[i] * z;
            }
        }
        let new = solve4(m);
        let diff = (0..4).map(|j| (new[j] - beta[j]).abs()).fold(0.0, f64::max);
        beta = new;
        if diff < 1e-13 {
            break;
        }
    }
    beta
}

fn solve4(mut m: [[f64; 5]; 4]) -> [f64; 4] {
    for c in 0..4 {
        let p = (c..4).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, p);
        for r in 0..4 {
            if r != c {
                let f = m[r][c] / m[c][c];
                for k in c..5 {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
    }
    [m[0][4] / m[0][0], m[1][4] / m[1][1], m[2][4] / m[2][2], m[3][4] / m[3][3]]
}

/// Mann-Whitney estimate of P(X > Y) + P(X = Y) / 2.
pub fn mann_whitney_auc(pos: &[f64], neg: &[f64]) -> f64 {
    let mut neg = neg.to_vec();
    neg.sort_by(f64::total_cmp);
    let mut total = 0.0;
    for &x in pos {
        let below = neg.partition_point(|&y| y < x);
        let upto = neg.partition_point(|&y| y <= x);
        total += below as f64 + 0.5 * (upto - below) as f64;
    }
    total / (pos.len() as f64 * neg.len() as f64)
}

pub fn median(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

pub const RECOVERY_BETA: [f64; 4] = [0.5, 0.002, 0.5, 0.5];
pub const RECOVERY_SIZE: f64 = 5.0;

/// One replicate of the recovery design: N series, T weeks, shared
/// outbreak factor 3, NB size 5, Markov labels.
pub fn recovery_design(seed: u64, n_series: usize, t_len: u32) -> outbreak_hmm::glm::PooledDesign {
    use outbreak_hmm::glm::{DesignRow, PooledDesign};
    use rand::SeedableRng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let b4 = 3f64.ln();
    let mut rows = Vec::new();
    for n in 0..n_series {
        let labels = markov_labels(&mut rng, t_len as usize, 0.9, 0.6);
        for (i, l) in labels.iter().enumerate() {
            let t = i as u32 + 1;
            let x = covariates(t);
            let outbreak = *l == Label::Outbreak;
            let eta: f64 = (0..4).map(|j| x[j] * RECOVERY_BETA[j]).sum::<f64>() + if outbreak { b4 } else { 0.0 };
            rows.push(DesignRow {
                series: n,
                t: w(t),
                outbreak,
                count: draw_nb(&mut rng, eta.exp(), RECOVERY_SIZE),
            });
        }
    }
    PooledDesign::new(n_series, true, rows).unwrap()
}
