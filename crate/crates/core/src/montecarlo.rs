//! Simulation cross-checks for the exact computations.
//!
//! # Random stream
//!
//! Each replication owns a counter-based stream, so results do not depend
//! on thread scheduling and are easy to reproduce in any language:
//!
//! ```text
//! mix(z)  = z ^= z >> 30; z *= 0xBF58476D1CE4E5B9;
//!           z ^= z >> 27; z *= 0x94D049BB133111EB; z ^ (z >> 31)
//! key     = mix(seed ^ mix((replication + 1) * 0x9E3779B97F4A7C15))
//! draw_k  = mix(key + k * 0x9E3779B97F4A7C15),  k = 1, 2, ...
//! uniform = (draw_k >> 11) * 2^-53
//! ```
//!
//! All arithmetic is wrapping on 64 bits.

use rayon::prelude::*;

use crate::chain::{FiniteChain, StateSet};
use crate::error::{invalid, Error, Result};
use crate::renewal::IncrementDistribution;

/// Environment variable capping the worker threads.
pub const THREADS_ENV: &str = "ERGO_BOUNDS_THREADS";
/// Censoring above this fraction is an error.
pub const MAX_CENSORED_FRACTION: f64 = 0.01;

const GOLDEN: u64 = 0x9E37_79B9_7F4A_7C15;

fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Counter-based generator for one replication.
#[derive(Debug, Clone)]
pub struct CounterRng {
    key: u64,
    counter: u64,
}

impl CounterRng {
    pub fn new(seed: u64, replication: u64) -> Self {
        CounterRng {
            key: mix(seed ^ mix(replication.wrapping_add(1).wrapping_mul(GOLDEN))),
            counter: 0,
        }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.counter = self.counter.wrapping_add(1);
        mix(self.key.wrapping_add(self.counter.wrapping_mul(GOLDEN)))
    }

    /// Uniform on `[0, 1)` with 53 random bits.
    pub fn next_f64(&mut self) -> f64 {
        (self.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
    }

    /// Index drawn from cumulative weights (last entry treated as 1).
    fn pick(&mut self, cumulative: &[f64]) -> usize {
        let u = self.next_f64();
        cumulative.iter().position(|&c| u < c).unwrap_or(cumulative.len() - 1)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SimulationConfig {
    pub seed: u64,
    pub replications: u64,
    /// Maximum simulated steps per replication.
    pub cap: u64,
}

impl SimulationConfig {
    pub fn new(seed: u64, replications: u64, cap: u64) -> Result<Self> {
        if replications == 0 || cap == 0 {
            return Err(invalid("replications and cap must be >= 1"));
        }
        Ok(SimulationConfig {
            seed,
            replications,
            cap,
        })
    }
}

/// Summary of simulated times; censored paths are counted, never averaged.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSummary {
    pub replications: u64,
    pub censored: u64,
    /// `counts[t]` = number of uncensored samples equal to `t`.
    pub counts: Vec<u64>,
    pub mean: f64,
    pub variance: f64,
}

impl SampleSummary {
    fn from_samples(samples: &[Option<u64>], cap: u64) -> Self {
        let mut counts = vec![0u64; cap as usize + 1];
        let mut censored = 0;
        for s in samples {
            match s {
                Some(t) => counts[*t as usize] += 1,
                None => censored += 1,
            }
        }
        let n = (samples.len() as u64 - censored) as f64;
        let mean = counts
            .iter()
            .enumerate()
            .map(|(t, c)| t as f64 * *c as f64)
            .sum::<f64>()
            / n;
        let variance = if n > 1.0 {
            counts
                .iter()
                .enumerate()
                .map(|(t, c)| *c as f64 * (t as f64 - mean).powi(2))
                .sum::<f64>()
                / (n - 1.0)
        } else {
            0.0
        };
        SampleSummary {
            replications: samples.len() as u64,
            censored,
            counts,
            mean,
            variance,
        }
    }

    pub fn uncensored(&self) -> u64 {
        self.replications - self.censored
    }

    pub fn censored_fraction(&self) -> f64 {
        self.censored as f64 / self.replications as f64
    }

    pub fn check_censoring(&self) -> Result<()> {
        if self.censored_fraction() > MAX_CENSORED_FRACTION {
            return Err(Error::ExcessCensoring {
                censored: self.censored as usize,
                total: self.replications as usize,
            });
        }
        Ok(())
    }

    /// Standard error of the mean.
    pub fn mean_se(&self) -> f64 {
        (self.variance / self.uncensored() as f64).sqrt()
    }

    /// Empirical `E[r^T]` over uncensored samples and its standard error.
    pub fn mgf(&self, r: f64) -> (f64, f64) {
        let n = self.uncensored() as f64;
        let mut sum = 0.0;
        let mut sq = 0.0;
        for (t, &c) in self.counts.iter().enumerate().filter(|(_, &c)| c > 0) {
            let v = r.powi(t as i32);
            sum += c as f64 * v;
            sq += c as f64 * v * v;
        }
        let mean = sum / n;
        let var = if n > 1.0 {
            (sq - n * mean * mean).max(0.0) / (n - 1.0)
        } else {
            0.0
        };
        (mean, (var / n).sqrt())
    }

    /// Empirical `P(T = t)` and the standard error at probability `p`.
    pub fn frequency(&self, t: usize, p: f64) -> (f64, f64) {
        let n = self.replications as f64;
        let f = self.counts.get(t).copied().unwrap_or(0) as f64 / n;
        (f, (p * (1.0 - p) / n).sqrt())
    }
}

/// `|estimate - exact| <= k se`, with a floor for zero-variance cases.
pub fn within_se(estimate: f64, exact: f64, se: f64, k: f64) -> bool {
    (estimate - exact).abs() <= k * se + 1e-12 * exact.abs().max(1.0)
}

fn thread_cap() -> Option<usize> {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|n| *n >= 1)
}

/// Runs `f(replication)` for every replication, in parallel, collecting in
/// replication order.
fn run_replications<F>(cfg: &SimulationConfig, f: F) -> Vec<Option<u64>>
where
    F: Fn(u64) -> Option<u64> + Sync + Send,
{
    let work = || (0..cfg.replications).into_par_iter().map(&f).collect();
    match thread_cap().and_then(|n| rayon::ThreadPoolBuilder::new().num_threads(n).build().ok()) {
        Some(pool) => pool.install(work),
        None => work(),
    }
}

fn cumulative(probs: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut acc = 0.0;
    probs
        .map(|p| {
            acc += p;
            acc
        })
        .collect()
}

/// Coupling time of a zero-delay and an `n`-delayed renewal process: the
/// bivariate chain from `(1, n + 1)` until `(1, 1)`.
pub fn simulate_coupling_time(p: &IncrementDistribution, delay: u64, cfg: &SimulationConfig) -> Result<SampleSummary> {
    p.require_aperiodic()?;
    let cum = cumulative(p.probs().iter().copied());
    let samples = run_replications(cfg, |rep| {
        if delay == 0 {
            return Some(0);
        }
        let mut rng = CounterRng::new(cfg.seed, rep);
        let (mut a, mut b) = (1u64, delay + 1);
        let mut t = 0u64;
        loop {
            if a > 1 && b > 1 {
                let jump = a.min(b) - 1;
                a -= jump;
                b -= jump;
                t += jump;
            } else {
                let next_a = if a == 1 { rng.pick(&cum) as u64 + 1 } else { a - 1 };
                let next_b = if b == 1 { rng.pick(&cum) as u64 + 1 } else { b - 1 };
                a = next_a;
                b = next_b;
                t += 1;
            }
            if t > cfg.cap {
                return None;
            }
            if a == 1 && b == 1 {
                return Some(t);
            }
        }
    });
    Ok(SampleSummary::from_samples(&samples, cfg.cap))
}

/// `tau_target` from `source` (return-time convention).
pub fn simulate_hitting(
    chain: &FiniteChain,
    source: usize,
    target: &StateSet,
    cfg: &SimulationConfig,
) -> Result<SampleSummary> {
    if source >= chain.len() || target.universe() != chain.len() {
        return Err(invalid("source or target does not match the chain"));
    }
    let rows: Vec<Vec<f64>> = (0..chain.len())
        .map(|x| cumulative((0..chain.len()).map(|y| chain.prob(x, y))))
        .collect();
    let samples = run_replications(cfg, |rep| {
        let mut rng = CounterRng::new(cfg.seed, rep);
        let mut x = source;
        for t in 1..=cfg.cap {
            x = rng.pick(&rows[x]);
            if target.contains(x) {
                return Some(t);
            }
        }
        None
    });
    Ok(SampleSummary::from_samples(&samples, cfg.cap))
}
