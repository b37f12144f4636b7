//! Discrete renewal theory on finite-support increment laws.

use crate::chain::{hitting_law_from, FiniteChain, StateSet};
use crate::error::{invalid, Result};
use crate::kendall::BivariateChain;

/// Probability vectors must sum to one within this tolerance.
pub const NORMALIZATION_TOL: f64 = 1e-12;

fn check_probability_vector(probs: &[f64], what: &str) -> Result<()> {
    if probs.is_empty() {
        return Err(invalid(format!("{what} must be non-empty")));
    }
    if let Some((i, p)) = probs.iter().enumerate().find(|(_, p)| !(**p >= 0.0) || !p.is_finite()) {
        return Err(invalid(format!("{what}: entry {i} = {p} is negative")));
    }
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > NORMALIZATION_TOL {
        return Err(invalid(format!("{what}: probabilities sum to {total}")));
    }
    Ok(())
}

/// Increment law `p(n)`, `n = 1..=L`.
#[derive(Debug, Clone, PartialEq)]
pub struct IncrementDistribution {
    probs: Vec<f64>,
}

impl IncrementDistribution {
    /// `probs[k]` is `p(k + 1)`. Trailing zeros are trimmed so that the
    /// support bound is the largest `n` with `p(n) > 0`.
    pub fn new(mut probs: Vec<f64>) -> Result<Self> {
        check_probability_vector(&probs, "increment distribution")?;
        while probs.len() > 1 && probs[probs.len() - 1] == 0.0 {
            probs.pop();
        }
        Ok(IncrementDistribution { probs })
    }

    /// `p(n)`; zero outside the support.
    pub fn p(&self, n: usize) -> f64 {
        if n == 0 || n > self.probs.len() {
            0.0
        } else {
            self.probs[n - 1]
        }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Largest `n` with `p(n) > 0`.
    pub fn support(&self) -> usize {
        self.probs.len()
    }

    /// `m = sum n p(n)`.
    pub fn mean(&self) -> f64 {
        self.probs.iter().enumerate().map(|(k, p)| (k + 1) as f64 * p).sum()
    }

    /// Rejects laws with `p(1) = 0`; those break the aperiodicity argument.
    pub fn require_aperiodic(&self) -> Result<()> {
        if self.p(1) > 0.0 {
            Ok(())
        } else {
            Err(invalid("increment distribution needs p(1) > 0"))
        }
    }
}

/// Delay law `d(n)`, `n = 0..=K`.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayDistribution {
    probs: Vec<f64>,
}

impl DelayDistribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        check_probability_vector(&probs, "delay distribution")?;
        Ok(DelayDistribution { probs })
    }

    pub fn d(&self, n: usize) -> f64 {
        self.probs.get(n).copied().unwrap_or(0.0)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }
}

/// `u(0..=N)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RenewalSequence {
    values: Vec<f64>,
}

impl RenewalSequence {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn u(&self, n: usize) -> f64 {
        self.values[n]
    }

    pub fn horizon(&self) -> usize {
        self.values.len() - 1
    }

    /// `(d * u)(n)` for `n = 0..=N`.
    pub fn delayed(&self, delay: &DelayDistribution) -> Vec<f64> {
        (0..self.values.len())
            .map(|n| (0..=n).map(|k| delay.d(k) * self.values[n - k]).sum())
            .collect()
    }
}

/// `u(0) = 1`, `u(n) = sum_{k=1}^{min(n, L)} p(k) u(n - k)`.
///
/// `probs` may be a truncated (sub-stochastic) law; `u(n)` only reads
/// `p(1..=n)`.
pub fn renewal_from_probs(probs: &[f64], horizon: usize) -> Vec<f64> {
    let mut u = Vec::with_capacity(horizon + 1);
    u.push(1.0);
    for n in 1..=horizon {
        let value: f64 = probs.iter().take(n).enumerate().map(|(k, p)| p * u[n - k - 1]).sum();
        u.push(value);
    }
    u
}

pub fn renewal_sequence(p: &IncrementDistribution, horizon: usize) -> RenewalSequence {
    RenewalSequence {
        values: renewal_from_probs(&p.probs, horizon),
    }
}

/// Stationary delay `e(n) = P(Y > n) / m` for `n = 0..L-1`, and `pi(1) = 1/m`.
pub fn stationary_delay(p: &IncrementDistribution) -> (DelayDistribution, f64) {
    let mean = p.mean();
    // tail sums from the top of the support avoid 1 - (1 - tiny) cancellation
    let mut e = vec![0.0; p.support()];
    let mut tail = 0.0;
    for n in (0..p.support()).rev() {
        tail += p.p(n + 1);
        e[n] = tail / mean;
    }
    (DelayDistribution { probs: e }, 1.0 / mean)
}

/// `sum_n p(n) r^n`.
pub fn increment_mgf(p: &IncrementDistribution, r: f64) -> Result<f64> {
    if !(r >= 1.0) || !r.is_finite() {
        return Err(invalid(format!("mgf rate must be >= 1, got {r}")));
    }
    Ok(p.probs
        .iter()
        .enumerate()
        .map(|(k, pk)| pk * r.powi(k as i32 + 1))
        .sum())
}

/// Forward recurrence time chain on `{1..L}` (index `i` is state `i + 1`):
/// `n -> n - 1` for `n > 1` and `1 -> m` with probability `p(m)`.
pub fn forward_recurrence_chain(p: &IncrementDistribution) -> Result<FiniteChain> {
    let l = p.support();
    let rows: Vec<Vec<f64>> = (0..l)
        .map(|i| {
            let mut row = vec![0.0; l];
            if i == 0 {
                row.copy_from_slice(p.probs());
            } else {
                row[i - 1] = 1.0;
            }
            row
        })
        .collect();
    FiniteChain::from_rows(&rows)
}

/// `|u(n) - pi(1)|` for `n = 0..=horizon`, accurate relative to its own size.
///
/// Subtracting `pi(1)` from [`renewal_sequence`] leaves an absolute error of
/// order `1e-16`, which dominates once the deviation itself is smaller and
/// is blown up by any weight `r^n`. Here `u(n) = P^n(1, 1)` on the forward
/// recurrence chain, and the signed difference `P^n(1, .) - pi` is propagated
/// directly, with its total mass (zero, and invariant) projected out at
/// every step.
pub fn renewal_deviations(p: &IncrementDistribution, horizon: usize) -> Result<Vec<f64>> {
    let chain = forward_recurrence_chain(p)?;
    let mean = p.mean();
    let mut tail = 1.0;
    let pi: Vec<f64> = (1..=p.support())
        .map(|k| {
            let v = tail / mean;
            tail -= p.p(k);
            v
        })
        .collect();
    let mut diff: Vec<f64> = pi.iter().map(|q| -q).collect();
    diff[0] += 1.0;
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(diff[0].abs());
    for _ in 0..horizon {
        diff = chain.apply_left(&diff);
        let mass: f64 = diff.iter().sum();
        for (d, q) in diff.iter_mut().zip(&pi) {
            *d -= mass * q;
        }
        out.push(diff[0].abs());
    }
    Ok(out)
}

/// Exact coupling comparison up to `horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct CouplingReport {
    /// `|u(n) - pi(1)|` for `n = 0..=N`.
    pub deviation: Vec<f64>,
    /// `P(T_{0,e} > n)` for `n = 0..=N`.
    pub coupling_tail: Vec<f64>,
    /// `sum_{n=1}^{N} |u(n) - pi(1)| r2^n`.
    pub weighted_partial_sum: f64,
    /// Largest `|u(n) - pi(1)| - P(T_{0,e} > n)`; nonpositive when the
    /// coupling inequality holds.
    pub worst_excess: f64,
    pub worst_n: usize,
    pub passed: bool,
}

/// Slack for the pointwise coupling inequality, covering round-off in
/// quantities that are themselves of order `1e-16`.
pub const COUPLING_TOL: f64 = 1e-12;

/// Checks `|u(n) - pi(1)| <= P(T_{0,e} > n)` for `n <= horizon`, with the
/// right side computed exactly on the bivariate coupling chain.
pub fn coupling_tail_check(p: &IncrementDistribution, horizon: usize, r2: f64) -> Result<CouplingReport> {
    p.require_aperiodic()?;
    if !(r2 > 1.0) {
        return Err(invalid(format!("r2 must be > 1, got {r2}")));
    }
    let (e, _) = stationary_delay(p);
    let deviation = renewal_deviations(p, horizon)?;
    let coupling_tail = coupling_survival(p, &e, horizon)?;

    let mut weighted = 0.0;
    let mut worst_excess = f64::NEG_INFINITY;
    let mut worst_n = 0;
    for n in 0..=horizon {
        if n >= 1 {
            weighted += deviation[n] * r2.powi(n as i32);
        }
        let excess = deviation[n] - coupling_tail[n];
        if excess > worst_excess {
            worst_excess = excess;
            worst_n = n;
        }
    }
    Ok(CouplingReport {
        passed: worst_excess <= COUPLING_TOL,
        deviation,
        coupling_tail,
        weighted_partial_sum: weighted,
        worst_excess,
        worst_n,
    })
}

/// `P(T_{0,d} > n)` for `n = 0..=horizon`, where the delayed copy starts
/// from the bivariate state `(1, m + 1)` with probability `d(m)`.
pub fn coupling_survival(p: &IncrementDistribution, delay: &DelayDistribution, horizon: usize) -> Result<Vec<f64>> {
    let bivariate = BivariateChain::new(p)?;
    let chain = bivariate.chain();
    let mut initial = vec![0.0; chain.len()];
    // delay 0 couples at time 0 and contributes nothing
    for m in 1..delay.probs().len() {
        initial[bivariate.index(1, m + 1)?] += delay.d(m);
    }
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(initial.iter().sum());
    if horizon > 0 {
        let target = StateSet::from_indices(chain.len(), &[bivariate.index(1, 1)?])?;
        let law = hitting_law_from(chain, &initial, &target, horizon)?;
        out.extend(law.survival);
    }
    Ok(out)
}
