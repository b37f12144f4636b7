//! Geometric bounds for renewal sequences through the bivariate
//! forward-recurrence coupling chain.
//!
//! State `(a, b)` records the steps until the next renewal of a zero-delay
//! and a delayed renewal process (`1` means "renewing now"). A delay of `n`
//! starts the pair at `(1, n + 1)` and the coupling time `T_{0,n}` is the
//! hitting time of `(1, 1)`.
//!
//! The Lyapunov function `V(a, b) = (r^{a-1} + r^{b-1}) / 2` satisfies
//! `PV <= eta V + b_drift 1_C` with `C` the two rays up to level `M`, and
//! from `C` the pair reaches `(1, 1)` within `M` steps with probability at
//! least `p(1)^{max(M, 2)}`. The drift bound is evaluated at a fresh rate
//! `r' in (1, 1/eta)` and moved to `(1, 1)` by [`crate::drift::transfer_bound`].

use crate::chain::{hitting_mgf, weighted_sums, FiniteChain, StateSet, WeightFunction};
use crate::drift::{petiteness_infimum, transfer_bound, transfer_rate, verify_drift, DriftCertificate, TransferInputs};
use crate::error::{invalid, Error, Result};
use crate::logspace::{softplus, LogReal, Rate};
use crate::renewal::{increment_mgf, renewal_deviations, stationary_delay, IncrementDistribution};

/// Relative tolerance for the closed-form drift relations.
pub const DRIFT_IDENTITY_TOL: f64 = 1e-12;

/// The coupled forward-recurrence chain on `{1..L}^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateChain {
    base: IncrementDistribution,
    chain: FiniteChain,
}

impl BivariateChain {
    pub fn new(p: &IncrementDistribution) -> Result<Self> {
        let l = p.support();
        let size = l * l;
        let mut rows = vec![vec![0.0; size]; size];
        let idx = |a: usize, b: usize| (a - 1) * l + (b - 1);
        for a in 1..=l {
            for b in 1..=l {
                let row = &mut rows[idx(a, b)];
                match (a == 1, b == 1) {
                    (false, false) => row[idx(a - 1, b - 1)] = 1.0,
                    (true, false) => {
                        for n in 1..=l {
                            row[idx(n, b - 1)] += p.p(n);
                        }
                    }
                    (false, true) => {
                        for n in 1..=l {
                            row[idx(a - 1, n)] += p.p(n);
                        }
                    }
                    (true, true) => {
                        for n in 1..=l {
                            for m in 1..=l {
                                row[idx(n, m)] += p.p(n) * p.p(m);
                            }
                        }
                    }
                }
            }
        }
        let labels = (1..=l)
            .flat_map(|a| (1..=l).map(move |b| format!("({a},{b})")))
            .collect();
        Ok(BivariateChain {
            base: p.clone(),
            chain: FiniteChain::with_labels(labels, &rows)?,
        })
    }

    pub fn base(&self) -> &IncrementDistribution {
        &self.base
    }

    pub fn chain(&self) -> &FiniteChain {
        &self.chain
    }

    /// Support bound `L`; states are `{1..L}^2`.
    pub fn support(&self) -> usize {
        self.base.support()
    }

    pub fn index(&self, a: usize, b: usize) -> Result<usize> {
        let l = self.support();
        if a == 0 || b == 0 || a > l || b > l {
            return Err(invalid(format!("bivariate state ({a}, {b}) outside {{1..{l}}}^2")));
        }
        Ok((a - 1) * l + (b - 1))
    }

    pub fn state(&self, index: usize) -> (usize, usize) {
        let l = self.support();
        (index / l + 1, index % l + 1)
    }

    pub fn coupled_set(&self) -> StateSet {
        StateSet::from_indices(self.chain.len(), &[0]).expect("(1,1) is index 0")
    }

    /// `V(a, b)` on every state.
    pub fn lyapunov(&self, r: f64) -> Result<WeightFunction> {
        WeightFunction::new(
            (0..self.chain.len())
                .map(|i| {
                    let (a, b) = self.state(i);
                    lyapunov_value(a, b, r)
                })
                .collect(),
        )
    }

    /// `C = {(1, b) : b <= M} ∪ {(a, 1) : a <= M}` within the state space.
    pub fn drift_set(&self, m: usize) -> StateSet {
        let mut mask = vec![false; self.chain.len()];
        for (i, slot) in mask.iter_mut().enumerate() {
            let (a, b) = self.state(i);
            *slot = (a == 1 && b <= m) || (b == 1 && a <= m);
        }
        StateSet::from_mask(mask)
    }
}

/// `V(a, b) = (r^{a-1} + r^{b-1}) / 2`.
pub fn lyapunov_value(a: usize, b: usize, r: f64) -> f64 {
    (r.powi(a as i32 - 1) + r.powi(b as i32 - 1)) / 2.0
}

/// `ceil(ln((S - eta r) / (eta r - 1)) / ln r + 1)`, clamped to at least 1.
fn drift_level(ln_numerator: f64, ln_denominator: f64, log_rate: f64) -> f64 {
    ((ln_numerator - ln_denominator) / log_rate + 1.0).ceil().max(1.0)
}

/// Drift certificate of the bivariate chain.
#[derive(Debug, Clone, PartialEq)]
pub struct BivariateDrift {
    pub m: usize,
    pub set: StateSet,
    pub b_drift: f64,
    /// `S = sum p(n) r^n`.
    pub mgf: f64,
    pub eta: f64,
    pub r: f64,
}

/// Builds `(M, C, b_drift)` from the exact increment MGF and checks
/// `PV <= eta V + b_drift 1_C` on every bivariate state.
pub fn bivariate_drift(p: &IncrementDistribution, r: f64, eta: f64) -> Result<BivariateDrift> {
    if !(r > 1.0) || !r.is_finite() {
        return Err(invalid(format!("drift rate must be > 1, got {r}")));
    }
    if !(eta > 1.0 / r && eta < 1.0) {
        return Err(Error::EtaRange { eta, r });
    }
    let s = increment_mgf(p, r)?;
    let m = drift_level((s - eta * r).ln(), (eta * r - 1.0).ln(), r.ln()) as usize;
    let b_drift = (2.0 * s).max(s + r.powi(m as i32 - 1)) / (2.0 * r);

    let bivariate = BivariateChain::new(p)?;
    let set = bivariate.drift_set(m);
    let cert = DriftCertificate::new(bivariate.lyapunov(r)?, eta, b_drift, set.clone())?;
    let check = verify_drift(bivariate.chain(), &cert)?;
    if !check.passed {
        return Err(Error::DriftViolation {
            state: check.worst_state,
            excess: -check.margin,
        });
    }
    Ok(BivariateDrift {
        m,
        set,
        b_drift,
        mgf: s,
        eta,
        r,
    })
}

/// Largest relative deviation between `(PV)(a, b)` and the four closed forms
/// `V/r`, `(S + r^{b-1})/(2r)`, `(r^{a-1} + S)/(2r)`, `S/r`.
pub fn drift_identity_residual(p: &IncrementDistribution, r: f64) -> Result<f64> {
    let bivariate = BivariateChain::new(p)?;
    let v = bivariate.lyapunov(r)?;
    let pv = bivariate.chain().apply(v.values());
    let s = increment_mgf(p, r)?;
    let mut worst: f64 = 0.0;
    for (i, pvi) in pv.iter().enumerate() {
        let (a, b) = bivariate.state(i);
        let expected = match (a == 1, b == 1) {
            (false, false) => v.get(i) / r,
            (true, false) => (s + r.powi(b as i32 - 1)) / (2.0 * r),
            (false, true) => (r.powi(a as i32 - 1) + s) / (2.0 * r),
            (true, true) => s / r,
        };
        worst = worst.max((pvi - expected).abs() / expected.abs().max(1.0));
    }
    Ok(worst)
}

/// Certified and exact access probabilities from `C` to `(1, 1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PetitenessReport {
    /// `p(1)^{max(M, 2)}`.
    pub certified: f64,
    /// `inf_{x in C} P_x{tau_(1,1) <= M}` on the finite chain.
    pub exact: f64,
    pub passed: bool,
}

/// Lower bound on `P_x{tau_(1,1) <= M}` over `C`.
///
/// From `(1, b)` with `2 <= b <= M` the path that renews the first
/// coordinate with a unit increment each step reaches `(1, 1)` after
/// `b - 1` steps; from `(1, 1)` the return needs two unit increments.
pub fn certified_access(beta: f64, m: f64) -> LogReal {
    LogReal::from_ln(m.max(2.0) * beta.ln())
}

pub fn bivariate_petiteness(p: &IncrementDistribution, m: usize) -> Result<PetitenessReport> {
    if m == 0 {
        return Err(invalid("petiteness level M must be >= 1"));
    }
    p.require_aperiodic()?;
    let certified = certified_access(p.p(1), m as f64).value();
    let bivariate = BivariateChain::new(p)?;
    let (exact, _) = petiteness_infimum(bivariate.chain(), &bivariate.drift_set(m), &bivariate.coupled_set(), m)?;
    Ok(PetitenessReport {
        certified,
        exact,
        passed: exact >= certified * (1.0 - 1e-12),
    })
}

/// How `eta` is picked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaChoice {
    /// An explicit `eta in (1/r, 1)`.
    Value(f64),
    /// `eta r - 1 = zeta (r - 1)`, `zeta in (0, 1)`; `1/2` is the midpoint
    /// `eta = (1/r + 1)/2`.
    Fraction(f64),
}

/// How a rate below a certified `rho` is picked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RateChoice {
    Value(Rate),
    /// `ln r2 = t ln rho`.
    Fraction(f64),
}

impl RateChoice {
    pub fn resolve(self, rho: Rate) -> Result<Rate> {
        match self {
            RateChoice::Value(r) => Ok(r),
            RateChoice::Fraction(t) => {
                if !(t > 0.0 && t <= 1.0) {
                    return Err(invalid(format!("rate fraction must lie in (0, 1], got {t}")));
                }
                rho.scale(t)
            }
        }
    }
}

/// Inputs of the renewal bound.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KendallParams {
    /// Lower bound on `p(1)`.
    pub beta: f64,
    /// Rate at which the increment MGF is bounded.
    pub r: Rate,
    /// `B - 1`, where `sum p(n) r^n <= B`.
    pub mgf_excess: LogReal,
    pub eta: EtaChoice,
    /// Position of `r'` in `(1, 1/eta)`: `r' = 1 + xi (1/eta - 1)`.
    pub fresh_fraction: f64,
    pub r2: RateChoice,
}

impl KendallParams {
    /// Defaults: midpoint `eta`, midpoint `r'`, and `r2` at half the
    /// certified log-rate.
    pub fn new(beta: f64, b: f64, r: f64) -> Result<Self> {
        Ok(KendallParams {
            beta,
            r: Rate::from_value(r)?,
            mgf_excess: LogReal::from_value(b - 1.0)?,
            eta: EtaChoice::Fraction(0.5),
            fresh_fraction: 0.5,
            r2: RateChoice::Fraction(0.5),
        })
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = EtaChoice::Value(eta);
        self
    }

    pub fn with_r2(mut self, r2: f64) -> Result<Self> {
        self.r2 = RateChoice::Value(Rate::from_value(r2)?);
        Ok(self)
    }

    pub fn with_r2_fraction(mut self, t: f64) -> Self {
        self.r2 = RateChoice::Fraction(t);
        self
    }
}

/// Constants of the renewal bound with every intermediate quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KendallBound {
    pub beta: f64,
    pub r: Rate,
    /// `B`.
    pub b: LogReal,
    pub eta: f64,
    /// Drift level (integer-valued).
    pub m: f64,
    pub b_drift: LogReal,
    /// `sup_C V = (1 + r^{M-1}) / 2`.
    pub m_c: LogReal,
    /// Fresh rate for the return-time bound.
    pub r_prime: Rate,
    /// `(1 + r' b_drift) / (1 - eta r')`.
    pub entry: LogReal,
    pub m0: LogReal,
    /// Access probability `beta^{max(M, 2)}`.
    pub c: LogReal,
    pub rho: Rate,
    pub r2: Rate,
    /// Transfer constant: `E_x[sum_{k < tau_(1,1)} V r2^k] <= D V(x)`.
    pub d: LogReal,
    /// Bound on `E[r2^{T_{0,e}}]`.
    pub coupling_mgf: LogReal,
    /// `sum_{n >= 1} |u(n) - pi(1)| r2^n <= L`.
    pub l: LogReal,
}

impl KendallBound {
    /// Per-delay bound `E[r2^{T_{0,n}}] <= 1 + (r2 - 1) D V(1, n + 1)`.
    pub fn per_delay(&self, n: usize) -> f64 {
        let v = lyapunov_value(1, n + 1, self.r.value());
        (self.r2.excess().ln() + self.d.ln() + v.ln()).exp().ln_1p().exp()
    }
}

pub fn kendall_constants(params: &KendallParams) -> Result<KendallBound> {
    let beta = params.beta;
    if !(beta > 0.0 && beta <= 1.0) {
        return Err(invalid(format!("beta must lie in (0, 1], got {beta}")));
    }
    let theta = params.r.log_rate();
    let ln_r_excess = params.r.excess().ln();
    let ln_b_excess = params.mgf_excess.ln();
    if ln_b_excess < ln_r_excess - 1e-12 {
        return Err(invalid("MGF bound B must be >= r (sum p(n) r^n >= r always)"));
    }

    // ln(eta r - 1) and phi = ln(1/eta)
    let (eta, ln_eta_gap, phi) = match params.eta {
        EtaChoice::Value(eta) => {
            let r = params.r.value();
            if !(eta > 1.0 / r && eta < 1.0) {
                return Err(Error::EtaRange { eta, r });
            }
            (eta, (eta * r - 1.0).ln(), -eta.ln())
        }
        EtaChoice::Fraction(zeta) => {
            if !(zeta > 0.0 && zeta < 1.0) {
                return Err(invalid(format!("eta fraction must lie in (0, 1), got {zeta}")));
            }
            let phi = theta - (zeta * theta.exp_m1()).ln_1p();
            ((-phi).exp(), zeta.ln() + ln_r_excess, phi)
        }
    };
    if !(phi > 0.0) {
        return Err(Error::EtaRange {
            eta,
            r: params.r.value(),
        });
    }
    let xi = params.fresh_fraction;
    if !(xi > 0.0 && xi < 1.0) {
        return Err(invalid(format!("fresh-rate fraction must lie in (0, 1), got {xi}")));
    }

    // B - eta r = (B - 1) - (eta r - 1)
    let ln_b_gap = ln_b_excess + (-(ln_eta_gap - ln_b_excess).exp()).ln_1p();
    let m = drift_level(ln_b_gap, ln_eta_gap, theta);
    let ln_top = (m - 1.0) * theta; // ln r^{M-1}
    let ln_b = softplus(ln_b_excess);
    let ln_b_drift = (std::f64::consts::LN_2 + ln_b).max(crate::logspace::log_add_exp(ln_b, ln_top))
        - std::f64::consts::LN_2
        - theta;

    let r_prime = Rate::from_log_rate((xi * phi.exp_m1()).ln_1p())?;
    let ln_contraction = (1.0 - xi).ln() + (-(-phi).exp_m1()).ln(); // ln(1 - eta r')
    let ln_entry = softplus(r_prime.log_rate() + ln_b_drift) - ln_contraction;
    let ln_m_c = softplus(ln_top) - std::f64::consts::LN_2;
    let ln_m0 = ln_entry + ln_m_c;
    let c = certified_access(beta, m);

    let transfer = TransferInputs::from_logs(r_prime, LogReal::from_ln(ln_m0), LogReal::from_ln(ln_entry), c, m)?;
    let rho = transfer_rate(&transfer)?;
    let r2 = params.r2.resolve(rho)?;
    let moved = transfer_bound(&transfer, r2)?;

    // E[r2^T_{0,e}] <= 1 + (r2 - 1) (D/2) (1 + (B - 1)/(r - 1))
    let ln_r2_excess = r2.excess().ln();
    let ln_spread = softplus(ln_b_excess - ln_r_excess);
    let ln_coupling = softplus(ln_r2_excess + moved.d.ln() - std::f64::consts::LN_2 + ln_spread);
    let ln_l = r2.log_rate() - ln_r2_excess + ln_coupling;

    Ok(KendallBound {
        beta,
        r: params.r,
        b: LogReal::from_ln(ln_b),
        eta,
        m,
        b_drift: LogReal::from_ln(ln_b_drift),
        m_c: LogReal::from_ln(ln_m_c),
        r_prime,
        entry: LogReal::from_ln(ln_entry),
        m0: LogReal::from_ln(ln_m0),
        c,
        rho,
        r2,
        d: moved.d,
        coupling_mgf: LogReal::from_ln(ln_coupling),
        l: LogReal::from_ln(ln_l),
    })
}

/// `E[r^{T_{0,n}}]` for `n = 0..L-1` by linear solve on the bivariate chain.
pub fn coupling_mgf_exact(p: &IncrementDistribution, r: f64) -> Result<Vec<f64>> {
    let bivariate = BivariateChain::new(p)?;
    let g = hitting_mgf(bivariate.chain(), &bivariate.coupled_set(), r)?;
    let mut out = vec![1.0];
    for n in 1..p.support() {
        out.push(g[bivariate.index(1, n + 1)?]);
    }
    Ok(out)
}

/// Exact check of `sum |u(n) - pi(1)| r2^n <= L`.
#[derive(Debug, Clone, PartialEq)]
pub struct KendallReport {
    /// `sum_{n=1}^{N} |u(n) - pi(1)| r2^n`.
    pub partial_sum: f64,
    /// `sum_{n > N} r2^n P(T_{0,e} > n)`, which dominates the remaining terms.
    pub tail: f64,
    pub total: f64,
    pub bound: LogReal,
    pub passed: bool,
}

pub fn kendall_verify(p: &IncrementDistribution, bound: &KendallBound, horizon: usize) -> Result<KendallReport> {
    kendall_verify_claim(p, bound.r2, bound.l, horizon)
}

/// Checks a claimed pair `(r2, L)`.
pub fn kendall_verify_claim(
    p: &IncrementDistribution,
    rate: Rate,
    l: LogReal,
    horizon: usize,
) -> Result<KendallReport> {
    p.require_aperiodic()?;
    let r2 = rate.value();
    let (e, _) = stationary_delay(p);
    let deviation = renewal_deviations(p, horizon)?;
    let partial_sum: f64 = (1..=horizon).map(|n| deviation[n] * r2.powi(n as i32)).sum();

    // sum_{n>=1} r2^n P(T > n) = E[sum_{k=1}^{T-1} r2^k]
    let tail = if r2 > 1.0 {
        let bivariate = BivariateChain::new(p)?;
        let sums = weighted_sums(
            bivariate.chain(),
            &WeightFunction::constant(bivariate.chain().len()),
            &bivariate.coupled_set(),
            r2,
        )?;
        let mut total_t = 0.0;
        for m in 1..e.probs().len() {
            total_t += e.d(m) * (sums[bivariate.index(1, m + 1)?] - 1.0);
        }
        let survival = crate::renewal::coupling_survival(p, &e, horizon)?;
        let partial_t: f64 = (1..=horizon).map(|n| survival[n] * r2.powi(n as i32)).sum();
        (total_t - partial_t).max(0.0)
    } else {
        // r2 indistinguishable from one in f64: the weighted sum is the
        // plain tail sum E[(T - 1 - N)^+]
        let survival = crate::renewal::coupling_survival(p, &e, horizon)?;
        let bivariate = BivariateChain::new(p)?;
        let means = crate::chain::mean_hitting_times(bivariate.chain(), &bivariate.coupled_set())?;
        let mut total_t = 0.0;
        for m in 1..e.probs().len() {
            total_t += e.d(m) * (means[bivariate.index(1, m + 1)?] - 1.0);
        }
        let partial_t: f64 = survival[1..].iter().sum();
        (total_t - partial_t).max(0.0)
    };
    let total = partial_sum + tail;
    Ok(KendallReport {
        partial_sum,
        tail,
        total,
        bound: l,
        passed: total.ln() <= l.ln(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn half_half() -> IncrementDistribution {
        IncrementDistribution::new(vec![0.5, 0.5]).unwrap()
    }

    #[test]
    fn bivariate_kernel_examples() {
        let always = IncrementDistribution::new(vec![1.0]).unwrap();
        let bc = BivariateChain::new(&always).unwrap();
        assert_eq!(bc.chain().len(), 1);
        assert_eq!(bc.chain().prob(0, 0), 1.0);

        let bc = BivariateChain::new(&half_half()).unwrap();
        let from = bc.index(1, 2).unwrap();
        assert_eq!(bc.chain().prob(from, bc.index(1, 1).unwrap()), 0.5);
        assert_eq!(bc.chain().prob(from, bc.index(2, 1).unwrap()), 0.5);
        for i in 0..bc.chain().len() {
            assert_abs_diff_eq!(bc.chain().matrix().row(i).sum(), 1.0, epsilon = 1e-15);
        }
        assert_eq!(bc.state(bc.index(2, 1).unwrap()), (2, 1));
    }

    #[test]
    fn lyapunov_examples() {
        assert_eq!(lyapunov_value(1, 1, 3.7), 1.0);
        assert_abs_diff_eq!(lyapunov_value(1, 3, 1.2), 1.22, epsilon = 1e-15);
        assert_eq!(lyapunov_value(4, 2, 1.3), lyapunov_value(2, 4, 1.3));
    }

    #[test]
    fn bivariate_drift_examples() {
        let d = bivariate_drift(&half_half(), 1.2, 0.9).unwrap();
        assert_abs_diff_eq!(d.mgf, 1.32, epsilon = 1e-15);
        assert_eq!(d.m, 8);
        assert_abs_diff_eq!(d.b_drift, (1.32 + 1.2f64.powi(7)) / 2.4, epsilon = 1e-14);
        assert_abs_diff_eq!(d.b_drift, 2.0430, epsilon = 1e-4);

        let always = IncrementDistribution::new(vec![1.0]).unwrap();
        let d = bivariate_drift(&always, 1.5, 0.9).unwrap();
        assert_eq!(d.m, 1);

        assert!(matches!(
            bivariate_drift(&half_half(), 1.2, 0.8),
            Err(Error::EtaRange { .. })
        ));
    }

    #[test]
    fn drift_relations_hold() {
        for r in [1.1, 1.5, 2.5] {
            let p = IncrementDistribution::new(vec![0.3, 0.2, 0.1, 0.4]).unwrap();
            assert!(drift_identity_residual(&p, r).unwrap() < DRIFT_IDENTITY_TOL);
        }
    }

    #[test]
    fn petiteness_examples() {
        let always = IncrementDistribution::new(vec![1.0]).unwrap();
        assert_eq!(bivariate_petiteness(&always, 3).unwrap().certified, 1.0);
        let rep = bivariate_petiteness(&half_half(), 8).unwrap();
        assert_abs_diff_eq!(rep.certified, 1.0 / 256.0, epsilon = 1e-18);
        assert!(rep.exact >= rep.certified);
        assert!(rep.passed);
        // M = 1 keeps the two-step exponent: from (1,1) the one-step return is p(1)^2
        let rep = bivariate_petiteness(&half_half(), 1).unwrap();
        assert_abs_diff_eq!(rep.exact, 0.25, epsilon = 1e-15);
        assert!(rep.passed);
    }

    #[test]
    fn worked_example_constants() {
        let params = KendallParams::new(0.5, 1.32, 1.2).unwrap().with_eta(0.9);
        let bound = kendall_constants(&params).unwrap();
        assert_eq!(bound.m, 8.0);
        assert_abs_diff_eq!(bound.c.value(), 1.0 / 256.0, epsilon = 1e-15);
        assert!(bound.rho.value() > 1.0);
        assert!(bound.l.is_finite());
        let rep = kendall_verify(&half_half(), &bound, 200).unwrap();
        assert!(rep.passed, "{rep:?}");
    }

    #[test]
    fn unit_increment_gives_finite_l() {
        let always = IncrementDistribution::new(vec![1.0]).unwrap();
        let bound = kendall_constants(&KendallParams::new(1.0, 1.5, 1.5).unwrap()).unwrap();
        assert_eq!(bound.m, 1.0);
        assert_eq!(bound.c.value(), 1.0);
        assert!(bound.l.is_finite());
        let rep = kendall_verify(&always, &bound, 50).unwrap();
        assert_eq!(rep.partial_sum, 0.0);
        assert!(rep.passed);
    }

    #[test]
    fn corrupted_bound_fails() {
        let p = half_half();
        let mut bound = kendall_constants(&KendallParams::new(0.5, 1.32, 1.2).unwrap()).unwrap();
        let exact = kendall_verify(&p, &bound, 200).unwrap().total;
        bound.l = LogReal::from_value(exact * 0.5).unwrap();
        assert!(!kendall_verify(&p, &bound, 200).unwrap().passed);
    }

    #[test]
    fn l_monotone_in_b() {
        let mut last = f64::NEG_INFINITY;
        for b in [1.25, 1.32, 1.5, 2.0, 3.0, 10.0] {
            let mut params = KendallParams::new(0.5, b, 1.2).unwrap();
            params.r2 = RateChoice::Value(Rate::from_log_rate(1e-14).unwrap());
            let bound = kendall_constants(&params).unwrap();
            assert!(bound.l.ln() >= last);
            last = bound.l.ln();
        }
    }

    #[test]
    fn constants_are_bit_reproducible() {
        let params = KendallParams::new(0.3, 1.9, 1.4).unwrap();
        assert_eq!(kendall_constants(&params).unwrap(), kendall_constants(&params).unwrap());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            kendall_constants(&KendallParams::new(0.5, 1.32, 1.2).unwrap().with_eta(0.5)),
            Err(Error::EtaRange { .. })
        ));
        let params = KendallParams::new(0.5, 1.32, 1.2).unwrap().with_r2(1.1).unwrap();
        assert!(matches!(kendall_constants(&params), Err(Error::R2TooLarge { .. })));
        assert!(kendall_constants(&KendallParams::new(0.0, 1.32, 1.2).unwrap()).is_err());
    }

    #[test]
    fn per_delay_bound_dominates_exact_mgf() {
        let p = IncrementDistribution::new(vec![0.4, 0.3, 0.3]).unwrap();
        let r = 1.3;
        let b = increment_mgf(&p, r).unwrap();
        let bound = kendall_constants(&KendallParams::new(0.4, b, r).unwrap()).unwrap();
        let r2 = bound.r2.value();
        let d = bound.d.value();
        for (n, exact) in coupling_mgf_exact(&p, r2).unwrap().iter().enumerate() {
            assert!(*exact <= bound.per_delay(n));
            assert!(*exact <= d * r2 / (2.0 * (r2 - 1.0)) * r2.powi(n as i32));
        }
    }
}
