//! Return-time moment bounds from a drift certificate, and the transfer of
//! geometric tails from a drift set `C` to a target set `B`.
//!
//! # Transfer scheme
//!
//! Inputs: a log-rate `theta1 = ln r1`, a bound `M0` on
//! `E_x[sum_{k < tau_C} V r1^k]` over `x in C`, an entry factor `K` with
//! `E_x[sum_{k < tau_C} V r1^k] <= K V(x)` for every `x`, and a petiteness
//! pair `(N0, c)` with `P_x{tau_B <= N0} >= c` on `C`.
//!
//! Cut the path into C-to-C blocks. A *trial* starts at a visit to `C` and
//! ends at the first visit to `C` at least `N0` steps later, so a trial is
//! made of at most `N0` blocks and succeeds (hits `B`) with probability at
//! least `c`. With `R1 = 1 + (r1 - 1) M0`, a trial length `T` satisfies
//! `E[r1^T] <= R1^N0`. For `r2 = r1^s`, Hölder's inequality bounds the cost
//! of a failed trial:
//!
//! ```text
//! E[r2^T 1{fail}] <= R1^(N0 s) (1 - c)^(1 - s) =: kappa(s)
//! ```
//!
//! `kappa < 1` exactly when `s < s* = Bc / (N0 ln R1 + Bc)`, `Bc = -ln(1 - c)`,
//! giving the certified rate `rho = r1^{s*}`. For `r2 = r1^{q s*}` one has
//! `-ln kappa = (1 - q) Bc`. The weighted cost of one trial is at most
//! `W = M0 (R2^N0 - 1) / (R2 - 1)` with `R2 = 1 + (r2 - 1) M0`, and summing
//! the geometric series over trials gives, for every state,
//!
//! ```text
//! E_x[sum_{k < tau_B} V r2^k] <= (K + (1 + (r2 - 1) K) W / (1 - kappa)) V(x).
//! ```

use crate::chain::{hitting_law, weighted_sums, FiniteChain, StateSet, WeightFunction};
use crate::error::{invalid, Error, Result};
use crate::logspace::{ln_expm1, ln_neg_ln1m, ln_one_minus_exp_neg, ln_softplus, log_add_exp, softplus, LogReal, Rate};

/// Tolerance for pointwise certificate checks.
pub const CERTIFICATE_TOL: f64 = 1e-12;
/// Relative guard band between the supremum rate and the reported `rho`.
pub const RATE_GUARD: f64 = 1e-9;

/// `PV <= lambda V + b 1_C`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCertificate {
    pub v: WeightFunction,
    pub lambda: f64,
    pub b: f64,
    pub set: StateSet,
}

impl DriftCertificate {
    pub fn new(v: WeightFunction, lambda: f64, b: f64, set: StateSet) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(invalid(format!("drift lambda must lie in (0, 1), got {lambda}")));
        }
        if !(b >= 0.0) || !b.is_finite() {
            return Err(invalid(format!("drift b must be finite and >= 0, got {b}")));
        }
        if v.len() != set.universe() {
            return Err(Error::Dimension {
                expected: v.len(),
                got: set.universe(),
            });
        }
        Ok(DriftCertificate { v, lambda, b, set })
    }
}

/// `inf_{x in source} P_x{tau_target <= n0} >= c`.
#[derive(Debug, Clone, PartialEq)]
pub struct PetitenessCertificate {
    pub source: StateSet,
    pub target: StateSet,
    pub n0: usize,
    pub c: f64,
}

impl PetitenessCertificate {
    pub fn new(source: StateSet, target: StateSet, n0: usize, c: f64) -> Result<Self> {
        if n0 == 0 {
            return Err(invalid("petiteness needs N0 >= 1"));
        }
        if !(c > 0.0 && c <= 1.0) {
            return Err(invalid(format!("petiteness c must lie in (0, 1], got {c}")));
        }
        Ok(PetitenessCertificate { source, target, n0, c })
    }
}

/// Outcome of a pointwise drift check.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftCheck {
    pub passed: bool,
    /// State with the largest `PV - lambda V - b 1_C`.
    pub worst_state: usize,
    /// `lambda V + b 1_C - PV` at the worst state; negative on failure.
    pub margin: f64,
}

/// `(1 + r b) / (1 - lambda r) * V(x)`.
pub fn drift_mgf_bound(lambda: f64, b: f64, r: f64, vx: f64) -> Result<f64> {
    if !(lambda > 0.0 && lambda < 1.0) {
        return Err(invalid(format!("lambda must lie in (0, 1), got {lambda}")));
    }
    if !(r > 1.0) || lambda * r >= 1.0 {
        return Err(Error::RateRange { r, lambda });
    }
    Ok((1.0 + r * b) / (1.0 - lambda * r) * vx)
}

pub fn verify_drift(chain: &FiniteChain, cert: &DriftCertificate) -> Result<DriftCheck> {
    if cert.v.len() != chain.len() {
        return Err(Error::Dimension {
            expected: chain.len(),
            got: cert.v.len(),
        });
    }
    let pv = chain.apply(cert.v.values());
    let mut worst_state = 0;
    let mut margin = f64::INFINITY;
    for (x, pvx) in pv.iter().enumerate() {
        let allowance = cert.lambda * cert.v.get(x) + if cert.set.contains(x) { cert.b } else { 0.0 };
        let m = allowance - pvx;
        if m < margin {
            margin = m;
            worst_state = x;
        }
    }
    Ok(DriftCheck {
        passed: margin >= -CERTIFICATE_TOL * pv[worst_state].abs().max(1.0),
        worst_state,
        margin,
    })
}

/// Outcome of a petiteness check.
#[derive(Debug, Clone, PartialEq)]
pub struct PetitenessCheck {
    pub passed: bool,
    /// `inf_{x in source} P_x{tau_target <= N0}`; `1` for an empty source.
    pub infimum: f64,
    pub worst_state: Option<usize>,
}

pub fn verify_petiteness(chain: &FiniteChain, cert: &PetitenessCertificate) -> Result<PetitenessCheck> {
    let (infimum, worst_state) = petiteness_infimum(chain, &cert.source, &cert.target, cert.n0)?;
    Ok(PetitenessCheck {
        passed: infimum >= cert.c - CERTIFICATE_TOL,
        infimum,
        worst_state,
    })
}

/// `inf_{x in source} P_x{tau_target <= n0}` and a minimizing state.
pub fn petiteness_infimum(
    chain: &FiniteChain,
    source: &StateSet,
    target: &StateSet,
    n0: usize,
) -> Result<(f64, Option<usize>)> {
    if n0 == 0 {
        return Err(invalid("petiteness needs N0 >= 1"));
    }
    let mut best = (1.0, None);
    for x in source.iter() {
        let reach = hitting_law(chain, x, target, n0)?.cdf(n0);
        if best.1.is_none() || reach < best.0 {
            best = (reach, Some(x));
        }
    }
    Ok(best)
}

/// Inputs of the transfer step, all carried in log form.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferInputs {
    /// Rate at which the C-return bounds hold.
    pub r1: Rate,
    /// `sup_{x in C} E_x[sum_{k < tau_C} V r1^k]`.
    pub m0: LogReal,
    /// `sup_x E_x[sum_{k < tau_C} V r1^k] / V(x)`.
    pub entry: LogReal,
    /// Petiteness probability.
    pub c: LogReal,
    /// Petiteness horizon; integer-valued, kept as `f64` because the
    /// renewal step can produce horizons beyond `u64`.
    pub n0: f64,
}

impl TransferInputs {
    pub fn new(r1: f64, m0: f64, entry: f64, c: f64, n0: u64) -> Result<Self> {
        Self::from_logs(
            Rate::from_value(r1)?,
            LogReal::from_value(m0)?,
            LogReal::from_value(entry)?,
            LogReal::from_value(c)?,
            n0 as f64,
        )
    }

    pub fn from_logs(r1: Rate, m0: LogReal, entry: LogReal, c: LogReal, n0: f64) -> Result<Self> {
        if !(m0.ln() >= 0.0) || !m0.is_finite() {
            return Err(invalid(format!("M0 must be finite and >= 1, got {:?}", m0)));
        }
        if !(entry.ln() >= 0.0) || !entry.is_finite() {
            return Err(invalid(format!(
                "entry factor must be finite and >= 1, got {:?}",
                entry
            )));
        }
        if !(c.ln() <= 0.0) || c.ln() == f64::NEG_INFINITY || c.ln().is_nan() {
            return Err(invalid(format!("c must lie in (0, 1], got {:?}", c)));
        }
        if !(n0 >= 1.0) || !n0.is_finite() || n0.fract() != 0.0 {
            return Err(invalid(format!("N0 must be a positive integer, got {n0}")));
        }
        Ok(TransferInputs { r1, m0, entry, c, n0 })
    }

    fn certain(&self) -> bool {
        self.c.ln() >= 0.0
    }

    /// `ln(-ln(1 - c))`.
    fn ln_bc(&self) -> f64 {
        ln_neg_ln1m(self.c.ln())
    }

    /// Supremum rate of the scheme, before the guard band.
    fn sup_rate(&self) -> Result<Rate> {
        if self.certain() {
            return Ok(self.r1);
        }
        let ln_r1_excess = ln_expm1(self.r1.ln_log_rate());
        let ln_ln_big_r1 = ln_softplus(ln_r1_excess + self.m0.ln());
        let ln_a = self.n0.ln() + ln_ln_big_r1;
        let ln_bc = self.ln_bc();
        let ln_s_star = ln_bc - log_add_exp(ln_a, ln_bc);
        if !ln_s_star.is_finite() {
            return Err(Error::NoContraction);
        }
        Rate::from_ln_log_rate(self.r1.ln_log_rate() + ln_s_star).map_err(|_| Error::NoContraction)
    }
}

/// Certified rate and the matching constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransferBound {
    pub rho: Rate,
    pub r2: Rate,
    /// `E_x[sum_{k < tau_B} V r2^k] <= d V(x)` for every state.
    pub d: LogReal,
    /// `1 - kappa`, the contraction gap per trial.
    pub gap: LogReal,
    /// Per-trial cost bound `W`.
    pub trial_cost: LogReal,
}

/// Certified rate `rho` (guard band applied).
pub fn transfer_rate(inputs: &TransferInputs) -> Result<Rate> {
    let sup = inputs.sup_rate()?;
    sup.scale(1.0 - RATE_GUARD)
}

/// `(rho, D)` for a requested rate `r2 <= rho`.
pub fn transfer_bound(inputs: &TransferInputs, r2: Rate) -> Result<TransferBound> {
    let rho = transfer_rate(inputs)?;
    let sup = inputs.sup_rate()?;
    let q = (r2.ln_log_rate() - sup.ln_log_rate()).exp();
    if r2 > rho {
        return Err(Error::R2TooLarge { ratio: q });
    }

    let ln_gap = if inputs.certain() {
        0.0
    } else {
        ln_one_minus_exp_neg(inputs.ln_bc() + (-q).ln_1p())
    };

    let ln_r2_excess = r2.excess().ln();
    let x2 = ln_r2_excess + inputs.m0.ln();
    let ln_ln_big_r2 = ln_softplus(x2);
    let ln_trial_cost = inputs.m0.ln() + ln_expm1(inputs.n0.ln() + ln_ln_big_r2) - x2;

    let ln_d = log_add_exp(
        inputs.entry.ln(),
        softplus(ln_r2_excess + inputs.entry.ln()) + ln_trial_cost - ln_gap,
    );
    Ok(TransferBound {
        rho,
        r2,
        d: LogReal::from_ln(ln_d),
        gap: LogReal::from_ln(ln_gap),
        trial_cost: LogReal::from_ln(ln_trial_cost),
    })
}

/// Measured transfer inputs on a finite chain: exact `M0`, entry factor and
/// petiteness infimum.
pub fn measure_transfer_inputs(
    chain: &FiniteChain,
    v: &WeightFunction,
    drift_set: &StateSet,
    target: &StateSet,
    r1: f64,
    n0: usize,
) -> Result<TransferInputs> {
    let sums = weighted_sums(chain, v, drift_set, r1)?;
    let m0 = drift_set.iter().map(|x| sums[x]).fold(1.0, f64::max);
    let entry = sums.iter().zip(v.values()).map(|(s, vx)| s / vx).fold(1.0, f64::max);
    let (c, _) = petiteness_infimum(chain, drift_set, target, n0)?;
    TransferInputs::new(r1, m0, entry, c, n0 as u64)
}
