//! End-to-end geometric ergodicity constants.
//!
//! From a small set `U` (`P >= delta mu` on `U`), a drift certificate
//! `PV <= lambda V + b 1_C` and an access probability `c` from `C` to `U`
//! within `N0` steps, the pipeline produces `(D, gamma)` with
//!
//! `|P^n phi(x) - pi(phi)| <= D V(x) ||phi||_V gamma^n`.
//!
//! Stages:
//! 1. return times to `C` at `r1 = 1 + (1/lambda - 1)/2`, entry factor
//!    `K_C = (1 + r1 b)/(1 - lambda r1)`;
//! 2. transfer `C -> U` through `(N0, c)`;
//! 3. split at `U`; the return bound to `U_0 ∪ U_1` is inherited with the
//!    density factor `max(1/delta, 2/(2 - delta))`, and the one-step access
//!    `delta^2 / (2 (2 - delta))` moves it to the atom;
//! 4. the atom's renewal sequence with `p(1) = delta/2` and the atom-return
//!    MGF bound feeds the renewal coupling bound;
//! 5. first-entrance / last-exit assembly at the final rate.
//!
//! Every rate is picked at a fixed fraction of the certified log-rate, so
//! the constants depend only on the seven input numbers.

use crate::chain::{stationary, vnorm_distances, FiniteChain, WeightFunction};
use crate::drift::{petiteness_infimum, transfer_bound, transfer_rate, verify_drift, DriftCertificate, TransferInputs};
use crate::error::{invalid, Error, Result};
use crate::kendall::{kendall_constants, EtaChoice, KendallParams, RateChoice};
use crate::logspace::{log_add_exp, softplus, LogReal, Rate};
use crate::splitting::{atom_access_bound, MinorizationCertificate};

/// The seven numbers the constants depend on.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarrisInputs {
    pub delta: f64,
    pub lambda: f64,
    pub b: f64,
    pub n0: u64,
    pub c: f64,
    pub m_u: f64,
    pub m_c: f64,
}

impl HarrisInputs {
    pub fn validate(&self) -> Result<()> {
        let ok = self.delta > 0.0
            && self.delta <= 1.0
            && self.lambda > 0.0
            && self.lambda < 1.0
            && self.b >= 0.0
            && self.b.is_finite()
            && self.n0 >= 1
            && self.c > 0.0
            && self.c <= 1.0
            && self.m_u >= 1.0
            && self.m_u.is_finite()
            && self.m_c >= 1.0
            && self.m_c.is_finite();
        if ok {
            Ok(())
        } else {
            Err(invalid(format!("invalid Harris inputs {self:?}")))
        }
    }
}

/// Free rate choices, as fractions of the admissible interval.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarrisTunables {
    /// `r1 = 1 + f (1/lambda - 1)`.
    pub drift_fraction: f64,
    /// Each intermediate rate sits at this fraction of the certified log-rate.
    pub rate_fraction: f64,
    /// `eta r - 1 = zeta (r - 1)` in the renewal step.
    pub eta_fraction: f64,
    /// Fresh rate fraction in the renewal step.
    pub fresh_fraction: f64,
}

impl Default for HarrisTunables {
    fn default() -> Self {
        HarrisTunables {
            drift_fraction: 0.5,
            rate_fraction: 0.5,
            eta_fraction: 0.5,
            fresh_fraction: 0.5,
        }
    }
}

/// A traced constant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TraceValue {
    Real(f64),
    Log(LogReal),
    Rate(Rate),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceEntry {
    pub stage: &'static str,
    pub name: &'static str,
    pub value: TraceValue,
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarrisBound {
    pub d: LogReal,
    /// `1 / gamma`.
    pub rate: Rate,
    pub trace: Vec<TraceEntry>,
}

impl HarrisBound {
    /// `gamma` as `f64`; rounds to `1.0` when `1 - gamma` is below machine
    /// precision. [`HarrisBound::gamma_below_one`] is the exact test.
    pub fn gamma(&self) -> f64 {
        self.rate.inverse()
    }

    /// `ln gamma`.
    pub fn ln_gamma(&self) -> f64 {
        -self.rate.log_rate()
    }

    pub fn gamma_below_one(&self) -> bool {
        self.rate.ln_log_rate().is_finite()
    }

    /// `ln(D V gamma^n)`.
    pub fn ln_bound(&self, v: f64, n: usize) -> f64 {
        self.d.ln() + v.ln() - n as f64 * self.rate.log_rate()
    }

    pub fn lookup(&self, name: &str) -> Option<TraceValue> {
        self.trace.iter().find(|e| e.name == name).map(|e| e.value)
    }
}

/// Checks the three hypotheses and collects the seven inputs.
pub fn verify_hypotheses(
    chain: &FiniteChain,
    mcert: &MinorizationCertificate,
    dcert: &DriftCertificate,
    n0: u64,
) -> Result<HarrisInputs> {
    let n = chain.len();
    for got in [
        mcert.mu().len(),
        dcert.v.len(),
        dcert.set.universe(),
        mcert.set().universe(),
    ] {
        if got != n {
            return Err(Error::Dimension { expected: n, got });
        }
    }
    let (margin, state) = mcert.margin(chain)?;
    if margin < -crate::splitting::SPLIT_TOL {
        return Err(Error::HypothesisFail {
            clause: "small set",
            state,
            detail: format!("P(x, .) - delta mu(.) reaches {margin:e}"),
        });
    }
    if !(dcert.lambda < 1.0) {
        return Err(Error::HypothesisFail {
            clause: "drift",
            state: 0,
            detail: format!("lambda = {} is not below 1", dcert.lambda),
        });
    }
    let check = verify_drift(chain, dcert)?;
    if !check.passed {
        return Err(Error::HypothesisFail {
            clause: "drift",
            state: check.worst_state,
            detail: format!("PV exceeds lambda V + b 1_C by {:e}", -check.margin),
        });
    }
    if n0 == 0 {
        return Err(invalid("N0 must be >= 1"));
    }
    let (c, worst) = petiteness_infimum(chain, &dcert.set, mcert.set(), n0 as usize)?;
    if !(c > 0.0) {
        return Err(Error::HypothesisFail {
            clause: "petiteness",
            state: worst.unwrap_or(0),
            detail: format!("U is not reached from C within {n0} steps"),
        });
    }
    Ok(HarrisInputs {
        delta: mcert.delta(),
        lambda: dcert.lambda,
        b: dcert.b,
        n0,
        c: c.min(1.0),
        m_u: dcert.v.sup_over(mcert.set()),
        m_c: dcert.v.sup_over(&dcert.set),
    })
}

pub fn harris_constants(inputs: &HarrisInputs) -> Result<HarrisBound> {
    harris_constants_with(inputs, &HarrisTunables::default())
}

pub fn harris_constants_with(inputs: &HarrisInputs, tune: &HarrisTunables) -> Result<HarrisBound> {
    inputs.validate()?;
    for (name, f) in [
        ("drift_fraction", tune.drift_fraction),
        ("rate_fraction", tune.rate_fraction),
        ("eta_fraction", tune.eta_fraction),
        ("fresh_fraction", tune.fresh_fraction),
    ] {
        if !(f > 0.0 && f < 1.0) {
            return Err(invalid(format!("{name} must lie in (0, 1), got {f}")));
        }
    }
    let mut trace = Vec::new();
    let mut log = |stage: &'static str, name: &'static str, value: TraceValue| {
        trace.push(TraceEntry { stage, name, value });
    };
    let HarrisInputs {
        delta,
        lambda,
        b,
        n0,
        c,
        m_u,
        m_c,
    } = *inputs;
    let ln_m_u = m_u.ln();

    // 1. return times to C
    let f = tune.drift_fraction;
    let r1 = Rate::from_log_rate((f * (1.0 / lambda - 1.0)).ln_1p())?;
    let ln_k_c = (r1.value() * b).ln_1p() - ((1.0 - f) * (1.0 - lambda)).ln();
    let ln_m0_c = ln_k_c + m_c.ln();
    log("return to C", "r1", TraceValue::Rate(r1));
    log("return to C", "K_C", TraceValue::Log(LogReal::from_ln(ln_k_c)));
    log("return to C", "M0_C", TraceValue::Log(LogReal::from_ln(ln_m0_c)));

    // 2. transfer C -> U
    let to_u = TransferInputs::from_logs(
        r1,
        LogReal::from_ln(ln_m0_c),
        LogReal::from_ln(ln_k_c),
        LogReal::from_value(c)?,
        n0 as f64,
    )?;
    let rho_u = transfer_rate(&to_u)?;
    let r_u = rho_u.scale(tune.rate_fraction)?;
    let d_u = transfer_bound(&to_u, r_u)?.d;
    log("transfer C to U", "rho_U", TraceValue::Rate(rho_u));
    log("transfer C to U", "r_U", TraceValue::Rate(r_u));
    log("transfer C to U", "D_U", TraceValue::Log(d_u));

    // 3. split chain: U_0 ∪ U_1 -> atom
    let ln_density = (1.0 / delta).max(2.0 / (2.0 - delta)).ln();
    let ln_m0_alpha = ln_density + d_u.ln() + ln_m_u;
    let ln_k_alpha = (ln_density + d_u.ln()).max(softplus(d_u.ln() + ln_m_u - delta.ln()));
    let access = atom_access_bound(delta);
    let to_atom = TransferInputs::from_logs(
        r_u,
        LogReal::from_ln(ln_m0_alpha),
        LogReal::from_ln(ln_k_alpha),
        LogReal::from_value(access)?,
        1.0,
    )?;
    let rho_alpha = transfer_rate(&to_atom)?;
    let r3 = rho_alpha.scale(tune.rate_fraction)?;
    let d_alpha = transfer_bound(&to_atom, r3)?.d;
    let ln_b_alpha_excess = r3.excess().ln() + d_alpha.ln() + ln_m_u;
    log("split atom", "M0_alpha", TraceValue::Log(LogReal::from_ln(ln_m0_alpha)));
    log("split atom", "K_alpha", TraceValue::Log(LogReal::from_ln(ln_k_alpha)));
    log("split atom", "atom_access", TraceValue::Real(access));
    log("split atom", "rho_alpha", TraceValue::Rate(rho_alpha));
    log("split atom", "r3", TraceValue::Rate(r3));
    log("split atom", "D_alpha", TraceValue::Log(d_alpha));
    log(
        "split atom",
        "B_alpha",
        TraceValue::Log(LogReal::from_ln(softplus(ln_b_alpha_excess))),
    );

    // 4. renewal coupling of the atom
    let kendall = kendall_constants(&KendallParams {
        beta: delta / 2.0,
        r: r3,
        mgf_excess: LogReal::from_ln(ln_b_alpha_excess),
        eta: EtaChoice::Fraction(tune.eta_fraction),
        fresh_fraction: tune.fresh_fraction,
        r2: RateChoice::Fraction(tune.rate_fraction),
    })?;
    log("renewal coupling", "beta", TraceValue::Real(kendall.beta));
    log("renewal coupling", "eta", TraceValue::Real(kendall.eta));
    log("renewal coupling", "M", TraceValue::Real(kendall.m));
    log("renewal coupling", "b_drift", TraceValue::Log(kendall.b_drift));
    log("renewal coupling", "c_K", TraceValue::Log(kendall.c));
    log("renewal coupling", "rho_K", TraceValue::Rate(kendall.rho));
    log("renewal coupling", "r_K", TraceValue::Rate(kendall.r2));
    log("renewal coupling", "D_K", TraceValue::Log(kendall.d));
    log("renewal coupling", "L_K", TraceValue::Log(kendall.l));

    // 5. assembly at r = r_K
    let r = kendall.r2;
    let ln_r = r.log_rate();
    let ln_r_excess = r.excess().ln();
    let ln_d_alpha = d_alpha.ln();
    // E_r = 1 + (r - 1) D_alpha bounds E_x[r^tau_alpha] / V(x)
    let ln_e_r = softplus(ln_r_excess + ln_d_alpha);
    // T = D_alpha M_U + M_U (1 + (r - 1) D_alpha M_U)
    let ln_t = log_add_exp(
        ln_d_alpha + ln_m_u,
        ln_m_u + softplus(ln_r_excess + ln_d_alpha + ln_m_u),
    );
    let first = log_add_exp(ln_d_alpha, ln_m_u + ln_e_r);
    let middle = ln_t + log_add_exp(ln_e_r + softplus(kendall.l.ln()), ln_r + ln_d_alpha);
    let last = ln_r + ln_t - ln_r_excess;
    let ln_d = log_add_exp(log_add_exp(first, middle), last);
    log("assembly", "r", TraceValue::Rate(r));
    log("assembly", "E_r", TraceValue::Log(LogReal::from_ln(ln_e_r)));
    log("assembly", "T", TraceValue::Log(LogReal::from_ln(ln_t)));
    log("assembly", "D", TraceValue::Log(LogReal::from_ln(ln_d)));
    log("assembly", "gamma", TraceValue::Real((-ln_r).exp()));

    if !ln_d.is_finite() || !r.ln_log_rate().is_finite() {
        return Err(invalid(format!("non-finite constants: ln D = {ln_d}, rate {r:?}")));
    }
    Ok(HarrisBound {
        d: LogReal::from_ln(ln_d),
        rate: r,
        trace,
    })
}

/// One row of the verification table.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistanceRow {
    pub n: usize,
    /// `max_x ||P^n(x, .) - pi||_V / V(x)`.
    pub exact: f64,
    /// `ln(D gamma^n)`.
    pub ln_bound: f64,
}

impl DistanceRow {
    /// `D gamma^n` as `f64` (may be `inf`).
    pub fn bound(&self) -> f64 {
        self.ln_bound.exp()
    }

    pub fn margin(&self) -> f64 {
        self.bound() - self.exact
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HarrisReport {
    pub rows: Vec<DistanceRow>,
    /// First `(x, n)` with `ln dist > ln(D V(x) gamma^n)`.
    pub violation: Option<(usize, usize)>,
}

impl HarrisReport {
    pub fn passed(&self) -> bool {
        self.violation.is_none()
    }
}

/// Exact distances against the bound for `n = 1..=horizon`, without failing.
pub fn harris_distance_table(
    chain: &FiniteChain,
    v: &WeightFunction,
    bound: &HarrisBound,
    horizon: usize,
) -> Result<HarrisReport> {
    let pi = stationary(chain)?;
    let paths = (0..chain.len())
        .map(|x| vnorm_distances(chain, v, x, horizon, &pi))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::with_capacity(horizon);
    let mut violation = None;
    for n in 1..=horizon {
        let mut exact: f64 = 0.0;
        for (x, path) in paths.iter().enumerate() {
            if violation.is_none() && path[n].ln() > bound.ln_bound(v.get(x), n) {
                violation = Some((x, n));
            }
            exact = exact.max(path[n] / v.get(x));
        }
        rows.push(DistanceRow {
            n,
            exact,
            ln_bound: bound.ln_bound(1.0, n),
        });
    }
    Ok(HarrisReport { rows, violation })
}

/// Checks `||P^n(x, .) - pi||_V <= D V(x) gamma^n` for every state and
/// `n = 1..=horizon`.
pub fn verify_harris_bound(
    chain: &FiniteChain,
    v: &WeightFunction,
    bound: &HarrisBound,
    horizon: usize,
) -> Result<HarrisReport> {
    let report = harris_distance_table(chain, v, bound, horizon)?;
    if let Some((state, n)) = report.violation {
        let pi = stationary(chain)?;
        return Err(Error::BoundViolation {
            state,
            n,
            distance: vnorm_distances(chain, v, state, n, &pi)?[n],
            bound: bound.ln_bound(v.get(state), n).exp(),
        });
    }
    Ok(report)
}
