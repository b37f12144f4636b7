use ergo_bounds::chain::{hitting_law, mean_hitting_times, StateSet};
use ergo_bounds::harris::{
    harris_constants_with, harris_distance_table, verify_hypotheses, DistanceRow, HarrisBound, HarrisTunables,
    TraceEntry, TraceValue,
};
use ergo_bounds::kendall::{
    bivariate_drift, bivariate_petiteness, coupling_mgf_exact, kendall_constants, kendall_verify, kendall_verify_claim,
    BivariateChain, KendallBound, KendallParams, KendallReport,
};
use ergo_bounds::montecarlo::{simulate_coupling_time, simulate_hitting, within_se, SampleSummary, SimulationConfig};
use ergo_bounds::renewal::{
    coupling_tail_check, increment_mgf, renewal_deviations, renewal_sequence, stationary_delay,
};
use ergo_bounds::report::{format_float, Report, Section};
use ergo_bounds::splitting::{check_atom_access, split_chain, split_drift};
use ergo_bounds::{Error, LogReal, Rate};

use crate::config::{ConfigError, Kind, ProblemSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Renewal,
    Kendall,
    Harris,
    Verify,
    Simulate,
}

#[derive(Debug, Clone, Default)]
pub struct Options {
    pub seed: Option<u64>,
    pub horizon: Option<usize>,
}

pub struct Outcome {
    pub report: Report,
    pub csv: Option<String>,
    pub trace: Vec<String>,
    pub passed: bool,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] Error),
}

/// Default number of steps checked against a bound.
const DEFAULT_HORIZON: usize = 200;
/// Largest drift level for which the exact petiteness infimum is evaluated.
const PETITENESS_LIMIT: usize = 2_000;
/// Standard errors allowed in simulation comparisons.
const SE_WIDTH: f64 = 3.0;

pub fn run(mode: Mode, spec: &ProblemSpec, opts: &Options) -> Result<Outcome, RunError> {
    let expected = match mode {
        Mode::Renewal => Some(Kind::Renewal),
        Mode::Kendall => Some(Kind::Kendall),
        Mode::Harris => Some(Kind::Harris),
        Mode::Verify => Some(Kind::Verify),
        Mode::Simulate => None,
    };
    if let Some(kind) = expected {
        if kind != spec.kind {
            return Err(ConfigError::Validation {
                field: "kind".into(),
                message: format!("config describes {:?}, subcommand expects {kind:?}", spec.kind),
            }
            .into());
        }
    }
    let horizon = opts.horizon.or(spec.tunables.horizon).unwrap_or(DEFAULT_HORIZON);
    match mode {
        Mode::Renewal => renewal(spec, horizon),
        Mode::Kendall => kendall(spec, horizon),
        Mode::Harris => harris(spec, horizon),
        Mode::Verify => verify(spec, horizon),
        Mode::Simulate => simulate(spec, opts, horizon),
    }
}

fn header(report: &mut Report, spec: &ProblemSpec, mode: &str) {
    report
        .section("problem")
        .str("mode", mode)
        .str("kind", &format!("{:?}", spec.kind).to_lowercase());
}

fn trace_lines(entries: &[TraceEntry]) -> Vec<String> {
    entries
        .iter()
        .map(|e| {
            let value = match e.value {
                TraceValue::Real(x) => format_float(x),
                TraceValue::Log(x) => format!("exp({})", format_float(x.ln())),
                TraceValue::Rate(r) => format!("exp(exp({}))", format_float(r.ln_log_rate())),
            };
            format!("[{}] {} = {}", e.stage, e.name, value)
        })
        .collect()
}

fn renewal(spec: &ProblemSpec, horizon: usize) -> Result<Outcome, RunError> {
    let p = spec.increment_law()?;
    let (_, pi1) = stationary_delay(&p);
    let r2 = spec.kendall.as_ref().map(|k| k.r2.unwrap_or(k.r)).unwrap_or(1.1);
    let check = coupling_tail_check(&p, horizon, r2)?;
    let u = renewal_sequence(&p, horizon);

    let mut report = Report::default();
    header(&mut report, spec, "renewal");
    report
        .section("renewal")
        .int("support", p.support() as i64)
        .float("mean", p.mean())
        .float("pi1", pi1)
        .float(&format!("u_{horizon}"), u.u(horizon));
    report
        .section("coupling")
        .int("horizon", horizon as i64)
        .float("weighted_rate", r2)
        .float("weighted_partial_sum", check.weighted_partial_sum)
        .float("worst_excess", check.worst_excess)
        .int("worst_n", check.worst_n as i64)
        .bool("passed", check.passed);
    let rows: Vec<DistanceRow> = (1..=horizon)
        .map(|n| DistanceRow {
            n,
            exact: check.deviation[n],
            ln_bound: check.coupling_tail[n].ln(),
        })
        .collect();
    Ok(Outcome {
        report,
        csv: Some(ergo_bounds::report::distance_csv(&rows)),
        trace: Vec::new(),
        passed: check.passed,
    })
}

fn kendall_trace(bound: &KendallBound) -> Vec<TraceEntry> {
    let stage = "renewal coupling";
    let mut out = Vec::new();
    let mut push = |name, value| out.push(TraceEntry { stage, name, value });
    push("beta", TraceValue::Real(bound.beta));
    push("r", TraceValue::Rate(bound.r));
    push("B", TraceValue::Log(bound.b));
    push("eta", TraceValue::Real(bound.eta));
    push("M", TraceValue::Real(bound.m));
    push("b_drift", TraceValue::Log(bound.b_drift));
    push("M_C", TraceValue::Log(bound.m_c));
    push("r_prime", TraceValue::Rate(bound.r_prime));
    push("K", TraceValue::Log(bound.entry));
    push("M0", TraceValue::Log(bound.m0));
    push("c", TraceValue::Log(bound.c));
    push("rho", TraceValue::Rate(bound.rho));
    push("r2", TraceValue::Rate(bound.r2));
    push("D", TraceValue::Log(bound.d));
    push("coupling_mgf", TraceValue::Log(bound.coupling_mgf));
    push("L", TraceValue::Log(bound.l));
    out
}

fn kendall_rows(
    p: &ergo_bounds::renewal::IncrementDistribution,
    r2: Rate,
    l: LogReal,
    horizon: usize,
) -> Result<Vec<DistanceRow>, Error> {
    let deviation = renewal_deviations(p, horizon)?;
    Ok((1..=horizon)
        .map(|n| DistanceRow {
            n,
            exact: deviation[n],
            ln_bound: l.ln() - n as f64 * r2.log_rate(),
        })
        .collect())
}

fn verification_section(report: &mut Report, rep: &KendallReport) {
    report
        .section("verification")
        .float("partial_sum", rep.partial_sum)
        .float("tail", rep.tail)
        .float("total", rep.total)
        .log("bound", rep.bound)
        .bool("passed", rep.passed);
}

fn kendall(spec: &ProblemSpec, horizon: usize) -> Result<Outcome, RunError> {
    let p = spec.increment_law()?;
    let k = spec.kendall.as_ref().expect("validated");
    let b = match k.b {
        Some(b) => b,
        None => increment_mgf(&p, k.r)?,
    };
    let beta = k.beta.unwrap_or(p.p(1));
    if beta > p.p(1) {
        return Err(Error::HypothesisFail {
            clause: "beta <= p(1)",
            state: 1,
            detail: format!("beta = {beta} exceeds p(1) = {}", p.p(1)),
        }
        .into());
    }
    let mut params = KendallParams::new(beta, b, k.r)?;
    if let Some(eta) = k.eta {
        params = params.with_eta(eta);
    }
    if let Some(r2) = k.r2 {
        params = params.with_r2(r2)?;
    }
    let bound = kendall_constants(&params)?;

    let mut report = Report::default();
    header(&mut report, spec, "kendall");
    let mut passed = true;

    let drift = bivariate_drift(&p, k.r, bound.eta);
    {
        let s = report.section("bivariate_drift");
        match &drift {
            Ok(d) => {
                s.int("m", d.m as i64)
                    .float("b_drift", d.b_drift)
                    .float("mgf", d.mgf)
                    .bool("passed", true);
            }
            Err(e) => {
                passed = false;
                s.bool("passed", false).str("error", &e.to_string());
            }
        }
    }
    if let Ok(d) = &drift {
        if d.m <= PETITENESS_LIMIT {
            let pet = bivariate_petiteness(&p, d.m)?;
            passed &= pet.passed;
            report
                .section("petiteness")
                .float("certified", pet.certified)
                .float("exact", pet.exact)
                .bool("passed", pet.passed);
        }
    }

    report
        .section("constants")
        .float("beta", bound.beta)
        .log("b", bound.b)
        .float("eta", bound.eta)
        .float("m", bound.m)
        .rate("rho", bound.rho)
        .rate("r2", bound.r2)
        .log("d", bound.d)
        .log("l", bound.l);

    let rep = kendall_verify(&p, &bound, horizon)?;
    passed &= rep.passed;
    verification_section(&mut report, &rep);

    let exact = coupling_mgf_exact(&p, bound.r2.value())?;
    let worst = exact
        .iter()
        .enumerate()
        .map(|(n, e)| e - bound.per_delay(n))
        .fold(f64::NEG_INFINITY, f64::max);
    passed &= worst <= 0.0;
    report
        .section("per_delay")
        .float("worst_excess", worst)
        .bool("passed", worst <= 0.0);

    let trace = kendall_trace(&bound);
    report.section("trace").trace(&trace);
    Ok(Outcome {
        csv: Some(ergo_bounds::report::distance_csv(&kendall_rows(
            &p, bound.r2, bound.l, horizon,
        )?)),
        trace: trace_lines(&trace),
        report,
        passed,
    })
}

fn harris(spec: &ProblemSpec, horizon: usize) -> Result<Outcome, RunError> {
    let chain = spec.finite_chain()?;
    let mcert = spec.minorization_cert()?;
    let (dcert, n0) = spec.drift_cert()?;
    let mut report = Report::default();
    header(&mut report, spec, "harris");

    let inputs = match verify_hypotheses(&chain, &mcert, &dcert, n0) {
        Ok(i) => i,
        Err(e @ Error::HypothesisFail { .. }) => {
            report
                .section("hypotheses")
                .bool("passed", false)
                .str("error", &e.to_string());
            return Ok(Outcome {
                report,
                csv: None,
                trace: Vec::new(),
                passed: false,
            });
        }
        Err(e) => return Err(e.into()),
    };
    report
        .section("hypotheses")
        .bool("passed", true)
        .float("delta", inputs.delta)
        .float("lambda", inputs.lambda)
        .float("b", inputs.b)
        .int("n0", inputs.n0 as i64)
        .float("c", inputs.c)
        .float("m_u", inputs.m_u)
        .float("m_c", inputs.m_c);

    let mut tune = HarrisTunables::default();
    if let Some(f) = spec.tunables.drift_fraction {
        tune.drift_fraction = f;
    }
    if let Some(f) = spec.tunables.rate_fraction {
        tune.rate_fraction = f;
    }
    let bound = harris_constants_with(&inputs, &tune)?;
    report
        .section("constants")
        .log("d", bound.d)
        .float("gamma", bound.gamma())
        .float("ln_gamma", bound.ln_gamma())
        .rate("rate", bound.rate)
        .bool("gamma_below_one", bound.gamma_below_one());

    let split = split_chain(&chain, &mcert)?;
    let sd = split_drift(&split, &dcert.v, dcert.lambda, &dcert.set)?;
    let access = check_atom_access(&split);
    report
        .section("split_chain")
        .float("lambda", sd.lambda)
        .float("b_measured", sd.b)
        .bool("drift_passed", sd.check.passed)
        .float("atom_access_bound", access.bound)
        .float("atom_access_min", access.level0_min)
        .bool("atom_access_passed", access.passed);

    let table = harris_distance_table(&chain, &dcert.v, &bound, horizon)?;
    let passed = table.passed() && sd.check.passed && access.passed;
    verification_table(&mut report, horizon, &table);
    report.section("trace").trace(&bound.trace);
    Ok(Outcome {
        csv: Some(ergo_bounds::report::distance_csv(&table.rows)),
        trace: trace_lines(&bound.trace),
        report,
        passed,
    })
}

fn verification_table(report: &mut Report, horizon: usize, table: &ergo_bounds::harris::HarrisReport) {
    let s: &mut Section = report.section("verification");
    s.int("horizon", horizon as i64).bool("passed", table.passed());
    if let Some((x, n)) = table.violation {
        s.int("violation_state", x as i64).int("violation_n", n as i64);
    }
    let min_log_margin = table
        .rows
        .iter()
        .map(|r| r.ln_bound - r.exact.ln())
        .fold(f64::INFINITY, f64::min);
    s.float("min_log_margin", min_log_margin);
}

fn verify(spec: &ProblemSpec, horizon: usize) -> Result<Outcome, RunError> {
    let c = spec.constants.as_ref().expect("validated");
    let mut report = Report::default();
    header(&mut report, spec, "verify");
    if spec.chain.is_some() {
        let chain = spec.finite_chain()?;
        let (dcert, _) = spec.drift_cert()?;
        let rate = match (c.ln_ln_rate, c.gamma) {
            (Some(l), _) => Rate::from_ln_log_rate(l)?,
            (None, Some(g)) => {
                if !(g > 0.0 && g < 1.0) {
                    return Err(ConfigError::Validation {
                        field: "constants.gamma".into(),
                        message: format!("gamma must lie in (0, 1), got {g}"),
                    }
                    .into());
                }
                Rate::from_log_rate(-g.ln())?
            }
            (None, None) => unreachable!("validated"),
        };
        let bound = HarrisBound {
            d: LogReal::from_ln(c.ln_d.expect("validated")),
            rate,
            trace: Vec::new(),
        };
        report
            .section("constants")
            .log("d", bound.d)
            .float("gamma", bound.gamma())
            .rate("rate", bound.rate);
        let table = harris_distance_table(&chain, &dcert.v, &bound, horizon)?;
        verification_table(&mut report, horizon, &table);
        Ok(Outcome {
            csv: Some(ergo_bounds::report::distance_csv(&table.rows)),
            trace: Vec::new(),
            passed: table.passed(),
            report,
        })
    } else {
        let p = spec.increment_law()?;
        let r2 = Rate::from_value(c.r2.expect("validated"))?;
        let l = LogReal::from_ln(c.ln_l.expect("validated"));
        report.section("constants").rate("r2", r2).log("l", l);
        let rep = kendall_verify_claim(&p, r2, l, horizon)?;
        verification_section(&mut report, &rep);
        Ok(Outcome {
            csv: Some(ergo_bounds::report::distance_csv(&kendall_rows(&p, r2, l, horizon)?)),
            trace: Vec::new(),
            passed: rep.passed,
            report,
        })
    }
}

fn summary_section(s: &mut Section, summary: &SampleSummary) {
    s.int("replications", summary.replications as i64)
        .int("censored", summary.censored as i64)
        .float("mean", summary.mean)
        .float("mean_se", summary.mean_se())
        .float("variance", summary.variance);
}

fn simulate(spec: &ProblemSpec, opts: &Options, buckets: usize) -> Result<Outcome, RunError> {
    let t = &spec.tunables;
    let cfg = SimulationConfig::new(
        opts.seed.or(t.seed).unwrap_or(1),
        t.replications.unwrap_or(100_000),
        t.cap.unwrap_or(100_000),
    )?;
    let mut report = Report::default();
    header(&mut report, spec, "simulate");
    report
        .section("config")
        .int("seed", cfg.seed as i64)
        .int("cap", cfg.cap as i64);
    let mut passed = true;

    if spec.increment.is_some() {
        let p = spec.increment_law()?;
        let delay = t.delay.unwrap_or(1);
        if delay as usize >= p.support() {
            return Err(ConfigError::Validation {
                field: "tunables.delay".into(),
                message: format!("delay must be below the support bound {}", p.support()),
            }
            .into());
        }
        let rate = t.mgf_rate.unwrap_or(1.05);
        let summary = simulate_coupling_time(&p, delay, &cfg)?;
        let censoring_ok = summary.check_censoring().is_ok();
        let exact_mgf = coupling_mgf_exact(&p, rate)?[delay as usize];
        let (mgf, mgf_se) = summary.mgf(rate);
        let exact_mean = if delay == 0 {
            0.0
        } else {
            let bivariate = BivariateChain::new(&p)?;
            mean_hitting_times(bivariate.chain(), &bivariate.coupled_set())?[bivariate.index(1, delay as usize + 1)?]
        };
        let mgf_ok = within_se(mgf, exact_mgf, mgf_se, SE_WIDTH);
        let mean_ok = within_se(summary.mean, exact_mean, summary.mean_se(), SE_WIDTH);
        passed &= censoring_ok && mgf_ok && mean_ok;
        let s = report.section("coupling_time");
        s.int("delay", delay as i64);
        summary_section(s, &summary);
        s.float("exact_mean", exact_mean)
            .bool("mean_within_3se", mean_ok)
            .float("mgf_rate", rate)
            .float("mgf", mgf)
            .float("mgf_se", mgf_se)
            .float("exact_mgf", exact_mgf)
            .bool("mgf_within_3se", mgf_ok)
            .bool("censoring_ok", censoring_ok);
    }
    if spec.chain.is_some() {
        let chain = spec.finite_chain()?;
        let source = t.source.unwrap_or(0);
        let target = match (&t.target, &spec.minorization) {
            (Some(idx), _) => idx.clone(),
            (None, Some(m)) => m.set.clone(),
            (None, None) => vec![0],
        };
        let target = StateSet::from_indices(chain.len(), &target).map_err(|e| ConfigError::Validation {
            field: "tunables.target".into(),
            message: e.to_string(),
        })?;
        let summary = simulate_hitting(&chain, source, &target, &cfg)?;
        let censoring_ok = summary.check_censoring().is_ok();
        let exact_mean = mean_hitting_times(&chain, &target)?[source];
        let mean_ok = within_se(summary.mean, exact_mean, summary.mean_se(), SE_WIDTH);
        let law = hitting_law(&chain, source, &target, buckets.max(1))?;
        let mut worst_z: f64 = 0.0;
        for n in 1..=law.horizon {
            let (f, se) = summary.frequency(n, law.prob(n));
            if se > 0.0 {
                worst_z = worst_z.max((f - law.prob(n)).abs() / se);
            } else if f != law.prob(n) {
                worst_z = f64::INFINITY;
            }
        }
        let law_ok = worst_z <= SE_WIDTH;
        passed &= censoring_ok && mean_ok && law_ok;
        let s = report.section("hitting_time");
        s.int("source", source as i64);
        summary_section(s, &summary);
        s.float("exact_mean", exact_mean)
            .bool("mean_within_3se", mean_ok)
            .int("buckets", law.horizon as i64)
            .float("worst_bucket_z", worst_z)
            .bool("law_within_3se", law_ok)
            .bool("censoring_ok", censoring_ok);
    }
    report.section("verification").bool("passed", passed);
    Ok(Outcome {
        report,
        csv: None,
        trace: Vec::new(),
        passed,
    })
}
