//! Problem descriptions.
//!
//! ```toml
//! kind = "harris"            # renewal | kendall | harris | verify
//!
//! [chain]
//! rows = [[0.1, 0.9], [0.9, 0.1]]
//!
//! [minorization]             # P(x, .) >= delta mu(.) on `set`
//! set = [0]
//! delta = 0.1
//! mu = [1.0, 0.0]
//!
//! [drift]                    # PV <= lambda V + b 1_C
//! v = [1.0, 1.0]
//! lambda = 0.9
//! b = 0.2
//! set = [0, 1]
//! n0 = 1
//!
//! [tunables]
//! horizon = 200
//! ```
//!
//! Renewal problems give `[increment] p = [...]` instead of a chain, with an
//! optional `[kendall]` block (`r`, `b`, `beta`, `eta`, `r2`). `verify`
//! problems add the claimed `[constants]`.

use serde::{Deserialize, Serialize};

use ergo_bounds::chain::{FiniteChain, StateSet, WeightFunction};
use ergo_bounds::drift::DriftCertificate;
use ergo_bounds::renewal::IncrementDistribution;
use ergo_bounds::splitting::MinorizationCertificate;

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("PARSE_ERROR at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("VALIDATION_ERROR ({field}): {message}")]
    Validation { field: String, message: String },
}

impl ConfigError {
    fn validation(field: &str, err: impl std::fmt::Display) -> Self {
        ConfigError::Validation {
            field: field.into(),
            message: err.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kind {
    Renewal,
    Kendall,
    Harris,
    Verify,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChainSpec {
    pub rows: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub labels: Option<Vec<String>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IncrementSpec {
    pub p: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MinorizationSpec {
    pub set: Vec<usize>,
    pub delta: f64,
    pub mu: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    pub v: Vec<f64>,
    pub lambda: f64,
    pub b: f64,
    pub set: Vec<usize>,
    pub n0: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KendallSpec {
    /// Rate at which the increment MGF is bounded.
    pub r: f64,
    /// MGF bound; defaults to the exact value at `r`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    /// Lower bound on `p(1)`; defaults to `p(1)`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
}

/// Claimed constants for `verify`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConstantsSpec {
    /// `ln D` of a chain bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_d: Option<f64>,
    /// `gamma` of a chain bound; `ln_ln_rate = ln(-ln gamma)` takes precedence.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_ln_rate: Option<f64>,
    /// `ln L` of a renewal bound.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ln_l: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub r2: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Tunables {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub horizon: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replications: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cap: Option<u64>,
    /// Delay for coupling simulations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub delay: Option<u64>,
    /// Rate of the empirical MGF in simulations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mgf_rate: Option<f64>,
    /// Source state of hitting-time simulations.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<usize>,
    /// Target set of hitting-time simulations; defaults to the small set.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<Vec<usize>>,
    /// Fractions of the admissible rate intervals in the Harris pipeline.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift_fraction: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rate_fraction: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dir: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub kind: Kind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub chain: Option<ChainSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub increment: Option<IncrementSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub minorization: Option<MinorizationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<DriftSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kendall: Option<KendallSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub constants: Option<ConstantsSpec>,
    #[serde(default)]
    pub tunables: Tunables,
    #[serde(default)]
    pub output: OutputSpec,
}

/// Parses and validates a problem description.
pub fn parse_config(text: &str) -> Result<ProblemSpec, ConfigError> {
    let spec: ProblemSpec = toml::from_str(text).map_err(|e| {
        let line = e
            .span()
            .map(|s| text[..s.start.min(text.len())].matches('\n').count() + 1)
            .unwrap_or(0);
        ConfigError::Parse {
            line,
            message: e.message().to_string(),
        }
    })?;
    spec.validate()?;
    Ok(spec)
}

pub fn to_toml(spec: &ProblemSpec) -> String {
    toml::to_string(spec).expect("problem specs always serialize")
}

fn state_set(n: usize, indices: &[usize], field: &str) -> Result<StateSet, ConfigError> {
    StateSet::from_indices(n, indices).map_err(|e| ConfigError::validation(field, e))
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.chain.is_some() {
            self.finite_chain()?;
        }
        if self.increment.is_some() {
            self.increment_law()?;
        }
        if self.minorization.is_some() {
            self.minorization_cert()?;
        }
        if self.drift.is_some() {
            self.drift_cert()?;
        }
        if let Some(k) = &self.kendall {
            if !(k.r > 1.0 && k.r.is_finite()) {
                return Err(ConfigError::validation("kendall.r", "rate must be > 1"));
            }
        }
        let need = |present: bool, field: &str| {
            if present {
                Ok(())
            } else {
                Err(ConfigError::validation(
                    field,
                    format!("required for kind {:?}", self.kind),
                ))
            }
        };
        match self.kind {
            Kind::Renewal => need(self.increment.is_some(), "increment")?,
            Kind::Kendall => {
                need(self.increment.is_some(), "increment")?;
                need(self.kendall.is_some(), "kendall")?;
            }
            Kind::Harris => {
                need(self.chain.is_some(), "chain")?;
                need(self.minorization.is_some(), "minorization")?;
                need(self.drift.is_some(), "drift")?;
            }
            Kind::Verify => {
                let c = self.constants.as_ref();
                need(c.is_some(), "constants")?;
                let c = c.expect("checked");
                if self.chain.is_some() {
                    need(self.drift.is_some(), "drift")?;
                    need(c.ln_d.is_some(), "constants.ln_d")?;
                    need(c.gamma.is_some() || c.ln_ln_rate.is_some(), "constants.gamma")?;
                } else {
                    need(self.increment.is_some(), "increment")?;
                    need(c.ln_l.is_some(), "constants.ln_l")?;
                    need(c.r2.is_some(), "constants.r2")?;
                }
            }
        }
        Ok(())
    }

    pub fn finite_chain(&self) -> Result<FiniteChain, ConfigError> {
        let c = self
            .chain
            .as_ref()
            .ok_or_else(|| ConfigError::validation("chain", "missing"))?;
        match &c.labels {
            Some(labels) => FiniteChain::with_labels(labels.clone(), &c.rows),
            None => FiniteChain::from_rows(&c.rows),
        }
        .map_err(|e| ConfigError::validation("chain.rows", e))
    }

    pub fn increment_law(&self) -> Result<IncrementDistribution, ConfigError> {
        let i = self
            .increment
            .as_ref()
            .ok_or_else(|| ConfigError::validation("increment", "missing"))?;
        let p = IncrementDistribution::new(i.p.clone()).map_err(|e| ConfigError::validation("increment.p", e))?;
        p.require_aperiodic()
            .map_err(|e| ConfigError::validation("increment.p", e))?;
        Ok(p)
    }

    pub fn minorization_cert(&self) -> Result<MinorizationCertificate, ConfigError> {
        let m = self
            .minorization
            .as_ref()
            .ok_or_else(|| ConfigError::validation("minorization", "missing"))?;
        let n = self.finite_chain()?.len();
        MinorizationCertificate::new(state_set(n, &m.set, "minorization.set")?, m.delta, m.mu.clone())
            .map_err(|e| ConfigError::validation("minorization", e))
    }

    pub fn drift_cert(&self) -> Result<(DriftCertificate, u64), ConfigError> {
        let d = self
            .drift
            .as_ref()
            .ok_or_else(|| ConfigError::validation("drift", "missing"))?;
        let n = self.finite_chain()?.len();
        let v = WeightFunction::new(d.v.clone()).map_err(|e| ConfigError::validation("drift.v", e))?;
        if v.len() != n {
            return Err(ConfigError::validation(
                "drift.v",
                format!("expected {n} values, got {}", v.len()),
            ));
        }
        if d.n0 == 0 {
            return Err(ConfigError::validation("drift.n0", "must be >= 1"));
        }
        let cert = DriftCertificate::new(v, d.lambda, d.b, state_set(n, &d.set, "drift.set")?)
            .map_err(|e| ConfigError::validation("drift", e))?;
        Ok((cert, d.n0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_renewal() {
        let spec = parse_config("kind = \"renewal\"\n[increment]\np = [0.5, 0.5]\n").unwrap();
        assert_eq!(spec.kind, Kind::Renewal);
    }

    #[test]
    fn parse_error_has_line() {
        let err = parse_config("kind = \"renewal\"\n[increment]\np = [0.5, \n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line, .. } if line >= 3), "{err}");
        let err = parse_config("kind = \"nonsense\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Parse { line: 1, .. }));
    }

    #[test]
    fn row_sum_violation() {
        let text = "kind = \"harris\"\n[chain]\nrows = [[0.5, 0.49], [0.5, 0.5]]\n";
        let err = parse_config(text).unwrap_err();
        assert!(err.to_string().contains("row-stochastic"), "{err}");
        assert!(matches!(err, ConfigError::Validation { .. }));
    }

    #[test]
    fn missing_blocks_are_named() {
        let err = parse_config("kind = \"kendall\"\n[increment]\np = [1.0]\n").unwrap_err();
        assert!(err.to_string().contains("kendall"));
    }
}
