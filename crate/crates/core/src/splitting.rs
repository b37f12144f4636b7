//! Nummelin splitting at a small set with a `delta/2` coin.
//!
//! The split chain lives on `X x {0, 1}`; state `x_0` has index `x` and
//! `x_1` has index `n + x`. Level-1 states outside `U` are kept but never
//! charged by a split measure, so they are unreachable from the rest.

use nalgebra::{DMatrix, DVector};

use crate::chain::{mean_hitting_times, n_step, stationary, taboo_kernels, FiniteChain, StateSet, WeightFunction};
use crate::drift::{verify_drift, DriftCertificate, DriftCheck};
use crate::error::{invalid, Error, Result};
use crate::renewal::renewal_from_probs;

/// Tolerance for the minorization and split-row checks.
pub const SPLIT_TOL: f64 = 1e-12;

/// `P(x, .) >= delta mu(.)` for every `x in U`.
#[derive(Debug, Clone, PartialEq)]
pub struct MinorizationCertificate {
    set: StateSet,
    delta: f64,
    mu: Vec<f64>,
}

impl MinorizationCertificate {
    pub fn new(set: StateSet, delta: f64, mu: Vec<f64>) -> Result<Self> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(invalid(format!("delta must lie in (0, 1], got {delta}")));
        }
        if set.is_empty() {
            return Err(invalid("small set must be non-empty"));
        }
        if mu.len() != set.universe() {
            return Err(Error::Dimension {
                expected: set.universe(),
                got: mu.len(),
            });
        }
        if let Some(y) = (0..mu.len()).find(|&y| !(mu[y] >= 0.0) || (mu[y] > 0.0 && !set.contains(y))) {
            return Err(invalid(format!(
                "mu must be a nonnegative measure on U, entry {y} = {}",
                mu[y]
            )));
        }
        let total: f64 = mu.iter().sum();
        if (total - 1.0).abs() > SPLIT_TOL {
            return Err(invalid(format!("mu(U) must be 1, got {total}")));
        }
        Ok(MinorizationCertificate { set, delta, mu })
    }

    /// Largest common component: `nu(y) = min_{x in U} P(x, y)` on `U`,
    /// `delta = fraction * nu(U)`, `mu = nu / nu(U)`.
    pub fn maximal(chain: &FiniteChain, set: StateSet, fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(invalid(format!("fraction must lie in (0, 1], got {fraction}")));
        }
        let nu: Vec<f64> = (0..chain.len())
            .map(|y| {
                if set.contains(y) {
                    set.iter().map(|x| chain.prob(x, y)).fold(f64::INFINITY, f64::min)
                } else {
                    0.0
                }
            })
            .collect();
        let mass: f64 = nu.iter().sum();
        if !(mass > 0.0) {
            return Err(invalid("U has no common mass on itself"));
        }
        let mu = nu.iter().map(|v| v / mass).collect();
        Self::new(set, (fraction * mass).min(1.0), mu)
    }

    pub fn set(&self) -> &StateSet {
        &self.set
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    /// Smallest `P(x, y) - delta mu(y)` over `x in U` and all `y`.
    pub fn margin(&self, chain: &FiniteChain) -> Result<(f64, usize)> {
        if chain.len() != self.mu.len() {
            return Err(Error::Dimension {
                expected: chain.len(),
                got: self.mu.len(),
            });
        }
        let mut worst = (f64::INFINITY, 0);
        for x in self.set.iter() {
            for y in 0..chain.len() {
                let m = chain.prob(x, y) - self.delta * self.mu[y];
                if m < worst.0 {
                    worst = (m, x);
                }
            }
        }
        Ok(worst)
    }

    pub fn verify(&self, chain: &FiniteChain) -> Result<bool> {
        Ok(self.margin(chain)?.0 >= -SPLIT_TOL)
    }
}

/// `lambda*`: mass `(1 - delta/2) lambda(y)` on `y_0` and `(delta/2) lambda(y)`
/// on `y_1` for `y in U`; `lambda(y)` on `y_0` otherwise.
pub fn split_measure(lambda: &[f64], cert: &MinorizationCertificate) -> Vec<f64> {
    let n = lambda.len();
    let half = cert.delta / 2.0;
    let mut out = vec![0.0; 2 * n];
    for (y, &l) in lambda.iter().enumerate() {
        if cert.set.contains(y) {
            out[y] = (1.0 - half) * l;
            out[n + y] = half * l;
        } else {
            out[y] = l;
        }
    }
    out
}

/// The split chain with its atom `U_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitChain {
    base: FiniteChain,
    cert: MinorizationCertificate,
    chain: FiniteChain,
    atom: StateSet,
}

pub fn split_chain(base: &FiniteChain, cert: &MinorizationCertificate) -> Result<SplitChain> {
    let n = base.len();
    if cert.mu.len() != n {
        return Err(Error::Dimension {
            expected: n,
            got: cert.mu.len(),
        });
    }
    let mu_star = split_measure(&cert.mu, cert);
    let delta = cert.delta;
    let mut rows = Vec::with_capacity(2 * n);
    for x in 0..n {
        let p_row: Vec<f64> = (0..n).map(|y| base.prob(x, y)).collect();
        let p_star = split_measure(&p_row, cert);
        if !cert.set.contains(x) {
            rows.push(p_star);
            continue;
        }
        let mut row: Vec<f64> = p_star
            .iter()
            .zip(&mu_star)
            .map(|(p, m)| (2.0 * p - delta * m) / (2.0 - delta))
            .collect();
        let mut clamped = false;
        for (col, value) in row.iter_mut().enumerate() {
            if *value < -SPLIT_TOL {
                return Err(Error::NegativeRow {
                    row: x,
                    col,
                    value: *value,
                });
            }
            if *value < 0.0 {
                *value = 0.0;
                clamped = true;
            }
        }
        if clamped {
            let total: f64 = row.iter().sum();
            row.iter_mut().for_each(|v| *v /= total);
        }
        rows.push(row);
    }
    for _ in 0..n {
        rows.push(mu_star.clone());
    }
    let labels = (0..2 * n)
        .map(|i| format!("{}_{}", base.labels()[i % n], i / n))
        .collect();
    let atom = StateSet::from_mask((0..2 * n).map(|i| i >= n && cert.set.contains(i - n)).collect());
    Ok(SplitChain {
        base: base.clone(),
        cert: cert.clone(),
        chain: FiniteChain::with_labels(labels, &rows)?,
        atom,
    })
}

impl SplitChain {
    pub fn base(&self) -> &FiniteChain {
        &self.base
    }

    pub fn cert(&self) -> &MinorizationCertificate {
        &self.cert
    }

    pub fn chain(&self) -> &FiniteChain {
        &self.chain
    }

    /// `U_1`.
    pub fn atom(&self) -> &StateSet {
        &self.atom
    }

    /// A state of the atom; all atom rows coincide.
    pub fn atom_state(&self) -> usize {
        self.atom.iter().next().expect("atom is non-empty")
    }

    pub fn base_len(&self) -> usize {
        self.base.len()
    }

    /// `A_0 ∪ A_1`.
    pub fn lift_set(&self, set: &StateSet) -> StateSet {
        let n = self.base_len();
        StateSet::from_mask((0..2 * n).map(|i| set.contains(i % n)).collect())
    }

    /// `V_hat(x_i) = V(x)`.
    pub fn lift_weights(&self, v: &WeightFunction) -> Result<WeightFunction> {
        let n = self.base_len();
        WeightFunction::new((0..2 * n).map(|i| v.get(i % n)).collect())
    }

    /// Adds the two levels of a vector over split states.
    pub fn collapse(&self, split: &[f64]) -> Vec<f64> {
        let n = self.base_len();
        (0..n).map(|x| split[x] + split[n + x]).collect()
    }

    /// `mu*`, the common row of the atom.
    pub fn atom_row(&self) -> Vec<f64> {
        split_measure(&self.cert.mu, &self.cert)
    }
}

/// `delta^2 / (2 (2 - delta))`, the one-step access probability from
/// `U_0 ∪ U_1` to the atom.
pub fn atom_access_bound(delta: f64) -> f64 {
    delta * delta / (2.0 * (2.0 - delta))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AtomAccessReport {
    /// `min_{x in U} P(x_0, U_1)`.
    pub level0_min: f64,
    /// `max_{x in U} |P(x_1, U_1) - delta/2|`.
    pub level1_residual: f64,
    pub bound: f64,
    pub passed: bool,
}

pub fn check_atom_access(split: &SplitChain) -> AtomAccessReport {
    let n = split.base_len();
    let delta = split.cert.delta;
    let bound = atom_access_bound(delta);
    let mut level0_min = f64::INFINITY;
    let mut level1_residual: f64 = 0.0;
    for x in split.cert.set.iter() {
        level0_min = level0_min.min(split.chain.prob_into(x, &split.atom));
        level1_residual = level1_residual.max((split.chain.prob_into(n + x, &split.atom) - delta / 2.0).abs());
    }
    AtomAccessReport {
        level0_min,
        level1_residual,
        bound,
        passed: level0_min >= bound - 1e-11 && level1_residual <= 1e-11,
    }
}

/// Truncated return-time law of the atom.
#[derive(Debug, Clone, PartialEq)]
pub struct AtomIncrement {
    /// `probs[k] = P_alpha{tau_alpha = k + 1}`.
    pub probs: Vec<f64>,
    /// `P_alpha{tau_alpha > horizon}`.
    pub tail: f64,
}

impl AtomIncrement {
    pub fn p(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            self.probs.get(n - 1).copied().unwrap_or(0.0)
        }
    }

    pub fn renewal(&self, horizon: usize) -> Vec<f64> {
        renewal_from_probs(&self.probs, horizon)
    }
}

pub fn atom_increment(split: &SplitChain, horizon: usize) -> Result<AtomIncrement> {
    if horizon == 0 {
        return Err(invalid("atom increment needs horizon >= 1"));
    }
    let law = crate::chain::hitting_law(&split.chain, split.atom_state(), &split.atom, horizon)?;
    Ok(AtomIncrement {
        probs: law.probs,
        tail: law.tail,
    })
}

/// `a_x(n)`, `u(n)` and `t_g(n)` up to a horizon.
#[derive(Debug, Clone, PartialEq)]
pub struct RegenerativeSequences {
    /// `a[x][n - 1] = P_x{tau_alpha = n}`.
    pub a: Vec<Vec<f64>>,
    /// `u[n] = P^n(alpha, alpha)`, `u[0] = 1`.
    pub u: Vec<f64>,
    /// `t_g[n - 1] = _alpha P^n(alpha, g)`.
    pub t_g: Vec<f64>,
    pub horizon: usize,
}

pub fn regenerative_sequences(split: &SplitChain, g: &[f64], horizon: usize) -> Result<RegenerativeSequences> {
    let size = split.chain.len();
    if g.len() != size {
        return Err(Error::Dimension {
            expected: size,
            got: g.len(),
        });
    }
    let kernels = taboo_kernels(&split.chain, &split.atom, horizon)?;
    let alpha = split.atom_state();
    let a = (0..size)
        .map(|x| {
            kernels
                .iter()
                .map(|k| split.atom.iter().map(|y| k[(x, y)]).sum())
                .collect()
        })
        .collect();
    let mut u = vec![1.0];
    let mut row = DVector::<f64>::zeros(size).transpose();
    row[alpha] = 1.0;
    for _ in 0..horizon {
        row *= split.chain.matrix();
        u.push(split.atom.iter().map(|y| row[y]).sum());
    }
    let t_g = kernels
        .iter()
        .map(|k| (0..size).map(|y| k[(alpha, y)] * g[y]).sum())
        .collect();
    Ok(RegenerativeSequences { a, u, t_g, horizon })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegenerativeCheck {
    pub max_residual: f64,
    pub worst_source: usize,
    pub passed: bool,
}

/// Compares `P^n(x, C)` with
/// `_alpha P^n(x, C) + sum_{j=1}^{n-1} sum_{k=1}^{j} a_x(k) u(j - k) _alpha P^{n-j}(alpha, C)`
/// for every source `x`.
pub fn regenerative_check(split: &SplitChain, n: usize, target: &StateSet) -> Result<RegenerativeCheck> {
    if n == 0 {
        return Err(invalid("regenerative check needs n >= 1"));
    }
    let size = split.chain.len();
    let kernels = taboo_kernels(&split.chain, &split.atom, n)?;
    let full = n_step(&split.chain, n);
    let alpha = split.atom_state();
    let mass = |m: &DMatrix<f64>, x: usize| -> f64 { target.iter().map(|y| m[(x, y)]).sum() };
    let u = regenerative_sequences(split, &vec![0.0; size], n)?.u;
    let mut worst = (0.0, 0);
    for x in 0..size {
        let a_x: Vec<f64> = kernels
            .iter()
            .map(|k| split.atom.iter().map(|y| k[(x, y)]).sum())
            .collect();
        let mut rhs = mass(&kernels[n - 1], x);
        for j in 1..n {
            let last_exit = mass(&kernels[n - j - 1], alpha);
            let entrance: f64 = (1..=j).map(|k| a_x[k - 1] * u[j - k]).sum();
            rhs += entrance * last_exit;
        }
        let residual = (mass(&full, x) - rhs).abs();
        if residual > worst.0 {
            worst = (residual, x);
        }
    }
    Ok(RegenerativeCheck {
        max_residual: worst.0,
        worst_source: worst.1,
        passed: worst.0 < 1e-10,
    })
}

/// `E_alpha[sum_{k=1}^{tau_alpha} h(X_k)] = sum_{k >= 1} _alpha P^k(alpha, h)`.
fn atom_cycle_sum(split: &SplitChain, h: &[f64]) -> Result<f64> {
    let outside = split.atom.complement().indices();
    let m = outside.len();
    let p = split.chain.matrix();
    let mu_star = split.atom_row();
    let mut total: f64 = split.atom.iter().map(|y| mu_star[y] * h[y]).sum();
    if m > 0 {
        // s(y) = h(y) + sum_{z in alpha} P(y, z) h(z) + sum_{z not in alpha} P(y, z) s(z)
        let mut system = DMatrix::<f64>::identity(m, m);
        for (i, &y) in outside.iter().enumerate() {
            for (j, &z) in outside.iter().enumerate() {
                system[(i, j)] -= p[(y, z)];
            }
        }
        let rhs = DVector::from_iterator(
            m,
            outside
                .iter()
                .map(|&y| h[y] + split.atom.iter().map(|z| p[(y, z)] * h[z]).sum::<f64>()),
        );
        let s = system.lu().solve(&rhs).ok_or(Error::Divergent { rate: 1.0 })?;
        total += outside.iter().enumerate().map(|(i, &y)| mu_star[y] * s[i]).sum::<f64>();
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct InvariantReport {
    pub pi_hat: Vec<f64>,
    pub atom_mass: f64,
    pub mean_return: f64,
    /// `|pi(alpha) E_alpha[tau_alpha] - 1|`.
    pub kac_residual: f64,
    /// `|pi(g) - pi(alpha) sum_{k <= K} t_g(k)|`.
    pub series_residual: f64,
    /// `pi(alpha) sum_{k > K} _alpha P^k(alpha, V_hat)`.
    pub certified_tail: f64,
    /// `|pi(g) - pi(alpha) sum_{k >= 1} t_g(k)|` with the full series solved exactly.
    pub exact_series_residual: f64,
    /// `max |(m P - m)(x)|` for the marginal `m` of `pi_hat`.
    pub marginal_residual: f64,
    pub passed: bool,
}

/// Checks the atom identities for the test function `g`, rescaled so that
/// `|g| <= V_hat`.
pub fn invariant_identities(
    split: &SplitChain,
    vhat: &WeightFunction,
    g: &[f64],
    horizon: usize,
) -> Result<InvariantReport> {
    let size = split.chain.len();
    if g.len() != size || vhat.len() != size {
        return Err(Error::Dimension {
            expected: size,
            got: if g.len() != size { g.len() } else { vhat.len() },
        });
    }
    let norm = vhat.norm_of(g);
    let g: Vec<f64> = if norm > 1.0 {
        g.iter().map(|v| v / norm).collect()
    } else {
        g.to_vec()
    };

    let pi_hat = stationary(&split.chain)?;
    let alpha = split.atom_state();
    let atom_mass: f64 = split.atom.iter().map(|y| pi_hat[y]).sum();
    let mean_return = mean_hitting_times(&split.chain, &split.atom)?[alpha];
    let kac_residual = (atom_mass * mean_return - 1.0).abs();

    let pi_g: f64 = pi_hat.iter().zip(&g).map(|(p, v)| p * v).sum();
    let seqs = regenerative_sequences(split, &g, horizon)?;
    let partial: f64 = seqs.t_g.iter().sum();
    let series_residual = (pi_g - atom_mass * partial).abs();

    let v_seqs = regenerative_sequences(split, vhat.values(), horizon)?;
    let v_total = atom_cycle_sum(split, vhat.values())?;
    let certified_tail = atom_mass * (v_total - v_seqs.t_g.iter().sum::<f64>()).max(0.0);
    let exact_series_residual = (pi_g - atom_mass * atom_cycle_sum(split, &g)?).abs();

    let marginal = split.collapse(&pi_hat);
    let moved = split.base.apply_left(&marginal);
    let marginal_residual = moved
        .iter()
        .zip(&marginal)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);

    let passed = kac_residual < 1e-10
        && series_residual <= certified_tail + 1e-8
        && exact_series_residual < 1e-8
        && marginal_residual < 1e-10;
    Ok(InvariantReport {
        pi_hat,
        atom_mass,
        mean_return,
        kac_residual,
        series_residual,
        certified_tail,
        exact_series_residual,
        marginal_residual,
        passed,
    })
}

/// Drift of `V_hat` on the split chain, measured with the base `lambda` on
/// `C' = C_0 ∪ C_1 ∪ U_0 ∪ U_1 ∪ X_1`.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDrift {
    pub lambda: f64,
    pub b: f64,
    pub set: StateSet,
    pub check: DriftCheck,
}

pub fn split_drift(split: &SplitChain, v: &WeightFunction, lambda: f64, drift_set: &StateSet) -> Result<SplitDrift> {
    let n = split.base_len();
    let vhat = split.lift_weights(v)?;
    let set = StateSet::from_mask(
        (0..2 * n)
            .map(|i| i >= n || drift_set.contains(i) || split.cert.set.contains(i))
            .collect(),
    );
    let pv = split.chain.apply(vhat.values());
    let b = set.iter().map(|x| pv[x] - lambda * vhat.get(x)).fold(0.0, f64::max);
    let cert = DriftCertificate::new(vhat, lambda, b, set.clone())?;
    let check = verify_drift(&split.chain, &cert)?;
    Ok(SplitDrift { lambda, b, set, check })
}
