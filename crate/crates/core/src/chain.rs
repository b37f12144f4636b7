//! Exact computations on finite-state Markov chains.
//!
//! Hitting times follow the return-time convention
//! `tau_A = min{n >= 1 : X_n in A}`, so a chain started inside `A` still
//! has to make at least one step.

use nalgebra::{DMatrix, DVector};

use crate::error::{invalid, Error, Result};

/// Row sums must equal one within this tolerance.
pub const STOCHASTIC_TOL: f64 = 1e-12;
/// Relative slack used by the divergence test of the first-step systems.
pub const DIVERGENCE_TOL: f64 = 1e-9;

/// A row-stochastic transition matrix over labelled states.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteChain {
    labels: Vec<String>,
    matrix: DMatrix<f64>,
}

impl FiniteChain {
    /// Builds a chain from row-major rows; labels default to `"0"`, `"1"`, ...
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let labels = (0..rows.len()).map(|i| i.to_string()).collect();
        Self::with_labels(labels, rows)
    }

    pub fn with_labels(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if n == 0 {
            return Err(invalid("chain must have at least one state"));
        }
        if labels.len() != n {
            return Err(Error::Dimension {
                expected: n,
                got: labels.len(),
            });
        }
        for row in rows {
            if row.len() != n {
                return Err(Error::Dimension {
                    expected: n,
                    got: row.len(),
                });
            }
        }
        let matrix = DMatrix::from_fn(n, n, |i, j| rows[i][j]);
        Self::from_matrix_labelled(labels, matrix)
    }

    pub fn from_matrix(matrix: DMatrix<f64>) -> Result<Self> {
        let labels = (0..matrix.nrows()).map(|i| i.to_string()).collect();
        Self::from_matrix_labelled(labels, matrix)
    }

    fn from_matrix_labelled(labels: Vec<String>, matrix: DMatrix<f64>) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::Dimension {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        for i in 0..matrix.nrows() {
            let mut sum = 0.0;
            for j in 0..matrix.ncols() {
                let p = matrix[(i, j)];
                if !(p >= 0.0) || p > 1.0 {
                    return Err(invalid(format!(
                        "row-stochastic: entry ({i}, {j}) = {p} is not a probability"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > STOCHASTIC_TOL {
                return Err(invalid(format!("row-stochastic: row {i} sums to {sum}")));
            }
        }
        Ok(FiniteChain { labels, matrix })
    }

    pub fn len(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn prob(&self, from: usize, to: usize) -> f64 {
        self.matrix[(from, to)]
    }

    /// `P(x, A)`.
    pub fn prob_into(&self, from: usize, set: &StateSet) -> f64 {
        set.iter().map(|y| self.matrix[(from, y)]).sum()
    }

    /// `(P f)(x)` for a per-state function `f`.
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|x| (0..self.len()).map(|y| self.matrix[(x, y)] * f[y]).sum())
            .collect()
    }

    /// `(m P)(y)` for a per-state measure `m`.
    pub fn apply_left(&self, m: &[f64]) -> Vec<f64> {
        (0..self.len())
            .map(|y| (0..self.len()).map(|x| m[x] * self.matrix[(x, y)]).sum())
            .collect()
    }

    fn check_state(&self, x: usize) -> Result<()> {
        if x >= self.len() {
            return Err(invalid(format!("state {x} out of range for {} states", self.len())));
        }
        Ok(())
    }

    fn check_set(&self, set: &StateSet) -> Result<()> {
        if set.universe() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: set.universe(),
            });
        }
        Ok(())
    }

    fn check_weights(&self, v: &WeightFunction) -> Result<()> {
        if v.len() != self.len() {
            return Err(Error::Dimension {
                expected: self.len(),
                got: v.len(),
            });
        }
        Ok(())
    }
}

/// A subset of `{0, .., n-1}` stored as a membership mask.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct StateSet {
    mask: Vec<bool>,
}

impl StateSet {
    pub fn empty(universe: usize) -> Self {
        StateSet {
            mask: vec![false; universe],
        }
    }

    pub fn full(universe: usize) -> Self {
        StateSet {
            mask: vec![true; universe],
        }
    }

    pub fn from_indices(universe: usize, indices: &[usize]) -> Result<Self> {
        let mut mask = vec![false; universe];
        for &i in indices {
            if i >= universe {
                return Err(invalid(format!("state {i} out of range for {universe} states")));
            }
            mask[i] = true;
        }
        Ok(StateSet { mask })
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        StateSet { mask }
    }

    pub fn universe(&self) -> usize {
        self.mask.len()
    }

    pub fn contains(&self, x: usize) -> bool {
        self.mask.get(x).copied().unwrap_or(false)
    }

    pub fn len(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.mask.iter().enumerate().filter_map(|(i, &m)| m.then_some(i))
    }

    pub fn complement(&self) -> StateSet {
        StateSet {
            mask: self.mask.iter().map(|m| !m).collect(),
        }
    }

    pub fn union(&self, other: &StateSet) -> StateSet {
        StateSet {
            mask: self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect(),
        }
    }

    pub fn indices(&self) -> Vec<usize> {
        self.iter().collect()
    }
}

/// A weight function `V >= 1`, defining `||f||_V = sup |f| / V`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightFunction(Vec<f64>);

impl WeightFunction {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !(**v >= 1.0) || !v.is_finite()) {
            return Err(invalid(format!("weight at state {i} is {v}, must be >= 1")));
        }
        Ok(WeightFunction(values))
    }

    pub fn constant(n: usize) -> Self {
        WeightFunction(vec![1.0; n])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, x: usize) -> f64 {
        self.0[x]
    }

    /// `sup_{x in set} V(x)`; `1` for the empty set.
    pub fn sup_over(&self, set: &StateSet) -> f64 {
        set.iter().map(|x| self.0[x]).fold(1.0, f64::max)
    }

    /// `||f||_V`.
    pub fn norm_of(&self, f: &[f64]) -> f64 {
        f.iter().zip(&self.0).map(|(fx, vx)| fx.abs() / vx).fold(0.0, f64::max)
    }
}

/// First-hitting-time law `P(tau_A = n)` for `n = 1..=horizon`.
#[derive(Debug, Clone, PartialEq)]
pub struct HittingLaw {
    pub target: StateSet,
    pub source: usize,
    /// `probs[n - 1] = P(tau = n)`.
    pub probs: Vec<f64>,
    pub horizon: usize,
    /// `survival[n - 1] = P(tau > n)`, accumulated from the surviving taboo mass.
    pub survival: Vec<f64>,
    /// `P(tau > horizon)`.
    pub tail: f64,
}

impl HittingLaw {
    pub fn prob(&self, n: usize) -> f64 {
        if n == 0 || n > self.horizon {
            0.0
        } else {
            self.probs[n - 1]
        }
    }

    /// `P(tau <= n)`.
    pub fn cdf(&self, n: usize) -> f64 {
        self.probs.iter().take(n).sum()
    }
}

/// `P^n` by binary powering; `P^0` is the identity.
pub fn n_step(chain: &FiniteChain, n: usize) -> DMatrix<f64> {
    let size = chain.len();
    let mut result = DMatrix::identity(size, size);
    let mut base = chain.matrix.clone();
    let mut k = n;
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// The unique stationary distribution.
///
/// One balance equation of `pi (P - I) = 0` is replaced by `sum pi = 1`.
/// A null space of `P^T - I` with dimension above one is reported as
/// [`Error::NonUnique`].
pub fn stationary(chain: &FiniteChain) -> Result<Vec<f64>> {
    let n = chain.len();
    let a = chain.matrix.transpose() - DMatrix::<f64>::identity(n, n);
    let svd = a.clone().svd(false, false);
    let scale = svd.singular_values.max().max(1.0);
    let null_dim = svd
        .singular_values
        .iter()
        .filter(|s| **s <= 1e-10 * scale * n as f64)
        .count();
    if null_dim > 1 {
        return Err(Error::NonUnique(null_dim));
    }
    let mut system = a;
    for j in 0..n {
        system[(n - 1, j)] = 1.0;
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = 1.0;
    let pi = system.lu().solve(&rhs).ok_or(Error::NonUnique(null_dim.max(2)))?;
    // clean round-off and renormalise
    let mut pi: Vec<f64> = pi.iter().map(|p| p.max(0.0)).collect();
    let total: f64 = pi.iter().sum();
    for p in &mut pi {
        *p /= total;
    }
    Ok(pi)
}

/// Taboo kernel `_B P^n(x, y) = P_x{X_n = y, tau_B >= n}` for all `x, y`.
///
/// Built by `_B P^1 = P` and `_B P^{n+1}(x, .) = sum_{y not in B} _B P^n(x, y) P(y, .)`.
pub fn taboo_kernel(chain: &FiniteChain, taboo: &StateSet, n: usize) -> Result<DMatrix<f64>> {
    if n == 0 {
        return Err(invalid("taboo kernel needs n >= 1"));
    }
    chain.check_set(taboo)?;
    let mut current = chain.matrix.clone();
    for _ in 1..n {
        current = taboo_step(chain, taboo, &current);
    }
    Ok(current)
}

/// All taboo kernels `_B P^1, .., _B P^n`.
pub fn taboo_kernels(chain: &FiniteChain, taboo: &StateSet, n: usize) -> Result<Vec<DMatrix<f64>>> {
    chain.check_set(taboo)?;
    let mut out = Vec::with_capacity(n);
    if n == 0 {
        return Ok(out);
    }
    out.push(chain.matrix.clone());
    for k in 1..n {
        let next = taboo_step(chain, taboo, &out[k - 1]);
        out.push(next);
    }
    Ok(out)
}

fn taboo_step(chain: &FiniteChain, taboo: &StateSet, current: &DMatrix<f64>) -> DMatrix<f64> {
    let mut masked = current.clone();
    for y in taboo.iter() {
        masked.column_mut(y).fill(0.0);
    }
    masked * &chain.matrix
}

/// Law of `tau_A` from a single source state.
pub fn hitting_law(chain: &FiniteChain, source: usize, target: &StateSet, horizon: usize) -> Result<HittingLaw> {
    chain.check_state(source)?;
    let mut initial = vec![0.0; chain.len()];
    initial[source] = 1.0;
    let mut law = hitting_law_from(chain, &initial, target, horizon)?;
    law.source = source;
    Ok(law)
}

/// Law of `tau_A` when the chain starts from the distribution `initial`.
///
/// The returned `source` field is meaningless and set to `usize::MAX`.
pub fn hitting_law_from(chain: &FiniteChain, initial: &[f64], target: &StateSet, horizon: usize) -> Result<HittingLaw> {
    if horizon == 0 {
        return Err(invalid("hitting law needs horizon >= 1"));
    }
    chain.check_set(target)?;
    if initial.len() != chain.len() {
        return Err(Error::Dimension {
            expected: chain.len(),
            got: initial.len(),
        });
    }
    // row vector of _A P^n(initial, .)
    let mut row = DVector::from_column_slice(initial).transpose() * &chain.matrix;
    let mut probs = Vec::with_capacity(horizon);
    let mut survival = Vec::with_capacity(horizon);
    let mut tail = 0.0;
    for n in 1..=horizon {
        let hit: f64 = target.iter().map(|y| row[y]).sum();
        probs.push(hit.max(0.0));
        for y in target.iter() {
            row[y] = 0.0;
        }
        tail = row.sum().max(0.0);
        survival.push(tail);
        if n < horizon {
            row *= &chain.matrix;
        }
    }
    Ok(HittingLaw {
        target: target.clone(),
        source: usize::MAX,
        probs,
        survival,
        horizon,
        tail,
    })
}

/// Solves `h = w + rate * Q h` on the complement of `target`, where `Q` is
/// `P` restricted to that complement, and extends `h` to every state by one
/// first step.
///
/// Entry `x` of the result is `E_x[sum_{k < tau_A} w(X_k) rate^k]`. Requires
/// `w >= 1`; divergence is detected through the fact that a finite
/// nonnegative Neumann series forces `h >= w`.
fn first_step_sums(chain: &FiniteChain, weights: &[f64], target: &StateSet, rate: f64) -> Result<Vec<f64>> {
    let outside: Vec<usize> = target.complement().indices();
    let m = outside.len();
    let mut h_out = vec![0.0; m];
    if m > 0 {
        let mut system = DMatrix::<f64>::identity(m, m);
        for (i, &x) in outside.iter().enumerate() {
            for (j, &y) in outside.iter().enumerate() {
                system[(i, j)] -= rate * chain.matrix[(x, y)];
            }
        }
        let rhs = DVector::from_iterator(m, outside.iter().map(|&x| weights[x]));
        let sol = system.lu().solve(&rhs).ok_or(Error::Divergent { rate })?;
        for (i, &x) in outside.iter().enumerate() {
            let h = sol[i];
            if !h.is_finite() || h < weights[x] * (1.0 - DIVERGENCE_TOL) {
                return Err(Error::Divergent { rate });
            }
            h_out[i] = h;
        }
    }
    let mut full = vec![0.0; chain.len()];
    for (i, &x) in outside.iter().enumerate() {
        full[x] = h_out[i];
    }
    for x in target.iter() {
        let continuation: f64 = outside
            .iter()
            .enumerate()
            .map(|(i, &y)| chain.matrix[(x, y)] * h_out[i])
            .sum();
        full[x] = weights[x] + rate * continuation;
    }
    Ok(full)
}

/// `E_x[sum_{k=0}^{tau_A - 1} V(X_k) r^k]` for every state `x`.
pub fn weighted_sums(chain: &FiniteChain, v: &WeightFunction, target: &StateSet, r: f64) -> Result<Vec<f64>> {
    chain.check_weights(v)?;
    chain.check_set(target)?;
    if !(r >= 1.0) || !r.is_finite() {
        return Err(invalid(format!("rate must be >= 1, got {r}")));
    }
    first_step_sums(chain, v.values(), target, r)
}

/// `E_source[sum_{k=0}^{tau_A - 1} V(X_k) r^k]`.
pub fn mgf_weighted_sum(
    chain: &FiniteChain,
    v: &WeightFunction,
    source: usize,
    target: &StateSet,
    r: f64,
) -> Result<f64> {
    chain.check_state(source)?;
    if !(r > 1.0) {
        return Err(invalid(format!("rate must be > 1, got {r}")));
    }
    Ok(weighted_sums(chain, v, target, r)?[source])
}

/// `E_x[r^{tau_A}]` for every state, from its own first-step system
/// `g(x) = r P(x, A) + r sum_{y not in A} P(x, y) g(y)`.
pub fn hitting_mgf(chain: &FiniteChain, target: &StateSet, r: f64) -> Result<Vec<f64>> {
    chain.check_set(target)?;
    let outside: Vec<usize> = target.complement().indices();
    let m = outside.len();
    let mut g_out = vec![0.0; m];
    if m > 0 {
        let mut system = DMatrix::<f64>::identity(m, m);
        for (i, &x) in outside.iter().enumerate() {
            for (j, &y) in outside.iter().enumerate() {
                system[(i, j)] -= r * chain.matrix[(x, y)];
            }
        }
        let rhs = DVector::from_iterator(m, outside.iter().map(|&x| r * chain.prob_into(x, target)));
        let sol = system.lu().solve(&rhs).ok_or(Error::Divergent { rate: r })?;
        for i in 0..m {
            // a convergent series has g >= 1 wherever the target is reachable
            if !sol[i].is_finite() || sol[i] < -DIVERGENCE_TOL {
                return Err(Error::Divergent { rate: r });
            }
            g_out[i] = sol[i];
        }
        // confirm convergence with the weighted system
        first_step_sums(chain, &vec![1.0; chain.len()], target, r)?;
    }
    let mut full = vec![0.0; chain.len()];
    for (i, &x) in outside.iter().enumerate() {
        full[x] = g_out[i];
    }
    for x in target.iter() {
        let cont: f64 = outside
            .iter()
            .enumerate()
            .map(|(i, &y)| chain.matrix[(x, y)] * g_out[i])
            .sum();
        full[x] = r * (chain.prob_into(x, target) + cont);
    }
    Ok(full)
}

/// `E_x[tau_A]` for every state.
pub fn mean_hitting_times(chain: &FiniteChain, target: &StateSet) -> Result<Vec<f64>> {
    chain.check_set(target)?;
    first_step_sums(chain, &vec![1.0; chain.len()], target, 1.0)
}

/// `sum_y |P^n(source, y) - pi(y)| V(y)`, the V-norm distance of
/// `P^n(source, .)` from `pi`.
pub fn vnorm_distance(chain: &FiniteChain, v: &WeightFunction, source: usize, n: usize, pi: &[f64]) -> Result<f64> {
    Ok(vnorm_distances(chain, v, source, n, pi)?[n])
}

/// [`vnorm_distance`] for `n = 0..=horizon`.
///
/// Propagates the signed difference `P^n(source, .) - pi` rather than
/// `P^n` itself, projecting out its (invariant) total mass after every step,
/// so the result keeps relative accuracy far below the `1e-16` absolute
/// floor of `P^n - pi`.
pub fn vnorm_distances(
    chain: &FiniteChain,
    v: &WeightFunction,
    source: usize,
    horizon: usize,
    pi: &[f64],
) -> Result<Vec<f64>> {
    chain.check_state(source)?;
    chain.check_weights(v)?;
    if pi.len() != chain.len() {
        return Err(Error::Dimension {
            expected: chain.len(),
            got: pi.len(),
        });
    }
    let mut diff: Vec<f64> = pi.iter().map(|q| -q).collect();
    diff[source] += 1.0;
    let mut out = Vec::with_capacity(horizon + 1);
    out.push(weighted_abs(&diff, v.values()));
    for _ in 0..horizon {
        diff = chain.apply_left(&diff);
        let mass: f64 = diff.iter().sum();
        for (d, q) in diff.iter_mut().zip(pi) {
            *d -= mass * q;
        }
        out.push(weighted_abs(&diff, v.values()));
    }
    Ok(out)
}

fn weighted_abs(d: &[f64], v: &[f64]) -> f64 {
    d.iter().zip(v).map(|(x, w)| x.abs() * w).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn flip() -> FiniteChain {
        FiniteChain::from_rows(&[vec![0.1, 0.9], vec![0.9, 0.1]]).unwrap()
    }

    fn halves() -> FiniteChain {
        FiniteChain::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap()
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let err = FiniteChain::from_rows(&[vec![0.5, 0.49], vec![0.5, 0.5]]).unwrap_err();
        assert!(matches!(err, Error::Invalid(msg) if msg.contains("row-stochastic")));
        assert!(FiniteChain::from_rows(&[vec![1.2, -0.2], vec![0.5, 0.5]]).is_err());
        assert!(FiniteChain::from_rows(&vec![vec![1.0]; 2]).is_err());
    }

    #[test]
    fn n_step_examples() {
        let id = FiniteChain::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(n_step(&id, 5), DMatrix::identity(2, 2));
        let c = flip();
        assert_eq!(n_step(&c, 1), *c.matrix());
        assert_eq!(n_step(&c, 0), DMatrix::identity(2, 2));
        let two = n_step(&c, 2);
        assert_abs_diff_eq!(two[(0, 0)], 0.82, epsilon = 1e-15);
        assert_abs_diff_eq!(two[(0, 1)], 0.18, epsilon = 1e-15);
        assert_abs_diff_eq!(two[(1, 0)], 0.18, epsilon = 1e-15);
        assert_abs_diff_eq!(two[(1, 1)], 0.82, epsilon = 1e-15);
    }

    #[test]
    fn stationary_examples() {
        let pi = stationary(&halves()).unwrap();
        assert_abs_diff_eq!(pi[0], 0.5, epsilon = 1e-14);
        let c = FiniteChain::from_rows(&[vec![0.1, 0.9], vec![0.3, 0.7]]).unwrap();
        let pi = stationary(&c).unwrap();
        assert_abs_diff_eq!(pi[0], 0.25, epsilon = 1e-14);
        assert_abs_diff_eq!(pi[1], 0.75, epsilon = 1e-14);
        let ds = FiniteChain::from_rows(&[vec![0.2, 0.3, 0.5], vec![0.5, 0.2, 0.3], vec![0.3, 0.5, 0.2]]).unwrap();
        for p in stationary(&ds).unwrap() {
            assert_abs_diff_eq!(p, 1.0 / 3.0, epsilon = 1e-14);
        }
    }

    #[test]
    fn reducible_chain_is_non_unique() {
        let c = FiniteChain::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        assert_eq!(stationary(&c), Err(Error::NonUnique(2)));
    }

    #[test]
    fn taboo_examples() {
        let c = flip();
        let b = StateSet::from_indices(2, &[0]).unwrap();
        assert_eq!(taboo_kernel(&c, &b, 1).unwrap(), *c.matrix());
        let all = StateSet::full(2);
        assert_eq!(taboo_kernel(&c, &all, 2).unwrap(), DMatrix::zeros(2, 2));
        // only path 2 -> 2 -> 2 avoids state 1
        assert_abs_diff_eq!(taboo_kernel(&c, &b, 2).unwrap()[(1, 1)], 0.01, epsilon = 1e-15);
        assert!(taboo_kernel(&c, &b, 0).is_err());
    }

    #[test]
    fn hitting_law_examples() {
        let absorbing = FiniteChain::from_rows(&[vec![0.0, 1.0], vec![0.0, 1.0]]).unwrap();
        let a = StateSet::from_indices(2, &[1]).unwrap();
        let law = hitting_law(&absorbing, 0, &a, 4).unwrap();
        assert_eq!(law.probs, vec![1.0, 0.0, 0.0, 0.0]);

        let law = hitting_law(&halves(), 0, &StateSet::from_indices(2, &[0]).unwrap(), 30).unwrap();
        assert_abs_diff_eq!(law.probs[0], 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(law.probs[1], 0.25, epsilon = 1e-15);
        for (n, p) in law.probs.iter().enumerate() {
            assert_abs_diff_eq!(*p, 0.5f64.powi(n as i32 + 1), epsilon = 1e-15);
        }

        // source inside A: first return at step one with probability P(source, A)
        let c = flip();
        let law = hitting_law(&c, 0, &StateSet::from_indices(2, &[0]).unwrap(), 3).unwrap();
        assert_abs_diff_eq!(law.probs[0], 0.1, epsilon = 1e-15);
    }

    #[test]
    fn mgf_weighted_sum_examples() {
        let c = halves();
        let a = StateSet::from_indices(2, &[0]).unwrap();
        let one = WeightFunction::constant(2);
        // E[(1.5^tau - 1)/0.5] with E[1.5^tau] = 3
        assert_abs_diff_eq!(mgf_weighted_sum(&c, &one, 0, &a, 1.5).unwrap(), 4.0, epsilon = 1e-12);

        let absorbing = FiniteChain::from_rows(&[vec![1.0, 0.0], vec![1.0, 0.0]]).unwrap();
        assert_abs_diff_eq!(
            mgf_weighted_sum(&absorbing, &one, 0, &a, 3.0).unwrap(),
            1.0,
            epsilon = 1e-15
        );
        // E[2^tau] = sum 0.5^n 2^n diverges
        assert!(matches!(
            mgf_weighted_sum(&c, &one, 0, &a, 2.0),
            Err(Error::Divergent { .. })
        ));
        assert!(matches!(
            mgf_weighted_sum(&c, &one, 0, &a, 2.5),
            Err(Error::Divergent { .. })
        ));
    }

    #[test]
    fn hitting_mgf_matches_weighted_identity() {
        let c = FiniteChain::from_rows(&[vec![0.2, 0.5, 0.3], vec![0.4, 0.4, 0.2], vec![0.1, 0.6, 0.3]]).unwrap();
        let a = StateSet::from_indices(3, &[2]).unwrap();
        let r = 1.3;
        let g = hitting_mgf(&c, &a, r).unwrap();
        let w = weighted_sums(&c, &WeightFunction::constant(3), &a, r).unwrap();
        for x in 0..3 {
            assert_abs_diff_eq!((g[x] - 1.0) / (r - 1.0), w[x], epsilon = 1e-12);
        }
    }

    #[test]
    fn vnorm_distance_examples() {
        let c = flip();
        let one = WeightFunction::constant(2);
        let pi = [0.5, 0.5];
        assert_abs_diff_eq!(vnorm_distance(&c, &one, 0, 1, &pi).unwrap(), 0.8, epsilon = 1e-15);
        assert_abs_diff_eq!(vnorm_distance(&c, &one, 0, 3, &pi).unwrap(), 0.512, epsilon = 1e-14);
        assert_eq!(vnorm_distance(&halves(), &one, 1, 1, &pi).unwrap(), 0.0);
        // far below the absolute round-off floor of P^n - pi
        let far = vnorm_distance(&c, &one, 0, 200, &pi).unwrap();
        assert!((far / 0.8f64.powi(200) - 1.0).abs() < 1e-12);
    }

    fn arb_chain() -> impl Strategy<Value = FiniteChain> {
        (2usize..6).prop_flat_map(|n| {
            prop::collection::vec(prop::collection::vec(0.01f64..1.0, n), n).prop_map(|rows| {
                let rows: Vec<Vec<f64>> = rows
                    .into_iter()
                    .map(|r| {
                        let s: f64 = r.iter().sum();
                        let mut r: Vec<f64> = r.iter().map(|x| x / s).collect();
                        let head: f64 = r[1..].iter().sum();
                        r[0] = 1.0 - head;
                        r
                    })
                    .collect();
                FiniteChain::from_rows(&rows).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn chapman_kolmogorov(c in arb_chain(), n in 0usize..12, m in 0usize..12) {
            let lhs = n_step(&c, n + m);
            let rhs = n_step(&c, n) * n_step(&c, m);
            prop_assert!((lhs - rhs).abs().max() < 1e-10);
        }

        #[test]
        fn hitting_law_mass_balances(c in arb_chain(), horizon in 1usize..40) {
            let a = StateSet::from_indices(c.len(), &[0]).unwrap();
            let law = hitting_law(&c, c.len() - 1, &a, horizon).unwrap();
            let tail: f64 = taboo_kernel(&c, &a, horizon).unwrap()
                .row(c.len() - 1).iter().enumerate()
                .filter(|(y, _)| !a.contains(*y)).map(|(_, p)| p).sum();
            prop_assert!((law.probs.iter().sum::<f64>() + tail - 1.0).abs() < 1e-10);
            prop_assert!((law.tail - tail).abs() < 1e-12);
        }

        #[test]
        fn taboo_row_sums_non_increasing(c in arb_chain()) {
            let b = StateSet::from_indices(c.len(), &[0]).unwrap();
            let ks = taboo_kernels(&c, &b, 10).unwrap();
            for w in ks.windows(2) {
                for x in 0..c.len() {
                    prop_assert!(w[1].row(x).sum() <= w[0].row(x).sum() + 1e-15);
                }
            }
        }

        #[test]
        fn vnorm_monotone_in_weights(c in arb_chain(), bump in 0.0f64..5.0, n in 0usize..6) {
            let pi = stationary(&c).unwrap();
            let v1 = WeightFunction::constant(c.len());
            let v2 = WeightFunction::new((0..c.len()).map(|i| 1.0 + bump * i as f64).collect()).unwrap();
            for x in 0..c.len() {
                let d1 = vnorm_distance(&c, &v1, x, n, &pi).unwrap();
                let d2 = vnorm_distance(&c, &v2, x, n, &pi).unwrap();
                prop_assert!(d1 <= d2 + 1e-14);
            }
        }

        #[test]
        fn stationary_residual_small(c in arb_chain()) {
            let pi = stationary(&c).unwrap();
            let moved = DVector::from_column_slice(&pi).transpose() * c.matrix();
            let resid: f64 = moved.iter().zip(&pi).map(|(a, b)| (a - b).abs()).sum();
            prop_assert!(resid < 1e-12);
            prop_assert!((pi.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn weighted_sum_dominates_mgf(c in arb_chain(), r in 1.01f64..1.3) {
            let a = StateSet::from_indices(c.len(), &[0]).unwrap();
            let one = WeightFunction::constant(c.len());
            if let (Ok(w), Ok(g)) = (weighted_sums(&c, &one, &a, r), hitting_mgf(&c, &a, r)) {
                for x in 0..c.len() {
                    prop_assert!((g[x] - 1.0) / (r - 1.0) <= w[x] * (1.0 + 1e-10));
                }
            }
        }
    }
}
