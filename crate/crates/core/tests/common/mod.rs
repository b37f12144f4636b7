//! Deterministic test corpus: random finite chains with verified drift,
//! minorization and petiteness certificates, and a set of increment laws.
#![allow(dead_code)]

use ergo_bounds::chain::{FiniteChain, StateSet, WeightFunction};
use ergo_bounds::drift::{verify_drift, DriftCertificate};
use ergo_bounds::harris::{verify_hypotheses, HarrisInputs};
use ergo_bounds::montecarlo::CounterRng;
use ergo_bounds::renewal::IncrementDistribution;
use ergo_bounds::splitting::MinorizationCertificate;

pub const CORPUS_SEED: u64 = 0x5eed_c0de;
pub const CORPUS_SIZE: usize = 25;

pub struct CertifiedChain {
    pub name: String,
    pub chain: FiniteChain,
    pub v: WeightFunction,
    pub drift: DriftCertificate,
    pub minorization: MinorizationCertificate,
    pub n0: u64,
    pub inputs: HarrisInputs,
}

/// Row `x` mixes a step towards state 0 with a strictly positive random
/// law, so every chain is irreducible and aperiodic and `V(x) = s^x`
/// drifts down outside a set around 0.
fn random_chain(rng: &mut CounterRng, n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|x| {
            let noise: Vec<f64> = (0..n).map(|_| rng.next_f64().powi(2) + 0.02).collect();
            let total: f64 = noise.iter().sum();
            let pull = if x == 0 { 0.5 } else { 0.45 + 0.3 * rng.next_f64() };
            let mut row: Vec<f64> = noise.iter().map(|w| (1.0 - pull) * w / total).collect();
            row[x.saturating_sub(1)] += pull;
            let excess: f64 = row.iter().sum::<f64>() - 1.0;
            row[x.saturating_sub(1)] -= excess;
            row
        })
        .collect()
}

fn certify(name: String, rows: Vec<Vec<f64>>, growth: f64, u: &[usize]) -> CertifiedChain {
    let chain = FiniteChain::from_rows(&rows).unwrap();
    let n = chain.len();
    let v = WeightFunction::new((0..n).map(|x| growth.powi(x as i32)).collect()).unwrap();
    let pv = chain.apply(v.values());
    let ratio: Vec<f64> = (0..n).map(|x| pv[x] / v.get(x)).collect();

    // C = states whose one-step ratio exceeds 0.97, plus 0
    let in_c: Vec<bool> = (0..n).map(|x| x == 0 || ratio[x] > 0.97).collect();
    let lambda = (0..n)
        .filter(|&x| !in_c[x])
        .map(|x| ratio[x])
        .fold(0.0, f64::max)
        .max(0.5)
        * (1.0 + 1e-9);
    let set = StateSet::from_mask(in_c.clone());
    let b = (0..n)
        .filter(|&x| in_c[x])
        .map(|x| pv[x] - lambda * v.get(x))
        .fold(0.0, f64::max)
        * (1.0 + 1e-9)
        + 1e-12;
    let drift = DriftCertificate::new(v.clone(), lambda, b, set).unwrap();
    assert!(verify_drift(&chain, &drift).unwrap().passed, "{name}: drift");

    let small = StateSet::from_indices(n, u).unwrap();
    let minorization = MinorizationCertificate::maximal(&chain, small, 0.999).unwrap();
    let n0 = 1;
    let inputs = verify_hypotheses(&chain, &minorization, &drift, n0).unwrap();
    CertifiedChain {
        name,
        chain,
        v,
        drift,
        minorization,
        n0,
        inputs,
    }
}

/// 25 certified chains on 2 to 12 states.
pub fn chain_corpus() -> Vec<CertifiedChain> {
    (0..CORPUS_SIZE)
        .map(|i| {
            let mut rng = CounterRng::new(CORPUS_SEED, i as u64);
            let n = 2 + i % 11;
            let rows = random_chain(&mut rng, n);
            let growth = 1.1 + 0.3 * rng.next_f64();
            let u: Vec<usize> = if i % 2 == 1 && n >= 3 { vec![0, 1] } else { vec![0] };
            certify(format!("chain{i:02}_n{n}"), rows, growth, &u)
        })
        .collect()
}

/// The symmetric two-state flip chain with `delta = 0.1` on `{0}`.
pub fn flip_chain() -> CertifiedChain {
    let chain = FiniteChain::from_rows(&[vec![0.1, 0.9], vec![0.9, 0.1]]).unwrap();
    let v = WeightFunction::constant(2);
    let drift = DriftCertificate::new(v.clone(), 0.9, 0.2, StateSet::full(2)).unwrap();
    let minorization =
        MinorizationCertificate::new(StateSet::from_indices(2, &[0]).unwrap(), 0.1, vec![1.0, 0.0]).unwrap();
    let inputs = verify_hypotheses(&chain, &minorization, &drift, 1).unwrap();
    CertifiedChain {
        name: "flip".into(),
        chain,
        v,
        drift,
        minorization,
        n0: 1,
        inputs,
    }
}

/// Aperiodic increment laws with `p(1) > 0`.
pub fn increment_corpus() -> Vec<IncrementDistribution> {
    let mut laws = vec![
        vec![0.5, 0.5],
        vec![1.0],
        vec![0.2, 0.5, 0.3],
        vec![0.9, 0.1],
        vec![0.1, 0.9],
        vec![0.3, 0.0, 0.7],
        vec![0.25, 0.25, 0.25, 0.25],
        vec![0.05, 0.0, 0.0, 0.0, 0.95],
        vec![0.6, 0.1, 0.1, 0.1, 0.1],
        vec![0.4, 0.0, 0.3, 0.0, 0.2, 0.1],
    ];
    for i in 0..5 {
        let mut rng = CounterRng::new(CORPUS_SEED ^ 0xffff, i);
        let len = 2 + (i as usize % 6);
        let mut w: Vec<f64> = (0..len).map(|_| rng.next_f64()).collect();
        w[0] += 0.1;
        let total: f64 = w.iter().sum();
        let mut p: Vec<f64> = w.iter().map(|x| x / total).collect();
        let rest: f64 = p[1..].iter().sum();
        p[0] = 1.0 - rest;
        laws.push(p);
    }
    laws.into_iter()
        .map(|p| IncrementDistribution::new(p).unwrap())
        .collect()
}

/// `u(n)` for `n <= horizon` by enumerating every increment path.
pub fn brute_force_renewal(p: &IncrementDistribution, horizon: usize) -> Vec<f64> {
    fn walk(p: &IncrementDistribution, at: usize, weight: f64, horizon: usize, out: &mut [f64]) {
        out[at] += weight;
        for k in 1..=p.support().min(horizon - at) {
            if p.p(k) > 0.0 {
                walk(p, at + k, weight * p.p(k), horizon, out);
            }
        }
    }
    let mut out = vec![0.0; horizon + 1];
    walk(p, 0, 1.0, horizon, &mut out);
    out
}
