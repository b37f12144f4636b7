mod common;

use ergo_bounds::chain::{stationary, vnorm_distance};
use ergo_bounds::harris::{harris_constants, verify_harris_bound, HarrisTunables};
use ergo_bounds::kendall::{kendall_constants, kendall_verify, KendallParams};
use ergo_bounds::renewal::increment_mgf;
use ergo_bounds::splitting::{atom_increment, split_chain, split_drift};
use ergo_bounds::Error;

use common::{chain_corpus, flip_chain, increment_corpus};

#[test]
fn corpus_certificates_are_verified() {
    let corpus = chain_corpus();
    assert_eq!(corpus.len(), 25);
    let sizes: Vec<usize> = corpus.iter().map(|c| c.chain.len()).collect();
    assert_eq!(sizes.iter().min(), Some(&2));
    assert_eq!(sizes.iter().max(), Some(&12));
    for c in &corpus {
        assert!(c.inputs.lambda < 1.0 && c.inputs.c > 0.0, "{}", c.name);
        assert!(c.minorization.verify(&c.chain).unwrap(), "{}", c.name);
    }
}

#[test]
fn split_drift_is_measured_on_every_corpus_chain() {
    for c in chain_corpus() {
        let split = split_chain(&c.chain, &c.minorization).unwrap();
        let sd = split_drift(&split, &c.v, c.drift.lambda, &c.drift.set).unwrap();
        assert!(sd.check.passed, "{}", c.name);
        assert!(sd.b.is_finite());
    }
}

#[test]
fn atom_return_law_is_a_probability() {
    for c in chain_corpus().iter().take(8) {
        let split = split_chain(&c.chain, &c.minorization).unwrap();
        let inc = atom_increment(&split, 2000).unwrap();
        let mass: f64 = inc.probs.iter().sum();
        assert!((mass + inc.tail - 1.0).abs() < 1e-12, "{}", c.name);
        assert!(inc.p(1) > 0.0);
    }
}

#[test]
fn flip_chain_bound_and_tampering() {
    let flip = flip_chain();
    let bound = harris_constants(&flip.inputs).unwrap();
    assert!(bound.gamma_below_one());
    verify_harris_bound(&flip.chain, &flip.v, &bound, 200).unwrap();

    // D = 1, gamma = 0.7 understates 0.8^n from the first step
    let mut tampered = bound.clone();
    tampered.d = ergo_bounds::LogReal::ONE;
    tampered.rate = ergo_bounds::Rate::from_value(1.0 / 0.7).unwrap();
    match verify_harris_bound(&flip.chain, &flip.v, &tampered, 200) {
        Err(Error::BoundViolation { n, distance, .. }) => {
            assert_eq!(n, 1);
            let pi = stationary(&flip.chain).unwrap();
            assert_eq!(distance, vnorm_distance(&flip.chain, &flip.v, 0, 1, &pi).unwrap());
        }
        other => panic!("expected a violation, got {other:?}"),
    }
}

#[test]
fn tunables_trade_rate_for_constant() {
    let c = &chain_corpus()[3];
    let slow = harris_constants(&c.inputs).unwrap();
    let tune = HarrisTunables {
        rate_fraction: 0.25,
        ..HarrisTunables::default()
    };
    let slower = ergo_bounds::harris::harris_constants_with(&c.inputs, &tune).unwrap();
    assert!(slower.rate.ln_log_rate() < slow.rate.ln_log_rate());
    verify_harris_bound(&c.chain, &c.v, &slower, 100).unwrap();
}

#[test]
fn renewal_bounds_hold_across_rates() {
    for p in increment_corpus() {
        for r in [1.05, 1.5, 3.0] {
            let b = increment_mgf(&p, r).unwrap();
            let bound = kendall_constants(&KendallParams::new(p.p(1), b, r).unwrap()).unwrap();
            assert!(
                kendall_verify(&p, &bound, 150).unwrap().passed,
                "{:?} r = {r}",
                p.probs()
            );
        }
    }
}
