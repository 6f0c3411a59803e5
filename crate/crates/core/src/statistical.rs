//! Statistical properties of the estimators on the default catalog.

use num_complex::Complex64;
use rand_distr::{Distribution, StandardNormal};

use crate::catalog::default_catalog;
use crate::expressibility::{expressibility, expressibility_from_histogram, FidelityHistogram};
use crate::observables::HamiltonianId;
use crate::pareto::layer_centroids;
use crate::records::{Field, MetricRecord};
use crate::seed::{job_seed, rng_from_seed, JobRng};
use crate::statevector::{fidelity, StateVector};
use crate::trainability::{trainability, GradientSamples};

/// Ceiling for the Haar self-test at 5000 pairs, 75 bins, 4 qubits. Over 100
/// oracle seeds the divergence ranged 0.0024..0.0074.
pub(crate) const HAAR_SELF_TEST_DKL: f64 = 0.01;

fn haar_state(rng: &mut JobRng, dim: usize) -> StateVector {
    let amps = (0..dim)
        .map(|_| Complex64::new(StandardNormal.sample(rng), StandardNormal.sample(rng)))
        .collect();
    StateVector::from_amplitudes(amps).unwrap()
}

fn haar_oracle_dkl(seed: u64) -> f64 {
    let mut rng = rng_from_seed(seed);
    let mut h = FidelityHistogram::new(75).unwrap();
    for _ in 0..5000 {
        let a = haar_state(&mut rng, 16);
        let b = haar_state(&mut rng, 16);
        h.add(fidelity(&a, &b).unwrap());
    }
    expressibility_from_histogram(&h, 16, seed).unwrap().dkl
}

#[test]
fn haar_oracle_has_small_divergence() {
    for seed in 0..20 {
        let d = haar_oracle_dkl(seed);
        assert!(d < HAAR_SELF_TEST_DKL, "seed {seed}: {d}");
    }
}

#[test]
fn haar_oracle_divergence_shrinks_with_pairs() {
    let mut rng = rng_from_seed(7);
    let mut small = FidelityHistogram::new(75).unwrap();
    let mut large = FidelityHistogram::new(75).unwrap();
    for i in 0..40_000 {
        let f = fidelity(&haar_state(&mut rng, 16), &haar_state(&mut rng, 16)).unwrap();
        if i < 1000 {
            small.add(f);
        }
        large.add(f);
    }
    let d_small = expressibility_from_histogram(&small, 16, 0).unwrap().dkl;
    let d_large = expressibility_from_histogram(&large, 16, 0).unwrap().dkl;
    assert!(d_large < d_small / 4.0, "{d_small} -> {d_large}");
}

#[test]
fn landscape_unbiased_at_four_sigma() {
    let obs = HamiltonianId::Tfim.build(4).unwrap();
    for t in default_catalog() {
        let c = t.instantiate(1).unwrap();
        let s = GradientSamples::draw(&c, &obs, 1000, job_seed(1, &t.id, 1, "trainability")).unwrap();
        let n = s.samples.len() as f64;
        let mean = s.mean();
        for (k, m) in mean.iter().enumerate() {
            let var = s.samples.iter().map(|g| (g[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
            let sem = (var / n).sqrt();
            assert!(m.abs() <= 4.0 * sem + 1e-12, "{} param {k}: mean {m}, sem {sem}", t.id);
        }
    }
}

#[test]
fn chebyshev_bound_holds() {
    let obs = HamiltonianId::Tfim.build(4).unwrap();
    for t in default_catalog() {
        let c = t.instantiate(2).unwrap();
        let s = GradientSamples::draw(&c, &obs, 500, job_seed(1, &t.id, 2, "trainability")).unwrap();
        let var = s.mean_square();
        let n = s.samples.len() as f64;
        for delta in [0.5, 1.0] {
            for (k, p) in s.tail_fraction(delta).iter().enumerate() {
                let mc = (p * (1.0 - p) / n).sqrt();
                assert!(*p <= var[k] / (delta * delta) + 3.0 * mc, "{} param {k} δ={delta}", t.id);
            }
        }
    }
}

fn tfim_trainability_records(max_layers: usize) -> Vec<MetricRecord> {
    let obs = HamiltonianId::Tfim.build(4).unwrap();
    let mut out = Vec::new();
    for t in default_catalog() {
        for l in 1..=max_layers {
            let c = t.instantiate(l).unwrap();
            let tr = trainability(&c, &obs, 500, job_seed(1, &t.id, l, "trainability")).unwrap();
            out.push(MetricRecord {
                circuit_id: t.id.clone(),
                layers: l,
                n_qubits: 4,
                resources: c.resource_counts(),
                dkl: None,
                expr_prime: None,
                hamiltonian_id: "tfim".into(),
                trainability: Some(tr.mean_variance),
                cost: None,
                score: None,
                seed: 1,
            });
        }
    }
    out
}

#[test]
fn trainability_decreases_with_layers() {
    let recs = tfim_trainability_records(5);
    let means: Vec<f64> = (1..=5)
        .map(|l| {
            let v: Vec<f64> = recs.iter().filter(|r| r.layers == l).filter_map(|r| r.trainability).collect();
            v.iter().sum::<f64>() / v.len() as f64
        })
        .collect();
    for w in means.windows(2) {
        assert!(w[1] <= w[0], "{means:?}");
    }
    assert!((means[2] - means[4]) / means[2] < 0.10, "{means:?}");

    // KDE centroids move toward lower trainability as layers are added.
    let centroids = layer_centroids(&recs, Field::Depth, Field::Trainability).unwrap();
    assert_eq!(centroids.len(), 5);
    for w in centroids.windows(2) {
        assert!(w[1].mode.1 <= w[0].mode.1, "L{} -> L{}", w[0].layers, w[1].layers);
    }
}

#[test]
fn expressibility_grows_with_layers() {
    let seeds = 1..=5u64;
    let mut monotone = 0;
    for t in default_catalog() {
        let medians: Vec<f64> = (1..=3)
            .map(|l| {
                let c = t.instantiate(l).unwrap();
                let mut v: Vec<f64> = seeds
                    .clone()
                    .map(|s| expressibility(&c, 5000, 75, job_seed(s, &t.id, l, "expressibility")).unwrap().expr_prime)
                    .collect();
                v.sort_by(f64::total_cmp);
                v[v.len() / 2]
            })
            .collect();
        if medians[0] <= medians[1] && medians[1] <= medians[2] {
            monotone += 1;
        }
    }
    assert!(monotone >= 16, "{monotone}/19 monotone");
}
