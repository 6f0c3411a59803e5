//! Expressibility as the KL divergence between a circuit's pairwise-fidelity
//! histogram and the Haar fidelity distribution.
//!
//! The divergence uses the natural logarithm; `expr_prime = −log10(dkl)`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::catalog::Circuit;
use crate::error::{Error, Result};
use crate::seed::rng_from_seed;
use crate::statevector::fidelity;

pub const DEFAULT_PAIRS: usize = 5000;
pub const DEFAULT_BINS: usize = 75;
/// Floor applied to the divergence before taking the logarithm.
pub const DKL_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FidelityHistogram {
    pub n_bins: usize,
    pub counts: Vec<u64>,
    pub n_samples: u64,
}

impl FidelityHistogram {
    pub fn new(n_bins: usize) -> Result<Self> {
        if n_bins == 0 {
            return Err(Error::InvalidArgument("n_bins must be at least 1".into()));
        }
        Ok(FidelityHistogram {
            n_bins,
            counts: vec![0; n_bins],
            n_samples: 0,
        })
    }

    /// Bins are `[k/n, (k+1)/n)`; the last one also holds `F = 1`.
    pub fn bin_of(&self, f: f64) -> usize {
        let k = (f.clamp(0.0, 1.0) * self.n_bins as f64).floor() as usize;
        k.min(self.n_bins - 1)
    }

    pub fn add(&mut self, f: f64) {
        let k = self.bin_of(f);
        self.counts[k] += 1;
        self.n_samples += 1;
    }

    pub fn from_fidelities(fidelities: &[f64], n_bins: usize) -> Result<Self> {
        let mut h = FidelityHistogram::new(n_bins)?;
        for &f in fidelities {
            h.add(f);
        }
        Ok(h)
    }

    pub fn probabilities(&self) -> Vec<f64> {
        let n = self.n_samples.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / n).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpressibilityResult {
    pub dkl: f64,
    pub expr_prime: f64,
    pub n_pairs: usize,
    pub n_bins: usize,
    pub seed: u64,
    /// Set when `dkl` fell below [`DKL_FLOOR`] and was clamped for `expr_prime`.
    pub clamped: bool,
}

/// Haar pairwise-fidelity density `(N−1)(1−F)^{N−2}` for Hilbert dimension `dim`.
pub fn haar_pdf(f: f64, dim: usize) -> Result<f64> {
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("Hilbert dimension must be >= 2, got {dim}")));
    }
    if !(0.0..=1.0).contains(&f) {
        return Err(Error::InvalidArgument(format!("fidelity {f} outside [0, 1]")));
    }
    let n = dim as f64;
    Ok((n - 1.0) * (1.0 - f).powi(dim as i32 - 2))
}

/// Exact Haar probability mass of each of `n_bins` uniform bins on `[0, 1]`.
pub fn haar_bin_masses(n_bins: usize, dim: usize) -> Result<Vec<f64>> {
    if n_bins == 0 {
        return Err(Error::InvalidArgument("n_bins must be at least 1".into()));
    }
    if dim < 2 {
        return Err(Error::InvalidArgument(format!("Hilbert dimension must be >= 2, got {dim}")));
    }
    // Survival function S(F) = (1 − F)^{N−1}; mass_k = S(k/n) − S((k+1)/n).
    let exp = dim as i32 - 1;
    let survival = |k: usize| (1.0 - k as f64 / n_bins as f64).powi(exp);
    Ok((0..n_bins).map(|k| survival(k) - survival(k + 1)).collect())
}

/// Draws `n_pairs` independent parameter pairs uniform on `[0, 2π)` and bins
/// the fidelities of the prepared states.
pub fn sample_fidelity_histogram(
    circuit: &Circuit,
    n_pairs: usize,
    n_bins: usize,
    seed: u64,
) -> Result<FidelityHistogram> {
    if n_pairs == 0 {
        return Err(Error::InvalidArgument("n_pairs must be at least 1".into()));
    }
    let mut hist = FidelityHistogram::new(n_bins)?;
    let mut rng = rng_from_seed(seed);
    let p = circuit.n_params();
    let mut a = vec![0.0; p];
    let mut b = vec![0.0; p];
    for _ in 0..n_pairs {
        a.iter_mut().for_each(|x| *x = rng.random::<f64>() * TAU);
        b.iter_mut().for_each(|x| *x = rng.random::<f64>() * TAU);
        let f = fidelity(&circuit.run(&a)?, &circuit.run(&b)?)?;
        hist.add(f);
    }
    Ok(hist)
}

/// `Σ p_k ln(p_k / q_k)` over bins with `p_k > 0`.
pub fn kl_divergence(hist: &FidelityHistogram, haar_masses: &[f64]) -> Result<f64> {
    if hist.counts.len() != haar_masses.len() {
        return Err(Error::DimensionMismatch {
            expected: hist.counts.len(),
            found: haar_masses.len(),
        });
    }
    if hist.n_samples == 0 {
        return Err(Error::InvalidArgument("empty histogram".into()));
    }
    if let Some(q) = haar_masses.iter().find(|&&q| q.is_nan() || q <= 0.0) {
        return Err(Error::InvalidArgument(format!("reference mass {q} is not positive")));
    }
    let kl: f64 = hist
        .probabilities()
        .iter()
        .zip(haar_masses)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p / q).ln())
        .sum();
    // Gibbs' inequality; only rounding can push it below zero.
    Ok(kl.max(0.0))
}

/// Divergence plus the derived `expr_prime`.
pub fn expressibility_from_histogram(
    hist: &FidelityHistogram,
    dim: usize,
    seed: u64,
) -> Result<ExpressibilityResult> {
    let masses = haar_bin_masses(hist.n_bins, dim)?;
    let dkl = kl_divergence(hist, &masses)?;
    let clamped = dkl < DKL_FLOOR;
    Ok(ExpressibilityResult {
        dkl,
        expr_prime: -dkl.max(DKL_FLOOR).log10(),
        n_pairs: hist.n_samples as usize,
        n_bins: hist.n_bins,
        seed,
        clamped,
    })
}

pub fn expressibility(
    circuit: &Circuit,
    n_pairs: usize,
    n_bins: usize,
    seed: u64,
) -> Result<ExpressibilityResult> {
    let hist = sample_fidelity_histogram(circuit, n_pairs, n_bins, seed)?;
    expressibility_from_histogram(&hist, 1 << circuit.n_qubits, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::Circuit;
    use proptest::prelude::*;

    fn identity(n: usize) -> Circuit {
        Circuit::from_gates("id", n, vec![]).unwrap()
    }

    #[test]
    fn haar_pdf_values() {
        assert_eq!(haar_pdf(0.0, 16).unwrap(), 15.0);
        assert_eq!(haar_pdf(1.0, 16).unwrap(), 0.0);
        for f in [0.0, 0.3, 1.0] {
            assert_eq!(haar_pdf(f, 2).unwrap(), 1.0);
        }
        assert!(haar_pdf(0.5, 1).is_err());
    }

    #[test]
    fn haar_masses_small_cases() {
        assert_eq!(haar_bin_masses(1, 16).unwrap(), vec![1.0]);
        assert_eq!(haar_bin_masses(2, 2).unwrap(), vec![0.5, 0.5]);
        let m = haar_bin_masses(75, 16).unwrap();
        assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(m.iter().all(|&x| x > 0.0));
    }

    #[test]
    fn haar_masses_match_quadrature() {
        // Simpson quadrature of the density over each bin.
        let (bins, dim) = (10, 16);
        let m = haar_bin_masses(bins, dim).unwrap();
        for (k, mass) in m.iter().enumerate() {
            let (a, b) = (k as f64 / bins as f64, (k + 1) as f64 / bins as f64);
            let steps = 200;
            let h = (b - a) / steps as f64;
            let mut s = haar_pdf(a, dim).unwrap() + haar_pdf(b, dim).unwrap();
            for i in 1..steps {
                let w = if i % 2 == 1 { 4.0 } else { 2.0 };
                s += w * haar_pdf(a + i as f64 * h, dim).unwrap();
            }
            assert!((s * h / 3.0 - mass).abs() < 1e-10);
        }
    }

    #[test]
    fn binning_edges() {
        let h = FidelityHistogram::new(4).unwrap();
        assert_eq!(h.bin_of(0.0), 0);
        assert_eq!(h.bin_of(0.25), 1);
        assert_eq!(h.bin_of(0.9999), 3);
        assert_eq!(h.bin_of(1.0), 3);
    }

    #[test]
    fn identity_circuit_fills_last_bin() {
        let h = sample_fidelity_histogram(&identity(4), 100, 75, 1).unwrap();
        assert_eq!(h.counts[74], 100);
        assert_eq!(h.counts.iter().sum::<u64>(), 100);
    }

    #[test]
    fn degenerate_histogram_closed_form() {
        let r = expressibility(&identity(4), 50, 75, 0).unwrap();
        // −ln(q_last) with q_last = (1/75)^15
        let expected = 15.0 * 75f64.ln();
        assert!((r.dkl - expected).abs() < 1e-9, "{}", r.dkl);
        assert!((r.expr_prime + expected.log10()).abs() < 1e-12);
        assert!((r.expr_prime + 1.8113).abs() < 1e-3);
        assert!(!r.clamped);
    }

    #[test]
    fn kl_identity_and_mismatch() {
        let q = [0.25, 0.25, 0.5];
        let h = FidelityHistogram {
            n_bins: 3,
            counts: vec![1, 1, 2],
            n_samples: 4,
        };
        assert_eq!(kl_divergence(&h, &q).unwrap(), 0.0);
        assert!(kl_divergence(&h, &q[..2]).is_err());
        let r = expressibility_from_histogram(
            &FidelityHistogram { n_bins: 2, counts: vec![5, 5], n_samples: 10 },
            2,
            0,
        )
        .unwrap();
        assert!(r.clamped);
        assert_eq!(r.expr_prime, 12.0);
    }

    #[test]
    fn sampling_is_deterministic() {
        let c = crate::catalog::default_catalog()[9].instantiate(1).unwrap();
        let a = sample_fidelity_histogram(&c, 200, 75, 42).unwrap();
        let b = sample_fidelity_histogram(&c, 200, 75, 42).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_fidelity_histogram(&c, 200, 75, 43).unwrap());
    }

    proptest! {
        #[test]
        fn masses_sum_to_one(bins in 1usize..200, qubits in 1usize..8) {
            let m = haar_bin_masses(bins, 1 << qubits).unwrap();
            prop_assert!((m.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }

        #[test]
        fn kl_is_nonnegative(counts in prop::collection::vec(0u64..50, 75)) {
            let n: u64 = counts.iter().sum();
            prop_assume!(n > 0);
            let h = FidelityHistogram { n_bins: 75, counts, n_samples: n };
            prop_assert!(kl_divergence(&h, &haar_bin_masses(75, 16).unwrap()).unwrap() >= 0.0);
        }
    }
}
