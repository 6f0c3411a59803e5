//! Parameter-shift gradients and the mean gradient-variance trainability metric.
//!
//! For single-qubit rotations `∂E = [E(θ+π/2) − E(θ−π/2)] / 2`. Controlled
//! rotations have generator eigenvalues `{0, ±1/2}` and use the four-term rule
//! `∂E = c₊[E(θ+π/2) − E(θ−π/2)] − c₋[E(θ+3π/2) − E(θ−3π/2)]`.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_PI_2, SQRT_2, TAU};

use crate::catalog::Circuit;
use crate::error::{Error, Result};
use crate::observables::Observable;
use crate::seed::{compensated_sum, rng_from_seed};
use crate::statevector::{expectation, StateVector};

pub const DEFAULT_GRAD_SAMPLES: usize = 500;

const C_PLUS: f64 = (SQRT_2 + 1.0) / (4.0 * SQRT_2);
const C_MINUS: f64 = (SQRT_2 - 1.0) / (4.0 * SQRT_2);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainabilityResult {
    pub mean_variance: f64,
    pub per_param_variance: Vec<f64>,
    pub n_samples: usize,
    pub hamiltonian_id: String,
    pub seed: u64,
}

/// `E(θ) = ⟨ψ_θ|H|ψ_θ⟩`.
pub fn energy(circuit: &Circuit, obs: &Observable, theta: &[f64]) -> Result<f64> {
    expectation(&circuit.run(theta)?, obs)
}

/// Analytic gradient of `E(θ)` by parameter shift.
pub fn gradient(circuit: &Circuit, obs: &Observable, theta: &[f64]) -> Result<Vec<f64>> {
    if theta.len() != circuit.n_params() {
        return Err(Error::ParameterCount {
            expected: circuit.n_params(),
            found: theta.len(),
        });
    }
    if obs.n_qubits() != circuit.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: circuit.n_qubits,
            found: obs.n_qubits(),
        });
    }
    let gates = circuit.gates();
    let mut grad = vec![0.0; theta.len()];
    let mut prefix = StateVector::zero(circuit.n_qubits)?;
    // Shifted evaluations restart from the cached state just before the gate.
    let shifted = |prefix: &StateVector, idx: usize, angle: f64| -> Result<f64> {
        let mut s = prefix.clone();
        s.apply(&gates[idx], Some(angle))?;
        circuit.apply_range(&mut s, idx + 1, gates.len(), theta)?;
        expectation(&s, obs)
    };
    for (idx, g) in gates.iter().enumerate() {
        if let Some(k) = g.param_slot {
            let t = theta[k];
            let two_term = shifted(&prefix, idx, t + FRAC_PI_2)? - shifted(&prefix, idx, t - FRAC_PI_2)?;
            grad[k] = if g.kind.is_controlled_rotation() {
                let far = shifted(&prefix, idx, t + 3.0 * FRAC_PI_2)?
                    - shifted(&prefix, idx, t - 3.0 * FRAC_PI_2)?;
                C_PLUS * two_term - C_MINUS * far
            } else {
                0.5 * two_term
            };
        }
        prefix.apply(g, g.param_slot.map(|s| theta[s]))?;
    }
    Ok(grad)
}

/// Gradients at `n_samples` parameter vectors drawn uniformly from `[0, 2π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSamples {
    /// `samples[i][k] = ∂_k E(θ⁽ⁱ⁾)`.
    pub samples: Vec<Vec<f64>>,
    pub n_params: usize,
}

impl GradientSamples {
    pub fn draw(circuit: &Circuit, obs: &Observable, n_samples: usize, seed: u64) -> Result<Self> {
        if n_samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 gradient samples, got {n_samples}"
            )));
        }
        let p = circuit.n_params();
        if p == 0 {
            return Err(Error::NoParameters);
        }
        let mut rng = rng_from_seed(seed);
        let mut theta = vec![0.0; p];
        let mut samples = Vec::with_capacity(n_samples);
        for _ in 0..n_samples {
            theta.iter_mut().for_each(|x| *x = rng.random::<f64>() * TAU);
            samples.push(gradient(circuit, obs, &theta)?);
        }
        Ok(GradientSamples { samples, n_params: p })
    }

    fn column(&self, k: usize) -> impl Iterator<Item = f64> + '_ {
        self.samples.iter().map(move |g| g[k])
    }

    /// Uncentered variance `(1/N) Σ_i (∂_k E⁽ⁱ⁾)²` per parameter.
    pub fn mean_square(&self) -> Vec<f64> {
        let n = self.samples.len() as f64;
        (0..self.n_params)
            .map(|k| compensated_sum(self.column(k).map(|g| g * g)) / n)
            .collect()
    }

    /// Sample mean of `∂_k E` per parameter.
    pub fn mean(&self) -> Vec<f64> {
        let n = self.samples.len() as f64;
        (0..self.n_params)
            .map(|k| compensated_sum(self.column(k)) / n)
            .collect()
    }

    /// Fraction of samples with `|∂_k E| ≥ delta`, per parameter.
    pub fn tail_fraction(&self, delta: f64) -> Vec<f64> {
        let n = self.samples.len() as f64;
        (0..self.n_params)
            .map(|k| self.column(k).filter(|g| g.abs() >= delta).count() as f64 / n)
            .collect()
    }
}

/// Mean over parameters of the uncentered gradient variance.
pub fn trainability(
    circuit: &Circuit,
    obs: &Observable,
    n_samples: usize,
    seed: u64,
) -> Result<TrainabilityResult> {
    let samples = GradientSamples::draw(circuit, obs, n_samples, seed)?;
    let per_param_variance = samples.mean_square();
    let mean_variance = compensated_sum(per_param_variance.iter().copied()) / per_param_variance.len() as f64;
    Ok(TrainabilityResult {
        mean_variance,
        per_param_variance,
        n_samples,
        hamiltonian_id: obs.name().to_string(),
        seed,
    })
}

/// Per-parameter sample mean of the derivative; zero in expectation.
pub fn landscape_bias(
    circuit: &Circuit,
    obs: &Observable,
    n_samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    Ok(GradientSamples::draw(circuit, obs, n_samples, seed)?.mean())
}
