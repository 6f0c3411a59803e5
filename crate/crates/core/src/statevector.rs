//! Dense statevector simulation for small qubit counts.
//!
//! Amplitudes are indexed so that qubit 0 is the most significant bit of the
//! basis-state index: for `n = 2`, index `0b10` is `|10⟩`, i.e. qubit 0 in `|1⟩`.
//!
//! Rotations follow `R_P(θ) = exp(−iθP/2)`. Controlled rotations apply
//! `R_P(θ)` to the target when the control is `|1⟩`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::observables::Observable;

/// Largest register this simulator will allocate.
pub const MAX_QUBITS: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum GateKind {
    H,
    RX,
    RY,
    RZ,
    CX,
    CZ,
    CRX,
    CRZ,
}

impl GateKind {
    pub const ALL: [GateKind; 8] = [
        GateKind::H,
        GateKind::RX,
        GateKind::RY,
        GateKind::RZ,
        GateKind::CX,
        GateKind::CZ,
        GateKind::CRX,
        GateKind::CRZ,
    ];

    pub fn is_parametrized(self) -> bool {
        matches!(
            self,
            GateKind::RX | GateKind::RY | GateKind::RZ | GateKind::CRX | GateKind::CRZ
        )
    }

    pub fn is_two_qubit(self) -> bool {
        matches!(
            self,
            GateKind::CX | GateKind::CZ | GateKind::CRX | GateKind::CRZ
        )
    }

    pub fn arity(self) -> usize {
        if self.is_two_qubit() {
            2
        } else {
            1
        }
    }

    /// Controlled rotations have a generator spectrum `{0, ±1/2}` and need the
    /// four-term shift rule.
    pub fn is_controlled_rotation(self) -> bool {
        matches!(self, GateKind::CRX | GateKind::CRZ)
    }

    pub fn name(self) -> &'static str {
        match self {
            GateKind::H => "H",
            GateKind::RX => "RX",
            GateKind::RY => "RY",
            GateKind::RZ => "RZ",
            GateKind::CX => "CX",
            GateKind::CZ => "CZ",
            GateKind::CRX => "CRX",
            GateKind::CRZ => "CRZ",
        }
    }
}

impl fmt::Display for GateKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GateKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GateKind::ALL
            .iter()
            .copied()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::UnknownGateKind(s.to_string()))
    }
}

/// A gate placed on concrete qubits. Two-qubit gates list `[control, target]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Gate {
    pub kind: GateKind,
    pub qubits: Vec<usize>,
    pub param_slot: Option<usize>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: Vec<usize>, param_slot: Option<usize>) -> Self {
        Gate {
            kind,
            qubits,
            param_slot,
        }
    }

    pub fn fixed(kind: GateKind, qubits: &[usize]) -> Self {
        Gate::new(kind, qubits.to_vec(), None)
    }

    pub fn rotation(kind: GateKind, qubits: &[usize], slot: usize) -> Self {
        Gate::new(kind, qubits.to_vec(), Some(slot))
    }

    /// Checks arity, index range, distinctness and slot presence.
    pub fn validate(&self, n_qubits: usize) -> Result<()> {
        if self.qubits.len() != self.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} expects {} qubit(s), got {:?}",
                self.kind,
                self.kind.arity(),
                self.qubits
            )));
        }
        if let Some(&q) = self.qubits.iter().find(|&&q| q >= n_qubits) {
            return Err(Error::QubitOutOfRange { qubit: q, n_qubits });
        }
        if self.qubits.len() == 2 && self.qubits[0] == self.qubits[1] {
            return Err(Error::InvalidGate(format!(
                "{} control and target coincide on qubit {}",
                self.kind, self.qubits[0]
            )));
        }
        if self.param_slot.is_some() != self.kind.is_parametrized() {
            return Err(Error::InvalidGate(format!(
                "{} must {}carry a parameter slot",
                self.kind,
                if self.kind.is_parametrized() { "" } else { "not " }
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl StateVector {
    /// `|0…0⟩` on `n_qubits` qubits.
    pub fn zero(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(Error::InvalidQubitCount(n_qubits));
        }
        let mut amplitudes = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amplitudes[0] = Complex64::new(1.0, 0.0);
        Ok(StateVector {
            n_qubits,
            amplitudes,
        })
    }

    /// Computational basis state `|index⟩`.
    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let mut s = StateVector::zero(n_qubits)?;
        if index >= s.amplitudes.len() {
            return Err(Error::DimensionMismatch {
                expected: s.amplitudes.len(),
                found: index + 1,
            });
        }
        s.amplitudes[0] = Complex64::new(0.0, 0.0);
        s.amplitudes[index] = Complex64::new(1.0, 0.0);
        Ok(s)
    }

    /// Builds a state from raw amplitudes, normalizing them.
    pub fn from_amplitudes(amplitudes: Vec<Complex64>) -> Result<Self> {
        let len = amplitudes.len();
        if len < 2 || !len.is_power_of_two() {
            return Err(Error::DimensionMismatch {
                expected: len.next_power_of_two().max(2),
                found: len,
            });
        }
        let norm = amplitudes.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 || !norm.is_finite() {
            return Err(Error::InvalidState("zero or non-finite norm".into()));
        }
        Ok(StateVector {
            n_qubits: len.trailing_zeros() as usize,
            amplitudes: amplitudes.into_iter().map(|a| a / norm).collect(),
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Inner product `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> Result<Complex64> {
        if self.n_qubits != other.n_qubits {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    fn bit(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    /// Applies `gate` in place. `theta` must be given exactly for parametrized kinds.
    pub fn apply(&mut self, gate: &Gate, theta: Option<f64>) -> Result<()> {
        if gate.qubits.len() != gate.kind.arity() {
            return Err(Error::InvalidGate(format!(
                "{} expects {} qubit(s)",
                gate.kind,
                gate.kind.arity()
            )));
        }
        if let Some(&q) = gate.qubits.iter().find(|&&q| q >= self.n_qubits) {
            return Err(Error::QubitOutOfRange {
                qubit: q,
                n_qubits: self.n_qubits,
            });
        }
        if gate.qubits.len() == 2 && gate.qubits[0] == gate.qubits[1] {
            return Err(Error::InvalidGate("control equals target".into()));
        }
        match (gate.kind.is_parametrized(), theta) {
            (true, None) => return Err(Error::MissingAngle(gate.kind)),
            (false, Some(_)) => return Err(Error::UnexpectedAngle(gate.kind)),
            _ => {}
        }
        let theta = theta.unwrap_or(0.0);
        match gate.kind {
            GateKind::H => {
                let s = std::f64::consts::FRAC_1_SQRT_2;
                let r = Complex64::new(s, 0.0);
                self.apply_1q(gate.qubits[0], [[r, r], [r, -r]]);
            }
            GateKind::RX => self.apply_1q(gate.qubits[0], rx(theta)),
            GateKind::RY => self.apply_1q(gate.qubits[0], ry(theta)),
            GateKind::RZ => self.apply_1q(gate.qubits[0], rz(theta)),
            GateKind::CX => {
                let x = [[c(0.0), c(1.0)], [c(1.0), c(0.0)]];
                self.apply_controlled(gate.qubits[0], gate.qubits[1], x);
            }
            GateKind::CZ => {
                let mask = self.bit(gate.qubits[0]) | self.bit(gate.qubits[1]);
                for (i, a) in self.amplitudes.iter_mut().enumerate() {
                    if i & mask == mask {
                        *a = -*a;
                    }
                }
            }
            GateKind::CRX => self.apply_controlled(gate.qubits[0], gate.qubits[1], rx(theta)),
            GateKind::CRZ => self.apply_controlled(gate.qubits[0], gate.qubits[1], rz(theta)),
        }
        Ok(())
    }

    fn apply_1q(&mut self, qubit: usize, m: [[Complex64; 2]; 2]) {
        let bit = self.bit(qubit);
        for i in 0..self.amplitudes.len() {
            if i & bit == 0 {
                let j = i | bit;
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    fn apply_controlled(&mut self, control: usize, target: usize, m: [[Complex64; 2]; 2]) {
        let cbit = self.bit(control);
        let tbit = self.bit(target);
        for i in 0..self.amplitudes.len() {
            if i & cbit != 0 && i & tbit == 0 {
                let j = i | tbit;
                let (a0, a1) = (self.amplitudes[i], self.amplitudes[j]);
                self.amplitudes[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amplitudes[j] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }
}

fn c(re: f64) -> Complex64 {
    Complex64::new(re, 0.0)
}

fn rx(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [c(co), Complex64::new(0.0, -s)],
        [Complex64::new(0.0, -s), c(co)],
    ]
}

fn ry(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, co) = (theta / 2.0).sin_cos();
    [[c(co), c(-s)], [c(s), c(co)]]
}

fn rz(theta: f64) -> [[Complex64; 2]; 2] {
    let (s, co) = (theta / 2.0).sin_cos();
    [
        [Complex64::new(co, -s), c(0.0)],
        [c(0.0), Complex64::new(co, s)],
    ]
}

/// Returns a new state with `gate` applied.
pub fn apply_gate(state: &StateVector, gate: &Gate, theta: Option<f64>) -> Result<StateVector> {
    let mut out = state.clone();
    out.apply(gate, theta)?;
    Ok(out)
}

/// `|⟨a|b⟩|²`, clipped to `[0, 1]`.
pub fn fidelity(a: &StateVector, b: &StateVector) -> Result<f64> {
    Ok(a.inner(b)?.norm_sqr().clamp(0.0, 1.0))
}

/// Exact `⟨ψ|O|ψ⟩` for a Pauli-sum observable.
pub fn expectation(state: &StateVector, obs: &Observable) -> Result<f64> {
    Ok(expectation_complex(state, obs)?.re)
}

/// Like [`expectation`] but keeps the imaginary residue, which is zero up to
/// rounding for Hermitian observables.
pub fn expectation_complex(state: &StateVector, obs: &Observable) -> Result<Complex64> {
    if obs.n_qubits() != state.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: state.n_qubits,
            found: obs.n_qubits(),
        });
    }
    let amps = &state.amplitudes;
    let mut total = Complex64::new(0.0, 0.0);
    for term in obs.terms() {
        let (xmask, zmask, n_y) = term.masks();
        // P = i^{n_y} X^{xmask} Z^{zmask}
        let phase = match n_y % 4 {
            0 => Complex64::new(1.0, 0.0),
            1 => Complex64::new(0.0, 1.0),
            2 => Complex64::new(-1.0, 0.0),
            _ => Complex64::new(0.0, -1.0),
        };
        let mut acc = Complex64::new(0.0, 0.0);
        for (i, a) in amps.iter().enumerate() {
            let v = amps[i ^ xmask].conj() * a;
            if (i & zmask).count_ones() % 2 == 1 {
                acc -= v;
            } else {
                acc += v;
            }
        }
        total += phase * acc * term.weight;
    }
    Ok(total)
}
