//! Pauli-sum observables and the three benchmark Hamiltonians.
//!
//! All chains use open boundary conditions.

use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Pauli {
    I,
    X,
    Y,
    Z,
}

impl Pauli {
    fn from_char(c: char) -> Option<Pauli> {
        match c.to_ascii_uppercase() {
            'I' => Some(Pauli::I),
            'X' => Some(Pauli::X),
            'Y' => Some(Pauli::Y),
            'Z' => Some(Pauli::Z),
            _ => None,
        }
    }

    fn as_char(self) -> char {
        match self {
            Pauli::I => 'I',
            Pauli::X => 'X',
            Pauli::Y => 'Y',
            Pauli::Z => 'Z',
        }
    }
}

/// `weight · P_0 ⊗ P_1 ⊗ … ⊗ P_{n−1}`, letter `k` acting on qubit `k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PauliTerm {
    pub weight: f64,
    pub paulis: Vec<Pauli>,
}

impl PauliTerm {
    pub fn new(weight: f64, paulis: Vec<Pauli>) -> Self {
        PauliTerm { weight, paulis }
    }

    /// Parses a string such as `"ZZII"`.
    pub fn parse(weight: f64, s: &str) -> Result<Self> {
        let paulis = s
            .chars()
            .map(|c| Pauli::from_char(c).ok_or_else(|| Error::InvalidPauli(s.to_string())))
            .collect::<Result<Vec<_>>>()?;
        if paulis.is_empty() {
            return Err(Error::InvalidPauli(s.to_string()));
        }
        Ok(PauliTerm::new(weight, paulis))
    }

    /// Single-site operators placed on an otherwise identity string.
    pub fn sites(weight: f64, n_qubits: usize, ops: &[(usize, Pauli)]) -> Self {
        let mut paulis = vec![Pauli::I; n_qubits];
        for &(q, p) in ops {
            paulis[q] = p;
        }
        PauliTerm::new(weight, paulis)
    }

    pub fn label(&self) -> String {
        self.paulis.iter().map(|p| p.as_char()).collect()
    }

    /// `(x_mask, z_mask, n_y)` in the simulator's MSB-first bit convention.
    pub fn masks(&self) -> (usize, usize, usize) {
        let n = self.paulis.len();
        let mut x = 0;
        let mut z = 0;
        let mut n_y = 0;
        for (q, p) in self.paulis.iter().enumerate() {
            let bit = 1 << (n - 1 - q);
            match p {
                Pauli::I => {}
                Pauli::X => x |= bit,
                Pauli::Z => z |= bit,
                Pauli::Y => {
                    x |= bit;
                    z |= bit;
                    n_y += 1;
                }
            }
        }
        (x, z, n_y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observable {
    n_qubits: usize,
    terms: Vec<PauliTerm>,
    name: String,
}

impl Observable {
    /// Generic constructor. Terms on the same Pauli string are merged and
    /// zero-weight results dropped.
    pub fn new(n_qubits: usize, terms: Vec<PauliTerm>) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::InvalidQubitCount(0));
        }
        let mut merged: BTreeMap<Vec<Pauli>, f64> = BTreeMap::new();
        let mut order = Vec::new();
        for t in terms {
            if t.paulis.len() != n_qubits {
                return Err(Error::InvalidObservable(format!(
                    "term {} has length {}, expected {}",
                    t.label(),
                    t.paulis.len(),
                    n_qubits
                )));
            }
            if !t.weight.is_finite() {
                return Err(Error::InvalidObservable(format!("non-finite weight on {}", t.label())));
            }
            if !merged.contains_key(&t.paulis) {
                order.push(t.paulis.clone());
            }
            *merged.entry(t.paulis).or_insert(0.0) += t.weight;
        }
        let terms = order
            .into_iter()
            .filter_map(|p| {
                let w = merged[&p];
                (w != 0.0).then(|| PauliTerm::new(w, p))
            })
            .collect();
        Ok(Observable {
            n_qubits,
            terms,
            name: "custom".into(),
        })
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn terms(&self) -> &[PauliTerm] {
        &self.terms
    }

    /// Multiplies every weight by `factor`.
    pub fn scaled(&self, factor: f64) -> Observable {
        Observable {
            n_qubits: self.n_qubits,
            terms: self
                .terms
                .iter()
                .map(|t| PauliTerm::new(t.weight * factor, t.paulis.clone()))
                .filter(|t| t.weight != 0.0)
                .collect(),
            name: self.name.clone(),
        }
    }
}

/// `−J Σ Z_i Z_{i+1} − h Σ X_i`.
pub fn tfim(n: usize, j: f64, h: f64) -> Result<Observable> {
    if n < 2 {
        return Err(Error::InvalidObservable(format!("tfim needs n >= 2, got {n}")));
    }
    let mut terms: Vec<PauliTerm> = (0..n - 1)
        .map(|i| PauliTerm::sites(-j, n, &[(i, Pauli::Z), (i + 1, Pauli::Z)]))
        .collect();
    terms.extend((0..n).map(|i| PauliTerm::sites(-h, n, &[(i, Pauli::X)])));
    Ok(Observable::new(n, terms)?.with_name("tfim"))
}

/// `Σ (X_i X_{i+1} + Y_i Y_{i+1} + Z_i Z_{i+1})`.
pub fn heisenberg(n: usize) -> Result<Observable> {
    if n < 2 {
        return Err(Error::InvalidObservable(format!("heisenberg needs n >= 2, got {n}")));
    }
    let terms = (0..n - 1)
        .flat_map(|i| {
            [Pauli::X, Pauli::Y, Pauli::Z]
                .map(|p| PauliTerm::sites(1.0, n, &[(i, p), (i + 1, p)]))
        })
        .collect();
    Ok(Observable::new(n, terms)?.with_name("heisenberg"))
}

/// `Σ X_i`.
pub fn local_x(n: usize) -> Result<Observable> {
    let terms = (0..n).map(|i| PauliTerm::sites(1.0, n, &[(i, Pauli::X)])).collect();
    Ok(Observable::new(n, terms)?.with_name("localx"))
}

/// Selector used on the command line and in result files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HamiltonianId {
    Tfim,
    Heisenberg,
    LocalX,
}

impl HamiltonianId {
    pub fn as_str(self) -> &'static str {
        match self {
            HamiltonianId::Tfim => "tfim",
            HamiltonianId::Heisenberg => "heisenberg",
            HamiltonianId::LocalX => "localx",
        }
    }

    /// Builds the observable; TFIM uses `J = h = 1`.
    pub fn build(self, n_qubits: usize) -> Result<Observable> {
        match self {
            HamiltonianId::Tfim => tfim(n_qubits, 1.0, 1.0),
            HamiltonianId::Heisenberg => heisenberg(n_qubits),
            HamiltonianId::LocalX => local_x(n_qubits),
        }
    }
}

impl fmt::Display for HamiltonianId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for HamiltonianId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tfim" => Ok(HamiltonianId::Tfim),
            "heisenberg" => Ok(HamiltonianId::Heisenberg),
            "localx" | "local-x" => Ok(HamiltonianId::LocalX),
            _ => Err(Error::UnknownHamiltonian(s.to_string())),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statevector::{expectation, StateVector};
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn labels(o: &Observable) -> Vec<(f64, String)> {
        o.terms().iter().map(|t| (t.weight, t.label())).collect()
    }

    #[test]
    fn tfim_terms() {
        let o = tfim(4, 1.0, 1.0).unwrap();
        assert_eq!(o.terms().len(), 7);
        assert_eq!(
            labels(&o),
            vec![
                (-1.0, "ZZII".into()),
                (-1.0, "IZZI".into()),
                (-1.0, "IIZZ".into()),
                (-1.0, "XIII".into()),
                (-1.0, "IXII".into()),
                (-1.0, "IIXI".into()),
                (-1.0, "IIIX".into()),
            ]
        );
        assert_eq!(labels(&tfim(2, 1.0, 0.0).unwrap()), vec![(-1.0, "ZZ".into())]);
        assert!(tfim(1, 1.0, 1.0).is_err());
    }

    #[test]
    fn heisenberg_and_local_x_terms() {
        assert_eq!(heisenberg(4).unwrap().terms().len(), 9);
        assert!(heisenberg(1).is_err());
        assert_eq!(labels(&local_x(1).unwrap()), vec![(1.0, "X".into())]);
        assert_eq!(local_x(4).unwrap().terms().len(), 4);
    }

    #[test]
    fn duplicate_strings_are_merged() {
        let o = Observable::new(
            2,
            vec![
                PauliTerm::parse(0.5, "ZZ").unwrap(),
                PauliTerm::parse(1.5, "ZZ").unwrap(),
                PauliTerm::parse(1.0, "XI").unwrap(),
                PauliTerm::parse(-1.0, "XI").unwrap(),
            ],
        )
        .unwrap();
        assert_eq!(labels(&o), vec![(2.0, "ZZ".into())]);
        assert!(Observable::new(2, vec![PauliTerm::parse(1.0, "Z").unwrap()]).is_err());
        assert!(PauliTerm::parse(1.0, "ZQ").is_err());
    }

    #[test]
    fn selector_parsing() {
        assert_eq!("tfim".parse::<HamiltonianId>().unwrap(), HamiltonianId::Tfim);
        assert_eq!("localx".parse::<HamiltonianId>().unwrap(), HamiltonianId::LocalX);
        assert!("ising".parse::<HamiltonianId>().is_err());
    }

    proptest! {
        #[test]
        fn tfim_zero_coupling_is_negated_local_x(
            amps in prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 16),
            h in -2.0f64..2.0,
        ) {
            if let Ok(s) = StateVector::from_amplitudes(amps.into_iter().map(|(r, i)| Complex64::new(r, i)).collect()) {
                let a = expectation(&s, &tfim(4, 0.0, h).unwrap()).unwrap();
                let b = expectation(&s, &local_x(4).unwrap().scaled(-h)).unwrap();
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
