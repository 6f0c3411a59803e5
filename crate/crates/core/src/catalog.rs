//! Layered circuit templates, the catalog file format, and static resource
//! accounting.
//!
//! A template is `prologue + layer_block × L + epilogue`. Every repetition of
//! the layer block receives fresh parameter slots, so slot indices of an
//! instantiated circuit always form the contiguous range `0..n_params`.
//!
//! # Catalog format (version 1)
//!
//! ```toml
//! format_version = 1
//!
//! [[circuits]]
//! id = "A09"
//! n_qubits = 4
//! connectivity = "linear"        # none | linear | circular | all_to_all
//! prologue = []                  # optional, applied once
//! layer_block = [
//!     { kind = "H", qubits = [0] },                 # parametrized defaults to false
//!     { kind = "CZ", qubits = [1, 0], parametrized = false },
//!     { kind = "RX", qubits = [0], parametrized = true },
//! ]
//! epilogue = []                  # optional, applied once
//! ```

use serde::{Deserialize, Serialize};
use std::collections::{BTreeSet, HashSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::statevector::{Gate, GateKind, StateVector};

pub const CATALOG_FORMAT_VERSION: u32 = 1;

const DEFAULT_CATALOG: &str = include_str!("../catalog/default.toml");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Connectivity {
    None,
    Linear,
    Circular,
    AllToAll,
}

impl Connectivity {
    pub fn as_str(self) -> &'static str {
        match self {
            Connectivity::None => "none",
            Connectivity::Linear => "linear",
            Connectivity::Circular => "circular",
            Connectivity::AllToAll => "all_to_all",
        }
    }

    /// Position in the ordering none < linear < circular < all_to_all.
    pub fn ordinal(self) -> usize {
        self as usize
    }

    pub fn from_ordinal(ord: usize) -> Option<Connectivity> {
        [
            Connectivity::None,
            Connectivity::Linear,
            Connectivity::Circular,
            Connectivity::AllToAll,
        ]
        .get(ord)
        .copied()
    }

    /// Whether a two-qubit interaction between `a` and `b` is allowed.
    pub fn allows(self, a: usize, b: usize, n_qubits: usize) -> bool {
        let d = a.abs_diff(b);
        match self {
            Connectivity::None => false,
            Connectivity::Linear => d == 1,
            Connectivity::Circular => d == 1 || (n_qubits > 2 && d == n_qubits - 1),
            Connectivity::AllToAll => a != b,
        }
    }
}

impl fmt::Display for Connectivity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Connectivity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "none" => Ok(Connectivity::None),
            "linear" => Ok(Connectivity::Linear),
            "circular" => Ok(Connectivity::Circular),
            "all_to_all" => Ok(Connectivity::AllToAll),
            _ => Err(Error::Catalog(format!("unknown connectivity {s:?}"))),
        }
    }
}

/// A gate record as written in a catalog file; slots are assigned on
/// instantiation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: String,
    pub qubits: Vec<usize>,
    #[serde(default)]
    pub parametrized: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct TemplateGate {
    kind: GateKind,
    qubits: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CircuitTemplate {
    pub id: String,
    pub n_qubits: usize,
    pub connectivity: Connectivity,
    prologue: Vec<TemplateGate>,
    layer_block: Vec<TemplateGate>,
    epilogue: Vec<TemplateGate>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceCounts {
    pub n_params: usize,
    pub n_two_qubit: usize,
    pub depth: usize,
}

/// A template expanded to a concrete gate list for a given layer count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Circuit {
    pub id: String,
    pub n_qubits: usize,
    pub layers: usize,
    pub connectivity: Connectivity,
    pub gate_set_label: String,
    gates: Vec<Gate>,
    n_params: usize,
}

#[derive(Debug, Deserialize, Serialize)]
struct CatalogDoc {
    format_version: u32,
    #[serde(default)]
    circuits: Vec<TemplateDoc>,
}

#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
struct TemplateDoc {
    id: String,
    n_qubits: usize,
    connectivity: String,
    #[serde(default)]
    prologue: Vec<GateSpec>,
    layer_block: Vec<GateSpec>,
    #[serde(default)]
    epilogue: Vec<GateSpec>,
}

/// Parses and validates a catalog document.
pub fn load_catalog(document: &str) -> Result<Vec<CircuitTemplate>> {
    let doc: CatalogDoc = toml::from_str(document)?;
    if doc.format_version != CATALOG_FORMAT_VERSION {
        return Err(Error::Catalog(format!(
            "unsupported format_version {} (expected {CATALOG_FORMAT_VERSION})",
            doc.format_version
        )));
    }
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(doc.circuits.len());
    for t in doc.circuits {
        if !seen.insert(t.id.clone()) {
            return Err(Error::DuplicateId(t.id));
        }
        out.push(CircuitTemplate::from_doc(t)?);
    }
    Ok(out)
}

pub fn load_catalog_file(path: impl AsRef<Path>) -> Result<Vec<CircuitTemplate>> {
    load_catalog(&std::fs::read_to_string(path)?)
}

/// The built-in 19-template family (`A01`–`A19`, 4 qubits).
pub fn default_catalog() -> Vec<CircuitTemplate> {
    load_catalog(DEFAULT_CATALOG).expect("built-in catalog is valid")
}

pub fn default_catalog_source() -> &'static str {
    DEFAULT_CATALOG
}

/// Sorted, deduplicated gate-set labels of a catalog. Defines `gate_set_ord`.
pub fn gate_set_labels(templates: &[CircuitTemplate]) -> Vec<String> {
    templates
        .iter()
        .map(|t| t.gate_set_label())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect()
}

impl CircuitTemplate {
    fn from_doc(doc: TemplateDoc) -> Result<Self> {
        if doc.n_qubits == 0 || doc.n_qubits > crate::statevector::MAX_QUBITS {
            return Err(Error::Catalog(format!(
                "circuit {}: unsupported n_qubits {}",
                doc.id, doc.n_qubits
            )));
        }
        let connectivity: Connectivity = doc.connectivity.parse()?;
        let convert = |specs: Vec<GateSpec>| -> Result<Vec<TemplateGate>> {
            specs
                .into_iter()
                .map(|s| {
                    let kind: GateKind = s.kind.parse()?;
                    if s.parametrized != kind.is_parametrized() {
                        return Err(Error::MalformedParameter {
                            id: doc.id.clone(),
                            detail: format!(
                                "{kind} declared parametrized = {} but is {}",
                                s.parametrized,
                                if kind.is_parametrized() { "a rotation" } else { "fixed" }
                            ),
                        });
                    }
                    Ok(TemplateGate {
                        kind,
                        qubits: s.qubits,
                    })
                })
                .collect()
        };
        let t = CircuitTemplate {
            prologue: convert(doc.prologue)?,
            layer_block: convert(doc.layer_block)?,
            epilogue: convert(doc.epilogue)?,
            id: doc.id,
            n_qubits: doc.n_qubits,
            connectivity,
        };
        t.validate()?;
        Ok(t)
    }

    fn all_gates(&self) -> impl Iterator<Item = &TemplateGate> {
        self.prologue
            .iter()
            .chain(&self.layer_block)
            .chain(&self.epilogue)
    }

    fn validate(&self) -> Result<()> {
        for g in self.all_gates() {
            Gate::new(g.kind, g.qubits.clone(), g.kind.is_parametrized().then_some(0))
                .validate(self.n_qubits)
                .map_err(|e| Error::Catalog(format!("circuit {}: {e}", self.id)))?;
            if g.kind.is_two_qubit()
                && !self
                    .connectivity
                    .allows(g.qubits[0], g.qubits[1], self.n_qubits)
            {
                return Err(Error::ConnectivityViolation {
                    id: self.id.clone(),
                    gate: g.kind,
                    qubits: g.qubits.clone(),
                    connectivity: self.connectivity.to_string(),
                });
            }
        }
        Ok(())
    }

    /// Canonical label: distinct trainable kinds plus distinct fixed two-qubit
    /// kinds, in gate-kind order, joined by `+`.
    pub fn gate_set_label(&self) -> String {
        let kinds: BTreeSet<GateKind> = self
            .all_gates()
            .map(|g| g.kind)
            .filter(|k| k.is_parametrized() || k.is_two_qubit())
            .collect();
        kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join("+")
    }

    pub fn params_per_layer(&self) -> usize {
        count_params(&self.layer_block)
    }

    /// Expands the template into a concrete circuit with `layers` repetitions.
    pub fn instantiate(&self, layers: usize) -> Result<Circuit> {
        if layers < 1 {
            return Err(Error::InvalidLayers(layers));
        }
        let mut gates = Vec::with_capacity(
            self.prologue.len() + layers * self.layer_block.len() + self.epilogue.len(),
        );
        let mut next_slot = 0;
        let mut push = |block: &[TemplateGate]| {
            for g in block {
                let slot = g.kind.is_parametrized().then(|| {
                    next_slot += 1;
                    next_slot - 1
                });
                gates.push(Gate::new(g.kind, g.qubits.clone(), slot));
            }
        };
        push(&self.prologue);
        for _ in 0..layers {
            push(&self.layer_block);
        }
        push(&self.epilogue);
        Ok(Circuit {
            id: self.id.clone(),
            n_qubits: self.n_qubits,
            layers,
            connectivity: self.connectivity,
            gate_set_label: self.gate_set_label(),
            gates,
            n_params: next_slot,
        })
    }
}

fn count_params(block: &[TemplateGate]) -> usize {
    block.iter().filter(|g| g.kind.is_parametrized()).count()
}

impl Circuit {
    /// Builds a circuit from an explicit gate list. Slots must be a permutation
    /// of `0..n_params`, each used once.
    pub fn from_gates(id: impl Into<String>, n_qubits: usize, gates: Vec<Gate>) -> Result<Self> {
        let id = id.into();
        let mut slots = Vec::new();
        for g in &gates {
            g.validate(n_qubits)?;
            if let Some(s) = g.param_slot {
                slots.push(s);
            }
        }
        slots.sort_unstable();
        if slots.iter().enumerate().any(|(i, &s)| i != s) {
            return Err(Error::MalformedParameter {
                id,
                detail: "parameter slots must be 0..n each used once".into(),
            });
        }
        let kinds: BTreeSet<GateKind> = gates
            .iter()
            .map(|g| g.kind)
            .filter(|k| k.is_parametrized() || k.is_two_qubit())
            .collect();
        let connectivity = if gates.iter().any(|g| g.kind.is_two_qubit()) {
            Connectivity::AllToAll
        } else {
            Connectivity::None
        };
        Ok(Circuit {
            id,
            n_qubits,
            layers: 1,
            connectivity,
            gate_set_label: kinds.iter().map(|k| k.name()).collect::<Vec<_>>().join("+"),
            n_params: slots.len(),
            gates,
        })
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn n_params(&self) -> usize {
        self.n_params
    }

    /// `"A10-L1"`-style label.
    pub fn label(&self) -> String {
        format!("{}-L{}", self.id, self.layers)
    }

    /// Prepares `U(θ)|0…0⟩`.
    pub fn run(&self, theta: &[f64]) -> Result<StateVector> {
        if theta.len() != self.n_params {
            return Err(Error::ParameterCount {
                expected: self.n_params,
                found: theta.len(),
            });
        }
        let mut state = StateVector::zero(self.n_qubits)?;
        self.apply_range(&mut state, 0, self.gates.len(), theta)?;
        Ok(state)
    }

    /// Applies gates `start..end` to `state`.
    pub(crate) fn apply_range(
        &self,
        state: &mut StateVector,
        start: usize,
        end: usize,
        theta: &[f64],
    ) -> Result<()> {
        for g in &self.gates[start..end] {
            state.apply(g, g.param_slot.map(|s| theta[s]))?;
        }
        Ok(())
    }

    pub fn resource_counts(&self) -> ResourceCounts {
        resource_counts(self)
    }
}

/// Runs `template` on `theta`.
pub fn run_circuit(circuit: &Circuit, theta: &[f64]) -> Result<StateVector> {
    circuit.run(theta)
}

/// Parameter count, two-qubit gate count and ASAP depth respecting the listed
/// gate order.
pub fn resource_counts(circuit: &Circuit) -> ResourceCounts {
    ResourceCounts {
        n_params: circuit.n_params,
        n_two_qubit: circuit.gates.iter().filter(|g| g.kind.is_two_qubit()).count(),
        depth: depth(&circuit.gates, circuit.n_qubits),
    }
}

fn depth(gates: &[Gate], n_qubits: usize) -> usize {
    let mut frontier = vec![0usize; n_qubits];
    for g in gates {
        let moment = g.qubits.iter().map(|&q| frontier[q]).max().unwrap_or(0) + 1;
        for &q in &g.qubits {
            frontier[q] = moment;
        }
    }
    frontier.into_iter().max().unwrap_or(0)
}
