//! Per-instance metric rows and the results CSV.
//!
//! Header: `circuit_id,layers,n_qubits,n_params,n_2q,depth,dkl,expr_prime,hamiltonian,trainability,cost,score,seed`.
//! Missing metrics are written as empty fields.

use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use crate::catalog::ResourceCounts;
use crate::error::{Error, Result};

pub const RESULTS_HEADER: [&str; 13] = [
    "circuit_id",
    "layers",
    "n_qubits",
    "n_params",
    "n_2q",
    "depth",
    "dkl",
    "expr_prime",
    "hamiltonian",
    "trainability",
    "cost",
    "score",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRecord {
    pub circuit_id: String,
    pub layers: usize,
    pub n_qubits: usize,
    pub resources: ResourceCounts,
    pub dkl: Option<f64>,
    pub expr_prime: Option<f64>,
    pub hamiltonian_id: String,
    pub trainability: Option<f64>,
    pub cost: Option<f64>,
    pub score: Option<f64>,
    pub seed: u64,
}

impl MetricRecord {
    /// `"A10-L1"`-style label.
    pub fn label(&self) -> String {
        format!("{}-L{}", self.circuit_id, self.layers)
    }

    pub fn get(&self, field: Field) -> Option<f64> {
        match field {
            Field::Layers => Some(self.layers as f64),
            Field::NParams => Some(self.resources.n_params as f64),
            Field::NTwoQubit => Some(self.resources.n_two_qubit as f64),
            Field::Depth => Some(self.resources.depth as f64),
            Field::Dkl => self.dkl,
            Field::ExprPrime => self.expr_prime,
            Field::Trainability => self.trainability,
            Field::Cost => self.cost,
            Field::Score => self.score,
        }
    }
}

/// Numeric columns usable as objectives or plot axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Layers,
    NParams,
    NTwoQubit,
    Depth,
    Dkl,
    ExprPrime,
    Trainability,
    Cost,
    Score,
}

impl Field {
    pub fn as_str(self) -> &'static str {
        match self {
            Field::Layers => "layers",
            Field::NParams => "n_params",
            Field::NTwoQubit => "n_2q",
            Field::Depth => "depth",
            Field::Dkl => "dkl",
            Field::ExprPrime => "expr_prime",
            Field::Trainability => "trainability",
            Field::Cost => "cost",
            Field::Score => "score",
        }
    }
}

impl fmt::Display for Field {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Field {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "layers" => Field::Layers,
            "n_params" => Field::NParams,
            "n_2q" | "n_two_qubit" => Field::NTwoQubit,
            "depth" => Field::Depth,
            "dkl" => Field::Dkl,
            "expr_prime" | "expressibility" => Field::ExprPrime,
            "trainability" => Field::Trainability,
            "cost" => Field::Cost,
            "score" => Field::Score,
            _ => return Err(Error::InvalidArgument(format!("unknown field {s:?}"))),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    circuit_id: String,
    layers: usize,
    n_qubits: usize,
    n_params: usize,
    n_2q: usize,
    depth: usize,
    dkl: Option<f64>,
    expr_prime: Option<f64>,
    hamiltonian: String,
    trainability: Option<f64>,
    cost: Option<f64>,
    score: Option<f64>,
    seed: u64,
}

impl From<&MetricRecord> for Row {
    fn from(r: &MetricRecord) -> Self {
        Row {
            circuit_id: r.circuit_id.clone(),
            layers: r.layers,
            n_qubits: r.n_qubits,
            n_params: r.resources.n_params,
            n_2q: r.resources.n_two_qubit,
            depth: r.resources.depth,
            dkl: r.dkl,
            expr_prime: r.expr_prime,
            hamiltonian: r.hamiltonian_id.clone(),
            trainability: r.trainability,
            cost: r.cost,
            score: r.score,
            seed: r.seed,
        }
    }
}

impl From<Row> for MetricRecord {
    fn from(r: Row) -> Self {
        MetricRecord {
            circuit_id: r.circuit_id,
            layers: r.layers,
            n_qubits: r.n_qubits,
            resources: ResourceCounts {
                n_params: r.n_params,
                n_two_qubit: r.n_2q,
                depth: r.depth,
            },
            dkl: r.dkl,
            expr_prime: r.expr_prime,
            hamiltonian_id: r.hamiltonian,
            trainability: r.trainability,
            cost: r.cost,
            score: r.score,
            seed: r.seed,
        }
    }
}

pub fn write_records<W: Write>(writer: W, records: &[MetricRecord]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(RESULTS_HEADER)?;
    for r in records {
        w.serialize(Row::from(r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn records_to_string(records: &[MetricRecord]) -> Result<String> {
    let mut buf = Vec::new();
    write_records(&mut buf, records)?;
    String::from_utf8(buf).map_err(|e| Error::Results(e.to_string()))
}

/// Reads a results CSV, rejecting files that lack any required column.
pub fn read_records<R: Read>(reader: R) -> Result<Vec<MetricRecord>> {
    let mut rdr = csv::Reader::from_reader(reader);
    let headers = rdr.headers()?.clone();
    let missing: Vec<&str> = RESULTS_HEADER
        .iter()
        .copied()
        .filter(|h| !headers.iter().any(|x| x == *h))
        .collect();
    if !missing.is_empty() {
        return Err(Error::Results(format!("missing columns: {}", missing.join(", "))));
    }
    rdr.deserialize::<Row>()
        .map(|row| Ok(MetricRecord::from(row?)))
        .collect()
}

pub fn read_records_file(path: impl AsRef<Path>) -> Result<Vec<MetricRecord>> {
    read_records(std::fs::File::open(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MetricRecord {
        MetricRecord {
            circuit_id: "A10".into(),
            layers: 1,
            n_qubits: 4,
            resources: ResourceCounts { n_params: 8, n_two_qubit: 4, depth: 6 },
            dkl: Some(0.2366),
            expr_prime: Some(0.626),
            hamiltonian_id: "tfim".into(),
            trainability: Some(0.655),
            cost: None,
            score: Some(0.41),
            seed: 1,
        }
    }

    #[test]
    fn csv_round_trip_with_missing_fields() {
        let text = records_to_string(&[sample()]).unwrap();
        assert!(text.starts_with(&RESULTS_HEADER.join(",")));
        assert!(text.contains(",tfim,0.655,,0.41,1"));
        let back = read_records(text.as_bytes()).unwrap();
        assert_eq!(back, vec![sample()]);
    }

    #[test]
    fn missing_columns_are_reported() {
        let err = read_records("circuit_id,layers\nA01,1\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("n_qubits"));
    }

    #[test]
    fn field_names_parse() {
        for f in [Field::NParams, Field::NTwoQubit, Field::ExprPrime, Field::Trainability, Field::Cost] {
            assert_eq!(f.as_str().parse::<Field>().unwrap(), f);
        }
        assert!("bogus".parse::<Field>().is_err());
    }
}
