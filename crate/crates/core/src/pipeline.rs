//! Catalog-wide evaluation: one expressibility job and one trainability job per
//! `(circuit, layers)`, run on a worker pool and merged in `(id, layers)` order.

use log::info;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::catalog::{default_catalog_source, load_catalog, CircuitTemplate};
use crate::error::{Error, Result};
use crate::expressibility::{expressibility, DEFAULT_BINS, DEFAULT_PAIRS};
use crate::observables::HamiltonianId;
use crate::pareto::{annotate, CostWeights, NormalizationContext};
use crate::records::{records_to_string, MetricRecord};
use crate::seed::job_seed;
use crate::trainability::{trainability, DEFAULT_GRAD_SAMPLES};

pub const RESULTS_FILE: &str = "results.csv";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const NORMALIZATION_FILE: &str = "normalization.json";
pub const DEFAULT_SEED: u64 = 1;

pub const METRIC_EXPRESSIBILITY: &str = "expressibility";
pub const METRIC_TRAINABILITY: &str = "trainability";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    /// `None` selects the built-in catalog.
    pub catalog: Option<PathBuf>,
    pub hamiltonian: HamiltonianId,
    /// When set, every template must have this width.
    pub qubits: Option<usize>,
    pub layers: Vec<usize>,
    pub n_pairs: usize,
    pub n_bins: usize,
    pub n_samples: usize,
    pub seed: u64,
    pub weights: CostWeights,
    pub constraints: Vec<f64>,
    pub out_dir: PathBuf,
    pub threads: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            catalog: None,
            hamiltonian: HamiltonianId::Tfim,
            qubits: None,
            layers: vec![1, 2, 3],
            n_pairs: DEFAULT_PAIRS,
            n_bins: DEFAULT_BINS,
            n_samples: DEFAULT_GRAD_SAMPLES,
            seed: DEFAULT_SEED,
            weights: CostWeights::default(),
            constraints: vec![0.2, 0.1],
            out_dir: PathBuf::from("out"),
            threads: 1,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidArgument(m));
        if self.layers.is_empty() || self.layers.contains(&0) {
            return bad(format!("layers must be positive, got {:?}", self.layers));
        }
        if self.n_pairs == 0 || self.n_bins == 0 {
            return bad("pairs and bins must be positive".into());
        }
        if self.n_samples < 2 {
            return bad(format!("grad-samples must be at least 2, got {}", self.n_samples));
        }
        if self.threads == 0 {
            return bad("threads must be positive".into());
        }
        if self.qubits == Some(0) {
            return bad("qubits must be positive".into());
        }
        if let Some(c) = self.constraints.iter().find(|c| !(0.0..=1.0).contains(*c)) {
            return bad(format!("cost constraint {c} outside [0, 1]"));
        }
        CostWeights::new(self.weights.alpha, self.weights.beta, self.weights.gamma)?;
        Ok(())
    }

    /// Catalog source text and parsed templates.
    pub fn load_catalog(&self) -> Result<(String, Vec<CircuitTemplate>)> {
        let text = match &self.catalog {
            Some(p) => fs::read_to_string(p)?,
            None => default_catalog_source().to_string(),
        };
        let templates = load_catalog(&text)?;
        if let Some(n) = self.qubits {
            if let Some(t) = templates.iter().find(|t| t.n_qubits != n) {
                return Err(Error::InvalidArgument(format!(
                    "--qubits {n} but circuit {} has {} qubits",
                    t.id, t.n_qubits
                )));
            }
        }
        Ok((text, templates))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobSeed {
    pub circuit_id: String,
    pub layers: usize,
    pub metric: String,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool_version: String,
    pub config: RunConfig,
    pub catalog_sha256: String,
    pub results_file: String,
    pub results_sha256: String,
    pub n_records: usize,
    pub job_seeds: Vec<JobSeed>,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone)]
pub struct Evaluation {
    pub records: Vec<MetricRecord>,
    pub normalization: NormalizationContext,
    pub job_seeds: Vec<JobSeed>,
    pub catalog_sha256: String,
}

#[derive(Debug)]
enum JobOutput {
    Expr { dkl: f64, expr_prime: f64 },
    Train(f64),
}

struct Job<'a> {
    template: &'a CircuitTemplate,
    layers: usize,
    metric: &'static str,
    seed: u64,
}

/// Failed run: the error plus every `(id, layers)` row whose jobs completed.
#[derive(Debug)]
pub struct PartialFailure {
    pub error: Error,
    pub completed: Vec<MetricRecord>,
}

/// Runs every job of the configuration. Costs are normalized over the
/// evaluated population; scores use the configured Hamiltonian.
pub fn evaluate(config: &RunConfig) -> std::result::Result<Evaluation, PartialFailure> {
    let fail = |error| PartialFailure { error, completed: vec![] };
    config.validate().map_err(fail)?;
    let (text, templates) = config.load_catalog().map_err(fail)?;
    evaluate_templates(config, &templates, sha256_hex(text.as_bytes()))
}

pub fn evaluate_templates(
    config: &RunConfig,
    templates: &[CircuitTemplate],
    catalog_sha256: String,
) -> std::result::Result<Evaluation, PartialFailure> {
    let fail = |error| PartialFailure { error, completed: vec![] };
    let mut sorted: Vec<&CircuitTemplate> = templates.iter().collect();
    sorted.sort_by(|a, b| a.id.cmp(&b.id));
    let mut layers = config.layers.clone();
    layers.sort_unstable();
    layers.dedup();

    let mut jobs = Vec::new();
    for t in &sorted {
        for &l in &layers {
            for metric in [METRIC_EXPRESSIBILITY, METRIC_TRAINABILITY] {
                jobs.push(Job { template: t, layers: l, metric, seed: job_seed(config.seed, &t.id, l, metric) });
            }
        }
    }
    let job_seeds = jobs
        .iter()
        .map(|j| JobSeed {
            circuit_id: j.template.id.clone(),
            layers: j.layers,
            metric: j.metric.to_string(),
            seed: j.seed,
        })
        .collect();

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.threads)
        .build()
        .map_err(|e| fail(Error::InvalidArgument(format!("thread pool: {e}"))))?;
    let outputs: Vec<Result<JobOutput>> = pool.install(|| jobs.par_iter().map(|j| run_job(config, j)).collect());

    let mut records = Vec::new();
    let mut first_error = None;
    for (pair, out) in jobs.chunks(2).zip(outputs.chunks(2)) {
        let job = &pair[0];
        let mut rec = match job.template.instantiate(job.layers) {
            Ok(c) => MetricRecord {
                circuit_id: c.id.clone(),
                layers: c.layers,
                n_qubits: c.n_qubits,
                resources: c.resource_counts(),
                dkl: None,
                expr_prime: None,
                hamiltonian_id: config.hamiltonian.as_str().to_string(),
                trainability: None,
                cost: None,
                score: None,
                seed: config.seed,
            },
            Err(e) => {
                first_error.get_or_insert(e);
                continue;
            }
        };
        let mut ok = true;
        for o in out {
            match o {
                Ok(JobOutput::Expr { dkl, expr_prime }) => {
                    rec.dkl = Some(*dkl);
                    rec.expr_prime = Some(*expr_prime);
                }
                Ok(JobOutput::Train(v)) => rec.trainability = Some(*v),
                Err(e) => {
                    ok = false;
                    if first_error.is_none() {
                        first_error = Some(Error::Results(format!("{}: {e}", rec.label())));
                    }
                }
            }
        }
        if ok {
            records.push(rec);
        }
    }
    if let Some(error) = first_error {
        return Err(PartialFailure { error, completed: records });
    }
    let normalization = NormalizationContext::from_records(&records).map_err(fail)?;
    annotate(&mut records, &normalization, &config.weights);
    Ok(Evaluation { records, normalization, job_seeds, catalog_sha256 })
}

fn run_job(config: &RunConfig, job: &Job) -> Result<JobOutput> {
    let circuit = job.template.instantiate(job.layers)?;
    let out = match job.metric {
        METRIC_EXPRESSIBILITY => {
            let r = expressibility(&circuit, config.n_pairs, config.n_bins, job.seed)?;
            JobOutput::Expr { dkl: r.dkl, expr_prime: r.expr_prime }
        }
        _ => {
            let obs = config.hamiltonian.build(circuit.n_qubits)?;
            JobOutput::Train(trainability(&circuit, &obs, config.n_samples, job.seed)?.mean_variance)
        }
    };
    info!("{} {}: done", circuit.label(), job.metric);
    Ok(out)
}

/// Runs the evaluation and writes results, normalization and manifest into
/// `config.out_dir`. On failure the completed rows go to `results.csv.partial`.
pub fn run_evaluate(config: &RunConfig) -> Result<Manifest> {
    let start = Instant::now();
    fs::create_dir_all(&config.out_dir)?;
    let results_path = config.out_dir.join(RESULTS_FILE);
    let eval = match evaluate(config) {
        Ok(e) => e,
        Err(PartialFailure { error, completed }) => {
            if !completed.is_empty() {
                let partial = config.out_dir.join(format!("{RESULTS_FILE}.partial"));
                fs::write(&partial, records_to_string(&completed)?)?;
                log::error!("kept {} completed row(s) in {}", completed.len(), partial.display());
            }
            return Err(error);
        }
    };
    let csv = records_to_string(&eval.records)?;
    fs::write(&results_path, &csv)?;
    fs::write(
        config.out_dir.join(NORMALIZATION_FILE),
        serde_json::to_string_pretty(&eval.normalization)?,
    )?;
    let manifest = Manifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config: config.clone(),
        catalog_sha256: eval.catalog_sha256,
        results_file: RESULTS_FILE.to_string(),
        results_sha256: sha256_hex(csv.as_bytes()),
        n_records: eval.records.len(),
        job_seeds: eval.job_seeds,
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    fs::write(config.out_dir.join(MANIFEST_FILE), serde_json::to_string_pretty(&manifest)?)?;
    Ok(manifest)
}

/// Checks a results CSV against the `manifest.json` in the same directory.
pub fn verify_results(results_path: &Path) -> Result<Manifest> {
    let dir = results_path.parent().unwrap_or(Path::new("."));
    let manifest_path = dir.join(MANIFEST_FILE);
    let manifest: Manifest = serde_json::from_str(&fs::read_to_string(&manifest_path).map_err(|e| {
        Error::Results(format!("cannot read manifest {}: {e}", manifest_path.display()))
    })?)?;
    let actual = sha256_hex(&fs::read(results_path)?);
    if actual != manifest.results_sha256 {
        return Err(Error::ChecksumMismatch {
            path: results_path.display().to_string(),
            expected: manifest.results_sha256,
            actual,
        });
    }
    Ok(manifest)
}

/// Normalization context saved next to a results file, if any.
pub fn load_normalization(results_path: &Path) -> Result<Option<NormalizationContext>> {
    let p = results_path.parent().unwrap_or(Path::new(".")).join(NORMALIZATION_FILE);
    if !p.exists() {
        return Ok(None);
    }
    Ok(Some(serde_json::from_str(&fs::read_to_string(p)?)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"
format_version = 1

[[circuits]]
id = "B"
n_qubits = 2
connectivity = "linear"
layer_block = [
  { kind = "RY", qubits = [0], parametrized = true },
  { kind = "RY", qubits = [1], parametrized = true },
  { kind = "CX", qubits = [0, 1] },
]

[[circuits]]
id = "A"
n_qubits = 2
connectivity = "none"
layer_block = [
  { kind = "RX", qubits = [0], parametrized = true },
  { kind = "RX", qubits = [1], parametrized = true },
]
"#;

    fn small_config(dir: &Path, threads: usize) -> RunConfig {
        let cat = dir.join("cat.toml");
        fs::write(&cat, SMALL).unwrap();
        RunConfig {
            catalog: Some(cat),
            layers: vec![2, 1],
            n_pairs: 200,
            n_bins: 20,
            n_samples: 20,
            out_dir: dir.join(format!("out{threads}")),
            threads,
            ..RunConfig::default()
        }
    }

    #[test]
    fn evaluation_sorted_and_annotated() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path(), 2);
        let ev = evaluate(&cfg).unwrap();
        let labels: Vec<String> = ev.records.iter().map(|r| r.label()).collect();
        assert_eq!(labels, ["A-L1", "A-L2", "B-L1", "B-L2"]);
        assert!(ev.records.iter().all(|r| r.cost.is_some() && r.score.is_some()));
        assert_eq!(ev.job_seeds.len(), 8);
        assert_eq!(ev.records[0].cost, Some(0.0));
    }

    #[test]
    fn outputs_independent_of_thread_count() {
        let dir = tempfile::tempdir().unwrap();
        let a = run_evaluate(&small_config(dir.path(), 1)).unwrap();
        let b = run_evaluate(&small_config(dir.path(), 3)).unwrap();
        assert_eq!(a.results_sha256, b.results_sha256);
        let ra = fs::read(dir.path().join("out1").join(RESULTS_FILE)).unwrap();
        let rb = fs::read(dir.path().join("out3").join(RESULTS_FILE)).unwrap();
        assert_eq!(ra, rb);
        verify_results(&dir.path().join("out1").join(RESULTS_FILE)).unwrap();
        assert!(load_normalization(&dir.path().join("out1").join(RESULTS_FILE)).unwrap().is_some());
    }

    #[test]
    fn tampered_results_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = small_config(dir.path(), 1);
        run_evaluate(&cfg).unwrap();
        let p = cfg.out_dir.join(RESULTS_FILE);
        let mut text = fs::read_to_string(&p).unwrap();
        text.push('\n');
        fs::write(&p, text).unwrap();
        assert!(matches!(verify_results(&p), Err(Error::ChecksumMismatch { .. })));
    }

    #[test]
    fn failure_keeps_partial_rows() {
        let dir = tempfile::tempdir().unwrap();
        let cat = dir.path().join("with_c.toml");
        // C has no trainable parameters, so its trainability job fails.
        let doc = format!(
            "{SMALL}\n[[circuits]]\nid = \"C\"\nn_qubits = 2\nconnectivity = \"linear\"\nlayer_block = [ {{ kind = \"CX\", qubits = [0, 1] }} ]\n"
        );
        fs::write(&cat, doc).unwrap();
        let cfg = RunConfig { catalog: Some(cat), ..small_config(dir.path(), 1) };
        let err = run_evaluate(&cfg).unwrap_err();
        assert!(err.to_string().contains("C-L1"), "{err}");
        let partial = fs::read_to_string(cfg.out_dir.join("results.csv.partial")).unwrap();
        assert_eq!(partial.lines().count(), 5);
        assert!(!cfg.out_dir.join(RESULTS_FILE).exists());
    }

    #[test]
    fn config_validation() {
        let ok = RunConfig::default();
        assert!(ok.validate().is_ok());
        assert!(RunConfig { layers: vec![0], ..ok.clone() }.validate().is_err());
        assert!(RunConfig { constraints: vec![1.5], ..ok.clone() }.validate().is_err());
        assert!(RunConfig { threads: 0, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { n_samples: 1, ..ok.clone() }.validate().is_err());
        let wrong_width = RunConfig { qubits: Some(3), ..ok };
        assert!(wrong_width.load_catalog().is_err());
    }
}
