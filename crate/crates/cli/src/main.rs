use clap::{Args, Parser, Subcommand};
use log::{error, info, warn};
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use pqc_dse::analysis::{
    analyze, centroid_sets, render_report, run_dse, write_front_table, write_redundancy_table, write_score_table,
    DseOptions, FrontsReport, DEFAULT_TOP_K,
};
use pqc_dse::catalog::gate_set_labels;
use pqc_dse::dse::{write_grid, AxisMap, DesignSpace, TrainingOptions};
use pqc_dse::expressibility::{DEFAULT_BINS, DEFAULT_PAIRS};
use pqc_dse::pareto::annotate;
use pqc_dse::pipeline::{load_normalization, run_evaluate, verify_results, RunConfig, DEFAULT_SEED};
use pqc_dse::records::read_records_file;
use pqc_dse::trainability::DEFAULT_GRAD_SAMPLES;
use pqc_dse::{CostWeights, Error, HamiltonianId, MetricRecord, NormalizationContext, Result};

const EXIT_RUNTIME: u8 = 1;
const EXIT_USAGE: u8 = 2;

/// `println!` that reports a closed stdout instead of panicking.
macro_rules! out {
    ($($t:tt)*) => {
        writeln!(std::io::stdout(), $($t)*)?
    };
}

#[derive(Parser)]
#[command(name = "pqc-dse", version, about = "Expressibility, trainability and cost analysis of layered PQCs")]
struct Cli {
    /// Only print warnings and errors.
    #[arg(short, long, global = true)]
    quiet: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a catalog and print per-instance resource counts.
    ValidateCatalog {
        #[arg(long)]
        catalog: Option<PathBuf>,
        #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
        layers: Vec<usize>,
    },
    /// Compute expressibility and trainability for every catalog instance.
    Evaluate(EvaluateArgs),
    /// Extract constrained and per-cost-axis Pareto fronts.
    Pareto(ParetoArgs),
    /// Rank instances by parameter redundancy.
    Redundancy(ResultsArgs),
    /// Fit design-space surfaces and the score regressor.
    Dse(DseArgs),
    /// Write a text summary and per-layer centroids.
    Report(ParetoArgs),
}

#[derive(Args)]
struct EvaluateArgs {
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value = "tfim")]
    hamiltonian: HamiltonianId,
    #[arg(long)]
    qubits: Option<usize>,
    #[arg(long, value_delimiter = ',', default_value = "1,2,3")]
    layers: Vec<usize>,
    #[arg(long, default_value_t = DEFAULT_PAIRS)]
    pairs: usize,
    #[arg(long, default_value_t = DEFAULT_BINS)]
    bins: usize,
    #[arg(long, default_value_t = DEFAULT_GRAD_SAMPLES)]
    grad_samples: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Cost weights alpha,beta,gamma for parameters, depth and two-qubit gates.
    #[arg(long)]
    weights: Option<CostWeights>,
    /// Cost bound; repeat for several.
    #[arg(long)]
    constraint: Vec<f64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ResultsArgs {
    /// Results CSV written by `evaluate`.
    #[arg(long)]
    results: PathBuf,
    /// Accept a results file without a matching manifest.
    #[arg(long)]
    skip_checksum: bool,
    #[arg(long)]
    weights: Option<CostWeights>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ParetoArgs {
    #[command(flatten)]
    results: ResultsArgs,
    #[arg(long)]
    constraint: Vec<f64>,
    #[arg(long, default_value_t = DEFAULT_TOP_K)]
    top_k: usize,
}

#[derive(Args)]
struct DseArgs {
    #[command(flatten)]
    results: ResultsArgs,
    /// fronts.json written by `pareto`.
    #[arg(long)]
    fronts: PathBuf,
    #[arg(long)]
    catalog: Option<PathBuf>,
    #[arg(long, default_value_t = 2)]
    degree: usize,
    #[arg(long, default_value_t = 50)]
    resolution: usize,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Surface axes as x,y,z over layers, connectivity and gate_set.
    #[arg(long, default_value = "layers,connectivity,gate_set")]
    axes: AxisMap,
    #[arg(long, default_value_t = pqc_dse::dse::DEFAULT_EPOCHS)]
    epochs: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new()
        .filter_level(if cli.quiet { log::LevelFilter::Warn } else { log::LevelFilter::Info })
        .format_timestamp(None)
        .init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Io(e)) if e.kind() == std::io::ErrorKind::BrokenPipe => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::InvalidArgument(_) | Error::UnknownHamiltonian(_) => EXIT_USAGE,
        _ => EXIT_RUNTIME,
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::ValidateCatalog { catalog, layers } => validate_catalog(catalog, &layers),
        Command::Evaluate(a) => evaluate(a),
        Command::Pareto(a) => pareto(a),
        Command::Redundancy(a) => redundancy(a),
        Command::Dse(a) => dse(a),
        Command::Report(a) => report(a),
    }
}

fn validate_catalog(catalog: Option<PathBuf>, layers: &[usize]) -> Result<()> {
    let cfg = RunConfig { catalog, layers: layers.to_vec(), ..RunConfig::default() };
    cfg.validate()?;
    let (_, templates) = cfg.load_catalog()?;
    let labels = gate_set_labels(&templates);
    out!("circuit_id,layers,n_qubits,connectivity,gate_set,gate_set_ord,n_params,n_2q,depth");
    for t in &templates {
        let label = t.gate_set_label();
        let ord = labels.iter().position(|l| *l == label).unwrap_or_default();
        for &l in layers {
            let c = t.instantiate(l)?;
            let r = c.resource_counts();
            out!(
                "{},{},{},{},{},{},{},{},{}",
                t.id, l, t.n_qubits, t.connectivity, label, ord, r.n_params, r.n_two_qubit, r.depth
            );
        }
    }
    info!("{} circuit(s) valid", templates.len());
    Ok(())
}

fn evaluate(a: EvaluateArgs) -> Result<()> {
    let cfg = RunConfig {
        catalog: a.catalog,
        hamiltonian: a.hamiltonian,
        qubits: a.qubits,
        layers: a.layers,
        n_pairs: a.pairs,
        n_bins: a.bins,
        n_samples: a.grad_samples,
        seed: a.seed,
        weights: a.weights.unwrap_or_default(),
        constraints: if a.constraint.is_empty() { RunConfig::default().constraints } else { a.constraint },
        out_dir: a.out,
        threads: a.threads,
    };
    cfg.validate()?;
    let m = run_evaluate(&cfg)?;
    info!(
        "wrote {} record(s) to {} in {:.1}s",
        m.n_records,
        cfg.out_dir.join(&m.results_file).display(),
        m.wall_time_secs
    );
    Ok(())
}

/// Records with cost and score recomputed, plus the context used.
fn load_results(a: &ResultsArgs) -> Result<(Vec<MetricRecord>, NormalizationContext, CostWeights)> {
    let manifest = if a.skip_checksum {
        warn!("skipping checksum validation of {}", a.results.display());
        None
    } else {
        Some(verify_results(&a.results)?)
    };
    let mut records = read_records_file(&a.results)?;
    let ctx = match load_normalization(&a.results)? {
        Some(c) => c,
        None => NormalizationContext::from_records(&records)?,
    };
    let weights = a
        .weights
        .or(manifest.map(|m| m.config.weights))
        .unwrap_or_default();
    annotate(&mut records, &ctx, &weights);
    Ok((records, ctx, weights))
}

fn out_dir(a: &ResultsArgs) -> Result<PathBuf> {
    let dir = a
        .out
        .clone()
        .unwrap_or_else(|| a.results.parent().map(Path::to_path_buf).unwrap_or_default());
    fs::create_dir_all(&dir)?;
    Ok(dir)
}

fn constraints_or_default(c: &[f64]) -> Result<Vec<f64>> {
    if let Some(x) = c.iter().find(|x| !(0.0..=1.0).contains(*x)) {
        return Err(Error::InvalidArgument(format!("cost constraint {x} outside [0, 1]")));
    }
    Ok(if c.is_empty() { RunConfig::default().constraints } else { c.to_vec() })
}

fn build_report(a: &ParetoArgs) -> Result<(Vec<MetricRecord>, FrontsReport, PathBuf)> {
    let constraints = constraints_or_default(&a.constraint)?;
    let (records, ctx, weights) = load_results(&a.results)?;
    let rep = analyze(&records, &ctx, &weights, &constraints, a.top_k)?;
    Ok((records, rep, out_dir(&a.results)?))
}

fn pareto(a: ParetoArgs) -> Result<()> {
    let (_, rep, dir) = build_report(&a)?;
    fs::write(dir.join("fronts.json"), serde_json::to_string_pretty(&rep)?)?;
    write_front_table(fs::File::create(dir.join("fronts_expr_train.csv"))?, &rep.expr_train)?;
    write_front_table(fs::File::create(dir.join("fronts_expr_cost.csv"))?, &rep.expr_cost)?;
    write_score_table(fs::File::create(dir.join("top_scores.csv"))?, &rep.top_scores)?;
    write_redundancy_table(fs::File::create(dir.join("redundancy.csv"))?, &rep.redundancy)?;
    for f in rep.expr_train.iter().chain(&rep.expr_cost) {
        out!("{}: {}", f.name, f.labels().join(" "));
    }
    Ok(())
}

fn redundancy(a: ResultsArgs) -> Result<()> {
    let (records, _, _) = load_results(&a)?;
    let ranking = pqc_dse::pareto::redundancy_ranking(&records)?;
    write_redundancy_table(fs::File::create(out_dir(&a)?.join("redundancy.csv"))?, &ranking)?;
    for e in &ranking {
        out!("{} {:.2}", e.label, e.redundancy);
    }
    Ok(())
}

fn dse(a: DseArgs) -> Result<()> {
    let (records, _, _) = load_results(&a.results)?;
    let fronts: FrontsReport = serde_json::from_str(&fs::read_to_string(&a.fronts)?)?;
    let cfg = RunConfig { catalog: a.catalog.clone(), ..RunConfig::default() };
    let (_, templates) = cfg.load_catalog()?;
    let space = DesignSpace::new(&templates);
    if a.degree == 0 || a.resolution == 0 {
        return Err(Error::InvalidArgument("degree and resolution must be positive".into()));
    }
    let opts = DseOptions {
        degree: a.degree,
        resolution: a.resolution,
        seed: a.seed,
        axes: a.axes,
        training: TrainingOptions { epochs: a.epochs, ..TrainingOptions::default() },
    };
    let out = run_dse(&records, &fronts.expr_train, &space, &opts)?;
    let dir = out_dir(&a.results)?;
    fs::write(dir.join("dse_model.json"), out.model.to_json()?)?;
    for (name, rows) in &out.grids {
        write_grid(fs::File::create(dir.join(format!("grid_{name}.csv")))?, rows)?;
    }
    for (name, s) in &out.model.surfaces {
        out!("{name}: degree {} residual_rms {:.4} over {} point(s)", s.degree, s.residual_rms, s.n_points);
    }
    out!("regressor training mse {:.3e}", out.model.regressor.training_mse);
    Ok(())
}

fn report(a: ParetoArgs) -> Result<()> {
    let (records, rep, dir) = build_report(&a)?;
    let centroids = centroid_sets(&records)?;
    fs::write(dir.join("centroids.json"), serde_json::to_string_pretty(&centroids)?)?;
    let text = render_report(&rep, &centroids);
    fs::write(dir.join("report.md"), &text)?;
    write!(std::io::stdout(), "{text}")?;
    Ok(())
}
