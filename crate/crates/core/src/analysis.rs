//! Results-level analyses: constrained fronts, the per-cost-axis fronts,
//! redundancy and score tables, design-space surfaces and per-layer centroids.

use serde::{Deserialize, Serialize};
use std::io::Write;

use crate::dse::{
    fit_surface_with_fallback, predict_grid, AxisMap, DesignSpace, DseModel, GridRow, ScoreRegressor,
    TrainingOptions,
};
use crate::error::{Error, Result};
use crate::pareto::{
    annotate, layer_centroids, pareto_front, pearson, redundancy_ranking, CostWeights, LayerCentroid,
    NormalizationContext, Objective, RedundancyEntry,
};
use crate::records::{Field, MetricRecord};

pub const DEFAULT_TOP_K: usize = 10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFront {
    pub name: String,
    pub objectives: Vec<Objective>,
    pub max_cost: Option<f64>,
    pub members: Vec<MetricRecord>,
}

impl NamedFront {
    pub fn labels(&self) -> Vec<String> {
        self.members.iter().map(|r| r.label()).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontsReport {
    pub weights: CostWeights,
    pub normalization: NormalizationContext,
    /// Expressibility vs trainability, unconstrained then one per cost bound.
    pub expr_train: Vec<NamedFront>,
    /// Expressibility vs each raw cost axis.
    pub expr_cost: Vec<NamedFront>,
    /// Labels present on every `expr_cost` front.
    pub on_all_cost_fronts: Vec<String>,
    pub redundancy: Vec<RedundancyEntry>,
    pub top_scores: Vec<MetricRecord>,
    /// Pearson correlation of `expr_prime` with cost, when defined.
    pub expr_cost_correlation: Option<f64>,
}

pub fn constraint_name(max_cost: Option<f64>) -> String {
    match max_cost {
        None => "unconstrained".to_string(),
        Some(c) => format!("cost_le_{c:.2}"),
    }
}

/// Recomputes cost and score with `weights` against `ctx`, then extracts all fronts.
pub fn analyze(
    records: &[MetricRecord],
    ctx: &NormalizationContext,
    weights: &CostWeights,
    constraints: &[f64],
    top_k: usize,
) -> Result<FrontsReport> {
    if records.is_empty() {
        return Err(Error::Results("no records".into()));
    }
    let mut recs = records.to_vec();
    annotate(&mut recs, ctx, weights);
    if let Some(r) = recs.iter().find(|r| !ctx.contains(&r.resources)) {
        log::warn!("{} lies outside the normalization population; its cost may leave [0, 1]", r.label());
    }

    let et = [Objective::max(Field::ExprPrime), Objective::max(Field::Trainability)];
    let mut expr_train = Vec::new();
    for bound in std::iter::once(None).chain(constraints.iter().copied().map(Some)) {
        let members = match bound {
            None => pareto_front(&recs, &et, None)?,
            Some(c) => {
                let pred = move |r: &MetricRecord| r.cost.is_some_and(|x| x <= c);
                pareto_front(&recs, &et, Some(&pred))?
            }
        };
        expr_train.push(NamedFront {
            name: constraint_name(bound),
            objectives: et.to_vec(),
            max_cost: bound,
            members,
        });
    }

    let mut expr_cost = Vec::new();
    for axis in [Field::NParams, Field::NTwoQubit, Field::Depth] {
        let obj = [Objective::min(axis), Objective::max(Field::ExprPrime)];
        expr_cost.push(NamedFront {
            name: format!("expr_vs_{axis}"),
            objectives: obj.to_vec(),
            max_cost: None,
            members: pareto_front(&recs, &obj, None)?,
        });
    }
    let mut on_all: Vec<String> = expr_cost[0].labels();
    on_all.retain(|l| expr_cost.iter().all(|f| f.labels().contains(l)));
    on_all.sort();

    let mut scored: Vec<MetricRecord> = recs.iter().filter(|r| r.score.is_some()).cloned().collect();
    scored.sort_by(|a, b| {
        b.score
            .unwrap()
            .total_cmp(&a.score.unwrap())
            .then_with(|| a.label().cmp(&b.label()))
    });
    scored.truncate(top_k);

    let pairs: Vec<(f64, f64)> = recs.iter().filter_map(|r| Some((r.expr_prime?, r.cost?))).collect();
    let (xs, ys): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
    let expr_cost_correlation = pearson(&xs, &ys).ok();

    Ok(FrontsReport {
        weights: *weights,
        normalization: *ctx,
        expr_train,
        expr_cost,
        on_all_cost_fronts: on_all,
        redundancy: redundancy_ranking(&recs)?,
        top_scores: scored,
        expr_cost_correlation,
    })
}

#[derive(Serialize)]
struct FrontRow<'a> {
    front: &'a str,
    rank: usize,
    circuit_id: &'a str,
    layers: usize,
    n_params: usize,
    n_2q: usize,
    depth: usize,
    expr_prime: Option<f64>,
    trainability: Option<f64>,
    cost: Option<f64>,
    score: Option<f64>,
}

impl<'a> FrontRow<'a> {
    fn new(front: &'a str, rank: usize, r: &'a MetricRecord) -> Self {
        FrontRow {
            front,
            rank,
            circuit_id: &r.circuit_id,
            layers: r.layers,
            n_params: r.resources.n_params,
            n_2q: r.resources.n_two_qubit,
            depth: r.resources.depth,
            expr_prime: r.expr_prime,
            trainability: r.trainability,
            cost: r.cost,
            score: r.score,
        }
    }
}

/// One row per front member, fronts in report order.
pub fn write_front_table<W: Write>(writer: W, fronts: &[NamedFront]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for f in fronts {
        for (i, r) in f.members.iter().enumerate() {
            w.serialize(FrontRow::new(&f.name, i + 1, r))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_score_table<W: Write>(writer: W, top: &[MetricRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for (i, r) in top.iter().enumerate() {
        w.serialize(FrontRow::new("top_score", i + 1, r))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_redundancy_table<W: Write>(writer: W, entries: &[RedundancyEntry]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for e in entries {
        w.serialize(e)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DseOptions {
    pub degree: usize,
    pub resolution: usize,
    pub seed: u64,
    pub axes: AxisMap,
    pub training: TrainingOptions,
}

impl Default for DseOptions {
    fn default() -> Self {
        DseOptions {
            degree: 2,
            resolution: 50,
            seed: crate::pipeline::DEFAULT_SEED,
            axes: AxisMap::default(),
            training: TrainingOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct DseOutput {
    pub model: DseModel,
    pub grids: Vec<(String, Vec<GridRow>)>,
}

/// Surface per expressibility–trainability front, one regressor over every
/// scored record, and a prediction grid per surface.
pub fn run_dse(
    records: &[MetricRecord],
    fronts: &[NamedFront],
    space: &DesignSpace,
    opts: &DseOptions,
) -> Result<DseOutput> {
    let samples = records
        .iter()
        .filter_map(|r| r.score.map(|s| (r, s)))
        .map(|(r, s)| Ok((space.encode_record(r)?, s)))
        .collect::<Result<Vec<_>>>()?;
    let inputs: Vec<[f64; 3]> = samples.iter().map(|(p, _)| p.coords()).collect();
    let targets: Vec<f64> = samples.iter().map(|s| s.1).collect();
    let regressor = ScoreRegressor::train_raw(&inputs, &targets, opts.seed, opts.training)?;

    let mut surfaces = Vec::new();
    let mut grids = Vec::new();
    for f in fronts {
        if f.members.is_empty() {
            return Err(Error::Results(format!("front {} is empty", f.name)));
        }
        let pts = f
            .members
            .iter()
            .map(|r| space.encode_record(r))
            .collect::<Result<Vec<_>>>()?;
        let surface = match fit_surface_with_fallback(&pts, opts.degree, opts.axes) {
            Ok(s) => s,
            Err(e @ (Error::InvalidArgument(_) | Error::RankDeficient(_))) => {
                log::warn!("front {}: no surface ({e}); skipped", f.name);
                continue;
            }
            Err(e) => return Err(e),
        };
        grids.push((f.name.clone(), predict_grid(&regressor, &surface, opts.resolution)?));
        surfaces.push((f.name.clone(), surface));
    }
    if surfaces.is_empty() {
        return Err(Error::Results("no front has enough points for a surface".into()));
    }
    Ok(DseOutput { model: DseModel::new(space, surfaces, regressor), grids })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CentroidSet {
    pub x_field: Field,
    pub y_field: Field,
    pub centroids: Vec<LayerCentroid>,
}

/// Per-layer KDE summaries for `(depth, trainability)` and `(expr_prime, trainability)`.
pub fn centroid_sets(records: &[MetricRecord]) -> Result<Vec<CentroidSet>> {
    [(Field::Depth, Field::Trainability), (Field::ExprPrime, Field::Trainability)]
        .into_iter()
        .map(|(x, y)| {
            Ok(CentroidSet { x_field: x, y_field: y, centroids: layer_centroids(records, x, y)? })
        })
        .collect()
}

/// Plain-text summary of a fronts report.
pub fn render_report(report: &FrontsReport, centroids: &[CentroidSet]) -> String {
    let mut s = String::new();
    let fmt = |v: Option<f64>| v.map_or("-".to_string(), |x| format!("{x:.3}"));
    s.push_str("# PQC design-space report\n\n");
    for f in report.expr_train.iter().chain(&report.expr_cost) {
        s.push_str(&format!("## {} ({} members)\n\n", f.name, f.members.len()));
        s.push_str("| circuit | expr_prime | trainability | cost | score |\n|---|---|---|---|---|\n");
        for r in &f.members {
            s.push_str(&format!(
                "| {} | {} | {} | {} | {} |\n",
                r.label(),
                fmt(r.expr_prime),
                fmt(r.trainability),
                fmt(r.cost),
                fmt(r.score)
            ));
        }
        s.push('\n');
    }
    s.push_str(&format!(
        "On all expressibility-cost fronts: {}\n\n",
        if report.on_all_cost_fronts.is_empty() { "none".to_string() } else { report.on_all_cost_fronts.join(", ") }
    ));
    s.push_str("## Top scores\n\n");
    for (i, r) in report.top_scores.iter().enumerate() {
        s.push_str(&format!("{}. {} {}\n", i + 1, r.label(), fmt(r.score)));
    }
    s.push_str("\n## Most redundant\n\n");
    for e in report.redundancy.iter().take(5) {
        s.push_str(&format!("- {} excess parameters {:.1}\n", e.label, e.redundancy));
    }
    if let Some(c) = report.expr_cost_correlation {
        s.push_str(&format!("\nPearson(expr_prime, cost) = {c:.3}\n"));
    }
    for set in centroids {
        s.push_str(&format!("\n## Layer centroids ({} vs {})\n\n", set.x_field, set.y_field));
        for c in &set.centroids {
            s.push_str(&format!(
                "- L{}: mode ({:.3}, {:.3}), mean ({:.3}, {:.3}), n = {}\n",
                c.layers, c.mode.0, c.mode.1, c.mean.0, c.mean.1, c.n_points
            ));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{default_catalog, ResourceCounts};

    fn synthetic_records() -> Vec<MetricRecord> {
        let cat = default_catalog();
        let mut out = Vec::new();
        for (i, t) in cat.iter().enumerate() {
            for l in 1..=3 {
                let c = t.instantiate(l).unwrap();
                let x = i as f64 / 19.0;
                out.push(MetricRecord {
                    circuit_id: t.id.clone(),
                    layers: l,
                    n_qubits: 4,
                    resources: c.resource_counts(),
                    dkl: None,
                    expr_prime: Some(0.5 + x + 0.2 * l as f64),
                    hamiltonian_id: "tfim".into(),
                    trainability: Some(0.8 - 0.5 * x * x - 0.1 * l as f64 + 0.05 * (i % 3) as f64),
                    cost: None,
                    score: None,
                    seed: 1,
                });
            }
        }
        out
    }

    #[test]
    fn report_shapes() {
        let recs = synthetic_records();
        let ctx = NormalizationContext::from_records(&recs).unwrap();
        let rep = analyze(&recs, &ctx, &CostWeights::default(), &[0.2, 0.1], 5).unwrap();
        let names: Vec<&str> = rep.expr_train.iter().map(|f| f.name.as_str()).collect();
        assert_eq!(names, ["unconstrained", "cost_le_0.20", "cost_le_0.10"]);
        assert_eq!(rep.expr_cost.len(), 3);
        assert_eq!(rep.top_scores.len(), 5);
        for f in &rep.expr_train[1..] {
            assert!(f.members.iter().all(|r| r.cost.unwrap() <= f.max_cost.unwrap()));
        }
        let mut listed = rep.top_scores.iter().chain(rep.expr_train.iter().flat_map(|f| &f.members));
        assert!(listed.all(|r| r.score.is_some()));

        let loose = analyze(&recs, &ctx, &CostWeights::default(), &[1.0], 5).unwrap();
        assert_eq!(loose.expr_train[1].members, loose.expr_train[0].members);

        let mut buf = Vec::new();
        write_front_table(&mut buf, &rep.expr_train).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("front,rank,circuit_id,layers,n_params,n_2q,depth,expr_prime"));
        let md = render_report(&rep, &[]);
        assert!(md.contains("## unconstrained"));
    }

    #[test]
    fn dse_over_synthetic_fronts() {
        let recs = synthetic_records();
        let ctx = NormalizationContext::from_records(&recs).unwrap();
        let space = DesignSpace::new(&default_catalog());
        let opts = DseOptions {
            resolution: 4,
            training: TrainingOptions { epochs: 200, ..Default::default() },
            ..Default::default()
        };
        let mut recs_scored = recs.clone();
        annotate(&mut recs_scored, &ctx, &CostWeights::default());
        let front = NamedFront {
            name: "all".into(),
            objectives: vec![],
            max_cost: None,
            members: recs_scored.clone(),
        };
        let tiny = NamedFront { name: "tiny".into(), members: recs_scored[..2].to_vec(), ..front.clone() };
        let out = run_dse(&recs_scored, &[front, tiny.clone()], &space, &opts).unwrap();
        assert_eq!(out.grids.len(), 1);
        assert_eq!(out.grids[0].1.len(), 16);
        assert_eq!(out.model.surfaces[0].1.degree, 2);
        assert!(run_dse(&recs_scored, &[tiny], &space, &opts).is_err());
    }

    #[test]
    fn centroids_per_layer() {
        let recs = synthetic_records();
        let sets = centroid_sets(&recs).unwrap();
        assert_eq!(sets.len(), 2);
        assert_eq!(sets[0].centroids.len(), 3);
        let r = ResourceCounts { n_params: 1000, n_two_qubit: 0, depth: 1 };
        let ctx = NormalizationContext::from_records(&recs).unwrap();
        assert!(!ctx.contains(&r));
    }
}
