//! Resource cost, constrained Pareto fronts, redundancy, scores, correlation
//! and per-layer density centroids.

use log::warn;
use serde::{Deserialize, Serialize};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use crate::catalog::ResourceCounts;
use crate::error::{Error, Result};
use crate::records::{Field, MetricRecord};

/// `(x − min) / (max − min)`, or 0 for a degenerate population.
pub fn normalize(x: f64, bounds: (f64, f64)) -> f64 {
    let (lo, hi) = bounds;
    if hi > lo {
        (x - lo) / (hi - lo)
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CostWeights {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl CostWeights {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Result<Self> {
        let w = [alpha, beta, gamma];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) || w.iter().sum::<f64>() <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "cost weights must be non-negative with a positive sum, got {alpha},{beta},{gamma}"
            )));
        }
        Ok(CostWeights { alpha, beta, gamma })
    }
}

impl Default for CostWeights {
    fn default() -> Self {
        CostWeights {
            alpha: 1.0 / 3.0,
            beta: 1.0 / 3.0,
            gamma: 1.0 / 3.0,
        }
    }
}

impl FromStr for CostWeights {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::InvalidArgument(format!("weights {s:?}: {e}")))?;
        match parts[..] {
            [a, b, c] => CostWeights::new(a, b, c),
            _ => Err(Error::InvalidArgument(format!("expected three weights, got {s:?}"))),
        }
    }
}

/// Min/max of each resource metric over a declared population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationContext {
    pub n_params: (f64, f64),
    pub depth: (f64, f64),
    pub n_two_qubit: (f64, f64),
}

impl NormalizationContext {
    pub fn from_resources<'a, I>(resources: I) -> Result<Self>
    where
        I: IntoIterator<Item = &'a ResourceCounts>,
    {
        let mut it = resources.into_iter().peekable();
        if it.peek().is_none() {
            return Err(Error::InvalidArgument("empty normalization population".into()));
        }
        let mut ctx = NormalizationContext {
            n_params: (f64::INFINITY, f64::NEG_INFINITY),
            depth: (f64::INFINITY, f64::NEG_INFINITY),
            n_two_qubit: (f64::INFINITY, f64::NEG_INFINITY),
        };
        for r in it {
            widen(&mut ctx.n_params, r.n_params as f64);
            widen(&mut ctx.depth, r.depth as f64);
            widen(&mut ctx.n_two_qubit, r.n_two_qubit as f64);
        }
        Ok(ctx)
    }

    pub fn from_records(records: &[MetricRecord]) -> Result<Self> {
        Self::from_resources(records.iter().map(|r| &r.resources))
    }

    /// Whether all three metrics of `r` fall inside the population bounds.
    pub fn contains(&self, r: &ResourceCounts) -> bool {
        let inside = |b: (f64, f64), x: usize| (b.0..=b.1).contains(&(x as f64));
        inside(self.n_params, r.n_params) && inside(self.depth, r.depth) && inside(self.n_two_qubit, r.n_two_qubit)
    }
}

fn widen(b: &mut (f64, f64), x: f64) {
    b.0 = b.0.min(x);
    b.1 = b.1.max(x);
}

/// `α·N(params) + β·N(depth) + γ·N(two-qubit gates)`.
///
/// Values outside the context's bounds yield costs outside `[0, 1]`.
pub fn cost(resources: &ResourceCounts, ctx: &NormalizationContext, w: &CostWeights) -> f64 {
    w.alpha * normalize(resources.n_params as f64, ctx.n_params)
        + w.beta * normalize(resources.depth as f64, ctx.depth)
        + w.gamma * normalize(resources.n_two_qubit as f64, ctx.n_two_qubit)
}

/// Fills `cost` and `score` on every record using `ctx` and `w`.
pub fn annotate(records: &mut [MetricRecord], ctx: &NormalizationContext, w: &CostWeights) {
    for r in records.iter_mut() {
        r.cost = Some(cost(&r.resources, ctx, w));
        r.score = score(r).ok();
    }
}

/// `trainability × expr_prime`.
pub fn score(record: &MetricRecord) -> Result<f64> {
    let t = record.trainability.ok_or(Error::MissingMetric("trainability"))?;
    let e = record.expr_prime.ok_or(Error::MissingMetric("expr_prime"))?;
    Ok(t * e)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Max,
    Min,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Objective {
    pub field: Field,
    pub direction: Direction,
}

impl Objective {
    pub fn max(field: Field) -> Self {
        Objective { field, direction: Direction::Max }
    }

    pub fn min(field: Field) -> Self {
        Objective { field, direction: Direction::Min }
    }
}

impl fmt::Display for Objective {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let d = match self.direction {
            Direction::Max => "max",
            Direction::Min => "min",
        };
        write!(f, "{}:{d}", self.field)
    }
}

impl FromStr for Objective {
    type Err = Error;

    /// `field:max` or `field:min`.
    fn from_str(s: &str) -> Result<Self> {
        let (field, dir) = s
            .split_once(':')
            .ok_or_else(|| Error::InvalidArgument(format!("objective {s:?} must be field:max|min")))?;
        let direction = match dir {
            "max" => Direction::Max,
            "min" => Direction::Min,
            _ => return Err(Error::InvalidArgument(format!("objective direction {dir:?}"))),
        };
        Ok(Objective { field: field.parse()?, direction })
    }
}

/// Whether `a` dominates `b`: at least as good everywhere, strictly better once.
pub fn dominates(a: &[f64], b: &[f64], directions: &[Direction]) -> bool {
    let mut strictly = false;
    for ((&x, &y), d) in a.iter().zip(b).zip(directions) {
        let (x, y) = match d {
            Direction::Max => (x, y),
            Direction::Min => (-x, -y),
        };
        if x < y {
            return false;
        }
        if x > y {
            strictly = true;
        }
    }
    strictly
}

/// Indices of non-dominated points, in input order.
pub fn non_dominated(points: &[Vec<f64>], directions: &[Direction]) -> Vec<usize> {
    (0..points.len())
        .filter(|&i| !points.iter().any(|p| dominates(p, &points[i], directions)))
        .collect()
}

/// Non-dominated subset of the records passing `constraint`, sorted by the
/// first objective (ascending), then the remaining objectives, then label.
pub fn pareto_front(
    records: &[MetricRecord],
    objectives: &[Objective],
    constraint: Option<&dyn Fn(&MetricRecord) -> bool>,
) -> Result<Vec<MetricRecord>> {
    if objectives.is_empty() {
        return Err(Error::InvalidArgument("at least one objective required".into()));
    }
    let feasible: Vec<&MetricRecord> = records
        .iter()
        .filter(|r| constraint.is_none_or(|c| c(r)))
        .collect();
    let points = feasible
        .iter()
        .map(|r| objective_values(r, objectives))
        .collect::<Result<Vec<_>>>()?;
    let directions: Vec<Direction> = objectives.iter().map(|o| o.direction).collect();
    let mut front: Vec<(Vec<f64>, &MetricRecord)> = non_dominated(&points, &directions)
        .into_iter()
        .map(|i| (points[i].clone(), feasible[i]))
        .collect();
    front.sort_by(|(pa, ra), (pb, rb)| {
        pa.iter()
            .zip(pb)
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| *o != Ordering::Equal)
            .unwrap_or(Ordering::Equal)
            .then_with(|| ra.circuit_id.cmp(&rb.circuit_id))
            .then_with(|| ra.layers.cmp(&rb.layers))
            .then_with(|| ra.hamiltonian_id.cmp(&rb.hamiltonian_id))
    });
    Ok(front.into_iter().map(|(_, r)| r.clone()).collect())
}

fn objective_values(r: &MetricRecord, objectives: &[Objective]) -> Result<Vec<f64>> {
    objectives
        .iter()
        .map(|o| {
            r.get(o.field)
                .ok_or_else(|| Error::Results(format!("{} lacks {}", r.label(), o.field)))
        })
        .collect()
}

/// Expressibility against parameter count: the front used for redundancy.
pub fn parameter_front(records: &[MetricRecord]) -> Result<Vec<MetricRecord>> {
    pareto_front(
        records,
        &[Objective::max(Field::ExprPrime), Objective::min(Field::NParams)],
        None,
    )
}

/// Parameter excess of `record` over the linearly interpolated
/// `(expr_prime, n_params)` front at the same expressibility.
///
/// `None` when the front has fewer than two distinct points or the record's
/// expressibility lies outside the front's range.
pub fn redundancy(record: &MetricRecord, front: &[MetricRecord]) -> Option<f64> {
    let e = record.expr_prime?;
    let mut pts: Vec<(f64, f64)> = front
        .iter()
        .filter_map(|r| Some((r.expr_prime?, r.resources.n_params as f64)))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.total_cmp(&b.1)));
    pts.dedup_by(|a, b| a.0 == b.0);
    if pts.len() < 2 || e < pts[0].0 || e > pts[pts.len() - 1].0 {
        return None;
    }
    let seg = pts.windows(2).find(|w| e <= w[1].0)?;
    let (e0, p0) = seg[0];
    let (e1, p1) = seg[1];
    let interp = p0 + (p1 - p0) * (e - e0) / (e1 - e0);
    Some(record.resources.n_params as f64 - interp)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RedundancyEntry {
    pub label: String,
    pub expr_prime: f64,
    pub n_params: usize,
    pub redundancy: f64,
}

/// Redundancy of every record with a defined value, largest first.
pub fn redundancy_ranking(records: &[MetricRecord]) -> Result<Vec<RedundancyEntry>> {
    let front = parameter_front(records)?;
    let mut out: Vec<RedundancyEntry> = records
        .iter()
        .filter_map(|r| {
            Some(RedundancyEntry {
                label: r.label(),
                expr_prime: r.expr_prime?,
                n_params: r.resources.n_params,
                redundancy: redundancy(r, &front)?,
            })
        })
        .collect();
    out.sort_by(|a, b| b.redundancy.total_cmp(&a.redundancy).then_with(|| a.label.cmp(&b.label)));
    Ok(out)
}

/// Sample Pearson correlation.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch { expected: x.len(), found: y.len() });
    }
    if x.len() < 2 {
        return Err(Error::InvalidArgument("pearson needs at least 2 points".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx).powi(2);
        syy += (b - my).powi(2);
    }
    if sxx == 0.0 {
        return Err(Error::ZeroVariance("x"));
    }
    if syy == 0.0 {
        return Err(Error::ZeroVariance("y"));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

pub const KDE_GRID: usize = 100;
const KDE_PAD: f64 = 0.1;

/// Gaussian KDE evaluated on a regular grid. `density[j][i]` is at `(xs[i], ys[j])`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KdeGrid {
    pub xs: Vec<f64>,
    pub ys: Vec<f64>,
    pub density: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerCentroid {
    pub layers: usize,
    pub n_points: usize,
    /// Grid argmax of the density.
    pub mode: (f64, f64),
    /// Density-weighted mean over the grid.
    pub mean: (f64, f64),
    /// Density level enclosing 95% of the grid mass.
    pub level_95: f64,
    pub grid: KdeGrid,
}

/// 2-D Gaussian KDE with Scott's-rule bandwidth (full covariance scaled by `n^(−1/3)`).
pub fn kde_grid(points: &[(f64, f64)], resolution: usize) -> Result<KdeGrid> {
    if points.len() < 2 {
        return Err(Error::InvalidArgument("KDE needs at least 2 points".into()));
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let (mut cxx, mut cxy, mut cyy) = (0.0, 0.0, 0.0);
    for &(x, y) in points {
        cxx += (x - mx) * (x - mx);
        cxy += (x - mx) * (y - my);
        cyy += (y - my) * (y - my);
    }
    let factor2 = n.powf(-1.0 / 3.0);
    cxx *= factor2 / (n - 1.0);
    cxy *= factor2 / (n - 1.0);
    cyy *= factor2 / (n - 1.0);

    let range = |sel: fn(&(f64, f64)) -> f64| {
        let lo = points.iter().map(sel).fold(f64::INFINITY, f64::min);
        let hi = points.iter().map(sel).fold(f64::NEG_INFINITY, f64::max);
        let pad = if hi > lo { KDE_PAD * (hi - lo) } else { 0.5 };
        (lo - pad, hi + pad)
    };
    let (x0, x1) = range(|p| p.0);
    let (y0, y1) = range(|p| p.1);

    // Flat directions get a bandwidth of a few percent of the plotted span.
    let eps_x = (0.02 * (x1 - x0)).powi(2);
    let eps_y = (0.02 * (y1 - y0)).powi(2);
    let mut det = cxx * cyy - cxy * cxy;
    if det <= 1e-12 * (cxx * cyy).max(f64::MIN_POSITIVE) || det <= 0.0 {
        cxx += eps_x;
        cyy += eps_y;
        det = cxx * cyy - cxy * cxy;
    }
    let (ixx, ixy, iyy) = (cyy / det, -cxy / det, cxx / det);
    let norm = 1.0 / (2.0 * std::f64::consts::PI * det.sqrt() * n);

    let lin = |a: f64, b: f64| -> Vec<f64> {
        (0..resolution)
            .map(|i| a + (b - a) * i as f64 / (resolution - 1).max(1) as f64)
            .collect()
    };
    let xs = lin(x0, x1);
    let ys = lin(y0, y1);
    let density = ys
        .iter()
        .map(|&gy| {
            xs.iter()
                .map(|&gx| {
                    points
                        .iter()
                        .map(|&(px, py)| {
                            let (dx, dy) = (gx - px, gy - py);
                            (-0.5 * (ixx * dx * dx + 2.0 * ixy * dx * dy + iyy * dy * dy)).exp()
                        })
                        .sum::<f64>()
                        * norm
                })
                .collect()
        })
        .collect();
    Ok(KdeGrid { xs, ys, density })
}

impl KdeGrid {
    pub fn argmax(&self) -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0, 0);
        for (j, row) in self.density.iter().enumerate() {
            for (i, &d) in row.iter().enumerate() {
                if d > best.0 {
                    best = (d, i, j);
                }
            }
        }
        (self.xs[best.1], self.ys[best.2])
    }

    pub fn weighted_mean(&self) -> (f64, f64) {
        let (mut sw, mut sx, mut sy) = (0.0, 0.0, 0.0);
        for (j, row) in self.density.iter().enumerate() {
            for (i, &d) in row.iter().enumerate() {
                sw += d;
                sx += d * self.xs[i];
                sy += d * self.ys[j];
            }
        }
        (sx / sw, sy / sw)
    }

    /// Highest density level whose super-level set holds at least `mass` of the grid total.
    pub fn level(&self, mass: f64) -> f64 {
        let mut v: Vec<f64> = self.density.iter().flatten().copied().collect();
        v.sort_by(|a, b| b.total_cmp(a));
        let total: f64 = v.iter().sum();
        let mut acc = 0.0;
        for d in &v {
            acc += d;
            if acc >= mass * total {
                return *d;
            }
        }
        v.last().copied().unwrap_or(0.0)
    }
}

/// Per-layer KDE summaries of `(x_field, y_field)`; groups with fewer than two
/// records are skipped.
pub fn layer_centroids(records: &[MetricRecord], x_field: Field, y_field: Field) -> Result<Vec<LayerCentroid>> {
    let mut groups: BTreeMap<usize, Vec<(f64, f64)>> = BTreeMap::new();
    for r in records {
        let x = r.get(x_field).ok_or_else(|| Error::Results(format!("{} lacks {x_field}", r.label())))?;
        let y = r.get(y_field).ok_or_else(|| Error::Results(format!("{} lacks {y_field}", r.label())))?;
        groups.entry(r.layers).or_default().push((x, y));
    }
    let mut out = Vec::new();
    for (layers, pts) in groups {
        if pts.len() < 2 {
            warn!("skipping layer group L={layers}: {} record(s)", pts.len());
            continue;
        }
        let grid = kde_grid(&pts, KDE_GRID)?;
        out.push(LayerCentroid {
            layers,
            n_points: pts.len(),
            mode: grid.argmax(),
            mean: grid.weighted_mean(),
            level_95: grid.level(0.95),
            grid,
        });
    }
    Ok(out)
}
