//! Design-space encoding, polynomial Pareto surfaces and the MLP score regressor.
//!
//! A circuit instance maps to three integer coordinates: layer count,
//! connectivity ordinal (none=0, linear=1, circular=2, all_to_all=3) and the
//! index of its gate-set label in the catalog's sorted label list.
//!
//! The regressor always takes the coordinates in that order, standardized.
//! Surfaces fit one coordinate as a polynomial of the other two; the default
//! mapping is x = layers, y = connectivity, z = gate set.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::catalog::{gate_set_labels, Circuit, CircuitTemplate, Connectivity};
use crate::error::{Error, Result};
use crate::records::MetricRecord;
use crate::seed::rng_from_seed;

/// Version tag written into serialized surfaces and regressors.
pub const MODEL_FORMAT_VERSION: u32 = 1;

pub const HIDDEN: usize = 32;
pub const DEFAULT_EPOCHS: usize = 5000;
pub const DEFAULT_LEARNING_RATE: f64 = 0.01;

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DesignPoint {
    pub circuit_id: String,
    pub layers: usize,
    pub connectivity_ord: usize,
    pub gate_set_ord: usize,
}

impl DesignPoint {
    /// `[layers, connectivity_ord, gate_set_ord]`.
    pub fn coords(&self) -> [f64; 3] {
        [self.layers as f64, self.connectivity_ord as f64, self.gate_set_ord as f64]
    }

    pub fn get(&self, axis: Axis) -> f64 {
        self.coords()[axis.index()]
    }
}

/// Encoder built from a loaded catalog.
#[derive(Debug, Clone)]
pub struct DesignSpace {
    templates: Vec<CircuitTemplate>,
    labels: Vec<String>,
}

impl DesignSpace {
    pub fn new(templates: &[CircuitTemplate]) -> Self {
        DesignSpace {
            templates: templates.to_vec(),
            labels: gate_set_labels(templates),
        }
    }

    /// Sorted distinct gate-set labels; position is the ordinal.
    pub fn gate_set_labels(&self) -> &[String] {
        &self.labels
    }

    pub fn gate_set_ord(&self, label: &str) -> Result<usize> {
        self.labels
            .binary_search_by(|l| l.as_str().cmp(label))
            .map_err(|_| Error::InvalidArgument(format!("gate set {label:?} not in the catalog")))
    }

    pub fn encode(&self, circuit: &Circuit) -> Result<DesignPoint> {
        Ok(DesignPoint {
            circuit_id: circuit.id.clone(),
            layers: circuit.layers,
            connectivity_ord: circuit.connectivity.ordinal(),
            gate_set_ord: self.gate_set_ord(&circuit.gate_set_label)?,
        })
    }

    pub fn encode_template(&self, template: &CircuitTemplate, layers: usize) -> Result<DesignPoint> {
        Ok(DesignPoint {
            circuit_id: template.id.clone(),
            layers,
            connectivity_ord: template.connectivity.ordinal(),
            gate_set_ord: self.gate_set_ord(&template.gate_set_label())?,
        })
    }

    /// Looks the record's circuit up by id.
    pub fn encode_record(&self, record: &MetricRecord) -> Result<DesignPoint> {
        let t = self
            .templates
            .iter()
            .find(|t| t.id == record.circuit_id)
            .ok_or_else(|| Error::Catalog(format!("circuit {} not in the catalog", record.circuit_id)))?;
        self.encode_template(t, record.layers)
    }

    /// `(layers, connectivity, gate-set label)` of a point.
    pub fn decode(&self, p: &DesignPoint) -> Result<(usize, Connectivity, String)> {
        let conn = Connectivity::from_ordinal(p.connectivity_ord)
            .ok_or_else(|| Error::InvalidArgument(format!("connectivity ordinal {}", p.connectivity_ord)))?;
        let label = self
            .labels
            .get(p.gate_set_ord)
            .ok_or_else(|| Error::InvalidArgument(format!("gate-set ordinal {}", p.gate_set_ord)))?;
        Ok((p.layers, conn, label.clone()))
    }

    /// Catalog templates sharing the point's connectivity and gate set.
    pub fn templates_at(&self, p: &DesignPoint) -> Result<Vec<&CircuitTemplate>> {
        let (_, conn, label) = self.decode(p)?;
        Ok(self
            .templates
            .iter()
            .filter(|t| t.connectivity == conn && t.gate_set_label() == label)
            .collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    Layers,
    Connectivity,
    GateSet,
}

impl Axis {
    pub fn index(self) -> usize {
        match self {
            Axis::Layers => 0,
            Axis::Connectivity => 1,
            Axis::GateSet => 2,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Axis::Layers => "layers",
            Axis::Connectivity => "connectivity",
            Axis::GateSet => "gate_set",
        }
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "layers" | "l" => Ok(Axis::Layers),
            "connectivity" | "c" => Ok(Axis::Connectivity),
            "gate_set" | "gateset" | "g" => Ok(Axis::GateSet),
            _ => Err(Error::InvalidArgument(format!("unknown axis {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AxisMap {
    pub x: Axis,
    pub y: Axis,
    pub z: Axis,
}

impl AxisMap {
    pub fn new(x: Axis, y: Axis, z: Axis) -> Result<Self> {
        if x == y || y == z || x == z {
            return Err(Error::InvalidArgument("axis mapping must use each coordinate once".into()));
        }
        Ok(AxisMap { x, y, z })
    }

    pub fn project(&self, p: &DesignPoint) -> (f64, f64, f64) {
        (p.get(self.x), p.get(self.y), p.get(self.z))
    }

    /// Inverse of [`project`](Self::project) into `[layers, connectivity, gate_set]` order.
    pub fn unproject(&self, x: f64, y: f64, z: f64) -> [f64; 3] {
        let mut c = [0.0; 3];
        c[self.x.index()] = x;
        c[self.y.index()] = y;
        c[self.z.index()] = z;
        c
    }
}

impl Default for AxisMap {
    fn default() -> Self {
        AxisMap { x: Axis::Layers, y: Axis::Connectivity, z: Axis::GateSet }
    }
}

impl fmt::Display for AxisMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.x.as_str(), self.y.as_str(), self.z.as_str())
    }
}

impl FromStr for AxisMap {
    type Err = Error;

    /// `x,y,z`, e.g. `layers,connectivity,gate_set`.
    fn from_str(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        match parts[..] {
            [x, y, z] => AxisMap::new(x.parse()?, y.parse()?, z.parse()?),
            _ => Err(Error::InvalidArgument(format!("axis mapping {s:?} must be x,y,z"))),
        }
    }
}

pub fn n_coefficients(degree: usize) -> usize {
    (degree + 1) * (degree + 2) / 2
}

/// Exponents `(a, b)` of `x^a y^b`, ordered by total degree then descending `a`:
/// `1, x, y, x², xy, y², …`.
pub fn monomials(degree: usize) -> Vec<(usize, usize)> {
    (0..=degree)
        .flat_map(|d| (0..=d).rev().map(move |a| (a, d - a)))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SurfaceFit {
    pub format_version: u32,
    pub degree: usize,
    /// Coefficients in [`monomials`] order.
    pub coefficients: Vec<f64>,
    pub axes: AxisMap,
    pub residual_rms: f64,
    pub n_points: usize,
    pub x_range: (f64, f64),
    pub y_range: (f64, f64),
}

impl SurfaceFit {
    pub fn eval(&self, x: f64, y: f64) -> f64 {
        monomials(self.degree)
            .iter()
            .zip(&self.coefficients)
            .map(|(&(a, b), c)| c * x.powi(a as i32) * y.powi(b as i32))
            .sum()
    }
}

/// Least-squares fit of `z = g(x, y)` over raw `(x, y, z)` triples.
pub fn fit_polynomial(points: &[(f64, f64, f64)], degree: usize, axes: AxisMap) -> Result<SurfaceFit> {
    let mons = monomials(degree);
    let m = mons.len();
    if points.len() < m {
        return Err(Error::InvalidArgument(format!(
            "degree {degree} needs {m} points, got {}",
            points.len()
        )));
    }
    let a = DMatrix::from_fn(points.len(), m, |i, j| {
        let (x, y, _) = points[i];
        x.powi(mons[j].0 as i32) * y.powi(mons[j].1 as i32)
    });
    let z = DVector::from_iterator(points.len(), points.iter().map(|p| p.2));
    let svd = a.clone().svd(true, true);
    let smax = svd.singular_values.max();
    let tol = smax * (points.len().max(m) as f64) * f64::EPSILON * 1e3;
    let rank = svd.singular_values.iter().filter(|&&s| s > tol).count();
    if rank < m {
        return Err(Error::RankDeficient(format!(
            "degree-{degree} design matrix has rank {rank} of {m} over {} points",
            points.len()
        )));
    }
    let coef = svd.solve(&z, tol).map_err(|e| Error::RankDeficient(e.to_string()))?;
    let resid = &a * &coef - &z;
    let range = |sel: fn(&(f64, f64, f64)) -> f64| {
        points.iter().map(sel).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    Ok(SurfaceFit {
        format_version: MODEL_FORMAT_VERSION,
        degree,
        coefficients: coef.iter().copied().collect(),
        axes,
        residual_rms: (resid.norm_squared() / points.len() as f64).sqrt(),
        n_points: points.len(),
        x_range: range(|p| p.0),
        y_range: range(|p| p.1),
    })
}

pub fn fit_surface(points: &[DesignPoint], degree: usize, axes: AxisMap) -> Result<SurfaceFit> {
    let raw: Vec<(f64, f64, f64)> = points.iter().map(|p| axes.project(p)).collect();
    fit_polynomial(&raw, degree, axes)
}

/// Fits at `degree`, dropping one degree at a time when there are too few
/// points or the design matrix is rank deficient; never goes below 1.
pub fn fit_surface_with_fallback(points: &[DesignPoint], degree: usize, axes: AxisMap) -> Result<SurfaceFit> {
    let mut d = degree;
    loop {
        match fit_surface(points, d, axes) {
            Ok(f) => return Ok(f),
            Err(e @ (Error::InvalidArgument(_) | Error::RankDeficient(_))) if d > 1 => {
                log::warn!("degree-{d} surface unavailable ({e}); trying degree {}", d - 1);
                d -= 1;
            }
            Err(e) => return Err(e),
        }
    }
}

/// 3 → 32 → 32 → 1 tanh network on standardized design coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRegressor {
    pub format_version: u32,
    pub input_mean: [f64; 3],
    pub input_std: [f64; 3],
    /// Flat parameter vector; see [`Layout`].
    pub weights: Vec<f64>,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
    pub training_mse: f64,
}

/// Offsets of each block in the flat parameter vector (row-major matrices).
struct Layout;

impl Layout {
    const W1: usize = 0;
    const B1: usize = Self::W1 + HIDDEN * 3;
    const W2: usize = Self::B1 + HIDDEN;
    const B2: usize = Self::W2 + HIDDEN * HIDDEN;
    const W3: usize = Self::B2 + HIDDEN;
    const B3: usize = Self::W3 + HIDDEN;
    const LEN: usize = Self::B3 + 1;
}

pub const N_WEIGHTS: usize = Layout::LEN;

struct Net {
    w1: DMatrix<f64>,
    b1: DVector<f64>,
    w2: DMatrix<f64>,
    b2: DVector<f64>,
    w3: DMatrix<f64>,
    b3: f64,
}

impl Net {
    fn unpack(p: &[f64]) -> Self {
        Net {
            w1: DMatrix::from_row_slice(HIDDEN, 3, &p[Layout::W1..Layout::B1]),
            b1: DVector::from_column_slice(&p[Layout::B1..Layout::W2]),
            w2: DMatrix::from_row_slice(HIDDEN, HIDDEN, &p[Layout::W2..Layout::B2]),
            b2: DVector::from_column_slice(&p[Layout::B2..Layout::W3]),
            w3: DMatrix::from_row_slice(1, HIDDEN, &p[Layout::W3..Layout::B3]),
            b3: p[Layout::B3],
        }
    }

    /// Columns of `x` are samples. Returns hidden activations and outputs.
    fn forward(&self, x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>, DVector<f64>) {
        let mut h1 = &self.w1 * x;
        for mut c in h1.column_iter_mut() {
            c += &self.b1;
        }
        h1.apply(|v| *v = v.tanh());
        let mut h2 = &self.w2 * &h1;
        for mut c in h2.column_iter_mut() {
            c += &self.b2;
        }
        h2.apply(|v| *v = v.tanh());
        let out = (&self.w3 * &h2).row(0).transpose().add_scalar(self.b3);
        (h1, h2, out)
    }
}

/// Mean squared error and its gradient with respect to the flat parameters.
fn loss_and_gradient(p: &[f64], x: &DMatrix<f64>, y: &DVector<f64>) -> (f64, Vec<f64>) {
    let net = Net::unpack(p);
    let n = x.ncols() as f64;
    let (h1, h2, out) = net.forward(x);
    let err = &out - y;
    let loss = err.norm_squared() / n;

    let d_out = (2.0 / n) * err; // n
    let d_out_row = d_out.transpose(); // 1×n
    let g_w3 = &d_out_row * h2.transpose();
    let g_b3 = d_out.sum();
    let mut d_h2 = net.w3.transpose() * &d_out_row; // 32×n
    d_h2.zip_apply(&h2, |d, h| *d *= 1.0 - h * h);
    let g_w2 = &d_h2 * h1.transpose();
    let g_b2 = d_h2.column_sum();
    let mut d_h1 = net.w2.transpose() * &d_h2;
    d_h1.zip_apply(&h1, |d, h| *d *= 1.0 - h * h);
    let g_w1 = &d_h1 * x.transpose();
    let g_b1 = d_h1.column_sum();

    let mut g = Vec::with_capacity(Layout::LEN);
    g.extend(g_w1.transpose().iter()); // row-major
    g.extend(g_b1.iter());
    g.extend(g_w2.transpose().iter());
    g.extend(g_b2.iter());
    g.extend(g_w3.iter());
    g.push(g_b3);
    (loss, g)
}

/// Glorot-uniform weights, zero biases.
fn init_weights(seed: u64) -> Vec<f64> {
    let mut rng = rng_from_seed(seed);
    let mut p = vec![0.0; Layout::LEN];
    let mut fill = |range: std::ops::Range<usize>, fan_in: usize, fan_out: usize| {
        let a = (6.0 / (fan_in + fan_out) as f64).sqrt();
        for v in &mut p[range] {
            *v = rng.random_range(-a..a);
        }
    };
    fill(Layout::W1..Layout::B1, 3, HIDDEN);
    fill(Layout::W2..Layout::B2, HIDDEN, HIDDEN);
    fill(Layout::W3..Layout::B3, HIDDEN, 1);
    p
}

/// Per-coordinate mean and population standard deviation.
fn standardization(inputs: &[[f64; 3]]) -> Result<([f64; 3], [f64; 3])> {
    let n = inputs.len() as f64;
    let mut mean = [0.0; 3];
    let mut std = [0.0; 3];
    for k in 0..3 {
        mean[k] = inputs.iter().map(|v| v[k]).sum::<f64>() / n;
        std[k] = (inputs.iter().map(|v| (v[k] - mean[k]).powi(2)).sum::<f64>() / n).sqrt();
        if std[k].is_nan() || std[k] <= 0.0 {
            return Err(Error::ZeroVariance(["layers", "connectivity", "gate_set"][k]));
        }
    }
    Ok((mean, std))
}

fn design_matrix(inputs: &[[f64; 3]], mean: &[f64; 3], std: &[f64; 3]) -> DMatrix<f64> {
    DMatrix::from_fn(3, inputs.len(), |k, i| (inputs[i][k] - mean[k]) / std[k])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainingOptions {
    pub epochs: usize,
    pub learning_rate: f64,
}

impl Default for TrainingOptions {
    fn default() -> Self {
        TrainingOptions { epochs: DEFAULT_EPOCHS, learning_rate: DEFAULT_LEARNING_RATE }
    }
}

impl ScoreRegressor {
    pub fn train(samples: &[(DesignPoint, f64)], seed: u64) -> Result<Self> {
        let inputs: Vec<[f64; 3]> = samples.iter().map(|(p, _)| p.coords()).collect();
        let targets: Vec<f64> = samples.iter().map(|s| s.1).collect();
        Self::train_raw(&inputs, &targets, seed, TrainingOptions::default())
    }

    /// Full-batch Adam on mean squared error; returns the lowest-loss iterate.
    pub fn train_raw(inputs: &[[f64; 3]], targets: &[f64], seed: u64, opts: TrainingOptions) -> Result<Self> {
        if inputs.len() != targets.len() {
            return Err(Error::DimensionMismatch { expected: inputs.len(), found: targets.len() });
        }
        if inputs.len() < 2 {
            return Err(Error::InvalidArgument("regressor needs at least 2 samples".into()));
        }
        if targets.iter().chain(inputs.iter().flatten()).any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite training data".into()));
        }
        let (mean, std) = standardization(inputs)?;
        let x = design_matrix(inputs, &mean, &std);
        let y = DVector::from_column_slice(targets);

        let (b1, b2, eps) = (0.9, 0.999, 1e-8);
        let mut p = init_weights(seed);
        let mut m = vec![0.0; p.len()];
        let mut v = vec![0.0; p.len()];
        // Adam can spike once the loss is near zero, so the lowest-loss
        // iterate is kept rather than the last one.
        let mut best = (f64::INFINITY, p.clone());
        for t in 1..=opts.epochs {
            let (loss, g) = loss_and_gradient(&p, &x, &y);
            if loss < best.0 {
                best = (loss, p.clone());
            }
            let c1 = 1.0 - f64::powi(b1, t as i32);
            let c2 = 1.0 - f64::powi(b2, t as i32);
            for i in 0..p.len() {
                m[i] = b1 * m[i] + (1.0 - b1) * g[i];
                v[i] = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
                p[i] -= opts.learning_rate * (m[i] / c1) / ((v[i] / c2).sqrt() + eps);
            }
        }
        let (last, _) = loss_and_gradient(&p, &x, &y);
        if last < best.0 {
            best = (last, p);
        }
        let (training_mse, p) = best;
        Ok(ScoreRegressor {
            format_version: MODEL_FORMAT_VERSION,
            input_mean: mean,
            input_std: std,
            weights: p,
            epochs: opts.epochs,
            learning_rate: opts.learning_rate,
            seed,
            training_mse,
        })
    }

    pub fn standardize(&self, coords: [f64; 3]) -> [f64; 3] {
        std::array::from_fn(|k| (coords[k] - self.input_mean[k]) / self.input_std[k])
    }

    /// Prediction at raw `[layers, connectivity, gate_set]` coordinates.
    pub fn predict(&self, coords: [f64; 3]) -> f64 {
        self.predict_many(&[coords])[0]
    }

    pub fn predict_many(&self, coords: &[[f64; 3]]) -> Vec<f64> {
        let x = design_matrix(coords, &self.input_mean, &self.input_std);
        Net::unpack(&self.weights).forward(&x).2.iter().copied().collect()
    }
}

/// Largest norm-relative discrepancy `‖g − g_fd‖ / (‖g‖ + ‖g_fd‖)` between the
/// analytic MSE gradient and central differences, at freshly initialized weights.
pub fn gradient_check(inputs: &[[f64; 3]], targets: &[f64], seed: u64) -> Result<f64> {
    let (mean, std) = standardization(inputs)?;
    let x = design_matrix(inputs, &mean, &std);
    let y = DVector::from_column_slice(targets);
    let p = init_weights(seed);
    let (_, g) = loss_and_gradient(&p, &x, &y);
    let h = 1e-6;
    let mut q = p.clone();
    let fd: Vec<f64> = (0..p.len())
        .map(|i| {
            q[i] = p[i] + h;
            let up = loss_and_gradient(&q, &x, &y).0;
            q[i] = p[i] - h;
            let down = loss_and_gradient(&q, &x, &y).0;
            q[i] = p[i];
            (up - down) / (2.0 * h)
        })
        .collect();
    let diff = g.iter().zip(&fd).map(|(a, b)| (a - b).powi(2)).sum::<f64>().sqrt();
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    Ok(diff / (norm(&g) + norm(&fd)).max(f64::MIN_POSITIVE))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridRow {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub score_pred: f64,
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

/// `resolution × resolution` samples of the surface's `(x, y)` rectangle,
/// lifted to `z` and scored. Rows run over `x` outer, `y` inner.
pub fn predict_grid(reg: &ScoreRegressor, surface: &SurfaceFit, resolution: usize) -> Result<Vec<GridRow>> {
    if resolution == 0 {
        return Err(Error::InvalidArgument("grid resolution must be positive".into()));
    }
    let xs = linspace(surface.x_range.0, surface.x_range.1, resolution);
    let ys = linspace(surface.y_range.0, surface.y_range.1, resolution);
    let rows = xs
        .par_iter()
        .flat_map_iter(|&x| {
            ys.iter().map(move |&y| {
                let z = surface.eval(x, y);
                let score_pred = reg.predict(surface.axes.unproject(x, y, z));
                GridRow { x, y, z, score_pred }
            })
        })
        .collect();
    Ok(rows)
}

pub fn write_grid<W: Write>(writer: W, rows: &[GridRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Fitted surfaces keyed by front name plus the shared regressor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DseModel {
    pub format_version: u32,
    pub gate_set_labels: Vec<String>,
    pub connectivity_order: Vec<String>,
    pub surfaces: Vec<(String, SurfaceFit)>,
    pub regressor: ScoreRegressor,
}

impl DseModel {
    pub fn new(space: &DesignSpace, surfaces: Vec<(String, SurfaceFit)>, regressor: ScoreRegressor) -> Self {
        DseModel {
            format_version: MODEL_FORMAT_VERSION,
            gate_set_labels: space.gate_set_labels().to_vec(),
            connectivity_order: (0..4)
                .filter_map(Connectivity::from_ordinal)
                .map(|c| c.as_str().to_string())
                .collect(),
            surfaces,
            regressor,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: DseModel = serde_json::from_str(s)?;
        let versions = std::iter::once(m.format_version)
            .chain(std::iter::once(m.regressor.format_version))
            .chain(m.surfaces.iter().map(|(_, s)| s.format_version));
        for v in versions {
            if v != MODEL_FORMAT_VERSION {
                return Err(Error::Results(format!("unsupported model format version {v}")));
            }
        }
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::default_catalog;

    fn pt(layers: usize, c: usize, g: usize) -> DesignPoint {
        DesignPoint { circuit_id: "t".into(), layers, connectivity_ord: c, gate_set_ord: g }
    }

    #[test]
    fn monomial_order() {
        assert_eq!(monomials(2), vec![(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]);
        for d in 0..5 {
            assert_eq!(monomials(d).len(), n_coefficients(d));
        }
    }

    #[test]
    fn plane_through_three_points() {
        let pts = [(0.0, 0.0, 1.0), (1.0, 0.0, 3.0), (0.0, 2.0, -1.0)];
        let f = fit_polynomial(&pts, 1, AxisMap::default()).unwrap();
        assert!(f.residual_rms < 1e-9);
        for (x, y, z) in pts {
            assert!((f.eval(x, y) - z).abs() < 1e-9);
        }
    }

    #[test]
    fn quadratic_oracle() {
        let mut pts = Vec::new();
        for x in 0..4 {
            for y in 0..4 {
                let (x, y) = (x as f64, y as f64);
                pts.push((x, y, 1.0 + x + y * y));
            }
        }
        let f = fit_polynomial(&pts, 2, AxisMap::default()).unwrap();
        for (c, e) in f.coefficients.iter().zip([1.0, 1.0, 0.0, 0.0, 0.0, 1.0]) {
            assert!((c - e).abs() < 1e-9, "{:?}", f.coefficients);
        }
    }

    #[test]
    fn too_few_or_degenerate_points() {
        let five: Vec<_> = (0..5).map(|i| (i as f64, (i * i) as f64, 0.0)).collect();
        assert!(matches!(fit_polynomial(&five, 2, AxisMap::default()), Err(Error::InvalidArgument(_))));
        let collinear = [(0.0, 0.0, 0.0), (1.0, 1.0, 1.0), (2.0, 2.0, 2.0)];
        assert!(matches!(fit_polynomial(&collinear, 1, AxisMap::default()), Err(Error::RankDeficient(_))));
    }

    #[test]
    fn fallback_drops_degree() {
        let pts = [pt(1, 0, 0), pt(2, 0, 1), pt(1, 1, 2), pt(3, 2, 2)];
        let f = fit_surface_with_fallback(&pts, 2, AxisMap::default()).unwrap();
        assert_eq!(f.degree, 1);
    }

    #[test]
    fn axis_mapping() {
        let m: AxisMap = "gate_set,layers,connectivity".parse().unwrap();
        let p = pt(3, 1, 7);
        assert_eq!(m.project(&p), (7.0, 3.0, 1.0));
        assert_eq!(m.unproject(7.0, 3.0, 1.0), p.coords());
        assert!("layers,layers,gate_set".parse::<AxisMap>().is_err());
    }

    #[test]
    fn encode_catalog() {
        let cat = default_catalog();
        let space = DesignSpace::new(&cat);
        let a10 = cat.iter().find(|t| t.id == "A10").unwrap();
        let p = space.encode(&a10.instantiate(1).unwrap()).unwrap();
        assert_eq!((p.layers, p.connectivity_ord), (1, 2));
        assert_eq!(space.gate_set_labels()[p.gate_set_ord], "RY+CZ");
        let p3 = space.encode_template(a10, 3).unwrap();
        assert_eq!((p3.connectivity_ord, p3.gate_set_ord, p3.layers), (p.connectivity_ord, p.gate_set_ord, 3));
        for t in &cat {
            for l in 1..=3 {
                let p = space.encode(&t.instantiate(l).unwrap()).unwrap();
                assert_eq!(space.decode(&p).unwrap(), (l, t.connectivity, t.gate_set_label()));
                assert!(space.templates_at(&p).unwrap().iter().any(|x| x.id == t.id));
            }
        }
        assert!(space.gate_set_ord("RX+SWAP").is_err());
    }

    fn synthetic() -> (Vec<[f64; 3]>, Vec<f64>) {
        let inputs = vec![[1.0, 0.0, 2.0], [2.0, 1.0, 0.0], [3.0, 3.0, 1.0], [1.0, 2.0, 3.0], [2.0, 2.0, 2.0]];
        let targets = vec![0.3, -0.1, 0.7, 0.2, 0.5];
        (inputs, targets)
    }

    #[test]
    fn regressor_gradient_check() {
        let (x, y) = synthetic();
        for seed in [0, 1, 2] {
            let e = gradient_check(&x, &y, seed).unwrap();
            assert!(e < 1e-5, "{e}");
        }
    }

    #[test]
    fn constant_and_linear_targets() {
        let inputs: Vec<[f64; 3]> = (0..20)
            .map(|i| [(i % 3 + 1) as f64, (i % 4) as f64, ((i * 7) % 5) as f64])
            .collect();
        let opts = TrainingOptions { epochs: 2000, ..Default::default() };
        let c = ScoreRegressor::train_raw(&inputs, &[0.37; 20], 3, opts).unwrap();
        assert!(c.training_mse < 1e-4);
        assert!((c.predict([2.0, 1.0, 1.0]) - 0.37).abs() < 0.02);

        let reg0 = ScoreRegressor::train_raw(&inputs, &[0.0; 20], 0, opts).unwrap();
        let lin: Vec<f64> = inputs
            .iter()
            .map(|v| {
                let s = reg0.standardize(*v);
                0.2 + 0.5 * s[0] - 0.3 * s[1] + 0.1 * s[2]
            })
            .collect();
        let l = ScoreRegressor::train_raw(&inputs, &lin, 3, TrainingOptions::default()).unwrap();
        assert!(l.training_mse < 1e-3, "{}", l.training_mse);
    }

    #[test]
    fn standardized_inputs_are_unit() {
        let (x, y) = synthetic();
        let r = ScoreRegressor::train_raw(&x, &y, 0, TrainingOptions { epochs: 1, ..Default::default() }).unwrap();
        let z: Vec<[f64; 3]> = x.iter().map(|v| r.standardize(*v)).collect();
        for k in 0..3 {
            let m = z.iter().map(|v| v[k]).sum::<f64>() / 5.0;
            let s = (z.iter().map(|v| (v[k] - m).powi(2)).sum::<f64>() / 5.0).sqrt();
            assert!(m.abs() < 1e-10 && (s - 1.0).abs() < 1e-10);
        }
        let flat = [[1.0, 0.0, 2.0], [2.0, 0.0, 1.0]];
        assert!(matches!(
            ScoreRegressor::train_raw(&flat, &[0.0, 1.0], 0, TrainingOptions::default()),
            Err(Error::ZeroVariance("connectivity"))
        ));
    }

    #[test]
    fn training_is_deterministic() {
        let (x, y) = synthetic();
        let opts = TrainingOptions { epochs: 50, ..Default::default() };
        let a = ScoreRegressor::train_raw(&x, &y, 9, opts).unwrap();
        let b = ScoreRegressor::train_raw(&x, &y, 9, opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.weights.len(), N_WEIGHTS);
    }

    #[test]
    fn grid_shape_and_corner() {
        let pts = [pt(1, 0, 0), pt(3, 0, 2), pt(1, 2, 4)];
        let surf = fit_surface(&pts, 1, AxisMap::default()).unwrap();
        let samples: Vec<(DesignPoint, f64)> = pts.iter().cloned().zip([0.1, 0.4, 0.3]).collect();
        let reg = ScoreRegressor::train(&samples, 0).unwrap();
        assert_eq!(predict_grid(&reg, &surf, 2).unwrap().len(), 4);
        let grid = predict_grid(&reg, &surf, 5).unwrap();
        assert_eq!(grid.len(), 25);
        assert!(grid.iter().all(|r| r.score_pred.is_finite()));
        let corner = grid[0];
        assert_eq!((corner.x, corner.y), (1.0, 0.0));
        assert!(corner.z.abs() < 1e-9);
        let resid = (reg.predict(pts[0].coords()) - 0.1).abs();
        assert!((corner.score_pred - 0.1).abs() <= resid + 1e-9);

        let mut buf = Vec::new();
        write_grid(&mut buf, &grid[..1]).unwrap();
        assert!(String::from_utf8(buf).unwrap().starts_with("x,y,z,score_pred\n"));
    }

    #[test]
    fn model_json_round_trip() {
        let cat = default_catalog();
        let space = DesignSpace::new(&cat);
        let pts = [pt(1, 0, 0), pt(3, 0, 2), pt(1, 2, 4)];
        let surf = fit_surface(&pts, 1, AxisMap::default()).unwrap();
        let samples: Vec<(DesignPoint, f64)> = pts.iter().cloned().zip([0.1, 0.4, 0.3]).collect();
        let x: Vec<[f64; 3]> = samples.iter().map(|s| s.0.coords()).collect();
        let reg = ScoreRegressor::train_raw(&x, &[0.1, 0.4, 0.3], 0, TrainingOptions { epochs: 10, ..Default::default() })
            .unwrap();
        let m = DseModel::new(&space, vec![("unconstrained".into(), surf)], reg);
        let back = DseModel::from_json(&m.to_json().unwrap()).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.connectivity_order, ["none", "linear", "circular", "all_to_all"]);
        let bumped = m.to_json().unwrap().replacen("\"format_version\": 1", "\"format_version\": 9", 1);
        assert!(DseModel::from_json(&bumped).is_err());
    }
}
