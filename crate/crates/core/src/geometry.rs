//! Per-point Riemannian computations on a single coordinate chart.
//!
//! Conventions:
//! - `R(X,Y)Z = ∇_X∇_Y Z − ∇_Y∇_X Z − ∇_[X,Y] Z`, stored as
//!   `R^l_ijk = dx^l(R(∂_i, ∂_j)∂_k)`;
//! - `ric(X,Y) = tr(Z ↦ R(Z,X)Y)`, i.e. `ric_jk = R^i_ijk`, so the unit
//!   sphere has `ric = +g`;
//! - the Laplacian is `Δf = −tr(∇²f)` (non-negative spectrum).

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::jets::{Jet, JetError};

/// Jet order used when nothing else is requested: enough for `∇S` and `∇Ric`.
pub const DEFAULT_ORDER: usize = 3;
/// Fraction of the domain diameter kept clear of the chart boundary.
pub const DEFAULT_MARGIN_FRACTION: f64 = 0.05;
/// Smallest admissible eigenvalue of the metric at a sampled point.
pub const MIN_METRIC_EIGENVALUE: f64 = 1e-10;
/// Charts up to this dimension are supported (adjugate inversion).
pub const MAX_DIM: usize = 4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("point {point:?} is outside the interior of chart '{label}'")]
    OutsideDomain { label: String, point: Vec<f64> },
    #[error("expected a point of dimension {expected}, got {got}")]
    WrongDimension { expected: usize, got: usize },
    #[error("unsupported chart dimension {0} (must be 2..={MAX_DIM})")]
    UnsupportedDimension(usize),
    #[error("metric is not symmetric at {0:?}")]
    MetricNotSymmetric(Vec<f64>),
    #[error("metric is not positive definite at {point:?} (smallest eigenvalue {min_eigenvalue:e})")]
    MetricDegenerate { point: Vec<f64>, min_eigenvalue: f64 },
    #[error("non-finite {what} at {point:?}")]
    NonFinite { what: &'static str, point: Vec<f64> },
    #[error("jet order {got} is too low; {needed} is required for {what}")]
    OrderTooLow {
        what: &'static str,
        needed: usize,
        got: usize,
    },
    #[error(transparent)]
    Jet(#[from] JetError),
}

pub type MetricFn = Arc<dyn Fn(&[Jet]) -> Vec<Vec<Jet>> + Send + Sync>;
pub type ScalarFn = Arc<dyn Fn(&[Jet]) -> Jet + Send + Sync>;
pub type VectorFn = Arc<dyn Fn(&[Jet]) -> Vec<Jet> + Send + Sync>;

/// One factor of a product domain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DomainFactor {
    /// One coordinate in `(lo, hi)`.
    Interval { lo: f64, hi: f64 },
    /// Two coordinates in the open disk of the given radius about the origin.
    Disk { radius: f64 },
}

impl DomainFactor {
    pub fn dim(&self) -> usize {
        match self {
            DomainFactor::Interval { .. } => 1,
            DomainFactor::Disk { .. } => 2,
        }
    }

    pub fn diameter(&self) -> f64 {
        match *self {
            DomainFactor::Interval { lo, hi } => hi - lo,
            DomainFactor::Disk { radius } => 2.0 * radius,
        }
    }
}

/// A product of intervals and disks.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Domain {
    factors: Vec<DomainFactor>,
}

impl Domain {
    pub fn new(factors: Vec<DomainFactor>) -> Self {
        Domain { factors }
    }

    /// Axis-aligned box from per-coordinate bounds.
    pub fn boxed(bounds: &[(f64, f64)]) -> Self {
        Domain::new(
            bounds
                .iter()
                .map(|&(lo, hi)| DomainFactor::Interval { lo, hi })
                .collect(),
        )
    }

    pub fn factors(&self) -> &[DomainFactor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.iter().map(DomainFactor::dim).sum()
    }

    pub fn diameter(&self) -> f64 {
        self.factors.iter().map(|f| f.diameter().powi(2)).sum::<f64>().sqrt()
    }

    pub fn product(&self, other: &Domain) -> Domain {
        let mut factors = self.factors.clone();
        factors.extend_from_slice(&other.factors);
        Domain { factors }
    }

    /// Whether every factor keeps at least `margin` from its boundary.
    pub fn contains(&self, point: &[f64], margin: f64) -> bool {
        if point.len() != self.dim() || point.iter().any(|x| !x.is_finite()) {
            return false;
        }
        let mut at = 0;
        for factor in &self.factors {
            let ok = match *factor {
                DomainFactor::Interval { lo, hi } => {
                    let x = point[at];
                    x >= lo + margin && x <= hi - margin
                }
                DomainFactor::Disk { radius } => point[at].hypot(point[at + 1]) <= radius - margin,
            };
            if !ok {
                return false;
            }
            at += factor.dim();
        }
        true
    }

    /// Whether the margin-shrunk domain is nonempty.
    pub fn admits_margin(&self, margin: f64) -> bool {
        self.factors.iter().all(|f| match *f {
            DomainFactor::Interval { lo, hi } => hi - lo > 2.0 * margin,
            DomainFactor::Disk { radius } => radius > margin,
        })
    }

    /// Maps a point of the unit cube into the margin-shrunk domain; disks
    /// are filled with uniform area density.
    pub fn map_unit(&self, unit: &[f64], margin: f64) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.dim());
        let mut at = 0;
        for factor in &self.factors {
            match *factor {
                DomainFactor::Interval { lo, hi } => {
                    let (a, b) = (lo + margin, hi - margin);
                    out.push(a + (b - a) * unit[at]);
                }
                DomainFactor::Disk { radius } => {
                    let r = (radius - margin) * unit[at].sqrt();
                    let angle = std::f64::consts::TAU * unit[at + 1];
                    out.push(r * angle.cos());
                    out.push(r * angle.sin());
                }
            }
            at += factor.dim();
        }
        out
    }
}

/// A coordinate chart together with its metric components.
#[derive(Clone)]
pub struct ChartPatch {
    label: String,
    domain: Domain,
    margin_fraction: f64,
    metric: MetricFn,
}

impl fmt::Debug for ChartPatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ChartPatch")
            .field("label", &self.label)
            .field("domain", &self.domain)
            .field("margin_fraction", &self.margin_fraction)
            .finish_non_exhaustive()
    }
}

impl ChartPatch {
    /// `metric` maps coordinate jets to the symmetric matrix `g_ij`.
    pub fn new(
        label: impl Into<String>,
        domain: Domain,
        metric: impl Fn(&[Jet]) -> Vec<Vec<Jet>> + Send + Sync + 'static,
    ) -> Self {
        ChartPatch {
            label: label.into(),
            domain,
            margin_fraction: DEFAULT_MARGIN_FRACTION,
            metric: Arc::new(metric),
        }
    }

    pub fn with_margin_fraction(mut self, fraction: f64) -> Self {
        self.margin_fraction = fraction;
        self
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn dim(&self) -> usize {
        self.domain.dim()
    }

    /// Distance kept from the chart boundary when sampling.
    pub fn margin(&self) -> f64 {
        self.margin_fraction * self.domain.diameter()
    }

    pub fn is_interior(&self, point: &[f64]) -> bool {
        self.domain.contains(point, self.margin())
    }

    pub fn check_point(&self, point: &[f64]) -> Result<(), GeometryError> {
        if point.len() != self.dim() {
            return Err(GeometryError::WrongDimension {
                expected: self.dim(),
                got: point.len(),
            });
        }
        if !self.is_interior(point) {
            return Err(GeometryError::OutsideDomain {
                label: self.label.clone(),
                point: point.to_vec(),
            });
        }
        Ok(())
    }

    pub fn metric_jets(&self, coords: &[Jet]) -> Vec<Vec<Jet>> {
        (self.metric)(coords)
    }

    /// The same chart with metric `λ² g`.
    pub fn scaled(&self, lambda: f64) -> ChartPatch {
        let inner = self.metric.clone();
        let factor = lambda * lambda;
        ChartPatch {
            label: format!("{} (scaled by {lambda})", self.label),
            domain: self.domain.clone(),
            margin_fraction: self.margin_fraction,
            metric: Arc::new(move |x| {
                inner(x)
                    .into_iter()
                    .map(|row| row.into_iter().map(|g| g * factor).collect())
                    .collect()
            }),
        }
    }

    /// Riemannian product with another chart (block-diagonal metric).
    pub fn product(&self, other: &ChartPatch, label: impl Into<String>) -> ChartPatch {
        let (left, right) = (self.metric.clone(), other.metric.clone());
        let split = self.dim();
        let total = split + other.dim();
        ChartPatch {
            label: label.into(),
            domain: self.domain.product(&other.domain),
            margin_fraction: self.margin_fraction,
            metric: Arc::new(move |x| {
                let zero = x[0].lift(0.0);
                let a = left(&x[..split]);
                let b = right(&x[split..]);
                (0..total)
                    .map(|i| {
                        (0..total)
                            .map(|j| match (i < split, j < split) {
                                (true, true) => a[i][j].clone(),
                                (false, false) => b[i - split][j - split].clone(),
                                _ => zero.clone(),
                            })
                            .collect()
                    })
                    .collect()
            }),
        }
    }
}

/// A smooth function on a chart, evaluated on coordinate jets.
#[derive(Clone)]
pub struct ScalarField {
    label: String,
    eval: ScalarFn,
}

impl fmt::Debug for ScalarField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "ScalarField({})", self.label)
    }
}

impl ScalarField {
    pub fn new(label: impl Into<String>, eval: impl Fn(&[Jet]) -> Jet + Send + Sync + 'static) -> Self {
        ScalarField {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, coords: &[Jet]) -> Jet {
        (self.eval)(coords)
    }

    /// Plain value at a point.
    pub fn value_at(&self, point: &[f64]) -> f64 {
        let coords: Vec<Jet> = point
            .iter()
            .map(|&x| Jet::constant(x, point.len(), 0).expect("supported dimension"))
            .collect();
        self.eval(&coords).value()
    }

    /// The field composed with the first `k` coordinates only.
    pub fn on_leading_coordinates(&self, k: usize) -> ScalarField {
        let inner = self.eval.clone();
        ScalarField {
            label: self.label.clone(),
            eval: Arc::new(move |x| inner(&x[..k])),
        }
    }
}

/// A vector field given by its contravariant components.
#[derive(Clone)]
pub struct VectorFieldSpec {
    label: String,
    eval: VectorFn,
}

impl fmt::Debug for VectorFieldSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "VectorFieldSpec({})", self.label)
    }
}

impl VectorFieldSpec {
    pub fn new(label: impl Into<String>, eval: impl Fn(&[Jet]) -> Vec<Jet> + Send + Sync + 'static) -> Self {
        VectorFieldSpec {
            label: label.into(),
            eval: Arc::new(eval),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, coords: &[Jet]) -> Vec<Jet> {
        (self.eval)(coords)
    }

    pub fn scaled(&self, factor: f64) -> VectorFieldSpec {
        let inner = self.eval.clone();
        VectorFieldSpec {
            label: format!("{} x {factor}", self.label),
            eval: Arc::new(move |x| inner(x).into_iter().map(|c| c * factor).collect()),
        }
    }

    /// Extends a field on the first `k` coordinates by zero components.
    pub fn padded(&self, k: usize, total: usize) -> VectorFieldSpec {
        let inner = self.eval.clone();
        VectorFieldSpec {
            label: self.label.clone(),
            eval: Arc::new(move |x| {
                let mut v = inner(&x[..k]);
                v.extend((k..total).map(|_| x[0].lift(0.0)));
                v
            }),
        }
    }
}

/// Christoffel symbols `Γ^k_ij` at a point.
#[derive(Debug, Clone, PartialEq)]
pub struct Christoffel {
    n: usize,
    data: Vec<f64>,
}

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.data[(k * self.n + i) * self.n + j]
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

/// Curvature at one point, as plain numbers.
#[derive(Debug, Clone)]
pub struct CurvatureData {
    pub point: Vec<f64>,
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    gamma: Vec<f64>,
    riemann: Vec<f64>,
    /// `ric_ij`
    pub ricci02: DMatrix<f64>,
    /// `Ric^i_j = g^ik ric_kj`
    pub ricci11: DMatrix<f64>,
    /// Scalar curvature `S`.
    pub scalar: f64,
    /// Contravariant `∇S`; needs jets of order ≥ 3.
    pub grad_scalar: Option<DVector<f64>>,
    /// `∂_m Ric^i_j` for each `m`; needs jets of order ≥ 3.
    d_ricci11: Option<Vec<DMatrix<f64>>>,
}

impl CurvatureData {
    pub fn dim(&self) -> usize {
        self.g.nrows()
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        let n = self.dim();
        self.gamma[(k * n + i) * n + j]
    }

    pub fn riemann(&self, l: usize, i: usize, j: usize, k: usize) -> f64 {
        let n = self.dim();
        self.riemann[((l * n + i) * n + j) * n + k]
    }

    /// `(∇_X Ric)^i_j = ∂_X Ric^i_j + Γ^i_{Xk} Ric^k_j − Γ^k_{Xj} Ric^i_k`.
    pub fn nabla_ric_in(&self, dir: &DVector<f64>) -> Option<DMatrix<f64>> {
        let d = self.d_ricci11.as_ref()?;
        let n = self.dim();
        let ric = &self.ricci11;
        Some(DMatrix::from_fn(n, n, |i, j| {
            (0..n)
                .map(|m| {
                    let mut t = d[m][(i, j)];
                    for k in 0..n {
                        t += self.gamma(i, m, k) * ric[(k, j)] - self.gamma(k, m, j) * ric[(i, k)];
                    }
                    dir[m] * t
                })
                .sum()
        }))
    }

    /// Largest violation of the convention self-checks: symmetry of `ric`,
    /// `S = g^ij ric_ij`, and the first Bianchi identity.
    pub fn self_test_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in 0..n {
                worst = worst.max((self.ricci02[(i, j)] - self.ricci02[(j, i)]).abs());
            }
        }
        let trace: f64 = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .map(|(i, j)| self.g_inv[(i, j)] * self.ricci02[(i, j)])
            .sum();
        worst = worst.max((trace - self.scalar).abs());
        worst.max(self.bianchi_residual())
    }

    /// `max |R^l_ijk + R^l_jki + R^l_kij|`.
    pub fn bianchi_residual(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for l in 0..n {
            for i in 0..n {
                for j in 0..n {
                    for k in 0..n {
                        let s = self.riemann(l, i, j, k) + self.riemann(l, j, k, i) + self.riemann(l, k, i, j);
                        worst = worst.max(s.abs());
                    }
                }
            }
        }
        worst
    }
}

/// Jets of the metric and everything derived from it at one point.
///
/// With jets of order `K`: `g` and `g⁻¹` carry order `K`, the Christoffel
/// symbols `K − 1`, and curvature `K − 2`.
#[derive(Debug, Clone)]
pub struct LocalGeometry {
    point: Vec<f64>,
    n: usize,
    order: usize,
    coords: Vec<Jet>,
    g: Vec<Jet>,
    g_inv: Vec<Jet>,
    gamma: Vec<Jet>,
    curvature: Option<CurvatureJets>,
}

#[derive(Debug, Clone)]
struct CurvatureJets {
    riemann: Vec<Jet>,
    ric: Vec<Jet>,
    ric11: Vec<Jet>,
    scalar: Jet,
}

impl LocalGeometry {
    /// Evaluates the chart at `point` with jets of the given order (≥ 1).
    pub fn at(patch: &ChartPatch, point: &[f64], order: usize) -> Result<Self, GeometryError> {
        patch.check_point(point)?;
        Self::at_unchecked(patch, point, order)
    }

    /// Like [`LocalGeometry::at`] but without the interior/margin check.
    pub fn at_unchecked(patch: &ChartPatch, point: &[f64], order: usize) -> Result<Self, GeometryError> {
        let n = patch.dim();
        if !(2..=MAX_DIM).contains(&n) {
            return Err(GeometryError::UnsupportedDimension(n));
        }
        if point.len() != n {
            return Err(GeometryError::WrongDimension {
                expected: n,
                got: point.len(),
            });
        }
        if order < 1 {
            return Err(GeometryError::OrderTooLow {
                what: "Christoffel symbols",
                needed: 1,
                got: order,
            });
        }
        let coords = Jet::coordinates(point, order)?;
        let rows = patch.metric_jets(&coords);
        let g: Vec<Jet> = rows.into_iter().flatten().collect();
        if g.len() != n * n {
            return Err(GeometryError::WrongDimension {
                expected: n * n,
                got: g.len(),
            });
        }
        if !g.iter().all(Jet::is_finite) {
            return Err(GeometryError::NonFinite {
                what: "metric",
                point: point.to_vec(),
            });
        }
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (&g[i * n + j], &g[j * n + i]);
                let scale = 1.0 + a.coeffs().iter().fold(0.0f64, |m, c| m.max(c.abs()));
                let asym = a
                    .coeffs()
                    .iter()
                    .zip(b.coeffs())
                    .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
                if asym > 1e-12 * scale {
                    return Err(GeometryError::MetricNotSymmetric(point.to_vec()));
                }
            }
        }
        let values = DMatrix::from_fn(n, n, |i, j| g[i * n + j].value());
        let min_eig = values.clone().symmetric_eigen().eigenvalues.min();
        if !(min_eig > MIN_METRIC_EIGENVALUE) {
            return Err(GeometryError::MetricDegenerate {
                point: point.to_vec(),
                min_eigenvalue: min_eig,
            });
        }

        let g_inv = adjugate_inverse(&g, n);
        if !g_inv.iter().all(Jet::is_finite) {
            return Err(GeometryError::NonFinite {
                what: "inverse metric",
                point: point.to_vec(),
            });
        }
        let gamma = christoffel_jets(&g, &g_inv, n);
        let curvature = (order >= 2).then(|| curvature_jets(&gamma, &g_inv, n));

        Ok(LocalGeometry {
            point: point.to_vec(),
            n,
            order,
            coords,
            g,
            g_inv,
            gamma,
            curvature,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn point(&self) -> &[f64] {
        &self.point
    }

    pub fn coords(&self) -> &[Jet] {
        &self.coords
    }

    pub fn metric(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.g[i * self.n + j].value())
    }

    pub fn metric_inverse(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.n, |i, j| self.g_inv[i * self.n + j].value())
    }

    pub fn metric_jet(&self, i: usize, j: usize) -> &Jet {
        &self.g[i * self.n + j]
    }

    pub fn inverse_metric_jet(&self, i: usize, j: usize) -> &Jet {
        &self.g_inv[i * self.n + j]
    }

    pub fn gamma(&self, k: usize, i: usize, j: usize) -> f64 {
        self.gamma[(k * self.n + i) * self.n + j].value()
    }

    pub fn christoffel(&self) -> Christoffel {
        Christoffel {
            n: self.n,
            data: self.gamma.iter().map(Jet::value).collect(),
        }
    }

    pub fn evaluate(&self, field: &ScalarField) -> Jet {
        field.eval(&self.coords)
    }

    pub fn evaluate_vector(&self, field: &VectorFieldSpec) -> Vec<Jet> {
        field.eval(&self.coords)
    }

    /// Plain-number curvature snapshot. Needs order ≥ 2; `∇S` and `∇Ric`
    /// are filled in when the order is ≥ 3.
    pub fn curvature(&self) -> Result<CurvatureData, GeometryError> {
        let cj = self.curvature.as_ref().ok_or(GeometryError::OrderTooLow {
            what: "curvature",
            needed: 2,
            got: self.order,
        })?;
        let n = self.n;
        let ricci02 = DMatrix::from_fn(n, n, |i, j| cj.ric[i * n + j].value());
        let ricci11 = DMatrix::from_fn(n, n, |i, j| cj.ric11[i * n + j].value());
        let g_inv = self.metric_inverse();
        let (grad_scalar, d_ricci11) = if self.order >= 3 {
            let ds = DVector::from_fn(n, |j, _| cj.scalar.d1(j));
            let d = (0..n)
                .map(|m| DMatrix::from_fn(n, n, |i, j| cj.ric11[i * n + j].d1(m)))
                .collect();
            (Some(&g_inv * ds), Some(d))
        } else {
            (None, None)
        };
        let data = CurvatureData {
            point: self.point.clone(),
            g: self.metric(),
            g_inv,
            gamma: self.gamma.iter().map(Jet::value).collect(),
            riemann: cj.riemann.iter().map(Jet::value).collect(),
            ricci02,
            ricci11,
            scalar: cj.scalar.value(),
            grad_scalar,
            d_ricci11,
        };
        let finite = data.riemann.iter().all(|v| v.is_finite()) && data.scalar.is_finite();
        if !finite {
            return Err(GeometryError::NonFinite {
                what: "curvature",
                point: self.point.clone(),
            });
        }
        Ok(data)
    }

    /// Contravariant gradient as jets one order below `f`.
    pub fn gradient_jets(&self, f: &Jet) -> Vec<Jet> {
        let n = self.n;
        let k = f.order() - 1;
        let df: Vec<Jet> = (0..n).map(|j| f.derivative(j)).collect();
        (0..n)
            .map(|i| {
                let mut acc = df[0].lift(0.0);
                for (j, dfj) in df.iter().enumerate() {
                    acc += &(self.g_inv[i * n + j].truncate(k) * dfj);
                }
                acc
            })
            .collect()
    }

    pub fn gradient(&self, f: &Jet) -> DVector<f64> {
        let df = DVector::from_fn(self.n, |j, _| f.d1(j));
        self.metric_inverse() * df
    }

    /// Covariant Hessian `∇_k ∂_j f = ∂_k∂_j f − Γ^l_kj ∂_l f`; needs order ≥ 2.
    pub fn hessian02(&self, f: &Jet) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |k, j| {
            let mut h = f.partial(&[k, j]);
            for l in 0..n {
                h -= self.gamma(l, k, j) * f.d1(l);
            }
            h
        })
    }

    /// `H^i_j = g^ik (∂_k∂_j f − Γ^l_kj ∂_l f)`.
    pub fn hessian11(&self, f: &Jet) -> DMatrix<f64> {
        self.metric_inverse() * self.hessian02(f)
    }

    /// `(∇V)^i_j = ∂_j V^i + Γ^i_jk V^k`, so `∇_X V = (∇V) X`.
    pub fn covariant_derivative(&self, v: &[Jet]) -> DMatrix<f64> {
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| {
            let mut t = v[i].d1(j);
            for (k, vk) in v.iter().enumerate() {
                t += self.gamma(i, j, k) * vk.value();
            }
            t
        })
    }

    pub fn inner(&self, a: &DVector<f64>, b: &DVector<f64>) -> f64 {
        (self.metric() * b).dot(a)
    }

    pub fn norm(&self, v: &DVector<f64>) -> f64 {
        self.inner(v, v).max(0.0).sqrt()
    }
}

/// Values of a vector of jets.
pub fn values(v: &[Jet]) -> DVector<f64> {
    DVector::from_iterator(v.len(), v.iter().map(Jet::value))
}

/// g-norm of a contravariant vector.
pub fn g_norm(g: &DMatrix<f64>, v: &DVector<f64>) -> f64 {
    (g * v).dot(v).max(0.0).sqrt()
}

/// g-norm of a (1,1) tensor: `sqrt(g_ik g^jl T^i_j T^k_l)`.
pub fn g_norm11(g: &DMatrix<f64>, g_inv: &DMatrix<f64>, t: &DMatrix<f64>) -> f64 {
    (g * t * g_inv).component_mul(t).sum().max(0.0).sqrt()
}

fn minor(m: &[Jet], n: usize, row: usize, col: usize) -> Vec<Jet> {
    let mut out = Vec::with_capacity((n - 1) * (n - 1));
    for i in (0..n).filter(|&i| i != row) {
        for j in (0..n).filter(|&j| j != col) {
            out.push(m[i * n + j].clone());
        }
    }
    out
}

fn determinant(m: &[Jet], n: usize) -> Jet {
    match n {
        1 => m[0].clone(),
        2 => &m[0] * &m[3] - &m[1] * &m[2],
        _ => {
            let mut det = m[0].lift(0.0);
            for j in 0..n {
                let term = &m[j] * determinant(&minor(m, n, 0, j), n - 1);
                if j % 2 == 0 {
                    det += &term;
                } else {
                    det -= &term;
                }
            }
            det
        }
    }
}

/// Exact jet inverse `adj(M) / det(M)`.
fn adjugate_inverse(m: &[Jet], n: usize) -> Vec<Jet> {
    let inv_det = determinant(m, n).recip();
    let mut out = vec![m[0].lift(0.0); n * n];
    for i in 0..n {
        for j in 0..n {
            let cof = if n == 1 {
                m[0].lift(1.0)
            } else {
                determinant(&minor(m, n, i, j), n - 1)
            };
            let signed = if (i + j) % 2 == 0 { cof } else { -cof };
            out[j * n + i] = signed * &inv_det;
        }
    }
    out
}

/// `Γ^k_ij = ½ g^kl (∂_i g_jl + ∂_j g_il − ∂_l g_ij)`.
fn christoffel_jets(g: &[Jet], g_inv: &[Jet], n: usize) -> Vec<Jet> {
    let k_order = g[0].order() - 1;
    // dg[(l * n + i) * n + j] = ∂_l g_ij
    let dg: Vec<Jet> = (0..n)
        .flat_map(|l| (0..n * n).map(move |ij| (l, ij)))
        .map(|(l, ij)| g[ij].derivative(l))
        .collect();
    let d = |l: usize, i: usize, j: usize| &dg[(l * n + i) * n + j];
    let ginv: Vec<Jet> = g_inv.iter().map(|x| x.truncate(k_order)).collect();

    // first kind: Γ_lij = ½(∂_i g_jl + ∂_j g_il − ∂_l g_ij)
    let mut first = Vec::with_capacity(n * n * n);
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                first.push((d(i, j, l) + d(j, i, l) - d(l, i, j)) * 0.5);
            }
        }
    }
    let mut out = Vec::with_capacity(n * n * n);
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let mut acc = first[0].lift(0.0);
                for l in 0..n {
                    acc += &(&ginv[k * n + l] * &first[(l * n + i) * n + j]);
                }
                out.push(acc);
            }
        }
    }
    out
}

fn curvature_jets(gamma: &[Jet], g_inv: &[Jet], n: usize) -> CurvatureJets {
    let k_order = gamma[0].order() - 1;
    let gm: Vec<Jet> = gamma.iter().map(|x| x.truncate(k_order)).collect();
    let gt = |k: usize, i: usize, j: usize| &gm[(k * n + i) * n + j];
    let dgamma = |m: usize, k: usize, i: usize, j: usize| gamma[(k * n + i) * n + j].derivative(m);

    // R^l_ijk = ∂_i Γ^l_jk − ∂_j Γ^l_ik + Γ^m_jk Γ^l_im − Γ^m_ik Γ^l_jm
    let mut riemann = Vec::with_capacity(n.pow(4));
    for l in 0..n {
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    let mut r = dgamma(i, l, j, k) - dgamma(j, l, i, k);
                    for m in 0..n {
                        r += &(gt(m, j, k) * gt(l, i, m));
                        r -= &(gt(m, i, k) * gt(l, j, m));
                    }
                    riemann.push(r);
                }
            }
        }
    }
    let rm = |l: usize, i: usize, j: usize, k: usize| &riemann[((l * n + i) * n + j) * n + k];

    let mut ric = Vec::with_capacity(n * n);
    for j in 0..n {
        for k in 0..n {
            let mut acc = riemann[0].lift(0.0);
            for i in 0..n {
                acc += rm(i, i, j, k);
            }
            ric.push(acc);
        }
    }
    let ginv: Vec<Jet> = g_inv.iter().map(|x| x.truncate(k_order)).collect();
    let mut ric11 = Vec::with_capacity(n * n);
    for i in 0..n {
        for j in 0..n {
            let mut acc = ric[0].lift(0.0);
            for k in 0..n {
                acc += &(&ginv[i * n + k] * &ric[k * n + j]);
            }
            ric11.push(acc);
        }
    }
    let mut scalar = ric[0].lift(0.0);
    for i in 0..n {
        scalar += &ric11[i * n + i];
    }
    CurvatureJets {
        riemann,
        ric,
        ric11,
        scalar,
    }
}

/// Christoffel symbols at an interior point.
pub fn christoffel(patch: &ChartPatch, point: &[f64]) -> Result<Christoffel, GeometryError> {
    Ok(LocalGeometry::at(patch, point, 1)?.christoffel())
}

/// Full curvature package at the default jet order.
pub fn curvature_at(patch: &ChartPatch, point: &[f64]) -> Result<CurvatureData, GeometryError> {
    curvature_at_order(patch, point, DEFAULT_ORDER)
}

pub fn curvature_at_order(patch: &ChartPatch, point: &[f64], order: usize) -> Result<CurvatureData, GeometryError> {
    LocalGeometry::at(patch, point, order)?.curvature()
}

/// Contravariant gradient `(∇f)^i = g^ij ∂_j f`.
pub fn gradient(patch: &ChartPatch, field: &ScalarField, point: &[f64]) -> Result<DVector<f64>, GeometryError> {
    let geo = LocalGeometry::at(patch, point, 1)?;
    Ok(geo.gradient(&geo.evaluate(field)))
}

/// Hessian as a (1,1) tensor.
pub fn hessian11(patch: &ChartPatch, field: &ScalarField, point: &[f64]) -> Result<DMatrix<f64>, GeometryError> {
    let geo = LocalGeometry::at(patch, point, 2)?;
    Ok(geo.hessian11(&geo.evaluate(field)))
}

/// `Δf = −tr(∇²f)`.
pub fn laplacian(patch: &ChartPatch, field: &ScalarField, point: &[f64]) -> Result<f64, GeometryError> {
    Ok(-hessian11(patch, field, point)?.trace())
}
