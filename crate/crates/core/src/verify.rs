//! Pointwise residuals of every identity a solution satisfies, and the
//! suite runner that aggregates them over a sample plan.

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;
use thiserror::Error;

use crate::catalog::{self, CatalogError, SolutionSpec, ToleranceClass};
use crate::geometry::{g_norm, g_norm11, values, CurvatureData, GeometryError, LocalGeometry};
use crate::jets::Jet;
use crate::ode::RADIAL_TOLERANCE;
use crate::sampling::Plan;

/// Below this `|∇f|` the normalized gradient is not evaluated.
pub const CRITICAL_GRAD_NORM: f64 = 1e-6;
/// Number of zero-set points the level-set checks collect.
pub const LEVEL_SET_POINTS: usize = 50;
const NEWTON_ITERATIONS: usize = 40;
const NEWTON_TOLERANCE: f64 = 1e-13;

pub mod ids {
    pub const CURVATURE_SCALAR: &str = "curvature.scalar";
    pub const CURVATURE_SELF_TEST: &str = "curvature.self_test";
    pub const GEODESIC_NU: &str = "geodesic_nu";
    pub const KILLING_A: &str = "killing.a_killing_eq";
    pub const KILLING_B: &str = "killing.b_orthogonal";
    pub const KILLING_C: &str = "killing.c_nabla_eta_eta";
    pub const KILLING_D: &str = "killing.d_norm_constant";
    pub const KILLING_E: &str = "killing.e_ricci_eta";
    pub const KILLING_F: &str = "killing.f_rank";
    pub const KILLING_G: &str = "killing.g_commutator";
    pub const KILLING_H: &str = "killing.h_nabla_eta_form";
    pub const LAPLACE_IDENTITY: &str = "laplace_identity";
    pub const LEVEL_SET_GAUSS: &str = "level_set.gauss_scalar";
    pub const LEVEL_SET_SHAPE: &str = "level_set.shape_operator";
    pub const MU: &str = "mu";
    pub const RADIAL_POISSON: &str = "radial_poisson";
    pub const RESIDUAL_MAIN: &str = "residual_main";
    pub const RIC_GRAD: &str = "ric_grad";
    pub const RICCI_EIGENVALUES: &str = "ricci.eigenvalues";
    pub const RICCI_NABLA_NU: &str = "ricci.nabla_nu_ric";
    pub const RICCI_RIC2_ETA: &str = "ricci.ric2_eta";
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum VerifyError {
    #[error(transparent)]
    Catalog(#[from] CatalogError),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error("|grad f| = {grad_norm:e} at {point:?} is too close to a critical point")]
    NearCritical { point: Vec<f64>, grad_norm: f64 },
    #[error("not applicable: {0}")]
    NotApplicable(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Tolerances and sampling parameters of a suite run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ToleranceConfig {
    pub tol_identity: f64,
    pub tol_ode_limited: f64,
    pub tol_negative_control: f64,
    pub samples: usize,
    pub seed: u64,
    pub jet_order: usize,
}

impl Default for ToleranceConfig {
    fn default() -> Self {
        ToleranceConfig {
            tol_identity: 1e-8,
            tol_ode_limited: 1e-6,
            tol_negative_control: 1e-4,
            samples: 200,
            seed: 0,
            jet_order: 3,
        }
    }
}

impl ToleranceConfig {
    pub fn validate(&self) -> Result<(), VerifyError> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !(positive(self.tol_identity) && positive(self.tol_ode_limited) && positive(self.tol_negative_control)) {
            return Err(VerifyError::InvalidConfig(
                "tolerances must be positive and finite".into(),
            ));
        }
        if self.tol_identity >= self.tol_negative_control {
            return Err(VerifyError::InvalidConfig(format!(
                "identity tolerance {:e} must be below the negative-control threshold {:e}",
                self.tol_identity, self.tol_negative_control
            )));
        }
        if self.samples < 10 {
            return Err(VerifyError::InvalidConfig("at least 10 samples are required".into()));
        }
        if !(3..=4).contains(&self.jet_order) {
            return Err(VerifyError::InvalidConfig(format!(
                "jet order must be 3 or 4, got {}",
                self.jet_order
            )));
        }
        Ok(())
    }

    /// Base tolerance for a case.
    pub fn base(&self, class: ToleranceClass) -> f64 {
        match class {
            ToleranceClass::Identity => self.tol_identity,
            ToleranceClass::OdeLimited => self.tol_ode_limited,
        }
    }
}

/// Everything the residuals need at one sample point.
#[derive(Debug, Clone)]
pub struct PointContext {
    pub geo: LocalGeometry,
    pub curv: CurvatureData,
    pub f: Jet,
    /// Contravariant `∇f` as jets one order below `f`.
    pub grad: Vec<Jet>,
}

impl PointContext {
    pub fn new(spec: &SolutionSpec, point: &[f64], order: usize) -> Result<Self, VerifyError> {
        let geo = LocalGeometry::at(&spec.patch, point, order)?;
        let curv = geo.curvature()?;
        let f = geo.evaluate(&spec.f);
        if !f.is_finite() {
            return Err(GeometryError::NonFinite {
                what: "f",
                point: point.to_vec(),
            }
            .into());
        }
        let grad = geo.gradient_jets(&f);
        Ok(PointContext { geo, curv, f, grad })
    }

    pub fn point(&self) -> &[f64] {
        self.geo.point()
    }

    pub fn grad_value(&self) -> DVector<f64> {
        values(&self.grad)
    }

    pub fn grad_norm(&self) -> f64 {
        g_norm(&self.curv.g, &self.grad_value())
    }

    pub fn hessian(&self) -> DMatrix<f64> {
        self.geo.hessian11(&self.f)
    }

    /// `Δf = −tr ∇²f`.
    pub fn laplacian(&self) -> f64 {
        -self.hessian().trace()
    }

    fn require_regular(&self) -> Result<f64, VerifyError> {
        let n = self.grad_norm();
        if n < CRITICAL_GRAD_NORM {
            return Err(VerifyError::NearCritical {
                point: self.point().to_vec(),
                grad_norm: n,
            });
        }
        Ok(n)
    }

    /// Unit normal `ν = ∇f/|∇f|` as jets.
    pub fn nu_jets(&self) -> Result<Vec<Jet>, VerifyError> {
        self.require_regular()?;
        let k = self.grad[0].order();
        let n = self.geo.dim();
        let mut norm2 = self.grad[0].lift(0.0);
        for i in 0..n {
            for j in 0..n {
                norm2 += &(self.geo.metric_jet(i, j).truncate(k) * &self.grad[i] * &self.grad[j]);
            }
        }
        let inv = norm2.sqrt().recip();
        Ok(self.grad.iter().map(|g| g * &inv).collect())
    }
}

/// `max |∇²f + f·Ric|` (componentwise, as a (1,1) tensor).
pub fn main_residual(ctx: &PointContext) -> f64 {
    (ctx.hessian() + &ctx.curv.ricci11 * ctx.f.value()).amax()
}

/// `|Ric(∇f) − (S/2)∇f − (f/4)∇S|_g`.
pub fn ric_grad_residual(ctx: &PointContext) -> Result<f64, VerifyError> {
    let ds = ctx.curv.grad_scalar.as_ref().ok_or(GeometryError::OrderTooLow {
        what: "scalar curvature gradient",
        needed: 3,
        got: ctx.geo.order(),
    })?;
    let grad = ctx.grad_value();
    let r = &ctx.curv.ricci11 * &grad - &grad * (ctx.curv.scalar / 2.0) - ds * (ctx.f.value() / 4.0);
    Ok(g_norm(&ctx.curv.g, &r))
}

/// `μ = f·Δf + 2|∇f|²` at the point.
pub fn mu_value(ctx: &PointContext) -> f64 {
    let n = ctx.grad_norm();
    ctx.f.value() * ctx.laplacian() + 2.0 * n * n
}

/// `|Δf − f·S|`.
pub fn laplace_residual(ctx: &PointContext) -> f64 {
    (ctx.laplacian() - ctx.f.value() * ctx.curv.scalar).abs()
}

/// `|∇_ν ν|_g`.
pub fn geodesic_nu_residual(ctx: &PointContext) -> Result<f64, VerifyError> {
    let nu = ctx.nu_jets()?;
    let dn = ctx.geo.covariant_derivative(&nu);
    let nu_v = values(&nu);
    Ok(g_norm(&ctx.curv.g, &(dn * &nu_v)))
}

/// Shape operator `W = −∇ν` restricted to `ν^⊥`, its trace and norm, and the
/// Gauss-equation scalar curvature `S − 2 ric(ν, ν) + (tr W)² − |W|²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSetGeometry {
    pub shape_norm: f64,
    pub gauss_scalar: f64,
}

pub fn level_set_geometry(ctx: &PointContext) -> Result<LevelSetGeometry, VerifyError> {
    let nu = ctx.nu_jets()?;
    let n = ctx.geo.dim();
    let g = &ctx.curv.g;
    let nu_v = values(&nu);
    let nu_low = g * &nu_v;
    let proj = DMatrix::identity(n, n) - &nu_v * nu_low.transpose();
    let w = -(&proj * ctx.geo.covariant_derivative(&nu) * &proj);
    let shape_norm = g_norm11(g, &ctx.curv.g_inv, &w);
    let ric_nn = (&ctx.curv.ricci02 * &nu_v).dot(&nu_v);
    let tr = w.trace();
    let gauss_scalar = ctx.curv.scalar - 2.0 * ric_nn + tr * tr - shape_norm * shape_norm;
    Ok(LevelSetGeometry {
        shape_norm,
        gauss_scalar,
    })
}

/// Pointwise Killing-structure quantities for `(η, ε)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillingResiduals {
    /// `|sym(∇η♭)|`
    pub killing_eq: f64,
    /// `|⟨η, ∇f⟩|`
    pub orthogonal: f64,
    /// `|∇_η η − ε f ∇f|`
    pub nabla_eta_eta: f64,
    /// `|η|² + ε f²`, constant across the manifold.
    pub norm_value: f64,
    /// `|Ric(η) − (S/2) η|`
    pub ricci_eta: f64,
    /// Third singular value of `∇η♭` (zero in dimension 2).
    pub third_singular: f64,
    /// `|[η, ∇f]|`
    pub commutator: f64,
    /// `|∇_X η − (f/|∇f|)(ric(η, X) ν − ⟨ν, X⟩ Ric(η))|` over all `X`.
    pub nabla_eta_form: f64,
}

pub fn killing_residuals(ctx: &PointContext, eta: &[Jet], epsilon: f64) -> Result<KillingResiduals, VerifyError> {
    let n = ctx.geo.dim();
    let g = &ctx.curv.g;
    let f = ctx.f.value();
    let eta_v = values(eta);
    let grad = ctx.grad_value();
    let neta = ctx.geo.covariant_derivative(eta);

    // (∇η)_kj = g_ki (∇_j η)^i
    let lowered = g * &neta;
    let killing_eq = (&lowered + lowered.transpose()).amax() / 2.0;
    let orthogonal = (g * &grad).dot(&eta_v).abs();
    let nabla_eta_eta = g_norm(g, &(&neta * &eta_v - &grad * (epsilon * f)));
    let norm_value = (g * &eta_v).dot(&eta_v) + epsilon * f * f;
    let ric_eta = &ctx.curv.ricci11 * &eta_v;
    let ricci_eta = g_norm(g, &(&ric_eta - &eta_v * (ctx.curv.scalar / 2.0)));

    let mut sv: Vec<f64> = lowered
        .clone()
        .svd(false, false)
        .singular_values
        .iter()
        .copied()
        .collect();
    sv.sort_by(|a, b| b.total_cmp(a));
    let third_singular = sv.get(2).copied().unwrap_or(0.0);

    let commutator_v = DVector::from_fn(n, |i, _| {
        (0..n)
            .map(|j| eta_v[j] * ctx.grad[i].d1(j) - grad[j] * eta[i].d1(j))
            .sum::<f64>()
    });
    let commutator = g_norm(g, &commutator_v);

    let grad_norm = ctx.require_regular()?;
    let nu = &grad / grad_norm;
    let nu_low = g * &nu;
    let ric_eta_low = &ctx.curv.ricci02 * &eta_v;
    let form = &nu * ric_eta_low.transpose() - &ric_eta * nu_low.transpose();
    let nabla_eta_form = (&neta - form * (f / grad_norm)).amax();

    Ok(KillingResiduals {
        killing_eq,
        orthogonal,
        nabla_eta_eta,
        norm_value,
        ricci_eta,
        third_singular,
        commutator,
        nabla_eta_form,
    })
}

/// Ricci structure when a parallel-free Killing direction exists.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciResiduals {
    /// Largest gap between the `g`-eigenvalues of `Ric` and `{S/2, S/2, 0, …}`.
    pub eigenvalues: f64,
    /// `|Ric²(η) − (S/2) Ric(η)|`
    pub ric2_eta: f64,
    /// `|∇_ν Ric|`
    pub nabla_nu_ric: f64,
}

/// Eigenvalues of `Ric` relative to `g`, in descending order.
pub fn ricci_eigenvalues(curv: &CurvatureData) -> Option<Vec<f64>> {
    let chol = curv.g.clone().cholesky()?;
    let l = chol.l();
    let l_inv = l.clone().try_inverse()?;
    let a = &l_inv * &curv.ricci02 * l_inv.transpose();
    let a = (&a + a.transpose()) / 2.0;
    let mut ev: Vec<f64> = a.symmetric_eigen().eigenvalues.iter().copied().collect();
    ev.sort_by(|x, y| y.total_cmp(x));
    Some(ev)
}

pub fn ricci_residuals(ctx: &PointContext, eta: &[Jet], expected_s: f64) -> Result<RicciResiduals, VerifyError> {
    let n = ctx.geo.dim();
    let mut expected: Vec<f64> = (0..n).map(|i| if i < 2 { expected_s / 2.0 } else { 0.0 }).collect();
    expected.sort_by(|x, y| y.total_cmp(x));
    let ev = ricci_eigenvalues(&ctx.curv).ok_or(GeometryError::MetricDegenerate {
        point: ctx.point().to_vec(),
        min_eigenvalue: f64::NAN,
    })?;
    let eigenvalues = ev.iter().zip(&expected).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);

    let eta_v = values(eta);
    let ric = &ctx.curv.ricci11;
    let ric_eta = ric * &eta_v;
    let ric2_eta = g_norm(&ctx.curv.g, &(ric * &ric_eta - ric_eta * (ctx.curv.scalar / 2.0)));

    let nu = values(&ctx.nu_jets()?);
    let nabla = ctx.curv.nabla_ric_in(&nu).ok_or(GeometryError::OrderTooLow {
        what: "covariant derivative of Ricci",
        needed: 3,
        got: ctx.geo.order(),
    })?;
    Ok(RicciResiduals {
        eigenvalues,
        ric2_eta,
        nabla_nu_ric: nabla.amax(),
    })
}

/// Sample-plan points pushed onto `f = 0` by Newton steps along the
/// coordinate gradient; points that do not converge inside the chart are
/// dropped. `None` when `f` keeps one sign on the plan.
pub fn zero_set_points(spec: &SolutionSpec, plan: &Plan, wanted: usize) -> Option<Vec<Vec<f64>>> {
    let vals: Vec<f64> = plan.points.iter().map(|p| spec.f.value_at(p)).collect();
    let has_pos = vals.iter().any(|&v| v > 0.0);
    let has_neg = vals.iter().any(|&v| v < 0.0);
    let has_zero = vals.contains(&0.0);
    if !(has_zero || (has_pos && has_neg)) {
        return None;
    }
    let mut out = Vec::new();
    for p in &plan.points {
        if out.len() >= wanted {
            break;
        }
        let mut x = p.clone();
        let mut converged = false;
        for _ in 0..NEWTON_ITERATIONS {
            let Ok(coords) = Jet::coordinates(&x, 1) else { break };
            let f = spec.f.eval(&coords);
            if f.value().abs() <= NEWTON_TOLERANCE {
                converged = true;
                break;
            }
            let d: Vec<f64> = (0..x.len()).map(|i| f.d1(i)).collect();
            let d2: f64 = d.iter().map(|v| v * v).sum();
            if !(d2 > 0.0) || !f.value().is_finite() {
                break;
            }
            let step = f.value() / d2;
            x.iter_mut().zip(&d).for_each(|(xi, di)| *xi -= step * di);
        }
        if converged && spec.patch.is_interior(&x) {
            out.push(x);
        }
    }
    (!out.is_empty()).then_some(out)
}

// Spec-level operations on single points and plans.

pub fn residual_main(spec: &SolutionSpec, point: &[f64]) -> Result<f64, VerifyError> {
    Ok(main_residual(&PointContext::new(spec, point, 3)?))
}

pub fn residual_ric_grad(spec: &SolutionSpec, point: &[f64]) -> Result<f64, VerifyError> {
    ric_grad_residual(&PointContext::new(spec, point, 3)?)
}

pub fn check_laplace_identity(spec: &SolutionSpec, point: &[f64]) -> Result<f64, VerifyError> {
    Ok(laplace_residual(&PointContext::new(spec, point, 3)?))
}

pub fn check_geodesic_nu(spec: &SolutionSpec, point: &[f64]) -> Result<f64, VerifyError> {
    geodesic_nu_residual(&PointContext::new(spec, point, 3)?)
}

/// `μ` over a plan.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MuSummary {
    pub mean: f64,
    pub max_deviation: f64,
    /// `|mean − expected|`, when the case declares `μ`.
    pub expected_gap: Option<f64>,
}

impl MuSummary {
    pub fn residual(&self) -> f64 {
        self.max_deviation.max(self.expected_gap.unwrap_or(0.0))
    }
}

fn summarize_constant(values: &[f64], expected: Option<f64>) -> MuSummary {
    let mean = values.iter().sum::<f64>() / values.len() as f64;
    MuSummary {
        mean,
        max_deviation: values.iter().map(|v| (v - mean).abs()).fold(0.0, f64::max),
        expected_gap: expected.map(|e| (mean - e).abs()),
    }
}

pub fn check_mu(spec: &SolutionSpec, plan: &Plan) -> Result<MuSummary, VerifyError> {
    let values = plan
        .points
        .iter()
        .map(|p| PointContext::new(spec, p, 3).map(|c| mu_value(&c)))
        .collect::<Result<Vec<_>, _>>()?;
    if values.is_empty() {
        return Err(VerifyError::InvalidConfig("empty sample plan".into()));
    }
    Ok(summarize_constant(&values, spec.expected_mu))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelSetSummary {
    pub points: usize,
    pub max_shape: f64,
    pub max_gauss_gap: f64,
}

/// `None` when `f` has no zero on the chart.
pub fn check_level_set(spec: &SolutionSpec, plan: &Plan) -> Result<Option<LevelSetSummary>, VerifyError> {
    let Some(points) = zero_set_points(spec, plan, LEVEL_SET_POINTS) else {
        return Ok(None);
    };
    let mut summary = LevelSetSummary {
        points: points.len(),
        max_shape: 0.0,
        max_gauss_gap: 0.0,
    };
    for p in &points {
        let ls = level_set_geometry(&PointContext::new(spec, p, 3)?)?;
        summary.max_shape = summary.max_shape.max(ls.shape_norm);
        summary.max_gauss_gap = summary.max_gauss_gap.max(ls.gauss_scalar.abs());
    }
    Ok(Some(summary))
}

/// Worst Killing residuals over a plan; `norm_value` is the spread of
/// `|η|² + εf²` about its mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KillingSummary {
    pub worst: KillingResiduals,
    pub norm_mean: f64,
}

fn killing_inputs(spec: &SolutionSpec) -> Result<(&crate::geometry::VectorFieldSpec, f64), VerifyError> {
    let eta = spec
        .eta
        .as_ref()
        .ok_or_else(|| VerifyError::NotApplicable(format!("{} has no Killing field", spec.name)))?;
    let eps = spec
        .epsilon
        .ok_or_else(|| VerifyError::NotApplicable(format!("{} has no curvature sign", spec.name)))?;
    Ok((eta, eps.value()))
}

pub fn check_killing_suite(spec: &SolutionSpec, plan: &Plan) -> Result<KillingSummary, VerifyError> {
    let (eta, eps) = killing_inputs(spec)?;
    let all = plan
        .points
        .iter()
        .map(|p| {
            let ctx = PointContext::new(spec, p, 3)?;
            let e = ctx.geo.evaluate_vector(eta);
            killing_residuals(&ctx, &e, eps)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(aggregate_killing(&all))
}

fn aggregate_killing(all: &[KillingResiduals]) -> KillingSummary {
    let norms: Vec<f64> = all.iter().map(|k| k.norm_value).collect();
    let spread = summarize_constant(&norms, None);
    let mut worst = all.iter().fold(
        KillingResiduals {
            killing_eq: 0.0,
            orthogonal: 0.0,
            nabla_eta_eta: 0.0,
            norm_value: 0.0,
            ricci_eta: 0.0,
            third_singular: 0.0,
            commutator: 0.0,
            nabla_eta_form: 0.0,
        },
        |w, k| KillingResiduals {
            killing_eq: w.killing_eq.max(k.killing_eq),
            orthogonal: w.orthogonal.max(k.orthogonal),
            nabla_eta_eta: w.nabla_eta_eta.max(k.nabla_eta_eta),
            norm_value: 0.0,
            ricci_eta: w.ricci_eta.max(k.ricci_eta),
            third_singular: w.third_singular.max(k.third_singular),
            commutator: w.commutator.max(k.commutator),
            nabla_eta_form: w.nabla_eta_form.max(k.nabla_eta_form),
        },
    );
    worst.norm_value = spread.max_deviation;
    KillingSummary {
        worst,
        norm_mean: spread.mean,
    }
}

fn ricci_applicable(spec: &SolutionSpec) -> Result<(&crate::geometry::VectorFieldSpec, f64), VerifyError> {
    let (eta, _) = killing_inputs(spec)?;
    let s = spec
        .expected_s
        .filter(|s| *s != 0.0)
        .ok_or_else(|| VerifyError::NotApplicable("Ricci structure needs S != 0".into()))?;
    if spec.dim() < 3 {
        return Err(VerifyError::NotApplicable(
            "Ricci structure needs dimension >= 3".into(),
        ));
    }
    Ok((eta, s))
}

pub fn check_ricci_structure(spec: &SolutionSpec, plan: &Plan) -> Result<RicciResiduals, VerifyError> {
    let (eta, s) = ricci_applicable(spec)?;
    let mut worst = RicciResiduals {
        eigenvalues: 0.0,
        ric2_eta: 0.0,
        nabla_nu_ric: 0.0,
    };
    for p in &plan.points {
        let ctx = PointContext::new(spec, p, 3)?;
        let r = ricci_residuals(&ctx, &ctx.geo.evaluate_vector(eta), s)?;
        worst.eigenvalues = worst.eigenvalues.max(r.eigenvalues);
        worst.ric2_eta = worst.ric2_eta.max(r.ric2_eta);
        worst.nabla_nu_ric = worst.nabla_nu_ric.max(r.nabla_nu_ric);
    }
    Ok(worst)
}

// Reports.

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckStatus {
    Pass,
    Fail,
    NotApplicable,
    Error,
}

/// One named check aggregated over its points.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckRecord {
    pub id: String,
    pub points: usize,
    pub max_residual: Option<f64>,
    pub mean_residual: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    pub status: CheckStatus,
    /// A representative value, e.g. the mean of `μ`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub value: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub detail: Option<String>,
}

impl CheckRecord {
    fn measured(id: &str, residuals: &[f64], tolerance: f64) -> Self {
        let max = residuals.iter().copied().fold(0.0, f64::max);
        let mean = residuals.iter().sum::<f64>() / residuals.len().max(1) as f64;
        let finite = residuals.iter().all(|r| r.is_finite());
        let pass = finite && !residuals.is_empty() && max <= tolerance;
        CheckRecord {
            id: id.into(),
            points: residuals.len(),
            max_residual: Some(max),
            mean_residual: Some(mean),
            tolerance,
            pass,
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            value: None,
            detail: (!finite).then(|| "non-finite residual".to_string()),
        }
    }

    fn with_value(mut self, v: f64) -> Self {
        self.value = Some(v);
        self
    }

    fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }

    fn not_applicable(id: &str, tolerance: f64, reason: impl Into<String>) -> Self {
        CheckRecord {
            id: id.into(),
            points: 0,
            max_residual: None,
            mean_residual: None,
            tolerance,
            pass: true,
            status: CheckStatus::NotApplicable,
            value: None,
            detail: Some(reason.into()),
        }
    }

    fn error(id: &str, tolerance: f64, err: &VerifyError) -> Self {
        CheckRecord {
            id: id.into(),
            points: 0,
            max_residual: None,
            mean_residual: None,
            tolerance,
            pass: false,
            status: CheckStatus::Error,
            value: None,
            detail: Some(err.to_string()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ReportMeta {
    pub timestamp: String,
    pub duration_ms: u64,
}

/// Checks of one case, sorted by id. `pass` is the conjunction over every
/// applicable check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub case: String,
    pub checks: Vec<CheckRecord>,
    pub pass: bool,
    pub config: ToleranceConfig,
    pub meta: ReportMeta,
}

impl VerificationReport {
    pub fn check(&self, id: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.id == id)
    }
}

/// Resolves `case` in the catalog and runs every applicable check.
pub fn run_suite(case: &str, config: &ToleranceConfig) -> Result<VerificationReport, VerifyError> {
    config.validate()?;
    let spec = catalog::by_name(case)?;
    Ok(run_spec(&spec, config))
}

/// Runs the suite on an already-built spec.
pub fn run_spec(spec: &SolutionSpec, config: &ToleranceConfig) -> VerificationReport {
    let started = Instant::now();
    let base = config.base(spec.tolerance_class);
    let order = config.jet_order;
    let plan = Plan::halton(&spec.patch, config.samples, config.seed);
    let contexts: Vec<Result<PointContext, VerifyError>> =
        plan.points.iter().map(|p| PointContext::new(spec, p, order)).collect();

    let mut checks = Vec::new();
    let pointwise =
        |id: &str, tol: f64, f: &dyn Fn(&PointContext) -> Result<f64, VerifyError>| match collect(&contexts, f) {
            Ok(residuals) => CheckRecord::measured(id, &residuals, tol),
            Err(e) => CheckRecord::error(id, tol, &e),
        };

    checks.push(pointwise(ids::RESIDUAL_MAIN, base, &|c| Ok(main_residual(c))));
    checks.push(pointwise(ids::RIC_GRAD, 10.0 * base, &ric_grad_residual));
    checks.push(pointwise(ids::LAPLACE_IDENTITY, base, &|c| Ok(laplace_residual(c))));
    checks.push(pointwise(ids::CURVATURE_SELF_TEST, 0.01 * base, &|c| {
        Ok(c.curv.self_test_residual())
    }));
    match spec.expected_s {
        // a constant S also has vanishing gradient
        Some(s) => checks.push(pointwise(ids::CURVATURE_SCALAR, 0.1 * base, &|c| {
            let ds = c.curv.grad_scalar.as_ref().map_or(0.0, |d| g_norm(&c.curv.g, d));
            Ok((c.curv.scalar - s).abs().max(ds))
        })),
        None => checks.push(CheckRecord::not_applicable(
            ids::CURVATURE_SCALAR,
            0.1 * base,
            "scalar curvature is not constant",
        )),
    }
    if spec.expected_s.is_some() {
        checks.push(pointwise(ids::GEODESIC_NU, base, &geodesic_nu_residual));
    } else {
        checks.push(CheckRecord::not_applicable(
            ids::GEODESIC_NU,
            base,
            "scalar curvature is not constant",
        ));
    }

    checks.push(mu_record(spec, &contexts, base));
    checks.extend(level_set_records(spec, &plan, order, base));
    checks.extend(killing_records(spec, &contexts, base));
    checks.extend(ricci_records(spec, &contexts, base));
    checks.push(radial_record(spec));

    checks.sort_by(|a, b| a.id.cmp(&b.id));
    let pass = checks.iter().all(|c| c.pass);
    VerificationReport {
        case: spec.name.clone(),
        checks,
        pass,
        config: *config,
        meta: ReportMeta {
            timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            duration_ms: started.elapsed().as_millis() as u64,
        },
    }
}

fn collect<T>(
    contexts: &[Result<PointContext, VerifyError>],
    f: impl Fn(&PointContext) -> Result<T, VerifyError>,
) -> Result<Vec<T>, VerifyError> {
    contexts
        .iter()
        .map(|c| c.as_ref().map_err(Clone::clone).and_then(&f))
        .collect()
}

fn mu_record(spec: &SolutionSpec, contexts: &[Result<PointContext, VerifyError>], tol: f64) -> CheckRecord {
    match collect(contexts, |c| Ok(mu_value(c))) {
        Ok(values) => {
            let s = summarize_constant(&values, spec.expected_mu);
            let deviations: Vec<f64> = values.iter().map(|v| (v - s.mean).abs()).collect();
            let mut rec = CheckRecord::measured(ids::MU, &deviations, tol).with_value(s.mean);
            if let Some(gap) = s.expected_gap {
                rec.max_residual = Some(s.residual());
                rec.pass = rec.pass && gap <= tol;
                rec.status = if rec.pass { CheckStatus::Pass } else { CheckStatus::Fail };
                rec = rec.with_detail(format!(
                    "mean {:.12} vs expected {}",
                    s.mean,
                    spec.expected_mu.unwrap_or(f64::NAN)
                ));
            }
            rec
        }
        Err(e) => CheckRecord::error(ids::MU, tol, &e),
    }
}

fn level_set_records(spec: &SolutionSpec, plan: &Plan, order: usize, tol: f64) -> Vec<CheckRecord> {
    let ids = [ids::LEVEL_SET_SHAPE, ids::LEVEL_SET_GAUSS];
    let Some(points) = zero_set_points(spec, plan, LEVEL_SET_POINTS) else {
        return ids
            .iter()
            .map(|id| CheckRecord::not_applicable(id, tol, "f has no zero on the chart"))
            .collect();
    };
    let result: Result<Vec<LevelSetGeometry>, VerifyError> = points
        .iter()
        .map(|p| PointContext::new(spec, p, order).and_then(|c| level_set_geometry(&c)))
        .collect();
    match result {
        Ok(ls) => {
            let shape: Vec<f64> = ls.iter().map(|l| l.shape_norm).collect();
            let gauss: Vec<f64> = ls.iter().map(|l| l.gauss_scalar.abs()).collect();
            vec![
                CheckRecord::measured(ids::LEVEL_SET_SHAPE, &shape, tol),
                CheckRecord::measured(ids::LEVEL_SET_GAUSS, &gauss, tol),
            ]
        }
        Err(e) => ids.iter().map(|id| CheckRecord::error(id, tol, &e)).collect(),
    }
}

const KILLING_IDS: [&str; 8] = [
    ids::KILLING_A,
    ids::KILLING_B,
    ids::KILLING_C,
    ids::KILLING_D,
    ids::KILLING_E,
    ids::KILLING_F,
    ids::KILLING_G,
    ids::KILLING_H,
];

fn killing_records(spec: &SolutionSpec, contexts: &[Result<PointContext, VerifyError>], base: f64) -> Vec<CheckRecord> {
    let tol = 10.0 * base;
    let (eta, eps) = match killing_inputs(spec) {
        Ok(v) => v,
        Err(e) => {
            return KILLING_IDS
                .iter()
                .map(|id| CheckRecord::not_applicable(id, tol, e.to_string()))
                .collect()
        }
    };
    match collect(contexts, |c| killing_residuals(c, &c.geo.evaluate_vector(eta), eps)) {
        Ok(all) => {
            let spread = aggregate_killing(&all).norm_mean;
            let column = |pick: fn(&KillingResiduals) -> f64| all.iter().map(pick).collect::<Vec<_>>();
            let norms = column(|k| k.norm_value);
            let dev: Vec<f64> = norms.iter().map(|v| (v - spread).abs()).collect();
            vec![
                CheckRecord::measured(ids::KILLING_A, &column(|k| k.killing_eq), tol),
                CheckRecord::measured(ids::KILLING_B, &column(|k| k.orthogonal), tol),
                CheckRecord::measured(ids::KILLING_C, &column(|k| k.nabla_eta_eta), tol),
                CheckRecord::measured(ids::KILLING_D, &dev, tol).with_value(spread),
                CheckRecord::measured(ids::KILLING_E, &column(|k| k.ricci_eta), tol),
                CheckRecord::measured(ids::KILLING_F, &column(|k| k.third_singular), tol),
                CheckRecord::measured(ids::KILLING_G, &column(|k| k.commutator), tol),
                CheckRecord::measured(ids::KILLING_H, &column(|k| k.nabla_eta_form), tol),
            ]
        }
        Err(e) => KILLING_IDS.iter().map(|id| CheckRecord::error(id, tol, &e)).collect(),
    }
}

fn ricci_records(spec: &SolutionSpec, contexts: &[Result<PointContext, VerifyError>], base: f64) -> Vec<CheckRecord> {
    let ids = [ids::RICCI_EIGENVALUES, ids::RICCI_NABLA_NU, ids::RICCI_RIC2_ETA];
    let (eta, s) = match ricci_applicable(spec) {
        Ok(v) => v,
        Err(e) => {
            return ids
                .iter()
                .map(|id| CheckRecord::not_applicable(id, base, e.to_string()))
                .collect()
        }
    };
    match collect(contexts, |c| ricci_residuals(c, &c.geo.evaluate_vector(eta), s)) {
        Ok(all) => vec![
            CheckRecord::measured(
                ids::RICCI_EIGENVALUES,
                &all.iter().map(|r| r.eigenvalues).collect::<Vec<_>>(),
                base,
            ),
            CheckRecord::measured(
                ids::RICCI_NABLA_NU,
                &all.iter().map(|r| r.nabla_nu_ric).collect::<Vec<_>>(),
                base,
            ),
            CheckRecord::measured(
                ids::RICCI_RIC2_ETA,
                &all.iter().map(|r| r.ric2_eta).collect::<Vec<_>>(),
                base,
            ),
        ],
        Err(e) => ids.iter().map(|id| CheckRecord::error(id, base, &e)).collect(),
    }
}

fn radial_record(spec: &SolutionSpec) -> CheckRecord {
    match &spec.radial {
        Some(sol) => {
            let residuals: Vec<f64> = (0..sol.grid_len()).filter_map(|i| sol.residual_at_node(i)).collect();
            CheckRecord::measured(ids::RADIAL_POISSON, &residuals, RADIAL_TOLERANCE)
                .with_detail(format!("step-doubling error estimate {:e}", sol.error_estimate()))
        }
        None => CheckRecord::not_applicable(ids::RADIAL_POISSON, RADIAL_TOLERANCE, "no radial construction"),
    }
}

/// Outcome of comparing a case with its `λ²g` rescaling.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingComparison {
    pub verdicts_match: bool,
    /// Largest relative gap between `residual_main` maxima scaled by `λ²`.
    pub relative_gap: f64,
}

/// `∇²f` and `f·Ric` both scale by `λ⁻²` under `g ↦ λ²g`, so residuals do
/// too, while pass/fail verdicts of the unscaled checks are unchanged.
pub fn compare_scaling(
    spec: &SolutionSpec,
    lambda: f64,
    config: &ToleranceConfig,
) -> Result<ScalingComparison, VerifyError> {
    config.validate()?;
    let scaled = spec.clone().with_metric_scale(lambda);
    let plan = Plan::halton(&spec.patch, config.samples, config.seed);
    let mut relative_gap: f64 = 0.0;
    for p in &plan.points {
        let a = main_residual(&PointContext::new(spec, p, config.jet_order)?);
        let b = main_residual(&PointContext::new(&scaled, p, config.jet_order)?) * lambda * lambda;
        let scale = a.abs().max(b.abs());
        if scale > 0.0 {
            relative_gap = relative_gap.max((a - b).abs() / scale);
        }
    }
    let r1 = run_spec(spec, config);
    let r2 = run_spec(&scaled, config);
    let verdict = |r: &VerificationReport, id: &str| r.check(id).map(|c| c.status);
    let verdicts_match = [
        ids::RESIDUAL_MAIN,
        ids::RIC_GRAD,
        ids::LAPLACE_IDENTITY,
        ids::GEODESIC_NU,
    ]
    .iter()
    .all(|id| verdict(&r1, id) == verdict(&r2, id));
    Ok(ScalingComparison {
        verdicts_match,
        relative_gap,
    })
}
