//! Every manifold/solution pair the engine knows how to verify.
//!
//! Each constructor returns a [`SolutionSpec`]: a chart with its metric, the
//! function `f`, an optional vector field `η`, and the constants the
//! solution is expected to exhibit (`S`, `μ`, `ε`). The constant-curvature
//! cases are normalized so that `S = 2ε` and `μ ∈ {−2, 0, 2}`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;
use thiserror::Error;

use crate::geometry::{ChartPatch, Domain, DomainFactor, ScalarField, VectorFieldSpec};
use crate::jets::Jet;
use crate::ode::{OdeError, RadialPoisson};
use crate::sampling::Plan;

/// Stable identifiers of the catalog cases, in listing order.
pub const CASE_NAMES: [&str; 13] = [
    "sphere2",
    "euclidean2",
    "euclidean3",
    "cylinder",
    "hyp2-cosh",
    "hyp2-sinh",
    "hyp2-exp",
    "sphere2xflat2",
    "hyp2-coshxflat2",
    "euclidean2xflat1",
    "conformal3-linear",
    "conformal3-quadratic",
    "hyp3-radial",
];

/// Deliberately broken variants used to show the checks can fail. They
/// resolve by name but are not part of `all`.
pub const NEGATIVE_CONTROLS: [&str; 2] = ["sphere2-negcontrol", "sphere2-eta-misscaled"];

/// Amplitude of the `cos 2θ` perturbation in `sphere2-negcontrol`.
pub const NEGCONTROL_PERTURBATION: f64 = 1e-3;
/// Number of points used for the flat-Laplacian harmonicity check.
const HARMONIC_CHECK_POINTS: usize = 50;
const HARMONIC_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CatalogError {
    #[error("unknown case '{0}'")]
    UnknownCase(String),
    #[error("direction vector must be nonzero")]
    ZeroDirection,
    #[error("euclidean cases exist in dimension 2 or 3, not {0}")]
    UnsupportedDimension(usize),
    #[error("product base must be 2-dimensional, got {0}")]
    BaseNotTwoDimensional(usize),
    #[error("flat factor dimension must be 1 or 2, got {0}")]
    BadFlatFactor(usize),
    #[error("u is not harmonic: flat Laplacian {laplacian:e} at {point:?}")]
    NotHarmonic { point: Vec<f64>, laplacian: f64 },
    #[error(transparent)]
    Ode(#[from] OdeError),
}

/// Sign of the normalized scalar curvature `S = 2ε`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Epsilon {
    #[serde(rename = "-1")]
    Negative,
    #[serde(rename = "0")]
    Zero,
    #[serde(rename = "+1")]
    Positive,
}

impl Epsilon {
    pub fn value(self) -> f64 {
        match self {
            Epsilon::Negative => -1.0,
            Epsilon::Zero => 0.0,
            Epsilon::Positive => 1.0,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            Epsilon::Negative => "-1",
            Epsilon::Zero => "0",
            Epsilon::Positive => "+1",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Bound {
    Open(f64),
    Closed(f64),
    Unbounded,
}

/// An interval of real values, e.g. `[1, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ValueRange {
    pub lo: Bound,
    pub hi: Bound,
}

impl ValueRange {
    pub const REAL_LINE: ValueRange = ValueRange {
        lo: Bound::Unbounded,
        hi: Bound::Unbounded,
    };

    /// Membership; closed bounds are widened by `slack`.
    pub fn contains(&self, y: f64, slack: f64) -> bool {
        let lo_ok = match self.lo {
            Bound::Open(a) => y > a,
            Bound::Closed(a) => y >= a - slack,
            Bound::Unbounded => true,
        };
        let hi_ok = match self.hi {
            Bound::Open(b) => y < b,
            Bound::Closed(b) => y <= b + slack,
            Bound::Unbounded => true,
        };
        y.is_finite() && lo_ok && hi_ok
    }
}

impl std::fmt::Display for ValueRange {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.lo {
            Bound::Open(a) => write!(f, "({a}, ")?,
            Bound::Closed(a) => write!(f, "[{a}, ")?,
            Bound::Unbounded => write!(f, "(-inf, ")?,
        }
        match self.hi {
            Bound::Open(b) => write!(f, "{b})"),
            Bound::Closed(b) => write!(f, "{b}]"),
            Bound::Unbounded => write!(f, "inf)"),
        }
    }
}

/// Which tolerance governs a case's identity checks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ToleranceClass {
    Identity,
    /// Accuracy bounded by a numerical ODE solution inside the construction.
    OdeLimited,
}

/// A chart, a function `f` on it, and everything `f` is expected to satisfy.
#[derive(Debug, Clone)]
pub struct SolutionSpec {
    pub name: String,
    pub patch: ChartPatch,
    pub f: ScalarField,
    pub eta: Option<VectorFieldSpec>,
    pub expected_s: Option<f64>,
    pub expected_mu: Option<f64>,
    pub epsilon: Option<Epsilon>,
    pub critical_values: Vec<f64>,
    /// Image `f(M)` of the complete model.
    pub expected_range: Option<ValueRange>,
    /// Default starting point of the normalized gradient flow.
    pub flow_start: Option<Vec<f64>>,
    pub tolerance_class: ToleranceClass,
    /// The radial Poisson solution underlying the construction, if any.
    pub radial: Option<Arc<RadialPoisson>>,
    pub tags: Vec<String>,
}

impl SolutionSpec {
    pub fn dim(&self) -> usize {
        self.patch.dim()
    }

    pub fn has_constant_scalar(&self) -> bool {
        self.expected_s.is_some()
    }

    pub fn renamed(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_f(mut self, f: ScalarField) -> Self {
        self.f = f;
        self
    }

    pub fn with_eta(mut self, eta: Option<VectorFieldSpec>) -> Self {
        self.eta = eta;
        self
    }

    /// The same solution on `(M, λ² g)`: `S` and `μ` scale by `λ⁻²`.
    pub fn with_metric_scale(mut self, lambda: f64) -> Self {
        let s = lambda.powi(-2);
        self.patch = self.patch.scaled(lambda);
        self.expected_s = self.expected_s.map(|v| v * s);
        self.expected_mu = self.expected_mu.map(|v| v * s);
        self.tags.push(format!("metric scaled by {lambda}^2"));
        self
    }
}

fn zero(x: &Jet) -> Jet {
    x.lift(0.0)
}

fn diagonal(entries: Vec<Jet>) -> Vec<Vec<Jet>> {
    let n = entries.len();
    (0..n)
        .map(|i| {
            (0..n)
                .map(|j| if i == j { entries[i].clone() } else { zero(&entries[i]) })
                .collect()
        })
        .collect()
}

fn flat_metric(x: &[Jet]) -> Vec<Vec<Jet>> {
    diagonal(x.iter().map(|xi| xi.lift(1.0)).collect())
}

fn flat_patch(label: &str, bounds: &[(f64, f64)]) -> ChartPatch {
    ChartPatch::new(label, Domain::boxed(bounds), flat_metric)
}

fn sphere_patch() -> ChartPatch {
    ChartPatch::new(
        "round S^2, (theta, phi)",
        Domain::boxed(&[(0.0, PI), (0.0, 2.0 * PI)]),
        |x| diagonal(vec![x[0].lift(1.0), x[0].sin().square()]),
    )
}

fn poincare_disk() -> ChartPatch {
    ChartPatch::new(
        "Poincare disk 4|dx|^2/(1-|x|^2)^2",
        Domain::new(vec![DomainFactor::Disk { radius: 1.0 }]),
        |x| {
            let w = (1.0 - (x[0].square() + x[1].square())).powi(-2) * 4.0;
            diagonal(vec![w.clone(), w])
        },
    )
}

fn upper_half_plane() -> ChartPatch {
    ChartPatch::new(
        "upper half-plane (dx^2+dy^2)/y^2",
        Domain::boxed(&[(-1.0, 1.0), (0.5, 2.5)]),
        |x| {
            let w = x[1].square().recip();
            diagonal(vec![w.clone(), w])
        },
    )
}

/// Round unit sphere with `f = cos θ` and the rotation field `η = ∂_φ`.
pub fn sphere2() -> SolutionSpec {
    SolutionSpec {
        name: "sphere2".into(),
        patch: sphere_patch(),
        f: ScalarField::new("cos(theta)", |x| x[0].cos()),
        eta: Some(VectorFieldSpec::new("d/dphi (normalized)", |x| {
            vec![zero(&x[0]), x[0].lift(1.0)]
        })),
        expected_s: Some(2.0),
        expected_mu: Some(2.0),
        epsilon: Some(Epsilon::Positive),
        critical_values: vec![-1.0, 1.0],
        expected_range: Some(ValueRange {
            lo: Bound::Closed(-1.0),
            hi: Bound::Closed(1.0),
        }),
        flow_start: Some(vec![PI / 2.0, PI]),
        tolerance_class: ToleranceClass::Identity,
        radial: None,
        tags: vec!["obata".into(), "first eigenfunction".into()],
    }
}

/// Flat `ℝⁿ` (`n ∈ {2, 3}`) with `f = (⟨a, x⟩ + b)/|a|`, so `|∇f| = 1`.
pub fn euclidean(n: usize, a: &[f64], b: f64) -> Result<SolutionSpec, CatalogError> {
    if !(2..=3).contains(&n) || a.len() != n {
        return Err(CatalogError::UnsupportedDimension(if a.len() != n {
            a.len()
        } else {
            n
        }));
    }
    let norm = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    if !(norm > 0.0) || !norm.is_finite() {
        return Err(CatalogError::ZeroDirection);
    }
    let unit: Vec<f64> = a.iter().map(|v| v / norm).collect();
    let offset = b / norm;
    let coeffs = unit.clone();
    let f = ScalarField::new(format!("<{a:?}, x>/|a| + {offset}"), move |x| {
        let mut acc = x[0].lift(offset);
        for (xi, ai) in x.iter().zip(&coeffs) {
            acc += &(xi * *ai);
        }
        acc
    });

    let eta = (n == 3).then(|| {
        // unit vector orthogonal to a, started from the axis a is least aligned with
        let k = (0..n)
            .min_by(|&i, &j| unit[i].abs().total_cmp(&unit[j].abs()))
            .unwrap_or(0);
        let mut v: Vec<f64> = (0..n).map(|i| if i == k { 1.0 } else { 0.0 }).collect();
        let dot = unit[k];
        v.iter_mut().zip(&unit).for_each(|(vi, ui)| *vi -= dot * ui);
        let vn = v.iter().map(|c| c * c).sum::<f64>().sqrt();
        let v: Vec<f64> = v.iter().map(|c| c / vn).collect();
        VectorFieldSpec::new(format!("constant {v:?}"), move |x| {
            v.iter().map(|&c| x[0].lift(c)).collect()
        })
    });

    Ok(SolutionSpec {
        name: format!("euclidean{n}"),
        patch: flat_patch(&format!("flat R^{n}"), &vec![(-2.0, 2.0); n]),
        f,
        eta,
        expected_s: Some(0.0),
        expected_mu: Some(2.0),
        epsilon: Some(Epsilon::Zero),
        critical_values: vec![],
        expected_range: Some(ValueRange::REAL_LINE),
        flow_start: Some(vec![0.0; n]),
        tolerance_class: ToleranceClass::Identity,
        radial: None,
        tags: vec!["affine".into()],
    })
}

/// Flat cylinder `S¹ × ℝ` in coordinates `(s, t)` with `f = t + b`.
pub fn cylinder(b: f64) -> SolutionSpec {
    const HALF_HEIGHT: f64 = 2.0;
    SolutionSpec {
        name: "cylinder".into(),
        patch: flat_patch("flat S^1 x R, (s, t)", &[(0.0, 2.0 * PI), (-HALF_HEIGHT, HALF_HEIGHT)]),
        f: ScalarField::new(format!("t + {b}"), move |x| &x[1] + b),
        eta: None,
        expected_s: Some(0.0),
        expected_mu: Some(2.0),
        epsilon: Some(Epsilon::Zero),
        critical_values: vec![],
        expected_range: Some(ValueRange::REAL_LINE),
        flow_start: Some(vec![PI, 0.0]),
        tolerance_class: ToleranceClass::Identity,
        radial: None,
        tags: vec!["affine".into(), "periodic in s".into()],
    }
}

/// Which Tashiro solution on the hyperbolic plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HyperbolicKind {
    /// `f = cosh(dist to a point)`, `μ = −2`.
    Cosh,
    /// `f = sinh(signed dist to a geodesic)`, `μ = 2`.
    Sinh,
    /// `f = e^(Busemann)`, `μ = 0`.
    Exp,
}

/// The hyperbolic plane with one of the three normalized Tashiro solutions.
pub fn hyperbolic2(kind: HyperbolicKind) -> SolutionSpec {
    let base = |name: &str, patch, f, eta, mu, crit: Vec<f64>, range, start: Vec<f64>| SolutionSpec {
        name: name.into(),
        patch,
        f,
        eta: Some(eta),
        expected_s: Some(-2.0),
        expected_mu: Some(mu),
        epsilon: Some(Epsilon::Negative),
        critical_values: crit,
        expected_range: Some(range),
        flow_start: Some(start),
        tolerance_class: ToleranceClass::Identity,
        radial: None,
        tags: vec!["tashiro".into()],
    };
    match kind {
        HyperbolicKind::Cosh => base(
            "hyp2-cosh",
            poincare_disk(),
            ScalarField::new("(1+|x|^2)/(1-|x|^2)", |x| {
                let r2 = x[0].square() + x[1].square();
                (1.0 + r2.clone()) / (1.0 - r2)
            }),
            // rotation about the origin, unit speed on the unit-distance circle scale
            VectorFieldSpec::new("rotation (-x2, x1)", |x| vec![-&x[1], x[0].clone()]),
            -2.0,
            vec![1.0],
            ValueRange {
                lo: Bound::Closed(1.0),
                hi: Bound::Unbounded,
            },
            vec![0.5, 0.0],
        ),
        HyperbolicKind::Sinh => base(
            "hyp2-sinh",
            poincare_disk(),
            ScalarField::new("2 x1/(1-|x|^2)", |x| {
                let r2 = x[0].square() + x[1].square();
                (&x[0] * 2.0) / (1.0 - r2)
            }),
            // hyperbolic translation along the x2-axis geodesic: (i/2)(1 + z^2)
            VectorFieldSpec::new("translation along x2-axis", |x| {
                vec![-(&x[0] * &x[1]), (1.0 + x[0].square() - x[1].square()) * 0.5]
            }),
            2.0,
            vec![],
            ValueRange::REAL_LINE,
            vec![-0.3, 0.2],
        ),
        HyperbolicKind::Exp => base(
            "hyp2-exp",
            upper_half_plane(),
            ScalarField::new("1/y", |x| x[1].recip()),
            VectorFieldSpec::new("d/dx", |x| vec![x[0].lift(1.0), zero(&x[0])]),
            0.0,
            vec![],
            ValueRange {
                lo: Bound::Open(0.0),
                hi: Bound::Unbounded,
            },
            vec![0.0, 2.2],
        ),
    }
}

/// Riemannian product of a 2-dimensional case with flat `ℝᵏ`, `k ∈ {1, 2}`.
pub fn product_with_flat(base: &SolutionSpec, k: usize) -> Result<SolutionSpec, CatalogError> {
    if base.dim() != 2 {
        return Err(CatalogError::BaseNotTwoDimensional(base.dim()));
    }
    if !(1..=2).contains(&k) {
        return Err(CatalogError::BadFlatFactor(k));
    }
    let total = 2 + k;
    let name = format!("{}xflat{k}", base.name);
    let flat = ChartPatch::new(format!("flat R^{k}"), Domain::boxed(&vec![(-1.0, 1.0); k]), flat_metric);
    let patch = base
        .patch
        .product(&flat, format!("{} x flat R^{k}", base.patch.label()));
    let eta = match base.epsilon {
        Some(Epsilon::Zero) => Some(VectorFieldSpec::new(
            "unit parallel field on the flat factor",
            move |x| (0..total).map(|i| x[0].lift(if i == 2 { 1.0 } else { 0.0 })).collect(),
        )),
        _ => base.eta.as_ref().map(|e| e.padded(2, total)),
    };
    let flow_start = base.flow_start.as_ref().map(|s| {
        let mut p = s.clone();
        p.resize(total, 0.0);
        p
    });
    let mut tags = base.tags.clone();
    tags.push("product".into());
    Ok(SolutionSpec {
        name,
        patch,
        f: base.f.on_leading_coordinates(2),
        eta,
        expected_s: base.expected_s,
        expected_mu: base.expected_mu,
        epsilon: base.epsilon,
        critical_values: base.critical_values.clone(),
        expected_range: base.expected_range,
        flow_start,
        tolerance_class: base.tolerance_class,
        radial: base.radial.clone(),
        tags,
    })
}

/// Flat Laplacian `Σ ∂ᵢ∂ᵢ u` (sign-free: harmonicity only).
fn flat_trace_hessian(u: &ScalarField, point: &[f64]) -> f64 {
    let coords = Jet::coordinates(point, 2).expect("dimension 3");
    let j = u.eval(&coords);
    (0..point.len()).map(|i| j.partial(&[i, i])).sum()
}

/// `(ℝ³ box, e^{−2u} δ)` with `f = e^{−u}` for a harmonic `u`.
pub fn conformal_dim3(name: &str, u: ScalarField, check_harmonic: bool) -> Result<SolutionSpec, CatalogError> {
    let bounds = [(-1.0, 1.0); 3];
    let flat = flat_patch("flat R^3", &bounds);
    if check_harmonic {
        for p in Plan::halton(&flat, HARMONIC_CHECK_POINTS, 0).points {
            let lap = flat_trace_hessian(&u, &p);
            if !(lap.abs() <= HARMONIC_TOLERANCE) {
                return Err(CatalogError::NotHarmonic {
                    point: p,
                    laplacian: lap,
                });
            }
        }
    }
    let (u_metric, u_f) = (u.clone(), u.clone());
    let patch = ChartPatch::new(
        format!("R^3 box, e^(-2u) delta, u = {}", u.label()),
        Domain::boxed(&bounds),
        move |x| {
            let w = (-u_metric.eval(x) * 2.0).exp();
            diagonal(vec![w.clone(), w.clone(), w])
        },
    );
    Ok(SolutionSpec {
        name: name.into(),
        patch,
        f: ScalarField::new(format!("exp(-({}))", u.label()), move |x| (-u_f.eval(x)).exp()),
        eta: None,
        expected_s: None,
        expected_mu: None,
        epsilon: None,
        critical_values: vec![],
        expected_range: None,
        flow_start: None,
        tolerance_class: ToleranceClass::Identity,
        radial: None,
        tags: vec!["conformal".into(), "harmonic potential".into()],
    })
}

/// Geodesic-polar chart of `H³` rescaled by `e^{−2u(r)}` with `f = e^{−u}`,
/// where `u` solves `Δu = −2` radially (integrated numerically).
pub fn hyperbolic3_radial(slope: f64, r_range: (f64, f64)) -> Result<SolutionSpec, CatalogError> {
    let radial = Arc::new(RadialPoisson::solve(slope, r_range.0, r_range.1)?);
    let u_of = |sol: &RadialPoisson, r: &Jet| -> Jet {
        match sol.derivatives(r.value(), r.order()) {
            Ok(d) => r.compose(&d),
            Err(_) => r.lift(f64::NAN),
        }
    };
    let (sol_m, sol_f) = (radial.clone(), radial.clone());
    let patch = ChartPatch::new(
        "H^3 geodesic polar (r, theta, phi), e^(-2u) rescaled",
        Domain::boxed(&[r_range, (0.0, PI), (0.0, 2.0 * PI)]),
        move |x| {
            let w = (-u_of(&sol_m, &x[0]) * 2.0).exp();
            let sh2 = x[0].sinh().square();
            let sin2 = x[1].sin().square();
            diagonal(vec![w.clone(), &w * &sh2, w * sh2 * sin2])
        },
    );
    Ok(SolutionSpec {
        name: "hyp3-radial".into(),
        patch,
        f: ScalarField::new("exp(-u(r))", move |x| (-u_of(&sol_f, &x[0])).exp()),
        eta: None,
        expected_s: None,
        expected_mu: None,
        epsilon: None,
        critical_values: vec![],
        expected_range: None,
        flow_start: None,
        tolerance_class: ToleranceClass::OdeLimited,
        radial: Some(radial),
        tags: vec!["conformal".into(), "radial poisson".into()],
    })
}

/// Resolves a catalog or negative-control name.
pub fn by_name(name: &str) -> Result<SolutionSpec, CatalogError> {
    let spec = match name {
        "sphere2" => sphere2(),
        "euclidean2" => euclidean(2, &[1.0, 0.0], 0.0)?,
        "euclidean3" => euclidean(3, &[1.0, 0.0, 0.0], 0.0)?,
        "cylinder" => cylinder(0.5),
        "hyp2-cosh" => hyperbolic2(HyperbolicKind::Cosh),
        "hyp2-sinh" => hyperbolic2(HyperbolicKind::Sinh),
        "hyp2-exp" => hyperbolic2(HyperbolicKind::Exp),
        "sphere2xflat2" => product_with_flat(&sphere2(), 2)?,
        "hyp2-coshxflat2" => product_with_flat(&hyperbolic2(HyperbolicKind::Cosh), 2)?,
        "euclidean2xflat1" => product_with_flat(&by_name("euclidean2")?, 1)?,
        "conformal3-linear" => conformal_dim3(name, ScalarField::new("x1", |x| x[0].clone()), true)?,
        "conformal3-quadratic" => conformal_dim3(
            name,
            ScalarField::new("x1^2 - x2^2", |x| x[0].square() - x[1].square()),
            true,
        )?,
        "hyp3-radial" => hyperbolic3_radial(0.5, (0.5, 2.0))?,
        "sphere2-negcontrol" => sphere2()
            .with_f(ScalarField::new("cos(theta) + 1e-3 cos(2 theta)", |x| {
                x[0].cos() + (&x[0] * 2.0).cos() * NEGCONTROL_PERTURBATION
            }))
            .renamed(name),
        "sphere2-eta-misscaled" => {
            let spec = sphere2();
            let eta = spec.eta.as_ref().map(|e| e.scaled(2.0));
            spec.with_eta(eta).renamed(name)
        }
        other => return Err(CatalogError::UnknownCase(other.to_string())),
    };
    Ok(spec)
}

pub fn is_known(name: &str) -> bool {
    CASE_NAMES.contains(&name) || NEGATIVE_CONTROLS.contains(&name)
}

/// The thirteen catalog cases in listing order.
pub fn all_cases() -> Vec<SolutionSpec> {
    CASE_NAMES
        .iter()
        .map(|n| by_name(n).expect("catalog names resolve"))
        .collect()
}
