//! Normalized gradient flow `γ' = ∇f/|∇f|` and the closed-form profiles of
//! `y = f∘γ` on constant-curvature cases.

use serde::Serialize;
use thiserror::Error;

use crate::catalog::{SolutionSpec, ValueRange};
use crate::geometry::{g_norm, GeometryError, LocalGeometry};

/// Flow stops (or refuses to start) below this `|∇f|`.
pub const FLOW_CRITICAL_GRAD_NORM: f64 = 1e-4;
/// Fewest samples a profile fit accepts.
pub const MIN_FIT_SAMPLES: usize = 50;
/// Values of `S` and `μ` closer than this to zero count as zero.
const SIGN_TOLERANCE: f64 = 1e-9;
/// Slack on closed range bounds.
const RANGE_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum FlowError {
    #[error("S nonconstant: flow classification undefined")]
    NonConstantScalar,
    #[error("|grad f| = {grad_norm:e} at the start is below {min:e}", min = FLOW_CRITICAL_GRAD_NORM)]
    NearCritical { grad_norm: f64 },
    #[error("start point {0:?} is not inside the chart")]
    OutsideDomain(Vec<f64>),
    #[error("step {h} and span {span} must be positive with span/h <= 1e7")]
    BadStep { h: f64, span: f64 },
    #[error("trace has {0} samples, need at least {min}", min = MIN_FIT_SAMPLES)]
    TooFewSamples(usize),
    #[error("no closed-form profile for S = {s}, mu = {mu}")]
    UnknownCombination { s: f64, mu: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    RangeExhausted,
    NearCritical,
    LeftDomain,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSample {
    pub t: f64,
    pub point: Vec<f64>,
    pub y: f64,
    pub grad_norm: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowTrace {
    pub case_name: String,
    pub start: Vec<f64>,
    pub h: f64,
    pub samples: Vec<FlowSample>,
    pub termination: Termination,
}

impl FlowTrace {
    /// Trace as CSV with columns `t, coord_1..coord_n, y, grad_norm`.
    pub fn to_csv(&self) -> String {
        let n = self.start.len();
        let mut out = String::from("t");
        for i in 1..=n {
            out.push_str(&format!(",coord_{i}"));
        }
        out.push_str(",y,grad_norm\n");
        for s in &self.samples {
            out.push_str(&format!("{:e}", s.t));
            for c in &s.point {
                out.push_str(&format!(",{c:e}"));
            }
            out.push_str(&format!(",{:e},{:e}\n", s.y, s.grad_norm));
        }
        out
    }
}

/// Value of `f` and the normalized gradient at a point.
fn probe(spec: &SolutionSpec, point: &[f64]) -> Result<(f64, Vec<f64>, f64), GeometryError> {
    let geo = LocalGeometry::at_unchecked(&spec.patch, point, 1)?;
    let f = geo.evaluate(&spec.f);
    let grad = geo.gradient(&f);
    let norm = g_norm(&geo.metric(), &grad);
    let nu = grad.iter().map(|v| v / norm).collect();
    Ok((f.value(), nu, norm))
}

/// Classical RK4 on `γ' = ν(γ)` from `start`, sampled every step for up to
/// `span` time units.
pub fn integrate_flow(spec: &SolutionSpec, start: &[f64], span: f64, h: f64) -> Result<FlowTrace, FlowError> {
    if spec.expected_s.is_none() {
        return Err(FlowError::NonConstantScalar);
    }
    if !(h > 0.0 && span > 0.0 && h.is_finite() && span.is_finite() && span / h <= 1e7) {
        return Err(FlowError::BadStep { h, span });
    }
    if start.len() != spec.dim() || !spec.patch.is_interior(start) {
        return Err(FlowError::OutsideDomain(start.to_vec()));
    }
    let (y0, _, n0) = probe(spec, start)?;
    if !(n0 >= FLOW_CRITICAL_GRAD_NORM) {
        return Err(FlowError::NearCritical { grad_norm: n0 });
    }

    let mut samples = vec![FlowSample {
        t: 0.0,
        point: start.to_vec(),
        y: y0,
        grad_norm: n0,
    }];
    let mut x = start.to_vec();
    let steps = (span / h).round() as usize;
    let mut termination = Termination::RangeExhausted;
    let axpy = |a: &[f64], s: f64, b: &[f64]| -> Vec<f64> { a.iter().zip(b).map(|(x, d)| x + s * d).collect() };
    let nu_at = |p: &[f64]| probe(spec, p).ok().filter(|(_, _, n)| *n > 0.0).map(|(_, nu, _)| nu);

    for k in 1..=steps {
        let next = (|| {
            let k1 = nu_at(&x)?;
            let k2 = nu_at(&axpy(&x, 0.5 * h, &k1))?;
            let k3 = nu_at(&axpy(&x, 0.5 * h, &k2))?;
            let k4 = nu_at(&axpy(&x, h, &k3))?;
            Some(
                (0..x.len())
                    .map(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
                    .collect::<Vec<f64>>(),
            )
        })();
        let Some(next) = next.filter(|p| spec.patch.is_interior(p)) else {
            termination = Termination::LeftDomain;
            break;
        };
        let (y, _, n) = probe(spec, &next)?;
        if n < FLOW_CRITICAL_GRAD_NORM {
            termination = Termination::NearCritical;
            break;
        }
        samples.push(FlowSample {
            t: k as f64 * h,
            point: next.clone(),
            y,
            grad_norm: n,
        });
        x = next;
    }

    Ok(FlowTrace {
        case_name: spec.name.clone(),
        start: start.to_vec(),
        h,
        samples,
        termination,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileFamily {
    /// `y = A cos(kt + φ)`
    Cosine,
    /// `y = At + φ`
    Linear,
    /// `y = A sinh(kt + φ)`
    Sinh,
    /// `y = C e^{kt}`
    Exp,
    /// `y = A cosh(kt + φ)`
    Cosh,
}

impl ProfileFamily {
    pub fn name(self) -> &'static str {
        match self {
            ProfileFamily::Cosine => "cosine",
            ProfileFamily::Linear => "linear",
            ProfileFamily::Sinh => "sinh",
            ProfileFamily::Exp => "exp",
            ProfileFamily::Cosh => "cosh",
        }
    }
}

/// The profile family forced by the signs of `S` and `μ`.
pub fn family_for(s: f64, mu: f64) -> Result<ProfileFamily, FlowError> {
    let sign = |v: f64| {
        if v > SIGN_TOLERANCE {
            1
        } else if v < -SIGN_TOLERANCE {
            -1
        } else {
            0
        }
    };
    match (sign(s), sign(mu)) {
        (1, 1) => Ok(ProfileFamily::Cosine),
        (0, 1) => Ok(ProfileFamily::Linear),
        (-1, 1) => Ok(ProfileFamily::Sinh),
        (-1, 0) => Ok(ProfileFamily::Exp),
        (-1, -1) => Ok(ProfileFamily::Cosh),
        _ => Err(FlowError::UnknownCombination { s, mu }),
    }
}

/// Closed-form profile with its phase fixed by the first sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ProfileFit {
    pub family: ProfileFamily,
    /// Angular rate `k = sqrt(|S|/2)` (1 under the usual normalization).
    pub rate: f64,
    /// `A` (or the slope, for the linear family).
    pub amplitude: f64,
    /// `φ`, absent for the exponential family.
    pub phase: Option<f64>,
    /// `C`, exponential family only.
    pub scale: Option<f64>,
    pub rms_error: f64,
    /// Extremum of `f` implied by the data, where the family has one: the
    /// maximum for cosine, the minimum for cosh.
    pub extremum: Option<f64>,
}

impl ProfileFit {
    pub fn eval(&self, t: f64) -> f64 {
        let (k, a, phi) = (self.rate, self.amplitude, self.phase.unwrap_or(0.0));
        match self.family {
            ProfileFamily::Cosine => a * (k * t + phi).cos(),
            ProfileFamily::Linear => a * t + phi,
            ProfileFamily::Sinh => a * (k * t + phi).sinh(),
            ProfileFamily::Exp => self.scale.unwrap_or(0.0) * (k * t).exp(),
            ProfileFamily::Cosh => a * (k * t + phi).cosh(),
        }
    }
}

/// Fits the family dictated by `(S, μ)` and reports the RMS misfit.
pub fn fit_profile(trace: &FlowTrace, s: f64, mu: f64) -> Result<ProfileFit, FlowError> {
    if trace.samples.len() < MIN_FIT_SAMPLES {
        return Err(FlowError::TooFewSamples(trace.samples.len()));
    }
    let family = family_for(s, mu)?;
    let first = &trace.samples[0];
    let (t0, y0) = (first.t, first.y);
    let k = (s.abs() / 2.0).sqrt();
    let a = if family == ProfileFamily::Linear {
        (mu / 2.0).sqrt()
    } else {
        (mu / s).abs().sqrt()
    };
    let mut fit = ProfileFit {
        family,
        rate: k,
        amplitude: a,
        phase: None,
        scale: None,
        rms_error: 0.0,
        extremum: None,
    };
    match family {
        // increasing branch: kt + φ ∈ (−π, 0)
        ProfileFamily::Cosine => fit.phase = Some(-(y0 / a).clamp(-1.0, 1.0).acos() - k * t0),
        ProfileFamily::Linear => fit.phase = Some(y0 - a * t0),
        ProfileFamily::Sinh => fit.phase = Some((y0 / a).asinh() - k * t0),
        ProfileFamily::Exp => fit.scale = Some(y0 * (-k * t0).exp()),
        ProfileFamily::Cosh => fit.phase = Some((y0 / a).max(1.0).acosh() - k * t0),
    }
    let sq: f64 = trace.samples.iter().map(|p| (p.y - fit.eval(p.t)).powi(2)).sum();
    fit.rms_error = (sq / trace.samples.len() as f64).sqrt();

    // from y'² = k²(A² − y²) resp. k²(y² − A²), with y' = |∇f|
    let implied = |sign: f64| {
        let vals: Vec<f64> = trace
            .samples
            .iter()
            .map(|p| (p.y * p.y + sign * (p.grad_norm / k).powi(2)).max(0.0).sqrt())
            .collect();
        vals.iter().sum::<f64>() / vals.len() as f64
    };
    fit.extremum = match family {
        ProfileFamily::Cosine => Some(implied(1.0)),
        ProfileFamily::Cosh => Some(implied(-1.0)),
        _ => None,
    };
    Ok(fit)
}

/// Every `y` lies in `range` and `y` is strictly increasing, so the trace
/// approaches the upper end of the range monotonically.
pub fn range_check(trace: &FlowTrace, range: &ValueRange) -> bool {
    !trace.samples.is_empty()
        && trace.samples.iter().all(|s| range.contains(s.y, RANGE_SLACK))
        && trace.samples.windows(2).all(|w| w[1].y > w[0].y && w[1].t > w[0].t)
}

/// `max |y'² − (μ − S y²)/2|` along the trace, using `y' = |∇f|`.
pub fn relation_violation(trace: &FlowTrace, s: f64, mu: f64) -> f64 {
    trace
        .samples
        .iter()
        .map(|p| (p.grad_norm * p.grad_norm - (mu - s * p.y * p.y) / 2.0).abs())
        .fold(0.0, f64::max)
}

/// Machine-readable flow outcome.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FlowSummary {
    pub case: String,
    pub family: ProfileFamily,
    pub phase: Option<f64>,
    pub scale: Option<f64>,
    pub rms: f64,
    pub tolerance: f64,
    pub range: Option<String>,
    pub range_ok: bool,
    pub relation_violation: f64,
    pub extremum: Option<f64>,
    pub samples: usize,
    pub h: f64,
    pub t_end: f64,
    pub termination: Termination,
    pub pass: bool,
}

/// Integrates from the case's default start and checks the profile.
pub fn run_flow(spec: &SolutionSpec, span: f64, h: f64, tolerance: f64) -> Result<(FlowTrace, FlowSummary), FlowError> {
    let s = spec.expected_s.ok_or(FlowError::NonConstantScalar)?;
    let mu = spec.expected_mu.ok_or(FlowError::NonConstantScalar)?;
    let start = spec.flow_start.clone().ok_or(FlowError::NonConstantScalar)?;
    let trace = integrate_flow(spec, &start, span, h)?;
    let fit = fit_profile(&trace, s, mu)?;
    let range_ok = spec.expected_range.is_none_or(|r| range_check(&trace, &r));
    let summary = FlowSummary {
        case: spec.name.clone(),
        family: fit.family,
        phase: fit.phase,
        scale: fit.scale,
        rms: fit.rms_error,
        tolerance,
        range: spec.expected_range.map(|r| r.to_string()),
        range_ok,
        relation_violation: relation_violation(&trace, s, mu),
        extremum: fit.extremum,
        samples: trace.samples.len(),
        h,
        t_end: trace.samples.last().map_or(0.0, |p| p.t),
        termination: trace.termination,
        pass: fit.rms_error <= tolerance && range_ok,
    };
    Ok((trace, summary))
}
