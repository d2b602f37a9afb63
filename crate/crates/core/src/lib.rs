//! Numerical differential geometry for the equation `∇²f = −f·Ric`.
//!
//! The crate builds the known solution manifolds of that equation on
//! explicit coordinate charts and verifies, point by point, the identities
//! their solutions satisfy: the main equation itself, the consequences for
//! `Ric(∇f)`, the `μ`-invariant, the trace identity `Δf = fS`, geometry of
//! the zero set, Killing-field structure on products, and the closed-form
//! profiles of `f` along its normalized gradient flow.
//!
//! Derivatives are exact: metrics and fields are evaluated on [`jets::Jet`]s
//! (truncated Taylor expansions), so curvature and its first covariant
//! derivative need no finite differencing.
//!
//! Module map:
//! - [`jets`]: truncated multivariate Taylor arithmetic.
//! - [`geometry`]: charts, Christoffel symbols, curvature, Hessians.
//! - [`catalog`]: every manifold/solution pair as a [`catalog::SolutionSpec`].
//! - [`verify`]: pointwise residuals and suite reports.
//! - [`flow`]: normalized gradient flow and profile classification.
//! - [`cli`]: command-line front end and report serialization.

// `!(x > 0.0)` style guards are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod catalog;
pub mod cli;
pub mod flow;
pub mod geometry;
pub mod jets;
pub mod ode;
pub mod sampling;
pub mod verify;

pub use catalog::SolutionSpec;
pub use geometry::{ChartPatch, CurvatureData, ScalarField, VectorFieldSpec};
pub use jets::Jet;
pub use verify::{ToleranceConfig, VerificationReport};
