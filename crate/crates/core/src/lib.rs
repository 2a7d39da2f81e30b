//! Numerical study of heat-kernel smoothed metrics.
//!
//! Embedding a metric space into Wasserstein space via its heat kernel
//! measures induces a new length distance.  This crate computes that
//! distance and its metric tensor for three concrete spaces at desk scale:
//!
//! * the flat cone of angle pi (quotient of the plane by the antipodal map),
//! * the flat cone of angle pi/2 (quotient by rotation of order four),
//! * the first Heisenberg group with its Carnot-Caratheodory structure.
//!
//! For the cones the smoothed metric is a warped product
//! `R(r) dr^2 + r^2 A(r) da^2`; [`cone`] tabulates the coefficients,
//! [`geodesics`] minimizes curve energy in the tabulated metric, and
//! [`transport`] brackets the chord (Wasserstein) distance between heat
//! kernel measures.  For the Heisenberg group [`heisenberg`] evaluates the
//! explicit hypoelliptic heat kernel and estimates the constants of the
//! induced left-invariant Riemannian metric.  [`elliptic`] supplies the
//! weighted Galerkin machinery used to compute metric coefficients as
//! certified lower bounds, and [`measures`] / [`quad`] hold the Gaussian
//! mixtures and quadrature rules everything else consumes.
//!
//! The [`accept`] module packages the acceptance checks run by the
//! `acceptance` integration test and the `heatmetric accept` CLI command.

pub mod accept;
pub mod cone;
pub mod elliptic;
pub mod error;
pub mod geodesics;
pub mod heisenberg;
pub mod measures;
pub mod quad;
pub mod transport;

pub use cone::{AngleReport, WarpedMetric};
pub use elliptic::{BasisSpec, GalerkinSolve, SourceSpec, WeightSpec};
pub use error::{Error, Result};
pub use geodesics::{DiscreteCurve, GeodesicResult};
pub use heisenberg::{ConstantsReport, FrameCoefficients, HeisenbergPoint, KernelEval};
pub use measures::{ConePoint, GaussDensity1D, QuadratureGrid, RotGaussMixture};
pub use transport::{CouplingResult, DiscreteMeasure};
