//! Scalar-flat ALE Kähler metrics in the radial ansatz: model metrics,
//! pre-gluing of blow-up bubbles, Newton and fixed-point scalar-flattening,
//! ADM mass by several routes, gluing constants and exact blow-up planning.
//!
//! Numerical code is generic over [`Real`]; the aliases below fix `f64`.

// `!(x > 0.0)` deliberately rejects NaN; index loops mirror stencil formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod ale_models;
pub mod cohomology;
pub mod error;
pub mod experiments;
pub mod gluing;
pub mod jet;
pub mod linalg;
pub mod mass;
pub mod profiles;
pub mod radial_kahler;
pub mod scalar;
pub mod scalarflat_solver;
pub mod validation;
pub mod weighted_analysis;

pub use error::{Error, Result};
pub use scalar::Real;

pub type Potential = radial_kahler::RadialPotential<f64>;
pub type Model = ale_models::AleModel<f64>;
pub type Preglued = gluing::PregluedMetric<f64>;
pub type NormSpec = weighted_analysis::WeightedNormSpec<f64>;
pub type Mesh = scalarflat_solver::RadialMesh<f64>;
pub type Problem = scalarflat_solver::ScalarFlatProblem<f64>;
pub type MassSummary = mass::MassReport;
