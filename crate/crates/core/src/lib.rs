//! Exact construction and numerical verification of toric curves and their
//! Toda metrics.

pub mod construct;
pub mod curve;
pub mod ensemble;
pub mod error;
pub mod gauss;
pub mod metrics;
pub mod poly;
pub mod rat;
pub mod roots;
pub mod schema;
pub mod singularity;
pub mod twisted;

pub use error::{Error, Result};
pub use gauss::GaussRat;
pub use poly::Poly;
pub use rat::Rat;
pub use twisted::{solve_euler_ode, BranchLocus, LocalSeries, NumericPoint, Point, TwistedFn};
pub use curve::{AssociatedCurve, Curve, RamificationPoint};
pub use singularity::{classify_all, classify_at, classify_at_infinity, Kind, SingularityDatum};
pub use construct::{construct_curve, PrescribedData};
pub use ensemble::{curve_to_ensemble, ensemble_to_curve, Ensemble, OneForm};
pub use metrics::{conformal_factors, cone_angle_fit, export_grid, toda_residual, GridSpec, PdeReport};
