//! Fixed-point iterations in W-hyperbolic spaces: model geometries, projections,
//! averaged and composite mappings, orbit tracing, explicit rates of asymptotic
//! regularity and sampled checks of the defining inequalities.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod canonical;
pub mod checks;
pub mod config;
pub mod error;
pub mod geometry;
pub mod iteration;
pub mod mappings;
pub mod rates;
pub mod report;
pub mod sampling;
pub mod sets;

pub use error::{GeoError, Result};
pub use geometry::{MetricTree, ModulusOfConvexity, Point, Space};
