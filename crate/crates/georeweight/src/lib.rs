//! Voronoi-based sample reweighting for Monte Carlo integration on the
//! unit interval and unit square.
//!
//! A sample set's Voronoi partition turns cell volumes into estimator
//! weights: used directly they give a consistent estimator, and divided
//! by per-sample correction coefficients they give a bias-corrected
//! estimator for i.i.d. uniform and stratified samples. The
//! [`experiments`] module drives the convergence, strata and batching
//! studies behind the `georeweight` CLI.

pub mod estimators;
pub mod experiments;
pub mod geometry;
pub mod sampling;
pub mod testbed;

pub use estimators::{CoefficientMode, Estimate, EstimatorKind, Integrand, Weights};
pub use geometry::{DomainBox, Partition, UnitPoint, VoronoiCell};
pub use sampling::{SampleSet, Seed};
