//! Detection and resolution of Simpson reversals in stratified two-group
//! comparisons.
//!
//! * [`tables`]: counts, exact rates and their comparison.
//! * [`detector`]: reversal classification and covariate scans over record data.
//! * [`standardize`]: direct standardization against a common weight vector.
//! * [`ecological`]: between-group / within-group covariance decomposition.
//! * [`geometry`]: the vector picture of a comparison and its SVG rendering.
//! * [`synth`]: generated and minimal reversal instances, brute-force oracle.

pub mod detector;
pub mod ecological;
pub mod error;
pub mod geometry;
pub mod standardize;
pub mod synth;
pub mod tables;

pub use error::{Error, Result};
