//! Spatial-lag feature engineering for parcel/sales panels, with from-scratch
//! learners and out-of-time evaluation.
//!
//! The crate is organised as a linear pipeline:
//!
//! * [`ingest`] builds the parcel-year panel from parcel, sale and alias
//!   tables (or from the synthetic city generator).
//! * [`spatial_index`] builds the fixed-radius neighbor graph with a gridded
//!   convex-hull search, plus a brute-force reference.
//! * [`features`] derives the base, zone-aggregate and spatial-lag matrices.
//! * [`models`] holds the four learners (GLM, random forest, gradient
//!   boosting, feed-forward network).
//! * [`eval`] splits out-of-time, scores and ranks models.
//! * [`pipeline`] wires the stages together from a single JSON config.

pub mod error;
pub mod eval;
pub mod features;
pub mod ingest;
pub mod models;
pub mod pipeline;
pub mod spatial_index;

pub use error::{Error, Result};
