//! Random walks in random sceneries on Z².
//!
//! A walk Z_n on Z² reads a stationary field (X_l) along its trajectory;
//! the crate samples walks and sceneries, computes the exact occupation
//! combinatorics that govern the conditional variance of S_n = sum X_{Z_k},
//! and runs finite-n experiments around the quenched functional CLT.

pub mod cumulant;
pub mod error;
pub mod lab;
pub mod lattice;
pub mod occupation;
pub mod report;
pub mod rng;
pub mod scenery;
pub mod spectral;
pub mod stats;
pub mod walk;

pub use error::{Error, Result};
pub use lattice::Site;
pub use occupation::{occupation, OccupationField};
pub use report::StatReport;
pub use rng::StreamId;
pub use walk::{sample_path, StepDistribution, WalkPath};
