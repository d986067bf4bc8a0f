//! Spectral-spatial curriculum training for hyperspectral cubes.
//!
//! The crate covers the full pipeline: synthetic cube generation ([`cube`]),
//! PCA band compression ([`spectral`]), Nyquist-consistent spatial
//! downsampling ([`spatial`]), compute-balanced stage planning ([`schedule`]),
//! the convex training backbone ([`trainer`]), and closed-form conditioning
//! and time-to-threshold analysis ([`analysis`]).

pub mod analysis;
pub mod cube;
pub mod error;
pub mod linalg;
pub mod schedule;
pub mod spatial;
pub mod spectral;
pub mod trainer;

pub use error::{Error, Result};
