//! Asymptotics of Stokes flow between two nearly touching rigid particles:
//! singular gap fields, narrow-gap integrals, the block stiffness system with
//! its Cramer-rule constants, a 2D staggered-grid Stokes oracle, and the
//! resulting stress predictions.

pub mod error;
pub mod fields;
pub mod geometry;
pub mod integrals;
pub mod oracle;
pub mod rates;
pub mod stiffness;
pub mod stress;

pub use error::{Error, Result};
