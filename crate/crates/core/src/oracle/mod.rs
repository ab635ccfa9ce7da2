//! Brute-force 2D Stokes reference solutions on staggered grids.

pub mod analysis;
pub mod export;
pub mod gap;
pub mod grid;
pub mod mac;
pub mod scene;
pub mod solution;
pub mod validation;
