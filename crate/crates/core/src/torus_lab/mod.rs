//! Flat-torus geometry lab.

pub mod checks;
pub mod config;
pub mod frame;
pub mod geometry;
pub mod grid;
pub mod integrate;
pub mod kappa;
pub mod newton;
pub mod section;
