//! Reaction-diffusion systems coupled to a spatially distributed two-threshold relay.

pub mod dsl;
pub mod relay;
pub mod report;
pub mod sampling;
pub mod grid;
pub mod analysis;
pub mod solver;
pub mod scenario;
pub mod experiments;
pub mod io;
