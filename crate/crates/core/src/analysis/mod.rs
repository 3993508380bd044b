//! Free-boundary diagnostics and condition validators.

pub mod conditions;
pub mod free_boundary;
