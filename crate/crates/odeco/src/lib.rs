//! Std companion of `odeco-core`: mesh and feature file formats, a rayon
//! executor, field exports and the end-to-end pipeline behind the `odeco`
//! binary.

pub mod config;
pub mod error;
pub mod exec;
pub mod export;
pub mod io;
pub mod pipeline;

pub use config::{ModePreset, RunConfig};
pub use error::OdecoError;
pub use odeco_core as core;
