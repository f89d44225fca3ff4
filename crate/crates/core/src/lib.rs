//! Integrable odeco frame fields on triangle meshes.
//!
//! The crate is `no_std` (with `alloc`): tensor algebra, mesh geometry,
//! per-vertex constraints, energies with exact gradients, the projected
//! L-BFGS solver and frame recovery. File formats and the command line live
//! in the companion `odeco` crate.

#![no_std]
#![cfg_attr(test, allow(unused_imports))]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub use nalgebra;

pub mod constraints;
pub mod energy;
pub mod exec;
pub mod linalg;
pub mod mesh;
pub mod recovery;
pub mod rng;
pub mod solver;
pub mod tensor;
