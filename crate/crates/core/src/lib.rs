//! Exact finite approximations of scale-irregular Vicsek fractals, with discrete
//! p-energies, energy measures and Besov-type functionals computed on them.

#![forbid(unsafe_code)]

pub mod affine;
pub mod energy;
pub mod energy_measure;
pub mod besov;
pub mod checks;
pub mod cli;
pub mod error;
pub mod geometry;
pub mod hausdorff;
pub mod measure;
pub mod num;
pub mod ratios;
pub mod resistance;
pub mod rng;

pub use error::{Error, Result};
