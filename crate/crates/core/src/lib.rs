pub mod ensembles;
pub mod error;
pub mod harness;
pub mod linops;
pub mod noisemodel;
pub mod rip;
pub mod rng;
pub mod signals;
pub mod solvers;
pub mod vector;
pub mod wavelets;

pub use error::{Error, Result};
