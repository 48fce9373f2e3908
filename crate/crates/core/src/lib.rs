pub mod benchmarks;
pub mod cli_io;
pub mod dissipation;
pub mod elastic;
pub mod error;
pub mod evolution;
pub mod geometry;
pub mod griffith;
pub mod ve_core;

pub use error::{Error, Result};
