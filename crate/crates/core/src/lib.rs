pub mod cli;
pub mod config;
pub mod error;
pub mod lamination;
pub mod lattice;
pub mod leaf;
pub mod pillowcase;
pub mod pipeline;
pub mod repeller;
pub mod surgery;

pub use error::{Error, Result};
