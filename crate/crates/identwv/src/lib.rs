//! Simulators, file formats, the benchmark harness and plotting for
//! `identwv-core`.

pub mod bench;
pub mod config;
pub mod error;
pub mod io;
pub mod plot;
pub mod sim;
mod spectral;

pub use error::{Error, Result};
