//! File formats, experiment configs and the batch runner around
//! `dynsc-core`.

pub mod config;
pub mod error;
pub mod experiment;
pub mod io;
pub mod params;
pub mod report;

pub use config::{AlgorithmName, Config, Mode};
pub use error::{Error, Result};
pub use experiment::{run, Summary};
