//! strip-trace: a numerical laboratory for the wave trace of Dirac-type
//! operators on spatially compact stationary spacetimes.
//!
//! The crate builds model spacetimes in standard stationary form
//! (`models`), integrates lightlike geodesics and their reduced Killing-time
//! flow on the cotangent bundle of the Cauchy surface (`geodesics`),
//! produces the spectrum of the Killing generator on solutions of the Dirac
//! equation (`spectra`), and compares windowed spectral sums against the
//! classical period data (`tracelab`). `report` bundles the end-to-end
//! verification suite used by the command-line tool.

pub mod config;
pub mod expr;
pub mod geodesics;
pub mod models;
pub mod quadrature;
pub mod report;
pub mod spectra;
pub mod textio;
pub mod tracelab;

use num_dual::DualNum;

pub use config::{ConfigError, ModelConfig};
pub use geodesics::{GeodesicError, GeodesicStrip, PeriodicOrbit};
pub use models::{CauchyModel, ModelError, StationaryModel};
pub use spectra::{Spectrum, SpectrumError};
pub use tracelab::{TraceError, TraceProfile, Window};

/// Real scalar usable both as `f64` and as a forward-mode dual number.
pub trait Scalar: DualNum<Primitive = f64> + Copy {}

impl<T: DualNum<Primitive = f64> + Copy> Scalar for T {}

/// Version tag written into cache files and reports.
pub const GENERATOR_VERSION: &str = concat!("strip-trace ", env!("CARGO_PKG_VERSION"));

/// Umbrella error for pipelines that cross module boundaries.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Geodesic(#[from] GeodesicError),
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable machine-readable kind used in CLI diagnostics.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::Config(_) => "config",
            Error::Model(_) => "model",
            Error::Geodesic(_) => "geodesic",
            Error::Spectrum(_) => "spectrum",
            Error::Trace(_) => "trace",
            Error::Io { .. } => "io",
        }
    }
}
