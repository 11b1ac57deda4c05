//! Simulation and analysis of Franson-type energy-time interference with
//! plasmon-assisted transmission channels.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: photon-pair source, unbalanced interferometers and the closed-form
//!   two-photon coincidence probabilities.
//! - [`plasmonic`]: insertable channels (empty U-bench, sub-wavelength hole arrays,
//!   long-range SPP stripe waveguides) and their transmittance models.
//! - [`detection`]: gated single-photon detection, TAC histogramming and time
//!   window discrimination.
//! - [`montecarlo`]: full phase scans, sampled or in closed form.
//! - [`analysis`]: noise-floor subtraction, sinusoidal fringe fitting and net
//!   visibility extraction.

pub mod analysis;
pub mod detection;
pub mod error;
pub mod export;
pub mod model;
pub mod montecarlo;
pub mod plasmonic;
pub mod units;

pub use error::{Error, Result};

/// Version tag written into every JSON artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// A non-fatal condition recorded while computing a result.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Warning {
    pub code: String,
    pub message: String,
}

impl Warning {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        Self {
            code: code.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Warning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}] {}", self.code, self.message)
    }
}
