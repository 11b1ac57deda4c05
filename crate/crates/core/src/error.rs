use crate::model::RegimeReport;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("resonance order ({i},{j}) has no fixed point inside the permittivity table [{min_nm} nm, {max_nm} nm]")]
    ResonanceOutOfRange {
        i: i32,
        j: i32,
        min_nm: f64,
        max_nm: f64,
    },

    #[error("wavelength {wavelength_nm} nm outside the permittivity table [{min_nm} nm, {max_nm} nm]")]
    WavelengthOutOfRange {
        wavelength_nm: f64,
        min_nm: f64,
        max_nm: f64,
    },

    #[error("permittivity table line {line}: {message}")]
    TableParse { line: usize, message: String },

    #[error("fit error: {0}")]
    Fit(String),

    #[error("degenerate signal: fitted offset {offset} does not exceed the noise floor {noise_floor}")]
    DegenerateSignal { offset: f64, noise_floor: f64 },

    #[error("Franson regime check failed:\n{0}")]
    RegimeRefused(Box<RegimeReport>),

    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
