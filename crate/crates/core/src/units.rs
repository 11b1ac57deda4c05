//! Physical constants and unit helpers.

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

pub const NM: f64 = 1e-9;
pub const PS: f64 = 1e-12;

/// Power ratio for a loss given in dB (positive numbers attenuate).
pub fn db_to_ratio(loss_db: f64) -> f64 {
    10f64.powf(-loss_db / 10.0)
}

/// Loss in dB for a power ratio.
pub fn ratio_to_db(ratio: f64) -> f64 {
    -10.0 * ratio.log10()
}

/// Time of flight over a free-space path difference, in picoseconds.
pub fn path_delay_ps(length_m: f64) -> f64 {
    length_m / SPEED_OF_LIGHT / PS
}
