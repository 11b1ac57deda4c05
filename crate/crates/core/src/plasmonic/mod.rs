//! Insertable transmission elements: the empty U-bench, perforated gold films
//! and the long-range SPP stripe waveguide.

mod channel;
mod hole_array;
mod permittivity;
mod spectrum;

pub use channel::{cascade_transmittance, channel_transmittance, ChannelElement, ChannelSpec, LrsppWaveguideSpec};
pub use hole_array::{sp_resonance_wavelengths, HoleArraySpec, Resonance};
pub use permittivity::{Permittivity, PermittivitySource, PermittivityTable};
pub use spectrum::{
    fano_profile, transmittance_spectrum, write_spectrum_csv, CalibrationPoint, HoleArrayElement, LinewidthModel,
    ResonanceSpec, Spectrum, SpectrumPoint,
};
