use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::hole_array::{sp_resonances_with, HoleArraySpec};
use super::permittivity::Permittivity;
use crate::error::{domain, Error, Result};
use crate::Warning;

/// Maps hole diameter to resonance linewidth, `Γ(d) = Γref · (d / dref)^p` with `p > 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LinewidthModel {
    pub reference_diameter_nm: f64,
    pub reference_width_nm: f64,
    pub exponent: f64,
}

impl LinewidthModel {
    pub fn validate(&self) -> Result<()> {
        if !(self.reference_diameter_nm > 0.0 && self.reference_width_nm > 0.0) {
            return Err(domain("linewidth reference diameter and width must be positive"));
        }
        if !(self.exponent > 0.0) {
            return Err(domain("linewidth exponent must be positive so that Γ grows with the hole diameter"));
        }
        Ok(())
    }

    pub fn width_nm(&self, diameter_nm: f64) -> f64 {
        self.reference_width_nm * (diameter_nm / self.reference_diameter_nm).powf(self.exponent)
    }
}

/// Fano parameters of one grating order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResonanceSpec {
    pub order: [i32; 2],
    /// Fano asymmetry parameter.
    pub q: f64,
    /// Maximum of this resonance's lineshape.
    pub peak_transmittance: f64,
}

/// Rescale resonance amplitudes so that `T(wavelength_nm) = transmittance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CalibrationPoint {
    pub wavelength_nm: f64,
    pub transmittance: f64,
}

/// A hole array together with its phenomenological transmittance model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleArrayElement {
    pub array: HoleArraySpec,
    pub resonances: Vec<ResonanceSpec>,
    pub linewidth: LinewidthModel,
    /// Depth `m` of the substrate Fabry-Perot ripple, in `[0, 0.2]`.
    pub fp_modulation_depth: f64,
    /// Non-resonant direct transmission.
    #[serde(default)]
    pub direct_floor: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub calibrate_to: Option<CalibrationPoint>,
}

/// Normalised Fano lineshape with unit maximum (reached at `x = 1/q`).
pub fn fano_profile(wavelength_nm: f64, center_nm: f64, width_nm: f64, q: f64) -> f64 {
    let x = 2.0 * (wavelength_nm - center_nm) / width_nm;
    (q + x) * (q + x) / ((1.0 + q * q) * (1.0 + x * x))
}

#[derive(Debug, Clone)]
struct Line {
    center_nm: f64,
    q: f64,
    amplitude: f64,
}

/// A hole-array model with resonances solved and calibration applied.
#[derive(Debug, Clone)]
pub(crate) struct PreparedElement {
    lines: Vec<Line>,
    width_nm: f64,
    floor: f64,
    fp_depth: f64,
    /// `4π n L` in nm.
    fp_phase_nm: f64,
    valid_range_nm: Option<(f64, f64)>,
}

impl PreparedElement {
    fn fp_factor(&self, wavelength_nm: f64) -> f64 {
        1.0 + self.fp_depth * (self.fp_phase_nm / wavelength_nm).cos()
    }

    fn resonant(&self, wavelength_nm: f64) -> f64 {
        self.lines
            .iter()
            .map(|l| l.amplitude * fano_profile(wavelength_nm, l.center_nm, self.width_nm, l.q))
            .sum()
    }

    /// Unclipped model value.
    fn raw(&self, wavelength_nm: f64) -> f64 {
        (self.floor + self.resonant(wavelength_nm)) * self.fp_factor(wavelength_nm)
    }

    pub(crate) fn check_range(&self, wavelength_nm: f64) -> Result<()> {
        match self.valid_range_nm {
            Some((min_nm, max_nm)) if !(wavelength_nm >= min_nm && wavelength_nm <= max_nm) => {
                Err(Error::WavelengthOutOfRange {
                    wavelength_nm,
                    min_nm,
                    max_nm,
                })
            }
            _ => Ok(()),
        }
    }

    pub(crate) fn transmittance(&self, wavelength_nm: f64) -> Result<f64> {
        self.check_range(wavelength_nm)?;
        Ok(self.raw(wavelength_nm).clamp(0.0, 1.0))
    }
}

impl HoleArrayElement {
    pub fn linewidth_nm(&self) -> f64 {
        self.linewidth.width_nm(self.array.hole_diameter_nm)
    }

    pub fn validate(&self) -> Result<()> {
        self.array.validate()?;
        self.linewidth.validate()?;
        if !(0.0..=0.2).contains(&self.fp_modulation_depth) {
            return Err(domain(format!(
                "fp_modulation_depth must lie in [0, 0.2], got {}",
                self.fp_modulation_depth
            )));
        }
        if !(0.0..=1.0).contains(&self.direct_floor) {
            return Err(domain("direct_floor must lie in [0, 1]"));
        }
        for r in &self.resonances {
            if !r.q.is_finite() || !(0.0..=1.0).contains(&r.peak_transmittance) {
                return Err(domain(format!(
                    "resonance {:?}: q must be finite and peak_transmittance in [0, 1]",
                    r.order
                )));
            }
        }
        if let Some(c) = &self.calibrate_to {
            if !(0.0..=1.0).contains(&c.transmittance) {
                return Err(domain("calibration transmittance must lie in [0, 1]"));
            }
        }
        Ok(())
    }

    pub(crate) fn prepare(&self) -> Result<PreparedElement> {
        self.validate()?;
        let permittivity = self.array.permittivity.resolve()?;
        let valid_range_nm = match &permittivity {
            Permittivity::Constant(_) => None,
            Permittivity::Table(t) => Some(t.range_nm()),
        };
        let orders: Vec<(i32, i32)> = self.resonances.iter().map(|r| (r.order[0], r.order[1])).collect();
        let solved = sp_resonances_with(&self.array, &permittivity, &orders)?;
        let lines = self
            .resonances
            .iter()
            .map(|r| {
                let center_nm = solved
                    .iter()
                    .find(|s| s.order == (r.order[0], r.order[1]))
                    .map(|s| s.wavelength_nm)
                    .expect("every requested order is solved");
                Line {
                    center_nm,
                    q: r.q,
                    amplitude: r.peak_transmittance,
                }
            })
            .collect();
        let mut prepared = PreparedElement {
            lines,
            width_nm: self.linewidth_nm(),
            floor: self.direct_floor,
            fp_depth: self.fp_modulation_depth,
            fp_phase_nm: 4.0 * std::f64::consts::PI * self.array.substrate_index * self.array.substrate_thickness_mm * 1e6,
            valid_range_nm,
        };
        if let Some(cal) = &self.calibrate_to {
            prepared.check_range(cal.wavelength_nm)?;
            let resonant = prepared.resonant(cal.wavelength_nm);
            let scale = (cal.transmittance / prepared.fp_factor(cal.wavelength_nm) - prepared.floor) / resonant;
            if !(scale.is_finite() && scale >= 0.0) {
                return Err(domain(format!(
                    "cannot calibrate to T = {} at {} nm with the configured resonances",
                    cal.transmittance, cal.wavelength_nm
                )));
            }
            for line in &mut prepared.lines {
                line.amplitude *= scale;
            }
        }
        Ok(prepared)
    }

    /// Element transmittance at one wavelength.
    pub fn transmittance_at(&self, wavelength_nm: f64) -> Result<f64> {
        self.prepare()?.transmittance(wavelength_nm)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumPoint {
    pub wavelength_nm: f64,
    pub transmittance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub points: Vec<SpectrumPoint>,
    pub warnings: Vec<Warning>,
}

/// `T(λ) = [floor + Σ Fano] × [1 + m·cos(4π n L / λ)]` over an ascending grid,
/// clipped into `[0, 1]`.
pub fn transmittance_spectrum(element: &HoleArrayElement, grid_nm: &[f64]) -> Result<Spectrum> {
    if grid_nm.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(domain("wavelength grid must be strictly ascending"));
    }
    let prepared = element.prepare()?;
    if let (Some(first), Some(last)) = (grid_nm.first(), grid_nm.last()) {
        prepared.check_range(*first)?;
        prepared.check_range(*last)?;
    }
    let raw: Vec<f64> = grid_nm.par_iter().map(|&l| prepared.raw(l)).collect();

    let mut warnings = Vec::new();
    let clipped: Vec<usize> = (0..raw.len()).filter(|&k| !(0.0..=1.0).contains(&raw[k])).collect();
    if let Some(&worst) = clipped.iter().max_by(|&&a, &&b| raw[a].total_cmp(&raw[b])) {
        warnings.push(Warning::new(
            "spectrum_clipped",
            format!(
                "{} of {} points left [0, 1] and were clipped; largest raw value {:.4} at {} nm",
                clipped.len(),
                raw.len(),
                raw[worst],
                grid_nm[worst]
            ),
        ));
    }
    let points = grid_nm
        .iter()
        .zip(raw)
        .map(|(&wavelength_nm, t)| SpectrumPoint {
            wavelength_nm,
            transmittance: t.clamp(0.0, 1.0),
        })
        .collect();
    Ok(Spectrum { points, warnings })
}

pub fn write_spectrum_csv<W: Write>(mut out: W, spectrum: &Spectrum) -> std::io::Result<()> {
    writeln!(out, "wavelength_nm,transmittance")?;
    for p in &spectrum.points {
        writeln!(out, "{},{}", p.wavelength_nm, p.transmittance)?;
    }
    Ok(())
}
