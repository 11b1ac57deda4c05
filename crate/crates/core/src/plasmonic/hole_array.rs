use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::permittivity::{Permittivity, PermittivitySource};
use crate::error::{domain, Error, Result};

const FIXED_POINT_TOLERANCE_NM: f64 = 1e-3;
const FIXED_POINT_MAX_ITERATIONS: usize = 100;
const FIXED_POINT_DAMPING: f64 = 0.5;

/// Square array of circular holes in a gold film on a glass substrate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HoleArraySpec {
    pub period_a_nm: f64,
    pub hole_diameter_nm: f64,
    pub film_thickness_nm: f64,
    pub substrate_index: f64,
    pub substrate_thickness_mm: f64,
    pub array_extent_um: f64,
    pub beam_diameter_um: f64,
    #[serde(default)]
    pub permittivity: PermittivitySource,
}

impl HoleArraySpec {
    pub fn dielectric_permittivity(&self) -> f64 {
        self.substrate_index * self.substrate_index
    }

    /// Beam footprint over array area.
    pub fn fill_fraction(&self) -> f64 {
        let r = self.beam_diameter_um / 2.0;
        std::f64::consts::PI * r * r / (self.array_extent_um * self.array_extent_um)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.period_a_nm > 0.0 && self.hole_diameter_nm > 0.0) {
            return Err(domain("period and hole diameter must be positive"));
        }
        if self.hole_diameter_nm >= self.period_a_nm {
            return Err(domain(format!(
                "hole diameter {} nm must be smaller than the period {} nm",
                self.hole_diameter_nm, self.period_a_nm
            )));
        }
        if !(self.film_thickness_nm > 0.0) {
            return Err(domain("film thickness must be positive"));
        }
        if !(self.substrate_index > 1.0) {
            return Err(domain("substrate index must exceed 1"));
        }
        if !(self.substrate_thickness_mm > 0.0 && self.array_extent_um > 0.0 && self.beam_diameter_um > 0.0) {
            return Err(domain("substrate thickness, array extent and beam diameter must be positive"));
        }
        let fill = self.fill_fraction();
        if fill > 0.1 {
            return Err(domain(format!(
                "beam covers {:.1}% of the array; the infinite-array model needs at most 10%",
                fill * 100.0
            )));
        }
        Ok(())
    }
}

/// A surface-plasmon resonance of grating order `(i, j)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Resonance {
    pub order: (i32, i32),
    pub wavelength_nm: f64,
}

fn sp_index(eps_metal: Complex64, eps_dielectric: f64) -> f64 {
    let eps_d = Complex64::new(eps_dielectric, 0.0);
    (eps_metal * eps_d / (eps_metal + eps_d)).sqrt().re
}

/// Resonance wavelengths from the square-lattice momentum-matching condition
/// `λ(i,j) = a/√(i²+j²) · Re√(εm εd / (εm + εd))`, sorted descending.
///
/// With a tabulated metal permittivity the condition is implicit in λ and is
/// solved by damped fixed-point iteration. A constant permittivity is evaluated
/// in closed form.
pub fn sp_resonance_wavelengths(array: &HoleArraySpec, orders: &[(i32, i32)]) -> Result<Vec<Resonance>> {
    let permittivity = array.permittivity.resolve()?;
    sp_resonances_with(array, &permittivity, orders)
}

pub(crate) fn sp_resonances_with(
    array: &HoleArraySpec,
    permittivity: &Permittivity,
    orders: &[(i32, i32)],
) -> Result<Vec<Resonance>> {
    let eps_d = array.dielectric_permittivity();
    let mut out = Vec::with_capacity(orders.len());
    for &(i, j) in orders {
        if i == 0 && j == 0 {
            return Err(domain("resonance order (0,0) is not a grating order"));
        }
        let scale = ((i * i + j * j) as f64).sqrt();
        let period = array.period_a_nm;
        let wavelength_nm = match permittivity {
            Permittivity::Constant(eps_m) => period * (sp_index(*eps_m, eps_d) / scale),
            Permittivity::Table(table) => {
                let (min_nm, max_nm) = table.range_nm();
                let out_of_range = || Error::ResonanceOutOfRange { i, j, min_nm, max_nm };
                // start from the large-|εm| limit
                let mut lambda = period * array.substrate_index / scale;
                let mut converged = false;
                for _ in 0..FIXED_POINT_MAX_ITERATIONS {
                    let eps_m = table.at(lambda).map_err(|_| out_of_range())?;
                    let target = period * (sp_index(eps_m, eps_d) / scale);
                    let step = FIXED_POINT_DAMPING * (target - lambda);
                    lambda += step;
                    if step.abs() < FIXED_POINT_TOLERANCE_NM {
                        converged = true;
                        break;
                    }
                }
                if !converged || table.at(lambda).is_err() {
                    return Err(out_of_range());
                }
                lambda
            }
        };
        out.push(Resonance {
            order: (i, j),
            wavelength_nm,
        });
    }
    out.sort_by(|a, b| b.wavelength_nm.total_cmp(&a.wavelength_nm));
    Ok(out)
}
