use serde::{Deserialize, Serialize};

use super::spectrum::HoleArrayElement;
use crate::error::{domain, Result};
use crate::units::db_to_ratio;

/// Gold stripe embedded in a symmetric dielectric cladding, butt-coupled to fibres.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LrsppWaveguideSpec {
    pub stripe_length_cm: f64,
    pub stripe_width_um: f64,
    pub stripe_thickness_nm: f64,
    pub cladding_index: f64,
    pub propagation_loss_db_per_cm: f64,
    pub coupling_loss_per_facet_db: f64,
}

impl LrsppWaveguideSpec {
    pub fn validate(&self) -> Result<()> {
        let dims = [self.stripe_length_cm, self.stripe_width_um, self.stripe_thickness_nm, self.cladding_index];
        if dims.iter().any(|d| !(*d > 0.0 && d.is_finite())) {
            return Err(domain("LR-SPP stripe dimensions and cladding index must be positive"));
        }
        if !(self.propagation_loss_db_per_cm >= 0.0 && self.coupling_loss_per_facet_db >= 0.0) {
            return Err(domain("LR-SPP losses must be non-negative"));
        }
        Ok(())
    }

    /// Propagation plus both facets, in dB.
    pub fn total_loss_db(&self) -> f64 {
        self.propagation_loss_db_per_cm * self.stripe_length_cm + 2.0 * self.coupling_loss_per_facet_db
    }

    pub fn transmittance(&self) -> f64 {
        db_to_ratio(self.total_loss_db())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ChannelElement {
    Identity,
    HoleArray(HoleArrayElement),
    Lrspp(LrsppWaveguideSpec),
}

/// One arm's optical path between the source fibre and the interferometer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    pub base_insertion_loss_db: f64,
    #[serde(default)]
    pub polarization_dependence_bound_db: f64,
    pub element: ChannelElement,
}

impl ChannelSpec {
    pub fn identity(base_insertion_loss_db: f64) -> Self {
        Self {
            base_insertion_loss_db,
            polarization_dependence_bound_db: 0.0,
            element: ChannelElement::Identity,
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.element, ChannelElement::Identity)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.base_insertion_loss_db >= 0.0 && self.base_insertion_loss_db.is_finite()) {
            return Err(domain("base insertion loss must be a non-negative number of dB"));
        }
        if !(self.polarization_dependence_bound_db >= 0.0 && self.polarization_dependence_bound_db.is_finite()) {
            return Err(domain("polarization dependence bound must be a non-negative number of dB"));
        }
        match &self.element {
            ChannelElement::Identity => Ok(()),
            ChannelElement::HoleArray(el) => el.validate(),
            ChannelElement::Lrspp(wg) => wg.validate(),
        }
    }

    /// Polarisation-dependent excess loss, `bound · (1 - cos 2θ) / 2` dB.
    pub fn polarization_loss_db(&self, polarization_angle_rad: f64) -> f64 {
        self.polarization_dependence_bound_db * (1.0 - (2.0 * polarization_angle_rad).cos()) / 2.0
    }

    fn element_transmittance(&self, wavelength_nm: f64) -> Result<f64> {
        match &self.element {
            ChannelElement::Identity => Ok(1.0),
            ChannelElement::HoleArray(el) => el.transmittance_at(wavelength_nm),
            ChannelElement::Lrspp(wg) => Ok(wg.transmittance()),
        }
    }
}

/// Power transmittance of a channel at one wavelength and input polarisation.
pub fn channel_transmittance(channel: &ChannelSpec, wavelength_nm: f64, polarization_angle_rad: f64) -> Result<f64> {
    if !(wavelength_nm > 0.0) {
        return Err(domain("wavelength must be positive"));
    }
    let element = channel.element_transmittance(wavelength_nm)?;
    let loss_db = channel.base_insertion_loss_db + channel.polarization_loss_db(polarization_angle_rad);
    Ok((element * db_to_ratio(loss_db)).clamp(0.0, 1.0))
}

/// Transmittance of channels traversed in sequence.
pub fn cascade_transmittance(channels: &[ChannelSpec], wavelength_nm: f64, polarization_angle_rad: f64) -> Result<f64> {
    channels
        .iter()
        .try_fold(1.0, |acc, c| Ok(acc * channel_transmittance(c, wavelength_nm, polarization_angle_rad)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::units::ratio_to_db;
    use proptest::prelude::*;

    fn lrspp() -> LrsppWaveguideSpec {
        LrsppWaveguideSpec {
            stripe_length_cm: 0.5,
            stripe_width_um: 8.0,
            stripe_thickness_nm: 20.0,
            cladding_index: 1.535,
            propagation_loss_db_per_cm: 1.0,
            coupling_loss_per_facet_db: 3.245,
        }
    }

    #[test]
    fn identity_u_bench() {
        let ch = ChannelSpec::identity(3.0);
        for l in [810.0, 1550.0, 2000.0] {
            let t = channel_transmittance(&ch, l, 0.3).unwrap();
            assert!((t - 0.501).abs() < 5e-4);
        }
    }

    #[test]
    fn lrspp_end_to_end() {
        let ch = ChannelSpec {
            base_insertion_loss_db: 0.0,
            polarization_dependence_bound_db: 0.0,
            element: ChannelElement::Lrspp(lrspp()),
        };
        assert!((lrspp().total_loss_db() - 6.99).abs() < 1e-12);
        let t = channel_transmittance(&ch, 1550.0, 0.0).unwrap();
        assert!((t - 0.20).abs() < 1e-4, "{t}");
    }

    #[test]
    fn zero_bound_is_polarization_independent() {
        let ch = ChannelSpec::identity(1.0);
        let t0 = channel_transmittance(&ch, 1550.0, 0.0).unwrap();
        for k in 0..20 {
            assert_eq!(channel_transmittance(&ch, 1550.0, k as f64 * 0.3).unwrap(), t0);
        }
    }

    proptest! {
        #[test]
        fn polarization_swing_is_bounded(bound in 0.0f64..5.0, base in 0.0f64..10.0) {
            let ch = ChannelSpec { base_insertion_loss_db: base, polarization_dependence_bound_db: bound, element: ChannelElement::Identity };
            let ts: Vec<f64> = (0..64).map(|k| channel_transmittance(&ch, 1550.0, k as f64 * std::f64::consts::PI / 64.0).unwrap()).collect();
            let max = ts.iter().cloned().fold(f64::MIN, f64::max);
            let min = ts.iter().cloned().fold(f64::MAX, f64::min);
            prop_assert!(ratio_to_db(min / max) <= bound + 1e-12);
        }

        #[test]
        fn cascade_is_additive_in_db(a in 0.0f64..10.0, b in 0.0f64..10.0, theta in 0.0f64..3.2) {
            let first = ChannelSpec { base_insertion_loss_db: a, polarization_dependence_bound_db: 1.5, element: ChannelElement::Identity };
            let second = ChannelSpec { base_insertion_loss_db: b, polarization_dependence_bound_db: 0.0, element: ChannelElement::Lrspp(lrspp()) };
            let cascaded = cascade_transmittance(&[first.clone(), second.clone()], 1550.0, theta).unwrap();
            let summed_db = a + first.polarization_loss_db(theta) + b + lrspp().total_loss_db();
            let single = channel_transmittance(&ChannelSpec::identity(summed_db), 1550.0, 0.0).unwrap();
            prop_assert!(((cascaded - single) / single).abs() < 1e-12);
        }
    }
}
