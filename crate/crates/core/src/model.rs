//! Photon-pair source, unbalanced Mach-Zehnder interferometers and the
//! closed-form Franson coincidence probabilities.
//!
//! Time-bin convention used throughout the crate: the arrival-time difference is
//! `dt = t_idler - t_signal`. A pair whose signal photon takes the long arm and
//! whose idler takes the short arm lands in the *left* side peak (`dt < 0`); the
//! opposite assignment lands in the *right* side peak. Short-short and long-long
//! pairs share the central peak and interfere.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::units::{NM, SPEED_OF_LIGHT};

/// Default relative tolerance on `1/λs + 1/λi = 1/λp`.
pub const DEFAULT_ENERGY_TOLERANCE: f64 = 1e-2;

/// CW-pumped SPDC source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub pump_wavelength_nm: f64,
    pub pump_coherence_length_m: f64,
    pub signal_center_nm: f64,
    pub signal_width_fwhm_nm: f64,
    pub idler_center_nm: f64,
    pub idler_width_fwhm_nm: f64,
    /// Probability that a gate contains one photon pair (μ).
    pub pair_probability_per_gate: f64,
}

impl SourceSpec {
    /// Relative violation of energy conservation, `|1/λs + 1/λi - 1/λp| · λp`.
    pub fn energy_mismatch(&self) -> f64 {
        let lhs = 1.0 / self.signal_center_nm + 1.0 / self.idler_center_nm;
        (lhs - 1.0 / self.pump_wavelength_nm).abs() * self.pump_wavelength_nm
    }

    pub fn validate(&self, energy_tolerance: f64) -> Result<()> {
        let lengths = [
            ("pump_wavelength_nm", self.pump_wavelength_nm),
            ("pump_coherence_length_m", self.pump_coherence_length_m),
            ("signal_center_nm", self.signal_center_nm),
            ("signal_width_fwhm_nm", self.signal_width_fwhm_nm),
            ("idler_center_nm", self.idler_center_nm),
            ("idler_width_fwhm_nm", self.idler_width_fwhm_nm),
        ];
        for (name, value) in lengths {
            if !(value > 0.0 && value.is_finite()) {
                return Err(domain(format!("{name} must be positive, got {value}")));
            }
        }
        let mu = self.pair_probability_per_gate;
        if !(0.0..1.0).contains(&mu) {
            return Err(domain(format!(
                "pair_probability_per_gate must lie in [0, 1), got {mu}"
            )));
        }
        let mismatch = self.energy_mismatch();
        if mismatch > energy_tolerance {
            return Err(domain(format!(
                "energy conservation violated: relative mismatch {mismatch:.3e} exceeds {energy_tolerance:.1e}"
            )));
        }
        Ok(())
    }

    pub fn signal_coherence_time_s(&self) -> Result<f64> {
        coherence_time_s(self.signal_center_nm, self.signal_width_fwhm_nm)
    }

    pub fn idler_coherence_time_s(&self) -> Result<f64> {
        coherence_time_s(self.idler_center_nm, self.idler_width_fwhm_nm)
    }
}

/// Which of the two interferometer outputs carries the detector.
///
/// Monitoring the secondary output shifts that interferometer's contribution to
/// the two-photon phase by π.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputPort {
    #[default]
    Primary,
    Secondary,
}

impl OutputPort {
    pub fn phase_offset(self) -> f64 {
        match self {
            OutputPort::Primary => 0.0,
            OutputPort::Secondary => std::f64::consts::PI,
        }
    }
}

/// Unbalanced Mach-Zehnder interferometer with ideal 50/50 couplers; coupler
/// imperfections are folded into `intrinsic_visibility`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InterferometerSpec {
    pub imbalance_length_m: f64,
    pub phase_rad: f64,
    pub intrinsic_visibility: f64,
    #[serde(default)]
    pub monitored_output: OutputPort,
}

impl InterferometerSpec {
    pub fn imbalance_time_s(&self) -> f64 {
        self.imbalance_length_m / SPEED_OF_LIGHT
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.imbalance_length_m > 0.0 && self.imbalance_length_m.is_finite()) {
            return Err(domain(format!(
                "imbalance_length_m must be positive, got {}",
                self.imbalance_length_m
            )));
        }
        if !(0.0..=1.0).contains(&self.intrinsic_visibility) {
            return Err(domain(format!(
                "intrinsic_visibility must lie in [0, 1], got {}",
                self.intrinsic_visibility
            )));
        }
        if !self.phase_rad.is_finite() {
            return Err(domain("phase_rad must be finite"));
        }
        Ok(())
    }
}

/// Transform-limit coherence time `λ² / (c·Δλ)` in seconds.
pub fn coherence_time_s(center_nm: f64, width_fwhm_nm: f64) -> Result<f64> {
    if !(center_nm > 0.0 && width_fwhm_nm > 0.0) {
        return Err(domain(format!(
            "coherence time needs positive center and width, got {center_nm} nm / {width_fwhm_nm} nm"
        )));
    }
    let center = center_nm * NM;
    Ok(center * center / (SPEED_OF_LIGHT * width_fwhm_nm * NM))
}

/// Coherence length `c · τc` in metres.
pub fn coherence_length_m(center_nm: f64, width_fwhm_nm: f64) -> Result<f64> {
    Ok(SPEED_OF_LIGHT * coherence_time_s(center_nm, width_fwhm_nm)?)
}

/// Probabilities that a pair exits both monitored ports in each of the three TAC peaks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PeakProbabilities {
    pub left: f64,
    pub center: f64,
    pub right: f64,
}

impl PeakProbabilities {
    pub fn total(&self) -> f64 {
        self.left + self.center + self.right
    }
}

fn check_visibility(v0: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v0) {
        return Err(domain(format!("visibility must lie in [0, 1], got {v0}")));
    }
    Ok(())
}

/// Per-pair probabilities of a monitored-port coincidence in the left, central and
/// right peaks: `1/16`, `(1 + v0·cos φ)/8`, `1/16`.
pub fn franson_peak_probabilities(phase_sum: f64, v0: f64) -> Result<PeakProbabilities> {
    check_visibility(v0)?;
    Ok(PeakProbabilities {
        left: 1.0 / 16.0,
        center: (1.0 + v0 * phase_sum.cos()) / 8.0,
        right: 1.0 / 16.0,
    })
}

/// TAC peak of a two-photon event.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Peak {
    Left,
    Center,
    Right,
}

impl Peak {
    pub const ALL: [Peak; 3] = [Peak::Left, Peak::Center, Peak::Right];
}

/// Output-port pair `(signal_monitored, idler_monitored)`.
pub const PORT_PAIRS: [(bool, bool); 4] = [(true, true), (true, false), (false, true), (false, false)];

/// Full two-photon outcome distribution: time bin × output-port pair.
///
/// Indexing follows [`Peak::ALL`] and [`PORT_PAIRS`]. All twelve entries sum to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointOutcomes {
    pub probabilities: [[f64; 4]; 3],
}

impl JointOutcomes {
    pub fn monitored(&self) -> PeakProbabilities {
        PeakProbabilities {
            left: self.probabilities[0][0],
            center: self.probabilities[1][0],
            right: self.probabilities[2][0],
        }
    }
}

/// Joint distribution over time bins and output ports. Side peaks split evenly
/// over the four port pairs; in the central peak equal-port pairs carry
/// `(1 + v0·cos φ)/8` and opposite-port pairs `(1 - v0·cos φ)/8`.
pub fn franson_joint_outcomes(phase_sum: f64, v0: f64) -> Result<JointOutcomes> {
    check_visibility(v0)?;
    let c = v0 * phase_sum.cos();
    let side = [1.0 / 16.0; 4];
    let center = [(1.0 + c) / 8.0, (1.0 - c) / 8.0, (1.0 - c) / 8.0, (1.0 + c) / 8.0];
    Ok(JointOutcomes {
        probabilities: [side, center, side],
    })
}

/// Thresholds for [`franson_regime_check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RegimeTolerances {
    /// Required ratio of pump coherence length to the larger imbalance.
    pub pump_coherence_factor: f64,
    /// Required ratio of imbalance time to the longer single-photon coherence time.
    pub coherence_time_factor: f64,
    /// Largest allowed |Δt_a - Δt_b| in picoseconds. When absent, the shorter
    /// single-photon coherence time is used.
    pub alignment_tolerance_ps: Option<f64>,
}

impl Default for RegimeTolerances {
    fn default() -> Self {
        Self {
            pump_coherence_factor: 10.0,
            coherence_time_factor: 10.0,
            alignment_tolerance_ps: None,
        }
    }
}

/// One pass/fail flag with the quantity compared and its threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeCheck {
    pub passed: bool,
    pub value: f64,
    pub threshold: f64,
    /// `value / threshold` for the "greater than" checks, `threshold / value`
    /// for the alignment check. Values above 1 pass.
    pub margin: f64,
}

impl RegimeCheck {
    fn at_least(value: f64, threshold: f64) -> Self {
        Self {
            passed: value >= threshold,
            value,
            threshold,
            margin: value / threshold,
        }
    }

    fn at_most(value: f64, threshold: f64) -> Self {
        Self {
            passed: value <= threshold,
            value,
            threshold,
            margin: if value > 0.0 { threshold / value } else { f64::INFINITY },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    /// (a) pump coherence length / larger imbalance length.
    pub pump_coherence: RegimeCheck,
    /// (b) smaller imbalance time / longer single-photon coherence time.
    pub photon_distinguishability: RegimeCheck,
    /// (c) |Δt_a - Δt_b| in ps against the alignment tolerance.
    pub imbalance_match: RegimeCheck,
}

impl RegimeReport {
    pub fn all_passed(&self) -> bool {
        self.pump_coherence.passed && self.photon_distinguishability.passed && self.imbalance_match.passed
    }
}

impl fmt::Display for RegimeReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let flag = |c: &RegimeCheck| if c.passed { "PASS" } else { "FAIL" };
        writeln!(
            f,
            "  (a) pump coherence >> imbalance     {}  ratio {:.3e} (need >= {})",
            flag(&self.pump_coherence),
            self.pump_coherence.value,
            self.pump_coherence.threshold
        )?;
        writeln!(
            f,
            "  (b) imbalance >> coherence time     {}  ratio {:.3e} (need >= {})",
            flag(&self.photon_distinguishability),
            self.photon_distinguishability.value,
            self.photon_distinguishability.threshold
        )?;
        write!(
            f,
            "  (c) imbalance match                 {}  |dt_a - dt_b| = {:.3} ps (tolerance {:.3} ps)",
            flag(&self.imbalance_match),
            self.imbalance_match.value,
            self.imbalance_match.threshold
        )
    }
}

/// Checks the three conditions under which the two-path Franson prediction holds.
pub fn franson_regime_check(
    source: &SourceSpec,
    itf_a: &InterferometerSpec,
    itf_b: &InterferometerSpec,
    tolerances: &RegimeTolerances,
) -> Result<RegimeReport> {
    let tau_s = source.signal_coherence_time_s()?;
    let tau_i = source.idler_coherence_time_s()?;

    let longest_imbalance = itf_a.imbalance_length_m.max(itf_b.imbalance_length_m);
    let pump_coherence = RegimeCheck::at_least(
        source.pump_coherence_length_m / longest_imbalance,
        tolerances.pump_coherence_factor,
    );

    let shortest_delay = itf_a.imbalance_time_s().min(itf_b.imbalance_time_s());
    let photon_distinguishability = RegimeCheck::at_least(
        shortest_delay / tau_s.max(tau_i),
        tolerances.coherence_time_factor,
    );

    let offset_ps = (itf_a.imbalance_time_s() - itf_b.imbalance_time_s()).abs() * 1e12;
    let tolerance_ps = tolerances
        .alignment_tolerance_ps
        .unwrap_or(tau_s.min(tau_i) * 1e12);
    let imbalance_match = RegimeCheck::at_most(offset_ps, tolerance_ps);

    Ok(RegimeReport {
        pump_coherence,
        photon_distinguishability,
        imbalance_match,
    })
}

#[cfg(test)]
pub(crate) mod oracle {
    //! Brute-force two-photon path enumeration.
    //!
    //! Each photon crosses two 50/50 couplers (transmission `1/√2`, reflection
    //! `i/√2`); the long arm picks up `exp(iφ)`. Amplitudes that end in the same
    //! (signal port, idler port, arrival-time difference) are summed before
    //! squaring; everything else adds in probability.

    use num_complex::Complex64;
    use std::collections::HashMap;

    #[derive(Clone, Copy)]
    enum Arm {
        Short,
        Long,
    }

    fn amplitude(arm: Arm, monitored: bool, phase: f64) -> Complex64 {
        let t = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
        let r = Complex64::new(0.0, std::f64::consts::FRAC_1_SQRT_2);
        match (arm, monitored) {
            (Arm::Short, true) => t * t,
            (Arm::Short, false) => t * r,
            (Arm::Long, true) => r * Complex64::from_polar(1.0, phase) * r,
            (Arm::Long, false) => r * Complex64::from_polar(1.0, phase) * t,
        }
    }

    fn delay(arm: Arm) -> i32 {
        match arm {
            Arm::Short => 0,
            Arm::Long => 1,
        }
    }

    /// Probability table keyed by (signal monitored, idler monitored, dt in units of the imbalance).
    pub fn enumerate(phase_a: f64, phase_b: f64, v0: f64) -> HashMap<(bool, bool, i32), f64> {
        let mut coherent: HashMap<(bool, bool, i32), Complex64> = HashMap::new();
        let mut incoherent: HashMap<(bool, bool, i32), f64> = HashMap::new();
        for arm_a in [Arm::Short, Arm::Long] {
            for arm_b in [Arm::Short, Arm::Long] {
                for port_a in [true, false] {
                    for port_b in [true, false] {
                        let amp = amplitude(arm_a, port_a, phase_a) * amplitude(arm_b, port_b, phase_b);
                        let key = (port_a, port_b, delay(arm_b) - delay(arm_a));
                        *coherent.entry(key).or_default() += amp;
                        *incoherent.entry(key).or_default() += amp.norm_sqr();
                    }
                }
            }
        }
        incoherent
            .into_iter()
            .map(|(k, p_inc)| {
                let p_coh = coherent[&k].norm_sqr();
                (k, v0 * p_coh + (1.0 - v0) * p_inc)
            })
            .collect()
    }
}
