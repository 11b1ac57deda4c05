//! Fringe fitting and net-visibility extraction.

use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::montecarlo::{FringeScan, ScenarioSpec};

/// Weighted least-squares fit of `counts = B + A·cos(φ + φ0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeFit {
    pub amplitude: f64,
    pub offset: f64,
    pub phase0: f64,
    /// Covariance of `(A, B, φ0)`.
    pub covariance: [[f64; 3]; 3],
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
}

impl FringeFit {
    pub fn amplitude_sigma(&self) -> f64 {
        self.covariance[0][0].sqrt()
    }

    pub fn offset_sigma(&self) -> f64 {
        self.covariance[1][1].sqrt()
    }

    pub fn eval(&self, phase: f64) -> f64 {
        self.offset + self.amplitude * (phase + self.phase0).cos()
    }
}

fn invert3(m: [[f64; 3]; 3]) -> Option<[[f64; 3]; 3]> {
    let det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
    let scale = m.iter().flatten().fold(0.0f64, |a, x| a.max(x.abs()));
    if !(det.abs() > 1e-12 * scale.powi(3)) {
        return None;
    }
    let mut inv = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            let (r0, r1) = ((j + 1) % 3, (j + 2) % 3);
            let (c0, c1) = ((i + 1) % 3, (i + 2) % 3);
            inv[i][j] = (m[r0][c0] * m[r1][c1] - m[r0][c1] * m[r1][c0]) / det;
        }
    }
    Some(inv)
}

/// Fits a sinusoid to a scan with Poisson weights `1 / max(count, 1)`.
pub fn fit_fringe(scan: &FringeScan) -> Result<FringeFit> {
    fit_points(&scan.phases(), &scan.counts())
}

pub fn fit_points(phases: &[f64], counts: &[f64]) -> Result<FringeFit> {
    if phases.len() != counts.len() {
        return Err(Error::Fit("phase and count lengths differ".into()));
    }
    if phases.len() < 4 {
        return Err(Error::Fit(format!("need at least 4 phase points, got {}", phases.len())));
    }
    let lo = phases.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = phases.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if !(hi - lo > std::f64::consts::PI) {
        return Err(Error::Fit(format!("phase points span {:.3} rad; need more than π", hi - lo)));
    }
    if counts.iter().any(|c| !(c.is_finite() && *c >= 0.0)) {
        return Err(Error::Fit("counts must be finite and non-negative".into()));
    }

    // linear parameters (B, a, b) with c = B + a cos φ + b sin φ
    let mut normal = [[0.0; 3]; 3];
    let mut rhs = [0.0; 3];
    for (&phi, &c) in phases.iter().zip(counts) {
        let x = [1.0, phi.cos(), phi.sin()];
        let w = 1.0 / c.max(1.0);
        for i in 0..3 {
            rhs[i] += w * x[i] * c;
            for j in 0..3 {
                normal[i][j] += w * x[i] * x[j];
            }
        }
    }
    let cov_lin = invert3(normal).ok_or_else(|| Error::Fit("rank-deficient design: phases do not constrain a sinusoid".into()))?;
    let mut beta = [0.0; 3];
    for i in 0..3 {
        beta[i] = (0..3).map(|j| cov_lin[i][j] * rhs[j]).sum();
    }
    let [offset, a, b] = beta;
    let amplitude = a.hypot(b);
    let phase0 = (-b).atan2(a);

    // Jacobian of (A, B, φ0) with respect to (B, a, b)
    let cov = if amplitude > 1e-12 * offset.abs().max(1.0) {
        let a2 = amplitude * amplitude;
        let jac = [[0.0, a / amplitude, b / amplitude], [1.0, 0.0, 0.0], [0.0, b / a2, -a / a2]];
        let mut out = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                out[i][j] = (0..3)
                    .flat_map(|k| (0..3).map(move |l| (k, l)))
                    .map(|(k, l)| jac[i][k] * cov_lin[k][l] * jac[j][l])
                    .sum();
            }
        }
        out
    } else {
        // phase undefined; use the mean variance of the two quadratures
        let var_a = (cov_lin[1][1] + cov_lin[2][2]) / 2.0;
        [[var_a, 0.0, 0.0], [0.0, cov_lin[0][0], 0.0], [0.0, 0.0, f64::INFINITY]]
    };

    let chi_square = phases
        .iter()
        .zip(counts)
        .map(|(&phi, &c)| {
            let r = c - (offset + a * phi.cos() + b * phi.sin());
            r * r / c.max(1.0)
        })
        .sum();
    Ok(FringeFit {
        amplitude,
        offset,
        phase0,
        covariance: cov,
        chi_square,
        degrees_of_freedom: phases.len() - 3,
    })
}

/// Accidental-coincidence floor per phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseFloor {
    pub value: f64,
    /// Uncertainty of the floor estimate itself; zero for the model expectation.
    pub variance: f64,
}

impl NoiseFloor {
    pub fn exact(value: f64) -> Self {
        Self { value, variance: 0.0 }
    }
}

/// Expected dark-count plus double-pair coincidences per phase point inside the window.
pub fn noise_floor(s: &ScenarioSpec) -> Result<NoiseFloor> {
    let model = s.gate_model(0.0)?;
    Ok(NoiseFloor::exact(
        s.gates_per_point as f64 * model.accidental_in_window(&s.timing.window()),
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VisibilityResult {
    pub raw_amplitude: f64,
    pub raw_amplitude_sigma: f64,
    pub offset: f64,
    pub offset_sigma: f64,
    pub fitted_phase0: f64,
    pub noise_floor: f64,
    pub net_visibility: f64,
    pub net_visibility_sigma: f64,
    /// Set when a value above 1 was clipped.
    pub clipped: bool,
    pub transmittance_ratio: Option<f64>,
    pub chi_square: f64,
    pub degrees_of_freedom: usize,
}

/// `V = A / (B - N)` with first-order uncertainty.
pub fn net_visibility(fit: &FringeFit, floor: &NoiseFloor) -> Result<VisibilityResult> {
    let signal = fit.offset - floor.value;
    if !(signal > 0.0) {
        return Err(Error::DegenerateSignal {
            offset: fit.offset,
            noise_floor: floor.value,
        });
    }
    let v = fit.amplitude / signal;
    let d_a = 1.0 / signal;
    let d_b = -v / signal;
    let d_n = v / signal;
    let c = &fit.covariance;
    let var = d_a * d_a * c[0][0] + d_b * d_b * c[1][1] + 2.0 * d_a * d_b * c[0][1] + d_n * d_n * floor.variance;
    let clipped = v > 1.0;
    Ok(VisibilityResult {
        raw_amplitude: fit.amplitude,
        raw_amplitude_sigma: fit.amplitude_sigma(),
        offset: fit.offset,
        offset_sigma: fit.offset_sigma(),
        fitted_phase0: fit.phase0,
        noise_floor: floor.value,
        net_visibility: v.min(1.0),
        net_visibility_sigma: var.max(0.0).sqrt(),
        clipped,
        transmittance_ratio: None,
        chi_square: fit.chi_square,
        degrees_of_freedom: fit.degrees_of_freedom,
    })
}

/// Fit plus net visibility in one step.
pub fn analyse_scan(scan: &FringeScan, floor: &NoiseFloor) -> Result<VisibilityResult> {
    net_visibility(&fit_fringe(scan)?, floor)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmittanceCheck {
    pub ratio: f64,
    pub sigma: f64,
    pub expected: f64,
    /// `|ratio - expected| <= 2·sigma`.
    pub compatible: bool,
}

/// Ratio of floor-subtracted fringe maxima `(A + B - N)` of sample over reference.
pub fn transmittance_check(
    scan_ref: &FringeScan,
    floor_ref: &NoiseFloor,
    scan_sample: &FringeScan,
    floor_sample: &NoiseFloor,
    expected: f64,
) -> Result<TransmittanceCheck> {
    if scan_ref.points.len() != scan_sample.points.len()
        || scan_ref
            .points
            .iter()
            .zip(&scan_sample.points)
            .any(|(r, s)| r.phase_rad != s.phase_rad || r.gates != s.gates)
    {
        return Err(domain("reference and sample scans must share phase grid and gates per point"));
    }
    let peak = |scan: &FringeScan, floor: &NoiseFloor| -> Result<(f64, f64)> {
        let fit = fit_fringe(scan)?;
        let c = &fit.covariance;
        Ok((
            fit.amplitude + fit.offset - floor.value,
            c[0][0] + c[1][1] + 2.0 * c[0][1] + floor.variance,
        ))
    };
    let (r, var_r) = peak(scan_ref, floor_ref)?;
    let (s, var_s) = peak(scan_sample, floor_sample)?;
    if !(r > 0.0) {
        return Err(domain("reference fringe maximum does not exceed its noise floor"));
    }
    let ratio = s / r;
    let sigma = (var_s / (r * r) + ratio * ratio * var_r / (r * r)).sqrt();
    Ok(TransmittanceCheck {
        ratio,
        sigma,
        expected,
        compatible: (ratio - expected).abs() <= 2.0 * sigma,
    })
}

/// One experiment's results in the layout of the published summary table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub schema_version: u32,
    pub experiment: String,
    pub reference_visibility: f64,
    pub reference_visibility_sigma: f64,
    pub plasmon_assisted_visibility: f64,
    pub plasmon_assisted_visibility_sigma: f64,
    pub transmittance: f64,
    pub transmittance_sigma: f64,
    pub transmittance_expected: f64,
    pub transmittance_compatible: bool,
    pub reference: VisibilityResult,
    pub sample: VisibilityResult,
}

impl SummaryRow {
    pub fn new(experiment: &str, reference: VisibilityResult, mut sample: VisibilityResult, check: &TransmittanceCheck) -> Self {
        sample.transmittance_ratio = Some(check.ratio);
        Self {
            schema_version: crate::SCHEMA_VERSION,
            experiment: experiment.to_string(),
            reference_visibility: reference.net_visibility,
            reference_visibility_sigma: reference.net_visibility_sigma,
            plasmon_assisted_visibility: sample.net_visibility,
            plasmon_assisted_visibility_sigma: sample.net_visibility_sigma,
            transmittance: check.ratio,
            transmittance_sigma: check.sigma,
            transmittance_expected: check.expected,
            transmittance_compatible: check.compatible,
            reference,
            sample,
        }
    }

    /// `experiment | V_ref | V_sample | T` with percentages.
    pub fn summary_line(&self) -> String {
        format!(
            "{:<40} {:>6.2}% ± {:.2}%   {:>6.2}% ± {:.2}%   {:>5.2}% ± {:.2}% (expected {:.2}%, {})",
            self.experiment,
            100.0 * self.reference_visibility,
            100.0 * self.reference_visibility_sigma,
            100.0 * self.plasmon_assisted_visibility,
            100.0 * self.plasmon_assisted_visibility_sigma,
            100.0 * self.transmittance,
            100.0 * self.transmittance_sigma,
            100.0 * self.transmittance_expected,
            if self.transmittance_compatible { "compatible" } else { "incompatible" }
        )
    }
}
