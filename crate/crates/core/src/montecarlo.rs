//! Scenario description and the two fringe-scan engines.
//!
//! Work is split into units of (phase point, chunk of up to 2²⁴ gates). Each
//! unit draws from its own ChaCha8 stream, `seed` with stream id
//! `point << 32 | chunk`, so every unit is reproducible on its own and the
//! merged result does not depend on how rayon schedules them.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::detection::{window_counts, CoincidenceHistogram, DetectorSpec, GateModel, PairEvent, WindowSelection};
use crate::error::{Error, Result};
use crate::model::{
    franson_regime_check, InterferometerSpec, RegimeReport, RegimeTolerances, SourceSpec,
    DEFAULT_ENERGY_TOLERANCE,
};
use crate::plasmonic::{channel_transmittance, ChannelElement, ChannelSpec};
use crate::Warning;

const CHUNK_GATES: u64 = 1 << 24;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorPair {
    pub signal: DetectorSpec,
    pub idler: DetectorSpec,
}

impl Default for DetectorPair {
    fn default() -> Self {
        Self {
            signal: DetectorSpec::silicon_apd(),
            idler: DetectorSpec::ingaas_apd(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimingSpec {
    pub bin_width_ps: u64,
    pub window_center_ps: f64,
    pub window_half_width_ps: f64,
    pub jitter_ps: f64,
}

impl Default for TimingSpec {
    fn default() -> Self {
        Self {
            bin_width_ps: 100,
            window_center_ps: 0.0,
            window_half_width_ps: 1000.0,
            jitter_ps: 0.0,
        }
    }
}

impl TimingSpec {
    pub fn window(&self) -> WindowSelection {
        WindowSelection {
            center_ps: self.window_center_ps,
            half_width_ps: self.window_half_width_ps,
        }
    }
}

/// Either a number of equally spaced phases over 2π or an explicit list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PhasePoints {
    Count(usize),
    List(Vec<f64>),
}

impl Default for PhasePoints {
    fn default() -> Self {
        PhasePoints::Count(16)
    }
}

impl PhasePoints {
    pub fn values(&self) -> Vec<f64> {
        match self {
            PhasePoints::Count(n) => (0..*n)
                .map(|k| 2.0 * std::f64::consts::PI * k as f64 / *n as f64)
                .collect(),
            PhasePoints::List(v) => v.clone(),
        }
    }
}

/// Polarisation angle of each photon at its channel input.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PolarizationSpec {
    pub signal_rad: f64,
    pub idler_rad: f64,
}

fn default_energy_tolerance() -> f64 {
    DEFAULT_ENERGY_TOLERANCE
}

fn default_gates() -> u64 {
    1_000_000
}

/// Full description of one experiment: source, channels, interferometers,
/// detectors and scan settings. The phase scan drives the signal
/// interferometer; `itf_*.phase_rad` are fixed offsets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub label: String,
    #[serde(default)]
    pub experiment: String,
    pub source: SourceSpec,
    pub channel_signal: ChannelSpec,
    pub channel_idler: ChannelSpec,
    pub itf_signal: InterferometerSpec,
    pub itf_idler: InterferometerSpec,
    #[serde(default)]
    pub detectors: DetectorPair,
    #[serde(default)]
    pub timing: TimingSpec,
    #[serde(default)]
    pub polarization: PolarizationSpec,
    #[serde(default)]
    pub phase_points: PhasePoints,
    #[serde(default = "default_gates")]
    pub gates_per_point: u64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub regime: RegimeTolerances,
    #[serde(default = "default_energy_tolerance")]
    pub energy_tolerance: f64,
}

/// Per-gate quantities shared by every phase point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelTransmittances {
    pub signal: f64,
    pub idler: f64,
}

impl ScenarioSpec {
    /// Checks every field; returns non-fatal remarks.
    pub fn validate(&self) -> Result<Vec<Warning>> {
        let invalid = |e: Error| Error::InvalidScenario(e.to_string());
        self.source.validate(self.energy_tolerance).map_err(invalid)?;
        self.itf_signal.validate().map_err(invalid)?;
        self.itf_idler.validate().map_err(invalid)?;
        self.detectors.signal.validate().map_err(invalid)?;
        self.detectors.idler.validate().map_err(invalid)?;
        self.channel_signal.validate().map_err(invalid)?;
        self.channel_idler.validate().map_err(invalid)?;
        let phases = self.phase_points.values();
        if phases.is_empty() {
            return Err(Error::InvalidScenario("phase_points must not be empty".into()));
        }
        if phases.iter().any(|p| !p.is_finite()) {
            return Err(Error::InvalidScenario("phase_points must be finite".into()));
        }
        if self.gates_per_point == 0 {
            return Err(Error::InvalidScenario("gates_per_point must be positive".into()));
        }
        self.histogram_template().map_err(invalid)?;
        let t = &self.timing;
        if !(t.jitter_ps >= 0.0 && t.jitter_ps.is_finite()) {
            return Err(Error::InvalidScenario("jitter_ps must be non-negative".into()));
        }
        let (range_lo, range_hi) = self.histogram_range_ps();
        let (lo, hi) = t.window().bounds_ps();
        if !(t.window_half_width_ps > 0.0) || lo < range_lo as f64 || hi > range_hi as f64 {
            return Err(Error::InvalidScenario(format!(
                "window [{lo}, {hi}] ps must have positive width and lie within [{range_lo}, {range_hi}] ps"
            )));
        }
        let bin = t.bin_width_ps as f64;
        let on_grid = |x: f64| ((x - range_lo as f64) / bin).fract() == 0.0;
        if !on_grid(lo) || !on_grid(hi) {
            return Err(Error::InvalidScenario(format!(
                "window edges {lo} and {hi} ps must fall on the {bin} ps bin grid"
            )));
        }
        self.transmittances().map_err(invalid)?;

        let mut warnings = Vec::new();
        let elements = [&self.channel_signal, &self.channel_idler]
            .iter()
            .filter(|c| !c.is_identity())
            .count();
        if elements != 1 {
            warnings.push(Warning::new(
                "sample_count",
                format!("{elements} channels carry a sample element; the usual protocol inserts exactly one"),
            ));
        }
        let shortest_imbalance = self.itf_signal.imbalance_time_s().min(self.itf_idler.imbalance_time_s()) * 1e12;
        if t.window().overlaps_side_peaks(shortest_imbalance) {
            warnings.push(Warning::new(
                "window_overlaps_side_peaks",
                format!(
                    "window half-width {} ps reaches half the {shortest_imbalance:.1} ps peak spacing",
                    t.window_half_width_ps
                ),
            ));
        }
        Ok(warnings)
    }

    pub fn regime_report(&self) -> Result<RegimeReport> {
        franson_regime_check(&self.source, &self.itf_signal, &self.itf_idler, &self.regime)
    }

    /// Histogram range: the idler gate widened outward to whole bins.
    pub fn histogram_range_ps(&self) -> (i64, i64) {
        let (lo, hi) = self.detectors.idler.gate_interval_ps();
        let bin = self.timing.bin_width_ps.max(1) as f64;
        (((lo / bin).floor() * bin) as i64, ((hi / bin).ceil() * bin) as i64)
    }

    fn histogram_template(&self) -> Result<CoincidenceHistogram> {
        CoincidenceHistogram::new(self.timing.bin_width_ps, self.histogram_range_ps(), 0)
    }

    pub fn transmittances(&self) -> Result<ChannelTransmittances> {
        Ok(ChannelTransmittances {
            signal: channel_transmittance(
                &self.channel_signal,
                self.source.signal_center_nm,
                self.polarization.signal_rad,
            )?,
            idler: channel_transmittance(
                &self.channel_idler,
                self.source.idler_center_nm,
                self.polarization.idler_rad,
            )?,
        })
    }

    /// Combined two-photon visibility of the two interferometers.
    pub fn combined_visibility(&self) -> f64 {
        self.itf_signal.intrinsic_visibility * self.itf_idler.intrinsic_visibility
    }

    /// Phase sum for a scanned signal-interferometer setting.
    pub fn phase_sum(&self, scanned_rad: f64) -> f64 {
        scanned_rad
            + self.itf_signal.phase_rad
            + self.itf_idler.phase_rad
            + self.itf_signal.monitored_output.phase_offset()
            + self.itf_idler.monitored_output.phase_offset()
    }

    /// The same bench with every sample element taken out. Base insertion and
    /// polarisation losses stay, as they belong to the U-bench. The seed is
    /// remixed so the two scans use independent streams.
    pub fn reference(&self) -> ScenarioSpec {
        let strip = |c: &ChannelSpec| ChannelSpec {
            element: ChannelElement::Identity,
            ..c.clone()
        };
        ScenarioSpec {
            label: format!("{}-reference", self.label),
            channel_signal: strip(&self.channel_signal),
            channel_idler: strip(&self.channel_idler),
            seed: splitmix64(self.seed),
            ..self.clone()
        }
    }

    /// Transmittance ratio of this scenario's channels to its reference.
    pub fn expected_transmittance_ratio(&self) -> Result<f64> {
        let sample = self.transmittances()?;
        let reference = self.reference().transmittances()?;
        Ok(sample.signal * sample.idler / (reference.signal * reference.idler))
    }

    /// Hex SHA-256 of the canonical JSON form.
    pub fn run_hash(&self) -> String {
        let json = serde_json::to_vec(self).expect("scenario serialises");
        hex::encode(Sha256::digest(&json))
    }

    /// Gate model at one scanned phase.
    pub fn gate_model(&self, scanned_rad: f64) -> Result<GateModel> {
        let t = self.transmittances()?;
        let pair = PairEvent {
            phase_sum_rad: self.phase_sum(scanned_rad),
            visibility: self.combined_visibility(),
            emission_probability: self.source.pair_probability_per_gate,
            signal_delay_ps: self.itf_signal.imbalance_time_s() * 1e12,
            idler_delay_ps: self.itf_idler.imbalance_time_s() * 1e12,
        };
        GateModel::new(
            &pair,
            (&self.detectors.signal, &self.detectors.idler),
            (t.signal, t.idler),
            self.timing.jitter_ps,
        )
    }

    fn ensure_runnable(&self) -> Result<()> {
        self.validate()?;
        let report = self.regime_report()?;
        if !report.all_passed() {
            return Err(Error::RegimeRefused(Box::new(report)));
        }
        Ok(())
    }
}

pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Analytic,
    MonteCarlo,
}

impl std::fmt::Display for Engine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Engine::Analytic => "analytic",
            Engine::MonteCarlo => "montecarlo",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringePoint {
    pub phase_rad: f64,
    /// In-window coincidences; an expectation for the analytic engine.
    pub coincidences: f64,
    pub gates: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeScan {
    pub label: String,
    pub engine: Engine,
    pub scenario_hash: String,
    pub seed: u64,
    pub points: Vec<FringePoint>,
}

impl FringeScan {
    pub fn phases(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.phase_rad).collect()
    }

    pub fn counts(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.coincidences).collect()
    }
}

/// Expected in-window coincidences at every phase point.
pub fn run_analytic(s: &ScenarioSpec) -> Result<FringeScan> {
    s.ensure_runnable()?;
    let window = s.timing.window();
    let points = s
        .phase_points
        .values()
        .into_iter()
        .map(|phase| {
            let model = s.gate_model(phase)?;
            Ok(FringePoint {
                phase_rad: phase,
                coincidences: s.gates_per_point as f64 * model.expected_in_window(&window),
                gates: s.gates_per_point,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(FringeScan {
        label: s.label.clone(),
        engine: Engine::Analytic,
        scenario_hash: s.run_hash(),
        seed: s.seed,
        points,
    })
}

/// Monte-Carlo fringe scan.
pub fn run_scan(s: &ScenarioSpec) -> Result<FringeScan> {
    Ok(run_scan_with_histogram(s)?.0)
}

/// Monte-Carlo scan plus the TAC histogram summed over all phase points.
pub fn run_scan_with_histogram(s: &ScenarioSpec) -> Result<(FringeScan, CoincidenceHistogram)> {
    s.ensure_runnable()?;
    let phases = s.phase_points.values();
    let models = phases.iter().map(|&p| s.gate_model(p)).collect::<Result<Vec<_>>>()?;
    let template = s.histogram_template()?;

    let chunks = s.gates_per_point.div_ceil(CHUNK_GATES);
    let units: Vec<(usize, u64)> = (0..phases.len())
        .flat_map(|p| (0..chunks).map(move |c| (p, c)))
        .collect();
    let partial: Vec<CoincidenceHistogram> = units
        .par_iter()
        .map(|&(point, chunk)| {
            let start = chunk * CHUNK_GATES;
            let gates = CHUNK_GATES.min(s.gates_per_point - start);
            let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
            rng.set_stream(((point as u64) << 32) | chunk);
            let mut h = template.clone();
            h.total_gates = gates;
            simulate_chunk(&models[point], gates, &mut rng, &mut h);
            h
        })
        .collect();

    let mut per_point = vec![template.clone(); phases.len()];
    for (&(point, _), h) in units.iter().zip(&partial) {
        per_point[point].merge(h)?;
    }
    let window = s.timing.window();
    let mut total = template;
    let mut points = Vec::with_capacity(phases.len());
    for (phase, h) in phases.iter().zip(&per_point) {
        let wc = window_counts(h, &window, None)?;
        points.push(FringePoint {
            phase_rad: *phase,
            coincidences: wc.in_window as f64,
            gates: h.total_gates,
        });
        total.merge(h)?;
    }
    let scan = FringeScan {
        label: s.label.clone(),
        engine: Engine::MonteCarlo,
        scenario_hash: s.run_hash(),
        seed: s.seed,
        points,
    };
    Ok((scan, total))
}

/// Samples `gates` gates, jumping geometrically between coincidences.
fn simulate_chunk<R: Rng>(model: &GateModel, gates: u64, rng: &mut R, h: &mut CoincidenceHistogram) {
    let p = model.coincidence_probability();
    if p <= 0.0 {
        return;
    }
    let log_q = (-p).ln_1p();
    let mut gate = 0u64;
    loop {
        if p < 1.0 {
            // U ∈ (0, 1]
            let u = 1.0 - rng.random::<f64>();
            let gap = (u.ln() / log_q).floor();
            if gap >= (gates - gate) as f64 {
                return;
            }
            gate += gap as u64;
        }
        let (dt, _) = model.sample_coincidence(rng);
        h.record(dt);
        gate += 1;
        if gate >= gates {
            return;
        }
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::detection::DetectorKind;
    use crate::model::OutputPort;
    use crate::plasmonic::LrsppWaveguideSpec;

    pub(crate) fn lrspp_scenario(gates: u64) -> ScenarioSpec {
        ScenarioSpec {
            label: "lrspp".into(),
            experiment: "LR-SPP".into(),
            source: SourceSpec {
                pump_wavelength_nm: 532.0,
                pump_coherence_length_m: 1500.0,
                signal_center_nm: 810.0,
                signal_width_fwhm_nm: 2.0,
                idler_center_nm: 1550.0,
                idler_width_fwhm_nm: 7.0,
                pair_probability_per_gate: 0.3,
            },
            channel_signal: ChannelSpec::identity(3.0),
            channel_idler: ChannelSpec {
                base_insertion_loss_db: 0.0,
                polarization_dependence_bound_db: 0.0,
                element: ChannelElement::Lrspp(LrsppWaveguideSpec {
                    stripe_length_cm: 0.5,
                    stripe_width_um: 8.0,
                    stripe_thickness_nm: 20.0,
                    cladding_index: 1.535,
                    propagation_loss_db_per_cm: 1.0,
                    coupling_loss_per_facet_db: 3.245,
                }),
            },
            itf_signal: InterferometerSpec {
                imbalance_length_m: 1.0,
                phase_rad: 0.0,
                intrinsic_visibility: 0.931,
                monitored_output: OutputPort::Primary,
            },
            itf_idler: InterferometerSpec {
                imbalance_length_m: 1.0,
                phase_rad: 0.0,
                intrinsic_visibility: 1.0,
                monitored_output: OutputPort::Primary,
            },
            detectors: DetectorPair::default(),
            timing: TimingSpec::default(),
            polarization: PolarizationSpec::default(),
            phase_points: PhasePoints::Count(16),
            gates_per_point: gates,
            seed: 42,
            regime: RegimeTolerances::default(),
            energy_tolerance: DEFAULT_ENERGY_TOLERANCE,
        }
    }

    #[test]
    fn bundled_like_scenario_is_valid() {
        let s = lrspp_scenario(1000);
        assert!(s.validate().unwrap().is_empty());
        assert_eq!(s.histogram_range_ps(), (-1300, 1300));
        assert!((s.expected_transmittance_ratio().unwrap() - 0.2).abs() < 1e-4);
        assert!(s.reference().validate().unwrap().len() == 1);
    }

    #[test]
    fn zero_gates_forbidden_one_gate_degenerate() {
        assert!(matches!(run_scan(&lrspp_scenario(0)), Err(Error::InvalidScenario(_))));
        let scan = run_scan(&lrspp_scenario(1)).unwrap();
        assert_eq!(scan.points.len(), 16);
        assert!(scan.points.iter().all(|p| p.coincidences == 0.0 || p.coincidences == 1.0));
    }

    #[test]
    fn regime_failure_refuses() {
        let mut s = lrspp_scenario(10);
        s.source.pump_coherence_length_m = 0.5;
        match run_analytic(&s) {
            Err(Error::RegimeRefused(report)) => assert!(!report.pump_coherence.passed),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn window_off_grid_rejected() {
        let mut s = lrspp_scenario(10);
        s.timing.window_half_width_ps = 1050.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn analytic_floor_and_zero_minimum() {
        let mut s = lrspp_scenario(1_000_000);
        s.source.pair_probability_per_gate = 0.0;
        let scan = run_analytic(&s).unwrap();
        for p in &scan.points {
            assert!((p.coincidences - 28.0).abs() < 1e-9, "{}", p.coincidences);
        }

        let mut s = lrspp_scenario(1_000_000);
        s.itf_signal.intrinsic_visibility = 1.0;
        s.detectors.idler.dark_count_probability_per_gate = 0.0;
        s.phase_points = PhasePoints::List(vec![std::f64::consts::PI]);
        // double pairs are the only other floor; switch them off as well
        let model = s.gate_model(std::f64::consts::PI).unwrap();
        let pair_min = model.pair_in_window(&s.timing.window());
        assert!(pair_min.abs() < 1e-18);
    }

    #[test]
    fn analytic_transmittance_scales_pair_term_exactly() {
        let s = lrspp_scenario(1_000_000);
        let r = s.reference();
        let w = s.timing.window();
        for k in 0..8 {
            let phase = k as f64 * 0.7;
            let sample = s.gate_model(phase).unwrap().pair_in_window(&w);
            let reference = r.gate_model(phase).unwrap().pair_in_window(&w);
            let t = s.expected_transmittance_ratio().unwrap();
            assert!((sample - t * reference).abs() <= 1e-15 * reference);
        }
    }

    #[test]
    fn deterministic_in_seed_and_independent_of_threads() {
        let s = lrspp_scenario(200_000);
        let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let four = rayon::ThreadPoolBuilder::new().num_threads(4).build().unwrap();
        let a = one.install(|| run_scan_with_histogram(&s)).unwrap();
        let b = four.install(|| run_scan_with_histogram(&s)).unwrap();
        assert_eq!(a, b);
        let mut other = s.clone();
        other.seed = 43;
        assert_ne!(run_scan(&other).unwrap().points, a.0.points);
    }

    #[test]
    fn chunk_boundaries_are_seamless() {
        let mut s = lrspp_scenario(CHUNK_GATES + 5000);
        s.phase_points = PhasePoints::List(vec![0.0]);
        let scan = run_scan(&s).unwrap();
        let expected = run_analytic(&s).unwrap().points[0].coincidences;
        let got = scan.points[0].coincidences;
        assert!((got - expected).abs() < 5.0 * expected.sqrt(), "{got} vs {expected}");
        assert_eq!(scan.points[0].gates, CHUNK_GATES + 5000);
    }

    #[test]
    fn mc_mean_over_seeds_matches_analytic() {
        let mut s = lrspp_scenario(100_000);
        s.phase_points = PhasePoints::Count(8);
        let analytic = run_analytic(&s).unwrap();
        let seeds = 32;
        let mut sums = vec![0.0; 8];
        for seed in 0..seeds {
            s.seed = seed;
            for (acc, p) in sums.iter_mut().zip(run_scan(&s).unwrap().points) {
                *acc += p.coincidences;
            }
        }
        for (sum, a) in sums.iter().zip(&analytic.points) {
            let mean = sum / seeds as f64;
            let sigma = (a.coincidences / seeds as f64).sqrt();
            assert!((mean - a.coincidences).abs() < 5.0 * sigma, "{mean} vs {}", a.coincidences);
        }
    }

    #[test]
    fn phase_averaged_free_running_peaks_are_one_two_one() {
        let mut s = lrspp_scenario(1_000_000);
        s.channel_idler = ChannelSpec::identity(0.0);
        s.channel_signal = ChannelSpec::identity(0.0);
        s.itf_signal.intrinsic_visibility = 1.0;
        s.detectors.signal.efficiency = 1.0;
        s.detectors.idler = DetectorSpec {
            kind: DetectorKind::FreeRunning,
            efficiency: 1.0,
            dark_count_probability_per_gate: 0.0,
            gate_width_ns: 10.0,
        };
        s.source.pair_probability_per_gate = 0.02;
        s.phase_points = PhasePoints::Count(8);
        s.gates_per_point = 125_000;
        let (_, h) = run_scan_with_histogram(&s).unwrap();
        let left = h.mass_between(-4000.0, -2500.0) as f64;
        let center = h.mass_between(-1000.0, 1000.0) as f64;
        let right = h.mass_between(2500.0, 4000.0) as f64;
        // double pairs spread over the whole span; at this μ they are a handful
        assert!(h.recorded() - (left + center + right) as u64 <= 150);
        let n = (left + center + right) / 4.0;
        for (got, share) in [(left, 1.0), (center, 2.0), (right, 1.0)] {
            let expected = n * share;
            let sigma = (expected * (1.0 - share / 4.0)).sqrt();
            assert!((got - expected).abs() < 5.0 * sigma, "{got} vs {expected}");
        }
    }

    #[test]
    fn run_hash_tracks_content() {
        let s = lrspp_scenario(10);
        let mut t = s.clone();
        assert_eq!(s.run_hash(), t.run_hash());
        t.seed += 1;
        assert_ne!(s.run_hash(), t.run_hash());
        let json = serde_json::to_string(&s).unwrap();
        let back: ScenarioSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(back.run_hash(), s.run_hash());
    }

    #[test]
    fn secondary_port_shifts_fringe_by_pi() {
        let s = lrspp_scenario(1000);
        let mut t = s.clone();
        t.itf_idler.monitored_output = OutputPort::Secondary;
        let w = s.timing.window();
        let a = s.gate_model(0.0).unwrap().pair_in_window(&w);
        let b = t.gate_model(std::f64::consts::PI).unwrap().pair_in_window(&w);
        assert!((a - b).abs() < 1e-15);
    }
}
