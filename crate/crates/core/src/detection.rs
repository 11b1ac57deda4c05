//! Gated single-photon detection, TAC histogramming and time-window discrimination.
//!
//! A *gate* is one TAC cycle: the idler detector is armed for `gate_width_ns`
//! around the signal-arm timing reference. Per gate, at most one of the
//! following processes happens:
//!
//! - an idler dark count, uniform over the gate (`dark_count_probability_per_gate`);
//! - a double-pair accidental, uniform over the gate, `μ² · (Ts ηs / 2) · (Ti ηi / 2)`;
//! - a signal dark count (no coincidence);
//! - one photon pair (`μ`), routed through both interferometers.
//!
//! Joint occurrences are second order in these small probabilities and are
//! neglected, which keeps the closed-form expectations exact for the sampler.
//! A pair yields a coincidence only when both photons leave the monitored ports
//! and are detected; a gated idler detector additionally needs the idler to
//! land inside its gate.

use std::io::Write;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{domain, Result};
use crate::model::{franson_joint_outcomes, JointOutcomes, Peak, PORT_PAIRS};
use crate::Warning;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DetectorKind {
    FreeRunning,
    Gated,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSpec {
    pub kind: DetectorKind,
    pub efficiency: f64,
    pub dark_count_probability_per_gate: f64,
    /// Gate width for a gated detector; for a free-running stop detector this
    /// is the TAC span over which its dark counts are spread.
    pub gate_width_ns: f64,
}

impl DetectorSpec {
    /// Actively quenched silicon APD on the 810 nm arm.
    pub fn silicon_apd() -> Self {
        Self {
            kind: DetectorKind::FreeRunning,
            efficiency: 0.4,
            dark_count_probability_per_gate: 0.0,
            gate_width_ns: 2.5,
        }
    }

    /// InGaAs APD on the 1550 nm arm, gated by the silicon detector.
    pub fn ingaas_apd() -> Self {
        Self {
            kind: DetectorKind::Gated,
            efficiency: 0.1,
            dark_count_probability_per_gate: 3.5e-5,
            gate_width_ns: 2.5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.efficiency > 0.0 && self.efficiency <= 1.0) {
            return Err(domain(format!("detector efficiency must lie in (0, 1], got {}", self.efficiency)));
        }
        if !(0.0..1.0).contains(&self.dark_count_probability_per_gate) {
            return Err(domain("dark count probability per gate must lie in [0, 1)"));
        }
        if !(self.gate_width_ns > 0.0 && self.gate_width_ns.is_finite()) {
            return Err(domain("gate width must be positive"));
        }
        Ok(())
    }

    /// Arrival-time interval `[lo, hi)` in picoseconds covered by one gate.
    pub fn gate_interval_ps(&self) -> (f64, f64) {
        let half = self.gate_width_ns * 500.0;
        (-half, half)
    }
}

/// What enters the two interferometers during a gate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairEvent {
    pub phase_sum_rad: f64,
    pub visibility: f64,
    /// Probability μ that the gate contains a pair.
    pub emission_probability: f64,
    pub signal_delay_ps: f64,
    pub idler_delay_ps: f64,
}

/// Origin of a detection record. Diagnostics only; analysis never reads it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Nothing,
    TruePair(Peak),
    /// A pair whose photons did not produce a coincidence.
    UnmatchedPair,
    IdlerDark,
    SignalDark,
    DoublePair,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GateRecord {
    pub gate_index: u64,
    pub signal_fired: bool,
    pub idler_fired: bool,
    /// `t_idler - t_signal` when both fired, in ps.
    pub dt_ps: Option<f64>,
    pub provenance: Provenance,
}

/// Coincidence-producing process, in sampling order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Coincidence {
    IdlerDark,
    DoublePair,
    Pair(Peak),
}

/// Precomputed per-gate probabilities for one phase setting.
#[derive(Debug, Clone)]
pub struct GateModel {
    joint: JointOutcomes,
    mu: f64,
    signal_detect: f64,
    idler_detect: f64,
    idler_dark: f64,
    signal_dark: f64,
    double_pair: f64,
    idler_gated: bool,
    acceptance_ps: (f64, f64),
    peak_times_ps: [f64; 3],
    jitter: Option<Normal>,
    /// Probability and cumulative table of the coincidence-producing processes.
    coincidence_probability: f64,
    coincidences: Vec<(f64, Coincidence)>,
}

impl GateModel {
    /// `detectors` and `channels` are `(signal, idler)`; `channels` are power
    /// transmittances. `jitter_ps` is the RMS of the Gaussian timing jitter.
    pub fn new(
        pair: &PairEvent,
        detectors: (&DetectorSpec, &DetectorSpec),
        channels: (f64, f64),
        jitter_ps: f64,
    ) -> Result<Self> {
        let (sig, idl) = detectors;
        sig.validate()?;
        idl.validate()?;
        for t in [channels.0, channels.1] {
            if !(0.0..=1.0).contains(&t) {
                return Err(domain(format!("channel transmittance must lie in [0, 1], got {t}")));
            }
        }
        let mu = pair.emission_probability;
        if !(0.0..1.0).contains(&mu) {
            return Err(domain("pair emission probability must lie in [0, 1)"));
        }
        if !(jitter_ps >= 0.0 && jitter_ps.is_finite()) {
            return Err(domain("timing jitter must be non-negative"));
        }
        let joint = franson_joint_outcomes(pair.phase_sum_rad, pair.visibility)?;
        let signal_detect = channels.0 * sig.efficiency;
        let idler_detect = channels.1 * idl.efficiency;
        let double_pair = mu * mu * (signal_detect / 2.0) * (idler_detect / 2.0);
        let idler_dark = idl.dark_count_probability_per_gate;
        let signal_dark = sig.dark_count_probability_per_gate;
        if idler_dark + signal_dark + double_pair + mu > 1.0 {
            return Err(domain("per-gate process probabilities exceed 1"));
        }
        let jitter = if jitter_ps > 0.0 {
            Some(Normal::new(0.0, jitter_ps).map_err(|e| domain(e.to_string()))?)
        } else {
            None
        };

        let mut model = Self {
            joint,
            mu,
            signal_detect,
            idler_detect,
            idler_dark,
            signal_dark,
            double_pair,
            idler_gated: idl.kind == DetectorKind::Gated,
            acceptance_ps: idl.gate_interval_ps(),
            peak_times_ps: [-pair.signal_delay_ps, 0.0, pair.idler_delay_ps],
            jitter,
            coincidence_probability: 0.0,
            coincidences: Vec::new(),
        };

        let mut table = Vec::new();
        let mut acc = 0.0;
        let mut push = |p: f64, c: Coincidence| {
            if p > 0.0 {
                acc += p;
                table.push((acc, c));
            }
        };
        push(idler_dark, Coincidence::IdlerDark);
        push(double_pair, Coincidence::DoublePair);
        for (k, peak) in Peak::ALL.into_iter().enumerate() {
            push(model.pair_coincidence_probability(k), Coincidence::Pair(peak));
        }
        model.coincidence_probability = acc;
        model.coincidences = table;
        Ok(model)
    }

    /// Probability that arrival time `t + jitter` falls in `[lo, hi)`.
    fn arrival_probability(&self, t: f64, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        match &self.jitter {
            None => {
                if t >= lo && t < hi {
                    1.0
                } else {
                    0.0
                }
            }
            Some(n) => n.cdf(hi - t) - n.cdf(lo - t),
        }
    }

    /// Interval in which a pair idler is accepted, intersected with `[lo, hi)`.
    fn accepted(&self, lo: f64, hi: f64) -> (f64, f64) {
        if self.idler_gated {
            (lo.max(self.acceptance_ps.0), hi.min(self.acceptance_ps.1))
        } else {
            (lo, hi)
        }
    }

    fn pair_coincidence_probability(&self, peak: usize) -> f64 {
        let (lo, hi) = self.accepted(f64::NEG_INFINITY, f64::INFINITY);
        self.mu
            * self.joint.probabilities[peak][0]
            * self.signal_detect
            * self.idler_detect
            * self.arrival_probability(self.peak_times_ps[peak], lo, hi)
    }

    /// Probability per gate of a recorded coincidence from any process.
    pub fn coincidence_probability(&self) -> f64 {
        self.coincidence_probability
    }

    pub fn acceptance_ps(&self) -> (f64, f64) {
        self.acceptance_ps
    }

    /// Expected accidental coincidences per gate inside `window`.
    pub fn accidental_in_window(&self, window: &WindowSelection) -> f64 {
        let (lo, hi) = window.bounds_ps();
        let (a, b) = self.acceptance_ps;
        let overlap = (hi.min(b) - lo.max(a)).max(0.0) / (b - a);
        (self.idler_dark + self.double_pair) * overlap
    }

    /// Expected true-pair coincidences per gate inside `window`.
    pub fn pair_in_window(&self, window: &WindowSelection) -> f64 {
        let (lo, hi) = window.bounds_ps();
        let (lo, hi) = self.accepted(lo, hi);
        (0..3)
            .map(|k| {
                self.mu
                    * self.joint.probabilities[k][0]
                    * self.signal_detect
                    * self.idler_detect
                    * self.arrival_probability(self.peak_times_ps[k], lo, hi)
            })
            .sum()
    }

    /// Closed-form expected coincidences per gate inside `window`.
    pub fn expected_in_window(&self, window: &WindowSelection) -> f64 {
        self.pair_in_window(window) + self.accidental_in_window(window)
    }

    fn uniform_in_gate<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let (a, b) = self.acceptance_ps;
        a + (b - a) * rng.random::<f64>()
    }

    /// Arrival of a pair idler in `peak`, conditioned on acceptance.
    fn accepted_arrival<R: Rng + ?Sized>(&self, peak: usize, rng: &mut R) -> f64 {
        let t = self.peak_times_ps[peak];
        match &self.jitter {
            None => t,
            Some(n) => {
                let (lo, hi) = self.accepted(f64::NEG_INFINITY, f64::INFINITY);
                let (p_lo, p_hi) = (n.cdf(lo - t), n.cdf(hi - t));
                t + n.inverse_cdf(p_lo + (p_hi - p_lo) * rng.random::<f64>())
            }
        }
    }

    /// Draws a coincidence conditioned on one occurring in this gate.
    pub fn sample_coincidence<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Provenance) {
        let u = rng.random::<f64>() * self.coincidence_probability;
        let idx = self.coincidences.partition_point(|(c, _)| *c <= u).min(self.coincidences.len() - 1);
        match self.coincidences[idx].1 {
            Coincidence::IdlerDark => (self.uniform_in_gate(rng), Provenance::IdlerDark),
            Coincidence::DoublePair => (self.uniform_in_gate(rng), Provenance::DoublePair),
            Coincidence::Pair(peak) => {
                let k = Peak::ALL.iter().position(|p| *p == peak).unwrap();
                (self.accepted_arrival(k, rng), Provenance::TruePair(peak))
            }
        }
    }

    /// Draws one full gate, including outcomes that give no coincidence.
    pub fn sample_gate<R: Rng + ?Sized>(&self, gate_index: u64, rng: &mut R) -> GateRecord {
        let mut record = GateRecord {
            gate_index,
            signal_fired: false,
            idler_fired: false,
            dt_ps: None,
            provenance: Provenance::Nothing,
        };
        let mut u = rng.random::<f64>();
        // accidentals are defined per started gate, so the start is implied
        if u < self.idler_dark {
            record.signal_fired = true;
            record.idler_fired = true;
            record.dt_ps = Some(self.uniform_in_gate(rng));
            record.provenance = Provenance::IdlerDark;
            return record;
        }
        u -= self.idler_dark;
        if u < self.double_pair {
            record.signal_fired = true;
            record.idler_fired = true;
            record.dt_ps = Some(self.uniform_in_gate(rng));
            record.provenance = Provenance::DoublePair;
            return record;
        }
        u -= self.double_pair;
        if u < self.signal_dark {
            record.signal_fired = true;
            record.provenance = Provenance::SignalDark;
            return record;
        }
        u -= self.signal_dark;
        if u >= self.mu {
            return record;
        }

        // one pair: pick time bin and ports, then detection
        let mut v = rng.random::<f64>();
        let mut outcome = (2, 3);
        'search: for (bin, row) in self.joint.probabilities.iter().enumerate() {
            for (ports, p) in row.iter().enumerate() {
                if v < *p {
                    outcome = (bin, ports);
                    break 'search;
                }
                v -= p;
            }
        }
        let (bin, ports) = outcome;
        let (signal_monitored, idler_monitored) = PORT_PAIRS[ports];
        let signal_hit = signal_monitored && rng.random::<f64>() < self.signal_detect;
        let idler_hit = idler_monitored && rng.random::<f64>() < self.idler_detect;
        let arrival = self.peak_times_ps[bin] + self.jitter.as_ref().map_or(0.0, |n| n.inverse_cdf(rng.random::<f64>()));
        let in_gate = arrival >= self.acceptance_ps.0 && arrival < self.acceptance_ps.1;

        record.signal_fired = signal_hit;
        record.idler_fired = if self.idler_gated {
            idler_hit && signal_hit && in_gate
        } else {
            idler_hit
        };
        if record.signal_fired && record.idler_fired {
            record.dt_ps = Some(arrival);
            record.provenance = Provenance::TruePair(Peak::ALL[bin]);
        } else {
            record.provenance = Provenance::UnmatchedPair;
        }
        record
    }
}

/// One gate of the detection chain.
pub fn simulate_gate_outcomes<R: Rng + ?Sized>(model: &GateModel, gate_index: u64, rng: &mut R) -> GateRecord {
    model.sample_gate(gate_index, rng)
}

/// Binned arrival-time differences.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoincidenceHistogram {
    pub bin_width_ps: u64,
    pub origin_ps: i64,
    pub counts: Vec<u64>,
    pub total_gates: u64,
    /// Records that fell outside the histogram range.
    pub dropped: u64,
}

impl CoincidenceHistogram {
    /// Empty histogram over `[start_ps, end_ps)`.
    pub fn new(bin_width_ps: u64, range_ps: (i64, i64), total_gates: u64) -> Result<Self> {
        if bin_width_ps == 0 {
            return Err(domain("bin width must be positive"));
        }
        let (start, end) = range_ps;
        if end <= start {
            return Err(domain("histogram range must be non-empty"));
        }
        let span = (end - start) as u64;
        if span % bin_width_ps != 0 {
            return Err(domain(format!(
                "bin width {bin_width_ps} ps does not divide the range {span} ps"
            )));
        }
        Ok(Self {
            bin_width_ps,
            origin_ps: start,
            counts: vec![0; (span / bin_width_ps) as usize],
            total_gates,
            dropped: 0,
        })
    }

    pub fn end_ps(&self) -> i64 {
        self.origin_ps + (self.counts.len() as u64 * self.bin_width_ps) as i64
    }

    pub fn bin_center_ps(&self, k: usize) -> f64 {
        self.origin_ps as f64 + (k as f64 + 0.5) * self.bin_width_ps as f64
    }

    pub fn record(&mut self, dt_ps: f64) {
        let pos = (dt_ps - self.origin_ps as f64) / self.bin_width_ps as f64;
        if pos >= 0.0 && pos < self.counts.len() as f64 {
            self.counts[pos as usize] += 1;
        } else {
            self.dropped += 1;
        }
    }

    pub fn binned(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Binned plus dropped records.
    pub fn recorded(&self) -> u64 {
        self.binned() + self.dropped
    }

    /// Adds another histogram with the same binning.
    pub fn merge(&mut self, other: &CoincidenceHistogram) -> Result<()> {
        if self.bin_width_ps != other.bin_width_ps
            || self.origin_ps != other.origin_ps
            || self.counts.len() != other.counts.len()
        {
            return Err(domain("cannot merge histograms with different binning"));
        }
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total_gates += other.total_gates;
        self.dropped += other.dropped;
        Ok(())
    }

    /// Sum of bins whose centers lie in `[lo, hi]`.
    pub fn mass_between(&self, lo_ps: f64, hi_ps: f64) -> u64 {
        (0..self.counts.len())
            .filter(|&k| {
                let c = self.bin_center_ps(k);
                c >= lo_ps && c <= hi_ps
            })
            .map(|k| self.counts[k])
            .sum()
    }
}

/// Bins every record that carries an arrival-time difference.
pub fn build_histogram<'a, I>(records: I, bin_width_ps: u64, range_ps: (i64, i64), total_gates: u64) -> Result<CoincidenceHistogram>
where
    I: IntoIterator<Item = &'a GateRecord>,
{
    let mut h = CoincidenceHistogram::new(bin_width_ps, range_ps, total_gates)?;
    for dt in records.into_iter().filter_map(|r| r.dt_ps) {
        h.record(dt);
    }
    Ok(h)
}

/// Time-window discriminator setting.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowSelection {
    pub center_ps: f64,
    pub half_width_ps: f64,
}

impl Default for WindowSelection {
    fn default() -> Self {
        Self {
            center_ps: 0.0,
            half_width_ps: 1000.0,
        }
    }
}

impl WindowSelection {
    pub fn bounds_ps(&self) -> (f64, f64) {
        (self.center_ps - self.half_width_ps, self.center_ps + self.half_width_ps)
    }

    /// True when the window reaches halfway to a side peak.
    pub fn overlaps_side_peaks(&self, imbalance_ps: f64) -> bool {
        self.half_width_ps >= imbalance_ps / 2.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowCounts {
    pub in_window: u64,
    pub out_window: u64,
    pub dropped: u64,
    pub warnings: Vec<Warning>,
}

/// Splits a histogram into in-window and out-of-window counts. Bins are
/// assigned by their center.
pub fn window_counts(h: &CoincidenceHistogram, w: &WindowSelection, imbalance_ps: Option<f64>) -> Result<WindowCounts> {
    if !(w.half_width_ps > 0.0) {
        return Err(domain("window half-width must be positive"));
    }
    let (lo, hi) = w.bounds_ps();
    if lo < h.origin_ps as f64 || hi > h.end_ps() as f64 {
        return Err(domain(format!(
            "window [{lo}, {hi}] ps extends beyond the histogram [{}, {}] ps",
            h.origin_ps,
            h.end_ps()
        )));
    }
    let mut warnings = Vec::new();
    if let Some(imbalance) = imbalance_ps {
        if w.overlaps_side_peaks(imbalance) {
            warnings.push(Warning::new(
                "window_overlaps_side_peaks",
                format!(
                    "half-width {} ps is not below half the {imbalance:.1} ps peak spacing",
                    w.half_width_ps
                ),
            ));
        }
    }
    let in_window = h.mass_between(lo, hi);
    Ok(WindowCounts {
        in_window,
        out_window: h.binned() - in_window,
        dropped: h.dropped,
        warnings,
    })
}

pub fn write_histogram_csv<W: Write>(mut out: W, h: &CoincidenceHistogram) -> std::io::Result<()> {
    writeln!(out, "bin_center_ps,count")?;
    for (k, c) in h.counts.iter().enumerate() {
        writeln!(out, "{},{}", h.bin_center_ps(k), c)?;
    }
    Ok(())
}

pub fn write_time_tags_csv<'a, W, I>(mut out: W, records: I) -> std::io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = &'a GateRecord>,
{
    writeln!(out, "gate_index,dt_ps,detectorA,detectorB")?;
    for r in records {
        let dt = r.dt_ps.map(|d| d.to_string()).unwrap_or_default();
        writeln!(out, "{},{},{},{}", r.gate_index, dt, r.signal_fired as u8, r.idler_fired as u8)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    const IMBALANCE_PS: f64 = 3335.64;

    fn pair(phase: f64, v: f64, mu: f64) -> PairEvent {
        PairEvent {
            phase_sum_rad: phase,
            visibility: v,
            emission_probability: mu,
            signal_delay_ps: IMBALANCE_PS,
            idler_delay_ps: IMBALANCE_PS,
        }
    }

    fn ideal(kind: DetectorKind, gate_ns: f64) -> DetectorSpec {
        DetectorSpec {
            kind,
            efficiency: 1.0,
            dark_count_probability_per_gate: 0.0,
            gate_width_ns: gate_ns,
        }
    }

    #[test]
    fn zero_signal_channel_leaves_only_darks() {
        let idler = DetectorSpec::ingaas_apd();
        let model = GateModel::new(&pair(0.0, 1.0, 0.5), (&DetectorSpec::silicon_apd(), &idler), (0.0, 1.0), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for g in 0..200_000 {
            let r = model.sample_gate(g, &mut rng);
            assert!(!matches!(r.provenance, Provenance::TruePair(_)));
            if r.dt_ps.is_some() {
                assert_eq!(r.provenance, Provenance::IdlerDark);
            }
        }
    }

    #[test]
    fn ideal_gate_statistics_match_franson_probabilities() {
        let det = ideal(DetectorKind::FreeRunning, 10.0);
        let model = GateModel::new(&pair(0.0, 1.0, 0.5), (&det, &det), (1.0, 1.0), 0.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000u64;
        let mut counts = [0u64; 3];
        for g in 0..n {
            if let Provenance::TruePair(peak) = model.sample_gate(g, &mut rng).provenance {
                counts[Peak::ALL.iter().position(|p| *p == peak).unwrap()] += 1;
            }
        }
        for (k, p) in [1.0 / 16.0, 0.25, 1.0 / 16.0].into_iter().enumerate() {
            let expected = n as f64 * 0.5 * p;
            let sigma = (expected * (1.0 - p)).sqrt();
            assert!((counts[k] as f64 - expected).abs() < 5.0 * sigma, "peak {k}: {} vs {expected}", counts[k]);
        }
    }

    #[test]
    fn dark_only_accidental_rate() {
        let idler = DetectorSpec::ingaas_apd();
        let model = GateModel::new(&pair(0.0, 1.0, 0.0), (&DetectorSpec::silicon_apd(), &idler), (1.0, 1.0), 0.0).unwrap();
        assert_eq!(model.coincidence_probability(), 3.5e-5);
        // full gate is the window: every dark lands in it
        let full = WindowSelection {
            center_ps: 0.0,
            half_width_ps: 1250.0,
        };
        assert!((model.accidental_in_window(&full) - 3.5e-5).abs() < 1e-18);
        let default = WindowSelection::default();
        assert!((model.accidental_in_window(&default) - 2.8e-5).abs() < 1e-18);
    }

    #[test]
    fn gated_idler_never_fires_without_signal() {
        let sig = DetectorSpec {
            efficiency: 0.3,
            ..DetectorSpec::silicon_apd()
        };
        let idl = DetectorSpec {
            dark_count_probability_per_gate: 0.01,
            efficiency: 0.8,
            ..DetectorSpec::ingaas_apd()
        };
        let model = GateModel::new(&pair(0.4, 0.9, 0.5), (&sig, &idl), (0.7, 0.9), 80.0).unwrap();
        let (lo, hi) = model.acceptance_ps();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut fired = 0;
        for g in 0..300_000 {
            let r = model.sample_gate(g, &mut rng);
            if r.idler_fired {
                fired += 1;
                assert!(r.signal_fired);
                let dt = r.dt_ps.unwrap();
                assert!(dt >= lo && dt < hi);
            }
        }
        assert!(fired > 1000);
    }

    #[test]
    fn conditional_sampler_matches_full_gate() {
        // same model, two routes: full per-gate sampling vs coincidence-conditioned draws
        let sig = DetectorSpec::silicon_apd();
        let idl = DetectorSpec {
            dark_count_probability_per_gate: 0.02,
            gate_width_ns: 10.0,
            ..DetectorSpec::ingaas_apd()
        };
        let model = GateModel::new(&pair(1.0, 0.9, 0.6), (&sig, &idl), (1.0, 1.0), 40.0).unwrap();
        let n = 2_000_000u64;
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut full = CoincidenceHistogram::new(1000, (-5000, 5000), n).unwrap();
        for g in 0..n {
            if let Some(dt) = model.sample_gate(g, &mut rng).dt_ps {
                full.record(dt);
            }
        }
        let m = full.recorded();
        let expected_m = n as f64 * model.coincidence_probability();
        assert!((m as f64 - expected_m).abs() < 5.0 * expected_m.sqrt());
        let mut cond = CoincidenceHistogram::new(1000, (-5000, 5000), n).unwrap();
        for _ in 0..m {
            cond.record(model.sample_coincidence(&mut rng).0);
        }
        for k in 0..full.counts.len() {
            let (a, b) = (full.counts[k] as f64, cond.counts[k] as f64);
            assert!((a - b).abs() < 5.0 * (a + b).sqrt().max(1.0), "bin {k}: {a} vs {b}");
        }
    }

    #[test]
    fn three_peak_histogram_clusters() {
        let records: Vec<GateRecord> = [-IMBALANCE_PS, 0.0, IMBALANCE_PS, 0.0, 10.0]
            .iter()
            .enumerate()
            .map(|(k, &dt)| GateRecord {
                gate_index: k as u64,
                signal_fired: true,
                idler_fired: true,
                dt_ps: Some(dt),
                provenance: Provenance::Nothing,
            })
            .collect();
        let h = build_histogram(&records, 100, (-5000, 5000), 5).unwrap();
        let occupied: Vec<f64> = (0..h.counts.len()).filter(|&k| h.counts[k] > 0).map(|k| h.bin_center_ps(k)).collect();
        assert_eq!(occupied, vec![-3350.0, 50.0, 3350.0]);
        assert_eq!(h.counts[50], 3);

        let narrow = window_counts(&h, &WindowSelection::default(), Some(IMBALANCE_PS)).unwrap();
        assert_eq!((narrow.in_window, narrow.out_window), (3, 2));
        assert!(narrow.warnings.is_empty());
        let wide = WindowSelection {
            center_ps: 0.0,
            half_width_ps: 5000.0,
        };
        let all = window_counts(&h, &wide, Some(IMBALANCE_PS)).unwrap();
        assert_eq!(all.in_window, 5);
        assert_eq!(all.in_window + all.out_window + all.dropped, 5);
        assert_eq!(all.warnings.len(), 1);
    }

    #[test]
    fn empty_records_give_zero_histogram() {
        let h = build_histogram(&[], 100, (-1300, 1300), 0).unwrap();
        assert_eq!(h.counts.len(), 26);
        assert!(h.counts.iter().all(|&c| c == 0));
    }

    #[test]
    fn histogram_binning_errors() {
        assert!(CoincidenceHistogram::new(0, (-100, 100), 0).is_err());
        assert!(CoincidenceHistogram::new(30, (-100, 100), 0).is_err());
        let h = CoincidenceHistogram::new(100, (-1000, 1000), 0).unwrap();
        let w = WindowSelection {
            center_ps: 0.0,
            half_width_ps: 2000.0,
        };
        assert!(window_counts(&h, &w, None).is_err());
    }

    #[test]
    fn out_of_range_records_are_tallied() {
        let mut h = CoincidenceHistogram::new(100, (-1000, 1000), 10).unwrap();
        for dt in [-1000.0, 999.9, 1000.0, -1000.1, 5.0] {
            h.record(dt);
        }
        assert_eq!(h.binned(), 3);
        assert_eq!(h.dropped, 2);
    }

    #[test]
    fn merge_is_order_independent() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let parts: Vec<CoincidenceHistogram> = (0..4)
            .map(|_| {
                let mut h = CoincidenceHistogram::new(100, (-500, 500), 100).unwrap();
                for _ in 0..100 {
                    h.record(rng.random_range(-600.0..600.0));
                }
                h
            })
            .collect();
        let mut forward = CoincidenceHistogram::new(100, (-500, 500), 0).unwrap();
        for p in &parts {
            forward.merge(p).unwrap();
        }
        let mut backward = CoincidenceHistogram::new(100, (-500, 500), 0).unwrap();
        for p in parts.iter().rev() {
            backward.merge(p).unwrap();
        }
        assert_eq!(forward, backward);
        assert_eq!(forward.recorded(), 400);
    }

    #[test]
    fn time_tag_csv_format() {
        let records = [
            GateRecord {
                gate_index: 3,
                signal_fired: true,
                idler_fired: true,
                dt_ps: Some(-12.5),
                provenance: Provenance::IdlerDark,
            },
            GateRecord {
                gate_index: 4,
                signal_fired: true,
                idler_fired: false,
                dt_ps: None,
                provenance: Provenance::UnmatchedPair,
            },
        ];
        let mut buf = Vec::new();
        write_time_tags_csv(&mut buf, &records).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "gate_index,dt_ps,detectorA,detectorB\n3,-12.5,1,1\n4,,1,0\n");
    }
}
