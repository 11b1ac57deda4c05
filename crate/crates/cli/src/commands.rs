use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use franson_core::analysis::{noise_floor, analyse_scan, transmittance_check, SummaryRow};
use franson_core::detection::{write_histogram_csv, CoincidenceHistogram};
use franson_core::export::{to_json_pretty, write_fringe_csv, FringeDocument};
use franson_core::montecarlo::{run_analytic, run_scan_with_histogram, Engine, FringeScan, ScenarioSpec};
use franson_core::plasmonic::{transmittance_spectrum, write_spectrum_csv, ChannelElement, HoleArrayElement, Permittivity};
use franson_core::SCHEMA_VERSION;
use serde::Serialize;

use crate::config::{load_array, load_scenario, Overrides};
use crate::error::{CliError, EXIT_CONFIG, EXIT_OK, EXIT_REGIME};

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum EngineChoice {
    Analytic,
    Montecarlo,
    Both,
}

impl EngineChoice {
    fn engines(self) -> Vec<Engine> {
        match self {
            EngineChoice::Analytic => vec![Engine::Analytic],
            EngineChoice::Montecarlo => vec![Engine::MonteCarlo],
            EngineChoice::Both => vec![Engine::Analytic, Engine::MonteCarlo],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExportFlags {
    pub fringes: bool,
    pub histogram: bool,
    pub spectrum: bool,
    pub summary: bool,
}

impl Default for ExportFlags {
    fn default() -> Self {
        Self {
            fringes: true,
            histogram: true,
            spectrum: true,
            summary: true,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    /// Bundled scenario name or file path.
    pub scenario: String,
    pub engine: EngineChoice,
    pub out: PathBuf,
    pub exports: ExportFlags,
    pub overrides: Overrides,
    pub threads: Option<usize>,
}

/// Analysis of one engine's reference and sample scans.
#[derive(Debug, Clone)]
pub struct EngineResult {
    pub engine: Engine,
    pub reference: FringeScan,
    pub sample: FringeScan,
    pub row: SummaryRow,
}

#[derive(Debug, Clone, Serialize)]
pub struct PointAgreement {
    pub phase_rad: f64,
    pub analytic: f64,
    pub montecarlo: f64,
    pub z: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct AgreementReport {
    pub schema_version: u32,
    pub reference: Vec<PointAgreement>,
    pub sample: Vec<PointAgreement>,
    pub max_abs_z: f64,
    /// All points within 5 standard deviations.
    pub consistent: bool,
}

fn agreement(analytic: &FringeScan, mc: &FringeScan) -> Vec<PointAgreement> {
    analytic
        .points
        .iter()
        .zip(&mc.points)
        .map(|(a, m)| PointAgreement {
            phase_rad: a.phase_rad,
            analytic: a.coincidences,
            montecarlo: m.coincidences,
            z: (m.coincidences - a.coincidences) / a.coincidences.max(1.0).sqrt(),
        })
        .collect()
}

#[derive(Debug)]
pub struct RunOutcome {
    pub scenario: ScenarioSpec,
    pub results: Vec<EngineResult>,
    pub agreement: Option<AgreementReport>,
    pub artifacts: Vec<PathBuf>,
    pub summary: String,
}

/// Scans and analyses one scenario with one engine.
pub fn run_engine(s: &ScenarioSpec, engine: Engine) -> Result<(EngineResult, Option<[CoincidenceHistogram; 2]>), CliError> {
    let r = s.reference();
    let (reference, sample, histograms) = match engine {
        Engine::Analytic => (run_analytic(&r)?, run_analytic(s)?, None),
        Engine::MonteCarlo => {
            let (ref_scan, ref_hist) = run_scan_with_histogram(&r)?;
            let (sample_scan, sample_hist) = run_scan_with_histogram(s)?;
            (ref_scan, sample_scan, Some([ref_hist, sample_hist]))
        }
    };
    let floor_ref = noise_floor(&r)?;
    let floor_sample = noise_floor(s)?;
    let v_ref = analyse_scan(&reference, &floor_ref)?;
    let v_sample = analyse_scan(&sample, &floor_sample)?;
    let check = transmittance_check(&reference, &floor_ref, &sample, &floor_sample, s.expected_transmittance_ratio()?)?;
    let experiment = if s.experiment.is_empty() { &s.label } else { &s.experiment };
    let row = SummaryRow::new(experiment, v_ref, v_sample, &check);
    Ok((
        EngineResult {
            engine,
            reference,
            sample,
            row,
        },
        histograms,
    ))
}

struct Artifacts {
    dir: PathBuf,
    written: Vec<PathBuf>,
}

impl Artifacts {
    fn create(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Config(format!("output directory {}: {e}", dir.display())))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, f: impl FnOnce(&mut BufWriter<File>) -> std::io::Result<()>) -> Result<(), CliError> {
        let path = self.dir.join(name);
        let mut w = BufWriter::new(File::create(&path)?);
        f(&mut w)?;
        w.flush()?;
        self.written.push(path);
        Ok(())
    }

    fn json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = to_json_pretty(value).map_err(|e| CliError::Runtime(e.to_string()))?;
        self.write(name, |w| w.write_all(text.as_bytes()))
    }
}

/// Resolves, validates and overrides the scenario of a run.
pub fn prepare_scenario(name_or_path: &str, overrides: &Overrides) -> Result<(ScenarioSpec, Vec<String>), CliError> {
    let mut s = load_scenario(name_or_path)?;
    overrides.apply(&mut s);
    let warnings = s.validate().map_err(CliError::from_config)?;
    let report = s.regime_report().map_err(CliError::from_config)?;
    if !report.all_passed() {
        return Err(CliError::Regime(Box::new(report)));
    }
    Ok((s, warnings.iter().map(|w| w.to_string()).collect()))
}

pub fn cmd_run(config: &RunConfig) -> Result<RunOutcome, CliError> {
    let (s, warnings) = prepare_scenario(&config.scenario, &config.overrides)?;
    let mut artifacts = Artifacts::create(&config.out)?;
    let pool = {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(n) = config.threads {
            b = b.num_threads(n);
        }
        b.build().map_err(|e| CliError::Runtime(e.to_string()))?
    };

    let mut summary = String::new();
    for w in &warnings {
        writeln!(summary, "warning: {w}").unwrap();
    }
    writeln!(summary, "scenario {} (hash {})", s.label, &s.run_hash()[..16]).unwrap();
    writeln!(
        summary,
        "{:<12} {:<40} {:>17}   {:>17}   {}",
        "engine", "experiment", "reference V", "plasmon-assisted V", "transmittance"
    )
    .unwrap();

    artifacts.json("scenario.json", &s)?;
    let mut results = Vec::new();
    for engine in config.engine.engines() {
        let (result, histograms) = pool.install(|| run_engine(&s, engine))?;
        let tag = engine.to_string();
        let roles = [("reference", &result.reference, s.reference()), ("sample", &result.sample, s.clone())];
        if config.exports.fringes {
            for (role, scan, spec) in &roles {
                artifacts.write(&format!("fringes_{tag}_{role}.csv"), |w| write_fringe_csv(w, scan))?;
                artifacts.json(
                    &format!("fringes_{tag}_{role}.json"),
                    &FringeDocument::new((*scan).clone(), spec.clone()),
                )?;
            }
        }
        if let (true, Some(hists)) = (config.exports.histogram, &histograms) {
            for ((role, _, _), h) in roles.iter().zip(hists) {
                artifacts.write(&format!("histogram_{role}.csv"), |w| write_histogram_csv(w, h))?;
            }
        }
        if config.exports.summary {
            artifacts.json(&format!("summary_{tag}.json"), &result.row)?;
        }
        writeln!(summary, "{:<12} {}", tag, result.row.summary_line()).unwrap();
        results.push(result);
    }

    let agreement = if let [a, m] = &results[..] {
        let reference = agreement(&a.reference, &m.reference);
        let sample = agreement(&a.sample, &m.sample);
        let max_abs_z = reference.iter().chain(&sample).map(|p| p.z.abs()).fold(0.0, f64::max);
        let report = AgreementReport {
            schema_version: SCHEMA_VERSION,
            reference,
            sample,
            max_abs_z,
            consistent: max_abs_z < 5.0,
        };
        writeln!(
            summary,
            "agreement: max |MC - analytic| = {:.2} sigma over {} points ({})",
            report.max_abs_z,
            report.reference.len() + report.sample.len(),
            if report.consistent { "consistent" } else { "INCONSISTENT" }
        )
        .unwrap();
        artifacts.json("agreement.json", &report)?;
        Some(report)
    } else {
        None
    };

    if config.exports.spectrum {
        for (channel, wavelength) in [
            (&s.channel_signal, s.source.signal_center_nm),
            (&s.channel_idler, s.source.idler_center_nm),
        ] {
            if let ChannelElement::HoleArray(el) = &channel.element {
                let (lo, hi) = spectrum_range(el, wavelength)?;
                let spectrum = transmittance_spectrum(el, &grid(lo, hi, 0.05))?;
                artifacts.write(&format!("spectrum_{}nm.csv", wavelength), |w| write_spectrum_csv(w, &spectrum))?;
            }
        }
    }

    Ok(RunOutcome {
        scenario: s,
        results,
        agreement,
        artifacts: artifacts.written,
        summary,
    })
}

/// ±150 nm around the operating wavelength, kept inside any permittivity table.
fn spectrum_range(el: &HoleArrayElement, wavelength: f64) -> Result<(f64, f64), CliError> {
    let (mut lo, mut hi) = (wavelength - 150.0, wavelength + 150.0);
    if let Permittivity::Table(t) = el.array.permittivity.resolve()? {
        let (min, max) = t.range_nm();
        lo = lo.max(min);
        hi = hi.min(max);
    }
    Ok((lo, hi))
}

/// Inclusive grid from `lo` to `hi`.
pub fn grid(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    let n = ((hi - lo) / step + 1e-9).floor() as usize;
    (0..=n).map(|k| lo + k as f64 * step).collect()
}

#[derive(Debug, Clone)]
pub struct SpectrumConfig {
    /// Bundled array name or file path.
    pub array: String,
    pub from_nm: f64,
    pub to_nm: f64,
    pub step_nm: f64,
    pub out: PathBuf,
}

pub fn cmd_spectrum(config: &SpectrumConfig) -> Result<(PathBuf, Vec<String>), CliError> {
    let el = load_array(&config.array)?;
    el.validate().map_err(CliError::from_config)?;
    if !(config.step_nm > 0.0 && config.to_nm > config.from_nm) {
        return Err(CliError::Config("spectrum range must be increasing with a positive step".into()));
    }
    let spectrum =
        transmittance_spectrum(&el, &grid(config.from_nm, config.to_nm, config.step_nm)).map_err(CliError::from_config)?;
    if let Some(dir) = config.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let mut w = BufWriter::new(File::create(&config.out)?);
    write_spectrum_csv(&mut w, &spectrum)?;
    w.flush()?;
    Ok((config.out.clone(), spectrum.warnings.iter().map(|w| w.to_string()).collect()))
}

/// Human-readable validation report and the exit code it implies.
pub fn cmd_validate(name_or_path: &str) -> Result<(String, u8), CliError> {
    let s = load_scenario(name_or_path)?;
    let mut out = String::new();
    writeln!(out, "scenario {} (hash {})", s.label, s.run_hash()).unwrap();
    let warnings = match s.validate() {
        Ok(w) => w,
        Err(e) => {
            writeln!(out, "  invariants                          FAIL  {e}").unwrap();
            return Ok((out, EXIT_CONFIG));
        }
    };
    writeln!(out, "  invariants                          PASS").unwrap();
    for w in &warnings {
        writeln!(out, "  warning: {w}").unwrap();
    }
    let report = s.regime_report().map_err(CliError::from_config)?;
    writeln!(out, "{report}").unwrap();
    let t = s.transmittances()?;
    writeln!(
        out,
        "  channel transmittance  signal {:.4}  idler {:.4}  sample/reference {:.4}",
        t.signal,
        t.idler,
        s.expected_transmittance_ratio()?
    )
    .unwrap();
    Ok((out, if report.all_passed() { EXIT_OK } else { EXIT_REGIME }))
}
