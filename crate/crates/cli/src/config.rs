//! Scenario and array files, plus the copies bundled into the binary.

use std::path::{Path, PathBuf};

use franson_core::montecarlo::{PhasePoints, ScenarioSpec};
use franson_core::plasmonic::{ChannelElement, ChannelSpec, HoleArrayElement, PermittivitySource};
use serde::de::DeserializeOwned;

use crate::error::CliError;

pub const BUNDLED_SCENARIOS: [(&str, &str); 3] = [
    ("eot_810", include_str!("../scenarios/eot_810.toml")),
    ("eot_1550", include_str!("../scenarios/eot_1550.toml")),
    ("lrspp_1550", include_str!("../scenarios/lrspp_1550.toml")),
];

pub const BUNDLED_ARRAYS: [(&str, &str); 2] = [
    ("a700_d300", include_str!("../arrays/a700_d300.toml")),
    ("a1400_d600", include_str!("../arrays/a1400_d600.toml")),
];

enum Format {
    Toml,
    Json,
}

fn parse<T: DeserializeOwned>(text: &str, format: Format, origin: &str) -> Result<T, CliError> {
    match format {
        Format::Toml => toml::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}"))),
        Format::Json => serde_json::from_str(text).map_err(|e| CliError::Config(format!("{origin}: {e}"))),
    }
}

/// Reads `name_or_path`: a bundled name, or a `.toml` / `.json` file.
/// Returns the parsed value and the directory relative paths resolve against.
fn load<T: DeserializeOwned>(name_or_path: &str, bundled: &[(&str, &str)]) -> Result<(T, Option<PathBuf>), CliError> {
    if let Some((name, text)) = bundled.iter().find(|(n, _)| *n == name_or_path) {
        return Ok((parse(text, Format::Toml, &format!("bundled {name}"))?, None));
    }
    let path = Path::new(name_or_path);
    let text = std::fs::read_to_string(path).map_err(|e| {
        let names: Vec<&str> = bundled.iter().map(|(n, _)| *n).collect();
        CliError::Config(format!(
            "cannot read {}: {e} (bundled names: {})",
            path.display(),
            names.join(", ")
        ))
    })?;
    let format = match path.extension().and_then(|e| e.to_str()) {
        Some("json") => Format::Json,
        _ => Format::Toml,
    };
    let value = parse(&text, format, &path.display().to_string())?;
    Ok((value, path.parent().map(Path::to_path_buf)))
}

fn inline_permittivity(element: &mut HoleArrayElement, base: Option<&Path>) -> Result<(), CliError> {
    let source = &mut element.array.permittivity;
    if let (PermittivitySource::File { file }, Some(dir)) = (&*source, base) {
        if file.is_relative() {
            *source = PermittivitySource::File { file: dir.join(file) };
        }
    }
    *source = source.inlined().map_err(|e| CliError::Config(format!("permittivity table: {e}")))?;
    Ok(())
}

fn inline_channel(channel: &mut ChannelSpec, base: Option<&Path>) -> Result<(), CliError> {
    if let ChannelElement::HoleArray(el) = &mut channel.element {
        inline_permittivity(el, base)?;
    }
    Ok(())
}

/// Loads a scenario and inlines any permittivity file it references, so the
/// result is self-contained and its run hash does not depend on file paths.
pub fn load_scenario(name_or_path: &str) -> Result<ScenarioSpec, CliError> {
    let (mut s, base): (ScenarioSpec, _) = load(name_or_path, &BUNDLED_SCENARIOS)?;
    inline_channel(&mut s.channel_signal, base.as_deref())?;
    inline_channel(&mut s.channel_idler, base.as_deref())?;
    Ok(s)
}

pub fn load_array(name_or_path: &str) -> Result<HoleArrayElement, CliError> {
    let (mut el, base): (HoleArrayElement, _) = load(name_or_path, &BUNDLED_ARRAYS)?;
    inline_permittivity(&mut el, base.as_deref())?;
    Ok(el)
}

/// Command-line overrides applied on top of a scenario file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub gates: Option<u64>,
    pub phases: Option<usize>,
}

impl Overrides {
    pub fn apply(&self, s: &mut ScenarioSpec) {
        if let Some(seed) = self.seed {
            s.seed = seed;
        }
        if let Some(g) = self.gates {
            s.gates_per_point = g;
        }
        if let Some(n) = self.phases {
            s.phase_points = PhasePoints::Count(n);
        }
    }
}
