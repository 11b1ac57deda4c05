//! CSV and JSON writers for scan results.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::montecarlo::{FringeScan, ScenarioSpec};
use crate::SCHEMA_VERSION;

pub fn write_fringe_csv<W: Write>(mut out: W, scan: &FringeScan) -> std::io::Result<()> {
    writeln!(out, "phase_rad,coincidences,gates")?;
    for p in &scan.points {
        writeln!(out, "{},{},{}", p.phase_rad, p.coincidences, p.gates)?;
    }
    Ok(())
}

/// Scan together with the scenario that produced it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FringeDocument {
    pub schema_version: u32,
    pub scan: FringeScan,
    pub scenario: ScenarioSpec,
}

impl FringeDocument {
    pub fn new(scan: FringeScan, scenario: ScenarioSpec) -> Self {
        Self {
            schema_version: SCHEMA_VERSION,
            scan,
            scenario,
        }
    }
}

/// Pretty JSON with a trailing newline.
pub fn to_json_pretty<T: Serialize>(value: &T) -> serde_json::Result<String> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::montecarlo::{run_analytic, tests::lrspp_scenario};

    #[test]
    fn csv_has_one_header_and_one_row_per_point() {
        let scan = run_analytic(&lrspp_scenario(1000)).unwrap();
        let mut buf = Vec::new();
        write_fringe_csv(&mut buf, &scan).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "phase_rad,coincidences,gates");
        assert_eq!(lines.len(), 17);
        let fields: Vec<f64> = lines[1].split(',').map(|f| f.parse().unwrap()).collect();
        assert_eq!(fields[0], 0.0);
        assert_eq!(fields[1], scan.points[0].coincidences);
    }

    #[test]
    fn json_round_trip_preserves_hash() {
        let s = lrspp_scenario(1000);
        let doc = FringeDocument::new(run_analytic(&s).unwrap(), s.clone());
        let text = to_json_pretty(&doc).unwrap();
        let back: FringeDocument = serde_json::from_str(&text).unwrap();
        assert_eq!(back, doc);
        assert_eq!(back.scenario.run_hash(), doc.scan.scenario_hash);
        assert!(text.contains("\"schema_version\": 1"));
    }
}
