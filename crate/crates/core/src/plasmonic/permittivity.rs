use std::path::PathBuf;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tabulated complex permittivity, linearly interpolated in wavelength.
#[derive(Debug, Clone, PartialEq)]
pub struct PermittivityTable {
    points: Vec<(f64, Complex64)>,
}

impl PermittivityTable {
    pub fn new(mut points: Vec<(f64, Complex64)>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::Domain("permittivity table is empty".into()));
        }
        points.sort_by(|a, b| a.0.total_cmp(&b.0));
        if points.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::Domain("permittivity table has duplicate wavelengths".into()));
        }
        Ok(Self { points })
    }

    /// Gold values typical of the literature around the two operating bands.
    /// These are configuration defaults, not measured data.
    pub fn gold_default() -> Self {
        let raw = [
            (700.0, -16.8, 1.06),
            (800.0, -24.0, 1.57),
            (900.0, -32.0, 1.92),
            (1400.0, -93.8, 8.55),
            (1550.0, -115.0, 11.6),
            (1700.0, -138.3, 15.3),
        ];
        Self {
            points: raw.iter().map(|&(l, re, im)| (l, Complex64::new(re, im))).collect(),
        }
    }

    pub fn range_nm(&self) -> (f64, f64) {
        (self.points[0].0, self.points[self.points.len() - 1].0)
    }

    pub fn points(&self) -> &[(f64, Complex64)] {
        &self.points
    }

    pub fn at(&self, wavelength_nm: f64) -> Result<Complex64> {
        let (min_nm, max_nm) = self.range_nm();
        if !(wavelength_nm >= min_nm && wavelength_nm <= max_nm) {
            return Err(Error::WavelengthOutOfRange {
                wavelength_nm,
                min_nm,
                max_nm,
            });
        }
        let idx = self.points.partition_point(|p| p.0 < wavelength_nm);
        if idx == 0 {
            return Ok(self.points[0].1);
        }
        let (l0, e0) = self.points[idx - 1];
        let (l1, e1) = self.points[idx];
        let t = (wavelength_nm - l0) / (l1 - l0);
        Ok(e0 + (e1 - e0) * t)
    }

    /// Serialises in the same two-column text format that [`FromStr`] reads.
    pub fn to_text(&self) -> String {
        let mut out = String::from("# wavelength_nm re,im\n");
        for (l, e) in &self.points {
            out.push_str(&format!("{l} {},{}\n", e.re, e.im));
        }
        out
    }
}

/// Two whitespace-separated columns, `wavelength_nm re,im`; `#` starts a comment.
impl FromStr for PermittivityTable {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut points = Vec::new();
        for (n, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: &str| Error::TableParse {
                line: n + 1,
                message: message.to_string(),
            };
            let mut cols = line.split_whitespace();
            let wavelength: f64 = cols
                .next()
                .and_then(|c| c.parse().ok())
                .ok_or_else(|| err("expected a wavelength in nm"))?;
            let eps = cols.next().ok_or_else(|| err("missing permittivity column"))?;
            if cols.next().is_some() {
                return Err(err("expected exactly two columns"));
            }
            let (re, im) = eps.split_once(',').ok_or_else(|| err("permittivity must be written as re,im"))?;
            let re: f64 = re.trim().parse().map_err(|_| err("bad real part"))?;
            let im: f64 = im.trim().parse().map_err(|_| err("bad imaginary part"))?;
            if !(wavelength > 0.0) {
                return Err(err("wavelength must be positive"));
            }
            points.push((wavelength, Complex64::new(re, im)));
        }
        Self::new(points)
    }
}

/// Metal permittivity model used by the resonance solver.
#[derive(Debug, Clone, PartialEq)]
pub enum Permittivity {
    /// Dispersionless; valid at every wavelength.
    Constant(Complex64),
    Table(PermittivityTable),
}

impl Permittivity {
    pub fn at(&self, wavelength_nm: f64) -> Result<Complex64> {
        match self {
            Permittivity::Constant(eps) => Ok(*eps),
            Permittivity::Table(table) => table.at(wavelength_nm),
        }
    }
}

/// How a configuration file names the metal permittivity.
///
/// `File` entries are resolved into `Inline` when a scenario is loaded so that
/// the echoed configuration is self-contained.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum PermittivitySource {
    /// Only `"gold_default"` is recognised.
    Named(String),
    Constant { re: f64, im: f64 },
    File { file: PathBuf },
    /// Rows of `[wavelength_nm, re, im]`.
    Inline { table: Vec<[f64; 3]> },
}

impl Default for PermittivitySource {
    fn default() -> Self {
        PermittivitySource::Named("gold_default".into())
    }
}

impl PermittivitySource {
    pub fn resolve(&self) -> Result<Permittivity> {
        match self {
            PermittivitySource::Named(name) if name == "gold_default" => {
                Ok(Permittivity::Table(PermittivityTable::gold_default()))
            }
            PermittivitySource::Named(name) => Err(Error::Domain(format!("unknown permittivity table {name:?}"))),
            PermittivitySource::Constant { re, im } => Ok(Permittivity::Constant(Complex64::new(*re, *im))),
            PermittivitySource::File { file } => {
                let text = std::fs::read_to_string(file)?;
                Ok(Permittivity::Table(text.parse()?))
            }
            PermittivitySource::Inline { table } => Ok(Permittivity::Table(PermittivityTable::new(
                table.iter().map(|r| (r[0], Complex64::new(r[1], r[2]))).collect(),
            )?)),
        }
    }

    /// Replaces a file reference by its contents.
    pub fn inlined(&self) -> Result<PermittivitySource> {
        match self {
            PermittivitySource::File { .. } => match self.resolve()? {
                Permittivity::Table(t) => Ok(PermittivitySource::Inline {
                    table: t.points().iter().map(|(l, e)| [*l, e.re, e.im]).collect(),
                }),
                Permittivity::Constant(_) => unreachable!(),
            },
            other => Ok(other.clone()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_two_column_text() {
        let text = "# gold\n 800  -24.0,1.57 \n\n1550 -115,11.6 # telecom\n";
        let table: PermittivityTable = text.parse().unwrap();
        assert_eq!(table.range_nm(), (800.0, 1550.0));
        let mid = table.at(1175.0).unwrap();
        assert!((mid.re - (-69.5)).abs() < 1e-12);
        assert!((mid.im - 6.585).abs() < 1e-12);
    }

    #[test]
    fn reports_line_numbers() {
        let err = "800 -24,1\n900 -32\n".parse::<PermittivityTable>().unwrap_err();
        match err {
            Error::TableParse { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn out_of_range_lookup() {
        let table = PermittivityTable::gold_default();
        assert!(matches!(table.at(600.0), Err(Error::WavelengthOutOfRange { .. })));
        assert!(table.at(700.0).is_ok());
        assert!(table.at(1700.0).is_ok());
    }

    #[test]
    fn text_round_trip() {
        let table = PermittivityTable::gold_default();
        let back: PermittivityTable = table.to_text().parse().unwrap();
        assert_eq!(back, table);
    }
}
