//! Scenario files: flat sectioned key-value text tying the whole pipeline
//! together.
//!
//! An empty file is a valid scenario: every key falls back to the
//! reference system defaults (500 km orbit, 500 km station separation,
//! 10 cm / 70 cm apertures, 785 nm, 2e8 pairs/s, security exponent 6).
//! Unknown sections or keys are errors; data tables referenced by path
//! must exist and parse. All quantities are SI unless the key name says
//! otherwise (`_nm`, `_deg`, `_db`).
//!
//! ```text
//! [geometry]
//! altitude_m = 500000
//! ogs_separation_m = 1000000
//!
//! [counts]
//! background_scale = 10
//! ```

use std::path::{Path, PathBuf};

use crate::channel::{AtmosphereTable, OpticalSystem};
use crate::counts::{DetectorModel, RadianceModel, SourceModel};
use crate::error::{Error, Result};
use crate::finitekey::{SecurityConfig, ThresholdModel};
use crate::geometry::OverpassGeometry;

/// Environment variable naming the default directory for data tables.
pub const DATA_DIR_ENV: &str = "TWINLINK_DATA_DIR";

/// Fully resolved simulation scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub geometry: OverpassGeometry<f64>,
    pub optics_a: OpticalSystem<f64>,
    pub optics_b: OpticalSystem<f64>,
    pub detector: DetectorModel<f64>,
    pub source: SourceModel<f64>,
    pub security: SecurityConfig<f64>,
    /// Shared elevation/transmissivity table (bundled airmass default).
    pub atmosphere: AtmosphereTable<f64>,
    pub radiance_a: RadianceModel<f64>,
    pub radiance_b: RadianceModel<f64>,
    /// Paths as written in the config (None = bundled defaults).
    pub atmosphere_table_path: Option<PathBuf>,
    pub radiance_table_path_a: Option<PathBuf>,
    pub radiance_table_path_b: Option<PathBuf>,
}

impl Default for Scenario {
    fn default() -> Self {
        Self {
            geometry: OverpassGeometry::default(),
            optics_a: OpticalSystem::default(),
            optics_b: OpticalSystem::default(),
            detector: DetectorModel::default(),
            source: SourceModel::default(),
            security: SecurityConfig::default(),
            atmosphere: AtmosphereTable::bundled_default(),
            radiance_a: RadianceModel::bundled_default(),
            radiance_b: RadianceModel::bundled_default(),
            atmosphere_table_path: None,
            radiance_table_path_a: None,
            radiance_table_path_b: None,
        }
    }
}

/// Parse outcome: the scenario plus the keys that fell back to defaults.
#[derive(Debug)]
pub struct ParseOutcome {
    pub scenario: Scenario,
    /// `section.key` names that were not present in the file.
    pub defaulted: Vec<String>,
}

/// Every `(section, key)` pair the format accepts, in canonical order.
const KNOWN_KEYS: &[(&str, &str)] = &[
    ("geometry", "altitude_m"),
    ("geometry", "ogs_separation_m"),
    ("geometry", "phi_deg"),
    ("geometry", "xi_deg"),
    ("geometry", "theta_min_deg"),
    ("geometry", "bin_width_s"),
    ("channel", "wavelength_a_nm"),
    ("channel", "wavelength_b_nm"),
    ("channel", "tx_diameter_m"),
    ("channel", "rx_diameter_m"),
    ("channel", "beam_waist_m"),
    ("channel", "intrinsic_loss_db"),
    ("channel", "atmosphere_table_path"),
    ("counts", "pair_rate_hz"),
    ("counts", "qber_intrinsic"),
    ("counts", "p_dark"),
    ("counts", "p_afterpulse"),
    ("counts", "coincidence_window_s"),
    ("counts", "fov_sr"),
    ("counts", "filter_bandwidth_nm"),
    ("counts", "background_scale"),
    ("counts", "radiance_table_path_a"),
    ("counts", "radiance_table_path_b"),
    ("finitekey", "security_s"),
    ("finitekey", "grid_n"),
    ("finitekey", "n_thresholds"),
    ("finitekey", "threshold_model"),
];

impl Scenario {
    /// Parse scenario text. Relative table paths resolve against
    /// `base_dir`, then against `$TWINLINK_DATA_DIR`.
    pub fn from_config_str(text: &str, base_dir: Option<&Path>) -> Result<ParseOutcome> {
        let mut scenario = Scenario::default();
        let mut section = String::new();
        let mut seen: Vec<(String, String)> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
                continue;
            }
            if let Some(name) = line.strip_prefix('[') {
                let Some(name) = name.strip_suffix(']') else {
                    return Err(Error::ConfigParse {
                        line: line_no,
                        msg: format!("unterminated section header '{line}'"),
                    });
                };
                let name = name.trim();
                if !KNOWN_KEYS.iter().any(|(s, _)| *s == name) {
                    return Err(Error::ConfigParse {
                        line: line_no,
                        msg: format!("unknown section '[{name}]'"),
                    });
                }
                section = name.to_string();
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::ConfigParse {
                    line: line_no,
                    msg: format!("expected 'key = value', found '{line}'"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if section.is_empty() {
                return Err(Error::ConfigParse {
                    line: line_no,
                    msg: format!("key '{key}' appears before any [section] header"),
                });
            }
            if seen.iter().any(|(s, k)| s == &section && k == key) {
                return Err(Error::ConfigParse {
                    line: line_no,
                    msg: format!("duplicate key '{key}' in section [{section}]"),
                });
            }
            scenario.set(&section, key, value).map_err(|e| match e {
                Error::ConfigParse { msg, .. } => Error::ConfigParse { line: line_no, msg },
                other => other,
            })?;
            seen.push((section.clone(), key.to_string()));
        }

        let defaulted = KNOWN_KEYS
            .iter()
            .filter(|(s, k)| !seen.iter().any(|(ss, kk)| ss == s && kk == k))
            .map(|(s, k)| format!("{s}.{k}"))
            .collect();

        scenario.load_tables(base_dir)?;
        scenario.validate()?;
        Ok(ParseOutcome {
            scenario,
            defaulted,
        })
    }

    /// Load a scenario file; the file's directory anchors relative paths.
    pub fn load(path: &Path) -> Result<ParseOutcome> {
        let text = std::fs::read_to_string(path)?;
        Self::from_config_str(&text, path.parent())
    }

    /// Set one configuration key from its text representation. Shared by
    /// the file parser and command-line overrides.
    pub fn set(&mut self, section: &str, key: &str, value: &str) -> Result<()> {
        if !KNOWN_KEYS.iter().any(|(s, k)| *s == section && *k == key) {
            return Err(Error::ConfigParse {
                line: 0,
                msg: format!("unknown key '{key}' in section [{section}]"),
            });
        }
        let number = || -> Result<f64> {
            value.parse::<f64>().map_err(|e| Error::ConfigParse {
                line: 0,
                msg: format!("bad number '{value}' for {section}.{key}: {e}"),
            })
        };
        let integer = || -> Result<usize> {
            value.parse::<usize>().map_err(|e| Error::ConfigParse {
                line: 0,
                msg: format!("bad integer '{value}' for {section}.{key}: {e}"),
            })
        };
        let path = || -> Option<PathBuf> {
            if value.is_empty() {
                None
            } else {
                Some(PathBuf::from(value))
            }
        };
        match (section, key) {
            ("geometry", "altitude_m") => self.geometry.altitude_m = number()?,
            ("geometry", "ogs_separation_m") => self.geometry.separation_m = number()?,
            ("geometry", "phi_deg") => self.geometry.phi_deg = number()?,
            ("geometry", "xi_deg") => self.geometry.xi_deg = number()?,
            ("geometry", "theta_min_deg") => self.geometry.theta_min_deg = number()?,
            ("geometry", "bin_width_s") => self.geometry.bin_width_s = number()?,
            ("channel", "wavelength_a_nm") => self.optics_a.wavelength_m = number()? * 1e-9,
            ("channel", "wavelength_b_nm") => self.optics_b.wavelength_m = number()? * 1e-9,
            ("channel", "tx_diameter_m") => {
                self.optics_a.tx_diameter_m = number()?;
                self.optics_b.tx_diameter_m = self.optics_a.tx_diameter_m;
            }
            ("channel", "rx_diameter_m") => {
                self.optics_a.rx_diameter_m = number()?;
                self.optics_b.rx_diameter_m = self.optics_a.rx_diameter_m;
            }
            ("channel", "beam_waist_m") => {
                self.optics_a.beam_waist_m = number()?;
                self.optics_b.beam_waist_m = self.optics_a.beam_waist_m;
            }
            ("channel", "intrinsic_loss_db") => {
                self.optics_a.intrinsic_loss_db = number()?;
                self.optics_b.intrinsic_loss_db = self.optics_a.intrinsic_loss_db;
            }
            ("channel", "atmosphere_table_path") => self.atmosphere_table_path = path(),
            ("counts", "pair_rate_hz") => self.source.pair_rate_hz = number()?,
            ("counts", "qber_intrinsic") => self.source.qber_intrinsic = number()?,
            ("counts", "p_dark") => self.detector.p_dark = number()?,
            ("counts", "p_afterpulse") => self.detector.p_afterpulse = number()?,
            ("counts", "coincidence_window_s") => self.detector.coincidence_window_s = number()?,
            ("counts", "fov_sr") => self.detector.fov_sr = number()?,
            ("counts", "filter_bandwidth_nm") => self.detector.filter_bandwidth_nm = number()?,
            ("counts", "background_scale") => self.detector.background_scale = number()?,
            ("counts", "radiance_table_path_a") => self.radiance_table_path_a = path(),
            ("counts", "radiance_table_path_b") => self.radiance_table_path_b = path(),
            ("finitekey", "security_s") => self.security.s = number()?,
            ("finitekey", "grid_n") => self.security.grid_n = integer()?,
            ("finitekey", "n_thresholds") => self.security.n_thresholds = integer()?,
            ("finitekey", "threshold_model") => {
                self.security.threshold_model = match value {
                    "weighted" => ThresholdModel::Weighted,
                    "max" => ThresholdModel::Max,
                    other => {
                        return Err(Error::ConfigParse {
                            line: 0,
                            msg: format!(
                                "threshold_model must be 'weighted' or 'max', got '{other}'"
                            ),
                        })
                    }
                }
            }
            _ => unreachable!("key presence already checked"),
        }
        Ok(())
    }

    /// Resolve a table path: absolute as-is, otherwise relative to the
    /// config directory, then to `$TWINLINK_DATA_DIR`.
    fn resolve_path(raw: &Path, base_dir: Option<&Path>) -> PathBuf {
        if raw.is_absolute() {
            return raw.to_path_buf();
        }
        if let Some(base) = base_dir {
            let joined = base.join(raw);
            if joined.exists() {
                return joined;
            }
        }
        if let Ok(data_dir) = std::env::var(DATA_DIR_ENV) {
            let joined = Path::new(&data_dir).join(raw);
            if joined.exists() {
                return joined;
            }
        }
        raw.to_path_buf()
    }

    /// (Re)load the data tables referenced by the path fields.
    pub fn load_tables(&mut self, base_dir: Option<&Path>) -> Result<()> {
        if let Some(p) = self.atmosphere_table_path.clone() {
            let full = Self::resolve_path(&p, base_dir);
            let text = std::fs::read_to_string(&full).map_err(|e| {
                Error::Table(format!("atmosphere table {}: {e}", full.display()))
            })?;
            self.atmosphere = AtmosphereTable::from_csv_str(&text)?;
        }
        for (path_field, slot) in [
            (self.radiance_table_path_a.clone(), 0usize),
            (self.radiance_table_path_b.clone(), 1),
        ] {
            if let Some(p) = path_field {
                let full = Self::resolve_path(&p, base_dir);
                let text = std::fs::read_to_string(&full).map_err(|e| {
                    Error::Table(format!("radiance table {}: {e}", full.display()))
                })?;
                let model = RadianceModel::from_csv_str(&text)?;
                if slot == 0 {
                    self.radiance_a = model;
                } else {
                    self.radiance_b = model;
                }
            }
        }
        Ok(())
    }

    /// Collect every violated invariant across all components.
    pub fn violations(&self) -> Vec<String> {
        let mut v = self.geometry.violations();
        v.extend(self.optics_a.violations("A"));
        v.extend(self.optics_b.violations("B"));
        v.extend(self.detector.violations());
        v.extend(self.source.violations());
        v.extend(self.security.violations());
        v
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::ConfigValidation(v))
        }
    }

    /// Canonical text form; parsing it back reproduces the scenario.
    pub fn to_config_string(&self) -> String {
        let g = &self.geometry;
        let oa = &self.optics_a;
        let ob = &self.optics_b;
        let d = &self.detector;
        let src = &self.source;
        let s = &self.security;
        let path_str = |p: &Option<PathBuf>| {
            p.as_ref()
                .map(|p| p.display().to_string())
                .unwrap_or_default()
        };
        format!(
            "[geometry]\n\
             altitude_m = {}\n\
             ogs_separation_m = {}\n\
             phi_deg = {}\n\
             xi_deg = {}\n\
             theta_min_deg = {}\n\
             bin_width_s = {}\n\
             \n\
             [channel]\n\
             wavelength_a_nm = {}\n\
             wavelength_b_nm = {}\n\
             tx_diameter_m = {}\n\
             rx_diameter_m = {}\n\
             beam_waist_m = {}\n\
             intrinsic_loss_db = {}\n\
             atmosphere_table_path = {}\n\
             \n\
             [counts]\n\
             pair_rate_hz = {}\n\
             qber_intrinsic = {}\n\
             p_dark = {}\n\
             p_afterpulse = {}\n\
             coincidence_window_s = {}\n\
             fov_sr = {}\n\
             filter_bandwidth_nm = {}\n\
             background_scale = {}\n\
             radiance_table_path_a = {}\n\
             radiance_table_path_b = {}\n\
             \n\
             [finitekey]\n\
             security_s = {}\n\
             grid_n = {}\n\
             n_thresholds = {}\n\
             threshold_model = {}\n",
            g.altitude_m,
            g.separation_m,
            g.phi_deg,
            g.xi_deg,
            g.theta_min_deg,
            g.bin_width_s,
            oa.wavelength_m * 1e9,
            ob.wavelength_m * 1e9,
            oa.tx_diameter_m,
            oa.rx_diameter_m,
            oa.beam_waist_m,
            oa.intrinsic_loss_db,
            path_str(&self.atmosphere_table_path),
            src.pair_rate_hz,
            src.qber_intrinsic,
            d.p_dark,
            d.p_afterpulse,
            d.coincidence_window_s,
            d.fov_sr,
            d.filter_bandwidth_nm,
            d.background_scale,
            path_str(&self.radiance_table_path_a),
            path_str(&self.radiance_table_path_b),
            s.s,
            s.grid_n,
            s.n_thresholds,
            match s.threshold_model {
                ThresholdModel::Weighted => "weighted",
                ThresholdModel::Max => "max",
            },
        )
    }

    /// Stable 64-bit FNV-1a hash of the canonical config text, for run
    /// metadata and reproducibility records.
    pub fn parameter_hash(&self) -> u64 {
        let mut hash = 0xcbf29ce484222325u64;
        for byte in self.to_config_string().bytes() {
            hash ^= u64::from(byte);
            hash = hash.wrapping_mul(0x100000001b3);
        }
        hash
    }
}

/// Scenario equality for round-trip checks (data tables come from the
/// paths, so comparing configuration fields covers them).
impl PartialEq for Scenario {
    fn eq(&self, other: &Self) -> bool {
        self.geometry == other.geometry
            && self.optics_a == other.optics_a
            && self.optics_b == other.optics_b
            && self.detector == other.detector
            && self.source == other.source
            && self.security == other.security
            && self.atmosphere_table_path == other.atmosphere_table_path
            && self.radiance_table_path_a == other.radiance_table_path_a
            && self.radiance_table_path_b == other.radiance_table_path_b
    }
}
