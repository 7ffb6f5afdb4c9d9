//! Run configuration. Every field is optional; the defaults reproduce the
//! reference setup (64 BS / 16 MS directions, 4 RF chains or combiners,
//! 6-bit ADCs, 1.5 s and 100 mW for context acquisition).

use std::path::{Path, PathBuf};

use icdsim_core::architectures::{DEFAULT_MS_ANTENNAS, DEFAULT_P_CI_W, DEFAULT_T_CI_S};
use icdsim_core::{AdcClass, AdcLaw, ArchKind, Architecture, PowerMode, Scenario, ScenarioKind, SweepGeometry};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ArchSpec {
    Name(String),
    Custom {
        kind: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        label: Option<String>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_ms_antennas: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_rf_chains: Option<usize>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        n_combiners: Option<usize>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioSpec {
    Name(String),
    Custom {
        kind: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        t_ci_s: Option<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        p_ci_w: Option<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TraceSpec {
    /// Label of one of the configured architectures.
    pub architecture: String,
    pub scenario: ScenarioKind,
    pub bs: usize,
    pub ms: usize,
    pub b_sc_hz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub b_sc_hz: Vec<f64>,
    pub architectures: Vec<ArchSpec>,
    pub scenarios: Vec<ScenarioSpec>,
    pub adc_classes: Vec<AdcClass>,
    pub bits: Vec<u32>,
    pub adc_law: AdcLaw,
    /// Unset means each command picks its own default.
    pub power_mode: Option<PowerMode>,
    pub geometry: SweepGeometry,
    pub k: Vec<u32>,
    pub pss_b_sc_hz: f64,
    pub cp_fraction: f64,
    pub convergence_bits: Vec<u32>,
    /// CSV with columns architecture, adc_class, b_sc_hz, power_w. Relative
    /// paths resolve against the config file.
    pub power_table: Option<PathBuf>,
    pub trace: Option<TraceSpec>,
    pub format: Format,
    #[serde(skip_serializing)]
    pub out: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            b_sc_hz: vec![15e3, 250e3, 500e3, 1e6, 10e6],
            architectures: ArchKind::ALL.iter().map(|k| ArchSpec::Name(k.to_string())).collect(),
            scenarios: ScenarioKind::ALL.iter().map(|k| ScenarioSpec::Name(k.to_string())).collect(),
            adc_classes: AdcClass::ALL.to_vec(),
            bits: vec![6],
            adc_law: AdcLaw::Exponential,
            power_mode: None,
            geometry: SweepGeometry::default(),
            k: vec![1, 2, 4, 8, 16],
            pss_b_sc_hz: 250e3,
            cp_fraction: icdsim_core::signaling::DEFAULT_CP_FRACTION,
            convergence_bits: (1..=12).collect(),
            power_table: None,
            trace: None,
            format: Format::Csv,
            out: None,
        }
    }
}

#[derive(Debug)]
pub struct ConfigError(pub String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

fn invalid(msg: impl Into<String>) -> ConfigError {
    ConfigError(msg.into())
}

/// A named receiver resolved from the config.
#[derive(Debug, Clone, PartialEq)]
pub struct NamedArch {
    pub label: String,
    pub arch: Architecture,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        let mut cfg: RunConfig =
            serde_json::from_str(&text).map_err(|e| invalid(format!("{}: {e}", path.display())))?;
        if let Some(table) = &cfg.power_table {
            if table.is_relative() {
                let base = path.parent().unwrap_or(Path::new("."));
                cfg.power_table = Some(base.join(table));
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        non_empty("b_sc_hz", &self.b_sc_hz)?;
        non_empty("architectures", &self.architectures)?;
        non_empty("scenarios", &self.scenarios)?;
        non_empty("adc_classes", &self.adc_classes)?;
        non_empty("bits", &self.bits)?;
        non_empty("k", &self.k)?;
        non_empty("convergence_bits", &self.convergence_bits)?;
        for &b in self.b_sc_hz.iter().chain([&self.pss_b_sc_hz]) {
            if !(b.is_finite() && b > 0.0) {
                return Err(invalid(format!("sub-carrier bandwidth must be positive, got {b}")));
            }
        }
        for &bits in self.bits.iter().chain(&self.convergence_bits) {
            if !(1..=32).contains(&bits) {
                return Err(invalid(format!("bits must be in 1..=32, got {bits}")));
            }
        }
        if let Some(&k) = self.k.iter().find(|&&k| k == 0) {
            return Err(invalid(format!("k must be at least 1, got {k}")));
        }
        if !(0.0..1.0).contains(&self.cp_fraction) {
            return Err(invalid(format!("cp_fraction must be in [0, 1), got {}", self.cp_fraction)));
        }
        SweepGeometry::new(self.geometry.n_bs_directions, self.geometry.n_ms_directions)
            .map_err(|e| invalid(e.to_string()))?;
        let archs = self.resolve_architectures()?;
        for (i, a) in archs.iter().enumerate() {
            if archs[..i].iter().any(|b| b.label == a.label) {
                return Err(invalid(format!("duplicate architecture label {:?}", a.label)));
            }
        }
        let scenarios = self.resolve_scenarios()?;
        for (i, s) in scenarios.iter().enumerate() {
            if scenarios[..i].iter().any(|t| t.kind() == s.kind()) {
                return Err(invalid(format!("scenario {} listed twice", s.kind())));
            }
        }
        if let Some(t) = &self.trace {
            if t.bs >= self.geometry.n_bs_directions || t.ms >= self.geometry.n_ms_directions {
                return Err(invalid(format!("trace target ({}, {}) outside the sweep geometry", t.bs, t.ms)));
            }
            if !(t.b_sc_hz.is_finite() && t.b_sc_hz > 0.0) {
                return Err(invalid("trace b_sc_hz must be positive"));
            }
            if !archs.iter().any(|a| a.label == t.architecture) {
                return Err(invalid(format!("trace architecture {:?} is not configured", t.architecture)));
            }
        }
        Ok(())
    }

    pub fn resolve_architectures(&self) -> Result<Vec<NamedArch>, ConfigError> {
        self.architectures.iter().map(resolve_arch).collect()
    }

    pub fn resolve_scenarios(&self) -> Result<Vec<Scenario>, ConfigError> {
        self.scenarios.iter().map(resolve_scenario).collect()
    }

    /// SHA-256 of the canonical JSON form; the output directory is excluded.
    pub fn digest(&self) -> String {
        use sha2::{Digest, Sha256};
        let canonical = serde_json::to_vec(self).expect("config serializes");
        hex::encode(Sha256::digest(&canonical))
    }
}

fn non_empty<T>(name: &str, v: &[T]) -> Result<(), ConfigError> {
    if v.is_empty() {
        Err(invalid(format!("{name} must not be empty")))
    } else {
        Ok(())
    }
}

fn parse_kind<T: std::str::FromStr<Err = icdsim_core::Error>>(s: &str) -> Result<T, ConfigError> {
    s.parse().map_err(|e: icdsim_core::Error| invalid(e.to_string()))
}

fn resolve_arch(spec: &ArchSpec) -> Result<NamedArch, ConfigError> {
    let (kind, label, n_ms, rf, comb) = match spec {
        ArchSpec::Name(name) => (parse_kind::<ArchKind>(name)?, None, None, None, None),
        ArchSpec::Custom { kind, label, n_ms_antennas, n_rf_chains, n_combiners } => {
            (parse_kind(kind)?, label.clone(), *n_ms_antennas, *n_rf_chains, *n_combiners)
        }
    };
    let n_ms = n_ms.unwrap_or(DEFAULT_MS_ANTENNAS);
    let defaults = Architecture::default_for(kind);
    let arch = match kind {
        ArchKind::Abf | ArchKind::Dbf if rf.is_some() || comb.is_some() => {
            return Err(invalid(format!("{kind} takes no RF chain or combiner count")));
        }
        ArchKind::Hbf if comb.is_some() => return Err(invalid("HBF takes n_rf_chains, not n_combiners")),
        ArchKind::Psn if rf.is_some() => return Err(invalid("PSN takes n_combiners, not n_rf_chains")),
        ArchKind::Abf => Architecture::abf(n_ms),
        ArchKind::Dbf => Architecture::dbf(n_ms),
        ArchKind::Hbf => Architecture::hbf(n_ms, rf.unwrap_or(defaults.n_rf_chains())),
        ArchKind::Psn => Architecture::psn(n_ms, comb.unwrap_or(defaults.n_combiners())),
    }
    .map_err(|e| invalid(e.to_string()))?;
    Ok(NamedArch { label: label.unwrap_or_else(|| kind.to_string()), arch })
}

fn resolve_scenario(spec: &ScenarioSpec) -> Result<Scenario, ConfigError> {
    match spec {
        ScenarioSpec::Name(name) => Ok(Scenario::default_for(parse_kind(name)?)),
        ScenarioSpec::Custom { kind, t_ci_s, p_ci_w } => {
            let kind: ScenarioKind = parse_kind(kind)?;
            if kind != ScenarioKind::Cid {
                if t_ci_s.is_some() || p_ci_w.is_some() {
                    return Err(invalid(format!("{kind} has no context acquisition to override")));
                }
                return Ok(Scenario::default_for(kind));
            }
            Scenario::cid_with(t_ci_s.unwrap_or(DEFAULT_T_CI_S), p_ci_w.unwrap_or(DEFAULT_P_CI_W))
                .map_err(|e| invalid(e.to_string()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.resolve_architectures().unwrap().len(), 4);
        assert_eq!(cfg.resolve_scenarios().unwrap().len(), 3);
    }

    #[test]
    fn empty_object_is_default() {
        let cfg: RunConfig = serde_json::from_str("{}").unwrap();
        assert_eq!(cfg, RunConfig::default());
    }

    #[test]
    fn overrides_parse() {
        let cfg: RunConfig = serde_json::from_str(
            r#"{"architectures": ["abf", {"kind": "HBF", "label": "HBF-8", "n_rf_chains": 8}],
                "scenarios": [{"kind": "CID", "t_ci_s": 3.0}]}"#,
        )
        .unwrap();
        let archs = cfg.resolve_architectures().unwrap();
        assert_eq!(archs[1].label, "HBF-8");
        assert_eq!(archs[1].arch.n_rf_chains(), 8);
        assert_eq!(cfg.resolve_scenarios().unwrap()[0].t_ci(), 3.0);
    }

    #[test]
    fn rejects_bad_input() {
        for bad in [
            r#"{"b_sc_hz": []}"#,
            r#"{"architectures": ["XBF"]}"#,
            r#"{"architectures": ["ABF", "abf"]}"#,
            r#"{"scenarios": [{"kind": "nCI", "t_ci_s": 1.0}]}"#,
            r#"{"k": [0]}"#,
            r#"{"bits": [0]}"#,
            r#"{"cp_fraction": 1.0}"#,
            r#"{"b_sc_hz": [-1.0]}"#,
        ] {
            let cfg: RunConfig = serde_json::from_str(bad).unwrap();
            assert!(cfg.validate().is_err(), "{bad}");
        }
        assert!(serde_json::from_str::<RunConfig>(r#"{"typo": 1}"#).is_err());
    }

    #[test]
    fn digest_ignores_out_dir() {
        let a = RunConfig::default();
        let b = RunConfig { out: Some("elsewhere".into()), ..RunConfig::default() };
        assert_eq!(a.digest(), b.digest());
        let c = RunConfig { bits: vec![10], ..RunConfig::default() };
        assert_ne!(a.digest(), c.digest());
    }
}
