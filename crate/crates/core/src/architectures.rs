//! Receiver beamforming architectures, context scenarios and scan counts.
//!
//! The base station always sweeps one direction per PSS period (it is fixed
//! to analog beamforming). What varies is how many mobile-station directions
//! the receiver can listen to in one dwell.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signaling::FrameConfig;

pub const DEFAULT_MS_ANTENNAS: usize = 16;
pub const DEFAULT_BS_ANTENNAS: usize = 64;
pub const DEFAULT_RF_CHAINS: usize = 4;
pub const DEFAULT_COMBINERS: usize = 4;
/// AGPS acquisition delay assumed for the CID scenario.
pub const DEFAULT_T_CI_S: f64 = 1.5;
/// Power drawn during AGPS acquisition.
pub const DEFAULT_P_CI_W: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ArchKind {
    #[serde(rename = "ABF")]
    Abf,
    #[serde(rename = "DBF")]
    Dbf,
    #[serde(rename = "HBF")]
    Hbf,
    #[serde(rename = "PSN")]
    Psn,
}

impl ArchKind {
    pub const ALL: [ArchKind; 4] = [ArchKind::Abf, ArchKind::Dbf, ArchKind::Hbf, ArchKind::Psn];

    pub fn as_str(self) -> &'static str {
        match self {
            ArchKind::Abf => "ABF",
            ArchKind::Dbf => "DBF",
            ArchKind::Hbf => "HBF",
            ArchKind::Psn => "PSN",
        }
    }
}

impl fmt::Display for ArchKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ArchKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ArchKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain("architecture", format!("unknown name {s:?}")))
    }
}

/// A mobile-station receiver. Constructed through the per-kind constructors,
/// which enforce the RF-chain / ADC relations of each scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Architecture {
    kind: ArchKind,
    n_ms_antennas: usize,
    n_rf_chains: usize,
    n_combiners: usize,
    n_adc: usize,
    simultaneous_beams: usize,
}

fn at_least_one(name: &'static str, v: usize) -> Result<usize> {
    if v == 0 {
        Err(Error::domain(name, "must be at least 1"))
    } else {
        Ok(v)
    }
}

impl Architecture {
    /// Single RF chain, one beam at a time, one I/Q ADC pair.
    pub fn abf(n_ms_antennas: usize) -> Result<Self> {
        Ok(Self {
            kind: ArchKind::Abf,
            n_ms_antennas: at_least_one("n_ms_antennas", n_ms_antennas)?,
            n_rf_chains: 1,
            n_combiners: 1,
            n_adc: 2,
            simultaneous_beams: 1,
        })
    }

    /// One RF chain and ADC pair per antenna.
    pub fn dbf(n_ms_antennas: usize) -> Result<Self> {
        let n = at_least_one("n_ms_antennas", n_ms_antennas)?;
        Ok(Self {
            kind: ArchKind::Dbf,
            n_ms_antennas: n,
            n_rf_chains: n,
            n_combiners: 1,
            n_adc: 2 * n,
            simultaneous_beams: n,
        })
    }

    pub fn hbf(n_ms_antennas: usize, n_rf_chains: usize) -> Result<Self> {
        let n_rf = at_least_one("n_rf_chains", n_rf_chains)?;
        Ok(Self {
            kind: ArchKind::Hbf,
            n_ms_antennas: at_least_one("n_ms_antennas", n_ms_antennas)?,
            n_rf_chains: n_rf,
            n_combiners: 1,
            n_adc: 2 * n_rf,
            simultaneous_beams: n_rf,
        })
    }

    /// Phase shifter network: several analog beams compared before a single RF chain.
    pub fn psn(n_ms_antennas: usize, n_combiners: usize) -> Result<Self> {
        let n_comb = at_least_one("n_combiners", n_combiners)?;
        Ok(Self {
            kind: ArchKind::Psn,
            n_ms_antennas: at_least_one("n_ms_antennas", n_ms_antennas)?,
            n_rf_chains: 1,
            n_combiners: n_comb,
            n_adc: 2,
            simultaneous_beams: n_comb,
        })
    }

    /// 16 antennas, 4 RF chains (HBF) or 4 combiners (PSN).
    pub fn default_for(kind: ArchKind) -> Self {
        let built = match kind {
            ArchKind::Abf => Self::abf(DEFAULT_MS_ANTENNAS),
            ArchKind::Dbf => Self::dbf(DEFAULT_MS_ANTENNAS),
            ArchKind::Hbf => Self::hbf(DEFAULT_MS_ANTENNAS, DEFAULT_RF_CHAINS),
            ArchKind::Psn => Self::psn(DEFAULT_MS_ANTENNAS, DEFAULT_COMBINERS),
        };
        built.expect("default architecture parameters are valid")
    }

    pub fn defaults() -> [Self; 4] {
        ArchKind::ALL.map(Self::default_for)
    }

    pub fn kind(&self) -> ArchKind {
        self.kind
    }
    pub fn n_ms_antennas(&self) -> usize {
        self.n_ms_antennas
    }
    pub fn n_rf_chains(&self) -> usize {
        self.n_rf_chains
    }
    pub fn n_combiners(&self) -> usize {
        self.n_combiners
    }
    pub fn n_adc(&self) -> usize {
        self.n_adc
    }
    pub fn simultaneous_beams(&self) -> usize {
        self.simultaneous_beams
    }

    /// Whether context information shortens this receiver's search. A fully
    /// digital receiver already covers every direction, so it never spends
    /// time or energy acquiring CI.
    pub fn uses_context(&self) -> bool {
        self.kind != ArchKind::Dbf
    }

    /// MS directions covered in one dwell.
    pub fn beams_per_dwell(&self, geom: &SweepGeometry) -> usize {
        match self.kind {
            ArchKind::Dbf => geom.n_ms_directions,
            _ => self.simultaneous_beams.min(geom.n_ms_directions),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ScenarioKind {
    /// No context information.
    #[serde(rename = "nCI")]
    NCi,
    /// MS position already known.
    #[serde(rename = "CInD")]
    CInD,
    /// MS position acquired through AGPS first.
    #[serde(rename = "CID")]
    Cid,
}

impl ScenarioKind {
    pub const ALL: [ScenarioKind; 3] = [ScenarioKind::NCi, ScenarioKind::CInD, ScenarioKind::Cid];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioKind::NCi => "nCI",
            ScenarioKind::CInD => "CInD",
            ScenarioKind::Cid => "CID",
        }
    }

    pub fn has_context(self) -> bool {
        self != ScenarioKind::NCi
    }
}

impl fmt::Display for ScenarioKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScenarioKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ScenarioKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s))
            .ok_or_else(|| Error::domain("scenario", format!("unknown name {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Scenario {
    kind: ScenarioKind,
    #[serde(rename = "t_ci_s")]
    t_ci: f64,
    #[serde(rename = "p_ci_w")]
    p_ci: f64,
}

impl Scenario {
    pub fn nci() -> Self {
        Self { kind: ScenarioKind::NCi, t_ci: 0.0, p_ci: 0.0 }
    }

    pub fn cind() -> Self {
        Self { kind: ScenarioKind::CInD, t_ci: 0.0, p_ci: 0.0 }
    }

    pub fn cid() -> Self {
        Self { kind: ScenarioKind::Cid, t_ci: DEFAULT_T_CI_S, p_ci: DEFAULT_P_CI_W }
    }

    pub fn cid_with(t_ci: f64, p_ci: f64) -> Result<Self> {
        if !(t_ci.is_finite() && t_ci >= 0.0) {
            return Err(Error::domain("t_ci", "must be non-negative"));
        }
        if !(p_ci.is_finite() && p_ci >= 0.0) {
            return Err(Error::domain("p_ci", "must be non-negative"));
        }
        Ok(Self { kind: ScenarioKind::Cid, t_ci, p_ci })
    }

    pub fn default_for(kind: ScenarioKind) -> Self {
        match kind {
            ScenarioKind::NCi => Self::nci(),
            ScenarioKind::CInD => Self::cind(),
            ScenarioKind::Cid => Self::cid(),
        }
    }

    pub fn kind(&self) -> ScenarioKind {
        self.kind
    }
    pub fn t_ci(&self) -> f64 {
        self.t_ci
    }
    pub fn p_ci(&self) -> f64 {
        self.p_ci
    }

    /// CI acquisition time actually spent by `arch` (zero for DBF).
    pub fn ci_delay_for(&self, arch: &Architecture) -> f64 {
        if arch.uses_context() {
            self.t_ci
        } else {
            0.0
        }
    }

    /// CI acquisition energy actually spent by `arch`.
    pub fn ci_energy_for(&self, arch: &Architecture) -> f64 {
        if arch.uses_context() {
            self.t_ci * self.p_ci
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepGeometry {
    pub n_bs_directions: usize,
    pub n_ms_directions: usize,
}

impl Default for SweepGeometry {
    fn default() -> Self {
        Self {
            n_bs_directions: DEFAULT_BS_ANTENNAS,
            n_ms_directions: DEFAULT_MS_ANTENNAS,
        }
    }
}

impl SweepGeometry {
    pub fn new(n_bs_directions: usize, n_ms_directions: usize) -> Result<Self> {
        Ok(Self {
            n_bs_directions: at_least_one("n_bs_directions", n_bs_directions)?,
            n_ms_directions: at_least_one("n_ms_directions", n_ms_directions)?,
        })
    }

    pub fn search_space(&self) -> usize {
        self.n_bs_directions * self.n_ms_directions
    }
}

/// Number of dwell periods `N_D` needed to cover the angular search space.
///
/// With context information the MS beam is pinned, so only the BS sweep
/// remains. Otherwise each group of `beams_per_dwell` MS directions is held
/// for a full BS cycle; a partial last group still costs a full cycle.
pub fn directional_scans(arch: &Architecture, scenario: &Scenario, geom: &SweepGeometry) -> u64 {
    let bs = geom.n_bs_directions as u64;
    if scenario.kind().has_context() {
        return bs;
    }
    let groups = geom.n_ms_directions.div_ceil(arch.beams_per_dwell(geom)) as u64;
    bs * groups
}

/// `t_Del = N_D * T_PSS + t_CI`.
pub fn total_delay(arch: &Architecture, scenario: &Scenario, geom: &SweepGeometry, frame: &FrameConfig) -> f64 {
    scan_time(arch, scenario, geom, frame) + scenario.ci_delay_for(arch)
}

/// Sweep part of the delay, without CI acquisition.
pub fn scan_time(arch: &Architecture, scenario: &Scenario, geom: &SweepGeometry, frame: &FrameConfig) -> f64 {
    directional_scans(arch, scenario, geom) as f64 * frame.t_pss
}
