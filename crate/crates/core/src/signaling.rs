//! Synchronization signal timing and bandwidth.
//!
//! All quantities scale from the sub-carrier bandwidth `B_SC`. The PSS period
//! is inversely proportional to `B_SC`, anchored at the LTE point
//! (15 kHz, 5 ms). The total system bandwidth is the 72 sub-carrier
//! synchronization grid divided by the fraction of the channel it occupies
//! (1.08 MHz out of 1.4 MHz in LTE).

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// LTE sub-carrier spacing.
pub const LTE_SUBCARRIER_HZ: f64 = 15e3;
/// LTE FDD PSS/SSS repetition period.
pub const LTE_PSS_PERIOD_S: f64 = 5e-3;
/// Duration of one LTE PSS symbol. Metadata only; the delay model uses the period.
pub const LTE_PSS_SYMBOL_S: f64 = 71.4e-6;
pub const SUBCARRIERS_PER_RB: u32 = 12;
/// Resource blocks carrying PSS/SSS.
pub const SYNC_RBS: u32 = 6;
/// Occupied fraction of the 1.4 MHz LTE channel: 6 RBs x 12 x 15 kHz = 1.08 MHz.
pub const LTE_SYNC_UTILIZATION: f64 = 1.08e6 / 1.4e6;
pub const DEFAULT_CP_FRACTION: f64 = 0.07;

/// Reference point and grid from which every [`FrameConfig`] is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameAnchor {
    #[serde(rename = "anchor_b_sc_hz")]
    pub b_sc: f64,
    #[serde(rename = "anchor_t_pss_s")]
    pub t_pss: f64,
    pub subcarriers_per_rb: u32,
    pub rbs_for_sync: u32,
    pub utilization: f64,
}

impl Default for FrameAnchor {
    fn default() -> Self {
        Self {
            b_sc: LTE_SUBCARRIER_HZ,
            t_pss: LTE_PSS_PERIOD_S,
            subcarriers_per_rb: SUBCARRIERS_PER_RB,
            rbs_for_sync: SYNC_RBS,
            utilization: LTE_SYNC_UTILIZATION,
        }
    }
}

impl FrameAnchor {
    fn validate(&self) -> Result<()> {
        if !(self.b_sc.is_finite() && self.b_sc > 0.0) {
            return Err(Error::domain("anchor b_sc", "must be positive"));
        }
        if !(self.t_pss.is_finite() && self.t_pss > 0.0) {
            return Err(Error::domain("anchor t_pss", "must be positive"));
        }
        if !(self.utilization > 0.0 && self.utilization <= 1.0) {
            return Err(Error::domain("utilization", "must lie in (0, 1]"));
        }
        if self.subcarriers_per_rb == 0 || self.rbs_for_sync == 0 {
            return Err(Error::domain("sync grid", "needs at least one RB and sub-carrier"));
        }
        Ok(())
    }

    /// `T_PSS * B_SC`, shared by every frame derived from this anchor.
    pub fn period_bandwidth_product(&self) -> f64 {
        self.t_pss * self.b_sc
    }

    fn sync_subcarriers(&self) -> f64 {
        f64::from(self.subcarriers_per_rb * self.rbs_for_sync)
    }

    /// `B_Tot * T_PSS`. Independent of `B_SC`; 7000 for the LTE anchor.
    pub fn bandwidth_period_product(&self) -> f64 {
        self.sync_subcarriers() * self.period_bandwidth_product() / self.utilization
    }

    pub fn derive(&self, b_sc: f64) -> Result<FrameConfig> {
        self.validate()?;
        if !(b_sc.is_finite() && b_sc > 0.0) {
            return Err(Error::domain("b_sc", format!("must be positive, got {b_sc}")));
        }
        Ok(FrameConfig {
            b_sc,
            t_pss: self.period_bandwidth_product() / b_sc,
            b_tot: self.sync_subcarriers() * b_sc / self.utilization,
            utilization: self.utilization,
            subcarriers_per_rb: self.subcarriers_per_rb,
            rbs_for_sync: self.rbs_for_sync,
        })
    }
}

/// Timing and bandwidth for one sub-carrier spacing.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    #[serde(rename = "b_sc_hz")]
    pub b_sc: f64,
    #[serde(rename = "t_pss_s")]
    pub t_pss: f64,
    #[serde(rename = "b_tot_hz")]
    pub b_tot: f64,
    pub utilization: f64,
    pub subcarriers_per_rb: u32,
    pub rbs_for_sync: u32,
}

impl FrameConfig {
    /// Base OFDM symbol period, `1 / B_SC`.
    pub fn t_sc(&self) -> f64 {
        1.0 / self.b_sc
    }

    /// `B_Tot` rounded to 0.1 MHz for display.
    pub fn b_tot_mhz_display(&self) -> String {
        format!("{:.1}", self.b_tot / 1e6)
    }
}

/// Derives a frame from the LTE anchor.
pub fn derive_frame(b_sc: f64) -> Result<FrameConfig> {
    FrameAnchor::default().derive(b_sc)
}

/// Slot layout where the PSS uses a sub-carrier `k` times wider than the
/// rest of the signaling, fitting `k` short PSS symbols into one base symbol.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PssSlotStructure {
    pub k: u32,
    #[serde(rename = "b_sc_pss_hz")]
    pub b_sc_pss: f64,
    #[serde(rename = "t_sc_s")]
    pub t_sc: f64,
    #[serde(rename = "t_sc_pss_s")]
    pub t_sc_pss: f64,
    #[serde(rename = "cp_s")]
    pub cp: f64,
    pub pss_per_slot: u32,
    /// Base slot period (the frame's `T_PSS`).
    #[serde(rename = "slot_period_s")]
    pub slot_period: f64,
}

impl PssSlotStructure {
    /// Base slots needed to visit `n_directions` directions once.
    pub fn slots_for(&self, n_directions: usize) -> usize {
        n_directions.div_ceil(self.k as usize)
    }

    /// One PSS symbol including its cyclic prefix.
    pub fn symbol_with_cp(&self) -> f64 {
        self.t_sc_pss + self.cp
    }
}

pub fn build_pss_structure(frame: &FrameConfig, k: u32, cp_fraction: f64) -> Result<PssSlotStructure> {
    if k < 1 {
        return Err(Error::domain("k", "must be at least 1"));
    }
    if !(0.0..1.0).contains(&cp_fraction) {
        return Err(Error::domain("cp_fraction", format!("must lie in [0, 1), got {cp_fraction}")));
    }
    let t_sc = frame.t_sc();
    let t_sc_pss = t_sc / f64::from(k);
    Ok(PssSlotStructure {
        k,
        b_sc_pss: f64::from(k) * frame.b_sc,
        t_sc,
        t_sc_pss,
        cp: cp_fraction * t_sc_pss,
        pss_per_slot: k,
        slot_period: frame.t_pss,
    })
}

/// One PSS transmission in a [`pss_schedule`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PssTransmission {
    pub direction: usize,
    pub slot: usize,
    pub position: u32,
    pub start_s: f64,
    pub duration_s: f64,
}

/// Assigns directions `0..n_directions` to PSS positions, `k` per base slot.
///
/// Within a slot the symbols are back to back, each preceded by its CP.
pub fn pss_schedule(structure: &PssSlotStructure, n_directions: usize) -> Result<Vec<PssTransmission>> {
    if n_directions == 0 {
        return Err(Error::domain("n_directions", "must be at least 1"));
    }
    let k = structure.k as usize;
    let symbol = structure.symbol_with_cp();
    Ok((0..n_directions)
        .map(|direction| {
            let slot = direction / k;
            let position = (direction % k) as u32;
            PssTransmission {
                direction,
                slot,
                position,
                start_s: slot as f64 * structure.slot_period + f64::from(position) * symbol,
                duration_s: symbol,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const TABLE_BSC: [f64; 5] = [15e3, 250e3, 500e3, 1e6, 10e6];

    #[test]
    fn lte_anchor_product_is_exact() {
        assert_eq!(LTE_PSS_PERIOD_S * LTE_SUBCARRIER_HZ, 75.0);
    }

    #[test]
    fn lte_point() {
        let f = derive_frame(15e3).unwrap();
        assert_eq!(f.t_pss, 5e-3);
        assert!((f.b_tot - 1.4e6).abs() < 1.0);
        assert_eq!(f.b_tot_mhz_display(), "1.4");
    }

    #[test]
    fn doubling_b_sc_halves_t_pss() {
        assert_eq!(derive_frame(30e3).unwrap().t_pss, 2.5e-3);
    }

    #[test]
    fn display_matches_table() {
        let shown: Vec<_> = TABLE_BSC
            .iter()
            .map(|&b| derive_frame(b).unwrap().b_tot_mhz_display())
            .collect();
        assert_eq!(shown, ["1.4", "23.3", "46.7", "93.3", "933.3"]);
    }

    #[test]
    fn rejects_non_positive_b_sc() {
        for b in [0.0, -15e3, f64::NAN] {
            assert!(matches!(derive_frame(b), Err(Error::Domain { .. })));
        }
    }

    #[test]
    fn k_one_is_base_frame() {
        let f = derive_frame(250e3).unwrap();
        let s = build_pss_structure(&f, 1, DEFAULT_CP_FRACTION).unwrap();
        assert_eq!(s.pss_per_slot, 1);
        assert_eq!(s.t_sc_pss, s.t_sc);
        assert_eq!(s.b_sc_pss, f.b_sc);
    }

    #[test]
    fn k_four_and_eight() {
        let f = derive_frame(250e3).unwrap();
        let s4 = build_pss_structure(&f, 4, 0.0).unwrap();
        assert_eq!(s4.pss_per_slot, 4);
        assert_eq!(s4.t_sc_pss, s4.t_sc / 4.0);
        let s8 = build_pss_structure(&f, 8, DEFAULT_CP_FRACTION).unwrap();
        assert_eq!(s8.pss_per_slot, 8);
        assert_eq!(s8.b_sc_pss, 2e6);
        assert!(s8.cp < s8.t_sc_pss);
    }

    #[test]
    fn bad_structure_inputs() {
        let f = derive_frame(250e3).unwrap();
        assert!(build_pss_structure(&f, 0, 0.07).is_err());
        assert!(build_pss_structure(&f, 2, 1.0).is_err());
        assert!(build_pss_structure(&f, 2, -0.1).is_err());
    }

    #[test]
    fn schedule_partial_slot() {
        let s = build_pss_structure(&derive_frame(250e3).unwrap(), 8, 0.07).unwrap();
        let sched = pss_schedule(&s, 4).unwrap();
        assert_eq!(sched.len(), 4);
        assert!(sched.iter().all(|t| t.slot == 0));
        assert_eq!(s.slots_for(4), 1);
        assert!(pss_schedule(&s, 0).is_err());
    }

    #[test]
    fn degenerate_schedule_uses_one_slot_per_direction() {
        let s = build_pss_structure(&derive_frame(250e3).unwrap(), 1, 0.07).unwrap();
        let sched = pss_schedule(&s, 64).unwrap();
        assert_eq!(sched.last().unwrap().slot, 63);
        assert_eq!(s.slots_for(64), 64);
    }

    #[test]
    fn json_uses_si_field_names() {
        let v = serde_json::to_value(derive_frame(15e3).unwrap()).unwrap();
        assert_eq!(v["t_pss_s"], 5e-3);
        assert!(v.get("b_tot_hz").is_some());
    }
}
