//! Models of directional initial cell discovery (ICD) at a mmWave mobile station.
//!
//! The crate computes, for analog (ABF), digital (DBF), hybrid (HBF) and
//! phase-shifter-network (PSN) receivers, how long a full beam sweep takes,
//! how much power the receiver draws while sweeping, and the resulting energy.
//!
//! - [`signaling`] derives PSS period and system bandwidth from the sub-carrier spacing.
//! - [`architectures`] counts directional scans per receiver and context scenario.
//! - [`power`] holds the tabulated receiver powers and a calibrated linear model.
//! - [`energy`] combines the two into [`EnergyReport`]s.
//! - [`sweepsim`] is a discrete-event simulator of the sweep, used as an oracle.

pub mod architectures;
pub mod energy;
mod error;
pub mod power;
pub mod signaling;
pub mod sweepsim;

pub use architectures::{
    directional_scans, total_delay, ArchKind, Architecture, Scenario, ScenarioKind, SweepGeometry,
};
pub use energy::{EnergyReport, IcdModel, ProposedComparison};
pub use error::{Error, Result};
pub use power::{
    calibrate, lookup_power, parametric_power, AdcClass, AdcLaw, AdcModel, PowerMode, PowerModel,
    PowerTable,
};
pub use signaling::{
    build_pss_structure, derive_frame, pss_schedule, FrameAnchor, FrameConfig, PssSlotStructure,
    PssTransmission,
};
pub use sweepsim::{SimOptions, SimResult, SweepEvent, SweepOrder, Target};
