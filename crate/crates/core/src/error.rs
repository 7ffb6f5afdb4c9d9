use thiserror::Error;

use crate::architectures::{ArchKind, ScenarioKind};
use crate::power::AdcClass;
use crate::sweepsim::Target;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid {name}: {reason}")]
    Domain { name: &'static str, reason: String },

    #[error(
        "no tabulated power for {arch} / {class} at {b_sc_hz} Hz with {bits} bits; \
         use parametric power mode for untabulated points"
    )]
    NotTabulated {
        arch: ArchKind,
        class: AdcClass,
        b_sc_hz: f64,
        bits: u32,
    },

    #[error("calibration failed: {0}")]
    Calibration(String),

    #[error("target {target} not discovered within one full sweep ({slots} slots)")]
    NotDiscovered { target: Target, slots: u64 },

    #[error("{arch}/{scenario}: simulated worst case {simulated_s} s at target {target} differs from analytic {analytic_s} s")]
    VerificationMismatch {
        arch: ArchKind,
        scenario: ScenarioKind,
        target: Target,
        simulated_s: f64,
        analytic_s: f64,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn domain(name: &'static str, reason: impl Into<String>) -> Self {
        Error::Domain {
            name,
            reason: reason.into(),
        }
    }
}
