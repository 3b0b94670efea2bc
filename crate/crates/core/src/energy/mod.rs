//! Per-phase energy measurement.
//!
//! A meter brackets a measured region with [`EnergyMeter::begin`] /
//! [`EnergyMeter::end`] and reports joules for it. Scopes must nest strictly.
//! Three implementations:
//!
//! - [`VirtualMeter`]: deterministic proxy, joules = phase coefficient x
//!   declared work units. Bit-reproducible, the default for simulation and
//!   tests.
//! - [`CpuTimeMeter`]: process CPU seconds x an average-power figure.
//!   Portable real measurement without privileged counters.
//! - `RaplMeter` (feature `rapl`): reads Linux powercap energy counters.
//!
//! Phase totals in a ledger are sums of leaf sub-phase scopes, so sub-phase
//! additivity holds by construction.

mod ledger;
mod meter;

pub use ledger::{
    detector_overhead_pct, extrapolate_annual, EnergyLedger, LedgerPeriodRecord, LedgerReport,
    LedgerSummary, Span, SpanUnit,
};
#[cfg(feature = "rapl")]
pub use meter::RaplMeter;
pub use meter::{
    CpuTimeMeter, EnergyMeter, PhaseMeter, ScopeId, VirtualCoefficients, VirtualMeter,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Lifecycle phase energy is attributed to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Train,
    Detect,
    Infer,
}

/// Finer-grained tag inside a phase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SubPhase {
    Tuning,
    Fit,
    DistEstimation,
    StatTest,
    Reduction,
    Predict,
}

impl SubPhase {
    fn phase(self) -> Phase {
        match self {
            SubPhase::Tuning | SubPhase::Fit => Phase::Train,
            SubPhase::DistEstimation | SubPhase::StatTest | SubPhase::Reduction => Phase::Detect,
            SubPhase::Predict => Phase::Infer,
        }
    }
}

/// A measured region: a phase plus the sub-phase it covers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementScope {
    pub phase: Phase,
    pub sub: SubPhase,
}

impl MeasurementScope {
    pub fn new(phase: Phase, sub: SubPhase) -> Result<Self> {
        if sub.phase() != phase {
            return Err(Error::Instrumentation(format!(
                "sub-phase {sub:?} does not belong to phase {phase:?}"
            )));
        }
        Ok(Self { phase, sub })
    }

    pub fn tuning() -> Self {
        Self {
            phase: Phase::Train,
            sub: SubPhase::Tuning,
        }
    }

    pub fn fit() -> Self {
        Self {
            phase: Phase::Train,
            sub: SubPhase::Fit,
        }
    }

    pub fn dist_estimation() -> Self {
        Self {
            phase: Phase::Detect,
            sub: SubPhase::DistEstimation,
        }
    }

    pub fn stat_test() -> Self {
        Self {
            phase: Phase::Detect,
            sub: SubPhase::StatTest,
        }
    }

    pub fn reduction() -> Self {
        Self {
            phase: Phase::Detect,
            sub: SubPhase::Reduction,
        }
    }

    pub fn predict() -> Self {
        Self {
            phase: Phase::Infer,
            sub: SubPhase::Predict,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scope_pairing_is_validated() {
        assert!(MeasurementScope::new(Phase::Train, SubPhase::Tuning).is_ok());
        assert!(matches!(
            MeasurementScope::new(Phase::Train, SubPhase::Predict),
            Err(Error::Instrumentation(_))
        ));
        assert!(matches!(
            MeasurementScope::new(Phase::Infer, SubPhase::StatTest),
            Err(Error::Instrumentation(_))
        ));
    }
}
