//! Cumulative per-phase energy accounting for one configuration run.

use serde::{Deserialize, Serialize};

use crate::energy::Phase;
use crate::error::{Error, Result};

/// Observation span of a stream, used for the one-year extrapolation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Span {
    pub value: f64,
    pub unit: SpanUnit,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanUnit {
    Weeks,
    Months,
}

/// Live per-period energy account; joules only, conversions happen in
/// report formatting.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergyLedger {
    config_name: String,
    seed: u64,
    periods: Vec<PeriodEnergy>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeriodEnergy {
    pub period: usize,
    pub train_j: f64,
    pub detect_j: f64,
    pub infer_j: f64,
}

impl EnergyLedger {
    pub fn new(config_name: impl Into<String>, seed: u64) -> Self {
        Self {
            config_name: config_name.into(),
            seed,
            periods: Vec::new(),
        }
    }

    /// Adds joules to one period's phase bucket. Periods may arrive in any
    /// order; records stay sorted.
    pub fn add(&mut self, period: usize, phase: Phase, joules: f64) -> Result<()> {
        if !joules.is_finite() || joules < 0.0 {
            return Err(Error::Validation(format!(
                "joules {joules} must be finite and non-negative"
            )));
        }
        let idx = match self.periods.binary_search_by_key(&period, |p| p.period) {
            Ok(i) => i,
            Err(i) => {
                self.periods.insert(
                    i,
                    PeriodEnergy {
                        period,
                        train_j: 0.0,
                        detect_j: 0.0,
                        infer_j: 0.0,
                    },
                );
                i
            }
        };
        let slot = &mut self.periods[idx];
        match phase {
            Phase::Train => slot.train_j += joules,
            Phase::Detect => slot.detect_j += joules,
            Phase::Infer => slot.infer_j += joules,
        }
        Ok(())
    }

    pub fn periods(&self) -> &[PeriodEnergy] {
        &self.periods
    }

    pub fn period_energy(&self, period: usize) -> Option<&PeriodEnergy> {
        self.periods.iter().find(|p| p.period == period)
    }

    pub fn train_total_j(&self) -> f64 {
        self.periods.iter().map(|p| p.train_j).sum()
    }

    pub fn detect_total_j(&self) -> f64 {
        self.periods.iter().map(|p| p.detect_j).sum()
    }

    pub fn infer_total_j(&self) -> f64 {
        self.periods.iter().map(|p| p.infer_j).sum()
    }

    pub fn total_j(&self) -> f64 {
        self.train_total_j() + self.detect_total_j() + self.infer_total_j()
    }

    /// Running totals per phase in period order.
    pub fn cumulative(&self, phase: Phase) -> Vec<f64> {
        let mut acc = 0.0;
        self.periods
            .iter()
            .map(|p| {
                acc += match phase {
                    Phase::Train => p.train_j,
                    Phase::Detect => p.detect_j,
                    Phase::Infer => p.infer_j,
                };
                acc
            })
            .collect()
    }

    /// Snapshot for persistence: per-period records with running totals plus
    /// a summary block.
    pub fn report(&self, span: Option<Span>) -> LedgerReport {
        let mut cum = (0.0, 0.0, 0.0);
        let periods = self
            .periods
            .iter()
            .map(|p| {
                cum.0 += p.train_j;
                cum.1 += p.detect_j;
                cum.2 += p.infer_j;
                LedgerPeriodRecord {
                    period: p.period,
                    train_j: p.train_j,
                    detect_j: p.detect_j,
                    infer_j: p.infer_j,
                    cumulative_train_j: cum.0,
                    cumulative_detect_j: cum.1,
                    cumulative_infer_j: cum.2,
                }
            })
            .collect();
        let train_total_j = self.train_total_j();
        let detect_total_j = self.detect_total_j();
        let infer_total_j = self.infer_total_j();
        let overhead_pct = detector_overhead_pct(detect_total_j, train_total_j).ok();
        let annual_estimate_j =
            span.and_then(|s| extrapolate_annual(train_total_j + detect_total_j, s).ok());
        LedgerReport {
            config_name: self.config_name.clone(),
            seed: self.seed,
            periods,
            summary: LedgerSummary {
                train_total_j,
                detect_total_j,
                infer_total_j,
                total_j: train_total_j + detect_total_j + infer_total_j,
                overhead_pct,
                annual_estimate_j,
            },
        }
    }
}

/// Serialized ledger: one record per period plus the summary object.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LedgerReport {
    pub config_name: String,
    pub seed: u64,
    pub periods: Vec<LedgerPeriodRecord>,
    pub summary: LedgerSummary,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerPeriodRecord {
    pub period: usize,
    pub train_j: f64,
    pub detect_j: f64,
    pub infer_j: f64,
    pub cumulative_train_j: f64,
    pub cumulative_detect_j: f64,
    pub cumulative_infer_j: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LedgerSummary {
    pub train_total_j: f64,
    pub detect_total_j: f64,
    pub infer_total_j: f64,
    pub total_j: f64,
    pub overhead_pct: Option<f64>,
    pub annual_estimate_j: Option<f64>,
}

/// Share of detection in the combined training + detection energy,
/// `100 * detect / (train + detect)`.
pub fn detector_overhead_pct(detect_total_j: f64, train_total_j: f64) -> Result<f64> {
    if detect_total_j < 0.0 || train_total_j < 0.0 {
        return Err(Error::Validation(
            "energy totals must be non-negative".into(),
        ));
    }
    let denom = detect_total_j + train_total_j;
    if denom == 0.0 {
        return Err(Error::UndefinedRatio(
            "train and detect totals are both zero".into(),
        ));
    }
    Ok(100.0 * detect_total_j / denom)
}

/// Linear one-year extrapolation of an observed energy total, assuming the
/// rest of the year behaves like the observed span.
pub fn extrapolate_annual(observed_j: f64, span: Span) -> Result<f64> {
    if span.value.is_nan() || span.value <= 0.0 {
        return Err(Error::Validation(format!(
            "span {} must be positive",
            span.value
        )));
    }
    let factor = match span.unit {
        SpanUnit::Weeks => 52.0 / span.value,
        SpanUnit::Months => 12.0 / span.value,
    };
    Ok(observed_j * factor)
}
