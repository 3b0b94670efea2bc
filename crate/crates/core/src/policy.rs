//! When to retrain and on which data.

use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureMatrix, LabeledBatch};
use crate::detect::{DetectorConfig, DriftVerdict};
use crate::error::{Error, Result};

/// Canonical configuration names, fixed across config files and reports.
pub const CONFIGURATION_NAMES: [&str; 9] = [
    "static",
    "periodic_sw",
    "periodic_fh",
    "ks_all_sw",
    "ks_all_fh",
    "ks_pca_sw",
    "ks_pca_fh",
    "ks_fi_sw",
    "ks_fi_fh",
];

/// Decides *when* the model is refitted.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RetrainTrigger {
    /// Train once, never retrain.
    Static,
    /// Retrain before every evaluation period after the first.
    Periodic,
    /// Retrain when the detector flags drift.
    Informed { detector: DetectorConfig },
}

/// Decides *what data* a retrain sees.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum WindowPolicy {
    /// Keep only the most recent `window_periods` batches.
    SlidingWindow { window_periods: usize },
    /// Keep everything.
    FullHistory,
}

impl WindowPolicy {
    pub fn validate(&self) -> Result<()> {
        if let WindowPolicy::SlidingWindow { window_periods } = self {
            if *window_periods < 1 {
                return Err(Error::Configuration(
                    "window_periods must be at least 1".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Should a retrain happen before evaluating this period?
///
/// `period_index` is the 1-based ordinal of the evaluation period. No
/// trigger fires at period 1: the window still equals the data the initial
/// model was fitted on, so a retrain there would only duplicate that fit.
pub fn should_retrain(
    trigger: &RetrainTrigger,
    period_index: usize,
    verdict: Option<&DriftVerdict>,
) -> Result<bool> {
    match trigger {
        RetrainTrigger::Static => Ok(false),
        RetrainTrigger::Periodic => Ok(period_index >= 2),
        RetrainTrigger::Informed { .. } => {
            let verdict = verdict.ok_or_else(|| {
                Error::Configuration("informed trigger needs a drift verdict".into())
            })?;
            Ok(period_index >= 2 && verdict.drift)
        }
    }
}

/// The batches currently eligible for training, maintained under a window
/// policy. Owned by exactly one lifecycle loop.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingWindow {
    batches: Vec<LabeledBatch>,
    policy: WindowPolicy,
}

impl TrainingWindow {
    /// Builds the window; under a sliding policy only the most recent
    /// `window_periods` batches survive.
    pub fn new(batches: Vec<LabeledBatch>, policy: WindowPolicy) -> Result<Self> {
        policy.validate()?;
        for pair in batches.windows(2) {
            if pair[1].period <= pair[0].period {
                return Err(Error::Sequencing(format!(
                    "window periods {} and {} out of order",
                    pair[0].period, pair[1].period
                )));
            }
        }
        let mut window = Self { batches, policy };
        window.trim();
        Ok(window)
    }

    /// Appends one batch, dropping the oldest under a sliding policy.
    pub fn update(&mut self, batch: LabeledBatch) -> Result<()> {
        if let Some(last) = self.batches.last() {
            if batch.period <= last.period {
                return Err(Error::Sequencing(format!(
                    "batch period {} does not follow {}",
                    batch.period, last.period
                )));
            }
        }
        self.batches.push(batch);
        self.trim();
        Ok(())
    }

    fn trim(&mut self) {
        if let WindowPolicy::SlidingWindow { window_periods } = self.policy {
            while self.batches.len() > window_periods {
                self.batches.remove(0);
            }
        }
    }

    pub fn batches(&self) -> &[LabeledBatch] {
        &self.batches
    }

    pub fn policy(&self) -> &WindowPolicy {
        &self.policy
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn total_rows(&self) -> usize {
        self.batches.iter().map(|b| b.len()).sum()
    }

    pub fn last_period(&self) -> Option<usize> {
        self.batches.last().map(|b| b.period)
    }

    /// Concatenates the window into a single batch (period of the newest
    /// member).
    pub fn merged(&self) -> Result<LabeledBatch> {
        let last = self
            .batches
            .last()
            .ok_or_else(|| Error::InsufficientData("training window is empty".into()))?;
        let parts: Vec<&FeatureMatrix> = self.batches.iter().map(|b| &b.features).collect();
        let features = FeatureMatrix::vstack(&parts)?;
        let labels = self
            .batches
            .iter()
            .flat_map(|b| b.labels.iter().copied())
            .collect();
        LabeledBatch::new(last.period, features, labels)
    }
}
