//! Synthetic stream generator with injectable covariate drift.
//!
//! Features are unit-variance Gaussians; each drift event shifts one
//! feature's generating mean from its period onward. Labels come from a
//! logistic link over the designated signal features, so feature importances
//! and drift relevance are controllable.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::dataset::{BatchStream, FeatureMatrix, LabeledBatch};
use crate::error::{Error, Result};

/// Weight each signal feature contributes to the label logit.
const SIGNAL_WEIGHT: f64 = 1.5;

/// A permanent mean shift applied to one feature from `period` onward,
/// expressed in units of the generating standard deviation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DriftEvent {
    pub period: usize,
    pub feature: usize,
    pub shift: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticDriftSpec {
    pub n_features: usize,
    pub n_periods: usize,
    pub samples_per_period: usize,
    pub failure_rate: f64,
    pub drift_events: Vec<DriftEvent>,
    pub label_signal_features: Vec<usize>,
    pub seed: u64,
}

impl SyntheticDriftSpec {
    fn validate(&self) -> Result<()> {
        if self.n_features == 0 || self.n_periods == 0 || self.samples_per_period == 0 {
            return Err(Error::Validation(
                "n_features, n_periods and samples_per_period must be positive".into(),
            ));
        }
        if !(self.failure_rate > 0.0 && self.failure_rate < 1.0) {
            return Err(Error::Validation(format!(
                "failure_rate {} outside (0, 1)",
                self.failure_rate
            )));
        }
        for event in &self.drift_events {
            if event.period == 0 || event.period >= self.n_periods {
                return Err(Error::Validation(format!(
                    "drift period {} outside [1, {})",
                    event.period, self.n_periods
                )));
            }
            if event.feature >= self.n_features {
                return Err(Error::Validation(format!(
                    "drift feature {} out of range",
                    event.feature
                )));
            }
            if !event.shift.is_finite() {
                return Err(Error::Validation("drift shift must be finite".into()));
            }
        }
        for &f in &self.label_signal_features {
            if f >= self.n_features {
                return Err(Error::Validation(format!(
                    "signal feature {f} out of range"
                )));
            }
        }
        Ok(())
    }
}

/// Draws the full stream. Deterministic given `spec.seed`.
pub fn generate_synthetic_stream(spec: &SyntheticDriftSpec) -> Result<BatchStream> {
    spec.validate()?;
    let mut rng = ChaCha12Rng::seed_from_u64(spec.seed);
    let feature_names: Vec<String> = (0..spec.n_features).map(|i| format!("f{i}")).collect();

    // Logit intercept calibrated so the marginal positive rate approximates
    // failure_rate under the logistic-normal approximation
    // E[sigmoid(b + s Z)] ~= sigmoid(b / sqrt(1 + pi s^2 / 8)).
    let signal_var = SIGNAL_WEIGHT * SIGNAL_WEIGHT * spec.label_signal_features.len() as f64;
    let kappa = (1.0 + std::f64::consts::PI * signal_var / 8.0).sqrt();
    let bias = kappa * (spec.failure_rate / (1.0 - spec.failure_rate)).ln();

    let mut batches = Vec::with_capacity(spec.n_periods);
    for period in 0..spec.n_periods {
        let mut means = vec![0.0; spec.n_features];
        for event in &spec.drift_events {
            if period >= event.period {
                means[event.feature] += event.shift;
            }
        }
        let mut values = Vec::with_capacity(spec.samples_per_period * spec.n_features);
        let mut labels = Vec::with_capacity(spec.samples_per_period);
        for _ in 0..spec.samples_per_period {
            let row_start = values.len();
            for mean in &means {
                let z: f64 = StandardNormal.sample(&mut rng);
                values.push(mean + z);
            }
            let logit = bias
                + SIGNAL_WEIGHT
                    * spec
                        .label_signal_features
                        .iter()
                        .map(|&f| values[row_start + f])
                        .sum::<f64>();
            let p = if spec.label_signal_features.is_empty() {
                spec.failure_rate
            } else {
                1.0 / (1.0 + (-logit).exp())
            };
            labels.push(u8::from(rng.random_bool(p)));
        }
        let features = FeatureMatrix::new(
            values,
            spec.samples_per_period,
            spec.n_features,
            feature_names.clone(),
        )?;
        batches.push(LabeledBatch::new(period, features, labels)?);
    }
    BatchStream::new(batches)
}
