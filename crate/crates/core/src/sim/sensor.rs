//! Drift sensors: the KS detector wired through measured sub-phase scopes,
//! plus degenerate stubs for equivalence testing.

use crate::dataset::FeatureMatrix;
use crate::detect::{
    apply_tests, estimate_distributions, reduce_dimensions, DetectorConfig, DimensionStat,
    DriftMethod, DriftVerdict,
};
use crate::energy::{MeasurementScope, PhaseMeter};
use crate::error::{Error, Result};
use crate::model::TrainedForest;

/// Inspects the current training window against an incoming batch, charging
/// detection energy to the supplied meter handle.
pub trait DriftSensor {
    fn detect(
        &self,
        train_window: &FeatureMatrix,
        incoming: &FeatureMatrix,
        model: Option<&TrainedForest>,
        meter: &mut PhaseMeter<'_>,
    ) -> Result<DriftVerdict>;
}

/// The real detector. Work units for the proxy meter are
/// `subsampled rows x dimensions` per stage; KS-ALL charges two stages
/// (distribution estimation, statistical test) while KS-PCA and KS-FI add a
/// reduction stage, mirroring how their costs decompose.
pub struct KsSensor {
    config: DetectorConfig,
}

impl KsSensor {
    pub fn new(config: DetectorConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { config })
    }

    pub fn config(&self) -> &DetectorConfig {
        &self.config
    }
}

impl DriftSensor for KsSensor {
    fn detect(
        &self,
        train_window: &FeatureMatrix,
        incoming: &FeatureMatrix,
        model: Option<&TrainedForest>,
        meter: &mut PhaseMeter<'_>,
    ) -> Result<DriftVerdict> {
        let config = &self.config;
        let importances: Option<Vec<f64>> = match config.method {
            DriftMethod::KsFi => Some(
                model
                    .ok_or_else(|| {
                        Error::Configuration("KS-FI requires the deployed model".into())
                    })?
                    .importances()
                    .to_vec(),
            ),
            _ => None,
        };
        let rows_total = (train_window.rows().min(config.max_samples)
            + incoming.rows().min(config.max_samples)) as f64;
        let input_dims = train_window.cols() as f64;

        let sorted = if config.method == DriftMethod::KsAll {
            meter.measure(MeasurementScope::dist_estimation(), || {
                let r = reduce_dimensions(config, train_window, incoming, None)
                    .map(estimate_distributions);
                (r, rows_total * input_dims)
            })??
        } else {
            let reduced = meter.measure(MeasurementScope::reduction(), || {
                let r = reduce_dimensions(config, train_window, incoming, importances.as_deref());
                (r, rows_total * input_dims)
            })??;
            let dims = reduced.dimensions.len() as f64;
            meter.measure(MeasurementScope::dist_estimation(), || {
                (estimate_distributions(reduced), rows_total * dims)
            })?
        };

        let dims = sorted.dimensions.len() as f64;
        meter.measure(MeasurementScope::stat_test(), || {
            let v = apply_tests(&sorted, config);
            (v, rows_total * dims)
        })?
    }
}

/// A sensor with a fixed answer. Charges no energy; only the decision path
/// is exercised.
pub struct StubSensor {
    drift: bool,
}

impl StubSensor {
    pub fn always_fire() -> Self {
        Self { drift: true }
    }

    pub fn never_fire() -> Self {
        Self { drift: false }
    }
}

impl DriftSensor for StubSensor {
    fn detect(
        &self,
        _train_window: &FeatureMatrix,
        _incoming: &FeatureMatrix,
        _model: Option<&TrainedForest>,
        _meter: &mut PhaseMeter<'_>,
    ) -> Result<DriftVerdict> {
        let (statistic, p_value) = if self.drift { (1.0, 0.0) } else { (0.0, 1.0) };
        Ok(DriftVerdict {
            drift: self.drift,
            per_dimension: vec![DimensionStat {
                dimension: 0,
                statistic,
                p_value,
            }],
            corrected_alpha: 0.05,
            method: DetectorConfig::new(DriftMethod::KsAll),
            dimensions_tested: 1,
        })
    }
}
