//! The lifecycle driver: initial training, per-period detection, retraining
//! and inference, and the seeded experiment matrix around it.
//!
//! Temporal rules the loop enforces:
//! - a period's batch enters the training window only after that period has
//!   been evaluated, so no model ever trains on data from its own or a later
//!   evaluation period;
//! - detection (informed configurations) runs every period, before the
//!   retrain decision, comparing the current window to the incoming batch
//!   under the current scaler, and its cost is charged whether or not a
//!   retrain fires;
//! - no trigger fires before evaluation period 2, since at period 1 the
//!   window still equals what the initial model was fitted on.

mod fingerprint;
mod sensor;

pub use fingerprint::stream_fingerprint;
pub use sensor::{DriftSensor, KsSensor, StubSensor};

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{
    apply_scaler, downsample, fit_scaler, split_initial, BatchStream, LabeledBatch, ScalerParams,
};
use crate::detect::{DetectorConfig, DriftMethod};
use crate::energy::{
    CpuTimeMeter, EnergyLedger, EnergyMeter, LedgerReport, MeasurementScope, Phase, PhaseMeter,
    Span, VirtualCoefficients, VirtualMeter,
};
use crate::error::{Error, Result};
use crate::model::{
    predict_proba, randomized_search, roc_auc, train_forest, SearchSpace, TrainedForest,
};
use crate::policy::{should_retrain, RetrainTrigger, TrainingWindow, WindowPolicy};
use crate::rng_util::{sub_seed, TAG_DETECT, TAG_DOWNSAMPLE, TAG_FOREST, TAG_SEARCH};

/// Which meter a run charges its energy to.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MeterChoice {
    Virtual {
        #[serde(default)]
        coefficients: VirtualCoefficients,
    },
    CpuTime {
        watts: f64,
    },
    #[cfg(feature = "rapl")]
    Rapl,
}

impl Default for MeterChoice {
    fn default() -> Self {
        MeterChoice::Virtual {
            coefficients: VirtualCoefficients::default(),
        }
    }
}

impl MeterChoice {
    pub fn build(&self) -> Result<Box<dyn EnergyMeter>> {
        Ok(match self {
            MeterChoice::Virtual { coefficients } => Box::new(VirtualMeter::new(*coefficients)),
            MeterChoice::CpuTime { watts } => Box::new(CpuTimeMeter::new(*watts)),
            #[cfg(feature = "rapl")]
            MeterChoice::Rapl => Box::new(crate::energy::RaplMeter::discover()?),
        })
    }

    /// Whether concurrent runs in one process would cross-contaminate.
    pub fn requires_serial_execution(&self) -> bool {
        !matches!(self, MeterChoice::Virtual { .. })
    }
}

/// Everything one lifecycle run needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    /// Canonical configuration name; must agree with trigger and window.
    pub name: String,
    pub trigger: RetrainTrigger,
    pub window: WindowPolicy,
    pub search: SearchSpace,
    /// Negatives kept per positive when rebalancing training data (1:k);
    /// `None` trains on the natural distribution.
    pub downsample_ratio: Option<u32>,
    pub meter: MeterChoice,
    pub seed: u64,
    /// Real-world span of the stream, for annual extrapolation.
    pub span: Option<Span>,
}

impl SimulationConfig {
    /// Builds the configuration for one of the canonical names with default
    /// detector, search and meter settings.
    pub fn named(name: &str, window_periods: usize) -> Result<Self> {
        let (trigger, window) = match name {
            "static" => (RetrainTrigger::Static, WindowPolicy::FullHistory),
            "periodic_sw" => (
                RetrainTrigger::Periodic,
                WindowPolicy::SlidingWindow { window_periods },
            ),
            "periodic_fh" => (RetrainTrigger::Periodic, WindowPolicy::FullHistory),
            "ks_all_sw" | "ks_all_fh" | "ks_pca_sw" | "ks_pca_fh" | "ks_fi_sw" | "ks_fi_fh" => {
                let method = match &name[..name.len() - 3] {
                    "ks_all" => DriftMethod::KsAll,
                    "ks_pca" => DriftMethod::KsPca,
                    _ => DriftMethod::KsFi,
                };
                let window = if name.ends_with("_sw") {
                    WindowPolicy::SlidingWindow { window_periods }
                } else {
                    WindowPolicy::FullHistory
                };
                (
                    RetrainTrigger::Informed {
                        detector: DetectorConfig::new(method),
                    },
                    window,
                )
            }
            other => {
                return Err(Error::Configuration(format!(
                    "unknown configuration name `{other}`; valid names: {}",
                    crate::policy::CONFIGURATION_NAMES.join(", ")
                )))
            }
        };
        Ok(Self {
            name: name.to_string(),
            trigger,
            window,
            search: SearchSpace::default(),
            downsample_ratio: Some(10),
            meter: MeterChoice::default(),
            seed: 0,
            span: None,
        })
    }

    /// Applies detector settings when the trigger is informed; no-op
    /// otherwise.
    pub fn with_detector_settings(
        mut self,
        alpha: f64,
        variance_retained: f64,
        max_samples: usize,
    ) -> Self {
        if let RetrainTrigger::Informed { detector } = &mut self.trigger {
            detector.alpha = alpha;
            detector.variance_retained = variance_retained;
            detector.max_samples = max_samples;
        }
        self
    }

    fn canonical_name(&self) -> String {
        let window_suffix = match self.window {
            WindowPolicy::SlidingWindow { .. } => "sw",
            WindowPolicy::FullHistory => "fh",
        };
        match &self.trigger {
            RetrainTrigger::Static => "static".to_string(),
            RetrainTrigger::Periodic => format!("periodic_{window_suffix}"),
            RetrainTrigger::Informed { detector } => {
                format!("{}_{window_suffix}", detector.method.label())
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.window.validate()?;
        if let RetrainTrigger::Informed { detector } = &self.trigger {
            detector.validate()?;
        }
        if let Some(k) = self.downsample_ratio {
            if k < 1 {
                return Err(Error::Configuration(
                    "downsample ratio must be at least 1".into(),
                ));
            }
        }
        // the static configuration carries no window suffix
        let expected = self.canonical_name();
        let consistent = if matches!(self.trigger, RetrainTrigger::Static) {
            self.name == "static"
        } else {
            self.name == expected
        };
        if !consistent {
            return Err(Error::Configuration(format!(
                "name `{}` does not match trigger/window combination `{expected}`",
                self.name
            )));
        }
        Ok(())
    }
}

/// One evaluation period's outcome.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodRecord {
    pub period: usize,
    pub retrained: bool,
    /// `None` for configurations that run no detector.
    pub drift_detected: Option<bool>,
    /// `None` when the period's labels are single-class (excluded from the
    /// mean).
    pub roc_auc: Option<f64>,
    pub train_j: f64,
    pub detect_j: f64,
    pub infer_j: f64,
    /// Rows the model serving this period was trained on.
    pub train_rows: usize,
}

/// Full outcome of one configuration run; the unit of persistence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LifecycleReport {
    pub config: SimulationConfig,
    pub stream_fingerprint: String,
    pub records: Vec<PeriodRecord>,
    pub ledger: LedgerReport,
    pub mean_roc_auc: Option<f64>,
    pub retrain_count: usize,
}

/// Replays the stream under `config` with the configured detector.
pub fn run_lifecycle(stream: &BatchStream, config: &SimulationConfig) -> Result<LifecycleReport> {
    match &config.trigger {
        RetrainTrigger::Informed { detector } => {
            let mut detector = detector.clone();
            detector.seed = sub_seed(config.seed, TAG_DETECT, 0);
            let sensor = KsSensor::new(detector)?;
            run_lifecycle_with_sensor(stream, config, Some(&sensor))
        }
        _ => run_lifecycle_with_sensor(stream, config, None),
    }
}

/// [`run_lifecycle`] with an injected drift sensor, so degenerate detectors
/// (never fire / always fire) can be simulated for equivalence checks.
pub fn run_lifecycle_with_sensor(
    stream: &BatchStream,
    config: &SimulationConfig,
    sensor: Option<&dyn DriftSensor>,
) -> Result<LifecycleReport> {
    config.validate()?;
    let informed = matches!(config.trigger, RetrainTrigger::Informed { .. });
    if informed && sensor.is_none() {
        return Err(Error::Configuration(
            "informed trigger needs a drift sensor".into(),
        ));
    }

    let (train_part, eval_part) = split_initial(stream)?;
    let first_eval_period = eval_part.batches()[0].period;
    let mut meter = config.meter.build()?;
    let mut ledger = EnergyLedger::new(&config.name, config.seed);
    let mut window = TrainingWindow::new(train_part.batches().to_vec(), config.window.clone())?;

    let mut train_events = 0u64;
    let initial = fit_on_window(
        &window,
        config,
        meter.as_mut(),
        &mut ledger,
        first_eval_period,
        &mut train_events,
    )?;
    let (mut scaler, mut model, mut train_rows) = initial;

    let mut records = Vec::with_capacity(eval_part.len());
    let mut retrain_count = 0usize;
    for (i, batch) in eval_part.batches().iter().enumerate() {
        let ordinal = i + 1;
        let period = batch.period;

        let mut scaled_incoming = apply_scaler(&scaler, &batch.features)?;
        let verdict = match (informed, sensor) {
            (true, Some(sensor)) => {
                let scaled_window = apply_scaler(&scaler, &window.merged()?.features)?;
                let mut pm = PhaseMeter::new(meter.as_mut());
                let v = sensor.detect(&scaled_window, &scaled_incoming, Some(&model), &mut pm)?;
                ledger.add(period, Phase::Detect, pm.charged_j())?;
                Some(v)
            }
            _ => None,
        };

        let retrained = should_retrain(&config.trigger, ordinal, verdict.as_ref())?;
        if retrained {
            let refit = fit_on_window(
                &window,
                config,
                meter.as_mut(),
                &mut ledger,
                period,
                &mut train_events,
            )?;
            scaler = refit.0;
            model = refit.1;
            train_rows = refit.2;
            retrain_count += 1;
            scaled_incoming = apply_scaler(&scaler, &batch.features)?;
        }

        let mut pm = PhaseMeter::new(meter.as_mut());
        let scores = pm.measure(MeasurementScope::predict(), || {
            let s = predict_proba(&model, &scaled_incoming);
            (s, scaled_incoming.rows() as f64)
        })??;
        ledger.add(period, Phase::Infer, pm.charged_j())?;

        let auc = match roc_auc(&scores, &batch.labels) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMetric(_)) => {
                log::warn!("period {period}: single-class labels, ROC AUC undefined and excluded from the mean");
                None
            }
            Err(e) => return Err(e),
        };

        let energy = ledger.period_energy(period).copied();
        records.push(PeriodRecord {
            period,
            retrained,
            drift_detected: verdict.as_ref().map(|v| v.drift),
            roc_auc: auc,
            train_j: energy.map_or(0.0, |e| e.train_j),
            detect_j: energy.map_or(0.0, |e| e.detect_j),
            infer_j: energy.map_or(0.0, |e| e.infer_j),
            train_rows,
        });

        window.update(batch.clone())?;
    }

    let defined: Vec<f64> = records.iter().filter_map(|r| r.roc_auc).collect();
    let mean_roc_auc =
        (!defined.is_empty()).then(|| defined.iter().sum::<f64>() / defined.len() as f64);
    Ok(LifecycleReport {
        config: config.clone(),
        stream_fingerprint: stream_fingerprint(stream),
        records,
        ledger: ledger.report(config.span),
        mean_roc_auc,
        retrain_count,
    })
}

/// Scaler fit + rebalancing (unmeasured, by design), then tuning and the
/// final fit inside measured TRAIN scopes charged to `charge_period`.
fn fit_on_window(
    window: &TrainingWindow,
    config: &SimulationConfig,
    meter: &mut dyn EnergyMeter,
    ledger: &mut EnergyLedger,
    charge_period: usize,
    train_events: &mut u64,
) -> Result<(ScalerParams, TrainedForest, usize)> {
    let event = *train_events;
    *train_events += 1;

    let merged = window.merged()?;
    let scaler = fit_scaler(&merged.features)?;
    let scaled = LabeledBatch::new(
        merged.period,
        apply_scaler(&scaler, &merged.features)?,
        merged.labels.clone(),
    )?;
    let train_batch = match config.downsample_ratio {
        Some(k) => downsample(&scaled, k, sub_seed(config.seed, TAG_DOWNSAMPLE, event))?,
        None => scaled,
    };

    let rows = train_batch.len() as f64;
    let mut pm = PhaseMeter::new(meter);
    let (hp, _evaluated) = pm.measure(MeasurementScope::tuning(), || {
        let r = randomized_search(
            &train_batch,
            &config.search,
            sub_seed(config.seed, TAG_SEARCH, event),
        );
        (r, rows * config.search.n_candidates as f64)
    })??;
    let model = pm.measure(MeasurementScope::fit(), || {
        let m = train_forest(&train_batch, &hp, sub_seed(config.seed, TAG_FOREST, event));
        (m, rows)
    })??;
    ledger.add(charge_period, Phase::Train, pm.charged_j())?;
    Ok((scaler, model, train_batch.len()))
}

/// Runs the full (config x seed) grid in an order shuffled by
/// `shuffle_seed`; reports come back in canonical (config, seed) order.
///
/// Execution is serial: one lifecycle owns the process between scope
/// brackets, which any non-virtual meter requires anyway.
pub fn run_experiment_matrix(
    stream: &BatchStream,
    configs: &[SimulationConfig],
    seeds: &[u64],
    shuffle_seed: u64,
) -> Result<Vec<LifecycleReport>> {
    if configs.is_empty() || seeds.is_empty() {
        return Err(Error::Validation(
            "experiment matrix needs at least one configuration and one seed".into(),
        ));
    }
    let mut seen = HashSet::new();
    for config in configs {
        for &seed in seeds {
            if !seen.insert((config.name.clone(), seed)) {
                return Err(Error::Validation(format!(
                    "duplicate (configuration, seed) pair ({}, {seed})",
                    config.name
                )));
            }
        }
    }

    let total = configs.len() * seeds.len();
    let mut order: Vec<usize> = (0..total).collect();
    order.shuffle(&mut ChaCha12Rng::seed_from_u64(shuffle_seed));
    log::info!(
        "experiment matrix: {total} runs, execution order {order:?} (shuffle seed {shuffle_seed})"
    );

    let mut results: Vec<Option<LifecycleReport>> =
        std::iter::repeat_with(|| None).take(total).collect();
    for &slot in &order {
        let config_idx = slot / seeds.len();
        let seed_idx = slot % seeds.len();
        let mut config = configs[config_idx].clone();
        config.seed = seeds[seed_idx];
        log::debug!("running {} seed {}", config.name, config.seed);
        results[slot] = Some(run_lifecycle(stream, &config)?);
    }
    Ok(results
        .into_iter()
        .map(|r| r.expect("every slot executed"))
        .collect())
}

/// Writes one `<config>_seed<k>.json` per report into `out_dir`.
pub fn write_reports(reports: &[LifecycleReport], out_dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut paths = Vec::with_capacity(reports.len());
    for report in reports {
        let path = out_dir.join(format!(
            "{}_seed{}.json",
            report.config.name, report.config.seed
        ));
        let bytes = serde_json::to_vec_pretty(report)
            .map_err(|e| Error::Validation(format!("cannot serialize report: {e}")))?;
        std::fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}
