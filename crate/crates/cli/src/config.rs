//! TOML config file: flat sections shared by `generate` and `simulate`.
//!
//! ```toml
//! [run]
//! configurations = ["static", "periodic_sw", "ks_fi_sw"]
//! span_value = 6.0
//! span_unit = "months"
//!
//! [detector]
//! alpha = 0.05
//! variance_retained = 0.95
//! max_samples = 5000
//!
//! [search]
//! n_trees = [50, 100, 200]
//! max_depth = [4, 8, 16, 0]        # 0 means unbounded
//! min_samples_leaf = [1, 2, 5]
//! max_features = ["sqrt", "half", "all"]
//! n_candidates = 10
//! holdout_fraction = 0.2
//!
//! [downsample]
//! ratio = 10                       # 0 disables rebalancing
//!
//! [window]
//! sliding_periods = 12             # default: initial training period count
//!
//! [synthetic]
//! n_features = 20
//! n_periods = 24
//! samples_per_period = 1000
//! failure_rate = 0.1
//! label_signal_features = [0, 1, 2]
//! seed = 42
//! drift_events = [{ period = 8, feature = 0, shift = 3.0 }]
//! ```

use serde::Deserialize;

use driftwatt::dataset::{DriftEvent, SyntheticDriftSpec};
use driftwatt::energy::{Span, SpanUnit, VirtualCoefficients};
use driftwatt::model::{MaxFeaturesSpec, SearchSpace};
use driftwatt::sim::MeterChoice;

use crate::CliError;

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub run: Option<RunSection>,
    pub detector: Option<DetectorSection>,
    pub search: Option<SearchSection>,
    pub downsample: Option<DownsampleSection>,
    pub window: Option<WindowSection>,
    pub meter: Option<MeterSection>,
    pub synthetic: Option<SyntheticSection>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub configurations: Vec<String>,
    pub span_value: Option<f64>,
    pub span_unit: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DetectorSection {
    pub alpha: Option<f64>,
    pub variance_retained: Option<f64>,
    pub max_samples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SearchSection {
    pub n_trees: Option<Vec<usize>>,
    /// 0 encodes "unbounded".
    pub max_depth: Option<Vec<usize>>,
    pub min_samples_leaf: Option<Vec<usize>>,
    /// "sqrt" | "half" | "all" | an explicit count like "4".
    pub max_features: Option<Vec<String>>,
    pub bootstrap_fraction: Option<f64>,
    pub n_candidates: Option<usize>,
    pub holdout_fraction: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DownsampleSection {
    pub ratio: Option<u32>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WindowSection {
    pub sliding_periods: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeterSection {
    pub train_j_per_unit: Option<f64>,
    pub detect_j_per_unit: Option<f64>,
    pub infer_j_per_unit: Option<f64>,
    pub watts: Option<f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSection {
    pub n_features: usize,
    pub n_periods: usize,
    pub samples_per_period: usize,
    pub failure_rate: f64,
    pub label_signal_features: Option<Vec<usize>>,
    pub seed: Option<u64>,
    pub drift_events: Option<Vec<DriftEventEntry>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftEventEntry {
    pub period: usize,
    pub feature: usize,
    pub shift: f64,
}

impl FileConfig {
    pub fn parse(path: &std::path::Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| CliError::config(format!("invalid config {}: {e}", path.display())))
    }

    pub fn synthetic_spec(&self) -> Result<SyntheticDriftSpec, CliError> {
        let section = self
            .synthetic
            .as_ref()
            .ok_or_else(|| CliError::config("config file is missing the [synthetic] section"))?;
        Ok(SyntheticDriftSpec {
            n_features: section.n_features,
            n_periods: section.n_periods,
            samples_per_period: section.samples_per_period,
            failure_rate: section.failure_rate,
            drift_events: section
                .drift_events
                .clone()
                .unwrap_or_default()
                .into_iter()
                .map(|e| DriftEvent {
                    period: e.period,
                    feature: e.feature,
                    shift: e.shift,
                })
                .collect(),
            label_signal_features: section.label_signal_features.clone().unwrap_or_default(),
            seed: section.seed.unwrap_or(0),
        })
    }

    pub fn span(&self) -> Result<Option<Span>, CliError> {
        let Some(run) = &self.run else {
            return Ok(None);
        };
        match (run.span_value, run.span_unit.as_deref()) {
            (None, None) => Ok(None),
            (Some(value), Some(unit)) => {
                let unit = match unit {
                    "weeks" => SpanUnit::Weeks,
                    "months" => SpanUnit::Months,
                    other => {
                        return Err(CliError::config(format!(
                            "span_unit must be `weeks` or `months`, got `{other}`"
                        )))
                    }
                };
                Ok(Some(Span { value, unit }))
            }
            _ => Err(CliError::config(
                "span_value and span_unit must be set together",
            )),
        }
    }

    pub fn search_space(&self) -> Result<SearchSpace, CliError> {
        let mut space = SearchSpace::default();
        let Some(s) = &self.search else {
            return Ok(space);
        };
        if let Some(v) = &s.n_trees {
            space.n_trees = v.clone();
        }
        if let Some(v) = &s.max_depth {
            space.max_depth = v
                .iter()
                .map(|&d| if d == 0 { None } else { Some(d) })
                .collect();
        }
        if let Some(v) = &s.min_samples_leaf {
            space.min_samples_leaf = v.clone();
        }
        if let Some(v) = &s.max_features {
            space.max_features = v
                .iter()
                .map(|raw| match raw.as_str() {
                    "sqrt" => Ok(MaxFeaturesSpec::Sqrt),
                    "half" => Ok(MaxFeaturesSpec::Half),
                    "all" => Ok(MaxFeaturesSpec::All),
                    other => other
                        .parse::<usize>()
                        .map(MaxFeaturesSpec::Exact)
                        .map_err(|_| {
                            CliError::config(format!(
                                "max_features entry `{other}` is not sqrt/half/all or a count"
                            ))
                        }),
                })
                .collect::<Result<_, _>>()?;
        }
        if let Some(v) = s.bootstrap_fraction {
            space.bootstrap_fraction = v;
        }
        if let Some(v) = s.n_candidates {
            space.n_candidates = v;
        }
        if let Some(v) = s.holdout_fraction {
            space.holdout_fraction = v;
        }
        Ok(space)
    }

    pub fn downsample_ratio(&self) -> Option<u32> {
        match self.downsample.as_ref().and_then(|d| d.ratio) {
            Some(0) => None,
            Some(k) => Some(k),
            None => Some(10),
        }
    }

    pub fn meter_choice(&self, kind: crate::MeterArg) -> MeterChoice {
        let section = self.meter.as_ref();
        match kind {
            crate::MeterArg::Virtual => {
                let defaults = VirtualCoefficients::default();
                MeterChoice::Virtual {
                    coefficients: VirtualCoefficients {
                        train_j_per_unit: section
                            .and_then(|m| m.train_j_per_unit)
                            .unwrap_or(defaults.train_j_per_unit),
                        detect_j_per_unit: section
                            .and_then(|m| m.detect_j_per_unit)
                            .unwrap_or(defaults.detect_j_per_unit),
                        infer_j_per_unit: section
                            .and_then(|m| m.infer_j_per_unit)
                            .unwrap_or(defaults.infer_j_per_unit),
                    },
                }
            }
            crate::MeterArg::CpuTime => MeterChoice::CpuTime {
                watts: section.and_then(|m| m.watts).unwrap_or(65.0),
            },
        }
    }
}
