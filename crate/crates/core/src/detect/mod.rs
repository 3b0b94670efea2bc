//! Unsupervised drift detectors comparing a training window against an
//! incoming batch.
//!
//! All three variants run per-dimension two-sample KS tests and combine them
//! with a Bonferroni-corrected min-p rule; they differ in which dimensions
//! are tested:
//!
//! - `KsAll` tests every raw feature,
//! - `KsPca` refits PCA on the training window and tests the retained
//!   components,
//! - `KsFi` tests only the features whose Gini importance (from the
//!   currently deployed model) is at least the mean importance.
//!
//! Detection is staged as reduce -> estimate -> test so an instrumented
//! caller can meter each stage; [`detect_drift`] composes the stages.

mod ks;
mod pca;

pub use ks::{ks_pvalue, ks_statistic};
pub use pca::{fit_pca, project, PcaProjection};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};
use crate::model::TrainedForest;

/// Smallest window a KS comparison is considered meaningful on.
pub const MIN_WINDOW_ROWS: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftMethod {
    KsAll,
    KsPca,
    KsFi,
}

impl DriftMethod {
    pub fn label(self) -> &'static str {
        match self {
            DriftMethod::KsAll => "ks_all",
            DriftMethod::KsPca => "ks_pca",
            DriftMethod::KsFi => "ks_fi",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    pub method: DriftMethod,
    /// Family-wise significance level before correction.
    pub alpha: f64,
    /// Variance fraction PCA must retain (KsPca only).
    pub variance_retained: f64,
    /// Per-window subsample cap; larger windows are subsampled without
    /// replacement before testing.
    pub max_samples: usize,
    /// Seed for the subsampling draw.
    pub seed: u64,
}

impl DetectorConfig {
    pub fn new(method: DriftMethod) -> Self {
        Self {
            method,
            alpha: 0.05,
            variance_retained: 0.95,
            max_samples: 5000,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Configuration(format!(
                "alpha {} outside (0, 1)",
                self.alpha
            )));
        }
        if !(self.variance_retained > 0.0 && self.variance_retained <= 1.0) {
            return Err(Error::Configuration(format!(
                "variance_retained {} outside (0, 1]",
                self.variance_retained
            )));
        }
        if self.max_samples < MIN_WINDOW_ROWS {
            return Err(Error::Configuration(format!(
                "max_samples must be at least {MIN_WINDOW_ROWS}"
            )));
        }
        Ok(())
    }
}

/// KS outcome for one tested dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DimensionStat {
    /// Feature index (KsAll/KsFi) or component index (KsPca).
    pub dimension: usize,
    pub statistic: f64,
    pub p_value: f64,
}

/// Outcome of one detector run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftVerdict {
    pub drift: bool,
    pub per_dimension: Vec<DimensionStat>,
    pub corrected_alpha: f64,
    pub method: DetectorConfig,
    pub dimensions_tested: usize,
}

/// One tested dimension's paired samples.
#[derive(Debug, Clone)]
pub struct DimensionSample {
    pub dimension: usize,
    pub train: Vec<f64>,
    pub incoming: Vec<f64>,
}

/// Output of the reduction stage: subsampled, transformed columns.
#[derive(Debug, Clone)]
pub struct ReducedWindows {
    pub dimensions: Vec<DimensionSample>,
}

/// Output of the distribution-estimation stage: columns sorted ascending,
/// i.e. the empirical CDFs in compact form.
#[derive(Debug, Clone)]
pub struct SortedWindows {
    pub dimensions: Vec<DimensionSample>,
}

/// Indices whose importance is at least the arithmetic mean importance.
///
/// An all-zero vector keeps every index (mean 0, and 0 >= 0).
pub fn select_important_features(importances: &[f64]) -> Result<Vec<usize>> {
    if importances.is_empty() {
        return Err(Error::Schema("empty importance vector".into()));
    }
    if importances.iter().any(|&v| v < 0.0 || !v.is_finite()) {
        return Err(Error::Validation(
            "importances must be finite and non-negative".into(),
        ));
    }
    let mean = importances.iter().sum::<f64>() / importances.len() as f64;
    Ok((0..importances.len())
        .filter(|&i| importances[i] >= mean)
        .collect())
}

/// Subsamples both windows to the configured cap and produces the dimension
/// columns the chosen method will test.
pub fn reduce_dimensions(
    config: &DetectorConfig,
    train_window: &FeatureMatrix,
    incoming: &FeatureMatrix,
    importances: Option<&[f64]>,
) -> Result<ReducedWindows> {
    config.validate()?;
    if train_window.cols() != incoming.cols() {
        return Err(Error::Schema(format!(
            "training window has {} features, incoming batch {}",
            train_window.cols(),
            incoming.cols()
        )));
    }
    if train_window.rows() < MIN_WINDOW_ROWS || incoming.rows() < MIN_WINDOW_ROWS {
        return Err(Error::InsufficientData(format!(
            "both windows need at least {MIN_WINDOW_ROWS} rows, got {} and {}",
            train_window.rows(),
            incoming.rows()
        )));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(config.seed);
    let train_sub = subsample(train_window, config.max_samples, &mut rng)?;
    let incoming_sub = subsample(incoming, config.max_samples, &mut rng)?;

    let columns = |ids: &[usize], a: &FeatureMatrix, b: &FeatureMatrix| -> Vec<DimensionSample> {
        ids.iter()
            .map(|&c| DimensionSample {
                dimension: c,
                train: a.column(c),
                incoming: b.column(c),
            })
            .collect()
    };

    let dimensions = match config.method {
        DriftMethod::KsAll => {
            let ids: Vec<usize> = (0..train_sub.cols()).collect();
            columns(&ids, &train_sub, &incoming_sub)
        }
        DriftMethod::KsFi => {
            let importances = importances.ok_or_else(|| {
                Error::Configuration("KS-FI requires a fitted model's feature importances".into())
            })?;
            if importances.len() != train_sub.cols() {
                return Err(Error::Schema(format!(
                    "{} importances for {} features",
                    importances.len(),
                    train_sub.cols()
                )));
            }
            let ids = select_important_features(importances)?;
            columns(&ids, &train_sub, &incoming_sub)
        }
        DriftMethod::KsPca => {
            let projection = fit_pca(&train_sub, config.variance_retained)?;
            let train_p = project(&projection, &train_sub)?;
            let incoming_p = project(&projection, &incoming_sub)?;
            let ids: Vec<usize> = (0..projection.k()).collect();
            columns(&ids, &train_p, &incoming_p)
        }
    };
    Ok(ReducedWindows { dimensions })
}

/// Builds the empirical CDFs by sorting each column pair.
pub fn estimate_distributions(mut reduced: ReducedWindows) -> SortedWindows {
    for dim in &mut reduced.dimensions {
        dim.train.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
        dim.incoming
            .sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    }
    SortedWindows {
        dimensions: reduced.dimensions,
    }
}

/// Runs the per-dimension KS tests and the Bonferroni-corrected decision.
pub fn apply_tests(sorted: &SortedWindows, config: &DetectorConfig) -> Result<DriftVerdict> {
    let dims = sorted.dimensions.len();
    if dims == 0 {
        return Err(Error::Validation("no dimensions to test".into()));
    }
    let corrected_alpha = config.alpha / dims as f64;
    let mut per_dimension = Vec::with_capacity(dims);
    let mut min_p = f64::INFINITY;
    for dim in &sorted.dimensions {
        let d = ks::ks_statistic_sorted(&dim.train, &dim.incoming);
        let p = ks_pvalue(d, dim.train.len(), dim.incoming.len())?;
        min_p = min_p.min(p);
        per_dimension.push(DimensionStat {
            dimension: dim.dimension,
            statistic: d,
            p_value: p,
        });
    }
    Ok(DriftVerdict {
        drift: min_p < corrected_alpha,
        per_dimension,
        corrected_alpha,
        method: config.clone(),
        dimensions_tested: dims,
    })
}

/// One-shot detection: reduce, estimate, test.
pub fn detect_drift(
    config: &DetectorConfig,
    train_window: &FeatureMatrix,
    incoming: &FeatureMatrix,
    model: Option<&TrainedForest>,
) -> Result<DriftVerdict> {
    detect_drift_with_importances(
        config,
        train_window,
        incoming,
        model.map(|m| m.importances()),
    )
}

/// [`detect_drift`] for callers that hold importances without a full model.
pub fn detect_drift_with_importances(
    config: &DetectorConfig,
    train_window: &FeatureMatrix,
    incoming: &FeatureMatrix,
    importances: Option<&[f64]>,
) -> Result<DriftVerdict> {
    if config.method == DriftMethod::KsFi && importances.is_none() {
        return Err(Error::Configuration(
            "KS-FI requires a fitted model's feature importances".into(),
        ));
    }
    let reduced = reduce_dimensions(config, train_window, incoming, importances)?;
    let sorted = estimate_distributions(reduced);
    apply_tests(&sorted, config)
}

fn subsample(data: &FeatureMatrix, cap: usize, rng: &mut ChaCha12Rng) -> Result<FeatureMatrix> {
    if data.rows() <= cap {
        return Ok(data.clone());
    }
    let mut keep: Vec<usize> = rand::seq::index::sample(rng, data.rows(), cap).into_vec();
    keep.sort_unstable();
    data.select_rows(&keep)
}
