//! Random-forest training, tuning and evaluation.

mod metrics;
mod search;
mod tree;

pub use metrics::roc_auc;
pub use search::{randomized_search, MaxFeaturesSpec, SearchSpace};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{FeatureMatrix, LabeledBatch};
use crate::error::{Error, Result};
use tree::{DecisionTree, TreeParams};

/// Hyperparameters of one forest fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestHyperparams {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure or too small to split.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    /// Number of features considered per split.
    pub max_features: usize,
    /// Fraction of rows drawn (with replacement) per tree.
    pub bootstrap_fraction: f64,
}

impl ForestHyperparams {
    fn validate(&self, n_features: usize) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::Validation("n_trees must be at least 1".into()));
        }
        if self.min_samples_leaf < 1 {
            return Err(Error::Validation(
                "min_samples_leaf must be at least 1".into(),
            ));
        }
        if !(self.bootstrap_fraction > 0.0 && self.bootstrap_fraction <= 1.0) {
            return Err(Error::Validation(format!(
                "bootstrap_fraction {} outside (0, 1]",
                self.bootstrap_fraction
            )));
        }
        if self.max_features < 1 || self.max_features > n_features {
            return Err(Error::Validation(format!(
                "max_features {} outside [1, {n_features}]",
                self.max_features
            )));
        }
        Ok(())
    }
}

/// A fitted ensemble plus its normalized Gini importances.
#[derive(Debug, Clone)]
pub struct TrainedForest {
    trees: Vec<DecisionTree>,
    hyperparams: ForestHyperparams,
    importances: Vec<f64>,
    train_size: usize,
    n_features: usize,
}

impl TrainedForest {
    pub fn hyperparams(&self) -> &ForestHyperparams {
        &self.hyperparams
    }

    /// Per-feature Gini importances: each feature's share of the total
    /// weighted impurity decrease. Sums to 1 when any split exists,
    /// all-zero otherwise.
    pub fn importances(&self) -> &[f64] {
        &self.importances
    }

    pub fn train_size(&self) -> usize {
        self.train_size
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Per-tree positive-class leaf frequencies, one inner vector per tree.
    /// Mostly useful for inspecting how the ensemble average forms.
    pub fn per_tree_probabilities(&self, data: &FeatureMatrix) -> Result<Vec<Vec<f64>>> {
        self.check_cols(data)?;
        Ok(self
            .trees
            .iter()
            .map(|t| {
                (0..data.rows())
                    .map(|r| t.predict_row(data.row(r)))
                    .collect()
            })
            .collect())
    }

    fn check_cols(&self, data: &FeatureMatrix) -> Result<()> {
        if data.cols() != self.n_features {
            return Err(Error::Schema(format!(
                "model trained on {} features, data has {}",
                self.n_features,
                data.cols()
            )));
        }
        Ok(())
    }
}

/// Fits `hp.n_trees` trees on bootstrap samples of `train`.
///
/// Tree `t` draws from a ChaCha stream seeded with `seed + t`, so fits are
/// reproducible and trees could be built concurrently without changing the
/// result.
pub fn train_forest(
    train: &LabeledBatch,
    hp: &ForestHyperparams,
    seed: u64,
) -> Result<TrainedForest> {
    hp.validate(train.features.cols())?;
    let n = train.len();
    let pos = train.positives();
    if pos == 0 || pos == n {
        return Err(Error::EmptyClass(format!(
            "training set has {pos} positives out of {n} samples; both classes required"
        )));
    }
    let n_draws = ((hp.bootstrap_fraction * n as f64).round() as usize).max(1);
    let params = TreeParams {
        max_depth: hp.max_depth,
        min_samples_leaf: hp.min_samples_leaf,
        max_features: hp.max_features,
    };
    let mut raw_importances = vec![0.0; train.features.cols()];
    let mut trees = Vec::with_capacity(hp.n_trees);
    for t in 0..hp.n_trees {
        let mut rng = ChaCha12Rng::seed_from_u64(seed.wrapping_add(t as u64));
        let rows: Vec<usize> = (0..n_draws).map(|_| rng.random_range(0..n)).collect();
        trees.push(DecisionTree::fit(
            &train.features,
            &train.labels,
            rows,
            &params,
            &mut rng,
            &mut raw_importances,
        ));
    }
    let total: f64 = raw_importances.iter().sum();
    let importances = if total > 0.0 {
        raw_importances.iter().map(|v| v / total).collect()
    } else {
        raw_importances
    };
    Ok(TrainedForest {
        trees,
        hyperparams: hp.clone(),
        importances,
        train_size: n,
        n_features: train.features.cols(),
    })
}

/// Mean positive-class leaf frequency across trees, one value per row.
pub fn predict_proba(model: &TrainedForest, data: &FeatureMatrix) -> Result<Vec<f64>> {
    model.check_cols(data)?;
    let k = model.trees.len() as f64;
    Ok((0..data.rows())
        .map(|r| {
            let row = data.row(r);
            model.trees.iter().map(|t| t.predict_row(row)).sum::<f64>() / k
        })
        .collect())
}

/// Convenience accessor matching the importances stored on the model.
pub fn gini_importances(model: &TrainedForest) -> &[f64] {
    model.importances()
}
