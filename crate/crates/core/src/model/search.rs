//! Randomized hyperparameter search scored on a stratified holdout.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::LabeledBatch;
use crate::error::{Error, Result};
use crate::model::{predict_proba, roc_auc, train_forest, ForestHyperparams};
use crate::rng_util::{sub_seed, TAG_CANDIDATE};

const MAX_SPLIT_ATTEMPTS: usize = 5;

/// How many features each split may consider, resolved against the data
/// width at search time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeaturesSpec {
    /// round(sqrt(d))
    Sqrt,
    /// d / 2
    Half,
    /// every feature
    All,
    Exact(usize),
}

impl MaxFeaturesSpec {
    fn resolve(self, n_features: usize) -> Result<usize> {
        let v = match self {
            MaxFeaturesSpec::Sqrt => (n_features as f64).sqrt().round() as usize,
            MaxFeaturesSpec::Half => n_features / 2,
            MaxFeaturesSpec::All => n_features,
            MaxFeaturesSpec::Exact(k) => {
                if k < 1 || k > n_features {
                    return Err(Error::Validation(format!(
                        "max_features {k} outside [1, {n_features}]"
                    )));
                }
                k
            }
        };
        Ok(v.clamp(1, n_features))
    }
}

/// Candidate pools for each hyperparameter plus the sampling budget.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SearchSpace {
    pub n_trees: Vec<usize>,
    pub max_depth: Vec<Option<usize>>,
    pub min_samples_leaf: Vec<usize>,
    pub max_features: Vec<MaxFeaturesSpec>,
    pub bootstrap_fraction: f64,
    pub n_candidates: usize,
    pub holdout_fraction: f64,
}

impl Default for SearchSpace {
    fn default() -> Self {
        Self {
            n_trees: vec![50, 100, 200],
            max_depth: vec![Some(4), Some(8), Some(16), None],
            min_samples_leaf: vec![1, 2, 5],
            max_features: vec![
                MaxFeaturesSpec::Sqrt,
                MaxFeaturesSpec::Half,
                MaxFeaturesSpec::All,
            ],
            bootstrap_fraction: 1.0,
            n_candidates: 10,
            holdout_fraction: 0.2,
        }
    }
}

impl SearchSpace {
    fn validate(&self) -> Result<()> {
        if self.n_candidates < 1 {
            return Err(Error::Validation("n_candidates must be at least 1".into()));
        }
        if !(self.holdout_fraction > 0.0 && self.holdout_fraction < 1.0) {
            return Err(Error::Validation(format!(
                "holdout_fraction {} outside (0, 1)",
                self.holdout_fraction
            )));
        }
        if self.n_trees.is_empty()
            || self.max_depth.is_empty()
            || self.min_samples_leaf.is_empty()
            || self.max_features.is_empty()
        {
            return Err(Error::Validation(
                "every hyperparameter pool needs at least one entry".into(),
            ));
        }
        Ok(())
    }

    fn sample(&self, rng: &mut ChaCha12Rng, n_features: usize) -> Result<ForestHyperparams> {
        let pick = |rng: &mut ChaCha12Rng, len: usize| rng.random_range(0..len);
        Ok(ForestHyperparams {
            n_trees: self.n_trees[pick(rng, self.n_trees.len())],
            max_depth: self.max_depth[pick(rng, self.max_depth.len())],
            min_samples_leaf: self.min_samples_leaf[pick(rng, self.min_samples_leaf.len())],
            max_features: self.max_features[pick(rng, self.max_features.len())]
                .resolve(n_features)?,
            bootstrap_fraction: self.bootstrap_fraction,
        })
    }
}

/// Samples `n_candidates` configurations, scores each by holdout ROC AUC and
/// returns the best (earliest sampled wins ties) plus the count evaluated.
///
/// The caller is expected to refit the winning configuration on the full
/// training window.
pub fn randomized_search(
    train: &LabeledBatch,
    space: &SearchSpace,
    seed: u64,
) -> Result<(ForestHyperparams, usize)> {
    space.validate()?;
    let pos: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == 1).collect();
    let neg: Vec<usize> = (0..train.len()).filter(|&i| train.labels[i] == 0).collect();
    if pos.len() < 2 || neg.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "search needs at least 2 samples per class, got {} positive / {} negative",
            pos.len(),
            neg.len()
        )));
    }

    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let (fit_part, holdout_part) =
        stratified_split(train, &pos, &neg, space.holdout_fraction, &mut rng)?;

    let mut best: Option<(ForestHyperparams, f64)> = None;
    for i in 0..space.n_candidates {
        let hp = space.sample(&mut rng, train.features.cols())?;
        let model = train_forest(&fit_part, &hp, sub_seed(seed, TAG_CANDIDATE, i as u64))?;
        let scores = predict_proba(&model, &holdout_part.features)?;
        let score = roc_auc(&scores, &holdout_part.labels)?;
        if best.as_ref().is_none_or(|(_, s)| score > *s) {
            best = Some((hp, score));
        }
    }
    let (hp, _) = best.expect("n_candidates >= 1");
    Ok((hp, space.n_candidates))
}

fn stratified_split(
    train: &LabeledBatch,
    pos: &[usize],
    neg: &[usize],
    holdout_fraction: f64,
    rng: &mut ChaCha12Rng,
) -> Result<(LabeledBatch, LabeledBatch)> {
    let take = |n: usize| (((holdout_fraction * n as f64).round() as usize).max(1)).min(n - 1);
    let mut pos = pos.to_vec();
    let mut neg = neg.to_vec();
    for _ in 0..MAX_SPLIT_ATTEMPTS {
        pos.shuffle(rng);
        neg.shuffle(rng);
        let mut holdout: Vec<usize> = pos[..take(pos.len())].to_vec();
        holdout.extend_from_slice(&neg[..take(neg.len())]);
        let mut fit: Vec<usize> = pos[take(pos.len())..].to_vec();
        fit.extend_from_slice(&neg[take(neg.len())..]);
        holdout.sort_unstable();
        fit.sort_unstable();
        let part = |idx: &[usize]| -> Result<LabeledBatch> {
            LabeledBatch::new(
                train.period,
                train.features.select_rows(idx)?,
                idx.iter().map(|&i| train.labels[i]).collect(),
            )
        };
        let fit_part = part(&fit)?;
        let holdout_part = part(&holdout)?;
        let two_classes = |b: &LabeledBatch| b.positives() > 0 && b.positives() < b.len();
        if two_classes(&fit_part) && two_classes(&holdout_part) {
            return Ok((fit_part, holdout_part));
        }
    }
    Err(Error::Stratification(format!(
        "could not form two-class partitions in {MAX_SPLIT_ATTEMPTS} attempts"
    )))
}
