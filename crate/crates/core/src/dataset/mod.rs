//! Time-batched labeled data streams: loading, validation, scaling,
//! class rebalancing and synthetic generation.

mod csv_io;
mod synthetic;

pub use csv_io::{load_csv_stream, write_csv_stream};
pub use synthetic::{generate_synthetic_stream, DriftEvent, SyntheticDriftSpec};

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major numeric matrix with named columns.
///
/// All values are finite; `feature_names.len()` always equals `cols`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    feature_names: Vec<String>,
}

impl FeatureMatrix {
    pub fn new(
        values: Vec<f64>,
        rows: usize,
        cols: usize,
        feature_names: Vec<String>,
    ) -> Result<Self> {
        if cols == 0 {
            return Err(Error::Schema(
                "feature matrix needs at least one column".into(),
            ));
        }
        if feature_names.len() != cols {
            return Err(Error::Schema(format!(
                "{} feature names for {} columns",
                feature_names.len(),
                cols
            )));
        }
        if values.len() != rows * cols {
            return Err(Error::Schema(format!(
                "value buffer holds {} entries, expected {}x{}",
                values.len(),
                rows,
                cols
            )));
        }
        if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite value at row {} column {}",
                bad / cols,
                bad % cols
            )));
        }
        Ok(Self {
            rows,
            cols,
            values,
            feature_names,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    /// Copies one column out as a vector.
    pub fn column(&self, col: usize) -> Vec<f64> {
        (0..self.rows).map(|r| self.get(r, col)).collect()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// New matrix containing the given rows, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.cols);
        for &i in indices {
            if i >= self.rows {
                return Err(Error::Validation(format!("row index {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
        }
        Self::new(values, indices.len(), self.cols, self.feature_names.clone())
    }

    /// New matrix containing the given columns, in the given order.
    pub fn select_columns(&self, indices: &[usize]) -> Result<Self> {
        for &c in indices {
            if c >= self.cols {
                return Err(Error::Schema(format!("column index {c} out of range")));
            }
        }
        let names = indices
            .iter()
            .map(|&c| self.feature_names[c].clone())
            .collect();
        let mut values = Vec::with_capacity(self.rows * indices.len());
        for r in 0..self.rows {
            for &c in indices {
                values.push(self.get(r, c));
            }
        }
        Self::new(values, self.rows, indices.len(), names)
    }

    /// Stacks matrices with identical schemas on top of each other.
    pub fn vstack(parts: &[&FeatureMatrix]) -> Result<Self> {
        let first = parts
            .first()
            .ok_or_else(|| Error::Validation("cannot stack zero matrices".into()))?;
        let mut values = Vec::new();
        let mut rows = 0;
        for part in parts {
            if part.feature_names != first.feature_names {
                return Err(Error::Schema(
                    "stacked matrices must share feature names".into(),
                ));
            }
            values.extend_from_slice(&part.values);
            rows += part.rows;
        }
        Self::new(values, rows, first.cols, first.feature_names.clone())
    }
}

/// One period's worth of labeled samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledBatch {
    pub period: usize,
    pub features: FeatureMatrix,
    pub labels: Vec<u8>,
}

impl LabeledBatch {
    pub fn new(period: usize, features: FeatureMatrix, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != features.rows() {
            return Err(Error::Schema(format!(
                "{} labels for {} rows",
                labels.len(),
                features.rows()
            )));
        }
        if let Some(bad) = labels.iter().find(|&&l| l > 1) {
            return Err(Error::Validation(format!(
                "label {bad} is not binary (expected 0 or 1)"
            )));
        }
        Ok(Self {
            period,
            features,
            labels,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn positives(&self) -> usize {
        self.labels.iter().filter(|&&l| l == 1).count()
    }

    pub fn negatives(&self) -> usize {
        self.len() - self.positives()
    }
}

/// Ordered sequence of batches with consecutive periods and a shared schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchStream {
    batches: Vec<LabeledBatch>,
}

impl BatchStream {
    /// Builds a stream whose periods run contiguously from 0.
    pub fn new(batches: Vec<LabeledBatch>) -> Result<Self> {
        Self::validate_consecutive(&batches, Some(0))?;
        Ok(Self { batches })
    }

    /// Stream slice produced by a split; periods are consecutive but may
    /// start anywhere.
    fn from_slice(batches: Vec<LabeledBatch>) -> Result<Self> {
        Self::validate_consecutive(&batches, None)?;
        Ok(Self { batches })
    }

    fn validate_consecutive(batches: &[LabeledBatch], start: Option<usize>) -> Result<()> {
        if let (Some(start), Some(first)) = (start, batches.first()) {
            if first.period != start {
                return Err(Error::Validation(format!(
                    "first period is {}, expected {start}",
                    first.period
                )));
            }
        }
        for pair in batches.windows(2) {
            if pair[1].period != pair[0].period + 1 {
                return Err(Error::Validation(format!(
                    "periods {} and {} are not consecutive",
                    pair[0].period, pair[1].period
                )));
            }
            if pair[1].features.feature_names() != pair[0].features.feature_names() {
                return Err(Error::Schema("batches disagree on feature names".into()));
            }
        }
        Ok(())
    }

    pub fn batches(&self) -> &[LabeledBatch] {
        &self.batches
    }

    pub fn len(&self) -> usize {
        self.batches.len()
    }

    pub fn is_empty(&self) -> bool {
        self.batches.is_empty()
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.batches.first().map(|b| b.features.feature_names())
    }
}

/// Per-feature standardization parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
}

impl ScalerParams {
    pub fn len(&self) -> usize {
        self.means.len()
    }

    pub fn is_empty(&self) -> bool {
        self.means.is_empty()
    }
}

/// Per-column mean and population standard deviation of the training data.
pub fn fit_scaler(train: &FeatureMatrix) -> Result<ScalerParams> {
    if train.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "scaler needs at least 2 rows, got {}",
            train.rows()
        )));
    }
    let n = train.rows() as f64;
    let mut means = vec![0.0; train.cols()];
    for r in 0..train.rows() {
        for (c, m) in means.iter_mut().enumerate() {
            *m += train.get(r, c);
        }
    }
    for m in &mut means {
        *m /= n;
    }
    let mut stds = vec![0.0; train.cols()];
    for r in 0..train.rows() {
        for (c, s) in stds.iter_mut().enumerate() {
            let d = train.get(r, c) - means[c];
            *s += d * d;
        }
    }
    for s in &mut stds {
        *s = (*s / n).sqrt();
    }
    Ok(ScalerParams { means, stds })
}

/// Standardizes `data` with previously fitted parameters.
///
/// Zero-variance columns map to 0 so constant sensors do not poison a run.
pub fn apply_scaler(params: &ScalerParams, data: &FeatureMatrix) -> Result<FeatureMatrix> {
    if data.cols() != params.len() {
        return Err(Error::Schema(format!(
            "scaler fitted on {} columns, data has {}",
            params.len(),
            data.cols()
        )));
    }
    let mut values = Vec::with_capacity(data.rows() * data.cols());
    for r in 0..data.rows() {
        for c in 0..data.cols() {
            let v = if params.stds[c] == 0.0 {
                0.0
            } else {
                (data.get(r, c) - params.means[c]) / params.stds[c]
            };
            values.push(v);
        }
    }
    FeatureMatrix::new(
        values,
        data.rows(),
        data.cols(),
        data.feature_names().to_vec(),
    )
}

/// Subsamples negatives down to `ratio` per positive (1:k), keeping every
/// positive. Returns the batch unchanged when it is already at least that
/// balanced. Row order of the kept samples is preserved.
pub fn downsample(batch: &LabeledBatch, ratio: u32, seed: u64) -> Result<LabeledBatch> {
    if ratio < 1 {
        return Err(Error::Validation(
            "downsample ratio must be at least 1".into(),
        ));
    }
    let positives: Vec<usize> = (0..batch.len()).filter(|&i| batch.labels[i] == 1).collect();
    if positives.is_empty() {
        return Err(Error::EmptyClass(
            "cannot downsample a batch with no positive samples".into(),
        ));
    }
    let negatives: Vec<usize> = (0..batch.len()).filter(|&i| batch.labels[i] == 0).collect();
    let target = ratio as usize * positives.len();
    if negatives.len() <= target {
        return Ok(batch.clone());
    }
    let mut rng = ChaCha12Rng::seed_from_u64(seed);
    let picked = rand::seq::index::sample(&mut rng, negatives.len(), target);
    let mut keep: Vec<usize> = positives;
    keep.extend(picked.iter().map(|i| negatives[i]));
    keep.sort_unstable();
    let features = batch.features.select_rows(&keep)?;
    let labels = keep.iter().map(|&i| batch.labels[i]).collect();
    LabeledBatch::new(batch.period, features, labels)
}

/// Splits a stream into the initial training portion (first ⌈P/2⌉ periods)
/// and the evaluation portion (the rest, original period indices kept).
pub fn split_initial(stream: &BatchStream) -> Result<(BatchStream, BatchStream)> {
    if stream.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "cannot split a stream of {} period(s)",
            stream.len()
        )));
    }
    let cut = stream.len().div_ceil(2);
    let train = stream.batches[..cut].to_vec();
    let eval = stream.batches[cut..].to_vec();
    Ok((
        BatchStream::from_slice(train)?,
        BatchStream::from_slice(eval)?,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[f64]]) -> FeatureMatrix {
        let cols = rows[0].len();
        let names = (0..cols).map(|i| format!("f{i}")).collect();
        let values = rows.iter().flat_map(|r| r.iter().copied()).collect();
        FeatureMatrix::new(values, rows.len(), cols, names).unwrap()
    }

    fn batch(period: usize, rows: &[&[f64]], labels: &[u8]) -> LabeledBatch {
        LabeledBatch::new(period, matrix(rows), labels.to_vec()).unwrap()
    }

    #[test]
    fn matrix_rejects_non_finite() {
        let err = FeatureMatrix::new(vec![1.0, f64::NAN], 1, 2, vec!["a".into(), "b".into()]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn batch_rejects_non_binary_label() {
        let err = LabeledBatch::new(0, matrix(&[&[1.0]]), vec![2]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }

    #[test]
    fn scaler_single_column_hand_values() {
        // column [1, 3]: mean 2, population std 1
        let p = fit_scaler(&matrix(&[&[1.0], &[3.0]])).unwrap();
        assert_eq!(p.means, vec![2.0]);
        assert_eq!(p.stds, vec![1.0]);
    }

    #[test]
    fn scaler_constant_column_has_zero_std() {
        let p = fit_scaler(&matrix(&[&[5.0], &[5.0], &[5.0]])).unwrap();
        assert_eq!(p.means, vec![5.0]);
        assert_eq!(p.stds, vec![0.0]);
    }

    #[test]
    fn scaler_columns_are_independent() {
        let p = fit_scaler(&matrix(&[&[1.0, 10.0], &[3.0, 30.0]])).unwrap();
        assert_eq!(p.means, vec![2.0, 20.0]);
        assert_eq!(p.stds, vec![1.0, 10.0]);
    }

    #[test]
    fn scaler_needs_two_rows() {
        assert!(matches!(
            fit_scaler(&matrix(&[&[1.0]])),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn apply_scaler_definition_and_degenerate_column() {
        let params = ScalerParams {
            means: vec![2.0, 7.0],
            stds: vec![1.0, 0.0],
        };
        let out = apply_scaler(&params, &matrix(&[&[3.0, 123.0]])).unwrap();
        assert_eq!(out.get(0, 0), 1.0);
        assert_eq!(out.get(0, 1), 0.0);
    }

    #[test]
    fn apply_scaler_dimension_mismatch() {
        let params = ScalerParams {
            means: vec![0.0],
            stds: vec![1.0],
        };
        assert!(matches!(
            apply_scaler(&params, &matrix(&[&[1.0, 2.0]])),
            Err(Error::Schema(_))
        ));
    }

    #[test]
    fn standardizing_fit_data_centers_it() {
        let data = matrix(&[&[1.0, 4.0], &[2.0, 4.0], &[6.0, 4.0]]);
        let params = fit_scaler(&data).unwrap();
        let out = apply_scaler(&params, &data).unwrap();
        for c in 0..out.cols() {
            let mean: f64 = out.column(c).iter().sum::<f64>() / out.rows() as f64;
            assert!(mean.abs() < 1e-9);
        }
    }

    #[test]
    fn downsample_reaches_one_to_k() {
        let rows: Vec<Vec<f64>> = (0..205).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let mut labels = vec![0u8; 205];
        for l in labels.iter_mut().take(5) {
            *l = 1;
        }
        let b = batch(0, &refs, &labels);
        let out = downsample(&b, 10, 7).unwrap();
        assert_eq!(out.len(), 55);
        assert_eq!(out.positives(), 5);
    }

    #[test]
    fn downsample_is_noop_when_balanced_enough() {
        let rows: Vec<Vec<f64>> = (0..35).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let mut labels = vec![0u8; 35];
        for l in labels.iter_mut().take(5) {
            *l = 1;
        }
        let b = batch(0, &refs, &labels);
        let out = downsample(&b, 10, 7).unwrap();
        assert_eq!(out, b);
    }

    #[test]
    fn downsample_requires_positives() {
        let b = batch(0, &[&[1.0], &[2.0]], &[0, 0]);
        assert!(matches!(downsample(&b, 10, 7), Err(Error::EmptyClass(_))));
    }

    #[test]
    fn downsample_deterministic_given_seed() {
        let rows: Vec<Vec<f64>> = (0..120).map(|i| vec![i as f64]).collect();
        let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
        let mut labels = vec![0u8; 120];
        labels[3] = 1;
        labels[77] = 1;
        let b = batch(0, &refs, &labels);
        assert_eq!(
            downsample(&b, 10, 42).unwrap(),
            downsample(&b, 10, 42).unwrap()
        );
    }

    #[test]
    fn split_halves_even_stream() {
        let batches: Vec<LabeledBatch> = (0..10)
            .map(|p| batch(p, &[&[1.0], &[2.0]], &[0, 1]))
            .collect();
        let stream = BatchStream::new(batches).unwrap();
        let (train, eval) = split_initial(&stream).unwrap();
        assert_eq!(train.len(), 5);
        assert_eq!(eval.len(), 5);
        assert_eq!(eval.batches()[0].period, 5);
    }

    #[test]
    fn split_gives_extra_period_to_training() {
        let batches: Vec<LabeledBatch> = (0..3).map(|p| batch(p, &[&[1.0]], &[1])).collect();
        let stream = BatchStream::new(batches).unwrap();
        let (train, eval) = split_initial(&stream).unwrap();
        assert_eq!(train.len(), 2);
        assert_eq!(eval.len(), 1);
    }

    #[test]
    fn split_needs_two_batches() {
        let stream = BatchStream::new(vec![batch(0, &[&[1.0]], &[1])]).unwrap();
        assert!(matches!(
            split_initial(&stream),
            Err(Error::InsufficientData(_))
        ));
    }

    #[test]
    fn stream_rejects_gap_in_periods() {
        let err = BatchStream::new(vec![batch(0, &[&[1.0]], &[1]), batch(2, &[&[1.0]], &[1])]);
        assert!(matches!(err, Err(Error::Validation(_))));
    }
}
