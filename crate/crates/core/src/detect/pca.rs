//! PCA by eigendecomposition of the sample covariance matrix.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::dataset::FeatureMatrix;
use crate::error::{Error, Result};

/// Eigenvalues this far below the total variance count as rank deficiency.
const RANK_EPS: f64 = 1e-12;

/// An orthonormal projection retaining a target fraction of variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaProjection {
    /// k rows, each a unit-length component in feature space.
    components: Vec<Vec<f64>>,
    /// Per-component variance, non-increasing.
    explained_variance: Vec<f64>,
    /// Column means of the fit data.
    center: Vec<f64>,
    input_dims: usize,
}

impl PcaProjection {
    pub fn k(&self) -> usize {
        self.components.len()
    }

    pub fn components(&self) -> &[Vec<f64>] {
        &self.components
    }

    pub fn explained_variance(&self) -> &[f64] {
        &self.explained_variance
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }

    pub fn input_dims(&self) -> usize {
        self.input_dims
    }
}

/// Centers `reference`, eigendecomposes its covariance and keeps the
/// smallest leading set of components whose cumulative explained-variance
/// fraction reaches `variance_retained`.
pub fn fit_pca(reference: &FeatureMatrix, variance_retained: f64) -> Result<PcaProjection> {
    if reference.rows() < 2 {
        return Err(Error::InsufficientData(format!(
            "PCA needs at least 2 rows, got {}",
            reference.rows()
        )));
    }
    if !(variance_retained > 0.0 && variance_retained <= 1.0) {
        return Err(Error::Validation(format!(
            "variance_retained {variance_retained} outside (0, 1]"
        )));
    }
    let n = reference.rows();
    let d = reference.cols();
    let mut center = vec![0.0; d];
    for r in 0..n {
        for (c, m) in center.iter_mut().enumerate() {
            *m += reference.get(r, c);
        }
    }
    for m in &mut center {
        *m /= n as f64;
    }

    let mut cov = DMatrix::<f64>::zeros(d, d);
    for r in 0..n {
        let row = reference.row(r);
        for i in 0..d {
            let di = row[i] - center[i];
            for j in i..d {
                cov[(i, j)] += di * (row[j] - center[j]);
            }
        }
    }
    let denom = (n - 1) as f64;
    for i in 0..d {
        for j in i..d {
            cov[(i, j)] /= denom;
            cov[(j, i)] = cov[(i, j)];
        }
    }

    let eigen = cov.symmetric_eigen();
    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eigen.eigenvalues[b]
            .partial_cmp(&eigen.eigenvalues[a])
            .expect("finite")
    });

    let raw_total: f64 = eigen.eigenvalues.iter().map(|&v| v.max(0.0)).sum();
    let cutoff = raw_total * RANK_EPS;
    let clamped: Vec<f64> = order
        .iter()
        .map(|&i| {
            let v = eigen.eigenvalues[i];
            if v > cutoff {
                v
            } else {
                0.0
            }
        })
        .collect();
    let total: f64 = clamped.iter().sum();

    let k = if total == 0.0 {
        1
    } else {
        let mut cum = 0.0;
        let mut k = clamped.len();
        for (i, v) in clamped.iter().enumerate() {
            cum += v;
            if cum / total >= variance_retained {
                k = i + 1;
                break;
            }
        }
        k
    };

    let mut components = Vec::with_capacity(k);
    for &i in order.iter().take(k) {
        let col: DVector<f64> = eigen.eigenvectors.column(i).into();
        let mut v: Vec<f64> = col.iter().copied().collect();
        // deterministic sign: largest-magnitude entry points positive
        let pivot = v
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).expect("finite"))
            .map(|(i, _)| i)
            .unwrap_or(0);
        if v[pivot] < 0.0 {
            for x in &mut v {
                *x = -*x;
            }
        }
        components.push(v);
    }

    Ok(PcaProjection {
        components,
        explained_variance: clamped[..k].to_vec(),
        center,
        input_dims: d,
    })
}

/// Projects `data` onto the retained components: `(data - center) ⋅ Cᵀ`.
pub fn project(p: &PcaProjection, data: &FeatureMatrix) -> Result<FeatureMatrix> {
    if data.cols() != p.input_dims {
        return Err(Error::Schema(format!(
            "projection fitted on {} dims, data has {}",
            p.input_dims,
            data.cols()
        )));
    }
    let names: Vec<String> = (0..p.k()).map(|i| format!("pc{i}")).collect();
    let mut values = Vec::with_capacity(data.rows() * p.k());
    for r in 0..data.rows() {
        let row = data.row(r);
        for comp in &p.components {
            let mut dot = 0.0;
            for (c, &w) in comp.iter().enumerate() {
                dot += (row[c] - p.center[c]) * w;
            }
            values.push(dot);
        }
    }
    FeatureMatrix::new(values, data.rows(), p.k(), names)
}
