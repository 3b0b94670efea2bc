//! Binary classification tree with axis-aligned Gini splits.
//!
//! Split candidates are midpoints between consecutive sorted unique feature
//! values. Ties between splits break toward the lowest feature index, then
//! the lowest threshold, so fitting is fully deterministic given the RNG
//! stream that picks the per-node feature subset.

use rand_chacha::ChaCha12Rng;

use crate::dataset::FeatureMatrix;

#[derive(Debug, Clone)]
enum Node {
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
    Leaf {
        positive_fraction: f64,
    },
}

#[derive(Debug, Clone)]
pub(crate) struct DecisionTree {
    nodes: Vec<Node>,
}

pub(crate) struct TreeParams {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub max_features: usize,
}

struct SplitChoice {
    feature: usize,
    threshold: f64,
    decrease: f64,
}

fn gini(pos: usize, total: usize) -> f64 {
    if total == 0 {
        return 0.0;
    }
    let p = pos as f64 / total as f64;
    let q = 1.0 - p;
    1.0 - p * p - q * q
}

impl DecisionTree {
    /// Fits on the rows named by `rows` (bootstrap indices, duplicates
    /// allowed). Weighted impurity decreases are accumulated per feature
    /// into `importance_accum`, normalized against `n_root` rows.
    pub(crate) fn fit(
        features: &FeatureMatrix,
        labels: &[u8],
        rows: Vec<usize>,
        params: &TreeParams,
        rng: &mut ChaCha12Rng,
        importance_accum: &mut [f64],
    ) -> Self {
        let n_root = rows.len();
        let mut nodes = Vec::new();
        nodes.push(Node::Leaf {
            positive_fraction: 0.0,
        });
        // (row set, depth, slot to fill)
        let mut work = vec![(rows, 0usize, 0usize)];
        while let Some((rows, depth, slot)) = work.pop() {
            let pos = rows.iter().filter(|&&r| labels[r] == 1).count();
            let n = rows.len();
            let at_depth_limit = params.max_depth.is_some_and(|d| depth >= d);
            let splittable =
                pos > 0 && pos < n && n >= 2 * params.min_samples_leaf && !at_depth_limit;
            let choice = if splittable {
                best_split(features, labels, &rows, params, rng)
            } else {
                None
            };
            match choice {
                Some(split) => {
                    importance_accum[split.feature] += (n as f64 / n_root as f64) * split.decrease;
                    let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                        .into_iter()
                        .partition(|&r| features.get(r, split.feature) <= split.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf {
                        positive_fraction: 0.0,
                    });
                    let right = nodes.len();
                    nodes.push(Node::Leaf {
                        positive_fraction: 0.0,
                    });
                    nodes[slot] = Node::Split {
                        feature: split.feature,
                        threshold: split.threshold,
                        left,
                        right,
                    };
                    // push right first so the left branch is processed first
                    work.push((right_rows, depth + 1, right));
                    work.push((left_rows, depth + 1, left));
                }
                None => {
                    nodes[slot] = Node::Leaf {
                        positive_fraction: pos as f64 / n as f64,
                    };
                }
            }
        }
        Self { nodes }
    }

    pub(crate) fn predict_row(&self, row: &[f64]) -> f64 {
        let mut at = 0usize;
        loop {
            match &self.nodes[at] {
                Node::Leaf { positive_fraction } => return *positive_fraction,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    at = if row[*feature] <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn node_count(&self) -> usize {
        self.nodes.len()
    }
}

fn best_split(
    features: &FeatureMatrix,
    labels: &[u8],
    rows: &[usize],
    params: &TreeParams,
    rng: &mut ChaCha12Rng,
) -> Option<SplitChoice> {
    let d = features.cols();
    let mut candidates: Vec<usize> = if params.max_features >= d {
        (0..d).collect()
    } else {
        rand::seq::index::sample(rng, d, params.max_features).into_vec()
    };
    // ascending order makes the lowest-feature tie-break fall out of the scan
    candidates.sort_unstable();

    let n = rows.len();
    let total_pos = rows.iter().filter(|&&r| labels[r] == 1).count();
    let parent_gini = gini(total_pos, n);
    let mut best: Option<SplitChoice> = None;
    let mut column: Vec<(f64, u8)> = Vec::with_capacity(n);
    for &feature in &candidates {
        column.clear();
        column.extend(rows.iter().map(|&r| (features.get(r, feature), labels[r])));
        column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite features"));
        let mut left_pos = 0usize;
        for i in 0..n - 1 {
            left_pos += usize::from(column[i].1 == 1);
            if column[i].0 == column[i + 1].0 {
                continue;
            }
            let left_n = i + 1;
            let right_n = n - left_n;
            if left_n < params.min_samples_leaf || right_n < params.min_samples_leaf {
                continue;
            }
            let right_pos = total_pos - left_pos;
            let decrease = parent_gini
                - (left_n as f64 / n as f64) * gini(left_pos, left_n)
                - (right_n as f64 / n as f64) * gini(right_pos, right_n);
            if decrease > 0.0 && best.as_ref().is_none_or(|b| decrease > b.decrease) {
                best = Some(SplitChoice {
                    feature,
                    threshold: (column[i].0 + column[i + 1].0) / 2.0,
                    decrease,
                });
            }
        }
    }
    best
}
