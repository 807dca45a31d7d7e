//! Bagged CART regression forest with mean-decrease-in-impurity importances.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::AnalysisError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    /// Features considered per split; `None` means `ceil(p / 3)`.
    pub max_features: Option<usize>,
    pub min_samples_leaf: usize,
    pub seed: u64,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 200,
            max_features: None,
            min_samples_leaf: 1,
            seed: 0,
        }
    }
}

impl ForestParams {
    pub fn resolved_max_features(&self, n_features: usize) -> usize {
        self.max_features
            .unwrap_or_else(|| n_features.div_ceil(3))
            .clamp(1, n_features.max(1))
    }
}

#[derive(Debug, Clone)]
enum Node {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone)]
struct Tree {
    nodes: Vec<Node>,
    /// Impurity decrease per feature, weighted by the node's share of the
    /// bootstrap sample.
    importance: Vec<f64>,
}

impl Tree {
    fn predict(&self, row: &[f64]) -> f64 {
        let mut at = 0;
        loop {
            match self.nodes[at] {
                Node::Leaf(v) => return v,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if row[feature] <= threshold { left } else { right },
            }
        }
    }

    #[cfg(test)]
    pub(crate) fn is_leaf(&self) -> bool {
        self.nodes.len() == 1
    }
}

struct Candidate {
    feature: usize,
    threshold: f64,
    gain: f64,
}

struct Grower<'a> {
    x: &'a [Vec<f64>],
    y: &'a [f64],
    max_features: usize,
    min_leaf: usize,
    total: f64,
    nodes: Vec<Node>,
    importance: Vec<f64>,
}

/// Sum of squared deviations from the mean.
fn sse(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let (n, sum) = values.clone().fold((0usize, 0.0), |(n, s), v| (n + 1, s + v));
    let mean = sum / n as f64;
    (mean, values.map(|v| (v - mean) * (v - mean)).sum())
}

impl Grower<'_> {
    fn best_split_on(&self, rows: &[usize], feature: usize, parent_sse: f64, mean: f64) -> Option<Candidate> {
        let mut sorted: Vec<usize> = rows.to_vec();
        sorted.sort_by(|&a, &b| self.x[a][feature].total_cmp(&self.x[b][feature]));
        let n = sorted.len();
        let total_sum: f64 = sorted.iter().map(|&r| self.y[r] - mean).sum();
        let total_sq: f64 = sorted.iter().map(|&r| (self.y[r] - mean).powi(2)).sum();
        let mut best: Option<Candidate> = None;
        let (mut ls, mut lq) = (0.0, 0.0);
        for i in 0..n - 1 {
            let d = self.y[sorted[i]] - mean;
            ls += d;
            lq += d * d;
            let (lo, hi) = (self.x[sorted[i]][feature], self.x[sorted[i + 1]][feature]);
            if lo == hi {
                continue;
            }
            let nl = (i + 1) as f64;
            let nr = (n - i - 1) as f64;
            if (i + 1) < self.min_leaf || (n - i - 1) < self.min_leaf {
                continue;
            }
            let rs = total_sum - ls;
            let rq = total_sq - lq;
            let child = (lq - ls * ls / nl) + (rq - rs * rs / nr);
            let gain = parent_sse - child;
            if best.as_ref().is_none_or(|b| gain > b.gain) {
                best = Some(Candidate {
                    feature,
                    threshold: 0.5 * (lo + hi),
                    gain,
                });
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, rng: &mut ChaCha8Rng) -> usize {
        let id = self.nodes.len();
        let (mean, parent_sse) = sse(rows.iter().map(|&r| self.y[r]));
        self.nodes.push(Node::Leaf(mean));
        let tolerance = 1e-12 * (1.0 + parent_sse);
        if rows.len() < 2 * self.min_leaf || parent_sse <= tolerance {
            return id;
        }

        let n_features = self.x[0].len();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(rng);
        let mut best: Option<Candidate> = None;
        for (visited, &feature) in order.iter().enumerate() {
            // keep drawing features past the budget until some split helps
            if visited >= self.max_features && best.is_some() {
                break;
            }
            if let Some(c) = self.best_split_on(&rows, feature, parent_sse, mean) {
                if c.gain > tolerance && best.as_ref().is_none_or(|b| c.gain > b.gain) {
                    best = Some(c);
                }
            }
        }
        let Some(split) = best else {
            return id;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x[r][split.feature] <= split.threshold);
        self.importance[split.feature] += split.gain / self.total;
        let left = self.grow(left_rows, rng);
        let right = self.grow(right_rows, rng);
        self.nodes[id] = Node::Split {
            feature: split.feature,
            threshold: split.threshold,
            left,
            right,
        };
        id
    }
}

fn tree_rng(seed: u64, tree: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(tree as u64);
    rng
}

#[derive(Debug, Clone)]
pub struct RegressionForest {
    trees: Vec<Tree>,
    n_features: usize,
    params: ForestParams,
}

impl RegressionForest {
    /// Fits `n_trees` trees, each on a bootstrap resample. Per-tree streams
    /// are derived from `(seed, tree index)`.
    pub fn fit(x: &[Vec<f64>], y: &[f64], params: &ForestParams) -> Result<Self, AnalysisError> {
        Self::fit_mapped(x, y, params, |i| i)
    }

    /// Like [`fit`](Self::fit) but passes every bootstrap draw through
    /// `row_map` before use.
    fn fit_mapped(
        x: &[Vec<f64>],
        y: &[f64],
        params: &ForestParams,
        row_map: impl Fn(usize) -> usize,
    ) -> Result<Self, AnalysisError> {
        let n = y.len();
        if n < 2 || x.len() != n {
            return Err(AnalysisError::TooFewSamples(n.min(x.len())));
        }
        let n_features = x[0].len();
        if n_features == 0 || x.iter().any(|row| row.len() != n_features) {
            return Err(AnalysisError::RaggedFeatures);
        }
        if x.iter().flatten().chain(y).any(|v| !v.is_finite()) {
            return Err(AnalysisError::NonFinite);
        }
        if params.n_trees == 0 || params.min_samples_leaf == 0 {
            return Err(AnalysisError::BadForestParams);
        }
        let max_features = params.resolved_max_features(n_features);
        let trees = (0..params.n_trees)
            .map(|t| {
                let mut rng = tree_rng(params.seed, t);
                let rows: Vec<usize> = (0..n).map(|_| row_map(rng.gen_range(0..n))).collect();
                let mut grower = Grower {
                    x,
                    y,
                    max_features,
                    min_leaf: params.min_samples_leaf,
                    total: n as f64,
                    nodes: Vec::new(),
                    importance: vec![0.0; n_features],
                };
                grower.grow(rows, &mut rng);
                Tree {
                    nodes: grower.nodes,
                    importance: grower.importance,
                }
            })
            .collect();
        Ok(RegressionForest {
            trees,
            n_features,
            params: ForestParams {
                max_features: Some(max_features),
                ..params.clone()
            },
        })
    }

    pub fn params(&self) -> &ForestParams {
        &self.params
    }

    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    pub fn predict(&self, row: &[f64]) -> f64 {
        self.trees.iter().map(|t| t.predict(row)).sum::<f64>() / self.trees.len() as f64
    }

    /// Mean decrease in impurity, averaged over trees and normalized to sum
    /// to one. All zeros when no tree ever split.
    pub fn feature_importance(&self) -> Vec<f64> {
        let mut acc = vec![0.0; self.n_features];
        for tree in &self.trees {
            for (a, v) in acc.iter_mut().zip(&tree.importance) {
                *a += v;
            }
        }
        let total: f64 = acc.iter().sum();
        if total > 0.0 {
            acc.iter_mut().for_each(|a| *a /= total);
        }
        acc
    }
}
