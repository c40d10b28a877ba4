//! Random forest of CART trees grown on Gini impurity.
//!
//! Each tree sees a bootstrap resample of the training rows and re-draws its
//! candidate features at every split. Trees vote with their leaf majority;
//! the forest's probability is the fraction of votes for θ = 1.

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labels::WINDOW_LEN;
use crate::learners::config::TrainConfig;
use crate::learners::nn::class_weights;
use crate::learners::TrainReport;
use crate::rng::{self, StreamRng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        counts: [usize; 2],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Nodes in an arena; node 0 is the root. Rows with
/// `x[feature] <= threshold` go left.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    fn leaf(&self, x: &[f64; WINDOW_LEN]) -> [usize; 2] {
        let mut at = 0;
        loop {
            match &self.nodes[at] {
                Node::Leaf { counts } => return *counts,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => at = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    /// Majority class of the reached leaf; ties go to class 0.
    pub fn vote(&self, x: &[f64; WINDOW_LEN]) -> u8 {
        let c = self.leaf(x);
        u8::from(c[1] > c[0])
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], at: usize) -> usize {
            match &nodes[at] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

struct Grower<'a> {
    xs: &'a [[f64; WINDOW_LEN]],
    ys: &'a [u8],
    weights: [f64; 2],
    max_depth: usize,
    features_per_split: usize,
    nodes: Vec<Node>,
}

fn gini(w0: f64, w1: f64) -> f64 {
    let t = w0 + w1;
    if t <= 0.0 {
        return 0.0;
    }
    let p = w1 / t;
    2.0 * p * (1.0 - p)
}

impl Grower<'_> {
    fn counts(&self, rows: &[usize]) -> [usize; 2] {
        let ones = rows.iter().filter(|&&r| self.ys[r] == 1).count();
        [rows.len() - ones, ones]
    }

    /// Best threshold on one feature: `(weighted child impurity, threshold)`.
    /// Thresholds are midpoints between consecutive distinct values, scanned
    /// in ascending order; only strict improvements replace the incumbent.
    fn best_on_feature(&self, rows: &[usize], feature: usize) -> Option<(f64, f64)> {
        let mut sorted: Vec<(f64, u8)> = rows.iter().map(|&r| (self.xs[r][feature], self.ys[r])).collect();
        sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
        let (w0, w1) = (self.weights[0], self.weights[1]);
        let total0 = sorted.iter().filter(|s| s.1 == 0).count() as f64 * w0;
        let total1 = sorted.iter().filter(|s| s.1 == 1).count() as f64 * w1;
        let total = total0 + total1;
        let (mut l0, mut l1) = (0.0, 0.0);
        let mut best: Option<(f64, f64)> = None;
        for k in 0..sorted.len() - 1 {
            if sorted[k].1 == 0 {
                l0 += w0;
            } else {
                l1 += w1;
            }
            if sorted[k].0 == sorted[k + 1].0 {
                continue;
            }
            let (r0, r1) = (total0 - l0, total1 - l1);
            let score = ((l0 + l1) * gini(l0, l1) + (r0 + r1) * gini(r0, r1)) / total;
            let threshold = 0.5 * (sorted[k].0 + sorted[k + 1].0);
            if best.is_none_or(|(s, _)| score < s) {
                best = Some((score, threshold));
            }
        }
        best
    }

    fn grow(&mut self, rows: Vec<usize>, depth: usize, rng: &mut StreamRng) -> usize {
        let counts = self.counts(&rows);
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { counts });
        if counts[0] == 0 || counts[1] == 0 || depth >= self.max_depth || rows.len() < 2 {
            return id;
        }
        // Draw candidate features in random order; evaluate the first k in
        // ascending index order, and keep drawing one at a time only while no
        // candidate admits any split.
        let mut order: Vec<usize> = (0..WINDOW_LEN).collect();
        order.shuffle(rng);
        let mut candidates: Vec<usize> = order[..self.features_per_split].to_vec();
        candidates.sort_unstable();
        let mut best: Option<(f64, usize, f64)> = None;
        let consider = |g: &Self, feats: &[usize], best: &mut Option<(f64, usize, f64)>| {
            for &f in feats {
                if let Some((score, thr)) = g.best_on_feature(&rows, f) {
                    if best.is_none_or(|(s, _, _)| score < s) {
                        *best = Some((score, f, thr));
                    }
                }
            }
        };
        consider(self, &candidates, &mut best);
        let mut next = self.features_per_split;
        while best.is_none() && next < WINDOW_LEN {
            consider(self, &order[next..next + 1], &mut best);
            next += 1;
        }
        let Some((_, feature, threshold)) = best else {
            return id;
        };
        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) =
            rows.iter().partition(|&&r| self.xs[r][feature] <= threshold);
        let left = self.grow(left_rows, depth + 1, rng);
        let right = self.grow(right_rows, depth + 1, rng);
        self.nodes[id] = Node::Split {
            feature,
            threshold,
            left,
            right,
        };
        id
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel {
    pub trees: Vec<DecisionTree>,
    pub max_depth: Option<usize>,
    pub features_per_split: usize,
}

impl ForestModel {
    pub fn trees_count(&self) -> usize {
        self.trees.len()
    }

    /// Fraction of trees voting θ = 1.
    pub fn predict_proba(&self, x: &[f64; WINDOW_LEN]) -> f64 {
        let votes: usize = self.trees.iter().map(|t| usize::from(t.vote(x))).sum();
        votes as f64 / self.trees.len() as f64
    }
}

/// Grows tree `index` on its own random stream, so results do not depend on
/// how trees are scheduled across threads.
fn grow_tree(xs: &[[f64; WINDOW_LEN]], ys: &[u8], cfg: &TrainConfig, weights: [f64; 2], index: usize) -> DecisionTree {
    let mut r = rng::stream(cfg.rng_seed, index as u64);
    let n = xs.len();
    let rows: Vec<usize> = if cfg.bootstrap {
        (0..n).map(|_| r.random_range(0..n)).collect()
    } else {
        (0..n).collect()
    };
    let mut g = Grower {
        xs,
        ys,
        weights,
        max_depth: cfg.max_depth.unwrap_or(usize::MAX),
        features_per_split: cfg.features_per_split,
        nodes: Vec::new(),
    };
    g.grow(rows, 0, &mut r);
    DecisionTree { nodes: g.nodes }
}

pub fn train_forest(xs: &[[f64; WINDOW_LEN]], ys: &[u8], cfg: &TrainConfig) -> Result<(ForestModel, TrainReport)> {
    cfg.validate()?;
    if xs.is_empty() {
        return Err(Error::EmptyTrainingSet);
    }
    let weights = class_weights(ys, cfg.class_weights);
    let trees = (0..cfg.trees_count)
        .into_par_iter()
        .map(|i| grow_tree(xs, ys, cfg, weights, i))
        .collect();
    Ok((
        ForestModel {
            trees,
            max_depth: cfg.max_depth,
            features_per_split: cfg.features_per_split,
        },
        TrainReport::default(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn leaf(c0: usize, c1: usize) -> DecisionTree {
        DecisionTree {
            nodes: vec![Node::Leaf { counts: [c0, c1] }],
        }
    }

    #[test]
    fn pure_node_is_a_single_leaf() {
        let xs: Vec<[f64; 7]> = (0..10).map(|i| [i as f64; 7]).collect();
        let cfg = TrainConfig {
            trees_count: 1,
            ..TrainConfig::default()
        };
        let (f, _) = train_forest(&xs, &[1; 10], &cfg).unwrap();
        assert_eq!(f.trees[0].nodes.len(), 1);
        assert_eq!(f.predict_proba(&[3.0; 7]), 1.0);
    }

    #[test]
    fn unlimited_single_tree_memorises_distinct_rows() {
        let mut r = rng::stream(4, 0);
        let xs: Vec<[f64; 7]> = (0..200)
            .map(|_| std::array::from_fn(|_| r.random_range(0.0..1.0)))
            .collect();
        let ys: Vec<u8> = (0..200).map(|_| r.random_range(0..2u8)).collect();
        let cfg = TrainConfig {
            trees_count: 1,
            max_depth: None,
            bootstrap: false,
            ..TrainConfig::default()
        };
        let (f, _) = train_forest(&xs, &ys, &cfg).unwrap();
        let correct = xs
            .iter()
            .zip(&ys)
            .filter(|(x, &y)| u8::from(f.predict_proba(x) > 0.5) == y)
            .count();
        assert_eq!(correct, xs.len());
    }

    #[test]
    fn vote_fraction_and_ties() {
        let f = ForestModel {
            trees: vec![leaf(0, 1), leaf(0, 1), leaf(1, 0)],
            max_depth: None,
            features_per_split: 3,
        };
        assert!((f.predict_proba(&[0.0; 7]) - 2.0 / 3.0).abs() < 1e-15);
        let tied = ForestModel {
            trees: vec![leaf(0, 1), leaf(1, 0)],
            ..f.clone()
        };
        // 0.5 is not above the 0.5 threshold: class 0
        assert_eq!(tied.predict_proba(&[0.0; 7]), 0.5);
        assert_eq!(leaf(2, 2).vote(&[0.0; 7]), 0);
    }

    #[test]
    fn split_ties_prefer_lowest_feature_and_threshold() {
        // features 0 and 1 separate the classes equally well
        let xs: Vec<[f64; 7]> = vec![
            [0.0, 0.0, 5.0, 5.0, 5.0, 5.0, 5.0],
            [1.0, 1.0, 5.0, 5.0, 5.0, 5.0, 5.0],
            [2.0, 2.0, 5.0, 5.0, 5.0, 5.0, 5.0],
            [3.0, 3.0, 5.0, 5.0, 5.0, 5.0, 5.0],
        ];
        let ys = [0, 0, 1, 1];
        let cfg = TrainConfig {
            trees_count: 1,
            bootstrap: false,
            features_per_split: 7,
            ..TrainConfig::default()
        };
        let (f, _) = train_forest(&xs, &ys, &cfg).unwrap();
        match &f.trees[0].nodes[0] {
            Node::Split { feature, threshold, .. } => {
                assert_eq!(*feature, 0);
                assert_eq!(*threshold, 1.5);
            }
            other => panic!("expected split, got {other:?}"),
        }
    }

    #[test]
    fn depth_limit_respected_and_features_in_range() {
        let mut r = rng::stream(8, 0);
        let xs: Vec<[f64; 7]> = (0..300)
            .map(|_| std::array::from_fn(|_| r.random_range(0.0..1.0)))
            .collect();
        let ys: Vec<u8> = (0..300).map(|_| r.random_range(0..2u8)).collect();
        let cfg = TrainConfig {
            trees_count: 5,
            max_depth: Some(3),
            ..TrainConfig::default()
        };
        let (f, _) = train_forest(&xs, &ys, &cfg).unwrap();
        for t in &f.trees {
            assert!(t.depth() <= 3);
            for n in &t.nodes {
                if let Node::Split { feature, .. } = n {
                    assert!(*feature < 7);
                }
            }
        }
    }

    #[test]
    fn invalid_config_rejected() {
        let xs = vec![[0.0; 7]; 3];
        let cfg = TrainConfig {
            features_per_split: 0,
            ..TrainConfig::default()
        };
        assert!(train_forest(&xs, &[0, 1, 0], &cfg).is_err());
    }
}
