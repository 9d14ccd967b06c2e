//! Random forest of Gini-impurity CART trees.
//!
//! Each tree is grown on a bootstrap resample drawn from its own stream
//! `rng::mix(seed, tree_index)`, so trees can be built in parallel without
//! affecting the result. Splits have the form `x[f] <= t` where `t` is a
//! training value of feature `f`; the tree therefore depends only on the
//! per-feature ordering of the training data.

use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::Encoded;
use crate::error::{Error, Result};
use crate::rng::{mix, rng_from_seed, Rng};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    /// `None` grows trees until leaves are pure.
    pub max_depth: Option<usize>,
    /// Features examined per split; `None` means `floor(sqrt(d))`.
    pub features_per_split: Option<usize>,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            max_depth: None,
            features_per_split: None,
            bootstrap: true,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { class } => return class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[feature] <= threshold { left } else { right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest {
    pub trees: Vec<Tree>,
}

fn gini(counts: &[usize], n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    let n = n as f64;
    1.0 - counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>()
}

/// Majority class, ties to the smallest class index.
fn majority(counts: &[usize]) -> usize {
    let mut best = 0;
    for (k, &c) in counts.iter().enumerate() {
        if c > counts[best] {
            best = k;
        }
    }
    best
}

struct Builder<'a> {
    data: &'a Encoded<'a>,
    max_depth: Option<usize>,
    per_split: usize,
    nodes: Vec<Node>,
    rng: Rng,
    features: Vec<usize>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    impurity: f64,
}

impl Builder<'_> {
    fn counts(&self, idx: &[usize]) -> Vec<usize> {
        let mut c = vec![0; self.data.n_classes];
        for &i in idx {
            c[self.data.targets[i]] += 1;
        }
        c
    }

    fn grow(&mut self, idx: &mut [usize], depth: usize) -> usize {
        let counts = self.counts(idx);
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.max_depth.is_some_and(|m| depth >= m);
        let slot = self.nodes.len();
        self.nodes.push(Node::Leaf {
            class: majority(&counts),
        });
        if pure || depth_reached || idx.len() < 2 {
            return slot;
        }
        let Some(best) = self.best_split(idx) else {
            return slot;
        };

        // Partition in place, preserving relative order on each side.
        let (mut l, mut r): (Vec<usize>, Vec<usize>) = idx
            .iter()
            .partition(|&&i| self.data.rows[i][best.feature] <= best.threshold);
        let left = self.grow(&mut l, depth + 1);
        let right = self.grow(&mut r, depth + 1);
        self.nodes[slot] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        slot
    }

    /// Examine features in a random order until `per_split` non-constant
    /// ones have been scored; keep the lowest weighted child impurity.
    fn best_split(&mut self, idx: &[usize]) -> Option<BestSplit> {
        self.features.shuffle(&mut self.rng);
        let n = idx.len();
        let k = self.data.n_classes;
        let mut best: Option<BestSplit> = None;
        let mut scored = 0;
        let mut order: Vec<usize> = idx.to_vec();
        for fi in 0..self.features.len() {
            if scored == self.per_split {
                break;
            }
            let f = self.features[fi];
            let rows = &self.data.rows;
            order.copy_from_slice(idx);
            order.sort_by(|&a, &b| rows[a][f].total_cmp(&rows[b][f]));
            if rows[order[0]][f] == rows[order[n - 1]][f] {
                continue;
            }
            scored += 1;

            let mut left = vec![0usize; k];
            let mut right = self.counts(idx);
            for pos in 0..n - 1 {
                let i = order[pos];
                let t = self.data.targets[i];
                left[t] += 1;
                right[t] -= 1;
                let v = rows[i][f];
                let next = rows[order[pos + 1]][f];
                if v == next {
                    continue;
                }
                let nl = pos + 1;
                let nr = n - nl;
                let imp = (nl as f64 * gini(&left, nl) + nr as f64 * gini(&right, nr)) / n as f64;
                if best.as_ref().is_none_or(|b| imp < b.impurity) {
                    best = Some(BestSplit {
                        feature: f,
                        threshold: v,
                        impurity: imp,
                    });
                }
            }
        }
        best
    }
}

impl Forest {
    pub(crate) fn fit(cfg: &ForestConfig, data: &Encoded<'_>) -> Result<Self> {
        if cfg.n_trees == 0 {
            return Err(Error::InvalidArgument("forest needs at least one tree".into()));
        }
        let d = data.dims;
        let per_split = cfg
            .features_per_split
            .unwrap_or_else(|| (d as f64).sqrt().floor() as usize)
            .clamp(1, d.max(1));
        let n = data.rows.len();
        let trees = (0..cfg.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut rng = rng_from_seed(mix(cfg.seed, t as u64));
                let mut idx: Vec<usize> = if cfg.bootstrap {
                    let mut s: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
                    s.sort_unstable();
                    s
                } else {
                    (0..n).collect()
                };
                let mut b = Builder {
                    data,
                    max_depth: cfg.max_depth,
                    per_split,
                    nodes: Vec::new(),
                    rng,
                    features: (0..d).collect(),
                };
                b.grow(&mut idx, 0);
                Tree { nodes: b.nodes }
            })
            .collect();
        Ok(Forest { trees })
    }

    /// Majority vote; ties go to the earliest class.
    pub fn predict(&self, x: &[f64], n_classes: usize) -> usize {
        let mut votes = vec![0usize; n_classes];
        for t in &self.trees {
            votes[t.predict(x)] += 1;
        }
        majority(&votes)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn encoded<'a>(rows: &'a [Vec<f64>], targets: &[usize], n_classes: usize) -> Encoded<'a> {
        Encoded {
            rows: rows.iter().map(|r| r.as_slice()).collect(),
            targets: targets.to_vec(),
            n_classes,
            dims: rows[0].len(),
        }
    }

    #[test]
    fn gini_values() {
        assert_eq!(gini(&[4, 0], 4), 0.0);
        assert_eq!(gini(&[2, 2], 4), 0.5);
    }

    #[test]
    fn stump_matches_exhaustive_split_search() {
        let xs = [0.3, 1.2, 2.0, 2.5, 3.1, 4.4, 5.0, 6.2];
        let ys = [0, 0, 1, 0, 1, 1, 1, 1];
        let rows: Vec<Vec<f64>> = xs.iter().map(|&x| vec![x]).collect();
        let data = encoded(&rows, &ys, 2);
        let cfg = ForestConfig {
            n_trees: 1,
            max_depth: Some(1),
            bootstrap: false,
            ..Default::default()
        };
        let f = Forest::fit(&cfg, &data).unwrap();

        // Oracle: try every cut between sorted points, weighted Gini.
        let mut best = (f64::INFINITY, 0usize);
        for cut in 1..xs.len() {
            let (l, r) = ys.split_at(cut);
            let g = |s: &[usize]| {
                let p = s.iter().filter(|&&y| y == 1).count() as f64 / s.len() as f64;
                1.0 - p * p - (1.0 - p) * (1.0 - p)
            };
            let imp = (l.len() as f64 * g(l) + r.len() as f64 * g(r)) / xs.len() as f64;
            if imp < best.0 {
                best = (imp, cut);
            }
        }
        let threshold = xs[best.1 - 1];
        let side_label = |s: &[usize]| {
            let ones = s.iter().filter(|&&y| y == 1).count();
            usize::from(ones * 2 > s.len())
        };
        let (l, r) = ys.split_at(best.1);
        let (ll, rl) = (side_label(l), side_label(r));
        for probe in [-1.0, 0.3, 1.0, 1.2, 1.5, 2.0, 2.2, 3.0, 7.0] {
            let expect = if probe <= threshold { ll } else { rl };
            assert_eq!(f.predict(&[probe], 2), expect, "probe {probe}");
        }
        assert_eq!(f.trees[0].depth(), 1);
    }

    #[test]
    fn separable_data_fits_exactly() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![(i % 10) as f64, if i < 10 { 0.0 } else { 5.0 }])
            .collect();
        let ys: Vec<usize> = (0..20).map(|i| usize::from(i >= 10)).collect();
        let data = encoded(&rows, &ys, 2);
        let f = Forest::fit(&ForestConfig { n_trees: 15, seed: 3, ..Default::default() }, &data).unwrap();
        for (r, &y) in rows.iter().zip(&ys) {
            assert_eq!(f.predict(r, 2), y);
        }
    }

    #[test]
    fn zero_trees_rejected() {
        let rows = vec![vec![0.0], vec![1.0]];
        let data = encoded(&rows, &[0, 1], 2);
        let cfg = ForestConfig { n_trees: 0, ..Default::default() };
        assert!(Forest::fit(&cfg, &data).is_err());
    }

    #[test]
    fn vote_ties_go_to_first_class() {
        assert_eq!(majority(&[2, 2, 1]), 0);
        assert_eq!(majority(&[1, 3, 3]), 1);
    }
}
