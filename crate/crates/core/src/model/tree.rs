//! Gini classification tree used by the random forest.
//!
//! Splits send `x <= threshold` left, where the threshold is one of the
//! training values of the feature. Candidate splits are compared exactly in
//! integer arithmetic, so ties resolve to the earliest candidate in
//! evaluation order: features ascending, thresholds ascending.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::corpus::PersonalityClass;
use crate::rng::ChaCha8Rng;

const K: usize = PersonalityClass::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Node {
    Leaf {
        class: usize,
        counts: [usize; K],
    },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub nodes: Vec<Node>,
}

impl DecisionTree {
    pub fn predict(&self, x: &[f64]) -> usize {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                Node::Leaf { class, .. } => return *class,
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk(nodes: &[Node], i: usize) -> usize {
            match &nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + walk(nodes, *left).max(walk(nodes, *right)),
            }
        }
        walk(&self.nodes, 0)
    }
}

/// `sum_k L_k^2 / n_L + sum_k R_k^2 / n_R` as an exact fraction; larger is a
/// lower weighted Gini impurity.
#[derive(Debug, Clone, Copy)]
struct Score {
    num: u128,
    den: u128,
}

impl Score {
    fn new(left: &[usize; K], right: &[usize; K]) -> Self {
        let nl: u128 = left.iter().sum::<usize>() as u128;
        let nr: u128 = right.iter().sum::<usize>() as u128;
        let sl: u128 = left.iter().map(|&c| (c as u128) * (c as u128)).sum();
        let sr: u128 = right.iter().map(|&c| (c as u128) * (c as u128)).sum();
        Score {
            num: sl * nr + sr * nl,
            den: nl * nr,
        }
    }

    fn beats(&self, other: &Score) -> bool {
        self.num * other.den > other.num * self.den
    }
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    feature: usize,
    threshold: f64,
    score: Score,
}

pub(crate) struct TreeBuilder<'a> {
    pub columns: &'a [Vec<f64>],
    pub labels: &'a [usize],
    pub max_features: usize,
    pub min_samples_split: usize,
    pub max_depth: Option<usize>,
}

fn class_counts(labels: &[usize], samples: &[usize]) -> [usize; K] {
    let mut c = [0usize; K];
    for &s in samples {
        c[labels[s]] += 1;
    }
    c
}

fn majority(counts: &[usize; K]) -> usize {
    let mut best = 0;
    for k in 1..K {
        if counts[k] > counts[best] {
            best = k;
        }
    }
    best
}

impl TreeBuilder<'_> {
    fn best_split_on(&self, feature: usize, samples: &mut [usize], total: &[usize; K]) -> Option<Candidate> {
        let col = &self.columns[feature];
        samples.sort_by(|&a, &b| col[a].total_cmp(&col[b]));
        let mut left = [0usize; K];
        let mut best: Option<Candidate> = None;
        for w in 0..samples.len() - 1 {
            left[self.labels[samples[w]]] += 1;
            let (v, next) = (col[samples[w]], col[samples[w + 1]]);
            if v < next {
                let mut right = *total;
                for k in 0..K {
                    right[k] -= left[k];
                }
                let score = Score::new(&left, &right);
                if best.as_ref().is_none_or(|b| score.beats(&b.score)) {
                    best = Some(Candidate {
                        feature,
                        threshold: v,
                        score,
                    });
                }
            }
        }
        best
    }

    fn best_split(&self, samples: &[usize], counts: &[usize; K], rng: &mut ChaCha8Rng) -> Option<Candidate> {
        let n_features = self.columns.len();
        let mut order: Vec<usize> = (0..n_features).collect();
        order.shuffle(rng);
        let take = self.max_features.clamp(1, n_features.max(1)).min(n_features);
        let (first, rest) = order.split_at(take);
        let mut first = first.to_vec();
        first.sort_unstable();
        let mut scratch = samples.to_vec();
        let mut best: Option<Candidate> = None;
        for f in first {
            if let Some(c) = self.best_split_on(f, &mut scratch, counts) {
                if best.as_ref().is_none_or(|b| c.score.beats(&b.score)) {
                    best = Some(c);
                }
            }
        }
        if best.is_some() {
            return best;
        }
        // Every sampled feature was constant here; fall back to the others.
        rest.iter().find_map(|&f| self.best_split_on(f, &mut scratch, counts))
    }

    pub fn build(&self, samples: Vec<usize>, rng: &mut ChaCha8Rng) -> DecisionTree {
        let mut nodes: Vec<Node> = vec![Node::Leaf {
            class: 0,
            counts: [0; K],
        }];
        let mut stack = vec![(0usize, samples, 0usize)];
        while let Some((slot, samples, depth)) = stack.pop() {
            let counts = class_counts(self.labels, &samples);
            let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
            let depth_capped = self.max_depth.is_some_and(|d| depth >= d);
            let split = if pure || depth_capped || samples.len() < self.min_samples_split {
                None
            } else {
                self.best_split(&samples, &counts, rng)
            };
            match split {
                None => {
                    nodes[slot] = Node::Leaf {
                        class: majority(&counts),
                        counts,
                    };
                }
                Some(c) => {
                    let col = &self.columns[c.feature];
                    let (l, r): (Vec<usize>, Vec<usize>) = samples.iter().partition(|&&s| col[s] <= c.threshold);
                    let left = nodes.len();
                    nodes.push(Node::Leaf {
                        class: 0,
                        counts: [0; K],
                    });
                    nodes.push(Node::Leaf {
                        class: 0,
                        counts: [0; K],
                    });
                    nodes[slot] = Node::Split {
                        feature: c.feature,
                        threshold: c.threshold,
                        left,
                        right: left + 1,
                    };
                    stack.push((left + 1, r, depth + 1));
                    stack.push((left, l, depth + 1));
                }
            }
        }
        DecisionTree { nodes }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng;

    #[test]
    fn memorizes_distinct_points() {
        let columns = vec![vec![0.0, 1.0, 2.0, 3.0, 4.0, 5.0], vec![1.0, 1.0, 0.0, 0.0, 1.0, 0.0]];
        let labels = vec![0, 1, 2, 3, 0, 1];
        let b = TreeBuilder {
            columns: &columns,
            labels: &labels,
            max_features: 2,
            min_samples_split: 2,
            max_depth: None,
        };
        let t = b.build((0..6).collect(), &mut rng::seeded(1));
        for i in 0..6 {
            assert_eq!(t.predict(&[columns[0][i], columns[1][i]]), labels[i]);
        }
    }

    #[test]
    fn constant_features_give_majority_leaf() {
        let columns = vec![vec![1.0; 5]];
        let labels = vec![2, 2, 1, 0, 2];
        let b = TreeBuilder {
            columns: &columns,
            labels: &labels,
            max_features: 1,
            min_samples_split: 2,
            max_depth: None,
        };
        let t = b.build((0..5).collect(), &mut rng::seeded(1));
        assert_eq!(t.nodes.len(), 1);
        assert_eq!(t.predict(&[7.0]), 2);
    }

    #[test]
    fn exact_score_orders_fractions() {
        let a = Score::new(&[2, 0, 0, 0], &[0, 2, 0, 0]);
        let b = Score::new(&[1, 1, 0, 0], &[1, 1, 0, 0]);
        assert!(a.beats(&b));
        assert!(!b.beats(&a));
        assert!(!a.beats(&a));
    }
}
