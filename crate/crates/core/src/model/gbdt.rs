//! Gradient-boosted trees with a softmax objective over the four classes.
//!
//! Each round fits one regression tree per class to the gradient
//! `p_k - y_k` and hessian `max(2 p_k (1 - p_k), 1e-16)` of the multiclass
//! log-loss. Splits are exact greedy over the sorted unique values of each
//! feature, scored by
//!
//! ```text
//! gain = 1/2 [G_L^2/(H_L+lambda) + G_R^2/(H_R+lambda) - G^2/(H+lambda)] - gamma
//! ```
//!
//! and leaves take the Newton step `-G/(H+lambda)` scaled by the learning
//! rate. Margins start at the log class priors. Training has no random
//! component, so the result depends only on the data and parameters.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::PersonalityClass;
use crate::embeddings::network::softmax;
use crate::error::{Error, Result};
use crate::model::{argmax, check_training_data, Matrix};

const K: usize = PersonalityClass::COUNT;
const MIN_HESSIAN: f64 = 1e-16;
const PRIOR_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GbdtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub lambda: f64,
    pub gamma: f64,
    pub min_child_weight: f64,
}

impl Default for GbdtParams {
    fn default() -> Self {
        GbdtParams {
            rounds: 100,
            max_depth: 6,
            learning_rate: 0.3,
            lambda: 1.0,
            gamma: 0.0,
            min_child_weight: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum RegNode {
    /// Already multiplied by the learning rate.
    Leaf { value: f64 },
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
        gain: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegTree {
    pub nodes: Vec<RegNode>,
}

impl RegTree {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match &self.nodes[i] {
                RegNode::Leaf { value } => return *value,
                RegNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => i = if x[*feature] <= *threshold { *left } else { *right },
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Gbdt {
    pub params: GbdtParams,
    pub seed: u64,
    pub base_margin: [f64; K],
    /// One tree per class per round.
    pub rounds: Vec<[RegTree; K]>,
    /// Mean training log-loss before the first round and after each round.
    pub loss_trace: Vec<f64>,
}

fn log_loss(margins: &[[f64; K]], labels: &[usize]) -> f64 {
    let total: f64 = margins
        .iter()
        .zip(labels)
        .map(|(m, &y)| -softmax(m)[y].max(f64::MIN_POSITIVE).ln())
        .sum();
    total / labels.len() as f64
}

struct SplitFinder<'a> {
    columns: &'a [Vec<f64>],
    sorted: &'a [Vec<u32>],
    params: &'a GbdtParams,
}

#[derive(Clone, Copy)]
struct Best {
    gain: f64,
    threshold: f64,
}

impl SplitFinder<'_> {
    fn gain(&self, gl: f64, hl: f64, g: f64, h: f64) -> f64 {
        let l = self.params.lambda;
        let (gr, hr) = (g - gl, h - hl);
        0.5 * (gl * gl / (hl + l) + gr * gr / (hr + l) - g * g / (h + l)) - self.params.gamma
    }

    /// Best threshold on `feature` for every open node, in one pass over the
    /// presorted sample order.
    fn scan(
        &self,
        feature: usize,
        slot_of: &[usize],
        node_of: &[usize],
        stats: &[(f64, f64)],
        grad: &[f64],
        hess: &[f64],
    ) -> Vec<Option<Best>> {
        let col = &self.columns[feature];
        let n_slots = stats.len();
        let mut acc = vec![(0.0f64, 0.0f64); n_slots];
        let mut last: Vec<Option<f64>> = vec![None; n_slots];
        let mut best: Vec<Option<Best>> = vec![None; n_slots];
        let mcw = self.params.min_child_weight;
        for &i in &self.sorted[feature] {
            let i = i as usize;
            let node = node_of[i];
            if node == usize::MAX {
                continue;
            }
            let slot = slot_of[node];
            if slot == usize::MAX {
                continue;
            }
            let x = col[i];
            if let Some(prev) = last[slot] {
                if x > prev {
                    let (gl, hl) = acc[slot];
                    let (g, h) = stats[slot];
                    if hl >= mcw && h - hl >= mcw {
                        let gain = self.gain(gl, hl, g, h);
                        if best[slot].is_none_or(|b| gain > b.gain) {
                            best[slot] = Some(Best { gain, threshold: prev });
                        }
                    }
                }
            }
            acc[slot].0 += grad[i];
            acc[slot].1 += hess[i];
            last[slot] = Some(x);
        }
        best
    }

    /// Grows one tree level by level. Returns the tree and the leaf value
    /// reached by every training sample.
    fn grow(&self, grad: &[f64], hess: &[f64]) -> (RegTree, Vec<f64>) {
        let n = grad.len();
        let p = self.params;
        let mut node_of = vec![0usize; n];
        let mut nodes: Vec<RegNode> = vec![RegNode::Leaf { value: 0.0 }];
        let mut sums: Vec<(f64, f64)> = vec![(grad.iter().sum(), hess.iter().sum())];
        let mut open: Vec<usize> = vec![0];
        for _ in 0..p.max_depth {
            if open.is_empty() {
                break;
            }
            let mut slot_of = vec![usize::MAX; nodes.len()];
            for (s, &node) in open.iter().enumerate() {
                slot_of[node] = s;
            }
            let stats: Vec<(f64, f64)> = open.iter().map(|&nd| sums[nd]).collect();
            let per_feature: Vec<Vec<Option<Best>>> = (0..self.columns.len())
                .into_par_iter()
                .map(|f| self.scan(f, &slot_of, &node_of, &stats, grad, hess))
                .collect();
            let mut next_open = Vec::new();
            let mut split_of: Vec<Option<(usize, f64, usize)>> = vec![None; nodes.len()];
            for (s, &node) in open.iter().enumerate() {
                let mut chosen: Option<(usize, Best)> = None;
                for (f, bests) in per_feature.iter().enumerate() {
                    if let Some(b) = bests[s] {
                        if chosen.is_none_or(|(_, c)| b.gain > c.gain) {
                            chosen = Some((f, b));
                        }
                    }
                }
                if let Some((f, b)) = chosen.filter(|(_, b)| b.gain > 0.0) {
                    let left = nodes.len();
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    nodes.push(RegNode::Leaf { value: 0.0 });
                    sums.push((0.0, 0.0));
                    sums.push((0.0, 0.0));
                    nodes[node] = RegNode::Split {
                        feature: f,
                        threshold: b.threshold,
                        left,
                        right: left + 1,
                        gain: b.gain,
                    };
                    split_of[node] = Some((f, b.threshold, left));
                    next_open.push(left);
                    next_open.push(left + 1);
                }
            }
            split_of.resize(nodes.len(), None);
            for i in 0..n {
                if let Some((f, t, left)) = split_of[node_of[i]] {
                    let child = if self.columns[f][i] <= t { left } else { left + 1 };
                    node_of[i] = child;
                    sums[child].0 += grad[i];
                    sums[child].1 += hess[i];
                }
            }
            open = next_open;
        }
        for (node, &(g, h)) in nodes.iter_mut().zip(&sums) {
            if let RegNode::Leaf { value } = node {
                *value = -g / (h + p.lambda) * p.learning_rate;
            }
        }
        let values = node_of
            .iter()
            .map(|&nd| match nodes[nd] {
                RegNode::Leaf { value } => value,
                RegNode::Split { .. } => unreachable!("samples end in leaves"),
            })
            .collect();
        (RegTree { nodes }, values)
    }
}

impl Gbdt {
    pub fn train(x: &Matrix, y: &[PersonalityClass], params: &GbdtParams, seed: u64) -> Result<Self> {
        let labels = check_training_data(x, y)?;
        if params.lambda < 0.0 || params.learning_rate < 0.0 {
            return Err(Error::validation("lambda and learning rate must be non-negative"));
        }
        let n = x.rows();
        let columns = x.columns();
        let sorted: Vec<Vec<u32>> = columns
            .iter()
            .map(|col| {
                let mut idx: Vec<u32> = (0..n as u32).collect();
                idx.sort_by(|&a, &b| col[a as usize].total_cmp(&col[b as usize]));
                idx
            })
            .collect();
        let mut counts = [0usize; K];
        for &l in &labels {
            counts[l] += 1;
        }
        let base_margin = counts.map(|c| (c as f64 / n as f64).max(PRIOR_FLOOR).ln());
        let mut margins = vec![base_margin; n];
        let finder = SplitFinder {
            columns: &columns,
            sorted: &sorted,
            params,
        };
        let mut rounds = Vec::with_capacity(params.rounds);
        let mut loss_trace = vec![log_loss(&margins, &labels)];
        let mut grad = vec![0.0; n];
        let mut hess = vec![0.0; n];
        for _ in 0..params.rounds {
            let probs: Vec<Vec<f64>> = margins.iter().map(|m| softmax(m)).collect();
            let mut trees: Vec<RegTree> = Vec::with_capacity(K);
            let mut updates: Vec<Vec<f64>> = Vec::with_capacity(K);
            for k in 0..K {
                for (i, p) in probs.iter().enumerate() {
                    let pk = p[k];
                    grad[i] = pk - if labels[i] == k { 1.0 } else { 0.0 };
                    hess[i] = (2.0 * pk * (1.0 - pk)).max(MIN_HESSIAN);
                }
                let (tree, values) = finder.grow(&grad, &hess);
                trees.push(tree);
                updates.push(values);
            }
            for (k, values) in updates.iter().enumerate() {
                for (m, v) in margins.iter_mut().zip(values) {
                    m[k] += v;
                }
            }
            rounds.push(<[RegTree; K]>::try_from(trees).unwrap());
            loss_trace.push(log_loss(&margins, &labels));
        }
        Ok(Gbdt {
            params: *params,
            seed,
            base_margin,
            rounds,
            loss_trace,
        })
    }

    pub fn margins(&self, x: &[f64]) -> [f64; K] {
        let mut m = self.base_margin;
        for trees in &self.rounds {
            for (mk, t) in m.iter_mut().zip(trees) {
                *mk += t.predict(x);
            }
        }
        m
    }

    pub fn predict_proba(&self, x: &[f64]) -> Vec<f64> {
        softmax(&self.margins(x))
    }

    pub fn predict(&self, x: &[f64]) -> PersonalityClass {
        PersonalityClass::from_index(argmax(&self.margins(x))).unwrap()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use PersonalityClass::*;

    #[test]
    fn zero_learning_rate_predicts_priors() {
        let x = Matrix::from_rows(&(0..10).map(|i| vec![i as f64]).collect::<Vec<_>>()).unwrap();
        let y = [
            Analyst, Analyst, Analyst, Analyst, Diplomat, Diplomat, Diplomat, Sentinel, Sentinel, Explorer,
        ];
        let p = GbdtParams {
            learning_rate: 0.0,
            rounds: 5,
            ..Default::default()
        };
        let m = Gbdt::train(&x, &y, &p, 1).unwrap();
        let probs = m.predict_proba(&[3.0]);
        for (got, want) in probs.iter().zip([0.4, 0.3, 0.2, 0.1]) {
            assert!((got - want).abs() < 1e-12, "{probs:?}");
        }
        assert!(m.loss_trace.windows(2).all(|w| w[0] == w[1]));
    }

    #[test]
    fn learns_threshold_rule() {
        let rows: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, (i % 3) as f64]).collect();
        let y: Vec<PersonalityClass> = (0..40).map(|i| PersonalityClass::ALL[i / 10]).collect();
        let x = Matrix::from_rows(&rows).unwrap();
        let m = Gbdt::train(
            &x,
            &y,
            &GbdtParams {
                rounds: 20,
                ..Default::default()
            },
            1,
        )
        .unwrap();
        for (r, c) in rows.iter().zip(&y) {
            assert_eq!(m.predict(r), *c);
        }
    }

    #[test]
    fn single_class_is_rejected() {
        let x = Matrix::from_rows(&[vec![1.0], vec![2.0]]).unwrap();
        assert!(Gbdt::train(&x, &[Sentinel, Sentinel], &GbdtParams::default(), 1).is_err());
    }
}
