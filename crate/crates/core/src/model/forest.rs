//! Random forest of Gini trees with bootstrap resampling and per-split
//! feature subsampling. Each tree draws from its own generator seeded with
//! `derive_seed(seed, tree_index)`, so trees train in parallel without
//! changing the result.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::PersonalityClass;
use crate::error::Result;
use crate::model::tree::{DecisionTree, TreeBuilder};
use crate::model::{argmax, check_training_data, Matrix};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MaxFeatures {
    /// `floor(sqrt(d))`, at least 1.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(n) => n.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestParams {
    pub n_trees: usize,
    pub max_features: MaxFeatures,
    pub bootstrap: bool,
    pub max_depth: Option<usize>,
    pub min_samples_split: usize,
}

impl Default for ForestParams {
    fn default() -> Self {
        ForestParams {
            n_trees: 100,
            max_features: MaxFeatures::Sqrt,
            bootstrap: true,
            max_depth: None,
            min_samples_split: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub params: ForestParams,
    pub seed: u64,
    pub trees: Vec<DecisionTree>,
}

impl RandomForest {
    pub fn train(x: &Matrix, y: &[PersonalityClass], params: &ForestParams, seed: u64) -> Result<Self> {
        let labels = check_training_data(x, y)?;
        let columns = x.columns();
        let builder = TreeBuilder {
            columns: &columns,
            labels: &labels,
            max_features: params.max_features.resolve(x.cols()),
            min_samples_split: params.min_samples_split.max(2),
            max_depth: params.max_depth,
        };
        let n = x.rows();
        let trees = (0..params.n_trees)
            .into_par_iter()
            .map(|t| {
                let mut r = rng::seeded(rng::derive_seed(seed, t as u64));
                let samples: Vec<usize> = if params.bootstrap {
                    (0..n).map(|_| r.random_range(0..n)).collect()
                } else {
                    (0..n).collect()
                };
                builder.build(samples, &mut r)
            })
            .collect();
        Ok(RandomForest {
            params: *params,
            seed,
            trees,
        })
    }

    /// Fraction of trees voting for each class.
    pub fn votes(&self, x: &[f64]) -> [f64; PersonalityClass::COUNT] {
        let mut v = [0.0; PersonalityClass::COUNT];
        for t in &self.trees {
            v[t.predict(x)] += 1.0;
        }
        let n = self.trees.len().max(1) as f64;
        v.map(|c| c / n)
    }

    /// Majority vote; the lowest class index wins ties.
    pub fn predict(&self, x: &[f64]) -> PersonalityClass {
        PersonalityClass::from_index(argmax(&self.votes(x))).unwrap()
    }
}
