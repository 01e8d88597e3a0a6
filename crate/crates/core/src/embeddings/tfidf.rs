//! tf-idf over per-user entity documents.
//!
//! `weight(t, d) = tf(t, d) * (ln((1 + n_docs) / (1 + df(t))) + 1)`, with
//! the resulting vector L2-normalized when it is nonzero. Tokens whose
//! document frequency is below `min_df * n_docs` are dropped from the
//! vocabulary.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Sorted `(index, value)` pairs.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn to_dense(&self) -> Vec<f64> {
        let mut v = vec![0.0; self.dim];
        for &(i, x) in &self.entries {
            v[i] = x;
        }
        v
    }

    pub fn norm(&self) -> f64 {
        self.entries.iter().map(|(_, x)| x * x).sum::<f64>().sqrt()
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    /// Lexicographically sorted.
    pub vocabulary: Vec<String>,
    pub document_frequency: Vec<usize>,
    pub n_docs: usize,
    pub min_df: f64,
}

/// Slack for the `df / n_docs >= min_df` comparison so that e.g.
/// `0.02 * 50` counts a df of 1 as passing.
const MIN_DF_SLACK: f64 = 1e-12;

impl TfidfModel {
    pub fn fit<S: AsRef<str>>(docs: &[Vec<S>], min_df: f64) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::validation("cannot fit tf-idf on an empty corpus"));
        }
        if !(0.0..=1.0).contains(&min_df) {
            return Err(Error::validation(format!("min_df {min_df} outside [0, 1]")));
        }
        let mut df: BTreeMap<&str, usize> = BTreeMap::new();
        for doc in docs {
            let distinct: BTreeSet<&str> = doc.iter().map(|t| t.as_ref()).collect();
            for t in distinct {
                *df.entry(t).or_default() += 1;
            }
        }
        let n = docs.len();
        let (vocabulary, document_frequency) = df
            .into_iter()
            .filter(|&(_, d)| d as f64 / n as f64 >= min_df - MIN_DF_SLACK)
            .map(|(t, d)| (t.to_string(), d))
            .unzip();
        Ok(TfidfModel {
            vocabulary,
            document_frequency,
            n_docs: n,
            min_df,
        })
    }

    pub fn dim(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn index_of(&self, token: &str) -> Option<usize> {
        self.vocabulary.binary_search_by(|v| v.as_str().cmp(token)).ok()
    }

    pub fn idf(&self, index: usize) -> f64 {
        ((1.0 + self.n_docs as f64) / (1.0 + self.document_frequency[index] as f64)).ln() + 1.0
    }

    pub fn transform<S: AsRef<str>>(&self, doc: &[S]) -> SparseVector {
        let mut tf: BTreeMap<usize, usize> = BTreeMap::new();
        for t in doc {
            if let Some(i) = self.index_of(t.as_ref()) {
                *tf.entry(i).or_default() += 1;
            }
        }
        let mut entries: Vec<(usize, f64)> = tf.into_iter().map(|(i, c)| (i, c as f64 * self.idf(i))).collect();
        let norm = entries.iter().map(|(_, x)| x * x).sum::<f64>().sqrt();
        if norm > 0.0 {
            for e in &mut entries {
                e.1 /= norm;
            }
        }
        SparseVector {
            dim: self.dim(),
            entries,
        }
    }
}
