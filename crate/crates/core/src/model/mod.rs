//! Feature assembly, tree-ensemble classifiers, evaluation and the ablation
//! grid.

pub mod ablation;
pub mod features;
pub mod forest;
pub mod gbdt;
pub mod metrics;
pub mod tree;

use serde::{Deserialize, Serialize};

use crate::corpus::PersonalityClass;
use crate::error::{Error, Result};

pub use ablation::{run_ablation, AblationReport, ClassifierKind, ClassifierParams, ReportRow};
pub use features::{
    assemble_features, featurize_all, featurize_user, train_entity_embedders, AblationConfig, Artifacts, EntityKind,
    FeatureVector, FeaturizeContext, SegmentInfo, TextEncoder, UserFeatures,
};
pub use forest::{ForestParams, MaxFeatures, RandomForest};
pub use gbdt::{Gbdt, GbdtParams};
pub use metrics::{evaluate, Metrics};

/// Dense row-major sample matrix.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let cols = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::validation("rows have inconsistent lengths"));
        }
        Ok(Matrix {
            rows: rows.len(),
            cols,
            data: rows.concat(),
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    /// Column-major copy, one vector per feature.
    pub(crate) fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.cols)
            .map(|j| (0..self.rows).map(|i| self.get(i, j)).collect())
            .collect()
    }
}

/// Checks labels and shapes shared by both classifiers; returns class indices.
pub(crate) fn check_training_data(x: &Matrix, y: &[PersonalityClass]) -> Result<Vec<usize>> {
    if x.rows() != y.len() {
        return Err(Error::validation(format!(
            "{} samples but {} labels",
            x.rows(),
            y.len()
        )));
    }
    if x.rows() == 0 {
        return Err(Error::validation("no training samples"));
    }
    let labels: Vec<usize> = y.iter().map(|c| c.index()).collect();
    let distinct = PersonalityClass::ALL.iter().filter(|c| y.contains(c)).count();
    if distinct < 2 {
        return Err(Error::validation("training labels contain a single class"));
    }
    Ok(labels)
}

/// Index of the largest value; the lowest index wins ties.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// A trained classifier of either family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Forest(RandomForest),
    Gbdt(Gbdt),
}

impl Model {
    pub fn predict(&self, x: &[f64]) -> PersonalityClass {
        match self {
            Model::Forest(m) => m.predict(x),
            Model::Gbdt(m) => m.predict(x),
        }
    }

    pub fn predict_all(&self, x: &Matrix) -> Vec<PersonalityClass> {
        (0..x.rows()).map(|i| self.predict(x.row(i))).collect()
    }
}

/// Versioned on-disk container for a [`Model`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelFile {
    pub version: u32,
    pub seed: u64,
    pub n_features: usize,
    pub model: Model,
}

impl ModelFile {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: ModelFile = serde_json::from_str(text)?;
        if m.version != MODEL_FORMAT_VERSION {
            return Err(Error::validation(format!(
                "unsupported model format version {}",
                m.version
            )));
        }
        Ok(m)
    }
}
