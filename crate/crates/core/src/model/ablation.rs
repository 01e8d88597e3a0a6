//! The configuration × classifier grid.

use std::fmt;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::PersonalityClass;
use crate::error::{Error, Result};
use crate::model::features::{assemble_features, AblationConfig, Artifacts, UserFeatures};
use crate::model::{evaluate, ForestParams, Gbdt, GbdtParams, Matrix, Metrics, Model, RandomForest};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    Forest,
    Gbdt,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 2] = [ClassifierKind::Forest, ClassifierKind::Gbdt];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Forest => "forest",
            ClassifierKind::Gbdt => "gbdt",
        }
    }

    pub fn parse(name: &str) -> Result<Self> {
        match name {
            "forest" => Ok(ClassifierKind::Forest),
            "gbdt" => Ok(ClassifierKind::Gbdt),
            other => Err(Error::config(format!(
                "unknown classifier {other:?}; expected forest or gbdt"
            ))),
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ClassifierParams {
    #[serde(default)]
    pub forest: ForestParams,
    #[serde(default)]
    pub gbdt: GbdtParams,
}

impl ClassifierParams {
    pub fn train(&self, kind: ClassifierKind, x: &Matrix, y: &[PersonalityClass], seed: u64) -> Result<Model> {
        Ok(match kind {
            ClassifierKind::Forest => Model::Forest(RandomForest::train(x, y, &self.forest, seed)?),
            ClassifierKind::Gbdt => Model::Gbdt(Gbdt::train(x, y, &self.gbdt, seed)?),
        })
    }
}

/// Seed for one grid cell, a function of the master seed and the cell's
/// names only.
pub fn cell_seed(seed: u64, config: &str, classifier: ClassifierKind) -> u64 {
    let s = rng::derive_seed(seed, rng::stream_id(config));
    rng::derive_seed(s, rng::stream_id(classifier.name()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub encoder: String,
    pub classifier: ClassifierKind,
    pub config: String,
    pub metrics: Metrics,
    pub n_features: usize,
    pub n_train: usize,
    pub n_test: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub seed: u64,
    pub rows: Vec<ReportRow>,
    /// Wall-clock seconds per row; kept out of the serialized report so
    /// reruns stay byte-identical.
    #[serde(skip)]
    pub seconds: Vec<f64>,
}

impl AblationReport {
    pub const CSV_HEADER: &'static str = "encoder,classifier,config,f1,accuracy";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::CSV_HEADER);
        out.push('\n');
        for r in &self.rows {
            out.push_str(&format!(
                "{},{},{},{:.4},{:.4}\n",
                r.encoder, r.classifier, r.config, r.metrics.macro_f1, r.metrics.accuracy
            ));
        }
        out
    }

    pub fn row(&self, config: &str, classifier: ClassifierKind) -> Option<&ReportRow> {
        self.rows
            .iter()
            .find(|r| r.config == config && r.classifier == classifier)
    }
}

/// Assembles a feature matrix for `users` under `config`.
pub fn feature_matrix(
    users: &[&UserFeatures],
    artifacts: &Artifacts,
    config: &AblationConfig,
) -> Result<(Matrix, Vec<PersonalityClass>)> {
    let rows: Vec<Vec<f64>> = users
        .par_iter()
        .map(|u| assemble_features(u, artifacts, config).map(|f| f.values))
        .collect::<Result<_>>()?;
    let y = users.iter().map(|u| u.class).collect();
    Ok((Matrix::from_rows(&rows)?, y))
}

fn keep_covered<'a>(
    users: &'a [UserFeatures],
    artifacts: &Artifacts,
    config: &AblationConfig,
    which: &str,
) -> Vec<&'a UserFeatures> {
    let kept: Vec<&UserFeatures> = users.iter().filter(|u| artifacts.covers(&u.user_id, config)).collect();
    let dropped = users.len() - kept.len();
    if dropped > 0 {
        log::warn!(
            "config {}: dropped {dropped} {which} users without external encodings",
            config.name
        );
    }
    kept
}

/// Trains and evaluates every (config, classifier) pair. Rows are ordered
/// config-major in the order given.
#[allow(clippy::too_many_arguments)]
pub fn run_ablation(
    train: &[UserFeatures],
    test: &[UserFeatures],
    artifacts: &Artifacts,
    configs: &[AblationConfig],
    classifiers: &[ClassifierKind],
    params: &ClassifierParams,
    encoder: &str,
    seed: u64,
) -> Result<AblationReport> {
    for c in configs {
        artifacts.check(c)?;
    }
    let mut report = AblationReport {
        seed,
        rows: Vec::new(),
        seconds: Vec::new(),
    };
    for config in configs {
        let tr = keep_covered(train, artifacts, config, "train");
        let te = keep_covered(test, artifacts, config, "test");
        if te.is_empty() {
            return Err(Error::validation(format!("config {}: no test users", config.name)));
        }
        let (x_train, y_train) = feature_matrix(&tr, artifacts, config)?;
        let (x_test, y_test) = feature_matrix(&te, artifacts, config)?;
        for &kind in classifiers {
            let start = Instant::now();
            let annotate = |e: Error| Error::validation(format!("cell {}/{kind}: {e}", config.name));
            let model = params
                .train(kind, &x_train, &y_train, cell_seed(seed, &config.name, kind))
                .map_err(annotate)?;
            let metrics = evaluate(&model.predict_all(&x_test), &y_test).map_err(annotate)?;
            log::info!(
                "config {} classifier {kind}: macro_f1 {:.4} accuracy {:.4}",
                config.name,
                metrics.macro_f1,
                metrics.accuracy
            );
            report.rows.push(ReportRow {
                encoder: encoder.to_string(),
                classifier: kind,
                config: config.name.clone(),
                metrics,
                n_features: x_train.cols(),
                n_train: tr.len(),
                n_test: te.len(),
            });
            report.seconds.push(start.elapsed().as_secs_f64());
        }
    }
    Ok(report)
}
