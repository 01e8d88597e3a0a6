//! Pipeline stages. Each stage reads its inputs from the configured output
//! directory, writes its artifacts back into it, and records the effective
//! seed. Layout under the output directory:
//!
//! ```text
//! ingest/users.jsonl      eligible users, corpus order
//! ingest/split.json       balanced train/test manifest
//! ingest/summary.json     rejection and per-class counts
//! features/users.jsonl    per-user features
//! features/summary.json
//! embedders/{url,hashtag,mention}.json
//! models/{config}__{classifier}.json
//! models/summary.json
//! ablation/report.csv     encoder,classifier,config,f1,accuracy
//! ablation/report.json    full metrics per cell
//! ablation/timing.json    wall-clock seconds per cell (not reproducible)
//! analysis/bundle.json    every analysis table
//! report/                 tables/*.csv, plots/*.json, report.md
//! ```

use std::collections::{BTreeMap, HashMap};
use std::path::{Path, PathBuf};
use std::time::Instant;

use pfkit::analysis::{analyze, emit_report, AnalysisBundle, AnalysisParams};
use pfkit::corpus::{
    balanced_split, filter_eligible, read_raw_corpus, read_users, resolve, write_jsonl, ClassCount, Rejection,
    SplitManifest,
};
use pfkit::embeddings::{import_external_encodings, EntityEmbedder, WordVectorTable};
use pfkit::model::ablation::{cell_seed, feature_matrix};
use pfkit::model::{
    featurize_all, run_ablation, train_entity_embedders, Artifacts, EntityKind, FeaturizeContext, ModelFile,
    TextEncoder, UserFeatures, MODEL_FORMAT_VERSION,
};
use pfkit::readability::FamiliarLists;
use pfkit::resources::WordList;
use pfkit::{AblationReport, Error, Lexicon, PersonalityClass, UserRecord};
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::{Encoder, RunConfig};
use crate::error::{CliError, CliResult};

/// Artifact paths under the output directory.
pub struct Layout {
    root: PathBuf,
}

impl Layout {
    pub fn new(root: &Path) -> Self {
        Layout {
            root: root.to_path_buf(),
        }
    }

    pub fn users(&self) -> PathBuf {
        self.root.join("ingest/users.jsonl")
    }

    pub fn split(&self) -> PathBuf {
        self.root.join("ingest/split.json")
    }

    pub fn ingest_summary(&self) -> PathBuf {
        self.root.join("ingest/summary.json")
    }

    pub fn features(&self) -> PathBuf {
        self.root.join("features/users.jsonl")
    }

    pub fn features_summary(&self) -> PathBuf {
        self.root.join("features/summary.json")
    }

    pub fn embedder(&self, kind: EntityKind) -> PathBuf {
        self.root.join(format!("embedders/{}.json", kind.name()))
    }

    pub fn model(&self, config: &str, classifier: &str) -> PathBuf {
        self.root.join(format!("models/{config}__{classifier}.json"))
    }

    pub fn models_summary(&self) -> PathBuf {
        self.root.join("models/summary.json")
    }

    pub fn ablation_csv(&self) -> PathBuf {
        self.root.join("ablation/report.csv")
    }

    pub fn ablation_json(&self) -> PathBuf {
        self.root.join("ablation/report.json")
    }

    pub fn ablation_timing(&self) -> PathBuf {
        self.root.join("ablation/timing.json")
    }

    pub fn bundle(&self) -> PathBuf {
        self.root.join("analysis/bundle.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }
}

fn ensure_parent(path: &Path) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CliResult<()> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))?;
    Ok(())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

fn write_lines<T: Serialize>(path: &Path, items: &[T]) -> CliResult<()> {
    ensure_parent(path)?;
    write_jsonl(path, items)?;
    Ok(())
}

fn require(path: &Path, stage: &'static str) -> CliResult<()> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::MissingArtifact {
            path: path.to_path_buf(),
            stage,
        })
    }
}

fn read_json<T: DeserializeOwned>(path: &Path, stage: &'static str) -> CliResult<T> {
    require(path, stage)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Core(Error::parse(path, e.line(), e.to_string())))
}

fn read_lines<T: DeserializeOwned>(path: &Path, stage: &'static str) -> CliResult<Vec<T>> {
    require(path, stage)?;
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Core(Error::parse(path, i + 1, e.to_string()))))
        .collect()
}

fn load_users(layout: &Layout) -> CliResult<Vec<UserRecord>> {
    require(&layout.users(), "ingest")?;
    Ok(read_users(&layout.users())?)
}

fn check_seed(found: u64, cfg: &RunConfig, path: &Path) -> CliResult<()> {
    if found != cfg.seed {
        return Err(CliError::Core(Error::validation(format!(
            "{} was produced with seed {found}, but the effective seed is {}; rerun the earlier stages",
            path.display(),
            cfg.seed
        ))));
    }
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestSummary {
    pub seed: u64,
    pub raw_users: usize,
    pub unlabeled: usize,
    pub ambiguous: usize,
    pub ineligible: usize,
    pub eligible: usize,
    pub min_english_tweets: usize,
    pub per_type: BTreeMap<String, usize>,
    pub per_class: Vec<ClassCount>,
    pub train: usize,
    pub test: usize,
    pub warnings: Vec<String>,
}

/// Reads the corpus, resolves labels, filters ineligible users and draws
/// the balanced split.
pub fn ingest(cfg: &RunConfig) -> CliResult<(Vec<UserRecord>, SplitManifest)> {
    let layout = Layout::new(&cfg.paths.output);
    let raw = read_raw_corpus(&cfg.paths.corpus)?;
    let raw_users = raw.len();
    let resolved: Vec<Result<UserRecord, Rejection>> = raw.into_par_iter().map(resolve).collect();
    let unlabeled = resolved
        .iter()
        .filter(|r| matches!(r, Err(Rejection::Unlabeled)))
        .count();
    let ambiguous = resolved
        .iter()
        .filter(|r| matches!(r, Err(Rejection::Ambiguous)))
        .count();
    let labeled: Vec<UserRecord> = resolved.into_iter().flatten().collect();
    let common = match &cfg.paths.common_words {
        Some(p) => WordList::load(p)?,
        None => WordList::english_common(),
    };
    let n_labeled = labeled.len();
    let users = filter_eligible(labeled, cfg.thresholds.min_english_tweets, &common);
    let split = balanced_split(
        &users,
        cfg.sampling.train_per_class,
        cfg.sampling.test_per_class,
        cfg.seed,
    );
    for w in &split.warnings {
        log::warn!("{w}");
    }
    let manifest = split.manifest();
    let mut per_type = BTreeMap::new();
    for u in &users {
        *per_type.entry(u.label.as_str().to_string()).or_insert(0) += 1;
    }
    let summary = IngestSummary {
        seed: cfg.seed,
        raw_users,
        unlabeled,
        ambiguous,
        ineligible: n_labeled - users.len(),
        eligible: users.len(),
        min_english_tweets: cfg.thresholds.min_english_tweets,
        per_type,
        per_class: PersonalityClass::ALL
            .iter()
            .map(|&c| ClassCount {
                class: c,
                count: users.iter().filter(|u| u.class == c).count(),
            })
            .collect(),
        train: manifest.train.len(),
        test: manifest.test.len(),
        warnings: manifest.warnings.clone(),
    };
    log::info!(
        "ingest: {raw_users} raw users, {} eligible ({unlabeled} unlabeled, {ambiguous} ambiguous, {} ineligible)",
        summary.eligible,
        summary.ineligible
    );
    write_lines(&layout.users(), &users)?;
    write_json(&layout.split(), &manifest)?;
    write_json(&layout.ingest_summary(), &summary)?;
    Ok((users, manifest))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct FeaturizeSummary {
    pub seed: u64,
    pub users: usize,
    pub dropped: usize,
    pub word_vector_dim: Option<usize>,
    pub lexicon_categories: usize,
}

fn load_lexicon(cfg: &RunConfig) -> CliResult<Lexicon> {
    Ok(match &cfg.paths.lexicon {
        Some(p) => Lexicon::load(p)?,
        None => Lexicon::bundled(),
    })
}

fn load_familiar(cfg: &RunConfig) -> CliResult<FamiliarLists> {
    let dale = match &cfg.paths.dale {
        Some(p) => WordList::load(p)?,
        None => WordList::dale(),
    };
    let spache = match &cfg.paths.spache {
        Some(p) => WordList::load(p)?,
        None => WordList::spache(),
    };
    Ok(FamiliarLists::new(dale, spache)?)
}

/// Computes per-user features for every eligible user.
pub fn featurize(cfg: &RunConfig, users: &[UserRecord]) -> CliResult<Vec<UserFeatures>> {
    let layout = Layout::new(&cfg.paths.output);
    let vectors = match (cfg.encoder, &cfg.paths.word_vectors) {
        (Encoder::WordVec, Some(p)) => Some(WordVectorTable::load(p)?),
        _ => None,
    };
    let lexicon = load_lexicon(cfg)?;
    let familiar = load_familiar(cfg)?;
    let ctx = FeaturizeContext {
        word_vectors: vectors.as_ref(),
        lexicon: &lexicon,
        familiar: &familiar,
    };
    let (features, dropped) = featurize_all(users, &ctx);
    if dropped > 0 {
        log::warn!("featurize: dropped {dropped} users without tokens");
    }
    log::info!("featurize: {} users", features.len());
    write_lines(&layout.features(), &features)?;
    write_json(
        &layout.features_summary(),
        &FeaturizeSummary {
            seed: cfg.seed,
            users: features.len(),
            dropped,
            word_vector_dim: vectors.as_ref().map(WordVectorTable::dim),
            lexicon_categories: lexicon.len(),
        },
    )?;
    Ok(features)
}

/// Splits featurized users by the manifest. Users dropped at featurize are
/// skipped.
fn split_features(features: Vec<UserFeatures>, manifest: &SplitManifest) -> (Vec<UserFeatures>, Vec<UserFeatures>) {
    let mut by_id: HashMap<String, UserFeatures> = features.into_iter().map(|f| (f.user_id.clone(), f)).collect();
    let mut take = |ids: &[String], which: &str| {
        let picked: Vec<UserFeatures> = ids.iter().filter_map(|id| by_id.remove(id)).collect();
        if picked.len() < ids.len() {
            log::warn!("{} {which} users have no features", ids.len() - picked.len());
        }
        picked
    };
    let train = take(&manifest.train, "train");
    let test = take(&manifest.test, "test");
    (train, test)
}

fn needs_embedders(cfg: &RunConfig) -> bool {
    cfg.presets.iter().any(|c| c.url_emb || c.hashtag_emb || c.mention_emb)
}

/// Trains the URL, hashtag and mention embedders on the training users.
pub fn embed_train(cfg: &RunConfig, train: &[UserFeatures]) -> CliResult<Vec<EntityEmbedder>> {
    let layout = Layout::new(&cfg.paths.output);
    let embedders = train_entity_embedders(train, cfg.thresholds.min_df, &cfg.embedder, cfg.seed)?;
    for (kind, e) in EntityKind::ALL.iter().zip(&embedders) {
        log::info!(
            "embed-train: {} vocabulary {} tokens, final loss {:?}",
            kind.name(),
            e.tfidf.dim(),
            e.history.epoch_losses.last()
        );
        let mut text = e.to_json()?;
        text.push('\n');
        write_text(&layout.embedder(*kind), &text)?;
    }
    Ok(embedders)
}

fn load_embedders(layout: &Layout, cfg: &RunConfig) -> CliResult<Vec<EntityEmbedder>> {
    EntityKind::ALL
        .iter()
        .map(|&kind| {
            let path = layout.embedder(kind);
            require(&path, "embed-train")?;
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let e = EntityEmbedder::from_json(&text)?;
            if e.seed != kind.seed(cfg.seed) {
                return Err(CliError::Core(Error::validation(format!(
                    "{} was trained under a different seed; rerun `pfkit embed-train`",
                    path.display()
                ))));
            }
            Ok(e)
        })
        .collect()
}

fn artifacts(cfg: &RunConfig, embedders: Vec<EntityEmbedder>) -> CliResult<Artifacts> {
    let encoder = match cfg.encoder {
        Encoder::WordVec => TextEncoder::Native,
        Encoder::External => {
            let tweets_path = cfg.paths.external_tweets.as_ref().expect("validated with the config");
            TextEncoder::External {
                tweets: import_external_encodings(tweets_path, None)?,
                description: match &cfg.paths.external_description {
                    Some(p) => Some(import_external_encodings(p, None)?),
                    None => None,
                },
            }
        }
    };
    let mut a = Artifacts {
        encoder,
        ..Artifacts::default()
    };
    for (kind, e) in EntityKind::ALL.iter().zip(embedders) {
        a.set_embedder(*kind, e);
    }
    Ok(a)
}

fn load_features(layout: &Layout, cfg: &RunConfig) -> CliResult<Vec<UserFeatures>> {
    let summary: FeaturizeSummary = read_json(&layout.features_summary(), "featurize")?;
    check_seed(summary.seed, cfg, &layout.features_summary())?;
    read_lines(&layout.features(), "featurize")
}

fn load_manifest(layout: &Layout, cfg: &RunConfig) -> CliResult<SplitManifest> {
    let m: SplitManifest = read_json(&layout.split(), "ingest")?;
    check_seed(m.seed, cfg, &layout.split())?;
    Ok(m)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelEntry {
    pub config: String,
    pub classifier: String,
    pub seed: u64,
    pub n_features: usize,
    pub n_train: usize,
    pub train_accuracy: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct ModelsSummary {
    pub seed: u64,
    pub encoder: String,
    pub models: Vec<ModelEntry>,
}

/// Trains one model per (preset, classifier) on the training users.
pub fn train(cfg: &RunConfig, train: &[UserFeatures], artifacts: &Artifacts) -> CliResult<ModelsSummary> {
    let layout = Layout::new(&cfg.paths.output);
    let mut entries = Vec::new();
    for config in &cfg.presets {
        let users: Vec<&UserFeatures> = train.iter().filter(|u| artifacts.covers(&u.user_id, config)).collect();
        let (x, y) = feature_matrix(&users, artifacts, config)?;
        for &kind in &cfg.classifiers {
            let seed = cell_seed(cfg.seed, &config.name, kind);
            let model = cfg.classifier_params.train(kind, &x, &y, seed)?;
            let pred = model.predict_all(&x);
            let correct = pred.iter().zip(&y).filter(|(p, t)| p == t).count();
            let train_accuracy = correct as f64 / y.len() as f64;
            log::info!("train: {}/{kind} training accuracy {train_accuracy:.4}", config.name);
            let file = ModelFile {
                version: MODEL_FORMAT_VERSION,
                seed,
                n_features: x.cols(),
                model,
            };
            write_json(&layout.model(&config.name, kind.name()), &file)?;
            entries.push(ModelEntry {
                config: config.name.clone(),
                classifier: kind.name().into(),
                seed,
                n_features: x.cols(),
                n_train: users.len(),
                train_accuracy,
            });
        }
    }
    let summary = ModelsSummary {
        seed: cfg.seed,
        encoder: cfg.encoder.name().into(),
        models: entries,
    };
    write_json(&layout.models_summary(), &summary)?;
    Ok(summary)
}

#[derive(Debug, Serialize)]
struct CellTiming<'a> {
    config: &'a str,
    classifier: &'a str,
    seconds: f64,
}

#[derive(Debug, Serialize)]
struct Timing<'a> {
    seed: u64,
    total_seconds: f64,
    cells: Vec<CellTiming<'a>>,
}

/// Runs every stage up to evaluation and writes the ablation report.
pub fn ablate(cfg: &RunConfig) -> CliResult<AblationReport> {
    let start = Instant::now();
    let layout = Layout::new(&cfg.paths.output);
    let (users, manifest) = ingest(cfg)?;
    let features = featurize(cfg, &users)?;
    let (train_users, test_users) = split_features(features, &manifest);
    let embedders = if needs_embedders(cfg) {
        embed_train(cfg, &train_users)?
    } else {
        Vec::new()
    };
    let artifacts = artifacts(cfg, embedders)?;
    let report = run_ablation(
        &train_users,
        &test_users,
        &artifacts,
        &cfg.presets,
        &cfg.classifiers,
        &cfg.classifier_params,
        cfg.encoder.name(),
        cfg.seed,
    )?;
    write_text(&layout.ablation_csv(), &report.to_csv())?;
    write_json(&layout.ablation_json(), &report)?;
    let timing = Timing {
        seed: cfg.seed,
        total_seconds: start.elapsed().as_secs_f64(),
        cells: report
            .rows
            .iter()
            .zip(&report.seconds)
            .map(|(r, &seconds)| CellTiming {
                config: &r.config,
                classifier: r.classifier.name(),
                seconds,
            })
            .collect(),
    };
    write_json(&layout.ablation_timing(), &timing)?;
    log::info!("ablate: {} rows in {:.1}s", report.rows.len(), timing.total_seconds);
    Ok(report)
}

/// Computes the analysis tables over all eligible users.
pub fn analysis(cfg: &RunConfig, users: &[UserRecord], features: &[UserFeatures]) -> CliResult<AnalysisBundle> {
    let layout = Layout::new(&cfg.paths.output);
    let lexicon = load_lexicon(cfg)?;
    let stopwords = match &cfg.paths.stopwords {
        Some(p) => WordList::load(p)?,
        None => WordList::stopwords(),
    };
    let params = AnalysisParams {
        min_support: cfg.thresholds.min_support,
        top_k: cfg.thresholds.top_k,
    };
    let bundle = analyze(users, features, lexicon.names(), &stopwords, &params, cfg.seed)?;
    write_json(&layout.bundle(), &bundle)?;
    Ok(bundle)
}

/// Entry points that load upstream artifacts from disk.
pub mod stage {
    use super::*;

    pub fn featurize(cfg: &RunConfig) -> CliResult<()> {
        let layout = Layout::new(&cfg.paths.output);
        let summary: IngestSummary = read_json(&layout.ingest_summary(), "ingest")?;
        check_seed(summary.seed, cfg, &layout.ingest_summary())?;
        let users = load_users(&layout)?;
        super::featurize(cfg, &users)?;
        Ok(())
    }

    pub fn embed_train(cfg: &RunConfig) -> CliResult<()> {
        let layout = Layout::new(&cfg.paths.output);
        let manifest = load_manifest(&layout, cfg)?;
        let features = load_features(&layout, cfg)?;
        let (train, _) = split_features(features, &manifest);
        super::embed_train(cfg, &train)?;
        Ok(())
    }

    fn load_training(cfg: &RunConfig) -> CliResult<(Vec<UserFeatures>, Vec<UserFeatures>, Artifacts)> {
        let layout = Layout::new(&cfg.paths.output);
        let manifest = load_manifest(&layout, cfg)?;
        let features = load_features(&layout, cfg)?;
        let (train, test) = split_features(features, &manifest);
        let embedders = if needs_embedders(cfg) {
            load_embedders(&layout, cfg)?
        } else {
            Vec::new()
        };
        Ok((train, test, artifacts(cfg, embedders)?))
    }

    pub fn train(cfg: &RunConfig) -> CliResult<()> {
        let (train, _, artifacts) = load_training(cfg)?;
        super::train(cfg, &train, &artifacts)?;
        Ok(())
    }

    pub fn analyze(cfg: &RunConfig) -> CliResult<()> {
        let layout = Layout::new(&cfg.paths.output);
        let users = load_users(&layout)?;
        let features = load_features(&layout, cfg)?;
        super::analysis(cfg, &users, &features)?;
        Ok(())
    }

    /// Renders the analysis bundle, plus the ablation table when present.
    pub fn report(cfg: &RunConfig) -> CliResult<()> {
        let layout = Layout::new(&cfg.paths.output);
        let bundle: AnalysisBundle = read_json(&layout.bundle(), "analyze")?;
        check_seed(bundle.seed, cfg, &layout.bundle())?;
        let ablation: Option<AblationReport> = if layout.ablation_json().is_file() {
            let r: AblationReport = read_json(&layout.ablation_json(), "ablate")?;
            check_seed(r.seed, cfg, &layout.ablation_json())?;
            Some(r)
        } else {
            None
        };
        emit_report(&layout.report_dir(), &bundle, ablation.as_ref())?;
        log::info!("report: written to {}", layout.report_dir().display());
        Ok(())
    }
}
