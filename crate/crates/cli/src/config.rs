//! Run configuration, read from a TOML file.
//!
//! ```toml
//! seed = 7                      # required unless --seed / PF_SEED is given
//!
//! [paths]                       # relative paths resolve against this file's directory
//! corpus = "corpus.jsonl"       # required
//! word_vectors = "vectors.txt"  # needed by the wordvec encoder
//! lexicon = "lexicon.tsv"       # optional; bundled 194-category lexicon otherwise
//! dale = "dale.txt"             # optional familiar-word lists; bundled otherwise
//! spache = "spache.txt"
//! common_words = "common.txt"   # optional; used by English detection
//! stopwords = "stop.txt"        # optional; used by profession analysis
//! external_tweets = "tw.txt"    # needed by the external encoder
//! external_description = "d.txt"
//! output = "out"                # default "out"
//!
//! [sampling]
//! train_per_class = 4000
//! test_per_class = 1000
//!
//! [ablation]
//! presets = ["all", "only-tweets"]   # default: all nine
//! classifiers = ["forest", "gbdt"]   # default: both
//! encoder = "wordvec"                # or "external"
//!
//! [thresholds]
//! min_df = 0.02
//! min_support = 20
//! min_english_tweets = 100
//! top_k = 5
//!
//! [embedder]   # learning_rate, batch_size, epochs, beta1, beta2, epsilon, hidden
//! [forest]     # n_trees, max_features ("sqrt" | "all" | { count = n }), bootstrap, max_depth, min_samples_split
//! [gbdt]       # rounds, max_depth, learning_rate, lambda, gamma, min_child_weight
//! ```

use std::path::{Path, PathBuf};

use pfkit::embeddings::TrainParams;
use pfkit::model::{AblationConfig, ClassifierKind, ClassifierParams, ForestParams, GbdtParams};
use serde::Deserialize;

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    seed: Option<u64>,
    paths: FilePaths,
    #[serde(default)]
    sampling: Sampling,
    #[serde(default)]
    ablation: AblationSection,
    #[serde(default)]
    thresholds: Thresholds,
    #[serde(default)]
    embedder: TrainParams,
    #[serde(default)]
    forest: ForestParams,
    #[serde(default)]
    gbdt: GbdtParams,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FilePaths {
    corpus: Option<PathBuf>,
    word_vectors: Option<PathBuf>,
    lexicon: Option<PathBuf>,
    dale: Option<PathBuf>,
    spache: Option<PathBuf>,
    common_words: Option<PathBuf>,
    stopwords: Option<PathBuf>,
    external_tweets: Option<PathBuf>,
    external_description: Option<PathBuf>,
    output: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Sampling {
    pub train_per_class: usize,
    pub test_per_class: usize,
}

impl Default for Sampling {
    fn default() -> Self {
        Sampling {
            train_per_class: 4000,
            test_per_class: 1000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct AblationSection {
    presets: Vec<String>,
    classifiers: Vec<String>,
    encoder: String,
}

impl Default for AblationSection {
    fn default() -> Self {
        AblationSection {
            presets: AblationConfig::presets().into_iter().map(|c| c.name).collect(),
            classifiers: ClassifierKind::ALL.iter().map(|c| c.name().to_string()).collect(),
            encoder: "wordvec".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Thresholds {
    pub min_df: f64,
    pub min_support: usize,
    pub min_english_tweets: usize,
    pub top_k: usize,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            min_df: 0.02,
            min_support: 20,
            min_english_tweets: 100,
            top_k: 5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Encoder {
    /// Averaged word vectors from `paths.word_vectors`.
    WordVec,
    /// Per-user vectors from `paths.external_tweets`.
    External,
}

impl Encoder {
    pub fn name(self) -> &'static str {
        match self {
            Encoder::WordVec => "wordvec",
            Encoder::External => "external",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Paths {
    pub corpus: PathBuf,
    pub word_vectors: Option<PathBuf>,
    pub lexicon: Option<PathBuf>,
    pub dale: Option<PathBuf>,
    pub spache: Option<PathBuf>,
    pub common_words: Option<PathBuf>,
    pub stopwords: Option<PathBuf>,
    pub external_tweets: Option<PathBuf>,
    pub external_description: Option<PathBuf>,
    pub output: PathBuf,
}

/// A validated configuration with command-line overrides applied.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub seed: u64,
    pub paths: Paths,
    pub sampling: Sampling,
    pub presets: Vec<AblationConfig>,
    pub classifiers: Vec<ClassifierKind>,
    pub encoder: Encoder,
    pub thresholds: Thresholds,
    pub embedder: TrainParams,
    pub classifier_params: ClassifierParams,
}

/// Values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub output: Option<PathBuf>,
}

impl RunConfig {
    pub fn load(path: &Path, overrides: &Overrides) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::config(format!("cannot read config {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, overrides)
            .map_err(|e| CliError::config(format!("{}: {}", path.display(), strip_prefix(&e))))
    }

    /// Parses config text; relative paths resolve against `base`.
    pub fn parse(text: &str, base: &Path, overrides: &Overrides) -> CliResult<Self> {
        let file: FileConfig = toml::from_str(text).map_err(|e| CliError::config(e.to_string()))?;
        let seed = overrides
            .seed
            .or(file.seed)
            .ok_or_else(|| CliError::config("missing key `seed` (or pass --seed)"))?;
        let resolve = |p: Option<PathBuf>| p.map(|p| base.join(p));
        let p = file.paths;
        let paths = Paths {
            corpus: resolve(p.corpus).ok_or_else(|| CliError::config("missing key `paths.corpus`"))?,
            word_vectors: resolve(p.word_vectors),
            lexicon: resolve(p.lexicon),
            dale: resolve(p.dale),
            spache: resolve(p.spache),
            common_words: resolve(p.common_words),
            stopwords: resolve(p.stopwords),
            external_tweets: resolve(p.external_tweets),
            external_description: resolve(p.external_description),
            output: overrides
                .output
                .clone()
                .unwrap_or_else(|| base.join(p.output.unwrap_or_else(|| PathBuf::from("out")))),
        };
        let presets = file
            .ablation
            .presets
            .iter()
            .map(|name| {
                AblationConfig::preset(name).ok_or_else(|| {
                    let known: Vec<String> = AblationConfig::presets().into_iter().map(|c| c.name).collect();
                    CliError::config(format!("unknown preset {name:?}; known: {}", known.join(", ")))
                })
            })
            .collect::<CliResult<Vec<_>>>()?;
        let classifiers = file
            .ablation
            .classifiers
            .iter()
            .map(|c| ClassifierKind::parse(c).map_err(CliError::from))
            .collect::<CliResult<Vec<_>>>()?;
        let encoder = match file.ablation.encoder.as_str() {
            "wordvec" => Encoder::WordVec,
            "external" => Encoder::External,
            other => {
                return Err(CliError::config(format!(
                    "unknown encoder {other:?}; expected wordvec or external"
                )))
            }
        };
        let t = file.thresholds;
        if !(0.0..=1.0).contains(&t.min_df) {
            return Err(CliError::config(format!(
                "thresholds.min_df {} outside [0, 1]",
                t.min_df
            )));
        }
        let config = RunConfig {
            seed,
            paths,
            sampling: file.sampling,
            presets,
            classifiers,
            encoder,
            thresholds: t,
            embedder: file.embedder,
            classifier_params: ClassifierParams {
                forest: file.forest,
                gbdt: file.gbdt,
            },
        };
        config.check_paths()?;
        Ok(config)
    }

    fn check_paths(&self) -> CliResult<()> {
        let p = &self.paths;
        match self.encoder {
            Encoder::WordVec if p.word_vectors.is_none() => {
                return Err(CliError::config("encoder wordvec requires `paths.word_vectors`"))
            }
            Encoder::External if p.external_tweets.is_none() => {
                return Err(CliError::config("encoder external requires `paths.external_tweets`"))
            }
            _ => {}
        }
        let named = [
            ("paths.corpus", Some(&p.corpus)),
            ("paths.word_vectors", p.word_vectors.as_ref()),
            ("paths.lexicon", p.lexicon.as_ref()),
            ("paths.dale", p.dale.as_ref()),
            ("paths.spache", p.spache.as_ref()),
            ("paths.common_words", p.common_words.as_ref()),
            ("paths.stopwords", p.stopwords.as_ref()),
            ("paths.external_tweets", p.external_tweets.as_ref()),
            ("paths.external_description", p.external_description.as_ref()),
        ];
        for (key, path) in named {
            if let Some(path) = path {
                if !path.is_file() {
                    return Err(CliError::config(format!("{key}: {} does not exist", path.display())));
                }
            }
        }
        Ok(())
    }
}

fn strip_prefix(e: &CliError) -> String {
    let s = e.to_string();
    s.strip_prefix("configuration error: ").map(String::from).unwrap_or(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir_with_corpus() -> tempfile::TempDir {
        let d = tempfile::tempdir().unwrap();
        std::fs::write(d.path().join("c.jsonl"), "").unwrap();
        std::fs::write(d.path().join("v.txt"), "0 2\n").unwrap();
        d
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let d = dir_with_corpus();
        let c = RunConfig::parse(
            "seed = 3\n[paths]\ncorpus = \"c.jsonl\"\nword_vectors = \"v.txt\"\n",
            d.path(),
            &Overrides::default(),
        )
        .unwrap();
        assert_eq!(c.seed, 3);
        assert_eq!(c.presets.len(), 9);
        assert_eq!(c.classifiers, ClassifierKind::ALL);
        assert_eq!(c.paths.output, d.path().join("out"));
        assert_eq!(c.thresholds, Thresholds::default());
        assert_eq!(c.classifier_params.forest.n_trees, 100);
    }

    #[test]
    fn seed_override_wins_and_seed_is_required() {
        let d = dir_with_corpus();
        let text = "[paths]\ncorpus = \"c.jsonl\"\nword_vectors = \"v.txt\"\n";
        let err = RunConfig::parse(text, d.path(), &Overrides::default()).unwrap_err();
        assert!(err.to_string().contains("seed"));
        let o = Overrides {
            seed: Some(9),
            ..Default::default()
        };
        assert_eq!(RunConfig::parse(text, d.path(), &o).unwrap().seed, 9);
    }

    #[test]
    fn rejects_unknown_keys_presets_and_missing_files() {
        let d = dir_with_corpus();
        let base = "seed = 1\n[paths]\ncorpus = \"c.jsonl\"\nword_vectors = \"v.txt\"\n";
        for extra in [
            "[sampling]\ntrain = 3\n",
            "[ablation]\npresets = [\"everything\"]\n",
            "[ablation]\nclassifiers = [\"svm\"]\n",
        ] {
            let err = RunConfig::parse(&format!("{base}{extra}"), d.path(), &Overrides::default()).unwrap_err();
            assert_eq!(err.exit_code(), crate::error::exit::CONFIG, "{extra}: {err}");
        }
        let err = RunConfig::parse(
            "seed = 1\n[paths]\ncorpus = \"missing.jsonl\"\nword_vectors = \"v.txt\"\n",
            d.path(),
            &Overrides::default(),
        )
        .unwrap_err();
        assert!(err.to_string().contains("paths.corpus"));
    }

    #[test]
    fn forest_and_gbdt_sections_parse() {
        let d = dir_with_corpus();
        let c = RunConfig::parse(
            "seed = 1\n[paths]\ncorpus = \"c.jsonl\"\nword_vectors = \"v.txt\"\n[forest]\nn_trees = 7\nmax_features = \"all\"\n[gbdt]\nrounds = 4\n[embedder]\nepochs = 2\n",
            d.path(),
            &Overrides::default(),
        )
        .unwrap();
        assert_eq!(c.classifier_params.forest.n_trees, 7);
        assert_eq!(c.classifier_params.gbdt.rounds, 4);
        assert_eq!(c.embedder.epochs, 2);
    }
}
