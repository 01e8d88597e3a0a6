//! Per-user feature extraction and assembly under ablation configurations.
//!
//! [`featurize_user`] computes everything that does not depend on trained
//! artifacts: text encodings, category scores, readability, counts and the
//! raw entity documents. [`assemble_features`] then concatenates the
//! segments enabled by an [`AblationConfig`] in the fixed order tweets,
//! description, empath, readability, counts, url, hashtag, mention.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{PersonalityClass, UserRecord};
use crate::embeddings::wordvec::{encode_text_avg, encode_tweets_avg, WordVectorTable};
use crate::embeddings::{EntityEmbedder, TrainParams};
use crate::error::{Error, Result};
use crate::lexicon::Lexicon;
use crate::readability::{mean_readability, FamiliarLists, ReadabilityScores};
use crate::rng;
use crate::textproc::{clean_tweet, tokenize};

/// Which feature families enter the vector.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AblationConfig {
    pub name: String,
    pub tweets_encoding: bool,
    pub description_encoding: bool,
    pub url_emb: bool,
    pub hashtag_emb: bool,
    pub mention_emb: bool,
    pub readability: bool,
    pub counts: bool,
    pub empath: bool,
}

impl AblationConfig {
    pub fn all() -> Self {
        AblationConfig {
            name: "all".into(),
            tweets_encoding: true,
            description_encoding: true,
            url_emb: true,
            hashtag_emb: true,
            mention_emb: true,
            readability: true,
            counts: true,
            empath: true,
        }
    }

    fn without(name: &str, f: impl FnOnce(&mut AblationConfig)) -> Self {
        let mut c = AblationConfig::all();
        c.name = name.into();
        f(&mut c);
        c
    }

    /// The nine standard configurations, in report order.
    pub fn presets() -> Vec<AblationConfig> {
        vec![
            AblationConfig::all(),
            AblationConfig {
                name: "only-tweets".into(),
                tweets_encoding: true,
                description_encoding: false,
                url_emb: false,
                hashtag_emb: false,
                mention_emb: false,
                readability: false,
                counts: false,
                empath: false,
            },
            Self::without("no-urls", |c| c.url_emb = false),
            Self::without("no-hashtags", |c| c.hashtag_emb = false),
            Self::without("no-mentions", |c| c.mention_emb = false),
            Self::without("no-entities", |c| {
                c.url_emb = false;
                c.hashtag_emb = false;
                c.mention_emb = false;
            }),
            Self::without("no-readability", |c| c.readability = false),
            Self::without("no-empath", |c| c.empath = false),
            Self::without("no-counts", |c| c.counts = false),
        ]
    }

    pub fn preset(name: &str) -> Option<AblationConfig> {
        Self::presets().into_iter().find(|c| c.name == name)
    }

    pub fn validate(&self) -> Result<()> {
        if !self.tweets_encoding {
            return Err(Error::config(format!(
                "configuration {} disables tweets_encoding, which every configuration requires",
                self.name
            )));
        }
        Ok(())
    }
}

/// Everything about one user that feature assembly needs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserFeatures {
    pub user_id: String,
    pub class: PersonalityClass,
    /// Word-vector encodings; absent when no vector table was configured.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tweets: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<Vec<f64>>,
    pub empath: Vec<f64>,
    pub readability: ReadabilityScores,
    pub counts: [f64; 6],
    pub hashtags: Vec<String>,
    pub urls: Vec<String>,
    pub mentions: Vec<String>,
}

/// Entity token for a URL: its lowercased host without a `www.` prefix.
pub fn url_token(url: &str) -> Option<String> {
    let lower = url.to_lowercase();
    let rest = lower
        .strip_prefix("https://")
        .or_else(|| lower.strip_prefix("http://"))
        .unwrap_or(&lower);
    let rest = rest.strip_prefix("www.").unwrap_or(rest);
    let host = rest
        .split(['/', '?', '#', ':'])
        .next()
        .unwrap_or("")
        .trim_end_matches(|c: char| !c.is_alphanumeric());
    (!host.is_empty()).then(|| host.to_string())
}

/// Shared resources for [`featurize_user`].
pub struct FeaturizeContext<'a> {
    pub word_vectors: Option<&'a WordVectorTable>,
    pub lexicon: &'a Lexicon,
    pub familiar: &'a FamiliarLists,
}

/// Computes the artifact-independent features of one user. Fails when the
/// user has no tokens to score.
pub fn featurize_user(user: &UserRecord, ctx: &FeaturizeContext) -> Result<UserFeatures> {
    let mut hashtags = Vec::new();
    let mut urls = Vec::new();
    let mut mentions = Vec::new();
    let mut normalized = Vec::with_capacity(user.tweets.len());
    let mut tweet_tokens = Vec::with_capacity(user.tweets.len());
    for raw in &user.tweets {
        let (sep, norm) = clean_tweet(raw);
        hashtags.extend(sep.hashtags);
        mentions.extend(sep.mentions.iter().map(|m| m.to_lowercase()));
        urls.extend(sep.urls.iter().filter_map(|u| url_token(u)));
        tweet_tokens.push(tokenize(&norm));
        normalized.push(norm);
    }
    let all_tokens: Vec<&String> = tweet_tokens.iter().flatten().collect();
    let empath = ctx
        .lexicon
        .score_categories(&all_tokens)
        .map_err(|_| Error::validation(format!("user {} has no tokens", user.user_id)))?;
    let readability = mean_readability(normalized.iter().map(String::as_str), ctx.familiar)
        .map_err(|_| Error::validation(format!("user {} has no scoreable tweets", user.user_id)))?;
    let description_tokens = tokenize(&clean_tweet(&user.description).1);
    Ok(UserFeatures {
        user_id: user.user_id.clone(),
        class: user.class,
        tweets: ctx.word_vectors.map(|t| encode_tweets_avg(&tweet_tokens, t)),
        description: ctx.word_vectors.map(|t| encode_text_avg(&description_tokens, t)),
        empath,
        readability,
        counts: user.counts.to_vec(),
        hashtags,
        urls,
        mentions,
    })
}

/// Featurizes users in parallel, preserving order. Users without tokens
/// are dropped; the second value is how many.
pub fn featurize_all(users: &[UserRecord], ctx: &FeaturizeContext) -> (Vec<UserFeatures>, usize) {
    let results: Vec<Option<UserFeatures>> = users
        .par_iter()
        .map(|u| match featurize_user(u, ctx) {
            Ok(f) => Some(f),
            Err(e) => {
                log::warn!("dropping user: {e}");
                None
            }
        })
        .collect();
    let dropped = results.iter().filter(|r| r.is_none()).count();
    (results.into_iter().flatten().collect(), dropped)
}

/// The three entity families with a learned embedding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Url,
    Hashtag,
    Mention,
}

impl EntityKind {
    pub const ALL: [EntityKind; 3] = [EntityKind::Url, EntityKind::Hashtag, EntityKind::Mention];

    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Url => "url",
            EntityKind::Hashtag => "hashtag",
            EntityKind::Mention => "mention",
        }
    }

    pub fn document(self, user: &UserFeatures) -> &[String] {
        match self {
            EntityKind::Url => &user.urls,
            EntityKind::Hashtag => &user.hashtags,
            EntityKind::Mention => &user.mentions,
        }
    }

    /// Training seed for this family's embedder.
    pub fn seed(self, master: u64) -> u64 {
        rng::derive_seed(master, rng::stream_id(&format!("embedder/{}", self.name())))
    }
}

/// Fits one embedder per entity family on the training users, in
/// [`EntityKind::ALL`] order.
pub fn train_entity_embedders(
    train: &[UserFeatures],
    min_df: f64,
    params: &TrainParams,
    seed: u64,
) -> Result<Vec<EntityEmbedder>> {
    let classes: Vec<PersonalityClass> = train.iter().map(|u| u.class).collect();
    EntityKind::ALL
        .par_iter()
        .map(|&kind| {
            let docs: Vec<Vec<String>> = train.iter().map(|u| kind.document(u).to_vec()).collect();
            EntityEmbedder::train(&docs, &classes, min_df, params, kind.seed(seed))
                .map_err(|e| Error::validation(format!("{} embedder: {e}", kind.name())))
        })
        .collect()
}

/// Where the tweet and description encodings come from.
#[derive(Debug, Clone, Default)]
pub enum TextEncoder {
    /// Word-vector averages stored in [`UserFeatures`].
    #[default]
    Native,
    /// Precomputed per-user vectors keyed by user id.
    External {
        tweets: BTreeMap<String, Vec<f64>>,
        description: Option<BTreeMap<String, Vec<f64>>>,
    },
}

/// Trained or imported artifacts needed by some segments.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub encoder: TextEncoder,
    pub url: Option<EntityEmbedder>,
    pub hashtag: Option<EntityEmbedder>,
    pub mention: Option<EntityEmbedder>,
}

impl Artifacts {
    pub fn embedder(&self, kind: EntityKind) -> Option<&EntityEmbedder> {
        match kind {
            EntityKind::Url => self.url.as_ref(),
            EntityKind::Hashtag => self.hashtag.as_ref(),
            EntityKind::Mention => self.mention.as_ref(),
        }
    }

    pub fn set_embedder(&mut self, kind: EntityKind, e: EntityEmbedder) {
        match kind {
            EntityKind::Url => self.url = Some(e),
            EntityKind::Hashtag => self.hashtag = Some(e),
            EntityKind::Mention => self.mention = Some(e),
        }
    }
}

impl Artifacts {
    /// Whether the configured encoder covers this user.
    pub fn covers(&self, user_id: &str, config: &AblationConfig) -> bool {
        match &self.encoder {
            TextEncoder::Native => true,
            TextEncoder::External { tweets, description } => {
                tweets.contains_key(user_id)
                    && (!config.description_encoding || description.as_ref().is_none_or(|d| d.contains_key(user_id)))
            }
        }
    }

    /// Checks that every segment enabled by `config` can be produced.
    pub fn check(&self, config: &AblationConfig) -> Result<()> {
        config.validate()?;
        let missing = |flag: &str, what: &str| {
            Error::config(format!(
                "configuration {} enables {flag} but no {what} is available",
                config.name
            ))
        };
        if config.url_emb && self.url.is_none() {
            return Err(missing("url_emb", "URL embedder"));
        }
        if config.hashtag_emb && self.hashtag.is_none() {
            return Err(missing("hashtag_emb", "hashtag embedder"));
        }
        if config.mention_emb && self.mention.is_none() {
            return Err(missing("mention_emb", "mention embedder"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmentInfo {
    pub name: String,
    pub offset: usize,
    pub length: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub layout: Vec<SegmentInfo>,
}

impl FeatureVector {
    fn push(&mut self, name: &str, values: &[f64]) {
        self.layout.push(SegmentInfo {
            name: name.into(),
            offset: self.values.len(),
            length: values.len(),
        });
        self.values.extend_from_slice(values);
    }
}

/// Concatenates the enabled segments for one user.
pub fn assemble_features(user: &UserFeatures, artifacts: &Artifacts, config: &AblationConfig) -> Result<FeatureVector> {
    artifacts.check(config)?;
    let mut fv = FeatureVector {
        values: Vec::new(),
        layout: Vec::new(),
    };
    let (tweets, description): (Option<&[f64]>, Option<&[f64]>) = match &artifacts.encoder {
        TextEncoder::Native => (user.tweets.as_deref(), user.description.as_deref()),
        TextEncoder::External { tweets, description } => {
            let ext = tweets
                .get(&user.user_id)
                .map(Vec::as_slice)
                .ok_or_else(|| Error::validation(format!("no external tweet encoding for user {}", user.user_id)))?;
            let desc = match description {
                Some(d) => Some(d.get(&user.user_id).map(Vec::as_slice).ok_or_else(|| {
                    Error::validation(format!("no external description encoding for user {}", user.user_id))
                })?),
                None => user.description.as_deref(),
            };
            (Some(ext), desc)
        }
    };
    let tweets = tweets.ok_or_else(|| {
        Error::config("tweets_encoding is enabled but no word vectors or external encodings are configured")
    })?;
    fv.push("tweets", tweets);
    if config.description_encoding {
        let d = description
            .ok_or_else(|| Error::config("description_encoding is enabled but no description encoder is configured"))?;
        fv.push("description", d);
    }
    if config.empath {
        fv.push("empath", &user.empath);
    }
    if config.readability {
        fv.push("readability", &user.readability.to_vec());
    }
    if config.counts {
        fv.push("counts", &user.counts);
    }
    let entities = [
        (config.url_emb, "url", &artifacts.url, &user.urls),
        (config.hashtag_emb, "hashtag", &artifacts.hashtag, &user.hashtags),
        (config.mention_emb, "mention", &artifacts.mention, &user.mentions),
    ];
    for (on, name, embedder, doc) in entities {
        if on {
            let e = embedder.as_ref().expect("checked above");
            fv.push(name, &e.embed(doc));
        }
    }
    Ok(fv)
}
