//! Bundled word lists and the loader for one-word-per-line files.
//!
//! See `resources/PROVENANCE.md` for where each list comes from.

use std::collections::HashSet;
use std::path::Path;

use crate::error::{Error, Result};

pub const LEXICON_TSV: &str = include_str!("../resources/lexicon.tsv");
pub const DALE_FAMILIAR: &str = include_str!("../resources/dale_familiar.txt");
pub const SPACHE_FAMILIAR: &str = include_str!("../resources/spache_familiar.txt");
pub const STOPWORDS: &str = include_str!("../resources/stopwords.txt");
pub const ENGLISH_COMMON: &str = include_str!("../resources/english_common.txt");

/// A set of lowercase words.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct WordList {
    words: HashSet<String>,
}

impl WordList {
    pub fn parse(text: &str) -> Self {
        let words = text
            .lines()
            .map(|l| l.trim())
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect();
        WordList { words }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(Self::parse(&text))
    }

    pub fn contains(&self, word: &str) -> bool {
        self.words.contains(word)
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn dale() -> Self {
        Self::parse(DALE_FAMILIAR)
    }

    pub fn spache() -> Self {
        Self::parse(SPACHE_FAMILIAR)
    }

    pub fn stopwords() -> Self {
        Self::parse(STOPWORDS)
    }

    pub fn english_common() -> Self {
        Self::parse(ENGLISH_COMMON)
    }
}

impl<S: Into<String>> FromIterator<S> for WordList {
    fn from_iter<I: IntoIterator<Item = S>>(iter: I) -> Self {
        WordList {
            words: iter.into_iter().map(|s| s.into().to_lowercase()).collect(),
        }
    }
}
