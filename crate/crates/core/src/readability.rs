//! The eight readability metrics, per text and averaged per user.
//!
//! Counts used by the formulas, with `W` words, `S` sentences, `Y`
//! syllables, `L` letters, `C` words of three or more syllables, `D` words
//! missing from the Dale-Chall familiar list and `U` words missing from the
//! Spache list:
//!
//! | metric | formula |
//! |---|---|
//! | flesch | `206.835 - 1.015 W/S - 84.6 Y/W` |
//! | flesch_kincaid | `0.39 W/S + 11.8 Y/W - 15.59` |
//! | coleman_liau | `0.0588 (100 L/W) - 0.296 (100 S/W) - 15.8` |
//! | dale_chall | `0.1579 (100 D/W) + 0.0496 W/S`, `+ 3.6365` when `100 D/W > 5` |
//! | gunning_fog | `0.4 (W/S + 100 C/W)` |
//! | ari | `4.71 L/W + 0.5 W/S - 21.43` |
//! | linsear_write | `r/2 - 1` if `r <= 20` else `r/2`, `r = (easy + 3 hard)/S` |
//! | spache | `0.141 W/S + 0.086 (100 U/W) + 0.839` |

use serde::{Deserialize, Serialize};

use crate::corpus::UserRecord;
use crate::error::{Error, Result};
use crate::resources::WordList;
use crate::textproc::{clean_tweet, count_syllables, split_sentences, tokenize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityScores {
    pub flesch: f64,
    pub flesch_kincaid: f64,
    pub coleman_liau: f64,
    pub dale_chall: f64,
    pub gunning_fog: f64,
    pub ari: f64,
    pub linsear_write: f64,
    pub spache: f64,
}

impl ReadabilityScores {
    pub const FIELDS: [&'static str; 8] = [
        "flesch",
        "flesch_kincaid",
        "coleman_liau",
        "dale_chall",
        "gunning_fog",
        "ari",
        "linsear_write",
        "spache",
    ];

    pub fn to_vec(&self) -> [f64; 8] {
        [
            self.flesch,
            self.flesch_kincaid,
            self.coleman_liau,
            self.dale_chall,
            self.gunning_fog,
            self.ari,
            self.linsear_write,
            self.spache,
        ]
    }

    pub fn from_vec(v: [f64; 8]) -> Self {
        ReadabilityScores {
            flesch: v[0],
            flesch_kincaid: v[1],
            coleman_liau: v[2],
            dale_chall: v[3],
            gunning_fog: v[4],
            ari: v[5],
            linsear_write: v[6],
            spache: v[7],
        }
    }
}

/// Familiar-word lists for the Dale-Chall and Spache formulas.
#[derive(Debug, Clone)]
pub struct FamiliarLists {
    pub dale: WordList,
    pub spache: WordList,
}

impl FamiliarLists {
    pub fn bundled() -> Self {
        FamiliarLists {
            dale: WordList::dale(),
            spache: WordList::spache(),
        }
    }

    pub fn new(dale: WordList, spache: WordList) -> Result<Self> {
        if dale.is_empty() {
            return Err(Error::config("familiar-word list `dale` is empty"));
        }
        if spache.is_empty() {
            return Err(Error::config("familiar-word list `spache` is empty"));
        }
        Ok(FamiliarLists { dale, spache })
    }
}

/// Raw counts behind the formulas.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct TextCounts {
    pub words: usize,
    pub sentences: usize,
    pub syllables: usize,
    pub letters: usize,
    pub complex: usize,
    pub easy: usize,
    pub unfamiliar_dale: usize,
    pub unfamiliar_spache: usize,
}

pub fn text_counts(text: &str, lists: &FamiliarLists) -> Result<TextCounts> {
    let tokens = tokenize(text);
    let sentences = split_sentences(text).len();
    if tokens.is_empty() || sentences == 0 {
        return Err(Error::validation(
            "readability needs at least one word and one sentence",
        ));
    }
    let mut c = TextCounts {
        words: tokens.len(),
        sentences,
        ..TextCounts::default()
    };
    for tok in &tokens {
        let lower = tok.to_lowercase();
        let syl = count_syllables(&lower)?;
        c.syllables += syl;
        c.letters += tok.chars().filter(|ch| ch.is_alphabetic()).count();
        if syl >= 3 {
            c.complex += 1;
        } else {
            c.easy += 1;
        }
        if !lists.dale.contains(&lower) {
            c.unfamiliar_dale += 1;
        }
        if !lists.spache.contains(&lower) {
            c.unfamiliar_spache += 1;
        }
    }
    Ok(c)
}

pub fn scores_from_counts(c: &TextCounts) -> ReadabilityScores {
    let w = c.words as f64;
    let s = c.sentences as f64;
    let wps = w / s;
    let spw = c.syllables as f64 / w;
    let pct_dale = 100.0 * c.unfamiliar_dale as f64 / w;
    let mut dale_chall = 0.1579 * pct_dale + 0.0496 * wps;
    if pct_dale > 5.0 {
        dale_chall += 3.6365;
    }
    let r = (c.easy as f64 + 3.0 * c.complex as f64) / s;
    let linsear_write = if r <= 20.0 { r / 2.0 - 1.0 } else { r / 2.0 };
    ReadabilityScores {
        flesch: 206.835 - 1.015 * wps - 84.6 * spw,
        flesch_kincaid: 0.39 * wps + 11.8 * spw - 15.59,
        coleman_liau: 0.0588 * (100.0 * c.letters as f64 / w) - 0.296 * (100.0 * s / w) - 15.8,
        dale_chall,
        gunning_fog: 0.4 * (wps + 100.0 * c.complex as f64 / w),
        ari: 4.71 * (c.letters as f64 / w) + 0.5 * wps - 21.43,
        linsear_write,
        spache: 0.141 * wps + 0.086 * (100.0 * c.unfamiliar_spache as f64 / w) + 0.839,
    }
}

pub fn compute_readability(text: &str, lists: &FamiliarLists) -> Result<ReadabilityScores> {
    Ok(scores_from_counts(&text_counts(text, lists)?))
}

/// Mean of per-tweet scores over a user's cleaned, normalized tweets. Tweets
/// with no tokens are skipped.
pub fn user_readability(user: &UserRecord, lists: &FamiliarLists) -> Result<ReadabilityScores> {
    let normalized: Vec<String> = user.tweets.iter().map(|t| clean_tweet(t).1).collect();
    mean_readability(normalized.iter().map(String::as_str), lists)
        .map_err(|_| Error::validation(format!("user {} has no scoreable tweets", user.user_id)))
}

/// Mean scores over already-normalized texts.
pub fn mean_readability<'a>(
    texts: impl IntoIterator<Item = &'a str>,
    lists: &FamiliarLists,
) -> Result<ReadabilityScores> {
    let mut sum = [0.0f64; 8];
    let mut n = 0usize;
    for text in texts {
        if tokenize(text).is_empty() {
            continue;
        }
        let s = compute_readability(text, lists)?.to_vec();
        for (acc, v) in sum.iter_mut().zip(s) {
            *acc += v;
        }
        n += 1;
    }
    if n == 0 {
        return Err(Error::validation("no scoreable texts"));
    }
    Ok(ReadabilityScores::from_vec(sum.map(|v| v / n as f64)))
}
