//! Corpus schema, label derivation, eligibility filtering and balanced
//! train/test sampling.
//!
//! Corpora are JSON Lines files with one user per line:
//!
//! ```json
//! {"user_id": "u1", "description": "bio", "tweets": ["..."], "lang": ["en"],
//!  "counts": {"followers": 1, "friends": 2, "media": 0, "listed": 0,
//!             "statuses": 10, "favourites": 3},
//!  "label": "intp"}
//! ```
//!
//! `lang` and `label` may be omitted; a missing label is derived from the
//! personality-type links in the user's tweets. Unknown fields are ignored.

use std::collections::BTreeSet;
use std::fmt;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;
use std::str::FromStr;
use std::sync::LazyLock;

use rand::seq::SliceRandom;
use regex::Regex;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::resources::WordList;
use crate::rng;
use crate::textproc::detect_english;

pub const MAX_TWEETS: usize = 3200;

/// One of the sixteen four-letter type codes, stored lowercase.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct MbtiType([u8; 4]);

const AXES: [[u8; 2]; 4] = [*b"ie", *b"ns", *b"tf", *b"jp"];

impl MbtiType {
    pub fn parse(code: &str) -> Result<Self> {
        let lower = code.to_ascii_lowercase();
        let bytes = lower.as_bytes();
        if bytes.len() != 4 {
            return Err(Error::validation(format!(
                "type code {code:?} must have exactly 4 letters"
            )));
        }
        let mut out = [0u8; 4];
        for (pos, (&b, axis)) in bytes.iter().zip(AXES.iter()).enumerate() {
            if !axis.contains(&b) {
                return Err(Error::validation(format!(
                    "type code {code:?}: character {} at position {pos} must be one of {:?}",
                    b as char,
                    std::str::from_utf8(axis).unwrap()
                )));
            }
            out[pos] = b;
        }
        Ok(MbtiType(out))
    }

    pub fn as_str(&self) -> &str {
        std::str::from_utf8(&self.0).unwrap()
    }

    pub fn class(&self) -> PersonalityClass {
        map_class(*self)
    }

    /// All sixteen codes in lexicographic order.
    pub fn all() -> Vec<MbtiType> {
        let mut v = Vec::with_capacity(16);
        for a in AXES[0] {
            for b in AXES[1] {
                for c in AXES[2] {
                    for d in AXES[3] {
                        v.push(MbtiType([a, b, c, d]));
                    }
                }
            }
        }
        v.sort();
        v
    }
}

impl fmt::Display for MbtiType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for MbtiType {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        MbtiType::parse(s)
    }
}

impl Serialize for MbtiType {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for MbtiType {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        MbtiType::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// The four-way grouping of the sixteen types. The declaration order is the
/// reporting order and the tie-break order everywhere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PersonalityClass {
    Analyst,
    Diplomat,
    Sentinel,
    Explorer,
}

impl PersonalityClass {
    pub const ALL: [PersonalityClass; 4] = [
        PersonalityClass::Analyst,
        PersonalityClass::Diplomat,
        PersonalityClass::Sentinel,
        PersonalityClass::Explorer,
    ];
    pub const COUNT: usize = 4;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Self> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            PersonalityClass::Analyst => "analyst",
            PersonalityClass::Diplomat => "diplomat",
            PersonalityClass::Sentinel => "sentinel",
            PersonalityClass::Explorer => "explorer",
        }
    }
}

impl fmt::Display for PersonalityClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// N+T analysts, N+F diplomats, S+J sentinels, S+P explorers.
pub fn map_class(label: MbtiType) -> PersonalityClass {
    let [_, perceive, judge, life] = label.0;
    match (perceive, judge, life) {
        (b'n', b't', _) => PersonalityClass::Analyst,
        (b'n', _, _) => PersonalityClass::Diplomat,
        (_, _, b'j') => PersonalityClass::Sentinel,
        _ => PersonalityClass::Explorer,
    }
}

/// Profile metadata counts, in vectorization order.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProfileCounts {
    pub followers: u64,
    pub friends: u64,
    pub media: u64,
    pub listed: u64,
    pub statuses: u64,
    pub favourites: u64,
}

impl ProfileCounts {
    pub const FIELDS: [&'static str; 6] = ["followers", "friends", "media", "listed", "statuses", "favourites"];

    pub fn to_vec(&self) -> [f64; 6] {
        [
            self.followers as f64,
            self.friends as f64,
            self.media as f64,
            self.listed as f64,
            self.statuses as f64,
            self.favourites as f64,
        ]
    }
}

/// One line of a corpus file, before label resolution.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RawUser {
    pub user_id: String,
    #[serde(default)]
    pub description: String,
    pub tweets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<Vec<String>>,
    #[serde(default)]
    pub counts: ProfileCounts,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<MbtiType>,
}

/// A labeled user.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UserRecord {
    pub user_id: String,
    pub description: String,
    pub tweets: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lang: Option<Vec<String>>,
    pub counts: ProfileCounts,
    pub label: MbtiType,
    pub class: PersonalityClass,
}

impl UserRecord {
    pub fn new(
        user_id: impl Into<String>,
        description: impl Into<String>,
        tweets: Vec<String>,
        counts: ProfileCounts,
        label: MbtiType,
    ) -> Self {
        UserRecord {
            user_id: user_id.into(),
            description: description.into(),
            tweets,
            lang: None,
            counts,
            label,
            class: map_class(label),
        }
    }
}

/// Result of scanning a user's tweets for personality-type links.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum DerivedLabel {
    None,
    Unique(MbtiType),
    /// Several distinct codes were shared; the user is dropped.
    Ambiguous(Vec<MbtiType>),
}

static TYPE_LINK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)16personalities\.com/([a-z]{4})-personality").unwrap());

/// Scans tweets for `16personalities.com/<type>-personality` links.
pub fn derive_label<S: AsRef<str>>(tweets: &[S]) -> DerivedLabel {
    let codes: BTreeSet<MbtiType> = tweets
        .iter()
        .flat_map(|t| {
            TYPE_LINK
                .captures_iter(t.as_ref())
                .filter_map(|c| MbtiType::parse(&c[1]).ok())
                .collect::<Vec<_>>()
        })
        .collect();
    match codes.len() {
        0 => DerivedLabel::None,
        1 => DerivedLabel::Unique(*codes.iter().next().unwrap()),
        _ => DerivedLabel::Ambiguous(codes.into_iter().collect()),
    }
}

/// Why a raw user did not become a [`UserRecord`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Rejection {
    Unlabeled,
    Ambiguous,
}

/// Resolves the label of a raw user. A given label must agree with every
/// type link in the tweets; links to a different type make the user
/// ambiguous.
pub fn resolve(raw: RawUser) -> std::result::Result<UserRecord, Rejection> {
    let derived = derive_label(&raw.tweets);
    let label = match (raw.label, derived) {
        (_, DerivedLabel::Ambiguous(_)) => return Err(Rejection::Ambiguous),
        (Some(given), DerivedLabel::Unique(found)) if given != found => return Err(Rejection::Ambiguous),
        (Some(given), _) => given,
        (None, DerivedLabel::Unique(found)) => found,
        (None, DerivedLabel::None) => return Err(Rejection::Unlabeled),
    };
    let mut tweets = raw.tweets;
    let mut lang = raw.lang;
    // Tweets are stored newest first; keep the most recent ones.
    tweets.truncate(MAX_TWEETS);
    if let Some(l) = lang.as_mut() {
        l.truncate(MAX_TWEETS);
    }
    Ok(UserRecord {
        user_id: raw.user_id,
        description: raw.description,
        tweets,
        lang,
        counts: raw.counts,
        label,
        class: map_class(label),
    })
}

/// Parses a JSONL corpus. Blank lines are skipped; any malformed line is an
/// error carrying its 1-based line number.
pub fn read_raw_corpus(path: &Path) -> Result<Vec<RawUser>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut users = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawUser = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if let Some(lang) = &raw.lang {
            if lang.len() != raw.tweets.len() {
                return Err(Error::parse(
                    path,
                    i + 1,
                    format!(
                        "user {}: {} language tags for {} tweets",
                        raw.user_id,
                        lang.len(),
                        raw.tweets.len()
                    ),
                ));
            }
        }
        users.push(raw);
    }
    Ok(users)
}

pub fn read_users(path: &Path) -> Result<Vec<UserRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut users = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let user: UserRecord = serde_json::from_str(&line).map_err(|e| Error::parse(path, i + 1, e.to_string()))?;
        if user.class != map_class(user.label) {
            return Err(Error::parse(
                path,
                i + 1,
                format!("user {}: class does not match label", user.user_id),
            ));
        }
        users.push(user);
    }
    Ok(users)
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Keeps users with at least `min_english_tweets` English tweets, dropping
/// their non-English tweets. Order is preserved.
pub fn filter_eligible(users: Vec<UserRecord>, min_english_tweets: usize, common: &WordList) -> Vec<UserRecord> {
    users
        .into_iter()
        .filter_map(|mut u| {
            let keep: Vec<bool> = u
                .tweets
                .iter()
                .enumerate()
                .map(|(i, t)| {
                    let tag = u.lang.as_ref().and_then(|l| l.get(i)).map(String::as_str);
                    detect_english(t, tag, common)
                })
                .collect();
            let english = keep.iter().filter(|&&k| k).count();
            if english < min_english_tweets {
                return None;
            }
            let mut flags = keep.iter();
            u.tweets.retain(|_| *flags.next().unwrap());
            if let Some(lang) = u.lang.as_mut() {
                let mut flags = keep.iter();
                lang.retain(|_| *flags.next().unwrap());
            }
            Some(u)
        })
        .collect()
}

/// Balanced per-class train/test sample.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusSplit {
    pub train: Vec<UserRecord>,
    pub test: Vec<UserRecord>,
    pub seed: u64,
    pub warnings: Vec<String>,
}

impl CorpusSplit {
    pub fn manifest(&self) -> SplitManifest {
        let ids = |v: &[UserRecord]| v.iter().map(|u| u.user_id.clone()).collect::<Vec<_>>();
        let counts = |v: &[UserRecord]| {
            PersonalityClass::ALL
                .iter()
                .map(|c| ClassCount {
                    class: *c,
                    count: v.iter().filter(|u| u.class == *c).count(),
                })
                .collect()
        };
        SplitManifest {
            seed: self.seed,
            train_counts: counts(&self.train),
            test_counts: counts(&self.test),
            train: ids(&self.train),
            test: ids(&self.test),
            warnings: self.warnings.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCount {
    pub class: PersonalityClass,
    pub count: usize,
}

/// On-disk form of a [`CorpusSplit`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitManifest {
    pub seed: u64,
    pub train_counts: Vec<ClassCount>,
    pub test_counts: Vec<ClassCount>,
    pub train: Vec<String>,
    pub test: Vec<String>,
    #[serde(default)]
    pub warnings: Vec<String>,
}

impl SplitManifest {
    /// Rebuilds the split from the users it was drawn from.
    pub fn apply(&self, users: &[UserRecord]) -> Result<CorpusSplit> {
        let by_id: std::collections::HashMap<&str, &UserRecord> =
            users.iter().map(|u| (u.user_id.as_str(), u)).collect();
        let pick = |ids: &[String]| -> Result<Vec<UserRecord>> {
            ids.iter()
                .map(|id| {
                    by_id
                        .get(id.as_str())
                        .map(|u| (*u).clone())
                        .ok_or_else(|| Error::validation(format!("split references unknown user {id}")))
                })
                .collect()
        };
        Ok(CorpusSplit {
            train: pick(&self.train)?,
            test: pick(&self.test)?,
            seed: self.seed,
            warnings: self.warnings.clone(),
        })
    }
}

/// Samples `n_train_per_class` then `n_test_per_class` users per class
/// without replacement. Each class pool is shuffled with its own derived
/// stream, so adding users of one class never changes another class's draw.
pub fn balanced_split(
    users: &[UserRecord],
    n_train_per_class: usize,
    n_test_per_class: usize,
    seed: u64,
) -> CorpusSplit {
    let mut train = Vec::new();
    let mut test = Vec::new();
    let mut warnings = Vec::new();
    for class in PersonalityClass::ALL {
        let mut pool: Vec<&UserRecord> = users.iter().filter(|u| u.class == class).collect();
        let mut rng = rng::seeded(rng::derive_seed(seed, class.index() as u64));
        pool.shuffle(&mut rng);
        let wanted = n_train_per_class + n_test_per_class;
        if pool.len() < wanted {
            warnings.push(format!(
                "class {class}: requested {n_train_per_class} train + {n_test_per_class} test, only {} available",
                pool.len()
            ));
        }
        let n_train = n_train_per_class.min(pool.len());
        let n_test = n_test_per_class.min(pool.len() - n_train);
        train.extend(pool[..n_train].iter().map(|u| (*u).clone()));
        test.extend(pool[n_train..n_train + n_test].iter().map(|u| (*u).clone()));
    }
    CorpusSplit {
        train,
        test,
        seed,
        warnings,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn code(s: &str) -> MbtiType {
        MbtiType::parse(s).unwrap()
    }

    #[test]
    fn class_examples() {
        assert_eq!(map_class(code("intp")), PersonalityClass::Analyst);
        assert_eq!(map_class(code("isfj")), PersonalityClass::Sentinel);
        assert_eq!(map_class(code("esfp")), PersonalityClass::Explorer);
        assert_eq!(map_class(code("enfj")), PersonalityClass::Diplomat);
    }

    #[test]
    fn table_grouping_matches() {
        // Grouping of the sixteen types as published.
        let groups = [
            (PersonalityClass::Analyst, ["intp", "intj", "entj", "entp"]),
            (PersonalityClass::Diplomat, ["enfj", "infj", "infp", "enfp"]),
            (PersonalityClass::Sentinel, ["estj", "esfj", "isfj", "istj"]),
            (PersonalityClass::Explorer, ["isfp", "istp", "estp", "esfp"]),
        ];
        for (class, codes) in groups {
            for c in codes {
                assert_eq!(map_class(code(c)), class, "{c}");
            }
        }
    }

    #[test]
    fn map_class_partitions_four_ways() {
        let all = MbtiType::all();
        assert_eq!(all.len(), 16);
        for class in PersonalityClass::ALL {
            assert_eq!(all.iter().filter(|t| map_class(**t) == class).count(), 4);
        }
    }

    #[test]
    fn malformed_code_names_position() {
        let err = MbtiType::parse("ixtp").unwrap_err().to_string();
        assert!(err.contains("position 1"), "{err}");
        assert!(MbtiType::parse("int").is_err());
        assert_eq!(code("INTP").as_str(), "intp");
    }

    #[test]
    fn derive_label_examples() {
        assert_eq!(
            derive_label(&["check https://www.16personalities.com/intp-personality"]),
            DerivedLabel::Unique(code("intp"))
        );
        assert_eq!(
            derive_label(&[
                "me: 16personalities.com/intp-personality",
                "actually HTTPS://16Personalities.com/ENFJ-personality",
            ]),
            DerivedLabel::Ambiguous(vec![code("enfj"), code("intp")])
        );
        assert_eq!(derive_label(&["no links here"]), DerivedLabel::None);
        assert_eq!(
            derive_label(&["16personalities.com/abcd-personality"]),
            DerivedLabel::None
        );
    }

    #[test]
    fn resolve_rejects_conflicting_links() {
        let raw = RawUser {
            user_id: "u".into(),
            description: String::new(),
            tweets: vec!["16personalities.com/enfj-personality".into()],
            lang: None,
            counts: ProfileCounts::default(),
            label: Some(code("intp")),
        };
        assert_eq!(resolve(raw.clone()).unwrap_err(), Rejection::Ambiguous);
        let unlabeled = RawUser {
            tweets: vec!["hello".into()],
            label: None,
            ..raw.clone()
        };
        assert_eq!(resolve(unlabeled).unwrap_err(), Rejection::Unlabeled);
        let derived = RawUser { label: None, ..raw };
        assert_eq!(resolve(derived).unwrap().label, code("enfj"));
    }

    fn user(id: &str, class_code: &str, tweets: Vec<String>) -> UserRecord {
        UserRecord::new(id, "", tweets, ProfileCounts::default(), code(class_code))
    }

    #[test]
    fn eligibility_boundary() {
        let common = WordList::english_common();
        let mut tweets: Vec<String> = (0..150).map(|_| "x".to_string()).collect();
        tweets.extend((0..50).map(|_| "y".to_string()));
        let mut lang: Vec<String> = vec!["en".into(); 150];
        lang.extend(vec!["fr".to_string(); 50]);
        let mut a = user("a", "intp", tweets);
        a.lang = Some(lang);
        let mut b = user("b", "intp", vec!["x".into(); 99]);
        b.lang = Some(vec!["en".into(); 99]);
        let mut c = user("c", "intp", vec!["x".into(); 100]);
        c.lang = Some(vec!["en".into(); 100]);
        let kept = filter_eligible(vec![a, b, c], 100, &common);
        assert_eq!(kept.len(), 2);
        assert_eq!(kept[0].user_id, "a");
        assert_eq!(kept[0].tweets.len(), 150);
        assert_eq!(kept[0].lang.as_ref().unwrap().len(), 150);
        assert!(kept[0].tweets.iter().all(|t| t == "x"));
        assert_eq!(kept[1].user_id, "c");
    }

    fn corpus(per_class: usize) -> Vec<UserRecord> {
        let codes = ["intp", "infp", "isfj", "isfp"];
        let mut v = Vec::new();
        for (ci, c) in codes.iter().enumerate() {
            for i in 0..per_class {
                v.push(user(&format!("{ci}-{i}"), c, vec![]));
            }
        }
        v
    }

    #[test]
    fn split_sizes() {
        let users = corpus(6000);
        let s = balanced_split(&users, 4000, 1000, 1);
        assert_eq!(s.train.len(), 16000);
        assert_eq!(s.test.len(), 4000);
        assert!(s.warnings.is_empty());
        let m = s.manifest();
        assert!(m.train_counts.iter().all(|c| c.count == 4000));
        assert!(m.test_counts.iter().all(|c| c.count == 1000));
    }

    #[test]
    fn split_empty_request_and_shortfall() {
        let users = corpus(10);
        let s = balanced_split(&users, 0, 0, 1);
        assert!(s.train.is_empty() && s.test.is_empty());
        let s = balanced_split(&users, 8, 5, 1);
        assert_eq!(s.train.len(), 32);
        assert_eq!(s.test.len(), 8);
        assert_eq!(s.warnings.len(), 4);
    }

    #[test]
    fn split_is_deterministic_and_manifest_round_trips() {
        let users = corpus(50);
        let a = balanced_split(&users, 20, 10, 99);
        let b = balanced_split(&users, 20, 10, 99);
        assert_eq!(a.manifest(), b.manifest());
        let c = balanced_split(&users, 20, 10, 100);
        assert_ne!(a.manifest().train, c.manifest().train);
        let json = serde_json::to_string(&a.manifest()).unwrap();
        let back: SplitManifest = serde_json::from_str(&json).unwrap();
        assert_eq!(back.apply(&users).unwrap(), a);
    }

    #[test]
    fn jsonl_round_trip_and_line_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.jsonl");
        std::fs::write(
            &path,
            "{\"user_id\":\"a\",\"tweets\":[\"hi\"],\"label\":\"intp\",\"extra\":1}\n\n{\"user_id\":\"b\",\"tweets\":[]}\n",
        )
        .unwrap();
        let raw = read_raw_corpus(&path).unwrap();
        assert_eq!(raw.len(), 2);
        assert_eq!(raw[0].label, Some(code("intp")));
        std::fs::write(&path, "{\"user_id\":\"a\",\"tweets\":[]}\n{broken\n").unwrap();
        match read_raw_corpus(&path).unwrap_err() {
            Error::Parse { line, .. } => assert_eq!(line, 2),
            e => panic!("unexpected {e}"),
        }
        std::fs::write(&path, "{\"user_id\":\"a\",\"tweets\":[\"x\"],\"label\":\"xxxx\"}\n").unwrap();
        assert!(matches!(read_raw_corpus(&path), Err(Error::Parse { line: 1, .. })));
    }

    proptest! {
        #[test]
        fn derive_label_idempotent_under_duplication(picks in proptest::collection::vec(0usize..20, 0..6)) {
            let all = MbtiType::all();
            let tweets: Vec<String> = picks
                .iter()
                .map(|&i| if i < 16 { format!("x 16personalities.com/{}-personality", all[i]) } else { "plain".into() })
                .collect();
            let doubled: Vec<String> = tweets.iter().chain(tweets.iter()).cloned().collect();
            prop_assert_eq!(derive_label(&tweets), derive_label(&doubled));
        }

        #[test]
        fn split_disjoint(sizes in proptest::collection::vec(0usize..30, 4), n_train in 0usize..20, n_test in 0usize..20, seed in any::<u64>()) {
            let codes = ["intp", "infp", "isfj", "isfp"];
            let mut users = Vec::new();
            for (ci, &n) in sizes.iter().enumerate() {
                for i in 0..n {
                    users.push(user(&format!("{ci}-{i}"), codes[ci], vec![]));
                }
            }
            let s = balanced_split(&users, n_train, n_test, seed);
            let train: BTreeSet<_> = s.train.iter().map(|u| u.user_id.clone()).collect();
            prop_assert!(s.test.iter().all(|u| !train.contains(&u.user_id)));
            for (ci, &n) in sizes.iter().enumerate() {
                let class = PersonalityClass::ALL[ci];
                prop_assert_eq!(s.train.iter().filter(|u| u.class == class).count(), n_train.min(n));
            }
        }

        #[test]
        fn filtering_never_grows_or_reorders(flags in proptest::collection::vec(proptest::collection::vec(any::<bool>(), 0..12), 0..8), min in 0usize..8) {
            let common = WordList::english_common();
            let users: Vec<UserRecord> = flags.iter().enumerate().map(|(i, f)| {
                let mut u = user(&i.to_string(), "intp", vec!["t".into(); f.len()]);
                u.lang = Some(f.iter().map(|&b| if b { "en".into() } else { "de".into() }).collect());
                u
            }).collect();
            let kept = filter_eligible(users.clone(), min, &common);
            let mut last = None;
            for k in &kept {
                let pos = users.iter().position(|u| u.user_id == k.user_id).unwrap();
                prop_assert!(last.is_none_or(|l| l < pos));
                prop_assert!(k.tweets.len() <= users[pos].tweets.len());
                prop_assert!(k.tweets.len() >= min);
                last = Some(pos);
            }
        }
    }
}
