//! Seeded generator for labeled four-class corpora with planted structure.
//!
//! Each class gets its own vocabulary (drawn from distinct lexicon
//! categories), hashtags, mention handles, URL domains, professions, tweet
//! length and profile-count medians. A fraction of users are "confusers":
//! their tweets, description, mentions and URLs imitate another class while
//! their hashtags, label and counts stay true. The generator also emits a
//! word-vector table in which each class vocabulary clusters around a class
//! centroid, and optional noise users that ingestion must reject or filter.

use std::collections::{BTreeSet, HashSet};
use std::path::Path;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::corpus::{write_jsonl, MbtiType, PersonalityClass, ProfileCounts, RawUser};
use crate::embeddings::WordVectorTable;
use crate::error::Result;
use crate::lexicon::Lexicon;
use crate::resources::WordList;
use crate::rng::{self, ChaCha8Rng};

const K: usize = PersonalityClass::COUNT;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SyntheticParams {
    /// Eligible labeled users per class.
    pub users_per_class: usize,
    /// English tweets per eligible user.
    pub tweets_per_user: usize,
    /// Extra non-English tweets per user.
    pub foreign_tweets: usize,
    pub confuser_rate: f64,
    /// Users of each noise kind: unlabeled, ambiguous, too few tweets.
    pub noise_users: usize,
    pub vector_dim: usize,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        SyntheticParams {
            users_per_class: 50,
            tweets_per_user: 30,
            foreign_tweets: 3,
            confuser_rate: 0.12,
            noise_users: 2,
            vector_dim: 16,
            seed: 7,
        }
    }
}

/// What was planted for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassPlan {
    pub class: PersonalityClass,
    pub categories: Vec<String>,
    pub vocabulary: Vec<String>,
    pub hashtags: Vec<String>,
    pub mentions: Vec<String>,
    pub domains: Vec<String>,
    pub professions: Vec<String>,
    pub words_per_tweet: usize,
    /// Medians in profile-count field order.
    pub count_medians: [f64; 6],
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub users: Vec<RawUser>,
    pub vectors: WordVectorTable,
    pub plans: Vec<ClassPlan>,
    /// Ids of users whose text imitates another class.
    pub confusers: BTreeSet<String>,
    /// Ids of users that ingestion or filtering must drop.
    pub noise: BTreeSet<String>,
}

const CATEGORIES: [[&str; 2]; K] = [
    ["science", "programming"],
    ["love", "art"],
    ["office", "banking"],
    ["sports", "hiking"],
];

const HASHTAGS: [[&str; 8]; K] = [
    [
        "datascience",
        "machinelearning",
        "coding",
        "physics",
        "opensource",
        "math",
        "research",
        "logic",
    ],
    [
        "kindness",
        "poetry",
        "artlife",
        "lovewins",
        "selfcare",
        "community",
        "inspiration",
        "dreams",
    ],
    [
        "productivity",
        "finance",
        "planning",
        "accounting",
        "teamwork",
        "schedule",
        "career",
        "budget",
    ],
    [
        "adventure",
        "roadtrip",
        "surfing",
        "climbing",
        "festival",
        "wanderlust",
        "trailrun",
        "extreme",
    ],
];
const SHARED_HASHTAGS: [&str; 4] = ["monday", "news", "weekend", "tbt"];

const HANDLE_PREFIX: [&str; K] = ["labnotes", "kindheart", "deskdaily", "trailhead"];
const SHARED_HANDLES: [&str; 2] = ["newsdesk", "weatherbot"];
const SHARED_DOMAINS: [&str; 2] = ["example.com", "news.site"];

const PROFESSIONS: [[&str; 3]; K] = [
    ["engineer", "scientist", "programmer"],
    ["therapist", "poet", "counselor"],
    ["dentist", "accountant", "nurse"],
    ["photographer", "chef", "pilot"],
];
const GENERIC_PROFESSIONS: [&str; 2] = ["student", "blogger"];

const WORDS_PER_TWEET: [usize; K] = [9, 12, 15, 18];

const COUNT_MEDIANS: [[f64; 6]; K] = [
    [500.0, 400.0, 80.0, 10.0, 3000.0, 2500.0],
    [700.0, 600.0, 120.0, 6.0, 4000.0, 5000.0],
    [600.0, 500.0, 100.0, 8.0, 3500.0, 3000.0],
    [900.0, 700.0, 200.0, 5.0, 6000.0, 4000.0],
];

const FOREIGN: [&str; 3] = [
    "これは日本語のツイートです",
    "今日はいい天気ですね",
    "ありがとうございました",
];

fn class_vocabularies(lexicon: &Lexicon, stopwords: &WordList) -> Vec<Vec<String>> {
    let terms_of = |cats: &[&str]| -> BTreeSet<String> {
        cats.iter()
            .filter_map(|c| lexicon.names().iter().position(|n| n == c))
            .flat_map(|i| lexicon.terms(i).iter().cloned())
            .collect()
    };
    let per_class: Vec<BTreeSet<String>> = CATEGORIES.iter().map(|c| terms_of(c)).collect();
    let reserved: HashSet<&str> = PROFESSIONS
        .iter()
        .flatten()
        .chain(&GENERIC_PROFESSIONS)
        .copied()
        .collect();
    (0..K)
        .map(|k| {
            per_class[k]
                .iter()
                .filter(|w| {
                    w.len() >= 3
                        && w.chars().all(|c| c.is_ascii_lowercase())
                        && !stopwords.contains(w)
                        && !reserved.contains(w.as_str())
                        && (0..K).all(|o| o == k || !per_class[o].contains(*w))
                })
                .take(60)
                .cloned()
                .collect()
        })
        .collect()
}

fn filler_words(exclude: &HashSet<&str>, rng: &mut ChaCha8Rng) -> Vec<String> {
    let dale = WordList::dale();
    let mut words: Vec<String> = crate::resources::DALE_FAMILIAR
        .lines()
        .map(str::trim)
        .filter(|w| {
            (3..=8).contains(&w.len())
                && w.chars().all(|c| c.is_ascii_lowercase())
                && dale.contains(w)
                && !exclude.contains(w)
        })
        .map(String::from)
        .collect();
    words.sort();
    words.dedup();
    words.shuffle(rng);
    words.truncate(300);
    words.sort();
    words
}

fn gaussian(rng: &mut ChaCha8Rng, dim: usize, scale: f64) -> Vec<f64> {
    (0..dim)
        .map(|_| {
            let z: f64 = StandardNormal.sample(rng);
            z * scale
        })
        .collect()
}

fn plans(vocab: Vec<Vec<String>>) -> Vec<ClassPlan> {
    PersonalityClass::ALL
        .iter()
        .zip(vocab)
        .map(|(&class, vocabulary)| {
            let k = class.index();
            ClassPlan {
                class,
                categories: CATEGORIES[k].iter().map(|s| s.to_string()).collect(),
                vocabulary,
                hashtags: HASHTAGS[k].iter().map(|s| s.to_string()).collect(),
                mentions: (0..8).map(|i| format!("{}{i}", HANDLE_PREFIX[k])).collect(),
                domains: (0..6).map(|i| format!("{}{i}.com", HANDLE_PREFIX[k])).collect(),
                professions: PROFESSIONS[k].iter().map(|s| s.to_string()).collect(),
                words_per_tweet: WORDS_PER_TWEET[k],
                count_medians: COUNT_MEDIANS[k],
            }
        })
        .collect()
}

fn capitalize(s: &str) -> String {
    let mut c = s.chars();
    match c.next() {
        Some(f) => f.to_uppercase().chain(c).collect(),
        None => String::new(),
    }
}

struct Writer<'a> {
    plans: &'a [ClassPlan],
    filler: &'a [String],
}

impl Writer<'_> {
    fn sentence_words(&self, apparent: usize, n: usize, rng: &mut ChaCha8Rng) -> Vec<String> {
        let plan = &self.plans[apparent];
        (0..n)
            .map(|_| {
                if rng.random_bool(0.35) {
                    plan.vocabulary.choose(rng).unwrap().clone()
                } else {
                    self.filler.choose(rng).unwrap().clone()
                }
            })
            .collect()
    }

    fn tweet(&self, truth: usize, apparent: usize, rng: &mut ChaCha8Rng) -> String {
        let plan = &self.plans[apparent];
        let n = plan.words_per_tweet + rng.random_range(0..5) - 2;
        let words = self.sentence_words(apparent, n, rng);
        let mut text = if n > 10 {
            let (a, b) = words.split_at(n / 2);
            format!("{}. {}.", capitalize(&a.join(" ")), capitalize(&b.join(" ")))
        } else {
            format!("{}!", capitalize(&words.join(" ")))
        };
        if rng.random_bool(0.1) {
            text.push_str(&format!(" {} times", rng.random_range(2..500)));
        }
        if rng.random_bool(0.55) {
            let tag = if rng.random_bool(0.85) {
                self.plans[truth].hashtags.choose(rng).unwrap().as_str()
            } else {
                SHARED_HASHTAGS.choose(rng).unwrap()
            };
            text.push_str(&format!(" #{tag}"));
        }
        if rng.random_bool(0.3) {
            let handle = if rng.random_bool(0.8) {
                plan.mentions.choose(rng).unwrap().as_str()
            } else {
                SHARED_HANDLES.choose(rng).unwrap()
            };
            text = format!("@{handle} {text}");
        }
        if rng.random_bool(0.25) {
            let domain = if rng.random_bool(0.8) {
                plan.domains.choose(rng).unwrap().as_str()
            } else {
                SHARED_DOMAINS.choose(rng).unwrap()
            };
            text.push_str(&format!(" https://www.{domain}/p/{}", rng.random_range(0..10_000)));
        }
        if rng.random_bool(0.1) {
            text.push_str(" 🎉");
        }
        text
    }

    fn description(&self, apparent: usize, confuser: bool, rng: &mut ChaCha8Rng) -> String {
        let profession = if confuser {
            GENERIC_PROFESSIONS.choose(rng).unwrap().to_string()
        } else {
            self.plans[apparent].professions.choose(rng).unwrap().clone()
        };
        let w = self.sentence_words(apparent, 3, rng);
        format!("{} who enjoys {} and {}. {}", capitalize(&profession), w[0], w[1], w[2])
    }
}

fn counts(plan: &ClassPlan, rng: &mut ChaCha8Rng) -> ProfileCounts {
    let v = plan.count_medians.map(|m| {
        let z: f64 = StandardNormal.sample(rng);
        (m * (0.5 * z).exp()).round() as u64
    });
    ProfileCounts {
        followers: v[0],
        friends: v[1],
        media: v[2],
        listed: v[3],
        statuses: v[4],
        favourites: v[5],
    }
}

fn label_link(code: &str) -> String {
    format!("Took the test! https://www.16personalities.com/{code}-personality")
}

pub fn generate(params: &SyntheticParams) -> Result<SyntheticCorpus> {
    let mut rng = rng::seeded(params.seed);
    let lexicon = Lexicon::bundled();
    let stopwords = WordList::stopwords();
    let plans = plans(class_vocabularies(&lexicon, &stopwords));
    let mut exclude: HashSet<&str> = plans
        .iter()
        .flat_map(|p| p.vocabulary.iter().map(String::as_str))
        .collect();
    exclude.extend(PROFESSIONS.iter().flatten());
    exclude.extend(GENERIC_PROFESSIONS);
    let filler = filler_words(&exclude, &mut rng);

    let dim = params.vector_dim;
    let mut entries = Vec::new();
    for plan in &plans {
        let centroid = gaussian(&mut rng, dim, 1.0);
        for w in plan.vocabulary.iter().chain(&plan.professions) {
            let v: Vec<f64> = gaussian(&mut rng, dim, 0.7)
                .iter()
                .zip(&centroid)
                .map(|(a, b)| a + b)
                .collect();
            entries.push((w.clone(), v));
        }
    }
    for w in filler
        .iter()
        .cloned()
        .chain(GENERIC_PROFESSIONS.iter().map(|s| s.to_string()))
    {
        entries.push((w, gaussian(&mut rng, dim, 0.8)));
    }
    let vectors = WordVectorTable::from_entries(dim, entries)?;

    let writer = Writer {
        plans: &plans,
        filler: &filler,
    };
    let types = MbtiType::all();
    let mut users = Vec::new();
    let mut confuser_flags = Vec::new();
    for (truth, &class) in PersonalityClass::ALL.iter().enumerate() {
        let codes: Vec<&MbtiType> = types.iter().filter(|t| t.class() == class).collect();
        for _ in 0..params.users_per_class {
            let confuser = rng.random_bool(params.confuser_rate);
            let apparent = if confuser {
                (truth + rng.random_range(1..K)) % K
            } else {
                truth
            };
            let code = **codes.choose(&mut rng).unwrap();
            let mut tweets: Vec<String> = (0..params.tweets_per_user)
                .map(|_| writer.tweet(truth, apparent, &mut rng))
                .collect();
            let label = if rng.random_bool(0.1) {
                tweets.push(label_link(code.as_str()));
                None
            } else {
                Some(code)
            };
            let mut lang: Vec<String> = vec!["en".into(); tweets.len()];
            for _ in 0..params.foreign_tweets {
                let at = rng.random_range(0..=tweets.len());
                tweets.insert(at, FOREIGN.choose(&mut rng).unwrap().to_string());
                lang.insert(at, "ja".into());
            }
            let lang = rng.random_bool(0.5).then_some(lang);
            users.push(RawUser {
                user_id: String::new(),
                description: writer.description(apparent, confuser, &mut rng),
                tweets,
                lang,
                counts: counts(&plans[truth], &mut rng),
                label,
            });
            confuser_flags.push(Some(confuser));
        }
    }
    for i in 0..params.noise_users * 3 {
        let truth = i % K;
        let code = types.iter().find(|t| t.class().index() == truth).copied().unwrap();
        let n = if i % 3 == 2 {
            params.tweets_per_user / 4
        } else {
            params.tweets_per_user
        };
        let mut tweets: Vec<String> = (0..n).map(|_| writer.tweet(truth, truth, &mut rng)).collect();
        let label = match i % 3 {
            0 => None,
            1 => {
                let other = types.iter().find(|t| **t != code).unwrap();
                tweets.push(label_link(code.as_str()));
                tweets.push(label_link(other.as_str()));
                None
            }
            _ => Some(code),
        };
        users.push(RawUser {
            user_id: String::new(),
            description: writer.description(truth, false, &mut rng),
            tweets,
            lang: None,
            counts: counts(&plans[truth], &mut rng),
            label,
        });
        confuser_flags.push(None);
    }

    let mut order: Vec<usize> = (0..users.len()).collect();
    order.shuffle(&mut rng);
    let mut shuffled = Vec::with_capacity(users.len());
    let mut confusers = BTreeSet::new();
    let mut noise = BTreeSet::new();
    let mut slots: Vec<Option<RawUser>> = users.into_iter().map(Some).collect();
    for (pos, &i) in order.iter().enumerate() {
        let mut u = slots[i].take().unwrap();
        u.user_id = format!("u{pos:05}");
        match confuser_flags[i] {
            Some(true) => {
                confusers.insert(u.user_id.clone());
            }
            Some(false) => {}
            None => {
                noise.insert(u.user_id.clone());
            }
        }
        shuffled.push(u);
    }
    Ok(SyntheticCorpus {
        users: shuffled,
        vectors,
        plans,
        confusers,
        noise,
    })
}

impl SyntheticCorpus {
    /// Writes `corpus.jsonl` and `vectors.txt` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        std::fs::create_dir_all(dir).map_err(|e| crate::error::Error::io(dir, e))?;
        write_jsonl(&dir.join("corpus.jsonl"), &self.users)?;
        self.vectors.save(&dir.join("vectors.txt"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{filter_eligible, resolve};

    #[test]
    fn deterministic_for_a_seed() {
        let p = SyntheticParams::default();
        let a = generate(&p).unwrap();
        let b = generate(&p).unwrap();
        assert_eq!(
            serde_json::to_string(&a.users).unwrap(),
            serde_json::to_string(&b.users).unwrap()
        );
    }

    #[test]
    fn vocabularies_are_disjoint_and_nonempty() {
        let c = generate(&SyntheticParams::default()).unwrap();
        let mut seen = HashSet::new();
        for p in &c.plans {
            assert!(p.vocabulary.len() >= 20, "{:?} has {}", p.class, p.vocabulary.len());
            for w in &p.vocabulary {
                assert!(seen.insert(w.clone()), "{w} shared");
            }
        }
    }

    #[test]
    fn noise_users_are_dropped_by_ingestion() {
        let p = SyntheticParams::default();
        let c = generate(&p).unwrap();
        let common = WordList::english_common();
        let resolved: Vec<_> = c.users.iter().cloned().filter_map(|u| resolve(u).ok()).collect();
        let eligible = filter_eligible(resolved, p.tweets_per_user / 2, &common);
        assert_eq!(eligible.len(), 4 * p.users_per_class);
        assert!(eligible.iter().all(|u| !c.noise.contains(&u.user_id)));
        for class in PersonalityClass::ALL {
            assert_eq!(eligible.iter().filter(|u| u.class == class).count(), p.users_per_class);
        }
        assert!(eligible
            .iter()
            .flat_map(|u| &u.tweets)
            .all(|t| !FOREIGN.contains(&t.as_str())));
    }
}
