//! Lexical-category scoring, seed-term expansion and per-class category
//! distinctiveness.
//!
//! Lexicon files are TSV, one category per line:
//! `category<TAB>term1 term2 ...`, lowercase.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::path::Path;

use crate::corpus::PersonalityClass;
use crate::embeddings::WordVectorTable;
use crate::error::{Error, Result};
use crate::resources::LEXICON_TSV;

pub const BUNDLED_CATEGORIES: usize = 194;

#[derive(Debug, Clone)]
pub struct Lexicon {
    names: Vec<String>,
    terms: Vec<HashSet<String>>,
    index: HashMap<String, Vec<usize>>,
}

impl Lexicon {
    pub fn new(categories: Vec<(String, HashSet<String>)>) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut names = Vec::with_capacity(categories.len());
        let mut terms = Vec::with_capacity(categories.len());
        let mut index: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, (name, set)) in categories.into_iter().enumerate() {
            if !seen.insert(name.clone()) {
                return Err(Error::validation(format!("duplicate category {name:?}")));
            }
            for t in &set {
                index.entry(t.clone()).or_default().push(i);
            }
            names.push(name);
            terms.push(set);
        }
        Ok(Lexicon { names, terms, index })
    }

    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut cats = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let (name, rest) = line
                .split_once('\t')
                .ok_or_else(|| Error::parse(origin, i + 1, "expected `category<TAB>terms`"))?;
            let name = name.trim().to_lowercase();
            if name.is_empty() {
                return Err(Error::parse(origin, i + 1, "empty category name"));
            }
            let set = rest.split_whitespace().map(str::to_lowercase).collect();
            cats.push((name, set));
        }
        Lexicon::new(cats).map_err(|e| Error::parse(origin, 0, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn bundled() -> Self {
        Self::parse(LEXICON_TSV, Path::new("<bundled lexicon>")).expect("bundled lexicon parses")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn terms(&self, category: usize) -> &HashSet<String> {
        &self.terms[category]
    }

    pub fn to_tsv(&self) -> String {
        let mut out = String::new();
        for (name, set) in self.names.iter().zip(&self.terms) {
            let sorted: BTreeSet<&String> = set.iter().collect();
            out.push_str(name);
            out.push('\t');
            out.push_str(&sorted.into_iter().cloned().collect::<Vec<_>>().join(" "));
            out.push('\n');
        }
        out
    }

    /// Fraction of tokens that fall in each category.
    pub fn score_categories<S: AsRef<str>>(&self, tokens: &[S]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::validation("cannot score an empty token list"));
        }
        let mut counts = vec![0usize; self.len()];
        for tok in tokens {
            if let Some(cats) = self.index.get(tok.as_ref()) {
                for &c in cats {
                    counts[c] += 1;
                }
            }
        }
        let n = tokens.len() as f64;
        Ok(counts.into_iter().map(|c| c as f64 / n).collect())
    }
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    if na == 0.0 || nb == 0.0 {
        0.0
    } else {
        dot / (na * nb)
    }
}

/// Adds the `k` vocabulary terms with the highest mean cosine similarity to
/// the seed vectors. Ties go to the lexicographically smaller term.
pub fn expand_seeds(seeds: &BTreeSet<String>, vectors: &WordVectorTable, k: usize) -> Result<BTreeSet<String>> {
    let missing: Vec<&String> = seeds.iter().filter(|s| vectors.get(s).is_none()).collect();
    if !missing.is_empty() {
        return Err(Error::validation(format!("seeds not in vector table: {missing:?}")));
    }
    let seed_vecs: Vec<&[f64]> = seeds.iter().map(|s| vectors.get(s).unwrap()).collect();
    let mut scored: Vec<(f64, &str)> = vectors
        .iter()
        .filter(|(t, _)| !seeds.contains(*t))
        .map(|(t, v)| {
            let mean = if seed_vecs.is_empty() {
                0.0
            } else {
                seed_vecs.iter().map(|s| cosine(s, v)).sum::<f64>() / seed_vecs.len() as f64
            };
            (mean, t.as_str())
        })
        .collect();
    scored.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
    let mut out = seeds.clone();
    out.extend(scored.into_iter().take(k).map(|(_, t)| t.to_string()));
    Ok(out)
}

pub const DISTINCT_EPSILON: f64 = 1e-9;

/// One ranked entry of [`distinct_categories`].
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DistinctCategory {
    pub category: String,
    pub ratio: f64,
}

/// Ranks categories per class by `mean(in class) / (mean(outside) + eps)`.
///
/// Ratios are compared after rounding to 1e-9 so that float noise in the
/// means does not override the lexicographic tie-break.
pub fn distinct_categories(
    per_user_scores: &[Vec<f64>],
    classes: &[PersonalityClass],
    names: &[String],
    top_k: usize,
) -> Result<Vec<Vec<DistinctCategory>>> {
    if per_user_scores.len() != classes.len() {
        return Err(Error::validation("scores and classes differ in length"));
    }
    let dim = names.len();
    if per_user_scores.iter().any(|s| s.len() != dim) {
        return Err(Error::validation("score vector length differs from category count"));
    }
    let mut sums = vec![vec![0.0f64; dim]; PersonalityClass::COUNT];
    let mut counts = [0usize; PersonalityClass::COUNT];
    for (s, c) in per_user_scores.iter().zip(classes) {
        counts[c.index()] += 1;
        for (acc, v) in sums[c.index()].iter_mut().zip(s) {
            *acc += v;
        }
    }
    if let Some(empty) = PersonalityClass::ALL.iter().find(|c| counts[c.index()] == 0) {
        return Err(Error::validation(format!("class {empty} has no users")));
    }
    let total_n: usize = counts.iter().sum();
    let mut out = Vec::with_capacity(PersonalityClass::COUNT);
    for class in PersonalityClass::ALL {
        let ci = class.index();
        let n_out = total_n - counts[ci];
        let mut ranked: Vec<DistinctCategory> = (0..dim)
            .map(|j| {
                let inside = sums[ci][j] / counts[ci] as f64;
                let outside_sum: f64 = (0..PersonalityClass::COUNT)
                    .filter(|&o| o != ci)
                    .map(|o| sums[o][j])
                    .sum();
                let outside = if n_out == 0 { 0.0 } else { outside_sum / n_out as f64 };
                DistinctCategory {
                    category: names[j].clone(),
                    ratio: inside / (outside + DISTINCT_EPSILON),
                }
            })
            .collect();
        let key = |r: f64| (r * 1e9).round();
        ranked.sort_by(|a, b| {
            key(b.ratio)
                .total_cmp(&key(a.ratio))
                .then_with(|| a.category.cmp(&b.category))
        });
        ranked.truncate(top_k);
        out.push(ranked);
    }
    Ok(out)
}
