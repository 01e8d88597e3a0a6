//! Per-class analysis tables: distinctive description tokens, metadata
//! means, readability means and distinctive lexical categories, plus a
//! deterministic report writer.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::corpus::{PersonalityClass, ProfileCounts, UserRecord};
use crate::error::{Error, Result};
use crate::lexicon::{distinct_categories, DistinctCategory};
use crate::model::features::UserFeatures;
use crate::model::AblationReport;
use crate::readability::ReadabilityScores;
use crate::resources::WordList;
use crate::textproc::{separate_entities, tokenize};

const K: usize = PersonalityClass::COUNT;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassTokenScore {
    pub token: String,
    pub class: PersonalityClass,
    /// Users of `class` holding the token over all users holding it.
    pub probability: f64,
    /// Users holding the token.
    pub support: usize,
    pub class_support: usize,
}

/// Lowercased description tokens with entities, stopwords and tokens
/// without letters removed.
pub fn description_tokens(description: &str, stopwords: &WordList) -> BTreeSet<String> {
    let clean = separate_entities(description).clean_text.to_lowercase();
    tokenize(&clean)
        .into_iter()
        .filter(|t| t.chars().any(char::is_alphabetic) && !stopwords.contains(t))
        .collect()
}

/// Top tokens per class by `P(class | token)`, over tokens held by at least
/// `min_support` users. Ties go to higher support, then to the
/// lexicographically smaller token.
pub fn profession_scores<S: AsRef<str>>(
    descriptions: &[S],
    classes: &[PersonalityClass],
    stopwords: &WordList,
    min_support: usize,
    top_k: usize,
) -> Result<Vec<Vec<ClassTokenScore>>> {
    if descriptions.len() != classes.len() {
        return Err(Error::validation("descriptions and classes differ in length"));
    }
    let mut holders: BTreeMap<String, [usize; K]> = BTreeMap::new();
    for (d, c) in descriptions.iter().zip(classes) {
        for t in description_tokens(d.as_ref(), stopwords) {
            holders.entry(t).or_default()[c.index()] += 1;
        }
    }
    let qualifying: Vec<(String, [usize; K], usize)> = holders
        .into_iter()
        .filter_map(|(t, c)| {
            let s: usize = c.iter().sum();
            (s >= min_support.max(1)).then_some((t, c, s))
        })
        .collect();
    let mut out = Vec::with_capacity(K);
    for class in PersonalityClass::ALL {
        let k = class.index();
        let mut ranked: Vec<&(String, [usize; K], usize)> = qualifying.iter().filter(|(_, c, _)| c[k] > 0).collect();
        ranked.sort_by(|(ta, ca, sa), (tb, cb, sb)| {
            // ca/sa vs cb/sb compared exactly.
            (cb[k] * sa).cmp(&(ca[k] * sb)).then(sb.cmp(sa)).then(ta.cmp(tb))
        });
        out.push(
            ranked
                .into_iter()
                .take(top_k)
                .map(|(t, c, s)| ClassTokenScore {
                    token: t.clone(),
                    class,
                    probability: c[k] as f64 / *s as f64,
                    support: *s,
                    class_support: c[k],
                })
                .collect(),
        );
    }
    Ok(out)
}

fn require_all_classes(counts: &[usize; K], what: &str) -> Result<()> {
    match PersonalityClass::ALL.iter().find(|c| counts[c.index()] == 0) {
        Some(c) => Err(Error::validation(format!("{what}: class {c} has no users"))),
        None => Ok(()),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetadataStats {
    pub n_users: [usize; K],
    /// Per class, means in [`ProfileCounts::FIELDS`] order.
    pub means: [[f64; 6]; K],
}

pub fn metadata_stats(counts: &[(PersonalityClass, ProfileCounts)]) -> Result<MetadataStats> {
    let mut n_users = [0usize; K];
    let mut sums = [[0.0f64; 6]; K];
    for (c, p) in counts {
        n_users[c.index()] += 1;
        for (s, v) in sums[c.index()].iter_mut().zip(p.to_vec()) {
            *s += v;
        }
    }
    require_all_classes(&n_users, "metadata statistics")?;
    let means = std::array::from_fn(|k| sums[k].map(|s| s / n_users[k] as f64));
    Ok(MetadataStats { n_users, means })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReadabilityTable {
    pub n_users: [usize; K],
    pub means: [[f64; 8]; K],
    /// Per metric, the class index holding the smallest mean.
    pub min_class: [usize; 8],
    pub max_class: [usize; 8],
}

/// Per-class mean scores; on ties the lowest class index is flagged.
pub fn readability_table(scores: &[(PersonalityClass, ReadabilityScores)]) -> Result<ReadabilityTable> {
    let mut n_users = [0usize; K];
    let mut sums = [[0.0f64; 8]; K];
    for (c, s) in scores {
        n_users[c.index()] += 1;
        for (acc, v) in sums[c.index()].iter_mut().zip(s.to_vec()) {
            *acc += v;
        }
    }
    require_all_classes(&n_users, "readability table")?;
    let means: [[f64; 8]; K] = std::array::from_fn(|k| sums[k].map(|s| s / n_users[k] as f64));
    let mut min_class = [0usize; 8];
    let mut max_class = [0usize; 8];
    for m in 0..8 {
        for k in 1..K {
            if means[k][m] < means[min_class[m]][m] {
                min_class[m] = k;
            }
            if means[k][m] > means[max_class[m]][m] {
                max_class[m] = k;
            }
        }
    }
    Ok(ReadabilityTable {
        n_users,
        means,
        min_class,
        max_class,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalysisParams {
    pub min_support: usize,
    pub top_k: usize,
}

impl Default for AnalysisParams {
    fn default() -> Self {
        AnalysisParams {
            min_support: 20,
            top_k: 5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnalysisBundle {
    pub seed: u64,
    pub professions: Vec<Vec<ClassTokenScore>>,
    pub metadata: MetadataStats,
    pub readability: ReadabilityTable,
    pub distinct_categories: Vec<Vec<DistinctCategory>>,
}

/// Computes every analysis table. Descriptions come from `records`; the
/// other tables from `features`.
pub fn analyze(
    records: &[UserRecord],
    features: &[UserFeatures],
    category_names: &[String],
    stopwords: &WordList,
    params: &AnalysisParams,
    seed: u64,
) -> Result<AnalysisBundle> {
    let descriptions: Vec<&str> = records.iter().map(|u| u.description.as_str()).collect();
    let classes: Vec<PersonalityClass> = records.iter().map(|u| u.class).collect();
    let professions = profession_scores(&descriptions, &classes, stopwords, params.min_support, params.top_k)?;
    let counts: Vec<_> = records.iter().map(|u| (u.class, u.counts)).collect();
    let metadata = metadata_stats(&counts)?;
    let scores: Vec<_> = features.iter().map(|f| (f.class, f.readability)).collect();
    let readability = readability_table(&scores)?;
    let empath: Vec<Vec<f64>> = features.iter().map(|f| f.empath.clone()).collect();
    let fclasses: Vec<PersonalityClass> = features.iter().map(|f| f.class).collect();
    let distinct = distinct_categories(&empath, &fclasses, category_names, params.top_k)?;
    Ok(AnalysisBundle {
        seed,
        professions,
        metadata,
        readability,
        distinct_categories: distinct,
    })
}

fn write(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn professions_csv(b: &AnalysisBundle) -> String {
    let mut s = String::from("class,rank,token,probability,support\n");
    for list in &b.professions {
        for (i, t) in list.iter().enumerate() {
            let _ = writeln!(
                s,
                "{},{},{},{:.4},{}",
                t.class,
                i + 1,
                t.token,
                t.probability,
                t.support
            );
        }
    }
    s
}

fn metadata_csv(b: &AnalysisBundle) -> String {
    let mut s = format!("class,n_users,{}\n", ProfileCounts::FIELDS.join(","));
    for c in PersonalityClass::ALL {
        let k = c.index();
        let vals: Vec<String> = b.metadata.means[k].iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(s, "{c},{},{}", b.metadata.n_users[k], vals.join(","));
    }
    s
}

fn readability_csv(b: &AnalysisBundle) -> String {
    let mut s = format!("class,n_users,{}\n", ReadabilityScores::FIELDS.join(","));
    for c in PersonalityClass::ALL {
        let k = c.index();
        let vals: Vec<String> = b.readability.means[k].iter().map(|v| format!("{v:.4}")).collect();
        let _ = writeln!(s, "{c},{},{}", b.readability.n_users[k], vals.join(","));
    }
    s
}

fn readability_flags_csv(b: &AnalysisBundle) -> String {
    let mut s = String::from("metric,min_class,max_class\n");
    for (m, name) in ReadabilityScores::FIELDS.iter().enumerate() {
        let min = PersonalityClass::ALL[b.readability.min_class[m]];
        let max = PersonalityClass::ALL[b.readability.max_class[m]];
        let _ = writeln!(s, "{name},{min},{max}");
    }
    s
}

fn distinct_csv(b: &AnalysisBundle) -> String {
    let mut s = String::from("class,rank,category,ratio\n");
    for (c, list) in PersonalityClass::ALL.iter().zip(&b.distinct_categories) {
        for (i, d) in list.iter().enumerate() {
            let _ = writeln!(s, "{c},{},{},{:.4}", i + 1, d.category, d.ratio);
        }
    }
    s
}

fn md_table(header: &[String], rows: &[Vec<String>]) -> String {
    let mut s = format!("| {} |\n", header.join(" | "));
    let _ = writeln!(s, "|{}", "---|".repeat(header.len()));
    for r in rows {
        let _ = writeln!(s, "| {} |", r.join(" | "));
    }
    s
}

fn ranked_columns<T>(lists: &[Vec<T>], cell: impl Fn(&T) -> String) -> String {
    let header: Vec<String> = PersonalityClass::ALL.iter().map(|c| c.name().to_string()).collect();
    let depth = lists.iter().map(Vec::len).max().unwrap_or(0);
    let rows: Vec<Vec<String>> = (0..depth)
        .map(|i| lists.iter().map(|l| l.get(i).map(&cell).unwrap_or_default()).collect())
        .collect();
    md_table(&header, &rows)
}

fn report_md(b: &AnalysisBundle, ablation: Option<&AblationReport>) -> String {
    let mut s = String::from("# Personality-class analysis report\n\n");
    let _ = writeln!(s, "Seed: {}\n", b.seed);

    s.push_str("## Distinctive description tokens\n\nP(class | token), support in parentheses.\n\n");
    s.push_str(&ranked_columns(&b.professions, |t| {
        format!("{} {:.2} ({})", t.token, t.probability, t.support)
    }));

    s.push_str("\n## Readability\n\nPer-class means; **bold** marks the column maximum, _italic_ the minimum.\n\n");
    let mut header = vec!["class".to_string()];
    header.extend(ReadabilityScores::FIELDS.iter().map(|f| f.to_string()));
    let rows: Vec<Vec<String>> = PersonalityClass::ALL
        .iter()
        .map(|c| {
            let k = c.index();
            let mut row = vec![c.name().to_string()];
            for m in 0..8 {
                let v = format!("{:.2}", b.readability.means[k][m]);
                row.push(if b.readability.max_class[m] == k {
                    format!("**{v}**")
                } else if b.readability.min_class[m] == k {
                    format!("_{v}_")
                } else {
                    v
                });
            }
            row
        })
        .collect();
    s.push_str(&md_table(&header, &rows));

    s.push_str("\n## Distinctive lexical categories\n\n");
    s.push_str(&ranked_columns(&b.distinct_categories, |d| d.category.clone()));

    s.push_str("\n## Profile metadata\n\nPer-class means.\n\n");
    let mut header = vec!["class".to_string()];
    header.extend(ProfileCounts::FIELDS.iter().map(|f| f.to_string()));
    let rows: Vec<Vec<String>> = PersonalityClass::ALL
        .iter()
        .map(|c| {
            let mut row = vec![c.name().to_string()];
            row.extend(b.metadata.means[c.index()].iter().map(|v| format!("{v:.2}")));
            row
        })
        .collect();
    s.push_str(&md_table(&header, &rows));

    if let Some(r) = ablation.filter(|r| !r.rows.is_empty()) {
        s.push_str("\n## Ablation\n\nF1 is the unweighted mean of the four per-class F1 scores.\n\n");
        let header: Vec<String> = ["encoder", "classifier", "config", "macro F1", "accuracy"]
            .iter()
            .map(|h| h.to_string())
            .collect();
        let rows: Vec<Vec<String>> = r
            .rows
            .iter()
            .map(|row| {
                vec![
                    row.encoder.clone(),
                    row.classifier.to_string(),
                    row.config.clone(),
                    format!("{:.4}", row.metrics.macro_f1),
                    format!("{:.4}", row.metrics.accuracy),
                ]
            })
            .collect();
        s.push_str(&md_table(&header, &rows));
    }
    s
}

#[derive(Serialize)]
struct PlotSeries<'a> {
    class: PersonalityClass,
    values: &'a [f64],
}

#[derive(Serialize)]
struct PlotData<'a> {
    title: &'a str,
    fields: &'a [&'a str],
    series: Vec<PlotSeries<'a>>,
}

fn plot_json(title: &str, fields: &[&str], rows: &[&[f64]]) -> Result<String> {
    let series = PersonalityClass::ALL
        .iter()
        .zip(rows)
        .map(|(&class, values)| PlotSeries { class, values })
        .collect();
    let mut s = serde_json::to_string_pretty(&PlotData { title, fields, series })?;
    s.push('\n');
    Ok(s)
}

/// Writes `tables/*.csv`, `plots/*.json` and `report.md` under `dir`.
/// Identical inputs give byte-identical files.
pub fn emit_report(dir: &Path, bundle: &AnalysisBundle, ablation: Option<&AblationReport>) -> Result<()> {
    let t = dir.join("tables");
    write(&t.join("professions.csv"), &professions_csv(bundle))?;
    write(&t.join("metadata.csv"), &metadata_csv(bundle))?;
    write(&t.join("readability.csv"), &readability_csv(bundle))?;
    write(&t.join("readability_flags.csv"), &readability_flags_csv(bundle))?;
    write(&t.join("empath_distinct.csv"), &distinct_csv(bundle))?;
    if let Some(r) = ablation {
        write(&t.join("ablation.csv"), &r.to_csv())?;
    }
    let p = dir.join("plots");
    let meta: Vec<&[f64]> = bundle.metadata.means.iter().map(|r| &r[..]).collect();
    write(
        &p.join("metadata.json"),
        &plot_json("profile metadata means", &ProfileCounts::FIELDS, &meta)?,
    )?;
    let read: Vec<&[f64]> = bundle.readability.means.iter().map(|r| &r[..]).collect();
    write(
        &p.join("readability.json"),
        &plot_json("readability means", &ReadabilityScores::FIELDS, &read)?,
    )?;
    write(&dir.join("report.md"), &report_md(bundle, ablation))
}
