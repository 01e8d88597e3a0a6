//! Word-vector tables in the text format
//!
//! ```text
//! N dim
//! token v1 v2 ... v_dim
//! ```
//!
//! and averaged bag-of-words encodings over them.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct WordVectorTable {
    dim: usize,
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
}

impl WordVectorTable {
    pub fn from_entries(dim: usize, entries: Vec<(String, Vec<f64>)>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::validation("vector dimension must be positive"));
        }
        let mut t = WordVectorTable {
            dim,
            tokens: Vec::with_capacity(entries.len()),
            index: HashMap::with_capacity(entries.len()),
            data: Vec::with_capacity(entries.len() * dim),
        };
        for (tok, v) in entries {
            t.push(tok, &v)?;
        }
        Ok(t)
    }

    fn push(&mut self, token: String, v: &[f64]) -> Result<()> {
        if v.len() != self.dim {
            return Err(Error::validation(format!(
                "token {token:?} has {} values, expected {}",
                v.len(),
                self.dim
            )));
        }
        if self.index.contains_key(&token) {
            return Err(Error::validation(format!("duplicate token {token:?}")));
        }
        self.index.insert(token.clone(), self.tokens.len());
        self.tokens.push(token);
        self.data.extend_from_slice(v);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[f64]> {
        self.index
            .get(token)
            .map(|&i| &self.data[i * self.dim..(i + 1) * self.dim])
    }

    /// Entries in file order.
    pub fn iter(&self) -> impl Iterator<Item = (&String, &[f64])> {
        self.tokens.iter().zip(self.data.chunks_exact(self.dim))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        let mut lines = BufReader::new(file).lines();
        let header = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "missing `N dim` header"))?
            .map_err(|e| Error::io(path, e))?;
        let nums: Vec<usize> = header
            .split_whitespace()
            .map(|s| s.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|_| Error::parse(path, 1, "header must be `N dim`"))?;
        let [n, dim] = nums[..] else {
            return Err(Error::parse(path, 1, "header must be `N dim`"));
        };
        if dim == 0 {
            return Err(Error::parse(path, 1, "dimension must be positive"));
        }
        let mut table = WordVectorTable::from_entries(dim, Vec::new())?;
        for (i, line) in lines.enumerate() {
            let lineno = i + 2;
            let line = line.map_err(|e| Error::io(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split(' ').filter(|s| !s.is_empty());
            let token = parts.next().unwrap().to_string();
            let values: Vec<f64> = parts
                .map(|s| s.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::parse(path, lineno, format!("bad value: {e}")))?;
            table
                .push(token, &values)
                .map_err(|e| Error::parse(path, lineno, e.to_string()))?;
        }
        if table.len() != n {
            return Err(Error::parse(
                path,
                1,
                format!("header declares {n} tokens, file has {}", table.len()),
            ));
        }
        Ok(table)
    }

    /// Writes the table with shortest round-trip float formatting.
    pub fn save(&self, path: &Path) -> Result<()> {
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        let io = |e| Error::io(path, e);
        writeln!(w, "{} {}", self.len(), self.dim).map_err(io)?;
        for (tok, v) in self.iter() {
            write!(w, "{tok}").map_err(io)?;
            for x in v {
                write!(w, " {x}").map_err(io)?;
            }
            writeln!(w).map_err(io)?;
        }
        w.flush().map_err(io)
    }
}

/// Mean of the vectors of in-vocabulary tokens; zeros when none are known.
pub fn encode_text_avg<S: AsRef<str>>(tokens: &[S], table: &WordVectorTable) -> Vec<f64> {
    let mut sum = vec![0.0; table.dim()];
    let mut n = 0usize;
    for tok in tokens {
        if let Some(v) = table.get(tok.as_ref()) {
            for (s, x) in sum.iter_mut().zip(v) {
                *s += x;
            }
            n += 1;
        }
    }
    if n > 0 {
        for s in &mut sum {
            *s /= n as f64;
        }
    }
    sum
}

/// Mean over tweets of the per-tweet encodings.
pub fn encode_tweets_avg<S: AsRef<str>>(tweets: &[Vec<S>], table: &WordVectorTable) -> Vec<f64> {
    let mut sum = vec![0.0; table.dim()];
    if tweets.is_empty() {
        return sum;
    }
    for tokens in tweets {
        for (s, x) in sum.iter_mut().zip(encode_text_avg(tokens, table)) {
            *s += x;
        }
    }
    for s in &mut sum {
        *s /= tweets.len() as f64;
    }
    sum
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn write(dir: &tempfile::TempDir, text: &str) -> std::path::PathBuf {
        let p = dir.path().join("v.txt");
        std::fs::write(&p, text).unwrap();
        p
    }

    #[test]
    fn load_examples() {
        let dir = tempfile::tempdir().unwrap();
        let t = WordVectorTable::load(&write(&dir, "2 3\ncat 1 2 3\ndog 0.5 -1 2e-3\n")).unwrap();
        assert_eq!((t.len(), t.dim()), (2, 3));
        assert_eq!(t.get("dog").unwrap(), &[0.5, -1.0, 0.002]);

        let err = WordVectorTable::load(&write(&dir, "2 3\ncat 1 2 3\ndog 1 2\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        let err = WordVectorTable::load(&write(&dir, "2 2\ncat 1 2\ncat 1 2\n")).unwrap_err();
        assert!(matches!(err, Error::Parse { line: 3, .. }), "{err}");
        assert!(WordVectorTable::load(&write(&dir, "3 2\ncat 1 2\n")).is_err());
        assert!(WordVectorTable::load(&write(&dir, "x\n")).is_err());
        assert!(WordVectorTable::load(&dir.path().join("missing")).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let entries: Vec<(String, Vec<f64>)> = (0..30)
            .map(|i| (format!("w{i}"), (0..7).map(|_| rng.random_range(-10.0..10.0)).collect()))
            .collect();
        let t = WordVectorTable::from_entries(7, entries).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.txt");
        t.save(&p).unwrap();
        assert_eq!(WordVectorTable::load(&p).unwrap(), t);
    }

    #[test]
    fn encoding_examples() {
        let t = WordVectorTable::from_entries(2, vec![("a".into(), vec![1.0, 2.0]), ("b".into(), vec![3.0, -2.0])])
            .unwrap();
        assert_eq!(encode_text_avg(&["a"], &t), vec![1.0, 2.0]);
        assert_eq!(encode_text_avg(&["zz", "yy"], &t), vec![0.0, 0.0]);
        assert_eq!(encode_text_avg(&["a", "b", "zz"], &t), vec![2.0, 0.0]);
        let tweets = vec![vec!["a"], vec!["zz"]];
        assert_eq!(encode_tweets_avg(&tweets, &t), vec![0.5, 1.0]);
    }

    #[test]
    fn encoding_matches_summation_oracle() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(9);
        let entries: Vec<(String, Vec<f64>)> = (0..20)
            .map(|i| (format!("w{i}"), (0..5).map(|_| rng.random_range(-1.0..1.0)).collect()))
            .collect();
        let t = WordVectorTable::from_entries(5, entries.clone()).unwrap();
        let tokens: Vec<String> = (0..100).map(|_| format!("w{}", rng.random_range(0..20))).collect();
        let got = encode_text_avg(&tokens, &t);
        for (d, g) in got.iter().enumerate() {
            let mut s = 0.0;
            for tok in &tokens {
                s += entries.iter().find(|(n, _)| n == tok).unwrap().1[d];
            }
            assert!((g - s / 100.0).abs() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn singleton_mean_is_exact(v in proptest::collection::vec(-1e6f64..1e6, 1..8)) {
            let t = WordVectorTable::from_entries(v.len(), vec![("x".into(), v.clone())]).unwrap();
            prop_assert_eq!(encode_text_avg(&["x"], &t), v);
        }
    }
}
