//! Per-user encodings computed outside this crate (e.g. by a transformer
//! encoder), in the format
//!
//! ```text
//! N dim
//! user_id v1 ... v_dim
//! ```
//!
//! A header with a single number is read as `dim`.

use std::collections::BTreeMap;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use crate::error::{Error, Result};

pub fn import_external_encodings(path: &Path, expected_dim: Option<usize>) -> Result<BTreeMap<String, Vec<f64>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "missing header"))?
        .map_err(|e| Error::io(path, e))?;
    let nums: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|_| Error::parse(path, 1, "header must be `N dim` or `dim`"))?;
    let (declared_n, dim) = match nums[..] {
        [dim] => (None, dim),
        [n, dim] => (Some(n), dim),
        _ => return Err(Error::parse(path, 1, "header must be `N dim` or `dim`")),
    };
    if let Some(expected) = expected_dim {
        if expected != dim {
            return Err(Error::parse(
                path,
                1,
                format!("declared dimension {dim}, expected {expected}"),
            ));
        }
    }
    let mut out = BTreeMap::new();
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let user = parts.next().unwrap().to_string();
        let values: Vec<f64> = parts
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::parse(path, lineno, format!("user {user}: bad value: {e}")))?;
        if values.len() != dim {
            return Err(Error::parse(
                path,
                lineno,
                format!("user {user}: {} values, expected {dim}", values.len()),
            ));
        }
        if out.insert(user.clone(), values).is_some() {
            return Err(Error::parse(path, lineno, format!("duplicate user {user}")));
        }
    }
    if let Some(n) = declared_n {
        if n != out.len() {
            return Err(Error::parse(
                path,
                1,
                format!("header declares {n} users, file has {}", out.len()),
            ));
        }
    }
    Ok(out)
}

pub fn write_external_encodings(path: &Path, dim: usize, rows: &BTreeMap<String, Vec<f64>>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {dim}", rows.len()).map_err(io)?;
    for (user, v) in rows {
        if v.len() != dim {
            return Err(Error::validation(format!(
                "user {user}: vector has {} values, expected {dim}",
                v.len()
            )));
        }
        write!(w, "{user}").map_err(io)?;
        for x in v {
            write!(w, " {x}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}
