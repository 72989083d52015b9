//! Numeric table loading for pair files and CSV inputs.
//!
//! Accepted layout: optional `#` comment lines (a `# key=value ...` line is
//! kept as metadata), an optional header row of column names, then rows of
//! numbers separated by commas or whitespace. Fields may be double-quoted.

use std::collections::BTreeMap;
use std::path::Path;

use randep::DMatrix;

use crate::fail::{usage, Failure};

#[derive(Debug, Clone)]
pub struct Table {
    pub names: Option<Vec<String>>,
    pub data: DMatrix<f64>,
    pub metadata: BTreeMap<String, String>,
}

fn split_fields(line: &str) -> Vec<String> {
    let fields: Vec<&str> = if line.contains(',') {
        line.split(',').collect()
    } else {
        line.split_whitespace().collect()
    };
    fields
        .into_iter()
        .map(|f| {
            let f = f.trim();
            f.strip_prefix('"').and_then(|g| g.strip_suffix('"')).unwrap_or(f).replace("\"\"", "\"")
        })
        .collect()
}

fn parse_metadata(comment: &str, into: &mut BTreeMap<String, String>) {
    for token in comment.split_whitespace() {
        if let Some((k, v)) = token.split_once('=') {
            into.insert(k.to_string(), v.to_string());
        }
    }
}

pub fn parse_table(text: &str, origin: &str) -> Result<Table, Failure> {
    let mut names = None;
    let mut metadata = BTreeMap::new();
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut width = None;
    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            parse_metadata(comment, &mut metadata);
            continue;
        }
        let fields = split_fields(line);
        let parsed: Result<Vec<f64>, _> = fields.iter().map(|f| f.parse::<f64>()).collect();
        match parsed {
            Ok(values) => {
                if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
                    return Err(usage(format!("{origin}:{lineno}: field {} is not finite", bad + 1)));
                }
                match width {
                    None => width = Some(values.len()),
                    Some(w) if w != values.len() => {
                        return Err(usage(format!("{origin}:{lineno}: expected {w} fields, found {}", values.len())))
                    }
                    _ => {}
                }
                rows.push(values);
            }
            Err(_) if rows.is_empty() && names.is_none() => {
                width = Some(fields.len());
                names = Some(fields);
            }
            Err(_) => {
                let bad = fields.iter().position(|f| f.parse::<f64>().is_err()).unwrap_or(0);
                return Err(usage(format!("{origin}:{lineno}: field {} ({:?}) is not a number", bad + 1, fields[bad])));
            }
        }
    }
    let w = width.unwrap_or(0);
    if rows.is_empty() || w == 0 {
        return Err(usage(format!("{origin}: no data rows")));
    }
    let data = DMatrix::from_fn(rows.len(), w, |i, j| rows[i][j]);
    Ok(Table { names, data, metadata })
}

pub fn read_table(path: &Path) -> Result<Table, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read {}: {e}", path.display())))?;
    parse_table(&text, &path.display().to_string())
}

/// A two-column file with at least three rows.
pub fn read_pair_file(path: &Path) -> Result<Table, Failure> {
    let t = read_table(path)?;
    if t.data.ncols() != 2 {
        return Err(usage(format!("{}: pair files need 2 columns, found {}", path.display(), t.data.ncols())));
    }
    if t.data.nrows() < 3 {
        return Err(usage(format!("{}: pair files need at least 3 rows, found {}", path.display(), t.data.nrows())));
    }
    Ok(t)
}

impl Table {
    /// Resolves a comma-separated list of column indices or header names.
    pub fn columns(&self, spec: &str) -> Result<Vec<usize>, Failure> {
        spec.split(',')
            .map(|s| {
                let s = s.trim();
                if let Ok(i) = s.parse::<usize>() {
                    if i < self.data.ncols() {
                        return Ok(i);
                    }
                    return Err(usage(format!("column {i} out of range ({} columns)", self.data.ncols())));
                }
                self.names
                    .as_ref()
                    .and_then(|n| n.iter().position(|c| c == s))
                    .ok_or_else(|| usage(format!("unknown column {s:?}")))
            })
            .collect()
    }

    pub fn select(&self, cols: &[usize]) -> DMatrix<f64> {
        self.data.select_columns(cols.iter())
    }
}
