//! JSON and CSV file formats.
//!
//! QP files are objects with keys `n`, `m`, `q` (triplets `[i, j, v]`), `c`,
//! `a` (triplets), `b` and optional `var_names` / `con_names`; indices are
//! 0-based. Duplicate triplets are summed and `q` is symmetrized as
//! `(Q + Qᵀ)/2` on load, which leaves `xᵀQx` unchanged.
//!
//! Partition files are objects `{"vars": [[...], ...], "cons": [[...], ...]}`.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qpcore::{Partition, QpInstance, SparseMatrix};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QpFile {
    pub n: usize,
    pub m: usize,
    pub q: Vec<(usize, usize, f64)>,
    pub c: Vec<f64>,
    pub a: Vec<(usize, usize, f64)>,
    pub b: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub var_names: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub con_names: Option<Vec<String>>,
}

impl QpFile {
    pub fn from_instance(qp: &QpInstance) -> Self {
        QpFile {
            n: qp.n(),
            m: qp.m(),
            q: qp.q().triplets().collect(),
            c: qp.c().to_vec(),
            a: qp.a().triplets().collect(),
            b: qp.b().to_vec(),
            var_names: qp.variable_names().map(<[String]>::to_vec),
            con_names: qp.constraint_names().map(<[String]>::to_vec),
        }
    }

    /// Validates every field and builds the instance.
    pub fn into_instance(self) -> std::result::Result<QpInstance, String> {
        let QpFile { n, m, q, c, a, b, var_names, con_names } = self;
        if c.len() != n {
            return Err(format!("field `c`: length {} but n = {n}", c.len()));
        }
        if b.len() != m {
            return Err(format!("field `b`: length {} but m = {m}", b.len()));
        }
        check_triplets("q", &q, n, n)?;
        check_triplets("a", &a, m, n)?;
        let q = SparseMatrix::from_triplets(n, n, q)
            .and_then(|q| q.symmetrized())
            .map_err(|e| format!("field `q`: {e}"))?;
        let a = SparseMatrix::from_triplets(m, n, a).map_err(|e| format!("field `a`: {e}"))?;
        if let Some(names) = &var_names {
            if names.len() != n {
                return Err(format!("field `var_names`: {} names but n = {n}", names.len()));
            }
        }
        if let Some(names) = &con_names {
            if names.len() != m {
                return Err(format!("field `con_names`: {} names but m = {m}", names.len()));
            }
        }
        QpInstance::new(q, c, a, b)
            .and_then(|qp| qp.with_names(var_names, con_names))
            .map_err(|e| e.to_string())
    }
}

fn check_triplets(field: &str, t: &[(usize, usize, f64)], rows: usize, cols: usize) -> std::result::Result<(), String> {
    for (k, &(i, j, v)) in t.iter().enumerate() {
        if i >= rows {
            return Err(format!("field `{field}` entry {k}: row index {i} out of range ({rows} rows)"));
        }
        if j >= cols {
            return Err(format!("field `{field}` entry {k}: column index {j} out of range ({cols} columns)"));
        }
        if !v.is_finite() {
            return Err(format!("field `{field}` entry {k}: value is not finite"));
        }
    }
    Ok(())
}

fn parse_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Parse { file: path.display().to_string(), message: message.into() }
}

/// Parses a QP from JSON text; `origin` names the source in diagnostics.
pub fn parse_qp_json(text: &str, origin: &Path) -> Result<QpInstance> {
    let file: QpFile = serde_json::from_str(text).map_err(|e| parse_err(origin, e.to_string()))?;
    file.into_instance().map_err(|m| parse_err(origin, m))
}

pub fn read_qp_json(path: impl AsRef<Path>) -> Result<QpInstance> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| parse_err(path, e.to_string()))?;
    parse_qp_json(&text, path)
}

pub fn qp_to_json(qp: &QpInstance) -> String {
    serde_json::to_string_pretty(&QpFile::from_instance(qp)).expect("qp serializes")
}

pub fn write_qp_json(path: impl AsRef<Path>, qp: &QpInstance) -> Result<()> {
    fs::write(path, qp_to_json(qp) + "\n")?;
    Ok(())
}

/// Variable and (optionally) constraint partitions as stored on disk.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PartitionFile {
    pub vars: Vec<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cons: Option<Vec<Vec<usize>>>,
}

impl PartitionFile {
    pub fn new(vars: &Partition, cons: Option<&Partition>) -> Self {
        PartitionFile {
            vars: vars.classes().to_vec(),
            cons: cons.map(|c| c.classes().to_vec()),
        }
    }

    /// Resolves the classes against dimensions `n` (vars) and `m` (cons).
    /// Missing `cons` becomes the discrete partition.
    pub fn resolve(&self, n: usize, m: usize) -> std::result::Result<(Partition, Partition), String> {
        let vars = Partition::from_classes(n, self.vars.clone()).map_err(|e| format!("field `vars`: {e}"))?;
        let cons = match &self.cons {
            Some(c) => Partition::from_classes(m, c.clone()).map_err(|e| format!("field `cons`: {e}"))?,
            None => Partition::discrete(m),
        };
        Ok((vars, cons))
    }
}

pub fn read_partition_json(path: impl AsRef<Path>) -> Result<PartitionFile> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| parse_err(path, e.to_string()))?;
    serde_json::from_str(&text).map_err(|e| parse_err(path, e.to_string()))
}

/// Reads a headerless CSV of reals, one row per line.
pub fn read_real_csv(path: impl AsRef<Path>) -> Result<Vec<Vec<f64>>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let mut rows = Vec::new();
    let mut width = None;
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        let row = rec
            .iter()
            .enumerate()
            .map(|(col, s)| {
                s.parse::<f64>()
                    .ok()
                    .filter(|v| v.is_finite())
                    .ok_or_else(|| parse_err(path, format!("line {line}, field {}: `{s}` is not a finite real", col + 1)))
            })
            .collect::<Result<Vec<f64>>>()?;
        match width {
            None => width = Some(row.len()),
            Some(w) if w != row.len() => {
                return Err(parse_err(path, format!("line {line}: {} fields, expected {w}", row.len())))
            }
            _ => {}
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Reads a headerless CSV and returns the first field of each line as text.
pub fn read_string_column(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    rdr.records()
        .map(|rec| {
            let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
            Ok(rec.get(0).unwrap_or("").to_string())
        })
        .collect()
}

/// Reads `i,j` index pairs, one per line.
pub fn read_pairs_csv(path: impl AsRef<Path>) -> Result<Vec<(usize, usize)>> {
    let path = path.as_ref();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| parse_err(path, e.to_string()))?;
    let mut out = Vec::new();
    for (k, rec) in rdr.records().enumerate() {
        let rec = rec.map_err(|e| parse_err(path, e.to_string()))?;
        let line = rec.position().map_or(k as u64 + 1, |p| p.line());
        if rec.len() != 2 {
            return Err(parse_err(path, format!("line {line}: expected 2 fields, found {}", rec.len())));
        }
        let idx = |f: usize| {
            rec[f]
                .parse::<usize>()
                .map_err(|_| parse_err(path, format!("line {line}, field {}: `{}` is not an index", f + 1, &rec[f])))
        };
        out.push((idx(0)?, idx(1)?));
    }
    Ok(out)
}
