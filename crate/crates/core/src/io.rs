//! CSV file formats.
//!
//! * Matrix: header `id,<id_1>,...,<id_n>`, then one row per entity,
//!   `<id_i>,<v_i1>,...,<v_in>`. Values are written with 15 significant
//!   digits.
//! * Entity table: header `id,<col_1>,...,<col_M>`; column kinds come from
//!   an optional JSON sidecar `{"columns": [{"name", "kind", "unit"}]}`.
//!   Categorical cells that are not numbers are encoded as integer codes in
//!   order of first appearance.
//! * Document corpus: long format `entity_id,doc_id,count`.
//!
//! Decimal parsing is locale-independent (dot separator).

use std::collections::HashMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::proximity::{ColumnKind, ColumnMeta, DocumentCorpus, EntityTable};

/// Significant digits used for persisted matrices.
pub const MATRIX_DIGITS: usize = 15;
/// Significant digits used for reports.
pub const REPORT_DIGITS: usize = 12;

/// A matrix together with the entity ids labelling its rows and columns.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledMatrix {
    pub ids: Vec<String>,
    pub matrix: SquareMatrix,
}

impl LabeledMatrix {
    pub fn position(&self, id: &str) -> Option<usize> {
        self.ids.iter().position(|x| x == id)
    }

    pub fn lookup(&self, id: &str) -> Result<usize> {
        self.position(id).ok_or_else(|| Error::Lookup(id.to_string()))
    }
}

/// Rounds `x` to `digits` significant digits. Negative zero becomes zero.
pub fn round_sig(x: f64, digits: usize) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { 0.0 } else { x };
    }
    let s = format!("{:.*e}", digits.saturating_sub(1), x);
    let v: f64 = s.parse().expect("formatted float parses");
    if v == 0.0 {
        0.0
    } else {
        v
    }
}

/// Plain decimal rendering of `x` rounded to `digits` significant digits.
pub fn format_sig(x: f64, digits: usize) -> String {
    format!("{}", round_sig(x, digits))
}

fn parse_f64(cell: &str, line: usize) -> Result<f64> {
    let t = cell.trim();
    let v: f64 = t.parse().map_err(|_| Error::Parse {
        line,
        message: format!("`{t}` is not a decimal number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("`{t}` is not finite"),
        });
    }
    Ok(v)
}

fn reader<R: Read>(r: R, headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(r)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

pub fn read_matrix<R: Read>(r: R) -> Result<LabeledMatrix> {
    let mut rdr = reader(r, false);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(rec) => rec.map_err(csv_error)?,
        None => {
            return Err(Error::Parse {
                line: 1,
                message: "empty matrix file".into(),
            })
        }
    };
    let ids: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let n = ids.len();
    if n == 0 {
        return Err(Error::Parse {
            line: 1,
            message: "header lists no entity ids".into(),
        });
    }
    let mut data = Vec::with_capacity(n * n);
    let mut rows = 0;
    for rec in records {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(rows + 2, |p| p.line() as usize);
        if rec.len() == 1 && rec[0].is_empty() {
            continue;
        }
        if rows >= n {
            return Err(Error::Parse {
                line,
                message: format!("more than {n} data rows"),
            });
        }
        if rec.len() != n + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", n + 1, rec.len()),
            });
        }
        if rec[0] != ids[rows] {
            return Err(Error::Parse {
                line,
                message: format!("row id `{}` does not match header id `{}`", &rec[0], ids[rows]),
            });
        }
        for cell in rec.iter().skip(1) {
            data.push(parse_f64(cell, line)?);
        }
        rows += 1;
    }
    if rows != n {
        return Err(Error::Parse {
            line: rows + 2,
            message: format!("expected {n} data rows, found {rows}"),
        });
    }
    Ok(LabeledMatrix {
        ids,
        matrix: SquareMatrix::from_vec(n, data)?,
    })
}

pub fn write_matrix<W: Write>(w: W, ids: &[String], m: &SquareMatrix) -> Result<()> {
    if ids.len() != m.order() {
        return Err(Error::Dimension(format!(
            "{} ids for a matrix of order {}",
            ids.len(),
            m.order()
        )));
    }
    let mut wtr = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
    let io = |e: csv::Error| Error::Io(e.to_string());
    wtr.write_record(std::iter::once("id").chain(ids.iter().map(String::as_str)))
        .map_err(io)?;
    for (i, id) in ids.iter().enumerate() {
        let mut rec = vec![id.clone()];
        rec.extend(m.row(i).iter().map(|&v| format_sig(v, MATRIX_DIGITS)));
        wtr.write_record(&rec).map_err(io)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn read_matrix_file(path: &Path) -> Result<LabeledMatrix> {
    read_matrix(open(path)?)
}

pub fn write_matrix_file(path: &Path, ids: &[String], m: &SquareMatrix) -> Result<()> {
    let f = std::fs::File::create(path)?;
    write_matrix(std::io::BufWriter::new(f), ids, m)
}

fn open(path: &Path) -> Result<std::fs::File> {
    std::fs::File::open(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

/// Sidecar describing the columns of an entity table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableMetadata {
    pub columns: Vec<ColumnMeta>,
}

pub fn read_entity_table<R: Read>(r: R, meta: Option<&TableMetadata>) -> Result<EntityTable> {
    let mut rdr = reader(r, true);
    let header = rdr.headers().map_err(csv_error)?.clone();
    if header.len() < 2 || &header[0] != "id" {
        return Err(Error::Parse {
            line: 1,
            message: "entity table header must be `id,<col1>,...`".into(),
        });
    }
    let names: Vec<String> = header.iter().skip(1).map(str::to_string).collect();
    let columns: Vec<ColumnMeta> = match meta {
        Some(m) => {
            let declared: Vec<&str> = m.columns.iter().map(|c| c.name.as_str()).collect();
            if declared != names.iter().map(String::as_str).collect::<Vec<_>>() {
                return Err(Error::Parse {
                    line: 1,
                    message: format!(
                        "metadata columns {declared:?} do not match header columns {names:?}"
                    ),
                });
            }
            m.columns.clone()
        }
        None => names
            .iter()
            .map(|name| ColumnMeta {
                name: name.clone(),
                kind: ColumnKind::Numeric,
                unit: None,
            })
            .collect(),
    };

    let mut codes: Vec<HashMap<String, f64>> = vec![HashMap::new(); columns.len()];
    let mut ids = Vec::new();
    let mut features = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != columns.len() + 1 {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, found {}", columns.len() + 1, rec.len()),
            });
        }
        ids.push(rec[0].to_string());
        let mut row = Vec::with_capacity(columns.len());
        for (c, cell) in rec.iter().skip(1).enumerate() {
            let v = match columns[c].kind {
                ColumnKind::Numeric => parse_f64(cell, line)?,
                ColumnKind::Categorical => match cell.parse::<f64>() {
                    Ok(v) if v.is_finite() => v,
                    _ => {
                        let next = codes[c].len() as f64;
                        *codes[c].entry(cell.to_string()).or_insert(next)
                    }
                },
            };
            row.push(v);
        }
        features.push(row);
    }
    EntityTable::new(ids, features, columns)
}

pub fn read_entity_table_file(path: &Path, meta: Option<&Path>) -> Result<EntityTable> {
    let meta = match meta {
        Some(p) => Some(read_table_metadata(p)?),
        None => None,
    };
    read_entity_table(open(path)?, meta.as_ref())
}

pub fn read_table_metadata(path: &Path) -> Result<TableMetadata> {
    serde_json::from_reader(open(path)?).map_err(|e| Error::Parse {
        line: e.line(),
        message: format!("{}: {e}", path.display()),
    })
}

pub fn read_corpus<R: Read>(r: R) -> Result<DocumentCorpus> {
    let mut rdr = reader(r, true);
    let header = rdr.headers().map_err(csv_error)?.clone();
    let expected = ["entity_id", "doc_id", "count"];
    if header.iter().collect::<Vec<_>>() != expected {
        return Err(Error::Parse {
            line: 1,
            message: "corpus header must be `entity_id,doc_id,count`".into(),
        });
    }
    let mut triples: Vec<(String, String, u64)> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != 3 {
            return Err(Error::Parse {
                line,
                message: format!("expected 3 fields, found {}", rec.len()),
            });
        }
        let count: u64 = rec[2].parse().map_err(|_| Error::Parse {
            line,
            message: format!("`{}` is not a non-negative integer count", &rec[2]),
        })?;
        triples.push((rec[0].to_string(), rec[1].to_string(), count));
    }
    DocumentCorpus::from_triples(triples.iter().map(|(e, d, c)| (e.as_str(), d.as_str(), *c)))
}

pub fn read_corpus_file(path: &Path) -> Result<DocumentCorpus> {
    read_corpus(open(path)?)
}
