//! Loss-table ingestion from CSV files with configurable column names.

use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::SchemaPreset;
use crate::surface::{LossRow, LossTable};
use crate::{Error, Result};

/// Source column names for each loss-table field. Optional fields left as
/// `None` are filled with blanks.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchemaMap {
    pub run_id: Option<String>,
    pub n_params_total: String,
    pub n_params_nonembed: Option<String>,
    pub tokens: String,
    pub loss: String,
    pub dataset_tag: Option<String>,
    pub arch_tag: Option<String>,
    pub lr: Option<String>,
    pub seed: Option<String>,
}

impl SchemaMap {
    pub fn native() -> Self {
        SchemaMap {
            run_id: Some("run_id".into()),
            n_params_total: "n_params_total".into(),
            n_params_nonembed: Some("n_params_nonembed".into()),
            tokens: "tokens".into(),
            loss: "loss".into(),
            dataset_tag: Some("dataset_tag".into()),
            arch_tag: Some("arch_tag".into()),
            lr: Some("lr".into()),
            seed: Some("seed".into()),
        }
    }

    /// The Epoch AI extraction of the Chinchilla loss table.
    pub fn epoch() -> Self {
        SchemaMap {
            run_id: None,
            n_params_total: "Model Size".into(),
            n_params_nonembed: None,
            tokens: "Training Tokens".into(),
            loss: "loss".into(),
            dataset_tag: None,
            arch_tag: None,
            lr: None,
            seed: None,
        }
    }

    pub fn preset(p: SchemaPreset) -> Self {
        match p {
            SchemaPreset::Native => Self::native(),
            SchemaPreset::Epoch => Self::epoch(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestReport {
    pub rows_read: usize,
    pub duplicates_removed: usize,
    pub dropped_largest: usize,
    pub rows_kept: usize,
}

/// Parse `text` (whose origin is `path`, used in messages) under `schema`.
/// Rows repeating an `(N, D, lr, seed)` key keep only the lowest loss; the
/// `drop_largest` highest-loss rows are then removed.
pub fn ingest_str(
    path: &Path,
    text: &str,
    schema: &SchemaMap,
    drop_largest: usize,
) -> Result<(LossTable, IngestReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = rdr
        .headers()
        .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
        .clone();
    let index: HashMap<&str, usize> = header.iter().enumerate().map(|(i, h)| (h, i)).collect();
    let col = |name: &str| {
        index.get(name).copied().ok_or_else(|| Error::Malformed {
            path: path.to_path_buf(),
            problems: vec![format!(
                "missing column {name:?}; header is {:?}",
                header.iter().collect::<Vec<_>>()
            )],
        })
    };
    let opt_col = |name: &Option<String>| name.as_deref().map(col).transpose();
    let (c_n, c_d, c_loss) = (
        col(&schema.n_params_total)?,
        col(&schema.tokens)?,
        col(&schema.loss)?,
    );
    let (c_id, c_ne, c_ds, c_arch, c_lr, c_seed) = (
        opt_col(&schema.run_id)?,
        opt_col(&schema.n_params_nonembed)?,
        opt_col(&schema.dataset_tag)?,
        opt_col(&schema.arch_tag)?,
        opt_col(&schema.lr)?,
        opt_col(&schema.seed)?,
    );

    let mut rows = Vec::new();
    let mut problems = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("line {line}: {e}"));
                continue;
            }
        };
        let field = |c: usize| rec.get(c).unwrap_or("");
        let num = |c: usize| -> std::result::Result<f64, String> {
            let s = field(c);
            match s.parse::<f64>() {
                Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
                _ => Err(format!(
                    "column {:?} must be a positive number, got {s:?}",
                    &header[c]
                )),
            }
        };
        let opt_num = |c: Option<usize>| -> std::result::Result<Option<f64>, String> {
            match c.map(field) {
                None | Some("") => Ok(None),
                Some(_) => num(c.unwrap()).map(Some),
            }
        };
        let parsed = (|| -> std::result::Result<LossRow, String> {
            Ok(LossRow {
                run_id: c_id.map_or_else(|| format!("row{line}"), |c| field(c).to_string()),
                n_params_total: num(c_n)?,
                n_params_nonembed: opt_num(c_ne)?,
                tokens: num(c_d)?,
                loss: num(c_loss)?,
                dataset_tag: c_ds.map_or(String::new(), |c| field(c).to_string()),
                arch_tag: c_arch.map_or(String::new(), |c| field(c).to_string()),
                lr: opt_num(c_lr)?,
                seed: match c_seed.map(field) {
                    None | Some("") => None,
                    Some(s) => Some(
                        s.parse()
                            .map_err(|_| format!("seed is not an integer: {s:?}"))?,
                    ),
                },
            })
        })();
        match parsed {
            Ok(r) => rows.push(r),
            Err(msg) => problems.push(format!("line {line}: {msg}")),
        }
    }
    if !problems.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            problems,
        });
    }
    if rows.is_empty() {
        return Err(Error::Malformed {
            path: path.to_path_buf(),
            problems: vec!["no data rows".into()],
        });
    }
    let rows_read = rows.len();

    let mut best: HashMap<(u64, u64, Option<u64>, Option<u64>), usize> = HashMap::new();
    let mut keep = vec![true; rows.len()];
    for (i, r) in rows.iter().enumerate() {
        let key = (
            r.n_params_total.to_bits(),
            r.tokens.to_bits(),
            r.lr.map(f64::to_bits),
            r.seed,
        );
        if let Some(&j) = best.get(&key) {
            let (winner, loser) = if r.loss < rows[j].loss {
                (i, j)
            } else {
                (j, i)
            };
            keep[loser] = false;
            best.insert(key, winner);
        } else {
            best.insert(key, i);
        }
    }
    let duplicates_removed = keep.iter().filter(|k| !**k).count();
    if duplicates_removed > 0 {
        log::warn!(
            "{}: {duplicates_removed} rows repeat an (N, D, lr, seed) key; kept the lowest loss of each",
            path.display()
        );
    }
    let rows: Vec<LossRow> = rows
        .into_iter()
        .zip(keep)
        .filter_map(|(r, k)| k.then_some(r))
        .collect();
    let table = LossTable::new(rows)?;
    let dropped_largest = drop_largest.min(table.len());
    let table = table.without_largest_losses(drop_largest);
    let report = IngestReport {
        rows_read,
        duplicates_removed,
        dropped_largest,
        rows_kept: table.len(),
    };
    Ok((table, report))
}

pub fn cmd_ingest(
    path: &Path,
    schema: &SchemaMap,
    drop_largest: usize,
) -> Result<(LossTable, IngestReport)> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ingest_str(path, &text, schema, drop_largest)
}
