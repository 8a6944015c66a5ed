//! Loss tables: one row per training run.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::powerfit::Series1D;
use crate::{Error, Result};

/// Column order of the loss-table CSV.
pub const LOSS_TABLE_COLUMNS: [&str; 9] = [
    "run_id",
    "n_params_total",
    "n_params_nonembed",
    "tokens",
    "loss",
    "dataset_tag",
    "arch_tag",
    "lr",
    "seed",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LossRow {
    pub run_id: String,
    pub n_params_total: f64,
    pub n_params_nonembed: Option<f64>,
    pub tokens: f64,
    /// Test loss in nats.
    pub loss: f64,
    pub dataset_tag: String,
    pub arch_tag: String,
    pub lr: Option<f64>,
    pub seed: Option<u64>,
}

/// Which parameter count plays the role of `N`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamAxis {
    #[default]
    Total,
    NonEmbedding,
}

/// One `(N, D)` point after minimising the loss over hyperparameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SurfacePoint {
    pub n: f64,
    pub d: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LossTable {
    rows: Vec<LossRow>,
}

impl LossTable {
    /// Validates positivity of `N`, `D`, loss and uniqueness of run ids.
    pub fn new(rows: Vec<LossRow>) -> Result<Self> {
        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        for (i, r) in rows.iter().enumerate() {
            let positive = |x: f64| x.is_finite() && x > 0.0;
            if !positive(r.n_params_total) || !positive(r.tokens) || !positive(r.loss) {
                problems.push(format!(
                    "row {i} ({}): N, D and loss must be positive and finite",
                    r.run_id
                ));
            }
            if let Some(ne) = r.n_params_nonembed {
                if !positive(ne) {
                    problems.push(format!(
                        "row {i} ({}): non-embedding N must be positive",
                        r.run_id
                    ));
                }
            }
            if !seen.insert(r.run_id.as_str()) {
                problems.push(format!("row {i}: duplicate run_id {}", r.run_id));
            }
        }
        if !problems.is_empty() {
            return Err(Error::invalid(problems.join("; ")));
        }
        Ok(LossTable { rows })
    }

    pub fn rows(&self) -> &[LossRow] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Copy without the `k` rows of largest loss.
    pub fn without_largest_losses(&self, k: usize) -> LossTable {
        let mut order: Vec<usize> = (0..self.rows.len()).collect();
        order.sort_by(|&a, &b| self.rows[b].loss.total_cmp(&self.rows[a].loss));
        let dropped: HashSet<usize> = order.into_iter().take(k).collect();
        LossTable {
            rows: (0..self.rows.len())
                .filter(|i| !dropped.contains(i))
                .map(|i| self.rows[i].clone())
                .collect(),
        }
    }

    /// Minimum loss per distinct `(N, D)`, sorted by `N` then `D`.
    pub fn points(&self, axis: ParamAxis) -> Result<Vec<SurfacePoint>> {
        let mut best: BTreeMap<(u64, u64), SurfacePoint> = BTreeMap::new();
        for r in &self.rows {
            let n = match axis {
                ParamAxis::Total => r.n_params_total,
                ParamAxis::NonEmbedding => r.n_params_nonembed.ok_or_else(|| {
                    Error::invalid(format!(
                        "run {} has no non-embedding parameter count",
                        r.run_id
                    ))
                })?,
            };
            // positive floats order like their bit patterns
            let key = (n.to_bits(), r.tokens.to_bits());
            let p = SurfacePoint {
                n,
                d: r.tokens,
                loss: r.loss,
            };
            best.entry(key)
                .and_modify(|q| {
                    if p.loss < q.loss {
                        *q = p;
                    }
                })
                .or_insert(p);
        }
        Ok(best.into_values().collect())
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let fmt = |x: Option<f64>| x.map_or(String::new(), |v| format!("{v}"));
        w.write_record(LOSS_TABLE_COLUMNS).map_err(csv_err)?;
        for r in &self.rows {
            w.write_record([
                r.run_id.clone(),
                format!("{}", r.n_params_total),
                fmt(r.n_params_nonembed),
                format!("{}", r.tokens),
                format!("{}", r.loss),
                r.dataset_tag.clone(),
                r.arch_tag.clone(),
                fmt(r.lr),
                r.seed.map_or(String::new(), |s| s.to_string()),
            ])
            .map_err(csv_err)?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }

    /// Strict reader for the canonical column layout.
    pub fn read_csv<R: Read>(input: R) -> Result<LossTable> {
        let mut rdr = csv::Reader::from_reader(input);
        let header: Vec<String> = rdr
            .headers()
            .map_err(csv_err)?
            .iter()
            .map(str::to_string)
            .collect();
        if header != LOSS_TABLE_COLUMNS {
            return Err(Error::Format(format!(
                "loss table header must be {}, got {}",
                LOSS_TABLE_COLUMNS.join(","),
                header.join(",")
            )));
        }
        let mut rows = Vec::new();
        let mut problems = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            match rec.map_err(csv_err).and_then(|r| parse_row(&r)) {
                Ok(row) => rows.push(row),
                Err(e) => problems.push(format!("line {line}: {e}")),
            }
        }
        if !problems.is_empty() {
            return Err(Error::Format(problems.join("; ")));
        }
        LossTable::new(rows)
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Format(e.to_string())
}

fn parse_row(r: &csv::StringRecord) -> Result<LossRow> {
    let num = |i: usize| -> Result<f64> {
        r[i].trim().parse::<f64>().map_err(|_| {
            Error::Format(format!(
                "column {} is not a number: {:?}",
                LOSS_TABLE_COLUMNS[i], &r[i]
            ))
        })
    };
    let opt = |i: usize| -> Result<Option<f64>> {
        if r[i].trim().is_empty() {
            Ok(None)
        } else {
            num(i).map(Some)
        }
    };
    Ok(LossRow {
        run_id: r[0].to_string(),
        n_params_total: num(1)?,
        n_params_nonembed: opt(2)?,
        tokens: num(3)?,
        loss: num(4)?,
        dataset_tag: r[5].to_string(),
        arch_tag: r[6].to_string(),
        lr: opt(7)?,
        seed: if r[8].trim().is_empty() {
            None
        } else {
            Some(
                r[8].trim()
                    .parse()
                    .map_err(|_| Error::Format(format!("seed is not an integer: {:?}", &r[8])))?,
            )
        },
    })
}

/// `L(D)_N` slices: for each distinct `N`, the curve over `D`.
pub fn slices_by_n(points: &[SurfacePoint]) -> Vec<(f64, Series1D)> {
    slices(points, |p| (p.n, p.d), "N")
}

/// `L(N)_D` slices: for each distinct `D`, the curve over `N`.
pub fn slices_by_d(points: &[SurfacePoint]) -> Vec<(f64, Series1D)> {
    slices(points, |p| (p.d, p.n), "D")
}

fn slices(
    points: &[SurfacePoint],
    key: impl Fn(&SurfacePoint) -> (f64, f64),
    name: &str,
) -> Vec<(f64, Series1D)> {
    let mut groups: BTreeMap<u64, (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for p in points {
        let (fixed, x) = key(p);
        let g = groups.entry(fixed.to_bits()).or_default();
        g.0.push(x);
        g.1.push(p.loss);
    }
    groups
        .into_iter()
        .filter_map(|(bits, (xs, ys))| {
            let fixed = f64::from_bits(bits);
            Series1D::new(xs, ys)
                .ok()
                .map(|s| (fixed, s.with_fixed(name, fixed)))
        })
        .collect()
}
