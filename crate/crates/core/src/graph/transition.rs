use super::{Graph, WeightedGraph};
use crate::error::{Error, Result};

/// Row-stochastic transition matrix `W` (CSR) plus initial distribution `M`.
///
/// `W[u][v]` is the probability of stepping from `u` to `v`. Columns within a
/// row are sorted. A row may be empty only in models built from bigram
/// counts, for tokens that never precede another token; a walk reaching such
/// a node restarts by drawing from `M`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionModel {
    row_offsets: Vec<u64>,
    cols: Vec<u32>,
    probs: Vec<f64>,
    initial: Vec<f64>,
}

const SUM_TOL: f64 = 1e-12;

impl TransitionModel {
    /// Build from raw CSR arrays, validating every invariant.
    pub fn from_csr(
        row_offsets: Vec<u64>,
        cols: Vec<u32>,
        probs: Vec<f64>,
        initial: Vec<f64>,
    ) -> Result<Self> {
        let model = TransitionModel {
            row_offsets,
            cols,
            probs,
            initial,
        };
        model.validate()?;
        Ok(model)
    }

    /// Normalise nonnegative per-row weights: `W = w / rowsum`,
    /// `M = rowsum / total`. Rows must be sorted by column.
    fn from_weighted_rows(rows: Vec<Vec<(u32, f64)>>) -> Result<Self> {
        let n = rows.len();
        let row_sums: Vec<f64> = rows
            .iter()
            .map(|r| r.iter().fold(0.0, |acc, &(_, w)| acc + w))
            .collect();
        let total: f64 = row_sums.iter().sum();
        if !(total > 0.0) {
            return Err(Error::degenerate("all transition weights are zero"));
        }
        let nnz = rows.iter().map(Vec::len).sum();
        let mut row_offsets = Vec::with_capacity(n + 1);
        let mut cols = Vec::with_capacity(nnz);
        let mut probs = Vec::with_capacity(nnz);
        row_offsets.push(0u64);
        for (row, &s) in rows.iter().zip(&row_sums) {
            for &(v, w) in row {
                cols.push(v);
                probs.push(w / s);
            }
            row_offsets.push(cols.len() as u64);
        }
        let initial = row_sums.iter().map(|s| s / total).collect();
        TransitionModel::from_csr(row_offsets, cols, probs, initial)
    }

    /// The unbiased walk: `W[u][v] = A_uv / deg(u)`, `M = deg / 2E`.
    pub fn unbiased(graph: &Graph) -> Result<Self> {
        build_transition_model(&WeightedGraph::unit(graph.clone()))
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.initial.len();
        if self.row_offsets.len() != n + 1 || self.row_offsets[0] != 0 {
            return Err(Error::Format(format!(
                "row offsets have length {} for {n} nodes",
                self.row_offsets.len()
            )));
        }
        let nnz = *self.row_offsets.last().unwrap() as usize;
        if self.cols.len() != nnz || self.probs.len() != nnz {
            return Err(Error::Format(
                "CSR array lengths disagree with row offsets".into(),
            ));
        }
        for u in 0..n {
            let (lo, hi) = (
                self.row_offsets[u] as usize,
                self.row_offsets[u + 1] as usize,
            );
            if hi < lo {
                return Err(Error::Format(format!("row offsets decrease at row {u}")));
            }
            let cols = &self.cols[lo..hi];
            if cols.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Format(format!(
                    "row {u} columns are not strictly increasing"
                )));
            }
            if let Some(&v) = cols.iter().find(|&&v| v as usize >= n) {
                return Err(Error::Format(format!(
                    "row {u} references node {v} outside 0..{n}"
                )));
            }
            let row = &self.probs[lo..hi];
            if row.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
                return Err(Error::Format(format!(
                    "row {u} has a negative or non-finite entry"
                )));
            }
            if !row.is_empty() {
                let s: f64 = row.iter().sum();
                if (s - 1.0).abs() > sum_tolerance(row.len()) {
                    return Err(Error::Format(format!("row {u} sums to {s}")));
                }
            }
        }
        if self.initial.iter().any(|p| !(*p >= 0.0 && p.is_finite())) {
            return Err(Error::Format(
                "initial distribution has a negative or non-finite entry".into(),
            ));
        }
        let s: f64 = self.initial.iter().sum();
        if (s - 1.0).abs() > sum_tolerance(n) {
            return Err(Error::Format(format!("initial distribution sums to {s}")));
        }
        Ok(())
    }

    pub fn n_nodes(&self) -> usize {
        self.initial.len()
    }

    pub fn nnz(&self) -> usize {
        self.cols.len()
    }

    /// Columns and probabilities of row `u`.
    pub fn row(&self, u: usize) -> (&[u32], &[f64]) {
        let (lo, hi) = (
            self.row_offsets[u] as usize,
            self.row_offsets[u + 1] as usize,
        );
        (&self.cols[lo..hi], &self.probs[lo..hi])
    }

    pub fn out_degree(&self, u: usize) -> usize {
        (self.row_offsets[u + 1] - self.row_offsets[u]) as usize
    }

    /// True when the walk restarts from `M` after reaching `u`.
    pub fn is_restart_row(&self, u: usize) -> bool {
        self.out_degree(u) == 0
    }

    pub fn has_restart_rows(&self) -> bool {
        (0..self.n_nodes()).any(|u| self.is_restart_row(u))
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }

    pub fn row_offsets(&self) -> &[u64] {
        &self.row_offsets
    }

    pub fn cols(&self) -> &[u32] {
        &self.cols
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Transition probability `W[u][v]` (0 off the support).
    pub fn prob(&self, u: usize, v: usize) -> f64 {
        let (cols, probs) = self.row(u);
        match cols.binary_search(&(v as u32)) {
            Ok(i) => probs[i],
            Err(_) => 0.0,
        }
    }

    /// Largest deviation of a nonempty row sum from 1.
    pub fn max_row_sum_error(&self) -> f64 {
        (0..self.n_nodes())
            .filter(|&u| !self.is_restart_row(u))
            .map(|u| (self.row(u).1.iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// One step of the chain on a row distribution: `out = x W`.
    pub fn left_multiply(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut restart_mass = 0.0;
        for (u, &xu) in x.iter().enumerate() {
            if xu == 0.0 {
                continue;
            }
            let (cols, probs) = self.row(u);
            if cols.is_empty() {
                restart_mass += xu;
                continue;
            }
            for (&v, &p) in cols.iter().zip(probs) {
                out[v as usize] += xu * p;
            }
        }
        if restart_mass != 0.0 {
            for (o, &m) in out.iter_mut().zip(&self.initial) {
                *o += restart_mass * m;
            }
        }
    }
}

fn sum_tolerance(len: usize) -> f64 {
    // accumulated rounding of `len` terms on top of the base tolerance
    SUM_TOL + 4.0 * f64::EPSILON * len as f64
}

/// Normalise a weighted graph into a transition model (both edge directions
/// are used: `W^init[u][v] = w(u→v)`).
pub fn build_transition_model(wg: &WeightedGraph) -> Result<TransitionModel> {
    let graph = wg.graph();
    let n = graph.n_nodes();
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); n];
    for (&(u, v), &(w_uv, w_vu)) in graph.edges().iter().zip(wg.weights()) {
        rows[u as usize].push((v, w_uv as f64));
        rows[v as usize].push((u, w_vu as f64));
    }
    if let Some(u) = rows.iter().position(Vec::is_empty) {
        return Err(Error::degenerate(format!(
            "node {u} is isolated (no incident edges)"
        )));
    }
    for row in &mut rows {
        row.sort_unstable_by_key(|&(v, _)| v);
    }
    TransitionModel::from_weighted_rows(rows)
}

/// Ordered token-pair occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BigramCounts {
    vocab_size: usize,
    /// `(u, v, count)` sorted by `(u, v)`, unique, counts > 0.
    counts: Vec<(u32, u32, u64)>,
}

impl BigramCounts {
    /// Merge repeated pairs and validate ranges; zero counts are dropped.
    pub fn new(
        vocab_size: usize,
        entries: impl IntoIterator<Item = (u32, u32, u64)>,
    ) -> Result<Self> {
        let mut counts: Vec<(u32, u32, u64)> = Vec::new();
        for (u, v, c) in entries {
            if u as usize >= vocab_size || v as usize >= vocab_size {
                return Err(Error::invalid(format!(
                    "bigram ({u}, {v}) outside vocabulary of size {vocab_size}"
                )));
            }
            if c > 0 {
                counts.push((u, v, c));
            }
        }
        counts.sort_unstable_by_key(|&(u, v, _)| (u, v));
        counts.dedup_by(|next, kept| {
            if (next.0, next.1) == (kept.0, kept.1) {
                kept.2 += next.2;
                true
            } else {
                false
            }
        });
        Ok(BigramCounts { vocab_size, counts })
    }

    /// Count adjacent pairs of a token sequence.
    pub fn from_tokens(vocab_size: usize, tokens: &[u32]) -> Result<Self> {
        BigramCounts::new(vocab_size, tokens.windows(2).map(|w| (w[0], w[1], 1)))
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn entries(&self) -> &[(u32, u32, u64)] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

/// Drop bigrams seen `min_count` times or fewer and normalise the rest.
pub fn build_bigram_model(counts: &BigramCounts, min_count: u64) -> Result<TransitionModel> {
    let mut rows: Vec<Vec<(u32, f64)>> = vec![Vec::new(); counts.vocab_size()];
    let mut kept = 0usize;
    for &(u, v, c) in counts.entries() {
        if c > min_count {
            rows[u as usize].push((v, c as f64));
            kept += 1;
        }
    }
    if kept == 0 {
        return Err(Error::degenerate(format!(
            "no bigram occurs more than {min_count} times; nothing left after filtering"
        )));
    }
    TransitionModel::from_weighted_rows(rows)
}
