//! Exact rank-ordered unigram and bigram distributions of a model.

use std::fmt;
use std::io::Write;

use crate::graph::TransitionModel;
use crate::Result;

use super::stationary;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionKind {
    /// Stationary `p(v)`.
    Unigram,
    /// Transition probabilities `p(u|v)` pooled over edges, each row weighted
    /// `1/n` over the `n` non-restart rows so the list sums to one.
    BigramConditional,
    /// `p(v) p(u|v)` over edges.
    BigramJoint,
}

impl fmt::Display for DistributionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistributionKind::Unigram => "unigram",
            DistributionKind::BigramConditional => "bigram-conditional",
            DistributionKind::BigramJoint => "bigram-joint",
        })
    }
}

/// Probabilities sorted in non-increasing order; rank `r` (1-based) is
/// `probs[r - 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankedDistribution {
    pub kind: DistributionKind,
    pub probs: Vec<f64>,
}

impl RankedDistribution {
    fn new(kind: DistributionKind, mut probs: Vec<f64>) -> Self {
        probs.retain(|&p| p > 0.0);
        probs.sort_by(|a, b| b.total_cmp(a));
        RankedDistribution { kind, probs }
    }

    /// `(rank, probability)` pairs, ranks starting at 1.
    pub fn entries(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.probs.iter().enumerate().map(|(i, &p)| (i + 1, p))
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }
}

/// Unigram, pooled conditional, and joint bigram distributions, in that
/// order. Rows that restart from `M` contribute no bigram entries.
pub fn ranked_distributions(model: &TransitionModel) -> Result<Vec<RankedDistribution>> {
    let pi = stationary(model)?.probs;
    let mut joint = Vec::with_capacity(model.nnz());
    for (v, &pv) in pi.iter().enumerate() {
        if pv > 0.0 {
            joint.extend(model.row(v).1.iter().map(|&p| pv * p));
        }
    }
    let rows = (0..model.n_nodes()).filter(|&v| !model.is_restart_row(v)).count().max(1);
    let conditional = model.probs().iter().map(|p| p / rows as f64).collect();
    Ok(vec![
        RankedDistribution::new(DistributionKind::Unigram, pi),
        RankedDistribution::new(DistributionKind::BigramConditional, conditional),
        RankedDistribution::new(DistributionKind::BigramJoint, joint),
    ])
}

/// Mean of `ln p` at each within-row rank, over all rows with exactly
/// `out_degree` entries. `None` when no row has that degree.
///
/// Averaging over many rows of equal degree gives the expected rank law of
/// a single row without the fluctuations of one sample.
pub fn mean_log_rank_profile(model: &TransitionModel, out_degree: usize) -> Option<Vec<f64>> {
    let mut sum = vec![0.0; out_degree];
    let mut count = 0usize;
    let mut row = Vec::with_capacity(out_degree);
    for u in 0..model.n_nodes() {
        if model.out_degree(u) != out_degree || out_degree == 0 {
            continue;
        }
        row.clear();
        row.extend_from_slice(model.row(u).1);
        row.sort_by(|a, b| b.total_cmp(a));
        sum.iter_mut().zip(&row).for_each(|(s, p)| *s += p.ln());
        count += 1;
    }
    (count > 0).then(|| sum.into_iter().map(|s| s / count as f64).collect())
}

/// Lengths of maximal runs of (relatively) equal consecutive probabilities,
/// in rank order. A distribution without ties gives all ones.
pub fn plateau_lengths(probs: &[f64], rel_tol: f64) -> Vec<usize> {
    let mut runs = Vec::new();
    let mut start = 0;
    for i in 1..=probs.len() {
        let same =
            i < probs.len() && (probs[i] - probs[start]).abs() <= rel_tol * probs[start].abs();
        if !same {
            runs.push(i - start);
            start = i;
        }
    }
    runs
}

/// CSV with header `rank,probability,kind`.
pub fn write_ranked_csv<W: Write>(out: W, dists: &[RankedDistribution]) -> std::io::Result<()> {
    let mut out = std::io::BufWriter::new(out);
    writeln!(out, "rank,probability,kind")?;
    for d in dists {
        for (r, p) in d.entries() {
            writeln!(out, "{r},{p:e},{}", d.kind)?;
        }
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{Graph, TransitionModel};

    #[test]
    fn regular_graph_is_flat() {
        let model = TransitionModel::unbiased(&Graph::cycle(7).unwrap()).unwrap();
        let d = ranked_distributions(&model).unwrap();
        assert_eq!(d[0].kind, DistributionKind::Unigram);
        assert!(d[0].probs.iter().all(|&p| (p - 1.0 / 7.0).abs() < 1e-12));
        assert_eq!(plateau_lengths(&d[0].probs, 1e-9), vec![7]);
        assert!((d[2].total() - 1.0).abs() < 1e-12);
        assert_eq!(d[1].probs.len(), 14);
        assert!((d[1].total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn plateaus() {
        assert_eq!(
            plateau_lengths(&[3.0, 3.0, 2.0, 1.0, 1.0, 1.0], 1e-12),
            vec![2, 1, 3]
        );
        assert!(plateau_lengths(&[], 1e-12).is_empty());
    }

    #[test]
    fn csv_layout() {
        let model = TransitionModel::unbiased(&Graph::complete(3)).unwrap();
        let mut buf = Vec::new();
        write_ranked_csv(&mut buf, &ranked_distributions(&model).unwrap()).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "rank,probability,kind");
        assert_eq!(lines.len(), 1 + 3 + 6 + 6);
        assert!(lines[1].ends_with(",unigram"));
        assert!(lines[4].starts_with("1,") && lines[4].ends_with(",bigram-conditional"));
    }
}
