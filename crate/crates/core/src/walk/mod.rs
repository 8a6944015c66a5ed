//! Walk datasets sampled from a [`TransitionModel`], plus the exact ranked
//! distributions and spectral diagnostics of the underlying chain.

mod diagnostics;
pub mod io;
mod ranked;

use rand::Rng;
use rayon::prelude::*;

use crate::graph::TransitionModel;
use crate::{rng, Error, Result};

pub use diagnostics::{diagnostics, spectral_gap, stationary, ModelDiagnostics, Stationary};
pub use ranked::{
    mean_log_rank_profile, plateau_lengths, ranked_distributions, write_ranked_csv,
    DistributionKind, RankedDistribution,
};

/// Fixed-length token sequences stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct WalkDataset {
    vocab_size: usize,
    seq_len: usize,
    tokens: Vec<u32>,
    /// Seed the rows were sampled with; unknown for datasets read from disk.
    pub seed: Option<u64>,
}

impl WalkDataset {
    pub fn new(
        vocab_size: usize,
        seq_len: usize,
        tokens: Vec<u32>,
        seed: Option<u64>,
    ) -> Result<Self> {
        if seq_len == 0 {
            return Err(Error::invalid("seq_len must be at least 1"));
        }
        if !tokens.len().is_multiple_of(seq_len) {
            return Err(Error::invalid(format!(
                "{} tokens do not split into rows of length {seq_len}",
                tokens.len()
            )));
        }
        if let Some(pos) = tokens.iter().position(|&t| t as usize >= vocab_size) {
            return Err(Error::invalid(format!(
                "token {} at position {pos} is outside vocabulary of size {vocab_size}",
                tokens[pos]
            )));
        }
        Ok(WalkDataset {
            vocab_size,
            seq_len,
            tokens,
            seed,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocab_size
    }

    pub fn seq_len(&self) -> usize {
        self.seq_len
    }

    pub fn n_seqs(&self) -> usize {
        self.tokens.len() / self.seq_len
    }

    /// `D = n_seqs * seq_len`.
    pub fn total_tokens(&self) -> usize {
        self.tokens.len()
    }

    pub fn tokens(&self) -> &[u32] {
        &self.tokens
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.tokens[i * self.seq_len..(i + 1) * self.seq_len]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[u32]> {
        self.tokens.chunks_exact(self.seq_len)
    }

    /// Empirical unigram frequencies over all tokens.
    pub fn unigram_frequencies(&self) -> Vec<f64> {
        let mut counts = vec![0u64; self.vocab_size];
        for &t in &self.tokens {
            counts[t as usize] += 1;
        }
        let total = self.tokens.len() as f64;
        counts.into_iter().map(|c| c as f64 / total).collect()
    }
}

/// Total-variation distance `½ Σ |p − q|`.
pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    assert_eq!(p.len(), q.len());
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Walker/Vose alias table over a slice of probabilities.
#[derive(Debug, Clone)]
struct AliasTable {
    threshold: Vec<f64>,
    alias: Vec<u32>,
}

impl AliasTable {
    fn new(probs: &[f64]) -> Self {
        let n = probs.len();
        let total: f64 = probs.iter().sum();
        let mut scaled: Vec<f64> = probs.iter().map(|p| p * n as f64 / total).collect();
        let mut threshold = vec![1.0; n];
        let mut alias: Vec<u32> = (0..n as u32).collect();
        let (mut small, mut large): (Vec<usize>, Vec<usize>) =
            (0..n).partition(|&i| scaled[i] < 1.0);
        while let (Some(s), Some(&l)) = (small.pop(), large.last()) {
            threshold[s] = scaled[s];
            alias[s] = l as u32;
            scaled[l] -= 1.0 - scaled[s];
            if scaled[l] < 1.0 {
                large.pop();
                small.push(l);
            }
        }
        // leftovers are 1 up to rounding
        AliasTable { threshold, alias }
    }

    #[inline]
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let i = rng.random_range(0..self.threshold.len());
        if rng.random::<f64>() < self.threshold[i] {
            i
        } else {
            self.alias[i] as usize
        }
    }
}

/// Alias tables for every row of a model plus its initial distribution.
#[derive(Debug, Clone)]
pub struct WalkSampler<'a> {
    model: &'a TransitionModel,
    rows: Vec<Option<AliasTable>>,
    initial: AliasTable,
}

impl<'a> WalkSampler<'a> {
    pub fn new(model: &'a TransitionModel) -> Self {
        let rows = (0..model.n_nodes())
            .into_par_iter()
            .map(|u| {
                let (_, probs) = model.row(u);
                (!probs.is_empty()).then(|| AliasTable::new(probs))
            })
            .collect();
        WalkSampler {
            model,
            rows,
            initial: AliasTable::new(model.initial()),
        }
    }

    /// Next token after `u`; rows without out-edges restart from `M`.
    #[inline]
    pub fn step<R: Rng + ?Sized>(&self, u: usize, rng: &mut R) -> usize {
        match &self.rows[u] {
            Some(table) => self.model.row(u).0[table.sample(rng)] as usize,
            None => self.initial.sample(rng),
        }
    }

    pub fn start<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        self.initial.sample(rng)
    }

    /// Fill `out` with one walk: a draw from `M`, then chain steps.
    pub fn fill<R: Rng + ?Sized>(&self, out: &mut [u32], rng: &mut R) {
        let start = self.start(rng);
        self.fill_from(start, out, rng);
    }

    /// Fill `out` with a walk that begins at `start`.
    pub fn fill_from<R: Rng + ?Sized>(&self, start: usize, out: &mut [u32], rng: &mut R) {
        let mut u = start;
        for slot in out.iter_mut() {
            *slot = u as u32;
            u = self.step(u, rng);
        }
    }
}

/// Sample `n_seqs` independent walks of length `seq_len`. Row `i` uses the
/// random stream `(seed, i)`, so the output does not depend on the number of
/// worker threads.
pub fn sample_walks(
    model: &TransitionModel,
    seq_len: usize,
    n_seqs: usize,
    seed: u64,
) -> Result<WalkDataset> {
    if seq_len == 0 {
        return Err(Error::invalid("seq_len must be at least 1"));
    }
    let sampler = WalkSampler::new(model);
    let mut tokens = vec![0u32; seq_len * n_seqs];
    tokens
        .par_chunks_mut(seq_len)
        .enumerate()
        .for_each(|(i, row)| sampler.fill(row, &mut rng::stream(seed, i as u64)));
    let dataset = WalkDataset {
        vocab_size: model.n_nodes(),
        seq_len,
        tokens,
        seed: Some(seed),
    };
    if cfg!(debug_assertions) {
        validate_walks(model, &dataset)?;
    }
    Ok(dataset)
}

/// Check that every row starts in the support of `M` and every transition
/// has positive probability under the model.
pub fn validate_walks(model: &TransitionModel, dataset: &WalkDataset) -> Result<()> {
    if dataset.vocab_size() != model.n_nodes() {
        return Err(Error::invalid(format!(
            "dataset vocabulary {} differs from model size {}",
            dataset.vocab_size(),
            model.n_nodes()
        )));
    }
    let m = model.initial();
    for (i, row) in dataset.rows().enumerate() {
        if m[row[0] as usize] <= 0.0 {
            return Err(Error::invalid(format!(
                "row {i} starts at {} outside the support of M",
                row[0]
            )));
        }
        for (t, pair) in row.windows(2).enumerate() {
            let (u, v) = (pair[0] as usize, pair[1] as usize);
            let legal = if model.is_restart_row(u) {
                m[v] > 0.0
            } else {
                model.prob(u, v) > 0.0
            };
            if !legal {
                return Err(Error::invalid(format!(
                    "row {i}, position {t}: illegal transition {u} -> {v}"
                )));
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{gen_erdos_renyi, Graph};

    fn two_cycle() -> TransitionModel {
        TransitionModel::from_csr(vec![0, 1, 2], vec![1, 0], vec![1.0, 1.0], vec![1.0, 0.0])
            .unwrap()
    }

    #[test]
    fn deterministic_chain() {
        let ds = sample_walks(&two_cycle(), 5, 7, 3).unwrap();
        assert_eq!(ds.n_seqs(), 7);
        for row in ds.rows() {
            assert_eq!(row, &[0, 1, 0, 1, 0]);
        }
    }

    #[test]
    fn batch_shape() {
        let model = TransitionModel::unbiased(&Graph::cycle(5).unwrap()).unwrap();
        let ds = sample_walks(&model, 50, 100, 1).unwrap();
        assert_eq!(
            (ds.n_seqs(), ds.seq_len(), ds.total_tokens()),
            (100, 50, 5000)
        );
    }

    #[test]
    fn alias_table_matches_probabilities() {
        let probs = [0.5, 0.2, 0.2, 0.1];
        let table = AliasTable::new(&probs);
        let mut counts = [0usize; 4];
        let mut r = rng::root(9);
        let n = 400_000;
        for _ in 0..n {
            counts[table.sample(&mut r)] += 1;
        }
        for (c, p) in counts.iter().zip(probs) {
            let se = (p * (1.0 - p) / n as f64).sqrt();
            assert!((*c as f64 / n as f64 - p).abs() < 5.0 * se);
        }
    }

    #[test]
    fn independent_of_thread_count() {
        let g = gen_erdos_renyi(200, 800, 5).unwrap();
        let model = TransitionModel::unbiased(&g).unwrap();
        let one = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .unwrap();
        let four = rayon::ThreadPoolBuilder::new()
            .num_threads(4)
            .build()
            .unwrap();
        let a = one.install(|| sample_walks(&model, 20, 64, 11).unwrap());
        let b = four.install(|| sample_walks(&model, 20, 64, 11).unwrap());
        assert_eq!(a, b);
        assert_ne!(a, sample_walks(&model, 20, 64, 12).unwrap());
    }

    #[test]
    fn unigram_converges_to_stationary() {
        let g = gen_erdos_renyi(100, 400, 2).unwrap();
        let model = TransitionModel::unbiased(&g).unwrap();
        let pi = model.initial().to_vec();
        let tv: Vec<f64> = [10_000usize, 100_000, 1_000_000]
            .iter()
            .map(|&d| {
                total_variation(
                    &sample_walks(&model, 100, d / 100, 4)
                        .unwrap()
                        .unigram_frequencies(),
                    &pi,
                )
            })
            .collect();
        assert!(tv[0] > tv[1] && tv[1] > tv[2], "{tv:?}");
    }

    #[test]
    fn rejects_illegal_walks() {
        let model = two_cycle();
        let ds = WalkDataset::new(2, 3, vec![0, 0, 1], None).unwrap();
        assert!(validate_walks(&model, &ds).is_err());
        let ds = WalkDataset::new(2, 3, vec![1, 0, 1], None).unwrap();
        assert!(validate_walks(&model, &ds).is_err());
        assert!(WalkDataset::new(2, 3, vec![0, 1], None).is_err());
        assert!(WalkDataset::new(2, 2, vec![0, 2], None).is_err());
    }

    #[test]
    fn restart_rows_draw_from_initial() {
        // node 1 has no out-edges
        let model =
            TransitionModel::from_csr(vec![0, 1, 1], vec![1], vec![1.0], vec![0.5, 0.5]).unwrap();
        let ds = sample_walks(&model, 30, 50, 8).unwrap();
        validate_walks(&model, &ds).unwrap();
    }
}
