//! Expected loss of the counting estimator `π̂_a = n_a / D`, the baseline a
//! learner of a probability table should approach, with Monte-Carlo oracles.
//!
//! For cross-entropy the expansion in `1/D` is
//!
//! ```text
//! E[L] = S_π + (|V| − 1) / (2D) + c₂ / D² + O(D⁻³)
//! ```
//!
//! The second-order coefficient collects the third central moment of the
//! counts and the leading part of the fourth:
//! `c₂ = −|V|/2 + 1/12 + (5/12) Σ 1/π_a`. Keeping only the third-moment
//! contribution gives `|V| − 2/3 − (1/3) Σ 1/π_a`, available as
//! [`CseOrder::SecondThirdMomentOnly`] for comparison.

use rand::Rng;
use rand_distr::{Binomial, Distribution as _};
use rayon::prelude::*;

use crate::graph::TransitionModel;
use crate::stats::{entropy, mean, std_sample};
use crate::walk::{stationary, WalkSampler};
use crate::{rng, Error, Result};

/// Default additive smoothing for the Monte-Carlo cross-entropy oracle.
pub const DEFAULT_SMOOTHING: f64 = 1e-3;

const MIN_PROB_ORDER2: f64 = 1e-12;

/// A probability vector over `|V|` outcomes.
#[derive(Debug, Clone, PartialEq)]
pub struct Distribution {
    probs: Vec<f64>,
}

impl Distribution {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::invalid("distribution needs at least one outcome"));
        }
        if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) {
            return Err(Error::invalid(
                "probabilities must be finite and nonnegative",
            ));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > 1e-12 + 4.0 * f64::EPSILON * probs.len() as f64 {
            return Err(Error::invalid(format!(
                "probabilities sum to {total}, not 1"
            )));
        }
        Ok(Distribution { probs })
    }

    /// Normalise nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return Err(Error::invalid("weights must have positive sum"));
        }
        Distribution::new(weights.iter().map(|w| w / total).collect())
    }

    pub fn uniform(n: usize) -> Self {
        Distribution {
            probs: vec![1.0 / n as f64; n],
        }
    }

    pub fn one_hot(n: usize, at: usize) -> Self {
        let mut probs = vec![0.0; n];
        probs[at] = 1.0;
        Distribution { probs }
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// `S_π` in nats.
    pub fn entropy(&self) -> f64 {
        entropy(&self.probs)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    Cse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CseOrder {
    First,
    Second,
    /// Second order with only the third-central-moment term.
    SecondThirdMomentOnly,
}

/// `leading + coeff_1 / D + coeff_2 / D²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselinePrediction {
    pub loss_kind: LossKind,
    pub leading: f64,
    pub coeff_1: f64,
    pub coeff_2: f64,
}

impl BaselinePrediction {
    pub fn value_at(&self, d: f64) -> f64 {
        self.leading + self.coeff_1 / d + self.coeff_2 / (d * d)
    }
}

/// Exact `E[L_MSE] = (1/|V|) Σ π_a (1 − π_a) / D`.
pub fn mse_prediction(pi: &Distribution) -> BaselinePrediction {
    let v = pi.len() as f64;
    BaselinePrediction {
        loss_kind: LossKind::Mse,
        leading: 0.0,
        coeff_1: pi.probs.iter().map(|p| p * (1.0 - p)).sum::<f64>() / v,
        coeff_2: 0.0,
    }
}

pub fn expected_mse(pi: &Distribution, d: f64) -> f64 {
    mse_prediction(pi).value_at(d)
}

pub fn cse_prediction(pi: &Distribution, order: CseOrder) -> Result<BaselinePrediction> {
    let v = pi.len() as f64;
    let coeff_2 = match order {
        CseOrder::First => 0.0,
        CseOrder::Second | CseOrder::SecondThirdMomentOnly => {
            if let Some(a) = pi.probs.iter().position(|&p| p < MIN_PROB_ORDER2) {
                return Err(Error::invalid(format!(
                    "outcome {a} has probability {} and the 1/D² term diverges",
                    pi.probs[a]
                )));
            }
            let inv_sum: f64 = pi.probs.iter().map(|p| 1.0 / p).sum();
            if order == CseOrder::Second {
                -v / 2.0 + 1.0 / 12.0 + 5.0 / 12.0 * inv_sum
            } else {
                v - 2.0 / 3.0 - inv_sum / 3.0
            }
        }
    };
    Ok(BaselinePrediction {
        loss_kind: LossKind::Cse,
        leading: pi.entropy(),
        coeff_1: (v - 1.0) / 2.0,
        coeff_2,
    })
}

pub fn expected_cse(pi: &Distribution, d: f64, order: CseOrder) -> Result<f64> {
    Ok(cse_prediction(pi, order)?.value_at(d))
}

/// First-order cross-entropy baseline of a counting learner of the
/// transition table from `D` tokens:
/// `Σ_v p(v) [S(p(·|v)) + (deg(v) − 1) / (2 p(v) D)]`, which for an
/// unbiased walk equals `⟨S⟩ + (2E − n) / (2D)`.
pub fn walk_baseline_cse(model: &TransitionModel, d: f64) -> Result<f64> {
    let pi = stationary(model)?.probs;
    let restart_entropy = entropy(model.initial());
    let restart_support = model.initial().iter().filter(|&&p| p > 0.0).count();
    let mut total = 0.0;
    for (v, &pv) in pi.iter().enumerate() {
        if pv <= 0.0 {
            continue;
        }
        let (s, deg) = if model.is_restart_row(v) {
            (restart_entropy, restart_support)
        } else {
            (entropy(model.row(v).1), model.out_degree(v))
        };
        total += pv * s + (deg as f64 - 1.0) / (2.0 * d);
    }
    Ok(total)
}

/// What the counting estimator learns in [`mc_counting_loss`].
#[derive(Debug, Clone, Copy)]
pub enum McSource<'a> {
    /// `D` i.i.d. draws from a distribution.
    Iid(&'a Distribution),
    /// A single walk of `D` transitions started from the stationary law;
    /// every row `p(·|v)` is estimated from its own transition counts.
    Walk(&'a TransitionModel),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub stderr: f64,
    pub n_trials: usize,
}

/// Mean and standard error of the counting-estimator loss over `n_trials`
/// independent samples of size `D`.
///
/// Cross-entropy uses additive smoothing `(n_a + ε) / (D + ε|V|)` over the
/// true support so the loss is finite; MSE uses raw frequencies. Walk
/// sources support cross-entropy only.
pub fn mc_counting_loss(
    source: McSource<'_>,
    d: u64,
    loss_kind: LossKind,
    n_trials: usize,
    smoothing: f64,
    seed: u64,
) -> Result<McEstimate> {
    if n_trials < 2 {
        return Err(Error::invalid("need at least 2 Monte-Carlo trials"));
    }
    if d == 0 {
        return Err(Error::invalid("sample size D must be positive"));
    }
    if !(smoothing > 0.0) && loss_kind == LossKind::Cse {
        return Err(Error::invalid(
            "cross-entropy oracle needs positive smoothing",
        ));
    }
    let losses: Vec<f64> = match source {
        McSource::Iid(pi) => (0..n_trials)
            .into_par_iter()
            .map(|t| {
                iid_trial(
                    pi,
                    d,
                    loss_kind,
                    smoothing,
                    &mut rng::stream(seed, t as u64),
                )
            })
            .collect(),
        McSource::Walk(model) => {
            if loss_kind != LossKind::Cse {
                return Err(Error::invalid("walk sources support cross-entropy only"));
            }
            let pi = stationary(model)?.probs;
            let cdf: Vec<f64> = pi
                .iter()
                .scan(0.0, |acc, p| {
                    *acc += p;
                    Some(*acc)
                })
                .collect();
            let sampler = WalkSampler::new(model);
            (0..n_trials)
                .into_par_iter()
                .map(|t| {
                    walk_trial(
                        model,
                        &sampler,
                        &pi,
                        &cdf,
                        d,
                        smoothing,
                        &mut rng::stream(seed, t as u64),
                    )
                })
                .collect()
        }
    };
    Ok(McEstimate {
        mean: mean(&losses),
        stderr: std_sample(&losses) / (n_trials as f64).sqrt(),
        n_trials,
    })
}

/// Multinomial counts via sequential conditional binomials.
fn multinomial<R: Rng + ?Sized>(probs: &[f64], d: u64, rng: &mut R) -> Vec<u64> {
    let mut counts = vec![0u64; probs.len()];
    let mut left = d;
    let mut mass = 1.0;
    for (c, &p) in counts.iter_mut().zip(probs) {
        if left == 0 {
            break;
        }
        let q = if mass > 0.0 {
            (p / mass).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let n = Binomial::new(left, q).expect("q in [0, 1]").sample(rng);
        *c = n;
        left -= n;
        mass -= p;
    }
    // rounding can strand a few draws when the tail mass underflows
    if left > 0 {
        let last = probs.iter().rposition(|&p| p > 0.0).unwrap_or(0);
        counts[last] += left;
    }
    counts
}

fn iid_trial<R: Rng + ?Sized>(
    pi: &Distribution,
    d: u64,
    kind: LossKind,
    eps: f64,
    rng: &mut R,
) -> f64 {
    let counts = multinomial(&pi.probs, d, rng);
    let df = d as f64;
    match kind {
        LossKind::Mse => {
            pi.probs
                .iter()
                .zip(&counts)
                .map(|(p, &n)| (p - n as f64 / df).powi(2))
                .sum::<f64>()
                / pi.len() as f64
        }
        LossKind::Cse => {
            let denom = df + eps * pi.len() as f64;
            -pi.probs
                .iter()
                .zip(&counts)
                .filter(|(p, _)| **p > 0.0)
                .map(|(p, &n)| p * ((n as f64 + eps) / denom).ln())
                .sum::<f64>()
        }
    }
}

fn walk_trial<R: Rng + ?Sized>(
    model: &TransitionModel,
    sampler: &WalkSampler<'_>,
    pi: &[f64],
    cdf: &[f64],
    d: u64,
    eps: f64,
    rng: &mut R,
) -> f64 {
    let u: f64 = rng.random::<f64>() * cdf[cdf.len() - 1];
    let start = cdf.partition_point(|&c| c <= u).min(cdf.len() - 1);
    let mut tokens = vec![0u32; d as usize + 1];
    sampler.fill_from(start, &mut tokens, rng);

    let offsets = model.row_offsets();
    let mut counts = vec![0u64; model.nnz()];
    for pair in tokens.windows(2) {
        let (v, u) = (pair[0] as usize, pair[1]);
        let (cols, _) = model.row(v);
        if let Ok(j) = cols.binary_search(&u) {
            counts[offsets[v] as usize + j] += 1;
        }
    }
    let mut loss = 0.0;
    for (v, &pv) in pi.iter().enumerate() {
        let (_, probs) = model.row(v);
        if pv <= 0.0 || probs.is_empty() {
            continue;
        }
        let row_counts = &counts[offsets[v] as usize..offsets[v + 1] as usize];
        let n_v: u64 = row_counts.iter().sum();
        let denom = n_v as f64 + eps * probs.len() as f64;
        let row_loss: f64 = probs
            .iter()
            .zip(row_counts)
            .map(|(p, &n)| -p * ((n as f64 + eps) / denom).ln())
            .sum();
        loss += pv * row_loss;
    }
    loss
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn closed_forms() {
        assert!((expected_mse(&Distribution::uniform(2), 100.0) - 0.0025).abs() < 1e-15);
        assert_eq!(expected_mse(&Distribution::one_hot(5, 2), 10.0), 0.0);
        let cse = expected_cse(&Distribution::uniform(2), 100.0, CseOrder::First).unwrap();
        assert!((cse - (2f64.ln() + 0.005)).abs() < 1e-15);
    }

    #[test]
    fn second_order_coefficients() {
        // uniform V: Σ 1/π = V²
        let p = cse_prediction(&Distribution::uniform(16), CseOrder::Second).unwrap();
        assert!((p.coeff_2 - (-8.0 + 1.0 / 12.0 + 5.0 / 12.0 * 256.0)).abs() < 1e-9);
        let q =
            cse_prediction(&Distribution::uniform(16), CseOrder::SecondThirdMomentOnly).unwrap();
        assert!((q.coeff_2 - (16.0 - 2.0 / 3.0 - 256.0 / 3.0)).abs() < 1e-9);
        assert!(cse_prediction(&Distribution::one_hot(3, 0), CseOrder::Second).is_err());
        assert!(cse_prediction(&Distribution::one_hot(3, 0), CseOrder::First).is_ok());
    }

    #[test]
    fn five_cycle_walk_baseline() {
        let model = TransitionModel::unbiased(&Graph::cycle(5).unwrap()).unwrap();
        let b = walk_baseline_cse(&model, 1000.0).unwrap();
        assert!((b - (2f64.ln() + 0.0025)).abs() < 1e-12);
    }

    #[test]
    fn one_hot_mse_is_zero() {
        let pi = Distribution::one_hot(4, 1);
        let est = mc_counting_loss(
            McSource::Iid(&pi),
            100,
            LossKind::Mse,
            10,
            DEFAULT_SMOOTHING,
            1,
        )
        .unwrap();
        assert_eq!(est.mean, 0.0);
        assert_eq!(est.stderr, 0.0);
    }

    #[test]
    fn multinomial_sums_to_d() {
        let mut r = rng::root(1);
        let probs = [0.1, 0.0, 0.6, 0.3];
        for d in [1u64, 7, 1000] {
            let c = multinomial(&probs, d, &mut r);
            assert_eq!(c.iter().sum::<u64>(), d);
            assert_eq!(c[1], 0);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        assert!(Distribution::new(vec![0.5, 0.6]).is_err());
        let pi = Distribution::uniform(3);
        assert!(mc_counting_loss(McSource::Iid(&pi), 10, LossKind::Cse, 1, 1e-3, 0).is_err());
        assert!(mc_counting_loss(McSource::Iid(&pi), 0, LossKind::Cse, 5, 1e-3, 0).is_err());
    }
}
