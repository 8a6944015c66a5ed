use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::rng;

/// Truncated discrete power law `Pr(k) ∝ k^-κ` on `k_min..=k_max`, sampled
/// by inverse CDF over the exact normalized table.
#[derive(Debug, Clone)]
pub struct TruncatedPowerLaw {
    k_min: u32,
    cdf: Vec<f64>,
}

impl TruncatedPowerLaw {
    pub fn new(kappa: f64, k_min: u32, k_max: u32) -> Result<Self> {
        if !(kappa >= 0.0 && kappa.is_finite()) {
            return Err(Error::invalid(format!(
                "bias exponent must be finite and >= 0, got {kappa}"
            )));
        }
        if k_min == 0 || k_min > k_max {
            return Err(Error::invalid(format!(
                "weight range must satisfy 1 <= k_min <= k_max (got [{k_min}, {k_max}])"
            )));
        }
        let mut acc = 0.0;
        let mut cdf: Vec<f64> = (k_min..=k_max)
            .map(|k| {
                acc += (k as f64).powf(-kappa);
                acc
            })
            .collect();
        let total = acc;
        for c in &mut cdf {
            *c /= total;
        }
        *cdf.last_mut().unwrap() = 1.0;
        Ok(TruncatedPowerLaw { k_min, cdf })
    }

    pub fn pmf(&self, k: u32) -> f64 {
        if k < self.k_min || k as usize >= self.k_min as usize + self.cdf.len() {
            return 0.0;
        }
        let i = (k - self.k_min) as usize;
        if i == 0 {
            self.cdf[0]
        } else {
            self.cdf[i] - self.cdf[i - 1]
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u32 {
        let u: f64 = rng.random();
        let i = self
            .cdf
            .partition_point(|&c| c <= u)
            .min(self.cdf.len() - 1);
        self.k_min + i as u32
    }
}

/// An undirected support graph carrying independent integer weights on each
/// direction of every edge.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedGraph {
    graph: Graph,
    /// `(w(u→v), w(v→u))` aligned with `graph.edges()`.
    weights: Vec<(u32, u32)>,
    kappa: f64,
    k_min: u32,
    k_max: u32,
}

impl WeightedGraph {
    /// Assemble from explicit per-direction weights (used by file loaders).
    pub fn from_parts(
        graph: Graph,
        weights: Vec<(u32, u32)>,
        kappa: f64,
        k_min: u32,
        k_max: u32,
    ) -> Result<Self> {
        if weights.len() != graph.n_edges() {
            return Err(Error::invalid(format!(
                "{} weight pairs for {} edges",
                weights.len(),
                graph.n_edges()
            )));
        }
        if let Some(&(a, b)) = weights.iter().find(|&&(a, b)| a == 0 || b == 0) {
            return Err(Error::invalid(format!(
                "non-positive weight pair ({a}, {b})"
            )));
        }
        Ok(WeightedGraph {
            graph,
            weights,
            kappa,
            k_min,
            k_max,
        })
    }

    /// Every direction weighted 1 (the unbiased walk).
    pub fn unit(graph: Graph) -> Self {
        let weights = vec![(1, 1); graph.n_edges()];
        WeightedGraph {
            graph,
            weights,
            kappa: 0.0,
            k_min: 1,
            k_max: 1,
        }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn weights(&self) -> &[(u32, u32)] {
        &self.weights
    }

    pub fn kappa(&self) -> f64 {
        self.kappa
    }

    pub fn k_range(&self) -> (u32, u32) {
        (self.k_min, self.k_max)
    }
}

/// Draw `w(u→v)` and `w(v→u)` independently from the truncated power law for
/// every edge, in canonical edge order.
pub fn assign_weights(
    graph: Graph,
    kappa: f64,
    k_min: u32,
    k_max: u32,
    seed: u64,
) -> Result<WeightedGraph> {
    let law = TruncatedPowerLaw::new(kappa, k_min, k_max)?;
    let mut rng = rng::root(seed);
    let weights = (0..graph.n_edges())
        .map(|_| {
            let forward = law.sample(&mut rng);
            let backward = law.sample(&mut rng);
            (forward, backward)
        })
        .collect();
    Ok(WeightedGraph {
        graph,
        weights,
        kappa,
        k_min,
        k_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::gen_erdos_renyi;

    #[test]
    fn pmf_normalised_and_uniform_at_zero_bias() {
        let law = TruncatedPowerLaw::new(0.0, 3, 7).unwrap();
        for k in 3..=7 {
            assert!((law.pmf(k) - 0.2).abs() < 1e-15);
        }
        assert_eq!(law.pmf(2), 0.0);
        assert_eq!(law.pmf(8), 0.0);
        let law = TruncatedPowerLaw::new(1.3, 1, 1000).unwrap();
        let total: f64 = (1..=1000).map(|k| law.pmf(k)).sum();
        assert!((total - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_bad_ranges() {
        assert!(TruncatedPowerLaw::new(1.0, 5, 4).is_err());
        assert!(TruncatedPowerLaw::new(1.0, 0, 4).is_err());
        assert!(TruncatedPowerLaw::new(-1.0, 1, 4).is_err());
        let g = gen_erdos_renyi(10, 10, 0).unwrap();
        assert!(assign_weights(g, 1.0, 10, 2, 0).is_err());
    }

    #[test]
    fn sampled_frequencies_match_pmf() {
        let law = TruncatedPowerLaw::new(2.0, 1, 10).unwrap();
        let mut rng = crate::rng::root(4);
        let n = 200_000;
        let mut hist = [0usize; 11];
        for _ in 0..n {
            hist[law.sample(&mut rng) as usize] += 1;
        }
        for k in 1..=10u32 {
            let p = law.pmf(k);
            let se = (p * (1.0 - p) / n as f64).sqrt();
            let f = hist[k as usize] as f64 / n as f64;
            assert!((f - p).abs() < 5.0 * se + 1e-9, "k={k} f={f} p={p}");
        }
    }

    #[test]
    fn degenerate_range_gives_unit_weights() {
        let g = gen_erdos_renyi(50, 100, 1).unwrap();
        let wg = assign_weights(g.clone(), 0.0, 1, 1, 3).unwrap();
        assert!(wg.weights().iter().all(|&w| w == (1, 1)));
        assert_eq!(wg, WeightedGraph::unit(g));
    }

    #[test]
    fn directions_are_sampled_independently() {
        let g = gen_erdos_renyi(400, 4000, 2).unwrap();
        let wg = assign_weights(g, 0.0, 1, 1000, 8).unwrap();
        let differing = wg.weights().iter().filter(|(a, b)| a != b).count();
        assert!(differing > 3900);
        assert!(wg
            .weights()
            .iter()
            .all(|&(a, b)| (1..=1000).contains(&a) && (1..=1000).contains(&b)));
    }
}
