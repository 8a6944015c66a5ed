//! Random graph generators: Erdős–Rényi `G(n, M)` and Barabási–Albert.

use std::collections::HashSet;

use rand::Rng;

use super::Graph;
use crate::error::{Error, Result};
use crate::rng;

/// Uniformly random simple graph with exactly `n_edges` edges (`G(n, M)`).
///
/// Sparse requests draw distinct node pairs by rejection; requests above
/// half the maximum draw the complement instead, so the cost stays
/// proportional to `min(M, max - M)` draws plus one output pass.
pub fn gen_erdos_renyi(n_nodes: usize, n_edges: usize, seed: u64) -> Result<Graph> {
    let max_edges = n_nodes.saturating_mul(n_nodes.saturating_sub(1)) / 2;
    if n_edges > max_edges {
        return Err(Error::invalid(format!(
            "{n_edges} edges requested but a simple graph on {n_nodes} nodes has at most {max_edges}"
        )));
    }
    if n_nodes > u32::MAX as usize {
        return Err(Error::invalid("node count exceeds the u32 id space"));
    }
    let mut rng = rng::root(seed);
    let complement = n_edges > max_edges / 2;
    let draws = if complement {
        max_edges - n_edges
    } else {
        n_edges
    };

    let mut seen: HashSet<(u32, u32)> = HashSet::with_capacity(draws);
    let mut picked: Vec<(u32, u32)> = Vec::with_capacity(draws);
    while picked.len() < draws {
        let a = rng.random_range(0..n_nodes as u32);
        let b = rng.random_range(0..n_nodes as u32);
        if a == b {
            continue;
        }
        let e = (a.min(b), a.max(b));
        if seen.insert(e) {
            picked.push(e);
        }
    }

    let edges = if complement {
        let n = n_nodes as u32;
        (0..n)
            .flat_map(|u| (u + 1..n).map(move |v| (u, v)))
            .filter(|e| !seen.contains(e))
            .collect()
    } else {
        picked
    };
    Ok(Graph::from_canonical(n_nodes, edges))
}

/// Edge count of [`gen_barabasi_albert`] for given parameters: the seed
/// clique on `m + 1` nodes plus `m` edges per attached node.
pub fn barabasi_albert_edge_count(n_nodes: usize, m_attach: usize) -> usize {
    m_attach * (m_attach + 1) / 2 + n_nodes.saturating_sub(m_attach + 1) * m_attach
}

/// Barabási–Albert preferential attachment.
///
/// Starts from the complete graph on `m_attach + 1` nodes; every later node
/// attaches to `m_attach` distinct existing nodes drawn with probability
/// proportional to their current degree.
pub fn gen_barabasi_albert(n_nodes: usize, m_attach: usize, seed: u64) -> Result<Graph> {
    if m_attach == 0 || m_attach >= n_nodes {
        return Err(Error::invalid(format!(
            "attachment count must satisfy 1 <= m < n (got m = {m_attach}, n = {n_nodes})"
        )));
    }
    if n_nodes > u32::MAX as usize {
        return Err(Error::invalid("node count exceeds the u32 id space"));
    }
    let mut rng = rng::root(seed);
    let seed_nodes = (m_attach + 1) as u32;
    let mut edges: Vec<(u32, u32)> =
        Vec::with_capacity(barabasi_albert_edge_count(n_nodes, m_attach));
    // every edge contributes both endpoints, so a uniform pick from this list
    // is a degree-proportional pick of a node
    let mut endpoints: Vec<u32> = Vec::with_capacity(2 * edges.capacity());
    for u in 0..seed_nodes {
        for v in u + 1..seed_nodes {
            edges.push((u, v));
            endpoints.extend([u, v]);
        }
    }
    let mut targets: Vec<u32> = Vec::with_capacity(m_attach);
    for v in seed_nodes..n_nodes as u32 {
        targets.clear();
        while targets.len() < m_attach {
            let t = endpoints[rng.random_range(0..endpoints.len())];
            if !targets.contains(&t) {
                targets.push(t);
            }
        }
        for &t in &targets {
            edges.push((t, v));
            endpoints.extend([t, v]);
        }
    }
    Ok(Graph::from_canonical(n_nodes, edges))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn er_exact_edge_count_and_simple() {
        for (n, m) in [(10, 0), (10, 20), (10, 45), (50, 1000), (200, 700)] {
            let g = gen_erdos_renyi(n, m, 3).unwrap();
            assert_eq!(g.n_edges(), m);
            assert!(Graph::new(n, g.edges().iter().copied()).is_ok());
        }
    }

    #[test]
    fn er_max_edges_is_complete() {
        assert_eq!(gen_erdos_renyi(4, 6, 9).unwrap(), Graph::complete(4));
        assert!(gen_erdos_renyi(4, 7, 9).is_err());
    }

    #[test]
    fn er_thousand_nodes_five_thousand_edges() {
        let g = gen_erdos_renyi(8192, 53_292, 1).unwrap();
        assert_eq!((g.n_nodes(), g.n_edges()), (8192, 53_292));
    }

    #[test]
    fn er_is_deterministic() {
        assert_eq!(
            gen_erdos_renyi(300, 900, 5).unwrap(),
            gen_erdos_renyi(300, 900, 5).unwrap()
        );
        assert_ne!(
            gen_erdos_renyi(300, 900, 5).unwrap(),
            gen_erdos_renyi(300, 900, 6).unwrap()
        );
    }

    #[test]
    fn er_degree_spread_matches_binomial() {
        let (n, m) = (1000usize, 5000usize);
        let p = 2.0 * m as f64 / (n as f64 * (n - 1) as f64);
        let binom_sd = (p * (1.0 - p) * (n - 1) as f64).sqrt();
        for seed in 0..100 {
            let deg = gen_erdos_renyi(n, m, seed).unwrap().degrees();
            let mean = deg.iter().map(|&d| d as f64).sum::<f64>() / n as f64;
            assert!((mean - 10.0).abs() < 1e-12);
            let var = deg.iter().map(|&d| (d as f64 - mean).powi(2)).sum::<f64>() / n as f64;
            assert!(
                var.sqrt() < 3.0 * binom_sd,
                "seed {seed}: sd {}",
                var.sqrt()
            );
        }
    }

    #[test]
    fn ba_small_cases() {
        let g = gen_barabasi_albert(3, 1, 0).unwrap();
        assert_eq!(g.n_edges(), 2);
        assert!(g.is_connected());
        assert_eq!(gen_barabasi_albert(5, 4, 0).unwrap(), Graph::complete(5));
        assert!(gen_barabasi_albert(5, 5, 0).is_err());
        assert!(gen_barabasi_albert(5, 0, 0).is_err());
    }

    #[test]
    fn ba_attachment_count_matching_reported_size() {
        // enumerate m and keep the one whose edge count matches 8192 / 49131
        let m_star = (1..20)
            .min_by_key(|&m| barabasi_albert_edge_count(8192, m).abs_diff(49_131))
            .unwrap();
        assert_eq!(m_star, 6);
        assert_eq!(barabasi_albert_edge_count(8192, 6), 49_131);
        let g = gen_barabasi_albert(8192, m_star, 11).unwrap();
        assert_eq!(g.n_edges(), 49_131);
    }

    #[test]
    fn ba_tail_exponent_near_three() {
        // discrete power-law MLE over degrees >= 20
        let g = gen_barabasi_albert(10_000, 6, 2).unwrap();
        let tail: Vec<f64> = g
            .degrees()
            .into_iter()
            .filter(|&d| d >= 20)
            .map(f64::from)
            .collect();
        let s: f64 = tail.iter().map(|k| (k / 19.5).ln()).sum();
        let gamma = 1.0 + tail.len() as f64 / s;
        assert!((gamma - 3.0).abs() <= 0.3, "gamma = {gamma}");
    }
}
