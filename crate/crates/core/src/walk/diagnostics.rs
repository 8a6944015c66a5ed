//! Stationary law, spectral gap, and entropies of a transition model.

use nalgebra::DMatrix;
use rand::Rng;

use crate::graph::{TransitionModel, UnionFind};
use crate::stats::entropy;
use crate::{rng, Error, Result};

const STATIONARY_TOL: f64 = 1e-12;
const STATIONARY_MAX_ITER: usize = 200_000;
const GAP_TOL: f64 = 1e-9;
const KRYLOV_MAX: usize = 800;

/// Stationary distribution of the chain restricted to its largest weakly
/// connected component.
#[derive(Debug, Clone)]
pub struct Stationary {
    /// Probability per node of the full vocabulary (zero off the component).
    pub probs: Vec<f64>,
    /// Nodes of the component, or `None` when the support is connected.
    pub component: Option<Vec<u32>>,
    /// `‖πW − π‖∞` at termination.
    pub residual: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ModelDiagnostics {
    pub stationary: Vec<f64>,
    /// `1 − |λ₂|`.
    pub spectral_gap: f64,
    /// `|λ₂|`, the largest eigenvalue modulus after the Perron root.
    pub lambda2_modulus: f64,
    /// `Σ_v π_v S(W[v])` in nats.
    pub entropy_rate: f64,
    /// `S(π)` in nats.
    pub stationary_entropy: f64,
    /// Number of nodes the diagnostics were computed on.
    pub component_size: usize,
}

/// Stationary distribution, spectral gap, and entropies. A disconnected
/// support is restricted to its largest component (with a logged warning).
pub fn diagnostics(model: &TransitionModel) -> Result<ModelDiagnostics> {
    let (sub, nodes) = giant_component(model)?;
    let pi_sub = power_iteration(&sub)?;
    let lambda2 = second_eigenvalue_modulus(&sub, &pi_sub.0)?;
    let stationary = scatter(&pi_sub.0, nodes.as_deref(), model.n_nodes());
    let restart_entropy = entropy(model.initial());
    let entropy_rate = stationary
        .iter()
        .enumerate()
        .filter(|(_, &p)| p > 0.0)
        .map(|(v, &p)| {
            let row_entropy = if model.is_restart_row(v) {
                restart_entropy
            } else {
                entropy(model.row(v).1)
            };
            p * row_entropy
        })
        .sum();
    Ok(ModelDiagnostics {
        stationary_entropy: entropy(&stationary),
        stationary,
        spectral_gap: (1.0 - lambda2).clamp(0.0, 1.0),
        lambda2_modulus: lambda2,
        entropy_rate,
        component_size: sub.n_nodes(),
    })
}

/// Stationary distribution by lazy power iteration `π ← ½(π + πW)`, which
/// also converges on periodic chains. Stops once `‖πW − π‖∞ ≤ 1e-12`.
pub fn stationary(model: &TransitionModel) -> Result<Stationary> {
    let (sub, nodes) = giant_component(model)?;
    let (pi, residual, iterations) = power_iteration(&sub)?;
    Ok(Stationary {
        probs: scatter(&pi, nodes.as_deref(), model.n_nodes()),
        component: nodes,
        residual,
        iterations,
    })
}

/// `1 − |λ₂|` of the (giant component of the) chain.
pub fn spectral_gap(model: &TransitionModel) -> Result<f64> {
    let (sub, _) = giant_component(model)?;
    let (pi, _, _) = power_iteration(&sub)?;
    Ok((1.0 - second_eigenvalue_modulus(&sub, &pi)?).clamp(0.0, 1.0))
}

fn scatter(values: &[f64], nodes: Option<&[u32]>, n: usize) -> Vec<f64> {
    match nodes {
        None => values.to_vec(),
        Some(nodes) => {
            let mut full = vec![0.0; n];
            for (&v, &x) in nodes.iter().zip(values) {
                full[v as usize] = x;
            }
            full
        }
    }
}

/// The model restricted to its largest weakly connected component, with the
/// component's node list when a restriction was needed.
fn giant_component(model: &TransitionModel) -> Result<(TransitionModel, Option<Vec<u32>>)> {
    let n = model.n_nodes();
    if n == 0 {
        return Err(Error::degenerate("model has no nodes"));
    }
    let mut uf = UnionFind::new(n);
    let m = model.initial();
    let first_m = m.iter().position(|&p| p > 0.0);
    for u in 0..n {
        if model.is_restart_row(u) {
            if let Some(r) = first_m {
                uf.union(u, r);
            }
        } else {
            for &v in model.row(u).0 {
                uf.union(u, v as usize);
            }
        }
    }
    if model.has_restart_rows() {
        if let Some(r) = first_m {
            for (v, &p) in m.iter().enumerate() {
                if p > 0.0 {
                    uf.union(r, v);
                }
            }
        }
    }
    let labels = uf.labels();
    let n_labels = labels.iter().max().map_or(0, |&l| l + 1);
    if n_labels == 1 {
        return Ok((model.clone(), None));
    }
    let mut sizes = vec![0usize; n_labels];
    labels.iter().for_each(|&l| sizes[l] += 1);
    // first largest label wins ties
    let giant = (0..n_labels).fold(0, |best, l| if sizes[l] > sizes[best] { l } else { best });
    let nodes: Vec<u32> = (0..n as u32)
        .filter(|&v| labels[v as usize] == giant)
        .collect();
    log::warn!(
        "transition support has {n_labels} components; restricting diagnostics to the largest ({} of {n} nodes)",
        nodes.len()
    );
    let mut index = vec![u32::MAX; n];
    for (i, &v) in nodes.iter().enumerate() {
        index[v as usize] = i as u32;
    }
    let mut offsets = vec![0u64];
    let mut cols = Vec::new();
    let mut probs = Vec::new();
    for &v in &nodes {
        let (c, p) = model.row(v as usize);
        cols.extend(c.iter().map(|&w| index[w as usize]));
        probs.extend_from_slice(p);
        offsets.push(cols.len() as u64);
    }
    let mut initial: Vec<f64> = nodes.iter().map(|&v| m[v as usize]).collect();
    let mass: f64 = initial.iter().sum();
    if mass > 0.0 {
        initial.iter_mut().for_each(|x| *x /= mass);
    } else {
        initial.fill(1.0 / nodes.len() as f64);
    }
    Ok((
        TransitionModel::from_csr(offsets, cols, probs, initial)?,
        Some(nodes),
    ))
}

fn power_iteration(model: &TransitionModel) -> Result<(Vec<f64>, f64, usize)> {
    let n = model.n_nodes();
    let mut x = model.initial().to_vec();
    let mut y = vec![0.0; n];
    let mut residual = f64::INFINITY;
    for it in 0..STATIONARY_MAX_ITER {
        model.left_multiply(&x, &mut y);
        residual = x
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        if residual <= STATIONARY_TOL {
            // y is one more step of the chain and at least as close
            let total: f64 = y.iter().sum();
            y.iter_mut().for_each(|v| *v /= total);
            return Ok((y, residual, it + 1));
        }
        let mut total = 0.0;
        for (a, b) in x.iter_mut().zip(&y) {
            *a = 0.5 * (*a + b);
            total += *a;
        }
        x.iter_mut().for_each(|v| *v /= total);
    }
    Err(Error::NumericFailure {
        message: format!(
            "stationary power iteration did not converge in {STATIONARY_MAX_ITER} steps"
        ),
        residual,
    })
}

/// Largest eigenvalue modulus of `W` on the sum-zero subspace (the
/// complement of the Perron root), by Arnoldi iteration on `x ↦ xW`.
///
/// The inner product is weighted by `1/π` when `π > 0` everywhere, which
/// makes the operator self-adjoint for reversible chains.
fn second_eigenvalue_modulus(model: &TransitionModel, pi: &[f64]) -> Result<f64> {
    let n = model.n_nodes();
    if n == 1 {
        return Ok(0.0);
    }
    let weights: Vec<f64> = if pi.iter().all(|&p| p > 0.0) {
        pi.iter().map(|p| 1.0 / p).collect()
    } else {
        vec![1.0; n]
    };
    let dot = |a: &[f64], b: &[f64]| -> f64 {
        a.iter()
            .zip(b)
            .zip(&weights)
            .map(|((x, y), w)| x * y * w)
            .sum()
    };
    let project = |x: &mut [f64]| {
        let s: f64 = x.iter().sum();
        x.iter_mut().zip(pi).for_each(|(v, p)| *v -= s * p);
    };

    let max_dim = (n - 1).min(KRYLOV_MAX);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(max_dim + 1);
    let mut r = rng::root(0x5eed);
    let mut v0: Vec<f64> = (0..n).map(|_| r.random::<f64>() - 0.5).collect();
    project(&mut v0);
    let norm = dot(&v0, &v0).sqrt();
    v0.iter_mut().for_each(|x| *x /= norm);
    basis.push(v0);

    let mut h = DMatrix::<f64>::zeros(max_dim + 1, max_dim);
    let mut w = vec![0.0; n];
    let mut last_estimate = f64::NAN;
    let mut next_check = 8.min(max_dim);
    for j in 0..max_dim {
        model.left_multiply(&basis[j], &mut w);
        project(&mut w);
        // two passes of Gram-Schmidt keep the basis orthogonal to rounding
        for _ in 0..2 {
            for (i, b) in basis.iter().enumerate() {
                let c = dot(&w, b);
                h[(i, j)] += c;
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = dot(&w, &w).sqrt();
        let scale = (0..=j).map(|i| h[(i, j)].abs()).fold(beta, f64::max);
        let breakdown = beta <= 1e-12 * scale.max(1.0);
        let dim = j + 1;
        if breakdown || dim == next_check || dim == max_dim {
            let estimate = ritz_max_modulus(&h, dim);
            if breakdown || (estimate - last_estimate).abs() <= GAP_TOL {
                return Ok(estimate);
            }
            if dim == max_dim {
                if dim == n - 1 {
                    // the whole subspace has been spanned
                    return Ok(estimate);
                }
                return Err(Error::NumericFailure {
                    message: format!(
                        "spectral gap did not converge with a Krylov space of dimension {dim}"
                    ),
                    residual: (estimate - last_estimate).abs(),
                });
            }
            last_estimate = estimate;
            next_check = (dim + dim / 4).max(dim + 4).min(max_dim);
        }
        h[(j + 1, j)] = beta;
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    unreachable!("loop returns at max_dim")
}

fn ritz_max_modulus(h: &DMatrix<f64>, dim: usize) -> f64 {
    let square = h.view((0, 0), (dim, dim)).into_owned();
    square
        .complex_eigenvalues()
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}
