//! Bounded Levenberg–Marquardt minimisation of a Huber objective
//! `Σ ρ_δ(r_i(p))` for small nonlinear least-squares problems.
//!
//! Each iteration solves the damped, IRLS-weighted normal equations on the
//! parameters that are not pinned at a bound, then projects the step back
//! into the box.

use nalgebra::{DMatrix, DVector};

/// `ρ_δ(r)`: quadratic for `|r| ≤ δ`, linear beyond.
#[inline]
pub fn huber_rho(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        0.5 * r * r
    } else {
        delta * (a - 0.5 * delta)
    }
}

/// IRLS weight `min(1, δ/|r|)`, so that `ρ'_δ(r) = w(r) r`.
#[inline]
pub fn huber_weight(r: f64, delta: f64) -> f64 {
    let a = r.abs();
    if a <= delta {
        1.0
    } else {
        delta / a
    }
}

pub fn huber_objective(residuals: &[f64], delta: f64) -> f64 {
    residuals.iter().map(|&r| huber_rho(r, delta)).sum()
}

/// A residual vector `r(p)` with an analytic Jacobian.
pub trait Residuals: Sync {
    fn n_params(&self) -> usize;
    fn n_residuals(&self) -> usize;
    /// Fill `r`, and the `n_residuals × n_params` Jacobian when requested.
    fn eval(&self, p: &[f64], r: &mut [f64], jac: Option<&mut DMatrix<f64>>);
}

/// Box constraints; use infinities for free parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Bounds {
    pub fn free(n: usize) -> Self {
        Bounds {
            lower: vec![f64::NEG_INFINITY; n],
            upper: vec![f64::INFINITY; n],
        }
    }

    pub fn with(mut self, i: usize, lo: f64, hi: f64) -> Self {
        self.lower[i] = lo;
        self.upper[i] = hi;
        self
    }

    pub fn clamp(&self, p: &mut [f64]) {
        for ((x, lo), hi) in p.iter_mut().zip(&self.lower).zip(&self.upper) {
            *x = x.clamp(*lo, *hi);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LmSettings {
    pub delta: f64,
    pub max_iter: usize,
    /// Converged once the projected gradient norm drops to this value.
    pub gtol: f64,
}

impl LmSettings {
    pub fn new(delta: f64) -> Self {
        LmSettings {
            delta,
            max_iter: 500,
            gtol: 1e-10,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LmResult {
    pub params: Vec<f64>,
    pub objective: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

/// Minimise `Σ ρ_δ(r_i(p))` from `x0` inside `bounds`.
pub fn huber_lm<P: Residuals + ?Sized>(
    problem: &P,
    x0: &[f64],
    bounds: &Bounds,
    settings: &LmSettings,
) -> LmResult {
    let np = problem.n_params();
    let nr = problem.n_residuals();
    let delta = settings.delta;
    let mut p = x0.to_vec();
    bounds.clamp(&mut p);
    let mut r = vec![0.0; nr];
    let mut jac = DMatrix::zeros(nr, np);
    problem.eval(&p, &mut r, Some(&mut jac));
    let mut f = huber_objective(&r, delta);
    let mut trial = vec![0.0; np];
    let mut r_trial = vec![0.0; nr];
    let mut mu = 1e-3;
    let mut grad_norm = f64::INFINITY;

    let failed = |p: Vec<f64>, f: f64, g: f64, it: usize| LmResult {
        params: p,
        objective: f,
        grad_norm: g,
        iterations: it,
        converged: false,
    };
    if !f.is_finite() {
        return failed(p, f, grad_norm, 0);
    }

    for iter in 0..settings.max_iter {
        let w: Vec<f64> = r.iter().map(|&ri| huber_weight(ri, delta)).collect();
        let psi = DVector::from_iterator(nr, r.iter().zip(&w).map(|(ri, wi)| ri * wi));
        let g = jac.tr_mul(&psi);
        let free: Vec<usize> = (0..np)
            .filter(|&i| {
                !((p[i] <= bounds.lower[i] && g[i] > 0.0)
                    || (p[i] >= bounds.upper[i] && g[i] < 0.0))
            })
            .collect();
        grad_norm = free.iter().map(|&i| g[i] * g[i]).sum::<f64>().sqrt();
        if !grad_norm.is_finite() {
            return failed(p, f, grad_norm, iter);
        }
        if grad_norm <= settings.gtol || free.is_empty() {
            return LmResult {
                params: p,
                objective: f,
                grad_norm,
                iterations: iter,
                converged: true,
            };
        }

        let k = free.len();
        let mut h = DMatrix::zeros(k, k);
        for (a, &i) in free.iter().enumerate() {
            for (b, &j) in free.iter().enumerate().skip(a) {
                let s: f64 = (0..nr).map(|t| w[t] * jac[(t, i)] * jac[(t, j)]).sum();
                h[(a, b)] = s;
                h[(b, a)] = s;
            }
        }
        let gf = DVector::from_iterator(k, free.iter().map(|&i| g[i]));
        let max_diag = (0..k).map(|a| h[(a, a)]).fold(0.0, f64::max);
        let floor = 1e-12 * max_diag.max(f64::MIN_POSITIVE);

        let mut accepted = false;
        while mu <= 1e16 {
            let mut a = h.clone();
            for d in 0..k {
                a[(d, d)] += mu * h[(d, d)].max(floor);
            }
            let Some(chol) = a.cholesky() else {
                mu *= 10.0;
                continue;
            };
            let step = chol.solve(&(-&gf));
            trial.copy_from_slice(&p);
            for (a_idx, &i) in free.iter().enumerate() {
                trial[i] += step[a_idx];
            }
            bounds.clamp(&mut trial);
            problem.eval(&trial, &mut r_trial, None);
            let f_trial = huber_objective(&r_trial, delta);
            // Near the optimum the objective change drops below rounding;
            // a step that keeps f flat but shrinks the gradient still helps.
            let flat_but_better = f_trial.is_finite()
                && f_trial <= f + 4.0 * f64::EPSILON * f.abs()
                && projected_grad_norm(problem, &trial, bounds, delta, &mut r_trial)
                    < 0.5 * grad_norm;
            if flat_but_better {
                problem.eval(&trial, &mut r_trial, None);
            }
            if f_trial.is_finite() && (f_trial < f || flat_but_better) {
                let pred = -(gf.dot(&step) + 0.5 * step.dot(&(&h * &step)));
                let ratio = if pred > 0.0 {
                    (f - f_trial) / pred
                } else {
                    0.0
                };
                if ratio > 0.75 {
                    mu = (mu / 5.0).max(1e-15);
                } else if ratio < 0.25 {
                    mu *= 2.0;
                }
                std::mem::swap(&mut p, &mut trial);
                f = f_trial;
                problem.eval(&p, &mut r, Some(&mut jac));
                accepted = true;
                break;
            }
            mu *= 4.0;
        }
        if !accepted {
            // No damped step lowers the objective: a numerical minimum.
            let scale = 1.0 + f.abs();
            return LmResult {
                converged: grad_norm <= 1e-6 * scale,
                params: p,
                objective: f,
                grad_norm,
                iterations: iter,
            };
        }
    }
    failed(p, f, grad_norm, settings.max_iter)
}

fn projected_grad_norm<P: Residuals + ?Sized>(
    problem: &P,
    p: &[f64],
    bounds: &Bounds,
    delta: f64,
    r: &mut [f64],
) -> f64 {
    let mut jac = DMatrix::zeros(problem.n_residuals(), problem.n_params());
    problem.eval(p, r, Some(&mut jac));
    let psi = DVector::from_iterator(r.len(), r.iter().map(|&ri| ri * huber_weight(ri, delta)));
    let g = jac.tr_mul(&psi);
    (0..p.len())
        .filter(|&i| {
            !((p[i] <= bounds.lower[i] && g[i] > 0.0) || (p[i] >= bounds.upper[i] && g[i] < 0.0))
        })
        .map(|i| g[i] * g[i])
        .sum::<f64>()
        .sqrt()
}
