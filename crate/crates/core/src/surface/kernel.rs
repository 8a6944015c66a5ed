//! Kernel ridge regression of the loss surface with a Huber data term,
//! solved by iteratively reweighted least squares.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{Normalizer, SurfacePoint};
use crate::optim::{huber_rho, huber_weight};
use crate::{Error, Result};

/// ANOVA-style RBF kernel on normalised `(n, d) = (log10 N, log10 D)`:
/// `w_n RBF(n) + w_d RBF(d) + w_nd RBF(n, d)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnovaKernel {
    pub w_n: f64,
    pub w_d: f64,
    pub w_nd: f64,
    pub l_n: f64,
    pub l_d: f64,
    pub l_nd: f64,
}

impl Default for AnovaKernel {
    fn default() -> Self {
        AnovaKernel {
            w_n: 1.0,
            w_d: 1.0,
            w_nd: 1.0,
            l_n: 1.0,
            l_d: 1.0,
            l_nd: 1.0,
        }
    }
}

impl AnovaKernel {
    pub fn eval(&self, x: [f64; 2], y: [f64; 2]) -> f64 {
        let dn2 = (x[0] - y[0]).powi(2);
        let dd2 = (x[1] - y[1]).powi(2);
        self.w_n * (-dn2 / (2.0 * self.l_n * self.l_n)).exp()
            + self.w_d * (-dd2 / (2.0 * self.l_d * self.l_d)).exp()
            + self.w_nd * (-(dn2 + dd2) / (2.0 * self.l_nd * self.l_nd)).exp()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelSettings {
    pub lambda: f64,
    pub delta: f64,
    pub kernel: AnovaKernel,
    pub max_iter: usize,
    /// Stop once no IRLS weight changes by more than this.
    pub weight_tol: f64,
}

impl Default for KernelSettings {
    fn default() -> Self {
        KernelSettings {
            lambda: 1e-4,
            delta: 1e-3,
            kernel: AnovaKernel::default(),
            max_iter: 100,
            weight_tol: 1e-8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KernelSurface {
    pub norm: Normalizer,
    pub kernel: AnovaKernel,
    centers: Vec<[f64; 2]>,
    coef: Vec<f64>,
    /// `Σ ρ_δ(r_i) + (λ/2) αᵀKα` after each IRLS solve.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
}

impl KernelSurface {
    pub fn predict(&self, n: f64, d: f64) -> f64 {
        let x = self.norm.normalize(n, d);
        self.centers
            .iter()
            .zip(&self.coef)
            .map(|(c, a)| a * self.kernel.eval(x, *c))
            .sum::<f64>()
            + self.norm.y_mean
    }
}

/// Solve `(W K + λ I) α = W y_c` repeatedly, updating the Huber weights
/// `w_i = min(1, δ/|r_i|)` from the residuals `r = y_c − Kα`.
pub fn fit_kernel_surface(
    points: &[SurfacePoint],
    settings: &KernelSettings,
) -> Result<KernelSurface> {
    if points.len() < 3 {
        return Err(Error::invalid(format!(
            "kernel fit needs at least 3 points, got {}",
            points.len()
        )));
    }
    if !(settings.lambda > 0.0) {
        return Err(Error::invalid("ridge weight lambda must be positive"));
    }
    let norm = Normalizer::fit(points)?;
    let xs: Vec<[f64; 2]> = points.iter().map(|p| norm.normalize(p.n, p.d)).collect();
    let yc = DVector::from_iterator(points.len(), points.iter().map(|p| p.loss - norm.y_mean));
    let m = points.len();
    let k = DMatrix::from_fn(m, m, |i, j| settings.kernel.eval(xs[i], xs[j]));

    let mut w = vec![1.0; m];
    let mut alpha = DVector::zeros(m);
    let mut trace = Vec::new();
    let mut iterations = 0;
    for it in 0..settings.max_iter {
        iterations = it + 1;
        let mut a = k.clone();
        for i in 0..m {
            a.row_mut(i).scale_mut(w[i]);
            a[(i, i)] += settings.lambda;
        }
        let rhs = DVector::from_iterator(m, (0..m).map(|i| w[i] * yc[i]));
        let lu = a.lu();
        alpha = lu
            .solve(&rhs)
            .filter(|s| s.iter().all(|v| v.is_finite()))
            .ok_or_else(|| {
                let u = lu.u();
                let diag: Vec<f64> = (0..m).map(|i| u[(i, i)].abs()).collect();
                let (lo, hi) = diag
                    .iter()
                    .fold((f64::INFINITY, 0.0f64), |(l, h), &x| (l.min(x), h.max(x)));
                Error::NumericFailure {
                    message: "kernel system is singular".into(),
                    residual: if lo > 0.0 { hi / lo } else { f64::INFINITY },
                }
            })?;
        let f = &k * &alpha;
        let r: Vec<f64> = (0..m).map(|i| yc[i] - f[i]).collect();
        let penalty = 0.5 * settings.lambda * alpha.dot(&f);
        trace.push(
            r.iter()
                .map(|&ri| huber_rho(ri, settings.delta))
                .sum::<f64>()
                + penalty,
        );
        let new_w: Vec<f64> = r
            .iter()
            .map(|&ri| huber_weight(ri, settings.delta))
            .collect();
        let change = new_w
            .iter()
            .zip(&w)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        w = new_w;
        if change < settings.weight_tol {
            break;
        }
    }
    Ok(KernelSurface {
        norm,
        kernel: settings.kernel,
        centers: xs,
        coef: alpha.iter().copied().collect(),
        objective_trace: trace,
        iterations,
    })
}
