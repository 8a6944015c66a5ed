//! Three-layer GeLU network regression of the loss surface, trained full
//! batch with AdamW on a mean Huber loss.

use matrixmultiply::dgemm;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Normalizer, SurfacePoint};
use crate::optim::{huber_rho, huber_weight};
use crate::{rng, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpSettings {
    pub width: usize,
    pub max_epochs: usize,
    /// Peak learning rate; decays by cosine to `lr_min`.
    pub lr: f64,
    pub lr_min: f64,
    pub weight_decay: f64,
    pub delta: f64,
    /// Stop after this many epochs without an improvement above `min_improvement`.
    pub patience: usize,
    pub min_improvement: f64,
    pub seed: u64,
}

impl Default for MlpSettings {
    fn default() -> Self {
        MlpSettings {
            width: 256,
            max_epochs: 5000,
            lr: 1e-3,
            lr_min: 1e-5,
            weight_decay: 1e-4,
            delta: 1e-3,
            patience: 200,
            min_improvement: 1e-6,
            seed: 0,
        }
    }
}

/// Offsets of each tensor inside the flat parameter vector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
struct Layout {
    width: usize,
}

impl Layout {
    fn w1(&self) -> usize {
        0
    }
    fn b1(&self) -> usize {
        2 * self.width
    }
    fn w2(&self) -> usize {
        3 * self.width
    }
    fn b2(&self) -> usize {
        3 * self.width + self.width * self.width
    }
    fn w3(&self) -> usize {
        4 * self.width + self.width * self.width
    }
    fn b3(&self) -> usize {
        5 * self.width + self.width * self.width
    }
    fn len(&self) -> usize {
        self.b3() + 1
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpSurface {
    pub norm: Normalizer,
    layout: Layout,
    params: Vec<f64>,
    /// Best training loss (mean Huber on centred targets).
    pub best_loss: f64,
    pub epochs_run: usize,
}

impl MlpSurface {
    pub fn width(&self) -> usize {
        self.layout.width
    }

    pub fn predict(&self, n: f64, d: f64) -> f64 {
        let x = self.norm.normalize(n, d);
        let mut ws = Workspace::new(self.layout.width, 1);
        forward(
            &self.layout,
            &self.params,
            std::slice::from_ref(&x),
            &mut ws,
        );
        ws.out[0] + self.norm.y_mean
    }
}

#[inline]
fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + statrs::function::erf::erf(x * std::f64::consts::FRAC_1_SQRT_2))
}

#[inline]
fn gelu_grad(x: f64) -> f64 {
    let cdf = 0.5 * (1.0 + statrs::function::erf::erf(x * std::f64::consts::FRAC_1_SQRT_2));
    let pdf = (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt();
    cdf + x * pdf
}

struct Workspace {
    h1: Vec<f64>,
    a1: Vec<f64>,
    h2: Vec<f64>,
    a2: Vec<f64>,
    out: Vec<f64>,
}

impl Workspace {
    fn new(width: usize, batch: usize) -> Self {
        Workspace {
            h1: vec![0.0; batch * width],
            a1: vec![0.0; batch * width],
            h2: vec![0.0; batch * width],
            a2: vec![0.0; batch * width],
            out: vec![0.0; batch],
        }
    }
}

/// Row-major `C (m×n) = A (m×k) · Bᵀ` where `B` is stored `n×k`.
fn matmul_bt(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    // SAFETY: slice lengths cover the strided extents checked by the asserts.
    assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    unsafe {
        dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            1,
            k as isize,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Row-major `C (m×n) = Aᵀ · B` where `A` is stored `k×m` and `B` is `k×n`.
fn matmul_at(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    // SAFETY: as above.
    unsafe {
        dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            1,
            m as isize,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Row-major `C (m×n) = A (m×k) · B (k×n)`.
fn matmul(m: usize, k: usize, n: usize, a: &[f64], b: &[f64], c: &mut [f64]) {
    assert!(a.len() >= m * k && b.len() >= n * k && c.len() >= m * n);
    // SAFETY: as above.
    unsafe {
        dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            k as isize,
            1,
            b.as_ptr(),
            n as isize,
            1,
            0.0,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

fn forward(layout: &Layout, p: &[f64], xs: &[[f64; 2]], ws: &mut Workspace) {
    let w = layout.width;
    let batch = xs.len();
    let (w1, b1) = (&p[layout.w1()..layout.b1()], &p[layout.b1()..layout.w2()]);
    for (i, x) in xs.iter().enumerate() {
        for j in 0..w {
            let h = w1[2 * j] * x[0] + w1[2 * j + 1] * x[1] + b1[j];
            ws.h1[i * w + j] = h;
            ws.a1[i * w + j] = gelu(h);
        }
    }
    matmul_bt(
        batch,
        w,
        w,
        &ws.a1,
        &p[layout.w2()..layout.b2()],
        &mut ws.h2,
    );
    let (b2, w3, b3) = (
        &p[layout.b2()..layout.w3()],
        &p[layout.w3()..layout.b3()],
        p[layout.b3()],
    );
    for i in 0..batch {
        let mut o = b3;
        for j in 0..w {
            let h = ws.h2[i * w + j] + b2[j];
            ws.h2[i * w + j] = h;
            let a = gelu(h);
            ws.a2[i * w + j] = a;
            o += a * w3[j];
        }
        ws.out[i] = o;
    }
}

/// Gradient of the mean Huber loss; `ws` must hold the forward pass for
/// `params` on `xs`.
fn loss_grad(
    layout: &Layout,
    params: &[f64],
    xs: &[[f64; 2]],
    ys: &[f64],
    delta: f64,
    ws: &Workspace,
    grad: &mut [f64],
) {
    let w = layout.width;
    let batch = xs.len();
    grad.iter_mut().for_each(|g| *g = 0.0);
    let mut d_h2 = vec![0.0; batch * w];
    let mut d_h1 = vec![0.0; batch * w];
    let dout: Vec<f64> = ws
        .out
        .iter()
        .zip(ys)
        .map(|(o, y)| {
            let r = o - y;
            huber_weight(r, delta) * r / batch as f64
        })
        .collect();
    let w3 = &params[layout.w3()..layout.b3()];
    for i in 0..batch {
        grad[layout.b3()] += dout[i];
        for j in 0..w {
            grad[layout.w3() + j] += dout[i] * ws.a2[i * w + j];
            d_h2[i * w + j] = dout[i] * w3[j] * gelu_grad(ws.h2[i * w + j]);
        }
    }
    matmul_at(
        w,
        batch,
        w,
        &d_h2,
        &ws.a1,
        &mut grad[layout.w2()..layout.b2()],
    );
    for i in 0..batch {
        for j in 0..w {
            grad[layout.b2() + j] += d_h2[i * w + j];
        }
    }
    matmul(
        batch,
        w,
        w,
        &d_h2,
        &params[layout.w2()..layout.b2()],
        &mut d_h1,
    );
    for (i, x) in xs.iter().enumerate() {
        for j in 0..w {
            let g = d_h1[i * w + j] * gelu_grad(ws.h1[i * w + j]);
            grad[layout.w1() + 2 * j] += g * x[0];
            grad[layout.w1() + 2 * j + 1] += g * x[1];
            grad[layout.b1() + j] += g;
        }
    }
}

/// PyTorch-style default initialisation: every weight and bias of a layer
/// with fan-in `f` is uniform on `[-1/√f, 1/√f]`.
fn init_params(layout: &Layout, seed: u64) -> Vec<f64> {
    let mut r = rng::root(seed);
    let mut p = vec![0.0; layout.len()];
    let mut fill = |range: std::ops::Range<usize>, fan_in: usize| {
        let bound = 1.0 / (fan_in as f64).sqrt();
        for v in &mut p[range] {
            *v = r.random_range(-bound..bound);
        }
    };
    let w = layout.width;
    fill(layout.w1()..layout.w2(), 2);
    fill(layout.w2()..layout.w3(), w);
    fill(layout.w3()..layout.len(), w);
    p
}

/// Train `2 → width → width → 1` on normalised inputs and centred targets.
/// Returns the parameters with the lowest training loss seen.
pub fn fit_mlp_surface(points: &[SurfacePoint], settings: &MlpSettings) -> Result<MlpSurface> {
    if points.is_empty() {
        return Err(Error::invalid("MLP fit needs at least one point"));
    }
    if settings.width == 0 || settings.max_epochs == 0 {
        return Err(Error::invalid(
            "MLP width and epoch budget must be positive",
        ));
    }
    let norm = Normalizer::fit(points)?;
    let xs: Vec<[f64; 2]> = points.iter().map(|p| norm.normalize(p.n, p.d)).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.loss - norm.y_mean).collect();
    let layout = Layout {
        width: settings.width,
    };
    let w = layout.width;
    let batch = xs.len();
    let mut params = init_params(&layout, settings.seed);
    let mut grad = vec![0.0; layout.len()];
    let mut m1 = vec![0.0; layout.len()];
    let mut m2 = vec![0.0; layout.len()];
    let mut ws = Workspace::new(w, batch);
    let (beta1, beta2, eps) = (0.9f64, 0.999f64, 1e-8);

    let mut best = params.clone();
    let mut best_loss = f64::INFINITY;
    let mut reference = f64::INFINITY;
    let mut last_finite = f64::NAN;
    let mut stall = 0usize;
    let mut epochs_run = 0;
    for epoch in 0..settings.max_epochs {
        epochs_run = epoch + 1;
        forward(&layout, &params, &xs, &mut ws);
        let loss = ws
            .out
            .iter()
            .zip(&ys)
            .map(|(o, y)| huber_rho(o - y, settings.delta))
            .sum::<f64>()
            / batch as f64;
        if !loss.is_finite() {
            return Err(Error::fit(format!(
                "MLP training diverged at epoch {epoch}; last finite loss {last_finite:e}"
            )));
        }
        last_finite = loss;
        // patience counts epochs since the last improvement larger than
        // `min_improvement` over the loss recorded at that point
        if loss < reference - settings.min_improvement {
            reference = loss;
            stall = 0;
        } else {
            stall += 1;
        }
        if loss < best_loss {
            best_loss = loss;
            best.copy_from_slice(&params);
        }
        if stall > settings.patience {
            break;
        }

        loss_grad(&layout, &params, &xs, &ys, settings.delta, &ws, &mut grad);

        // AdamW with decoupled weight decay and cosine learning rate
        let t = (epoch + 1) as i32;
        let progress = epoch as f64 / settings.max_epochs as f64;
        let lr = settings.lr_min
            + 0.5
                * (settings.lr - settings.lr_min)
                * (1.0 + (std::f64::consts::PI * progress).cos());
        let (c1, c2) = (1.0 - beta1.powi(t), 1.0 - beta2.powi(t));
        for k in 0..params.len() {
            let g = grad[k];
            m1[k] = beta1 * m1[k] + (1.0 - beta1) * g;
            m2[k] = beta2 * m2[k] + (1.0 - beta2) * g * g;
            params[k] -= lr * settings.weight_decay * params[k];
            params[k] -= lr * (m1[k] / c1) / ((m2[k] / c2).sqrt() + eps);
        }
    }
    Ok(MlpSurface {
        norm,
        layout,
        params: best,
        best_loss,
        epochs_run,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::logspace;

    fn small() -> MlpSettings {
        MlpSettings {
            width: 16,
            max_epochs: 300,
            ..Default::default()
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let pts: Vec<SurfacePoint> = [
            (1e6, 1e9, 3.0),
            (1e7, 1e10, 2.5),
            (1e8, 3e9, 2.2),
            (3e6, 1e11, 2.4),
        ]
        .iter()
        .map(|&(n, d, loss)| SurfacePoint { n, d, loss })
        .collect();
        let norm = Normalizer::fit(&pts).unwrap();
        let xs: Vec<[f64; 2]> = pts.iter().map(|p| norm.normalize(p.n, p.d)).collect();
        let ys: Vec<f64> = pts.iter().map(|p| p.loss - norm.y_mean).collect();
        let layout = Layout { width: 5 };
        let params = init_params(&layout, 3);
        for delta in [1e9, 0.05] {
            let loss_at = |p: &[f64]| {
                let mut ws = Workspace::new(5, xs.len());
                forward(&layout, p, &xs, &mut ws);
                ws.out
                    .iter()
                    .zip(&ys)
                    .map(|(o, y)| huber_rho(o - y, delta))
                    .sum::<f64>()
                    / xs.len() as f64
            };
            let mut ws = Workspace::new(5, xs.len());
            forward(&layout, &params, &xs, &mut ws);
            let mut grad = vec![0.0; layout.len()];
            loss_grad(&layout, &params, &xs, &ys, delta, &ws, &mut grad);
            let h = 1e-6;
            for k in 0..layout.len() {
                let mut plus = params.clone();
                plus[k] += h;
                let mut minus = params.clone();
                minus[k] -= h;
                let fd = (loss_at(&plus) - loss_at(&minus)) / (2.0 * h);
                assert!(
                    (fd - grad[k]).abs() < 1e-7 * (1.0 + fd.abs()),
                    "param {k}: {fd} vs {}",
                    grad[k]
                );
            }
        }
    }

    #[test]
    fn constant_table_gives_constant_predictor() {
        let mut pts = Vec::new();
        for n in logspace(1e6, 1e9, 5) {
            for d in logspace(1e8, 1e11, 5) {
                pts.push(SurfacePoint { n, d, loss: 2.5 });
            }
        }
        let s = fit_mlp_surface(&pts, &small()).unwrap();
        for p in &pts {
            assert!((s.predict(p.n, p.d) - 2.5).abs() < 1e-3);
        }
    }

    #[test]
    fn deterministic_given_seed() {
        let pts: Vec<SurfacePoint> = logspace(1e6, 1e9, 6)
            .into_iter()
            .flat_map(|n| {
                logspace(1e8, 1e11, 4)
                    .into_iter()
                    .map(move |d| SurfacePoint {
                        n,
                        d,
                        loss: 2.0 + 10.0 * n.powf(-0.2) + 50.0 * d.powf(-0.3),
                    })
            })
            .collect();
        let a = fit_mlp_surface(&pts, &small()).unwrap();
        let b = fit_mlp_surface(&pts, &small()).unwrap();
        assert_eq!(a, b);
    }
}
