//! Exponential baseline `y = a + b e^{-cx}`.

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{best_of, default_delta, Series1D};
use crate::optim::{huber_lm, Bounds, LmSettings, Residuals};
use crate::stats::{fit_line, median, quantile};
use crate::{rng, Error, Result};

use super::FitSettings;

/// Range of the scaled rate `c' = c · median(x)`.
const LN_RATE_BOUNDS: (f64, f64) = (-18.420_680_743_952_367, 9.210_340_371_976_184); // ln 1e-8, ln 1e4

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExpFit {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub mse: f64,
    pub huber_delta: f64,
    pub objective: f64,
}

impl ExpFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.a + self.b * (-self.c * x).exp()
    }
}

/// `r_i = a + b exp(−c' s_i) − y_i` with `s_i = x_i / median(x)` and
/// parameters `(a, ln b, ln c')`.
struct ExpResiduals<'a> {
    s: Vec<f64>,
    ys: &'a [f64],
}

impl Residuals for ExpResiduals<'_> {
    fn n_params(&self) -> usize {
        3
    }

    fn n_residuals(&self) -> usize {
        self.s.len()
    }

    fn eval(&self, p: &[f64], r: &mut [f64], jac: Option<&mut DMatrix<f64>>) {
        let (a, b, c) = (p[0], p[1].exp(), p[2].exp());
        match jac {
            None => {
                for ((ri, s), y) in r.iter_mut().zip(&self.s).zip(self.ys) {
                    *ri = a + b * (-c * s).exp() - y;
                }
            }
            Some(j) => {
                for (i, (s, y)) in self.s.iter().zip(self.ys).enumerate() {
                    let t = b * (-c * s).exp();
                    r[i] = a + t - y;
                    j[(i, 0)] = 1.0;
                    j[(i, 1)] = t;
                    j[(i, 2)] = -t * s * c;
                }
            }
        }
    }
}

/// Robust multi-start fit of `y = a + b e^{-cx}` using the same Huber cutoff
/// rule and start budget as [`super::fit_power_law`]. Only `n_starts`,
/// `seed`, `delta`, `max_iter` and `gtol` of `settings` are used.
pub fn fit_exponential(series: &Series1D, settings: &FitSettings) -> Result<ExpFit> {
    if series.len() < 4 {
        return Err(Error::invalid(format!(
            "a 3-parameter fit needs at least 4 points, got {}",
            series.len()
        )));
    }
    let ys = series.ys();
    let scale = median(series.xs());
    let residuals = ExpResiduals {
        s: series.xs().iter().map(|x| x / scale).collect(),
        ys,
    };
    let delta = settings.delta.unwrap_or_else(|| default_delta(ys));
    let bounds = Bounds::free(3).with(2, LN_RATE_BOUNDS.0, LN_RATE_BOUNDS.1);
    let lm = LmSettings {
        delta,
        max_iter: settings.max_iter,
        gtol: settings.gtol,
    };
    let (ymin, ymax) = ys
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
            (a.min(y), b.max(y))
        });
    let range = (ymax - ymin).max(1e-12);

    let seed_from_a0 = |a0: f64| -> [f64; 3] {
        let (ss, ls): (Vec<f64>, Vec<f64>) = residuals
            .s
            .iter()
            .zip(ys)
            .filter(|(_, y)| **y > a0)
            .map(|(s, y)| (*s, (y - a0).ln()))
            .unzip();
        let (ln_b, c) = if ss.len() >= 2 {
            let line = fit_line(&ss, &ls);
            (line.intercept, (-line.slope).max(1e-8))
        } else {
            (range.ln(), 1.0)
        };
        [a0, ln_b, c.ln().clamp(LN_RATE_BOUNDS.0, LN_RATE_BOUNDS.1)]
    };
    let random_start = |k: u64| -> [f64; 3] {
        let mut r = rng::stream(settings.seed ^ 0xE4B0, k);
        let a = r.random_range(ymin - range..=ymax);
        let ln_c = r.random_range(-5.0..=5.0);
        let c = f64::exp(ln_c);
        let (mut num, mut den) = (0.0, 0.0);
        for (s, y) in residuals.s.iter().zip(ys) {
            let t = (-c * s).exp();
            num += t * (y - a);
            den += t * t;
        }
        let b = if num > 0.0 && den > 0.0 {
            num / den
        } else {
            range
        };
        [a, b.ln(), ln_c]
    };

    let starts: Vec<[f64; 3]> = (0..settings.n_starts.max(1))
        .map(|k| {
            if k < super::N_QUANTILE_STARTS {
                seed_from_a0(quantile(ys, super::E0_QUANTILES[k]))
            } else {
                random_start(k as u64)
            }
        })
        .collect();
    let res = best_of(
        starts
            .par_iter()
            .map(|s| huber_lm(&residuals, s, &bounds, &lm))
            .collect(),
    )
    .ok_or_else(|| {
        Error::fit(format!(
            "none of {} starts converged for the exponential",
            starts.len()
        ))
    })?;
    let mut r = vec![0.0; ys.len()];
    residuals.eval(&res.params, &mut r, None);
    Ok(ExpFit {
        a: res.params[0],
        b: res.params[1].exp(),
        c: res.params[2].exp() / scale,
        mse: r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64,
        huber_delta: delta,
        objective: res.objective,
    })
}
