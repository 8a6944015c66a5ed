//! Parametric surfaces fitted in log space with a Huber objective:
//! the additive form `L = E + A N^{-α} + B D^{-β}` and the early-stopping
//! form `L = [(N_c/N)^{α/β} + D_c/D]^β`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::SurfacePoint;
use crate::optim::{huber_lm, Bounds, LmResult, LmSettings, Residuals};
use crate::powerfit::best_of;
use crate::stats::mse;
use crate::{Error, Result};

/// Huber cutoff on log-loss residuals used by both parametric fits.
pub const DEFAULT_LOG_DELTA: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChinchillaFit {
    #[serde(rename = "A")]
    pub a: f64,
    #[serde(rename = "B")]
    pub b: f64,
    #[serde(rename = "E")]
    pub e: f64,
    pub alpha: f64,
    pub beta: f64,
    pub huber_delta: f64,
    pub objective: f64,
    /// Mean squared error in loss units on the fitted points.
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

impl ChinchillaFit {
    pub fn predict(&self, n: f64, d: f64) -> f64 {
        self.e + self.a * n.powf(-self.alpha) + self.b * d.powf(-self.beta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KaplanFit {
    pub n_c: f64,
    pub d_c: f64,
    pub alpha: f64,
    pub beta: f64,
    pub huber_delta: f64,
    pub objective: f64,
    pub train_mse: f64,
    pub val_mse: Option<f64>,
}

impl KaplanFit {
    pub fn predict(&self, n: f64, d: f64) -> f64 {
        ((self.n_c / n).powf(self.alpha / self.beta) + self.d_c / d).powf(self.beta)
    }
}

/// Initialisation grid for the additive form, in the log parameterisation
/// `ln L = LSE(a − α ln N, b − β ln D, e)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ChinchillaGrid {
    pub alpha: Vec<f64>,
    pub beta: Vec<f64>,
    pub e: Vec<f64>,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

impl Default for ChinchillaGrid {
    fn default() -> Self {
        let exps = vec![0.0, 0.5, 1.0, 1.5, 2.0];
        let amps = vec![0.0, 5.0, 10.0, 15.0, 20.0, 25.0];
        ChinchillaGrid {
            alpha: exps.clone(),
            beta: exps,
            e: vec![-1.0, -0.5, 0.0, 0.5, 1.0, 1.5],
            a: amps.clone(),
            b: amps,
        }
    }
}

impl ChinchillaGrid {
    /// Starts in parameter order `(a, b, e, α, β)`.
    fn starts(&self) -> Vec<[f64; 5]> {
        let mut out = Vec::new();
        for &al in &self.alpha {
            for &be in &self.beta {
                for &e in &self.e {
                    for &a in &self.a {
                        for &b in &self.b {
                            out.push([a, b, e, al, be]);
                        }
                    }
                }
            }
        }
        out
    }
}

fn check_identifiable(points: &[SurfacePoint]) -> Result<()> {
    if points.len() < 10 {
        return Err(Error::invalid(format!(
            "2d fits need at least 10 (N, D) points, got {}",
            points.len()
        )));
    }
    let distinct = |f: fn(&SurfacePoint) -> f64| {
        let mut v: Vec<u64> = points.iter().map(|p| f(p).to_bits()).collect();
        v.sort_unstable();
        v.dedup();
        v.len()
    };
    if distinct(|p| p.n) < 2 || distinct(|p| p.d) < 2 {
        return Err(Error::fit(
            "surface is unidentifiable: need at least two distinct N and two distinct D",
        ));
    }
    Ok(())
}

struct LogData {
    ln_n: Vec<f64>,
    ln_d: Vec<f64>,
    ln_l: Vec<f64>,
}

impl LogData {
    fn new(points: &[SurfacePoint]) -> Self {
        LogData {
            ln_n: points.iter().map(|p| p.n.ln()).collect(),
            ln_d: points.iter().map(|p| p.d.ln()).collect(),
            ln_l: points.iter().map(|p| p.loss.ln()).collect(),
        }
    }
}

struct ChinchillaResiduals(LogData);

impl Residuals for ChinchillaResiduals {
    fn n_params(&self) -> usize {
        5
    }

    fn n_residuals(&self) -> usize {
        self.0.ln_l.len()
    }

    fn eval(&self, p: &[f64], r: &mut [f64], mut jac: Option<&mut DMatrix<f64>>) {
        let (a, b, e, al, be) = (p[0], p[1], p[2], p[3], p[4]);
        for i in 0..r.len() {
            let t1 = a - al * self.0.ln_n[i];
            let t2 = b - be * self.0.ln_d[i];
            let m = t1.max(t2).max(e);
            let (x1, x2, x3) = ((t1 - m).exp(), (t2 - m).exp(), (e - m).exp());
            let z = x1 + x2 + x3;
            r[i] = m + z.ln() - self.0.ln_l[i];
            if let Some(j) = jac.as_deref_mut() {
                let (s1, s2, s3) = (x1 / z, x2 / z, x3 / z);
                j[(i, 0)] = s1;
                j[(i, 1)] = s2;
                j[(i, 2)] = s3;
                j[(i, 3)] = -s1 * self.0.ln_n[i];
                j[(i, 4)] = -s2 * self.0.ln_d[i];
            }
        }
    }
}

/// Fit `L = E + A/N^α + B/D^β` by minimising the Huber loss (cutoff
/// `delta`) between `LSE(a − α ln N, b − β ln D, e)` and `ln L`, started
/// from every point of `grid`; `A = e^a`, `B = e^b`, `E = e^e`.
pub fn fit_chinchilla_2d(
    points: &[SurfacePoint],
    delta: f64,
    grid: &ChinchillaGrid,
) -> Result<ChinchillaFit> {
    check_identifiable(points)?;
    let problem = ChinchillaResiduals(LogData::new(points));
    let bounds = Bounds::free(5)
        .with(3, 0.0, f64::INFINITY)
        .with(4, 0.0, f64::INFINITY);
    let lm = LmSettings::new(delta);
    let starts = grid.starts();
    let best = run_starts(&problem, &starts, &bounds, &lm).ok_or_else(|| {
        Error::fit(format!(
            "none of {} initialisations converged",
            starts.len()
        ))
    })?;
    let p = &best.params;
    let mut fit = ChinchillaFit {
        a: p[0].exp(),
        b: p[1].exp(),
        e: p[2].exp(),
        alpha: p[3],
        beta: p[4],
        huber_delta: delta,
        objective: best.objective,
        train_mse: 0.0,
        val_mse: None,
    };
    fit.train_mse = loss_mse(points, |n, d| fit.predict(n, d));
    Ok(fit)
}

fn run_starts<P: Residuals, const K: usize>(
    problem: &P,
    starts: &[[f64; K]],
    bounds: &Bounds,
    lm: &LmSettings,
) -> Option<LmResult> {
    best_of(
        starts
            .par_iter()
            .map(|s| huber_lm(problem, s, bounds, lm))
            .collect(),
    )
}

pub(crate) fn loss_mse(points: &[SurfacePoint], f: impl Fn(f64, f64) -> f64) -> f64 {
    let pred: Vec<f64> = points.iter().map(|p| f(p.n, p.d)).collect();
    let obs: Vec<f64> = points.iter().map(|p| p.loss).collect();
    mse(&pred, &obs)
}

/// `ln L = β · LSE((α/β)(c_N − ln N), c_D − ln D)` with parameters
/// `(c_N, c_D, ln α, ln β)`, `c_N = ln N_c`, `c_D = ln D_c`.
struct KaplanResiduals(LogData);

impl Residuals for KaplanResiduals {
    fn n_params(&self) -> usize {
        4
    }

    fn n_residuals(&self) -> usize {
        self.0.ln_l.len()
    }

    fn eval(&self, p: &[f64], r: &mut [f64], mut jac: Option<&mut DMatrix<f64>>) {
        let (cn, cd, al, be) = (p[0], p[1], p[2].exp(), p[3].exp());
        for i in 0..r.len() {
            let u1 = al / be * (cn - self.0.ln_n[i]);
            let u2 = cd - self.0.ln_d[i];
            let m = u1.max(u2);
            let (x1, x2) = ((u1 - m).exp(), (u2 - m).exp());
            let z = x1 + x2;
            let lse = m + z.ln();
            r[i] = be * lse - self.0.ln_l[i];
            if let Some(j) = jac.as_deref_mut() {
                let (s1, s2) = (x1 / z, x2 / z);
                j[(i, 0)] = al * s1;
                j[(i, 1)] = be * s2;
                j[(i, 2)] = be * s1 * u1;
                j[(i, 3)] = be * (lse - s1 * u1);
            }
        }
    }
}

/// Fit `L = [(N_c/N)^{α/β} + D_c/D]^β` with the same Huber-in-log-space
/// protocol as [`fit_chinchilla_2d`] over a fixed initialisation grid.
pub fn fit_kaplan_2d(points: &[SurfacePoint], delta: f64) -> Result<KaplanFit> {
    check_identifiable(points)?;
    let problem = KaplanResiduals(LogData::new(points));
    let (lo, hi) = (1e-3f64.ln(), 5f64.ln());
    let bounds = Bounds::free(4).with(2, lo, hi).with(3, lo, hi);
    let lm = LmSettings::new(delta);
    let mut starts = Vec::new();
    for cn in [10.0, 15.0, 20.0, 25.0, 30.0, 35.0] {
        for cd in [10.0, 15.0, 20.0, 25.0, 30.0, 35.0] {
            for al in [0.05f64, 0.1, 0.2, 0.4, 0.8] {
                for be in [0.05f64, 0.1, 0.2, 0.4, 0.8] {
                    starts.push([cn, cd, al.ln(), be.ln()]);
                }
            }
        }
    }
    let best = run_starts(&problem, &starts, &bounds, &lm).ok_or_else(|| {
        Error::fit(format!(
            "none of {} initialisations converged",
            starts.len()
        ))
    })?;
    let p = &best.params;
    let mut fit = KaplanFit {
        n_c: p[0].exp(),
        d_c: p[1].exp(),
        alpha: p[2].exp(),
        beta: p[3].exp(),
        huber_delta: delta,
        objective: best.objective,
        train_mse: 0.0,
        val_mse: None,
    };
    fit.train_mse = loss_mse(points, |n, d| fit.predict(n, d));
    Ok(fit)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::logspace;

    fn grid_points(f: impl Fn(f64, f64) -> f64) -> Vec<SurfacePoint> {
        let mut pts = Vec::new();
        for n in logspace(1e7, 1e10, 6) {
            for d in logspace(1e9, 1e12, 5) {
                pts.push(SurfacePoint {
                    n,
                    d,
                    loss: f(n, d),
                });
            }
        }
        pts
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn chinchilla_self_consistency() {
        let truth = |n: f64, d: f64| 1.8 + 480.0 * n.powf(-0.35) + 2100.0 * d.powf(-0.37);
        let fit = fit_chinchilla_2d(
            &grid_points(truth),
            DEFAULT_LOG_DELTA,
            &ChinchillaGrid::default(),
        )
        .unwrap();
        for (got, want) in [
            (fit.e, 1.8),
            (fit.a, 480.0),
            (fit.b, 2100.0),
            (fit.alpha, 0.35),
            (fit.beta, 0.37),
        ] {
            assert!(rel(got, want) < 1e-4, "{fit:?}");
        }
    }

    #[test]
    fn kaplan_self_consistency() {
        let truth = KaplanFit {
            n_c: 8.8e13,
            d_c: 5.4e13,
            alpha: 0.076,
            beta: 0.095,
            huber_delta: 0.0,
            objective: 0.0,
            train_mse: 0.0,
            val_mse: None,
        };
        let fit =
            fit_kaplan_2d(&grid_points(|n, d| truth.predict(n, d)), DEFAULT_LOG_DELTA).unwrap();
        for (got, want) in [
            (fit.n_c, truth.n_c),
            (fit.d_c, truth.d_c),
            (fit.alpha, truth.alpha),
            (fit.beta, truth.beta),
        ] {
            assert!(rel(got, want) < 1e-4, "{fit:?}");
        }
    }

    #[test]
    fn single_n_is_unidentifiable() {
        let pts: Vec<SurfacePoint> = logspace(1e9, 1e12, 12)
            .into_iter()
            .map(|d| SurfacePoint {
                n: 1e8,
                d,
                loss: 2.0 + 100.0 * d.powf(-0.3),
            })
            .collect();
        assert!(matches!(
            fit_kaplan_2d(&pts, DEFAULT_LOG_DELTA),
            Err(Error::FitFailure(_))
        ));
        assert!(matches!(
            fit_chinchilla_2d(&pts, DEFAULT_LOG_DELTA, &ChinchillaGrid::default()),
            Err(Error::FitFailure(_))
        ));
        assert!(matches!(
            fit_kaplan_2d(&pts[..5], DEFAULT_LOG_DELTA),
            Err(Error::InvalidArgument(_))
        ));
    }
}
