//! One-dimensional scaling-law fits `y = E + B x^{-β}` with a robust Huber
//! objective, the exponential baseline `y = a + b e^{-cx}`, wild-bootstrap
//! BCa intervals, and exponent summaries across slices.

mod bootstrap;
mod exponential;
mod summary;

use nalgebra::DMatrix;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::optim::{huber_lm, Bounds, LmResult, LmSettings, Residuals};
use crate::stats::{fit_line, mad, median, quantile, std_pop};
use crate::{rng, Error, Result};

pub use bootstrap::{bca_ci, bca_ci_with, bca_interval, FitCI, ParamCI, WildResiduals, MIN_BOOT};
pub use exponential::{fit_exponential, ExpFit};
pub use summary::{
    summarize_exponents, summarize_exponents_trimmed, Axis, ExponentSummary, FitReport,
};

/// A loss curve along one axis with the other axis held fixed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series1D {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Name and value of the frozen axis, e.g. `("N", 1e8)`.
    pub held_fixed: Option<(String, f64)>,
}

impl Series1D {
    /// Points are sorted by `x`; `x` must be positive and distinct, `y` finite.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::invalid(format!(
                "{} x values but {} y values",
                xs.len(),
                ys.len()
            )));
        }
        if xs.iter().any(|x| !(x.is_finite() && *x > 0.0)) {
            return Err(Error::invalid("x values must be finite and positive"));
        }
        if ys.iter().any(|y| !y.is_finite()) {
            return Err(Error::invalid("y values must be finite"));
        }
        let mut pts: Vec<(f64, f64)> = xs.into_iter().zip(ys).collect();
        pts.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pts.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(Error::invalid("x values must be distinct"));
        }
        let (xs, ys) = pts.into_iter().unzip();
        Ok(Series1D {
            xs,
            ys,
            held_fixed: None,
        })
    }

    pub fn with_fixed(mut self, name: impl Into<String>, value: f64) -> Self {
        self.held_fixed = Some((name.into(), value));
        self
    }

    pub fn xs(&self) -> &[f64] {
        &self.xs
    }

    pub fn ys(&self) -> &[f64] {
        &self.ys
    }

    pub fn len(&self) -> usize {
        self.xs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.xs.is_empty()
    }

    pub(crate) fn without(&self, i: usize) -> Series1D {
        let mut s = self.clone();
        s.xs.remove(i);
        s.ys.remove(i);
        s
    }
}

/// Huber cutoff `1.4826 · MAD(y)`, falling back to `0.1 · std(y)` when the
/// MAD is zero.
pub fn default_delta(ys: &[f64]) -> f64 {
    let m = 1.4826 * mad(ys);
    if m > 0.0 {
        return m;
    }
    let s = 0.1 * std_pop(ys);
    if s > 0.0 {
        s
    } else {
        // constant data: any positive cutoff gives the same least-squares fit
        1e-12 * ys.first().map_or(1.0, |y| y.abs().max(1.0))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct FitSettings {
    pub beta_bounds: (f64, f64),
    pub fix_e_zero: bool,
    /// Huber cutoff; `None` uses [`default_delta`].
    pub delta: Option<f64>,
    pub n_starts: usize,
    pub seed: u64,
    pub max_iter: usize,
    pub gtol: f64,
    /// Internal pivot `x0`; `None` uses `median(x)`.
    pub pivot: Option<f64>,
}

impl Default for FitSettings {
    fn default() -> Self {
        FitSettings {
            beta_bounds: (1e-3, 10.0),
            fix_e_zero: false,
            delta: None,
            n_starts: 40,
            seed: 0,
            max_iter: 500,
            gtol: 1e-10,
            pivot: None,
        }
    }
}

/// Number of deterministic, quantile-seeded starts.
const N_QUANTILE_STARTS: usize = 5;
const E0_QUANTILES: [f64; N_QUANTILE_STARTS] = [0.0, 0.05, 0.1, 0.25, 0.5];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    #[serde(rename = "E")]
    pub e: f64,
    /// Amplitude in original `x` units: `y = E + B x^{-β}`.
    #[serde(rename = "B")]
    pub b: f64,
    pub beta: f64,
    /// Pivot of the internal parameterisation `E + A (x/x0)^{-β}`.
    pub x0: f64,
    /// `A = B x0^{-β}`.
    pub a: f64,
    pub huber_delta: f64,
    pub objective: f64,
    pub mse: f64,
    pub fixed_e_zero: bool,
    pub grad_norm: f64,
    pub beta_bounds: (f64, f64),
}

impl PowerLawFit {
    pub fn predict(&self, x: f64) -> f64 {
        self.e + self.a * (x / self.x0).powf(-self.beta)
    }

    /// Internal parameter vector `(E, ln A, ln β)`.
    pub(crate) fn internal(&self) -> [f64; 3] {
        [self.e, self.a.ln(), self.beta.ln()]
    }
}

/// `r_i = E + A exp(−β u_i) − y_i` with `u_i = ln(x_i / x0)`.
struct PowerResiduals<'a> {
    u: Vec<f64>,
    ys: &'a [f64],
}

impl Residuals for PowerResiduals<'_> {
    fn n_params(&self) -> usize {
        3
    }

    fn n_residuals(&self) -> usize {
        self.u.len()
    }

    fn eval(&self, p: &[f64], r: &mut [f64], jac: Option<&mut DMatrix<f64>>) {
        let (e, a, beta) = (p[0], p[1].exp(), p[2].exp());
        match jac {
            None => {
                for ((ri, u), y) in r.iter_mut().zip(&self.u).zip(self.ys) {
                    *ri = e + a * (-beta * u).exp() - y;
                }
            }
            Some(j) => {
                for (i, (u, y)) in self.u.iter().zip(self.ys).enumerate() {
                    let t = a * (-beta * u).exp();
                    r[i] = e + t - y;
                    j[(i, 0)] = 1.0;
                    j[(i, 1)] = t;
                    j[(i, 2)] = -t * u * beta;
                }
            }
        }
    }
}

/// Everything fixed for one power-law problem, shared by multi-start,
/// bootstrap refits, and jackknife refits.
pub(crate) struct PowerProblem<'a> {
    residuals: PowerResiduals<'a>,
    bounds: Bounds,
    lm: LmSettings,
    x0: f64,
    fix_e_zero: bool,
    beta_bounds: (f64, f64),
}

impl<'a> PowerProblem<'a> {
    pub(crate) fn new(
        xs: &[f64],
        ys: &'a [f64],
        x0: f64,
        delta: f64,
        settings: &FitSettings,
    ) -> Self {
        let (lo, hi) = settings.beta_bounds;
        let mut bounds = Bounds::free(3).with(2, lo.ln(), hi.ln());
        if settings.fix_e_zero {
            bounds = bounds.with(0, 0.0, 0.0);
        }
        PowerProblem {
            residuals: PowerResiduals {
                u: xs.iter().map(|x| (x / x0).ln()).collect(),
                ys,
            },
            bounds,
            lm: LmSettings {
                delta,
                max_iter: settings.max_iter,
                gtol: settings.gtol,
            },
            x0,
            fix_e_zero: settings.fix_e_zero,
            beta_bounds: settings.beta_bounds,
        }
    }

    pub(crate) fn solve(&self, start: &[f64]) -> LmResult {
        huber_lm(&self.residuals, start, &self.bounds, &self.lm)
    }

    /// Diagonal of the hat matrix of the linearised model at `params`.
    /// A pinned `E` does not count as a fitted parameter.
    pub(crate) fn leverages(&self, params: &[f64]) -> Vec<f64> {
        let n = self.residuals.u.len();
        let mut r = vec![0.0; n];
        let mut jac = DMatrix::zeros(n, 3);
        self.residuals.eval(params, &mut r, Some(&mut jac));
        if self.fix_e_zero {
            jac = jac.remove_column(0);
        }
        let q = jac.qr().q();
        (0..n).map(|i| q.row(i).norm_squared()).collect()
    }

    pub(crate) fn to_fit(&self, res: &LmResult) -> PowerLawFit {
        let (e, a, beta) = (res.params[0], res.params[1].exp(), res.params[2].exp());
        let mut r = vec![0.0; self.residuals.u.len()];
        self.residuals.eval(&res.params, &mut r, None);
        PowerLawFit {
            e,
            b: a * self.x0.powf(beta),
            beta,
            x0: self.x0,
            a,
            huber_delta: self.lm.delta,
            objective: res.objective,
            mse: r.iter().map(|v| v * v).sum::<f64>() / r.len() as f64,
            fixed_e_zero: self.fix_e_zero,
            grad_norm: res.grad_norm,
            beta_bounds: self.beta_bounds,
        }
    }

    /// Log-linear seed: regress `ln(y − E0)` on `u` over points with `y > E0`.
    fn seed_from_e0(&self, e0: f64) -> [f64; 3] {
        let (lo, hi) = (self.bounds.lower[2], self.bounds.upper[2]);
        let (us, ls): (Vec<f64>, Vec<f64>) = self
            .residuals
            .u
            .iter()
            .zip(self.residuals.ys)
            .filter(|(_, y)| **y > e0)
            .map(|(u, y)| (*u, (y - e0).ln()))
            .unzip();
        let (ln_a, ln_beta) = if us.len() >= 2 && us.iter().any(|u| *u != us[0]) {
            let line = fit_line(&us, &ls);
            let beta = (-line.slope).max(1e-12);
            (line.intercept, beta.ln())
        } else {
            let spread = self
                .residuals
                .ys
                .iter()
                .map(|y| (y - e0).abs())
                .fold(0.0, f64::max);
            (spread.max(1e-12).ln(), 0.5f64.ln())
        };
        [e0, ln_a, ln_beta.clamp(lo, hi)]
    }

    /// Random start: `E` uniform around the data, `β` log-uniform in its
    /// bounds, `A` by least squares given the other two.
    fn random_start<R: Rng>(&self, rng: &mut R) -> [f64; 3] {
        let ys = self.residuals.ys;
        let (ymin, ymax) = ys
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &y| {
                (a.min(y), b.max(y))
            });
        let range = (ymax - ymin).max(1e-12);
        let e = if self.fix_e_zero {
            0.0
        } else {
            rng.random_range(ymin - range..=ymax)
        };
        let ln_beta = rng.random_range(self.bounds.lower[2]..=self.bounds.upper[2]);
        let beta = ln_beta.exp();
        let (mut num, mut den) = (0.0, 0.0);
        for (u, y) in self.residuals.u.iter().zip(ys) {
            let t = (-beta * u).exp();
            num += t * (y - e);
            den += t * t;
        }
        let a = if num > 0.0 && den > 0.0 {
            num / den
        } else {
            range
        };
        [e, a.ln(), ln_beta]
    }
}

/// Robust fit of `y = E + B x^{-β}`.
///
/// Minimises `Σ ρ_δ(r_i)` over `(E, ln A, ln β)` with `y = E + A (x/x0)^{-β}`
/// and `x0 = median(x)`, from `settings.n_starts` initialisations: five
/// log-linear seeds at `E0` taken from `y` quantiles, the rest random. The
/// lowest-objective converged solution is returned.
pub fn fit_power_law(series: &Series1D, settings: &FitSettings) -> Result<PowerLawFit> {
    let n_free = if settings.fix_e_zero { 2 } else { 3 };
    if series.len() < n_free + 1 {
        return Err(Error::invalid(format!(
            "a {n_free}-parameter fit needs at least {} points, got {}",
            n_free + 1,
            series.len()
        )));
    }
    let (lo, hi) = settings.beta_bounds;
    if !(lo > 0.0 && lo < hi && hi.is_finite()) {
        return Err(Error::invalid(format!(
            "beta bounds ({lo}, {hi}) must satisfy 0 < lo < hi < inf"
        )));
    }
    let delta = settings.delta.unwrap_or_else(|| default_delta(series.ys()));
    let x0 = settings.pivot.unwrap_or_else(|| median(series.xs()));
    let problem = PowerProblem::new(series.xs(), series.ys(), x0, delta, settings);
    let starts: Vec<[f64; 3]> = (0..settings.n_starts.max(1))
        .map(|k| {
            if k < N_QUANTILE_STARTS {
                let e0 = if settings.fix_e_zero {
                    0.0
                } else {
                    quantile(series.ys(), E0_QUANTILES[k])
                };
                problem.seed_from_e0(e0)
            } else {
                problem.random_start(&mut rng::stream(settings.seed, k as u64))
            }
        })
        .collect();
    best_of(starts.par_iter().map(|s| problem.solve(s)).collect())
        .map(|res| problem.to_fit(&res))
        .ok_or_else(|| {
            Error::fit(format!(
                "none of {} starts converged for the power law (delta {delta:e}, x0 {x0:e})",
                starts.len()
            ))
        })
}

/// Lowest objective among converged results; ties go to the earliest.
pub(crate) fn best_of(results: Vec<LmResult>) -> Option<LmResult> {
    results
        .into_iter()
        .filter(|r| r.converged && r.objective.is_finite())
        .reduce(|best, r| {
            if r.objective < best.objective {
                r
            } else {
                best
            }
        })
}

/// `power.mse / exp.mse`; undefined when the exponential fit is exact.
pub fn mse_ratio(power: &PowerLawFit, exp: &ExpFit) -> Result<f64> {
    if exp.mse == 0.0 {
        return Err(Error::degenerate(
            "exponential fit has zero MSE; ratio undefined",
        ));
    }
    Ok(power.mse / exp.mse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::logspace;

    fn curve(e: f64, b: f64, beta: f64, xs: &[f64]) -> Series1D {
        Series1D::new(
            xs.to_vec(),
            xs.iter().map(|x| e + b * x.powf(-beta)).collect(),
        )
        .unwrap()
    }

    #[test]
    fn exact_recovery() {
        let s = curve(1.0, 2.0, 0.5, &logspace(1.0, 1e4, 12));
        let f = fit_power_law(&s, &FitSettings::default()).unwrap();
        assert!((f.e - 1.0).abs() < 1e-6, "{f:?}");
        assert!((f.b - 2.0).abs() < 1e-6);
        assert!((f.beta - 0.5).abs() < 1e-6);
        assert!((f.b - f.a * f.x0.powf(f.beta)).abs() < 1e-9 * f.b);
    }

    #[test]
    fn rejects_too_few_points() {
        let s = curve(1.0, 2.0, 0.5, &[1.0, 2.0, 3.0]);
        assert!(matches!(
            fit_power_law(&s, &FitSettings::default()),
            Err(Error::InvalidArgument(_))
        ));
        let fixed = FitSettings {
            fix_e_zero: true,
            ..FitSettings::default()
        };
        assert!(fit_power_law(&s, &fixed).is_ok());
    }

    #[test]
    fn beta_respects_bounds() {
        let s = curve(0.0, 1.0, 2.0, &logspace(1.0, 100.0, 8));
        let settings = FitSettings {
            beta_bounds: (0.1, 1.0),
            ..FitSettings::default()
        };
        let f = fit_power_law(&s, &settings).unwrap();
        assert!(f.beta <= 1.0 + 1e-12 && f.beta >= 0.1);
    }

    #[test]
    fn series_validation() {
        assert!(Series1D::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Series1D::new(vec![0.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Series1D::new(vec![1.0], vec![0.0, 0.0]).is_err());
        let s = Series1D::new(vec![3.0, 1.0, 2.0], vec![0.3, 0.1, 0.2]).unwrap();
        assert_eq!(s.xs(), &[1.0, 2.0, 3.0]);
        assert_eq!(s.ys(), &[0.1, 0.2, 0.3]);
    }

    #[test]
    fn delta_rule() {
        let ys = [1.0, 2.0, 3.0, 4.0, 100.0];
        assert!((default_delta(&ys) - 1.4826).abs() < 1e-12);
        let flat = [1.0, 1.0, 1.0, 1.0, 2.0];
        assert!((default_delta(&flat) - 0.1 * std_pop(&flat)).abs() < 1e-15);
    }
}
