//! Fixed-design wild bootstrap with BCa intervals.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{fit_power_law, FitSettings, PowerLawFit, PowerProblem, Series1D};
use crate::stats::{mean, norm_cdf, norm_ppf, quantile_sorted, std_sample};
use crate::{rng, Error, Result};

/// Interval for one reported parameter.
/// Fewest bootstrap replicates accepted by [`bca_ci`].
pub const MIN_BOOT: usize = 100;

/// Residuals whose signs the wild bootstrap flips.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WildResiduals {
    /// `r_i = y_i − ŷ_i` as fitted.
    Raw,
    /// `r_i / (1 − h_ii)` with `h_ii` the leverage of point `i`. Raw
    /// residuals understate the noise where leverage is high, which on
    /// short series makes 95% intervals cover well under 95%.
    #[default]
    Leverage,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamCI {
    pub name: String,
    pub estimate: f64,
    pub lo: f64,
    pub hi: f64,
    /// Sample standard deviation of the bootstrap replicates.
    pub stderr: f64,
    pub z0: f64,
    pub acceleration: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitCI {
    /// `E`, `B`, `beta`, in that order.
    pub params: Vec<ParamCI>,
    pub level: f64,
    pub n_boot: usize,
    pub n_failed: usize,
    /// More than 10% of the replicates failed to refit.
    pub excess_failures: bool,
    pub jackknife_failures: usize,
}

impl FitCI {
    pub fn get(&self, name: &str) -> Option<&ParamCI> {
        self.params.iter().find(|p| p.name == name)
    }
}

fn reported(fit: &PowerLawFit) -> [f64; 3] {
    [fit.e, fit.b, fit.beta]
}

const NAMES: [&str; 3] = ["E", "B", "beta"];

/// BCa interval from bootstrap replicates `draws`, point estimate `t_hat`,
/// and jackknife estimates `jack`, at confidence `1 − alpha`.
///
/// `z0 = Φ⁻¹((#{t* < t̂} + ½ #{t* = t̂}) / B)`, with the proportion clamped
/// to `[1/(2B), 1 − 1/(2B)]` so it stays finite; the acceleration is the
/// jackknife skewness ratio (zero when the jackknife has no spread).
/// Returns `(lo, hi, z0, a)`.
pub fn bca_interval(draws: &[f64], t_hat: f64, jack: &[f64], alpha: f64) -> (f64, f64, f64, f64) {
    let b = draws.len() as f64;
    let below = draws.iter().filter(|&&t| t < t_hat).count() as f64;
    let ties = draws.iter().filter(|&&t| t == t_hat).count() as f64;
    let prop = ((below + 0.5 * ties) / b).clamp(0.5 / b, 1.0 - 0.5 / b);
    let z0 = norm_ppf(prop);

    let accel = if jack.len() >= 2 {
        let jbar = mean(jack);
        let (s2, s3) = jack.iter().fold((0.0, 0.0), |(s2, s3), t| {
            let d = jbar - t;
            (s2 + d * d, s3 + d * d * d)
        });
        if s2 > 0.0 {
            s3 / (6.0 * s2.powf(1.5))
        } else {
            0.0
        }
    } else {
        0.0
    };

    let level = |q: f64| {
        if z0 == 0.0 && accel == 0.0 {
            return q;
        }
        let zq = norm_ppf(q);
        norm_cdf(z0 + (z0 + zq) / (1.0 - accel * (z0 + zq)))
    };
    let mut sorted = draws.to_vec();
    sorted.sort_by(f64::total_cmp);
    let lo = quantile_sorted(&sorted, level(alpha / 2.0));
    let hi = quantile_sorted(&sorted, level(1.0 - alpha / 2.0));
    (lo, hi, z0, accel)
}

/// Wild-bootstrap BCa intervals for `(E, B, β)` of a converged fit.
///
/// Replicate `b` draws Rademacher signs from `stream(seed, b)`, sets
/// `y* = ŷ + ε r`, and refits with the base fit's cutoff and pivot,
/// warm-started from the base solution. Failed refits are discarded.
/// Residuals are leverage-adjusted; see [`bca_ci_with`].
pub fn bca_ci(series: &Series1D, fit: &PowerLawFit, n_boot: usize, alpha: f64, seed: u64) -> Result<FitCI> {
    bca_ci_with(series, fit, n_boot, alpha, seed, WildResiduals::default())
}

/// [`bca_ci`] with a choice of bootstrap residuals.
pub fn bca_ci_with(
    series: &Series1D,
    fit: &PowerLawFit,
    n_boot: usize,
    alpha: f64,
    seed: u64,
    residuals: WildResiduals,
) -> Result<FitCI> {
    if n_boot < MIN_BOOT {
        return Err(Error::invalid(format!(
            "n_boot must be at least {MIN_BOOT}, got {n_boot}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    let settings = FitSettings {
        beta_bounds: fit.beta_bounds,
        fix_e_zero: fit.fixed_e_zero,
        delta: Some(fit.huber_delta),
        pivot: Some(fit.x0),
        ..FitSettings::default()
    };
    let fitted: Vec<f64> = series.xs().iter().map(|&x| fit.predict(x)).collect();
    let resid: Vec<f64> = series
        .ys()
        .iter()
        .zip(&fitted)
        .map(|(y, f)| y - f)
        .collect();
    let start = fit.internal();
    let resid = match residuals {
        WildResiduals::Raw => resid,
        WildResiduals::Leverage => {
            let base = PowerProblem::new(series.xs(), series.ys(), fit.x0, fit.huber_delta, &settings);
            let h = base.leverages(&start);
            // a point with leverage one is interpolated and its residual is zero
            resid.iter().zip(h).map(|(r, h)| if 1.0 - h > 1e-8 { r / (1.0 - h) } else { *r }).collect()
        }
    };

    let replicates: Vec<Option<[f64; 3]>> = (0..n_boot)
        .into_par_iter()
        .map(|b| {
            let mut r = rng::stream(seed, b as u64);
            let ys: Vec<f64> = fitted
                .iter()
                .zip(&resid)
                .map(|(f, e)| if r.random::<bool>() { f + e } else { f - e })
                .collect();
            let problem = PowerProblem::new(series.xs(), &ys, fit.x0, fit.huber_delta, &settings);
            let res = problem.solve(&start);
            res.converged.then(|| reported(&problem.to_fit(&res)))
        })
        .collect();
    let ok: Vec<[f64; 3]> = replicates.iter().flatten().copied().collect();
    let n_failed = n_boot - ok.len();
    if ok.is_empty() {
        return Err(Error::fit("every bootstrap refit failed"));
    }
    let excess_failures = n_failed as f64 > 0.1 * n_boot as f64;
    if excess_failures {
        log::warn!("{n_failed} of {n_boot} bootstrap refits failed");
    }

    let jack: Vec<Option<[f64; 3]>> = (0..series.len())
        .into_par_iter()
        .map(|i| {
            let sub = series.without(i);
            let problem = PowerProblem::new(sub.xs(), sub.ys(), fit.x0, fit.huber_delta, &settings);
            let res = problem.solve(&start);
            if res.converged {
                return Some(reported(&problem.to_fit(&res)));
            }
            fit_power_law(&sub, &settings).ok().map(|f| reported(&f))
        })
        .collect();
    let jack_ok: Vec<[f64; 3]> = jack.iter().flatten().copied().collect();
    let jackknife_failures = series.len() - jack_ok.len();
    if jackknife_failures > 0 {
        log::warn!("{jackknife_failures} jackknife refits failed and were excluded");
    }

    let point = reported(fit);
    let params = (0..3)
        .map(|k| {
            let draws: Vec<f64> = ok.iter().map(|t| t[k]).collect();
            let jk: Vec<f64> = jack_ok.iter().map(|t| t[k]).collect();
            let (lo, hi, z0, acceleration) = bca_interval(&draws, point[k], &jk, alpha);
            ParamCI {
                name: NAMES[k].to_string(),
                estimate: point[k],
                lo,
                hi,
                stderr: std_sample(&draws),
                z0,
                acceleration,
            }
        })
        .collect();
    Ok(FitCI {
        params,
        level: 1.0 - alpha,
        n_boot,
        n_failed,
        excess_failures,
        jackknife_failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::{logspace, quantile};

    #[test]
    fn reduces_to_percentile() {
        // symmetric draws around the estimate, flat jackknife: z0 = a = 0
        let draws: Vec<f64> = (0..1001).map(|i| (i as f64 - 500.0) / 100.0).collect();
        let (lo, hi, z0, a) = bca_interval(&draws, 0.0, &[1.0, 1.0, 1.0], 0.05);
        assert_eq!(z0, 0.0);
        assert_eq!(a, 0.0);
        assert_eq!(lo, quantile(&draws, 0.025));
        assert_eq!(hi, quantile(&draws, 0.975));
    }

    #[test]
    fn ties_count_half() {
        let draws = [1.0, 2.0, 2.0, 3.0];
        let (_, _, z0, _) = bca_interval(&draws, 2.0, &[], 0.1);
        assert_eq!(z0, 0.0);
        let (_, _, z0, _) = bca_interval(&[5.0; 10], 0.0, &[], 0.1);
        assert!(z0.is_finite() && z0 < 0.0);
    }

    #[test]
    fn exact_fit_has_zero_width() {
        let xs = logspace(1.0, 1e4, 12);
        let s = Series1D::new(
            xs.clone(),
            xs.iter().map(|x| 1.0 + 2.0 * x.powf(-0.5)).collect(),
        )
        .unwrap();
        let fit = fit_power_law(&s, &FitSettings::default()).unwrap();
        let ci = bca_ci(&s, &fit, 100, 0.05, 3).unwrap();
        for p in &ci.params {
            assert!(
                (p.hi - p.lo).abs() < 1e-6 * p.estimate.abs().max(1.0),
                "{p:?}"
            );
        }
        assert_eq!(ci.n_failed, 0);
    }

    #[test]
    fn deterministic_given_seed() {
        let xs = logspace(10.0, 1e5, 10);
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 2.0 + 3.0 * x.powf(-0.4) + 0.003 * if i % 2 == 0 { 1.0 } else { -1.0 })
            .collect();
        let s = Series1D::new(xs, ys).unwrap();
        let fit = fit_power_law(&s, &FitSettings::default()).unwrap();
        let a = bca_ci(&s, &fit, 200, 0.05, 9).unwrap();
        let b = bca_ci(&s, &fit, 200, 0.05, 9).unwrap();
        assert_eq!(a, b);
        let beta = a.get("beta").unwrap();
        assert!(beta.lo <= beta.estimate && beta.estimate <= beta.hi);
        assert!(bca_ci(&s, &fit, 50, 0.05, 9).is_err());
    }

    #[test]
    fn leverages_sum_to_fitted_parameter_count() {
        let xs = logspace(1.0, 1e3, 12);
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x.powf(-0.5)).collect();
        for (fix_e_zero, p) in [(false, 3.0), (true, 2.0)] {
            let settings = FitSettings {
                fix_e_zero,
                ..FitSettings::default()
            };
            let s = Series1D::new(xs.clone(), ys.clone()).unwrap();
            let fit = fit_power_law(&s, &settings).unwrap();
            let problem = PowerProblem::new(s.xs(), s.ys(), fit.x0, fit.huber_delta, &settings);
            let h = problem.leverages(&fit.internal());
            assert!((h.iter().sum::<f64>() - p).abs() < 1e-9, "{h:?}");
            assert!(h.iter().all(|&v| (0.0..=1.0 + 1e-12).contains(&v)));
        }
    }

    #[test]
    fn leverage_residuals_widen_intervals() {
        let xs = logspace(1.0, 1e3, 12);
        let ys: Vec<f64> = xs
            .iter()
            .enumerate()
            .map(|(i, x)| 1.0 + 2.0 * x.powf(-0.5) + 0.01 * [1.0, -1.0, 0.5][i % 3])
            .collect();
        let s = Series1D::new(xs, ys).unwrap();
        let fit = fit_power_law(&s, &FitSettings::default()).unwrap();
        let raw = bca_ci_with(&s, &fit, 400, 0.05, 2, WildResiduals::Raw).unwrap();
        let lev = bca_ci_with(&s, &fit, 400, 0.05, 2, WildResiduals::Leverage).unwrap();
        assert!(lev.get("beta").unwrap().stderr > raw.get("beta").unwrap().stderr);
    }
}
