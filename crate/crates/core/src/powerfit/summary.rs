//! Exponent statistics across slices and the JSON fit report.

use serde::{Deserialize, Serialize};

use super::{ExpFit, FitCI, FitSettings, PowerLawFit};
use crate::stats::{mean, median, std_pop};
use crate::{Error, Result};

/// Which axis the fitted exponents describe.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    /// Exponents of `L(N)_D` slices.
    N,
    /// Exponents of `L(D)_N` slices.
    D,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExponentSummary {
    pub axis: Axis,
    pub exponents: Vec<f64>,
    pub mean: f64,
    /// Population standard deviation across slices.
    pub std: f64,
    /// Smallest fitted offset `E`, used as an estimate of the data entropy.
    pub entropy_proxy: f64,
}

pub fn summarize_exponents(fits: &[PowerLawFit], axis: Axis) -> Result<ExponentSummary> {
    if fits.is_empty() {
        return Err(Error::invalid("no fits to summarise"));
    }
    let exponents: Vec<f64> = fits.iter().map(|f| f.beta).collect();
    Ok(ExponentSummary {
        axis,
        mean: mean(&exponents),
        std: std_pop(&exponents),
        entropy_proxy: fits.iter().map(|f| f.e).fold(f64::INFINITY, f64::min),
        exponents,
    })
}

/// As [`summarize_exponents`] after discarding the `n_extreme` exponents
/// furthest from the median.
pub fn summarize_exponents_trimmed(
    fits: &[PowerLawFit],
    axis: Axis,
    n_extreme: usize,
) -> Result<ExponentSummary> {
    if fits.len() <= n_extreme {
        return Err(Error::invalid(format!(
            "cannot drop {n_extreme} of {} exponents",
            fits.len()
        )));
    }
    let med = median(&fits.iter().map(|f| f.beta).collect::<Vec<_>>());
    let mut order: Vec<usize> = (0..fits.len()).collect();
    order.sort_by(|&i, &j| {
        (fits[i].beta - med)
            .abs()
            .total_cmp(&(fits[j].beta - med).abs())
    });
    order.truncate(fits.len() - n_extreme);
    order.sort_unstable();
    let kept: Vec<PowerLawFit> = order.into_iter().map(|i| fits[i].clone()).collect();
    summarize_exponents(&kept, axis)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportParams {
    #[serde(rename = "E")]
    pub e: f64,
    #[serde(rename = "B")]
    pub b: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportInterval {
    pub lo: f64,
    pub hi: f64,
    pub stderr: f64,
}

/// JSON shape of a single 1d fit.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FitReport {
    pub params: ReportParams,
    /// Keyed by `E`, `B`, `beta`; absent when no bootstrap was run.
    pub ci: Option<std::collections::BTreeMap<String, ReportInterval>>,
    pub mse: f64,
    pub exp_baseline_mse: Option<f64>,
    pub mse_ratio: Option<f64>,
    pub n_boot: usize,
    pub settings: FitSettings,
    pub huber_delta: f64,
    pub x0: f64,
}

impl FitReport {
    pub fn new(
        fit: &PowerLawFit,
        ci: Option<&FitCI>,
        exp: Option<&ExpFit>,
        settings: &FitSettings,
    ) -> Self {
        let ratio = exp.and_then(|e| super::mse_ratio(fit, e).ok());
        FitReport {
            params: ReportParams {
                e: fit.e,
                b: fit.b,
                beta: fit.beta,
            },
            ci: ci.map(|c| {
                c.params
                    .iter()
                    .map(|p| {
                        (
                            p.name.clone(),
                            ReportInterval {
                                lo: p.lo,
                                hi: p.hi,
                                stderr: p.stderr,
                            },
                        )
                    })
                    .collect()
            }),
            mse: fit.mse,
            exp_baseline_mse: exp.map(|e| e.mse),
            mse_ratio: ratio,
            n_boot: ci.map_or(0, |c| c.n_boot),
            settings: settings.clone(),
            huber_delta: fit.huber_delta,
            x0: fit.x0,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fake(beta: f64, e: f64) -> PowerLawFit {
        PowerLawFit {
            e,
            b: 1.0,
            beta,
            x0: 1.0,
            a: 1.0,
            huber_delta: 0.1,
            objective: 0.0,
            mse: 0.0,
            fixed_e_zero: false,
            grad_norm: 0.0,
            beta_bounds: (1e-3, 10.0),
        }
    }

    #[test]
    fn single_fit() {
        let s = summarize_exponents(&[fake(0.7, 2.0)], Axis::N).unwrap();
        assert_eq!((s.mean, s.std, s.entropy_proxy), (0.7, 0.0, 2.0));
        assert!(summarize_exponents(&[], Axis::D).is_err());
    }

    #[test]
    fn trimming_drops_extremes() {
        let fits: Vec<_> = [0.4, 0.42, 0.38, 2.0, -1.0]
            .iter()
            .map(|&b| fake(b, 1.0))
            .collect();
        let s = summarize_exponents_trimmed(&fits, Axis::D, 2).unwrap();
        assert_eq!(s.exponents, vec![0.4, 0.42, 0.38]);
        assert!((s.mean - 0.4).abs() < 1e-12);
    }
}
