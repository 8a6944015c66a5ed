//! Compute-optimal frontiers `L_opt(C)`, `N_opt(C)`, `D_opt(C)` of a fitted
//! loss surface under the budget `C = 6ND`.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::powerfit::{bca_ci_with, fit_power_law, FitCI, FitSettings, PowerLawFit, Series1D, WildResiduals};
use crate::stats::{fit_line, logspace};
use crate::surface::{ChinchillaFit, Surface, SurfacePoint};
use crate::{Error, Result};

/// Training compute of a model with `n` parameters seeing `d` tokens.
pub fn compute(n: f64, d: f64) -> f64 {
    6.0 * n * d
}

/// Log grids over `N` and `D` and the fraction of the log-`C` range cut at
/// each end.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierGrid {
    pub n_range: (f64, f64),
    pub d_range: (f64, f64),
    pub grid_points: usize,
    pub clip: (f64, f64),
}

impl FrontierGrid {
    /// Grid spanning the raw data with the default 10% clip at each end.
    pub fn from_points(points: &[SurfacePoint], grid_points: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid(
                "cannot build a frontier grid from an empty table",
            ));
        }
        let fold = |f: fn(&SurfacePoint) -> f64| {
            points
                .iter()
                .map(f)
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| {
                    (lo.min(v), hi.max(v))
                })
        };
        Ok(FrontierGrid {
            n_range: fold(|p| p.n),
            d_range: fold(|p| p.d),
            grid_points,
            clip: (0.1, 0.1),
        })
    }

    fn validate(&self) -> Result<()> {
        let ok_range = |(lo, hi): (f64, f64)| lo > 0.0 && hi > lo && hi.is_finite();
        if !ok_range(self.n_range) || !ok_range(self.d_range) {
            return Err(Error::invalid(
                "N and D ranges must be positive with min < max",
            ));
        }
        if self.grid_points < 20 {
            return Err(Error::invalid(format!(
                "grid_points must be at least 20, got {}",
                self.grid_points
            )));
        }
        let (lo, hi) = self.clip;
        if !(lo >= 0.0 && hi >= 0.0 && lo + hi < 1.0) {
            return Err(Error::invalid(format!(
                "clip fractions {:?} leave no compute range",
                self.clip
            )));
        }
        Ok(())
    }
}

/// Frontier at one compute value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrontierSample {
    pub c: f64,
    pub l_opt: f64,
    /// Minimiser over the `N` grid with `D = C/6N`.
    pub n_opt: f64,
    /// Minimiser over the `D` grid with `N = C/6D`.
    pub d_opt: f64,
    pub l_opt_over_n: f64,
    pub l_opt_over_d: f64,
    /// An argmin sits on the edge of the feasible grid, so the true optimum
    /// may lie outside it.
    pub flagged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierSamples {
    pub grid: FrontierGrid,
    pub c_window: (f64, f64),
    pub samples: Vec<FrontierSample>,
}

impl FrontierSamples {
    pub fn unflagged(&self) -> impl Iterator<Item = &FrontierSample> {
        self.samples.iter().filter(|s| !s.flagged)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["C", "L_opt", "N_opt", "D_opt", "flagged"])
            .map_err(|e| Error::Format(e.to_string()))?;
        for s in &self.samples {
            w.write_record([
                format!("{:e}", s.c),
                format!("{}", s.l_opt),
                format!("{:e}", s.n_opt),
                format!("{:e}", s.d_opt),
                s.flagged.to_string(),
            ])
            .map_err(|e| Error::Format(e.to_string()))?;
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

/// Minimise `f` over the grid values whose partner `C/(6x)` lies in
/// `partner`. Returns `(x*, L*, on_edge)`, or `None` if nothing is feasible.
fn constrained_min(
    c: f64,
    grid: &[f64],
    partner: (f64, f64),
    f: impl Fn(f64, f64) -> f64,
) -> Option<(f64, f64, bool)> {
    // allow for rounding at the ends of the partner range
    let (lo, hi) = (partner.0 * (1.0 - 1e-12), partner.1 * (1.0 + 1e-12));
    let feasible: Vec<(f64, f64)> = grid
        .iter()
        .filter_map(|&x| {
            let y = c / (6.0 * x);
            (y >= lo && y <= hi).then(|| (x, f(x, y)))
        })
        .collect();
    let (k, &(x, l)) = feasible
        .iter()
        .enumerate()
        .filter(|(_, p)| p.1.is_finite())
        .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))?;
    Some((x, l, k == 0 || k + 1 == feasible.len()))
}

/// Sample the frontier at `grid_points` log-spaced compute values inside the
/// clip window, minimising over `N` and over `D` separately.
pub fn sample_frontier<S: Surface + Sync + ?Sized>(
    surface: &S,
    grid: &FrontierGrid,
) -> Result<FrontierSamples> {
    grid.validate()?;
    let ns = logspace(grid.n_range.0, grid.n_range.1, grid.grid_points);
    let ds = logspace(grid.d_range.0, grid.d_range.1, grid.grid_points);
    let (c_min, c_max) = (
        compute(grid.n_range.0, grid.d_range.0).ln(),
        compute(grid.n_range.1, grid.d_range.1).ln(),
    );
    let span = c_max - c_min;
    let c_window = (
        (c_min + grid.clip.0 * span).exp(),
        (c_max - grid.clip.1 * span).exp(),
    );
    if !(c_window.1 > c_window.0) {
        return Err(Error::invalid("empty compute range after clipping"));
    }
    let cs = logspace(c_window.0, c_window.1, grid.grid_points);
    let samples = cs
        .par_iter()
        .map(|&c| {
            let over_n = constrained_min(c, &ns, grid.d_range, |n, d| surface.predict(n, d));
            let over_d = constrained_min(c, &ds, grid.n_range, |d, n| surface.predict(n, d));
            match (over_n, over_d) {
                (Some((n_opt, ln, edge_n)), Some((d_opt, ld, edge_d))) => FrontierSample {
                    c,
                    l_opt: ln.min(ld),
                    n_opt,
                    d_opt,
                    l_opt_over_n: ln,
                    l_opt_over_d: ld,
                    flagged: edge_n || edge_d,
                },
                _ => FrontierSample {
                    c,
                    l_opt: f64::NAN,
                    n_opt: f64::NAN,
                    d_opt: f64::NAN,
                    l_opt_over_n: f64::NAN,
                    l_opt_over_d: f64::NAN,
                    flagged: true,
                },
            }
        })
        .collect();
    Ok(FrontierSamples {
        grid: *grid,
        c_window,
        samples,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierFitSettings {
    pub power: FitSettings,
    /// Bootstrap replicates for the `L_opt` fit; 0 skips the intervals.
    pub n_boot: usize,
    pub alpha: f64,
    pub seed: u64,
    pub residuals: WildResiduals,
}

impl Default for FrontierFitSettings {
    fn default() -> Self {
        FrontierFitSettings {
            power: FitSettings::default(),
            n_boot: 200,
            alpha: 0.05,
            seed: 0,
            residuals: WildResiduals::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontierResult {
    /// `L_opt = E_C + K C^{-γ}`.
    pub gamma: f64,
    #[serde(rename = "K")]
    pub k: f64,
    #[serde(rename = "E_C")]
    pub e_c: f64,
    /// `N_opt = N0 C^a`.
    pub a: f64,
    #[serde(rename = "N0")]
    pub n0: f64,
    /// `D_opt = D0 C^b`.
    pub b: f64,
    #[serde(rename = "D0")]
    pub d0: f64,
    pub a_plus_b: f64,
    pub r2_n: f64,
    pub r2_d: f64,
    pub n_samples: usize,
    pub l_opt_fit: PowerLawFit,
    pub l_opt_ci: Option<FitCI>,
}

/// Power-law fit of `L_opt(C)` and log-log regressions of `N_opt`, `D_opt`
/// over the unflagged samples.
pub fn fit_frontier(
    samples: &FrontierSamples,
    settings: &FrontierFitSettings,
) -> Result<FrontierResult> {
    let kept: Vec<&FrontierSample> = samples.unflagged().collect();
    if kept.is_empty() {
        return Err(Error::fit("every frontier sample is boundary-flagged"));
    }
    if kept.len() < 10 {
        return Err(Error::invalid(format!(
            "need at least 10 unflagged frontier samples, got {}",
            kept.len()
        )));
    }
    let lc: Vec<f64> = kept.iter().map(|s| s.c.ln()).collect();
    let ln_n: Vec<f64> = kept.iter().map(|s| s.n_opt.ln()).collect();
    let ln_d: Vec<f64> = kept.iter().map(|s| s.d_opt.ln()).collect();
    let fit_n = fit_line(&lc, &ln_n);
    let fit_d = fit_line(&lc, &ln_d);

    let series = Series1D::new(
        kept.iter().map(|s| s.c).collect(),
        kept.iter().map(|s| s.l_opt).collect(),
    )?;
    let l_fit = fit_power_law(&series, &settings.power)?;
    let l_opt_ci = if settings.n_boot > 0 {
        Some(bca_ci_with(
            &series,
            &l_fit,
            settings.n_boot,
            settings.alpha,
            settings.seed,
            settings.residuals,
        )?)
    } else {
        None
    };
    Ok(FrontierResult {
        gamma: l_fit.beta,
        k: l_fit.b,
        e_c: l_fit.e,
        a: fit_n.slope,
        n0: fit_n.intercept.exp(),
        b: fit_d.slope,
        d0: fit_d.intercept.exp(),
        a_plus_b: fit_n.slope + fit_d.slope,
        r2_n: fit_n.r2,
        r2_d: fit_d.r2,
        n_samples: kept.len(),
        l_opt_fit: l_fit,
        l_opt_ci,
    })
}

/// Frontier exponents implied by the additive form
/// `E + A N^{-α} + B D^{-β}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormFrontier {
    pub gamma: f64,
    pub a: f64,
    pub b: f64,
}

pub fn closed_form_exponents(alpha: f64, beta: f64) -> ClosedFormFrontier {
    assert!(alpha > 0.0 && beta > 0.0, "exponents must be positive");
    let s = alpha + beta;
    ClosedFormFrontier {
        gamma: alpha * beta / s,
        a: beta / s,
        b: alpha / s,
    }
}

pub fn closed_form_frontier(fit: &ChinchillaFit) -> ClosedFormFrontier {
    closed_form_exponents(fit.alpha, fit.beta)
}
