//! Fitting stages driven by an [`ExperimentConfig`]: 1d slices, 2d forms,
//! surface regressions, frontier extraction, method comparison.

use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{FitConfig, SurfaceChoice};
use super::gen::write_json;
use crate::frontier::{
    closed_form_frontier, fit_frontier, sample_frontier, ClosedFormFrontier, FrontierFitSettings,
    FrontierGrid, FrontierResult, FrontierSamples,
};
use crate::powerfit::{
    bca_ci_with, fit_exponential, fit_power_law, summarize_exponents, summarize_exponents_trimmed, Axis,
    ExponentSummary, FitReport, PowerLawFit, Series1D,
};
use crate::rng::derive_seed;
use crate::surface::{
    compare_fits, fit_chinchilla_2d, fit_kaplan_2d, fit_kernel_surface, fit_mlp_surface,
    slices_by_d, slices_by_n, ChinchillaFit, FitMethod, KaplanFit, MseReport, SurfaceModel,
    SurfacePoint,
};
use crate::{Error, Result};

/// Outcome of one fit inside a report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "status", content = "reason", rename_all = "snake_case")]
pub enum FitStatus {
    Ok,
    Failed(String),
    Skipped(String),
}

impl FitStatus {
    pub fn is_failure(&self) -> bool {
        matches!(self, FitStatus::Failed(_))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SliceResult {
    /// Value of the held-fixed variable.
    pub fixed: f64,
    pub n_points: usize,
    #[serde(flatten)]
    pub status: FitStatus,
    pub report: Option<FitReport>,
    #[serde(skip)]
    pub fit: Option<PowerLawFit>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OneDReport {
    /// `D`: exponents of `L(D)_N` slices; `N`: of `L(N)_D` slices.
    pub axis: Axis,
    pub slices: Vec<SliceResult>,
    pub summary: Option<ExponentSummary>,
    pub trimmed_summary: Option<ExponentSummary>,
}

impl OneDReport {
    pub fn fits(&self) -> Vec<PowerLawFit> {
        self.slices.iter().filter_map(|s| s.fit.clone()).collect()
    }

    pub fn any_failed(&self) -> bool {
        self.slices.iter().any(|s| s.status.is_failure())
    }

    /// `fixed,x,loss,fit` rows for plotting each slice with its fit.
    pub fn write_panel_csv<W: Write>(&self, points: &[SurfacePoint], out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let (fixed_name, x_name) = match self.axis {
            Axis::D => ("N", "D"),
            Axis::N => ("D", "N"),
        };
        let fmt_err = |e: csv::Error| Error::Format(e.to_string());
        w.write_record([fixed_name, x_name, "loss", "fit"])
            .map_err(fmt_err)?;
        let slices = match self.axis {
            Axis::D => slices_by_n(points),
            Axis::N => slices_by_d(points),
        };
        for (fixed, series) in slices {
            let fit = self
                .slices
                .iter()
                .find(|s| s.fixed == fixed)
                .and_then(|s| s.fit.as_ref());
            for (&x, &y) in series.xs().iter().zip(series.ys()) {
                let pred = fit.map_or(String::new(), |f| format!("{}", f.predict(x)));
                w.write_record([format!("{fixed:e}"), format!("{x:e}"), format!("{y}"), pred])
                    .map_err(fmt_err)?;
            }
        }
        w.flush().map_err(|e| Error::Format(e.to_string()))
    }
}

fn fit_slice(fixed: f64, series: &Series1D, cfg: &FitConfig, seed: u64) -> SliceResult {
    let n_points = series.len();
    if n_points < cfg.min_slice_points {
        return SliceResult {
            fixed,
            n_points,
            status: FitStatus::Skipped(format!("{n_points} points, need {}", cfg.min_slice_points)),
            report: None,
            fit: None,
        };
    }
    let settings = crate::powerfit::FitSettings {
        seed,
        ..cfg.power.clone()
    };
    let run = || -> Result<(PowerLawFit, FitReport)> {
        let fit = fit_power_law(series, &settings)?;
        let exp = fit_exponential(series, &settings).ok();
        let ci = if cfg.n_boot > 0 {
            Some(bca_ci_with(
                series,
                &fit,
                cfg.n_boot,
                cfg.alpha,
                derive_seed(seed, 1),
                cfg.bootstrap_residuals,
            )?)
        } else {
            None
        };
        let report = FitReport::new(&fit, ci.as_ref(), exp.as_ref(), &settings);
        Ok((fit, report))
    };
    match run() {
        Ok((fit, report)) => SliceResult {
            fixed,
            n_points,
            status: FitStatus::Ok,
            report: Some(report),
            fit: Some(fit),
        },
        Err(e) => SliceResult {
            fixed,
            n_points,
            status: FitStatus::Failed(e.to_string()),
            report: None,
            fit: None,
        },
    }
}

/// Fit every slice along `axis` (`Axis::D` fits `L(D)_N` for each `N`).
pub fn fit_1d(points: &[SurfacePoint], axis: Axis, cfg: &FitConfig, seed: u64) -> OneDReport {
    let slices = match axis {
        Axis::D => slices_by_n(points),
        Axis::N => slices_by_d(points),
    };
    let results: Vec<SliceResult> = slices
        .par_iter()
        .enumerate()
        .map(|(i, (fixed, series))| fit_slice(*fixed, series, cfg, derive_seed(seed, i as u64)))
        .collect();
    let fits: Vec<PowerLawFit> = results.iter().filter_map(|s| s.fit.clone()).collect();
    OneDReport {
        axis,
        summary: summarize_exponents(&fits, axis).ok(),
        trimmed_summary: summarize_exponents_trimmed(&fits, axis, cfg.trim_extreme).ok(),
        slices: results,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TwoDReport {
    pub chinchilla_status: FitStatus,
    pub chinchilla: Option<ChinchillaFit>,
    pub closed_form_frontier: Option<ClosedFormFrontier>,
    pub kaplan_status: FitStatus,
    pub kaplan: Option<KaplanFit>,
}

pub fn fit_2d(points: &[SurfacePoint], cfg: &FitConfig) -> TwoDReport {
    let (chinchilla_status, chinchilla) =
        match fit_chinchilla_2d(points, cfg.surface_delta, &cfg.chinchilla_grid) {
            Ok(f) => (FitStatus::Ok, Some(f)),
            Err(e) => (FitStatus::Failed(e.to_string()), None),
        };
    let (kaplan_status, kaplan) = match fit_kaplan_2d(points, cfg.surface_delta) {
        Ok(f) => (FitStatus::Ok, Some(f)),
        Err(e) => (FitStatus::Failed(e.to_string()), None),
    };
    TwoDReport {
        closed_form_frontier: chinchilla
            .as_ref()
            .filter(|f| f.alpha > 0.0 && f.beta > 0.0)
            .map(closed_form_frontier),
        chinchilla_status,
        chinchilla,
        kaplan_status,
        kaplan,
    }
}

/// Fit the surface used for frontier extraction.
pub fn fit_surface(
    points: &[SurfacePoint],
    choice: SurfaceChoice,
    cfg: &FitConfig,
    seed: u64,
) -> Result<SurfaceModel> {
    Ok(match choice {
        SurfaceChoice::Chinchilla => SurfaceModel::Chinchilla(fit_chinchilla_2d(
            points,
            cfg.surface_delta,
            &cfg.chinchilla_grid,
        )?),
        SurfaceChoice::Kaplan => SurfaceModel::Kaplan(fit_kaplan_2d(points, cfg.surface_delta)?),
        SurfaceChoice::Kernel => SurfaceModel::Kernel(fit_kernel_surface(points, &cfg.kernel)?),
        SurfaceChoice::Mlp => {
            let settings = crate::surface::MlpSettings {
                seed: derive_seed(seed, 7),
                ..cfg.mlp.clone()
            };
            SurfaceModel::Mlp(fit_mlp_surface(points, &settings)?)
        }
    })
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FrontierReport {
    pub surface: String,
    pub result: FrontierResult,
    #[serde(skip)]
    pub samples: Option<FrontierSamples>,
}

pub fn fit_frontier_stage(
    points: &[SurfacePoint],
    cfg: &FitConfig,
    seed: u64,
) -> Result<FrontierReport> {
    let surface = fit_surface(points, cfg.frontier_surface, cfg, seed)?;
    let mut grid = FrontierGrid::from_points(points, cfg.frontier_grid_points)?;
    grid.clip = cfg.frontier_clip;
    let samples = sample_frontier(&surface, &grid)?;
    let result = fit_frontier(
        &samples,
        &FrontierFitSettings {
            power: cfg.power.clone(),
            n_boot: cfg.frontier_n_boot,
            alpha: cfg.alpha,
            seed: derive_seed(seed, 8),
            residuals: cfg.bootstrap_residuals,
        },
    )?;
    Ok(FrontierReport {
        surface: surface.name().to_string(),
        result,
        samples: Some(samples),
    })
}

/// All five methods with the configured settings.
pub fn configured_methods(cfg: &FitConfig, seed: u64) -> Vec<FitMethod> {
    vec![
        FitMethod::OneD(crate::powerfit::FitSettings {
            seed,
            ..cfg.power.clone()
        }),
        FitMethod::Chinchilla {
            delta: cfg.surface_delta,
            grid: cfg.chinchilla_grid.clone(),
        },
        FitMethod::Kaplan {
            delta: cfg.surface_delta,
        },
        FitMethod::Kernel(cfg.kernel.clone()),
        FitMethod::Mlp(crate::surface::MlpSettings {
            seed: derive_seed(seed, 7),
            ..cfg.mlp.clone()
        }),
    ]
}

pub fn compare_stage(points: &[SurfacePoint], cfg: &FitConfig, seed: u64) -> Result<MseReport> {
    compare_fits(
        points,
        &configured_methods(cfg, seed),
        cfg.compare_splits,
        cfg.train_fraction,
        seed,
    )
}

/// Everything `report` writes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FullReport {
    pub n_points: usize,
    pub one_d_by_n: OneDReport,
    pub one_d_by_d: OneDReport,
    pub two_d: TwoDReport,
    pub frontier_status: FitStatus,
    pub frontier: Option<FrontierReport>,
    pub compare: Option<MseReport>,
    pub all_converged: bool,
}

/// Run every fitting stage and write JSON reports and panel CSVs to `dir`.
pub fn cmd_fit(
    points: &[SurfacePoint],
    cfg: &FitConfig,
    seed: u64,
    with_compare: bool,
    dir: &Path,
) -> Result<FullReport> {
    let one_d_by_n = fit_1d(points, Axis::D, cfg, derive_seed(seed, 10));
    let one_d_by_d = fit_1d(points, Axis::N, cfg, derive_seed(seed, 11));
    let two_d = fit_2d(points, cfg);
    let (frontier_status, frontier) = match fit_frontier_stage(points, cfg, derive_seed(seed, 12)) {
        Ok(f) => (FitStatus::Ok, Some(f)),
        Err(e) => (FitStatus::Failed(e.to_string()), None),
    };
    let compare = if with_compare {
        Some(compare_stage(points, cfg, derive_seed(seed, 13))?)
    } else {
        None
    };
    let all_converged = !one_d_by_n.any_failed()
        && !one_d_by_d.any_failed()
        && !two_d.chinchilla_status.is_failure()
        && !two_d.kaplan_status.is_failure()
        && !frontier_status.is_failure();
    let report = FullReport {
        n_points: points.len(),
        one_d_by_n,
        one_d_by_d,
        two_d,
        frontier_status,
        frontier,
        compare,
        all_converged,
    };
    write_outputs(&report, points, dir)?;
    Ok(report)
}

fn write_outputs(report: &FullReport, points: &[SurfacePoint], dir: &Path) -> Result<()> {
    let create = |name: &str| {
        let path = dir.join(name);
        std::fs::File::create(&path).map_err(|e| Error::io(path, e))
    };
    write_json(&dir.join("report.json"), report)?;
    report
        .one_d_by_n
        .write_panel_csv(points, create("panel_loss_vs_d.csv")?)?;
    report
        .one_d_by_d
        .write_panel_csv(points, create("panel_loss_vs_n.csv")?)?;
    if let Some(s) = report.frontier.as_ref().and_then(|f| f.samples.as_ref()) {
        s.write_csv(create("frontier.csv")?)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::logspace;

    fn points() -> Vec<SurfacePoint> {
        let mut pts = Vec::new();
        for n in logspace(1e7, 1e9, 5) {
            for d in logspace(1e8, 1e11, 6) {
                pts.push(SurfacePoint {
                    n,
                    d,
                    loss: 1.7 + 400.0 * n.powf(-0.34) + 410.0 * d.powf(-0.28),
                });
            }
        }
        pts
    }

    fn quick() -> FitConfig {
        FitConfig {
            n_boot: 0,
            frontier_n_boot: 0,
            frontier_surface: SurfaceChoice::Chinchilla,
            ..Default::default()
        }
    }

    #[test]
    fn one_d_recovers_common_exponent() {
        let r = fit_1d(&points(), Axis::D, &quick(), 1);
        assert_eq!(r.slices.len(), 5);
        let s = r.summary.clone().unwrap();
        assert!((s.mean - 0.28).abs() < 1e-4 && s.std < 1e-4, "{s:?}");
        assert!(!r.any_failed());
    }

    #[test]
    fn short_slices_are_skipped_not_failed() {
        let mut cfg = quick();
        cfg.min_slice_points = 10;
        let r = fit_1d(&points(), Axis::D, &cfg, 1);
        assert!(r
            .slices
            .iter()
            .all(|s| matches!(s.status, FitStatus::Skipped(_))));
        assert!(r.summary.is_none() && !r.any_failed());
    }

    #[test]
    fn full_report_writes_files() {
        let dir = tempfile::tempdir().unwrap();
        let rep = cmd_fit(&points(), &quick(), 3, false, dir.path()).unwrap();
        assert!(rep.all_converged, "{:?}", rep.frontier_status);
        for f in [
            "report.json",
            "panel_loss_vs_d.csv",
            "panel_loss_vs_n.csv",
            "frontier.csv",
        ] {
            assert!(dir.path().join(f).is_file(), "{f}");
        }
        let text = std::fs::read_to_string(dir.path().join("report.json")).unwrap();
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["two_d"]["chinchilla_status"]["status"], "ok");
        let cf = rep.two_d.closed_form_frontier.unwrap();
        let fr = rep.frontier.unwrap().result;
        assert!((cf.gamma - fr.gamma).abs() < 0.01);
    }
}
