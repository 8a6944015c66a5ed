//! Repeated random train/validation splits comparing surface fitting methods.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::parametric::loss_mse;
use super::{
    fit_chinchilla_2d, fit_kaplan_2d, fit_kernel_surface, fit_mlp_surface, slices_by_n,
    ChinchillaGrid, KernelSettings, MlpSettings, SurfaceModel, SurfacePoint,
};
use crate::powerfit::{fit_power_law, FitSettings, PowerLawFit};
use crate::{rng, Error, Result};

/// A fitting method entered into [`compare_fits`].
#[derive(Debug, Clone)]
pub enum FitMethod {
    /// Independent `L(D)` power laws per model size.
    OneD(FitSettings),
    Chinchilla {
        delta: f64,
        grid: ChinchillaGrid,
    },
    Kaplan {
        delta: f64,
    },
    Kernel(KernelSettings),
    Mlp(MlpSettings),
}

impl FitMethod {
    pub fn name(&self) -> &'static str {
        match self {
            FitMethod::OneD(_) => "1d",
            FitMethod::Chinchilla { .. } => "chinchilla_2d",
            FitMethod::Kaplan { .. } => "kaplan_2d",
            FitMethod::Kernel(_) => "kernel",
            FitMethod::Mlp(_) => "mlp",
        }
    }

    /// The five methods with their default settings.
    pub fn all_default() -> Vec<FitMethod> {
        vec![
            FitMethod::OneD(FitSettings::default()),
            FitMethod::Chinchilla {
                delta: super::DEFAULT_LOG_DELTA,
                grid: ChinchillaGrid::default(),
            },
            FitMethod::Kaplan {
                delta: super::DEFAULT_LOG_DELTA,
            },
            FitMethod::Kernel(KernelSettings::default()),
            FitMethod::Mlp(MlpSettings::default()),
        ]
    }
}

/// Per-model-size `L(D)_N` fits used as a piecewise surface.
#[derive(Debug, Clone)]
pub struct SliceFits {
    fits: BTreeMap<u64, PowerLawFit>,
}

impl SliceFits {
    /// Fits every slice that has enough points; slices whose fit fails are
    /// left out.
    pub fn fit(points: &[SurfacePoint], settings: &FitSettings) -> Result<Self> {
        let fits: BTreeMap<u64, PowerLawFit> = slices_by_n(points)
            .into_iter()
            .filter_map(|(n, s)| fit_power_law(&s, settings).ok().map(|f| (n.to_bits(), f)))
            .collect();
        if fits.is_empty() {
            return Err(Error::fit("no model-size slice could be fitted"));
        }
        Ok(SliceFits { fits })
    }

    /// `None` if no fit exists for this exact model size.
    pub fn predict(&self, n: f64, d: f64) -> Option<f64> {
        self.fits.get(&n.to_bits()).map(|f| f.predict(d))
    }

    pub fn len(&self) -> usize {
        self.fits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fits.is_empty()
    }
}

/// Training and validation error of one method over all splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodMse {
    pub train_mse_mean: f64,
    pub val_mse_mean: f64,
    pub n_failures: usize,
    #[serde(skip)]
    pub train_mse: Vec<f64>,
    #[serde(skip)]
    pub val_mse: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MseReport {
    pub n_splits: usize,
    pub train_fraction: f64,
    pub seed: u64,
    pub methods: BTreeMap<String, MethodMse>,
}

/// Train/validation MSE of one method on one split, or `None` when the fit
/// failed or no validation point could be predicted.
fn score(method: &FitMethod, train: &[SurfacePoint], val: &[SurfacePoint]) -> Option<(f64, f64)> {
    let model = match method {
        FitMethod::OneD(s) => {
            let fits = SliceFits::fit(train, s).ok()?;
            let mse_on = |pts: &[SurfacePoint]| {
                let errs: Vec<f64> = pts
                    .iter()
                    .filter_map(|p| fits.predict(p.n, p.d).map(|y| (y - p.loss).powi(2)))
                    .collect();
                (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64)
            };
            return Some((mse_on(train)?, mse_on(val)?));
        }
        FitMethod::Chinchilla { delta, grid } => {
            SurfaceModel::Chinchilla(fit_chinchilla_2d(train, *delta, grid).ok()?)
        }
        FitMethod::Kaplan { delta } => SurfaceModel::Kaplan(fit_kaplan_2d(train, *delta).ok()?),
        FitMethod::Kernel(s) => SurfaceModel::Kernel(fit_kernel_surface(train, s).ok()?),
        FitMethod::Mlp(s) => SurfaceModel::Mlp(fit_mlp_surface(train, s).ok()?),
    };
    let tr = loss_mse(train, |n, d| model.predict(n, d));
    let va = loss_mse(val, |n, d| model.predict(n, d));
    (tr.is_finite() && va.is_finite()).then_some((tr, va))
}

/// Shuffle the points with a per-split stream and cut the first
/// `round(train_fraction · len)` into the training set.
pub fn split_indices(
    len: usize,
    train_fraction: f64,
    seed: u64,
    split: usize,
) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..len).collect();
    idx.shuffle(&mut rng::stream(seed, split as u64));
    let n_train = ((train_fraction * len as f64).round() as usize).clamp(1, len.saturating_sub(1));
    let val = idx.split_off(n_train);
    (idx, val)
}

/// Fit every method on `n_splits` random splits. Results are independent of
/// the thread count.
pub fn compare_fits(
    points: &[SurfacePoint],
    methods: &[FitMethod],
    n_splits: usize,
    train_fraction: f64,
    seed: u64,
) -> Result<MseReport> {
    if points.len() < 2 {
        return Err(Error::invalid("need at least two points to split"));
    }
    if n_splits == 0 || !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid(
            "need n_splits ≥ 1 and train_fraction in (0, 1)",
        ));
    }
    let per_split: Vec<Vec<Option<(f64, f64)>>> = (0..n_splits)
        .into_par_iter()
        .map(|s| {
            let (tr, va) = split_indices(points.len(), train_fraction, seed, s);
            let train: Vec<SurfacePoint> = tr.iter().map(|&i| points[i]).collect();
            let val: Vec<SurfacePoint> = va.iter().map(|&i| points[i]).collect();
            methods.par_iter().map(|m| score(m, &train, &val)).collect()
        })
        .collect();
    let mut out = BTreeMap::new();
    for (k, m) in methods.iter().enumerate() {
        let ok: Vec<(f64, f64)> = per_split.iter().filter_map(|r| r[k]).collect();
        let train_mse: Vec<f64> = ok.iter().map(|r| r.0).collect();
        let val_mse: Vec<f64> = ok.iter().map(|r| r.1).collect();
        let avg = |v: &[f64]| {
            if v.is_empty() {
                f64::NAN
            } else {
                v.iter().sum::<f64>() / v.len() as f64
            }
        };
        out.insert(
            m.name().to_string(),
            MethodMse {
                train_mse_mean: avg(&train_mse),
                val_mse_mean: avg(&val_mse),
                n_failures: n_splits - ok.len(),
                train_mse,
                val_mse,
            },
        );
    }
    Ok(MseReport {
        n_splits,
        train_fraction,
        seed,
        methods: out,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stats::logspace;

    fn chinchilla_points(noise: f64, seed: u64) -> Vec<SurfacePoint> {
        use rand_distr::{Distribution, Normal};
        let mut r = rng::root(seed);
        let z = Normal::new(0.0, 1.0).unwrap();
        let mut pts = Vec::new();
        for n in logspace(1e7, 1e9, 5) {
            for d in logspace(1e8, 1e11, 6) {
                let loss = 1.7 + 400.0 * n.powf(-0.34) + 410.0 * d.powf(-0.28);
                pts.push(SurfacePoint {
                    n,
                    d,
                    loss: loss * (1.0 + noise * z.sample(&mut r)),
                });
            }
        }
        pts
    }

    #[test]
    fn splits_partition_and_are_reproducible() {
        let (a, b) = split_indices(50, 0.8, 7, 3);
        assert_eq!(a.len(), 40);
        assert_eq!(b.len(), 10);
        let mut all: Vec<usize> = a.iter().chain(&b).copied().collect();
        all.sort();
        assert_eq!(all, (0..50).collect::<Vec<_>>());
        assert_eq!(split_indices(50, 0.8, 7, 3), (a.clone(), b));
        assert_ne!(split_indices(50, 0.8, 7, 4).0, a);
    }

    #[test]
    fn clean_data_favours_the_generating_form() {
        let pts = chinchilla_points(0.0, 1);
        let methods = vec![
            FitMethod::Chinchilla {
                delta: 1e-3,
                grid: ChinchillaGrid::default(),
            },
            FitMethod::OneD(FitSettings::default()),
        ];
        let rep = compare_fits(&pts, &methods, 3, 0.8, 5).unwrap();
        let c = &rep.methods["chinchilla_2d"];
        assert_eq!(c.n_failures, 0);
        assert!(c.val_mse_mean < 1e-8, "{c:?}");
        assert_eq!(rep.methods.len(), 2);
    }

    #[test]
    fn report_json_has_the_documented_fields() {
        let m = MethodMse {
            train_mse_mean: 1.0,
            val_mse_mean: 2.0,
            n_failures: 0,
            train_mse: vec![1.0],
            val_mse: vec![2.0],
        };
        let v = serde_json::to_value(&m).unwrap();
        let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
        assert_eq!(keys, ["n_failures", "train_mse_mean", "val_mse_mean"]);
    }
}
