//! Two-dimensional loss surfaces `L(N, D)`: the loss table, parametric
//! fits, kernel and neural-network regressions, and method comparison.

mod compare;
mod kernel;
mod mlp;
mod normalize;
mod parametric;
mod table;

use serde::{Deserialize, Serialize};

pub use compare::{compare_fits, split_indices, FitMethod, MethodMse, MseReport, SliceFits};
pub use kernel::{fit_kernel_surface, AnovaKernel, KernelSettings, KernelSurface};
pub use mlp::{fit_mlp_surface, MlpSettings, MlpSurface};
pub use normalize::Normalizer;
pub use parametric::{
    fit_chinchilla_2d, fit_kaplan_2d, ChinchillaFit, ChinchillaGrid, KaplanFit, DEFAULT_LOG_DELTA,
};
pub use table::{
    slices_by_d, slices_by_n, LossRow, LossTable, ParamAxis, SurfacePoint, LOSS_TABLE_COLUMNS,
};

/// Anything that predicts a loss from model size and token count.
pub trait Surface {
    fn predict(&self, n: f64, d: f64) -> f64;
}

impl<F: Fn(f64, f64) -> f64> Surface for F {
    fn predict(&self, n: f64, d: f64) -> f64 {
        self(n, d)
    }
}

/// A fitted surface of any supported kind.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SurfaceModel {
    Chinchilla(ChinchillaFit),
    Kaplan(KaplanFit),
    Kernel(KernelSurface),
    Mlp(MlpSurface),
}

impl SurfaceModel {
    pub fn name(&self) -> &'static str {
        match self {
            SurfaceModel::Chinchilla(_) => "chinchilla",
            SurfaceModel::Kaplan(_) => "kaplan",
            SurfaceModel::Kernel(_) => "kernel",
            SurfaceModel::Mlp(_) => "mlp",
        }
    }

    pub fn predict(&self, n: f64, d: f64) -> f64 {
        match self {
            SurfaceModel::Chinchilla(f) => f.predict(n, d),
            SurfaceModel::Kaplan(f) => f.predict(n, d),
            SurfaceModel::Kernel(f) => f.predict(n, d),
            SurfaceModel::Mlp(f) => f.predict(n, d),
        }
    }
}

impl Surface for SurfaceModel {
    fn predict(&self, n: f64, d: f64) -> f64 {
        SurfaceModel::predict(self, n, d)
    }
}
