//! TOML experiment configuration.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::powerfit::{FitSettings, WildResiduals, MIN_BOOT};
use crate::surface::{ChinchillaGrid, KernelSettings, MlpSettings, ParamAxis, DEFAULT_LOG_DELTA};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GraphFamily {
    ErdosRenyi,
    BarabasiAlbert,
    Cycle,
    Complete,
    /// Transition model built from a bigram count file.
    Bigram,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphSpec {
    pub family: GraphFamily,
    #[serde(default)]
    pub n_nodes: usize,
    /// Edge count for Erdős–Rényi graphs.
    pub n_edges: Option<usize>,
    /// Edges per new node for Barabási–Albert graphs.
    pub m_attach: Option<usize>,
    #[serde(default)]
    pub kappa: f64,
    /// Weight range; defaults to `[1, 1000]` when `kappa > 0` and `[1, 1]`
    /// otherwise.
    pub k_range: Option<(u32, u32)>,
    pub counts_path: Option<PathBuf>,
    #[serde(default = "default_min_count")]
    pub min_count: u64,
}

fn default_min_count() -> u64 {
    5
}

impl GraphSpec {
    pub fn k_range(&self) -> (u32, u32) {
        self.k_range
            .unwrap_or(if self.kappa > 0.0 { (1, 1000) } else { (1, 1) })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkSpec {
    pub seq_len: usize,
    pub n_seqs: usize,
}

/// Where the loss table comes from and how it is cleaned.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub path: PathBuf,
    #[serde(default)]
    pub schema: SchemaPreset,
    #[serde(default)]
    pub drop_largest: usize,
    #[serde(default)]
    pub axis: AxisChoice,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemaPreset {
    /// The crate's own loss-table columns.
    #[default]
    Native,
    /// `Model Size,Training Tokens,Training FLOP,loss` as in the public
    /// Epoch AI extraction of the Chinchilla runs.
    Epoch,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisChoice {
    #[default]
    Total,
    NonEmbedding,
}

impl From<AxisChoice> for ParamAxis {
    fn from(a: AxisChoice) -> Self {
        match a {
            AxisChoice::Total => ParamAxis::Total,
            AxisChoice::NonEmbedding => ParamAxis::NonEmbedding,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SurfaceChoice {
    Chinchilla,
    Kaplan,
    Kernel,
    #[default]
    Mlp,
}

/// Every fitting constant, with the defaults used throughout the crate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FitConfig {
    pub power: FitSettings,
    /// Bootstrap replicates for 1d fits; 0 omits intervals.
    pub n_boot: usize,
    /// Residuals the wild bootstrap resamples, for 1d and frontier fits.
    pub bootstrap_residuals: WildResiduals,
    pub alpha: f64,
    /// Minimum points for a 1d slice to be fitted.
    pub min_slice_points: usize,
    /// Slices with the most extreme exponents dropped in the trimmed summary.
    pub trim_extreme: usize,
    pub surface_delta: f64,
    pub chinchilla_grid: ChinchillaGrid,
    pub kernel: KernelSettings,
    pub mlp: MlpSettings,
    pub frontier_surface: SurfaceChoice,
    pub frontier_grid_points: usize,
    pub frontier_clip: (f64, f64),
    pub frontier_n_boot: usize,
    pub compare_splits: usize,
    pub train_fraction: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig {
            power: FitSettings::default(),
            n_boot: 4000,
            bootstrap_residuals: WildResiduals::default(),
            alpha: 0.05,
            min_slice_points: 4,
            trim_extreme: 2,
            surface_delta: DEFAULT_LOG_DELTA,
            chinchilla_grid: ChinchillaGrid::default(),
            kernel: KernelSettings::default(),
            mlp: MlpSettings::default(),
            frontier_surface: SurfaceChoice::Mlp,
            frontier_grid_points: 100,
            frontier_clip: (0.1, 0.1),
            frontier_n_boot: 200,
            compare_splits: 20,
            train_fraction: 0.8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub output_dir: PathBuf,
    pub graph: Option<GraphSpec>,
    pub walks: Option<WalkSpec>,
    pub table: Option<TableSpec>,
    #[serde(default)]
    pub fit: FitConfig,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))
    }

    /// Parse a config file; relative paths inside it are resolved against
    /// the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        resolve(&mut cfg.output_dir);
        if let Some(t) = cfg.table.as_mut() {
            resolve(&mut t.path);
        }
        if let Some(p) = cfg.graph.as_mut().and_then(|g| g.counts_path.as_mut()) {
            resolve(p);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Format(e.to_string()))
    }

    /// Checks bootstrap sizes and that referenced input files exist.
    pub fn validate(&self) -> Result<()> {
        for (name, n) in [("n_boot", self.fit.n_boot), ("frontier_n_boot", self.fit.frontier_n_boot)] {
            if n != 0 && n < MIN_BOOT {
                return Err(Error::invalid(format!("fit.{name} must be 0 or at least {MIN_BOOT}, got {n}")));
            }
        }
        if let Some(t) = &self.table {
            if !t.path.is_file() {
                return Err(Error::io(
                    &t.path,
                    std::io::Error::new(std::io::ErrorKind::NotFound, "loss table not found"),
                ));
            }
        }
        if let Some(g) = &self.graph {
            if g.family == GraphFamily::Bigram {
                let p = g
                    .counts_path
                    .as_ref()
                    .ok_or_else(|| Error::invalid("bigram graphs need counts_path"))?;
                if !p.is_file() {
                    return Err(Error::io(
                        p,
                        std::io::Error::new(
                            std::io::ErrorKind::NotFound,
                            "bigram counts not found",
                        ),
                    ));
                }
            }
        }
        Ok(())
    }
}
