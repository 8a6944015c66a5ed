//! End-to-end orchestration: configuration, dataset generation, loss-table
//! ingestion, and fitting reports. The command-line binary is a thin layer
//! over these functions.

mod analysis;
mod config;
mod fit;
mod gen;
mod ingest;

pub use analysis::{
    baseline_sweep, cmd_diagnostics, write_baseline_csv, BaselineRow, BaselineTarget,
};
pub use config::{
    AxisChoice, ExperimentConfig, FitConfig, GraphFamily, GraphSpec, SchemaPreset, SurfaceChoice,
    TableSpec, WalkSpec,
};
pub use fit::{
    cmd_fit, compare_stage, configured_methods, fit_1d, fit_2d, fit_frontier_stage, fit_surface,
    FitStatus, FrontierReport, FullReport, OneDReport, SliceResult, TwoDReport,
};
pub use gen::{
    cmd_gen_graph, cmd_gen_walks, hash_file, FileEntry, GraphManifest, Manifest, WalkManifest,
    GRAPH_FILE, MANIFEST_FILE, MODEL_FILE, WALKS_FILE,
};
pub use ingest::{cmd_ingest, ingest_str, IngestReport, SchemaMap};

use crate::surface::{LossTable, SurfacePoint};
use crate::Result;

/// Ingest the table named in `config`, returning it with its `(N, D)`
/// points after hyperparameter minimisation.
pub fn load_table(
    config: &ExperimentConfig,
) -> Result<(LossTable, IngestReport, Vec<SurfacePoint>)> {
    let spec = config
        .table
        .as_ref()
        .ok_or_else(|| crate::Error::InvalidArgument("config has no [table] section".into()))?;
    let (table, report) = cmd_ingest(
        &spec.path,
        &SchemaMap::preset(spec.schema),
        spec.drop_largest,
    )?;
    let points = table.points(spec.axis.into())?;
    Ok((table, report, points))
}
