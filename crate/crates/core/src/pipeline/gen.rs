//! Dataset generation: graph, transition model, walks, and a manifest of
//! everything written.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::{ExperimentConfig, GraphFamily, GraphSpec};
use crate::graph::{self, io as gio, Graph, TransitionModel};
use crate::rng::derive_seed;
use crate::walk::{self, io as wio};
use crate::{Error, Result};

pub const GRAPH_FILE: &str = "graph.txt";
pub const MODEL_FILE: &str = "model.sltm";
pub const WALKS_FILE: &str = "walks.slwk";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileEntry {
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphManifest {
    pub spec: GraphSpec,
    pub n_nodes: usize,
    pub n_edges: Option<usize>,
    pub nnz: usize,
    pub kappa: f64,
    pub k_range: (u32, u32),
    pub graph_seed: u64,
    pub weight_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WalkManifest {
    pub seq_len: usize,
    pub n_seqs: usize,
    pub total_tokens: usize,
    pub walk_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub seed: u64,
    pub graph: Option<GraphManifest>,
    pub walks: Option<WalkManifest>,
    /// Keyed by file name relative to the output directory.
    pub files: BTreeMap<String, FileEntry>,
}

impl Manifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_json(path, self)
    }
}

pub(crate) fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn hash_file(path: &Path) -> Result<FileEntry> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileEntry {
        sha256: hex::encode(Sha256::digest(&bytes)),
        bytes: bytes.len() as u64,
    })
}

fn require_dir(dir: &Path) -> Result<()> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(Error::io(
            dir,
            std::io::Error::new(
                std::io::ErrorKind::NotFound,
                "output directory does not exist",
            ),
        ))
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

fn base_graph(spec: &GraphSpec, seed: u64) -> Result<Graph> {
    match spec.family {
        GraphFamily::ErdosRenyi => {
            let m = spec
                .n_edges
                .ok_or_else(|| Error::invalid("erdos_renyi graphs need n_edges"))?;
            graph::gen_erdos_renyi(spec.n_nodes, m, seed)
        }
        GraphFamily::BarabasiAlbert => {
            graph::gen_barabasi_albert(spec.n_nodes, spec.m_attach.unwrap_or(6), seed)
        }
        GraphFamily::Cycle => Graph::cycle(spec.n_nodes),
        GraphFamily::Complete => Ok(Graph::complete(spec.n_nodes)),
        GraphFamily::Bigram => unreachable!("bigram models have no base graph"),
    }
}

/// Build the graph and transition model described by `config.graph`,
/// write `graph.txt` (not for bigram models), `model.sltm` and the manifest.
pub fn cmd_gen_graph(config: &ExperimentConfig) -> Result<(TransitionModel, Manifest)> {
    let spec = config
        .graph
        .as_ref()
        .ok_or_else(|| Error::invalid("config has no [graph] section"))?;
    let dir = &config.output_dir;
    require_dir(dir)?;
    let graph_seed = derive_seed(config.seed, 1);
    let weight_seed = derive_seed(config.seed, 2);
    let mut files = BTreeMap::new();
    let (model, n_edges) = if spec.family == GraphFamily::Bigram {
        let path = spec
            .counts_path
            .as_ref()
            .ok_or_else(|| Error::invalid("bigram graphs need counts_path"))?;
        let counts = gio::read_bigram_counts(File::open(path).map_err(|e| Error::io(path, e))?)?;
        (graph::build_bigram_model(&counts, spec.min_count)?, None)
    } else {
        let g = base_graph(spec, graph_seed)?;
        let (k_min, k_max) = spec.k_range();
        let wg = graph::assign_weights(g, spec.kappa, k_min, k_max, weight_seed)?;
        let path = dir.join(GRAPH_FILE);
        gio::write_weighted_graph(create(&path)?, &wg).map_err(|e| Error::io(&path, e))?;
        files.insert(GRAPH_FILE.to_string(), hash_file(&path)?);
        let n_edges = wg.graph().n_edges();
        (graph::build_transition_model(&wg)?, Some(n_edges))
    };
    let model_path = dir.join(MODEL_FILE);
    gio::save_model(&model_path, &model)?;
    files.insert(MODEL_FILE.to_string(), hash_file(&model_path)?);
    let manifest = Manifest {
        seed: config.seed,
        graph: Some(GraphManifest {
            spec: spec.clone(),
            n_nodes: model.n_nodes(),
            n_edges,
            nnz: model.nnz(),
            kappa: spec.kappa,
            k_range: spec.k_range(),
            graph_seed,
            weight_seed,
        }),
        walks: None,
        files,
    };
    manifest.save(&dir.join(MANIFEST_FILE))?;
    Ok((model, manifest))
}

/// Sample walks from the model in the output directory, generating the
/// graph first if no model file exists yet.
pub fn cmd_gen_walks(config: &ExperimentConfig) -> Result<(walk::WalkDataset, Manifest)> {
    let spec = config
        .walks
        .as_ref()
        .ok_or_else(|| Error::invalid("config has no [walks] section"))?;
    let dir = &config.output_dir;
    require_dir(dir)?;
    let model_path = dir.join(MODEL_FILE);
    let manifest_path = dir.join(MANIFEST_FILE);
    let (model, mut manifest) = if model_path.is_file() && manifest_path.is_file() {
        (
            gio::load_model(&model_path)?,
            Manifest::load(&manifest_path)?,
        )
    } else {
        cmd_gen_graph(config)?
    };
    let walk_seed = derive_seed(config.seed, 3);
    let ds = walk::sample_walks(&model, spec.seq_len, spec.n_seqs, walk_seed)?;
    let path = dir.join(WALKS_FILE);
    wio::save_walks(&path, &ds)?;
    manifest
        .files
        .insert(WALKS_FILE.to_string(), hash_file(&path)?);
    manifest.walks = Some(WalkManifest {
        seq_len: spec.seq_len,
        n_seqs: spec.n_seqs,
        total_tokens: ds.total_tokens(),
        walk_seed,
    });
    manifest.save(&manifest_path)?;
    Ok((ds, manifest))
}
