//! File formats for graphs, bigram counts and transition models.
//!
//! * Graph edge list (text): header `#nodes=<n> edges=<E>`, then one edge
//!   per line, `u v` or `u v w_uv w_vu` for weighted graphs. Weighted files
//!   carry an extra `#kappa=<κ> k_min=<a> k_max=<b>` comment line.
//! * Bigram counts (text): `u v count` per line; an optional leading
//!   `#vocab=<V>` line fixes the vocabulary size (otherwise max id + 1).
//! * Transition model (binary, little-endian): magic `SLTM`, version `u16`,
//!   `V` as `u64`, row offsets `u64[V+1]`, column indices `u32[nnz]`,
//!   probabilities `f64[nnz]`, then `M` as `f64[V]`.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{BigramCounts, Graph, TransitionModel, WeightedGraph};
use crate::error::{Error, Result};

pub const MODEL_MAGIC: &[u8; 4] = b"SLTM";
pub const MODEL_VERSION: u16 = 1;

/// Contents of an edge-list file.
#[derive(Debug, Clone, PartialEq)]
pub enum GraphFile {
    Plain(Graph),
    Weighted(WeightedGraph),
}

impl GraphFile {
    pub fn graph(&self) -> &Graph {
        match self {
            GraphFile::Plain(g) => g,
            GraphFile::Weighted(wg) => wg.graph(),
        }
    }
}

pub fn write_graph<W: Write>(out: W, graph: &Graph) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "#nodes={} edges={}", graph.n_nodes(), graph.n_edges())?;
    for &(u, v) in graph.edges() {
        writeln!(out, "{u} {v}")?;
    }
    out.flush()
}

pub fn write_weighted_graph<W: Write>(out: W, wg: &WeightedGraph) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    let g = wg.graph();
    let (k_min, k_max) = wg.k_range();
    writeln!(out, "#nodes={} edges={}", g.n_nodes(), g.n_edges())?;
    writeln!(out, "#kappa={} k_min={k_min} k_max={k_max}", wg.kappa())?;
    for (&(u, v), &(a, b)) in g.edges().iter().zip(wg.weights()) {
        writeln!(out, "{u} {v} {a} {b}")?;
    }
    out.flush()
}

fn parse_kv<'a>(token: &'a str, key: &str) -> Option<&'a str> {
    token.strip_prefix(key)?.strip_prefix('=')
}

fn header_value<T: std::str::FromStr>(line: &str, key: &str) -> Option<T> {
    line.trim_start_matches('#')
        .split_whitespace()
        .find_map(|t| parse_kv(t, key))
        .and_then(|v| v.parse().ok())
}

pub fn read_graph<R: Read>(input: R) -> Result<GraphFile> {
    let reader = BufReader::new(input);
    let mut lines = reader.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Format("empty graph file".into()))?;
    let header = header.map_err(|e| Error::Format(e.to_string()))?;
    let n_nodes: usize = header_value(&header, "nodes")
        .ok_or_else(|| Error::Format(format!("bad graph header {header:?}")))?;
    let n_edges: usize = header_value(&header, "edges")
        .ok_or_else(|| Error::Format(format!("bad graph header {header:?}")))?;

    let mut kappa = 0.0;
    let mut k_range = (1u32, 1u32);
    let mut edges = Vec::with_capacity(n_edges);
    let mut weights = Vec::new();
    for (idx, line) in lines {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(k) = header_value(line, "kappa") {
                kappa = k;
                k_range = (
                    header_value(line, "k_min").unwrap_or(1),
                    header_value(line, "k_max").unwrap_or(1),
                );
            }
            continue;
        }
        let fields: Vec<u32> = line
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| Error::Format(format!("line {}: {e}", idx + 1)))?;
        match fields.as_slice() {
            [u, v] => edges.push((*u, *v)),
            [u, v, a, b] => {
                edges.push((*u, *v));
                weights.push((
                    (*u).min(*v),
                    (*u).max(*v),
                    if u < v { (*a, *b) } else { (*b, *a) },
                ));
            }
            _ => {
                return Err(Error::Format(format!(
                    "line {}: expected 2 or 4 fields",
                    idx + 1
                )))
            }
        }
    }
    if edges.len() != n_edges {
        return Err(Error::Format(format!(
            "header declares {n_edges} edges but {} were listed",
            edges.len()
        )));
    }
    let graph = Graph::new(n_nodes, edges)?;
    if weights.is_empty() {
        return Ok(GraphFile::Plain(graph));
    }
    if weights.len() != graph.n_edges() {
        return Err(Error::Format(
            "some edges carry weights and others do not".into(),
        ));
    }
    weights.sort_unstable_by_key(|&(u, v, _)| (u, v));
    let pairs = weights.into_iter().map(|(_, _, w)| w).collect();
    Ok(GraphFile::Weighted(WeightedGraph::from_parts(
        graph, pairs, kappa, k_range.0, k_range.1,
    )?))
}

pub fn write_bigram_counts<W: Write>(out: W, counts: &BigramCounts) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    writeln!(out, "#vocab={}", counts.vocab_size())?;
    for &(u, v, c) in counts.entries() {
        writeln!(out, "{u} {v} {c}")?;
    }
    out.flush()
}

pub fn read_bigram_counts<R: Read>(input: R) -> Result<BigramCounts> {
    let mut vocab: Option<usize> = None;
    let mut entries = Vec::new();
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line = line.map_err(|e| Error::Format(e.to_string()))?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if let Some(v) = header_value(line, "vocab") {
                vocab = Some(v);
            }
            continue;
        }
        let mut it = line.split_whitespace();
        let mut field = |name: &str| -> Result<u64> {
            it.next()
                .ok_or_else(|| Error::Format(format!("line {}: missing {name}", idx + 1)))?
                .parse::<u64>()
                .map_err(|e| Error::Format(format!("line {}: {name}: {e}", idx + 1)))
        };
        let (u, v, c) = (field("u")?, field("v")?, field("count")?);
        if u > u32::MAX as u64 || v > u32::MAX as u64 {
            return Err(Error::Format(format!(
                "line {}: token id overflows u32",
                idx + 1
            )));
        }
        entries.push((u as u32, v as u32, c));
    }
    let vocab = vocab.unwrap_or_else(|| {
        entries
            .iter()
            .map(|&(u, v, _)| u.max(v) as usize + 1)
            .max()
            .unwrap_or(0)
    });
    BigramCounts::new(vocab, entries)
}

pub fn write_model<W: Write>(out: W, model: &TransitionModel) -> std::io::Result<()> {
    let mut out = BufWriter::new(out);
    out.write_all(MODEL_MAGIC)?;
    out.write_all(&MODEL_VERSION.to_le_bytes())?;
    out.write_all(&(model.n_nodes() as u64).to_le_bytes())?;
    for &o in model.row_offsets() {
        out.write_all(&o.to_le_bytes())?;
    }
    for &c in model.cols() {
        out.write_all(&c.to_le_bytes())?;
    }
    for &p in model.probs() {
        out.write_all(&p.to_le_bytes())?;
    }
    for &m in model.initial() {
        out.write_all(&m.to_le_bytes())?;
    }
    out.flush()
}

pub(crate) fn read_exact_array<R: Read, const N: usize>(input: &mut R) -> Result<[u8; N]> {
    let mut buf = [0u8; N];
    input
        .read_exact(&mut buf)
        .map_err(|e| Error::Format(format!("truncated binary file: {e}")))?;
    Ok(buf)
}

pub fn read_model<R: Read>(input: R) -> Result<TransitionModel> {
    let mut input = BufReader::new(input);
    let magic: [u8; 4] = read_exact_array(&mut input)?;
    if &magic != MODEL_MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}, expected SLTM")));
    }
    let version = u16::from_le_bytes(read_exact_array(&mut input)?);
    if version != MODEL_VERSION {
        return Err(Error::Format(format!(
            "unsupported model version {version}"
        )));
    }
    let n = u64::from_le_bytes(read_exact_array(&mut input)?) as usize;
    let mut offsets = Vec::with_capacity(n + 1);
    for _ in 0..=n {
        offsets.push(u64::from_le_bytes(read_exact_array(&mut input)?));
    }
    let nnz = *offsets.last().unwrap() as usize;
    let mut cols = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        cols.push(u32::from_le_bytes(read_exact_array(&mut input)?));
    }
    let mut probs = Vec::with_capacity(nnz);
    for _ in 0..nnz {
        probs.push(f64::from_le_bytes(read_exact_array(&mut input)?));
    }
    let mut initial = Vec::with_capacity(n);
    for _ in 0..n {
        initial.push(f64::from_le_bytes(read_exact_array(&mut input)?));
    }
    TransitionModel::from_csr(offsets, cols, probs, initial)
}

pub fn save_model(path: &Path, model: &TransitionModel) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_model(file, model).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<TransitionModel> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_model(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{
        assign_weights, build_bigram_model, build_transition_model, gen_erdos_renyi,
    };

    #[test]
    fn graph_text_round_trip() {
        let g = gen_erdos_renyi(40, 100, 1).unwrap();
        let mut buf = Vec::new();
        write_graph(&mut buf, &g).unwrap();
        assert!(String::from_utf8_lossy(&buf).starts_with("#nodes=40 edges=100\n"));
        assert_eq!(read_graph(&buf[..]).unwrap(), GraphFile::Plain(g.clone()));

        let wg = assign_weights(g, 1.0, 1, 1000, 3).unwrap();
        let mut buf = Vec::new();
        write_weighted_graph(&mut buf, &wg).unwrap();
        assert_eq!(read_graph(&buf[..]).unwrap(), GraphFile::Weighted(wg));
    }

    #[test]
    fn graph_text_errors() {
        assert!(read_graph(&b""[..]).is_err());
        assert!(read_graph(&b"#nodes=3 edges=2\n0 1\n"[..]).is_err());
        assert!(read_graph(&b"#nodes=3 edges=1\n0 x\n"[..]).is_err());
        let reversed = read_graph(&b"#nodes=3 edges=1\n2 0 7 5\n"[..]).unwrap();
        match reversed {
            GraphFile::Weighted(wg) => assert_eq!(wg.weights(), &[(5, 7)]),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn bigram_text_round_trip() {
        let counts = BigramCounts::new(10, [(0, 3, 4), (9, 1, 2)]).unwrap();
        let mut buf = Vec::new();
        write_bigram_counts(&mut buf, &counts).unwrap();
        assert_eq!(read_bigram_counts(&buf[..]).unwrap(), counts);
        let inferred = read_bigram_counts(&b"0 3 4\n2 1 1\n"[..]).unwrap();
        assert_eq!(inferred.vocab_size(), 4);
        assert!(read_bigram_counts(&b"0 3\n"[..]).is_err());
    }

    #[test]
    fn model_binary_layout_and_round_trip() {
        let g = gen_erdos_renyi(30, 90, 2).unwrap();
        if g.degrees().contains(&0) {
            return;
        }
        let wg = assign_weights(g, 1.0, 1, 50, 1).unwrap();
        let model = build_transition_model(&wg).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        assert_eq!(&buf[..4], b"SLTM");
        assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
        assert_eq!(u64::from_le_bytes(buf[6..14].try_into().unwrap()), 30);
        let expected = 4 + 2 + 8 + 8 * 31 + 12 * model.nnz() + 8 * 30;
        assert_eq!(buf.len(), expected);
        assert_eq!(read_model(&buf[..]).unwrap(), model);

        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(read_model(&bad[..]).is_err());
        assert!(read_model(&buf[..buf.len() - 1]).is_err());
    }

    #[test]
    fn bigram_model_with_restart_rows_round_trips() {
        let counts = BigramCounts::from_tokens(3, &[0, 1, 0, 1, 0, 2]).unwrap();
        let model = build_bigram_model(&counts, 0).unwrap();
        let mut buf = Vec::new();
        write_model(&mut buf, &model).unwrap();
        assert_eq!(read_model(&buf[..]).unwrap(), model);
    }
}
