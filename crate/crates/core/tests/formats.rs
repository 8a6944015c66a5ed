//! On-disk formats: exact headers, byte layouts and round trips.

use scalinglab::baseline::{CseOrder, Distribution};
use scalinglab::frontier::{sample_frontier, FrontierGrid};
use scalinglab::graph::io::{
    read_bigram_counts, read_graph, read_model, write_bigram_counts, write_graph, write_model,
    write_weighted_graph, GraphFile,
};
use scalinglab::graph::{assign_weights, build_transition_model, gen_erdos_renyi, BigramCounts};
use scalinglab::pipeline::{baseline_sweep, write_baseline_csv, BaselineTarget};
use scalinglab::powerfit::{fit_power_law, FitReport, FitSettings, Series1D};
use scalinglab::stats::logspace;
use scalinglab::surface::{
    compare_fits, FitMethod, LossRow, LossTable, SurfacePoint, LOSS_TABLE_COLUMNS,
};
use scalinglab::walk::io::{read_walks, write_walks, HEADER_LEN};
use scalinglab::walk::{ranked_distributions, sample_walks, write_ranked_csv};

fn first_line(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .next()
        .unwrap_or_default()
        .to_string()
}

fn first_data_line(bytes: &[u8]) -> String {
    String::from_utf8_lossy(bytes)
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap_or_default()
        .to_string()
}

fn small_model() -> scalinglab::graph::TransitionModel {
    let g = gen_erdos_renyi(30, 80, 5).unwrap();
    build_transition_model(&assign_weights(g, 1.0, 1, 100, 6).unwrap()).unwrap()
}

#[test]
fn graph_file_has_header_and_round_trips() {
    let g = gen_erdos_renyi(25, 60, 1).unwrap();
    let mut buf = Vec::new();
    write_graph(&mut buf, &g).unwrap();
    assert_eq!(first_line(&buf), "#nodes=25 edges=60");
    assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 61);
    match read_graph(buf.as_slice()).unwrap() {
        GraphFile::Plain(back) => assert_eq!(back, g),
        other => panic!("expected a plain graph, got {other:?}"),
    }

    let wg = assign_weights(g, 1.0, 1, 50, 2).unwrap();
    let mut buf = Vec::new();
    write_weighted_graph(&mut buf, &wg).unwrap();
    assert_eq!(first_line(&buf), "#nodes=25 edges=60");
    assert_eq!(first_data_line(&buf).split_whitespace().count(), 4);
    match read_graph(buf.as_slice()).unwrap() {
        GraphFile::Weighted(back) => assert_eq!(back.weights(), wg.weights()),
        other => panic!("expected a weighted graph, got {other:?}"),
    }
}

#[test]
fn bigram_counts_round_trip() {
    let counts = BigramCounts::new(4, [(0, 1, 7), (1, 2, 3), (3, 0, 11)]).unwrap();
    let mut buf = Vec::new();
    write_bigram_counts(&mut buf, &counts).unwrap();
    assert_eq!(first_data_line(&buf), "0 1 7");
    let back = read_bigram_counts(buf.as_slice()).unwrap();
    assert_eq!(back.entries(), counts.entries());
}

#[test]
fn model_binary_layout() {
    let model = small_model();
    let mut buf = Vec::new();
    write_model(&mut buf, &model).unwrap();
    let n = model.n_nodes();
    let nnz = model.nnz();
    assert_eq!(&buf[..4], b"SLTM");
    assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
    assert_eq!(u64::from_le_bytes(buf[6..14].try_into().unwrap()), n as u64);
    assert_eq!(buf.len(), 14 + 8 * (n + 1) + 4 * nnz + 8 * nnz + 8 * n);
    let back = read_model(buf.as_slice()).unwrap();
    assert_eq!(back, model);

    assert!(read_model(&buf[..buf.len() - 3]).is_err());
    let mut bad = buf.clone();
    bad[0] = b'X';
    assert!(read_model(bad.as_slice()).is_err());
}

#[test]
fn token_stream_layout() {
    let model = small_model();
    let ds = sample_walks(&model, 17, 9, 4).unwrap();
    let mut buf = Vec::new();
    write_walks(&mut buf, &ds).unwrap();
    assert_eq!(HEADER_LEN, 22);
    assert_eq!(&buf[..4], b"SLWK");
    assert_eq!(u16::from_le_bytes([buf[4], buf[5]]), 1);
    assert_eq!(u32::from_le_bytes(buf[6..10].try_into().unwrap()), 30);
    assert_eq!(u32::from_le_bytes(buf[10..14].try_into().unwrap()), 17);
    assert_eq!(u64::from_le_bytes(buf[14..22].try_into().unwrap()), 9);
    assert_eq!(buf.len(), 22 + 4 * 17 * 9);
    let first = u32::from_le_bytes(buf[22..26].try_into().unwrap());
    assert_eq!(first, ds.tokens()[0]);

    let back = read_walks(buf.as_slice()).unwrap();
    assert_eq!(back.tokens(), ds.tokens());
    assert_eq!(
        (back.seq_len(), back.n_seqs(), back.vocab_size()),
        (17, 9, 30)
    );

    assert!(read_walks(&buf[..buf.len() - 1]).is_err());
    let mut long = buf.clone();
    long.extend_from_slice(&[0, 0, 0, 0]);
    assert!(read_walks(long.as_slice()).is_err());
}

#[test]
fn loss_table_csv_header_and_round_trip() {
    let rows = vec![
        LossRow {
            run_id: "a".into(),
            n_params_total: 1.5e6,
            n_params_nonembed: Some(1.0e6),
            tokens: 2e8,
            loss: 3.25,
            dataset_tag: "er".into(),
            arch_tag: "2l".into(),
            lr: Some(3e-4),
            seed: Some(7),
        },
        LossRow {
            run_id: "b".into(),
            n_params_total: 3e6,
            n_params_nonembed: None,
            tokens: 4e8,
            loss: 3.0,
            dataset_tag: "er".into(),
            arch_tag: "2l".into(),
            lr: None,
            seed: None,
        },
    ];
    let table = LossTable::new(rows).unwrap();
    let mut buf = Vec::new();
    table.write_csv(&mut buf).unwrap();
    assert_eq!(
        first_line(&buf),
        "run_id,n_params_total,n_params_nonembed,tokens,loss,dataset_tag,arch_tag,lr,seed"
    );
    assert_eq!(first_line(&buf), LOSS_TABLE_COLUMNS.join(","));
    let back = LossTable::read_csv(buf.as_slice()).unwrap();
    assert_eq!(back, table);

    let swapped = String::from_utf8(buf)
        .unwrap()
        .replacen("tokens,loss", "loss,tokens", 1);
    assert!(LossTable::read_csv(swapped.as_bytes()).is_err());
}

#[test]
fn ranked_csv_header() {
    let dists = ranked_distributions(&small_model()).unwrap();
    let mut buf = Vec::new();
    write_ranked_csv(&mut buf, &dists).unwrap();
    assert_eq!(first_line(&buf), "rank,probability,kind");
}

#[test]
fn baseline_csv_header() {
    let pi = Distribution::uniform(4);
    let rows = baseline_sweep(
        BaselineTarget::Iid {
            pi: &pi,
            loss: scalinglab::baseline::LossKind::Cse,
            order: CseOrder::Second,
        },
        &[100, 200],
        20,
        0.5,
        1,
    )
    .unwrap();
    let mut buf = Vec::new();
    write_baseline_csv(&mut buf, &rows).unwrap();
    assert_eq!(first_line(&buf), "D,analytic,mc_mean,mc_stderr");
    assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 3);
}

fn chinchilla_points() -> Vec<SurfacePoint> {
    let mut pts = Vec::new();
    for n in logspace(1e6, 1e9, 6) {
        for d in logspace(1e8, 1e11, 6) {
            pts.push(SurfacePoint {
                n,
                d,
                loss: 1.8 + 400.0 * n.powf(-0.34) + 410.0 * d.powf(-0.28),
            });
        }
    }
    pts
}

#[test]
fn frontier_csv_header() {
    let pts = chinchilla_points();
    let grid = FrontierGrid::from_points(&pts, 20).unwrap();
    let surface = |n: f64, d: f64| 1.8 + 400.0 * n.powf(-0.34) + 410.0 * d.powf(-0.28);
    let samples = sample_frontier(&surface, &grid).unwrap();
    let mut buf = Vec::new();
    samples.write_csv(&mut buf).unwrap();
    assert_eq!(first_line(&buf), "C,L_opt,N_opt,D_opt,flagged");
    assert_eq!(String::from_utf8_lossy(&buf).lines().count(), 21);
}

#[test]
fn fit_report_json_keys() {
    let xs = logspace(1.0, 1000.0, 10);
    let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x.powf(-0.5)).collect();
    let series = Series1D::new(xs, ys).unwrap();
    let settings = FitSettings::default();
    let fit = fit_power_law(&series, &settings).unwrap();
    let report = FitReport::new(&fit, None, None, &settings);
    let v = serde_json::to_value(&report).unwrap();
    for key in [
        "params",
        "ci",
        "mse",
        "exp_baseline_mse",
        "mse_ratio",
        "n_boot",
        "settings",
    ] {
        assert!(v.get(key).is_some(), "missing {key}");
    }
    for key in ["E", "B", "beta"] {
        assert!(v["params"].get(key).is_some(), "missing params.{key}");
    }
}

#[test]
fn mse_report_json_keys() {
    let pts = chinchilla_points();
    let report = compare_fits(&pts, &[FitMethod::OneD(FitSettings::default())], 2, 0.8, 3).unwrap();
    let v = serde_json::to_value(&report).unwrap();
    let m = v["methods"]["1d"].as_object().unwrap();
    let mut keys: Vec<&str> = m.keys().map(String::as_str).collect();
    keys.sort_unstable();
    assert_eq!(keys, ["n_failures", "train_mse_mean", "val_mse_mean"]);
}
