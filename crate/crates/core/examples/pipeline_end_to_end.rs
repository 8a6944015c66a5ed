//! Drive the whole pipeline from a TOML config: generate a walk dataset,
//! ingest a loss table, and write every fitting report.
//!
//! ```bash
//! cargo run --release --example pipeline_end_to_end
//! ```

use scalinglab::pipeline::{cmd_fit, cmd_gen_walks, load_table, ExperimentConfig};
use scalinglab::stats::logspace;
use scalinglab::surface::{LossRow, LossTable};

fn main() -> scalinglab::Result<()> {
    let dir = std::env::temp_dir().join("scalinglab-example");
    std::fs::create_dir_all(&dir).map_err(|e| scalinglab::Error::io(&dir, e))?;

    // a synthetic loss table standing in for training runs
    let mut rows = Vec::new();
    for (i, n) in logspace(1e6, 1e8, 4).into_iter().enumerate() {
        for (j, d) in logspace(1e7, 1e10, 6).into_iter().enumerate() {
            rows.push(LossRow {
                run_id: format!("n{i}-d{j}"),
                n_params_total: n.round(),
                n_params_nonembed: None,
                tokens: d.round(),
                loss: 2.3 + 30.0 * n.powf(-0.3) + 80.0 * d.powf(-0.3),
                dataset_tag: "er-1k".into(),
                arch_tag: "2l".into(),
                lr: None,
                seed: None,
            });
        }
    }
    let table_path = dir.join("losses.csv");
    let file =
        std::fs::File::create(&table_path).map_err(|e| scalinglab::Error::io(&table_path, e))?;
    LossTable::new(rows)?.write_csv(file)?;

    let config = ExperimentConfig::from_toml(&format!(
        r#"
        seed = 42
        output_dir = "{dir}"
        [graph]
        family = "erdos_renyi"
        n_nodes = 1000
        n_edges = 5000
        [walks]
        seq_len = 50
        n_seqs = 1000
        [table]
        path = "{table}"
        [fit]
        n_boot = 200
        frontier_surface = "chinchilla"
        "#,
        dir = dir.display(),
        table = table_path.display()
    ))?;

    let (walks, manifest) = cmd_gen_walks(&config)?;
    println!(
        "generated {} tokens; manifest lists {} files",
        walks.total_tokens(),
        manifest.files.len()
    );

    let (_, ingest, points) = load_table(&config)?;
    println!(
        "ingested {} rows into {} surface points",
        ingest.rows_kept,
        points.len()
    );
    let report = cmd_fit(&points, &config.fit, config.seed, false, &dir)?;
    if let Some(s) = &report.one_d_by_n.summary {
        println!("L(D) exponents per model size: {:?}", s.exponents);
    }
    if let Some(f) = &report.frontier {
        println!(
            "frontier: gamma {:.3}, a {:.3}, b {:.3}",
            f.result.gamma, f.result.a, f.result.b
        );
    }
    println!(
        "all fits converged: {}; reports in {}",
        report.all_converged,
        dir.display()
    );
    Ok(())
}
