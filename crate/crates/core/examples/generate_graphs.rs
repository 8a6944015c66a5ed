//! Generate the two graph ensembles, attach power-law weights, and build
//! their transition models.
//!
//! ```bash
//! cargo run --release --example generate_graphs
//! ```

use scalinglab::graph::{
    assign_weights, barabasi_albert_edge_count, build_transition_model, gen_barabasi_albert,
    gen_erdos_renyi,
    io::{read_model, write_model},
};

fn main() -> scalinglab::Result<()> {
    let er = gen_erdos_renyi(8192, 53_292, 1)?;
    let degrees = er.degrees();
    let max_deg = degrees.iter().max().copied().unwrap_or(0);
    println!(
        "ER: {} nodes, {} edges, max degree {max_deg}, connected: {}",
        er.n_nodes(),
        er.n_edges(),
        er.is_connected()
    );

    // the attachment count whose edge count matches 49,131 for 8192 nodes
    let m = (1..20)
        .find(|&m| barabasi_albert_edge_count(8192, m) == 49_131)
        .unwrap();
    let ba = gen_barabasi_albert(8192, m, 2)?;
    let max_ba = ba.degrees().into_iter().max().unwrap_or(0);
    println!("BA (m = {m}): {} edges, max degree {max_ba}", ba.n_edges());

    for kappa in [0.0, 1.0, 2.0] {
        let k_max = if kappa > 0.0 { 1000 } else { 1 };
        let wg = assign_weights(er.clone(), kappa, 1, k_max, 3)?;
        let model = build_transition_model(&wg)?;
        println!(
            "kappa = {kappa}: {} transitions, max row-sum error {:.1e}",
            model.nnz(),
            model.max_row_sum_error()
        );
    }

    // binary round trip
    let model = build_transition_model(&assign_weights(er, 1.0, 1, 1000, 4)?)?;
    let mut buf = Vec::new();
    write_model(&mut buf, &model).expect("in-memory write");
    assert_eq!(read_model(buf.as_slice())?, model);
    println!("model file: {} bytes", buf.len());
    Ok(())
}
