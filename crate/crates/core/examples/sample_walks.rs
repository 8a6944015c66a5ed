//! Sample random-walk sequences and check that their token frequencies
//! approach the stationary distribution.
//!
//! ```bash
//! cargo run --release --example sample_walks
//! ```

use scalinglab::graph::{gen_erdos_renyi, TransitionModel};
use scalinglab::walk::{
    io::write_walks, sample_walks, stationary, total_variation, validate_walks,
};

fn main() -> scalinglab::Result<()> {
    let graph = gen_erdos_renyi(1000, 5000, 7)?;
    let model = TransitionModel::unbiased(&graph)?;
    let pi = stationary(&model)?.probs;

    for n_seqs in [100, 1000, 10_000] {
        let ds = sample_walks(&model, 50, n_seqs, 11)?;
        validate_walks(&model, &ds)?;
        let tv = total_variation(&ds.unigram_frequencies(), &pi);
        println!(
            "{:>7} tokens: TV(empirical, stationary) = {tv:.4}",
            ds.total_tokens()
        );
    }

    let ds = sample_walks(&model, 50, 4, 11)?;
    for row in ds.rows() {
        let head: Vec<String> = row.iter().take(10).map(u32::to_string).collect();
        println!("{} ...", head.join(" "));
    }
    let mut buf = Vec::new();
    write_walks(&mut buf, &ds).expect("in-memory write");
    println!(
        "token-stream file for {} walks: {} bytes",
        ds.n_seqs(),
        buf.len()
    );
    Ok(())
}
