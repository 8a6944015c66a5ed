//! Turn a token stream into bigram counts and a transition model, dropping
//! rare bigrams.
//!
//! ```bash
//! cargo run --release --example bigram_model
//! ```

use scalinglab::graph::{build_bigram_model, BigramCounts};
use scalinglab::walk::diagnostics;

fn main() -> scalinglab::Result<()> {
    // "a b a b a c" with a=0, b=1, c=2
    let counts = BigramCounts::from_tokens(3, &[0, 1, 0, 1, 0, 2])?;
    let model = build_bigram_model(&counts, 0)?;
    println!(
        "p(b|a) = {:.4}, p(c|a) = {:.4}, p(a|b) = {:.4}",
        model.prob(0, 1),
        model.prob(0, 2),
        model.prob(1, 0)
    );
    println!("initial distribution M = {:?}", model.initial());
    // `c` has no outgoing bigram, so walks restart from M there
    println!("restart rows present: {}", model.has_restart_rows());

    // a longer pseudo-text with a frequency cutoff
    let tokens: Vec<u32> = (0..20_000u32).map(|i| (i * i + 3 * i) % 97 % 40).collect();
    let counts = BigramCounts::from_tokens(40, &tokens)?;
    let filtered = build_bigram_model(&counts, 5)?;
    println!(
        "{} distinct bigrams, {} kept with count > 5",
        counts.len(),
        filtered.nnz()
    );
    let d = diagnostics(&filtered)?;
    println!(
        "entropy rate {:.4} nats over a component of {} tokens",
        d.entropy_rate, d.component_size
    );
    Ok(())
}
