//! Stationary distribution, spectral gap and entropy rate of small chains
//! and a random graph.
//!
//! ```bash
//! cargo run --release --example spectral_diagnostics
//! ```

use scalinglab::graph::{gen_erdos_renyi, Graph, TransitionModel};
use scalinglab::walk::diagnostics;

fn main() -> scalinglab::Result<()> {
    let cases = [
        ("K4", Graph::complete(4)),
        ("5-cycle", Graph::cycle(5)?),
        ("6-cycle (periodic)", Graph::cycle(6)?),
        ("ER 1000/5000", gen_erdos_renyi(1000, 5000, 1)?),
    ];
    for (name, g) in cases {
        let d = diagnostics(&TransitionModel::unbiased(&g)?)?;
        println!(
            "{name:>20}: |lambda2| = {:.6}, gap = {:.6}, entropy rate = {:.4} nats, S(pi) = {:.4}",
            d.lambda2_modulus, d.spectral_gap, d.entropy_rate, d.stationary_entropy
        );
    }

    // two disjoint triangles: diagnostics restrict to one component
    let split = Graph::new(6, [(0, 1), (1, 2), (0, 2), (3, 4), (4, 5), (3, 5)])?;
    let d = diagnostics(&TransitionModel::unbiased(&split)?)?;
    println!(
        "disconnected graph analysed on a component of {} nodes",
        d.component_size
    );
    Ok(())
}
