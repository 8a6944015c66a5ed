//! Expected loss of a counting estimator against Monte-Carlo simulation, for
//! i.i.d. samples and for random walks.
//!
//! ```bash
//! cargo run --release --example counting_baselines
//! ```

use scalinglab::baseline::{
    cse_prediction, expected_mse, mc_counting_loss, walk_baseline_cse, CseOrder, Distribution,
    LossKind, McSource, DEFAULT_SMOOTHING,
};
use scalinglab::graph::{Graph, TransitionModel};

fn main() -> scalinglab::Result<()> {
    let pi = Distribution::uniform(16);
    let pred = cse_prediction(&pi, CseOrder::Second)?;
    println!(
        "uniform V=16: S = {:.4}, 1/D coefficient {:.3}, 1/D^2 coefficient {:.3}",
        pred.leading, pred.coeff_1, pred.coeff_2
    );
    println!("{:>6} {:>10} {:>10} {:>9}", "D", "analytic", "MC", "stderr");
    for d in [250u64, 1000, 4000, 16_000] {
        let mc = mc_counting_loss(
            McSource::Iid(&pi),
            d,
            LossKind::Cse,
            2000,
            DEFAULT_SMOOTHING,
            d,
        )?;
        println!(
            "{d:>6} {:>10.6} {:>10.6} {:>9.2e}",
            pred.value_at(d as f64),
            mc.mean,
            mc.stderr
        );
    }

    let mse = mc_counting_loss(
        McSource::Iid(&pi),
        1000,
        LossKind::Mse,
        2000,
        DEFAULT_SMOOTHING,
        9,
    )?;
    println!(
        "MSE at D=1000: analytic {:.3e}, MC {:.3e}",
        expected_mse(&pi, 1000.0),
        mse.mean
    );

    // a walk on the 5-cycle: ln 2 + 5 / (2D)
    let cycle = TransitionModel::unbiased(&Graph::cycle(5)?)?;
    for d in [1000u64, 10_000] {
        let analytic = walk_baseline_cse(&cycle, d as f64)?;
        let mc = mc_counting_loss(
            McSource::Walk(&cycle),
            d,
            LossKind::Cse,
            500,
            DEFAULT_SMOOTHING,
            3,
        )?;
        println!(
            "5-cycle D={d}: analytic {analytic:.6}, MC {:.6} ± {:.1e}",
            mc.mean, mc.stderr
        );
    }
    Ok(())
}
