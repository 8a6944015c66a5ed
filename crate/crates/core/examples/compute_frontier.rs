//! Extract the compute-optimal frontier of a loss surface numerically and
//! compare with the closed form of the additive law.
//!
//! ```bash
//! cargo run --release --example compute_frontier
//! ```

use scalinglab::frontier::{
    closed_form_exponents, fit_frontier, sample_frontier, FrontierFitSettings, FrontierGrid,
};

fn main() -> scalinglab::Result<()> {
    let (alpha, beta) = (0.3473, 0.3672);
    let surface = move |n: f64, d: f64| 1.8172 + 482.01 * n.powf(-alpha) + 2085.43 * d.powf(-beta);
    let grid = FrontierGrid {
        n_range: (7e7, 1.6e10),
        d_range: (5e9, 5e11),
        grid_points: 100,
        clip: (0.1, 0.1),
    };
    let samples = sample_frontier(&surface, &grid)?;
    let flagged = samples.samples.iter().filter(|s| s.flagged).count();
    println!(
        "{} compute values, {flagged} flagged at the grid edge",
        samples.samples.len()
    );

    let r = fit_frontier(&samples, &FrontierFitSettings::default())?;
    let c = closed_form_exponents(alpha, beta);
    println!("gamma: numeric {:.4}, closed form {:.4}", r.gamma, c.gamma);
    println!("a:     numeric {:.4}, closed form {:.4}", r.a, c.a);
    println!("b:     numeric {:.4}, closed form {:.4}", r.b, c.b);
    if let Some(ci) = r.l_opt_ci.as_ref().and_then(|ci| ci.get("beta")) {
        println!("gamma 95% interval: [{:.4}, {:.4}]", ci.lo, ci.hi);
    }

    let mut csv = Vec::new();
    samples.write_csv(&mut csv)?;
    let text = String::from_utf8(csv).unwrap();
    for line in text.lines().take(4) {
        println!("{line}");
    }
    Ok(())
}
