//! Robust power-law fit of a noisy learning curve with BCa bootstrap
//! intervals, compared against an exponential baseline.
//!
//! ```bash
//! cargo run --release --example fit_power_law
//! ```

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use scalinglab::powerfit::{
    bca_ci, fit_exponential, fit_power_law, mse_ratio, FitSettings, Series1D,
};
use scalinglab::stats::logspace;

fn main() -> scalinglab::Result<()> {
    let (e, b, beta) = (1.5, 400.0, 0.45);
    let noise = Normal::new(0.0, 0.01).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let xs = logspace(1e6, 1e9, 12);
    let ys: Vec<f64> = xs
        .iter()
        .map(|x| e + b * x.powf(-beta) + noise.sample(&mut rng))
        .collect();
    let series = Series1D::new(xs, ys)?;

    let settings = FitSettings::default();
    let fit = fit_power_law(&series, &settings)?;
    println!(
        "fit: E = {:.4}, B = {:.3}, beta = {:.4} (true {e}, {b}, {beta})",
        fit.e, fit.b, fit.beta
    );

    let ci = bca_ci(&series, &fit, 1000, 0.05, 1)?;
    for p in &ci.params {
        println!(
            "  {:>4}: [{:.4}, {:.4}] stderr {:.4}",
            p.name, p.lo, p.hi, p.stderr
        );
    }

    let exp = fit_exponential(&series, &settings)?;
    println!("MSE ratio power/exponential: {:.3}", mse_ratio(&fit, &exp)?);

    // forcing E = 0 makes the exponent absorb the offset
    let no_offset = fit_power_law(
        &series,
        &FitSettings {
            fix_e_zero: true,
            ..settings
        },
    )?;
    println!("with E fixed at 0: beta = {:.4}", no_offset.beta);
    Ok(())
}
