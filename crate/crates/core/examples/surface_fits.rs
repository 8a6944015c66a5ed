//! Fit a two-dimensional loss surface with the parametric forms, kernel
//! regression and a small network, then compare them on random splits.
//!
//! ```bash
//! cargo run --release --example surface_fits
//! ```

use rand::SeedableRng;
use rand_distr::{Distribution, Normal};

use scalinglab::powerfit::FitSettings;
use scalinglab::stats::logspace;
use scalinglab::surface::{
    compare_fits, fit_chinchilla_2d, fit_kaplan_2d, fit_kernel_surface, fit_mlp_surface,
    ChinchillaGrid, FitMethod, KernelSettings, MlpSettings, SurfacePoint, DEFAULT_LOG_DELTA,
};

fn main() -> scalinglab::Result<()> {
    let noise = Normal::new(0.0, 0.005).unwrap();
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
    let mut points = Vec::new();
    for n in logspace(5e7, 1e10, 8) {
        for d in logspace(1e9, 3e11, 8) {
            let loss = 1.82 + 482.0 * n.powf(-0.347) + 2085.0 * d.powf(-0.367);
            points.push(SurfacePoint {
                n,
                d,
                loss: loss * (1.0 + noise.sample(&mut rng)),
            });
        }
    }

    let chin = fit_chinchilla_2d(&points, DEFAULT_LOG_DELTA, &ChinchillaGrid::default())?;
    println!(
        "additive form: E = {:.3}, alpha = {:.3}, beta = {:.3}, MSE {:.2e}",
        chin.e, chin.alpha, chin.beta, chin.train_mse
    );
    let kap = fit_kaplan_2d(&points, DEFAULT_LOG_DELTA)?;
    println!(
        "Kaplan form: alpha = {:.3}, beta = {:.3}, MSE {:.2e}",
        kap.alpha, kap.beta, kap.train_mse
    );
    let kernel = fit_kernel_surface(&points, &KernelSettings::default())?;
    println!("kernel: {} IRLS iterations", kernel.iterations);
    let mlp_settings = MlpSettings {
        width: 64,
        max_epochs: 2000,
        ..Default::default()
    };
    let mlp = fit_mlp_surface(&points, &mlp_settings)?;
    println!(
        "network: {} epochs, best loss {:.2e}",
        mlp.epochs_run, mlp.best_loss
    );

    let methods = vec![
        FitMethod::OneD(FitSettings::default()),
        FitMethod::Chinchilla {
            delta: DEFAULT_LOG_DELTA,
            grid: ChinchillaGrid::default(),
        },
        FitMethod::Kaplan {
            delta: DEFAULT_LOG_DELTA,
        },
        FitMethod::Kernel(KernelSettings::default()),
        FitMethod::Mlp(mlp_settings),
    ];
    let report = compare_fits(&points, &methods, 5, 0.8, 1)?;
    for (name, m) in &report.methods {
        println!(
            "{name:>14}: train {:.2e}  val {:.2e}  failures {}",
            m.train_mse_mean, m.val_mse_mean, m.n_failures
        );
    }
    Ok(())
}
