//! Randomised invariants across the graph, walk, baseline, fitting, surface
//! and frontier modules.

use proptest::prelude::*;

use scalinglab::baseline::{cse_prediction, expected_mse, CseOrder, Distribution};
use scalinglab::frontier::{closed_form_exponents, fit_frontier, sample_frontier, FrontierFitSettings, FrontierGrid};
use scalinglab::graph::{assign_weights, build_transition_model, gen_erdos_renyi, TransitionModel};
use scalinglab::powerfit::{bca_interval, fit_exponential, fit_power_law, FitSettings, Series1D};
use scalinglab::stats::{fit_line, logspace, quantile};
use scalinglab::surface::{
    fit_kernel_surface, fit_mlp_surface, split_indices, KernelSettings, MlpSettings, Normalizer, SurfacePoint,
};
use scalinglab::walk::{diagnostics, ranked_distributions, sample_walks, validate_walks};

/// `None` when the sampled graph has an isolated node, which transition
/// models reject.
fn weighted_er(n: usize, m: usize, kappa: f64, seed: u64) -> Option<TransitionModel> {
    let g = gen_erdos_renyi(n, m, seed).unwrap();
    if g.degrees().contains(&0) {
        return None;
    }
    let k_range = if kappa > 0.0 { (1, 1000) } else { (1, 1) };
    Some(build_transition_model(&assign_weights(g, kappa, k_range.0, k_range.1, seed + 1).unwrap()).unwrap())
}

/// Small ER sizes with `m` at most the number of vertex pairs.
fn er_size() -> impl Strategy<Value = (usize, usize)> {
    (5usize..60).prop_flat_map(|n| {
        let max = n * (n - 1) / 2;
        (Just(n), n.min(max)..=max.min(4 * n))
    })
}

fn grid_points(f: impl Fn(f64, f64) -> f64) -> Vec<SurfacePoint> {
    let mut pts = Vec::new();
    for n in logspace(1e6, 1e9, 5) {
        for d in logspace(1e8, 1e11, 5) {
            pts.push(SurfacePoint { n, d, loss: f(n, d) });
        }
    }
    pts
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn er_graph_is_simple_with_exact_edge_count((n, m) in er_size(), seed in any::<u64>()) {
        let g = gen_erdos_renyi(n, m, seed).unwrap();
        prop_assert_eq!(g.n_edges(), m);
        let mut seen = std::collections::HashSet::new();
        for &(u, v) in g.edges() {
            prop_assert!(u != v);
            prop_assert!((u as usize) < n && (v as usize) < n);
            prop_assert!(seen.insert((u.min(v), u.max(v))));
        }
    }

    #[test]
    fn transition_rows_are_stochastic((n, m) in er_size(), kappa in 0.0f64..3.0, seed in 0u64..1000) {
        let Some(model) = weighted_er(n, m, kappa, seed) else { return Ok(()) };
        prop_assert!(model.max_row_sum_error() <= 1e-12);
        prop_assert!((model.initial().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        prop_assert!(model.probs().iter().all(|&p| p >= 0.0));
    }

    #[test]
    fn walks_are_legal_and_thread_independent(
        (n, m) in er_size(), kappa in 0.0f64..2.0, seed in 0u64..1000, seq_len in 2usize..40,
    ) {
        let Some(model) = weighted_er(n, m, kappa, seed) else { return Ok(()) };
        let ds = sample_walks(&model, seq_len, 16, seed).unwrap();
        validate_walks(&model, &ds).unwrap();
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let again = single.install(|| sample_walks(&model, seq_len, 16, seed).unwrap());
        prop_assert_eq!(ds.tokens(), again.tokens());
    }

    #[test]
    fn entropy_rate_below_stationary_entropy((n, m) in er_size(), kappa in 0.0f64..3.0, seed in 0u64..1000) {
        let Some(model) = weighted_er(n, m, kappa, seed) else { return Ok(()) };
        let d = diagnostics(&model).unwrap();
        prop_assert!(d.entropy_rate <= d.stationary_entropy + 1e-9);
        prop_assert!(d.spectral_gap >= -1e-9 && d.spectral_gap <= 1.0 + 1e-9);
    }

    #[test]
    fn ranked_distributions_are_monotone((n, m) in er_size(), kappa in 0.0f64..3.0, seed in 0u64..1000) {
        let Some(model) = weighted_er(n, m, kappa, seed) else { return Ok(()) };
        for dist in ranked_distributions(&model).unwrap() {
            prop_assert!(dist.probs.windows(2).all(|w| w[0] >= w[1]));
            prop_assert!(dist.total() <= 1.0 + 1e-9);
        }
    }

    #[test]
    fn cse_baseline_bounds_and_slope(weights in prop::collection::vec(0.05f64..1.0, 2..20)) {
        let pi = Distribution::from_weights(&weights).unwrap();
        let first = cse_prediction(&pi, CseOrder::First).unwrap();
        let s = pi.entropy();
        prop_assert!(first.coeff_1 >= 0.0);
        let ds = [1e2, 1e3, 1e4, 1e5];
        for &d in &ds {
            prop_assert!(first.value_at(d) >= s);
        }
        let xs: Vec<f64> = ds.iter().map(|d| d.ln()).collect();
        let ys: Vec<f64> = ds.iter().map(|&d| (first.value_at(d) - s).ln()).collect();
        prop_assert!((fit_line(&xs, &ys).slope + 1.0).abs() < 1e-9);
    }

    #[test]
    fn mse_baseline_vanishes_on_one_hot(v in 2usize..50, at in 0usize..50, d in 1.0f64..1e6) {
        prop_assert_eq!(expected_mse(&Distribution::one_hot(v, at % v), d), 0.0);
    }

    #[test]
    fn bca_reduces_to_percentile(draws in prop::collection::vec(-5.0f64..5.0, 100..300), alpha in 0.01f64..0.3) {
        // t_hat above exactly half the draws and a flat jackknife give z0 = a = 0
        let mut sorted = draws.clone();
        sorted.sort_by(f64::total_cmp);
        let mut even = sorted.clone();
        if even.len() % 2 == 1 {
            even.pop();
        }
        let half = even.len() / 2;
        prop_assume!(even[half - 1] < even[half]);
        let t_hat = 0.5 * (even[half - 1] + even[half]);
        let (lo, hi, z0, a) = bca_interval(&even, t_hat, &[1.0, 1.0, 1.0], alpha);
        prop_assert_eq!(z0, 0.0);
        prop_assert_eq!(a, 0.0);
        prop_assert_eq!(lo, quantile(&even, alpha / 2.0));
        prop_assert_eq!(hi, quantile(&even, 1.0 - alpha / 2.0));
    }

    #[test]
    fn normalizer_round_trips(ns in prop::collection::vec(1e3f64..1e12, 3..20), seed in 0u64..100) {
        let pts: Vec<SurfacePoint> = ns
            .iter()
            .enumerate()
            .map(|(i, &n)| SurfacePoint { n, d: n * (1.0 + (i as f64 + seed as f64)), loss: 1.0 })
            .collect();
        let norm = Normalizer::fit(&pts).unwrap();
        for p in &pts {
            let (n, d) = norm.denormalize(norm.normalize(p.n, p.d));
            prop_assert!(((n - p.n) / p.n).abs() < 1e-12);
            prop_assert!(((d - p.d) / p.d).abs() < 1e-12);
        }
    }

    #[test]
    fn splits_are_deterministic(len in 2usize..500, frac in 0.05f64..0.95, seed in any::<u64>(), split in 0usize..50) {
        let (tr, va) = split_indices(len, frac, seed, split);
        prop_assert_eq!((tr.clone(), va.clone()), split_indices(len, frac, seed, split));
        prop_assert!(!tr.is_empty() && !va.is_empty());
        let mut all: Vec<usize> = tr.into_iter().chain(va).collect();
        all.sort_unstable();
        prop_assert_eq!(all, (0..len).collect::<Vec<_>>());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn noiseless_power_law_recovery(e in 0.0f64..3.0, b in 0.5f64..50.0, beta in 0.1f64..1.5) {
        let xs = logspace(1.0, 1e4, 12);
        let ys: Vec<f64> = xs.iter().map(|x| e + b * x.powf(-beta)).collect();
        let fit = fit_power_law(&Series1D::new(xs, ys).unwrap(), &FitSettings::default()).unwrap();
        prop_assert!((fit.e - e).abs() < 1e-6, "E {} vs {}", fit.e, e);
        prop_assert!((fit.beta - beta).abs() < 1e-6, "beta {} vs {}", fit.beta, beta);
        prop_assert!(((fit.b - b) / b).abs() < 1e-6, "B {} vs {}", fit.b, b);
    }

    #[test]
    fn noiseless_exponential_recovery(a in 0.0f64..3.0, b in 0.5f64..5.0, c in 0.05f64..1.0) {
        let xs: Vec<f64> = (1..=12).map(f64::from).collect();
        let ys: Vec<f64> = xs.iter().map(|x| a + b * (-c * x).exp()).collect();
        let fit = fit_exponential(&Series1D::new(xs, ys).unwrap(), &FitSettings::default()).unwrap();
        prop_assert!((fit.a - a).abs() < 1e-6, "a {} vs {}", fit.a, a);
        prop_assert!(((fit.b - b) / b).abs() < 1e-6, "b {} vs {}", fit.b, b);
        prop_assert!(((fit.c - c) / c).abs() < 1e-6, "c {} vs {}", fit.c, c);
    }

    #[test]
    fn huber_reduces_to_least_squares(seed in 0u64..1000) {
        use rand::Rng;
        let mut rng = scalinglab::rng::root(seed);
        let xs = logspace(1.0, 1000.0, 12);
        let ys: Vec<f64> = xs.iter().map(|x| 1.0 + 2.0 * x.powf(-0.5) + rng.random_range(-0.01..0.01)).collect();
        let series = Series1D::new(xs, ys).unwrap();
        let robust = fit_power_law(&series, &FitSettings { delta: Some(1.0), ..FitSettings::default() }).unwrap();
        let ols = fit_power_law(&series, &FitSettings { delta: Some(1e6), ..FitSettings::default() }).unwrap();
        prop_assert!((robust.e - ols.e).abs() < 1e-8);
        prop_assert!((robust.beta - ols.beta).abs() < 1e-8);
        prop_assert!(((robust.b - ols.b) / ols.b).abs() < 1e-8);
    }

    #[test]
    fn pivot_does_not_change_the_fit(seed in 0u64..1000) {
        use rand::Rng;
        let mut rng = scalinglab::rng::root(seed);
        let xs = logspace(10.0, 1e5, 10);
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 + 5.0 * x.powf(-0.4) + rng.random_range(-0.005..0.005)).collect();
        let series = Series1D::new(xs, ys).unwrap();
        let base = fit_power_law(&series, &FitSettings::default()).unwrap();
        let moved = fit_power_law(&series, &FitSettings { pivot: Some(2.0 * base.x0), ..FitSettings::default() }).unwrap();
        prop_assert!((base.e - moved.e).abs() < 1e-8);
        prop_assert!((base.beta - moved.beta).abs() < 1e-8);
        prop_assert!(((base.b - moved.b) / base.b).abs() < 1e-8);
    }

    #[test]
    fn fixing_e_at_zero_lowers_the_exponent(e in 0.2f64..3.0, b in 1.0f64..20.0, beta in 0.2f64..1.2) {
        let xs = logspace(1.0, 1e4, 12);
        let ys: Vec<f64> = xs.iter().map(|x| e + b * x.powf(-beta)).collect();
        let series = Series1D::new(xs, ys).unwrap();
        let free = fit_power_law(&series, &FitSettings::default()).unwrap();
        let fixed = fit_power_law(&series, &FitSettings { fix_e_zero: true, ..FitSettings::default() }).unwrap();
        prop_assert!(fixed.beta < free.beta, "{} !< {}", fixed.beta, free.beta);
    }

    #[test]
    fn frontier_matches_closed_form(alpha in 0.2f64..0.6, beta in 0.2f64..0.6) {
        // B chosen so the optimum passes through the centre of the grid
        let (nc, dc) = (10f64.powf(7.5), 10f64.powf(9.5));
        let a_coef = 400.0;
        let b_coef = alpha * a_coef * nc.powf(-alpha) * dc.powf(beta) / beta;
        let surface = move |n: f64, d: f64| 1.7 + a_coef * n.powf(-alpha) + b_coef * d.powf(-beta);
        let grid = FrontierGrid::from_points(&grid_points(surface), 100).unwrap();
        let samples = sample_frontier(&surface, &grid).unwrap();
        let settings = FrontierFitSettings { n_boot: 0, ..FrontierFitSettings::default() };
        let fit = fit_frontier(&samples, &settings).unwrap();
        let exact = closed_form_exponents(alpha, beta);
        prop_assert!((fit.a - exact.a).abs() < 0.01, "a {} vs {}", fit.a, exact.a);
        prop_assert!((fit.b - exact.b).abs() < 0.01, "b {} vs {}", fit.b, exact.b);
        prop_assert!((fit.gamma - exact.gamma).abs() < 0.01, "gamma {} vs {}", fit.gamma, exact.gamma);
        prop_assert!((fit.a_plus_b - 1.0).abs() < 0.05);
        let l: Vec<f64> = samples.unflagged().map(|s| s.l_opt).collect();
        prop_assert!(l.windows(2).all(|w| w[1] < w[0]));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(4))]

    #[test]
    fn learned_surfaces_ignore_rescaled_inputs(cn in 1e-3f64..1e3, cd in 1e-3f64..1e3) {
        let pts = grid_points(|n, d| 1.8 + 400.0 * n.powf(-0.34) + 410.0 * d.powf(-0.28));
        let scaled: Vec<SurfacePoint> =
            pts.iter().map(|p| SurfacePoint { n: cn * p.n, d: cd * p.d, loss: p.loss }).collect();
        let ks = KernelSettings::default();
        let (k0, k1) = (fit_kernel_surface(&pts, &ks).unwrap(), fit_kernel_surface(&scaled, &ks).unwrap());
        let ms = MlpSettings { width: 16, max_epochs: 300, ..MlpSettings::default() };
        let (m0, m1) = (fit_mlp_surface(&pts, &ms).unwrap(), fit_mlp_surface(&scaled, &ms).unwrap());
        for (n, d) in [(3e6, 2e9), (1e8, 5e8), (7e8, 8e10)] {
            prop_assert!((k0.predict(n, d) - k1.predict(cn * n, cd * d)).abs() < 1e-6);
            prop_assert!((m0.predict(n, d) - m1.predict(cn * n, cd * d)).abs() < 1e-6);
        }
    }
}
