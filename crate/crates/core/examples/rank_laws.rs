//! Rank-ordered unigram and bigram distributions of biased and unbiased walks.
//!
//! ```bash
//! cargo run --release --example rank_laws
//! ```

use scalinglab::graph::{
    assign_weights, build_transition_model, gen_barabasi_albert, gen_erdos_renyi, TransitionModel,
};
use scalinglab::stats::fit_line;
use scalinglab::walk::{
    mean_log_rank_profile, plateau_lengths, ranked_distributions, DistributionKind,
};

fn main() -> scalinglab::Result<()> {
    // scale-free degrees give a power-law unigram
    let ba = TransitionModel::unbiased(&gen_barabasi_albert(8192, 6, 1)?)?;
    let unigram = ranked_distributions(&ba)?
        .into_iter()
        .find(|d| d.kind == DistributionKind::Unigram)
        .unwrap();
    let (x, y): (Vec<f64>, Vec<f64>) = unigram.probs[..1000]
        .iter()
        .enumerate()
        .map(|(r, p)| (((r + 1) as f64).ln(), p.ln()))
        .unzip();
    println!("BA unigram rank exponent: {:.3}", -fit_line(&x, &y).slope);

    // unbiased ER: degrees repeat, so the unigram is a staircase
    let er = gen_erdos_renyi(8192, 53_292, 2)?;
    let flat = TransitionModel::unbiased(&er)?;
    let uni = &ranked_distributions(&flat)?[0];
    let plateaus = plateau_lengths(&uni.probs, 1e-9);
    println!(
        "ER kappa=0: {} plateaus, longest {}",
        plateaus.len(),
        plateaus.iter().max().unwrap()
    );

    // kappa = 1 transition probabilities are log-linear in rank
    let dense = gen_erdos_renyi(2000, 50_000, 3)?;
    let biased = build_transition_model(&assign_weights(dense, 1.0, 1, 1000, 4)?)?;
    if let Some(profile) = mean_log_rank_profile(&biased, 50) {
        let ranks: Vec<f64> = (1..=profile.len()).map(|r| r as f64).collect();
        let fit = fit_line(&ranks, &profile);
        println!(
            "kappa=1 degree-50 rows: log p vs rank slope {:.4}, R^2 {:.4}",
            fit.slope, fit.r2
        );
    }
    Ok(())
}
