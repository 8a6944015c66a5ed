//! Model diagnostics and baseline sweeps for the command line.

use std::io::Write;

use serde::Serialize;

use crate::baseline::{
    expected_cse, expected_mse, mc_counting_loss, walk_baseline_cse, CseOrder, Distribution,
    LossKind, McSource,
};
use crate::graph::TransitionModel;
use crate::walk::{diagnostics, ranked_distributions, ModelDiagnostics, RankedDistribution};
use crate::{Error, Result};

pub fn cmd_diagnostics(
    model: &TransitionModel,
) -> Result<(ModelDiagnostics, Vec<RankedDistribution>)> {
    Ok((diagnostics(model)?, ranked_distributions(model)?))
}

/// One row of a baseline sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BaselineRow {
    #[serde(rename = "D")]
    pub d: u64,
    pub analytic: f64,
    pub mc_mean: f64,
    pub mc_stderr: f64,
}

/// What the counting learner is trained on.
#[derive(Debug, Clone, Copy)]
pub enum BaselineTarget<'a> {
    Iid {
        pi: &'a Distribution,
        loss: LossKind,
        order: CseOrder,
    },
    Walk(&'a TransitionModel),
}

/// Analytic prediction and Monte-Carlo estimate at each `D`.
pub fn baseline_sweep(
    target: BaselineTarget<'_>,
    ds: &[u64],
    n_trials: usize,
    smoothing: f64,
    seed: u64,
) -> Result<Vec<BaselineRow>> {
    ds.iter()
        .enumerate()
        .map(|(i, &d)| {
            let trial_seed = crate::rng::derive_seed(seed, i as u64);
            let (analytic, mc) = match target {
                BaselineTarget::Iid { pi, loss, order } => {
                    let analytic = match loss {
                        LossKind::Mse => expected_mse(pi, d as f64),
                        LossKind::Cse => expected_cse(pi, d as f64, order)?,
                    };
                    (
                        analytic,
                        mc_counting_loss(
                            McSource::Iid(pi),
                            d,
                            loss,
                            n_trials,
                            smoothing,
                            trial_seed,
                        )?,
                    )
                }
                BaselineTarget::Walk(model) => (
                    walk_baseline_cse(model, d as f64)?,
                    mc_counting_loss(
                        McSource::Walk(model),
                        d,
                        LossKind::Cse,
                        n_trials,
                        smoothing,
                        trial_seed,
                    )?,
                ),
            };
            Ok(BaselineRow {
                d,
                analytic,
                mc_mean: mc.mean,
                mc_stderr: mc.stderr,
            })
        })
        .collect()
}

pub fn write_baseline_csv<W: Write>(out: W, rows: &[BaselineRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r).map_err(|e| Error::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Format(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Graph;

    #[test]
    fn cycle_sweep_matches_closed_form() {
        let model = TransitionModel::unbiased(&Graph::cycle(5).unwrap()).unwrap();
        let rows = baseline_sweep(BaselineTarget::Walk(&model), &[100, 200], 50, 1e-3, 1).unwrap();
        for r in &rows {
            let exact = 2f64.ln() + 5.0 / (2.0 * r.d as f64);
            assert!((r.analytic - exact).abs() < 1e-12);
        }
        let mut buf = Vec::new();
        write_baseline_csv(&mut buf, &rows).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("D,analytic,mc_mean,mc_stderr\n"));
        assert_eq!(text.lines().count(), 3);
    }
}
