//! Sensitivity of a trained learner to the precision of the value function.

use crate::error::{Error, Result};
use crate::meta::eval::{evaluate, EvalConfig, EvalCurve, Learner};

#[derive(Clone, Debug)]
pub struct SweepPoint {
    pub vf_iters: usize,
    pub curve: EvalCurve,
    /// Mean residual Nash gap of the last value-function solve per game.
    pub solver_gap: f64,
}

/// Evaluates `learner` with `vf_iters` CFR+ iterations behind every
/// environment step, for each entry of `vf_iters_list`. Exploitability is
/// always measured at `base.game.eval_iters`.
pub fn precision_sweep(
    learner: &Learner,
    base: &EvalConfig,
    vf_iters_list: &[usize],
) -> Result<Vec<SweepPoint>> {
    if vf_iters_list.is_empty() || vf_iters_list.contains(&0) {
        return Err(Error::InvalidArgument(
            "precision sweep needs positive iteration counts".into(),
        ));
    }
    if !base.game.id.is_sequential() {
        return Err(Error::InvalidArgument(format!(
            "{} has no value function",
            base.game.id
        )));
    }
    vf_iters_list
        .iter()
        .map(|&iters| {
            let mut config = base.clone();
            config.game.vf_iters = iters;
            let run = evaluate(learner, &config)?;
            let gaps: Vec<f64> = run.runs.iter().filter_map(|r| r.solver_gap).collect();
            Ok(SweepPoint {
                vf_iters: iters,
                curve: run.curve,
                solver_gap: gaps.iter().sum::<f64>() / gaps.len().max(1) as f64,
            })
        })
        .collect()
}
