//! Backprop against central finite differences over every parameter.

use std::sync::Arc;

use crate::env::Environment;
use crate::error::Result;
use crate::minimizers::MinimizerKind;
use crate::neural::network::{Block, NetworkParams};
use crate::neural::unroll::{backprop, frozen_objective, unroll_and_loss};

pub const FD_STEP: f64 = 1e-6;

/// Central differences of an objective of magnitude `f` carry round-off of
/// about `eps * f / FD_STEP`, around `1e-9 f` here. Gradient entries below
/// `REL_ERROR_FLOOR * max(|f|, 1)` are therefore compared in absolute terms
/// against that scale instead of their own magnitude.
pub const REL_ERROR_FLOOR: f64 = 1e-4;

#[derive(Clone, Debug)]
pub struct BlockReport {
    pub block: Block,
    pub max_rel_error: f64,
    /// Index within the block of the worst entry.
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug)]
pub struct GradCheckReport {
    pub max_rel_error: f64,
    pub blocks: Vec<BlockReport>,
    /// Parameters skipped because a perturbation switched an action of the
    /// positive-part clamp on or off (a non-differentiable point).
    pub skipped_nonsmooth: usize,
    pub checked: usize,
    pub loss: f64,
}

/// `|a - n| / max(|a|, |n|, floor)`.
pub fn relative_error(analytic: f64, numeric: f64, floor: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(floor)
}

/// Unrolls `params` on `env`, then compares the backprop gradient with
/// central differences of the same unroll replayed with its rewards and
/// network inputs frozen.
pub fn grad_check<E: Environment + ?Sized>(
    params: &NetworkParams,
    kind: MinimizerKind,
    env: &mut E,
    horizon: usize,
    delta_max: f64,
) -> Result<GradCheckReport> {
    let shared = Arc::new(params.clone());
    let (loss, trace) = unroll_and_loss(&shared, kind, env, horizon, delta_max)?;
    let analytic = backprop(&trace, params)?;
    let (objective, base_pattern) = frozen_objective(&trace, params)?;
    let floor = REL_ERROR_FLOOR * objective.abs().max(1.0);

    let mut probe = params.clone();
    let mut blocks = Vec::new();
    let mut skipped = 0;
    let mut checked = 0;
    for block in Block::ALL {
        let offset = block.offset(params.dims());
        let mut report = BlockReport {
            block,
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for k in 0..block.len(params.dims()) {
            let i = offset + k;
            let w = params.as_slice()[i];
            probe.as_mut_slice()[i] = w + FD_STEP;
            let (plus, pattern_plus) = frozen_objective(&trace, &probe)?;
            probe.as_mut_slice()[i] = w - FD_STEP;
            let (minus, pattern_minus) = frozen_objective(&trace, &probe)?;
            probe.as_mut_slice()[i] = w;
            if pattern_plus != base_pattern || pattern_minus != base_pattern {
                skipped += 1;
                continue;
            }
            checked += 1;
            let numeric = (plus - minus) / (2.0 * FD_STEP);
            let err = relative_error(analytic[i], numeric, floor);
            if err > report.max_rel_error || k == 0 {
                report = BlockReport {
                    block,
                    max_rel_error: err.max(report.max_rel_error),
                    worst_index: k,
                    analytic: analytic[i],
                    numeric,
                };
            }
        }
        blocks.push(report);
    }
    Ok(GradCheckReport {
        max_rel_error: blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max),
        blocks,
        skipped_nonsmooth: skipped,
        checked,
        loss,
    })
}
