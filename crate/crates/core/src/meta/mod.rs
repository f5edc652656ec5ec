//! Meta-training over game distributions and the evaluations around it.

pub mod bound;
pub mod config;
pub mod eval;
pub mod gradcheck;
pub mod sweep;
pub mod train;

pub use bound::{bound_check, closed_form_bound, trajectory_bound_check, BoundCheck};
pub use config::TrainConfig;
pub use eval::{
    evaluate, ood_evaluate, steps_to_target, EvalConfig, EvalCurve, EvalRun, Learner, OodReport,
    StepsToTargetTable,
};
pub use gradcheck::{run_grad_check, GradCheckConfig};
pub use sweep::{precision_sweep, SweepPoint};
pub use train::{meta_train, TrainReport};

use crate::error::{Error, Result};

/// Independent random streams derived from one master seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u64)]
pub enum Stream {
    Init = 1,
    Train = 2,
    TrainEval = 3,
    Eval = 4,
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Seed of item `index` in `stream`; for training games `index` folds in
/// the epoch.
pub fn derive_seed(master: u64, stream: Stream, index: u64) -> u64 {
    splitmix(splitmix(splitmix(master) ^ stream as u64) ^ index)
}

/// Runs `f` on a pool capped by `REGRET_META_THREADS` (default: all cores).
pub fn with_thread_pool<R: Send>(f: impl FnOnce() -> R + Send) -> Result<R> {
    let threads = match std::env::var("REGRET_META_THREADS") {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|n| *n > 0)
            .ok_or_else(|| {
                Error::Config(format!(
                    "REGRET_META_THREADS must be a positive integer, got '{v}'"
                ))
            })?,
        Err(_) => 0,
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| Error::Config(format!("thread pool: {e}")))?;
    Ok(pool.install(f))
}
