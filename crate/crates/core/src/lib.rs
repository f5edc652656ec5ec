//! Regret minimization with learned, adaptive predictions.
//!
//! Classic regret minimizers (regret matching, its predictive variants and
//! Hedge) sit next to recurrent "neural" minimizers whose predictions are
//! meta-learned over a distribution of games. The neural predictive variants
//! keep the worst-case regret guarantee of their classic counterparts.

pub mod env;
pub mod error;
pub mod games;
pub mod meta;
pub mod minimizers;
pub mod neural;
pub mod regret;

pub use env::Environment;
pub use error::{Error, Result};
pub use minimizers::{run_episode, Minimizer, MinimizerKind, Trajectory};
pub use regret::{Aggregation, AverageStrategy, CumulativeRegret, RewardBound, Strategy};
