//! The black-box environment a set of learners interacts with.
//!
//! A matrix game has a single learner. A sequential endgame has one learner
//! per root information set of the learning player; they submit strategies
//! jointly and receive one reward vector each.

use crate::error::Result;
use crate::regret::Strategy;

pub trait Environment {
    /// Number of independent learners (root information sets).
    fn num_learners(&self) -> usize;

    fn num_actions(&self) -> usize;

    /// Declared reward range: every reward lies in `[lo, lo + delta_max]`.
    fn delta_max(&self) -> f64;

    /// Nonnegative learner weights summing to one, used to aggregate
    /// per-learner regrets into one loss.
    fn learner_weights(&self) -> Vec<f64> {
        vec![1.0 / self.num_learners() as f64; self.num_learners()]
    }

    /// Observation features of one learner; empty for matrix games.
    fn context(&self, _learner: usize) -> Vec<f64> {
        Vec::new()
    }

    /// Rewards for the learners' current strategies.
    fn rewards(&mut self, strategies: &[Strategy]) -> Result<Vec<Vec<f64>>>;

    /// Exploitability of the learners' joint average strategy.
    fn exploitability(&mut self, averages: &[Strategy]) -> Result<f64>;

    /// Residual error of the value function behind the latest rewards, for
    /// environments that solve a subgame.
    fn solver_gap(&self) -> Option<f64> {
        None
    }
}

impl<E: Environment + ?Sized> Environment for Box<E> {
    fn num_learners(&self) -> usize {
        (**self).num_learners()
    }
    fn num_actions(&self) -> usize {
        (**self).num_actions()
    }
    fn delta_max(&self) -> f64 {
        (**self).delta_max()
    }
    fn learner_weights(&self) -> Vec<f64> {
        (**self).learner_weights()
    }
    fn context(&self, learner: usize) -> Vec<f64> {
        (**self).context(learner)
    }
    fn rewards(&mut self, strategies: &[Strategy]) -> Result<Vec<Vec<f64>>> {
        (**self).rewards(strategies)
    }
    fn exploitability(&mut self, averages: &[Strategy]) -> Result<f64> {
        (**self).exploitability(averages)
    }
    fn solver_gap(&self) -> Option<f64> {
        (**self).solver_gap()
    }
}
