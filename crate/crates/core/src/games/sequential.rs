//! The endgame as an environment: one learner per private card of player 0
//! at the root, with a frozen-root CFR+ solve as the value function.

use crate::env::Environment;
use crate::error::{check_dim, Result};
use crate::games::cfr::{best_response_value, cfr_plus_solve, FrozenRoot, SolveResult};
use crate::games::endgame::Endgame;
use crate::regret::Strategy;

/// Default CFR+ iterations behind each environment step.
pub const TRAIN_VF_ITERS: usize = 1000;
/// Default CFR+ iterations when measuring exploitability.
pub const EVAL_VF_ITERS: usize = 10 * TRAIN_VF_ITERS;

/// Rewards for the learners' root strategies: the expected value of each
/// root action given the learner's card, with the rest of the game played
/// by a CFR+ solve that keeps the root pinned.
pub fn sequential_env_step(
    game: &Endgame,
    root_strategies: &[Strategy],
    vf_iters: usize,
) -> Result<SolveResult> {
    let frozen = FrozenRoot::from_learners(game, root_strategies)?;
    cfr_plus_solve(game, Some(&frozen), vf_iters)
}

/// Game value minus the value player 0 secures when its root plays
/// `root_averages`, continued by a frozen-root solve, against an exact best
/// response. `equilibrium_value` is the unfrozen solve's value at the same
/// precision.
pub fn exploitability_sequential(
    game: &Endgame,
    root_averages: &[Strategy],
    precision_iters: usize,
    equilibrium_value: f64,
) -> Result<f64> {
    let extended = sequential_env_step(game, root_averages, precision_iters)?;
    let opponent_best = best_response_value(game, &extended.average, 1, false);
    Ok(equilibrium_value + opponent_best)
}

#[derive(Clone, Debug)]
pub struct SequentialEnv {
    game: Endgame,
    hands: Vec<usize>,
    vf_iters: usize,
    eval_iters: usize,
    delta_max: f64,
    equilibrium: Option<SolveResult>,
    last_gap: f64,
}

impl SequentialEnv {
    /// `delta_max` is the distribution-wide reward range.
    pub fn new(game: Endgame, vf_iters: usize, eval_iters: usize, delta_max: f64) -> Self {
        let hands = game.learner_hands();
        SequentialEnv {
            game,
            hands,
            vf_iters,
            eval_iters,
            delta_max,
            equilibrium: None,
            last_gap: f64::NAN,
        }
    }

    pub fn game(&self) -> &Endgame {
        &self.game
    }

    /// Unfrozen solve at the evaluation precision, computed once.
    pub fn equilibrium(&mut self) -> Result<&SolveResult> {
        if self.equilibrium.is_none() {
            self.equilibrium = Some(cfr_plus_solve(&self.game, None, self.eval_iters)?);
        }
        Ok(self.equilibrium.as_ref().expect("just solved"))
    }

    /// Residual Nash gap of the most recent environment step.
    pub fn last_gap(&self) -> f64 {
        self.last_gap
    }
}

impl Environment for SequentialEnv {
    fn num_learners(&self) -> usize {
        self.hands.len()
    }

    fn num_actions(&self) -> usize {
        self.game.num_root_actions()
    }

    fn delta_max(&self) -> f64 {
        self.delta_max
    }

    fn learner_weights(&self) -> Vec<f64> {
        self.hands
            .iter()
            .map(|&h| self.game.marginals[0][h])
            .collect()
    }

    fn context(&self, learner: usize) -> Vec<f64> {
        self.game.context_features(self.hands[learner])
    }

    fn rewards(&mut self, strategies: &[Strategy]) -> Result<Vec<Vec<f64>>> {
        check_dim(self.hands.len(), strategies.len())?;
        let res = sequential_env_step(&self.game, strategies, self.vf_iters)?;
        self.last_gap = res.nash_gap;
        Ok(res.root_values)
    }

    fn exploitability(&mut self, averages: &[Strategy]) -> Result<f64> {
        let value = self.equilibrium()?.value;
        exploitability_sequential(&self.game, averages, self.eval_iters, value)
    }

    fn solver_gap(&self) -> Option<f64> {
        Some(self.last_gap)
    }
}
