//! Environments: matrix games against a best responder and a small poker
//! endgame solved by CFR+.

pub mod cfr;
pub mod endgame;
pub mod matrix;
pub mod sequential;

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{Error, Result};
use endgame::{BettingTree, EndgameConfig, EndgameDistribution};
use matrix::{MatrixDistribution, MatrixEnv};
use sequential::SequentialEnv;

/// A distribution of games the learners can be trained or evaluated on.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameId {
    RpsFixed,
    RpsSampled,
    #[serde(rename = "uniform-3x3")]
    Uniform3x3,
    EndgameFixed,
    EndgameSampled,
}

impl GameId {
    pub const ALL: [GameId; 5] = [
        GameId::RpsFixed,
        GameId::RpsSampled,
        GameId::Uniform3x3,
        GameId::EndgameFixed,
        GameId::EndgameSampled,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GameId::RpsFixed => "rps-fixed",
            GameId::RpsSampled => "rps-sampled",
            GameId::Uniform3x3 => "uniform-3x3",
            GameId::EndgameFixed => "endgame-fixed",
            GameId::EndgameSampled => "endgame-sampled",
        }
    }

    pub fn is_sequential(self) -> bool {
        matches!(self, GameId::EndgameFixed | GameId::EndgameSampled)
    }

    pub fn matrix(self) -> Option<MatrixDistribution> {
        match self {
            GameId::RpsFixed => Some(MatrixDistribution::RpsFixed),
            GameId::RpsSampled => Some(MatrixDistribution::RpsSampled),
            GameId::Uniform3x3 => Some(MatrixDistribution::Uniform3x3),
            _ => None,
        }
    }

    pub fn endgame(self) -> Option<EndgameDistribution> {
        match self {
            GameId::EndgameFixed => Some(EndgameDistribution::Fixed),
            GameId::EndgameSampled => Some(EndgameDistribution::Sampled),
            _ => None,
        }
    }
}

impl fmt::Display for GameId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for GameId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        GameId::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown game '{s}'")))
    }
}

/// Everything needed to draw environments from a game distribution.
#[derive(Clone, Debug, PartialEq)]
pub struct GameSpec {
    pub id: GameId,
    pub endgame: EndgameConfig,
    /// CFR+ iterations behind each endgame step.
    pub vf_iters: usize,
    /// CFR+ iterations when measuring endgame exploitability.
    pub eval_iters: usize,
}

impl GameSpec {
    pub fn new(id: GameId) -> Self {
        GameSpec {
            id,
            endgame: EndgameConfig::default(),
            vf_iters: sequential::TRAIN_VF_ITERS,
            eval_iters: sequential::EVAL_VF_ITERS,
        }
    }

    pub fn num_actions(&self) -> usize {
        if self.id.is_sequential() {
            1 + self.endgame.bet_fractions.len()
        } else {
            3
        }
    }

    /// Width of the per-learner context block.
    pub fn context_dim(&self) -> usize {
        if self.id.is_sequential() {
            4 * self.endgame.deck_ranks
        } else {
            0
        }
    }

    /// Reward range covering every game of the distribution.
    pub fn delta_max(&self) -> f64 {
        match self.id.matrix() {
            Some(m) => m.delta_max(),
            None => 2.0 * BettingTree::build(&self.endgame).max_stake(),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<Box<dyn Environment + Send>> {
        if let Some(m) = self.id.matrix() {
            return Ok(Box::new(MatrixEnv::new(m.sample(rng), m.delta_max())?));
        }
        let dist = self.id.endgame().expect("sequential id");
        let game = dist.sample(&self.endgame, rng)?;
        Ok(Box::new(SequentialEnv::new(
            game,
            self.vf_iters,
            self.eval_iters,
            self.delta_max(),
        )))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn ids_round_trip() {
        for g in GameId::ALL {
            assert_eq!(g.name().parse::<GameId>().unwrap(), g);
        }
        assert!("poker".parse::<GameId>().is_err());
    }

    #[test]
    fn declared_shapes() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for g in GameId::ALL {
            let spec = GameSpec::new(g);
            let env = spec.sample(&mut rng).unwrap();
            assert_eq!(env.num_actions(), spec.num_actions());
            assert_eq!(env.context(0).len(), spec.context_dim());
            assert_eq!(env.delta_max(), spec.delta_max());
        }
        assert_eq!(GameSpec::new(GameId::EndgameSampled).delta_max(), 18.0);
    }
}
