//! Training configuration.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::games::endgame::EndgameConfig;
use crate::games::{GameId, GameSpec};
use crate::minimizers::MinimizerKind;
use crate::neural::network::HeadKind;

fn default_lr_start() -> f64 {
    1e-3
}
fn default_lr_end() -> f64 {
    3e-4
}
fn default_hidden() -> usize {
    32
}
fn default_batch() -> usize {
    32
}
fn default_vf_iters() -> usize {
    crate::games::sequential::TRAIN_VF_ITERS
}
fn default_eval_iters() -> usize {
    crate::games::sequential::EVAL_VF_ITERS
}
fn default_eval_games() -> usize {
    16
}
fn default_true() -> bool {
    true
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub algorithm: MinimizerKind,
    pub game: GameId,
    /// Unroll horizon `T`.
    pub horizon: usize,
    /// Gradient updates, one batch each.
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default = "default_lr_start")]
    pub lr_start: f64,
    #[serde(default = "default_lr_end")]
    pub lr_end: f64,
    /// Prediction bound; defaults to `2 delta_max`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    pub seed: u64,
    /// CFR+ iterations per endgame step.
    #[serde(default = "default_vf_iters")]
    pub vf_iters: usize,
    /// CFR+ iterations when measuring endgame exploitability.
    #[serde(default = "default_eval_iters")]
    pub eval_iters: usize,
    /// Epochs between evaluations on the held-out set; 0 disables.
    #[serde(default)]
    pub eval_every: usize,
    #[serde(default = "default_eval_games")]
    pub eval_games: usize,
    /// Write measured wall times; off, timing columns are written as 0 so
    /// that reports are byte-reproducible.
    #[serde(default = "default_true")]
    pub record_timing: bool,
    #[serde(default)]
    pub endgame: EndgameConfig,
}

impl TrainConfig {
    /// A config with every optional field at its default.
    pub fn new(
        algorithm: MinimizerKind,
        game: GameId,
        horizon: usize,
        epochs: usize,
        seed: u64,
    ) -> Self {
        TrainConfig {
            algorithm,
            game,
            horizon,
            epochs,
            batch_size: default_batch(),
            lr_start: default_lr_start(),
            lr_end: default_lr_end(),
            alpha: None,
            hidden_dim: default_hidden(),
            seed,
            vf_iters: default_vf_iters(),
            eval_iters: default_eval_iters(),
            eval_every: 0,
            eval_games: default_eval_games(),
            record_timing: true,
            endgame: EndgameConfig::default(),
        }
    }

    pub fn game_spec(&self) -> GameSpec {
        GameSpec {
            id: self.game,
            endgame: self.endgame.clone(),
            vf_iters: self.vf_iters,
            eval_iters: self.eval_iters,
        }
    }

    pub fn resolved_alpha(&self) -> f64 {
        self.alpha
            .unwrap_or_else(|| 2.0 * self.game_spec().delta_max())
    }

    /// The config with defaults filled in.
    pub fn resolved(&self) -> TrainConfig {
        TrainConfig {
            alpha: Some(self.resolved_alpha()),
            ..self.clone()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        let head = match self.algorithm.head_kind() {
            Some(h) => h,
            None => {
                return bad(format!(
                    "algorithm '{}' has nothing to train",
                    self.algorithm
                ))
            }
        };
        if self.horizon == 0 {
            return bad("horizon must be >= 1".into());
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1".into());
        }
        if self.hidden_dim == 0 {
            return bad("hidden_dim must be >= 1".into());
        }
        if !(self.lr_start > 0.0 && self.lr_end > 0.0) {
            return bad("learning rates must be positive".into());
        }
        if self.game.is_sequential() {
            self.endgame.validate()?;
            if self.vf_iters == 0 || self.eval_iters == 0 {
                return bad("vf_iters and eval_iters must be >= 1".into());
            }
        }
        let alpha = self.resolved_alpha();
        let dm = self.game_spec().delta_max();
        if head == HeadKind::PredictionBounded && alpha < 2.0 * dm {
            return bad(format!(
                "alpha = {alpha} is below 2 * delta_max = {}",
                2.0 * dm
            ));
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    /// SHA-256 of the resolved config, hex encoded.
    pub fn digest(&self) -> String {
        let hash = Sha256::digest(self.resolved().to_toml().as_bytes());
        hash.iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_and_round_trip() {
        let c = TrainConfig::new(MinimizerKind::Nprm, GameId::RpsSampled, 64, 512, 7);
        assert_eq!(c.resolved_alpha(), 10.0);
        c.validate().unwrap();
        let text = c.resolved().to_toml();
        let back = TrainConfig::from_toml(&text).unwrap();
        assert_eq!(back, c.resolved());
        assert_eq!(back.digest(), c.digest());
    }

    #[test]
    fn missing_key_is_named() {
        let err = TrainConfig::from_toml(
            "algorithm = \"nprm\"\ngame = \"rps-fixed\"\nepochs = 1\nseed = 0\n",
        )
        .unwrap_err();
        assert!(err.to_string().contains("horizon"), "{err}");
    }

    #[test]
    fn rejects_small_alpha_and_classic_kinds() {
        let mut c = TrainConfig::new(MinimizerKind::Nprm, GameId::RpsFixed, 8, 1, 0);
        c.alpha = Some(7.0);
        assert!(c.validate().is_err());
        c.algorithm = MinimizerKind::Noa;
        assert!(c.validate().is_ok());
        c.algorithm = MinimizerKind::Rm;
        assert!(c.validate().is_err());
    }
}
