//! Gradient checks on randomly drawn small instances.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::games::endgame::EndgameConfig;
use crate::games::{GameId, GameSpec};
use crate::meta::{derive_seed, Stream};
use crate::minimizers::MinimizerKind;
use crate::neural::gradcheck::{grad_check, GradCheckReport};
use crate::neural::network::{Block, Dims, NetworkParams};

fn default_horizon() -> usize {
    8
}
fn default_hidden() -> usize {
    8
}
fn default_instances() -> usize {
    20
}
fn default_threshold() -> f64 {
    1e-4
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GradCheckConfig {
    pub algorithm: MinimizerKind,
    pub game: GameId,
    #[serde(default = "default_horizon")]
    pub horizon: usize,
    #[serde(default = "default_hidden")]
    pub hidden_dim: usize,
    /// Prediction bound; defaults to `2 delta_max`.
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_instances")]
    pub instances: usize,
    /// Largest acceptable relative error.
    #[serde(default = "default_threshold")]
    pub threshold: f64,
    #[serde(default)]
    pub endgame: EndgameConfig,
}

impl GradCheckConfig {
    pub fn new(algorithm: MinimizerKind, game: GameId, seed: u64) -> Self {
        GradCheckConfig {
            algorithm,
            game,
            horizon: default_horizon(),
            hidden_dim: default_hidden(),
            alpha: None,
            seed,
            instances: default_instances(),
            threshold: default_threshold(),
            endgame: EndgameConfig::default(),
        }
    }

    fn spec(&self) -> GameSpec {
        GameSpec {
            endgame: self.endgame.clone(),
            ..GameSpec::new(self.game)
        }
    }

    /// The config with defaults filled in.
    pub fn resolved(&self) -> GradCheckConfig {
        GradCheckConfig {
            alpha: Some(self.alpha.unwrap_or_else(|| 2.0 * self.spec().delta_max())),
            ..self.clone()
        }
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Checks backprop on `config.instances` independent instances. Each draws
/// its own game and a network whose head is random too, so every block
/// receives a nonzero gradient.
pub fn run_grad_check(config: &GradCheckConfig) -> Result<Vec<GradCheckReport>> {
    let head = config
        .algorithm
        .head_kind()
        .ok_or_else(|| Error::Config(format!("algorithm '{}' has no network", config.algorithm)))?;
    if config.horizon == 0 || config.hidden_dim == 0 || config.instances == 0 {
        return Err(Error::Config(
            "horizon, hidden_dim and instances must be >= 1".into(),
        ));
    }
    let spec = config.spec();
    if spec.id.is_sequential() {
        spec.endgame.validate()?;
    }
    let delta_max = spec.delta_max();
    let alpha = config.resolved().alpha.expect("resolved");
    let actions = spec.num_actions();
    let dims = Dims {
        input: 2 * actions + spec.context_dim(),
        hidden: config.hidden_dim,
        actions,
    };
    (0..config.instances)
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(config.seed, Stream::Init, i as u64));
            let mut params = NetworkParams::init(dims, head, alpha, &mut rng)?;
            let bound = 1.0 / (config.hidden_dim as f64).sqrt();
            for block in [Block::HeadWeight, Block::HeadBias] {
                for w in params.block_mut(block) {
                    *w = rng.random_range(-bound..=bound);
                }
            }
            let mut env = spec.sample(&mut rng)?;
            grad_check(
                &params,
                config.algorithm,
                env.as_mut(),
                config.horizon,
                delta_max,
            )
        })
        .collect()
}
