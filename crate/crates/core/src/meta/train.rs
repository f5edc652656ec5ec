//! The meta-training loop: sampled batches of unrolled games, one Adam step
//! per batch.

use std::io::Write;
use std::sync::Arc;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::meta::config::TrainConfig;
use crate::meta::{derive_seed, Stream};
use crate::neural::adam::{adam_step, cosine_lr, AdamState};
use crate::neural::checkpoint::{Checkpoint, CheckpointMeta};
use crate::neural::network::{Dims, NetworkParams};
use crate::neural::unroll::{backprop, unroll_and_loss};

#[derive(Clone, Debug, PartialEq)]
pub struct ReportRow {
    pub epoch: usize,
    pub mean_loss: f64,
    pub lr: f64,
    /// Mean exploitability of the average strategy at step `T` on the
    /// held-out set, on evaluation epochs.
    pub eval_expl_at_t: Option<f64>,
    pub wall_time_s: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct TrainReport {
    pub rows: Vec<ReportRow>,
}

impl TrainReport {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "epoch,mean_loss,lr,eval_expl_at_T,wall_time_s")?;
        for r in &self.rows {
            let eval = r.eval_expl_at_t.map_or(String::new(), |v| v.to_string());
            writeln!(
                out,
                "{},{},{},{},{}",
                r.epoch, r.mean_loss, r.lr, eval, r.wall_time_s
            )?;
        }
        Ok(())
    }
}

/// Seed of game `index` in the batch of `epoch` (1-based).
pub fn batch_game_seed(config: &TrainConfig, epoch: usize, index: usize) -> u64 {
    derive_seed(
        config.seed,
        Stream::Train,
        ((epoch as u64) << 32) | index as u64,
    )
}

/// The untrained network `meta_train` starts from.
pub fn initial_params(config: &TrainConfig) -> Result<NetworkParams> {
    let spec = config.game_spec();
    let actions = spec.num_actions();
    let dims = Dims {
        input: 2 * actions + spec.context_dim(),
        hidden: config.hidden_dim,
        actions,
    };
    let head = config.algorithm.head_kind().ok_or_else(|| {
        Error::Config(format!(
            "algorithm '{}' has nothing to train",
            config.algorithm
        ))
    })?;
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.seed, Stream::Init, 0));
    NetworkParams::init(dims, head, config.resolved_alpha(), &mut rng)
}

/// Mean exploitability at step `T` over the fixed held-out set.
fn held_out_exploitability(config: &TrainConfig, params: &Arc<NetworkParams>) -> Result<f64> {
    let spec = config.game_spec();
    let values: Vec<f64> = (0..config.eval_games)
        .into_par_iter()
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(config.seed, Stream::TrainEval, i as u64));
            let mut env = spec.sample(&mut rng)?;
            let (_, trace) = unroll_and_loss(
                params,
                config.algorithm,
                env.as_mut(),
                config.horizon,
                spec.delta_max(),
            )?;
            let averages: Vec<_> = trace
                .trajectory
                .learners
                .iter()
                .map(|l| l.averages.last().expect("nonempty").clone())
                .collect();
            env.exploitability(&averages)
        })
        .collect::<Result<_>>()?;
    Ok(values.iter().sum::<f64>() / values.len().max(1) as f64)
}

/// Minimizes the expected external regret at horizon `T` over the
/// configured game distribution. Deterministic given the config: batch
/// results are reduced in game order whatever the thread count.
pub fn meta_train(config: &TrainConfig) -> Result<(Checkpoint, TrainReport)> {
    config.validate()?;
    let spec = config.game_spec();
    let delta_max = spec.delta_max();
    let mut params = initial_params(config)?;
    let mut opt = AdamState::new(params.as_slice().len());
    let mut report = TrainReport::default();
    let start = Instant::now();

    for epoch in 1..=config.epochs {
        let lr = cosine_lr(
            epoch - 1,
            config.epochs.saturating_sub(1),
            config.lr_start,
            config.lr_end,
        );
        let shared = Arc::new(params.clone());
        let results: Vec<(f64, Vec<f64>)> = (0..config.batch_size)
            .into_par_iter()
            .map(|i| {
                let seed = batch_game_seed(config, epoch, i);
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut env = spec.sample(&mut rng)?;
                let (loss, trace) = unroll_and_loss(
                    &shared,
                    config.algorithm,
                    env.as_mut(),
                    config.horizon,
                    delta_max,
                )?;
                let grads = backprop(&trace, &shared)?;
                Ok((loss, grads))
            })
            .collect::<Result<Vec<_>>>()
            .map_err(|e| match e {
                Error::Numeric { what, .. } => Error::Numeric {
                    step: epoch,
                    what: format!("epoch {epoch}: {what}"),
                },
                other => other,
            })?;

        let n = results.len() as f64;
        let mut grads = vec![0.0; params.as_slice().len()];
        let mut loss = 0.0;
        for (l, g) in &results {
            loss += l;
            for (acc, v) in grads.iter_mut().zip(g) {
                *acc += v;
            }
        }
        loss /= n;
        grads.iter_mut().for_each(|g| *g /= n);
        if !loss.is_finite() {
            return Err(Error::Numeric {
                step: epoch,
                what: format!("epoch {epoch}: mean loss is {loss}"),
            });
        }
        adam_step(params.as_mut_slice(), &grads, &mut opt, lr).map_err(|e| match e {
            Error::Numeric { what, .. } => Error::Numeric {
                step: epoch,
                what: format!("epoch {epoch}: {what}"),
            },
            other => other,
        })?;

        let eval_now =
            config.eval_every > 0 && (epoch % config.eval_every == 0 || epoch == config.epochs);
        let eval_expl_at_t = if eval_now {
            Some(held_out_exploitability(config, &Arc::new(params.clone()))?)
        } else {
            None
        };
        report.rows.push(ReportRow {
            epoch,
            mean_loss: loss,
            lr,
            eval_expl_at_t,
            wall_time_s: if config.record_timing {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });
    }

    let meta = CheckpointMeta {
        algorithm: config.algorithm,
        game: config.game.name().to_string(),
        horizon: config.horizon,
        seed: config.seed,
        config_digest: config.digest(),
        delta_max,
    };
    Ok((Checkpoint { params, meta }, report))
}
