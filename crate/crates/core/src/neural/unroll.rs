//! Unrolled episodes and reverse-mode differentiation through them.
//!
//! Rewards, and the cumulative regrets entering the network, are treated as
//! constants: the only path from an early step to a later one runs through
//! the recurrent state. The loss is `sum_l w_l max_a sum_t r^t_{l,a}`; with
//! the rewards held constant its derivative w.r.t. `sigma^t_l` is
//! `-w_l x^t_l` whichever action attains the max.

use std::sync::Arc;

use crate::env::Environment;
use crate::error::{check_dim, Error, Result};
use crate::minimizers::{features, hedge_beta, run_episode, Minimizer, MinimizerKind, Trajectory};
use crate::neural::network::{softmax, NetworkParams, RecurrentState, StateGrad};

/// A recorded unroll: everything `backprop` needs.
#[derive(Clone, Debug)]
pub struct UnrollTrace {
    pub kind: MinimizerKind,
    pub horizon: usize,
    pub delta_max: f64,
    pub contexts: Vec<Vec<f64>>,
    pub trajectory: Trajectory,
    pub loss: f64,
}

impl UnrollTrace {
    fn beta(&self) -> Option<f64> {
        let actions = self.trajectory.learners[0].rewards[0].len();
        (self.kind == MinimizerKind::NeuralHedge).then(|| hedge_beta(actions, self.horizon))
    }

    /// `R^{t-1}` for step `t` (1-based) of learner `l`.
    fn regret_before(&self, l: usize, t: usize) -> Vec<f64> {
        let learner = &self.trajectory.learners[l];
        if t == 1 {
            vec![0.0; learner.rewards[0].len()]
        } else {
            learner.cumulative[t - 2].clone()
        }
    }

    /// Reward observed before step `t`, with `x^0 = 0`.
    fn reward_before(&self, l: usize, t: usize) -> Vec<f64> {
        let learner = &self.trajectory.learners[l];
        if t == 1 {
            vec![0.0; learner.rewards[0].len()]
        } else {
            learner.rewards[t - 2].clone()
        }
    }

    /// Smallest `|R_a + p_a|` over the unroll: the distance to the kinks of
    /// the positive-part clamp. Infinite for kinds without a clamp.
    pub fn kink_distance(&self) -> f64 {
        if !matches!(self.kind, MinimizerKind::Nprm | MinimizerKind::NprmPlus) {
            return f64::INFINITY;
        }
        let mut best = f64::INFINITY;
        for (l, learner) in self.trajectory.learners.iter().enumerate() {
            for t in 1..=self.horizon {
                let r = self.regret_before(l, t);
                for (ra, pa) in r.iter().zip(&learner.predictions[t - 1]) {
                    best = best.min((ra + pa).abs());
                }
            }
        }
        best
    }
}

/// Runs one episode of a neural minimizer per environment learner and
/// returns the meta-loss with the trace needed to differentiate it.
pub fn unroll_and_loss<E: Environment + ?Sized>(
    params: &Arc<NetworkParams>,
    kind: MinimizerKind,
    env: &mut E,
    horizon: usize,
    delta_max: f64,
) -> Result<(f64, UnrollTrace)> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("unroll horizon must be >= 1".into()));
    }
    let contexts: Vec<Vec<f64>> = (0..env.num_learners()).map(|l| env.context(l)).collect();
    let mut minimizers = contexts
        .iter()
        .map(|ctx| Minimizer::neural(kind, params.clone(), delta_max, horizon, ctx.clone(), true))
        .collect::<Result<Vec<_>>>()?;
    let trajectory = run_episode(&mut minimizers, env, horizon, false)?;
    let loss = trajectory.external_regret(horizon);
    if !loss.is_finite() {
        return Err(Error::Numeric {
            step: horizon,
            what: "meta-loss".into(),
        });
    }
    Ok((
        loss,
        UnrollTrace {
            kind,
            horizon,
            delta_max,
            contexts,
            trajectory,
            loss,
        },
    ))
}

/// Gradient of `d loss / d head pre-activation` given `d loss / d sigma`.
fn head_backward(
    kind: MinimizerKind,
    alpha: f64,
    beta: Option<f64>,
    head: &[f64],
    sigma: &[f64],
    regret_before: &[f64],
    d_sigma: &[f64],
) -> Vec<f64> {
    let centered: f64 = sigma.iter().zip(d_sigma).map(|(s, d)| s * d).sum();
    match kind {
        MinimizerKind::Noa => sigma
            .iter()
            .zip(d_sigma)
            .map(|(s, d)| s * (d - centered))
            .collect(),
        MinimizerKind::NeuralHedge => {
            let beta = beta.expect("hedge temperature");
            head.iter()
                .zip(sigma.iter().zip(d_sigma))
                .map(|(y, (s, d))| {
                    let th = y.tanh();
                    beta * s * (d - centered) * alpha * (1.0 - th * th)
                })
                .collect()
        }
        _ => {
            let mut xi_norm = 0.0;
            let active: Vec<bool> = head
                .iter()
                .zip(regret_before)
                .map(|(y, r)| {
                    let v = r + alpha * y.tanh();
                    xi_norm += v.max(0.0);
                    v > 0.0
                })
                .collect();
            if xi_norm <= 0.0 {
                return vec![0.0; head.len()];
            }
            head.iter()
                .zip(active.iter().zip(d_sigma))
                .map(|(y, (on, d))| {
                    if *on {
                        let th = y.tanh();
                        (d - centered) / xi_norm * alpha * (1.0 - th * th)
                    } else {
                        0.0
                    }
                })
                .collect()
        }
    }
}

/// Exact reverse-mode gradient of the unroll's loss, flat and laid out like
/// the parameter buffer.
pub fn backprop(trace: &UnrollTrace, params: &NetworkParams) -> Result<Vec<f64>> {
    if params.head_kind() != trace.kind.head_kind().expect("neural kind") {
        return Err(Error::InvalidArgument(
            "trace and params disagree on the head".into(),
        ));
    }
    let mut grads = vec![0.0; params.as_slice().len()];
    let beta = trace.beta();
    let hidden = params.dims().hidden;
    for (l, (learner, weight)) in trace
        .trajectory
        .learners
        .iter()
        .zip(&trace.trajectory.weights)
        .enumerate()
    {
        let caches = learner
            .caches
            .as_ref()
            .ok_or_else(|| Error::InvalidArgument("trace was not recorded".into()))?;
        if caches.len() != trace.horizon + 1 {
            return Err(Error::DimensionMismatch {
                expected: trace.horizon + 1,
                got: caches.len(),
            });
        }
        check_dim(params.dims().actions, caches[0].head.len())?;
        let mut carry = StateGrad::zeros(hidden);
        for t in (1..=trace.horizon).rev() {
            let cache = &caches[t - 1];
            let d_sigma: Vec<f64> = learner.rewards[t - 1].iter().map(|x| -weight * x).collect();
            let d_head = head_backward(
                trace.kind,
                params.alpha(),
                beta,
                &cache.head,
                learner.strategies[t - 1].as_slice(),
                &trace.regret_before(l, t),
                &d_sigma,
            );
            params.step_backward(cache, &d_head, &mut carry, &mut grads);
        }
    }
    Ok(grads)
}

/// The parameter-dependent part of the loss with every reward and every
/// network input frozen at the values recorded in `trace`:
/// `-sum_l w_l sum_t <sigma^t_l, x^t_l>`. The loss differs from it by
/// `sum_l w_l max_a sum_t x^t_{l,a}`, which does not depend on the weights.
///
/// Also returns the on/off pattern of the positive-part clamp so callers can
/// tell when a perturbation crossed a kink.
pub fn frozen_objective(trace: &UnrollTrace, params: &NetworkParams) -> Result<(f64, Vec<bool>)> {
    let beta = trace.beta();
    let mut objective = 0.0;
    let mut pattern = Vec::new();
    for (l, (learner, weight)) in trace
        .trajectory
        .learners
        .iter()
        .zip(&trace.trajectory.weights)
        .enumerate()
    {
        let mut state = RecurrentState::zeros(params.dims().hidden);
        for t in 1..=trace.horizon {
            let input = features(
                &trace.reward_before(l, t),
                &trace.regret_before(l, t),
                t - 1,
                trace.delta_max,
                &trace.contexts[l],
            );
            let cache = params.step(&input, &mut state)?;
            let out = params.head_output(&cache.head);
            let r = trace.regret_before(l, t);
            let sigma: Vec<f64> = match (trace.kind, beta) {
                (MinimizerKind::Noa, _) => out,
                (_, Some(beta)) => {
                    let z: Vec<f64> = r.iter().zip(&out).map(|(a, b)| beta * (a + b)).collect();
                    softmax(&z)
                }
                _ => {
                    let xi: Vec<f64> = r.iter().zip(&out).map(|(a, b)| (a + b).max(0.0)).collect();
                    pattern.extend(r.iter().zip(&out).map(|(a, b)| a + b > 0.0));
                    let norm: f64 = xi.iter().sum();
                    if norm > 0.0 {
                        xi.iter().map(|v| v / norm).collect()
                    } else {
                        vec![1.0 / xi.len() as f64; xi.len()]
                    }
                }
            };
            let value: f64 = sigma
                .iter()
                .zip(&learner.rewards[t - 1])
                .map(|(s, x)| s * x)
                .sum();
            objective -= weight * value;
        }
    }
    Ok((objective, pattern))
}
