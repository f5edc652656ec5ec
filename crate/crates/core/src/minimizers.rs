//! Online regret minimizers behind one `next_strategy` / `observe_reward`
//! interface, and the episode driver that alternates them with an
//! environment.
//!
//! Regret matching is predictive regret matching with a zero predictor; the
//! "+" kinds clamp the cumulative regret at zero after every update; the
//! Hedge kinds replace the normalization by a softmax with temperature
//! `sqrt(2 ln|A| / T)`. Neural kinds take their prediction (or, for NOA,
//! the strategy itself) from a recurrent network.

use std::fmt;
use std::io::Write;
use std::str::FromStr;
use std::sync::Arc;
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{check_dim, Error, Result};
use crate::neural::network::{HeadKind, NetworkParams, RecurrentState, StepCache};
use crate::regret::{
    external_regret, regret_of, Aggregation, AverageStrategy, CumulativeRegret, Strategy,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum MinimizerKind {
    #[serde(rename = "rm")]
    Rm,
    #[serde(rename = "rm+")]
    RmPlus,
    #[serde(rename = "prm")]
    Prm,
    #[serde(rename = "prm+")]
    PrmPlus,
    #[serde(rename = "hedge")]
    Hedge,
    #[serde(rename = "phedge")]
    PredictiveHedge,
    #[serde(rename = "noa")]
    Noa,
    #[serde(rename = "nprm")]
    Nprm,
    #[serde(rename = "nprm+")]
    NprmPlus,
    #[serde(rename = "nhedge")]
    NeuralHedge,
}

impl MinimizerKind {
    pub const ALL: [MinimizerKind; 10] = [
        MinimizerKind::Rm,
        MinimizerKind::RmPlus,
        MinimizerKind::Prm,
        MinimizerKind::PrmPlus,
        MinimizerKind::Hedge,
        MinimizerKind::PredictiveHedge,
        MinimizerKind::Noa,
        MinimizerKind::Nprm,
        MinimizerKind::NprmPlus,
        MinimizerKind::NeuralHedge,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MinimizerKind::Rm => "rm",
            MinimizerKind::RmPlus => "rm+",
            MinimizerKind::Prm => "prm",
            MinimizerKind::PrmPlus => "prm+",
            MinimizerKind::Hedge => "hedge",
            MinimizerKind::PredictiveHedge => "phedge",
            MinimizerKind::Noa => "noa",
            MinimizerKind::Nprm => "nprm",
            MinimizerKind::NprmPlus => "nprm+",
            MinimizerKind::NeuralHedge => "nhedge",
        }
    }

    pub fn aggregation(self) -> Aggregation {
        match self {
            MinimizerKind::RmPlus | MinimizerKind::PrmPlus | MinimizerKind::NprmPlus => {
                Aggregation::PositivePart
            }
            _ => Aggregation::Full,
        }
    }

    pub fn is_neural(self) -> bool {
        matches!(
            self,
            MinimizerKind::Noa
                | MinimizerKind::Nprm
                | MinimizerKind::NprmPlus
                | MinimizerKind::NeuralHedge
        )
    }

    pub fn is_hedge(self) -> bool {
        matches!(
            self,
            MinimizerKind::Hedge | MinimizerKind::PredictiveHedge | MinimizerKind::NeuralHedge
        )
    }

    /// Kinds covered by the predictive regret-matching regret bound.
    pub fn has_regret_bound(self) -> bool {
        !self.is_hedge() && self != MinimizerKind::Noa
    }

    /// Head the network of a neural kind must carry.
    pub fn head_kind(self) -> Option<HeadKind> {
        match self {
            MinimizerKind::Noa => Some(HeadKind::StrategySoftmax),
            MinimizerKind::Nprm | MinimizerKind::NprmPlus | MinimizerKind::NeuralHedge => {
                Some(HeadKind::PredictionBounded)
            }
            _ => None,
        }
    }
}

impl fmt::Display for MinimizerKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MinimizerKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MinimizerKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown algorithm '{s}'")))
    }
}

/// Hedge temperature bound to the horizon `T`.
pub fn hedge_beta(actions: usize, horizon: usize) -> f64 {
    (2.0 * (actions as f64).ln() / horizon as f64).sqrt()
}

/// `[R + p]^+` normalized, or uniform when the positive part vanishes.
pub fn regret_matching_strategy(cumulative: &[f64], prediction: &[f64]) -> Strategy {
    let xi: Vec<f64> = cumulative
        .iter()
        .zip(prediction)
        .map(|(r, p)| (r + p).max(0.0))
        .collect();
    let norm: f64 = xi.iter().sum();
    if norm > 0.0 {
        Strategy::from_normalized(xi.into_iter().map(|v| v / norm).collect())
    } else {
        Strategy::uniform(cumulative.len())
    }
}

pub fn hedge_strategy(cumulative: &[f64], prediction: &[f64], beta: f64) -> Strategy {
    let z: Vec<f64> = cumulative
        .iter()
        .zip(prediction)
        .map(|(r, p)| beta * (r + p))
        .collect();
    Strategy::from_normalized(crate::neural::network::softmax(&z))
}

/// Network input: reward scaled by `delta_max`, cumulative regret scaled to
/// an average regret, then the context block.
pub fn features(
    last_reward: &[f64],
    cumulative: &[f64],
    step: usize,
    delta_max: f64,
    context: &[f64],
) -> Vec<f64> {
    let regret_scale = delta_max * step.max(1) as f64;
    last_reward
        .iter()
        .map(|x| x / delta_max)
        .chain(cumulative.iter().map(|r| r / regret_scale))
        .chain(context.iter().copied())
        .collect()
}

/// Recurrent state of a neural minimizer.
#[derive(Clone, Debug)]
struct NeuralState {
    net: Arc<NetworkParams>,
    hidden: RecurrentState,
    context: Vec<f64>,
    delta_max: f64,
    /// Latest head output: a strategy for NOA, a prediction otherwise.
    output: Vec<f64>,
    caches: Option<Vec<StepCache>>,
}

impl NeuralState {
    fn advance(&mut self, last_reward: &[f64], cumulative: &[f64], step: usize) -> Result<()> {
        let input = features(last_reward, cumulative, step, self.delta_max, &self.context);
        let cache = self
            .net
            .step(&input, &mut self.hidden)
            .map_err(|e| match e {
                Error::Numeric { what, .. } => Error::Numeric { step, what },
                other => other,
            })?;
        self.output = self.net.head_output(&cache.head);
        if let Some(caches) = self.caches.as_mut() {
            caches.push(cache);
        }
        Ok(())
    }
}

/// One online learner's complete state.
#[derive(Clone, Debug)]
pub struct Minimizer {
    kind: MinimizerKind,
    cumulative: CumulativeRegret,
    prediction: Vec<f64>,
    average: AverageStrategy,
    last_reward: Vec<f64>,
    step: usize,
    hedge_beta: Option<f64>,
    neural: Option<NeuralState>,
    pending: Option<Strategy>,
}

impl Minimizer {
    /// A non-neural minimizer. `horizon` fixes the Hedge temperature and is
    /// ignored by the regret-matching kinds.
    pub fn classic(kind: MinimizerKind, actions: usize, horizon: usize) -> Result<Self> {
        if kind.is_neural() {
            return Err(Error::InvalidArgument(format!("{kind} needs a network")));
        }
        Self::base(kind, actions, horizon)
    }

    /// A neural minimizer. The first network step runs on `x^0 = 0, R^0 = 0`
    /// so that the first strategy is available immediately.
    pub fn neural(
        kind: MinimizerKind,
        net: Arc<NetworkParams>,
        delta_max: f64,
        horizon: usize,
        context: Vec<f64>,
        record: bool,
    ) -> Result<Self> {
        let expected = kind
            .head_kind()
            .ok_or_else(|| Error::InvalidArgument(format!("{kind} is not a neural kind")))?;
        if net.head_kind() != expected {
            return Err(Error::InvalidArgument(format!(
                "{kind} needs a {expected:?} head, network has {:?}",
                net.head_kind()
            )));
        }
        let actions = net.dims().actions;
        check_dim(net.dims().input, 2 * actions + context.len())?;
        let mut m = Self::base(kind, actions, horizon)?;
        let mut state = NeuralState {
            hidden: RecurrentState::zeros(net.dims().hidden),
            net,
            context,
            delta_max,
            output: Vec::new(),
            caches: record.then(Vec::new),
        };
        state.advance(&m.last_reward, m.cumulative.values(), 0)?;
        if kind != MinimizerKind::Noa {
            m.prediction.clone_from(&state.output);
        }
        m.neural = Some(state);
        Ok(m)
    }

    fn base(kind: MinimizerKind, actions: usize, horizon: usize) -> Result<Self> {
        if actions == 0 {
            return Err(Error::InvalidArgument("minimizer over zero actions".into()));
        }
        if kind.is_hedge() && horizon == 0 {
            return Err(Error::InvalidArgument(
                "hedge needs a positive horizon".into(),
            ));
        }
        Ok(Minimizer {
            kind,
            cumulative: CumulativeRegret::zeros(actions),
            prediction: vec![0.0; actions],
            average: AverageStrategy::new(actions),
            last_reward: vec![0.0; actions],
            step: 0,
            hedge_beta: kind.is_hedge().then(|| hedge_beta(actions, horizon)),
            neural: None,
            pending: None,
        })
    }

    /// Replaces the cumulative regret and the pending prediction.
    pub fn with_state(
        mut self,
        cumulative: CumulativeRegret,
        prediction: Vec<f64>,
    ) -> Result<Self> {
        check_dim(self.num_actions(), cumulative.values().len())?;
        check_dim(self.num_actions(), prediction.len())?;
        self.cumulative = cumulative;
        self.prediction = prediction;
        Ok(self)
    }

    pub fn kind(&self) -> MinimizerKind {
        self.kind
    }

    pub fn num_actions(&self) -> usize {
        self.prediction.len()
    }

    pub fn cumulative(&self) -> &CumulativeRegret {
        &self.cumulative
    }

    /// Prediction `p^t` that the next strategy will use.
    pub fn prediction(&self) -> &[f64] {
        &self.prediction
    }

    pub fn average(&self) -> &AverageStrategy {
        &self.average
    }

    pub fn last_reward(&self) -> &[f64] {
        &self.last_reward
    }

    pub fn step(&self) -> usize {
        self.step
    }

    pub fn hedge_beta(&self) -> Option<f64> {
        self.hedge_beta
    }

    fn take_caches(&mut self) -> Option<Vec<StepCache>> {
        self.neural.as_mut().and_then(|n| n.caches.take())
    }

    /// Strategy for the current step. Repeated calls without an interleaved
    /// [`Minimizer::observe_reward`] return the same strategy.
    pub fn next_strategy(&mut self) -> Strategy {
        if let Some(s) = &self.pending {
            return s.clone();
        }
        let r = self.cumulative.values();
        let sigma = match (self.kind, self.hedge_beta) {
            (MinimizerKind::Noa, _) => {
                let out = &self.neural.as_ref().expect("neural state").output;
                Strategy::from_normalized(out.clone())
            }
            (_, Some(beta)) => hedge_strategy(r, &self.prediction, beta),
            _ => regret_matching_strategy(r, &self.prediction),
        };
        self.pending = Some(sigma.clone());
        sigma
    }

    pub fn observe_reward(&mut self, x: &[f64]) -> Result<()> {
        check_dim(self.num_actions(), x.len())?;
        let sigma = self.pending.take().ok_or_else(|| {
            Error::Protocol(format!(
                "observe_reward at step {} without a preceding next_strategy",
                self.step + 1
            ))
        })?;
        let r = regret_of(sigma.as_slice(), x);
        self.cumulative.accumulate(&r, self.kind.aggregation())?;
        self.average.update(&sigma)?;
        self.last_reward = x.to_vec();
        self.step += 1;
        match self.kind {
            MinimizerKind::Rm | MinimizerKind::RmPlus | MinimizerKind::Hedge => {}
            MinimizerKind::Prm | MinimizerKind::PrmPlus | MinimizerKind::PredictiveHedge => {
                self.prediction = r
            }
            MinimizerKind::Noa
            | MinimizerKind::Nprm
            | MinimizerKind::NprmPlus
            | MinimizerKind::NeuralHedge => {
                let state = self.neural.as_mut().expect("neural state");
                state.advance(&self.last_reward, self.cumulative.values(), self.step)?;
                if self.kind != MinimizerKind::Noa {
                    self.prediction.clone_from(&state.output);
                }
            }
        }
        Ok(())
    }
}

/// The recorded history of one learner.
#[derive(Clone, Debug, Default)]
pub struct LearnerTrace {
    /// `sigma^1..T`.
    pub strategies: Vec<Strategy>,
    /// `sigma-bar^1..T`.
    pub averages: Vec<Strategy>,
    /// `x^1..T`.
    pub rewards: Vec<Vec<f64>>,
    /// Instantaneous regrets `r^1..T`.
    pub regrets: Vec<Vec<f64>>,
    /// `R^1..T` in the minimizer's aggregation mode.
    pub cumulative: Vec<Vec<f64>>,
    /// Prediction `p^t` used to form `sigma^t`; zero for NOA.
    pub predictions: Vec<Vec<f64>>,
    /// Forward caches of a recording neural minimizer: entry `k` produced
    /// the output used at step `k + 1`.
    pub caches: Option<Vec<StepCache>>,
}

impl LearnerTrace {
    /// `max_a sum_{t<=steps} r^t_a`, independent of the aggregation mode.
    pub fn external_regret(&self, steps: usize) -> f64 {
        let n = self.regrets.first().map_or(0, Vec::len);
        let mut sum = vec![0.0; n];
        for r in &self.regrets[..steps] {
            for (s, v) in sum.iter_mut().zip(r) {
                *s += v;
            }
        }
        external_regret(&sum)
    }
}

#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub learners: Vec<LearnerTrace>,
    pub weights: Vec<f64>,
    /// Exploitability of the joint average after each step, when requested.
    pub exploitability: Vec<f64>,
    pub env_time: Vec<Duration>,
    pub algo_time: Vec<Duration>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.learners.first().map_or(0, |l| l.strategies.len())
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Learner-weighted external regret after `steps` steps.
    pub fn external_regret(&self, steps: usize) -> f64 {
        self.learners
            .iter()
            .zip(&self.weights)
            .map(|(l, w)| w * l.external_regret(steps))
            .sum()
    }

    /// One row per step (and per learner when there are several) with the
    /// columns `step, sigma_*, avg_sigma_*, x_*, R_*, exploitability`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let n = self
            .learners
            .first()
            .map_or(0, |l| l.predictions.first().map_or(0, Vec::len));
        let multi = self.learners.len() > 1;
        let mut header: Vec<String> = vec!["step".into()];
        if multi {
            header.push("learner".into());
        }
        for prefix in ["sigma", "avg_sigma", "x", "R"] {
            header.extend((0..n).map(|a| format!("{prefix}_{a}")));
        }
        header.push("exploitability".into());
        writeln!(out, "{}", header.join(","))?;
        for t in 0..self.len() {
            for (l, learner) in self.learners.iter().enumerate() {
                let mut row = vec![(t + 1).to_string()];
                if multi {
                    row.push(l.to_string());
                }
                for v in learner.strategies[t]
                    .as_slice()
                    .iter()
                    .chain(learner.averages[t].as_slice())
                    .chain(&learner.rewards[t])
                    .chain(&learner.cumulative[t])
                {
                    row.push(v.to_string());
                }
                row.push(
                    self.exploitability
                        .get(t)
                        .map_or(String::new(), |e| e.to_string()),
                );
                writeln!(out, "{}", row.join(","))?;
            }
        }
        Ok(())
    }
}

/// Runs `x^0 -> sigma^1 -> x^1 -> ... -> sigma^T -> x^T`.
///
/// One minimizer per environment learner. With `with_exploitability` the
/// joint average is evaluated after every step.
pub fn run_episode<E: Environment + ?Sized>(
    minimizers: &mut [Minimizer],
    env: &mut E,
    horizon: usize,
    with_exploitability: bool,
) -> Result<Trajectory> {
    check_dim(env.num_learners(), minimizers.len())?;
    for m in minimizers.iter() {
        check_dim(env.num_actions(), m.num_actions())?;
    }
    let mut traj = Trajectory {
        learners: vec![LearnerTrace::default(); minimizers.len()],
        weights: env.learner_weights(),
        ..Trajectory::default()
    };
    for t in 1..=horizon {
        let algo_start = Instant::now();
        let mut strategies = Vec::with_capacity(minimizers.len());
        for (m, trace) in minimizers.iter_mut().zip(traj.learners.iter_mut()) {
            trace.predictions.push(if m.kind == MinimizerKind::Noa {
                vec![0.0; m.num_actions()]
            } else {
                m.prediction.clone()
            });
            strategies.push(m.next_strategy());
        }
        let mut algo = algo_start.elapsed();

        let env_start = Instant::now();
        let rewards = env.rewards(&strategies).map_err(|e| Error::Environment {
            step: t,
            source: Box::new(e),
        })?;
        traj.env_time.push(env_start.elapsed());
        check_dim(minimizers.len(), rewards.len())?;

        let algo_start = Instant::now();
        for ((m, trace), (sigma, x)) in minimizers
            .iter_mut()
            .zip(traj.learners.iter_mut())
            .zip(strategies.into_iter().zip(rewards))
        {
            if x.iter().any(|v| !v.is_finite()) {
                return Err(Error::Environment {
                    step: t,
                    source: Box::new(Error::Numeric {
                        step: t,
                        what: "reward".into(),
                    }),
                });
            }
            m.observe_reward(&x)?;
            trace.regrets.push(regret_of(sigma.as_slice(), &x));
            trace.strategies.push(sigma);
            trace.rewards.push(x);
            trace.cumulative.push(m.cumulative.values().to_vec());
            trace.averages.push(m.average.strategy());
        }
        algo += algo_start.elapsed();
        traj.algo_time.push(algo);

        if with_exploitability {
            let averages: Vec<Strategy> = traj
                .learners
                .iter()
                .map(|l| l.averages[t - 1].clone())
                .collect();
            let expl = env
                .exploitability(&averages)
                .map_err(|e| Error::Environment {
                    step: t,
                    source: Box::new(e),
                })?;
            traj.exploitability.push(expl);
        }
    }
    for (m, trace) in minimizers.iter_mut().zip(traj.learners.iter_mut()) {
        trace.caches = m.take_caches();
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::neural::network::Dims;
    use crate::regret::Strategy;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Replays a fixed reward sequence regardless of the strategies played.
    struct Scripted {
        rewards: Vec<Vec<f64>>,
        t: usize,
    }

    impl Environment for Scripted {
        fn num_learners(&self) -> usize {
            1
        }
        fn num_actions(&self) -> usize {
            self.rewards[0].len()
        }
        fn delta_max(&self) -> f64 {
            1.0
        }
        fn rewards(&mut self, _: &[Strategy]) -> Result<Vec<Vec<f64>>> {
            let x = self
                .rewards
                .get(self.t)
                .cloned()
                .ok_or_else(|| Error::Protocol("script exhausted".into()))?;
            self.t += 1;
            Ok(vec![x])
        }
        fn exploitability(&mut self, _: &[Strategy]) -> Result<f64> {
            Ok(0.0)
        }
    }

    fn scripted(rewards: Vec<Vec<f64>>) -> Scripted {
        Scripted { rewards, t: 0 }
    }

    fn state(kind: MinimizerKind, r: &[f64], p: &[f64]) -> Minimizer {
        Minimizer::classic(kind, r.len(), 64)
            .unwrap()
            .with_state(CumulativeRegret::from_values(r.to_vec(), 0), p.to_vec())
            .unwrap()
    }

    #[test]
    fn next_strategy_examples() {
        let mut rm = state(MinimizerKind::Rm, &[2.0, 1.0, 1.0], &[0.0; 3]);
        assert_eq!(rm.next_strategy().as_slice(), &[0.5, 0.25, 0.25]);

        let mut prm = state(MinimizerKind::Prm, &[1.0, -3.0], &[1.0, 1.0]);
        assert_eq!(prm.next_strategy().as_slice(), &[1.0, 0.0]);

        let mut neg = state(MinimizerKind::Rm, &[-1.0, -2.0], &[0.0; 2]);
        assert_eq!(neg.next_strategy().as_slice(), &[0.5, 0.5]);

        let mut hedge = Minimizer::classic(MinimizerKind::Hedge, 3, 64).unwrap();
        let beta = hedge.hedge_beta().unwrap();
        assert!((beta - (2.0 * 3f64.ln() / 64.0).sqrt()).abs() < 1e-15);
        assert!((beta - 0.18529).abs() < 1e-5);
        for p in hedge.next_strategy().as_slice() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn observe_reward_examples() {
        let mut prm = Minimizer::classic(MinimizerKind::Prm, 2, 1).unwrap();
        prm.pending = Some(Strategy::pure(2, 0));
        prm.observe_reward(&[0.0, 1.0]).unwrap();
        assert_eq!(prm.cumulative().values(), &[0.0, 1.0]);
        assert_eq!(prm.prediction(), &[0.0, 1.0]);

        let mut rm = Minimizer::classic(MinimizerKind::Rm, 3, 1).unwrap();
        rm.next_strategy();
        rm.observe_reward(&[2.5, 2.5, 2.5]).unwrap();
        assert_eq!(rm.cumulative().values(), &[0.0; 3]);
        assert_eq!(rm.prediction(), &[0.0; 3]);
        assert_eq!(rm.step(), 1);

        let mut plus = Minimizer::classic(MinimizerKind::PrmPlus, 2, 1).unwrap();
        plus.pending = Some(Strategy::pure(2, 1));
        plus.observe_reward(&[1.0, 0.0]).unwrap();
        // <sigma, x> = 0, so r = x
        assert_eq!(plus.prediction(), &[1.0, 0.0]);
        assert_eq!(plus.cumulative().values(), &[1.0, 0.0]);
    }

    #[test]
    fn observe_without_strategy_is_protocol_error() {
        let mut rm = Minimizer::classic(MinimizerKind::Rm, 2, 1).unwrap();
        rm.next_strategy();
        rm.observe_reward(&[1.0, 0.0]).unwrap();
        assert!(matches!(
            rm.observe_reward(&[1.0, 0.0]),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn zero_horizon_is_empty() {
        let mut ms = vec![Minimizer::classic(MinimizerKind::Rm, 2, 1).unwrap()];
        let traj = run_episode(&mut ms, &mut scripted(vec![vec![1.0, 0.0]]), 0, true).unwrap();
        assert!(traj.is_empty());
        assert!(traj.exploitability.is_empty());
    }

    #[test]
    fn rm_locks_onto_dominant_action() {
        let mut ms = vec![Minimizer::classic(MinimizerKind::Rm, 2, 1).unwrap()];
        let traj =
            run_episode(&mut ms, &mut scripted(vec![vec![1.0, 0.0]; 50]), 50, false).unwrap();
        let l = &traj.learners[0];
        assert_eq!(l.strategies[0].as_slice(), &[0.5, 0.5]);
        for s in &l.strategies[1..] {
            assert_eq!(s.as_slice(), &[1.0, 0.0]);
        }
        // one step of 1/2 regret on action 0, then none
        assert_eq!(l.cumulative[49][0], 0.5);
        assert_eq!(traj.external_regret(50), 0.5);
    }

    #[test]
    fn environment_failure_carries_step() {
        let mut ms = vec![Minimizer::classic(MinimizerKind::Rm, 2, 1).unwrap()];
        let err =
            run_episode(&mut ms, &mut scripted(vec![vec![1.0, 0.0]; 3]), 5, false).unwrap_err();
        assert!(matches!(err, Error::Environment { step: 4, .. }));
    }

    #[test]
    fn neural_kind_needs_matching_head() {
        let dims = Dims {
            input: 4,
            hidden: 3,
            actions: 2,
        };
        let net = Arc::new(NetworkParams::zeros(dims, HeadKind::StrategySoftmax, 0.0).unwrap());
        assert!(
            Minimizer::neural(MinimizerKind::Nprm, net.clone(), 1.0, 8, vec![], false).is_err()
        );
        assert!(
            Minimizer::neural(MinimizerKind::Noa, net.clone(), 1.0, 8, vec![0.0], false).is_err()
        );
        assert!(Minimizer::neural(MinimizerKind::Noa, net, 1.0, 8, vec![], false).is_ok());
        assert!(Minimizer::classic(MinimizerKind::Nprm, 2, 8).is_err());
    }

    #[test]
    fn kind_names_round_trip() {
        for k in MinimizerKind::ALL {
            assert_eq!(k.name().parse::<MinimizerKind>().unwrap(), k);
        }
        assert!("xyz".parse::<MinimizerKind>().is_err());
    }

    #[test]
    fn rm_average_regret_shrinks() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut short = 0.0;
        let mut long = 0.0;
        for _ in 0..20 {
            let rewards: Vec<Vec<f64>> = (0..4096)
                .map(|_| (0..3).map(|_| rng.random_range(0.0..1.0)).collect())
                .collect();
            let mut ms = vec![Minimizer::classic(MinimizerKind::Rm, 3, 1).unwrap()];
            let traj = run_episode(&mut ms, &mut scripted(rewards), 4096, false).unwrap();
            short += traj.external_regret(64) / 64.0;
            long += traj.external_regret(4096) / 4096.0;
        }
        assert!(long < short, "{long} !< {short}");
    }

    proptest! {
        #[test]
        fn prm_with_zero_prediction_is_rm(
            rewards in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 4), 1..60)
        ) {
            let t = rewards.len();
            let mut rm = vec![Minimizer::classic(MinimizerKind::Rm, 4, t).unwrap()];
            let a = run_episode(&mut rm, &mut scripted(rewards.clone()), t, false).unwrap();
            // a PRM whose prediction is reset to zero every step
            let mut prm = Minimizer::classic(MinimizerKind::Prm, 4, t).unwrap();
            let mut env = scripted(rewards);
            for step in 0..t {
                prm.prediction = vec![0.0; 4];
                let sigma = prm.next_strategy();
                prop_assert_eq!(sigma.as_slice(), a.learners[0].strategies[step].as_slice());
                let x = env.rewards(&[sigma]).unwrap().remove(0);
                prm.observe_reward(&x).unwrap();
            }
        }

        #[test]
        fn hedge_is_strictly_positive(
            r in prop::collection::vec(-20.0f64..20.0, 2..6),
        ) {
            let p = vec![0.0; r.len()];
            let s = hedge_strategy(&r, &p, hedge_beta(r.len(), 64));
            prop_assert!(s.as_slice().iter().all(|v| *v > 0.0));
            prop_assert!((s.as_slice().iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }
}
