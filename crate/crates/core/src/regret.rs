//! Regret algebra over the probability simplex.
//!
//! Strategies, rewards and regrets are plain `f64` vectors indexed by action.
//! [`Strategy`] is the only validated type; rewards and regrets are slices
//! because they flow through every hot loop in the crate.

use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};

/// Tolerance for simplex membership.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// A point on the probability simplex over actions.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Strategy(Vec<f64>);

impl Strategy {
    /// Validates `probs` as a simplex point and renormalizes away drift.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidArgument("strategy over zero actions".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < -SIMPLEX_TOL) {
            return Err(Error::InvalidArgument(format!(
                "strategy has negative or non-finite entry: {probs:?}"
            )));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOL * probs.len() as f64 {
            return Err(Error::InvalidArgument(format!(
                "strategy sums to {total}, not 1"
            )));
        }
        Ok(Self::normalized(probs))
    }

    pub fn uniform(actions: usize) -> Self {
        assert!(actions > 0, "uniform strategy over zero actions");
        Strategy(vec![1.0 / actions as f64; actions])
    }

    pub fn pure(actions: usize, action: usize) -> Self {
        let mut probs = vec![0.0; actions];
        probs[action] = 1.0;
        Strategy(probs)
    }

    /// Normalizes nonnegative weights; falls back to uniform when they sum to zero.
    pub fn from_weights(weights: &[f64]) -> Self {
        let total: f64 = weights.iter().map(|w| w.max(0.0)).sum();
        if total > 0.0 && total.is_finite() {
            Strategy(weights.iter().map(|w| w.max(0.0) / total).collect())
        } else {
            Strategy::uniform(weights.len())
        }
    }

    /// Wraps a vector that the caller already produced by normalization.
    pub(crate) fn from_normalized(probs: Vec<f64>) -> Self {
        debug_assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        Strategy(probs)
    }

    fn normalized(mut probs: Vec<f64>) -> Self {
        for p in probs.iter_mut() {
            *p = p.max(0.0);
        }
        let total: f64 = probs.iter().sum();
        if total != 1.0 {
            for p in probs.iter_mut() {
                *p /= total;
            }
        }
        Strategy(probs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Expected reward `<sigma, x>`.
    pub fn dot(&self, x: &[f64]) -> f64 {
        self.0.iter().zip(x).map(|(s, v)| s * v).sum()
    }
}

impl std::ops::Index<usize> for Strategy {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// Difference between the highest and lowest reward an environment can produce.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewardBound(f64);

impl RewardBound {
    pub fn new(delta_max: f64) -> Result<Self> {
        if delta_max > 0.0 && delta_max.is_finite() {
            Ok(RewardBound(delta_max))
        } else {
            Err(Error::InvalidArgument(format!(
                "reward bound must be positive and finite, got {delta_max}"
            )))
        }
    }

    pub fn delta_max(self) -> f64 {
        self.0
    }
}

/// How instantaneous regrets are folded into the cumulative regret.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Aggregation {
    Full,
    /// `R <- [R + r]^+`, the "+" family.
    PositivePart,
}

/// `r = x - <sigma, x> 1`.
pub fn instantaneous_regret(sigma: &Strategy, x: &[f64]) -> Result<Vec<f64>> {
    check_dim(sigma.len(), x.len())?;
    Ok(regret_of(sigma.as_slice(), x))
}

pub(crate) fn regret_of(sigma: &[f64], x: &[f64]) -> Vec<f64> {
    let value: f64 = sigma.iter().zip(x).map(|(s, v)| s * v).sum();
    x.iter().map(|v| v - value).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CumulativeRegret {
    values: Vec<f64>,
    steps: usize,
}

impl CumulativeRegret {
    pub fn zeros(actions: usize) -> Self {
        CumulativeRegret {
            values: vec![0.0; actions],
            steps: 0,
        }
    }

    pub fn from_values(values: Vec<f64>, steps: usize) -> Self {
        CumulativeRegret { values, steps }
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    pub fn accumulate(&mut self, r: &[f64], mode: Aggregation) -> Result<()> {
        check_dim(self.values.len(), r.len())?;
        for (acc, ri) in self.values.iter_mut().zip(r) {
            *acc += ri;
            if mode == Aggregation::PositivePart && *acc < 0.0 {
                *acc = 0.0;
            }
        }
        self.steps += 1;
        Ok(())
    }

    /// Signed `max_a R_a`; negative when every action trails the learner.
    pub fn external_regret(&self) -> f64 {
        external_regret(&self.values)
    }
}

/// Signed maximum entry of a cumulative regret vector.
pub fn external_regret(cumulative: &[f64]) -> f64 {
    cumulative.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// Uniform running mean of the strategies played so far.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AverageStrategy {
    sum: Vec<f64>,
    steps: usize,
}

impl AverageStrategy {
    pub fn new(actions: usize) -> Self {
        AverageStrategy {
            sum: vec![0.0; actions],
            steps: 0,
        }
    }

    pub fn update(&mut self, sigma: &Strategy) -> Result<()> {
        check_dim(self.sum.len(), sigma.len())?;
        for (acc, s) in self.sum.iter_mut().zip(sigma.as_slice()) {
            *acc += s;
        }
        self.steps += 1;
        Ok(())
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// The current mean; uniform before the first update.
    pub fn strategy(&self) -> Strategy {
        if self.steps == 0 {
            return Strategy::uniform(self.sum.len());
        }
        let t = self.steps as f64;
        Strategy::normalized(self.sum.iter().map(|s| s / t).collect())
    }
}
