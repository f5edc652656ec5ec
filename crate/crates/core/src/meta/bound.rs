//! Worst-case regret guarantee of predictive regret matching, checked on
//! recorded trajectories.

use crate::minimizers::{LearnerTrace, Trajectory};
use crate::regret::external_regret;

/// `sqrt(2) * ((2 delta_max + alpha) |A| t)^(1/2)`.
pub fn closed_form_bound(delta_max: f64, alpha: f64, actions: usize, t: usize) -> f64 {
    std::f64::consts::SQRT_2 * ((2.0 * delta_max + alpha) * actions as f64 * t as f64).sqrt()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BoundCheck {
    pub holds: bool,
    /// Smallest slack over all prefixes and both bounds; negative when
    /// violated.
    pub margin: f64,
    /// Smallest slack of `R <= sqrt(2 sum_t ||r^t - p^t||^2)`.
    pub intermediate_margin: f64,
    /// Smallest slack of the closed-form bound.
    pub closed_margin: f64,
}

impl BoundCheck {
    fn merge(self, other: BoundCheck) -> BoundCheck {
        BoundCheck {
            holds: self.holds && other.holds,
            margin: self.margin.min(other.margin),
            intermediate_margin: self.intermediate_margin.min(other.intermediate_margin),
            closed_margin: self.closed_margin.min(other.closed_margin),
        }
    }
}

/// Checks both regret bounds at every prefix of one learner's history,
/// using the predictions it recorded.
pub fn bound_check(trace: &LearnerTrace, alpha: f64, delta_max: f64) -> BoundCheck {
    let actions = trace.regrets.first().map_or(0, Vec::len);
    let mut sum = vec![0.0; actions];
    let mut dev = 0.0;
    let mut inter = f64::INFINITY;
    let mut closed = f64::INFINITY;
    for (t, (r, p)) in trace.regrets.iter().zip(&trace.predictions).enumerate() {
        for (s, v) in sum.iter_mut().zip(r) {
            *s += v;
        }
        dev += r.iter().zip(p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let regret = external_regret(&sum);
        inter = inter.min((2.0 * dev).sqrt() - regret);
        closed = closed.min(closed_form_bound(delta_max, alpha, actions, t + 1) - regret);
    }
    // a few ulps of slack for the exact-equality cases
    let tol = 1e-9 * (1.0 + delta_max);
    BoundCheck {
        holds: inter >= -tol && closed >= -tol,
        margin: inter.min(closed),
        intermediate_margin: inter,
        closed_margin: closed,
    }
}

/// The weakest learner's check.
pub fn trajectory_bound_check(traj: &Trajectory, alpha: f64, delta_max: f64) -> BoundCheck {
    traj.learners
        .iter()
        .map(|l| bound_check(l, alpha, delta_max))
        .reduce(BoundCheck::merge)
        .unwrap_or(BoundCheck {
            holds: true,
            margin: f64::INFINITY,
            intermediate_margin: f64::INFINITY,
            closed_margin: f64::INFINITY,
        })
}
