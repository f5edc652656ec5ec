//! Independent oracles shared by the integration tests and the acceptance
//! harness. Nothing here reuses the solver code it checks.

#![allow(dead_code)]

use std::collections::HashMap;

use microlp::{ComparisonOp, OptimizationDirection, Problem};
use regret_meta::env::Environment;
use regret_meta::games::endgame::{Endgame, EndgameConfig};
use regret_meta::regret::Strategy;

/// Replays a fixed reward sequence to a single learner, ignoring its
/// strategies.
pub struct ScriptedEnv {
    pub rewards: Vec<Vec<f64>>,
    pub delta_max: f64,
    pub step: usize,
}

impl Environment for ScriptedEnv {
    fn num_learners(&self) -> usize {
        1
    }
    fn num_actions(&self) -> usize {
        self.rewards[0].len()
    }
    fn delta_max(&self) -> f64 {
        self.delta_max
    }
    fn rewards(&mut self, _strategies: &[Strategy]) -> regret_meta::Result<Vec<Vec<f64>>> {
        let x = self.rewards[self.step].clone();
        self.step += 1;
        Ok(vec![x])
    }
    fn exploitability(&mut self, _averages: &[Strategy]) -> regret_meta::Result<f64> {
        Ok(0.0)
    }
}

/// `max_a sum_t (x^t_a - <sigma^t, x^t>)`, recomputed from scratch.
pub fn replayed_external_regret(strategies: &[Vec<f64>], rewards: &[Vec<f64>]) -> f64 {
    let n = rewards[0].len();
    let mut total = vec![0.0; n];
    for (s, x) in strategies.iter().zip(rewards) {
        let v: f64 = s.iter().zip(x).map(|(a, b)| a * b).sum();
        for a in 0..n {
            total[a] += x[a] - v;
        }
    }
    total.into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Value of a zero-sum matrix game for the row player, by LP.
pub fn lp_matrix_value(u: &[Vec<f64>]) -> f64 {
    let rows = u.len();
    let cols = u[0].len();
    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let v = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let x: Vec<_> = (0..rows).map(|_| lp.add_var(0.0, (0.0, 1.0))).collect();
    let ones: Vec<_> = x.iter().map(|&xi| (xi, 1.0)).collect();
    lp.add_constraint(ones.as_slice(), ComparisonOp::Eq, 1.0);
    for c in 0..cols {
        let mut row: Vec<_> = x
            .iter()
            .zip(u)
            .map(|(&xi, payoffs)| (xi, payoffs[c]))
            .collect();
        row.push((v, -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Ge, 0.0);
    }
    lp.solve().unwrap().into_solution().unwrap().objective()
}

/// Betting history and private card of an information set.
type InfosetKey = (String, usize);

/// One history of the betting, written from the rules rather than from the
/// solver's tree.
#[derive(Clone, Debug)]
struct Betting {
    contrib: [f64; 2],
    to_act: usize,
    /// Opening action of the round was a check.
    checked: bool,
    /// `None` before any bet, else raises made after it.
    raises: Option<usize>,
}

enum Outcome {
    Fold(usize, [f64; 2]),
    Showdown([f64; 2]),
    Next(Betting),
}

fn moves(cfg: &EndgameConfig, b: &Betting) -> Vec<(String, Outcome)> {
    let me = b.to_act;
    let other = 1 - me;
    let pot = b.contrib[0] + b.contrib[1];
    let mut out = Vec::new();
    match b.raises {
        None => {
            let check = if b.checked {
                Outcome::Showdown(b.contrib)
            } else {
                Outcome::Next(Betting {
                    to_act: other,
                    checked: true,
                    ..b.clone()
                })
            };
            out.push(("k".to_string(), check));
            for (i, f) in cfg.bet_fractions.iter().enumerate() {
                let mut c = b.contrib;
                c[me] += f * pot;
                out.push((
                    format!("b{i}"),
                    Outcome::Next(Betting {
                        contrib: c,
                        to_act: other,
                        checked: b.checked,
                        raises: Some(0),
                    }),
                ));
            }
        }
        Some(n) => {
            out.push(("f".to_string(), Outcome::Fold(me, b.contrib)));
            let mut called = b.contrib;
            called[me] = called[other];
            out.push(("c".to_string(), Outcome::Showdown(called)));
            if n < cfg.max_raises {
                let pot_after = called[0] + called[1];
                for (i, f) in cfg.bet_fractions.iter().enumerate() {
                    let mut c = called;
                    c[me] += f * pot_after;
                    out.push((
                        format!("r{i}"),
                        Outcome::Next(Betting {
                            contrib: c,
                            to_act: other,
                            checked: b.checked,
                            raises: Some(n + 1),
                        }),
                    ));
                }
            }
        }
    }
    out
}

fn root(cfg: &EndgameConfig) -> Betting {
    Betting {
        contrib: [cfg.ante, cfg.ante],
        to_act: 0,
        checked: false,
        raises: None,
    }
}

fn count_betting(cfg: &EndgameConfig, b: &Betting) -> usize {
    1 + moves(cfg, b)
        .into_iter()
        .map(|(_, o)| match o {
            Outcome::Next(n) => count_betting(cfg, &n),
            _ => 1,
        })
        .sum::<usize>()
}

/// Deal probabilities from the raw beliefs: independent draws conditioned
/// on distinct cards.
fn deals(game: &Endgame) -> Vec<(usize, usize, f64)> {
    let deck = game.config.deck_ranks;
    let b = &game.beliefs.players;
    let mut out = Vec::new();
    let mut total = 0.0;
    for h0 in 0..deck {
        for h1 in 0..deck {
            let w = b[0][h0] * b[1][h1];
            if h0 != h1 && w > 0.0 {
                out.push((h0, h1, w));
                total += w;
            }
        }
    }
    out.iter_mut().for_each(|d| d.2 /= total);
    out
}

/// Node count of the explicit game tree (chance root plus one betting tree
/// per possible deal), by walking every history.
pub fn explicit_node_count(game: &Endgame) -> usize {
    1 + deals(game).len() * count_betting(&game.config, &root(&game.config))
}

fn payoff0(outcome: &Outcome, h0: usize, h1: usize) -> f64 {
    match outcome {
        Outcome::Fold(folder, c) => {
            if *folder == 0 {
                -c[0]
            } else {
                c[1]
            }
        }
        Outcome::Showdown(c) => {
            // one card per rank: the higher private card wins
            if h0 > h1 {
                c[1]
            } else {
                -c[0]
            }
        }
        Outcome::Next(_) => unreachable!(),
    }
}

#[derive(Default)]
struct SequenceForm {
    /// Per player: sequence id -> parent sequence of its infoset (None for
    /// the empty sequence, id 0).
    seqs: [Vec<Option<usize>>; 2],
    /// Per player: infoset key -> (parent sequence, child sequences).
    infosets: [HashMap<InfosetKey, (usize, Vec<usize>)>; 2],
    payoff: HashMap<(usize, usize), f64>,
}

impl SequenceForm {
    fn walk(
        &mut self,
        cfg: &EndgameConfig,
        b: &Betting,
        hist: &str,
        cards: [usize; 2],
        seq: [usize; 2],
        prob: f64,
    ) {
        let p = b.to_act;
        let options = moves(cfg, b);
        let key = (hist.to_string(), cards[p]);
        if !self.infosets[p].contains_key(&key) {
            let children: Vec<usize> = options
                .iter()
                .map(|_| {
                    self.seqs[p].push(Some(seq[p]));
                    self.seqs[p].len() - 1
                })
                .collect();
            self.infosets[p].insert(key.clone(), (seq[p], children));
        }
        let children = self.infosets[p][&key].1.clone();
        for ((label, outcome), child) in options.into_iter().zip(children) {
            let mut next_seq = seq;
            next_seq[p] = child;
            let h = format!("{hist}{label}");
            match outcome {
                Outcome::Next(n) => self.walk(cfg, &n, &h, cards, next_seq, prob),
                terminal => {
                    *self.payoff.entry((next_seq[0], next_seq[1])).or_default() +=
                        prob * payoff0(&terminal, cards[0], cards[1]);
                }
            }
        }
    }
}

/// Player 0's game value by solving the sequence-form linear program.
pub fn lp_endgame_value(game: &Endgame) -> f64 {
    let cfg = &game.config;
    let mut sf = SequenceForm {
        seqs: [vec![None], vec![None]],
        ..SequenceForm::default()
    };
    for (h0, h1, w) in deals(game) {
        sf.walk(cfg, &root(cfg), "", [h0, h1], [0, 0], w);
    }

    let mut lp = Problem::new(OptimizationDirection::Maximize);
    let x: Vec<_> = sf.seqs[0]
        .iter()
        .map(|_| lp.add_var(0.0, (0.0, f64::INFINITY)))
        .collect();
    lp.add_constraint([(x[0], 1.0)], ComparisonOp::Eq, 1.0);
    for (parent, children) in sf.infosets[0].values() {
        let mut row: Vec<_> = children.iter().map(|&c| (x[c], 1.0)).collect();
        row.push((x[*parent], -1.0));
        lp.add_constraint(row.as_slice(), ComparisonOp::Eq, 0.0);
    }
    // One dual variable for the root constraint of player 1 plus one per
    // player 1 information set.
    let q0 = lp.add_var(1.0, (f64::NEG_INFINITY, f64::INFINITY));
    let infosets1: Vec<_> = sf.infosets[1].values().collect();
    let q: Vec<_> = infosets1
        .iter()
        .map(|_| lp.add_var(0.0, (f64::NEG_INFINITY, f64::INFINITY)))
        .collect();
    for s1 in 0..sf.seqs[1].len() {
        let mut row = Vec::new();
        if s1 == 0 {
            row.push((q0, 1.0));
        }
        for (j, (parent, children)) in infosets1.iter().enumerate() {
            if children.contains(&s1) {
                row.push((q[j], 1.0));
            }
            if *parent == s1 {
                row.push((q[j], -1.0));
            }
        }
        for (&(s0, t1), &v) in &sf.payoff {
            if t1 == s1 {
                row.push((x[s0], -v));
            }
        }
        lp.add_constraint(row.as_slice(), ComparisonOp::Le, 0.0);
    }
    lp.solve().unwrap().into_solution().unwrap().objective()
}

pub mod learners {
    use std::sync::Arc;

    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use regret_meta::minimizers::{Minimizer, MinimizerKind};
    use regret_meta::neural::{Dims, HeadKind, NetworkParams};
    use regret_meta::regret::CumulativeRegret;

    /// Random rewards in `[-1, 1]`, `horizon` steps over 2 to 5 actions.
    pub fn random_rewards(rng: &mut ChaCha8Rng, horizon: usize) -> Vec<Vec<f64>> {
        let actions = rng.random_range(2..=5);
        (0..horizon)
            .map(|_| (0..actions).map(|_| rng.random_range(-1.0..=1.0)).collect())
            .collect()
    }

    /// Strategies of a minimizer fed `rewards`; `zero_prediction` resets the
    /// prediction to zero before every step.
    pub fn play(mut m: Minimizer, rewards: &[Vec<f64>], zero_prediction: bool) -> Vec<Vec<f64>> {
        let n = rewards[0].len();
        let mut out = Vec::new();
        for x in rewards {
            if zero_prediction {
                let cumulative = m.cumulative().clone();
                m = m.with_state(cumulative, vec![0.0; n]).unwrap();
            }
            out.push(m.next_strategy().into_vec());
            m.observe_reward(x).unwrap();
        }
        out
    }

    /// RM, PRM with its prediction forced to zero and NPRM with an untrained
    /// (zero) head on one random reward sequence; true when all three play
    /// bit-identical strategies.
    pub fn reduction_identity_case(seed: u64, horizon: usize) -> bool {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rewards = random_rewards(&mut rng, horizon);
        let n = rewards[0].len();
        let rm = play(
            Minimizer::classic(MinimizerKind::Rm, n, horizon).unwrap(),
            &rewards,
            false,
        );
        let prm = play(
            Minimizer::classic(MinimizerKind::Prm, n, horizon).unwrap(),
            &rewards,
            true,
        );
        let dims = Dims {
            input: 2 * n,
            hidden: 6,
            actions: n,
        };
        let net = NetworkParams::init(dims, HeadKind::PredictionBounded, 4.0, &mut rng).unwrap();
        let nprm = Minimizer::neural(
            MinimizerKind::Nprm,
            Arc::new(net),
            2.0,
            horizon,
            Vec::new(),
            false,
        )
        .unwrap();
        let nprm = play(nprm, &rewards, false);
        let same = |a: &[Vec<f64>], b: &[Vec<f64>]| {
            a.iter()
                .flatten()
                .zip(b.iter().flatten())
                .all(|(x, y)| x.to_bits() == y.to_bits())
        };
        same(&rm, &prm) && same(&rm, &nprm)
    }

    /// Outcome of one bound trial: the smallest slack of the closed-form
    /// bound over all prefixes (negative means a violation).
    pub fn bound_case(
        seed: u64,
        actions: usize,
        horizon: usize,
        delta_max: f64,
        alpha: f64,
        adaptive: bool,
    ) -> f64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut m = Minimizer::classic(MinimizerKind::Prm, actions, horizon).unwrap();
        let mut total = vec![0.0; actions];
        let mut played = vec![0.0; actions];
        let mut slack = f64::INFINITY;
        for t in 1..=horizon {
            let p: Vec<f64> = (0..actions)
                .map(|_| rng.random_range(-alpha..=alpha))
                .collect();
            let cumulative: CumulativeRegret = m.cumulative().clone();
            m = m.with_state(cumulative, p).unwrap();
            let sigma = m.next_strategy().into_vec();
            let lo = -delta_max / 2.0;
            let x: Vec<f64> = if adaptive {
                // pay out on the action the learner currently neglects most
                let worst = (0..actions)
                    .min_by(|&a, &b| (played[a] + sigma[a]).total_cmp(&(played[b] + sigma[b])))
                    .unwrap();
                (0..actions)
                    .map(|a| {
                        if a == worst {
                            lo + delta_max
                        } else {
                            lo + rng.random_range(0.0..=0.2) * delta_max
                        }
                    })
                    .collect()
            } else {
                (0..actions)
                    .map(|_| lo + rng.random_range(0.0..=delta_max))
                    .collect()
            };
            for a in 0..actions {
                played[a] += sigma[a];
            }
            let v: f64 = sigma.iter().zip(&x).map(|(s, r)| s * r).sum();
            for a in 0..actions {
                total[a] += x[a] - v;
            }
            m.observe_reward(&x).unwrap();
            let regret = total.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let bound =
                2f64.sqrt() * ((2.0 * delta_max + alpha) * actions as f64 * t as f64).sqrt();
            slack = slack.min(bound - regret);
        }
        slack
    }
}
