//! CFR+ on the endgame, vectorized over private hands.
//!
//! Every public node carries one value per private card of the player being
//! evaluated. Counterfactual values at a node exclude that player's own
//! reach and include the opponent's and chance's.

use crate::error::{check_dim, Error, Result};
use crate::games::endgame::{Endgame, NodeKind};
use crate::regret::Strategy;

/// A behavior strategy for both players: for each decision node (in
/// `tree.decisions` order) a `deck x actions` row-major table.
#[derive(Clone, Debug, PartialEq)]
pub struct Profile {
    pub tables: Vec<Vec<f64>>,
}

impl Profile {
    pub fn uniform(game: &Endgame) -> Self {
        let deck = game.deck();
        let tables = game
            .tree
            .decisions
            .iter()
            .map(|&d| {
                let a = num_actions(game, d);
                vec![1.0 / a as f64; deck * a]
            })
            .collect();
        Profile { tables }
    }

    /// Strategy at decision slot `slot` for private card `hand`.
    pub fn at(&self, game: &Endgame, slot: usize, hand: usize) -> &[f64] {
        let a = num_actions(game, game.tree.decisions[slot]);
        &self.tables[slot][hand * a..(hand + 1) * a]
    }
}

fn num_actions(game: &Endgame, node: usize) -> usize {
    match &game.tree.nodes[node].kind {
        NodeKind::Decision { actions, .. } => actions.len(),
        _ => 0,
    }
}

/// Root strategies of player 0 pinned for every private card.
#[derive(Clone, Debug, PartialEq)]
pub struct FrozenRoot {
    /// `deck x root_actions`, row-major.
    pub table: Vec<f64>,
}

impl FrozenRoot {
    /// Learner strategies in `game.learner_hands()` order; cards that can
    /// never be dealt get the uniform strategy.
    pub fn from_learners(game: &Endgame, strategies: &[Strategy]) -> Result<Self> {
        let hands = game.learner_hands();
        check_dim(hands.len(), strategies.len())?;
        let a = game.num_root_actions();
        let mut table = vec![1.0 / a as f64; game.deck() * a];
        for (&h, s) in hands.iter().zip(strategies) {
            check_dim(a, s.len())?;
            table[h * a..(h + 1) * a].copy_from_slice(s.as_slice());
        }
        Ok(FrozenRoot { table })
    }
}

#[derive(Clone, Debug)]
pub struct SolveResult {
    /// Linearly weighted average profile (root pinned when frozen).
    pub average: Profile,
    /// For each learner hand, the expected value of each root action given
    /// that hand, under the average profile.
    pub root_values: Vec<Vec<f64>>,
    /// Player 0's expected value under the average profile.
    pub value: f64,
    /// Sum of both players' best-response improvements against the
    /// average profile, in the game the solver played (pinned root
    /// included).
    pub nash_gap: f64,
    pub iterations: usize,
}

/// Mutable tables and scratch buffers of one solve.
struct Workspace<'a> {
    game: &'a Endgame,
    deck: usize,
    /// Index of each node in `tree.decisions`, if a decision node.
    slot_of: Vec<Option<usize>>,
    reach: [Vec<f64>; 2],
    cfv: Vec<f64>,
    /// Per player and terminal node: `deck x deck` matrix of deal
    /// probability times the player's payoff, own card first.
    payoffs: [Vec<Vec<f64>>; 2],
}

impl<'a> Workspace<'a> {
    fn new(game: &'a Endgame) -> Self {
        let n = game.tree.len();
        let deck = game.deck();
        let mut slot_of = vec![None; n];
        for (s, &d) in game.tree.decisions.iter().enumerate() {
            slot_of[d] = Some(s);
        }
        let mut payoffs = [vec![Vec::new(); n], vec![Vec::new(); n]];
        for (node, pn) in game.tree.nodes.iter().enumerate() {
            if matches!(pn.kind, NodeKind::Decision { .. }) {
                continue;
            }
            let mut m0 = vec![0.0; deck * deck];
            let mut m1 = vec![0.0; deck * deck];
            for h0 in 0..deck {
                for h1 in 0..deck {
                    let w = game.deal[h0 * deck + h1];
                    if w == 0.0 {
                        continue;
                    }
                    let u0 = match pn.kind {
                        NodeKind::Fold { folder: 0 } => -pn.contrib[0],
                        NodeKind::Fold { .. } => pn.contrib[1],
                        _ => game.showdown_sign(h0, h1) * pn.contrib[0],
                    };
                    m0[h0 * deck + h1] = w * u0;
                    m1[h1 * deck + h0] = -w * u0;
                }
            }
            payoffs[0][node] = m0;
            payoffs[1][node] = m1;
        }
        Workspace {
            game,
            deck,
            slot_of,
            reach: [vec![0.0; n * deck], vec![0.0; n * deck]],
            cfv: vec![0.0; n * deck],
            payoffs,
        }
    }

    /// Forward pass: both players' reach probabilities at every node.
    fn forward(&mut self, profile: &Profile) {
        let deck = self.deck;
        self.reach[0][..deck].fill(1.0);
        self.reach[1][..deck].fill(1.0);
        for (slot, &node) in self.game.tree.decisions.iter().enumerate() {
            let NodeKind::Decision {
                player, children, ..
            } = &self.game.tree.nodes[node].kind
            else {
                unreachable!()
            };
            let a = children.len();
            let table = &profile.tables[slot];
            for (k, &child) in children.iter().enumerate() {
                for p in 0..2 {
                    let (head, tail) = self.reach[p].split_at_mut(child * deck);
                    let parent = &head[node * deck..(node + 1) * deck];
                    let dst = &mut tail[..deck];
                    if p == *player {
                        for h in 0..deck {
                            dst[h] = parent[h] * table[h * a + k];
                        }
                    } else {
                        dst.copy_from_slice(parent);
                    }
                }
            }
        }
    }

    /// Counterfactual values of `player` at a terminal node.
    fn terminal(&mut self, node: usize, player: usize) {
        let deck = self.deck;
        let m = &self.payoffs[player][node];
        let opp_reach = &self.reach[1 - player][node * deck..(node + 1) * deck];
        let out = &mut self.cfv[node * deck..(node + 1) * deck];
        for (h, o) in out.iter_mut().enumerate() {
            *o = m[h * deck..(h + 1) * deck]
                .iter()
                .zip(opp_reach)
                .map(|(a, b)| a * b)
                .sum();
        }
    }

    /// Backward pass for `player`. At the player's own decision nodes
    /// `combine` maps the children's values to the node's value; at the
    /// opponent's nodes values add up.
    fn backward<F>(&mut self, player: usize, mut combine: F)
    where
        F: FnMut(usize, usize, &[usize], &mut [f64], &[f64]),
    {
        let deck = self.deck;
        for node in (0..self.game.tree.len()).rev() {
            match &self.game.tree.nodes[node].kind {
                NodeKind::Decision {
                    player: p,
                    children,
                    ..
                } => {
                    let (head, tail) = self.cfv.split_at_mut((node + 1) * deck);
                    let out = &mut head[node * deck..];
                    // children come after their parent in preorder
                    if *p == player {
                        let slot = self.slot_of[node].expect("decision slot");
                        combine(slot, node, children, out, tail);
                    } else {
                        out.fill(0.0);
                        for &c in children {
                            let src = &tail[(c - node - 1) * deck..(c - node) * deck];
                            for h in 0..deck {
                                out[h] += src[h];
                            }
                        }
                    }
                }
                _ => self.terminal(node, player),
            }
        }
    }
}

/// Offsets of a child's values inside the `tail` slice handed to `combine`.
fn child_values(tail: &[f64], node: usize, child: usize, deck: usize) -> &[f64] {
    &tail[(child - node - 1) * deck..(child - node) * deck]
}

fn regret_matching_plus(q: &[f64], out: &mut [f64]) {
    let s: f64 = q.iter().sum();
    if s > 0.0 {
        for (o, v) in out.iter_mut().zip(q) {
            *o = v / s;
        }
    } else {
        out.fill(1.0 / q.len() as f64);
    }
}

/// Values of `player` against `profile` (own nodes follow the profile).
/// Returns the per-node counterfactual value buffer.
fn evaluate(game: &Endgame, profile: &Profile, player: usize) -> Vec<f64> {
    let mut ws = Workspace::new(game);
    ws.forward(profile);
    let deck = ws.deck;
    ws.backward(player, |slot, node, children, out, tail| {
        let a = children.len();
        let table = &profile.tables[slot];
        out.fill(0.0);
        for (k, &c) in children.iter().enumerate() {
            let v = child_values(tail, node, c, deck);
            for h in 0..deck {
                out[h] += table[h * a + k] * v[h];
            }
        }
    });
    ws.cfv
}

/// Best-response value of `player` against the opponent's part of
/// `profile`. With `pinned_root`, player 0 keeps its root strategy from
/// `profile` instead of optimizing it.
pub fn best_response_value(
    game: &Endgame,
    profile: &Profile,
    player: usize,
    pinned_root: bool,
) -> f64 {
    let mut ws = Workspace::new(game);
    ws.forward(profile);
    let deck = ws.deck;
    ws.backward(player, |slot, node, children, out, tail| {
        let a = children.len();
        if pinned_root && node == 0 {
            let table = &profile.tables[slot];
            out.fill(0.0);
            for (k, &c) in children.iter().enumerate() {
                let v = child_values(tail, node, c, deck);
                for h in 0..deck {
                    out[h] += table[h * a + k] * v[h];
                }
            }
        } else {
            out.fill(f64::NEG_INFINITY);
            for &c in children {
                let v = child_values(tail, node, c, deck);
                for h in 0..deck {
                    out[h] = out[h].max(v[h]);
                }
            }
        }
    });
    ws.cfv[..deck].iter().sum()
}

/// Player 0's expected value under `profile`.
pub fn profile_value(game: &Endgame, profile: &Profile) -> f64 {
    evaluate(game, profile, 0)[..game.deck()].iter().sum()
}

/// Both players' best-response gains against `profile`, summed.
pub fn nash_gap(game: &Endgame, profile: &Profile, pinned_root: bool) -> f64 {
    best_response_value(game, profile, 0, pinned_root)
        + best_response_value(game, profile, 1, false)
}

/// Runs `iters` iterations of CFR+: regret-matching+ at every information
/// set, alternating updates (player 0 then player 1), strategy averaging
/// with weight `t` at iteration `t`.
pub fn cfr_plus_solve(
    game: &Endgame,
    frozen: Option<&FrozenRoot>,
    iters: usize,
) -> Result<SolveResult> {
    if iters == 0 {
        return Err(Error::InvalidArgument(
            "CFR+ needs at least one iteration".into(),
        ));
    }
    let deck = game.deck();
    let root_a = game.num_root_actions();
    if let Some(f) = frozen {
        check_dim(deck * root_a, f.table.len())?;
    }
    let mut current = Profile::uniform(game);
    if let Some(f) = frozen {
        current.tables[0].clone_from(&f.table);
    }
    let mut regrets: Vec<Vec<f64>> = current.tables.iter().map(|t| vec![0.0; t.len()]).collect();
    let mut sums: Vec<Vec<f64>> = regrets.clone();
    let mut ws = Workspace::new(game);

    for t in 1..=iters {
        let weight = t as f64;
        for player in 0..2 {
            ws.forward(&current);
            let reach = ws.reach[player].clone();
            let cur = &current;
            let regrets_ref = &mut regrets;
            let sums_ref = &mut sums;
            ws.backward(player, |slot, node, children, out, tail| {
                let a = children.len();
                let table = &cur.tables[slot];
                out.fill(0.0);
                for (k, &c) in children.iter().enumerate() {
                    let v = child_values(tail, node, c, deck);
                    for h in 0..deck {
                        out[h] += table[h * a + k] * v[h];
                    }
                }
                if frozen.is_some() && node == 0 {
                    return;
                }
                let q = &mut regrets_ref[slot];
                let s = &mut sums_ref[slot];
                let own = &reach[node * deck..(node + 1) * deck];
                for (k, &c) in children.iter().enumerate() {
                    let v = child_values(tail, node, c, deck);
                    for h in 0..deck {
                        let i = h * a + k;
                        q[i] = (q[i] + v[h] - out[h]).max(0.0);
                        s[i] += weight * own[h] * table[i];
                    }
                }
            });
            for (slot, &node) in game.tree.decisions.iter().enumerate() {
                if frozen.is_some() && node == 0 {
                    continue;
                }
                let NodeKind::Decision {
                    player: p,
                    children,
                    ..
                } = &game.tree.nodes[node].kind
                else {
                    unreachable!()
                };
                if *p != player {
                    continue;
                }
                let a = children.len();
                for h in 0..deck {
                    regret_matching_plus(
                        &regrets[slot][h * a..(h + 1) * a],
                        &mut current.tables[slot][h * a..(h + 1) * a],
                    );
                }
            }
        }
    }

    let mut average = Profile::uniform(game);
    for (slot, &node) in game.tree.decisions.iter().enumerate() {
        if node == 0 {
            if let Some(f) = frozen {
                average.tables[0].clone_from(&f.table);
                continue;
            }
        }
        let a = num_actions(game, node);
        for h in 0..deck {
            regret_matching_plus(
                &sums[slot][h * a..(h + 1) * a],
                &mut average.tables[slot][h * a..(h + 1) * a],
            );
        }
    }

    let cfv = evaluate(game, &average, 0);
    let NodeKind::Decision { children, .. } = &game.tree.nodes[0].kind else {
        unreachable!()
    };
    let root_values = game
        .learner_hands()
        .into_iter()
        .map(|h| {
            let m = game.marginals[0][h];
            children.iter().map(|&c| cfv[c * deck + h] / m).collect()
        })
        .collect();
    let value = cfv[..deck].iter().sum();
    let gap = nash_gap(game, &average, frozen.is_some());
    Ok(SolveResult {
        average,
        root_values,
        value,
        nash_gap: gap,
        iterations: iters,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::games::endgame::{EndgameConfig, EndgameDistribution};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sampled(seed: u64) -> Endgame {
        EndgameDistribution::Sampled
            .sample(
                &EndgameConfig::default(),
                &mut ChaCha8Rng::seed_from_u64(seed),
            )
            .unwrap()
    }

    #[test]
    fn gap_shrinks_with_iterations() {
        for seed in 0..5 {
            let g = sampled(seed);
            let short = cfr_plus_solve(&g, None, 10).unwrap();
            let long = cfr_plus_solve(&g, None, 1000).unwrap();
            assert!(long.nash_gap < short.nash_gap, "seed {seed}");
            assert!(long.nash_gap < 1e-3, "seed {seed}: {}", long.nash_gap);
            assert!(long.nash_gap >= -1e-12);
        }
    }

    #[test]
    fn deterministic() {
        let g = sampled(3);
        let a = cfr_plus_solve(&g, None, 200).unwrap();
        let b = cfr_plus_solve(&g, None, 200).unwrap();
        assert_eq!(a.average, b.average);
        assert_eq!(a.value.to_bits(), b.value.to_bits());
    }

    #[test]
    fn root_values_are_consistent() {
        let g = sampled(4);
        let res = cfr_plus_solve(&g, None, 300).unwrap();
        // value = sum_h P(h) sum_a sigma(h, a) x_a(h)
        let mut v = 0.0;
        for (i, h) in g.learner_hands().into_iter().enumerate() {
            let sigma = res.average.at(&g, 0, h);
            let x: f64 = sigma
                .iter()
                .zip(&res.root_values[i])
                .map(|(s, x)| s * x)
                .sum();
            v += g.marginals[0][h] * x;
            for x in &res.root_values[i] {
                assert!(x.abs() <= g.tree.max_stake() + 1e-12);
            }
        }
        assert!((v - res.value).abs() < 1e-12);
    }

    #[test]
    fn frozen_root_is_respected() {
        let g = sampled(5);
        let hands = g.learner_hands();
        let strategies: Vec<Strategy> = hands.iter().map(|_| Strategy::uniform(2)).collect();
        let frozen = FrozenRoot::from_learners(&g, &strategies).unwrap();
        let pinned = cfr_plus_solve(&g, Some(&frozen), 1000).unwrap();
        let free = cfr_plus_solve(&g, None, 1000).unwrap();
        assert_eq!(pinned.average.tables[0], frozen.table);
        assert!(pinned.value <= free.value + free.nash_gap + pinned.nash_gap);
    }
}
