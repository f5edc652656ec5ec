//! A small-deck, single-street poker endgame.
//!
//! All public cards are already dealt. Each player holds one private card
//! from a single-suit deck; both have posted an ante. Player 0 (the
//! learner) acts first. The betting is public, so it forms one tree shared
//! by every private deal; an information set is a decision node of that
//! tree paired with the acting player's private card.

use std::fmt::Write as _;

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use rand_distr::Exp1;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EndgameConfig {
    /// Number of cards, one per rank.
    pub deck_ranks: usize,
    pub board_cards: usize,
    /// Bet and raise sizes as fractions of the pot.
    pub bet_fractions: Vec<f64>,
    /// Raises allowed after the opening bet.
    pub max_raises: usize,
    /// Chips each player posts before play.
    pub ante: f64,
}

impl Default for EndgameConfig {
    fn default() -> Self {
        EndgameConfig {
            deck_ranks: 6,
            board_cards: 1,
            bet_fractions: vec![1.0],
            max_raises: 1,
            ante: 1.0,
        }
    }
}

impl EndgameConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.deck_ranks < 3 {
            return bad(format!("deck_ranks must be >= 3, got {}", self.deck_ranks));
        }
        if self.board_cards == 0 || self.board_cards + 2 > self.deck_ranks {
            return bad(format!(
                "board_cards = {} leaves no room for two private hands in a {}-card deck",
                self.board_cards, self.deck_ranks
            ));
        }
        if self.max_raises > 2 {
            return bad(format!("max_raises must be <= 2, got {}", self.max_raises));
        }
        if self.bet_fractions.is_empty()
            || self
                .bet_fractions
                .iter()
                .any(|f| !(f.is_finite() && *f > 0.0))
        {
            return bad("bet_fractions must be a nonempty list of positive numbers".into());
        }
        if !(self.ante.is_finite() && self.ante > 0.0) {
            return bad(format!("ante must be positive, got {}", self.ante));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Action {
    Check,
    /// Opening bet, by index into `bet_fractions`.
    Bet(usize),
    Fold,
    Call,
    Raise(usize),
}

impl Action {
    pub fn label(self) -> String {
        match self {
            Action::Check => "check".into(),
            Action::Bet(i) => format!("bet{i}"),
            Action::Fold => "fold".into(),
            Action::Call => "call".into(),
            Action::Raise(i) => format!("raise{i}"),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum NodeKind {
    Decision {
        player: usize,
        actions: Vec<Action>,
        children: Vec<usize>,
    },
    Fold {
        folder: usize,
    },
    Showdown,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PublicNode {
    pub kind: NodeKind,
    /// Chips each player has put in so far.
    pub contrib: [f64; 2],
}

/// The public betting tree, nodes in preorder (every child after its
/// parent).
#[derive(Clone, Debug, PartialEq)]
pub struct BettingTree {
    pub nodes: Vec<PublicNode>,
    /// Indices of decision nodes, in preorder.
    pub decisions: Vec<usize>,
}

impl BettingTree {
    pub fn build(config: &EndgameConfig) -> Self {
        let mut tree = BettingTree {
            nodes: Vec::new(),
            decisions: Vec::new(),
        };
        tree.grow(config, [config.ante, config.ante], 0, false, None);
        tree
    }

    /// `raises`: `None` while nobody has bet, else raises made so far.
    fn grow(
        &mut self,
        config: &EndgameConfig,
        contrib: [f64; 2],
        to_act: usize,
        checked: bool,
        raises: Option<usize>,
    ) -> usize {
        let id = self.nodes.len();
        self.nodes.push(PublicNode {
            kind: NodeKind::Showdown,
            contrib,
        });
        self.decisions.push(id);
        let other = 1 - to_act;
        let pot = contrib[0] + contrib[1];
        let mut actions = Vec::new();
        let mut children = Vec::new();
        match raises {
            None => {
                actions.push(Action::Check);
                children.push(if checked {
                    self.leaf(NodeKind::Showdown, contrib)
                } else {
                    self.grow(config, contrib, other, true, None)
                });
                for (i, f) in config.bet_fractions.iter().enumerate() {
                    let mut next = contrib;
                    next[to_act] += f * pot;
                    actions.push(Action::Bet(i));
                    children.push(self.grow(config, next, other, checked, Some(0)));
                }
            }
            Some(made) => {
                let to_call = contrib[other] - contrib[to_act];
                actions.push(Action::Fold);
                children.push(self.leaf(NodeKind::Fold { folder: to_act }, contrib));
                let mut called = contrib;
                called[to_act] += to_call;
                actions.push(Action::Call);
                children.push(self.leaf(NodeKind::Showdown, called));
                if made < config.max_raises {
                    let pot_after_call = pot + to_call;
                    for (i, f) in config.bet_fractions.iter().enumerate() {
                        let mut next = called;
                        next[to_act] += f * pot_after_call;
                        actions.push(Action::Raise(i));
                        children.push(self.grow(config, next, other, checked, Some(made + 1)));
                    }
                }
            }
        }
        self.nodes[id].kind = NodeKind::Decision {
            player: to_act,
            actions,
            children,
        };
        id
    }

    fn leaf(&mut self, kind: NodeKind, contrib: [f64; 2]) -> usize {
        self.nodes.push(PublicNode { kind, contrib });
        self.nodes.len() - 1
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Largest amount one player can lose.
    pub fn max_stake(&self) -> f64 {
        self.nodes
            .iter()
            .filter(|n| !matches!(n.kind, NodeKind::Decision { .. }))
            .map(|n| n.contrib[0].max(n.contrib[1]))
            .fold(0.0, f64::max)
    }

    pub fn root_actions(&self) -> &[Action] {
        match &self.nodes[0].kind {
            NodeKind::Decision { actions, .. } => actions,
            _ => unreachable!("root is a decision node"),
        }
    }
}

/// Root beliefs: each player's distribution over private cards.
#[derive(Clone, Debug, PartialEq)]
pub struct Beliefs {
    pub players: [Vec<f64>; 2],
}

impl Beliefs {
    /// Uniform over cards not on the board.
    pub fn uniform(deck: usize, board: &[usize]) -> Self {
        let valid = deck - board.len();
        let p: Vec<f64> = (0..deck)
            .map(|c| {
                if board.contains(&c) {
                    0.0
                } else {
                    1.0 / valid as f64
                }
            })
            .collect();
        Beliefs {
            players: [p.clone(), p],
        }
    }

    /// Independent symmetric Dirichlet(1) draws over the unblocked cards,
    /// via normalized unit exponentials.
    pub fn sample_dirichlet<R: Rng + ?Sized>(deck: usize, board: &[usize], rng: &mut R) -> Self {
        let mut draw = || {
            let mut p: Vec<f64> = (0..deck)
                .map(|c| {
                    let e: f64 = rng.sample(Exp1);
                    if board.contains(&c) {
                        0.0
                    } else {
                        e
                    }
                })
                .collect();
            let s: f64 = p.iter().sum();
            p.iter_mut().for_each(|v| *v /= s);
            p
        };
        let a = draw();
        let b = draw();
        Beliefs { players: [a, b] }
    }

    fn validate(&self, deck: usize, board: &[usize]) -> Result<()> {
        for (i, p) in self.players.iter().enumerate() {
            if p.len() != deck {
                return Err(Error::DimensionMismatch {
                    expected: deck,
                    got: p.len(),
                });
            }
            if p.iter().any(|v| !(v.is_finite() && *v >= 0.0))
                || (p.iter().sum::<f64>() - 1.0).abs() > 1e-9
            {
                return Err(Error::InvalidArgument(format!(
                    "beliefs of player {i} are not a distribution"
                )));
            }
            if board.iter().any(|&c| p[c] != 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "player {i} holds mass on a board card"
                )));
            }
        }
        Ok(())
    }
}

/// A concrete endgame: configuration, board, betting tree and beliefs,
/// with the chance distribution over private deals precomputed.
#[derive(Clone, Debug, PartialEq)]
pub struct Endgame {
    pub config: EndgameConfig,
    pub board: Vec<usize>,
    pub beliefs: Beliefs,
    pub tree: BettingTree,
    /// Probability of each deal `(h0, h1)`, row-major `deck x deck`.
    pub deal: Vec<f64>,
    /// Marginal deal probability of each card for each player.
    pub marginals: [Vec<f64>; 2],
}

impl Endgame {
    pub fn new(config: EndgameConfig, board: Vec<usize>, beliefs: Beliefs) -> Result<Self> {
        config.validate()?;
        let deck = config.deck_ranks;
        if board.len() != config.board_cards || board.iter().any(|&c| c >= deck) {
            return Err(Error::InvalidArgument(format!(
                "board {board:?} invalid for the configuration"
            )));
        }
        let mut sorted = board.clone();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != board.len() {
            return Err(Error::InvalidArgument("board cards repeat".into()));
        }
        beliefs.validate(deck, &board)?;
        let mut deal = vec![0.0; deck * deck];
        let mut total = 0.0;
        for h0 in 0..deck {
            for h1 in 0..deck {
                if h0 != h1 {
                    let w = beliefs.players[0][h0] * beliefs.players[1][h1];
                    deal[h0 * deck + h1] = w;
                    total += w;
                }
            }
        }
        if total <= 0.0 {
            return Err(Error::InvalidArgument(
                "beliefs leave no possible deal".into(),
            ));
        }
        deal.iter_mut().for_each(|w| *w /= total);
        let mut marginals = [vec![0.0; deck], vec![0.0; deck]];
        for h0 in 0..deck {
            for h1 in 0..deck {
                marginals[0][h0] += deal[h0 * deck + h1];
                marginals[1][h1] += deal[h0 * deck + h1];
            }
        }
        let tree = BettingTree::build(&config);
        Ok(Endgame {
            config,
            board,
            beliefs,
            tree,
            deal,
            marginals,
        })
    }

    pub fn deck(&self) -> usize {
        self.config.deck_ranks
    }

    /// Player 0's cards with positive deal probability: one learner each.
    pub fn learner_hands(&self) -> Vec<usize> {
        (0..self.deck())
            .filter(|&h| self.marginals[0][h] > 0.0)
            .collect()
    }

    pub fn num_root_actions(&self) -> usize {
        self.tree.root_actions().len()
    }

    /// Spread of any conditional value: twice the largest stake.
    pub fn delta_max(&self) -> f64 {
        2.0 * self.tree.max_stake()
    }

    /// Number of nodes of the explicit extensive-form tree: a chance root
    /// dealing every possible pair, then one copy of the betting tree per
    /// deal.
    pub fn explicit_node_count(&self) -> usize {
        let deals = self.deal.iter().filter(|w| **w > 0.0).count();
        1 + deals * self.tree.len()
    }

    /// Information sets with positive reach probability by chance.
    pub fn infoset_count(&self) -> usize {
        self.tree
            .decisions
            .iter()
            .map(|&d| match &self.tree.nodes[d].kind {
                NodeKind::Decision { player, .. } => {
                    self.marginals[*player].iter().filter(|m| **m > 0.0).count()
                }
                _ => 0,
            })
            .sum()
    }

    /// Showdown comparison by rank; with one card per rank neither private
    /// card can pair the board, so this is high card.
    pub fn showdown_sign(&self, h0: usize, h1: usize) -> f64 {
        let strength = |h: usize| {
            if self.board.contains(&h) {
                self.deck() + h
            } else {
                h
            }
        };
        match strength(h0).cmp(&strength(h1)) {
            std::cmp::Ordering::Greater => 1.0,
            std::cmp::Ordering::Less => -1.0,
            std::cmp::Ordering::Equal => 0.0,
        }
    }

    /// Context block of the learner holding `hand`: both belief vectors,
    /// one-hot private card, multi-hot board.
    pub fn context_features(&self, hand: usize) -> Vec<f64> {
        let deck = self.deck();
        let mut out = Vec::with_capacity(4 * deck);
        out.extend_from_slice(&self.beliefs.players[0]);
        out.extend_from_slice(&self.beliefs.players[1]);
        out.extend((0..deck).map(|c| if c == hand { 1.0 } else { 0.0 }));
        out.extend((0..deck).map(|c| if self.board.contains(&c) { 1.0 } else { 0.0 }));
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EndgameDistribution {
    /// Pinned board (middle card) and uniform beliefs.
    Fixed,
    /// Uniform board, Dirichlet beliefs.
    Sampled,
}

impl EndgameDistribution {
    pub fn sample<R: Rng + ?Sized>(self, config: &EndgameConfig, rng: &mut R) -> Result<Endgame> {
        config.validate()?;
        let deck = config.deck_ranks;
        let (board, beliefs) = match self {
            EndgameDistribution::Fixed => {
                let board: Vec<usize> = (0..config.board_cards)
                    .map(|i| (deck / 2 + i) % deck)
                    .collect();
                let beliefs = Beliefs::uniform(deck, &board);
                (board, beliefs)
            }
            EndgameDistribution::Sampled => {
                let mut board = sample_indices(rng, deck, config.board_cards).into_vec();
                board.sort_unstable();
                let beliefs = Beliefs::sample_dirichlet(deck, &board, rng);
                (board, beliefs)
            }
        };
        Endgame::new(config.clone(), board, beliefs)
    }
}

/// Everything needed to rebuild a sampled endgame exactly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Snapshot {
    pub seed: u64,
    pub deck_ranks: usize,
    pub board_cards: usize,
    pub bet_fractions: Vec<f64>,
    pub max_raises: usize,
    pub ante: f64,
    pub board: Vec<usize>,
    pub beliefs_p0: Vec<f64>,
    pub beliefs_p1: Vec<f64>,
}

fn float_list(v: &[f64]) -> String {
    let items: Vec<String> = v.iter().map(|x| format!("{x:.16e}")).collect();
    format!("[{}]", items.join(", "))
}

impl Snapshot {
    pub fn of(game: &Endgame, seed: u64) -> Self {
        Snapshot {
            seed,
            deck_ranks: game.config.deck_ranks,
            board_cards: game.config.board_cards,
            bet_fractions: game.config.bet_fractions.clone(),
            max_raises: game.config.max_raises,
            ante: game.config.ante,
            board: game.board.clone(),
            beliefs_p0: game.beliefs.players[0].clone(),
            beliefs_p1: game.beliefs.players[1].clone(),
        }
    }

    /// Key-value text with every float at 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut s = String::from("# endgame snapshot\n");
        let _ = writeln!(s, "seed = {}", self.seed);
        let _ = writeln!(s, "deck_ranks = {}", self.deck_ranks);
        let _ = writeln!(s, "board_cards = {}", self.board_cards);
        let _ = writeln!(s, "bet_fractions = {}", float_list(&self.bet_fractions));
        let _ = writeln!(s, "max_raises = {}", self.max_raises);
        let _ = writeln!(s, "ante = {:.16e}", self.ante);
        let board: Vec<String> = self.board.iter().map(|c| c.to_string()).collect();
        let _ = writeln!(s, "board = [{}]", board.join(", "));
        let _ = writeln!(s, "beliefs_p0 = {}", float_list(&self.beliefs_p0));
        let _ = writeln!(s, "beliefs_p1 = {}", float_list(&self.beliefs_p1));
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn into_game(self) -> Result<Endgame> {
        let config = EndgameConfig {
            deck_ranks: self.deck_ranks,
            board_cards: self.board_cards,
            bet_fractions: self.bet_fractions,
            max_raises: self.max_raises,
            ante: self.ante,
        };
        let beliefs = Beliefs {
            players: [self.beliefs_p0, self.beliefs_p1],
        };
        Endgame::new(config, self.board, beliefs)
    }
}
