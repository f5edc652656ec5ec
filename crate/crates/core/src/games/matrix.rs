//! Two-player zero-sum matrix games against a best-responding opponent.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::env::Environment;
use crate::error::{check_dim, Error, Result};
use crate::regret::Strategy;

/// Row player's payoff matrix; the column player receives the negation.
#[derive(Clone, Debug, PartialEq)]
pub struct MatrixGame {
    u1: DMatrix<f64>,
}

impl MatrixGame {
    pub fn new(u1: DMatrix<f64>) -> Result<Self> {
        if u1.nrows() == 0 || u1.ncols() == 0 {
            return Err(Error::InvalidArgument(
                "matrix game needs at least one row and column".into(),
            ));
        }
        if u1.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument(
                "matrix entries must be finite".into(),
            ));
        }
        Ok(MatrixGame { u1 })
    }

    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let cols = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidArgument("ragged matrix rows".into()));
        }
        Self::new(DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]))
    }

    pub fn payoffs(&self) -> &DMatrix<f64> {
        &self.u1
    }

    pub fn rows(&self) -> usize {
        self.u1.nrows()
    }

    pub fn cols(&self) -> usize {
        self.u1.ncols()
    }

    /// Spread between the largest and smallest entry.
    pub fn delta_max(&self) -> f64 {
        self.u1.max() - self.u1.min()
    }

    /// The game seen from the column player: `-u1^T`.
    pub fn negated_transpose(&self) -> MatrixGame {
        MatrixGame {
            u1: -self.u1.transpose(),
        }
    }

    /// `(sigma^T u1)_j` for every column `j`.
    pub fn column_payoffs(&self, sigma: &[f64]) -> Vec<f64> {
        (0..self.cols())
            .map(|j| {
                sigma
                    .iter()
                    .enumerate()
                    .map(|(i, s)| s * self.u1[(i, j)])
                    .sum()
            })
            .collect()
    }

    /// `(u1 y)_i` for every row `i`.
    pub fn row_payoffs(&self, y: &[f64]) -> Vec<f64> {
        (0..self.rows())
            .map(|i| y.iter().enumerate().map(|(j, p)| p * self.u1[(i, j)]).sum())
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatrixDistribution {
    RpsFixed,
    RpsSampled,
    Uniform3x3,
}

const RPS: [[f64; 3]; 3] = [[0.0, -1.0, 3.0], [1.0, 0.0, -1.0], [-1.0, 1.0, 0.0]];

impl MatrixDistribution {
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> MatrixGame {
        let mut m = DMatrix::from_fn(3, 3, |i, j| RPS[i][j]);
        match self {
            MatrixDistribution::RpsFixed => {}
            MatrixDistribution::RpsSampled => {
                let x: f64 = rng.random_range(-1.0..1.0);
                let y: f64 = rng.random_range(-1.0..1.0);
                m[(0, 2)] += x;
                m[(1, 1)] += y;
            }
            MatrixDistribution::Uniform3x3 => {
                for v in m.iter_mut() {
                    *v = rng.random_range(-1.0..1.0);
                }
            }
        }
        MatrixGame { u1: m }
    }

    /// Reward range covering every game the distribution can produce.
    pub fn delta_max(self) -> f64 {
        match self {
            MatrixDistribution::RpsFixed => 4.0,
            MatrixDistribution::RpsSampled => 5.0,
            MatrixDistribution::Uniform3x3 => 2.0,
        }
    }
}

/// Rewards against the opponent's best response: column `argmin_j
/// (sigma^T u1)_j`, ties broken towards the lowest index.
pub fn best_response_reward(game: &MatrixGame, sigma: &Strategy) -> Result<Vec<f64>> {
    check_dim(game.rows(), sigma.len())?;
    let payoffs = game.column_payoffs(sigma.as_slice());
    let mut best = 0;
    for (j, v) in payoffs.iter().enumerate() {
        if *v < payoffs[best] {
            best = j;
        }
    }
    Ok(game.u1.column(best).iter().copied().collect())
}

/// One equilibrium found by enumeration, with its value.
#[derive(Clone, Debug)]
pub struct Equilibrium {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    pub value: f64,
}

const ENUM_TOL: f64 = 1e-10;

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < k - cur.len() {
                break;
            }
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Solves the equalizing system on a square support pair: `x` over `rows`
/// makes every column in `cols` pay `v`, and `sum x = 1`.
fn equalize(m: &DMatrix<f64>, rows: &[usize], cols: &[usize]) -> Option<(Vec<f64>, f64)> {
    let k = rows.len();
    let mut a = DMatrix::zeros(k + 1, k + 1);
    let mut b = DVector::zeros(k + 1);
    for (r, &j) in cols.iter().enumerate() {
        for (c, &i) in rows.iter().enumerate() {
            a[(r, c)] = m[(i, j)];
        }
        a[(r, k)] = -1.0;
    }
    for c in 0..k {
        a[(k, c)] = 1.0;
    }
    b[k] = 1.0;
    let sol = a.lu().solve(&b)?;
    if sol.iter().any(|v| !v.is_finite()) {
        return None;
    }
    Some((sol.iter().take(k).copied().collect(), sol[k]))
}

/// Exact equilibrium by enumerating square supports. The matrix is shifted
/// to strictly positive entries first so the value is nonzero, which
/// guarantees some square nonsingular kernel carries an equilibrium.
pub fn support_enumeration(game: &MatrixGame) -> Option<Equilibrium> {
    let shift = 1.0 - game.u1.min();
    let m = game.u1.add_scalar(shift);
    let scale = m.max();
    let (nr, nc) = (m.nrows(), m.ncols());
    for k in 1..=nr.min(nc) {
        for rows in subsets(nr, k) {
            for cols in subsets(nc, k) {
                let Some((xs, v)) = equalize(&m, &rows, &cols) else {
                    continue;
                };
                if xs.iter().any(|p| *p < -ENUM_TOL) {
                    continue;
                }
                let mt = m.transpose();
                let Some((ys, w)) = equalize(&mt, &cols, &rows) else {
                    continue;
                };
                if ys.iter().any(|p| *p < -ENUM_TOL) || (v - w).abs() > ENUM_TOL * scale {
                    continue;
                }
                let mut x = vec![0.0; nr];
                for (&i, p) in rows.iter().zip(&xs) {
                    x[i] = p.max(0.0);
                }
                let mut y = vec![0.0; nc];
                for (&j, p) in cols.iter().zip(&ys) {
                    y[j] = p.max(0.0);
                }
                let sx: f64 = x.iter().sum();
                let sy: f64 = y.iter().sum();
                x.iter_mut().for_each(|p| *p /= sx);
                y.iter_mut().for_each(|p| *p /= sy);
                let shifted = MatrixGame { u1: m.clone() };
                let guaranteed = shifted
                    .column_payoffs(&x)
                    .into_iter()
                    .fold(f64::INFINITY, f64::min);
                let conceded = shifted
                    .row_payoffs(&y)
                    .into_iter()
                    .fold(f64::NEG_INFINITY, f64::max);
                if conceded - guaranteed > ENUM_TOL * scale {
                    continue;
                }
                return Some(Equilibrium {
                    row: x,
                    col: y,
                    value: 0.5 * (guaranteed + conceded) - shift,
                });
            }
        }
    }
    None
}

/// Result of RM+ self-play: average strategies, their payoff and the value
/// bracket `lower <= value <= upper` they certify.
#[derive(Clone, Debug)]
pub struct SelfPlay {
    pub row: Vec<f64>,
    pub col: Vec<f64>,
    /// Row player's payoff under the average profile.
    pub profile_value: f64,
    pub lower: f64,
    pub upper: f64,
    pub iterations: usize,
}

impl SelfPlay {
    pub fn gap(&self) -> f64 {
        self.upper - self.lower
    }

    /// Value estimate: the average profile's payoff. It lies inside the
    /// bracket and converges much faster than the bracket's width.
    pub fn value(&self) -> f64 {
        self.profile_value
    }
}

/// Regret-matching+ self-play with alternating updates and linear
/// averaging. Stops after `max_iters` or once the certified gap drops below
/// `target_gap`, checked every 1024 iterations.
pub fn rm_plus_self_play(game: &MatrixGame, max_iters: usize, target_gap: f64) -> SelfPlay {
    let (nr, nc) = (game.rows(), game.cols());
    let mut qx = vec![0.0; nr];
    let mut qy = vec![0.0; nc];
    let mut avg_x = vec![0.0; nr];
    let mut avg_y = vec![0.0; nc];
    let strat = |q: &[f64]| -> Vec<f64> {
        let s: f64 = q.iter().sum();
        if s > 0.0 {
            q.iter().map(|v| v / s).collect()
        } else {
            vec![1.0 / q.len() as f64; q.len()]
        }
    };
    let bracket = |ax: &[f64], ay: &[f64]| {
        let sx: f64 = ax.iter().sum();
        let sy: f64 = ay.iter().sum();
        let x: Vec<f64> = ax.iter().map(|v| v / sx).collect();
        let y: Vec<f64> = ay.iter().map(|v| v / sy).collect();
        let lower = game
            .column_payoffs(&x)
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        let upper = game
            .row_payoffs(&y)
            .into_iter()
            .fold(f64::NEG_INFINITY, f64::max);
        (x, y, lower, upper)
    };
    let mut t = 0;
    while t < max_iters {
        t += 1;
        let y = strat(&qy);
        let ux = game.row_payoffs(&y);
        let x = strat(&qx);
        let vx: f64 = x.iter().zip(&ux).map(|(a, b)| a * b).sum();
        for (q, u) in qx.iter_mut().zip(&ux) {
            *q = (*q + u - vx).max(0.0);
        }
        let x = strat(&qx);
        let uy: Vec<f64> = game.column_payoffs(&x).into_iter().map(|v| -v).collect();
        let vy: f64 = y.iter().zip(&uy).map(|(a, b)| a * b).sum();
        for (q, u) in qy.iter_mut().zip(&uy) {
            *q = (*q + u - vy).max(0.0);
        }
        let w = t as f64;
        for (a, p) in avg_x.iter_mut().zip(&x) {
            *a += w * p;
        }
        for (a, p) in avg_y.iter_mut().zip(&y) {
            *a += w * p;
        }
        if t % 1024 == 0 {
            let (_, _, lo, hi) = bracket(&avg_x, &avg_y);
            if hi - lo < target_gap {
                break;
            }
        }
    }
    let (row, col, lower, upper) = bracket(&avg_x, &avg_y);
    let profile_value = row
        .iter()
        .zip(game.row_payoffs(&col))
        .map(|(a, b)| a * b)
        .sum();
    SelfPlay {
        row,
        col,
        profile_value,
        lower,
        upper,
        iterations: t,
    }
}

/// `max_sigma min_j (sigma^T u1)_j`. Exact by support enumeration, with
/// self-play as a fallback for numerically degenerate matrices.
pub fn game_value(game: &MatrixGame) -> Result<f64> {
    if let Some(eq) = support_enumeration(game) {
        return Ok(eq.value);
    }
    let sp = rm_plus_self_play(game, 50_000_000, 1e-9);
    if sp.gap() < 1e-9 {
        Ok(sp.value())
    } else {
        Err(Error::Numeric {
            step: sp.iterations,
            what: format!("game value not certified, residual gap {:.3e}", sp.gap()),
        })
    }
}

/// `game_value - min_j (sigma^T u1)_j`.
pub fn exploitability_matrix(game: &MatrixGame, value: f64, sigma: &Strategy) -> Result<f64> {
    check_dim(game.rows(), sigma.len())?;
    let worst = game
        .column_payoffs(sigma.as_slice())
        .into_iter()
        .fold(f64::INFINITY, f64::min);
    Ok(value - worst)
}

/// Single-learner environment: the row player against a best responder.
#[derive(Clone, Debug)]
pub struct MatrixEnv {
    game: MatrixGame,
    value: f64,
    delta_max: f64,
}

impl MatrixEnv {
    /// `delta_max` is the distribution-wide reward range, which must cover
    /// this game's own spread.
    pub fn new(game: MatrixGame, delta_max: f64) -> Result<Self> {
        if game.delta_max() > delta_max + 1e-12 {
            return Err(Error::InvalidArgument(format!(
                "game spread {} exceeds declared delta_max {delta_max}",
                game.delta_max()
            )));
        }
        let value = game_value(&game)?;
        Ok(MatrixEnv {
            game,
            value,
            delta_max,
        })
    }

    pub fn game(&self) -> &MatrixGame {
        &self.game
    }

    pub fn value(&self) -> f64 {
        self.value
    }
}

impl Environment for MatrixEnv {
    fn num_learners(&self) -> usize {
        1
    }

    fn num_actions(&self) -> usize {
        self.game.rows()
    }

    fn delta_max(&self) -> f64 {
        self.delta_max
    }

    fn rewards(&mut self, strategies: &[Strategy]) -> Result<Vec<Vec<f64>>> {
        check_dim(1, strategies.len())?;
        Ok(vec![best_response_reward(&self.game, &strategies[0])?])
    }

    fn exploitability(&mut self, averages: &[Strategy]) -> Result<f64> {
        check_dim(1, averages.len())?;
        exploitability_matrix(&self.game, self.value, &averages[0])
    }
}
