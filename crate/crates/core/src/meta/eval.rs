//! Exploitability curves, steps-to-target tables and out-of-distribution
//! runs.

use std::io::{BufRead, Write};
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::env::Environment;
use crate::error::{Error, Result};
use crate::games::GameSpec;
use crate::meta::bound::{trajectory_bound_check, BoundCheck};
use crate::meta::{derive_seed, Stream};
use crate::minimizers::{run_episode, Minimizer, MinimizerKind, Trajectory};
use crate::neural::checkpoint::Checkpoint;
use crate::neural::network::NetworkParams;

/// What plays the games: a classic minimizer or a trained network.
#[derive(Clone, Debug)]
pub enum Learner {
    Classic(MinimizerKind),
    Neural {
        kind: MinimizerKind,
        params: Arc<NetworkParams>,
        /// Training horizon (fixes the Hedge temperature).
        horizon: usize,
        /// Reward scale the network's inputs were normalized with.
        delta_max: f64,
    },
}

impl Learner {
    pub fn from_checkpoint(ckpt: &Checkpoint) -> Self {
        Learner::Neural {
            kind: ckpt.meta.algorithm,
            params: Arc::new(ckpt.params.clone()),
            horizon: ckpt.meta.horizon,
            delta_max: ckpt.meta.delta_max,
        }
    }

    pub fn kind(&self) -> MinimizerKind {
        match self {
            Learner::Classic(k) | Learner::Neural { kind: k, .. } => *k,
        }
    }

    pub fn name(&self) -> &'static str {
        self.kind().name()
    }

    /// Bound on the predictions this learner can make, for the regret
    /// guarantee; `None` when it has none.
    pub fn prediction_bound(&self, delta_max: f64) -> Option<f64> {
        match self {
            Learner::Classic(k) if !k.has_regret_bound() => None,
            Learner::Classic(MinimizerKind::Prm | MinimizerKind::PrmPlus) => Some(delta_max),
            Learner::Classic(_) => Some(0.0),
            Learner::Neural { kind, params, .. } => kind.has_regret_bound().then(|| params.alpha()),
        }
    }

    /// One fresh minimizer per learner of `env`. Classic Hedge uses
    /// `horizon` for its temperature.
    pub fn minimizers<E: Environment + ?Sized>(
        &self,
        env: &E,
        horizon: usize,
        record: bool,
    ) -> Result<Vec<Minimizer>> {
        (0..env.num_learners())
            .map(|l| match self {
                Learner::Classic(kind) => Minimizer::classic(*kind, env.num_actions(), horizon),
                Learner::Neural {
                    kind,
                    params,
                    horizon,
                    delta_max,
                } => {
                    if params.dims().actions != env.num_actions() {
                        return Err(Error::DimensionMismatch {
                            expected: env.num_actions(),
                            got: params.dims().actions,
                        });
                    }
                    Minimizer::neural(
                        *kind,
                        params.clone(),
                        *delta_max,
                        *horizon,
                        env.context(l),
                        record,
                    )
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EvalConfig {
    pub game: GameSpec,
    pub games: usize,
    /// Steps per game, normally `2T`.
    pub steps: usize,
    /// `T`, for the classic Hedge temperature.
    pub horizon: usize,
    pub seed: u64,
    pub record_timing: bool,
}

/// The record of one evaluation game.
#[derive(Clone, Debug)]
pub struct GameRun {
    pub exploitability: Vec<f64>,
    /// Learner-weighted external regret after each step.
    pub regret: Vec<f64>,
    pub env_ms: Vec<f64>,
    pub algo_ms: Vec<f64>,
    pub bound: Option<BoundCheck>,
    /// Residual Nash gap of the environment's last value-function solve.
    pub solver_gap: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CurvePoint {
    pub step: usize,
    pub expl_mean: f64,
    pub expl_stderr: f64,
    pub env_time_ms: f64,
    pub algo_time_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Default)]
pub struct EvalCurve {
    pub points: Vec<CurvePoint>,
}

const CURVE_HEADER: &str = "step,expl_mean,expl_stderr,env_time_ms,algo_time_ms";

impl EvalCurve {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Mean exploitability after `step` steps (1-based).
    pub fn at(&self, step: usize) -> f64 {
        self.points[step - 1].expl_mean
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{CURVE_HEADER}")?;
        for p in &self.points {
            writeln!(
                out,
                "{},{},{},{},{}",
                p.step, p.expl_mean, p.expl_stderr, p.env_time_ms, p.algo_time_ms
            )?;
        }
        Ok(())
    }

    pub fn read_csv<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines();
        let header = lines.next().transpose()?.unwrap_or_default();
        if header.trim() != CURVE_HEADER {
            return Err(Error::Config(format!(
                "expected curve header '{CURVE_HEADER}', found '{header}'"
            )));
        }
        let mut points = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            let bad = || Error::Config(format!("malformed curve row {}: '{line}'", i + 2));
            if fields.len() != 5 {
                return Err(bad());
            }
            let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
            points.push(CurvePoint {
                step: fields[0].trim().parse().map_err(|_| bad())?,
                expl_mean: num(fields[1])?,
                expl_stderr: num(fields[2])?,
                env_time_ms: num(fields[3])?,
                algo_time_ms: num(fields[4])?,
            });
        }
        Ok(EvalCurve { points })
    }
}

/// All games of an evaluation and their aggregate curve.
#[derive(Clone, Debug)]
pub struct EvalRun {
    pub curve: EvalCurve,
    /// Mean learner-weighted external regret after each step.
    pub mean_regret: Vec<f64>,
    pub runs: Vec<GameRun>,
}

impl EvalRun {
    /// Combined bound verdict over every game, if the learner has one.
    pub fn bound(&self) -> Option<BoundCheck> {
        self.runs
            .iter()
            .map(|r| r.bound)
            .collect::<Option<Vec<_>>>()
            .and_then(|v| {
                v.into_iter().reduce(|a, b| BoundCheck {
                    holds: a.holds && b.holds,
                    margin: a.margin.min(b.margin),
                    intermediate_margin: a.intermediate_margin.min(b.intermediate_margin),
                    closed_margin: a.closed_margin.min(b.closed_margin),
                })
            })
    }
}

fn mean_and_stderr(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    if n < 2.0 {
        return (mean, 0.0);
    }
    let var = values.map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Plays one game and records everything the curves need.
pub fn play_game(
    learner: &Learner,
    env: &mut dyn Environment,
    steps: usize,
    horizon: usize,
) -> Result<(Trajectory, GameRun)> {
    let mut minimizers = learner.minimizers(env, horizon, false)?;
    let traj = run_episode(&mut minimizers, env, steps, true)?;
    let mut regret = Vec::with_capacity(steps);
    let mut sums: Vec<Vec<f64>> = traj
        .learners
        .iter()
        .map(|l| vec![0.0; l.regrets[0].len()])
        .collect();
    for t in 0..steps {
        let mut total = 0.0;
        for ((l, sum), w) in traj.learners.iter().zip(sums.iter_mut()).zip(&traj.weights) {
            for (s, v) in sum.iter_mut().zip(&l.regrets[t]) {
                *s += v;
            }
            total += w * crate::regret::external_regret(sum);
        }
        regret.push(total);
    }
    let bound = learner
        .prediction_bound(env.delta_max())
        .map(|alpha| trajectory_bound_check(&traj, alpha, env.delta_max()));
    let run = GameRun {
        exploitability: traj.exploitability.clone(),
        regret,
        env_ms: traj
            .env_time
            .iter()
            .map(|d| d.as_secs_f64() * 1e3)
            .collect(),
        algo_ms: traj
            .algo_time
            .iter()
            .map(|d| d.as_secs_f64() * 1e3)
            .collect(),
        bound,
        solver_gap: env.solver_gap(),
    };
    Ok((traj, run))
}

/// Runs `config.games` fresh games (seeded from the evaluation stream) for
/// `config.steps` steps each and aggregates the exploitability of the
/// average strategy per step.
pub fn evaluate(learner: &Learner, config: &EvalConfig) -> Result<EvalRun> {
    if config.games == 0 || config.steps == 0 {
        return Err(Error::InvalidArgument(
            "evaluation needs at least one game and one step".into(),
        ));
    }
    let runs: Vec<GameRun> = (0..config.games)
        .into_par_iter()
        .map(|i| {
            let mut rng =
                ChaCha8Rng::seed_from_u64(derive_seed(config.seed, Stream::Eval, i as u64));
            let mut env = config.game.sample(&mut rng)?;
            play_game(learner, env.as_mut(), config.steps, config.horizon).map(|(_, run)| run)
        })
        .collect::<Result<_>>()?;
    Ok(aggregate(runs, config.steps, config.record_timing))
}

fn aggregate(runs: Vec<GameRun>, steps: usize, record_timing: bool) -> EvalRun {
    let points = (0..steps)
        .map(|t| {
            let (mean, stderr) = mean_and_stderr(runs.iter().map(|r| r.exploitability[t]));
            let n = runs.len() as f64;
            let (env_ms, algo_ms) = if record_timing {
                (
                    runs.iter().map(|r| r.env_ms[t]).sum::<f64>() / n,
                    runs.iter().map(|r| r.algo_ms[t]).sum::<f64>() / n,
                )
            } else {
                (0.0, 0.0)
            };
            CurvePoint {
                step: t + 1,
                expl_mean: mean,
                expl_stderr: stderr,
                env_time_ms: env_ms,
                algo_time_ms: algo_ms,
            }
        })
        .collect();
    let mean_regret = (0..steps)
        .map(|t| runs.iter().map(|r| r.regret[t]).sum::<f64>() / runs.len() as f64)
        .collect();
    EvalRun {
        curve: EvalCurve { points },
        mean_regret,
        runs,
    }
}

/// Per algorithm and target, the first step whose mean exploitability is at
/// or below the target; `None` when never reached.
#[derive(Clone, Debug, PartialEq)]
pub struct StepsToTargetTable {
    pub algorithms: Vec<String>,
    pub targets: Vec<f64>,
    pub steps: Vec<Vec<Option<usize>>>,
}

pub const UNREACHED: &str = "—";

/// Reference rows from the full-scale river endgame, targets
/// 0.4 / 0.1 / 0.06 / 0.02.
pub const FULL_SCALE_REFERENCE: [(&str, [usize; 4]); 4] = [
    ("rm", [20, 128, 212, 615]),
    ("prm", [36, 158, 261, 793]),
    ("noa", [1, 18, 41, 157]),
    ("nprm", [1, 16, 26, 118]),
];
pub const FULL_SCALE_TARGETS: [f64; 4] = [0.4, 0.1, 0.06, 0.02];

pub fn steps_to_target(
    curves: &[(String, EvalCurve)],
    targets: &[f64],
) -> Result<StepsToTargetTable> {
    if targets.is_empty() || targets.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
        return Err(Error::InvalidArgument("targets must be positive".into()));
    }
    if targets.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::InvalidArgument(
            "targets must be strictly descending".into(),
        ));
    }
    let steps = curves
        .iter()
        .map(|(_, c)| {
            targets
                .iter()
                .map(|&target| {
                    c.points
                        .iter()
                        .find(|p| p.expl_mean <= target)
                        .map(|p| p.step)
                })
                .collect()
        })
        .collect();
    Ok(StepsToTargetTable {
        algorithms: curves.iter().map(|(n, _)| n.clone()).collect(),
        targets: targets.to_vec(),
        steps,
    })
}

fn cell(v: Option<usize>) -> String {
    v.map_or_else(|| UNREACHED.to_string(), |s| s.to_string())
}

impl StepsToTargetTable {
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let header: Vec<String> = self.targets.iter().map(|t| format!("target_{t}")).collect();
        writeln!(out, "algorithm,{}", header.join(","))?;
        for (name, row) in self.algorithms.iter().zip(&self.steps) {
            let cells: Vec<String> = row.iter().map(|v| cell(*v)).collect();
            writeln!(out, "{name},{}", cells.join(","))?;
        }
        Ok(())
    }

    /// Column-aligned text rendering.
    pub fn to_text(&self) -> String {
        let mut rows: Vec<Vec<String>> = vec![std::iter::once("algorithm".to_string())
            .chain(self.targets.iter().map(|t| t.to_string()))
            .collect()];
        for (name, row) in self.algorithms.iter().zip(&self.steps) {
            rows.push(
                std::iter::once(name.clone())
                    .chain(row.iter().map(|v| cell(*v)))
                    .collect(),
            );
        }
        let cols = rows[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|c| rows.iter().map(|r| r[c].chars().count()).max().unwrap_or(0))
            .collect();
        let mut s = String::new();
        for r in rows {
            let line: Vec<String> = r
                .iter()
                .enumerate()
                .map(|(c, v)| {
                    let pad = widths[c] - v.chars().count();
                    if c == 0 {
                        format!("{v}{}", " ".repeat(pad))
                    } else {
                        format!("{}{v}", " ".repeat(pad))
                    }
                })
                .collect();
            s.push_str(line.join("  ").trim_end());
            s.push('\n');
        }
        s
    }
}

/// Verdict of an out-of-distribution run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OodVerdict {
    BoundHolds { margin: f64 },
    BoundViolated { margin: f64 },
    NoGuarantee,
}

impl std::fmt::Display for OodVerdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            OodVerdict::BoundHolds { margin } => write!(f, "bound holds (min margin {margin:.6})"),
            OodVerdict::BoundViolated { margin } => {
                write!(f, "bound violated (min margin {margin:.6})")
            }
            OodVerdict::NoGuarantee => write!(f, "no guarantee (NOA)"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct OodReport {
    pub in_dist: EvalRun,
    pub out_dist: EvalRun,
    pub verdict: OodVerdict,
}

/// Evaluates a trained learner on its training distribution and on another
/// one; the out-of-distribution trajectories are checked against the
/// regret bound when the learner carries one.
pub fn ood_evaluate(
    learner: &Learner,
    in_dist: &EvalConfig,
    out_dist: &EvalConfig,
) -> Result<OodReport> {
    if let Learner::Neural { params, .. } = learner {
        let actions = out_dist.game.num_actions();
        if params.dims().actions != actions {
            return Err(Error::DimensionMismatch {
                expected: actions,
                got: params.dims().actions,
            });
        }
    }
    let a = evaluate(learner, in_dist)?;
    let b = evaluate(learner, out_dist)?;
    let verdict = match b.bound() {
        Some(check) if check.holds => OodVerdict::BoundHolds {
            margin: check.margin,
        },
        Some(check) => OodVerdict::BoundViolated {
            margin: check.margin,
        },
        None => OodVerdict::NoGuarantee,
    };
    Ok(OodReport {
        in_dist: a,
        out_dist: b,
        verdict,
    })
}
