//! Command-line front end: training, evaluation, tables, diagnostics.
//!
//! Exit codes: 0 success, 1 a check failed, 2 usage or configuration error.

mod svg;

use std::fs;
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{ArgGroup, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regret_meta::games::endgame::{EndgameConfig, Snapshot};
use regret_meta::games::{GameId, GameSpec};
use regret_meta::meta::eval::{FULL_SCALE_REFERENCE, FULL_SCALE_TARGETS};
use regret_meta::meta::{
    derive_seed, evaluate, ood_evaluate, precision_sweep, run_grad_check, steps_to_target,
    with_thread_pool, EvalConfig, EvalCurve, EvalRun, GradCheckConfig, Learner, Stream,
    TrainConfig,
};
use regret_meta::minimizers::MinimizerKind;
use regret_meta::neural::{load_checkpoint, save_checkpoint};
use serde::Serialize;
use thiserror::Error;

use crate::svg::{line_chart, Series};

const RESOLVED_CONFIG: &str = "resolved_config.toml";

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("check failed: {0}")]
    Check(String),
    #[error(transparent)]
    Core(#[from] regret_meta::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Check(_) => 1,
            _ => 2,
        }
    }
}

type CliResult<T = ()> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "regret-meta",
    version,
    about = "Meta-learned regret minimization: train, evaluate, compare"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Meta-train a neural minimizer from a TOML config.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        out: PathBuf,
        /// Write into an existing non-empty output directory.
        #[arg(long)]
        force: bool,
    },
    /// Exploitability curve of a classic algorithm or a checkpoint.
    #[command(group(ArgGroup::new("learner").required(true).args(["algo", "checkpoint"])))]
    Eval {
        #[arg(long)]
        algo: Option<MinimizerKind>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
        /// Also write a log-scale chart.
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Steps each curve needs to reach each target exploitability.
    Table {
        /// Curve CSVs, as `name=path` or `path` (named by file stem).
        #[arg(long, num_args = 1.., required = true)]
        curves: Vec<String>,
        /// Strictly descending targets, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        targets: Vec<f64>,
        /// Also print the full-scale river endgame reference rows.
        #[arg(long)]
        reference: bool,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// Backprop against finite differences on random small instances.
    Gradcheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        force: bool,
    },
    /// A checkpoint on its training distribution and on another one.
    Ood {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        train_dist: GameId,
        #[arg(long)]
        eval_dist: GameId,
        #[arg(long, default_value_t = 256)]
        games: usize,
        /// Steps per game; defaults to twice the training horizon.
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        no_timing: bool,
        #[arg(long)]
        svg: bool,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Exploitability curves across value-function precisions.
    #[command(group(ArgGroup::new("learner").required(true).args(["algo", "checkpoint"])))]
    Sweep {
        #[arg(long)]
        algo: Option<MinimizerKind>,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[command(flatten)]
        eval: EvalArgs,
        /// CFR+ iterations per environment step, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        vf_iters_list: Vec<usize>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Write a sampled game to a file for replay.
    DumpGame {
        #[arg(long)]
        game: GameId,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Dump evaluation game `index` of `seed` instead of seeding directly.
        #[arg(long)]
        index: Option<u64>,
        /// Endgame rules as TOML; defaults otherwise.
        #[arg(long)]
        endgame_config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
}

#[derive(clap::Args)]
struct EvalArgs {
    #[arg(long)]
    game: GameId,
    #[arg(long, default_value_t = 256)]
    games: usize,
    /// Steps per game; defaults to `2T`.
    #[arg(long)]
    steps: Option<usize>,
    /// `T`; defaults to the checkpoint's horizon, else 64.
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CFR+ iterations per endgame step.
    #[arg(long)]
    vf_iters: Option<usize>,
    /// CFR+ iterations when measuring endgame exploitability.
    #[arg(long)]
    eval_iters: Option<usize>,
    /// Endgame rules as TOML; defaults otherwise.
    #[arg(long)]
    endgame_config: Option<PathBuf>,
    /// Write zero timings so outputs are byte-reproducible.
    #[arg(long)]
    no_timing: bool,
}

/// Everything an evaluation depended on, written next to its outputs.
#[derive(Serialize)]
struct EvalRecord {
    command: &'static str,
    learner: String,
    checkpoint: Option<PathBuf>,
    game: GameId,
    games: usize,
    steps: usize,
    horizon: usize,
    seed: u64,
    vf_iters: usize,
    eval_iters: usize,
    record_timing: bool,
    endgame: EndgameConfig,
}

#[derive(Serialize)]
struct SweepRecord {
    #[serde(flatten)]
    eval: EvalRecord,
    vf_iters_list: Vec<usize>,
}

#[derive(Serialize)]
struct OodRecord {
    command: &'static str,
    checkpoint: PathBuf,
    train_dist: GameId,
    eval_dist: GameId,
    games: usize,
    steps: usize,
    horizon: usize,
    seed: u64,
    record_timing: bool,
}

#[derive(Serialize)]
struct TableRecord {
    command: &'static str,
    curves: Vec<String>,
    targets: Vec<f64>,
    reference: bool,
}

#[derive(Serialize)]
struct DumpRecord {
    command: &'static str,
    game: GameId,
    seed: u64,
    index: Option<u64>,
    game_seed: u64,
    endgame: EndgameConfig,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = with_thread_pool(move || run(cli))
        .map_err(CliError::from)
        .and_then(|r| r);
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Train {
            config,
            seed,
            out,
            force,
        } => cmd_train(&config, seed, &out, force),
        Command::Eval {
            algo,
            checkpoint,
            eval,
            svg,
            out,
            force,
        } => cmd_eval(algo, checkpoint, &eval, svg, &out, force),
        Command::Table {
            curves,
            targets,
            reference,
            out,
            force,
        } => cmd_table(&curves, &targets, reference, out.as_deref(), force),
        Command::Gradcheck { config, out, force } => cmd_gradcheck(&config, out.as_deref(), force),
        Command::Ood {
            checkpoint,
            train_dist,
            eval_dist,
            games,
            steps,
            seed,
            no_timing,
            svg,
            out,
            force,
        } => cmd_ood(
            &checkpoint,
            train_dist,
            eval_dist,
            games,
            steps,
            seed,
            !no_timing,
            svg,
            &out,
            force,
        ),
        Command::Sweep {
            algo,
            checkpoint,
            eval,
            vf_iters_list,
            out,
            force,
        } => cmd_sweep(algo, checkpoint, &eval, &vf_iters_list, &out, force),
        Command::DumpGame {
            game,
            seed,
            index,
            endgame_config,
            out,
            force,
        } => cmd_dump_game(game, seed, index, endgame_config.as_deref(), &out, force),
    }
}

/// Creates `dir`, refusing to reuse a non-empty one unless `force`.
fn prepare_out(dir: &Path, force: bool) -> CliResult {
    if dir.exists() {
        if !dir.is_dir() {
            return Err(CliError::Usage(format!(
                "{} exists and is not a directory",
                dir.display()
            )));
        }
        if !force && fs::read_dir(dir)?.next().is_some() {
            return Err(CliError::Usage(format!(
                "output directory {} is not empty; pass --force to overwrite",
                dir.display()
            )));
        }
    }
    fs::create_dir_all(dir)?;
    Ok(())
}

fn read_text(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn config_error(path: &Path, e: regret_meta::Error) -> CliError {
    CliError::Usage(format!("{}: {e}", path.display()))
}

fn cmd_train(config_path: &Path, seed: Option<u64>, out: &Path, force: bool) -> CliResult {
    let mut config = TrainConfig::from_toml(&read_text(config_path)?)
        .map_err(|e| config_error(config_path, e))?;
    if let Some(s) = seed {
        config.seed = s;
    }
    config
        .validate()
        .map_err(|e| config_error(config_path, e))?;
    prepare_out(out, force)?;
    let resolved = config.resolved();
    fs::write(out.join(RESOLVED_CONFIG), resolved.to_toml())?;
    let (ckpt, report) = regret_meta::meta::meta_train(&resolved)?;
    save_checkpoint(&out.join("checkpoint.bin"), &ckpt.params, &ckpt.meta)?;
    report.write_csv(fs::File::create(out.join("train.csv"))?)?;
    if let Some(last) = report.rows.last() {
        println!(
            "trained {} epochs, final mean loss {:.6}",
            last.epoch, last.mean_loss
        );
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn load_endgame_config(path: Option<&Path>) -> CliResult<EndgameConfig> {
    let Some(path) = path else {
        return Ok(EndgameConfig::default());
    };
    let config: EndgameConfig = toml::from_str(&read_text(path)?)
        .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    config.validate().map_err(|e| config_error(path, e))?;
    Ok(config)
}

/// Resolves the learner and the evaluation config from the shared flags.
fn eval_setup(
    algo: Option<MinimizerKind>,
    checkpoint: Option<PathBuf>,
    args: &EvalArgs,
    command: &'static str,
) -> CliResult<(Learner, EvalConfig, EvalRecord)> {
    let mut spec = GameSpec::new(args.game);
    spec.endgame = load_endgame_config(args.endgame_config.as_deref())?;
    if let Some(v) = args.vf_iters {
        spec.vf_iters = v;
    }
    if let Some(v) = args.eval_iters {
        spec.eval_iters = v;
    }
    let (learner, trained_horizon) = match (&algo, &checkpoint) {
        (Some(kind), None) => {
            if kind.is_neural() {
                return Err(CliError::Usage(format!(
                    "'{kind}' needs a trained network; pass --checkpoint"
                )));
            }
            (Learner::Classic(*kind), None)
        }
        (None, Some(path)) => {
            let ckpt = load_checkpoint(path)?;
            ckpt.check_actions(spec.num_actions(), path)?;
            (Learner::from_checkpoint(&ckpt), Some(ckpt.meta.horizon))
        }
        _ => {
            return Err(CliError::Usage(
                "pass exactly one of --algo and --checkpoint".into(),
            ))
        }
    };
    let horizon = args.horizon.or(trained_horizon).unwrap_or(64);
    let steps = args.steps.unwrap_or(2 * horizon);
    let config = EvalConfig {
        game: spec.clone(),
        games: args.games,
        steps,
        horizon,
        seed: args.seed,
        record_timing: !args.no_timing,
    };
    let record = EvalRecord {
        command,
        learner: learner.name().to_string(),
        checkpoint,
        game: args.game,
        games: args.games,
        steps,
        horizon,
        seed: args.seed,
        vf_iters: spec.vf_iters,
        eval_iters: spec.eval_iters,
        record_timing: !args.no_timing,
        endgame: spec.endgame,
    };
    Ok((learner, config, record))
}

fn write_toml<T: Serialize>(path: &Path, value: &T) -> CliResult {
    let text = toml::to_string(value).map_err(|e| CliError::Usage(e.to_string()))?;
    fs::write(path, text)?;
    Ok(())
}

fn write_curve(path: &Path, curve: &EvalCurve) -> CliResult {
    curve.write_csv(fs::File::create(path)?)?;
    Ok(())
}

fn curve_series<'a>(name: &'a str, curve: &EvalCurve) -> Series<'a> {
    Series {
        name,
        points: curve.points.iter().map(|p| (p.step, p.expl_mean)).collect(),
    }
}

fn print_summary(name: &str, run: &EvalRun, horizon: usize) {
    let last = run.curve.points.last().expect("nonempty curve");
    let at_t = run
        .curve
        .points
        .get(horizon.saturating_sub(1))
        .unwrap_or(last);
    println!(
        "{name}: exploitability {:.6e} at step {}, {:.6e} at step {}",
        at_t.expl_mean, at_t.step, last.expl_mean, last.step
    );
    if let Some(check) = run.bound() {
        println!(
            "{name}: regret bound {} (min margin {:.6})",
            if check.holds { "holds" } else { "violated" },
            check.margin
        );
    }
}

fn cmd_eval(
    algo: Option<MinimizerKind>,
    checkpoint: Option<PathBuf>,
    args: &EvalArgs,
    svg: bool,
    out: &Path,
    force: bool,
) -> CliResult {
    let (learner, config, record) = eval_setup(algo, checkpoint, args, "eval")?;
    prepare_out(out, force)?;
    write_toml(&out.join(RESOLVED_CONFIG), &record)?;
    let run = evaluate(&learner, &config)?;
    write_curve(&out.join("curve.csv"), &run.curve)?;
    if svg {
        let chart = line_chart(
            &format!("{} on {}", learner.name(), config.game.id),
            &[curve_series(learner.name(), &run.curve)],
            Some(config.horizon),
        );
        fs::write(out.join("curve.svg"), chart)?;
    }
    print_summary(learner.name(), &run, config.horizon);
    Ok(())
}

fn cmd_table(
    curves: &[String],
    targets: &[f64],
    reference: bool,
    out: Option<&Path>,
    force: bool,
) -> CliResult {
    let mut named = Vec::new();
    for entry in curves {
        let (name, path) = match entry.split_once('=') {
            Some((n, p)) => (n.to_string(), PathBuf::from(p)),
            None => {
                let p = PathBuf::from(entry);
                let stem = p
                    .file_stem()
                    .map_or_else(|| entry.clone(), |s| s.to_string_lossy().into_owned());
                (stem, p)
            }
        };
        let file = fs::File::open(&path)
            .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let curve = EvalCurve::read_csv(BufReader::new(file))
            .map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        named.push((name, curve));
    }
    let table = steps_to_target(&named, targets).map_err(|e| CliError::Usage(e.to_string()))?;
    print!("{}", table.to_text());
    if reference {
        let reference_table = regret_meta::meta::eval::StepsToTargetTable {
            algorithms: FULL_SCALE_REFERENCE
                .iter()
                .map(|(n, _)| format!("{n} (full scale)"))
                .collect(),
            targets: FULL_SCALE_TARGETS.to_vec(),
            steps: FULL_SCALE_REFERENCE
                .iter()
                .map(|(_, r)| r.iter().map(|&s| Some(s)).collect())
                .collect(),
        };
        println!();
        print!("{}", reference_table.to_text());
    }
    if let Some(dir) = out {
        prepare_out(dir, force)?;
        write_toml(
            &dir.join(RESOLVED_CONFIG),
            &TableRecord {
                command: "table",
                curves: curves.to_vec(),
                targets: targets.to_vec(),
                reference,
            },
        )?;
        table.write_csv(fs::File::create(dir.join("table.csv"))?)?;
        fs::write(dir.join("table.txt"), table.to_text())?;
    }
    Ok(())
}

fn cmd_gradcheck(config_path: &Path, out: Option<&Path>, force: bool) -> CliResult {
    let config = GradCheckConfig::from_toml(&read_text(config_path)?)
        .map_err(|e| config_error(config_path, e))?;
    let resolved = config.resolved();
    if let Some(dir) = out {
        prepare_out(dir, force)?;
        fs::write(dir.join(RESOLVED_CONFIG), resolved.to_toml())?;
    }
    let reports = run_grad_check(&resolved).map_err(|e| match e {
        regret_meta::Error::Config(_) => config_error(config_path, e),
        other => CliError::Core(other),
    })?;
    let mut lines = vec!["instance,block,max_rel_error,worst_index,analytic,numeric".to_string()];
    let mut worst: f64 = 0.0;
    let mut skipped = 0;
    for (i, r) in reports.iter().enumerate() {
        worst = worst.max(r.max_rel_error);
        skipped += r.skipped_nonsmooth;
        for b in &r.blocks {
            lines.push(format!(
                "{i},{},{:e},{},{:e},{:e}",
                b.block.name(),
                b.max_rel_error,
                b.worst_index,
                b.analytic,
                b.numeric
            ));
        }
    }
    println!("{:<18} {:>14} {:>8}", "block", "max_rel_error", "index");
    if let Some(first) = reports.first() {
        for (k, block) in first.blocks.iter().enumerate() {
            let (err, idx) = reports
                .iter()
                .map(|r| (r.blocks[k].max_rel_error, r.blocks[k].worst_index))
                .fold((0.0, 0), |acc, v| if v.0 > acc.0 { v } else { acc });
            println!("{:<18} {:>14.3e} {:>8}", block.block.name(), err, idx);
        }
    }
    println!(
        "{} instances, max relative error {worst:.3e}, {skipped} non-smooth entries skipped",
        reports.len()
    );
    if let Some(dir) = out {
        fs::write(dir.join("gradcheck.csv"), lines.join("\n") + "\n")?;
    }
    if worst < resolved.threshold {
        Ok(())
    } else {
        Err(CliError::Check(format!(
            "max relative error {worst:.3e} is not below {:.3e}",
            resolved.threshold
        )))
    }
}

#[allow(clippy::too_many_arguments)]
fn cmd_ood(
    checkpoint: &Path,
    train_dist: GameId,
    eval_dist: GameId,
    games: usize,
    steps: Option<usize>,
    seed: u64,
    record_timing: bool,
    svg: bool,
    out: &Path,
    force: bool,
) -> CliResult {
    let ckpt = load_checkpoint(checkpoint)?;
    for id in [train_dist, eval_dist] {
        ckpt.check_actions(GameSpec::new(id).num_actions(), checkpoint)?;
    }
    let learner = Learner::from_checkpoint(&ckpt);
    let horizon = ckpt.meta.horizon;
    let steps = steps.unwrap_or(2 * horizon);
    let config = |id: GameId| EvalConfig {
        game: GameSpec::new(id),
        games,
        steps,
        horizon,
        seed,
        record_timing,
    };
    prepare_out(out, force)?;
    write_toml(
        &out.join(RESOLVED_CONFIG),
        &OodRecord {
            command: "ood",
            checkpoint: checkpoint.to_path_buf(),
            train_dist,
            eval_dist,
            games,
            steps,
            horizon,
            seed,
            record_timing,
        },
    )?;
    let report = ood_evaluate(&learner, &config(train_dist), &config(eval_dist))?;
    write_curve(&out.join("in_dist.csv"), &report.in_dist.curve)?;
    write_curve(&out.join("out_dist.csv"), &report.out_dist.curve)?;
    let regret_lines: Vec<String> =
        std::iter::once("step,in_dist_regret,out_dist_regret".to_string())
            .chain(
                report
                    .in_dist
                    .mean_regret
                    .iter()
                    .zip(&report.out_dist.mean_regret)
                    .enumerate()
                    .map(|(t, (a, b))| format!("{},{a},{b}", t + 1)),
            )
            .collect();
    fs::write(out.join("regret.csv"), regret_lines.join("\n") + "\n")?;
    fs::write(out.join("verdict.txt"), format!("{}\n", report.verdict))?;
    if svg {
        let chart = line_chart(
            &format!("{} trained on {train_dist}", learner.name()),
            &[
                curve_series(train_dist.name(), &report.in_dist.curve),
                curve_series(eval_dist.name(), &report.out_dist.curve),
            ],
            Some(horizon),
        );
        fs::write(out.join("ood.svg"), chart)?;
    }
    print_summary(train_dist.name(), &report.in_dist, horizon);
    print_summary(eval_dist.name(), &report.out_dist, horizon);
    println!("verdict: {}", report.verdict);
    match report.verdict {
        regret_meta::meta::eval::OodVerdict::BoundViolated { .. } => {
            Err(CliError::Check(report.verdict.to_string()))
        }
        _ => Ok(()),
    }
}

fn cmd_sweep(
    algo: Option<MinimizerKind>,
    checkpoint: Option<PathBuf>,
    args: &EvalArgs,
    vf_iters_list: &[usize],
    out: &Path,
    force: bool,
) -> CliResult {
    let (learner, config, record) = eval_setup(algo, checkpoint, args, "sweep")?;
    if !config.game.id.is_sequential() {
        return Err(CliError::Usage(format!(
            "{} has no value function to sweep",
            config.game.id
        )));
    }
    prepare_out(out, force)?;
    write_toml(
        &out.join(RESOLVED_CONFIG),
        &SweepRecord {
            eval: record,
            vf_iters_list: vf_iters_list.to_vec(),
        },
    )?;
    let points = precision_sweep(&learner, &config, vf_iters_list).map_err(|e| match e {
        regret_meta::Error::InvalidArgument(m) => CliError::Usage(m),
        other => CliError::Core(other),
    })?;
    let mut summary = vec!["vf_iters,solver_gap,expl_at_T,expl_final".to_string()];
    for p in &points {
        write_curve(&out.join(format!("curve_vf{}.csv", p.vf_iters)), &p.curve)?;
        let last = p.curve.points.last().expect("nonempty curve");
        let at_t = p
            .curve
            .points
            .get(config.horizon.saturating_sub(1))
            .unwrap_or(last);
        summary.push(format!(
            "{},{},{},{}",
            p.vf_iters, p.solver_gap, at_t.expl_mean, last.expl_mean
        ));
        println!(
            "vf_iters {:>6}: solver gap {:.3e}, exploitability {:.6e} at step {}",
            p.vf_iters, p.solver_gap, last.expl_mean, last.step
        );
    }
    fs::write(out.join("sweep.csv"), summary.join("\n") + "\n")?;
    Ok(())
}

fn cmd_dump_game(
    game: GameId,
    seed: u64,
    index: Option<u64>,
    endgame_config: Option<&Path>,
    out: &Path,
    force: bool,
) -> CliResult {
    if out.exists() && !force {
        return Err(CliError::Usage(format!(
            "{} exists; pass --force to overwrite",
            out.display()
        )));
    }
    let endgame = load_endgame_config(endgame_config)?;
    let game_seed = index.map_or(seed, |i| derive_seed(seed, Stream::Eval, i));
    let mut rng = ChaCha8Rng::seed_from_u64(game_seed);
    let text = match (game.matrix(), game.endgame()) {
        (Some(dist), _) => {
            let m = dist.sample(&mut rng);
            let rows: Vec<Vec<f64>> = (0..m.rows())
                .map(|r| m.payoffs().row(r).iter().copied().collect())
                .collect();
            #[derive(Serialize)]
            struct MatrixDump {
                game: GameId,
                seed: u64,
                payoffs: Vec<Vec<f64>>,
            }
            toml::to_string(&MatrixDump {
                game,
                seed: game_seed,
                payoffs: rows,
            })
            .map_err(|e| CliError::Usage(e.to_string()))?
        }
        (None, Some(dist)) => Snapshot::of(&dist.sample(&endgame, &mut rng)?, game_seed).to_text(),
        (None, None) => unreachable!("every game id is a matrix or an endgame distribution"),
    };
    if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(out, text)?;
    let record_path = out.with_extension("config.toml");
    write_toml(
        &record_path,
        &DumpRecord {
            command: "dump-game",
            game,
            seed,
            index,
            game_seed,
            endgame,
        },
    )?;
    println!("wrote {} (seed {game_seed})", out.display());
    Ok(())
}
