use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_regret-meta"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

const TINY_TRAIN: &str = "algorithm = \"nprm\"\ngame = \"rps-sampled\"\nhorizon = 4\nepochs = 2\nbatch_size = 2\nhidden_dim = 4\nseed = 9\nrecord_timing = false\n";

fn train_tiny(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
    let cfg = dir.join(format!("{name}.toml"));
    fs::write(&cfg, body).unwrap();
    let out = dir.join(name);
    let o = run(&["train", "--config", p(&cfg), "--out", p(&out)]);
    assert!(o.status.success(), "{}", stderr(&o));
    out
}

#[test]
fn eval_writes_one_row_per_step() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("rm");
    let o = run(&[
        "eval",
        "--algo",
        "rm",
        "--game",
        "rps-fixed",
        "--games",
        "1",
        "--steps",
        "8",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("curve.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(
        lines[0],
        "step,expl_mean,expl_stderr,env_time_ms,algo_time_ms"
    );
    assert_eq!(lines.len(), 9);
    assert!(out.join("resolved_config.toml").exists());
}

#[test]
fn missing_key_exits_2_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        "algorithm = \"nprm\"\ngame = \"rps-fixed\"\nepochs = 1\nseed = 0\n",
    )
    .unwrap();
    let o = run(&[
        "train",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("horizon"), "{}", stderr(&o));
}

#[test]
fn training_is_byte_reproducible_and_refuses_collisions() {
    let dir = tempfile::tempdir().unwrap();
    let a = train_tiny(dir.path(), "a", TINY_TRAIN);
    let b = train_tiny(dir.path(), "b", TINY_TRAIN);
    for file in ["checkpoint.bin", "train.csv", "resolved_config.toml"] {
        assert_eq!(
            fs::read(a.join(file)).unwrap(),
            fs::read(b.join(file)).unwrap(),
            "{file}"
        );
    }

    let cfg = dir.path().join("a.toml");
    let o = run(&["train", "--config", p(&cfg), "--out", p(&a)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--force"), "{}", stderr(&o));
    let o = run(&[
        "train",
        "--config",
        p(&cfg),
        "--out",
        p(&a),
        "--force",
        "--seed",
        "10",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_ne!(
        fs::read(a.join("checkpoint.bin")).unwrap(),
        fs::read(b.join("checkpoint.bin")).unwrap()
    );
}

#[test]
fn checkpoint_with_wrong_action_count_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let trained = train_tiny(dir.path(), "t", TINY_TRAIN);
    let ckpt = trained.join("checkpoint.bin");
    let o = run(&[
        "eval",
        "--checkpoint",
        p(&ckpt),
        "--game",
        "endgame-fixed",
        "--games",
        "1",
        "--steps",
        "2",
        "--out",
        p(&dir.path().join("e")),
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("actions"), "{}", stderr(&o));

    let o = run(&[
        "ood",
        "--checkpoint",
        p(&ckpt),
        "--train-dist",
        "rps-sampled",
        "--eval-dist",
        "endgame-sampled",
        "--out",
        p(&dir.path().join("o")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn svg_is_deterministic_for_identical_curves() {
    let dir = tempfile::tempdir().unwrap();
    let mut svgs = Vec::new();
    for name in ["a", "b"] {
        let out = dir.path().join(name);
        let o = run(&[
            "eval",
            "--algo",
            "prm",
            "--game",
            "rps-sampled",
            "--games",
            "4",
            "--steps",
            "16",
            "--horizon",
            "8",
            "--no-timing",
            "--svg",
            "--out",
            p(&out),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        svgs.push(fs::read(out.join("curve.svg")).unwrap());
        assert_eq!(
            fs::read(dir.path().join("a/curve.csv")).unwrap(),
            fs::read(out.join("curve.csv")).unwrap()
        );
    }
    assert_eq!(svgs[0], svgs[1]);
    let text = String::from_utf8(svgs.remove(0)).unwrap();
    assert!(text.starts_with("<svg") && text.contains("stroke-dasharray"));
}

#[test]
fn table_from_curves() {
    let dir = tempfile::tempdir().unwrap();
    let curve = dir.path().join("rm.csv");
    fs::write(
        &curve,
        "step,expl_mean,expl_stderr,env_time_ms,algo_time_ms\n1,0.5,0,0,0\n2,0.3,0,0,0\n3,0.2,0,0,0\n",
    )
    .unwrap();
    let out = dir.path().join("t");
    let o = run(&[
        "table",
        "--curves",
        p(&curve),
        "--targets",
        "0.3",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(out.join("table.csv")).unwrap(),
        "algorithm,target_0.3\nrm,2\n"
    );
    assert!(out.join("resolved_config.toml").exists());

    let o = run(&["table", "--curves", p(&curve), "--targets", "0.4,0.1"]);
    assert!(stdout(&o).contains('—'), "{}", stdout(&o));

    let o = run(&["table", "--curves", p(&curve), "--targets", "0.1,0.4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("descending"));

    let o = run(&[
        "table",
        "--curves",
        &format!("mine={}", p(&curve)),
        "--targets",
        "0.4",
        "--reference",
    ]);
    let text = stdout(&o);
    assert!(text.contains("mine") && text.contains("615"), "{text}");
}

#[test]
fn gradcheck_passes_by_default_and_fails_above_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("g.toml");
    fs::write(
        &cfg,
        "algorithm = \"nprm\"\ngame = \"rps-sampled\"\ninstances = 3\n",
    )
    .unwrap();
    let o = run(&[
        "gradcheck",
        "--config",
        p(&cfg),
        "--out",
        p(&dir.path().join("g")),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    assert!(
        text.contains("layer1.w_input") && text.contains("head.weight"),
        "{text}"
    );
    assert!(dir.path().join("g/gradcheck.csv").exists());

    fs::write(
        &cfg,
        "algorithm = \"noa\"\ngame = \"rps-sampled\"\ninstances = 1\nthreshold = 1e-300\n",
    )
    .unwrap();
    let o = run(&["gradcheck", "--config", p(&cfg)]);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
}

#[test]
fn ood_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let nprm = train_tiny(dir.path(), "nprm", TINY_TRAIN);
    let out = dir.path().join("ood_nprm");
    let o = run(&[
        "ood",
        "--checkpoint",
        p(&nprm.join("checkpoint.bin")),
        "--train-dist",
        "rps-sampled",
        "--eval-dist",
        "uniform-3x3",
        "--games",
        "4",
        "--no-timing",
        "--svg",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(out.join("verdict.txt"))
        .unwrap()
        .starts_with("bound holds"));
    assert!(out.join("ood.svg").exists() && out.join("out_dist.csv").exists());

    let noa = train_tiny(dir.path(), "noa", &TINY_TRAIN.replace("nprm", "noa"));
    let out = dir.path().join("ood_noa");
    let o = run(&[
        "ood",
        "--checkpoint",
        p(&noa.join("checkpoint.bin")),
        "--train-dist",
        "rps-sampled",
        "--eval-dist",
        "uniform-3x3",
        "--games",
        "2",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(
        fs::read_to_string(out.join("verdict.txt")).unwrap(),
        "no guarantee (NOA)\n"
    );
}

#[test]
fn dump_game_writes_replayable_snapshots() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("g/endgame.toml");
    let o = run(&[
        "dump-game",
        "--game",
        "endgame-sampled",
        "--seed",
        "4",
        "--index",
        "2",
        "--out",
        p(&file),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let snap =
        regret_meta::games::endgame::Snapshot::parse(&fs::read_to_string(&file).unwrap()).unwrap();
    assert!(snap.into_game().is_ok());
    assert!(dir.path().join("g/endgame.config.toml").exists());

    let o = run(&["dump-game", "--game", "endgame-sampled", "--out", p(&file)]);
    assert_eq!(o.status.code(), Some(2));

    let file = dir.path().join("m.toml");
    let o = run(&[
        "dump-game",
        "--game",
        "rps-sampled",
        "--seed",
        "1",
        "--out",
        p(&file),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(fs::read_to_string(&file).unwrap().contains("payoffs"));
}

#[test]
fn sweep_over_value_function_precision() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s");
    let o = run(&[
        "sweep",
        "--algo",
        "rm",
        "--game",
        "endgame-fixed",
        "--games",
        "1",
        "--steps",
        "4",
        "--eval-iters",
        "200",
        "--vf-iters-list",
        "10,100",
        "--out",
        p(&out),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let summary = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(summary.lines().count(), 3);
    assert!(out.join("curve_vf10.csv").exists() && out.join("curve_vf100.csv").exists());

    let o = run(&[
        "sweep",
        "--algo",
        "rm",
        "--game",
        "rps-fixed",
        "--vf-iters-list",
        "10",
        "--out",
        p(&dir.path().join("x")),
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn unknown_ids_are_usage_errors() {
    let o = run(&[
        "eval",
        "--algo",
        "nope",
        "--game",
        "rps-fixed",
        "--out",
        "/tmp/unused",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "eval",
        "--algo",
        "rm",
        "--game",
        "chess",
        "--out",
        "/tmp/unused",
    ]);
    assert_eq!(o.status.code(), Some(2));
}
