use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regret_meta::games::endgame::{EndgameConfig, EndgameDistribution, Snapshot};
use regret_meta::games::{GameId, GameSpec};
use regret_meta::meta::{evaluate, meta_train, EvalConfig, Learner, TrainConfig};
use regret_meta::minimizers::MinimizerKind;
use regret_meta::neural::{load_checkpoint, save_checkpoint};

fn tiny(kind: MinimizerKind, game: GameId) -> TrainConfig {
    let mut c = TrainConfig::new(kind, game, 6, 3, 17);
    c.batch_size = 5;
    c.hidden_dim = 4;
    c.record_timing = false;
    c.vf_iters = 50;
    c.eval_iters = 200;
    c.eval_every = 3;
    c.eval_games = 2;
    c
}

fn in_pool<R: Send>(threads: usize, f: impl FnOnce() -> R + Send) -> R {
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .unwrap()
        .install(f)
}

#[test]
fn training_does_not_depend_on_thread_count() {
    for (kind, game) in [
        (MinimizerKind::Nprm, GameId::RpsSampled),
        (MinimizerKind::Noa, GameId::EndgameSampled),
    ] {
        let c = tiny(kind, game);
        let (a, ra) = in_pool(1, || meta_train(&c).unwrap());
        let (b, rb) = in_pool(3, || meta_train(&c).unwrap());
        assert_eq!(a.to_bytes(), b.to_bytes());
        let (mut ca, mut cb) = (Vec::new(), Vec::new());
        ra.write_csv(&mut ca).unwrap();
        rb.write_csv(&mut cb).unwrap();
        assert_eq!(ca, cb);
        assert!(ra.rows[2].eval_expl_at_t.is_some());
    }
}

#[test]
fn saved_checkpoint_evaluates_identically() {
    let c = tiny(MinimizerKind::NprmPlus, GameId::RpsSampled);
    let (ckpt, _) = meta_train(&c).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("net.bin");
    save_checkpoint(&path, &ckpt.params, &ckpt.meta).unwrap();
    let back = load_checkpoint(&path).unwrap();
    assert_eq!(back.meta.config_digest, c.digest());
    let cfg = EvalConfig {
        game: GameSpec::new(GameId::RpsSampled),
        games: 4,
        steps: 12,
        horizon: 6,
        seed: 2,
        record_timing: false,
    };
    let a = evaluate(&Learner::from_checkpoint(&ckpt), &cfg).unwrap();
    let b = evaluate(&Learner::from_checkpoint(&back), &cfg).unwrap();
    assert_eq!(a.curve, b.curve);
    assert!(a.bound().unwrap().holds);
}

#[test]
fn snapshot_rebuilds_the_same_game() {
    let config = EndgameConfig::default();
    let game = EndgameDistribution::Sampled
        .sample(&config, &mut ChaCha8Rng::seed_from_u64(77))
        .unwrap();
    let text = Snapshot::of(&game, 77).to_text();
    let back = Snapshot::parse(&text).unwrap().into_game().unwrap();
    assert_eq!(back, game);
}
