use std::path::{Path, PathBuf};

use usher::agents::AgentKind;
use usher::harness::{
    compare, dump_oracle, read_metrics, run_training, EnvKind, ExperimentConfig, COMPARE_HEADER,
    METRICS_HEADER,
};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

/// A shortened copy of a bundled config writing into `dir`.
fn short(name: &str, dir: &Path, kind: AgentKind) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::load(config(name)).unwrap();
    cfg.agent.kind = kind;
    cfg.agent.learner.batches_per_episode = 2;
    cfg.train.episodes = 40;
    cfg.train.eval_interval = 20;
    cfg.train.eval_episodes = 50;
    cfg.output.directory = dir.join(kind.name());
    cfg
}

#[test]
fn bundled_configs_load() {
    let kinds = [
        ("gridworld_risky.toml", EnvKind::Gridworld),
        ("gridworld_safe.toml", EnvKind::Gridworld),
        ("torus_freeze.toml", EnvKind::TorusFreeze),
        ("red_light.toml", EnvKind::RedLight),
    ];
    for (name, kind) in kinds {
        let cfg = ExperimentConfig::load(config(name)).unwrap();
        assert_eq!(cfg.env.kind, kind, "{name}");
        assert_eq!(cfg.env.horizon, 30);
        assert!(cfg.build_env().is_ok(), "{name}");
    }
}

#[test]
fn risky_and_safe_maps_differ_only_in_the_hazard() {
    let risky = ExperimentConfig::load(config("gridworld_risky.toml")).unwrap();
    let safe = ExperimentConfig::load(config("gridworld_safe.toml")).unwrap();
    let (r, s) = (risky.grid_map().unwrap().unwrap(), safe.grid_map().unwrap().unwrap());
    assert_eq!(r.to_text().replace('!', "."), s.to_text());
    assert_ne!(risky.config_hash().unwrap(), safe.config_hash().unwrap());
}

#[test]
fn training_writes_a_readable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = short("gridworld_risky.toml", dir.path(), AgentKind::Usher);
    let metrics = run_training(&cfg).unwrap();
    let text = std::fs::read_to_string(cfg.csv_path()).unwrap();
    assert!(text.lines().nth(1) == Some(METRICS_HEADER));
    // Values are stored to six significant digits, so compare the text.
    let back = read_metrics(cfg.csv_path()).unwrap();
    assert_eq!(back.to_csv(), metrics.to_csv());
    let episodes: Vec<u64> = back.rows.iter().map(|r| r.episode).collect();
    assert_eq!(episodes, [20, 40]);
}

#[test]
fn seeds_change_results_but_not_the_hash() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = short("red_light.toml", dir.path(), AgentKind::Her);
    let a = run_training(&cfg).unwrap();
    cfg.train.seed = 1;
    let b = run_training(&cfg).unwrap();
    assert_eq!(a.config_hash, b.config_hash);
    assert_ne!(a.seed, b.seed);
}

#[test]
fn compare_joins_runs_in_long_format() {
    let dir = tempfile::tempdir().unwrap();
    let mut paths = Vec::new();
    for kind in [AgentKind::Her, AgentKind::Usher] {
        let cfg = short("torus_freeze.toml", dir.path(), kind);
        run_training(&cfg).unwrap();
        paths.push(cfg.csv_path());
    }
    let table = compare(&paths).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next(), Some(COMPARE_HEADER));
    let rows: Vec<&str> = lines.collect();
    // Two runs, two evaluations, five metrics each.
    assert_eq!(rows.len(), 2 * 2 * 5);
    assert_eq!(rows.iter().filter(|r| r.starts_with("her,")).count(), 10);
    assert_eq!(rows.iter().filter(|r| r.starts_with("usher,")).count(), 10);
}

#[test]
fn oracle_dump_for_bundled_gridworld() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = ExperimentConfig::load(config("gridworld_risky.toml")).unwrap();
    let mdp = cfg.build_env().unwrap();
    let written = dump_oracle(&mdp, dir.path(), 1 << 24).unwrap();
    assert_eq!(written.len(), 2);
    let q = std::fs::read_to_string(dir.path().join("q_star.csv")).unwrap();
    assert_eq!(q.lines().next(), Some("state,action,goal,steps_left,value"));
    // The best start action is worth Q*(start) = 0.315 (rounded).
    let start_best = q
        .lines()
        .skip(1)
        .filter(|l| l.starts_with("0,"))
        .map(|l| l.rsplit(',').next().unwrap().parse::<f64>().unwrap())
        .fold(0.0, f64::max);
    assert!((start_best - 0.315).abs() < 5e-4, "{start_best}");
}
