use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn usher(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_usher"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn write_short_config(dir: &Path) -> PathBuf {
    let map = configs().join("../maps/risky.txt");
    let text = format!(
        "[env]\nkind = \"gridworld\"\nhorizon = 30\ndiscount = 0.825\nmap = {map:?}\n\n\
         [agent]\nkind = \"her\"\nbatches_per_episode = 2\n\n\
         [train]\nepisodes = 20\neval_interval = 10\neval_episodes = 20\n"
    );
    let path = dir.join("short.toml");
    std::fs::write(&path, text).unwrap();
    path
}

#[test]
fn train_writes_csv_under_out() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_short_config(dir.path());
    let out = usher(
        &["train", "--config", cfg.to_str().unwrap(), "--seed", "3", "--out", "runs"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("runs/metrics.csv")).unwrap();
    assert!(csv.starts_with("# agent=her,env=risky-grid,seed=3,"));
}

#[test]
fn compare_reads_what_train_wrote() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_short_config(dir.path());
    for seed in ["0", "1"] {
        let out_dir = format!("runs/{seed}");
        let args = ["train", "--config", cfg.to_str().unwrap(), "--seed", seed, "--out", &out_dir];
        assert!(usher(&args, dir.path()).status.success());
    }
    let out = usher(
        &["compare", "runs/0/metrics.csv", "runs/1/metrics.csv", "--out", "long.csv"],
        dir.path(),
    );
    assert!(out.status.success());
    let long = std::fs::read_to_string(dir.path().join("long.csv")).unwrap();
    assert_eq!(long.lines().next(), Some("agent,env,seed,config_hash,episode,metric,value"));
    assert_eq!(long.lines().count(), 1 + 2 * 2 * 5);
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "[env]\nkind = \"gridworld\"\nhorizn = 3\n").unwrap();
    let out = usher(&["train", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizn"));

    let out = usher(&["train", "--config", "missing.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn verify_passes_with_a_small_suite() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("suite.toml"),
        "bias_ratio_trajectories = 200000\ndense_updates = 200000\nsampled_updates = 200000\n",
    )
    .unwrap();
    let out = usher(&["verify", "--config", "suite.toml", "--out", "report"], dir.path());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    let report = std::fs::read_to_string(dir.path().join("report/verify.txt")).unwrap();
    assert_eq!(report, stdout);
    assert!(!report.contains("FAIL"));
}

#[test]
fn oracle_dumps_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("red_light.toml");
    let out = usher(&["oracle", "--config", cfg.to_str().unwrap(), "--out", "oracle"], dir.path());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(dir.path().join("oracle/q_star.csv").exists());
    let ftab = std::fs::read(dir.path().join("oracle/f_star.ftab")).unwrap();
    assert_eq!(&ftab[..4], b"FTAB");
}
