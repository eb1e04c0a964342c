use std::path::Path;
use std::process::{Command, Output};

const QUICK: &str = "train_epochs = 40\neval_epochs = 15\nwindow = 5\n\
[learner]\nbatch_size = 8\nbuffer_capacity = 50\n\
[learner.shape]\nactor_hidden = [8]\ncritic_hidden = [8]\n";

fn coopcache(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_coopcache"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok(out: &Output) -> String {
    let stdout = String::from_utf8_lossy(&out.stdout).into_owned();
    assert!(
        out.status.success(),
        "stdout:\n{stdout}\nstderr:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    stdout
}

fn quick_config(dir: &Path) -> String {
    let path = dir.join("quick.toml");
    std::fs::write(&path, QUICK).unwrap();
    path.to_str().unwrap().to_owned()
}

fn train(dir: &Path, mode: &str, seed: &str, name: &str) -> String {
    let config = quick_config(dir);
    let out = dir.join(name);
    let out = out.to_str().unwrap();
    ok(&coopcache(&[
        "train", "--preset", "tiny", "--config", &config, "--mode", mode, "--seed", seed, "--out",
        out,
    ]));
    out.to_owned()
}

#[test]
fn train_writes_run_files() {
    let dir = tempfile::tempdir().unwrap();
    let run = train(dir.path(), "fd-hddpg", "3", "fd");
    let run = Path::new(&run);
    for f in ["metrics.csv", "manifest.json", "checkpoint.txt"] {
        assert!(run.join(f).exists(), "{f}");
    }
    let rows = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert_eq!(rows.lines().count(), 1 + 40 + 15);
}

#[test]
fn baseline_train_has_no_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let run = train(dir.path(), "rcu", "1", "rcu");
    assert!(!Path::new(&run).join("checkpoint.txt").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = train(dir.path(), "partially-decentralized", "5", "a");
    let b = train(dir.path(), "partially-decentralized", "5", "b");
    for f in ["metrics.csv", "manifest.json", "checkpoint.txt"] {
        assert_eq!(
            std::fs::read(Path::new(&a).join(f)).unwrap(),
            std::fs::read(Path::new(&b).join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn eval_from_checkpoint() {
    let dir = tempfile::tempdir().unwrap();
    let run = train(dir.path(), "centralized", "2", "c");
    let ckpt = Path::new(&run).join("checkpoint.txt");
    let config = quick_config(dir.path());
    let out = dir.path().join("eval");
    let stdout = ok(&coopcache(&[
        "eval",
        "--preset",
        "tiny",
        "--config",
        &config,
        "--checkpoint",
        ckpt.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]));
    assert!(stdout.contains("eval: 15 epochs"));
    let missing = coopcache(&["eval", "--preset", "tiny", "--mode", "centralized"]);
    assert!(!missing.status.success());
    assert!(String::from_utf8_lossy(&missing.stderr).contains("--checkpoint"));
}

#[test]
fn compare_and_export_curve() {
    let dir = tempfile::tempdir().unwrap();
    let co = train(dir.path(), "co-cu", "1", "co");
    let rcu = train(dir.path(), "rcu", "1", "rcu");
    let table = ok(&coopcache(&["compare", &co, &rcu]));
    assert!(table.contains("mean_traffic="));
    assert!(table.contains("0.00%"));
    let curve = ok(&coopcache(&["export-curve", &co, "--window", "3"]));
    assert!(curve.starts_with("15 points"));
    let text = std::fs::read_to_string(Path::new(&co).join("curve.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("epoch,phase,moving_average,std"));
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.toml");
    std::fs::write(&bad, "[network]\ncache_fraction = -0.2\n").unwrap();
    let out = coopcache(&["train", "--config", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("network.cache_fraction"));
    std::fs::write(&bad, "[learner]\nmomentum = 0.9\n").unwrap();
    let out = coopcache(&["train", "--config", bad.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("learner.momentum"));
    let out = coopcache(&["train", "--preset", "huge"]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("preset"));
}
