use std::path::Path;
use std::process::{Command, Output};

fn groupcraft(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_groupcraft"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn quick_run(cwd: &Path, preset: &str, name: &str) -> Output {
    groupcraft(
        &[
            "run", "--preset", preset, "--name", name, "--agents", "4", "--steps", "400",
            "--eval-interval", "200", "--trials", "3", "--task", "single-path", "--length", "2",
            "--hidden", "8", "--batch-size", "8", "--output", "runs",
        ],
        cwd,
    )
}

#[test]
fn run_analyze_compare_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let cwd = tmp.path();
    for (preset, name) in [("fully-connected", "fc"), ("dynamic", "dyn")] {
        let out = quick_run(cwd, preset, name);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        let dir = cwd.join("runs").join(name);
        for f in ["config.toml", "summary.json", "summary.csv", "series.csv"] {
            assert!(dir.join(f).is_file(), "{name}: missing {f}");
        }
        for t in 0..3 {
            let trial = dir.join(format!("trial-{t:03}"));
            for f in ["metrics.csv", "meta.json", "events.jsonl", "share_log.csv", "snapshots.bin"] {
                assert!(trial.join(f).is_file(), "{name}: missing trial {t} {f}");
            }
        }
    }

    let analyzed = groupcraft(&["analyze", "runs/dyn"], cwd);
    assert!(analyzed.status.success(), "{}", String::from_utf8_lossy(&analyzed.stderr));
    assert!(String::from_utf8_lossy(&analyzed.stdout).contains("all metric tables match"));

    let cmp = groupcraft(&["compare", "runs/fc", "runs/dyn", "--metric", "reward_max_final", "--out", "cmp"], cwd);
    assert!(cmp.status.success(), "{}", String::from_utf8_lossy(&cmp.stderr));
    for f in ["compare.csv", "compare.txt", "compare.svg"] {
        assert!(cwd.join("cmp").join(f).is_file(), "missing {f}");
    }

    let plot = groupcraft(&["plot", "runs/fc", "runs/dyn", "--out", "charts"], cwd);
    assert!(plot.status.success(), "{}", String::from_utf8_lossy(&plot.stderr));
    assert!(cwd.join("charts").join("reward_max.svg").is_file());
}

#[test]
fn runs_are_reproducible_from_the_command_line() {
    let tmp = tempfile::tempdir().unwrap();
    let a = quick_run(tmp.path(), "ring", "a");
    let b = quick_run(tmp.path(), "ring", "b");
    assert!(a.status.success() && b.status.success());
    for t in 0..3 {
        let read = |n: &str| std::fs::read(tmp.path().join("runs").join(n).join(format!("trial-{t:03}/metrics.csv"))).unwrap();
        assert_eq!(read("a"), read("b"));
    }
}

#[test]
fn invalid_input_exits_with_code_two() {
    let tmp = tempfile::tempdir().unwrap();
    let odd = groupcraft(&["run", "--preset", "dynamic", "--agents", "5", "--steps", "10"], tmp.path());
    assert_eq!(odd.status.code(), Some(2));
    assert!(!odd.stderr.is_empty());

    std::fs::write(tmp.path().join("bad.toml"), "agents = \"many\"\n").unwrap();
    let bad = groupcraft(&["run", "--config", "bad.toml"], tmp.path());
    assert_eq!(bad.status.code(), Some(2));

    let missing = groupcraft(&["analyze", "does-not-exist"], tmp.path());
    assert_eq!(missing.status.code(), Some(2));
}
