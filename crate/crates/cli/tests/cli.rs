use std::path::Path;
use std::process::{Command, Output};

fn bco_lab(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bco-lab"))
        .args(args)
        .current_dir(dir)
        .env("BCO_LAB_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn run_writes_trace_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = bco_lab(
        &[
            "run",
            "--experiment",
            "quadratic",
            "--t",
            "1000",
            "--reps",
            "5",
            "--out",
            "res",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(dir.path().join("res/quadratic.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "algorithm,seed,t,epoch,loss_y,loss_x,cum_loss_y,cum_loss_x,round_ns"
    );
    assert_eq!(lines.count(), 4 * 5 * 1000);
    assert!(dir.path().join("res/quadratic_summary.csv").exists());
    assert!(stdout(&out).contains("pfbco"));
}

#[test]
fn identical_seeds_give_identical_losses() {
    let dir = tempfile::tempdir().unwrap();
    let losses = |out: &str| {
        let o = bco_lab(
            &["run", "--t", "50", "--reps", "2", "--seed", "11", "--out", out],
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0));
        // round_ns differs between runs; compare everything else
        std::fs::read_to_string(dir.path().join(out).join("quadratic.csv"))
            .unwrap()
            .lines()
            .map(|l| l.rsplit_once(',').unwrap().0.to_string())
            .collect::<Vec<_>>()
    };
    assert_eq!(losses("a"), losses("b"));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "experiment = \"portfolio\"\nn = 6\nt = 500\nrepetitions = 3\nalgorithms = \"pfbco,fkm\"\nout = \"from_file\"\n",
    )
    .unwrap();
    let out = bco_lab(&["run", "exp.toml", "--t", "40", "--anytime"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(dir.path().join("from_file/portfolio.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 2 * 3 * 40);
    let epochs: Vec<&str> = trace
        .lines()
        .skip(1)
        .take(10)
        .map(|l| l.split(',').nth(3).unwrap())
        .collect();
    assert_eq!(epochs, ["0", "1", "1", "2", "2", "2", "2", "3", "3", "3"]);
}

#[test]
fn bench_prints_relative_times() {
    let dir = tempfile::tempdir().unwrap();
    let out = bco_lab(
        &["bench", "--t", "100", "--reps", "2", "--algos", "pfbco,fkm"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("relative"));
    assert!(text
        .lines()
        .any(|l| l.starts_with("pfbco") && l.trim_end().ends_with("1.00")));
    assert!(!dir.path().join("results").exists());
}

#[test]
fn verify_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let out = bco_lab(&["verify"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", stdout(&out));
    assert!(stdout(&out).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn verify_reports_a_broken_schedule() {
    let dir = tempfile::tempdir().unwrap();
    let out = bco_lab(&["verify", "--sigma-exponent", "1", "--t", "50"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(stdout(&out).contains("FAIL step-size-recursion"));
}

#[test]
fn config_and_usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["run", "missing.toml"][..],
        &["run", "--bogus"],
        &["run", "--experiment", "sudoku"],
        &["run", "--algos", "pfbco,adam"],
        &["run", "--t", "0"],
        &["frobnicate"],
    ] {
        let out = bco_lab(args, dir.path());
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
    std::fs::write(dir.path().join("bad.toml"), "horizon = 10\n").unwrap();
    assert_eq!(bco_lab(&["run", "bad.toml"], dir.path()).status.code(), Some(1));
}

#[test]
fn runtime_errors_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("prices.csv"), "1,1\n2,1\n1,1\n").unwrap();
    std::fs::write(
        dir.path().join("exp.toml"),
        "experiment = \"portfolio\"\nprices = \"prices.csv\"\nt = 2\nrepetitions = 1\n",
    )
    .unwrap();
    assert_eq!(bco_lab(&["run", "exp.toml"], dir.path()).status.code(), Some(0));
    std::fs::write(dir.path().join("prices.csv"), "1,1\n-2,1\n1,1\n").unwrap();
    assert_eq!(bco_lab(&["run", "exp.toml"], dir.path()).status.code(), Some(2));
}
