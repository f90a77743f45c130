//! End-to-end tests of the binary: exit codes, CSV schema, determinism.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_netbandit"))
}

fn minimal_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("config.toml");
    std::fs::write(
        &path,
        r#"
[experiment]
rounds = 5
replications = 3
seed = 7

[network]
model = "sbm"
n = 10
k = 2
within = 0.4
across = 0.1

[reward]
cutoff = 3
sigma = 1.0

[agent]
kind = "thompson"
prior_mean = 1.0
lambda = 0.1

[budget]
kind = "constant"
value = 3
"#,
    )
    .unwrap();
    path
}

fn assert_exit(out: &Output, code: i32) {
    assert_eq!(
        out.status.code(),
        Some(code),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Rows with the wall-clock column dropped; wall time is the one field
/// that may differ between identical reruns.
fn strip_wall(csv: &str) -> Vec<String> {
    csv.lines()
        .map(|line| {
            let cells: Vec<&str> = line.split(',').collect();
            cells[..cells.len() - 1].join(",")
        })
        .collect()
}

#[test]
fn missing_config_exits_2_and_names_the_path() {
    let out = bin().args(["run", "/no/such/config.toml"]).output().unwrap();
    assert_exit(&out, 2);
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("/no/such/config.toml"), "{err}");
}

#[test]
fn unknown_axis_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let out = bin()
        .args(["sweep", cfg.to_str().unwrap(), "--axis", "bogus", "--values", "1,2"])
        .current_dir(dir.path())
        .output()
        .unwrap();
    assert_exit(&out, 2);
}

#[test]
fn invalid_sigma_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    let text = std::fs::read_to_string(minimal_config(dir.path())).unwrap();
    std::fs::write(&path, text.replace("sigma = 1.0", "sigma = -1.0")).unwrap();
    let out = bin().args(["validate", path.to_str().unwrap()]).output().unwrap();
    assert_exit(&out, 2);
}

#[test]
fn run_writes_one_row_per_rep_round() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let out_csv = dir.path().join("r.csv");
    let out = bin()
        .args(["run", cfg.to_str().unwrap(), "--out", out_csv.to_str().unwrap()])
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 1 + 3 * 5);
    assert_eq!(
        lines[0],
        "rep,t,agent,n,budget,prior_mean,cum_regret,regret_inc,oracle_status,wall_ms"
    );
    for line in &lines[1..] {
        assert_eq!(line.split(',').count(), 10, "{line}");
        assert!(!line.split(',').any(|c| c.is_empty()), "{line}");
    }
    let summary = String::from_utf8_lossy(&out.stdout);
    assert!(summary.contains("final cumulative regret"), "{summary}");
}

#[test]
fn same_seed_reproduces_the_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for out_csv in [&a, &b] {
        let out = bin()
            .args([
                "run",
                cfg.to_str().unwrap(),
                "--seed",
                "7",
                "--out",
                out_csv.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_exit(&out, 0);
    }
    let csv_a = std::fs::read_to_string(&a).unwrap();
    let csv_b = std::fs::read_to_string(&b).unwrap();
    assert_eq!(strip_wall(&csv_a), strip_wall(&csv_b));
}

#[test]
fn jobs_flag_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let (a, b) = (dir.path().join("j1.csv"), dir.path().join("j8.csv"));
    for (out_csv, jobs) in [(&a, "1"), (&b, "8")] {
        let out = bin()
            .args([
                "run",
                cfg.to_str().unwrap(),
                "--jobs",
                jobs,
                "--out",
                out_csv.to_str().unwrap(),
            ])
            .output()
            .unwrap();
        assert_exit(&out, 0);
    }
    assert_eq!(
        strip_wall(&std::fs::read_to_string(&a).unwrap()),
        strip_wall(&std::fs::read_to_string(&b).unwrap())
    );
}

#[test]
fn csv_round_trips_full_precision() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let out_csv = dir.path().join("p.csv");
    let out = bin()
        .args(["run", cfg.to_str().unwrap(), "--out", out_csv.to_str().unwrap()])
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let csv = std::fs::read_to_string(&out_csv).unwrap();
    let mut cum_by_rep: std::collections::HashMap<u32, f64> = Default::default();
    for line in csv.lines().skip(1) {
        let cells: Vec<&str> = line.split(',').collect();
        let rep: u32 = cells[0].parse().unwrap();
        let cum: f64 = cells[6].parse().unwrap();
        let inc: f64 = cells[7].parse().unwrap();
        // Parsed increments reconstruct the parsed cumulative series
        // exactly, which requires full-precision serialization.
        let prev = cum_by_rep.get(&rep).copied().unwrap_or(0.0);
        assert_eq!((prev + inc).to_bits(), cum.to_bits(), "{line}");
        cum_by_rep.insert(rep, cum);
    }
}

#[test]
fn sweep_writes_per_value_and_combined_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let prefix = dir.path().join("sw").to_str().unwrap().to_string();
    let out = bin()
        .args([
            "sweep",
            cfg.to_str().unwrap(),
            "--axis",
            "budget",
            "--values",
            "2,5,unlimited",
            "--out",
            &prefix,
        ])
        .output()
        .unwrap();
    assert_exit(&out, 0);
    for name in ["budget-2", "budget-5", "budget-unlimited"] {
        let f = format!("{prefix}_{name}.csv");
        assert!(Path::new(&f).exists(), "missing {f}");
    }
    let combined = std::fs::read_to_string(format!("{prefix}_combined.csv")).unwrap();
    // 3 arms x 3 reps x 5 rounds + header.
    assert_eq!(combined.lines().count(), 1 + 3 * 3 * 5);
    // Arms are distinguished by the budget column (cap; n for unlimited).
    let caps: std::collections::BTreeSet<&str> = combined
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(4).unwrap())
        .collect();
    assert_eq!(caps.into_iter().collect::<Vec<_>>(), vec!["10", "2", "5"]);
}

#[test]
fn agent_sweep_runs_baselines() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = minimal_config(dir.path());
    let prefix = dir.path().join("ag").to_str().unwrap().to_string();
    let out = bin()
        .args([
            "sweep",
            cfg.to_str().unwrap(),
            "--axis",
            "agent",
            "--values",
            "thompson,sum_linear_ts,random",
            "--out",
            &prefix,
        ])
        .output()
        .unwrap();
    assert_exit(&out, 0);
    let combined = std::fs::read_to_string(format!("{prefix}_combined.csv")).unwrap();
    let agents: std::collections::BTreeSet<&str> = combined
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap())
        .collect();
    assert_eq!(
        agents.into_iter().collect::<Vec<_>>(),
        vec!["random", "sum_linear_ts", "thompson"]
    );
}

#[test]
fn validate_prints_derived_quantities() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("proto.toml");
    std::fs::write(
        &path,
        r#"
[experiment]
rounds = 100
replications = 50
seed = 1

[network]
model = "sbm"
n = 100
k = "n/10"
within = 0.3
across = "1/n"

[reward]
cutoff = 15
sigma = 1.0

[agent]
kind = "thompson"
prior_mean = 1.0
lambda = 0.1

[budget]
kind = "fraction"
value = 0.2
"#,
    )
    .unwrap();
    let out = bin().args(["validate", path.to_str().unwrap()]).output().unwrap();
    assert_exit(&out, 0);
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("= 10 + 16 = 26"), "{text}");
    assert!(text.contains("budget cap B = 20"), "{text}");
    assert!(text.contains("expected degree"), "{text}");
}
