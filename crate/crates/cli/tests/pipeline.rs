use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const QUICK_CONFIG: &str = r#"
seed = 17
[fit]
max_epochs = 4
patience = 2
batch_size = 128
[fit.network]
hidden = [8, 4]
[evaluate]
spans = [[6, 12], [12, 24]]
"#;

fn msm(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_msm")).current_dir(dir).args(args).output().expect("msm runs")
}

fn ok(dir: &Path, args: &[&str]) {
    let out = msm(dir, args);
    assert!(out.status.success(), "msm {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
}

fn data_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

/// simulate, fit, predict, evaluate and aj in a fresh directory.
fn run_pipeline() -> TempDir {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(d.join("quick.toml"), QUICK_CONFIG).unwrap();
    fn with<'a>(rest: &[&'a str]) -> Vec<&'a str> {
        ["--config", "quick.toml"].into_iter().chain(rest.iter().copied()).collect()
    }
    ok(d, &with(&["simulate", "--n", "600", "--out", "panel.csv", "--truth", "truth.json"]));
    ok(d, &with(&["fit", "--panel", "panel.csv", "--out", "models.json", "--report", "report.json"]));
    ok(
        d,
        &with(&[
            "predict",
            "--models",
            "models.json",
            "--panel",
            "panel.csv",
            "--t1",
            "6",
            "--t2",
            "18",
            "--out",
            "pred.csv",
        ]),
    );
    ok(
        d,
        &with(&[
            "evaluate",
            "--models",
            "models.json",
            "--panel",
            "panel.csv",
            "--out",
            "eval.json",
            "--csv",
            "eval.csv",
        ]),
    );
    ok(d, &with(&["aj", "--panel", "panel.csv", "--out", "aj.csv"]));
    dir
}

const ARTIFACTS: [&str; 8] =
    ["panel.csv", "truth.json", "models.json", "report.json", "pred.csv", "eval.json", "eval.csv", "aj.csv"];

#[test]
fn pipeline_is_byte_identical_across_runs() {
    let (a, b) = (run_pipeline(), run_pipeline());
    for name in ARTIFACTS {
        let (x, y) = (fs::read(a.path().join(name)).unwrap(), fs::read(b.path().join(name)).unwrap());
        assert!(x == y, "{name} differs between runs");
    }
}

#[test]
fn artifacts_carry_a_versioned_header() {
    let dir = run_pipeline();
    for name in ARTIFACTS {
        let text = fs::read_to_string(dir.path().join(name)).unwrap();
        if name.ends_with(".csv") {
            let first = text.lines().next().unwrap();
            assert!(first.starts_with("# msm format_version=1 command="), "{name}: {first}");
            assert!(first.contains(" seed=17 ") && first.contains("config_sha256="), "{name}: {first}");
        } else {
            let json: serde_json::Value = serde_json::from_str(&text).unwrap();
            assert_eq!(json["meta"]["format_version"], 1, "{name}");
            assert_eq!(json["meta"]["seed"], 17, "{name}");
        }
    }
}

#[test]
fn predictions_are_distributions_and_absorbed_subjects_stay_put() {
    let dir = run_pipeline();
    let panel = data_rows(&dir.path().join("panel.csv"));
    let absorbed_by_6: Vec<&str> = panel.iter().filter(|r| r[1] == "6" && r[2] == "3").map(|r| r[0].as_str()).collect();
    assert!(!absorbed_by_6.is_empty(), "fixture needs a subject in default at t=6");
    let preds = data_rows(&dir.path().join("pred.csv"));
    assert!(!preds.is_empty());
    for row in &preds {
        let p: Vec<f64> = row[1..].iter().map(|v| v.parse().unwrap()).collect();
        assert_eq!(p.len(), 4);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
        assert!(p.iter().all(|&v| (0.0..=1.0).contains(&v)));
        if absorbed_by_6.contains(&row[0].as_str()) {
            assert_eq!(p, vec![0.0, 0.0, 0.0, 1.0]);
        }
    }
    let eval = fs::read_to_string(dir.path().join("eval.csv")).unwrap();
    let header = eval.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(header, "span,horizon,model,n,MultiAUC,AUC1vsA,Brier,ECE,ACC");
    assert_eq!(data_rows(&dir.path().join("eval.csv")).len(), 2);
}

#[test]
fn true_edge_probabilities_make_the_exact_transform_error_free() {
    let dir = run_pipeline();
    let d = dir.path();
    ok(
        d,
        &[
            "compare-transforms",
            "--truth",
            "truth.json",
            "--panel",
            "panel.csv",
            "--subjects",
            "200",
            "--out",
            "cmp.json",
        ],
    );
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("cmp.json")).unwrap()).unwrap();
    let exact = report["true_q_summary"]["exact"]["mse_mean"].as_array().unwrap();
    let continuous = report["true_q_summary"]["continuous"]["mse_mean"].as_array().unwrap();
    for (e, c) in exact.iter().zip(continuous) {
        let (e, c) = (e.as_f64().unwrap(), c.as_f64().unwrap());
        assert!(e < 1e-24 && c > e, "exact {e}, continuous {c}");
    }
}

#[test]
fn transform_rows_sum_to_one() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(
        d.join("q.csv"),
        "id,t,q01,q10,q12,q20,q21,q23\na,1,0.1,0.2,0.3,0.1,0.2,0.3\na,2,0.9,0.9,0.9,0.9,0.9,0.9\n",
    )
    .unwrap();
    for method in ["exact", "continuous"] {
        ok(d, &["transform", "--input", "q.csv", "--out", "pi.csv", "--method", method]);
        let rows = data_rows(&d.join("pi.csv"));
        assert_eq!(rows.len(), 8);
        for r in rows {
            let p: f64 = r[3..7].iter().map(|v| v.parse::<f64>().unwrap()).sum();
            assert!((p - 1.0).abs() < 1e-12, "{method}: {r:?}");
        }
    }
}

#[test]
fn bad_input_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let missing = msm(d, &["fit", "--panel", "nope.csv", "--out", "m.json"]);
    assert_eq!(missing.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:"));

    let no_truth = msm(d, &["compare-transforms", "--out", "c.json"]);
    assert_eq!(no_truth.status.code(), Some(2));

    fs::write(d.join("bad.toml"), "unknown_key = 1\n").unwrap();
    let bad_config = msm(d, &["--config", "bad.toml", "aj", "--panel", "p.csv", "--out", "a.csv"]);
    assert_eq!(bad_config.status.code(), Some(2));

    fs::write(d.join("illegal.csv"), "id,t,state\na,0,0\na,1,2\n").unwrap();
    let illegal = msm(d, &["aj", "--panel", "illegal.csv", "--out", "a.csv"]);
    assert_eq!(illegal.status.code(), Some(2));
}

#[test]
fn divergent_training_exits_with_code_three() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    fs::write(
        d.join("wild.toml"),
        "[fit]\noptimizer = \"sgd\"\nmax_epochs = 3\nbatch_size = 8\nwarm_start = false\n[fit.lr]\ninitial = 1e12\n",
    )
    .unwrap();
    ok(d, &["simulate", "--n", "200", "--out", "panel.csv"]);
    let out = msm(d, &["--config", "wild.toml", "fit", "--panel", "panel.csv", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

fn bundled(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("data").join(name)
}

#[test]
fn bundled_loan_panel_round_trips() {
    let dir = TempDir::new().unwrap();
    let d = dir.path();
    let panel = bundled("synthetic_loans.csv");
    let panel = panel.to_str().unwrap();
    ok(d, &["aj", "--panel", panel, "--out", "aj.csv", "--counts", "counts.csv", "--distinct-loans"]);
    let counts = data_rows(&d.join("counts.csv"));
    assert_eq!(counts.len(), 16);
    let absorbing_exits: u64 =
        counts.iter().filter(|r| r[0] == "3" && r[1] != "3").map(|r| r[2].parse::<u64>().unwrap()).sum();
    assert_eq!(absorbing_exits, 0);
}
