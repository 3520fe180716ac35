use std::path::PathBuf;
use std::process::{Command, Output};

fn rffkaf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rffkaf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

fn ok(args: &[&str]) -> String {
    let out = rffkaf(args);
    assert!(out.status.success(), "{args:?} failed: {}", stderr(&out));
    stdout(&out)
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&ok(args)).unwrap()
}

/// Help text is pinned; set `RFFKAF_UPDATE_GOLDEN=1` to rewrite it.
#[test]
fn help_output_matches_golden() {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden");
    let update = std::env::var_os("RFFKAF_UPDATE_GOLDEN").is_some();
    for sub in ["", "run", "theory", "bench", "approx", "dump"] {
        let args: Vec<&str> = if sub.is_empty() { vec!["--help"] } else { vec![sub, "--help"] };
        let got = ok(&args);
        let name = format!("help_{}.txt", if sub.is_empty() { "main" } else { sub });
        let path = dir.join(&name);
        if update {
            std::fs::create_dir_all(&dir).unwrap();
            std::fs::write(&path, &got).unwrap();
            continue;
        }
        let want = std::fs::read_to_string(&path)
            .unwrap_or_else(|e| panic!("{}: {e}; run with RFFKAF_UPDATE_GOLDEN=1", path.display()));
        assert_eq!(got, want, "{name}");
    }
}

#[test]
fn missing_config_fails_with_path() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("out");
    let out = rffkaf(&["run", "/no/such/config.toml", "-o", out_dir.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(stderr(&out).contains("/no/such/config.toml"), "{}", stderr(&out));
}

#[test]
fn bad_arguments_are_rejected() {
    assert!(!rffkaf(&["theory", "-D", "10", "--no-such-flag"]).status.success());
    assert!(!rffkaf(&["run", "-o", "x"]).status.success());
    assert!(!rffkaf(&["run", "a.toml", "--preset", "example3", "-o", "x"]).status.success());
    assert!(!rffkaf(&["theory"]).status.success());
    let out = rffkaf(&["dump", "--preset", "nope", "-n", "3"]);
    assert!(!out.status.success());
    assert!(stderr(&out).starts_with("error: "));
}

#[test]
fn theory_inline_defaults() {
    let v = json(&["theory", "-D", "100"]);
    assert!((v["j_opt"].as_f64().unwrap() - 0.01).abs() < 1e-15);
    assert_eq!(v["D"], 100);
    assert_eq!(v["sigma"], 5.0);
    let mu_max = v["mu_max"].as_f64().unwrap();
    let mu_var = v["mu_max_variance"].as_f64().unwrap();
    assert!((mu_max - 2.0 * mu_var).abs() <= 1e-12 * mu_max);
    assert!(v["steady_state_mse"].as_f64().unwrap() > 0.01);
}

#[test]
fn theory_is_reproducible() {
    let args = ["theory", "-D", "100", "--seed", "1"];
    assert_eq!(rffkaf(&args).stdout, rffkaf(&args).stdout);
}

#[test]
fn theory_refuses_unstable_step_size() {
    let out = rffkaf(&["theory", "-D", "50", "--mu", "1e6"]);
    assert!(!out.status.success());
    let msg = stderr(&out);
    assert!(msg.contains("stability bound"), "{msg}");
    assert_eq!(msg.matches("mu < ").count(), 2, "{msg}");
    assert!(msg.contains("1000000"), "{msg}");
}

#[test]
fn theory_from_preset() {
    let v = json(&["theory", "--preset", "example1_d100"]);
    assert_eq!(v["D"], 100);
    assert!(!rffkaf(&["theory", "--preset", "example3"]).status.success());
}

#[test]
fn approx_error_shrinks_with_features() {
    let text = ok(&["approx", "--sigma", "5", "--input-dim", "5", "--feature-dims", "100,400,1600"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("D,rms_error,max_error"));
    let rms: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(rms.len(), 3);
    assert!(rms[0] > rms[1] && rms[1] > rms[2], "{rms:?}");

    let single = ok(&["approx", "--sigma", "1", "--input-dim", "2", "--feature-dims", "1"]);
    let rows: Vec<&str> = single.lines().skip(1).collect();
    assert_eq!(rows.len(), 1);
    let r: f64 = rows[0].split(',').nth(1).unwrap().parse().unwrap();
    assert!(r <= 3.0);

    let args = ["approx", "--sigma", "2", "--input-dim", "3", "--feature-dims", "10,20", "--seed", "9"];
    assert_eq!(ok(&args), ok(&args));
}

#[test]
fn run_writes_curves_and_summary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex3");
    ok(&["run", "--preset", "example3", "--runs", "100", "-o", out.to_str().unwrap()]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let filters = summary["filters"].as_array().unwrap();
    let q = filters.iter().find(|f| f["algorithm"] == "qklms").unwrap();
    let m = q["mean_dict_size"].as_f64().unwrap();
    assert!((4.0..=12.0).contains(&m), "{m}");
    for f in filters {
        let csv = out.join(format!("{}.csv", f["label"].as_str().unwrap()));
        assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 501);
    }
}

#[test]
fn run_example4_dictionary() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ex4");
    ok(&["run", "--preset", "example4", "--runs", "100", "-o", out.to_str().unwrap()]);
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let q = summary["filters"]
        .as_array()
        .unwrap()
        .iter()
        .find(|f| f["algorithm"] == "qklms")
        .unwrap()
        .clone();
    let m = q["mean_dict_size"].as_f64().unwrap();
    assert!((24.0..=40.0).contains(&m), "{m}");
}

#[test]
fn run_from_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("tiny.toml");
    std::fs::write(
        &cfg,
        r#"
name = "tiny"
n_samples = 30
n_runs = 3
base_seed = 5

[model]
kind = "quadratic"
sigma_eta = 0.05

[[filters]]
algorithm = "rffklms"
label = "rff"
mu = 0.5
sigma = 5.0
feature_dim = 16
"#,
    )
    .unwrap();
    let out = dir.path().join("o");
    ok(&["run", cfg.to_str().unwrap(), "-o", out.to_str().unwrap()]);
    assert!(out.join("rff.csv").exists());
    assert!(out.join("summary.json").exists());
}

#[test]
fn bench_reports_each_filter() {
    let v = json(&["bench", "--preset", "example3", "--runs", "2"]);
    let rows = v.as_array().unwrap();
    assert_eq!(rows.len(), 2);
    for r in rows {
        assert_eq!(r["runs"], 2);
        assert!(r["mean_s"].as_f64().unwrap() >= 0.0);
    }
}

#[test]
fn dump_writes_header_and_rows() {
    let text = ok(&["dump", "--preset", "example4", "-n", "5"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,x_1,x_2,y");
    assert_eq!(lines.len(), 6);
    assert_eq!(text, ok(&["dump", "--preset", "example4", "-n", "5"]));
    assert_ne!(text, ok(&["dump", "--preset", "example4", "-n", "5", "--seed", "2"]));
}
