use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_powerbayes"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap_or(-1)
}

fn ok(args: &[&str]) {
    let o = run(args);
    assert_eq!(code(&o), 0, "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, seed: &str) -> PathBuf {
    ok(&["simulate", "--out", p(dir), "--seed", seed]);
    dir.join("data.csv")
}

fn short_infer(data: &Path, out: &Path, extra: &[&str]) {
    let mut args = vec![
        "infer", "--data", p(data), "--out", p(out), "--iterations", "20000", "--burn-in", "10000", "--thin", "10",
        "--pilot", "10000",
    ];
    args.extend_from_slice(extra);
    ok(&args);
}

#[test]
fn simulate_defaults_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    simulate(&a, "7");
    simulate(&b, "7");
    assert_eq!(fs::read(a.join("data.csv")).unwrap(), fs::read(b.join("data.csv")).unwrap());
    assert_eq!(
        fs::read(a.join("sealed/ground_truth.csv")).unwrap(),
        fs::read(b.join("sealed/ground_truth.csv")).unwrap()
    );

    let m: toml::Table = fs::read_to_string(a.join("manifest.toml")).unwrap().parse().unwrap();
    let c = m["config"].as_table().unwrap();
    assert_eq!(c["alpha"].as_float(), Some(2.2));
    assert_eq!(c["lambda"].as_float(), Some(0.007));
    assert_eq!(c["mu"].as_float(), Some(0.05));
    assert_eq!(c["p"].as_float(), Some(0.19));
    assert_eq!(c["n_true"].as_integer(), Some(20000));

    let header = fs::read_to_string(a.join("data.csv")).unwrap();
    assert_eq!(header.lines().next(), Some("battle_id,side,casualties"));
}

#[test]
fn usage_errors_exit_2() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(code(&run(&["simulate", "--out", p(&out), "--n-true", "0"])), 2);
    assert_eq!(code(&run(&["simulate", "--out", p(&out), "--side", "Martian"])), 2);
    assert_eq!(code(&run(&["frobnicate"])), 2);

    let data = simulate(&tmp.path().join("s"), "1");
    let o = run(&[
        "infer", "--data", p(&data), "--out", p(&out), "--iterations", "1000", "--burn-in", "5000",
    ]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(!out.join("manifest.toml").exists());

    let cfg = tmp.path().join("bad.toml");
    fs::write(&cfg, "[config]\nseed = 1\nno_such_key = 3\n").unwrap();
    assert_eq!(code(&run(&["simulate", "--out", p(&out), "--config", p(&cfg)])), 2);
}

#[test]
fn runtime_errors_exit_1() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    let missing = tmp.path().join("missing.csv");
    assert_eq!(code(&run(&["fit-csn", "--data", p(&missing), "--out", p(&out)])), 1);

    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "battle_id,side,casualties\nb1,Native,0\nb2,Native,x\n").unwrap();
    let o = run(&["fit-csn", "--data", p(&bad), "--out", p(&out)]);
    assert_eq!(code(&o), 1);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("row 2") && err.contains("row 3"), "{err}");
}

#[test]
fn fit_csn_outputs_and_bootstrap_toggle() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(&tmp.path().join("s"), "2");
    let with = tmp.path().join("with");
    ok(&["fit-csn", "--data", p(&data), "--out", p(&with), "--bootstrap", "20", "--gof", "20"]);
    let summary = fs::read_to_string(with.join("fit_summary.csv")).unwrap();
    let header = summary.lines().next().unwrap();
    for col in ["xmin_hat", "alpha_hat", "ks_distance", "p_value"] {
        assert!(header.contains(col), "{header}");
    }
    assert_eq!(fs::read_to_string(with.join("bootstrap.csv")).unwrap().lines().count(), 21);
    assert!(with.join("ccdf_Native.csv").exists());
    assert!(with.join("frequency.csv").exists());

    let without = tmp.path().join("without");
    ok(&["fit-csn", "--data", p(&data), "--out", p(&without), "--bootstrap", "0", "--gof", "10"]);
    assert!(!without.join("bootstrap.csv").exists());
    let m: toml::Table = fs::read_to_string(without.join("manifest.toml")).unwrap().parse().unwrap();
    assert_eq!(m["results"]["bootstrap"].as_str(), Some("omitted"));
}

#[test]
fn infer_predict_diagnose_round_trip() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(&tmp.path().join("s"), "3");
    let run_dir = tmp.path().join("run");
    short_infer(&data, &run_dir, &["--seed", "5"]);
    let draws = fs::read_to_string(run_dir.join("draws_chain0.csv")).unwrap();
    assert_eq!(draws.lines().count(), 1001);
    assert_eq!(
        draws.lines().next(),
        Some("iteration,alpha_N,lambda_N,mu_N,p_N,latent_sum_N,log_posterior")
    );

    // the manifest's config table repeats the run exactly
    let again = tmp.path().join("again");
    ok(&["infer", "--config", p(&run_dir.join("manifest.toml")), "--out", p(&again)]);
    assert_eq!(draws, fs::read_to_string(again.join("draws_chain0.csv")).unwrap());

    let pred = tmp.path().join("pred");
    ok(&["predict", "--run", p(&run_dir), "--out", p(&pred), "--level", "0.9"]);
    let thresholds = fs::read_to_string(pred.join("thresholds.csv")).unwrap();
    assert_eq!(thresholds.lines().count(), 2);
    assert!(thresholds.starts_with("side,level,x_threshold"));
    let summary = fs::read_to_string(pred.join("predictive_summary.csv")).unwrap();
    assert!(summary.contains("n_true") && summary.contains("total_true"));
    assert_eq!(fs::read_to_string(pred.join("predictions.csv")).unwrap().lines().count(), 1001);

    let pred2 = tmp.path().join("pred2");
    ok(&["predict", "--run", p(&run_dir), "--out", p(&pred2), "--level", "0.9"]);
    assert_eq!(
        fs::read(pred.join("predictions.csv")).unwrap(),
        fs::read(pred2.join("predictions.csv")).unwrap()
    );

    let diag = tmp.path().join("diag");
    ok(&["diagnose", "--run", p(&run_dir), "--out", p(&diag)]);
    let d = fs::read_to_string(diag.join("diagnostics.csv")).unwrap();
    assert!(d.lines().next().unwrap().contains("ess"));
    assert_eq!(d.lines().count(), 1 + 5);
    assert_eq!(fs::read_to_string(diag.join("trace.csv")).unwrap().lines().count(), 1 + 5 * 1000);
}

#[test]
fn truncated_draws_are_a_hard_error() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(&tmp.path().join("s"), "4");
    let run_dir = tmp.path().join("run");
    short_infer(&data, &run_dir, &[]);
    let path = run_dir.join("draws_chain0.csv");
    let text = fs::read_to_string(&path).unwrap();

    // drop the last row cleanly: the manifest count no longer matches
    let cut: Vec<&str> = text.lines().collect();
    fs::write(&path, cut[..cut.len() - 1].join("\n") + "\n").unwrap();
    let o = run(&["predict", "--run", p(&run_dir), "--out", p(&tmp.path().join("p1"))]);
    assert_eq!(code(&o), 1);

    // cut mid-row
    fs::write(&path, &text[..text.len() - 7]).unwrap();
    assert_eq!(code(&run(&["predict", "--run", p(&run_dir), "--out", p(&tmp.path().join("p2"))])), 1);

    fs::remove_file(&path).unwrap();
    assert_eq!(code(&run(&["diagnose", "--run", p(&run_dir), "--out", p(&tmp.path().join("d"))])), 1);
}

#[test]
fn four_chains_four_files() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(&tmp.path().join("s"), "5");
    let run_dir = tmp.path().join("run");
    short_infer(&data, &run_dir, &["--chains", "4"]);
    let mut files = Vec::new();
    for k in 0..4 {
        let f = fs::read_to_string(run_dir.join(format!("draws_chain{k}.csv"))).unwrap();
        assert_eq!(f.lines().count(), 1001);
        files.push(f);
    }
    for a in 0..4 {
        for b in a + 1..4 {
            assert_ne!(files[a], files[b]);
        }
    }
    let m: toml::Table = fs::read_to_string(run_dir.join("manifest.toml")).unwrap().parse().unwrap();
    let seeds: Vec<i64> = m["results"]["chains"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["seed"].as_integer().unwrap())
        .collect();
    assert_eq!(seeds.len(), 4);
    ok(&["predict", "--run", p(&run_dir), "--out", p(&tmp.path().join("pred"))]);
}

#[test]
fn lognormal_body_same_predict_schema() {
    let tmp = TempDir::new().unwrap();
    let data = simulate(&tmp.path().join("s"), "6");
    let pl = tmp.path().join("pl");
    let ln = tmp.path().join("ln");
    short_infer(&data, &pl, &[]);
    short_infer(&data, &ln, &["--body", "log-normal"]);
    let header = |d: &Path| fs::read_to_string(d.join("draws_chain0.csv")).unwrap().lines().next().unwrap().to_string();
    assert!(header(&ln).contains("meanlog_N") && header(&ln).contains("sdlog_N"));

    let (a, b) = (tmp.path().join("pa"), tmp.path().join("pb"));
    ok(&["predict", "--run", p(&pl), "--out", p(&a)]);
    ok(&["predict", "--run", p(&ln), "--out", p(&b)]);
    for f in ["predictions.csv", "predictive_summary.csv", "thresholds.csv"] {
        let first = |d: &Path| fs::read_to_string(d.join(f)).unwrap().lines().next().unwrap().to_string();
        assert_eq!(first(&a), first(&b), "{f}");
    }
}

#[test]
fn oversized_seed_is_a_usage_error() {
    let tmp = TempDir::new().unwrap();
    let o = run(&["simulate", "--out", p(&tmp.path().join("x")), "--seed", "18446744073709551615"]);
    assert_eq!(code(&o), 2);
}
