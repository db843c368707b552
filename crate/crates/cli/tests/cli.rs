use std::path::Path;
use std::process::{Command, Output};

fn rockgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rockgraph"))
        .args(args)
        .env_remove("ROCKGRAPH_THREADS")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = rockgraph(args);
    assert!(
        out.status.success(),
        "{args:?} failed with {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn config() -> String {
    format!("{}/../../configs/quartz.toml", env!("CARGO_MANIFEST_DIR"))
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn physics_sweep_starts_at_mineral() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    ok(&["physics", "--config", &config(), "--phi-min", "0", "--phi-max", "0.3", "--steps", "31", "--out", s(&out)]);
    let rows = csv_rows(&out);
    assert_eq!(rows[0][0], "phi");
    assert_eq!(rows.len(), 32, "header plus 31 rows");
    let col = |name: &str| rows[0].iter().position(|h| h == name).unwrap();
    assert_eq!(rows[1][col("phi")].parse::<f64>().unwrap(), 0.0);
    assert_eq!(rows[1][col("k_dem")].parse::<f64>().unwrap(), 36.6);
    assert_eq!(rows[1][col("mu_dem")].parse::<f64>().unwrap(), 45.0);
    let last_k: f64 = rows[31][col("k_dem")].parse().unwrap();
    assert!(last_k > 0.0 && last_k < 36.6);
}

#[test]
fn physics_accepts_explicit_mineral_and_alpha() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sweep.csv");
    ok(&["physics", "--mineral-k", "70", "--mineral-mu", "30", "--alpha", "0.1", "--steps", "5", "--out", s(&out)]);
    assert_eq!(csv_rows(&out).len(), 6);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("a.raw");
    let graph = dir.path().join("a.json");
    for args in [
        vec!["map", "--input", s(&raw), "--overlap", "1.0", "--out", s(&graph)],
        vec!["map", "--input", s(&raw), "--n-intervals", "0", "--out", s(&graph)],
        vec!["train-gnn", "--manifest", "m.csv", "--dropout", "1.0", "--model-out", "x.json"],
        vec!["frobnicate"],
        vec!["gen", "--dims", "4,4", "--n-spheres", "1", "--out", s(&raw)],
    ] {
        assert_eq!(rockgraph(&args).status.code(), Some(2), "{args:?}");
    }
    assert_eq!(rockgraph(&["--threads", "0", "physics", "--config", &config(), "--out", "x.csv"]).status.code(), Some(2));
}

#[test]
fn validation_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.raw");
    let out = dir.path().join("g.json");
    let r = rockgraph(&["map", "--input", s(&missing), "--out", s(&out)]);
    assert_eq!(r.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&r.stderr).starts_with("error:"));
    // Minimum porosity above maximum.
    let csv = dir.path().join("p.csv");
    let r = rockgraph(&["physics", "--config", &config(), "--phi-min", "0.3", "--phi-max", "0.1", "--out", s(&csv)]);
    assert_eq!(r.status.code(), Some(1));
    // Neither a config nor explicit moduli.
    let r = rockgraph(&["physics", "--out", s(&csv)]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn gen_map_metrics_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let raw = dir.path().join("rock.raw");
    let graph = dir.path().join("rock.json");
    let metrics = dir.path().join("metrics.csv");
    ok(&["gen", "--dims", "24,24,24", "--n-spheres", "40", "--radius-min", "2", "--radius-max", "4", "--seed", "3", "--out", s(&raw)]);
    assert!(dir.path().join("rock.raw.hdr").exists());
    let stdout = ok(&["map", "--input", s(&raw), "--n-intervals", "6", "--overlap", "0.3", "--filter", "z", "--out", s(&graph)]);
    assert!(stdout.contains("nodes"));
    ok(&["metrics", "--graphs", s(&graph), "--out", s(&metrics)]);
    let rows = csv_rows(&metrics);
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].len(), 13);
    assert_eq!(rows[1][0], "rock");
}

#[test]
fn threads_flag_and_env_are_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    ok(&["--threads", "2", "physics", "--config", &config(), "--steps", "3", "--out", s(&out)]);
    let r = Command::new(env!("CARGO_BIN_EXE_rockgraph"))
        .args(["physics", "--config", &config(), "--steps", "3", "--out", s(&out)])
        .env("ROCKGRAPH_THREADS", "1")
        .output()
        .unwrap();
    assert!(r.status.success());
}

#[test]
fn small_pipeline_trains_predicts_and_evaluates() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let manifest = corpus.join("manifest.csv");
    ok(&[
        "corpus", "--config", &config(), "--n-samples", "40", "--sizes", "16,20", "--radius-min", "2", "--radius-max", "4",
        "--n-intervals", "4", "--seed", "5", "--out", s(&corpus),
    ]);
    assert_eq!(csv_rows(&manifest).len(), 41);

    let rf = dir.path().join("rf.json");
    let imp = dir.path().join("imp.csv");
    let split = dir.path().join("split.txt");
    ok(&[
        "train-rf", "--manifest", s(&manifest), "--split-seed", "2", "--n-trees", "10", "--model-out", s(&rf),
        "--importance-out", s(&imp), "--split-out", s(&split),
    ]);
    let imp_rows = csv_rows(&imp);
    assert_eq!(imp_rows.len(), 13);
    assert!(std::fs::read_to_string(&split).unwrap().contains("test"));

    let gnn = dir.path().join("gnn.json");
    let hist = dir.path().join("hist.csv");
    ok(&[
        "train-gnn", "--manifest", s(&manifest), "--split-seed", "2", "--epochs", "3", "--batch-size", "8",
        "--model-out", s(&gnn), "--history-out", s(&hist),
    ]);
    let h = csv_rows(&hist);
    assert_eq!(h[0], ["epoch", "train_mse", "val_mse"]);
    assert_eq!(h.len(), 4);

    for model in [&rf, &gnn] {
        let parity = dir.path().join("parity.csv");
        let stdout = ok(&["eval", "--model", s(model), "--manifest", s(&manifest), "--parity-out", s(&parity)]);
        assert!(stdout.contains("test (4 samples): R2_K="), "{stdout}");
        assert_eq!(csv_rows(&parity).len(), 5);

        let preds = dir.path().join("pred.csv");
        let g0 = corpus.join("s0000_w16.json");
        let g1 = corpus.join("s0001_w20.json");
        ok(&["predict", "--model", s(model), "--graphs", s(&g0), s(&g1), "--out", s(&preds)]);
        let rows = csv_rows(&preds);
        assert_eq!(rows[0], ["id", "k_gpa", "mu_gpa"]);
        assert_eq!(rows[1][0], "s0000_w16");
        assert!(rows[1..].iter().all(|r| r[1].parse::<f64>().unwrap() >= 0.0));
    }

    // A graph file is not a model.
    let r = rockgraph(&["predict", "--model", s(&corpus.join("s0000_w16.json")), "--graphs", s(&rf), "--out", "x.csv"]);
    assert_eq!(r.status.code(), Some(1));
}

#[test]
fn corpus_and_training_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let run = |tag: &str| {
        let c = dir.path().join(format!("c{tag}"));
        ok(&[
            "corpus", "--config", &config(), "--n-samples", "20", "--sizes", "16", "--radius-min", "2", "--radius-max",
            "4", "--n-intervals", "4", "--seed", "9", "--out", s(&c),
        ]);
        let m = dir.path().join(format!("rf{tag}.json"));
        ok(&["train-rf", "--manifest", s(&c.join("manifest.csv")), "--n-trees", "5", "--model-out", s(&m)]);
        (std::fs::read(c.join("s0003_w16.json")).unwrap(), std::fs::read(m).unwrap())
    };
    assert_eq!(run("a"), run("b"));
}
