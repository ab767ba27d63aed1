use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

const GAME: &str = "{ family = \"coverage\", covers = [[0, 1], [1, 2], [2, 3], [0, 3]], universe = 4 }";
const DIST: &str = "{ kind = \"uniform\", n = 4 }";

fn statcost(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_statcost"))
        .args(args)
        .env_remove("STATCOST_WORKERS")
        .output()
        .unwrap()
}

fn records(out: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&out.stdout)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("{l}: {e}")))
        .collect()
}

fn generate(dir: &Path, m: &str) -> String {
    let path = dir.join(format!("ds-{m}.txt")).display().to_string();
    let out = statcost(&["generate", "--game", GAME, "--dist", DIST, "-m", m, "--seed", "7", "-o", &path]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    path
}

#[test]
fn generate_then_estimate() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate(dir.path(), "20000");
    let text = std::fs::read_to_string(&ds).unwrap();
    assert!(text.starts_with("statcost-ds/1 {"));
    assert_eq!(text.lines().count(), 20001);

    let out = statcost(&["estimate", "--method", "marginal", "--in", &ds, "--all"]);
    assert_eq!(out.status.code(), Some(0));
    let recs = records(&out);
    assert_eq!(recs.len(), 4);
    for (i, r) in recs.iter().enumerate() {
        assert_eq!(r["i"], i);
        assert_eq!(r["m"], 20000);
        assert_eq!(r["method"], "marginal");
        // Each element has two owners, so every marginal is between 0 and 2.
        let v = r["estimate"].as_f64().unwrap();
        assert!((0.0..=2.0).contains(&v), "{v}");
    }

    // dd-exact reads the game and law from the dataset header.
    let out = statcost(&["estimate", "--method", "dd-exact", "--in", &ds, "--player", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let exact = records(&out)[0]["estimate"].as_f64().unwrap();
    let out = statcost(&["estimate", "--method", "dd-empirical", "--in", &ds, "--player", "2"]);
    let empirical = records(&out)[0]["estimate"].as_f64().unwrap();
    assert!((exact - empirical).abs() < 0.05, "{exact} vs {empirical}");
}

#[test]
fn missing_buckets_fail_per_player() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate(dir.path(), "3");
    let out = statcost(&["estimate", "--method", "dsh", "--in", &ds, "--all"]);
    assert_eq!(out.status.code(), Some(2));
    let recs = records(&out);
    assert_eq!(recs.len(), 4);
    assert!(recs.iter().all(|r| r["error"].is_string()));

    let out = statcost(&["estimate", "--method", "dsh", "--in", &ds, "--player", "0", "--impute-zero"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(!records(&out)[0]["diagnostics"]["imputed"].as_array().unwrap().is_empty());
}

#[test]
fn core_then_stability() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate(dir.path(), "2000");
    let alloc = dir.path().join("alloc.json").display().to_string();
    let out = statcost(&["core", "--in", &ds, "--grand-cost", "4", "-o", &alloc]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&alloc).unwrap()).unwrap();
    let total: f64 = v["shares"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).sum();
    assert!((total - 4.0).abs() < 1e-9);

    // 2000 uniform draws over 16 sets see every set, so the empirical
    // core is the core.
    let out = statcost(&["stability", "--alloc", &alloc, "--game", GAME, "--dist", DIST, "--eval", "exhaustive"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(records(&out)[0]["violation_rate"], 0.0);

    let out = statcost(&["stability", "--alloc", &alloc, "--game", GAME, "--dist", DIST, "--eval", "fresh:500:3"]);
    let r = &records(&out)[0];
    assert_eq!(r["eval_mode"]["mode"], "fresh");
    assert_eq!(r["evaluated"], 500);

    let out = statcost(&["core", "--mode", "bounded", "--in", &ds, "--grand-cost", "4"]);
    let r = &records(&out)[0];
    assert!(r["l1_norm"].as_f64().unwrap() <= r["norm_bound"].as_f64().unwrap() + 1e-8);
}

#[test]
fn oracles() {
    let out = statcost(&["oracle", "--what", "shapley", "--game", "{ family = \"additive\", weights = [1, 2, 3] }"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let values: Vec<f64> = records(&out).iter().map(|r| r["value"].as_f64().unwrap()).collect();
    assert_eq!(values, [1.0, 2.0, 3.0]);

    let out = statcost(&["oracle", "--what", "profile", "--game", GAME, "--player", "1"]);
    let r = &records(&out)[0];
    assert_eq!(r["by_size"].as_array().unwrap().len(), 4);
    assert_eq!(r["nonincreasing"], true);

    let out = statcost(&["oracle", "--what", "core", "--game", GAME]);
    assert_eq!(records(&out)[0]["status"], "nonempty");

    let out = statcost(&["oracle", "--what", "expected-marginal", "--game", GAME]);
    assert_eq!(out.status.code(), Some(1));

    let out = statcost(&["oracle", "--what", "structure", "--game", GAME]);
    let r = &records(&out)[0];
    assert_eq!(r["submodular"], true);
    assert_eq!(r["monotone"], true);
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(statcost(&["--help"]).status.code(), Some(0));
    assert_eq!(statcost(&["--version"]).status.code(), Some(0));
    assert_eq!(statcost(&["estimate", "--method", "nope"]).status.code(), Some(1));

    let out = statcost(&["oracle", "--what", "shapley", "--game", "{ family = \"additive\", wieghts = [1] }"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("wieghts"));

    let out = statcost(&["experiment", "list"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for kind in ["additive-warmup", "core-generalization", "curvature", "dsh", "dd-audit", "indistinguishability", "partition-exhibit"] {
        assert!(text.contains(kind), "{kind}");
    }
}

#[test]
fn truncated_dataset_names_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate(dir.path(), "10");
    let text = std::fs::read_to_string(&ds).unwrap();
    let cut: Vec<&str> = text.lines().take(6).collect();
    std::fs::write(&ds, cut.join("\n") + "\n").unwrap();
    let out = statcost(&["estimate", "--method", "marginal", "--in", &ds, "--all"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains(":7:"));
}

#[test]
fn experiment_reports_and_workers() {
    let dir = tempfile::tempdir().unwrap();
    let spec = dir.path().join("spec.toml");
    std::fs::write(
        &spec,
        "name = \"tiny\"\nseeds = 3\nkind = \"dsh\"\n\n[params]\n\
         game = { family = \"random-table\", n = 4, max_cost = 10, seed = 1 }\n\
         m_grid = [5, 5000]\nresample_game = true\n",
    )
    .unwrap();
    let (a, b, plot) = (dir.path().join("a.ndjson"), dir.path().join("b.ndjson"), dir.path().join("plot.tsv"));
    let run = |out: &Path, workers: &str| {
        Command::new(env!("CARGO_BIN_EXE_statcost"))
            .args(["experiment", "run", "-q", "--emit-plot-data"])
            .arg(&plot)
            .arg("-o")
            .arg(out)
            .arg(&spec)
            .env("STATCOST_WORKERS", workers)
            .output()
            .unwrap()
    };
    // m = 5 leaves size buckets empty, so those cells fail: exit 2.
    assert_eq!(run(&a, "1").status.code(), Some(2));
    assert_eq!(run(&b, "3").status.code(), Some(2));
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let text = std::fs::read_to_string(&a).unwrap();
    let first: Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["record"], "header");
    assert!(first["spec"]["base_seed"].is_u64());
    let last: Value = serde_json::from_str(text.lines().last().unwrap()).unwrap();
    assert_eq!(last["record"], "summary");
    assert!(std::fs::read_to_string(&plot).unwrap().starts_with("x\ty\tseries\n"));

    assert_eq!(run(&a, "many").status.code(), Some(1));
}
