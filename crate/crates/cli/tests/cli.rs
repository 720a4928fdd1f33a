use std::path::Path;
use std::process::{Command, Output};

fn wearsim(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wearsim"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn read(p: &Path) -> Vec<u8> {
    std::fs::read(p).unwrap_or_else(|e| panic!("{}: {e}", p.display()))
}

#[test]
fn table1_prints_the_grid() {
    let dir = tempfile::tempdir().unwrap();
    let out = wearsim(&["table1"], dir.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("74.07 days"));
    assert!(text.contains("118.52 days"));
    let csv = wearsim(&["table1", "--csv"], dir.path());
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().count(), 25);
}

#[test]
fn repeated_runs_write_identical_reports_and_traces() {
    let dir = tempfile::tempdir().unwrap();
    let args = |out: &'static str| {
        vec![
            "run", "--scenario", "write-array", "--nodes", "8", "--seed", "1", "--total-ops", "150", "--warmup-ops",
            "15", "--out", out, "--trace",
        ]
    };
    assert!(wearsim(&args("a"), dir.path()).status.success());
    assert!(wearsim(&args("b"), dir.path()).status.success());
    for f in ["summary.json", "wear_timeseries.csv", "messages.csv", "initial_capacity.csv", "trace.csv"] {
        assert_eq!(read(&dir.path().join("a").join(f)), read(&dir.path().join("b").join(f)), "{f}");
    }
}

#[test]
fn config_errors_exit_one_with_a_line_number() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "seed = 3\n\n[workload]\ntotal_opps = 10\n").unwrap();
    let out = wearsim(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("bad.toml:4"), "{err}");

    let missing = wearsim(&["run", "--topology", "nope.toml"], dir.path());
    assert_eq!(missing.status.code(), Some(1));
    let zero = wearsim(&["run", "--nodes", "4", "--grant-total", "0"], dir.path());
    assert_eq!(zero.status.code(), Some(1));
}

#[test]
fn flags_override_file_values() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("c.toml"),
        "nodes = 6\nseed = 5\n[workload]\ntotal_ops = 500\nwarmup_ops = 10\n",
    )
    .unwrap();
    let out = wearsim(
        &["run", "--config", "c.toml", "--total-ops", "40", "--delayed-invalidations", "off", "--out", "o"],
        dir.path(),
    );
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let summary: serde_json::Value = serde_json::from_slice(&read(&dir.path().join("o/summary.json"))).unwrap();
    assert_eq!(summary["config"]["run"]["workload"]["total_ops"], 40);
    assert_eq!(summary["config"]["run"]["seed"], 5);
    assert_eq!(summary["config"]["run"]["protocol"]["delayed_invalidations"], false);
    assert_eq!(summary["stats"]["ops_completed"], 40);
}

#[test]
fn gen_topology_feeds_run_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(wearsim(&["gen-topology", "lopsided4", "--out", "lop.toml"], p).status.success());
    assert!(wearsim(&["gen-topology", "linear", "--nodes", "12", "--out", "lin.toml"], p).status.success());
    let lin = std::fs::read_to_string(p.join("lin.toml")).unwrap();
    assert_eq!(lin.matches("\"storage\"").count(), 12);

    let common = "topology = \"lop.toml\"\nseed = 2\n[workload]\ntotal_ops = 300\nwarmup_ops = 30\n";
    std::fs::write(p.join("base.toml"), format!("scenario = \"hdfs-baseline\"\n{common}")).unwrap();
    std::fs::write(p.join("wa.toml"), format!("scenario = \"write-array\"\n{common}")).unwrap();
    let out = wearsim(&["compare", "base.toml", "wa.toml"], p);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let cmp: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(cmp["ratios"]["wear_stddev"].as_f64().unwrap() > 3.0, "{cmp}");

    let same = wearsim(&["compare", "wa.toml", "wa.toml"], p);
    let cmp: serde_json::Value = serde_json::from_slice(&same.stdout).unwrap();
    for key in ["wear_stddev", "invalidation_related_messages", "total_messages", "block_writes"] {
        assert_eq!(cmp["ratios"][key], 1.0, "{key}");
    }
    assert!(cmp["ratios"]["messages"].as_object().unwrap().values().all(|v| v == 1.0));

    std::fs::write(p.join("other.toml"), format!("scenario = \"write-array\"\n{}", common.replace("seed = 2", "seed = 3"))).unwrap();
    let refused = wearsim(&["compare", "wa.toml", "other.toml"], p);
    assert_eq!(refused.status.code(), Some(1));
}

#[test]
fn delayed_on_versus_off_orders_invalidation_counts() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let common = "nodes = 8\nseed = 4\n[workload]\ntotal_ops = 400\nwarmup_ops = 40\n";
    std::fs::write(p.join("on.toml"), common).unwrap();
    std::fs::write(p.join("off.toml"), format!("{common}[protocol]\ndelayed_invalidations = false\n")).unwrap();
    let out = wearsim(&["compare", "on.toml", "off.toml", "--out", "cmp.json"], p);
    assert!(out.status.success());
    let cmp: serde_json::Value = serde_json::from_slice(&read(&p.join("cmp.json"))).unwrap();
    assert!(cmp["ratios"]["invalidation_related_messages"].as_f64().unwrap() < 1.0);
}

#[test]
fn exported_ops_replay_to_the_same_report() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let base = ["--nodes", "6", "--seed", "9", "--total-ops", "80", "--warmup-ops", "8"];
    let mut export = vec!["run", "--export-ops", "ops.csv"];
    export.extend(base);
    assert!(wearsim(&export, p).status.success());
    let mut direct = vec!["run", "--out", "direct"];
    direct.extend(base);
    assert!(wearsim(&direct, p).status.success());
    std::fs::write(p.join("replay.toml"), "nodes = 6\nseed = 9\n[workload]\ntotal_ops = 80\nwarmup_ops = 8\nreplay = \"ops.csv\"\n").unwrap();
    assert!(wearsim(&["run", "--config", "replay.toml", "--out", "replayed"], p).status.success());
    let a: serde_json::Value = serde_json::from_slice(&read(&p.join("direct/summary.json"))).unwrap();
    let b: serde_json::Value = serde_json::from_slice(&read(&p.join("replayed/summary.json"))).unwrap();
    assert_eq!(a["final_snapshot"], b["final_snapshot"]);
    assert_eq!(a["messages"], b["messages"]);
}

#[test]
fn worn_out_cluster_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    assert!(wearsim(
        &["gen-topology", "mixed", "--nodes", "2", "--capacity", "64", "--cycles", "1", "--low-cycles", "1", "--out", "t.toml"],
        p
    )
    .status
    .success());
    let out = wearsim(&["run", "--topology", "t.toml", "--total-ops", "3000", "--out", "o"], p);
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8(out.stderr).unwrap().contains("wore out"));
    let summary: serde_json::Value = serde_json::from_slice(&read(&p.join("o/summary.json"))).unwrap();
    assert_eq!(summary["cluster_worn_out"], true);
}
