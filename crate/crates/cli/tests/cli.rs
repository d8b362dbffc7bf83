//! End-to-end checks of the `celltraffic` binary: exit codes, artifact
//! layout of every command, config-file layering, and byte-level
//! reproducibility of re-runs.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn celltraffic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_celltraffic"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn run_ok(args: &[&str]) -> String {
    let out = celltraffic(args);
    assert!(
        out.status.success(),
        "command {:?} failed:\n{}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).expect("stdout should be utf-8")
}

fn exit_code(args: &[&str]) -> i32 {
    celltraffic(args).status.code().expect("no exit code")
}

/// Map of file name to content for every regular file in a directory.
fn dir_bytes(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut out = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("readable dir") {
        let entry = entry.expect("dir entry");
        if entry.file_type().expect("file type").is_file() {
            out.insert(
                entry.file_name().to_string_lossy().into_owned(),
                fs::read(entry.path()).expect("readable file"),
            );
        }
    }
    out
}

fn path_str(path: &Path) -> &str {
    path.to_str().expect("utf-8 path")
}

#[test]
fn usage_and_bad_invocations_exit_2() {
    assert_eq!(exit_code(&[]), 2);
    assert_eq!(exit_code(&["no_such_command"]), 2);
    assert_eq!(exit_code(&["graph", "--no_such_key", "1", "--out_dir", "/tmp/x"]), 2);
    assert_eq!(exit_code(&["graph", "--out_dir"]), 2); // missing value
    assert_eq!(exit_code(&["ingest", "--fixture", "no_such_fixture", "--out_dir", "/tmp/x"]), 2);
    assert_eq!(exit_code(&["help"]), 0);
}

#[test]
fn pipeline_commands_produce_expected_artifacts() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let data = tmp.path().join("data");
    let graph = tmp.path().join("graph");

    let out = run_ok(&["ingest", "--fixture", "tiny_6", "--out_dir", path_str(&data)]);
    assert!(out.contains("12 snapshots x 6 cells"), "unexpected: {out}");
    assert!(data.join("manifest.json").is_file());
    assert!(data.join("coords.csv").is_file());
    assert!(data.join("run_config.txt").is_file());

    run_ok(&["graph", "--data_dir", path_str(&data), "--out_dir", path_str(&graph)]);
    assert!(graph.join("nodes.csv").is_file());
    assert!(graph.join("edges.csv").is_file());
    let recorded = fs::read_to_string(graph.join("run_config.txt")).expect("run config");
    assert!(
        recorded.lines().any(|l| l.starts_with("edge_radius_m = ")),
        "derived radius should be documented: {recorded}"
    );

    let emb = tmp.path().join("emb");
    run_ok(&["embed", "--graph_dir", path_str(&graph), "--out_dir", path_str(&emb)]);
    assert!(emb.join("embedding.csv").is_file());
    assert!(emb.join("eigenvalues.csv").is_file());
    let svg = fs::read_to_string(emb.join("embedding.svg")).expect("svg");
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    assert_eq!(svg.matches("<circle").count(), 6, "one marker per cell");

    let cls = tmp.path().join("cls");
    run_ok(&[
        "classify",
        "--data_dir", path_str(&data),
        "--graph_dir", path_str(&graph),
        "--label_channel", "1",
        "--epochs", "20",
        "--out_dir", path_str(&cls),
    ]);
    let preds = fs::read_to_string(cls.join("predictions.csv")).expect("predictions");
    assert_eq!(preds.lines().count(), 7, "header plus one row per cell");
    let history = fs::read_to_string(cls.join("history.csv")).expect("history");
    assert!(history.starts_with("epoch,loss,train_accuracy,holdout_accuracy"));
    assert_eq!(history.lines().count(), 21);
    assert!(cls.join("model.ckpt").is_file());
    assert!(cls.join("training.svg").is_file());

    let fc = tmp.path().join("fc");
    run_ok(&[
        "forecast",
        "--data_dir", path_str(&data),
        "--graph_dir", path_str(&graph),
        "--target_channel", "1",
        "--memory", "3",
        "--horizon", "1",
        "--epochs", "4",
        "--train_fraction", "0.7",
        "--out_dir", path_str(&fc),
    ]);
    let metrics = fs::read_to_string(fc.join("metrics.csv")).expect("metrics");
    assert!(metrics.starts_with("rmse,mae,n_windows"));
    assert_eq!(metrics.lines().count(), 2);
    assert!(fc.join("model.ckpt").is_file());
    assert!(fc.join("loss.svg").is_file());
    let recorded = fs::read_to_string(fc.join("run_config.txt")).expect("run config");
    assert!(recorded.contains("kernel_len_effective = 2"), "kernel clamp for m=3: {recorded}");

    let sw = tmp.path().join("sw");
    run_ok(&[
        "sweep",
        "--data_dir", path_str(&data),
        "--graph_dir", path_str(&graph),
        "--target_channel", "1",
        "--horizon", "1",
        "--epochs", "3",
        "--train_fraction", "0.7",
        "--sweep_kind", "memory",
        "--values", "1,2",
        "--out_dir", path_str(&sw),
    ]);
    let table = fs::read_to_string(sw.join("sweep.csv")).expect("sweep table");
    assert!(table.starts_with("memory,rmse,mae,sec_per_epoch"));
    assert_eq!(table.lines().count(), 3);
    assert!(sw.join("history_memory_1.csv").is_file());
    assert!(sw.join("history_memory_2.csv").is_file());
    assert!(sw.join("sweep.svg").is_file());
}

#[test]
fn gaussian_graph_and_gcn_embedding_work() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let data = tmp.path().join("data");
    let graph = tmp.path().join("graph");
    let emb = tmp.path().join("emb");

    run_ok(&["ingest", "--fixture", "tiny_6", "--out_dir", path_str(&data)]);
    run_ok(&[
        "graph",
        "--data_dir", path_str(&data),
        "--graph_kind", "gaussian",
        "--weight_floor", "0.1",
        "--out_dir", path_str(&graph),
    ]);
    let recorded = fs::read_to_string(graph.join("run_config.txt")).expect("run config");
    assert!(recorded.lines().any(|l| l.starts_with("sigma_m = ")));
    let edges = fs::read_to_string(graph.join("edges.csv")).expect("edges");
    for line in edges.lines().skip(1) {
        let w: f64 = line.split(',').nth(2).expect("weight field").parse().expect("number");
        assert!(w > 0.1 && w < 1.0, "kernel weight {w} outside (floor, 1)");
    }

    run_ok(&[
        "embed",
        "--data_dir", path_str(&data),
        "--graph_dir", path_str(&graph),
        "--method", "gcn_method2",
        "--out_dir", path_str(&emb),
    ]);
    assert!(emb.join("embedding.csv").is_file());
    assert!(!emb.join("eigenvalues.csv").exists(), "spectrum is spectral-only");
}

#[test]
fn raw_tsv_ingestion_builds_contiguous_snapshots() {
    let tmp = tempfile::tempdir().expect("tempdir");
    // two cells, three 10-minute intervals, with a gap at the middle
    // interval for cell 2 that must come back as a zero row
    let raw = tmp.path().join("activity.tsv");
    fs::write(
        &raw,
        "1\t0\t39\t0.5\t0.25\t1\t2\t3\n\
         2\t0\t39\t1\t1\t1\t1\t1\n\
         1\t600000\t39\t\t\t\t\t2.5\n\
         1\t1200000\t39\t1\t1\t1\t1\t1\n\
         2\t1200000\t39\t2\t2\t2\t2\t2\n",
    )
    .expect("write raw");
    let geometry = tmp.path().join("grid.csv");
    fs::write(&geometry, "cell_id,lon,lat\n1,9.10,45.45\n2,9.12,45.47\n").expect("write grid");

    let data = tmp.path().join("data");
    let out = run_ok(&[
        "ingest",
        "--raw", path_str(&raw),
        "--geometry", path_str(&geometry),
        "--out_dir", path_str(&data),
    ]);
    assert!(out.contains("3 snapshots x 2 cells x 5 channels"), "unexpected: {out}");
    for ts in ["0", "600000", "1200000"] {
        assert!(data.join(format!("{ts}.bin")).is_file(), "missing snapshot {ts}");
    }
}

#[test]
fn config_file_layers_under_command_line() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let data = tmp.path().join("data");
    run_ok(&["ingest", "--fixture", "tiny_6", "--out_dir", path_str(&data)]);

    let config = tmp.path().join("run.conf");
    fs::write(
        &config,
        format!(
            "# shared settings\ndata_dir = {}\ngraph_kind = gaussian\nweight_floor = 0.2\n",
            path_str(&data)
        ),
    )
    .expect("write config");

    let graph = tmp.path().join("graph");
    run_ok(&[
        "graph",
        "--config", path_str(&config),
        "--weight_floor", "0.3",
        "--out_dir", path_str(&graph),
    ]);
    let recorded = fs::read_to_string(graph.join("run_config.txt")).expect("run config");
    assert!(recorded.contains("graph_kind = gaussian"), "file value applies: {recorded}");
    assert!(recorded.contains("weight_floor = 0.3"), "command line wins: {recorded}");

    // a config key the command does not know is still rejected
    fs::write(&config, "no_such_key = 1\n").expect("rewrite config");
    assert_eq!(exit_code(&["graph", "--config", path_str(&config), "--out_dir", "/tmp/x"]), 2);
}

#[test]
fn reruns_reproduce_artifacts_byte_for_byte() {
    let tmp = tempfile::tempdir().expect("tempdir");
    let data = tmp.path().join("data");
    let graph = tmp.path().join("graph");
    let cls = tmp.path().join("cls");

    let pipeline = |_: ()| {
        run_ok(&["ingest", "--fixture", "tiny_6", "--out_dir", path_str(&data)]);
        run_ok(&["graph", "--data_dir", path_str(&data), "--out_dir", path_str(&graph)]);
        run_ok(&[
            "classify",
            "--data_dir", path_str(&data),
            "--graph_dir", path_str(&graph),
            "--label_channel", "1",
            "--epochs", "10",
            "--out_dir", path_str(&cls),
        ]);
    };

    pipeline(());
    let first: Vec<BTreeMap<String, Vec<u8>>> =
        [&data, &graph, &cls].iter().map(|d| dir_bytes(d)).collect();
    pipeline(());
    let second: Vec<BTreeMap<String, Vec<u8>>> =
        [&data, &graph, &cls].iter().map(|d| dir_bytes(d)).collect();
    assert_eq!(first, second, "identical settings must reproduce identical bytes");
}
