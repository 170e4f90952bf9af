//! End-to-end tests of the `baire` binary: pipelines over real files in
//! temporary directories, JSON outputs, and the exit-code contract
//! (0 success, 1 usage, 2 data, 3 internal).

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn baire(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_baire"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn assert_success(output: &Output) {
    assert!(
        output.status.success(),
        "command failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
}

fn exit_code(output: &Output) -> i32 {
    output.status.code().expect("no signal")
}

fn stdout_json(output: &Output) -> serde_json::Value {
    assert_success(output);
    serde_json::from_slice(&output.stdout).expect("stdout is one JSON value")
}

/// Builds the §3.1-style worked example: values 0.478, 0.472, 0.900 at
/// precision 3, ids 0, 1, 2.
fn build_worked_example(dir: &Path) {
    fs::write(dir.join("data.csv"), "0.478\n0.472\n0.900\n").unwrap();
    let output = baire(
        dir,
        &["build", "--input", "data.csv", "--precision", "3", "--index", "idx.madic", "--spec", "idx.proj"],
    );
    let summary = stdout_json(&output);
    assert_eq!(summary["count"], 3);
    assert_eq!(summary["bins_per_level"][0], 2);
}

#[test]
fn build_is_byte_deterministic() {
    let a = TempDir::new().unwrap();
    let b = TempDir::new().unwrap();
    build_worked_example(a.path());
    build_worked_example(b.path());
    assert_eq!(
        fs::read(a.path().join("idx.madic")).unwrap(),
        fs::read(b.path().join("idx.madic")).unwrap()
    );
    assert_eq!(
        fs::read(a.path().join("idx.proj")).unwrap(),
        fs::read(b.path().join("idx.proj")).unwrap()
    );
    // Unit-interval data encodes at face value.
    let index_text = fs::read_to_string(a.path().join("idx.madic")).unwrap();
    assert!(index_text.contains("0\t478") && index_text.contains("2\t900"));
}

#[test]
fn dist_reports_the_worked_example_pair() {
    let dir = TempDir::new().unwrap();
    build_worked_example(dir.path());
    let output = baire(
        dir.path(),
        &["query", "--index", "idx.madic", "dist", "--id", "0", "--id", "1"],
    );
    assert_success(&output);
    assert_eq!(
        String::from_utf8_lossy(&output.stdout).trim(),
        r#"{"distance":0.01,"lcp":2}"#
    );

    let one_id = baire(
        dir.path(),
        &["query", "--index", "idx.madic", "dist", "--id", "0"],
    );
    assert_eq!(exit_code(&one_id), 1);
}

#[test]
fn nn_prefers_the_first_inserted_at_ties() {
    let dir = TempDir::new().unwrap();
    build_worked_example(dir.path());
    let output = baire(
        dir.path(),
        &["query", "--index", "idx.madic", "nn", "--id", "2"],
    );
    let result = stdout_json(&output);
    assert_eq!(result["neighbor"], "0");
    assert_eq!(result["distance"], 1.0);
    assert_eq!(result["lcp"], 0);
    // Probe bound: precision + 1.
    assert!(result["bin_probes"].as_u64().unwrap() <= 4);
}

#[test]
fn bins_match_hand_enumeration_and_level_zero_is_usage() {
    let dir = TempDir::new().unwrap();
    build_worked_example(dir.path());
    let output = baire(
        dir.path(),
        &["query", "--index", "idx.madic", "bins", "--level", "1"],
    );
    let result = stdout_json(&output);
    assert_eq!(result["bins"][0]["prefix"], "4");
    assert_eq!(result["bins"][0]["members"], serde_json::json!(["0", "1"]));
    assert_eq!(result["bins"][1]["prefix"], "9");
    assert_eq!(result["bins"][1]["density"], 1);

    for bad_level in ["0", "4"] {
        let output = baire(
            dir.path(),
            &["query", "--index", "idx.madic", "bins", "--level", bad_level],
        );
        assert_eq!(exit_code(&output), 1, "level {bad_level}");
    }
}

#[test]
fn external_values_run_through_the_saved_spec() {
    let dir = TempDir::new().unwrap();
    build_worked_example(dir.path());
    let output = baire(
        dir.path(),
        &["query", "--index", "idx.madic", "--spec", "idx.proj", "nn", "--value", "0.479"],
    );
    let result = stdout_json(&output);
    assert_eq!(result["neighbor"], "0");
    assert_eq!(result["distance"], 0.01);

    // Extrapolation clamps with a note instead of failing.
    let clamped = baire(
        dir.path(),
        &["query", "--index", "idx.madic", "--spec", "idx.proj", "nn", "--value", "7.5"],
    );
    assert_success(&clamped);
    assert!(String::from_utf8_lossy(&clamped.stderr).contains("clamped"));

    let no_spec = baire(
        dir.path(),
        &["query", "--index", "idx.madic", "nn", "--value", "0.479"],
    );
    assert_eq!(exit_code(&no_spec), 1);

    let no_selector = baire(dir.path(), &["query", "--index", "idx.madic", "nn"]);
    assert_eq!(exit_code(&no_selector), 1);
}

#[test]
fn stats_reports_the_scan_counter() {
    let dir = TempDir::new().unwrap();
    build_worked_example(dir.path());
    let output = baire(dir.path(), &["query", "--index", "idx.madic", "stats"]);
    let result = stdout_json(&output);
    assert_eq!(result["count"], 3);
    assert_eq!(result["records_scanned"], 3);
    assert_eq!(result["precision"], 3);
    assert_eq!(result["depth_stats"]["max_depth"], 3);
}

/// Nine values in bins 34 (5 members) and 35 (4), three in 90.
fn grid_scenario_csv() -> String {
    let mut text = String::new();
    for v in ["0.341", "0.342", "0.343", "0.344", "0.345"] {
        text.push_str(v);
        text.push('\n');
    }
    for v in ["0.351", "0.352", "0.353", "0.354"] {
        text.push_str(v);
        text.push('\n');
    }
    for v in ["0.901", "0.902", "0.903"] {
        text.push_str(v);
        text.push('\n');
    }
    text
}

#[test]
fn cluster_merges_neighbor_bins_and_writes_labelings() {
    let dir = TempDir::new().unwrap();
    fs::write(dir.path().join("grid.csv"), grid_scenario_csv()).unwrap();
    let build = baire(
        dir.path(),
        &["build", "--input", "grid.csv", "--precision", "3", "--index", "g.madic", "--spec", "g.proj"],
    );
    assert_success(&build);

    let cluster_args = [
        "cluster", "--index", "g.madic", "--level", "2", "--min-density", "3",
        "--labels-json", "g.json", "--labels-tsv", "g.tsv",
    ];
    let output = baire(dir.path(), &cluster_args);
    let summary = stdout_json(&output);
    assert_eq!(summary["clusters"], 2);
    assert_eq!(summary["noise"], 0);

    // Rows 0–8 share the 34∪35 cluster; rows 9–11 form the 90 cluster.
    let tsv = fs::read_to_string(dir.path().join("g.tsv")).unwrap();
    let mut labels: Vec<(&str, &str)> = tsv
        .lines()
        .map(|l| l.split_once('\t').expect("two columns"))
        .collect();
    labels.sort_by_key(|(id, _)| id.parse::<u32>().unwrap());
    let rendered: Vec<&str> = labels.iter().map(|&(_, c)| c).collect();
    assert_eq!(rendered, ["0"; 9].iter().chain(["1"; 3].iter()).copied().collect::<Vec<_>>());

    let labeling: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("g.json")).unwrap()).unwrap();
    assert_eq!(labeling["cluster_count"], 2);
    assert_eq!(labeling["level"], 2);
    assert_eq!(labeling["labels"]["0"], 0);

    // Re-running produces byte-identical labelings.
    let json_bytes = fs::read(dir.path().join("g.json")).unwrap();
    let tsv_bytes = fs::read(dir.path().join("g.tsv")).unwrap();
    assert_success(&baire(dir.path(), &cluster_args));
    assert_eq!(fs::read(dir.path().join("g.json")).unwrap(), json_bytes);
    assert_eq!(fs::read(dir.path().join("g.tsv")).unwrap(), tsv_bytes);

    // A threshold above every density clusters nothing.
    let all_noise = baire(
        dir.path(),
        &["cluster", "--index", "g.madic", "--level", "2", "--min-density", "99"],
    );
    let summary = stdout_json(&all_noise);
    assert_eq!(summary["clusters"], 0);
    assert_eq!(summary["noise"], 12);

    let zero_density = baire(
        dir.path(),
        &["cluster", "--index", "g.madic", "--level", "2", "--min-density", "0"],
    );
    assert_eq!(exit_code(&zero_density), 1);
}

#[test]
fn compare_scores_grid_labels_against_kmeans() {
    let dir = TempDir::new().unwrap();
    // Two tight 1-D blobs: separated in the first digit, trivial for k-means.
    let mut csv = String::new();
    for v in [0.11, 0.12, 0.13, 0.14, 0.15, 0.81, 0.82, 0.83, 0.84, 0.85] {
        csv.push_str(&format!("{v}\n"));
    }
    fs::write(dir.path().join("blobs.csv"), csv).unwrap();
    assert_success(&baire(
        dir.path(),
        &["build", "--input", "blobs.csv", "--precision", "3", "--index", "b.madic", "--spec", "b.proj"],
    ));

    let output = baire(
        dir.path(),
        &[
            "compare", "--index", "b.madic", "--input", "blobs.csv",
            "--level", "1", "--min-density", "1", "--k", "2",
        ],
    );
    let score = stdout_json(&output);
    assert_eq!(score["rand_index"], 1.0);
    assert_eq!(
        score["agree_same"].as_u64().unwrap() + score["agree_diff"].as_u64().unwrap(),
        45
    );

    let bad_k = baire(
        dir.path(),
        &[
            "compare", "--index", "b.madic", "--input", "blobs.csv",
            "--level", "1", "--min-density", "1", "--k", "11",
        ],
    );
    assert_eq!(exit_code(&bad_k), 1);
}

#[test]
fn bench_reports_one_read_per_record() {
    let dir = TempDir::new().unwrap();
    let output = baire(dir.path(), &["bench", "--sizes", "100,200", "--precision", "4"]);
    let rows = stdout_json(&output);
    assert_eq!(rows[0]["n"], 100);
    assert_eq!(rows[0]["reads"], 100);
    assert_eq!(rows[1]["reads"], 200);
    assert!(String::from_utf8_lossy(&output.stderr).contains("seconds"));

    let unsorted = baire(dir.path(), &["bench", "--sizes", "200,100"]);
    assert_eq!(exit_code(&unsorted), 1);
}

#[test]
fn truncate_rebuilds_at_lower_precision() {
    let dir = TempDir::new().unwrap();
    build_worked_example(dir.path());
    let output = baire(
        dir.path(),
        &["truncate", "--index", "idx.madic", "--precision", "2", "--output", "t.madic"],
    );
    let summary = stdout_json(&output);
    assert_eq!(summary["precision"], 2);
    let text = fs::read_to_string(dir.path().join("t.madic")).unwrap();
    assert!(text.starts_with("MADIC1 10 2 3"));
    assert!(text.contains("0\t47") && text.contains("1\t47") && text.contains("2\t90"));

    // 478 and 472 collapse into the same 2-digit code: distance floors at
    // base^-precision instead of decreasing.
    let dist = baire(
        dir.path(),
        &["query", "--index", "t.madic", "dist", "--id", "0", "--id", "1"],
    );
    assert_eq!(
        String::from_utf8_lossy(&dist.stdout).trim(),
        r#"{"distance":0.01,"lcp":2}"#
    );

    let too_deep = baire(
        dir.path(),
        &["truncate", "--index", "idx.madic", "--precision", "5", "--output", "x.madic"],
    );
    assert_eq!(exit_code(&too_deep), 1);
}

#[test]
fn named_columns_resolve_through_the_header() {
    let dir = TempDir::new().unwrap();
    fs::write(
        dir.path().join("named.csv"),
        "name,x,y\nalpha,0.2,0.4\nbeta,0.6,0.8\ngamma,0.3,0.1\n",
    )
    .unwrap();
    let output = baire(
        dir.path(),
        &[
            "build", "--input", "named.csv", "--id-col", "name", "--value-cols", "x,y",
            "--precision", "3", "--index", "n.madic", "--spec", "n.proj",
        ],
    );
    let summary = stdout_json(&output);
    assert_eq!(summary["count"], 3);
    assert_eq!(summary["dim"], 2);
    let text = fs::read_to_string(dir.path().join("n.madic")).unwrap();
    assert!(text.contains("alpha\t") && text.contains("gamma\t"));
}

#[test]
fn data_errors_exit_2() {
    let dir = TempDir::new().unwrap();

    fs::write(dir.path().join("empty.csv"), "").unwrap();
    let empty = baire(dir.path(), &["build", "--input", "empty.csv"]);
    assert_eq!(exit_code(&empty), 2);
    assert!(String::from_utf8_lossy(&empty.stderr).contains("no records"));

    fs::write(dir.path().join("bad.csv"), "x\n0.5\nnot-a-number\n").unwrap();
    let bad = baire(dir.path(), &["build", "--input", "bad.csv"]);
    assert_eq!(exit_code(&bad), 2);
    assert!(String::from_utf8_lossy(&bad.stderr).contains("row 3"));

    fs::write(dir.path().join("nan.csv"), "x\n0.5\nNaN\n").unwrap();
    assert_eq!(exit_code(&baire(dir.path(), &["build", "--input", "nan.csv"])), 2);

    fs::write(dir.path().join("dup.csv"), "id,x\na,0.5\na,0.6\n").unwrap();
    let dup = baire(
        dir.path(),
        &["build", "--input", "dup.csv", "--id-col", "id"],
    );
    assert_eq!(exit_code(&dup), 2);

    let missing = baire(dir.path(), &["build", "--input", "nowhere.csv"]);
    assert_eq!(exit_code(&missing), 2);

    build_worked_example(dir.path());
    let unknown = baire(
        dir.path(),
        &["query", "--index", "idx.madic", "nn", "--id", "zzz"],
    );
    assert_eq!(exit_code(&unknown), 2);

    fs::write(dir.path().join("garbage.madic"), "MADIC1 10 3 1\nbroken").unwrap();
    let corrupt = baire(dir.path(), &["query", "--index", "garbage.madic", "stats"]);
    assert_eq!(exit_code(&corrupt), 2);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    let dir = TempDir::new().unwrap();
    assert_eq!(exit_code(&baire(dir.path(), &["no-such-verb"])), 1);
    assert_eq!(exit_code(&baire(dir.path(), &["build"])), 1);

    let help = baire(dir.path(), &["--help"]);
    assert_eq!(exit_code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("build"));

    fs::write(dir.path().join("one.csv"), "0.5\n0.6\n").unwrap();
    let bad_base = baire(
        dir.path(),
        &["build", "--input", "one.csv", "--base", "1", "--index", "o.madic", "--spec", "o.proj"],
    );
    assert_eq!(exit_code(&bad_base), 1);

    let bad_precision = baire(
        dir.path(),
        &["build", "--input", "one.csv", "--precision", "0", "--index", "o.madic", "--spec", "o.proj"],
    );
    assert_eq!(exit_code(&bad_precision), 1);
}
