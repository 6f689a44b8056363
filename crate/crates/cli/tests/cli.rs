//! End-to-end tests of the `bowtie` binary: every subcommand, the exit-code
//! contract, and byte-level determinism of the outputs.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::tempdir;

fn bowtie(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bowtie")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = bowtie(args);
    assert!(
        out.status.success(),
        "bowtie {args:?} failed:\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("terminated by signal")
}

fn put(dir: &Path, name: &str, content: &str) -> PathBuf {
    let p = dir.join(name);
    fs::write(&p, content).unwrap();
    p
}

fn read(dir: &Path, name: &str) -> String {
    fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

fn json(dir: &Path, name: &str) -> Value {
    serde_json::from_str(&read(dir, name)).unwrap()
}

const CANON_EDGES: &str = "1 2\n2 1\n1 3\n4 1\n4 5\n4 7\n7 3\n6 3\n8 6\n9 5\n10 11\n";

/// Same graph in adjacency encoding.
const CANON_ADJACENCY: &str = "1:2,3\n2:1\n4:1,5,7\n6:3\n7:3\n8:6\n9:5\n10:11\n";

/// Self-consistent metadata: api counts equal the degrees in CANON_EDGES.
/// Account 3 is three years younger than the rest.
const CANON_META: &str = "\
id,created_at,tweets,api_followers,api_followings,protected,status
1,2009-01-01,10,2,2,0,active
2,2009-01-01,0,1,1,0,active
3,2012-01-01,7,3,0,0,active
4,2009-01-01,3,0,3,0,active
5,2009-01-01,0,2,0,0,active
6,2009-01-01,1,1,1,0,active
7,2009-01-01,2,1,1,0,active
8,2009-01-01,0,0,1,0,active
9,2009-01-01,4,0,1,0,active
10,2009-01-01,5,0,1,0,active
11,2009-01-01,0,1,0,0,active
";

const CANON_LABELS: &str = "\
id,component,level,level2
1,LSC,,
2,LSC,,
3,OUT,1,
4,IN,1,
5,IN_TENDRILS,1,
6,OUT_TENDRILS,1,
7,BRIDGES,1,1
8,OUT_TENDRILS,2,
9,OTHER,,
10,DISCONNECTED,,
11,DISCONNECTED,,
";

/// Account 3 removed: OUT vanishes, so 6 and 8 detach and 7 becomes a plain
/// tendril off IN.
const CANON_LABELS_2010: &str = "\
id,component,level,level2
1,LSC,,
2,LSC,,
4,IN,1,
5,IN_TENDRILS,1,
6,DISCONNECTED,,
7,IN_TENDRILS,1,
8,DISCONNECTED,,
9,OTHER,,
10,DISCONNECTED,,
11,DISCONNECTED,,
";

fn canon_dir() -> tempfile::TempDir {
    let tmp = tempdir().unwrap();
    put(tmp.path(), "edges.txt", CANON_EDGES);
    put(tmp.path(), "meta.csv", CANON_META);
    tmp
}

#[test]
fn decompose_writes_golden_label_table() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let out = dir.join("out");
    ok(&["decompose", "--edges", dir.join("edges.txt").to_str().unwrap(), "--out", out.to_str().unwrap()]);

    assert_eq!(read(&out, "labels.csv"), CANON_LABELS);
    let summary = json(&out, "summary.json");
    assert_eq!(summary["total_nodes"], 11);
    assert_eq!(summary["total_arcs"], 11);
    assert_eq!(summary["sizes"]["LSC"], 2);
    assert_eq!(summary["sizes"]["OUT_TENDRILS"], 2);
    assert_eq!(summary["sizes"]["BRIDGES"], 1);
    assert_eq!(summary["sizes"]["DISCONNECTED"], 2);
    assert_eq!(summary["input"]["edges"], "edges.txt");
    assert_eq!(summary["input"]["meta"], Value::Null);
}

#[test]
fn decompose_is_deterministic_across_runs_and_threads() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let edges = dir.join("edges.txt");
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "4"), ("c", "1")] {
        let out = dir.join(name);
        ok(&[
            "decompose",
            "--edges",
            edges.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--threads",
            threads,
        ]);
        outputs.push((read(&out, "labels.csv"), read(&out, "summary.json")));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
}

#[test]
fn adjacency_input_matches_edge_list() {
    let tmp = canon_dir();
    let dir = tmp.path();
    put(dir, "edges.adj", CANON_ADJACENCY);
    let out = dir.join("out");
    ok(&[
        "decompose",
        "--edges",
        dir.join("edges.adj").to_str().unwrap(),
        "--format",
        "adjacency",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(read(&out, "labels.csv"), CANON_LABELS);
}

#[test]
fn decompose_empty_dataset_writes_empty_outputs() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path();
    put(dir, "edges.txt", "");
    let out = dir.join("out");
    ok(&["decompose", "--edges", dir.join("edges.txt").to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(read(&out, "labels.csv"), "id,component,level,level2\n");
    let summary = json(&out, "summary.json");
    assert_eq!(summary["total_nodes"], 0);
    assert_eq!(summary["sizes"]["LSC"], 0);
}

#[test]
fn metadata_only_accounts_become_nodes() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path();
    put(dir, "edges.txt", "");
    put(
        dir,
        "meta.csv",
        "id,created_at,tweets,api_followers,api_followings,protected,status\n\
         5,2009-01-01,0,0,0,0,active\n\
         6,2009-01-01,0,0,0,0,suspended\n\
         7,2009-01-01,0,0,0,0,active\n",
    );
    let out = dir.join("out");
    ok(&[
        "decompose",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--meta",
        dir.join("meta.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    // Arcless accounts are singleton components; the smallest id is the
    // largest-component tie-break winner.
    assert_eq!(
        read(&out, "labels.csv"),
        "id,component,level,level2\n5,LSC,,\n6,DISCONNECTED,,\n7,DISCONNECTED,,\n"
    );
}

#[test]
fn missing_edges_file_is_an_input_error() {
    let tmp = tempdir().unwrap();
    let out = bowtie(&[
        "decompose",
        "--edges",
        tmp.path().join("absent.txt").to_str().unwrap(),
        "--out",
        tmp.path().join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("absent.txt"));
}

#[test]
fn stats_reports_summary_outliers_and_crosstab() {
    let tmp = canon_dir();
    let dir = tmp.path();
    put(dir, "ids.txt", "3\n99\n");
    let out = dir.join("out");
    ok(&[
        "stats",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--meta",
        dir.join("meta.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--k",
        "1",
        "--labels",
        dir.join("ids.txt").to_str().unwrap(),
    ]);

    let degrees = json(&out, "degree_summary.json");
    assert_eq!(degrees["accounts"], 11);
    assert_eq!(degrees["followers"]["mean"], 1.0);
    assert_eq!(degrees["followers"]["median"], 1);
    assert_eq!(degrees["followers"]["p90"], 2);
    assert_eq!(degrees["followers"]["max"], 3);
    assert_eq!(degrees["followings"]["max"], 3);

    let profile = json(&out, "component_profile.json");
    assert_eq!(profile["total_tweets"], 32);
    assert_eq!(profile["components"]["IN"]["follower_sum"], 0);
    assert_eq!(profile["components"]["IN"]["following_sum"], 3);

    let outliers = json(&out, "outliers.json");
    assert_eq!(outliers["k"], 1);
    let top = &outliers["categories"]["top_followed"]["members"][0];
    assert_eq!(top["id"], 3);
    assert_eq!(top["value"], 3);
    assert_eq!(top["component"], "OUT");
    // Only accounts with at most one follower are eligible here.
    let constrained = &outliers["categories"]["top_following_le1_follower"]["members"][0];
    assert_eq!(constrained["id"], 4);
    assert_eq!(constrained["component"], "IN");
    assert_eq!(outliers["categories"]["top_tweeting"]["members"][0]["id"], 1);
    assert!(outliers["categories"]["top_followed"]["label_fraction"].is_object());

    let crosstab = json(&out, "crosstab_labels.json");
    assert_eq!(crosstab["set_size"], 2);
    assert_eq!(crosstab["absent"], 1);
    assert_eq!(crosstab["distribution"]["OUT"]["count"], 1);
    assert_eq!(crosstab["distribution"]["OUT"]["percent"], 50.0);
    assert_eq!(crosstab["prevalence"]["OUT"], 1.0);

    let abandoned = json(&out, "abandoned.json");
    assert_eq!(abandoned["overall"]["count"], 3);
    assert_eq!(abandoned["reference_date"], "2012-01-01");
}

#[test]
fn stats_distribution_files_cover_metrics_and_components() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let out = dir.join("out");
    ok(&[
        "stats",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--meta",
        dir.join("meta.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    // 4 metrics over ALL plus the 8 nonempty components.
    let ccdfs: Vec<_> = fs::read_dir(&out)
        .unwrap()
        .filter_map(|e| e.unwrap().file_name().into_string().ok())
        .filter(|n| n.starts_with("ccdf_"))
        .collect();
    assert_eq!(ccdfs.len(), 36);

    let all = read(&out, "ccdf_in_degree_ALL.csv");
    let mut lines = all.lines();
    assert_eq!(lines.next(), Some("value,ccdf"));
    let first = lines.next().unwrap();
    assert!(first.ends_with(",1"), "first fraction must be 1.0: {first}");
    assert_eq!(read(&out, "ccdf_in_degree_OUT.csv"), "value,ccdf\n3,1\n");

    // Without metadata the tweet and age metrics have no basis.
    let bare = dir.join("bare");
    ok(&["stats", "--edges", dir.join("edges.txt").to_str().unwrap(), "--out", bare.to_str().unwrap()]);
    assert!(!bare.join("ccdf_tweets_ALL.csv").exists());
    assert!(!bare.join("ccdf_age_months_ALL.csv").exists());
    assert!(bare.join("ccdf_out_degree_ALL.csv").exists());
}

#[test]
fn stats_on_empty_graph_is_a_contract_error() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path();
    put(dir, "edges.txt", "");
    let out = bowtie(&[
        "stats",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(exit_code(&out), 3);
}

#[test]
fn stats_rejects_zero_k() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let out = bowtie(&[
        "stats",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
        "--k",
        "0",
    ]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn snapshot_reclassifies_the_dated_subgraph() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let out = dir.join("out");
    ok(&[
        "snapshot",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--meta",
        dir.join("meta.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--as-of",
        "2010-01-01",
    ]);
    assert_eq!(read(&out, "labels_2010-01-01.csv"), CANON_LABELS_2010);
    let summary = json(&out, "summary_2010-01-01.json");
    assert_eq!(summary["as_of"], "2010-01-01");
    assert_eq!(summary["total_nodes"], 10);
    assert_eq!(summary["excluded_no_date"], 0);
    assert_eq!(summary["sizes"]["OUT"], 0);
    assert_eq!(summary["sizes"]["DISCONNECTED"], 4);
}

#[test]
fn snapshot_without_dates_is_empty() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let out = dir.join("out");
    ok(&[
        "snapshot",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--as-of",
        "2010-01-01",
    ]);
    assert_eq!(read(&out, "labels_2010-01-01.csv"), "id,component,level,level2\n");
    let summary = json(&out, "summary_2010-01-01.json");
    assert_eq!(summary["total_nodes"], 0);
    assert_eq!(summary["excluded_no_date"], 11);
}

#[test]
fn evolve_appends_an_off_grid_end_date() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let out = dir.join("out");
    ok(&[
        "evolve",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--meta",
        dir.join("meta.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--start",
        "2009-01-01",
        "--end",
        "2012-06-01",
        "--step-months",
        "24",
    ]);
    let csv = read(&out, "evolution.csv");
    let dates: Vec<&str> = csv
        .lines()
        .skip(1)
        .map(|l| l.split(',').next().unwrap())
        .collect::<std::collections::BTreeSet<_>>()
        .into_iter()
        .collect();
    assert_eq!(dates, ["2009-01-01", "2011-01-01", "2012-06-01"]);
    assert!(csv.contains("2012-06-01,LSC,2,"));
    // Account 3 arrives in 2012, completing the full decomposition.
    assert!(csv.contains("2011-01-01,OUT,0,0"));
    assert!(csv.contains("2012-06-01,OUT,1,"));
}

#[test]
fn evolve_is_thread_count_invariant() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let mut outputs = Vec::new();
    for (name, threads) in [("a", "1"), ("b", "4")] {
        let out = dir.join(name);
        ok(&[
            "evolve",
            "--edges",
            dir.join("edges.txt").to_str().unwrap(),
            "--meta",
            dir.join("meta.csv").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--start",
            "2009-01-01",
            "--end",
            "2012-01-01",
            "--step-months",
            "6",
            "--threads",
            threads,
        ]);
        outputs.push(read(&out, "evolution.csv"));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn evolve_rejects_an_inverted_range() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let out = bowtie(&[
        "evolve",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--out",
        dir.join("out").to_str().unwrap(),
        "--start",
        "2012-01-01",
        "--end",
        "2010-01-01",
    ]);
    assert_eq!(exit_code(&out), 1);
}

#[test]
fn diff_attributes_new_accounts_and_scores_agreement() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let out = dir.join("out");
    ok(&[
        "diff",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--meta",
        dir.join("meta.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--older",
        "2010-01-01",
        "--newer",
        "2012-06-01",
    ]);
    let attribution = read(&out, "attribution.csv");
    assert!(attribution.starts_with("period_end,label,new_accounts,fraction\n"));
    assert!(attribution.contains("2012-06-01,OUT,1,1\n"));
    assert!(attribution.contains("2012-06-01,LSC,0,0\n"));

    // Account 3's arrival relabels 6, 7, and 8 out of the 10 shared ids.
    let agreement = json(&out, "agreement.json");
    assert_eq!(agreement["common"], 10);
    assert_eq!(agreement["matching"], 7);
    assert_eq!(agreement["fraction"], 0.7);
    assert_eq!(agreement["older"], "2010-01-01");
    assert_eq!(agreement["newer"], "2012-06-01");
}

#[test]
fn validate_degrees_confirms_consistent_metadata() {
    let tmp = canon_dir();
    let dir = tmp.path();
    let out = dir.join("out");
    ok(&[
        "validate-degrees",
        "--edges",
        dir.join("edges.txt").to_str().unwrap(),
        "--meta",
        dir.join("meta.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let v = json(&out, "degree_validation.json");
    assert_eq!(v["nodes_with_meta"], 11);
    assert_eq!(v["followers"]["zero_fraction"], 1.0);
    assert_eq!(v["followings"]["zero_fraction"], 1.0);
    assert_eq!(v["followers"]["histogram"][0][0], 0);
    assert_eq!(v["followers"]["histogram"][0][1], 11);
}

#[test]
fn generate_output_decomposes_to_the_planted_labels() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path();
    let gen = dir.join("gen");
    // Odd DISCONNECTED count leaves one account with no arcs at all; it only
    // reaches the decomposition through the metadata file.
    ok(&[
        "generate",
        "--out",
        gen.to_str().unwrap(),
        "--n-lsc",
        "6",
        "--n-in",
        "4",
        "--n-out",
        "4",
        "--n-in-tendrils",
        "3",
        "--n-out-tendrils",
        "3",
        "--n-bridges",
        "2",
        "--n-other",
        "2",
        "--n-disconnected",
        "3",
        "--lsc-extra-arcs",
        "5",
        "--depth-in",
        "2",
        "--depth-out",
        "2",
        "--seed",
        "11",
    ]);
    let out = dir.join("out");
    ok(&[
        "decompose",
        "--edges",
        gen.join("edges.txt").to_str().unwrap(),
        "--meta",
        gen.join("meta.csv").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    let got: Vec<String> = read(&out, "labels.csv")
        .lines()
        .skip(1)
        .map(|l| l.splitn(3, ',').take(2).collect::<Vec<_>>().join(","))
        .collect();
    let expected: Vec<String> = read(&gen, "expected_labels.csv").lines().skip(1).map(String::from).collect();
    assert_eq!(got.len(), 27);
    assert_eq!(got, expected);

    let v = json(&out, "summary.json");
    assert_eq!(v["sizes"]["LSC"], 6);
    assert_eq!(v["sizes"]["DISCONNECTED"], 3);
}

#[test]
fn generate_is_seed_deterministic() {
    let tmp = tempdir().unwrap();
    let dir = tmp.path();
    let shape = [
        "--n-lsc", "5", "--n-in", "3", "--n-out", "3", "--n-in-tendrils", "2", "--n-out-tendrils",
        "2", "--n-bridges", "1", "--n-other", "1", "--n-disconnected", "2", "--lsc-extra-arcs", "4",
        "--seed", "42",
    ];
    for name in ["a", "b"] {
        let mut args = vec!["generate", "--out"];
        let out = dir.join(name);
        let out_str = out.to_str().unwrap().to_string();
        args.push(&out_str);
        args.extend_from_slice(&shape);
        ok(&args.iter().map(|s| &**s).collect::<Vec<_>>());
    }
    for file in ["edges.txt", "meta.csv", "expected_labels.csv"] {
        assert_eq!(read(&dir.join("a"), file), read(&dir.join("b"), file), "{file} differs");
    }
}

#[test]
fn oracle_check_reports_every_trial() {
    let out = ok(&["oracle-check", "--trials", "25", "--max-n", "40"]);
    assert_eq!(String::from_utf8_lossy(&out.stdout), "25/25 matched\n");
}

#[test]
fn usage_errors_exit_one_and_help_exits_zero() {
    assert_eq!(exit_code(&bowtie(&["decompose", "--no-such-flag"])), 1);
    assert_eq!(exit_code(&bowtie(&["decompose"])), 1);
    assert_eq!(exit_code(&bowtie(&["no-such-command"])), 1);
    let help = bowtie(&["--help"]);
    assert_eq!(exit_code(&help), 0);
    assert!(String::from_utf8_lossy(&help.stdout).contains("decompose"));
}

#[test]
fn generate_rejects_an_unanchored_shape() {
    let tmp = tempdir().unwrap();
    let out = bowtie(&[
        "generate",
        "--out",
        tmp.path().join("g").to_str().unwrap(),
        "--n-in",
        "3",
    ]);
    assert_eq!(exit_code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("LSC"));
}
