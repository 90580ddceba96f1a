//! End-to-end tests of the `paa` binary: spec files in, TSV/JSON out,
//! documented exit codes.

use std::collections::BTreeMap;
use std::process::Command;

fn paa(args: &[&str]) -> (String, String, i32) {
    let output = Command::new(env!("CARGO_BIN_EXE_paa"))
        .args(args)
        .env_remove("PAA_MAX_STATES")
        .output()
        .expect("binary runs");
    (
        String::from_utf8_lossy(&output.stdout).into_owned(),
        String::from_utf8_lossy(&output.stderr).into_owned(),
        output.status.code().unwrap_or(-1),
    )
}

fn tsv_rows(stdout: &str) -> BTreeMap<String, f64> {
    stdout
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (v, p) = l.split_once('\t').expect("value<TAB>probability");
            (v.to_string(), p.parse().expect("float"))
        })
        .collect()
}

const UNIFORM2: &str = r#"{"type":"iid","probs":{"0":0.5,"1":0.5}}"#;

#[test]
fn occur_example_from_the_docs() {
    let (stdout, _, code) = paa(&[
        "occur",
        "--patterns",
        r#"{"strings":["101","111"]}"#,
        "--model",
        UNIFORM2,
        "--n",
        "3",
        "--scheme",
        "overlapping",
        "--m",
        "5",
    ]);
    assert_eq!(code, 0);
    let rows = tsv_rows(&stdout);
    assert_eq!(rows["0"], 0.75);
    assert_eq!(rows["1"], 0.25);
}

#[test]
fn occur_is_byte_identical_across_runs() {
    let args = [
        "occur",
        "--patterns",
        r#"{"strings":["11"],"scheme":"nonoverlapping","m":4}"#,
        "--model",
        UNIFORM2,
        "--n",
        "8",
    ];
    let (a, _, code_a) = paa(&args);
    let (b, _, code_b) = paa(&args);
    assert_eq!(code_a, 0);
    assert_eq!(code_b, 0);
    assert_eq!(a, b);
    // The pattern file's scheme and m fields were honored.
    assert!(a.contains("# scheme=nonoverlapping"), "{a}");
    assert!(a.contains("# m=4"), "{a}");
}

#[test]
fn seed_table_values() {
    let (stdout, _, code) = paa(&[
        "seed",
        "--seed",
        "111*1**1*1**11*111",
        "--homology",
        "ungapped:0.95",
        "--n",
        "64",
        "--k",
        "3",
    ]);
    assert_eq!(code, 0);
    let rows = tsv_rows(&stdout);
    let expect = [
        ("0", 6.7331e-6, 5e-10),
        ("1", 4.4978e-5, 5e-10),
        ("2", 1.6120e-4, 5e-9),
        ("3", 4.1669e-4, 5e-9),
    ];
    for (k, v, tol) in expect {
        assert!((rows[k] - v).abs() < tol, "k={k}: {} vs {v}", rows[k]);
    }
}

#[test]
fn seed_sensitivity_scalar() {
    let (stdout, _, code) = paa(&[
        "seed",
        "--seed",
        "11111111111",
        "--homology",
        "ungapped:0.95",
        "--n",
        "64",
        "--sensitivity",
    ]);
    assert_eq!(code, 0);
    let value: f64 = stdout
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .parse()
        .unwrap();
    assert!((value - (1.0 - 4.1285e-4)).abs() < 5e-9);
}

#[test]
fn flowlen_table2_examples() {
    let (stdout, _, code) = paa(&[
        "flowlen",
        "--order",
        "TACG",
        "--flows",
        "12",
        "--text",
        "GTCGTATCCC",
    ]);
    assert_eq!(code, 0);
    assert_eq!(stdout.trim(), "6");
    let (stdout, _, _) = paa(&[
        "flowlen",
        "--order",
        "GTCA",
        "--flows",
        "12",
        "--text",
        "GTCGTATCCC",
    ]);
    assert_eq!(stdout.trim(), "10");
}

#[test]
fn flowlen_sweep_is_sorted() {
    let (stdout, _, code) = paa(&[
        "flowlen",
        "--order",
        "TACG",
        "--flows",
        "8",
        "--model",
        r#"{"type":"iid","probs":{"A":0.25,"C":0.25,"G":0.25,"T":0.25}}"#,
        "--nmax",
        "60",
        "--sweep",
        "4,4",
        "--jobs",
        "2",
    ]);
    assert_eq!(code, 0, "{stdout}");
    let rows: Vec<(String, f64)> = stdout
        .lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .map(|l| {
            let (o, e) = l.split_once('\t').unwrap();
            (o.to_string(), e.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 24);
    for pair in rows.windows(2) {
        assert!(pair[0].1 >= pair[1].1);
    }
    // Uniform model: all permutations are equivalent by symmetry.
    assert!((rows[0].1 - rows[23].1).abs() < 1e-9);
}

#[test]
fn wait_and_clump_commands() {
    let (stdout, _, code) = paa(&[
        "wait",
        "--patterns",
        r#"{"strings":["1"]}"#,
        "--model",
        UNIFORM2,
        "--tmax",
        "10",
    ]);
    assert_eq!(code, 0);
    let rows = tsv_rows(&stdout);
    assert_eq!(rows["1"], 0.5);
    assert_eq!(rows["2"], 0.25);

    let (stdout, _, code) = paa(&[
        "clump",
        "--patterns",
        r#"{"strings":["11"]}"#,
        "--model",
        UNIFORM2,
        "--max-size",
        "10",
    ]);
    assert_eq!(code, 0);
    let rows = tsv_rows(&stdout);
    assert!((rows["1"] - 0.5).abs() < 1e-9);
    assert!((rows["2"] - 0.25).abs() < 1e-9);
}

#[test]
fn algcost_single_window() {
    let (stdout, _, code) = paa(&[
        "algcost",
        "--algorithm",
        "horspool",
        "--pattern",
        "AAAAA",
        "--model",
        r#"{"type":"iid","probs":{"A":0.25,"C":0.25,"G":0.25,"T":0.25}}"#,
        "--n",
        "5",
    ]);
    assert_eq!(code, 0);
    let rows = tsv_rows(&stdout);
    assert!((rows["1"] - 0.75).abs() < 1e-12);
    assert!((rows["5"] - 1.0 / 256.0).abs() < 1e-12);
}

#[test]
fn mass_lengths_and_occurrence() {
    let model = r#"{"type":"iid","probs":{"A":0.5,"K":0.5}}"#;
    let rule = r#"{"gamma":["K"],"pi":[]}"#;
    let (stdout, _, code) = paa(&[
        "mass",
        "--model",
        model,
        "--rule",
        rule,
        "--nmax",
        "12",
        "--lengths-only",
    ]);
    assert_eq!(code, 0, "{stdout}");
    let rows = tsv_rows(&stdout);
    assert!((rows["1"] - 0.5).abs() < 1e-12);
    assert!((rows["3"] - 0.125).abs() < 1e-12);

    let (stdout, _, code) = paa(&[
        "mass",
        "--model",
        model,
        "--rule",
        rule,
        "--occurrence",
        "--n",
        "3",
        "--mass",
        "128.09496",
        "--delta",
        "0.0",
    ]);
    assert_eq!(code, 0, "{stdout}");
    let value: f64 = stdout
        .lines()
        .find(|l| !l.starts_with('#'))
        .unwrap()
        .parse()
        .unwrap();
    assert!(value > 0.0 && value < 1.0);
}

#[test]
fn json_output_round_trips() {
    let (stdout, _, code) = paa(&[
        "occur",
        "--patterns",
        r#"{"strings":["101","111"]}"#,
        "--model",
        UNIFORM2,
        "--n",
        "4",
        "--format",
        "json",
    ]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout).expect("valid JSON");
    assert_eq!(doc["command"], "occur");
    let support = doc["support"].as_array().unwrap();
    let p2 = support
        .iter()
        .find(|e| e["value"] == 2)
        .map(|e| e["probability"].as_f64().unwrap())
        .unwrap();
    assert!((p2 - 1.0 / 16.0).abs() < 1e-12);
    assert!(doc["tail"].as_f64().unwrap() < 1e-15);
}

#[test]
fn oracle_commands() {
    let (stdout, _, code) = paa(&[
        "oracle",
        "enumerate",
        "--patterns",
        r#"{"strings":["101","111"]}"#,
        "--model",
        UNIFORM2,
        "--n",
        "3",
    ]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    let dist = doc["distribution"].as_array().unwrap();
    assert!(dist
        .iter()
        .any(|e| e["value"] == 1 && (e["probability"].as_f64().unwrap() - 0.25).abs() < 1e-12));

    let (stdout, _, code) = paa(&[
        "oracle", "sample", "--model", UNIFORM2, "--n", "12", "--seed", "7",
    ]);
    assert_eq!(code, 0);
    let first = stdout.trim().to_string();
    let (stdout, _, _) = paa(&[
        "oracle", "sample", "--model", UNIFORM2, "--n", "12", "--seed", "7",
    ]);
    assert_eq!(first, stdout.trim());

    let (stdout, _, code) = paa(&[
        "oracle",
        "matcher",
        "--algorithm",
        "horspool",
        "--pattern",
        "aba",
        "--text",
        "ababa",
    ]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["occurrences"], 2);

    let (stdout, _, code) = paa(&[
        "oracle",
        "clumps",
        "--patterns",
        r#"{"strings":["ACA"]}"#,
        "--text",
        "GACACATTACAAA",
    ]);
    assert_eq!(code, 0);
    let doc: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(doc["clumps"], serde_json::json!([2, 1]));
}

#[test]
fn exit_codes() {
    // Usage error: unknown flag.
    let (_, _, code) = paa(&["occur", "--nonsense"]);
    assert_eq!(code, 2);
    // Validation error: probabilities do not sum to one.
    let (_, stderr, code) = paa(&[
        "occur",
        "--patterns",
        r#"{"strings":["1"]}"#,
        "--model",
        r#"{"type":"iid","probs":{"0":0.9,"1":0.9}}"#,
        "--n",
        "3",
    ]);
    assert_eq!(code, 3);
    assert!(stderr.contains("error[validation]"), "{stderr}");
    // Resource guard: window space beyond the default limit.
    let (_, stderr, code) = paa(&[
        "algcost",
        "--algorithm",
        "horspool",
        "--pattern",
        "ACGTACGTACGT",
        "--model",
        r#"{"type":"iid","probs":{"A":0.25,"C":0.25,"G":0.25,"T":0.25}}"#,
        "--n",
        "20",
    ]);
    assert_eq!(code, 4, "{stderr}");
    assert!(stderr.contains("error[resource]"), "{stderr}");
}

#[test]
fn model_files_are_read_from_disk() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("uniform2.json");
    std::fs::write(&path, UNIFORM2).unwrap();
    let out_path = dir.path().join("result.tsv");
    let (_, _, code) = paa(&[
        "occur",
        "--patterns",
        r#"{"strings":["101","111"]}"#,
        "--model",
        path.to_str().unwrap(),
        "--n",
        "3",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let rows = tsv_rows(&std::fs::read_to_string(out_path).unwrap());
    assert_eq!(rows["1"], 0.25);
}
