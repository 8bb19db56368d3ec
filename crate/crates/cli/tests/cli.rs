//! End-to-end tests of the `flims` binary: stream files, exit codes, and
//! command behavior.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn flims(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_flims"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn flims_ok(args: &[&str]) -> String {
    let out = flims(args);
    assert!(
        out.status.success(),
        "command {:?} failed: {}",
        args,
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn gen(dir: &Path, name: &str, args: &[&str]) -> PathBuf {
    let p = dir.join(name);
    let mut full = vec!["gen"];
    full.extend_from_slice(args);
    full.push("--out");
    full.push(path_str(&p));
    flims_ok(&full);
    p
}

#[test]
fn gen_read_write_round_trips_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(
        dir.path(),
        "a.flms",
        &["--dist", "uniform", "--n", "500", "--seed", "7", "--sorted"],
    );
    let empty = gen(
        dir.path(),
        "e.flms",
        &["--dist", "uniform", "--n", "0", "--sorted"],
    );
    // Identity merge re-reads and re-writes the stream.
    let out = dir.path().join("round.flms");
    flims_ok(&[
        "oracle-merge",
        path_str(&a),
        path_str(&empty),
        "--out",
        path_str(&out),
    ]);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&out).unwrap());
    // Header layout is bit-exact.
    let bytes = std::fs::read(&a).unwrap();
    assert_eq!(&bytes[0..4], b"FLMS");
    assert_eq!(bytes[4], 0x01);
    assert_eq!(bytes[5], 0x00); // plain mode
    assert_eq!(bytes[6], 0x00); // descending
    assert_eq!(u64::from_le_bytes(bytes[7..15].try_into().unwrap()), 500);
    assert_eq!(bytes.len(), 15 + 500 * 8);
}

#[test]
fn gen_is_deterministic_in_seed() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(
        dir.path(),
        "a.flms",
        &["--dist", "zipf:1.2", "--n", "1000", "--seed", "42"],
    );
    let b = gen(
        dir.path(),
        "b.flms",
        &["--dist", "zipf:1.2", "--n", "1000", "--seed", "42"],
    );
    let c = gen(
        dir.path(),
        "c.flms",
        &["--dist", "zipf:1.2", "--n", "1000", "--seed", "43"],
    );
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_ne!(std::fs::read(&a).unwrap(), std::fs::read(&c).unwrap());
}

#[test]
fn merge_matches_oracle_merge_for_every_variant() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(
        dir.path(),
        "a.flms",
        &[
            "--dist", "runs:0.3", "--n", "700", "--seed", "1", "--sorted",
        ],
    );
    let b = gen(
        dir.path(),
        "b.flms",
        &[
            "--dist", "runs:0.3", "--n", "650", "--seed", "2", "--sorted",
        ],
    );
    let want = dir.path().join("want.flms");
    flims_ok(&[
        "oracle-merge",
        path_str(&a),
        path_str(&b),
        "--out",
        path_str(&want),
    ]);
    for variant in ["plain", "skew", "stable", "flimsj"] {
        let out = dir.path().join(format!("{variant}.flms"));
        flims_ok(&[
            "merge",
            path_str(&a),
            path_str(&b),
            "--w",
            "8",
            "--variant",
            variant,
            "--out",
            path_str(&out),
        ]);
        assert_eq!(
            std::fs::read(&want).unwrap(),
            std::fs::read(&out).unwrap(),
            "variant {variant}"
        );
    }
}

#[test]
fn merge_rejects_unsorted_input_with_exit_2_and_offset() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(
        dir.path(),
        "a.flms",
        &["--dist", "uniform", "--n", "100", "--seed", "3"],
    ); // unsorted
    let b = gen(
        dir.path(),
        "b.flms",
        &["--dist", "uniform", "--n", "100", "--seed", "4", "--sorted"],
    );
    let out = dir.path().join("m.flms");
    let res = flims(&[
        "merge",
        path_str(&a),
        path_str(&b),
        "--w",
        "4",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(res.status.code(), Some(2));
    let err = String::from_utf8_lossy(&res.stderr);
    assert!(err.contains("not sorted"), "{err}");
    assert!(err.contains("offset"), "{err}");
}

#[test]
fn configuration_errors_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(
        dir.path(),
        "a.flms",
        &["--dist", "uniform", "--n", "16", "--seed", "3", "--sorted"],
    );
    let out = dir.path().join("m.flms");
    // Non-power-of-two lane count.
    let res = flims(&[
        "merge",
        path_str(&a),
        path_str(&a),
        "--w",
        "3",
        "--out",
        path_str(&out),
    ]);
    assert_eq!(res.status.code(), Some(3));
    // Unsupported topology export.
    let res = flims(&["export", "--design", "mms", "--w", "8"]);
    assert_eq!(res.status.code(), Some(3));
    // Count and latency still work for count-only designs.
    assert_eq!(
        flims_ok(&["count", "--design", "mms", "--w", "8"]).trim(),
        "41"
    );
}

#[test]
fn corrupt_stream_files_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.flms");
    std::fs::write(&bad, b"NOPE\x01\x00\x00whatever").unwrap();
    let out = dir.path().join("m.flms");
    let res = flims(&["sort", path_str(&bad), "--out", path_str(&out)]);
    assert_eq!(res.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&res.stderr).contains("magic"));
}

#[test]
fn count_latency_reference_values() {
    assert_eq!(
        flims_ok(&["count", "--design", "flims", "--w", "512"]).trim(),
        "2816"
    );
    assert_eq!(
        flims_ok(&["count", "--design", "flims", "--w", "2"]).trim(),
        "3"
    );
    assert_eq!(
        flims_ok(&["count", "--design", "ehms", "--w", "16"]).trim(),
        "74"
    );
    assert_eq!(
        flims_ok(&["latency", "--design", "flims", "--w", "16"]).trim(),
        "5"
    );
    assert_eq!(
        flims_ok(&["latency", "--design", "flimsj", "--w", "2"]).trim(),
        "3"
    );
    assert_eq!(
        flims_ok(&["latency", "--design", "mms", "--w", "8"]).trim(),
        "9"
    );
}

#[test]
fn export_formats_round_trip_and_count_nodes() {
    let json = flims_ok(&[
        "export", "--design", "flims", "--w", "2", "--format", "json",
    ]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["stages"][0]["kind"], "max");
    assert_eq!(v["stages"][0]["cas"].as_array().unwrap().len(), 2);
    assert_eq!(v["stages"][1]["cas"].as_array().unwrap().len(), 1);
    let dot = flims_ok(&["export", "--design", "flims", "--w", "4", "--format", "dot"]);
    let nodes = dot
        .lines()
        .filter(|l| l.contains("MAX") || l.contains("CAS"))
        .count();
    assert_eq!(nodes, 8);
}

#[test]
fn sort_command_matches_reference_sort() {
    let dir = tempfile::tempdir().unwrap();
    let input = gen(
        dir.path(),
        "in.flms",
        &["--dist", "uniform", "--n", "20000", "--seed", "9"],
    );
    let out = dir.path().join("s.flms");
    flims_ok(&[
        "sort",
        path_str(&input),
        "--out",
        path_str(&out),
        "--threads",
        "2",
    ]);
    let bytes = std::fs::read(&out).unwrap();
    let mut vals: Vec<u64> = bytes[15..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    assert!(vals.windows(2).all(|w| w[0] >= w[1]), "descending order");
    let in_bytes = std::fs::read(&input).unwrap();
    let mut in_vals: Vec<u64> = in_bytes[15..]
        .chunks_exact(8)
        .map(|c| u64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    vals.sort_unstable();
    in_vals.sort_unstable();
    assert_eq!(vals, in_vals, "permutation of the input");
}

#[test]
fn simulate_two_leaves_equals_merge() {
    let dir = tempfile::tempdir().unwrap();
    let a = gen(
        dir.path(),
        "a.flms",
        &["--dist", "uniform", "--n", "512", "--seed", "5", "--sorted"],
    );
    let b = gen(
        dir.path(),
        "b.flms",
        &["--dist", "uniform", "--n", "512", "--seed", "6", "--sorted"],
    );
    let sim_out = dir.path().join("sim.flms");
    let stdout = flims_ok(&[
        "simulate",
        "--leaves",
        "2",
        "--w-root",
        "2",
        "--out",
        path_str(&sim_out),
        path_str(&a),
        path_str(&b),
    ]);
    let stats: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(stats["elements_output"], 1024);
    let merged = dir.path().join("m.flms");
    flims_ok(&[
        "merge",
        path_str(&a),
        path_str(&b),
        "--w",
        "2",
        "--out",
        path_str(&merged),
    ]);
    assert_eq!(
        std::fs::read(&sim_out).unwrap(),
        std::fs::read(&merged).unwrap()
    );
}

#[test]
fn bench_emits_csv_rows() {
    let csv = flims_ok(&["bench", "--sizes", "4096", "--w-sweep", "8,16"]);
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "size,variant,threads,elems_per_sec");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("4096,plain-w8,1,"));
    assert!(lines[2].starts_with("4096,plain-w16,1,"));
}

#[test]
fn trace_json_has_the_documented_schema() {
    let out = flims_ok(&["trace", "--w", "2", "--a", "5,3", "--b", "4", "--json"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let cycles = v["cycles"].as_array().unwrap();
    assert!(cycles.len() >= 2);
    for key in ["deqA", "deqB", "cA", "cB", "selector", "out"] {
        assert!(cycles[1].get(key).is_some(), "missing {key}");
    }
}
