//! End-to-end tests of the `lightlink` binary: exit codes, file handling,
//! determinism across worker counts, and the shape of each command's CSV.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

/// Path to the compiled binary under test.
fn lightlink() -> Command {
    Command::new(env!("CARGO_BIN_EXE_lightlink"))
}

/// Path to the shipped scenario.
fn shipped_scenario() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/table_i.json")
}

/// Runs the binary and returns its captured output.
fn run(args: &[&str]) -> Output {
    lightlink()
        .args(args)
        .output()
        .expect("binary under test must spawn")
}

/// Data rows of a rendered CSV (everything after the header line).
fn data_rows(text: &str) -> Vec<Vec<String>> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    let _header = lines.next().expect("header row present");
    lines
        .map(|l| l.split(',').map(|c| c.to_string()).collect())
        .collect()
}

/// Writes a mutated copy of the shipped scenario and returns its path.
fn scenario_with(dir: &Path, name: &str, mutate: impl FnOnce(&mut serde_json::Value)) -> PathBuf {
    let text = std::fs::read_to_string(shipped_scenario()).expect("shipped scenario readable");
    let mut value: serde_json::Value = serde_json::from_str(&text).expect("shipped JSON parses");
    mutate(&mut value);
    let path = dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(&value).expect("serializable"))
        .expect("temp scenario writable");
    path
}

#[test]
fn channel_emits_one_lowpass_row_per_data_subcarrier() {
    let output = run(&[
        "channel",
        "--scenario",
        shipped_scenario().to_str().expect("utf-8 path"),
    ]);
    assert!(output.status.success(), "channel must exit 0");
    let text = String::from_utf8(output.stdout).expect("utf-8 CSV");
    assert!(
        text.starts_with("# scenario_sha256 = "),
        "provenance hash leads the file"
    );
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 15, "N = 16 gives 15 data subcarriers");
    let magnitudes: Vec<f64> = rows
        .iter()
        .map(|r| r[1].parse().expect("numeric magnitude"))
        .collect();
    for pair in magnitudes.windows(2) {
        assert!(
            pair[0] >= pair[1],
            "gain magnitude must be non-increasing (low-pass), got {} then {}",
            pair[0],
            pair[1]
        );
    }
}

#[test]
fn channel_handles_the_smallest_link() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = scenario_with(dir.path(), "n2.json", |v| {
        v["system"]["half_subcarriers"] = serde_json::json!(2);
    });
    let output = run(&["channel", "--scenario", path.to_str().expect("utf-8 path")]);
    assert!(output.status.success(), "N = 2 is a valid link");
    let text = String::from_utf8(output.stdout).expect("utf-8 CSV");
    assert_eq!(data_rows(&text).len(), 1, "N = 2 leaves one data subcarrier");
}

#[test]
fn malformed_scenarios_fail_validation_without_an_output_file() {
    let dir = tempfile::tempdir().expect("tempdir");
    let bad = scenario_with(dir.path(), "bad.json", |v| {
        v["geometry"]["wall_reflectivity"] = serde_json::json!(1.5);
    });
    let out_path = dir.path().join("never_written.csv");
    let output = run(&[
        "channel",
        "--scenario",
        bad.to_str().expect("utf-8 path"),
        "--out",
        out_path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(
        output.status.code(),
        Some(2),
        "validation failures exit with code 2"
    );
    assert!(
        !output.stderr.is_empty(),
        "the validation message goes to stderr"
    );
    assert!(
        !out_path.exists(),
        "no output file may appear on validation failure"
    );
}

#[test]
fn unparseable_scenarios_are_validation_failures() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = dir.path().join("broken.json");
    std::fs::write(&path, "{ not json").expect("writable");
    let output = run(&["channel", "--scenario", path.to_str().expect("utf-8 path")]);
    assert_eq!(output.status.code(), Some(2), "parse errors exit with code 2");
}

#[test]
fn unknown_subcarrier_indices_are_rejected() {
    let output = run(&[
        "rate-curves",
        "--scenario",
        shipped_scenario().to_str().expect("utf-8 path"),
        "--subcarriers",
        "1,16",
    ]);
    assert_eq!(
        output.status.code(),
        Some(2),
        "subcarrier 16 of an N = 16 link carries no data"
    );
}

#[test]
fn sweep_output_is_byte_identical_across_worker_counts() {
    let scenario = shipped_scenario();
    let scenario = scenario.to_str().expect("utf-8 path");
    let serial = run(&[
        "se", "--scenario", scenario, "--metric", "approx", "--jobs", "1",
    ]);
    let parallel = run(&[
        "se", "--scenario", scenario, "--metric", "approx", "--jobs", "4",
    ]);
    assert!(serial.status.success(), "serial run must exit 0");
    assert!(parallel.status.success(), "parallel run must exit 0");
    assert_eq!(
        serial.stdout, parallel.stdout,
        "worker count must not change a single output byte"
    );
    let rows = data_rows(&String::from_utf8(serial.stdout).expect("utf-8 CSV"));
    assert_eq!(rows.len(), 2, "one row per sweep point");
    assert!(
        rows.iter().all(|r| r.last().expect("powers cell").split(';').count() == 15),
        "each allocation cell carries all 15 subcarrier powers"
    );
}

#[test]
fn empty_sweeps_produce_header_only_output() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = scenario_with(dir.path(), "empty.json", |v| {
        v["sweep"] = serde_json::json!([]);
    });
    let output = run(&[
        "se",
        "--scenario",
        path.to_str().expect("utf-8 path"),
        "--metric",
        "lower",
    ]);
    assert!(output.status.success(), "an empty sweep is not an error");
    let text = String::from_utf8(output.stdout).expect("utf-8 CSV");
    assert_eq!(data_rows(&text).len(), 0, "no data rows for an empty sweep");
    assert!(
        text.lines().any(|l| l.starts_with("point,")),
        "the header row is still written"
    );
}

#[test]
fn infeasible_only_sweeps_exit_with_code_three_after_writing() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = scenario_with(dir.path(), "infeasible.json", |v| {
        v["sweep"] = serde_json::json!([
            {
                "optical_budget_w": 0.5,
                "electrical_budget_w": 20.0,
                "se_threshold_bits_per_s_per_hz": 1.9
            },
            {
                "optical_budget_w": {"unbounded": true},
                "electrical_budget_w": 20.0,
                "se_threshold_bits_per_s_per_hz": 5.0
            }
        ]);
    });
    let out_path = dir.path().join("ee.csv");
    let output = run(&[
        "ee",
        "--scenario",
        path.to_str().expect("utf-8 path"),
        "--out",
        out_path.to_str().expect("utf-8 path"),
    ]);
    assert_eq!(
        output.status.code(),
        Some(3),
        "a sweep with no feasible point exits with code 3"
    );
    let text = std::fs::read_to_string(&out_path).expect("the table is still written");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 2, "every point still gets a row");
    assert!(
        rows.iter().all(|r| r.contains(&"infeasible".to_string())),
        "each row is flagged infeasible"
    );
}

#[test]
fn mixed_feasibility_sweeps_continue_and_exit_zero() {
    let dir = tempfile::tempdir().expect("tempdir");
    let path = scenario_with(dir.path(), "mixed.json", |v| {
        v["sweep"] = serde_json::json!([
            {
                "optical_budget_w": 0.5,
                "electrical_budget_w": 20.0,
                "se_threshold_bits_per_s_per_hz": 1.9
            },
            {
                "optical_budget_w": 0.5,
                "electrical_budget_w": 20.0,
                "se_threshold_bits_per_s_per_hz": 0.3
            }
        ]);
    });
    let output = run(&["ee", "--scenario", path.to_str().expect("utf-8 path")]);
    assert_eq!(
        output.status.code(),
        Some(0),
        "one feasible point keeps the run successful"
    );
    let rows = data_rows(&String::from_utf8(output.stdout).expect("utf-8 CSV"));
    assert!(
        rows[0].contains(&"infeasible".to_string()),
        "the unreachable threshold is flagged"
    );
    assert!(
        rows[1].contains(&"converged".to_string()),
        "the reachable threshold converges"
    );
    let se: f64 = rows[1][5].parse().expect("numeric SE");
    assert!(
        se >= 0.3 - 1e-6,
        "the converged point honors its threshold, got SE {se}"
    );
}

#[test]
fn tightness_verification_reports_non_clipping_near_cap_operation() {
    let output = run(&[
        "verify-tightness",
        "--scenario",
        shipped_scenario().to_str().expect("utf-8 path"),
    ]);
    assert!(output.status.success(), "verify-tightness must exit 0");
    let rows = data_rows(&String::from_utf8(output.stdout).expect("utf-8 CSV"));
    assert_eq!(rows.len(), 2, "one row per sweep point");
    for row in &rows {
        let optical_fraction: f64 = row[5].parse().expect("numeric");
        let electrical_fraction: f64 = row[7].parse().expect("numeric");
        let min_sample: f64 = row[8].parse().expect("numeric");
        assert!(
            optical_fraction <= 1.0 + 1e-6 && electrical_fraction <= 1.0 + 1e-6,
            "simulated moments must respect both caps, got fractions \
             {optical_fraction} and {electrical_fraction}"
        );
        assert!(
            optical_fraction.max(electrical_fraction) > 0.97,
            "the binding cap should be nearly tight, got fractions \
             {optical_fraction} and {electrical_fraction}"
        );
        assert!(min_sample >= 0.0, "biased samples must be non-negative");
        assert_eq!(row[9], "0", "no sample may clip");
        assert_eq!(row[10], "10000", "trial count is taken from the scenario");
    }
}

#[test]
fn bench_certifies_determinism_and_the_fast_approximation() {
    let output = run(&[
        "bench",
        "--scenario",
        shipped_scenario().to_str().expect("utf-8 path"),
        "--quad-order",
        "16",
    ]);
    assert!(output.status.success(), "bench must exit 0");
    let text = String::from_utf8(output.stdout).expect("utf-8 CSV");
    let rows = data_rows(&text);
    assert_eq!(rows.len(), 3, "one row per link size");
    let sizes: Vec<&str> = rows.iter().map(|r| r[0].as_str()).collect();
    assert_eq!(sizes, ["4", "8", "16"], "link sizes in growth order");
    for row in &rows {
        assert_eq!(row[3], "true", "approx path faster at N = {}", row[0]);
        assert_eq!(row[4], "true", "repeat solves identical at N = {}", row[0]);
        let se_approx: f64 = row[5].parse().expect("numeric");
        let se_exact: f64 = row[6].parse().expect("numeric");
        assert!(
            se_approx >= se_exact - 1e-9,
            "the gap-corrected approximation overshoots the exact SE"
        );
    }
}

#[test]
fn seed_and_quad_order_overrides_change_the_provenance_hash() {
    let scenario = shipped_scenario();
    let scenario = scenario.to_str().expect("utf-8 path");
    let base = run(&["channel", "--scenario", scenario]);
    let reseeded = run(&["channel", "--scenario", scenario, "--seed", "7"]);
    assert!(base.status.success() && reseeded.status.success(), "both runs exit 0");
    let hash_of = |bytes: &[u8]| {
        String::from_utf8(bytes.to_vec())
            .expect("utf-8 CSV")
            .lines()
            .find(|l| l.starts_with("# scenario_sha256"))
            .expect("hash line present")
            .to_string()
    };
    assert_ne!(
        hash_of(&base.stdout),
        hash_of(&reseeded.stdout),
        "the hash reflects the effective configuration, overrides included"
    );
}
