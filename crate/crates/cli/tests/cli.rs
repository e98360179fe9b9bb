use std::path::Path;
use std::process::{Command, Output};

use lg_core::{Constants, LaurentPoly};

fn lg(args: &[&str], cache: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_lg"));
    cmd.args(args);
    match cache {
        Some(dir) => cmd.env("LG_CACHE_DIR", dir),
        None => cmd.arg("--no-cache"),
    };
    cmd.output().expect("lg runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn compute_json_term_list() {
    let o = lg(&["compute", "--n", "1", "--format", "json"], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let p: LaurentPoly = serde_json::from_value(doc["polynomial"].clone()).unwrap();
    assert_eq!(&p, Constants::builtin().lg_as_1_reference());
    assert_eq!(doc["terms"].as_u64().unwrap() as usize, p.len());
    assert_eq!(doc["polynomial"][0], serde_json::json!(["8", 2, 12]));
    assert_eq!(doc["n"], 1);
    assert!(stderr(&o).is_empty());
}

#[test]
fn compute_text_matches_canonical_form() {
    let o = lg(&["compute", "--n", "2"], None);
    assert!(o.status.success());
    let text = stdout(&o);
    let p: LaurentPoly = text.trim_end().parse().unwrap();
    assert_eq!(p.to_string(), text.trim_end());
    assert!(text.starts_with("48*q^4*s^20 + "));
}

#[test]
fn unit_power_warns() {
    let o = lg(&["compute", "--n", "0"], None);
    assert!(o.status.success());
    assert!(stderr(&o).contains("extrapolation"));
    let p: LaurentPoly = stdout(&o).trim_end().parse().unwrap();
    assert_eq!(p, Constants::builtin().as_star().0[1]);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["compute", "--n", "-1"][..],
        &["compute"],
        &["compute", "--n", "x"],
        &["analyze", "--n", "0"],
        &["verify", "--max-n", "0"],
        &["table", "--from", "3", "--to", "2", "--out", "-"],
        &["extract", "s +", "1", "0"],
        &["frobnicate"],
    ] {
        let o = lg(args, None);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?}");
    }
}

#[test]
fn output_is_deterministic_across_cache_states() {
    let dir = tempfile::tempdir().unwrap();
    for format in ["text", "json", "latex"] {
        let runs: Vec<_> = [None, Some(dir.path()), Some(dir.path())]
            .into_iter()
            .map(|c| lg(&["compute", "--n", "3", "--format", format], c))
            .collect();
        for r in &runs {
            assert!(r.status.success());
            assert_eq!(r.stdout, runs[0].stdout, "{format}");
        }
    }
    assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
}

#[test]
fn strategies_print_the_same_polynomial() {
    let texts: Vec<_> = ["split", "binary", "sequential"]
        .iter()
        .map(|s| stdout(&lg(&["compute", "--n", "3", "--power-strategy", s], None)))
        .collect();
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0], texts[2]);
}

#[test]
fn unwritable_cache_is_a_warning() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, b"").unwrap();
    let o = lg(&["compute", "--n", "1"], Some(&blocker.join("sub")));
    assert!(o.status.success());
    assert!(stderr(&o).contains("warning: result not cached"), "{}", stderr(&o));
    assert_eq!(stdout(&o).trim_end(), Constants::builtin().lg_as_1_reference().to_string());
}

#[test]
fn latex_groups_conjugate_bands() {
    let o = lg(&["compute", "--n", "1", "--format", "latex"], None);
    let tex = stdout(&o);
    assert!(tex.starts_with("\\left(s^{12} + q^{-12} s^{-12}\\right) \\left(8 q^{2} + 8 - 8 q^{-2} - 24 q^{-4}"), "{tex}");
    assert!(tex.contains("\\left(s^{2} + q^{-2} s^{-2}\\right) \\left(-48 q^{2} - 606"));
    assert!(tex.trim_end().ends_with("+ 2376 q^{-26} + 344 q^{-28}"));
}

#[test]
fn analyze_reports_closed_form_and_genus() {
    let o = lg(&["analyze", "--n", "2"], None);
    assert!(o.status.success());
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(doc["summary"]["leading"], serde_json::json!(["48", 4, 20]));
    assert_eq!(doc["summary"]["trailing"], serde_json::json!(["48", -16, -20]));
    assert_eq!(doc["summary"]["s_span"], 40);
    assert_eq!(doc["closed_form_holds"], true);
    assert_eq!(doc["genus"]["genus"], 4);
    assert_eq!(doc["genus"]["computed_span"], 40);
}

#[test]
fn extract_basis_columns_and_inconsistency() {
    let c = Constants::builtin().brackets();
    let q_times = c.q_times.to_string();
    let o = lg(&["extract", "0", "1", &q_times], None);
    assert!(o.status.success(), "{}", stderr(&o));
    let json = lg(&["extract", "0", "1", &q_times, "--format", "json"], None);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v, serde_json::json!([[["1", 0, 0]], [], []]));
    let o = lg(&["extract", "1", "0", "1", "--format", "json"], None);
    assert_eq!(stdout(&o).trim_end(), "[[],[[\"1\",0,0]],[]]");

    // (1, 0, 0) has no Laurent solution.
    let o = lg(&["extract", "1", "0", "0"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("inconsistent traces"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn baseline_has_span_12() {
    let o = lg(&["baseline", "--format", "json"], None);
    let doc: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    let p: LaurentPoly = serde_json::from_value(doc["polynomial"].clone()).unwrap();
    assert_eq!(p, Constants::builtin().as_star().0[0]);
    assert_eq!(p.s_range(), Some((-6, 6)));
    assert!(doc["n"].is_null());
}

#[test]
fn verify_small_range() {
    let o = lg(&["verify", "--max-n", "1"], None);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    let report = stdout(&o);
    assert!(report.contains("PASS reference-polynomial"), "{report}");
    assert!(report.lines().filter(|l| l.starts_with("PASS")).count() >= 11);
    assert!(!report.contains("FAIL"));
}

#[test]
fn verify_rejects_tampered_constants() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("constants.json");
    // Flip one digit inside the payload, leaving the declared checksum.
    let text = Constants::builtin_source().replacen("\"8\"", "\"9\"", 1);
    assert_ne!(text, Constants::builtin_source());
    std::fs::write(&path, text).unwrap();
    let o = lg(&["--constants", path.to_str().unwrap(), "verify", "--max-n", "1"], None);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("checksum mismatch"), "{}", stderr(&o));

    let o = lg(&["--constants", dir.path().join("missing.json").to_str().unwrap(), "verify"], None);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn verify_names_first_divergent_term() {
    // A self-consistent constants file whose reference polynomial is wrong:
    // re-checksummed after the edit, so only the comparison can catch it.
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("constants.json");
    let mut doc: serde_json::Value = serde_json::from_str(Constants::builtin_source()).unwrap();
    let reference = &mut doc["constants"]["lg_as_1"]["value"];
    assert_eq!(reference[0], serde_json::json!(["8", 2, 12]));
    reference[0][0] = serde_json::json!("9");
    doc["checksum"] = serde_json::json!(lg_core::constants::payload_checksum(&doc["constants"]));
    std::fs::write(&path, serde_json::to_string(&doc).unwrap()).unwrap();
    let o = lg(&["--constants", path.to_str().unwrap(), "verify", "--max-n", "1"], None);
    assert_eq!(o.status.code(), Some(1), "{}", stderr(&o));
    let out = stdout(&o);
    assert!(out.contains("FAIL reference-polynomial"), "{out}");
    assert!(stderr(&o).contains("first divergent term at q^2*s^12: expected coefficient 9, got 8"), "{}", stderr(&o));
}

#[test]
fn table_is_stable_warm_and_cold() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("cache");
    let cold = dir.path().join("cold.csv");
    let warm = dir.path().join("warm.csv");
    for out in [&cold, &warm] {
        let o = lg(&["table", "--from", "1", "--to", "4", "--out", out.to_str().unwrap()], Some(&cache));
        assert!(o.status.success(), "{}", stderr(&o));
    }
    let text = std::fs::read_to_string(&cold).unwrap();
    assert_eq!(text, std::fs::read_to_string(&warm).unwrap());
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "n,leading,trailing,span,genus,q1_check");
    assert_eq!(lines[1], "1,8*q^2*s^12,8*q^-10*s^-12,24,2,true");
    assert_eq!(lines[2], "2,48*q^4*s^20,48*q^-16*s^-20,40,4,true");
    assert_eq!(lines.len(), 5);
    let o = lg(&["table", "--from", "1", "--to", "1", "--out", "-"], None);
    assert_eq!(stdout(&o), lines[..2].join("\n") + "\n");
}
