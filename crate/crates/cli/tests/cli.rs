use std::collections::HashMap;
use std::f64::consts::PI;
use std::process::Command;

use krein_core::dynamo::{constant_alpha_oracle, decoupled_oracle, DynamoBc};
use krein_core::herbst::{classify_Y, HerbstMuFamily};
use krein_core::interp::{nu_sweep, InterpAxis, InterpFamily, InterpParams};
use krein_core::numerics::branches::TrackOptions;
use krein_core::sweep::SweepResult;
use krein_core::Complex64;

struct Output {
    code: i32,
    stdout: String,
    stderr: String,
}

fn run_with_env(args: &[&str], env: &[(&str, &str)]) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_krein-spectra"));
    cmd.args(args);
    for (k, v) in env {
        cmd.env(k, v);
    }
    let out = cmd.output().expect("binary runs");
    Output {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).expect("utf-8 stdout"),
        stderr: String::from_utf8(out.stderr).expect("utf-8 stderr"),
    }
}

fn run(args: &[&str]) -> Output {
    run_with_env(args, &[])
}

fn ok(args: &[&str]) -> String {
    let out = run(args);
    assert_eq!(out.code, 0, "{args:?}: {}", out.stderr);
    out.stdout
}

/// Data rows of a CSV document keyed by column name.
fn rows(csv: &str) -> Vec<HashMap<String, String>> {
    let mut lines = csv.lines().filter(|l| !l.starts_with('#'));
    let header: Vec<String> = lines
        .next()
        .expect("header")
        .split(',')
        .map(str::to_string)
        .collect();
    lines
        .map(|l| {
            header
                .iter()
                .cloned()
                .zip(l.split(',').map(str::to_string))
                .collect()
        })
        .collect()
}

fn num(row: &HashMap<String, String>, key: &str) -> f64 {
    row[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key} = {:?}", row[key]))
}

fn ep_records(csv: &str) -> usize {
    csv.lines()
        .filter(|l| l.starts_with("# ep,") && !l.contains(",secondary,"))
        .count()
}

#[test]
fn interp_sweep_below_first_transition_is_real() {
    let csv = ok(&[
        "interp-sweep",
        "--b",
        "2",
        "--nu-steps",
        "100",
        "--levels",
        "10",
    ]);
    assert!(csv.starts_with("# krein-spectra sweep csv schema 1"));
    let data = rows(&csv);
    assert_eq!(data.len(), 1000);
    assert!(data.iter().all(|r| r["segment_label"] == "Real"));
    let header = csv.lines().find(|l| !l.starts_with('#')).unwrap();
    assert_eq!(
        header,
        "nu,level,re_E,im_E,re_mu,im_mu,segment_label,branch_id"
    );
}

#[test]
fn interp_sweep_ladder_at_b7() {
    let csv = ok(&["interp-sweep", "--b", "7", "--levels", "12"]);
    assert!(ep_records(&csv) >= 4, "{}", ep_records(&csv));
}

#[test]
fn interp_sweep_b4_complexifies_toward_nu_minus_two() {
    let data = rows(&ok(&["interp-sweep", "--b", "4", "--nu-steps", "41"]));
    let complex: Vec<_> = data
        .iter()
        .filter(|r| r["segment_label"] == "ComplexPair")
        .collect();
    assert!(!complex.is_empty());
    assert!(complex.iter().all(|r| num(r, "nu") < -0.3));
    assert!(complex.iter().any(|r| num(r, "nu") == -1.5));
    assert!(complex.iter().any(|r| num(r, "level") <= 2.0));
    assert!(data
        .iter()
        .filter(|r| num(r, "nu") == 0.0)
        .all(|r| r["segment_label"] == "Real"));
}

#[test]
fn json_round_trip_and_exceptional_points_reverify() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sweep.json");
    let p = path.to_str().unwrap();
    let args = [
        "interp-sweep",
        "--b",
        "5",
        "--nu-min",
        "-2",
        "--nu-max",
        "-1",
        "--nu-steps",
        "21",
        "--levels",
        "6",
        "--format",
        "json",
        "--out",
        p,
    ];
    ok(&args);
    let loaded = SweepResult::from_json(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let grid: Vec<f64> = (0..21)
        .map(|k| {
            if k == 20 {
                -1.0
            } else {
                -2.0 + k as f64 / 20.0
            }
        })
        .collect();
    let direct = nu_sweep(5.0, 1.0, &grid, 6, &TrackOptions::default()).unwrap();
    assert_eq!(loaded, direct);
    assert!(!loaded.exceptional_points.is_empty());
    let family = InterpFamily::new(InterpParams::new(-1.0, 5.0, 1.0).unwrap(), InterpAxis::Nu);
    let verified = loaded.verify_exceptional_points(&family, 1e-4).unwrap();
    assert!(verified.iter().all(|&v| v), "{verified:?}");
}

#[test]
fn output_is_deterministic_across_worker_counts() {
    let args = [
        "herbst",
        "--b-min",
        "2",
        "--b-max",
        "4",
        "--b-steps",
        "21",
        "--levels",
        "6",
    ];
    let one = run_with_env(&args, &[("KREIN_SPECTRA_THREADS", "1")]);
    let four = run_with_env(&args, &[("KREIN_SPECTRA_THREADS", "4")]);
    assert_eq!((one.code, four.code), (0, 0));
    assert_eq!(one.stdout, four.stdout);
    assert_eq!(one.stdout, ok(&args));
}

#[test]
fn bad_thread_count_is_a_usage_error() {
    let out = run_with_env(
        &["squire", "--epsilon", "0.01"],
        &[("KREIN_SPECTRA_THREADS", "0")],
    );
    assert_eq!(out.code, 2);
    assert!(out.stderr.contains("KREIN_SPECTRA_THREADS"));
}

#[test]
fn herbst_default_run_reports_crossings() {
    let csv = ok(&["herbst"]);
    let estimates: Vec<f64> = csv
        .lines()
        .filter(|l| l.starts_with("# meta crossing_0"))
        .map(|l| {
            let v = l.split("estimate_b=").nth(1).unwrap();
            v.split(' ').next().unwrap().parse().unwrap()
        })
        .collect();
    assert_eq!(estimates.len(), 6);
    for (b, want) in estimates.iter().zip([2.02, 3.54, 4.78, 5.88]) {
        assert!((b - want).abs() < 0.01, "{b} vs {want}");
    }
    assert!(csv
        .lines()
        .filter(|l| l.starts_with("# meta crossing_0"))
        .all(|l| l.contains("exact_b=")));
    assert_eq!(ep_records(&csv), 6);

    let json = ok(&["herbst", "--format", "json"]);
    let loaded = SweepResult::from_json(&json).unwrap();
    let verified = loaded
        .verify_exceptional_points(&HerbstMuFamily, 1e-4)
        .unwrap();
    assert!(verified.len() == 6 && verified.iter().all(|&v| v));
}

#[test]
fn herbst_rescaled_view_hugs_rotated_y() {
    let data = rows(&ok(&[
        "herbst",
        "--rescaled",
        "--b-min",
        "8",
        "--b-max",
        "8",
        "--levels",
        "16",
    ]));
    assert_eq!(data.len(), 16);
    for r in &data {
        // λ = −i E/b.
        let lambda = Complex64::new(num(r, "im_E"), -num(r, "re_E"));
        assert!(classify_Y(lambda).distance < 0.1, "{lambda}");
    }
}

#[test]
fn herbst_mu_view_keeps_high_levels_fixed() {
    let data = rows(&ok(&[
        "herbst",
        "--mu",
        "--b-min",
        "1",
        "--b-max",
        "2.5",
        "--b-steps",
        "16",
    ]));
    for r in data.iter().filter(|r| num(r, "level") >= 9.0) {
        let k = num(r, "level");
        let box_level = PI * PI * k * k / 4.0;
        assert!(
            (num(r, "re_E") - box_level).abs() < 1e-3 * box_level,
            "{r:?}"
        );
        assert_eq!(num(r, "re_E"), num(r, "re_mu"));
    }
}

#[test]
fn squire_modes_hug_the_y() {
    let data = rows(&ok(&["squire", "--epsilon", "0.015625"]));
    assert_eq!(data.len(), 20);
    assert!(data.iter().all(|r| num(r, "distance") <= 0.2));
}

#[test]
fn squire_flow_parameters_match_epsilon() {
    assert_eq!(
        ok(&["squire", "--alpha-tilde", "1", "--reynolds", "64"]),
        ok(&["squire", "--epsilon", "0.015625"])
    );
    let json = ok(&[
        "squire",
        "--alpha-tilde",
        "1",
        "--reynolds",
        "64",
        "--format",
        "json",
    ]);
    assert_eq!(
        json,
        ok(&["squire", "--epsilon", "0.015625", "--format", "json"])
    );
}

#[test]
fn squire_branch_modes_match_edge_asymptotics() {
    let data = rows(&ok(&["squire", "--epsilon", "0.001", "--levels", "12"]));
    let branch: Vec<_> = data
        .iter()
        .filter(|r| r["segment"] != "VerticalRay")
        .collect();
    assert!(branch.len() >= 8);
    for r in branch {
        let got = Complex64::new(num(r, "re_lambda"), num(r, "im_lambda"));
        let want = Complex64::new(num(r, "re_branch"), num(r, "im_branch"));
        assert!((got - want).norm() <= 0.05 * want.norm(), "{got} vs {want}");
    }
}

#[test]
fn squire_needs_epsilon_or_flow() {
    assert_eq!(run(&["squire"]).code, 2);
    assert_eq!(run(&["squire", "--alpha-tilde", "1"]).code, 2);
    assert_eq!(
        run(&["squire", "--epsilon", "0.01", "--reynolds", "3"]).code,
        2
    );
    assert_eq!(run(&["squire", "--epsilon", "-1"]).code, 2);
}

#[test]
fn dynamo_without_alpha_matches_decoupled_oracle() {
    let data = rows(&ok(&["dynamo", "--c-min", "0", "--c-max", "0"]));
    let oracle = decoupled_oracle(1, DynamoBc::Realistic, 10).unwrap();
    assert_eq!(data.len(), 10);
    for (r, o) in data.iter().zip(&oracle) {
        assert_eq!(num(r, "C"), 0.0);
        assert!((num(r, "re_E") - o).abs() <= 1e-8 * o.abs(), "{r:?} vs {o}");
        assert_eq!(num(r, "im_E"), 0.0);
    }
}

#[test]
fn dynamo_constant_profile_top_eigenvalue() {
    let data = rows(&ok(&[
        "dynamo",
        "--bc",
        "idealized",
        "--profile",
        "constant:5",
        "--c-min",
        "1",
        "--c-max",
        "1",
        "--levels",
        "4",
    ]));
    let top = num(&data[0], "re_E");
    let (oracle, _) = constant_alpha_oracle(5.0, 1, 1).unwrap();
    assert!((top - 2.28).abs() < 0.005, "{top}");
    assert!((top - oracle).abs() < 1e-7 * oracle.abs());
}

#[test]
fn dynamo_fig1_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let profile = dir.path().join("alpha.txt");
    std::fs::write(&profile, "1\n0\n-26.09\n53.64\n-28.22\n").unwrap();
    let upper = ok(&[
        "dynamo",
        "--profile",
        "fig1",
        "--l",
        "1",
        "--bc",
        "realistic",
    ]);
    let full = ok(&["dynamo", "--profile", "fig1", "--full-pairs"]);
    let from_file = ok(&["dynamo", "--profile", profile.to_str().unwrap()]);
    let (upper_rows, full_rows) = (rows(&upper), rows(&full));
    assert_eq!(upper_rows, rows(&from_file));

    assert!(upper_rows
        .iter()
        .filter(|r| num(r, "C") <= 5.0)
        .all(|r| r["segment_label"] == "Real"));
    assert!(upper_rows
        .iter()
        .any(|r| r["segment_label"] == "ComplexPair"));
    assert!(upper_rows
        .iter()
        .all(|r| r["segment_label"] != "ComplexPair" || num(r, "im_E") >= 0.0));
    assert!(full_rows.iter().any(|r| num(r, "im_E") < 0.0));
    assert_eq!(
        full_rows.len() - upper_rows.len(),
        full_rows
            .iter()
            .filter(|r| r["segment_label"] == "ComplexPair" && num(r, "im_E") < 0.0)
            .count()
    );
    assert!(ep_records(&upper) >= 1);
}

#[test]
fn bounds_interp_table() {
    let out = ok(&["bounds", "--model", "interp", "--nu", "-0.5", "--b", "6"]);
    let ks: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("k_s "))
        .unwrap()
        .parse()
        .unwrap();
    assert!(ks > 213.0);
    assert!(out.lines().any(|l| l == "k_c 14"));
    let out = ok(&["bounds", "--model", "interp", "--nu", "-1.5", "--b", "7"]);
    let ks: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("k_s "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((ks - 52.1).abs() < 0.1);
    assert!(out.lines().any(|l| l == "k_c 11"));
}

#[test]
fn bounds_herbst_crossing_table() {
    let out = ok(&["bounds", "--model", "herbst", "--b", "7", "--n-max", "6"]);
    assert!(out.lines().any(|l| l.starts_with("k_a ")));
    let last = out.lines().find(|l| l.starts_with("6,")).unwrap();
    let b6: f64 = last.split(',').nth(1).unwrap().parse().unwrap();
    assert!((b6 - 7.81).abs() < 0.01, "{last}");
    assert_eq!(run(&["bounds", "--model", "interp", "--b", "6"]).code, 2);
    assert_eq!(
        run(&["bounds", "--model", "herbst", "--b", "6", "--nu", "-0.5"]).code,
        2
    );
}

#[test]
fn ep_locate_herbst_first_crossing() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("ep.json");
    let out = ok(&[
        "ep-locate",
        "--model",
        "herbst",
        "--n",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(std::fs::read_to_string(&path).unwrap(), out);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let estimate = v["estimate"]["b"].as_f64().unwrap();
    assert!((estimate - 2.02).abs() <= 0.02 * 2.02);
    let exact = v["point"]["parameter"].as_f64().unwrap();
    assert!((exact - 2.3091).abs() < 1e-3);
    assert!(v["point"]["residual_f"].as_f64().unwrap() < 1e-6);
}

#[test]
fn ep_locate_interp_herbst_line_crossing() {
    let out = ok(&[
        "ep-locate",
        "--model",
        "interp",
        "--nu",
        "-1",
        "--b",
        "6",
        "--mu",
        "128",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["search"], "b");
    assert!((v["b"].as_f64().unwrap() - 6.02).abs() < 0.05);
    assert_eq!(v["mu"][1].as_f64().unwrap(), 0.0);
}

#[test]
fn ep_locate_interp_coalescence() {
    let out = ok(&[
        "ep-locate",
        "--model",
        "interp",
        "--two-parameter",
        "--nu",
        "-0.998",
        "--b",
        "6.36",
        "--mu",
        "140",
    ]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert_eq!(v["search"], "coalescence");
    assert!((v["nu"].as_f64().unwrap() + 0.9983).abs() < 0.003);
    assert!((v["b"].as_f64().unwrap() - 6.36).abs() < 0.05);
}

#[test]
fn exit_codes() {
    let no_conv = run(&[
        "ep-locate",
        "--model",
        "interp",
        "--nu",
        "-1",
        "--b",
        "6",
        "--mu",
        "128",
        "--tol",
        "1e-30",
    ]);
    assert_eq!(no_conv.code, 4);
    assert!(no_conv.stderr.contains("did not converge"));
    assert_eq!(
        run(&["ep-locate", "--model", "interp", "--nu", "-1", "--b", "6"]).code,
        2
    );
    assert_eq!(run(&["ep-locate", "--model", "herbst"]).code, 2);
    assert_eq!(run(&["interp-sweep", "--b", "-1"]).code, 2);
    assert_eq!(run(&["interp-sweep", "--b", "2", "--bogus"]).code, 2);
    assert_eq!(run(&["interp-sweep", "--b", "2", "--nu-min", "-3"]).code, 2);
    assert_eq!(
        run(&["interp-sweep", "--b", "2", "--nu-steps", "1"]).code,
        2
    );
    assert_eq!(
        run(&["dynamo", "--profile", "/nonexistent/alpha.txt"]).code,
        2
    );
    assert_eq!(run(&["dynamo", "--profile", "constant:x"]).code, 2);
    let failed = run(&[
        "herbst", "--b-min", "1e-6", "--b-max", "1e-6", "--levels", "3",
    ]);
    assert_eq!(failed.code, 3);
    assert!(failed.stderr.contains("solver failure"));
}
