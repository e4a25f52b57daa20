#![allow(clippy::excessive_precision)]

use std::process::{Command, Output};

fn conifold(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conifold"))
        .args(args)
        .env_remove("CONIFOLD_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf-8")
}

fn line_value<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).map(str::trim))
        .unwrap_or_else(|| panic!("no line starting with {key:?} in\n{text}"))
}

#[test]
fn verify_n4_r1_passes_all_three_conditions() {
    let out = conifold(&["verify", "--n", "4", "--r", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.starts_with("family n=4 r=1 m=2 k=2 rho=1 deg_u=9\n"));
    let t_con: f64 = line_value(&text, "t_con ").parse().unwrap();
    assert!((t_con - 5.704_616_958_250_659_4).abs() < 1e-12);
    assert!(text.contains("conditions 3/3\n"));
    assert!(text.ends_with("result PASS\n"));
}

#[test]
fn verify_m2_k3_reports_negative_equality_root() {
    let out = conifold(&["verify", "--m", "2", "--k", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("rho=2"));
    assert!(text.contains("circle 2 on |x| = r_plus, predicted rho = 2"));
    let minus = text
        .lines()
        .find(|l| l.starts_with("equality_root d=1 "))
        .expect("d = 1 root");
    assert!(minus.ends_with("(-r_plus)"), "{minus}");
    assert!(minus.contains("alpha=-0.786151377757"));
}

#[test]
fn invalid_family_is_usage_error() {
    let out = conifold(&["verify", "--n", "2", "--r", "1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("m = n - r - 1 = 0"));
}

#[test]
fn selector_pairs_are_exclusive() {
    assert_eq!(conifold(&["verify", "--n", "4", "--m", "2", "--k", "2"]).status.code(), Some(2));
    assert_eq!(conifold(&["verify", "--n", "4"]).status.code(), Some(2));
    assert_eq!(conifold(&["verify"]).status.code(), Some(2));
    assert_eq!(conifold(&["verify", "--m", "0", "--k", "3"]).status.code(), Some(2));
}

#[test]
fn unknown_flag_is_usage_error() {
    assert_eq!(conifold(&["verify", "--bogus"]).status.code(), Some(2));
}

#[test]
fn roots_tabular_has_header_and_four_rows() {
    let out = conifold(&["roots", "--m", "1", "--k", "1", "--format", "tabular"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "re,im,modulus,residual,g_re,g_im,on_circle,d");
    assert_eq!(lines.len(), 5);
    assert!(!text.contains('\r'));
    // the conifold root comes first, flagged on the circle with d = 0
    assert!(lines[1].starts_with("8.1917251339616"));
    assert!(lines[1].ends_with(",true,0"));
    assert!(lines[2..].iter().all(|l| l.ends_with(",false,")));
}

#[test]
fn oracle_n3_r1_matches_six_critical_values() {
    let out = conifold(&["oracle", "--n", "3", "--r", "1", "--starts", "2000", "--seed", "42"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("clusters 6 expected 6 status complete"));
    assert!(text.contains("oracle_match 6<->6 "));
    assert!(text.contains("oracle pass\n"));
}

#[test]
fn oracle_rejects_large_dimension_and_too_few_starts() {
    assert_eq!(conifold(&["oracle", "--n", "7", "--r", "1"]).status.code(), Some(2));
    assert_eq!(conifold(&["oracle", "--n", "3", "--r", "1", "--starts", "5"]).status.code(), Some(2));
}

#[test]
fn oracle_shortfall_is_inconclusive() {
    // 120 starts is the floor for (m, k) = (2, 3); too few to find all 12 points
    let out = conifold(&["oracle", "--m", "2", "--k", "3", "--starts", "120", "--seed", "1"]);
    let text = stdout(&out);
    match out.status.code() {
        Some(4) => assert!(text.contains("status shortfall") && text.ends_with("result INCONCLUSIVE\n")),
        Some(0) => assert!(text.contains("status complete")),
        other => panic!("unexpected exit {other:?}\n{text}"),
    }
}

#[test]
fn cases_m2_k2_prints_case_ii_lhs() {
    let out = conifold(&["cases", "--m", "2", "--k", "2"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let line = text.lines().find(|l| l.starts_with("case II lhs ")).expect("case II line");
    let lhs: f64 = line.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!((lhs - 2.0546).abs() < 1e-4);
}

#[test]
fn sweep_default_box_passes_everything() {
    let out = conifold(&["sweep", "--m", "1..10", "--k", "1..10"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.ends_with("passed 100/100\n"));
    assert!(!text.contains(" F"));
}

#[test]
fn sweep_cases_only_covers_direct_case_iii_range() {
    let out = conifold(&["sweep", "--m", "1..1", "--k", "1..5", "--cases-only"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    for k in 2..=5 {
        assert!(text.contains(&format!("m=1 k={k} case III lhs ")), "k = {k}");
    }
    assert!(text.contains("m=1 k=1 case IV"));
    assert!(text.ends_with("passed 5/5\n"));
}

#[test]
fn empty_sweep_range_is_usage_error() {
    assert_eq!(conifold(&["sweep", "--m", "5..3"]).status.code(), Some(2));
    assert_eq!(conifold(&["sweep", "--k", "4..1", "--cases-only"]).status.code(), Some(2));
    assert_eq!(conifold(&["sweep", "--m", "0..3"]).status.code(), Some(2));
    assert_eq!(conifold(&["sweep", "--m", "a..3"]).status.code(), Some(2));
}

#[test]
fn nr_and_mk_selectors_write_identical_reports() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    let run = |sel: [&str; 4], path: &std::path::Path| {
        let mut args = vec!["verify"];
        args.extend(sel);
        args.extend(["--output", path.to_str().unwrap()]);
        let out = conifold(&args);
        assert_eq!(out.status.code(), Some(0));
        stdout(&out)
    };
    let sa = run(["--n", "5", "--r", "2"], &a);
    let sb = run(["--m", "2", "--k", "3"], &b);
    let (ra, rb) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert!(!ra.is_empty());
    assert_eq!(ra, rb);
    // stdout differs only in the path it reports writing
    let strip = |s: &str| s.lines().filter(|l| !l.starts_with("wrote ")).collect::<Vec<_>>().join("\n");
    assert_eq!(strip(&sa), strip(&sb));
    let text = String::from_utf8(ra).unwrap();
    assert!(text.contains("\"schema_version\": 1"));
    assert!(text.contains("\"n\": 5") && text.contains("\"m\": 2"));
}

#[test]
fn output_directory_comes_from_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_conifold"))
        .args(["verify", "--n", "3", "--r", "0"])
        .env("CONIFOLD_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("verify_n3_r0.json").is_file());
}

#[test]
fn stdout_is_stable_across_runs() {
    let a = conifold(&["verify", "--m", "3", "--k", "4", "-v"]);
    let b = conifold(&["verify", "--m", "3", "--k", "4", "-v"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn extended_precision_agrees_with_double() {
    let d = stdout(&conifold(&["verify", "--m", "2", "--k", "2"]));
    let e = stdout(&conifold(&["verify", "--m", "2", "--k", "2", "--precision", "extended"]));
    assert_eq!(line_value(&d, "t_con "), line_value(&e, "t_con "));
    assert!(e.ends_with("result PASS\n"));
}

#[test]
fn tight_tolerance_override_is_echoed_in_report() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    let out = conifold(&["verify", "--m", "1", "--k", "1", "--circle-tol", "1e-9", "--output", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(path).unwrap();
    assert!(text.contains("\"circle_tol\": 1.0000000000000001e-9"), "{text}");
    assert_eq!(conifold(&["verify", "--m", "1", "--k", "1", "--circle-tol", "-1"]).status.code(), Some(2));
}
