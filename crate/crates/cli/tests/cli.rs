use std::path::PathBuf;
use std::process::{Command, Output};

fn symdyn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_symdyn"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn spec(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../specs")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

fn scratch(name: &str, text: &str) -> String {
    let dir = std::env::temp_dir().join(format!("symdyn-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

fn stdout(o: &Output) -> String {
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn golden_mean_entropy() {
    let v: f64 = stdout(&symdyn(&["entropy", &spec("goldenmean.json")]))
        .trim()
        .parse()
        .unwrap();
    assert!((v - 0.481211825).abs() < 1e-9, "{v}");
}

#[test]
fn lowered_file_verifies() {
    let out = scratch("low.json", "");
    stdout(&symdyn(&[
        "lower",
        &spec("fullshift2.json"),
        "--target",
        "0.3",
        "--out",
        &out,
    ]));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.contains("\"certificate\""));
    assert!(text.contains(&format!("\"version\": \"{}\"", env!("CARGO_PKG_VERSION"))));
    let report = stdout(&symdyn(&["verify", &out]));
    assert!(report.lines().all(|l| l.starts_with("ok")), "{report}");

    let tampered = scratch(
        "tampered.json",
        &text.replacen("\"count\": \"3\"", "\"count\": \"4\"", 1),
    );
    assert_ne!(std::fs::read_to_string(&tampered).unwrap(), text);
    assert_eq!(symdyn(&["verify", &tampered]).status.code(), Some(4));
}

#[test]
fn fan_profile_has_six_rows_near_log_two() {
    let csv = stdout(&symdyn(&["hexp", &spec("fan.json"), "--m", "1..6"]));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("m,epsilon,h_star,exact"));
    let rows: Vec<f64> = lines.map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|h| (h - 2f64.ln()).abs() < 0.01), "{rows:?}");
}

#[test]
fn subset_table_columns() {
    let csv = stdout(&symdyn(&[
        "subset-entropy",
        &spec("goldenmean.json"),
        "--m",
        "2",
        "--n-max",
        "5",
    ]));
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n,m,s_n,slope");
    // s_n counts golden-mean words of length n + 2.
    assert!(lines[1].starts_with("1,2,5,"), "{}", lines[1]);
    assert_eq!(lines.len(), 6);
}

#[test]
fn dim_entropy_record() {
    let text = stdout(&symdyn(&["dim-entropy", &spec("tree.json")]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v["lambda_low"].as_f64().unwrap() <= v["lambda_high"].as_f64().unwrap());
    assert_eq!(v["depth"], 3);
}

#[test]
fn factor_check_reports_sandwich() {
    let text = stdout(&symdyn(&["factor-check", &spec("mod2.json"), "--n-max", "12"]));
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["upper_holds"], true);
    assert!((v["fiber"].as_f64().unwrap() - 2f64.ln()).abs() < 1e-9);
}

#[test]
fn exit_codes() {
    let bad = scratch(
        "bad.json",
        r#"{"kind": "finite", "system": {"kind": "subshift", "alphabet": 2}, "points": ["0.3.0@0"]}"#,
    );
    let o = symdyn(&["subset-entropy", &bad]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("points[0]"));
    let unknown = scratch(
        "unknown.json",
        r#"{"kind": "subshift", "alphabet": 2, "forbiden": ["11"]}"#,
    );
    assert_eq!(symdyn(&["entropy", &unknown]).status.code(), Some(2));
    assert_eq!(
        symdyn(&["lower", &spec("goldenmean.json"), "--target", "0.9"])
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        symdyn(&["hexp", &spec("fan.json"), "--sample", "2"]).status.code(),
        Some(2)
    );
    assert_eq!(symdyn(&["entropy", "/nonexistent/x.json"]).status.code(), Some(2));
}
