use std::path::PathBuf;
use std::process::{Command, Output};

use mvdc_flow::report::parse_csv;

fn mvdc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mvdc"))
        .args(args)
        .env_clear()
        .output()
        .expect("spawn mvdc")
}

fn twobus_path() -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data/twobus.json")
        .display()
        .to_string()
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).expect("utf8 stdout")
}

fn csv_value(text: &str, record: &str, element: &str, quantity: &str) -> f64 {
    parse_csv(text)
        .expect("parse csv")
        .into_iter()
        .find(|r| r.record == record && r.element == element && r.quantity == quantity)
        .and_then(|r| r.number())
        .unwrap_or_else(|| panic!("no {record}/{element}/{quantity} in output"))
}

#[test]
fn solve_arch1_table_shows_bus_13() {
    let out = mvdc(&["solve"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("BUS VOLTAGES"));
    let row = text
        .lines()
        .skip_while(|l| !l.contains("       13 "))
        .nth(1)
        .expect("voltage row after the block containing bus 13");
    assert!(row.contains("4.9991"), "{row}");
}

#[test]
fn solve_twobus_matches_quadratic_root() {
    let out = mvdc(&["solve", "--net", &twobus_path(), "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let v = csv_value(&stdout(&out), "voltage", "2", "voltage_v");
    let disc: f64 = 5000.0 * 5000.0 - 4.0 * 1.0e6 * 0.001;
    let root = (5000.0 + disc.sqrt()) / 2.0;
    assert!((v - root).abs() / root < 1e-9, "{v} vs {root}");
    assert!(format!("{v:.4}").starts_with("4999.7999") || format!("{v:.4}") == "4999.8000");
}

#[test]
fn monotone_agrees_with_zbus_through_cli() {
    let z = stdout(&mvdc(&["solve", "--format", "csv"]));
    let m = stdout(&mvdc(&["solve", "--solver", "monotone", "--format", "csv"]));
    for bus in 1..=21 {
        let b = bus.to_string();
        let dz = csv_value(&z, "voltage", &b, "voltage_v");
        let dm = csv_value(&m, "voltage", &b, "voltage_v");
        assert!((dz - dm).abs() < 1e-6 * 5000.0, "bus {bus}: {dz} vs {dm}");
    }
}

#[test]
fn missing_file_is_an_input_error() {
    let out = mvdc(&["solve", "--net", "/nonexistent/net.json"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn malformed_arguments_are_input_errors() {
    assert_eq!(mvdc(&["solve", "--solver", "gauss"]).status.code(), Some(2));
    assert_eq!(
        mvdc(&["solve", "--scenario", "sideways"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mvdc(&["solve", "--conductors", "Helens"]).status.code(),
        Some(2)
    );
    assert_eq!(
        mvdc(&["ac", "--net", &twobus_path()]).status.code(),
        Some(2)
    );
}

#[test]
fn overload_is_a_numerical_failure() {
    let out = mvdc(&["solve", "--net", &twobus_path(), "--scenario", "10000"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn contingency_study_has_55_cases() {
    let out = mvdc(&["contingency", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let records = parse_csv(&stdout(&out)).unwrap();
    let cases: std::collections::BTreeSet<_> = records
        .iter()
        .filter(|r| r.record == "case")
        .map(|r| r.case.clone())
        .collect();
    assert_eq!(cases.len(), 55);
    let worst = records
        .iter()
        .find(|r| r.record == "summary" && r.element == "Helens" && r.quantity == "worst_mlp_pct")
        .and_then(|r| r.number())
        .unwrap();
    assert!((worst - 88.30).abs() < 2.0, "{worst}");
}

#[test]
fn twobus_contingency_lists_three_cases() {
    let out = mvdc(&["contingency", "--net", &twobus_path()]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("cable 1-2"));
    assert!(text.contains("busbar 2"));
    assert!(text.contains("EEU at bus 1"));
    assert!(text.contains("cases: 3"));
}

#[test]
fn ac_helens_bus_14() {
    let out = mvdc(&["ac", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    let v = csv_value(&text, "voltage", "14", "voltage_v");
    assert!((v / 1000.0 - 9.9983).abs() <= 0.001, "{v}");
    let mismatch = csv_value(&text, "total", "", "max_mismatch_w");
    assert!(mismatch < 1e-3);
}

#[test]
fn ac_mazama_eeu_current() {
    let out = mvdc(&["ac", "--conductors", "Mazama/Poppy", "--format", "csv"]);
    assert_eq!(out.status.code(), Some(0));
    let i = csv_value(&stdout(&out), "current", "2-6", "current_a");
    assert!((i - 694.0).abs() / 694.0 < 0.02, "{i}");
}

#[test]
fn csv_output_round_trips_through_file() {
    let dir = std::env::temp_dir().join(format!("mvdc-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("report.csv");
    let out = mvdc(&[
        "solve",
        "--format",
        "csv",
        "--output",
        path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let text = std::fs::read_to_string(&path).unwrap();
    let records = parse_csv(&text).unwrap();
    let mut rewritten = csv::Writer::from_writer(Vec::new());
    rewritten
        .write_record(["record", "case", "element", "quantity", "value"])
        .unwrap();
    for r in &records {
        rewritten
            .write_record([&r.record, &r.case, &r.element, &r.quantity, &r.value])
            .unwrap();
    }
    let again = String::from_utf8(rewritten.into_inner().unwrap()).unwrap();
    assert_eq!(again, text);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn json_output_parses() {
    let out = mvdc(&["solve", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(doc["voltages"].as_array().unwrap().len(), 21);
    assert_eq!(doc["currents"].as_array().unwrap().len(), 34);
}

#[test]
fn repeated_runs_are_identical() {
    let a = mvdc(&["contingency", "--format", "csv"]).stdout;
    let b = mvdc(&["contingency", "--format", "csv"]).stdout;
    assert_eq!(a, b);
}

#[test]
fn validate_reports_structure() {
    let out = mvdc(&["validate"]);
    assert_eq!(out.status.code(), Some(0));
    let text = stdout(&out);
    assert!(text.contains("breakers              68"));
    assert!(text.contains("eeu_tier_length_m     68.000"));
    assert!(text.contains("feeder_tier_length_m  466.000"));
}

#[test]
fn catalog_lists_four_conductors() {
    let out = mvdc(&["catalog", "--format", "json"]);
    assert_eq!(out.status.code(), Some(0));
    let rows: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let names: Vec<_> = rows
        .as_array()
        .unwrap()
        .iter()
        .map(|r| r["name"].as_str().unwrap().to_string())
        .collect();
    assert_eq!(names, ["Helens", "Pansy", "Mazama", "Poppy"]);
}

#[test]
fn environment_variables_select_options() {
    let out = Command::new(env!("CARGO_BIN_EXE_mvdc"))
        .arg("solve")
        .env_clear()
        .env("MVDC_NET", twobus_path())
        .env("MVDC_FORMAT", "csv")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = csv_value(&stdout(&out), "voltage", "2", "voltage_v");
    assert!((v - 4999.8).abs() < 1e-3);
}
