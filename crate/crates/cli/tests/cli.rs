//! End-to-end tests of the `otcert` binary: exit codes, validation messages,
//! and byte-level determinism of the CSV outputs.

use std::path::Path;
use std::process::{Command, Output};

fn otcert(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_otcert"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn version_lines() {
    let tmp = tempfile::tempdir().unwrap();
    let out = otcert(&["version"], tmp.path());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("otcert"));
    assert!(text.contains("pair cap"));

    let out = otcert(&["version", "--tolerances"], tmp.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("slack >= -error_bar"));
    assert!(text.contains("1e-8"));

    let out = otcert(&["version", "--schema"], tmp.path());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("\"domain\""));
    assert!(text.contains("polygon2d"));
}

#[test]
fn certify_writes_five_rows_and_exits_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment":"t","domain":{"kind":"interval","a":0,"b":1},
            "field":{"expr":"x1 - 0.5"},"p":3.0,"q":2.0,"resolution":128,"out":"o"}"#,
    );
    let out = otcert(&["certify", "--config", &cfg, "--quiet"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(tmp.path().join("o/reports.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines.len(), 6); // header + main, moment, triangle, nash, pw
    for id in ["main", "moment", "triangle", "nash", "pw"] {
        assert!(lines.iter().any(|l| l.contains(&format!(",{id},"))), "{id} missing");
    }
}

#[test]
fn invalid_exponents_exit_one_with_message() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "bad.json",
        r#"{"domain":{"kind":"interval","a":0,"b":1},
            "field":{"expr":"x1"},"p":2.0,"q":3.0,"out":"o"}"#,
    );
    let out = otcert(&["certify", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("1 < q < p"), "stderr: {err}");
}

#[test]
fn usage_errors_exit_one() {
    let tmp = tempfile::tempdir().unwrap();
    let out = otcert(&["certify"], tmp.path()); // missing --config
    assert_eq!(out.status.code(), Some(1));
    let out = otcert(&["certify", "--config", "does-not-exist.json"], tmp.path());
    assert_eq!(out.status.code(), Some(1));
    let cfg = write_config(tmp.path(), "junk.json", "{\"unknown_key\": 1}");
    let out = otcert(&["certify", "--config", &cfg], tmp.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn sweep_is_byte_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "sweep.json",
        r#"{"experiment":"det","seed":42,
            "domain":{"kind":"interval","a":0,"b":1},
            "p_values":[2.5,3.0],"q_values":[1.5,2.0],
            "fields_per_case":2,"resolution":64,"out":"unused"}"#,
    );
    let run = |out: &str| {
        let st = otcert(&["sweep", "--config", &cfg, "--out", out, "--quiet"], tmp.path());
        assert_eq!(st.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&st.stderr));
        std::fs::read(tmp.path().join(out).join("reports.csv")).unwrap()
    };
    let a = run("runA");
    let b = run("runB");
    assert!(!a.is_empty());
    assert_eq!(a, b, "sweep reruns must be byte-identical");

    // A different seed changes the random fields, hence the bytes.
    let st = otcert(
        &["sweep", "--config", &cfg, "--out", "runC", "--seed", "43", "--quiet"],
        tmp.path(),
    );
    assert_eq!(st.status.code(), Some(0));
    let c = std::fs::read(tmp.path().join("runC/reports.csv")).unwrap();
    assert_ne!(a, c);
}

#[test]
fn csv_rows_round_trip_through_the_schema() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment":"rt","domain":{"kind":"box","lo":[0,0],"hi":[1,0.5]},
            "field":{"expr":"x1 - 0.5"},"p":3.0,"q":2.0,"resolution":12,"out":"o"}"#,
    );
    let out = otcert(&["certify", "--config", &cfg, "--quiet"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(tmp.path().join("o/reports.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(header.len(), 13);
    for line in lines {
        let row: Vec<&str> = line.split(',').collect();
        assert_eq!(row.len(), header.len(), "row: {line}");
        // Numeric columns parse and reprint identically.
        for idx in [2usize, 3, 4, 8, 9, 10, 11, 12] {
            let v: f64 = row[idx].parse().unwrap();
            assert_eq!(format!("{v}"), row[idx]);
        }
    }
}

#[test]
fn eigen_and_scaling_subcommands() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "e.json",
        r#"{"experiment":"e","domain":{"kind":"interval","a":0,"b":1},
            "p":2.0,"resolution":64,"out":"oe"}"#,
    );
    let out = otcert(&["eigen", "--config", &cfg, "--quiet"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let eig = std::fs::read_to_string(tmp.path().join("oe/eigen.csv")).unwrap();
    assert!(eig.starts_with("resolution,p,eigenvalue,residual,iterations"));

    let cfg = write_config(
        tmp.path(),
        "s.json",
        r#"{"experiment":"s","p":3.0,"q":2.0,"n_list":[1,2,4,8],"resolution":32,"out":"os"}"#,
    );
    let out = otcert(&["scaling", "--config", &cfg, "--quiet"], tmp.path());
    assert_eq!(out.status.code(), Some(0));
    let sc = std::fs::read_to_string(tmp.path().join("os/scaling.csv")).unwrap();
    assert_eq!(sc.lines().count(), 5);
}

#[test]
fn geodesic_subcommand_writes_series() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        "g.json",
        r#"{"experiment":"g","domain":{"kind":"interval","a":0,"b":1},
            "densities":[{"expr":"1"},{"expr":"2*x1"}],
            "t_samples":[0,0.5,1],"q_norms":[2],"resolution":128,"out":"og"}"#,
    );
    let out = otcert(&["geodesic", "--config", &cfg, "--quiet"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let series = std::fs::read_to_string(tmp.path().join("og/geodesic.csv")).unwrap();
    assert!(series.starts_with("t,x1,weight"));
    assert!(series.lines().count() > 10);
    let conv = std::fs::read_to_string(tmp.path().join("og/convexity.csv")).unwrap();
    let violation: f64 = conv.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
    assert!(violation <= 1e-4);
}

#[test]
fn csv_field_inputs_work() {
    let tmp = tempfile::tempdir().unwrap();
    // 8-cell interval grid: nodes at (i + 0.5)/8; field x - 0.5.
    let mut rows = String::from("index,value\n");
    for i in 0..8 {
        rows.push_str(&format!("{i},{}\n", (i as f64 + 0.5) / 8.0 - 0.5));
    }
    std::fs::write(tmp.path().join("field.csv"), rows).unwrap();
    let cfg = write_config(
        tmp.path(),
        "c.json",
        r#"{"experiment":"csv","domain":{"kind":"interval","a":0,"b":1},
            "field":{"csv":"field.csv"},"p":3.0,"q":2.0,"resolution":8,"out":"o"}"#,
    );
    let out = otcert(&["certify", "--config", &cfg, "--quiet"], tmp.path());
    assert_eq!(out.status.code(), Some(0), "stderr: {}", String::from_utf8_lossy(&out.stderr));
}
