use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const EXAMPLE: &str = r#"
a = [1.1, 1.5, 2.1, 2.5]
e_re = 0.0
e_im = 4.5
b_r = 2.5
b_i = 1.3
points = 400
ksq_points = 100
"#;

fn epp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_epp")).args(args).output().expect("runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    epp(&args)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn transform_writes_grid_and_summary() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "example.toml", EXAMPLE);
    let out = tmp.path().join("out");
    let o = run("transform", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    let (header, rows) = csv_rows(&fs::read_to_string(out.join("v2_grid.csv")).unwrap());
    let expected = "r,V11,V12,V13,V14,V22,V23,V24,V33,V34,V44";
    assert_eq!(header.join(","), expected);
    assert_eq!(rows.len(), 400);
    assert!(rows.iter().all(|r| r.len() == 11));
    // V₂ ~ 2/r² at the origin in the first channel
    assert!((rows[0][1] * rows[0][0].powi(2) - 2.0).abs() < 1e-3);

    let summary: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    let om = &summary["omega_over_energy_im"];
    assert!((om[0][1].as_f64().unwrap() + 0.936848).abs() < 5e-6);
    assert_eq!(summary["parameters"]["k_r"].as_f64(), Some(1.5));
    assert!(summary["diagnostic_x"]["re"].as_array().unwrap().len() == 2);
    assert!(summary["u_infinity"][0]["matrix"].as_array().unwrap().len() == 4);
}

#[test]
fn outputs_are_deterministic_and_round_trip() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "example.toml", EXAMPLE);
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    for dir in [&a, &b] {
        assert_eq!(run("transform", &cfg, dir, &[]).status.code(), Some(0));
        assert_eq!(run("figures", &cfg, dir, &[]).status.code(), Some(0));
    }
    for name in ["v2_grid.csv", "summary.json", "rs_columns.csv", "eigenphases.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }

    let echo = a.join("summary.json");
    let o = run("transform", &echo, &c, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(run("figures", &echo, &c, &[]).status.code(), Some(0));
    for name in ["v2_grid.csv", "summary.json", "rs_columns.csv", "eigenphases.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(c.join(name)).unwrap(), "{name}");
    }
}

#[test]
fn figures_have_orthonormal_columns_and_equal_phases() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "example.toml", EXAMPLE);
    let out = tmp.path().join("out");
    assert_eq!(run("figures", &cfg, &out, &[]).status.code(), Some(0));

    let (header, rows) = csv_rows(&fs::read_to_string(out.join("rs_columns.csv")).unwrap());
    assert_eq!(header[0], "ksq");
    assert_eq!(header[1], "R1_1");
    assert_eq!(header[16], "R4_4");
    for row in &rows {
        for j in 0..4 {
            let norm: f64 = row[1 + 4 * j..5 + 4 * j].iter().map(|x| x * x).sum();
            assert!((norm - 1.0).abs() < 1e-10);
        }
    }
    // scalar dominance at large k²: R_S → −I
    let last = rows.last().unwrap();
    for j in 0..4 {
        assert!((last[1 + 5 * j] + 1.0).abs() < 0.05);
    }

    let (header, rows) = csv_rows(&fs::read_to_string(out.join("eigenphases.csv")).unwrap());
    assert_eq!(
        header.join(","),
        "k,S0_delta_1,S0_delta_2,S0_delta_3,S0_delta_4,S2_delta_1,S2_delta_2,S2_delta_3,S2_delta_4"
    );
    for row in &rows {
        for j in 0..4 {
            assert!((row[1 + j] - row[5 + j]).abs() < 1e-10);
        }
    }
}

#[test]
fn verify_passes_and_reports() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "example.toml", EXAMPLE);
    let out = tmp.path().join("out");
    let o = run("verify", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], true);
    assert!(report["scatter"]["max_residual"].as_f64().unwrap() <= 1e-3);
    assert!(report["invariants"].as_array().unwrap().iter().all(|c| c["pass"] == true));
}

#[test]
fn verify_fails_with_exit_one_under_impossible_tolerance() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "example.toml", EXAMPLE);
    let out = tmp.path().join("out");
    let o = run("verify", &cfg, &out, &["--tol-eigenphase", "1e-15"]);
    assert_eq!(o.status.code(), Some(1));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["pass"], false);
}

#[test]
fn grid_points_flag_overrides_config() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(tmp.path(), "example.toml", EXAMPLE);
    let out = tmp.path().join("out");
    assert_eq!(run("transform", &cfg, &out, &["--grid-points", "37"]).status.code(), Some(0));
    let text = fs::read_to_string(out.join("v2_grid.csv")).unwrap();
    assert_eq!(text.lines().count(), 38);
}

#[test]
fn odd_channel_count_exits_two() {
    let tmp = TempDir::new().unwrap();
    let cfg = write_config(
        tmp.path(),
        "odd.toml",
        "a = [1.0, 1.3, 1.6, 1.9, 2.2]\nk_r = 1.0\nk_i = 1.0\n",
    );
    for cmd in ["transform", "verify", "figures"] {
        let o = run(cmd, &cfg, &tmp.path().join("out"), &[]);
        assert_eq!(o.status.code(), Some(2));
        assert!(stderr(&o).contains("odd channel count: EPP transformation does not exist"));
    }
}

#[test]
fn corrupted_b_exits_two() {
    let tmp = TempDir::new().unwrap();
    // b = 2.5 + 1.3i, s = √(1 − b²); B₁₁ perturbed by 1e-3
    let text = r#"
a = [1.1, 1.5, 2.1, 2.5]
k_r = 1.5
k_i = 1.5
b_matrix = [[[2.501, 1.3], [1.3876321216627316, -2.3421193191360286]],
            [[-1.3876321216627316, 2.3421193191360286], [2.5, 1.3]]]
"#;
    let cfg = write_config(tmp.path(), "bad.toml", text);
    let o = run("verify", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("B not complex-orthogonal"), "{}", stderr(&o));
}

#[test]
fn config_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let missing = tmp.path().join("missing.toml");
    assert_eq!(
        run("transform", &missing, &tmp.path().join("out"), &[]).status.code(),
        Some(2)
    );
    let garbled = write_config(tmp.path(), "bad.toml", "a = [1.0,\n");
    assert_eq!(
        run("transform", &garbled, &tmp.path().join("out"), &[]).status.code(),
        Some(2)
    );
    let both = write_config(tmp.path(), "both.toml", &format!("{EXAMPLE}k_r = 1.0\nk_i = 1.0\n"));
    let o = run("transform", &both, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("exactly one"));
}

#[test]
fn six_channel_random_b_passes_verify() {
    let tmp = TempDir::new().unwrap();
    let text = r#"
a = [1.0, 1.3, 1.6, 1.9, 2.2, 2.5]
k_r = 1.2
k_i = 0.9
angles = [[0.4, 0.3], [1.1, -0.5], [-0.7, 0.2]]
sigma = -1
points = 300
"#;
    let cfg = write_config(tmp.path(), "six.toml", text);
    let o = run("verify", &cfg, &tmp.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn selfcheck_passes() {
    let o = epp(&["selfcheck"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stdout));
    let stdout = String::from_utf8_lossy(&o.stdout);
    assert!(stdout.lines().count() >= 8 && stdout.lines().all(|l| l.starts_with("PASS")));
}
