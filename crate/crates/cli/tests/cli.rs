use std::path::Path;
use std::process::{Command, Output};

fn isolab(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_isolab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn csv_rows(path: &Path) -> Vec<Vec<String>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

#[test]
fn constant_spectrum_matches_closed_form() {
    let dir = tempfile::tempdir().unwrap();
    let o = isolab(&["spectrum", "--set", "potential=const:1.0"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("spectrum-spectrum.csv"));
    assert_eq!(rows[0].join(","), "label,index,lambda,multiplier,multiplicity,disc_slope,tolerance,pass");
    let lambdas: Vec<f64> = rows[1..].iter().map(|r| r[2].parse().unwrap()).collect();
    let mut expect = vec![-1.0, 1.0];
    for n in 1..=3 {
        let l = (1.0 + (n as f64 * std::f64::consts::PI).powi(2)).sqrt();
        expect.extend([l, -l]);
    }
    expect.sort_by(f64::total_cmp);
    assert_eq!(lambdas.len(), expect.len());
    assert!(lambdas.iter().zip(&expect).all(|(a, b)| (a - b).abs() < 1e-7));
    let meta = std::fs::read_to_string(dir.path().join("spectrum-spectrum_meta.csv")).unwrap();
    assert!(meta.starts_with("key,value\n") && meta.contains("potential,const:1\n"));
}

#[test]
fn conserve_on_wave_passes_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let o = isolab(&["conserve"], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&dir.path().join("conserve-conservation.csv"));
    let labels: Vec<&str> = rows[1..].iter().map(|r| r[0].as_str()).collect();
    assert_eq!(labels, ["I1", "I2", "I3", "I5"]);
    assert!(rows[1..].iter().all(|r| r.last().unwrap() == "pass"));
}

#[test]
fn coarse_step_fails_with_first_row_on_stderr() {
    let dir = tempfile::tempdir().unwrap();
    let o = isolab(&["conserve", "--set", "dt=1e-2"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).starts_with("conservation: I"), "{}", stderr(&o));
}

#[test]
fn ambiguous_points_are_inconclusive() {
    let dir = tempfile::tempdir().unwrap();
    let o = isolab(&["gradcheck"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("m4 inconclusive"), "{}", stderr(&o));
    assert!(dir.path().join("gradcheck-gradient_identity.csv").exists());
}

#[test]
fn endpoint_on_root_is_a_usage_error_without_output() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("never");
    let o = isolab(&["spectrum", "--set", "potential=const:1.0", "--set", "window=-1,10"], &out);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("window endpoint"), "{}", stderr(&o));
    assert!(!out.exists());
}

#[test]
fn config_errors_carry_line_numbers() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# demo\ngrid_size = 64\n").unwrap();
    let o = isolab(&["spectrum", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("line 2: unknown key 'grid_size'"), "{}", stderr(&o));

    std::fs::write(&cfg, "grid_n = 63\n").unwrap();
    let o = isolab(&["spectrum", "--config", cfg.to_str().unwrap()], &dir.path().join("out"));
    assert_eq!(o.status.code(), Some(3));
    assert!(!dir.path().join("out").exists());
}

#[test]
fn config_file_and_overrides_combine() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("from_config");
    std::fs::write(&cfg, format!("potential = zero\nwindow = [-4, 4]\noutput_dir = {}\n", out.display())).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_isolab"))
        .args(["spectrum", "--config", cfg.to_str().unwrap(), "--set", "grid_n=64"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = csv_rows(&out.join("spectrum-spectrum.csv"));
    assert_eq!(rows.len(), 4);
    let meta = std::fs::read_to_string(out.join("spectrum-spectrum_meta.csv")).unwrap();
    assert!(meta.contains("grid_n,64\n"));
}

#[test]
fn bad_invocations_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(isolab(&["plot"], dir.path()).status.code(), Some(3));
    assert_eq!(isolab(&["spectrum", "--bogus"], dir.path()).status.code(), Some(3));
    let o = Command::new(env!("CARGO_BIN_EXE_isolab"))
        .args(["spectrum", "--out"])
        .arg(dir.path())
        .env("ISOLAB_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("ISOLAB_THREADS"));
    let help = Command::new(env!("CARGO_BIN_EXE_isolab")).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}
