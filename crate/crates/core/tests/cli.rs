use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use proptest::prelude::*;
use robust_erm::robustness::format_float;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_robust-erm"));
    cmd.env_remove("ROBUST_ERM_OUT");
    cmd
}

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, body).unwrap();
    path
}

#[test]
fn kernel_prints_value_and_growth() {
    let o = bin()
        .args([
            "kernel", "--family", "gaussian", "--gamma", "1", "--x", "0", "--xp", "1", "--t", "0.5",
        ])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let k: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("k,"))
        .unwrap()
        .parse()
        .unwrap();
    assert!((k - (-1.0f64).exp()).abs() < 1e-15);
    assert!(s.contains("growth,"));
    assert!(s.contains("g(0.5),"));
}

#[test]
fn metric_of_identical_inputs_is_zero() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(
        tmp.path(),
        "p.csv",
        "x_0,y,weight\n0.0,1.0,0.5\n1.0,-1.0,0.5\n",
    );
    let o = bin()
        .arg("metric")
        .arg(&p)
        .arg(&p)
        .args(["--p", "2"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.starts_with("metric,p,value,lower,upper_ot,upper_product\n"));
    // the product-coupling bound is not tight, so the last column is skipped
    for line in s.lines().skip(1) {
        for cell in line.split(',').take(5).skip(2).filter(|c| !c.is_empty()) {
            assert_eq!(cell.parse::<f64>().unwrap(), 0.0, "{line}");
        }
    }
}

#[test]
fn metric_with_gauge_config() {
    let tmp = tempfile::tempdir().unwrap();
    let p = write(tmp.path(), "p.csv", "x_0,y,weight\n0.0,1.0,1.0\n");
    let q = write(tmp.path(), "q.csv", "x_0,y,weight\n0.0,2.0,1.0\n");
    let o = bin()
        .arg("metric")
        .arg(&p)
        .arg(&q)
        .arg("--config")
        .arg(data("one_atom.json"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    let w1: f64 = s
        .lines()
        .find_map(|l| l.strip_prefix("wasserstein1,,"))
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(w1, 1.0);
    assert!(s.lines().any(|l| l.starts_with("d_phi,1.0,")));
}

#[test]
fn solve_one_atom_fixture() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("solve")
        .arg("--config")
        .arg(data("one_atom.json"))
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let summary = fs::read_to_string(tmp.path().join("summary.csv")).unwrap();
    assert_eq!(summary, stdout(&o));
    let objective: f64 = summary
        .lines()
        .nth(1)
        .unwrap()
        .split(',')
        .next()
        .unwrap()
        .parse()
        .unwrap();
    assert_eq!(objective, 0.25);
    let solution = fs::read_to_string(tmp.path().join("solution.csv")).unwrap();
    assert_eq!(solution, "anchor_index,alpha\n0,0.5\n");
}

#[test]
fn solve_honors_out_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .env("ROBUST_ERM_OUT", tmp.path())
        .arg("solve")
        .arg("--config")
        .arg(data("one_atom.json"))
        .args(["--lambda", "1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let solution = fs::read_to_string(tmp.path().join("solution.csv")).unwrap();
    // 2 lambda alpha + alpha = 1 at a single atom with k(x, x) = 1
    assert_eq!(
        solution,
        format!("anchor_index,alpha\n0,{}\n", format_float(1.0 / 3.0))
    );
}

#[test]
fn experiment_writes_report_and_curves() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("experiment")
        .arg("--config")
        .arg(data("reference.json"))
        .args(["--only", "quantitative,stability"])
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(
        o.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(stdout(&o), "quantitative,pass\nstability,pass\n");
    for kind in ["quantitative", "stability"] {
        let report = fs::read_to_string(tmp.path().join(format!("{kind}_report.csv"))).unwrap();
        assert!(report.starts_with("experiment,param,value\n"));
        assert!(report.contains(&format!("{kind},verdict,pass")));
        let curves = fs::read_to_string(tmp.path().join(format!("{kind}_curves.csv"))).unwrap();
        assert!(curves.starts_with("N,t,median,p90,bound,measured,verdict\n"));
        assert!(curves.lines().count() >= 2);
    }
}

#[test]
fn report_renders_table_and_data_file() {
    let tmp = tempfile::tempdir().unwrap();
    let curves = write(
        tmp.path(),
        "demo_curves.csv",
        "N,t,median,p90,bound,measured,verdict\n10,,0.5,0.75,,0.1,pass\n,0.25,,,1e-3,2.5e-4,fail\n",
    );
    let o = bin()
        .arg("report")
        .arg(&curves)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0));
    let table = stdout(&o);
    assert_eq!(table.lines().count(), 3);
    assert!(table.lines().nth(2).unwrap().ends_with("fail"));
    let dat = fs::read_to_string(tmp.path().join("demo_curves.dat")).unwrap();
    let lines: Vec<&str> = dat.lines().collect();
    assert_eq!(lines[0], "# N t median p90 bound measured verdict");
    assert_eq!(lines[1], "10 NaN 0.5 0.75 NaN 0.1 pass");
    assert_eq!(lines[2], "NaN 0.25 NaN NaN 1e-3 2.5e-4 fail");
}

#[test]
fn report_rejects_wrong_header() {
    let tmp = tempfile::tempdir().unwrap();
    let bad = write(tmp.path(), "bad.csv", "a,b\n1,2\n");
    let o = bin()
        .arg("report")
        .arg(&bad)
        .arg("--out")
        .arg(tmp.path())
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_one() {
    let o = bin().arg("frobnicate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin()
        .args(["kernel", "--family", "nonsense", "--x", "0"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    let o = bin().arg("--help").output().unwrap();
    assert_eq!(o.status.code(), Some(0));
}

#[test]
fn missing_input_file_exits_with_one() {
    let tmp = tempfile::tempdir().unwrap();
    let o = bin()
        .arg("metric")
        .arg(tmp.path().join("absent.csv"))
        .arg(tmp.path().join("absent.csv"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("no such file"));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn format_float_round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
        prop_assert_eq!(format_float(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }
}
