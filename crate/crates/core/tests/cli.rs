use std::path::Path;
use std::process::{Command, Output};

use darkcool::harness::ENV_OUT_DIR;

fn darkcool(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_darkcool"))
        .args(args)
        .env(ENV_OUT_DIR, dir)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn header(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap().lines().next().unwrap().to_string()
}

#[test]
fn optimize_prints_reference_detuning() {
    let dir = tempfile::tempdir().unwrap();
    let o = darkcool(dir.path(), &["optimize"]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o).lines().find(|l| l.starts_with("delta_g_opt")).unwrap().to_string();
    let v: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((v - 74.5).abs() < 1e-9, "{v}");
}

#[test]
fn rates_reports_known_inconsistency() {
    let dir = tempfile::tempdir().unwrap();
    let o = darkcool(dir.path(), &["rates"]);
    assert_eq!(o.status.code(), Some(0));
    let s = stdout(&o);
    assert!(s.contains("dark_state    true"), "{s}");
    assert!(s.contains("known-inconsistent, oracle substituted"), "{s}");
}

#[test]
fn check_passes_on_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = darkcool(dir.path(), &["check"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let s = stdout(&o);
    assert!(s.lines().any(|l| l.starts_with("KNOWN") && l.contains("rates.printed_cubic")));
    assert!(!s.lines().any(|l| l.starts_with("FAIL")));
}

#[test]
fn config_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("empty.cfg");
    std::fs::write(&cfg, "").unwrap();
    let o = darkcool(dir.path(), &["rates", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("empty"));

    std::fs::write(&cfg, "omega_g = 10\nomega_g = 11\n").unwrap();
    assert_eq!(darkcool(dir.path(), &["rates", "-c", cfg.to_str().unwrap()]).status.code(), Some(1));

    std::fs::write(&cfg, "colour = 3\n").unwrap();
    assert_eq!(darkcool(dir.path(), &["rates", "-c", cfg.to_str().unwrap()]).status.code(), Some(1));

    let missing = dir.path().join("missing.cfg");
    assert_eq!(darkcool(dir.path(), &["rates", "-c", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(darkcool(dir.path(), &["no-such-command"]).status.code(), Some(1));
    assert_eq!(darkcool(dir.path(), &["sweep", "--axis", "colour", "--values", "1,2"]).status.code(), Some(1));
    assert_eq!(darkcool(dir.path(), &["scenario", "fig9"]).status.code(), Some(1));
    assert_eq!(darkcool(dir.path(), &["--help"]).status.code(), Some(0));
}

#[test]
fn partial_config_is_used() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("p.cfg");
    std::fs::write(&cfg, "# stronger pump\nomega_g = 12.5\n").unwrap();
    let o = darkcool(dir.path(), &["optimize", "-c", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let line = stdout(&o).lines().find(|l| l.starts_with("delta_g_opt")).unwrap().to_string();
    let v: f64 = line.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert!((v - 74.5).abs() > 1.0, "pump change should move the optimum, got {v}");
}

#[test]
fn spectrum_writes_csv_and_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let o = darkcool(dir.path(), &["--jsonl", "spectrum", "--fig2", "--points", "301"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("spectrum.csv");
    assert_eq!(header(&csv), "delta_r,absorption");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 302);
    let jsonl = std::fs::read_to_string(dir.path().join("spectrum.jsonl")).unwrap();
    let first: serde_json::Value = serde_json::from_str(jsonl.lines().next().unwrap()).unwrap();
    assert!(first["absorption"].is_number());
    assert!(stdout(&o).contains("zeros"));
}

#[test]
fn sweep_writes_rows_with_provenance() {
    let dir = tempfile::tempdir().unwrap();
    let o = darkcool(
        dir.path(),
        &["sweep", "--axis", "omega_g", "--values", "10,12", "--optimal", "--cutoff", "5", "--threads", "2"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    let csv = dir.path().join("sweep.csv");
    assert_eq!(
        header(&csv),
        "axis_value,nss_numeric,nss_analytic,w_numeric,w_resolvent,w_closed_form,status,provenance"
    );
    let mut rdr = csv::Reader::from_path(&csv).unwrap();
    let rows: Vec<csv::StringRecord> = rdr.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 2);
    for r in &rows {
        assert_eq!(&r[6], "ok");
        assert!(r[1].parse::<f64>().unwrap() > 0.0);
        assert!(r[7].contains("nss_numeric=master_equation"));
    }
}

#[test]
fn evolve_writes_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let o = darkcool(dir.path(), &["evolve", "--horizon", "0.5", "--samples", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = dir.path().join("evolve.csv");
    assert_eq!(header(&csv), "t,nbar,pop_g,pop_d,pop_r,pop_e,tail");
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 12);
}

#[test]
fn steady_rejects_oversized_cutoff() {
    let dir = tempfile::tempdir().unwrap();
    let o = darkcool(dir.path(), &["steady", "--cutoff", "40"]);
    assert_eq!(o.status.code(), Some(2));
    let o = darkcool(dir.path(), &["steady", "--cutoff", "6"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("nss_numeric"));
}
