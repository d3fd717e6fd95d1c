use std::fs;
use std::process::{Command, Output};

fn silab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_silab")).args(args).output().unwrap()
}

fn stdout_ok(args: &[&str]) -> String {
    let o = silab(args);
    assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    String::from_utf8(o.stdout).unwrap()
}

fn first_data_line(text: &str) -> &str {
    text.lines().find(|l| !l.starts_with('#')).unwrap()
}

#[test]
fn hermite_reports_exponents() {
    let s = stdout_ok(&["hermite", "--link", "He3", "--powers", "2"]);
    assert!(s.starts_with("# ie=3\n"));
    assert!(s.contains("# ge_upper_bound=2"));
    assert_eq!(first_data_line(&s), "power,k,u_k");
}

#[test]
fn gen_data_writes_n_rows() {
    let s = stdout_ok(&["gen-data", "--d", "3", "--n", "5", "--seed", "2"]);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "x_1,x_2,x_3,y");
    assert_eq!(lines.len(), 6);
    assert!(lines[1..].iter().all(|l| l.split(',').count() == 4));
}

#[test]
fn mu_lists_coefficients() {
    let s = stdout_ok(&["mu", "--oracle", "online"]);
    assert_eq!(first_data_line(&s), "i,mu_i,istar_flag");
    assert!(s.contains("\n3,36,1\n"));
    assert!(s.contains("# sign_assumption="));
}

#[test]
fn simulate_to_file_prints_summary() {
    let path = std::env::temp_dir().join(format!("silab-cli-sim-{}.csv", std::process::id()));
    let p = path.to_str().unwrap();
    let s = stdout_ok(&["simulate", "--oracle", "online", "--d", "10", "--n", "2000", "--batch", "1", "--out", p, "--audit"]);
    assert!(s.starts_with("weak_step="));
    assert!(s.contains("audit_violations=0"));
    let csv = fs::read_to_string(&path).unwrap();
    assert_eq!(csv.lines().next(), Some("step,samples_seen,kappa"));
    fs::remove_file(&path).unwrap();
}

#[test]
fn predict_and_phase_headers() {
    let s = stdout_ok(&["predict", "--oracle", "alternating", "--eta", "0.01"]);
    assert_eq!(first_data_line(&s), "i,t_i,t,dominant_i,gamma_auto");
    let s = stdout_ok(&["phase", "--d", "50"]);
    let lines: Vec<&str> = s.lines().collect();
    assert_eq!(lines[0], "i,j,eta_star,exponent");
    assert!(lines.iter().any(|l| l.starts_with("2,3,0.0039")));
}

#[test]
fn sweep_writes_all_outputs() {
    let dir = std::env::temp_dir().join(format!("silab-cli-sweep-{}", std::process::id()));
    let d = dir.to_str().unwrap();
    let s = stdout_ok(&[
        "sweep", "--out", d, "--set", "d=10", "--set", "rate_count=3", "--set", "n_count=4",
        "--set", "n_max=4000", "--set", "replicates=2",
    ]);
    assert!(s.starts_with("wrote 24 cells"));
    for f in ["cells.csv", "summary.csv", "phase.csv", "grid.plotdata", "grid.markers"] {
        assert!(dir.join(f).exists(), "{f} missing");
    }
    fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_config_fails() {
    let o = silab(&["sweep", "--set", "no_such_key=1"]);
    assert!(!o.status.success());
    let o = silab(&["sweep", "--set", "d"]);
    assert!(!o.status.success());
}
