//! End-to-end tests of the command-line interface: exit codes, CSV and
//! snapshot emission, and the blow-up reporting contract.

use std::path::Path;
use std::process::Command;

fn bulksurf() -> Command {
    Command::new(env!("CARGO_BIN_EXE_bulksurf"))
}

fn repo_config(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
        .to_str()
        .unwrap()
        .to_string()
}

#[test]
fn run_henry_blowup_exits_3_and_prints_estimate() {
    let output = bulksurf()
        .args(["run", &repo_config("henry_blowup.cfg")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(3), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("T_blow"), "missing estimate: {stdout}");
    assert!(stdout.starts_with("t,species,"), "missing CSV header");
}

#[test]
fn run_heat_benchmark_exits_0_with_csv_on_stdout() {
    let output = bulksurf()
        .args(["run", &repo_config("heat.cfg")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    let header = stdout.lines().next().unwrap();
    assert_eq!(
        header,
        "t,species,l1_bulk,l2_bulk,linf_bulk,l1_surf,l2_surf,linf_surf,total_mass"
    );
}

#[test]
fn run_langmuir_2d_with_gate_and_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let csv_path = dir.path().join("out.csv");
    let snap_dir = dir.path().join("snaps");
    let base = std::fs::read_to_string(repo_config("langmuir_2d.cfg")).unwrap();
    let text = format!(
        "{base}\n[output]\ncsv = {}\nsnapshot_dir = {}\nsnapshot_every = 20\n",
        csv_path.display(),
        snap_dir.display()
    );
    let cfg = dir.path().join("langmuir_2d.cfg");
    std::fs::write(&cfg, text).unwrap();

    let output = bulksurf()
        .args(["run", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("t,species,"));
    // one row per (time, species)
    let rows = csv.lines().skip(1).count();
    assert!(rows > 0 && rows % 2 == 0, "{rows} rows");
    let snaps: Vec<_> = std::fs::read_dir(&snap_dir).unwrap().collect();
    assert!(!snaps.is_empty(), "no snapshots written");

    // byte-identical CSV when re-run
    let _ = bulksurf().args(["run", cfg.to_str().unwrap()]).output().unwrap();
    let csv2 = std::fs::read_to_string(&csv_path).unwrap();
    assert_eq!(csv.as_bytes(), csv2.as_bytes());
}

#[test]
fn invalid_config_exits_2_with_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    std::fs::write(&cfg, "[species]\nnames = A\n\n[sorption]\nvariant = henry\nk_ad = -1\n")
        .unwrap();
    let output = bulksurf()
        .args(["run", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("k_ad"), "{stderr}");
    assert!(stderr.contains("positive"), "{stderr}");

    // unreadable path is also a configuration error
    let output = bulksurf().args(["run", "/nonexistent.cfg"]).output().unwrap();
    assert_eq!(output.status.code(), Some(2));
}

#[test]
fn lwp_gate_rejects_inadmissible_exponent() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("gated.cfg");
    // d = 2 and p = 1.2 fails the hard gate p >= (d+2)/2
    std::fs::write(
        &cfg,
        "[grid]\ndim = 2\nnx = 4\nny = 4\n\n[species]\nnames = A\n\n[stepper]\nlwp_p = 1.2\n",
    )
    .unwrap();
    let output = bulksurf()
        .args(["run", cfg.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(2), "{output:?}");
    let stderr = String::from_utf8(output.stderr).unwrap();
    assert!(stderr.contains("local well-posedness"), "{stderr}");
}

#[test]
fn verify_filtered_exits_0() {
    let output = bulksurf()
        .args(["verify", "--only", "heat_convergence"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("PROP heat_convergence pass"), "{stdout}");

    let output = bulksurf()
        .args(["verify", "--only", "no_such_property"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(1));
}

#[test]
fn check_model_prints_reports() {
    let output = bulksurf()
        .args(["check-model", &repo_config("langmuir_2d.cfg")])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    assert!(stdout.contains("quasi_positivity pass"), "{stdout}");
    assert!(stdout.contains("sorption_structure pass"), "{stdout}");
    assert!(stdout.contains("triangular_structure pass"), "{stdout}");
    assert!(stdout.contains("growth exponent gamma = 2"), "{stdout}");
}

#[test]
fn exponents_prints_aligned_and_machine_readable() {
    let output = bulksurf()
        .args(["exponents", "--d", "3", "--p", "2.5", "--komega", "1", "--ksigma", "1"])
        .output()
        .unwrap();
    assert_eq!(output.status.code(), Some(0), "{output:?}");
    let stdout = String::from_utf8(output.stdout).unwrap();
    for predicate in ["sorption_growth", "sorption_trace", "local_wellposedness"] {
        assert!(
            stdout.contains(&format!("{predicate}: admissible")),
            "{stdout}"
        );
        assert!(
            stdout.contains(&format!("predicate={predicate} admissible=true")),
            "{stdout}"
        );
    }

    let output = bulksurf().args(["exponents", "--d", "3"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1), "missing --p must be usage error");
}

#[test]
fn usage_errors_exit_1() {
    let output = bulksurf().args(["frobnicate"]).output().unwrap();
    assert_eq!(output.status.code(), Some(1));
    let output = bulksurf().output().unwrap();
    assert_eq!(output.status.code(), Some(1));
}
