use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_bloch-nitsche"));
    c.env_remove("BLOCH_NITSCHE_THREADS");
    c
}

fn run(args: &[&str], out: &Path) -> Output {
    bin().args(args).arg("--out").arg(out).output().unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn minimal_config_runs_bulk_bands() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "J = 2\nN = 8\nsamples_per_leg = 2\nnev = 3\n").unwrap();
    let o = run(&["bulk-bands", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = std::fs::read_to_string(dir.path().join("bands.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 7);
    assert!(dir.path().join("bands.svg").exists());
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "J = -1\nN = 8\nnev = 2\nsamples_per_leg = 1\n").unwrap();
    let o = run(
        &["bulk-bands", "--config", cfg.to_str().unwrap(), "--J", "2"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
}

#[test]
fn non_elliptic_material_exits_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["bulk-bands", "--J", "-1", "--N", "8"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("`J`"), "{}", stderr(&o));
}

#[test]
fn unknown_key_and_bad_range_exit_with_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "J = 2\nfrobnicate = 1\n").unwrap();
    let o = run(&["bulk-bands", "--config", cfg.to_str().unwrap()], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("frobnicate"));
    let o = run(&["bulk-bands", "--lambda-hat", "-1"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lambda_hat"));
    let o = run(&["bulk-bands", "--config", "/nonexistent/x.cfg"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn check_reports_assumption_violations() {
    let dir = tempfile::tempdir().unwrap();
    let ok = run(&["check", "--N", "8", "--L", "2"], dir.path());
    assert_eq!(ok.status.code(), Some(0), "{}", stderr(&ok));
    let bad = run(&["check", "--N", "16", "--L", "2"], dir.path());
    assert_eq!(bad.status.code(), Some(3));
    assert!(stderr(&bad).contains("interface assumption"));
}

#[test]
fn sweeps_warn_but_proceed_on_the_relaxed_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["bulk-bands", "--N", "16", "--nev", "2", "--set", "samples_per_leg=1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(stderr(&o).contains("warning"));
}

#[test]
fn thread_count_does_not_change_results() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let args = [
        "bulk-bands",
        "--N",
        "8",
        "--nev",
        "3",
        "--set",
        "samples_per_leg=2",
        "--gamma",
        "0.1",
    ];
    let oa = bin()
        .args(args)
        .arg("--out")
        .arg(a.path())
        .env("BLOCH_NITSCHE_THREADS", "1")
        .output()
        .unwrap();
    let ob = run(&[&args[..], &["--threads", "4"]].concat(), b.path());
    assert_eq!(oa.status.code(), Some(0), "{}", stderr(&oa));
    assert_eq!(ob.status.code(), Some(0), "{}", stderr(&ob));
    let ca = std::fs::read(a.path().join("bands.csv")).unwrap();
    let cb = std::fs::read(b.path().join("bands.csv")).unwrap();
    assert_eq!(ca, cb);
    let bad = bin()
        .args(args)
        .arg("--out")
        .arg(a.path())
        .env("BLOCH_NITSCHE_THREADS", "0")
        .output()
        .unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn edge_bands_writes_tables_and_figure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "edge-bands",
            "--N",
            "8",
            "--L",
            "3",
            "--kpar-samples",
            "3",
            "--nev",
            "8",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let bands = std::fs::read_to_string(dir.path().join("edge_bands.csv")).unwrap();
    assert!(bands.starts_with("sample,kpar,label,E1,"));
    assert_eq!(bands.lines().count(), 4);
    let modes = std::fs::read_to_string(dir.path().join("edge_modes.csv")).unwrap();
    assert_eq!(modes.lines().count(), 1 + 3 * 8);
    let env = std::fs::read_to_string(dir.path().join("envelope.csv")).unwrap();
    assert_eq!(env.lines().count(), 1 + 3 * 4);
    let svg = std::fs::read_to_string(dir.path().join("edge_bands.svg")).unwrap();
    assert_eq!(svg.matches("class=\"envelope\"").count(), 4);
    assert_eq!(svg.matches("class=\"band\"").count(), 8);
}

#[test]
fn modes_dumps_selected_fields() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "modes",
            "--N",
            "8",
            "--L",
            "3",
            "--nev",
            "6",
            "--set",
            "dump_modes=1,4",
            "--set",
            "grid_res=16",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for m in ["mode_001.csv", "mode_004.csv"] {
        let text = std::fs::read_to_string(dir.path().join(m)).unwrap();
        assert_eq!(text.lines().count(), 1 + 16 * 16, "{m}");
    }
    let summary = std::fs::read_to_string(dir.path().join("modes.csv")).unwrap();
    assert_eq!(summary.lines().count(), 1 + 6);
    let o = run(
        &["modes", "--N", "8", "--L", "3", "--nev", "6", "--set", "dump_modes=9"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn convergence_and_spectral_runs() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["convergence", "--nev", "2", "--set", "n_list=4,8,12", "--set", "k=M"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let t = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(t.lines().count(), 1 + 3 + 1);
    assert!(String::from_utf8_lossy(&o.stdout).contains("slopes:"));
    let o = run(
        &[
            "spectral-bands",
            "--nev",
            "3",
            "--set",
            "spectral_m=4",
            "--kpath",
            "dual-boundary",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert!(dir.path().join("spectral_bands.csv").exists());
}

#[test]
fn impossible_eigen_request_exits_with_solver_failure() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &["bulk-bands", "--N", "4", "--nev", "5000", "--set", "samples_per_leg=1"],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(4));
    assert!(stderr(&o).contains("solver failure"));
}
