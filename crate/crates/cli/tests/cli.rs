use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn mmt(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmt"))
        .args(args)
        .current_dir(cwd)
        .env_remove("MMT_OUT_DIR")
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn run_into(cfg: &Path, out: &Path) -> Output {
    let tmp = out.parent().unwrap();
    mmt(&["run", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()], tmp)
}

#[test]
fn exit_codes_follow_the_contract() {
    let tmp = tempfile::tempdir().unwrap();
    let pass = run_into(&fixture("pass.cfg"), &tmp.path().join("pass"));
    assert_eq!(code(&pass), 0, "{}", stderr(&pass));
    let tol = run_into(&fixture("tolerance.cfg"), &tmp.path().join("tol"));
    assert_eq!(code(&tol), 2, "{}", stderr(&tol));
    assert!(String::from_utf8_lossy(&tol.stdout).contains("FAIL"));
    let err = run_into(&fixture("error.cfg"), &tmp.path().join("err"));
    assert_eq!(code(&err), 1);
    assert!(stderr(&err).contains("stage `source` failed"), "{}", stderr(&err));
    assert!(!tmp.path().join("err").exists());
}

#[test]
fn tolerance_failure_still_writes_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("tol");
    run_into(&fixture("tolerance.cfg"), &out);
    let summary: String = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("\"all\": false"));
    assert!(out.join("samples.csv").exists());
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run_into(&fixture("pass.cfg"), &a);
    run_into(&fixture("pass.cfg"), &b);
    for f in ["samples.csv", "summary.json"] {
        let (x, y) = (fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap());
        assert!(!x.is_empty());
        assert_eq!(x, y, "{f} differs");
    }
}

#[test]
fn csv_header_is_exact() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    run_into(&fixture("pass.cfg"), &out);
    let csv = fs::read_to_string(out.join("samples.csv")).unwrap();
    let mut want = String::from("tau");
    for i in 0..6 {
        for j in 0..6 {
            want.push_str(&format!(",T_{i}_{j}"));
        }
    }
    want.push_str(",ode_residual,mapping_residual,symplectic_defect,norm_drift,frame_drift");
    assert_eq!(csv.lines().next().unwrap(), want);
    assert_eq!(csv.lines().count(), 1 + 2001);
}

#[test]
fn misspelled_key_is_rejected_with_line() {
    let tmp = tempfile::tempdir().unwrap();
    for verb in ["check", "run"] {
        let o = mmt(&[verb, fixture("misspelled.cfg").to_str().unwrap()], tmp.path());
        assert_eq!(code(&o), 1);
        let e = stderr(&o);
        assert!(e.contains("line 4") && e.contains("target.kurvature"), "{e}");
    }
    assert!(fs::read_dir(tmp.path()).unwrap().next().is_none());
}

#[test]
fn strict_rejections() {
    let tmp = tempfile::tempdir().unwrap();
    let base =
        "source.kind = constant-curvature\nsource.K = 1\ntarget.K = 1\nscenario.n = 2\nintegration.tau_max = 1\n";
    let cases = [
        ("duplicate", format!("{base}target.K = 2\n"), "target.K"),
        ("syntax", format!("{base}integration.h 0.1\n"), "line 6"),
        (
            "negative step",
            format!("{base}integration.h = -0.1\n"),
            "integration.h",
        ),
        (
            "unknown metric",
            format!("{base}source.metric = kerr\n"),
            "source.metric",
        ),
        ("bad format", format!("{base}output.formats = (csv, xml)\n"), "xml"),
        ("unused key", format!("{base}target.mass = 1\n"), "target.mass"),
        (
            "length",
            "source.kind = constant-curvature\nsource.K = (1, 2)\ntarget.K = (1, 2, 3)\nintegration.tau_max = 1\n"
                .into(),
            "target",
        ),
    ];
    for (label, text, needle) in cases {
        let p = tmp.path().join(format!("{}.cfg", label.replace(' ', "-")));
        fs::write(&p, text).unwrap();
        let o = mmt(&["check", p.to_str().unwrap()], tmp.path());
        assert_eq!(code(&o), 1, "{label}: accepted");
        assert!(stderr(&o).contains(needle), "{label}: {}", stderr(&o));
    }
}

#[test]
fn check_echoes_canonical_config() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mmt(&["check", fixture("pass.cfg").to_str().unwrap()], tmp.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.contains("scenario.n = 3\n"));
    assert!(text.contains("transfer.T0 = identity\n"));
    let p = tmp.path().join("echo.cfg");
    fs::write(&p, &text).unwrap();
    let again = mmt(&["check", p.to_str().unwrap()], tmp.path());
    assert_eq!(String::from_utf8(again.stdout).unwrap(), text);
}

#[test]
fn flags_override_config() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("o");
    let o = mmt(
        &[
            "run",
            fixture("pass.cfg").to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
            "--h",
            "0.002",
            "--tau-max",
            "0.5",
        ],
        tmp.path(),
    );
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("samples.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 251);
    let summary = fs::read_to_string(out.join("summary.json")).unwrap();
    assert!(summary.contains("integration.h = 0.002"));

    let bad = mmt(&["run", fixture("pass.cfg").to_str().unwrap(), "--h", "0"], tmp.path());
    assert_eq!(code(&bad), 1);
}

#[test]
fn output_directory_resolution() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = fixture("pass.cfg");
    let cfg = cfg.to_str().unwrap();

    assert_eq!(code(&mmt(&["run", cfg], tmp.path())), 0);
    assert!(tmp.path().join("out/fixture-pass/summary.json").exists());

    let root = tmp.path().join("root");
    let o = Command::new(env!("CARGO_BIN_EXE_mmt"))
        .args(["run", cfg])
        .current_dir(tmp.path())
        .env("MMT_OUT_DIR", &root)
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(root.join("fixture-pass/samples.csv").exists());

    let with_dir = tmp.path().join("with-dir.cfg");
    let text = fs::read_to_string(cfg).unwrap() + "output.dir = \"explicit\"\n";
    fs::write(&with_dir, text).unwrap();
    assert_eq!(code(&mmt(&["run", with_dir.to_str().unwrap()], tmp.path())), 0);
    assert!(tmp.path().join("explicit/samples.csv").exists());
}

#[test]
fn catalog_lists_templates() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mmt(&["catalog"], tmp.path());
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    for name in [
        "minkowski",
        "schwarzschild",
        "rindler",
        "jacobi-first-order",
        "schwarzschild-radial",
    ] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn missing_file_and_bad_usage() {
    let tmp = tempfile::tempdir().unwrap();
    let o = mmt(&["run", "does-not-exist.cfg"], tmp.path());
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("does-not-exist.cfg"));
    assert_eq!(code(&mmt(&["frobnicate"], tmp.path())), 1);
    assert_eq!(code(&mmt(&["run"], tmp.path())), 1);
    assert_eq!(code(&mmt(&["--help"], tmp.path())), 0);
}
