use std::path::Path;
use std::process::Command;

fn chlab() -> Command {
    Command::new(env!("CARGO_BIN_EXE_chlab"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn selftest_and_verify_n0_pass() {
    let out = chlab().arg("selftest").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.lines().all(|l| l.starts_with("CHECK ") && l.contains(" PASS ")));
    let out = chlab().arg("verify-n0").output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("PASS"));
}

#[test]
fn run_writes_summary_and_is_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "wave.cfg",
        "kind = perturbed_peakon\nc = 1\ntheta = 0.25\nperturbation = 0.05\ndx = 0.05\nT = 3\nseed = 4\n",
    );
    let pair = write(tmp.path(), "pair.cfg", "kind = eigen_speed_check\np = 1, 2\nq = 5, 0\nT = 30\n");
    for out in ["a", "b"] {
        let status = chlab()
            .args(["run", "--quiet", "--jobs", "2", "--out"])
            .arg(tmp.path().join(out))
            .arg(&cfg)
            .arg(&pair)
            .status()
            .unwrap();
        assert!(status.code().is_some());
    }
    let summary = std::fs::read_to_string(tmp.path().join("a/wave/summary.txt")).unwrap();
    assert!(summary.contains("# kind = perturbed_peakon"));
    assert!(summary.contains("# n0 = "));
    assert!(summary.lines().any(|l| l.starts_with("CHECK cone_violation PASS")));
    for name in ["summary.txt", "modulation.csv", "invariants.csv", "halfline.csv", "trajectory/index.csv"] {
        let a = std::fs::read(tmp.path().join("a/wave").join(name)).unwrap();
        let b = std::fs::read(tmp.path().join("b/wave").join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between runs");
        assert!(a.starts_with(b"# kind = perturbed_peakon"), "{name} lacks the config header");
    }
    let speeds = std::fs::read_to_string(tmp.path().join("a/pair/speeds.csv")).unwrap();
    assert!(speeds.contains("i,measured,eigenvalue"));
}

#[test]
fn bad_config_is_an_error_with_its_line() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(tmp.path(), "bad.cfg", "kind = single_peakon\nc = 1\nbogus = 2\n");
    let out = chlab()
        .args(["run", "--out"])
        .arg(tmp.path().join("out"))
        .arg(&cfg)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");
}

#[test]
fn audit_reads_a_trajectory_dir() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write(
        tmp.path(),
        "wave.cfg",
        "kind = single_peakon\nc = 1\ndx = 0.05\nT = 4\nn = 0\nsnapshot_stride = 4\n",
    );
    let status = chlab()
        .args(["run", "--quiet", "--out"])
        .arg(tmp.path().join("out"))
        .arg(&cfg)
        .status()
        .unwrap();
    assert!(status.code().is_some());
    let out = chlab()
        .args(["audit", "--out"])
        .arg(tmp.path().join("audit"))
        .arg(tmp.path().join("out/wave/trajectory"))
        .output()
        .unwrap();
    assert!(out.status.code() == Some(0) || out.status.code() == Some(1), "{out:?}");
    let summary = std::fs::read_to_string(tmp.path().join("audit/audit/summary.txt")).unwrap();
    assert!(summary.contains("CHECK monotone_right_R5_gamma0 "));
    assert!(tmp.path().join("audit/audit/audit_R10_gamma0.csv").exists());
}
