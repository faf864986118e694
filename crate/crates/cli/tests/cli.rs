use std::process::Command;

fn ncdn() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ncdn"))
}

#[test]
fn mesh_gen_writes_readable_meshes() {
    let dir = tempfile::tempdir().unwrap();
    let (s, m) = (dir.path().join("s.mesh"), dir.path().join("m.mesh"));
    let status = ncdn()
        .args(["mesh", "gen", "--ns", "6", "--nm", "9", "--out-slave"])
        .arg(&s)
        .arg("--out-master")
        .arg(&m)
        .status()
        .unwrap();
    assert!(status.success());
    let slave = dncouple_core::mesh::read_mesh(&std::fs::read_to_string(&s).unwrap()).unwrap();
    let master = dncouple_core::mesh::read_mesh(&std::fs::read_to_string(&m).unwrap()).unwrap();
    assert_eq!(slave.interface_nodes().unwrap().len(), 7);
    assert_eq!(master.interface_nodes().unwrap().len(), 10);
}

#[test]
fn converged_run_exits_zero_and_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncdn()
        .args(["run", "--case", "patch", "--ratio", "1:2", "--ns", "6,8", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("patch_1x2.csv")).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "n_slave,n_master,h,l2_error,h1_error,iterations,converged");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("6,12,"));
    assert!(dir.path().join("patch_1x2.txt").exists());
}

#[test]
fn repeated_runs_are_bitwise_identical() {
    let dir = tempfile::tempdir().unwrap();
    let mut csvs = vec![];
    for sub in ["a", "b"] {
        let out = ncdn()
            .args(["run", "--case", "dd", "--ns", "6,8,10", "--out"])
            .arg(dir.path().join(sub))
            .env("DNCOUPLE_THREADS", "1")
            .output()
            .unwrap();
        assert!(out.status.success());
        csvs.push(std::fs::read(dir.path().join(sub).join("dd_1x1.csv")).unwrap());
    }
    assert_eq!(csvs[0], csvs[1]);
}

#[test]
fn usage_errors_exit_one() {
    let out = ncdn().args(["run", "--case", "nope", "--out", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let out = ncdn().args(["run", "--case", "dd", "--ratio", "3", "--out", "x"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn bad_thread_count_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = ncdn()
        .args(["run", "--case", "patch", "--ns", "6", "--out"])
        .arg(dir.path())
        .env("DNCOUPLE_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}
