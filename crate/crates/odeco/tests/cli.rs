use std::path::Path;
use std::process::Command;

use odeco::core::mesh::primitives::{grid, unit_square};
use odeco::export::{self, read_field};
use odeco::io::write_obj;

fn odeco() -> Command {
    Command::new(env!("CARGO_BIN_EXE_odeco"))
}

fn write_square(dir: &Path, n: usize) -> std::path::PathBuf {
    let path = dir.join("square.obj");
    std::fs::write(&path, write_obj(&unit_square(n))).unwrap();
    path
}

fn metrics(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join(export::METRICS_FILE)).unwrap()).unwrap()
}

#[test]
fn run_on_flat_square() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_square(dir.path(), 6);
    let out = dir.path().join("out");
    let status = odeco()
        .args(["run", "--mode", "sizing-only", "--threads", "1", "--mesh"])
        .arg(&mesh)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let m = metrics(&out);
    assert_eq!(m["field"]["n3"], 0);
    assert_eq!(m["field"]["n5"], 0);
    assert!(m["field"]["curl_residual"]["mean"].as_f64().unwrap() < 1e-8);
    assert_eq!(std::fs::read_to_string(out.join(export::SINGULARITIES_FILE)).unwrap(), "");
    let frames = std::fs::read_to_string(out.join(export::FRAMES_FILE)).unwrap();
    assert_eq!(frames.lines().count(), 72);
    assert!(frames.lines().all(|l| l.split(' ').count() == 7));
    let csv = std::fs::read_to_string(out.join(export::ITERATIONS_FILE)).unwrap();
    assert_eq!(csv.lines().next().unwrap(), export::ITERATIONS_HEADER);

    // Exported coefficients load back bit for bit and reproduce the metrics.
    let state = read_field(&out.join(export::FIELD_FILE)).unwrap();
    assert_eq!(export::field_bytes(&state), std::fs::read(out.join(export::FIELD_FILE)).unwrap());
    let header: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join(export::FIELD_HEADER_FILE)).unwrap()).unwrap();
    assert_eq!(header["vertex_count"], 49);
    assert_eq!(header["basis"], "real-SH l=0,2,4");

    let again = dir.path().join("again");
    let status = odeco().arg("metrics").arg("--mesh").arg(&mesh).arg("--field").arg(out.join(export::FIELD_FILE)).arg("--out").arg(&again).status().unwrap();
    assert_eq!(status.code(), Some(0));
    assert_eq!(metrics(&again)["field"], m["field"]);
    assert_eq!(std::fs::read(again.join(export::FRAMES_FILE)).unwrap(), frames.as_bytes());
}

#[test]
fn two_triangle_mesh_exports_two_frames() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = write_square(dir.path(), 1);
    let status = odeco().arg("run").arg("--mesh").arg(&mesh).env("ODECO_OUT_DIR", dir.path().join("env_out")).arg("--threads=1").status().unwrap();
    assert_eq!(status.code(), Some(0));
    let frames = std::fs::read_to_string(dir.path().join("env_out").join(export::FRAMES_FILE)).unwrap();
    assert_eq!(frames.lines().count(), 2);
}

#[test]
fn nonmanifold_input_fails_with_edge_list() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("broken_nonmanifold.obj");
    std::fs::write(&path, "v 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 -1 0\nv 0 0 1\nf 1 2 3\nf 2 1 4\nf 1 2 5\n").unwrap();
    let out = odeco().arg("run").arg("--mesh").arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("broken_nonmanifold.obj") && err.contains("[0, 1]"), "{err}");
}

#[test]
fn config_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    write_square(dir.path(), 3);
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "mesh = square.obj\nmode = angle\nthreads = 1\nout = from_file\nmax_iterations = 3\n").unwrap();
    let status = odeco().arg("init-only").arg("--config").arg(&cfg).status().unwrap();
    assert_eq!(status.code(), Some(0));
    let m = metrics(&dir.path().join("from_file"));
    assert_eq!(m["mode"], "angle");
    assert!(m["main"].is_null());
    let status = odeco().arg("run").arg("--config").arg(&cfg).arg("--mode").arg("area").arg("--out").arg(dir.path().join("flag")).status().unwrap();
    assert!(matches!(status.code(), Some(0) | Some(2)));
    assert_eq!(metrics(&dir.path().join("flag"))["weights"]["kappa_odeco"], 10.0);
}

#[test]
fn max_iterations_exit_code() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("strip.obj");
    std::fs::write(&path, write_obj(&grid(8, 2, 4.0, 1.0))).unwrap();
    let features = dir.path().join("strip.features");
    std::fs::write(&features, "s 8 2\ns 17 2\ns 26 2\n").unwrap();
    let out = odeco()
        .arg("run")
        .arg("--mesh")
        .arg(&path)
        .arg("--features")
        .arg(&features)
        .args(["--max-iterations", "2", "--threads", "1", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn check_subcommand_passes_on_valid_mesh() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bumpy.obj");
    let g = grid(4, 4, 1.0, 1.0);
    let mut text = String::new();
    for v in &g.vertices {
        text.push_str(&format!("v {} {} {}\n", v.x, v.y, 0.1 * (3.0 * v.x).sin() * v.y));
    }
    for t in &g.triangles {
        text.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    std::fs::write(&path, text).unwrap();
    let out = odeco().arg("check").arg("--mesh").arg(&path).args(["--mode", "area"]).output().unwrap();
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(out.status.code(), Some(0), "{stdout}");
    assert_eq!(stdout.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{stdout}");
}
