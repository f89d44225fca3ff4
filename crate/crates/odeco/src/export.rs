//! Output files. Text numbers use Rust's shortest round-trip formatting, so
//! identical runs produce identical bytes.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use odeco_core::energy::{FieldState, Terms};
use odeco_core::recovery::{FaceFrameField, MetricsReport};
use odeco_core::solver::{IterationRecord, SolveReport, StopReason};
use odeco_core::energy::Mode;
use odeco_core::tensor::DIM;
use serde_json::{json, Value};

use crate::OdecoError;

pub const FRAMES_FILE: &str = "frames.txt";
pub const FIELD_FILE: &str = "field.bin";
pub const FIELD_HEADER_FILE: &str = "field.json";
pub const SINGULARITIES_FILE: &str = "singularities.txt";
pub const METRICS_FILE: &str = "metrics.json";
pub const ITERATIONS_FILE: &str = "iterations.csv";

pub const BASIS_NAME: &str = "real-SH l=0,2,4";
pub const ORDERING: &str = "vertex-major, 15 coefficients per vertex: (l,m) = (0,0), (2,-2..2), (4,-4..4); little-endian f64";

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), OdecoError> {
    fs::write(path, bytes).map_err(|e| OdecoError::io(path, e))
}

/// One line `t ux uy uz vx vy vz` per triangle.
pub fn frames_text(f: &FaceFrameField) -> String {
    let mut s = String::new();
    for (t, face) in f.faces.iter().enumerate() {
        let (u, v) = (face.grad_u, face.grad_v);
        writeln!(s, "{t} {} {} {} {} {} {}", u.x, u.y, u.z, v.x, v.y, v.z).unwrap();
    }
    s
}

/// One line `v numerator` per nonzero index (denominator 4).
pub fn singularities_text(f: &FaceFrameField) -> String {
    f.singularities().iter().map(|(v, k)| format!("{v} {k}\n")).collect()
}

pub fn field_bytes(s: &FieldState) -> Vec<u8> {
    s.q.iter().flat_map(|x| x.to_le_bytes()).collect()
}

pub fn field_header(s: &FieldState) -> Value {
    json!({
        "vertex_count": s.vertex_count(),
        "coefficients_per_vertex": DIM,
        "basis": BASIS_NAME,
        "ordering": ORDERING,
    })
}

pub fn write_field(dir: &Path, s: &FieldState) -> Result<(), OdecoError> {
    write(&dir.join(FIELD_FILE), field_bytes(s))?;
    write(&dir.join(FIELD_HEADER_FILE), pretty(&field_header(s)))
}

/// Reads `field.bin`, checking its length against the sidecar when present.
pub fn read_field(path: &Path) -> Result<FieldState, OdecoError> {
    let bytes = fs::read(path).map_err(|e| OdecoError::io(path, e))?;
    let bad = |message: String| OdecoError::Parse { path: path.to_path_buf(), line: 0, message };
    if bytes.len() % (8 * DIM) != 0 {
        return Err(bad(format!("{} bytes is not a multiple of {}", bytes.len(), 8 * DIM)));
    }
    let q: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let n = q.len() / DIM;
    let header = path.with_file_name(FIELD_HEADER_FILE);
    if let Ok(text) = fs::read_to_string(&header) {
        let v: Value = serde_json::from_str(&text)
            .map_err(|e| OdecoError::Parse { path: header.clone(), line: e.line(), message: e.to_string() })?;
        if v["vertex_count"].as_u64() != Some(n as u64) {
            return Err(bad(format!("header says {} vertices, data has {n}", v["vertex_count"])));
        }
    }
    FieldState::from_vec(q, n).map_err(|e| bad(e.to_string()))
}

fn terms_json(t: &Terms) -> Value {
    json!({ "curl": t.curl, "odeco": t.odeco, "area": t.area, "angle": t.angle, "smooth": t.smooth })
}

fn stop_name(s: StopReason) -> &'static str {
    match s {
        StopReason::Converged => "converged",
        StopReason::MaxIterations => "max_iterations",
        StopReason::LineSearchFailure => "line_search_failure",
    }
}

/// Solve summary without wall times (kept out for reproducible exports).
pub fn report_json(r: &SolveReport) -> Value {
    json!({
        "iterations": r.iterations,
        "stop": stop_name(r.stop),
        "initial_energy": r.initial_energy,
        "energy": r.energy,
        "initial_terms": terms_json(&r.initial_terms),
        "terms": terms_json(&r.terms),
        "max_constraint_residual": r.max_residual,
        "warnings": {
            "regularized_normalization": r.diagnostics.regularized,
            "singular_normalization": r.diagnostics.singular,
            "zero_tensor": r.diagnostics.zero_tensor,
            "nonpositive_det": r.diagnostics.nonpositive_det,
        },
    })
}

pub fn metrics_json(m: &MetricsReport) -> Value {
    json!({
        "n3": m.n3,
        "n5": m.n5,
        "other_singularities": m.other_singularities,
        "singularities": m.singularities.iter().map(|(v, k)| json!([v, k])).collect::<Vec<_>>(),
        "interior_index_sum_quarters": m.interior_index_sum,
        "unindexed_vertices": m.unindexed_vertices,
        "degenerate_faces": m.degenerate_faces,
        "ambiguous_matchings": m.ambiguous_matchings,
        "skewness_proxy_deg": { "mean": m.skew_mean_deg, "max": m.skew_max_deg },
        "area_distortion_mean": m.area_distortion_mean,
        "angle_distortion_mean": m.angle_distortion_mean,
        "curl_residual": { "mean": m.curl_mean, "max": m.curl_max },
        "odeco_residual": { "median": m.odeco_residual_median, "max": m.odeco_residual_max },
    })
}

pub fn pretty(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("JSON values serialize");
    s.push('\n');
    s
}

pub const ITERATIONS_HEADER: &str = "stage,iteration,energy,curl,odeco,area,angle,step,wall_ms";

pub fn iterations_csv(records: &[IterationRecord]) -> String {
    let mut s = String::from(ITERATIONS_HEADER);
    s.push('\n');
    for r in records {
        let stage = match r.mode {
            Mode::Init => "init",
            Mode::Main => "main",
        };
        let t = &r.terms;
        writeln!(s, "{stage},{},{},{},{},{},{},{},{}", r.iteration, r.energy, t.curl, t.odeco, t.area, t.angle, r.step, r.wall_ms).unwrap();
    }
    s
}

/// Everything a run writes.
pub struct Outputs<'a> {
    pub frames: &'a FaceFrameField,
    pub state: &'a FieldState,
    pub metrics: Value,
    pub iterations: &'a [IterationRecord],
}

pub fn export_all(dir: &Path, o: &Outputs) -> Result<(), OdecoError> {
    fs::create_dir_all(dir).map_err(|e| OdecoError::io(dir, e))?;
    write(&dir.join(FRAMES_FILE), frames_text(o.frames))?;
    write_field(dir, o.state)?;
    write(&dir.join(SINGULARITIES_FILE), singularities_text(o.frames))?;
    write(&dir.join(METRICS_FILE), pretty(&o.metrics))?;
    write(&dir.join(ITERATIONS_FILE), iterations_csv(o.iterations))
}
