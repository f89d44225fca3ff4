//! Wavefront OBJ and legacy VTK (ASCII POLYDATA) triangle meshes, and the
//! plain-text feature file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use odeco_core::mesh::SurfaceMesh;
use odeco_core::nalgebra::Vector3;

use crate::OdecoError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Vtk,
}

impl FromStr for MeshFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "vtk" => Ok(MeshFormat::Vtk),
            other => Err(format!("unknown mesh format `{other}` (expected obj or vtk)")),
        }
    }
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<Self> {
        path.extension()?.to_str()?.parse().ok()
    }
}

/// Raw geometry before validation.
#[derive(Debug, Clone, PartialEq)]
pub struct RawMesh {
    pub vertices: Vec<Vector3<f64>>,
    pub triangles: Vec<[usize; 3]>,
}

fn parse_err(path: &Path, line: usize, message: impl Into<String>) -> OdecoError {
    OdecoError::Parse { path: path.to_path_buf(), line, message: message.into() }
}

fn number<T: FromStr>(path: &Path, line: usize, tok: Option<&str>, what: &str) -> Result<T, OdecoError> {
    let tok = tok.ok_or_else(|| parse_err(path, line, format!("missing {what}")))?;
    tok.parse().map_err(|_| parse_err(path, line, format!("invalid {what} `{tok}`")))
}

/// Parses OBJ text. Only `v` and triangular `f` records matter; texture and
/// normal indices (`f 1/2/3 ...`) and negative (relative) indices are accepted.
pub fn parse_obj(text: &str, path: &Path) -> Result<RawMesh, OdecoError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("");
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = number(path, ln, toks.next(), "x coordinate")?;
                let y = number(path, ln, toks.next(), "y coordinate")?;
                let z = number(path, ln, toks.next(), "z coordinate")?;
                vertices.push(Vector3::new(x, y, z));
            }
            Some("f") => {
                let refs: Vec<&str> = toks.collect();
                if refs.len() != 3 {
                    return Err(parse_err(path, ln, format!("face with {} vertices; only triangles are supported", refs.len())));
                }
                let mut tri = [0usize; 3];
                for (k, r) in refs.iter().enumerate() {
                    let idx: i64 = number(path, ln, r.split('/').next(), "vertex index")?;
                    let resolved = if idx > 0 {
                        idx - 1
                    } else if idx < 0 {
                        vertices.len() as i64 + idx
                    } else {
                        return Err(parse_err(path, ln, "vertex index 0 is invalid in OBJ"));
                    };
                    if resolved < 0 {
                        return Err(parse_err(path, ln, format!("vertex index {idx} out of range")));
                    }
                    tri[k] = resolved as usize;
                }
                triangles.push(tri);
            }
            _ => {}
        }
    }
    Ok(RawMesh { vertices, triangles })
}

/// Parses legacy ASCII VTK with `DATASET POLYDATA`, `POINTS` and `POLYGONS` (triangles).
pub fn parse_vtk(text: &str, path: &Path) -> Result<RawMesh, OdecoError> {
    let mut lines = text.lines().enumerate().peekable();
    let header = lines.next().map(|l| l.1).unwrap_or("");
    if !header.starts_with("# vtk DataFile") {
        return Err(parse_err(path, 1, "missing `# vtk DataFile Version` header"));
    }
    lines.next(); // title
    match lines.next() {
        Some((_, l)) if l.trim().eq_ignore_ascii_case("ASCII") => {}
        _ => return Err(parse_err(path, 3, "only ASCII VTK files are supported")),
    }
    // Remaining content as a token stream with line numbers.
    let tokens: Vec<(usize, &str)> = lines.flat_map(|(i, l)| l.split_whitespace().map(move |t| (i + 1, t))).collect();
    let mut pos = 0;
    let last_line = text.lines().count();
    let mut next = |what: &str| -> Result<(usize, &str), OdecoError> {
        let t = tokens.get(pos).copied().ok_or_else(|| parse_err(path, last_line, format!("unexpected end of file, expected {what}")))?;
        pos += 1;
        Ok(t)
    };
    let (ln, kw) = next("DATASET")?;
    let (_, kind) = next("dataset type")?;
    if !kw.eq_ignore_ascii_case("DATASET") || !kind.eq_ignore_ascii_case("POLYDATA") {
        return Err(parse_err(path, ln, "expected `DATASET POLYDATA`"));
    }
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut seen_points = false;
    while let Ok((ln, kw)) = next("section") {
        match kw.to_ascii_uppercase().as_str() {
            "POINTS" => {
                let (l, n) = next("point count")?;
                let n: usize = number(path, l, Some(n), "point count")?;
                next("point type")?;
                for _ in 0..n {
                    let mut c = [0.0; 3];
                    for x in c.iter_mut() {
                        let (l, t) = next("coordinate")?;
                        *x = number(path, l, Some(t), "coordinate")?;
                    }
                    vertices.push(Vector3::new(c[0], c[1], c[2]));
                }
                seen_points = true;
            }
            "POLYGONS" => {
                let (l, n) = next("polygon count")?;
                let n: usize = number(path, l, Some(n), "polygon count")?;
                next("polygon list size")?;
                for _ in 0..n {
                    let (l, k) = next("polygon size")?;
                    let k: usize = number(path, l, Some(k), "polygon size")?;
                    if k != 3 {
                        return Err(parse_err(path, l, format!("polygon with {k} vertices; only triangles are supported")));
                    }
                    let mut tri = [0usize; 3];
                    for v in tri.iter_mut() {
                        let (l, t) = next("vertex index")?;
                        *v = number(path, l, Some(t), "vertex index")?;
                    }
                    triangles.push(tri);
                }
            }
            "POINT_DATA" | "CELL_DATA" | "METADATA" => break,
            other => return Err(parse_err(path, ln, format!("unsupported section `{other}`"))),
        }
    }
    if !seen_points {
        return Err(parse_err(path, last_line, "no POINTS section"));
    }
    Ok(RawMesh { vertices, triangles })
}

pub fn read_text(path: &Path) -> Result<String, OdecoError> {
    fs::read_to_string(path).map_err(|e| OdecoError::io(path, e))
}

/// Loads and validates a mesh; the format is taken from the extension when not given.
pub fn load_mesh(path: &Path, format: Option<MeshFormat>) -> Result<SurfaceMesh, OdecoError> {
    let format = format
        .or_else(|| MeshFormat::from_path(path))
        .ok_or_else(|| OdecoError::Config(format!("cannot infer mesh format of {}; pass --format", path.display())))?;
    let text = read_text(path)?;
    let raw = match format {
        MeshFormat::Obj => parse_obj(&text, path)?,
        MeshFormat::Vtk => parse_vtk(&text, path)?,
    };
    SurfaceMesh::new(raw.vertices, raw.triangles).map_err(|error| OdecoError::Mesh { path: path.to_path_buf(), error })
}

/// Contents of a feature file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct FeatureFile {
    pub edges: Vec<[usize; 2]>,
    pub corners: Vec<usize>,
    pub sizing: Vec<(usize, f64)>,
}

/// Lines `e v0 v1`, `c v` and `s v value`; `#` starts a comment.
pub fn parse_features(text: &str, path: &Path) -> Result<FeatureFile, OdecoError> {
    let mut f = FeatureFile::default();
    for (i, line) in text.lines().enumerate() {
        let ln = i + 1;
        let line = line.split('#').next().unwrap_or("");
        let mut toks = line.split_whitespace();
        match toks.next() {
            None => continue,
            Some("e") => {
                let a = number(path, ln, toks.next(), "vertex index")?;
                let b = number(path, ln, toks.next(), "vertex index")?;
                f.edges.push([a, b]);
            }
            Some("c") => f.corners.push(number(path, ln, toks.next(), "vertex index")?),
            Some("s") => {
                let v = number(path, ln, toks.next(), "vertex index")?;
                let l = number(path, ln, toks.next(), "sizing value")?;
                f.sizing.push((v, l));
            }
            Some(other) => return Err(parse_err(path, ln, format!("unknown record `{other}`"))),
        }
        if let Some(extra) = toks.next() {
            return Err(parse_err(path, ln, format!("unexpected token `{extra}`")));
        }
    }
    Ok(f)
}

/// Applies a feature file; boundary edges stay features regardless.
pub fn apply_features(mesh: &mut SurfaceMesh, f: &FeatureFile, path: &Path) -> Result<(), OdecoError> {
    mesh.set_features(&f.edges, &f.corners, &f.sizing)
        .map_err(|error| OdecoError::Mesh { path: PathBuf::from(path), error })
}

pub fn load_features(mesh: &mut SurfaceMesh, path: &Path) -> Result<(), OdecoError> {
    let f = parse_features(&read_text(path)?, path)?;
    apply_features(mesh, &f, path)
}

/// OBJ text of a mesh (used for fixtures and round trips).
pub fn write_obj(mesh: &SurfaceMesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in &mesh.triangles {
        s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    s
}
