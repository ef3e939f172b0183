//! Contour-data CSV files, field comparison and record diffs.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use nalgebra::Point2;
use serde::Serialize;
use serde_json::Value;

use crate::assembly::{interior_mass, Field, FieldError};
use crate::mesh::Mesh;

/// Writes `<stem>_nodes.csv` (`node,x,y,u`) and `<stem>_triangles.csv`
/// (`triangle,a,b,c`). Floats use shortest round-trip formatting, so the
/// files read back bit-exactly.
pub fn emit_contour_data(mesh: &Mesh, u: &Field, stem: &Path) -> io::Result<(PathBuf, PathBuf)> {
    if !u.belongs_to(mesh) {
        return Err(io::Error::new(io::ErrorKind::InvalidInput, FieldError::MeshMismatch));
    }
    let nodes_path = with_suffix(stem, "_nodes.csv");
    let tris_path = with_suffix(stem, "_triangles.csv");
    let mut w = BufWriter::new(fs::File::create(&nodes_path)?);
    writeln!(w, "node,x,y,u")?;
    for (i, (p, v)) in mesh.nodes().iter().zip(u.values()).enumerate() {
        writeln!(w, "{i},{:?},{:?},{:?}", p.x, p.y, v)?;
    }
    w.flush()?;
    let mut w = BufWriter::new(fs::File::create(&tris_path)?);
    writeln!(w, "triangle,a,b,c")?;
    for (t, [a, b, c]) in mesh.triangles().iter().enumerate() {
        writeln!(w, "{t},{a},{b},{c}")?;
    }
    w.flush()?;
    Ok((nodes_path, tris_path))
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ContourData {
    pub points: Vec<Point2<f64>>,
    pub values: Vec<f64>,
    pub triangles: Vec<[usize; 3]>,
}

fn bad(path: &Path, line: usize, msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, format!("{}:{line}: {msg}", path.display()))
}

fn rows(path: &Path, header: &str) -> io::Result<Vec<(usize, Vec<String>)>> {
    let text = fs::read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim() == header => {}
        _ => return Err(bad(path, 1, &format!("expected header `{header}`"))),
    }
    Ok(lines
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| (i + 1, l.split(',').map(|s| s.trim().to_string()).collect()))
        .collect())
}

/// Reads back the pair of files written by [`emit_contour_data`].
pub fn read_contour_data(nodes_path: &Path, triangles_path: &Path) -> io::Result<ContourData> {
    let mut data = ContourData {
        points: Vec::new(),
        values: Vec::new(),
        triangles: Vec::new(),
    };
    for (line, cols) in rows(nodes_path, "node,x,y,u")? {
        let nums: Vec<f64> = cols
            .iter()
            .skip(1)
            .map(|s| s.parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(nodes_path, line, "bad number"))?;
        if cols.len() != 4 || cols[0].parse::<usize>().ok() != Some(data.values.len()) {
            return Err(bad(nodes_path, line, "expected `node,x,y,u` with consecutive node ids"));
        }
        data.points.push(Point2::new(nums[0], nums[1]));
        data.values.push(nums[2]);
    }
    for (line, cols) in rows(triangles_path, "triangle,a,b,c")? {
        let ids: Vec<usize> = cols
            .iter()
            .map(|s| s.parse::<usize>())
            .collect::<Result<_, _>>()
            .map_err(|_| bad(triangles_path, line, "bad index"))?;
        if ids.len() != 4 || ids[1..].iter().any(|&i| i >= data.points.len()) {
            return Err(bad(triangles_path, line, "expected `triangle,a,b,c` with valid node ids"));
        }
        data.triangles.push([ids[1], ids[2], ids[3]]);
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FieldComparison {
    pub linf: f64,
    /// `sqrt(d^T M d)` with the P1 mass matrix.
    pub l2: f64,
    /// Distance between the nodes where the two fields peak.
    pub max_distance: f64,
}

pub fn compare_fields(mesh: &Mesh, u1: &Field, u2: &Field) -> Result<FieldComparison, FieldError> {
    if !u1.belongs_to(mesh) {
        return Err(FieldError::MeshMismatch);
    }
    u1.check_same_mesh(u2)?;
    let d: Vec<f64> = u1.values().iter().zip(u2.values()).map(|(a, b)| a - b).collect();
    let linf = d.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
    let l2 = interior_mass(mesh).bilinear(&d, &d).max(0.0).sqrt();
    let max_distance = (mesh.node(u1.argmax()) - mesh.node(u2.argmax())).norm();
    Ok(FieldComparison { linf, l2, max_distance })
}

/// Structural diff of two JSON documents. Numbers are compared with
/// `|a - b| <= atol + rtol * max(|a|, |b|)`; everything else exactly.
pub fn compare_records(a: &Value, b: &Value, rtol: f64, atol: f64) -> Vec<String> {
    let mut out = Vec::new();
    diff(a, b, "$", rtol, atol, &mut out);
    out
}

fn diff(a: &Value, b: &Value, path: &str, rtol: f64, atol: f64, out: &mut Vec<String>) {
    match (a, b) {
        (Value::Number(x), Value::Number(y)) => {
            let (x, y) = (x.as_f64().unwrap_or(f64::NAN), y.as_f64().unwrap_or(f64::NAN));
            if !((x - y).abs() <= atol + rtol * x.abs().max(y.abs())) {
                out.push(format!("{path}: {x} != {y}"));
            }
        }
        (Value::Array(x), Value::Array(y)) => {
            if x.len() != y.len() {
                out.push(format!("{path}: length {} != {}", x.len(), y.len()));
            }
            for (i, (p, q)) in x.iter().zip(y).enumerate() {
                diff(p, q, &format!("{path}[{i}]"), rtol, atol, out);
            }
        }
        (Value::Object(x), Value::Object(y)) => {
            for (k, p) in x {
                match y.get(k) {
                    Some(q) => diff(p, q, &format!("{path}.{k}"), rtol, atol, out),
                    None => out.push(format!("{path}.{k}: missing on the right")),
                }
            }
            for k in y.keys().filter(|k| !x.contains_key(*k)) {
                out.push(format!("{path}.{k}: missing on the left"));
            }
        }
        _ if a == b => {}
        _ => out.push(format!("{path}: {a} != {b}")),
    }
}
