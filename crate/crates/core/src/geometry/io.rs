//! OFF / ASCII PLY meshes and CSV polylines.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use super::mesh::{Mesh, Polyline};
use crate::error::{Error, Result};
use crate::Vec3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    PlyAscii,
}

impl MeshFormat {
    /// Guesses the format from the file extension (`.off` or `.ply`).
    pub fn from_path(path: &Path) -> Option<Self> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "off" => Some(MeshFormat::Off),
            "ply" => Some(MeshFormat::PlyAscii),
            _ => None,
        }
    }
}

impl FromStr for MeshFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "off" => Ok(MeshFormat::Off),
            "ply" | "ply-ascii" => Ok(MeshFormat::PlyAscii),
            other => Err(Error::InvalidConfig(format!(
                "unknown mesh format {other:?}"
            ))),
        }
    }
}

/// Non-empty, non-comment lines with their 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

fn parse_num<T: FromStr>(path: &Path, line: usize, tok: Option<&str>, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| Error::parse(path, line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| Error::parse(path, line, format!("cannot parse {what} from {tok:?}")))
}

fn parse_face(path: &Path, line: usize, text: &str, n_vertices: usize) -> Result<[usize; 3]> {
    let mut toks = text.split_whitespace();
    let count: usize = parse_num(path, line, toks.next(), "face vertex count")?;
    if count != 3 {
        return Err(Error::parse(
            path,
            line,
            format!("face has {count} vertices, only triangles are supported"),
        ));
    }
    let mut face = [0usize; 3];
    for slot in face.iter_mut() {
        let idx: usize = parse_num(path, line, toks.next(), "face index")?;
        if idx >= n_vertices {
            return Err(Error::parse(
                path,
                line,
                format!("face index {idx} out of range ({n_vertices} vertices)"),
            ));
        }
        *slot = idx;
    }
    if face[0] == face[1] || face[1] == face[2] || face[0] == face[2] {
        return Err(Error::parse(
            path,
            line,
            format!("face repeats a vertex: {face:?}"),
        ));
    }
    Ok(face)
}

fn parse_off(path: &Path, text: &str) -> Result<Mesh> {
    let mut lines = content_lines(text);
    let (hline, header) = lines
        .next()
        .ok_or_else(|| Error::parse(path, 1, "empty file"))?;
    let mut rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| Error::parse(path, hline, "missing OFF header"))?
        .trim()
        .to_string();
    let mut count_line = hline;
    if rest.is_empty() {
        let (l, c) = lines
            .next()
            .ok_or_else(|| Error::parse(path, hline, "missing element counts"))?;
        rest = c.to_string();
        count_line = l;
    }
    let mut counts = rest.split_whitespace();
    let nv: usize = parse_num(path, count_line, counts.next(), "vertex count")?;
    let nf: usize = parse_num(path, count_line, counts.next(), "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for k in 0..nv {
        let (l, text) = lines.next().ok_or_else(|| {
            Error::parse(
                path,
                count_line,
                format!("expected {nv} vertices, found {k}"),
            )
        })?;
        let mut toks = text.split_whitespace();
        let mut v = Vec3::zeros();
        for c in 0..3 {
            v[c] = parse_num(path, l, toks.next(), "coordinate")?;
        }
        if !v.iter().all(|x| x.is_finite()) {
            return Err(Error::parse(path, l, "non-finite coordinate"));
        }
        vertices.push(v);
    }
    let mut faces = Vec::with_capacity(nf);
    for k in 0..nf {
        let (l, text) = lines.next().ok_or_else(|| {
            Error::parse(path, count_line, format!("expected {nf} faces, found {k}"))
        })?;
        faces.push(parse_face(path, l, text, nv)?);
    }
    Mesh::new(vertices, faces)
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<String>,
    line: usize,
}

fn parse_ply(path: &Path, text: &str) -> Result<Mesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(Error::parse(path, 1, "missing ply magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    loop {
        let (l, line) = lines
            .next()
            .ok_or_else(|| Error::parse(path, 1, "header has no end_header"))?;
        let mut toks = line.split_whitespace();
        match toks.next() {
            Some("format") => {
                if toks.next() != Some("ascii") {
                    return Err(Error::parse(path, l, "only ascii PLY is supported"));
                }
            }
            Some("element") => {
                let name = toks.next().unwrap_or("").to_string();
                let count = parse_num(path, l, toks.next(), "element count")?;
                elements.push(PlyElement {
                    name,
                    count,
                    properties: Vec::new(),
                    line: l,
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| Error::parse(path, l, "property before any element"))?;
                let name = line.split_whitespace().last().unwrap_or("").to_string();
                el.properties.push(name);
            }
            Some("end_header") => break,
            Some("comment") | Some("obj_info") | None => {}
            Some(other) => {
                return Err(Error::parse(
                    path,
                    l,
                    format!("unexpected header keyword {other:?}"),
                ))
            }
        }
    }

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut body = lines.filter(|(_, l)| !l.is_empty());
    for el in &elements {
        match el.name.as_str() {
            "vertex" => {
                let idx: Vec<usize> = ["x", "y", "z"]
                    .iter()
                    .map(|axis| {
                        el.properties.iter().position(|p| p == axis).ok_or_else(|| {
                            Error::parse(path, el.line, format!("vertex has no {axis} property"))
                        })
                    })
                    .collect::<Result<_>>()?;
                for k in 0..el.count {
                    let (l, text) = body.next().ok_or_else(|| {
                        Error::parse(
                            path,
                            el.line,
                            format!("expected {} vertices, found {k}", el.count),
                        )
                    })?;
                    let vals: Vec<f64> = text
                        .split_whitespace()
                        .map(|t| parse_num(path, l, Some(t), "vertex property"))
                        .collect::<Result<_>>()?;
                    if vals.len() < el.properties.len() {
                        return Err(Error::parse(path, l, "too few vertex properties"));
                    }
                    let v = Vec3::new(vals[idx[0]], vals[idx[1]], vals[idx[2]]);
                    if !v.iter().all(|x| x.is_finite()) {
                        return Err(Error::parse(path, l, "non-finite coordinate"));
                    }
                    vertices.push(v);
                }
            }
            "face" => {
                for k in 0..el.count {
                    let (l, text) = body.next().ok_or_else(|| {
                        Error::parse(
                            path,
                            el.line,
                            format!("expected {} faces, found {k}", el.count),
                        )
                    })?;
                    faces.push(parse_face(path, l, text, vertices.len())?);
                }
            }
            _ => {
                for _ in 0..el.count {
                    body.next();
                }
            }
        }
    }
    Mesh::new(vertices, faces)
}

/// Reads a triangle mesh. Vertex order is preserved from the file.
pub fn load_mesh(path: impl AsRef<Path>, format: MeshFormat) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Off => parse_off(path, &text),
        MeshFormat::PlyAscii => parse_ply(path, &text),
    }
}

/// Serializes a mesh. Coordinates use the shortest representation that parses
/// back to the same `f64`, so a load after save is lossless.
pub fn mesh_to_string(mesh: &Mesh, format: MeshFormat) -> String {
    let mut out = String::new();
    match format {
        MeshFormat::Off => {
            let _ = writeln!(out, "OFF\n{} {} 0", mesh.num_vertices(), mesh.num_faces());
        }
        MeshFormat::PlyAscii => {
            let _ = write!(
                out,
                "ply\nformat ascii 1.0\nelement vertex {}\nproperty double x\nproperty double y\nproperty double z\nelement face {}\nproperty list uchar int vertex_indices\nend_header\n",
                mesh.num_vertices(),
                mesh.num_faces()
            );
        }
    }
    for v in mesh.vertices() {
        let _ = writeln!(out, "{} {} {}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>, format: MeshFormat) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, mesh_to_string(mesh, format)).map_err(|e| Error::io(path, e))
}

/// Reads `x,y,z,segment_id` rows. Consecutive rows sharing a `segment_id` are
/// joined into a chain; a new id starts a new chain. A header row is skipped
/// if its first field is not numeric.
pub fn load_polyline_csv(path: impl AsRef<Path>) -> Result<Polyline> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
    let mut vertices = Vec::new();
    let mut segments = Vec::new();
    let mut last_id: Option<String> = None;
    for (row, rec) in reader.records().enumerate() {
        let line = row + 1;
        let rec = rec.map_err(|e| Error::Csv {
            path: path.into(),
            source: e,
        })?;
        if row == 0 && rec.get(0).is_some_and(|f| f.parse::<f64>().is_err()) {
            continue;
        }
        if rec.len() != 4 {
            return Err(Error::parse(
                path,
                line,
                format!("expected 4 fields, found {}", rec.len()),
            ));
        }
        let mut v = Vec3::zeros();
        for c in 0..3 {
            v[c] = parse_num(path, line, rec.get(c), "coordinate")?;
        }
        let id = rec[3].to_string();
        if last_id.as_deref() == Some(id.as_str()) {
            segments.push([vertices.len() - 1, vertices.len()]);
        }
        vertices.push(v);
        last_id = Some(id);
    }
    Polyline::new(vertices, segments)
}

/// Writes a polyline as `x,y,z,segment_id`, numbering maximal chains.
pub fn save_polyline_csv(polyline: &Polyline, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("x,y,z,segment_id\n");
    let v = polyline.vertices();
    let mut chain = 0usize;
    let mut prev_end: Option<usize> = None;
    for &[a, b] in polyline.segments() {
        if prev_end != Some(a) {
            if prev_end.is_some() {
                chain += 1;
            }
            let _ = writeln!(out, "{},{},{},{}", v[a].x, v[a].y, v[a].z, chain);
        }
        let _ = writeln!(out, "{},{},{},{}", v[b].x, v[b].y, v[b].z, chain);
        prev_end = Some(b);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
