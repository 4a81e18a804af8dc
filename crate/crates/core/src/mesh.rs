//! Triangle meshes of the surface with boundary annotations, and OBJ export/import.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MaximalGraph;
use crate::lorentz::LorentzVec3;
use crate::tessellate::{centroid, EdgeLabel, Point2};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum VertexFlag {
    Interior,
    LightlikeBoundary,
    ShrinkingSingularity,
}

/// A lightlike boundary segment of the mesh, between two marked vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SegmentMarker {
    pub edge: usize,
    pub label: EdgeLabel,
    pub endpoints: [usize; 2],
    pub midpoint: LorentzVec3,
    /// Mesh vertices along the segment, in order.
    pub polyline: Vec<usize>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Mesh {
    pub vertices: Vec<LorentzVec3>,
    pub faces: Vec<[usize; 3]>,
    pub flags: Vec<VertexFlag>,
    pub segments: Vec<SegmentMarker>,
}

impl Mesh {
    pub fn validate(&self) -> Result<()> {
        let n = self.vertices.len();
        if self.flags.len() != n {
            return Err(Error::InvalidInput(format!(
                "{} flags for {n} vertices",
                self.flags.len()
            )));
        }
        for f in &self.faces {
            if f.iter().any(|&i| i >= n) {
                return Err(Error::InvalidInput(format!("face {f:?} out of range")));
            }
        }
        for s in &self.segments {
            for w in s.polyline.windows(2) {
                let e = self.vertices[w[1]] - self.vertices[w[0]];
                if !e.is_lightlike() {
                    return Err(Error::InvalidInput(format!("segment {} is not lightlike", s.edge)));
                }
            }
        }
        Ok(())
    }

    /// Longest edge of any face.
    pub fn max_edge_length(&self) -> f64 {
        let mut m: f64 = 0.0;
        for f in &self.faces {
            for k in 0..3 {
                m = m.max(self.vertices[f[k]].dist(&self.vertices[f[(k + 1) % 3]]));
            }
        }
        m
    }

    pub fn transformed(&self, map: impl Fn(&LorentzVec3) -> LorentzVec3) -> Mesh {
        Mesh {
            vertices: self.vertices.iter().map(&map).collect(),
            faces: self.faces.clone(),
            flags: self.flags.clone(),
            segments: self
                .segments
                .iter()
                .map(|s| SegmentMarker {
                    midpoint: map(&s.midpoint),
                    ..s.clone()
                })
                .collect(),
        }
    }

    /// Appends `other`, shifting its indices.
    pub fn append(&mut self, other: &Mesh) {
        let off = self.vertices.len();
        self.vertices.extend_from_slice(&other.vertices);
        self.flags.extend_from_slice(&other.flags);
        self.faces
            .extend(other.faces.iter().map(|f| [f[0] + off, f[1] + off, f[2] + off]));
        self.segments.extend(other.segments.iter().map(|s| SegmentMarker {
            endpoints: [s.endpoints[0] + off, s.endpoints[1] + off],
            polyline: s.polyline.iter().map(|i| i + off).collect(),
            ..s.clone()
        }));
    }
}

/// Vertex index of point `j` on ring `i` of fan triangle `k`.
fn fan_index(n: usize, i: usize, k: usize, j: usize) -> usize {
    if i == 0 {
        0
    } else {
        1 + n * i * (i - 1) / 2 + (k * i + j) % (n * i)
    }
}

/// Samples one sheet of the graph on a fan subdivision with `resolution` rings about the centroid.
/// Boundary vertices lie exactly on the lifted edges; interior heights come from the inverse map.
pub fn sample_graph(graph: &MaximalGraph, resolution: usize, shrinking: &[usize]) -> Result<Mesh> {
    if resolution < 1 {
        return Err(Error::InvalidInput("resolution must be positive".into()));
    }
    let poly = graph.polygon();
    let n = poly.len();
    let big_n = resolution;
    let c = centroid(&poly.vertices);
    let total = 1 + n * big_n * (big_n + 1) / 2;
    let mut vertices = vec![LorentzVec3::ZERO; total];
    let mut flags = vec![VertexFlag::Interior; total];
    let mut params: Vec<Option<Complex64>> = vec![None; total];

    let z0 = graph.param_of(c, None)?;
    vertices[0] = graph.patch().eval(z0)?;
    params[0] = Some(z0);
    for i in 1..=big_n {
        let mut hint = None;
        for k in 0..n {
            let a = poly.vertices[k];
            let b = poly.vertices[(k + 1) % n];
            for j in 0..i {
                let idx = fan_index(n, i, k, j);
                let s = j as f64 / i as f64;
                if i == big_n {
                    vertices[idx] = graph.boundary_point(k, s);
                    flags[idx] = if j == 0 && shrinking.contains(&k) {
                        VertexFlag::ShrinkingSingularity
                    } else {
                        VertexFlag::LightlikeBoundary
                    };
                    continue;
                }
                let r = i as f64 / big_n as f64;
                let edge_pt = a.add(b.sub(a).scale(s));
                let p = c.add(edge_pt.sub(c).scale(r));
                let inner = params[fan_index(n, i - 1, k, (j * (i - 1)) / i)];
                let z = graph.param_of(p, hint.or(inner))?;
                hint = Some(z);
                params[idx] = Some(z);
                vertices[idx] = graph.patch().eval(z)?;
            }
        }
    }

    let mut faces = Vec::with_capacity(n * big_n * big_n);
    for k in 0..n {
        for i in 0..big_n {
            for j in 0..=i {
                faces.push([
                    fan_index(n, i, k, j),
                    fan_index(n, i + 1, k, j),
                    fan_index(n, i + 1, k, j + 1),
                ]);
            }
            for j in 0..i {
                faces.push([
                    fan_index(n, i, k, j),
                    fan_index(n, i + 1, k, j + 1),
                    fan_index(n, i, k, j + 1),
                ]);
            }
        }
    }

    let segments = (0..n)
        .map(|k| {
            let polyline: Vec<usize> = (0..=big_n).map(|j| fan_index(n, big_n, k, j)).collect();
            SegmentMarker {
                edge: k,
                label: poly.labels[k],
                endpoints: [polyline[0], polyline[big_n]],
                midpoint: poly.midpoint(k),
                polyline,
            }
        })
        .collect();
    let mesh = Mesh {
        vertices,
        faces,
        flags,
        segments,
    };
    mesh.validate()?;
    Ok(mesh)
}

/// Wavefront OBJ text with `v x y t` lines and 1-based `f` lines; 17 significant digits.
pub fn obj_string(mesh: &Mesh) -> String {
    let mut s = String::new();
    for v in &mesh.vertices {
        let _ = writeln!(s, "v {:.16e} {:.16e} {:.16e}", v.x, v.y, v.t);
    }
    for f in &mesh.faces {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub vertices: BTreeMap<usize, VertexFlag>,
    pub segments: Vec<SegmentMarker>,
}

pub fn annotations(mesh: &Mesh) -> Annotations {
    Annotations {
        vertices: mesh.flags.iter().copied().enumerate().collect(),
        segments: mesh.segments.clone(),
    }
}

/// Writes `path` (OBJ) and a JSON annotation sidecar next to it with extension `.json`.
pub fn export_mesh(mesh: &Mesh, path: &Path) -> Result<()> {
    mesh.validate()?;
    fs::write(path, obj_string(mesh))?;
    let side = serde_json::to_string_pretty(&annotations(mesh))?;
    fs::write(path.with_extension("json"), side + "\n")?;
    Ok(())
}

pub fn parse_obj(text: &str) -> Result<(Vec<LorentzVec3>, Vec<[usize; 3]>)> {
    let mut vs = Vec::new();
    let mut fs = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let mut it = line.split_whitespace();
        let bad = || Error::InvalidInput(format!("malformed OBJ line {}", ln + 1));
        match it.next() {
            Some("v") => {
                let mut c = [0.0; 3];
                for x in &mut c {
                    *x = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
                }
                vs.push(LorentzVec3::from(c));
            }
            Some("f") => {
                let mut c = [0usize; 3];
                for x in &mut c {
                    let tok = it.next().ok_or_else(bad)?;
                    let i: usize = tok.split('/').next().unwrap_or("").parse().map_err(|_| bad())?;
                    if i == 0 {
                        return Err(bad());
                    }
                    *x = i - 1;
                }
                fs.push(c);
            }
            _ => {}
        }
    }
    Ok((vs, fs))
}

/// Reads a mesh written by [`export_mesh`].
pub fn import_mesh(path: &Path) -> Result<Mesh> {
    let (vertices, faces) = parse_obj(&fs::read_to_string(path)?)?;
    let side = path.with_extension("json");
    let (flags, segments) = if side.exists() {
        let a: Annotations = serde_json::from_str(&fs::read_to_string(side)?)?;
        let flags = (0..vertices.len())
            .map(|i| a.vertices.get(&i).copied().unwrap_or(VertexFlag::Interior))
            .collect();
        (flags, a.segments)
    } else {
        (vec![VertexFlag::Interior; vertices.len()], Vec::new())
    };
    let mesh = Mesh {
        vertices,
        faces,
        flags,
        segments,
    };
    mesh.validate()?;
    Ok(mesh)
}

pub fn planar(v: &LorentzVec3) -> Point2 {
    Point2::new(v.x, v.y)
}
