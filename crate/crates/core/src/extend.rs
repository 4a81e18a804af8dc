//! Extension across lightlike boundary segments: the blow-up chart at a jump point,
//! shrinking endpoints, and periodization of a sampled sheet.

use std::collections::HashMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{hm_unchecked, GraphPatch};
use crate::lorentz::{LorentzVec3, PeriodLattice};
use crate::mesh::{Mesh, VertexFlag};
use crate::tessellate::{LabeledPolygon, TilingGroup};

/// How the remainder term is continued to the lower half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Extension {
    Odd,
    /// Wrong continuation, kept as a negative control.
    Even,
}

/// `X∘Π` on `D = ℝ × (0, π)`, `Π(r, θ) = s_k + r e^{iθ}`.
#[derive(Debug, Clone)]
pub struct BlowupChart {
    patch: GraphPatch,
    jump: usize,
    center: f64,
    pub a: LorentzVec3,
    pub b: LorentzVec3,
    pub sigma: f64,
    pub tau: f64,
    extension: Extension,
}

/// Window `(σ, τ)` made of the full arcs next to jump `k`; an unbounded arc is cut at the span of the jumps.
pub fn default_window(patch: &GraphPatch, k: usize) -> (f64, f64) {
    let s = patch.jumps();
    let n = s.len();
    let span = s[n - 1] - s[0];
    let span = if span > 0.0 { span } else { 1.0 };
    let sigma = if k == 0 { -span } else { s[k - 1] - s[k] };
    let tau = if k + 1 == n { span } else { s[k + 1] - s[k] };
    (sigma, tau)
}

pub fn build_blowup(patch: &GraphPatch, k: usize, window: Option<(f64, f64)>) -> Result<BlowupChart> {
    build_blowup_with(patch, k, window, Extension::Odd)
}

pub fn build_blowup_with(
    patch: &GraphPatch,
    k: usize,
    window: Option<(f64, f64)>,
    extension: Extension,
) -> Result<BlowupChart> {
    let data = patch.data();
    let n = data.len();
    if k >= n {
        return Err(Error::InvalidInput(format!(
            "jump index {k} out of range for {n} jumps"
        )));
    }
    let (max_sigma, max_tau) = default_window(patch, k);
    let (sigma, tau) = window.unwrap_or((max_sigma, max_tau));
    let s = patch.jumps();
    // Arc lengths available on each side; the unbounded arc has no limit.
    let left_room = if k == 0 { f64::INFINITY } else { s[k] - s[k - 1] };
    let right_room = if k + 1 == n { f64::INFINITY } else { s[k + 1] - s[k] };
    if !(sigma < 0.0 && tau > 0.0) || -sigma > left_room * (1.0 + 1e-12) || tau > right_room * (1.0 + 1e-12) {
        return Err(Error::NotShrinkingConfiguration(format!(
            "window ({sigma}, {tau}) is not covered by the constant arcs next to jump {k}"
        )));
    }
    let a = data.left_value(k);
    let b = data.right_value(k);
    if a.dist(&b) == 0.0 {
        return Err(Error::NotShrinkingConfiguration(format!(
            "jump {k} has equal one-sided values"
        )));
    }
    if !(b - a).is_lightlike() {
        return Err(Error::NotShrinkingConfiguration(format!(
            "segment at jump {k} is not lightlike"
        )));
    }
    Ok(BlowupChart {
        patch: patch.clone(),
        jump: k,
        center: s[k],
        a,
        b,
        sigma,
        tau,
        extension,
    })
}

impl BlowupChart {
    pub fn jump(&self) -> usize {
        self.jump
    }

    pub fn center(&self) -> f64 {
        self.center
    }

    pub fn extension(&self) -> Extension {
        self.extension
    }

    /// Remainder `P_W` at a local parameter in the closed upper half-plane.
    fn remainder_upper(&self, z: Complex64) -> LorentzVec3 {
        if z.norm() < 1e-12 || z.im <= 0.0 {
            return LorentzVec3::ZERO;
        }
        let g = z + self.center;
        self.patch.eval_unchecked(g)
            - self.a * hm_unchecked(z, self.sigma, 0.0)
            - self.b * hm_unchecked(z, 0.0, self.tau)
    }

    /// `P_W` continued across `(σ, τ)`.
    pub fn remainder(&self, z: Complex64) -> LorentzVec3 {
        if z.im >= 0.0 {
            self.remainder_upper(z)
        } else {
            let up = self.remainder_upper(z.conj());
            match self.extension {
                Extension::Odd => -up,
                Extension::Even => up,
            }
        }
    }

    /// `X∘Π(r, θ)` for any real `r` and `θ ∈ (0, π)`; `r = 0` is the segment from `b` to `a`.
    pub fn eval(&self, r: f64, theta: f64) -> Result<LorentzVec3> {
        if !(theta > 0.0 && theta < PI) || !r.is_finite() {
            return Err(Error::OutsideDomain(format!(
                "(r, θ) = ({r}, {theta}) is not in ℝ × (0, π)"
            )));
        }
        let z = Complex64::from_polar(r, theta);
        let (a, b) = (self.a, self.b);
        let mut x = a + b + (a - b) * (theta / PI);
        if r != 0.0 {
            let arg_tau = (Complex64::new(self.tau, 0.0) - z).arg();
            let w = Complex64::new(self.sigma, 0.0) - z;
            let mut arg_sigma = w.im.atan2(w.re);
            if arg_sigma <= 0.0 {
                arg_sigma += 2.0 * PI;
            }
            x += b * (arg_tau / PI) - a * (arg_sigma / PI) + self.remainder(z);
        } else {
            // Arg(τ) = 0 and Arg⁺(σ) = π.
            x = x - a;
        }
        Ok(x)
    }

    /// Chart value at a local parameter `ζ - s_k` in the upper half-plane.
    pub fn eval_at(&self, z: Complex64) -> Result<LorentzVec3> {
        self.eval(z.norm(), z.arg())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReflectionReport {
    pub max_deviation: f64,
    pub samples: usize,
}

/// `sup |X∘Π(−r, π−θ) + X∘Π(r, θ) − (a + b)|` over an `m × m` grid on `[-r_max, r_max] × [θ0, θ1]`.
pub fn reflection_identity_check(
    chart: &BlowupChart,
    r_max: f64,
    theta: (f64, f64),
    m: usize,
) -> Result<ReflectionReport> {
    let mut worst: f64 = 0.0;
    let target = chart.a + chart.b;
    let m = m.max(2);
    for i in 0..m {
        let r = -r_max + 2.0 * r_max * i as f64 / (m - 1) as f64;
        for j in 0..m {
            let th = theta.0 + (theta.1 - theta.0) * j as f64 / (m - 1) as f64;
            let s = chart.eval(-r, PI - th)? + chart.eval(r, th)?;
            worst = worst.max((s - target).euclid_norm());
        }
    }
    Ok(ReflectionReport {
        max_deviation: worst,
        samples: m * m,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ShrinkingKind {
    TwoLightlikeCorner,
    Slit,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ShrinkingEndpointEvidence {
    pub kind: ShrinkingKind,
    pub vertex: usize,
    pub point: LorentzVec3,
    /// The two lightlike segments meeting at the vertex, as endpoint pairs.
    pub segments: [[LorentzVec3; 2]; 2],
}

/// Vertices where two lifted lightlike edges meet without forming a straight line.
/// Vertices listed in `slit_tips` whose edges fold back onto each other are reported as slits.
pub fn detect_shrinking_endpoints(polygon: &LabeledPolygon, slit_tips: &[usize]) -> Vec<ShrinkingEndpointEvidence> {
    let n = polygon.len();
    let mut out = Vec::new();
    for k in 0..n {
        let prev = polygon.lifted_edge(k + n - 1);
        let next = polygon.lifted_edge(k);
        if !prev.is_lightlike() || !next.is_lightlike() {
            continue;
        }
        let scale = prev.euclid_norm() * next.euclid_norm();
        let collinear = prev.cross(&next).euclid_norm() <= 1e-9 * scale;
        let v = polygon.lifted_vertex(k);
        let segments = [[polygon.lifted_vertex(k + n - 1), v], [v, polygon.lifted_vertex(k + 1)]];
        let kind = if slit_tips.contains(&k) && collinear && prev.dot(&next) < 0.0 {
            Some(ShrinkingKind::Slit)
        } else if !collinear {
            Some(ShrinkingKind::TwoLightlikeCorner)
        } else {
            None
        };
        if let Some(kind) = kind {
            out.push(ShrinkingEndpointEvidence {
                kind,
                vertex: k,
                point: v,
                segments,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PeriodicMode {
    Doubly,
    Triply,
}

#[derive(Debug, Clone, Serialize)]
pub struct PeriodicAssembly {
    pub mesh: Mesh,
    pub mode: PeriodicMode,
    pub lattice: PeriodLattice,
    /// Lightlike translation between consecutive sheets, present in triply periodic mode.
    pub sheet_translation: Option<LorentzVec3>,
    /// Sheet index of every vertex.
    pub sheet_of_vertex: Vec<i64>,
    pub sheets: Vec<i64>,
    pub copies: usize,
    /// Edge length of the base mesh.
    pub base_edge_length: f64,
}

/// Sheet order `0, 1, -1, 2, -2, ...`.
pub fn sheet_indices(count: usize) -> Vec<i64> {
    (0..count as i64)
        .map(|i| if i % 2 == 1 { (i + 1) / 2 } else { -(i / 2) })
        .collect()
}

/// Copies the base sheet by the tiling group; in triply periodic mode also stacks sheets
/// along the lightlike vector `2(c_0 - v_0)` from the first marked segment.
pub fn periodize(
    base: &Mesh,
    polygon: &LabeledPolygon,
    tiling: &TilingGroup,
    mode: PeriodicMode,
    copies: usize,
    sheets: usize,
) -> Result<PeriodicAssembly> {
    if copies == 0 {
        return Err(Error::InvalidInput("copies bound must be at least 1".into()));
    }
    let n = polygon.len();
    for k in 0..n {
        let m = polygon.midpoint(k);
        let marked = base
            .segments
            .iter()
            .any(|s| s.edge == k && s.midpoint.dist(&m) <= 1e-9 * (1.0 + m.euclid_norm()));
        if !marked {
            return Err(Error::MissingMarkers(format!(
                "no lightlike segment marker for edge {k}"
            )));
        }
        if tiling.generators[k].dist(&m) > 1e-9 * (1.0 + m.euclid_norm()) {
            return Err(Error::MissingMarkers(format!(
                "tiling generator {k} is not the midpoint of edge {k}"
            )));
        }
    }
    let (sheet_translation, sheet_list) = match mode {
        PeriodicMode::Doubly => (None, vec![0]),
        PeriodicMode::Triply => {
            let seg = &base.segments[0];
            let v_idx = seg.endpoints[0];
            if base.flags[v_idx] != VertexFlag::ShrinkingSingularity {
                return Err(Error::MissingMarkers(
                    "segment endpoint is not marked as a shrinking singularity".into(),
                ));
            }
            let e = (seg.midpoint - base.vertices[v_idx]) * 2.0;
            (Some(e), sheet_indices(sheets.max(1)))
        }
    };
    let lattice = match sheet_translation {
        None => tiling.lattice.clone(),
        Some(e) => {
            let mut g = tiling.lattice.generators().to_vec();
            g.push(e);
            PeriodLattice::new(g)?
        }
    };
    let mut mesh = Mesh::default();
    let mut sheet_of_vertex = Vec::new();
    let used = copies.min(tiling.copies.len());
    for &m in &sheet_list {
        let shift = sheet_translation.map_or(LorentzVec3::ZERO, |e| e * m as f64);
        for g in &tiling.copies[..used] {
            let copy = base.transformed(|p| g.apply(p) + shift);
            mesh.append(&copy);
            sheet_of_vertex.extend(std::iter::repeat_n(m, copy.vertices.len()));
        }
    }
    Ok(PeriodicAssembly {
        mesh,
        mode,
        lattice,
        sheet_translation,
        sheet_of_vertex,
        sheets: sheet_list,
        copies: used,
        base_edge_length: base.max_edge_length(),
    })
}

/// Spatial hash of points for nearest-neighbour queries.
pub struct PointIndex<'a> {
    points: &'a [LorentzVec3],
    cell: f64,
    grid: HashMap<(i64, i64, i64), Vec<usize>>,
}

impl<'a> PointIndex<'a> {
    pub fn new(points: &'a [LorentzVec3], cell: f64) -> Self {
        let mut grid: HashMap<(i64, i64, i64), Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            grid.entry(Self::key(p, cell)).or_default().push(i);
        }
        PointIndex { points, cell, grid }
    }

    fn key(p: &LorentzVec3, cell: f64) -> (i64, i64, i64) {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.t / cell).floor() as i64,
        )
    }

    /// Distance to the nearest point, or infinity when nothing lies within one cell.
    pub fn nearest_distance(&self, q: &LorentzVec3) -> f64 {
        let (i, j, k) = Self::key(q, self.cell);
        let mut best = f64::INFINITY;
        for di in -1..=1 {
            for dj in -1..=1 {
                for dk in -1..=1 {
                    if let Some(v) = self.grid.get(&(i + di, j + dj, k + dk)) {
                        for &idx in v {
                            best = best.min(self.points[idx].dist(q));
                        }
                    }
                }
            }
        }
        best
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub hausdorff: f64,
    pub threshold: f64,
    pub points_checked: usize,
    pub passes: bool,
}

/// Symmetric Hausdorff distance between the vertex set and its image under `map`, restricted
/// to points whose planar position lies in `window` (a predicate) and whose image does too.
pub fn windowed_invariance(
    points: &[LorentzVec3],
    map: impl Fn(&LorentzVec3) -> LorentzVec3,
    inverse: impl Fn(&LorentzVec3) -> LorentzVec3,
    window: impl Fn(&LorentzVec3) -> bool,
    edge_length: f64,
) -> InvarianceReport {
    let index = PointIndex::new(points, 2.0 * edge_length);
    let mut worst: f64 = 0.0;
    let mut checked = 0;
    for p in points {
        if !window(p) {
            continue;
        }
        for q in [map(p), inverse(p)] {
            checked += 1;
            worst = worst.max(index.nearest_distance(&q));
        }
    }
    let threshold = 2.0 * edge_length;
    InvarianceReport {
        hausdorff: worst,
        threshold,
        points_checked: checked,
        passes: checked > 0 && worst < threshold,
    }
}
