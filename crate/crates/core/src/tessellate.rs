//! Fundamental polygons: membership in the midpoint-symmetry class, the
//! Jenkins-Serrin type conditions, vertex heights and the tiling group.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lorentz::{LorentzVec3, PeriodLattice};

/// Relative factor of the length tolerance, scaled by the perimeter.
pub const LEN_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }

    pub fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }

    pub fn scale(self, c: f64) -> Point2 {
        Point2::new(self.x * c, self.y * c)
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub fn lift(self, t: f64) -> LorentzVec3 {
        LorentzVec3::new(self.x, self.y, t)
    }
}

impl From<[f64; 2]> for Point2 {
    fn from(a: [f64; 2]) -> Self {
        Point2::new(a[0], a[1])
    }
}

/// Edge label: `A` edges lift to future-directed lightlike segments, `B` to past-directed ones.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EdgeLabel {
    A,
    B,
}

impl EdgeLabel {
    pub fn sign(self) -> f64 {
        match self {
            EdgeLabel::A => 1.0,
            EdgeLabel::B => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            EdgeLabel::A => EdgeLabel::B,
            EdgeLabel::B => EdgeLabel::A,
        }
    }
}

impl fmt::Display for EdgeLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EdgeLabel::A => "A",
            EdgeLabel::B => "B",
        })
    }
}

/// Alternating labels starting with `A`.
pub fn alternating_labels(n: usize) -> Vec<EdgeLabel> {
    (0..n)
        .map(|k| if k % 2 == 0 { EdgeLabel::A } else { EdgeLabel::B })
        .collect()
}

pub fn perimeter(v: &[Point2]) -> f64 {
    (0..v.len()).map(|k| v[(k + 1) % v.len()].sub(v[k]).norm()).sum()
}

pub fn len_tolerance(v: &[Point2]) -> f64 {
    LEN_RTOL * perimeter(v)
}

/// Shoelace area, positive for counterclockwise order.
pub fn signed_area(v: &[Point2]) -> f64 {
    0.5 * (0..v.len()).map(|k| v[k].cross(v[(k + 1) % v.len()])).sum::<f64>()
}

pub fn edges(v: &[Point2]) -> Vec<Point2> {
    (0..v.len()).map(|k| v[(k + 1) % v.len()].sub(v[k])).collect()
}

pub fn centroid(v: &[Point2]) -> Point2 {
    let a = signed_area(v);
    let mut c = Point2::new(0.0, 0.0);
    for k in 0..v.len() {
        let p = v[k];
        let q = v[(k + 1) % v.len()];
        let w = p.cross(q);
        c = c.add(p.add(q).scale(w));
    }
    c.scale(1.0 / (6.0 * a))
}

pub fn is_convex(v: &[Point2]) -> bool {
    let e = edges(v);
    let orient = signed_area(v).signum();
    let tol = len_tolerance(v) * perimeter(v);
    (0..e.len()).all(|k| orient * e[k].cross(e[(k + 1) % e.len()]) >= -tol)
}

/// Interior angle at vertex `k`.
pub fn interior_angle(v: &[Point2], k: usize) -> f64 {
    let n = v.len();
    let prev = v[(k + n - 1) % n].sub(v[k]);
    let next = v[(k + 1) % n].sub(v[k]);
    let orient = signed_area(v).signum();
    let a = orient * next.cross(prev);
    let ang = a.atan2(next.dot(prev));
    if ang < 0.0 {
        ang + 2.0 * PI
    } else {
        ang
    }
}

fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    b.sub(a).cross(c.sub(a))
}

fn on_segment(a: Point2, b: Point2, p: Point2, tol: f64) -> bool {
    orient(a, b, p).abs() <= tol * b.sub(a).norm()
        && p.x >= a.x.min(b.x) - tol
        && p.x <= a.x.max(b.x) + tol
        && p.y >= a.y.min(b.y) - tol
        && p.y <= a.y.max(b.y) + tol
}

fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2, tol: f64) -> bool {
    let d1 = orient(c, d, a);
    let d2 = orient(c, d, b);
    let d3 = orient(a, b, c);
    let d4 = orient(a, b, d);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    on_segment(c, d, a, tol) || on_segment(c, d, b, tol) || on_segment(a, b, c, tol) || on_segment(a, b, d, tol)
}

fn check_simple(v: &[Point2]) -> Result<()> {
    let n = v.len();
    let tol = len_tolerance(v);
    for k in 0..n {
        if v[(k + 1) % n].sub(v[k]).norm() <= tol {
            return Err(Error::InvalidInput(format!("edge {k} has zero length")));
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            let (a, b) = (v[i], v[(i + 1) % n]);
            let (c, d) = (v[j], v[(j + 1) % n]);
            let adjacent = j == i + 1 || (i == 0 && j == n - 1);
            if adjacent {
                // Shared vertex; only a fold back along the same line is a crossing.
                let (p, q, r) = if j == i + 1 { (a, b, d) } else { (c, a, b) };
                let u = q.sub(p);
                let w = r.sub(q);
                if u.cross(w).abs() <= tol * u.norm() && u.dot(w) < 0.0 {
                    return Err(Error::SelfIntersecting);
                }
            } else if segments_touch(a, b, c, d, tol) {
                return Err(Error::SelfIntersecting);
            }
        }
    }
    Ok(())
}

pub fn point_in_polygon(v: &[Point2], p: Point2) -> bool {
    let mut inside = false;
    let n = v.len();
    let mut j = n - 1;
    for i in 0..n {
        let (a, b) = (v[i], v[j]);
        if (a.y > p.y) != (b.y > p.y) && p.x < (b.x - a.x) * (p.y - a.y) / (b.y - a.y) + a.x {
            inside = !inside;
        }
        j = i;
    }
    inside
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Classification {
    pub n: usize,
    pub in_class: bool,
    /// Number of copies around each vertex of the tiling, `(n - 2) j = 2n`.
    pub valency: Option<u32>,
    pub convex: bool,
    pub counterclockwise: bool,
    /// Construction is attempted only for convex members with an even number of edges.
    pub constructible: bool,
    pub reason: Option<String>,
}

/// Decides whether a simple polygon tiles the plane by point symmetries at its edge midpoints.
pub fn classify(vertices: &[Point2]) -> Result<Classification> {
    let n = vertices.len();
    if n < 3 {
        return Err(Error::InvalidInput(format!(
            "polygon needs at least 3 vertices, got {n}"
        )));
    }
    if vertices.iter().any(|p| !p.x.is_finite() || !p.y.is_finite()) {
        return Err(Error::InvalidInput("non-finite vertex".into()));
    }
    check_simple(vertices)?;
    let convex = is_convex(vertices);
    let ccw = signed_area(vertices) > 0.0;
    let tol = len_tolerance(vertices);
    let (in_class, valency, mut reason) = match n {
        3 => (true, Some(6), None),
        4 => (true, Some(4), None),
        6 => {
            let e = edges(vertices);
            let zonogon = (0..3).all(|k| e[k].add(e[k + 3]).norm() <= tol);
            if zonogon {
                (true, Some(3), None)
            } else {
                (
                    false,
                    None,
                    Some("hexagon without parallel equal opposite sides".to_string()),
                )
            }
        }
        _ => (false, None, Some(format!("no valency solves (n-2)j = 2n for n = {n}"))),
    };
    let mut constructible = in_class && n % 2 == 0 && convex;
    if in_class && n == 3 {
        reason = Some("fails α_Ω=β_Ω".into());
        constructible = false;
    } else if in_class && !convex {
        reason = Some("classified, construction unsupported".into());
    }
    Ok(Classification {
        n,
        in_class,
        valency,
        convex,
        counterclockwise: ccw,
        constructible,
        reason,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsViolation {
    /// Vertex indices of the subdomain, in boundary order.
    pub vertices: Vec<usize>,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HexagonCriterion {
    /// Long diagonal lengths `|v_{i+3} - v_i|`.
    pub diagonals: [f64; 3],
    /// Bounds `| |e_{i+1}| - (|e_i| + |e_{i+2}|) |`.
    pub bounds: [f64; 3],
    pub passes: bool,
    pub agrees_with_enumeration: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct JsReport {
    pub passes: bool,
    pub alpha: f64,
    pub beta: f64,
    pub violations: Vec<JsViolation>,
    pub subdomains_checked: usize,
    pub hexagon: Option<HexagonCriterion>,
    pub eps_len: f64,
    pub reason: Option<String>,
}

fn chord_inside(v: &[Point2], i: usize, j: usize, tol: f64) -> bool {
    let n = v.len();
    if (j + n - i) % n == 1 || (i + n - j) % n == 1 {
        return true;
    }
    let (a, b) = (v[i], v[j]);
    for k in 0..n {
        let k1 = (k + 1) % n;
        if k == i || k == j || k1 == i || k1 == j {
            continue;
        }
        if segments_touch(a, b, v[k], v[k1], tol) {
            return false;
        }
    }
    point_in_polygon(v, a.add(b).scale(0.5))
}

/// Checks `2α_P < γ_P`, `2β_P < γ_P` on every polygonal subdomain spanned by vertices
/// of the polygon, and `α_Ω = β_Ω`.
pub fn js_check(vertices: &[Point2], labels: &[EdgeLabel]) -> Result<JsReport> {
    let n = vertices.len();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!("{} labels for {n} edges", labels.len())));
    }
    if n < 3 {
        return Err(Error::InvalidInput("polygon needs at least 3 vertices".into()));
    }
    let e = edges(vertices);
    let len: Vec<f64> = e.iter().map(|x| x.norm()).collect();
    let eps = len_tolerance(vertices);
    let (mut alpha, mut beta) = (0.0, 0.0);
    for k in 0..n {
        match labels[k] {
            EdgeLabel::A => alpha += len[k],
            EdgeLabel::B => beta += len[k],
        }
    }

    let mut violations = Vec::new();
    let mut checked = 0;
    if n <= 16 {
        for mask in 1u32..(1 << n) {
            let size = mask.count_ones() as usize;
            if size < 3 || size == n {
                continue;
            }
            let idx: Vec<usize> = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            let all_inside = (0..size).all(|p| chord_inside(vertices, idx[p], idx[(p + 1) % size], eps));
            if !all_inside {
                continue;
            }
            checked += 1;
            let (mut a, mut b, mut g) = (0.0, 0.0, 0.0);
            for p in 0..size {
                let (i, j) = (idx[p], idx[(p + 1) % size]);
                g += vertices[j].sub(vertices[i]).norm();
                if j == (i + 1) % n {
                    match labels[i] {
                        EdgeLabel::A => a += len[i],
                        EdgeLabel::B => b += len[i],
                    }
                }
            }
            if 2.0 * a >= g - eps || 2.0 * b >= g - eps {
                violations.push(JsViolation {
                    vertices: idx,
                    alpha: a,
                    beta: b,
                    gamma: g,
                });
            }
        }
    }
    let balanced = (alpha - beta).abs() < eps;
    let passes = violations.is_empty() && balanced;

    let hexagon = (n == 6).then(|| {
        let mut diagonals = [0.0; 3];
        let mut bounds = [0.0; 3];
        for i in 0..3 {
            diagonals[i] = vertices[i + 3].sub(vertices[i]).norm();
            bounds[i] = (len[i + 1] - (len[i] + len[i + 2])).abs();
        }
        let ok = (0..3).all(|i| diagonals[i] > bounds[i]);
        HexagonCriterion {
            diagonals,
            bounds,
            passes: ok,
            agrees_with_enumeration: ok == violations.is_empty(),
        }
    });

    let reason = if !balanced {
        Some("fails α_Ω=β_Ω".to_string())
    } else if !violations.is_empty() {
        Some(format!(
            "{} subdomain(s) violate 2α_P<γ_P or 2β_P<γ_P",
            violations.len()
        ))
    } else {
        None
    };
    Ok(JsReport {
        passes,
        alpha,
        beta,
        violations,
        subdomains_checked: checked,
        hexagon,
        eps_len: eps,
        reason,
    })
}

/// Polygon with alternating labels and vertex heights making every lifted edge lightlike.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LabeledPolygon {
    pub vertices: Vec<Point2>,
    pub labels: Vec<EdgeLabel>,
    pub heights: Vec<f64>,
}

impl LabeledPolygon {
    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn lifted_vertex(&self, k: usize) -> LorentzVec3 {
        let k = k % self.len();
        self.vertices[k].lift(self.heights[k])
    }

    pub fn lifted_vertices(&self) -> Vec<LorentzVec3> {
        (0..self.len()).map(|k| self.lifted_vertex(k)).collect()
    }

    /// Lifted edge from vertex `k` to vertex `k + 1`.
    pub fn lifted_edge(&self, k: usize) -> LorentzVec3 {
        self.lifted_vertex(k + 1) - self.lifted_vertex(k)
    }

    pub fn lifted_edges(&self) -> Vec<LorentzVec3> {
        (0..self.len()).map(|k| self.lifted_edge(k)).collect()
    }

    /// Lifted midpoint of edge `k`.
    pub fn midpoint(&self, k: usize) -> LorentzVec3 {
        (self.lifted_vertex(k) + self.lifted_vertex(k + 1)) * 0.5
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices).abs()
    }
}

pub fn assign_heights(vertices: &[Point2], labels: &[EdgeLabel]) -> Result<LabeledPolygon> {
    let n = vertices.len();
    if labels.len() != n {
        return Err(Error::InvalidInput(format!("{} labels for {n} edges", labels.len())));
    }
    if n % 2 != 0 || (0..n).any(|k| labels[k] == labels[(k + 1) % n]) {
        return Err(Error::InvalidInput("labels must alternate between A and B".into()));
    }
    if signed_area(vertices) <= 0.0 {
        return Err(Error::InvalidInput("vertices must be in counterclockwise order".into()));
    }
    let e = edges(vertices);
    let mut heights = Vec::with_capacity(n);
    let mut t = 0.0;
    for k in 0..n {
        heights.push(t);
        t += labels[k].sign() * e[k].norm();
    }
    if t.abs() >= len_tolerance(vertices) {
        return Err(Error::NonClosingHeights(t));
    }
    Ok(LabeledPolygon {
        vertices: vertices.to_vec(),
        labels: labels.to_vec(),
        heights,
    })
}

/// Element `p -> sign * p + translation` of the group generated by the midpoint symmetries.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TileElement {
    pub sign: i8,
    pub translation: LorentzVec3,
    /// Number of midpoint reflections used to reach this copy.
    pub depth: usize,
}

impl TileElement {
    pub const IDENTITY: TileElement = TileElement {
        sign: 1,
        translation: LorentzVec3::ZERO,
        depth: 0,
    };

    pub fn apply(&self, p: &LorentzVec3) -> LorentzVec3 {
        *p * f64::from(self.sign) + self.translation
    }

    pub fn apply2(&self, p: Point2) -> Point2 {
        Point2::new(
            f64::from(self.sign) * p.x + self.translation.x,
            f64::from(self.sign) * p.y + self.translation.y,
        )
    }

    /// Copy of the base across its edge `k`: the point symmetry at the image of midpoint `m_k`.
    pub fn across(&self, midpoint: &LorentzVec3) -> TileElement {
        TileElement {
            sign: -self.sign,
            translation: self.apply(midpoint) * 2.0 - self.translation,
            depth: self.depth + 1,
        }
    }

    pub fn is_translation(&self) -> bool {
        self.sign == 1
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct TilingGroup {
    /// Lifted edge midpoints; the point symmetries generating the group.
    pub generators: Vec<LorentzVec3>,
    /// Reduced basis of the translation lattice, lifted to L³.
    pub lattice: PeriodLattice,
    pub copies: Vec<TileElement>,
    pub radius: f64,
    pub window_center: Point2,
    pub base_area: f64,
    pub coverage: CoverageReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct CoverageReport {
    pub window_area: f64,
    pub covered_area: f64,
    pub relative_gap: f64,
    pub max_overlap_area: f64,
    pub ok: bool,
}

impl TilingGroup {
    pub fn copy_polygon(&self, base: &[Point2], k: usize) -> Vec<Point2> {
        base.iter().map(|&p| self.copies[k].apply2(p)).collect()
    }

    /// Planar covolume of the lattice.
    pub fn covolume(&self) -> f64 {
        let g = self.lattice.generators();
        (g[0].x * g[1].y - g[0].y * g[1].x).abs()
    }
}

fn key(p: Point2, scale: f64) -> (i64, i64) {
    let q = 1e-6 * scale;
    ((p.x / q).round() as i64, (p.y / q).round() as i64)
}

fn clip_convex(subject: &[Point2], clip: &[Point2]) -> Vec<Point2> {
    let mut out = subject.to_vec();
    let m = clip.len();
    for k in 0..m {
        if out.is_empty() {
            break;
        }
        let (a, b) = (clip[k], clip[(k + 1) % m]);
        let input = std::mem::take(&mut out);
        let inside = |p: Point2| orient(a, b, p) >= 0.0;
        for i in 0..input.len() {
            let p = input[i];
            let q = input[(i + 1) % input.len()];
            let (ip, iq) = (inside(p), inside(q));
            if ip {
                out.push(p);
            }
            if ip != iq {
                let dp = orient(a, b, p);
                let dq = orient(a, b, q);
                let s = dp / (dp - dq);
                out.push(p.add(q.sub(p).scale(s)));
            }
        }
    }
    out
}

fn ccw(v: &[Point2]) -> Vec<Point2> {
    if signed_area(v) < 0.0 {
        v.iter().rev().copied().collect()
    } else {
        v.to_vec()
    }
}

/// In the plane the shortest lattice vector and the shortest one independent of it form a
/// basis, provided the candidates contain every lattice point up to that length.
fn reduce_basis(candidates: &[LorentzVec3], tol: f64) -> Result<[LorentzVec3; 2]> {
    let planar = |v: &LorentzVec3| Point2::new(v.x, v.y);
    let mut sorted: Vec<LorentzVec3> = candidates.iter().filter(|v| planar(v).norm() > tol).copied().collect();
    sorted.sort_by(|a, b| planar(a).norm().total_cmp(&planar(b).norm()));
    let u = *sorted
        .first()
        .ok_or_else(|| Error::InconsistentTiling("no translations found".into()))?;
    let mut w = *sorted
        .iter()
        .find(|v| planar(&u).cross(planar(v)).abs() > tol * planar(v).norm())
        .ok_or_else(|| Error::InconsistentTiling("translations are collinear".into()))?;
    if planar(&u).cross(planar(&w)) < 0.0 {
        w = -w;
    }
    let det = planar(&u).cross(planar(&w));
    for c in &sorted {
        let a = planar(c).cross(planar(&w)) / det;
        let b = planar(&u).cross(planar(c)) / det;
        let lifted = u * a.round() + w * b.round();
        if (a - a.round()).abs() > 1e-6
            || (b - b.round()).abs() > 1e-6
            || lifted.dist(c) > 1e-6 * (1.0 + c.euclid_norm())
        {
            return Err(Error::InconsistentTiling(
                "translations do not form the expected lattice; enlarge the radius".into(),
            ));
        }
    }
    Ok([u, w])
}

/// Breadth-first closure of the midpoint symmetries, keeping every copy that meets the
/// square window of half-width `radius` about the centroid of the base polygon.
pub fn generate_tiling(polygon: &LabeledPolygon, radius: f64) -> Result<TilingGroup> {
    build_tiling(&polygon.vertices, &polygon.heights, radius)
}

/// Tiling of a polygon without heights (e.g. triangles).
pub fn generate_planar_tiling(vertices: &[Point2], radius: f64) -> Result<TilingGroup> {
    build_tiling(vertices, &vec![0.0; vertices.len()], radius)
}

fn build_tiling(vertices: &[Point2], heights: &[f64], radius: f64) -> Result<TilingGroup> {
    if !(radius > 0.0) || !radius.is_finite() {
        return Err(Error::InvalidRadius(radius));
    }
    let class = classify(vertices)?;
    if !class.in_class {
        return Err(Error::InvalidInput(
            "polygon does not tile by midpoint symmetries".into(),
        ));
    }
    if !class.convex {
        return Err(Error::InvalidInput("classified, construction unsupported".into()));
    }
    let n = vertices.len();
    let base3: Vec<LorentzVec3> = (0..n).map(|k| vertices[k].lift(heights[k])).collect();
    let mids: Vec<LorentzVec3> = (0..n).map(|k| (base3[k] + base3[(k + 1) % n]) * 0.5).collect();
    let scale = perimeter(vertices);
    let tol = LEN_RTOL * scale;
    let c0 = centroid(vertices);
    let c0_3 = {
        let t = heights.iter().sum::<f64>() / n as f64;
        c0.lift(t)
    };
    let window = [
        Point2::new(c0.x - radius, c0.y - radius),
        Point2::new(c0.x + radius, c0.y - radius),
        Point2::new(c0.x + radius, c0.y + radius),
        Point2::new(c0.x - radius, c0.y + radius),
    ];
    let base_area = signed_area(vertices).abs();
    let window_area = 4.0 * radius * radius;

    let mut seen: BTreeMap<(i64, i64), usize> = BTreeMap::new();
    let mut copies: Vec<TileElement> = Vec::new();
    let mut queue = VecDeque::new();
    seen.insert(key(c0, scale), 0);
    copies.push(TileElement::IDENTITY);
    queue.push_back(0usize);
    let mut translations = Vec::new();
    let max_copies = 200_000;

    while let Some(idx) = queue.pop_front() {
        let g = copies[idx];
        let poly: Vec<Point2> = ccw(&vertices.iter().map(|&p| g.apply2(p)).collect::<Vec<_>>());
        let inter = signed_area(&clip_convex(&poly, &window)).abs();
        if inter <= tol * tol && idx != 0 {
            continue;
        }
        for m in &mids {
            let h = g.across(m);
            let c = h.apply(&c0_3);
            let k = key(Point2::new(c.x, c.y), scale);
            match seen.get(&k) {
                Some(&j) => {
                    let other = copies[j].apply(&c0_3);
                    if (other.t - c.t).abs() > 1e-6 * scale {
                        return Err(Error::InconsistentTiling(format!(
                            "copy at ({:.6}, {:.6}) reached with heights {} and {}",
                            c.x, c.y, other.t, c.t
                        )));
                    }
                    if h.is_translation() {
                        translations.push(h.translation);
                    }
                }
                None => {
                    if copies.len() >= max_copies {
                        return Err(Error::InconsistentTiling("copy limit exceeded".into()));
                    }
                    seen.insert(k, copies.len());
                    if h.is_translation() {
                        translations.push(h.translation);
                    }
                    copies.push(h);
                    queue.push_back(copies.len() - 1);
                }
            }
        }
    }
    // Copies outside the window were recorded but not expanded; drop them.
    let mut kept = Vec::new();
    let mut covered = 0.0;
    for (i, g) in copies.iter().enumerate() {
        let poly: Vec<Point2> = ccw(&vertices.iter().map(|&p| g.apply2(p)).collect::<Vec<_>>());
        let a = signed_area(&clip_convex(&poly, &window)).abs();
        if a > tol * tol || i == 0 {
            kept.push(*g);
            covered += a;
        }
    }

    // Pairwise overlap among neighbours.
    let diam = scale;
    let polys: Vec<Vec<Point2>> = kept
        .iter()
        .map(|g| ccw(&vertices.iter().map(|&p| g.apply2(p)).collect::<Vec<_>>()))
        .collect();
    let cents: Vec<Point2> = polys.iter().map(|p| centroid(p)).collect();
    let mut max_overlap: f64 = 0.0;
    for i in 0..polys.len() {
        for j in i + 1..polys.len() {
            if cents[i].sub(cents[j]).norm() > diam {
                continue;
            }
            let a = signed_area(&clip_convex(&polys[i], &polys[j])).abs();
            max_overlap = max_overlap.max(a);
        }
    }

    let lattice_basis = reduce_basis(&translations, tol)?;
    let lattice = PeriodLattice::new(lattice_basis.to_vec())?;
    let relative_gap = (covered - window_area).abs() / window_area;
    let coverage = CoverageReport {
        window_area,
        covered_area: covered,
        relative_gap,
        max_overlap_area: max_overlap,
        ok: relative_gap < 1e-6 && max_overlap < 1e-6 * base_area,
    };
    Ok(TilingGroup {
        generators: mids,
        lattice,
        copies: kept,
        radius,
        window_center: c0,
        base_area,
        coverage,
    })
}

/// Copies meeting at the tiling vertex that is the image of base vertex `k`, with their angles.
pub fn vertex_star(tiling: &TilingGroup, base: &[Point2], k: usize) -> (usize, f64) {
    let p = base[k];
    let tol = 1e-9 * perimeter(base);
    let mut count = 0;
    let mut total = 0.0;
    for i in 0..tiling.copies.len() {
        let poly = tiling.copy_polygon(base, i);
        for (m, q) in poly.iter().enumerate() {
            if q.sub(p).norm() <= tol {
                count += 1;
                total += interior_angle(&poly, m);
            }
        }
    }
    (count, total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};

    fn pts(v: &[[f64; 2]]) -> Vec<Point2> {
        v.iter().map(|&a| a.into()).collect()
    }

    fn unit_square() -> Vec<Point2> {
        pts(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]])
    }

    fn regular(n: usize, r: f64) -> Vec<Point2> {
        (0..n)
            .map(|k| {
                let a = 2.0 * PI * k as f64 / n as f64;
                Point2::new(r * a.cos(), r * a.sin())
            })
            .collect()
    }

    /// Zonogonal hexagon from three edge vectors with increasing directions.
    pub(crate) fn zonogon(angles: [f64; 3], lengths: [f64; 3]) -> Vec<Point2> {
        let e: Vec<Point2> = (0..3)
            .map(|i| Point2::new(angles[i].cos(), angles[i].sin()).scale(lengths[i]))
            .collect();
        let all = [e[0], e[1], e[2], e[0].scale(-1.0), e[1].scale(-1.0), e[2].scale(-1.0)];
        let mut v = vec![Point2::new(0.0, 0.0)];
        for k in 0..5 {
            v.push(v[k].add(all[k]));
        }
        v
    }

    #[test]
    fn classification_and_valency() {
        let tri = pts(&[[0.0, 0.0], [2.0, 0.1], [0.7, 1.3]]);
        let c = classify(&tri).unwrap();
        assert!(c.in_class);
        assert_eq!(c.valency, Some(6));
        assert!(!c.constructible);
        assert_eq!(c.reason.as_deref(), Some("fails α_Ω=β_Ω"));

        let c = classify(&regular(6, 1.0)).unwrap();
        assert!(c.in_class);
        assert_eq!(c.valency, Some(3));

        let c = classify(&regular(5, 1.0)).unwrap();
        assert!(!c.in_class);
        assert_eq!(c.valency, None);

        let mut bent = regular(6, 1.0);
        bent[1].x += 0.1;
        assert!(!classify(&bent).unwrap().in_class);

        let q = pts(&[[0.0, 0.0], [3.0, 0.2], [2.0, 1.5], [-0.4, 0.9]]);
        assert_eq!(classify(&q).unwrap().valency, Some(4));

        for (n, j) in [(3u32, 6u32), (4, 4), (6, 3)] {
            assert_eq!((n - 2) * j, 2 * n);
        }
    }

    #[test]
    fn nonconvex_quadrilateral_flagged() {
        let dart = pts(&[[0.0, 0.0], [2.0, 0.0], [0.5, 0.5], [0.0, 2.0]]);
        let c = classify(&dart).unwrap();
        assert!(c.in_class);
        assert!(!c.convex);
        assert!(!c.constructible);
        assert_eq!(c.reason.as_deref(), Some("classified, construction unsupported"));
    }

    #[test]
    fn self_intersection_rejected() {
        let bow = pts(&[[0.0, 0.0], [1.0, 1.0], [1.0, 0.0], [0.0, 1.0]]);
        assert!(matches!(classify(&bow), Err(Error::SelfIntersecting)));
        let fold = pts(&[[0.0, 0.0], [2.0, 0.0], [1.0, 0.0], [1.0, 1.0]]);
        assert!(matches!(classify(&fold), Err(Error::SelfIntersecting)));
        assert!(classify(&pts(&[[0.0, 0.0], [1.0, 0.0]])).is_err());
    }

    #[test]
    fn triangle_always_fails_balance() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        for _ in 0..200 {
            let tri: Vec<Point2> = (0..3)
                .map(|_| Point2::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
                .collect();
            if signed_area(&tri).abs() < 1e-3 {
                continue;
            }
            for labels in [
                [EdgeLabel::A, EdgeLabel::B, EdgeLabel::A],
                [EdgeLabel::B, EdgeLabel::B, EdgeLabel::A],
            ] {
                let r = js_check(&tri, &labels).unwrap();
                assert!(!r.passes);
                assert_eq!(r.reason.as_deref(), Some("fails α_Ω=β_Ω"));
            }
        }
    }

    #[test]
    fn unit_square_passes() {
        let r = js_check(&unit_square(), &alternating_labels(4)).unwrap();
        assert!(r.passes);
        assert_eq!(r.alpha, 2.0);
        assert_eq!(r.beta, 2.0);
        // Four triangles cut by the two diagonals.
        assert_eq!(r.subdomains_checked, 4);
        // Triangle (0,1,2): alpha = 1, gamma = 2 + sqrt 2.
        assert!(2.0 < 2.0 + 2f64.sqrt());
    }

    #[test]
    fn non_tangential_quadrilateral_fails_balance() {
        let kite = pts(&[[0.0, 0.0], [4.0, 0.0], [4.2, 0.15], [0.0, 0.3]]);
        let r = js_check(&kite, &alternating_labels(4)).unwrap();
        assert!(!r.passes);
        assert!(r.violations.is_empty());
        assert_eq!(r.reason.as_deref(), Some("fails α_Ω=β_Ω"));
    }

    #[test]
    fn hexagon_subdomain_violation_reported() {
        let h = zonogon([0.0, 1.155, 2.533], [1.908, 0.761, 0.962]);
        let r = js_check(&h, &alternating_labels(6)).unwrap();
        assert!(!r.passes);
        assert!(!r.violations.is_empty());
        let hex = r.hexagon.unwrap();
        assert!(!hex.passes && hex.agrees_with_enumeration);
    }

    #[test]
    fn regular_hexagon_passes() {
        let h = regular(6, 1.0);
        let r = js_check(&h, &alternating_labels(6)).unwrap();
        assert!(r.passes, "{r:?}");
        let hex = r.hexagon.unwrap();
        for i in 0..3 {
            assert!((hex.diagonals[i] - 2.0).abs() < 1e-12);
            assert!((hex.bounds[i] - 1.0).abs() < 1e-12);
        }
        assert!(hex.passes && hex.agrees_with_enumeration);
    }

    #[test]
    fn hexagon_closed_form_agrees_with_enumeration() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(11);
        let mut seen_fail = 0;
        let mut done = 0;
        while done < 1000 {
            let mut th = [0.0, rng.gen_range(0.0..PI), rng.gen_range(0.0..PI)];
            th.sort_by(f64::total_cmp);
            if th[1] < 1e-2 || th[2] - th[1] < 1e-2 || PI - th[2] < 1e-2 {
                continue;
            }
            let l = [
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.2..2.0),
                rng.gen_range(0.2..2.0),
            ];
            let h = zonogon(th, l);
            let r = js_check(&h, &alternating_labels(6)).unwrap();
            let hex = r.hexagon.clone().unwrap();
            assert!(hex.agrees_with_enumeration, "{h:?} {r:?}");
            if !r.passes {
                seen_fail += 1;
            }
            done += 1;
        }
        assert!(seen_fail > 0);
    }

    #[test]
    fn heights_of_pi_square() {
        let s = pts(&[[0.0, 0.0], [PI, 0.0], [PI, PI], [0.0, PI]]);
        let lp = assign_heights(&s, &alternating_labels(4)).unwrap();
        let want = [0.0, PI, 0.0, PI];
        for k in 0..4 {
            assert!((lp.heights[k] - want[k]).abs() < 1e-15);
            let v = lp.lifted_vertex(k);
            assert!((v.t.cos() - v.x.cos() * v.y.cos()).abs() < 1e-15);
            assert!(lp.lifted_edge(k).minkowski(&lp.lifted_edge(k)).abs() < 1e-12);
        }
        let rev: Vec<EdgeLabel> = alternating_labels(4).into_iter().map(EdgeLabel::flipped).collect();
        let lq = assign_heights(&s, &rev).unwrap();
        for k in 0..4 {
            assert_eq!(lq.heights[k], -lp.heights[k]);
        }
    }

    #[test]
    fn heights_errors() {
        let rect = pts(&[[0.0, 0.0], [2.0, 0.0], [2.0, 1.0], [0.0, 1.0]]);
        assert!(matches!(
            assign_heights(&rect, &alternating_labels(4)),
            Err(Error::NonClosingHeights(_))
        ));
        let cw: Vec<Point2> = unit_square().into_iter().rev().collect();
        assert!(assign_heights(&cw, &alternating_labels(4)).is_err());
        assert!(assign_heights(
            &unit_square(),
            &[EdgeLabel::A, EdgeLabel::A, EdgeLabel::B, EdgeLabel::B]
        )
        .is_err());
    }

    #[test]
    fn unit_square_lattice() {
        let lp = assign_heights(&unit_square(), &alternating_labels(4)).unwrap();
        let t = generate_tiling(&lp, 3.0).unwrap();
        assert!(t.coverage.ok, "{:?}", t.coverage);
        assert!((t.covolume() - 2.0).abs() < 1e-12);
        let g = t.lattice.generators();
        for v in g {
            assert!((v.x.abs() - 1.0).abs() < 1e-12 && (v.y.abs() - 1.0).abs() < 1e-12);
            assert!(v.t.abs() < 1e-12);
        }
        // (2,0) and (0,2) are in the lattice.
        for w in [Point2::new(2.0, 0.0), Point2::new(0.0, 2.0)] {
            let det = g[0].x * g[1].y - g[0].y * g[1].x;
            let a = (w.x * g[1].y - w.y * g[1].x) / det;
            let b = (g[0].x * w.y - g[0].y * w.x) / det;
            assert!((a - a.round()).abs() < 1e-12 && (b - b.round()).abs() < 1e-12);
        }
        for k in 0..4 {
            let (j, total) = vertex_star(&t, &lp.vertices, k);
            assert_eq!(j, 4);
            assert!((total - 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn compositions_match_lattice() {
        let lp = assign_heights(&unit_square(), &alternating_labels(4)).unwrap();
        let t = generate_tiling(&lp, 2.0).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                let v = (lp.midpoint(j) - lp.midpoint(i)) * 2.0;
                let g = t.lattice.generators();
                let det = g[0].x * g[1].y - g[0].y * g[1].x;
                let a = (v.x * g[1].y - v.y * g[1].x) / det;
                let b = (g[0].x * v.y - g[0].y * v.x) / det;
                assert!((a - a.round()).abs() < 1e-12 && (b - b.round()).abs() < 1e-12);
                let lifted = g[0] * a.round() + g[1] * b.round();
                assert!(lifted.dist(&v) < 1e-12);
            }
        }
    }

    #[test]
    fn triangle_tiles_with_valency_six() {
        let tri = pts(&[[0.0, 0.0], [2.0, 0.1], [0.7, 1.3]]);
        let t = generate_planar_tiling(&tri, 4.0).unwrap();
        assert!(t.coverage.ok, "{:?}", t.coverage);
        assert!((t.covolume() - 2.0 * signed_area(&tri)).abs() < 1e-9);
        for k in 0..3 {
            let (j, total) = vertex_star(&t, &tri, k);
            assert_eq!(j, 6);
            assert!((total - 2.0 * PI).abs() < 1e-12);
        }
    }

    #[test]
    fn hexagon_tiling() {
        let h = regular(6, 1.0);
        let lp = assign_heights(&h, &alternating_labels(6)).unwrap();
        let t = generate_tiling(&lp, 4.0).unwrap();
        assert!(t.coverage.ok, "{:?}", t.coverage);
        assert!((t.covolume() - lp.area()).abs() < 1e-9);
        for k in 0..6 {
            let (j, total) = vertex_star(&t, &h, k);
            assert_eq!(j, 3);
            assert!((total - 2.0 * PI).abs() < 1e-12);
        }
        for g in t.lattice.generators() {
            assert!(g.minkowski(g) > 0.0);
        }
    }

    #[test]
    fn tiling_radius_error() {
        let lp = assign_heights(&unit_square(), &alternating_labels(4)).unwrap();
        assert!(matches!(generate_tiling(&lp, 0.0), Err(Error::InvalidRadius(_))));
        assert!(matches!(generate_tiling(&lp, -1.0), Err(Error::InvalidRadius(_))));
    }

    proptest! {
        #[test]
        fn random_quadrilateral_tiles(
            a in -0.4f64..0.4, b in -0.4f64..0.4, c in -0.4f64..0.4, d in -0.4f64..0.4,
        ) {
            let q = pts(&[[0.0 + a, 0.0 + b], [1.0, 0.0 + c], [1.0 + d, 1.0], [0.0, 1.0]]);
            prop_assume!(is_convex(&q) && signed_area(&q) > 0.1);
            let t = generate_planar_tiling(&q, 2.5).unwrap();
            prop_assert!(t.coverage.ok, "{:?}", t.coverage);
            prop_assert!((t.covolume() - 2.0 * signed_area(&q)).abs() < 1e-9);
            for k in 0..4 {
                let (j, total) = vertex_star(&t, &q, k);
                prop_assert_eq!(j, 4);
                prop_assert!((total - 2.0 * PI).abs() < 1e-9);
            }
        }

        #[test]
        fn lifted_edges_lightlike(lens in proptest::collection::vec(0.3f64..2.0, 3), rot in 0.0f64..PI) {
            let h = zonogon([rot, rot + 1.0, rot + 2.1], [lens[0], lens[1], lens[2]]);
            let lp = assign_heights(&h, &alternating_labels(6)).unwrap();
            for e in lp.lifted_edges() {
                prop_assert!(e.is_lightlike());
            }
        }
    }
}
