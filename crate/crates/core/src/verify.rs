//! Closed-form oracles and numerical checks: the implicit surface catalog, the maximal
//! surface equation, the tame degeneration rate and cluster segments.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::MaximalGraph;
use crate::harmonic::GraphPatch;
use crate::lorentz::LorentzVec3;
use crate::tessellate::Point2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ImplicitSurface {
    S1,
    S2,
    S3,
    H,
    P,
}

/// A straight line `point + s * direction` lying on a catalog surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CatalogLine {
    pub point: LorentzVec3,
    pub direction: LorentzVec3,
    /// Parameter range on which the line is sampled.
    pub range: (f64, f64),
}

impl ImplicitSurface {
    pub const ALL: [ImplicitSurface; 5] = [
        ImplicitSurface::S1,
        ImplicitSurface::S2,
        ImplicitSurface::S3,
        ImplicitSurface::H,
        ImplicitSurface::P,
    ];

    pub fn residual(self, p: &LorentzVec3) -> f64 {
        let (x, y, t) = (p.x, p.y, p.t);
        match self {
            ImplicitSurface::S1 => 2.0 * (-x + t) * t.sin() - (x * x + y * y - 2.0 * x * t + t * t) * t.cos(),
            ImplicitSurface::S2 => t.cos() * y.cosh() + x.cos(),
            ImplicitSurface::S3 => t.cos() - x.cos() * y.cos(),
            ImplicitSurface::H => x.sin().powi(2) + y * y - t * t,
            ImplicitSurface::P => 12.0 * (x * x - t * t) - (x + t).powi(4) + 12.0 * y * y,
        }
    }

    /// Points known to lie on the surface.
    pub fn sample_points(self) -> Vec<LorentzVec3> {
        let v = LorentzVec3::new;
        match self {
            ImplicitSurface::S1 => {
                let mut pts = vec![v(0.0, 0.0, 0.0)];
                for t in [0.3f64, 1.0, 2.0, 4.0] {
                    pts.push(v(t - 2.0 * t.tan(), 0.0, t));
                }
                pts
            }
            ImplicitSurface::S2 => vec![v(0.0, 0.0, PI), v(PI, 0.0, 0.0), v(PI / 2.0, 0.0, PI / 2.0)],
            ImplicitSurface::S3 => vec![
                v(PI / 2.0, PI / 2.0, PI / 2.0),
                v(0.0, 0.0, 0.0),
                v(PI, 0.0, PI),
                v(PI, PI, 0.0),
            ],
            ImplicitSurface::H => vec![v(PI / 2.0, 0.0, 1.0), v(0.0, 0.0, 0.0)],
            ImplicitSurface::P => vec![v(0.0, 0.0, 0.0), v(4.0 / 3.0, 0.0, 2.0 / 3.0)],
        }
    }

    /// Lightlike lines known to lie on the surface.
    pub fn lightlike_lines(self) -> Vec<CatalogLine> {
        let v = LorentzVec3::new;
        let line = |p, d| CatalogLine {
            point: p,
            direction: d,
            range: (-10.0, 10.0),
        };
        match self {
            ImplicitSurface::S1 => vec![line(v(0.0, 0.0, 0.0), v(1.0, 0.0, 1.0))],
            ImplicitSurface::S2 => {
                vec![
                    line(v(0.0, 0.0, PI), v(1.0, 0.0, -1.0)),
                    line(v(0.0, 0.0, PI), v(1.0, 0.0, 1.0)),
                ]
            }
            ImplicitSurface::S3 => vec![
                line(v(0.0, 0.0, 0.0), v(1.0, 0.0, 1.0)),
                line(v(0.0, 0.0, 0.0), v(1.0, 0.0, -1.0)),
                line(v(0.0, 0.0, 0.0), v(0.0, 1.0, 1.0)),
                line(v(0.0, 0.0, 0.0), v(0.0, 1.0, -1.0)),
            ],
            ImplicitSurface::H => {
                vec![
                    line(v(0.0, 0.0, 0.0), v(0.0, 1.0, 1.0)),
                    line(v(0.0, 0.0, 0.0), v(0.0, 1.0, -1.0)),
                ]
            }
            ImplicitSurface::P => vec![line(v(0.0, 0.0, 0.0), v(1.0, 0.0, -1.0))],
        }
    }
}

impl fmt::Display for ImplicitSurface {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

impl FromStr for ImplicitSurface {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "S1" => Ok(ImplicitSurface::S1),
            "S2" => Ok(ImplicitSurface::S2),
            "S3" => Ok(ImplicitSurface::S3),
            "H" => Ok(ImplicitSurface::H),
            "P" => Ok(ImplicitSurface::P),
            other => Err(Error::UnknownSurface(other.to_string())),
        }
    }
}

pub fn implicit_residual(name: &str, p: &LorentzVec3) -> Result<f64> {
    Ok(name.parse::<ImplicitSurface>()?.residual(p))
}

/// The Scherk sheet `ψ = arccos(cos x cos y)` on `(0, π)²`.
pub fn scherk_psi(x: f64, y: f64) -> f64 {
    (x.cos() * y.cos()).acos()
}

pub fn scherk_gradient(x: f64, y: f64) -> [f64; 2] {
    let c = x.cos() * y.cos();
    let s = (1.0 - c * c).sqrt();
    [x.sin() * y.cos() / s, x.cos() * y.sin() / s]
}

/// Values of `ψ` on a uniform grid: `values[j][i] = ψ(x0 + i h, y0 + j h)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GraphGrid {
    pub x0: f64,
    pub y0: f64,
    pub h: f64,
    pub values: Vec<Vec<f64>>,
}

impl GraphGrid {
    pub fn from_fn(x0: f64, y0: f64, h: f64, nx: usize, ny: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let values = (0..ny)
            .map(|j| (0..nx).map(|i| f(x0 + i as f64 * h, y0 + j as f64 * h)).collect())
            .collect();
        GraphGrid { x0, y0, h, values }
    }

    pub fn xs(&self) -> Vec<f64> {
        let nx = self.values.first().map_or(0, Vec::len);
        (0..nx).map(|i| self.x0 + i as f64 * self.h).collect()
    }

    pub fn ys(&self) -> Vec<f64> {
        (0..self.values.len()).map(|j| self.y0 + j as f64 * self.h).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MaximalResidual {
    pub sup_residual: f64,
    pub max_gradient_sq: f64,
    pub h: f64,
    pub points: usize,
}

/// Central-difference residual of `(1-ψ_y²)ψ_xx + 2ψ_xψ_yψ_xy + (1-ψ_x²)ψ_yy` at interior nodes.
pub fn maximal_equation_residual(grid: &GraphGrid) -> Result<MaximalResidual> {
    maximal_equation_residual_in(
        grid,
        [f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY],
    )
}

/// As [`maximal_equation_residual`], with the supremum taken over interior nodes inside
/// `[x_min, x_max] × [y_min, y_max]`, so grids of different steps can be compared on one region.
pub fn maximal_equation_residual_in(grid: &GraphGrid, region: [f64; 4]) -> Result<MaximalResidual> {
    let h = grid.h;
    let v = &grid.values;
    let ny = v.len();
    let nx = v.first().map_or(0, Vec::len);
    if nx < 3 || ny < 3 || v.iter().any(|r| r.len() != nx) {
        return Err(Error::InvalidInput(
            "grid needs at least 3x3 rectangular samples".into(),
        ));
    }
    let mut sup: f64 = 0.0;
    let mut grad: f64 = 0.0;
    let mut count = 0;
    for j in 1..ny - 1 {
        let y = grid.y0 + j as f64 * h;
        if y < region[2] - 1e-12 || y > region[3] + 1e-12 {
            continue;
        }
        for i in 1..nx - 1 {
            let x = grid.x0 + i as f64 * h;
            if x < region[0] - 1e-12 || x > region[1] + 1e-12 {
                continue;
            }
            let px = (v[j][i + 1] - v[j][i - 1]) / (2.0 * h);
            let py = (v[j + 1][i] - v[j - 1][i]) / (2.0 * h);
            let g = px * px + py * py;
            if g >= 1.0 {
                return Err(Error::NotSpacelike(g));
            }
            grad = grad.max(g);
            let pxx = (v[j][i + 1] - 2.0 * v[j][i] + v[j][i - 1]) / (h * h);
            let pyy = (v[j + 1][i] - 2.0 * v[j][i] + v[j - 1][i]) / (h * h);
            let pxy = (v[j + 1][i + 1] - v[j - 1][i + 1] - v[j + 1][i - 1] + v[j - 1][i - 1]) / (4.0 * h * h);
            let r = (1.0 - py * py) * pxx + 2.0 * px * py * pxy + (1.0 - px * px) * pyy;
            sup = sup.max(r.abs());
            count += 1;
        }
    }
    Ok(MaximalResidual {
        sup_residual: sup,
        max_gradient_sq: grad,
        h,
        points: count,
    })
}

/// Accepted band for the fitted degeneration exponent.
pub const DEGENERATION_BAND: (f64, f64) = (1.7, 2.3);
/// Deviations below this are treated as rounding noise and dropped from the fit.
pub const DEGENERATION_NOISE_FLOOR: f64 = 1e-11;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DegenerationFit {
    pub edge: usize,
    pub sign: f64,
    pub exponent: f64,
    pub constant: f64,
    pub distances: Vec<f64>,
    pub deviations: Vec<f64>,
    pub accepted: bool,
    pub warnings: Vec<String>,
}

/// Least-squares slope and intercept of `y` against `x`.
pub fn linear_fit(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}

/// Fits `|∂ψ/∂τ - sign| ≈ C dist^e` approaching the midpoint of `edge` along its inward normal.
/// Distances run log-uniformly over two decades ending at `d_max` (relative to the edge length).
pub fn degeneration_fit(
    graph: &MaximalGraph,
    edge: usize,
    sign: f64,
    samples: usize,
    d_max: f64,
) -> Result<DegenerationFit> {
    let samples = samples.max(8);
    let poly = graph.polygon();
    let n = poly.len();
    if edge >= n {
        return Err(Error::InvalidInput(format!("edge {edge} out of range")));
    }
    let a = poly.vertices[edge];
    let b = poly.vertices[(edge + 1) % n];
    let len = b.sub(a).norm();
    let tangent = b.sub(a).scale(1.0 / len);
    let normal = Point2::new(-tangent.y, tangent.x);
    let mid = a.add(b).scale(0.5);
    let mut distances = Vec::new();
    let mut deviations = Vec::new();
    let mut warnings = Vec::new();
    let mut hint: Option<Complex64> = None;
    for i in 0..samples {
        let d = d_max * len * 10f64.powf(-2.0 * i as f64 / (samples - 1) as f64);
        let p = mid.add(normal.scale(d));
        let z = graph.param_of(p, hint)?;
        hint = Some(z);
        let (_, g) = graph.psi_and_gradient_at(z)?;
        let dev = (g[0] * tangent.x + g[1] * tangent.y - sign).abs();
        if dev < DEGENERATION_NOISE_FLOOR {
            warnings.push(format!("sample at distance {d:.3e} below noise floor; fit truncated"));
            break;
        }
        distances.push(d);
        deviations.push(dev);
    }
    if distances.len() < 3 {
        return Err(Error::InvalidInput("too few samples above the noise floor".into()));
    }
    let lx: Vec<f64> = distances.iter().map(|d| d.ln()).collect();
    let ly: Vec<f64> = deviations.iter().map(|d| d.ln()).collect();
    let (exponent, c) = linear_fit(&lx, &ly);
    Ok(DegenerationFit {
        edge,
        sign,
        exponent,
        constant: c.exp(),
        distances,
        deviations,
        accepted: (DEGENERATION_BAND.0..=DEGENERATION_BAND.1).contains(&exponent),
        warnings,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClusterReport {
    pub jump: usize,
    pub radii: Vec<f64>,
    /// Largest distance from `X` on each half-circle to the segment `[a, b]`.
    pub distances: Vec<f64>,
    pub segment_length: f64,
}

fn distance_to_segment(p: &LorentzVec3, a: &LorentzVec3, b: &LorentzVec3) -> f64 {
    let d = *b - *a;
    let l2 = d.euclid_norm_sq();
    if l2 == 0.0 {
        return p.dist(a);
    }
    let s = ((*p - *a).dot(&d) / l2).clamp(0.0, 1.0);
    p.dist(&(*a + d * s))
}

/// Evaluates `X` on half-circles `|ζ - s_k| = ρ` in the upper half-plane.
pub fn cluster_segment_check(patch: &GraphPatch, k: usize, radii: &[f64], samples: usize) -> Result<ClusterReport> {
    let data = patch.data();
    if k >= data.len() {
        return Err(Error::InvalidInput(format!("jump {k} out of range")));
    }
    let (a, b) = (data.left_value(k), data.right_value(k));
    let s = patch.jumps()[k];
    let samples = samples.max(2);
    let mut distances = Vec::with_capacity(radii.len());
    for &rho in radii {
        let mut worst: f64 = 0.0;
        for j in 0..samples {
            let th = PI * (j as f64 + 0.5) / samples as f64;
            let x = patch.eval(Complex64::new(s, 0.0) + Complex64::from_polar(rho, th))?;
            worst = worst.max(distance_to_segment(&x, &a, &b));
        }
        distances.push(worst);
    }
    Ok(ClusterReport {
        jump: k,
        radii: radii.to_vec(),
        distances,
        segment_length: a.dist(&b),
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckResult {
    pub name: String,
    pub value: f64,
    pub tolerance: f64,
    pub passed: bool,
    pub detail: Option<String>,
}

impl CheckResult {
    /// Passes when `value < tolerance`.
    pub fn below(name: impl Into<String>, value: f64, tolerance: f64) -> Self {
        CheckResult {
            name: name.into(),
            value,
            tolerance,
            passed: value < tolerance,
            detail: None,
        }
    }

    pub fn with_detail(mut self, d: impl Into<String>) -> Self {
        self.detail = Some(d.into());
        self
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub checks: Vec<CheckResult>,
    /// Every tolerance used by the pipeline, by name.
    pub tolerances: std::collections::BTreeMap<String, f64>,
}

impl VerificationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn push(&mut self, c: CheckResult) {
        self.tolerances.entry(c.name.clone()).or_insert(c.tolerance);
        self.checks.push(c);
    }
}
