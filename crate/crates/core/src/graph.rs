//! The maximal graph over a labeled polygon: boundary data from the lifted vertices,
//! and the inverse of the planar part of the harmonic map, giving `t = ψ(x, y)`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::harmonic::{mobius_from_disk, GraphPatch, StepBoundaryData};
use crate::lorentz::LorentzVec3;
use crate::tessellate::{perimeter, point_in_polygon, LabeledPolygon, Point2};

const SEED_RADII: usize = 48;
const SEED_ANGLES: usize = 192;
const NEWTON_MAX_ITER: usize = 80;
const SEEDS_TRIED: usize = 8;

/// Step data whose arc `(s_k, s_{k+1})` carries the lifted vertex `k + 1`, so that the jump
/// at `s_k` blows up into lifted edge `k`.
pub fn boundary_data(polygon: &LabeledPolygon, jumps: &[f64]) -> Result<StepBoundaryData> {
    let n = polygon.len();
    if jumps.len() != n {
        return Err(Error::InvalidInput(format!("{} jumps for {n} edges", jumps.len())));
    }
    let values = (0..n).map(|k| polygon.lifted_vertex(k + 1)).collect();
    StepBoundaryData::new(jumps.to_vec(), values)
}

#[derive(Debug, Clone)]
pub struct MaximalGraph {
    polygon: LabeledPolygon,
    patch: GraphPatch,
    seeds: Vec<(Complex64, Point2)>,
    tol: f64,
}

fn zeta_of(w: Complex64) -> Complex64 {
    let i = Complex64::i();
    i * (1.0 + w) / (1.0 - w)
}

impl MaximalGraph {
    pub fn new(polygon: LabeledPolygon, jumps: &[f64]) -> Result<Self> {
        let patch = GraphPatch::new(boundary_data(&polygon, jumps)?);
        let mut seeds = Vec::with_capacity(SEED_RADII * SEED_ANGLES + 1);
        seeds.push((Complex64::new(0.0, 0.0), Point2::new(0.0, 0.0)));
        for i in 0..SEED_RADII {
            let u = 5.0 * i as f64 / (SEED_RADII - 1) as f64;
            let rho = 1.0 - 10f64.powf(-u) * 0.95;
            for j in 0..SEED_ANGLES {
                let a = 2.0 * std::f64::consts::PI * (j as f64 + 0.5 * (i % 2) as f64) / SEED_ANGLES as f64;
                seeds.push((Complex64::from_polar(rho, a), Point2::new(0.0, 0.0)));
            }
        }
        for s in &mut seeds {
            let x = patch.eval_unchecked(zeta_of(s.0));
            s.1 = Point2::new(x.x, x.y);
        }
        let tol = 1e-13 * (1.0 + perimeter(&polygon.vertices));
        Ok(MaximalGraph {
            polygon,
            patch,
            seeds,
            tol,
        })
    }

    pub fn polygon(&self) -> &LabeledPolygon {
        &self.polygon
    }

    pub fn patch(&self) -> &GraphPatch {
        &self.patch
    }

    /// Damped Newton in the disk coordinate `w`, where the whole boundary is compact.
    fn newton(&self, w0: Complex64, target: Point2) -> Option<Complex64> {
        let residual = |w: Complex64| {
            let x = self.patch.eval_unchecked(zeta_of(w));
            Point2::new(x.x - target.x, x.y - target.y)
        };
        let mut w = w0;
        let mut f = residual(w);
        for _ in 0..NEWTON_MAX_ITER {
            if f.norm() <= self.tol {
                return Some(w);
            }
            let zeta = zeta_of(w);
            let dz = 2.0 * Complex64::i() / ((1.0 - w) * (1.0 - w));
            let phi = self.patch.holo_derivative_unchecked(zeta);
            let (px, py) = (phi.x * dz, phi.y * dz);
            // Columns: derivative along Re w and along Im w.
            let (a, b, c, d) = (px.im, px.re, py.im, py.re);
            let det = a * d - b * c;
            if !det.is_finite() || det == 0.0 {
                return None;
            }
            let du = -(d * f.x - b * f.y) / det;
            let dv = -(-c * f.x + a * f.y) / det;
            let step = Complex64::new(du, dv);
            let mut lambda = 1.0;
            let mut accepted = false;
            for _ in 0..40 {
                let trial = w + step * lambda;
                if trial.norm() < 1.0 {
                    let ft = residual(trial);
                    if ft.norm() < f.norm() {
                        w = trial;
                        f = ft;
                        accepted = true;
                        break;
                    }
                }
                lambda *= 0.5;
            }
            if !accepted {
                return (f.norm() <= 1e3 * self.tol).then_some(w);
            }
        }
        (f.norm() <= 1e3 * self.tol).then_some(w)
    }

    /// Parameter `ζ ∈ ℍ` whose image lies over the interior point `p`.
    pub fn param_of(&self, p: Point2, hint: Option<Complex64>) -> Result<Complex64> {
        if !point_in_polygon(&self.polygon.vertices, p) {
            return Err(Error::OutsideDomain(format!(
                "({}, {}) is not inside the polygon",
                p.x, p.y
            )));
        }
        if let Some(z) = hint {
            if z.im > 0.0 {
                let w = (z - Complex64::i()) / (z + Complex64::i());
                if let Some(w) = self.newton(w, p) {
                    return Ok(zeta_of(w));
                }
            }
        }
        let mut best: Vec<(f64, usize)> = Vec::with_capacity(SEEDS_TRIED + 1);
        for (i, s) in self.seeds.iter().enumerate() {
            let d = s.1.sub(p).norm();
            if best.len() < SEEDS_TRIED || d < best[best.len() - 1].0 {
                let pos = best.partition_point(|e| e.0 <= d);
                best.insert(pos, (d, i));
                best.truncate(SEEDS_TRIED);
            }
        }
        for &(_, i) in &best {
            if let Some(w) = self.newton(self.seeds[i].0, p) {
                return mobius_from_disk(w);
            }
        }
        Err(Error::InverseMap { x: p.x, y: p.y })
    }

    /// Point of the surface over `p`.
    pub fn point(&self, p: Point2) -> Result<LorentzVec3> {
        Ok(self.patch.eval_unchecked(self.param_of(p, None)?))
    }

    pub fn psi(&self, p: Point2) -> Result<f64> {
        Ok(self.point(p)?.t)
    }

    /// `ψ` together with its gradient, from the Jacobian of the parametrization.
    pub fn psi_and_gradient_at(&self, zeta: Complex64) -> Result<(f64, [f64; 2])> {
        let x = self.patch.eval(zeta)?;
        let (dxi, deta) = self.patch.jacobian(zeta)?;
        let det = dxi.x * deta.y - deta.x * dxi.y;
        if det == 0.0 {
            return Err(Error::InverseMap { x: x.x, y: x.y });
        }
        // [ψ_x ψ_y] M = [t_ξ t_η] with M the planar Jacobian.
        let gx = (dxi.t * deta.y - deta.t * dxi.y) / det;
        let gy = (deta.t * dxi.x - dxi.t * deta.x) / det;
        Ok((x.t, [gx, gy]))
    }

    pub fn gradient(&self, p: Point2) -> Result<[f64; 2]> {
        let z = self.param_of(p, None)?;
        Ok(self.psi_and_gradient_at(z)?.1)
    }

    /// Samples `ψ` on a tensor grid; rows follow `y`, columns follow `x`. Each solve is seeded by its neighbour.
    pub fn sample_grid(&self, xs: &[f64], ys: &[f64]) -> Result<Vec<Vec<f64>>> {
        let mut out = Vec::with_capacity(ys.len());
        let mut row_start: Option<Complex64> = None;
        for &y in ys {
            let mut row = Vec::with_capacity(xs.len());
            let mut hint = row_start;
            for (i, &x) in xs.iter().enumerate() {
                let z = self.param_of(Point2::new(x, y), hint)?;
                if i == 0 {
                    row_start = Some(z);
                }
                hint = Some(z);
                row.push(self.patch.eval_unchecked(z).t);
            }
            out.push(row);
        }
        Ok(out)
    }

    /// Height on the boundary: linear along the lifted edge `k`, `s ∈ [0, 1]`.
    pub fn boundary_point(&self, k: usize, s: f64) -> LorentzVec3 {
        self.polygon.lifted_vertex(k) + self.polygon.lifted_edge(k) * s
    }
}
