//! Conformality of step-function harmonic maps.
//!
//! With `phi = (1/pi) sum_k Delta_k / (s_k - zeta)` and lightlike jumps
//! `Delta_k`, the Hopf quadratic `Q = <phi, phi>` is rational with only simple
//! poles. It vanishes identically exactly when every residue
//!
//! ```text
//! R_k(s) = sum_{l != k} <Delta_k, Delta_l> / (s_k - s_l)
//! ```
//!
//! is zero. Three of the `R_k` are dependent (`sum R_k`, `sum s_k R_k` and
//! `sum s_k^2 R_k` vanish identically), matching the three real parameters of
//! the Moebius group of the half-plane, so three jump points are pinned and the
//! remaining `n - 3` are found by damped Newton on the residual system.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{GraphPatch, HoloVec3};
use crate::lorentz::LorentzVec3;

/// Number of jump points held fixed to remove the Moebius freedom.
pub const GAUGE_PINNED: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol_newton: f64,
    pub max_iter: usize,
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol_newton: 1e-11,
            max_iter: 100,
            max_halvings: 20,
        }
    }
}

/// Circles `|zeta - i| = r` on which the Hopf quadratic is sampled.
pub const TEST_CIRCLE_RADII: [f64; 2] = [0.5, 0.25];
pub const TEST_CIRCLE_SAMPLES: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub converged: bool,
    pub iterations: usize,
    /// `max_k |R_k|` over the full residual vector at the returned jumps.
    pub residual_norm: f64,
    pub jumps: Vec<f64>,
    /// `sup |Q|` over the test circles.
    pub hopf_sup: f64,
    pub residual_history: Vec<f64>,
    pub hopf_history: Vec<f64>,
    pub tol_newton: f64,
}

/// Residue system of a cyclic list of lightlike jumps.
#[derive(Debug, Clone, PartialEq)]
pub struct ConformalitySystem {
    edges: Vec<LorentzVec3>,
    gram: Vec<Vec<f64>>,
}

impl ConformalitySystem {
    pub fn new(edges: Vec<LorentzVec3>) -> Result<Self> {
        if edges.len() < 4 {
            return Err(Error::InvalidInput(format!(
                "need at least 4 edges, got {}",
                edges.len()
            )));
        }
        for (k, e) in edges.iter().enumerate() {
            if !e.is_lightlike() {
                return Err(Error::InvalidInput(format!("edge {k} = {e} is not lightlike")));
            }
        }
        let sum = edges.iter().fold(LorentzVec3::ZERO, |a, e| a + *e);
        let scale: f64 = edges.iter().map(|e| e.euclid_norm()).sum();
        if sum.euclid_norm() > 1e-9 * scale {
            return Err(Error::InvalidInput(format!("edges do not close: sum = {sum}")));
        }
        let gram = edges
            .iter()
            .map(|a| edges.iter().map(|b| a.minkowski(b)).collect())
            .collect();
        Ok(Self { edges, gram })
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn edges(&self) -> &[LorentzVec3] {
        &self.edges
    }

    pub fn residuals(&self, s: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|k| {
                (0..n)
                    .filter(|&l| l != k)
                    .map(|l| self.gram[k][l] / (s[k] - s[l]))
                    .sum()
            })
            .collect()
    }

    /// `dR_k / ds_m`.
    pub fn jacobian(&self, s: &[f64]) -> Vec<Vec<f64>> {
        let n = self.len();
        let mut jac = vec![vec![0.0; n]; n];
        for k in 0..n {
            for m in 0..n {
                if m == k {
                    continue;
                }
                let d = s[k] - s[m];
                let g = self.gram[k][m] / (d * d);
                jac[k][m] = g;
                jac[k][k] -= g;
            }
        }
        jac
    }

    /// `(sum R_k, sum s_k R_k, sum s_k^2 R_k)`; zero in exact arithmetic.
    pub fn identity_sums(&self, s: &[f64]) -> [f64; 3] {
        let r = self.residuals(s);
        let mut out = [0.0; 3];
        for (sk, rk) in s.iter().zip(&r) {
            out[0] += rk;
            out[1] += sk * rk;
            out[2] += sk * sk * rk;
        }
        out
    }

    pub fn derivative(&self, s: &[f64], zeta: Complex64) -> HoloVec3 {
        let mut phi = HoloVec3::ZERO;
        for (sk, e) in s.iter().zip(&self.edges) {
            let c = (Complex64::new(*sk, 0.0) - zeta).inv() / PI;
            let term = HoloVec3::scaled_real(e, c);
            phi.x += term.x;
            phi.y += term.y;
            phi.t += term.t;
        }
        phi
    }

    pub fn hopf(&self, s: &[f64], zeta: Complex64) -> Complex64 {
        self.derivative(s, zeta).minkowski_sq()
    }

    /// `sup |Q|` on the circles `|zeta - i| = r` for the given radii.
    pub fn hopf_sup(&self, s: &[f64], radii: &[f64], samples: usize) -> f64 {
        let mut sup: f64 = 0.0;
        for &r in radii {
            for j in 0..samples {
                let a = 2.0 * PI * j as f64 / samples as f64;
                let zeta = Complex64::i() + Complex64::from_polar(r, a);
                sup = sup.max(self.hopf(s, zeta).norm());
            }
        }
        sup
    }

    fn default_hopf_sup(&self, s: &[f64]) -> f64 {
        self.hopf_sup(s, &TEST_CIRCLE_RADII, TEST_CIRCLE_SAMPLES)
    }
}

fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

fn strictly_increasing(s: &[f64]) -> bool {
    s.iter().all(|x| x.is_finite()) && s.windows(2).all(|w| w[0] < w[1])
}

/// Hopf quadratic `phi_x^2 + phi_y^2 - phi_t^2` of a patch.
pub fn hopf_quadratic(patch: &GraphPatch, zeta: Complex64) -> Result<Complex64> {
    Ok(patch.holo_derivative(zeta)?.minkowski_sq())
}

/// Damped Newton for the jump points.
///
/// The first three entries of `initial` are pinned (the gauge); the rest are
/// solved so that the full residual vector vanishes.
pub fn solve_jumps(edges: &[LorentzVec3], initial: &[f64], opts: &SolverOptions) -> Result<SolverReport> {
    let n = edges.len();
    if n != 4 && n != 6 {
        return Err(Error::InvalidInput(format!(
            "jump solver supports 4 or 6 edges, got {n}"
        )));
    }
    if initial.len() != n {
        return Err(Error::InvalidInput(format!(
            "initial guess has {} points for {n} edges",
            initial.len()
        )));
    }
    if !strictly_increasing(initial) {
        return Err(Error::InvalidInput(
            "initial jump points must be strictly increasing".into(),
        ));
    }
    let sys = ConformalitySystem::new(edges.to_vec())?;
    let free = n - GAUGE_PINNED;
    let full_norm = |r: &[f64]| r.iter().map(|x| x * x).sum::<f64>().sqrt();

    let mut s = initial.to_vec();
    let mut residual_history = Vec::new();
    let mut hopf_history = Vec::new();
    let mut converged = false;
    let mut iterations = 0;

    loop {
        let r = sys.residuals(&s);
        let rmax = max_abs(&r);
        residual_history.push(rmax);
        hopf_history.push(sys.default_hopf_sup(&s));
        if rmax < opts.tol_newton {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            break;
        }
        iterations += 1;

        // Gauss-Newton on the full (consistent) residual vector; with the
        // three dependent rows this is Newton's method on the reduced system
        // but its steps are descent directions for the full residual norm.
        let jac = sys.jacobian(&s);
        let a = DMatrix::from_fn(n, free, |i, j| jac[i][GAUGE_PINNED + j]);
        let b = DVector::from_fn(n, |i, _| -r[i]);
        let Ok(step) = a.svd(true, true).solve(&b, 1e-14) else {
            break;
        };

        let base = full_norm(&r);
        let mut lambda = 1.0;
        let mut accepted = false;
        let mut any_ordered = false;
        for _ in 0..=opts.max_halvings {
            let mut trial = s.clone();
            for i in 0..free {
                trial[GAUGE_PINNED + i] += lambda * step[i];
            }
            if strictly_increasing(&trial) {
                any_ordered = true;
                if full_norm(&sys.residuals(&trial)) < base {
                    s = trial;
                    accepted = true;
                    break;
                }
            }
            lambda *= 0.5;
        }
        if !accepted {
            if !any_ordered {
                return Err(Error::OrderingCollapse);
            }
            break;
        }
    }

    let residual_norm = *residual_history.last().expect("at least one evaluation");
    Ok(SolverReport {
        converged,
        iterations,
        residual_norm,
        hopf_sup: *hopf_history.last().expect("at least one evaluation"),
        jumps: s,
        residual_history,
        hopf_history,
        tol_newton: opts.tol_newton,
    })
}

/// Runs the solver from several starts and keeps the distinct converged
/// solutions. Starts must share the pinned gauge for the comparison to mean
/// anything. Completeness is not claimed.
pub fn solve_multistart(edges: &[LorentzVec3], starts: &[Vec<f64>], opts: &SolverOptions) -> Vec<SolverReport> {
    let mut found: Vec<SolverReport> = Vec::new();
    for start in starts {
        let Ok(rep) = solve_jumps(edges, start, opts) else {
            continue;
        };
        if !rep.converged {
            continue;
        }
        let dup = found.iter().any(|f| {
            f.jumps
                .iter()
                .zip(&rep.jumps)
                .all(|(a, b)| (a - b).abs() <= 1e-8 * (1.0 + a.abs()))
        });
        if !dup {
            found.push(rep);
        }
    }
    found
}

/// Fallback for quadrilaterals: the single free jump is a root of the scalar
/// residual `R_3` on `(s_2, inf)`, located by scanning for a sign change and
/// then polished with the Newton solver.
pub fn solve_quadrilateral_by_scan(
    edges: &[LorentzVec3],
    pinned: [f64; 3],
    opts: &SolverOptions,
) -> Result<SolverReport> {
    if edges.len() != 4 {
        return Err(Error::InvalidInput("scan fallback is for quadrilaterals".into()));
    }
    let sys = ConformalitySystem::new(edges.to_vec())?;
    let span = (pinned[2] - pinned[0]).max(1e-3);
    let f = |x: f64| sys.residuals(&[pinned[0], pinned[1], pinned[2], x])[3];
    let mut prev_x = pinned[2] + span * 1e-6;
    let mut prev_f = f(prev_x);
    for i in 1..=400 {
        let x = pinned[2] + span * 1e-6 * 10f64.powf(i as f64 * 0.025);
        let fx = f(x);
        if prev_f.signum() != fx.signum() {
            let (mut lo, mut hi, mut flo) = (prev_x, x, prev_f);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            let guess = [pinned[0], pinned[1], pinned[2], 0.5 * (lo + hi)];
            return solve_jumps(edges, &guess, opts);
        }
        prev_x = x;
        prev_f = fx;
    }
    solve_jumps(edges, &[pinned[0], pinned[1], pinned[2], pinned[2] + span], opts)
}
