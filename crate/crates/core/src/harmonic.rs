//! Harmonic kernel on the upper half-plane.
//!
//! Boundary data are step functions on the real line with values in L³. Their
//! Poisson integral is a finite sum of harmonic measures of intervals, and its
//! holomorphic completion `F` (with `X = Im F`) is a sum of logarithms.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lorentz::LorentzVec3;

/// Evaluation closer than this to a jump point is refused.
pub const JUMP_EXCLUSION: f64 = 1e-12;

/// The two harmonic branches of `arg` used throughout.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchedArg {
    /// `Arg` on `C \ (-inf, 0]`, valued in `(-pi, pi)`.
    Principal,
    /// `Arg+` on `C \ [0, inf)`, valued in `(0, 2 pi)`.
    Plus,
}

pub fn arg_branch(z: Complex64, branch: BranchedArg) -> Result<f64> {
    let on_cut = match branch {
        BranchedArg::Principal => z.im == 0.0 && z.re <= 0.0,
        BranchedArg::Plus => z.im == 0.0 && z.re >= 0.0,
    };
    if on_cut || !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::BranchCutViolation { re: z.re, im: z.im });
    }
    let a = z.im.atan2(z.re);
    Ok(match branch {
        BranchedArg::Principal => a,
        BranchedArg::Plus if a <= 0.0 => a + 2.0 * PI,
        BranchedArg::Plus => a,
    })
}

/// Harmonic measure of `(sigma, tau)` seen from `zeta` in the upper half-plane,
/// `(1/pi) [Arg(tau - zeta) - Arg(sigma - zeta)]`.
pub fn harmonic_measure(zeta: Complex64, sigma: f64, tau: f64) -> Result<f64> {
    if !(sigma < tau) {
        return Err(Error::EmptyInterval { sigma, tau });
    }
    if !(zeta.im > 0.0) {
        return Err(Error::OutsideDomain(format!("{zeta} is not in the upper half-plane")));
    }
    Ok(hm_unchecked(zeta, sigma, tau))
}

/// The angle subtended by the interval, written through `(tau - zeta) conj(sigma - zeta)`
/// so that the imaginary part carries no cancellation.
#[inline]
pub(crate) fn hm_unchecked(zeta: Complex64, sigma: f64, tau: f64) -> f64 {
    let (xi, eta) = (zeta.re, zeta.im);
    let re = (tau - xi) * (sigma - xi) + eta * eta;
    let im = eta * (tau - sigma);
    im.atan2(re) / PI
}

/// Complex 3-vector, the holomorphic derivative of the completion `F`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HoloVec3 {
    pub x: Complex64,
    pub y: Complex64,
    pub t: Complex64,
}

impl HoloVec3 {
    pub const ZERO: HoloVec3 = HoloVec3 {
        x: Complex64::new(0.0, 0.0),
        y: Complex64::new(0.0, 0.0),
        t: Complex64::new(0.0, 0.0),
    };

    pub fn scaled_real(v: &LorentzVec3, c: Complex64) -> Self {
        Self {
            x: c * v.x,
            y: c * v.y,
            t: c * v.t,
        }
    }

    /// `x^2 + y^2 - t^2`, complex-bilinear (no conjugation).
    pub fn minkowski_sq(&self) -> Complex64 {
        self.x * self.x + self.y * self.y - self.t * self.t
    }

    pub fn norm(&self) -> f64 {
        (self.x.norm_sqr() + self.y.norm_sqr() + self.t.norm_sqr()).sqrt()
    }

    pub fn im(&self) -> LorentzVec3 {
        LorentzVec3::new(self.x.im, self.y.im, self.t.im)
    }

    pub fn re(&self) -> LorentzVec3 {
        LorentzVec3::new(self.x.re, self.y.re, self.t.re)
    }

    fn add_assign(&mut self, o: HoloVec3) {
        self.x += o.x;
        self.y += o.y;
        self.t += o.t;
    }
}

/// Piecewise constant boundary values on the real line.
///
/// `values[k]` is taken on `(s_k, s_{k+1})` for `k < n - 1`; the last value is
/// taken on the unbounded arc `(s_{n-1}, inf) ∪ (-inf, s_0)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepBoundaryData {
    jumps: Vec<f64>,
    values: Vec<LorentzVec3>,
}

impl StepBoundaryData {
    pub fn new(jumps: Vec<f64>, values: Vec<LorentzVec3>) -> Result<Self> {
        if jumps.len() != values.len() {
            return Err(Error::InvalidInput(format!(
                "{} jumps but {} values",
                jumps.len(),
                values.len()
            )));
        }
        if jumps.is_empty() {
            return Err(Error::InvalidInput("step data needs at least one jump".into()));
        }
        if jumps.iter().any(|s| !s.is_finite()) || values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("step data must be finite".into()));
        }
        if jumps.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::InvalidInput("jump points must be strictly increasing".into()));
        }
        let data = Self { jumps, values };
        if data.len() > 1 && data.deltas().iter().any(|d| d.euclid_norm() == 0.0) {
            return Err(Error::InvalidInput("consecutive boundary values must differ".into()));
        }
        Ok(data)
    }

    /// Single value everywhere; the jump point is nominal.
    pub fn constant(value: LorentzVec3) -> Self {
        Self {
            jumps: vec![0.0],
            values: vec![value],
        }
    }

    pub fn len(&self) -> usize {
        self.jumps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jumps.is_empty()
    }

    pub fn jumps(&self) -> &[f64] {
        &self.jumps
    }

    pub fn values(&self) -> &[LorentzVec3] {
        &self.values
    }

    /// Value on the arc to the left of jump `k`.
    pub fn left_value(&self, k: usize) -> LorentzVec3 {
        let n = self.len();
        self.values[(k + n - 1) % n]
    }

    /// Value on the arc to the right of jump `k`.
    pub fn right_value(&self, k: usize) -> LorentzVec3 {
        self.values[k]
    }

    /// Jump sizes `Delta_k = v_k - v_{k-1}` (cyclic).
    pub fn deltas(&self) -> Vec<LorentzVec3> {
        (0..self.len())
            .map(|k| self.right_value(k) - self.left_value(k))
            .collect()
    }

    /// Boundary value at a real point that is not a jump.
    pub fn value_at(&self, s: f64) -> LorentzVec3 {
        match self.jumps.iter().rposition(|&j| j < s) {
            Some(k) => self.values[k],
            None => self.values[self.len() - 1],
        }
    }

    pub fn with_jumps(&self, jumps: Vec<f64>) -> Result<Self> {
        Self::new(jumps, self.values.clone())
    }
}

/// Harmonic map `X = Im F` on the upper half-plane with step boundary data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphPatch {
    data: StepBoundaryData,
}

impl GraphPatch {
    pub fn new(data: StepBoundaryData) -> Self {
        Self { data }
    }

    pub fn data(&self) -> &StepBoundaryData {
        &self.data
    }

    pub fn jumps(&self) -> &[f64] {
        self.data.jumps()
    }

    fn check_point(&self, zeta: Complex64) -> Result<()> {
        if !(zeta.im > 0.0) || !zeta.re.is_finite() || !zeta.im.is_finite() {
            return Err(Error::OutsideDomain(format!("{zeta} is not in the upper half-plane")));
        }
        self.check_jumps(zeta)
    }

    fn check_jumps(&self, zeta: Complex64) -> Result<()> {
        for &s in self.data.jumps() {
            if (zeta - s).norm() < JUMP_EXCLUSION {
                return Err(Error::Pole(s));
            }
        }
        Ok(())
    }

    /// Harmonic measures of the bounded arcs at `zeta` (no checks).
    fn finite_measures(&self, zeta: Complex64) -> impl Iterator<Item = f64> + '_ {
        self.data
            .jumps()
            .windows(2)
            .map(move |w| hm_unchecked(zeta, w[0], w[1]))
    }

    pub fn eval(&self, zeta: Complex64) -> Result<LorentzVec3> {
        self.check_point(zeta)?;
        Ok(self.eval_unchecked(zeta))
    }

    pub(crate) fn eval_unchecked(&self, zeta: Complex64) -> LorentzVec3 {
        let vals = self.data.values();
        let n = vals.len();
        let mut acc = LorentzVec3::ZERO;
        let mut total = 0.0;
        for (k, h) in self.finite_measures(zeta).enumerate() {
            acc += vals[k] * h;
            total += h;
        }
        acc + vals[n - 1] * (1.0 - total)
    }

    /// `phi = F' = (1/pi) sum_k Delta_k / (s_k - zeta)`.
    pub fn holo_derivative(&self, zeta: Complex64) -> Result<HoloVec3> {
        self.check_jumps(zeta)?;
        Ok(self.holo_derivative_unchecked(zeta))
    }

    pub(crate) fn holo_derivative_unchecked(&self, zeta: Complex64) -> HoloVec3 {
        let mut acc = HoloVec3::ZERO;
        for (s, d) in self.data.jumps().iter().zip(self.data.deltas()) {
            let c = (Complex64::new(*s, 0.0) - zeta).inv() / PI;
            acc.add_assign(HoloVec3::scaled_real(&d, c));
        }
        acc
    }

    /// Holomorphic completion `F` with `Im F = X` on the upper half-plane.
    pub fn holo_potential(&self, zeta: Complex64) -> Result<HoloVec3> {
        self.check_point(zeta)?;
        let s = self.data.jumps();
        let vals = self.data.values();
        let n = vals.len();
        let log = |a: f64| (Complex64::new(a, 0.0) - zeta).ln();
        let mut acc = HoloVec3::ZERO;
        for k in 0..n - 1 {
            let c = (log(s[k + 1]) - log(s[k])) / PI;
            acc.add_assign(HoloVec3::scaled_real(&vals[k], c));
        }
        let c = Complex64::new(0.0, 1.0) + (log(s[0]) - log(s[n - 1])) / PI;
        acc.add_assign(HoloVec3::scaled_real(&vals[n - 1], c));
        Ok(acc)
    }

    /// Rows are `dX/dxi` and `dX/deta` at `zeta`.
    pub fn jacobian(&self, zeta: Complex64) -> Result<(LorentzVec3, LorentzVec3)> {
        let phi = self.holo_derivative(zeta)?;
        // X = Im F: d/dxi -> Im F', d/deta -> Im(i F') = Re F'.
        Ok((phi.im(), phi.re()))
    }
}

pub fn eval_patch(patch: &GraphPatch, zeta: Complex64) -> Result<LorentzVec3> {
    patch.eval(zeta)
}

pub fn holo_derivative(patch: &GraphPatch, zeta: Complex64) -> Result<HoloVec3> {
    patch.holo_derivative(zeta)
}

/// Cayley map `(zeta - i) / (zeta + i)` from the upper half-plane to the unit disk.
pub fn mobius_to_disk(zeta: Complex64) -> Result<Complex64> {
    let den = zeta + Complex64::i();
    if den.norm() == 0.0 {
        return Err(Error::MoebiusPole);
    }
    Ok((zeta - Complex64::i()) / den)
}

/// Inverse Cayley map `i (1 + w) / (1 - w)`.
pub fn mobius_from_disk(w: Complex64) -> Result<Complex64> {
    let den = Complex64::new(1.0, 0.0) - w;
    if den.norm() == 0.0 {
        return Err(Error::MoebiusPole);
    }
    Ok(Complex64::i() * (1.0 + w) / den)
}

/// Real points `-cot(pi (2k+1) / (2n))`: the images of `n` equally spaced
/// points of the unit circle (none at `w = 1`) under the inverse Cayley map.
pub fn symmetric_jumps(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let half = PI * (2 * k + 1) as f64 / (2 * n) as f64;
            -half.cos() / half.sin()
        })
        .collect()
}
