//! Lorentz-Minkowski 3-space with signature (+,+,-).
//!
//! Points and vectors share one type, [`LorentzVec3`]. The only motions the
//! constructions need are point symmetries and the translations obtained by
//! composing two of them.

use std::fmt;
use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for lightlike classification.
pub const CAUSAL_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LorentzVec3 {
    pub x: f64,
    pub y: f64,
    pub t: f64,
}

impl LorentzVec3 {
    pub const ZERO: LorentzVec3 = LorentzVec3 { x: 0.0, y: 0.0, t: 0.0 };

    pub const fn new(x: f64, y: f64, t: f64) -> Self {
        Self { x, y, t }
    }

    pub fn minkowski(&self, other: &Self) -> f64 {
        minkowski(self, other)
    }

    pub fn euclid_norm_sq(&self) -> f64 {
        self.x * self.x + self.y * self.y + self.t * self.t
    }

    pub fn euclid_norm(&self) -> f64 {
        self.euclid_norm_sq().sqrt()
    }

    pub fn dist(&self, other: &Self) -> f64 {
        (*self - *other).euclid_norm()
    }

    /// Euclidean cross product, used only for collinearity tests.
    pub fn cross(&self, o: &Self) -> Self {
        Self::new(
            self.y * o.t - self.t * o.y,
            self.t * o.x - self.x * o.t,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn dot(&self, o: &Self) -> f64 {
        self.x * o.x + self.y * o.y + self.t * o.t
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.t.is_finite()
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.t]
    }

    /// Tolerance used when deciding whether `self` is lightlike.
    pub fn causal_tolerance(&self) -> f64 {
        CAUSAL_RTOL * self.euclid_norm_sq().max(1.0)
    }

    pub fn is_lightlike(&self) -> bool {
        self.minkowski(self).abs() <= self.causal_tolerance()
    }
}

impl From<[f64; 3]> for LorentzVec3 {
    fn from(a: [f64; 3]) -> Self {
        Self::new(a[0], a[1], a[2])
    }
}

impl fmt::Display for LorentzVec3 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.x, self.y, self.t)
    }
}

impl Add for LorentzVec3 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.x + o.x, self.y + o.y, self.t + o.t)
    }
}

impl AddAssign for LorentzVec3 {
    fn add_assign(&mut self, o: Self) {
        self.x += o.x;
        self.y += o.y;
        self.t += o.t;
    }
}

impl Sub for LorentzVec3 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        Self::new(self.x - o.x, self.y - o.y, self.t - o.t)
    }
}

impl Neg for LorentzVec3 {
    type Output = Self;
    fn neg(self) -> Self {
        Self::new(-self.x, -self.y, -self.t)
    }
}

impl Mul<f64> for LorentzVec3 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        Self::new(self.x * s, self.y * s, self.t * s)
    }
}

impl Mul<LorentzVec3> for f64 {
    type Output = LorentzVec3;
    fn mul(self, v: LorentzVec3) -> LorentzVec3 {
        v * self
    }
}

impl Div<f64> for LorentzVec3 {
    type Output = Self;
    fn div(self, s: f64) -> Self {
        Self::new(self.x / s, self.y / s, self.t / s)
    }
}

/// Minkowski product `u.x v.x + u.y v.y - u.t v.t`.
pub fn minkowski(u: &LorentzVec3, v: &LorentzVec3) -> f64 {
    u.x * v.x + u.y * v.y - u.t * v.t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CausalCharacter {
    Spacelike,
    Lightlike,
    Timelike,
}

/// Classifies `v` by the sign of its Minkowski self-product, with the
/// lightlike band `|<v,v>| <= 1e-9 * max(1, |v|^2)`.
pub fn causal_character(v: &LorentzVec3) -> Result<CausalCharacter> {
    if v.x == 0.0 && v.y == 0.0 && v.t == 0.0 {
        return Err(Error::DegenerateVector);
    }
    let q = v.minkowski(v);
    let eps = v.causal_tolerance();
    Ok(if q > eps {
        CausalCharacter::Spacelike
    } else if q.abs() <= eps {
        CausalCharacter::Lightlike
    } else {
        CausalCharacter::Timelike
    })
}

/// Point symmetry `p -> 2c - p`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointSymmetry {
    pub center: LorentzVec3,
}

impl PointSymmetry {
    pub fn new(center: LorentzVec3) -> Self {
        Self { center }
    }

    pub fn apply(&self, p: &LorentzVec3) -> LorentzVec3 {
        reflect(p, self)
    }
}

pub fn reflect(p: &LorentzVec3, s: &PointSymmetry) -> LorentzVec3 {
    s.center * 2.0 - *p
}

/// Translation vector of `s2 ∘ s1`, i.e. `2 (c2 - c1)`.
pub fn compose_symmetries(s1: &PointSymmetry, s2: &PointSymmetry) -> LorentzVec3 {
    (s2.center - s1.center) * 2.0
}

/// Translation lattice of a periodic surface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodLattice {
    generators: Vec<LorentzVec3>,
}

impl PeriodLattice {
    /// Two generators for a doubly periodic surface, three (exactly one of
    /// them lightlike) for a triply periodic one.
    pub fn new(generators: Vec<LorentzVec3>) -> Result<Self> {
        let scale: f64 = generators.iter().map(|g| g.euclid_norm()).fold(0.0, f64::max);
        if generators.iter().any(|g| !g.is_finite()) || scale == 0.0 {
            return Err(Error::InvalidInput(
                "lattice generators must be finite and nonzero".into(),
            ));
        }
        match generators.len() {
            2 => {
                let c = generators[0].cross(&generators[1]).euclid_norm();
                if c <= 1e-12 * scale * scale {
                    return Err(Error::InvalidInput("lattice generators are linearly dependent".into()));
                }
            }
            3 => {
                let det = generators[0].cross(&generators[1]).dot(&generators[2]);
                if det.abs() <= 1e-12 * scale.powi(3) {
                    return Err(Error::InvalidInput("lattice generators are linearly dependent".into()));
                }
                let lightlike = generators.iter().filter(|g| g.is_lightlike()).count();
                if lightlike != 1 {
                    return Err(Error::InvalidInput(format!(
                        "triply periodic lattice needs exactly one lightlike generator, found {lightlike}"
                    )));
                }
            }
            n => {
                return Err(Error::InvalidInput(format!("lattice needs 2 or 3 generators, got {n}")));
            }
        }
        Ok(Self { generators })
    }

    pub fn generators(&self) -> &[LorentzVec3] {
        &self.generators
    }

    pub fn rank(&self) -> usize {
        self.generators.len()
    }

    pub fn causal_characters(&self) -> Vec<CausalCharacter> {
        self.generators
            .iter()
            .map(|g| causal_character(g).expect("generators are nonzero"))
            .collect()
    }
}
