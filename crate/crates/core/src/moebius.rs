//! Möbius transformations of the Riemann sphere, stored as SL(2,C) matrices
//! and compared projectively (up to a global sign).

use std::f64::consts::PI;
use std::fmt;
use std::ops::Mul;

use num_complex::Complex64;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Tolerance used by the generator self-checks.
pub const RELATION_TOL: f64 = 1e-12;

/// Largest elliptic order that `classify` tries before giving up.
pub const MAX_ELLIPTIC_ORDER: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MoebiusError {
    #[error("degenerate transformation: determinant is zero or coefficients are not finite")]
    Degenerate,
    #[error("fixed points undefined for identity")]
    FixedPointsOfIdentity,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("generator self-check failed: {0}")]
    SelfCheck(String),
}

/// A point of the extended complex plane.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SpherePoint {
    Finite(Complex64),
    Infinity,
}

impl SpherePoint {
    /// Builds a point from a complex number; non-finite input becomes `Infinity`.
    pub fn from_complex(z: Complex64) -> Self {
        if z.re.is_finite() && z.im.is_finite() {
            SpherePoint::Finite(z)
        } else {
            SpherePoint::Infinity
        }
    }

    pub fn finite(&self) -> Option<Complex64> {
        match *self {
            SpherePoint::Finite(z) => Some(z),
            SpherePoint::Infinity => None,
        }
    }

    pub fn is_infinite(&self) -> bool {
        matches!(self, SpherePoint::Infinity)
    }

    /// Chordal distance on the unit sphere (diameter 2); ∞ is handled exactly.
    pub fn chordal_distance(&self, other: &SpherePoint) -> f64 {
        match (*self, *other) {
            (SpherePoint::Infinity, SpherePoint::Infinity) => 0.0,
            (SpherePoint::Finite(z), SpherePoint::Infinity) | (SpherePoint::Infinity, SpherePoint::Finite(z)) => {
                2.0 / (1.0 + z.norm_sqr()).sqrt()
            }
            (SpherePoint::Finite(z), SpherePoint::Finite(w)) => {
                2.0 * (z - w).norm() / ((1.0 + z.norm_sqr()).sqrt() * (1.0 + w.norm_sqr()).sqrt())
            }
        }
    }

    /// Lexicographic order on (re, im) with ∞ after every finite point.
    pub fn lex_cmp(&self, other: &SpherePoint) -> std::cmp::Ordering {
        use std::cmp::Ordering;
        match (self, other) {
            (SpherePoint::Infinity, SpherePoint::Infinity) => Ordering::Equal,
            (SpherePoint::Infinity, _) => Ordering::Greater,
            (_, SpherePoint::Infinity) => Ordering::Less,
            (SpherePoint::Finite(z), SpherePoint::Finite(w)) => z.re.total_cmp(&w.re).then(z.im.total_cmp(&w.im)),
        }
    }
}

impl From<Complex64> for SpherePoint {
    fn from(z: Complex64) -> Self {
        SpherePoint::from_complex(z)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SpherePoint::Finite(z) => write!(f, "{}{:+}i", z.re, z.im),
            SpherePoint::Infinity => write!(f, "∞"),
        }
    }
}

/// Order of an elliptic element, when one was found below the cap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EllipticOrder {
    Finite(u32),
    Irrational,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapClass {
    Identity,
    Elliptic(EllipticOrder),
    Parabolic,
    Loxodromic,
}

/// z ↦ (az + b)/(cz + d) with ad − bc = 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoebiusMap {
    a: Complex64,
    b: Complex64,
    c: Complex64,
    d: Complex64,
}

fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn is_finite(z: Complex64) -> bool {
    z.re.is_finite() && z.im.is_finite()
}

impl MoebiusMap {
    /// Builds the map and rescales it to determinant one.
    pub fn new(a: Complex64, b: Complex64, c: Complex64, d: Complex64) -> Result<Self, MoebiusError> {
        if ![a, b, c, d].into_iter().all(is_finite) {
            return Err(MoebiusError::Degenerate);
        }
        let det = a * d - b * c;
        let scale = [a, b, c, d].iter().map(|z| z.norm_sqr()).sum::<f64>();
        if det.norm() <= 1e-300 || det.norm() <= 1e-15 * scale {
            return Err(MoebiusError::Degenerate);
        }
        let k = det.sqrt().inv();
        let m = MoebiusMap {
            a: a * k,
            b: b * k,
            c: c * k,
            d: d * k,
        };
        if ![m.a, m.b, m.c, m.d].into_iter().all(is_finite) {
            return Err(MoebiusError::Degenerate);
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        MoebiusMap {
            a: c64(1.0, 0.0),
            b: c64(0.0, 0.0),
            c: c64(0.0, 0.0),
            d: c64(1.0, 0.0),
        }
    }

    /// z ↦ λz (λ ≠ 0).
    pub fn scaling(lambda: Complex64) -> Result<Self, MoebiusError> {
        Self::new(lambda, c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0))
    }

    /// z ↦ λ/z (λ ≠ 0).
    pub fn inverted_scaling(lambda: Complex64) -> Result<Self, MoebiusError> {
        Self::new(c64(0.0, 0.0), lambda, c64(1.0, 0.0), c64(0.0, 0.0))
    }

    /// A map sending `zero` to 0 and `pole` to ∞.
    pub fn sending_to_zero_and_infinity(zero: SpherePoint, pole: SpherePoint) -> Result<Self, MoebiusError> {
        let one = c64(1.0, 0.0);
        let nil = c64(0.0, 0.0);
        match (zero, pole) {
            (SpherePoint::Finite(p), SpherePoint::Finite(q)) => Self::new(one, -p, one, -q),
            (SpherePoint::Finite(p), SpherePoint::Infinity) => Self::new(one, -p, nil, one),
            (SpherePoint::Infinity, SpherePoint::Finite(q)) => Self::new(nil, one, one, -q),
            (SpherePoint::Infinity, SpherePoint::Infinity) => Err(MoebiusError::Degenerate),
        }
    }

    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.a, self.b, self.c, self.d]
    }

    pub fn det(&self) -> Complex64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> Complex64 {
        self.a + self.d
    }

    pub fn trace_sq(&self) -> Complex64 {
        let t = self.trace();
        t * t
    }

    /// Largest coefficient modulus.
    pub fn norm_max(&self) -> f64 {
        self.coefficients().iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// `self ∘ other`, renormalized.
    pub fn compose(&self, other: &MoebiusMap) -> MoebiusMap {
        let m = MoebiusMap {
            a: self.a * other.a + self.b * other.c,
            b: self.a * other.b + self.b * other.d,
            c: self.c * other.a + self.d * other.c,
            d: self.c * other.b + self.d * other.d,
        };
        m.renormalized()
    }

    fn renormalized(self) -> MoebiusMap {
        let det = self.det();
        // ad − bc loses digits to cancellation; a deviation inside its own
        // rounding error says nothing about drift.
        let det_err = 16.0 * f64::EPSILON * ((self.a * self.d).norm() + (self.b * self.c).norm()).max(1.0);
        if (det - 1.0).norm() <= det_err {
            return self;
        }
        let k = det.sqrt().inv();
        MoebiusMap {
            a: self.a * k,
            b: self.b * k,
            c: self.c * k,
            d: self.d * k,
        }
    }

    pub fn inverse(&self) -> MoebiusMap {
        MoebiusMap {
            a: self.d,
            b: -self.b,
            c: -self.c,
            d: self.a,
        }
    }

    /// `self^k` for any integer k (negative powers use the inverse).
    pub fn pow(&self, k: i64) -> MoebiusMap {
        let base = if k < 0 { self.inverse() } else { *self };
        let mut e = k.unsigned_abs();
        let mut acc = MoebiusMap::identity();
        let mut sq = base;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.compose(&sq);
            }
            sq = sq.compose(&sq);
            e >>= 1;
        }
        acc
    }

    /// `g ∘ self ∘ g⁻¹`.
    pub fn conjugate_by(&self, g: &MoebiusMap) -> MoebiusMap {
        g.compose(self).compose(&g.inverse())
    }

    pub fn apply(&self, p: SpherePoint) -> SpherePoint {
        match p {
            SpherePoint::Infinity => {
                if self.c == c64(0.0, 0.0) {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::from_complex(self.a / self.c)
                }
            }
            SpherePoint::Finite(z) => {
                let den = self.c * z + self.d;
                if den == c64(0.0, 0.0) {
                    SpherePoint::Infinity
                } else {
                    SpherePoint::from_complex((self.a * z + self.b) / den)
                }
            }
        }
    }

    /// Applies to a finite complex number.
    pub fn apply_c(&self, z: Complex64) -> SpherePoint {
        self.apply(SpherePoint::Finite(z))
    }

    /// The point sent to ∞, if finite.
    pub fn pole(&self) -> Option<Complex64> {
        if self.c == c64(0.0, 0.0) {
            None
        } else {
            Some(-self.d / self.c)
        }
    }

    /// Coefficient distance up to the sign ambiguity of PSL(2,C).
    pub fn projective_distance(&self, other: &MoebiusMap) -> f64 {
        let x = self.coefficients();
        let y = other.coefficients();
        let plus = x.iter().zip(&y).map(|(p, q)| (p - q).norm()).fold(0.0, f64::max);
        let minus = x.iter().zip(&y).map(|(p, q)| (p + q).norm()).fold(0.0, f64::max);
        plus.min(minus)
    }

    pub fn approx_eq(&self, other: &MoebiusMap, tol: f64) -> bool {
        self.projective_distance(other) <= tol
    }

    pub fn distance_to_identity(&self) -> f64 {
        self.projective_distance(&MoebiusMap::identity())
    }

    pub fn is_identity(&self, tol: f64) -> bool {
        self.distance_to_identity() <= tol
    }

    pub fn is_real(&self, tol: f64) -> bool {
        self.coefficients().iter().all(|z| z.im.abs() <= tol)
    }

    /// Squared-trace classification; elliptic orders are searched up to 64.
    pub fn classify(&self, tol: f64) -> MapClass {
        if self.is_identity(tol) {
            return MapClass::Identity;
        }
        let t2 = self.trace_sq();
        if (t2 - 4.0).norm() <= tol {
            return MapClass::Parabolic;
        }
        if t2.im.abs() <= tol && t2.re >= -tol && t2.re < 4.0 {
            let mut power = *self;
            for k in 2..=MAX_ELLIPTIC_ORDER {
                power = power.compose(self);
                if power.is_identity(tol.max(1e-12 * k as f64)) {
                    return MapClass::Elliptic(EllipticOrder::Finite(k));
                }
            }
            return MapClass::Elliptic(EllipticOrder::Irrational);
        }
        MapClass::Loxodromic
    }

    /// Roots of cz² + (d − a)z − b = 0, ordered lexicographically (∞ last).
    pub fn fixed_points(&self) -> Result<(SpherePoint, SpherePoint), MoebiusError> {
        if self.is_identity(RELATION_TOL) {
            return Err(MoebiusError::FixedPointsOfIdentity);
        }
        let scale = self.norm_max();
        let (p, q) = if self.c.norm() <= 1e-14 * scale {
            // ∞ is fixed; the finite one solves (d − a) z = b.
            let diff = self.d - self.a;
            if diff.norm() <= 1e-14 * scale {
                (SpherePoint::Infinity, SpherePoint::Infinity)
            } else {
                (SpherePoint::from_complex(self.b / diff), SpherePoint::Infinity)
            }
        } else {
            let amd = self.a - self.d;
            let disc = (self.trace_sq() - 4.0).sqrt();
            let two_c = self.c * 2.0;
            (
                SpherePoint::from_complex((amd + disc) / two_c),
                SpherePoint::from_complex((amd - disc) / two_c),
            )
        };
        if p.lex_cmp(&q) == std::cmp::Ordering::Greater {
            Ok((q, p))
        } else {
            Ok((p, q))
        }
    }
}

impl Default for MoebiusMap {
    fn default() -> Self {
        MoebiusMap::identity()
    }
}

impl Mul for MoebiusMap {
    type Output = MoebiusMap;
    fn mul(self, rhs: MoebiusMap) -> MoebiusMap {
        self.compose(&rhs)
    }
}

impl<'a> Mul<&'a MoebiusMap> for &'a MoebiusMap {
    type Output = MoebiusMap;
    fn mul(self, rhs: &MoebiusMap) -> MoebiusMap {
        self.compose(rhs)
    }
}

impl fmt::Display for MoebiusMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "z ↦ (({})z + ({})) / (({})z + ({}))", self.a, self.b, self.c, self.d)
    }
}

// JSON form: [re a, im a, re b, im b, re c, im c, re d, im d].
impl Serialize for MoebiusMap {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let v = [
            self.a.re, self.a.im, self.b.re, self.b.im, self.c.re, self.c.im, self.d.re, self.d.im,
        ];
        v.serialize(s)
    }
}

impl<'de> Deserialize<'de> for MoebiusMap {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = <[f64; 8]>::deserialize(d)?;
        MoebiusMap::new(c64(v[0], v[1]), c64(v[2], v[3]), c64(v[4], v[5]), c64(v[6], v[7]))
            .map_err(serde::de::Error::custom)
    }
}

fn check_identity(name: &str, m: &MoebiusMap) -> Result<(), MoebiusError> {
    let r = m.distance_to_identity();
    if r < RELATION_TOL {
        Ok(())
    } else {
        Err(MoebiusError::SelfCheck(format!("{name} has residual {r:e}")))
    }
}

/// A(z) = e^{2πi/n} z and B(z) = 1/z, generating the dihedral group of order 2n.
pub fn dn_generators(n: u32) -> Result<(MoebiusMap, MoebiusMap), MoebiusError> {
    if n < 2 {
        return Err(MoebiusError::InvalidParameter(format!(
            "dihedral order n must be ≥ 2, got {n}"
        )));
    }
    let half = Complex64::from_polar(1.0, PI / n as f64);
    let a = MoebiusMap::new(half, c64(0.0, 0.0), c64(0.0, 0.0), half.inv())?;
    let b = MoebiusMap::new(c64(0.0, 0.0), c64(1.0, 0.0), c64(1.0, 0.0), c64(0.0, 0.0))?;
    check_identity("A^n", &a.pow(n as i64))?;
    check_identity("B^2", &b.pow(2))?;
    check_identity("(AB)^2", &(a * b).pow(2))?;
    Ok((a, b))
}

/// A(z) = i(1 − z)/(z + 1) and B(z) = −z, generating the tetrahedral group.
pub fn a4_generators() -> Result<(MoebiusMap, MoebiusMap), MoebiusError> {
    let i = c64(0.0, 1.0);
    let a = MoebiusMap::new(-i, i, c64(1.0, 0.0), c64(1.0, 0.0))?;
    let b = MoebiusMap::new(c64(-1.0, 0.0), c64(0.0, 0.0), c64(0.0, 0.0), c64(1.0, 0.0))?;
    check_identity("A^3", &a.pow(3))?;
    check_identity("B^2", &b.pow(2))?;
    check_identity("(AB)^3", &(a * b).pow(3))?;
    let order = finite_closure(&[a, b], 64, 1e-9).map(|g| g.len()).unwrap_or(0);
    if order != 12 {
        return Err(MoebiusError::SelfCheck(format!(
            "closure has {order} elements, expected 12"
        )));
    }
    Ok((a, b))
}

/// A(z) = r(z+1)/(z+α), B(z) = (r − z)/(z + β) with β = 1 − r − α.
pub fn fuchsian_punctured_torus(r: f64, alpha: f64) -> Result<(MoebiusMap, MoebiusMap), MoebiusError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(MoebiusError::InvalidParameter(format!("r must be > 0, got {r}")));
    }
    if !(alpha > 1.0 && alpha.is_finite()) {
        return Err(MoebiusError::InvalidParameter(format!(
            "alpha must be > 1, got {alpha}"
        )));
    }
    let beta = 1.0 - r - alpha;
    let a = MoebiusMap::new(c64(r, 0.0), c64(r, 0.0), c64(1.0, 0.0), c64(alpha, 0.0))?;
    let b = MoebiusMap::new(c64(-1.0, 0.0), c64(r, 0.0), c64(1.0, 0.0), c64(beta, 0.0))?;
    if !(a.is_real(0.0) && b.is_real(0.0)) {
        return Err(MoebiusError::SelfCheck("coefficients left the real line".into()));
    }
    Ok((a, b))
}

/// The commutator `a b a⁻¹ b⁻¹`.
pub fn commutator(a: &MoebiusMap, b: &MoebiusMap) -> MoebiusMap {
    a.compose(b).compose(&a.inverse()).compose(&b.inverse())
}

/// Breadth-first closure of `generators` under composition, deduplicated
/// projectively. Returns `None` when more than `cap` elements appear.
pub fn finite_closure(generators: &[MoebiusMap], cap: usize, tol: f64) -> Option<Vec<MoebiusMap>> {
    let mut elements = vec![MoebiusMap::identity()];
    let mut frontier = 0;
    while frontier < elements.len() {
        let g = elements[frontier];
        frontier += 1;
        for s in generators {
            let h = g.compose(s);
            if !elements.iter().any(|e| e.approx_eq(&h, tol)) {
                if elements.len() == cap {
                    return None;
                }
                elements.push(h);
            }
        }
    }
    Some(elements)
}
