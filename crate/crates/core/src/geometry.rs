//! Circles on the Riemann sphere, circles invariant under elliptic elements,
//! the search for the pairing loxodromic and the combination certificate.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::moebius::{finite_closure, MapClass, MoebiusError, MoebiusMap, SpherePoint};

/// Residual tolerance for invariance and conjugation checks.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Orbit circles must be separated by more than this.
pub const MIN_MARGIN: f64 = 1e-6;

/// Conjugation (or commutation) residual required of a pairing map.
pub const CONJUGATION_TOL: f64 = 1e-10;

/// Relative distance from the pole below which an image circle is rejected.
const POLE_GUARD: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("degenerate image circle")]
    DegenerateImage,
    #[error("element is not elliptic: {0:?}")]
    NotElliptic(MapClass),
    #[error("point is not fixed by the elliptic element")]
    NotFixed,
    #[error("invalid circle: radius {0}")]
    InvalidCircle(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("pairing search failed (best margin {best_margin:e})")]
    PairingSearchFailed { best_margin: f64 },
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Interior {
    BoundedDisc,
    UnboundedComplement,
}

/// A round circle with one side designated as its interior.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Circle {
    pub center: Complex64,
    pub radius: f64,
    pub interior: Interior,
}

impl Circle {
    pub fn new(center: Complex64, radius: f64, interior: Interior) -> Result<Self, GeometryError> {
        if !(radius > 0.0 && radius.is_finite() && center.re.is_finite() && center.im.is_finite()) {
            return Err(GeometryError::InvalidCircle(radius));
        }
        Ok(Circle {
            center,
            radius,
            interior,
        })
    }

    pub fn bounded(center: Complex64, radius: f64) -> Result<Self, GeometryError> {
        Self::new(center, radius, Interior::BoundedDisc)
    }

    /// The same circle with the other side as interior.
    pub fn complement(&self) -> Circle {
        let interior = match self.interior {
            Interior::BoundedDisc => Interior::UnboundedComplement,
            Interior::UnboundedComplement => Interior::BoundedDisc,
        };
        Circle { interior, ..*self }
    }

    /// Signed distance of `z` into the interior (positive inside).
    pub fn depth(&self, z: Complex64) -> f64 {
        let d = (z - self.center).norm();
        match self.interior {
            Interior::BoundedDisc => self.radius - d,
            Interior::UnboundedComplement => d - self.radius,
        }
    }

    /// Closed interior membership with absolute slack `tol`.
    pub fn contains(&self, p: SpherePoint, tol: f64) -> bool {
        match p {
            SpherePoint::Infinity => self.interior == Interior::UnboundedComplement,
            SpherePoint::Finite(z) => self.depth(z) >= -tol,
        }
    }

    /// Open interior membership; points within `guard` of the circle count as outside.
    fn strictly_contains(&self, p: SpherePoint, guard: f64) -> bool {
        match p {
            SpherePoint::Infinity => self.interior == Interior::UnboundedComplement,
            SpherePoint::Finite(z) => self.depth(z) > guard,
        }
    }

    /// `n` equally spaced points on the circle.
    pub fn sample(&self, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|k| self.center + Complex64::from_polar(self.radius, 2.0 * PI * k as f64 / n as f64))
            .collect()
    }

    /// |Δcenter| + |Δradius|, or ∞ when the interiors are on different sides.
    pub fn distance(&self, other: &Circle) -> f64 {
        if self.interior != other.interior {
            return f64::INFINITY;
        }
        (self.center - other.center).norm() + (self.radius - other.radius).abs()
    }
}

fn circumcircle(z1: Complex64, z2: Complex64, z3: Complex64) -> Option<(Complex64, f64)> {
    let w = (z3 - z1) / (z2 - z1);
    if !(w.re.is_finite() && w.im.is_finite()) || w.im.abs() < 1e-12 * (1.0 + w.norm()) {
        return None;
    }
    let center = (z2 - z1) * (w - w.norm_sqr()) / Complex64::new(0.0, 2.0 * w.im) + z1;
    let radius = ((z1 - center).norm() + (z2 - center).norm() + (z3 - center).norm()) / 3.0;
    Some((center, radius))
}

/// The image `f(c)`, computed from three sample points; the interior follows `f`.
pub fn image_circle(f: &MoebiusMap, c: &Circle) -> Result<Circle, GeometryError> {
    let pole = f.inverse().apply(SpherePoint::Infinity);
    if let SpherePoint::Finite(p) = pole {
        let gap = ((p - c.center).norm() - c.radius).abs();
        if gap <= POLE_GUARD * c.radius.max(1.0) {
            return Err(GeometryError::DegenerateImage);
        }
    }
    let pts = c.sample(3);
    let mut img = [Complex64::new(0.0, 0.0); 3];
    for (i, z) in pts.iter().enumerate() {
        img[i] = f.apply_c(*z).finite().ok_or(GeometryError::DegenerateImage)?;
    }
    let (center, radius) = circumcircle(img[0], img[1], img[2]).ok_or(GeometryError::DegenerateImage)?;
    let interior = if c.strictly_contains(pole, 0.0) {
        Interior::UnboundedComplement
    } else {
        Interior::BoundedDisc
    };
    Circle::new(center, radius, interior).map_err(|_| GeometryError::DegenerateImage)
}

/// Distance between `g(c)` and `c`.
pub fn invariance_residual(g: &MoebiusMap, c: &Circle) -> Result<f64, GeometryError> {
    Ok(image_circle(g, c)?.distance(c))
}

fn matching_fixed_point(g: &MoebiusMap, p: SpherePoint) -> Result<SpherePoint, GeometryError> {
    let (f1, f2) = g.fixed_points()?;
    if p.chordal_distance(&f1) <= DEFAULT_TOL {
        Ok(f2)
    } else if p.chordal_distance(&f2) <= DEFAULT_TOL {
        Ok(f1)
    } else {
        Err(GeometryError::NotFixed)
    }
}

/// The circle `h⁻¹{|w| = r}` where `h` sends `p` to 0 and the other fixed
/// point of `g` to ∞. The interior is the side containing `p`.
pub fn invariant_circle(g: &MoebiusMap, p: SpherePoint, r: f64) -> Result<Circle, GeometryError> {
    if !(r > 0.0 && r.is_finite()) {
        return Err(GeometryError::InvalidParameter(format!("r must be positive, got {r}")));
    }
    match g.classify(DEFAULT_TOL) {
        MapClass::Elliptic(_) => {}
        other => return Err(GeometryError::NotElliptic(other)),
    }
    let q = matching_fixed_point(g, p)?;
    let h = MoebiusMap::sending_to_zero_and_infinity(p, q)?;
    image_circle(&h.inverse(), &Circle::bounded(Complex64::new(0.0, 0.0), r)?)
}

/// Positive when the closed interiors are disjoint.
pub fn disjointness_margin(c1: &Circle, c2: &Circle) -> f64 {
    let d = (c1.center - c2.center).norm();
    match (c1.interior, c2.interior) {
        (Interior::BoundedDisc, Interior::BoundedDisc) => d - (c1.radius + c2.radius),
        (Interior::BoundedDisc, Interior::UnboundedComplement) => c2.radius - (d + c1.radius),
        (Interior::UnboundedComplement, Interior::BoundedDisc) => c1.radius - (d + c2.radius),
        // Both interiors contain ∞.
        (Interior::UnboundedComplement, Interior::UnboundedComplement) => -(c1.radius + c2.radius),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PairingForm {
    /// w ↦ λw
    Scaling,
    /// w ↦ λ/w
    InvertedScaling,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConjugationWitness {
    pub source: MoebiusMap,
    pub target: MoebiusMap,
    /// Projective distance between `T·source·T⁻¹` and `target`.
    pub residual: f64,
}

/// Two circles identified by `t`: `t` sends the exterior of `c1` onto the interior of `c2`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairedCircles {
    pub c1: Circle,
    pub c2: Circle,
    pub t: MoebiusMap,
    pub conjugation_witness: ConjugationWitness,
    pub lambda: Complex64,
    pub form: PairingForm,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StabilizerCheck {
    /// "C1" or "C2".
    pub circle: String,
    pub elliptic: MoebiusMap,
    pub residual: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CombinationCertificate {
    /// Orbit of C1 (first `c1_orbit` entries) followed by the orbit of C2.
    pub circles: Vec<Circle>,
    pub c1_orbit: usize,
    pub pairwise_margin: f64,
    pub stabilizer_checks: Vec<StabilizerCheck>,
    pub exterior_to_interior: bool,
    /// Largest sampled distance of `T(∂C1)` from `∂C2`, relative to the radius of C2.
    pub boundary_residual: f64,
    pub conjugation_residual: f64,
    pub verdict: bool,
}

/// Distinct images of `c` under `elements`, each with the first element producing it.
pub fn circle_orbit(elements: &[MoebiusMap], c: &Circle) -> Result<Vec<(Circle, MoebiusMap)>, GeometryError> {
    let mut out: Vec<(Circle, MoebiusMap)> = Vec::new();
    for g in elements {
        let img = image_circle(g, c)?;
        let tol = 1e-7 * img.radius.max(1.0);
        if !out.iter().any(|(e, _)| e.distance(&img) <= tol) {
            out.push((img, *g));
        }
    }
    Ok(out)
}

/// Smallest pairwise disjointness margin (∞ for fewer than two circles).
pub fn min_pairwise_margin(circles: &[Circle]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..circles.len() {
        for j in i + 1..circles.len() {
            m = m.min(disjointness_margin(&circles[i], &circles[j]));
        }
    }
    m
}

/// Samples of the closed exterior of a bounded circle, including ∞.
fn exterior_samples(c: &Circle) -> Vec<SpherePoint> {
    let mut out = vec![SpherePoint::Infinity];
    for factor in [1.0 + 1e-3, 1.5, 3.0, 10.0, 100.0] {
        let ring = Circle {
            radius: c.radius * factor,
            ..*c
        };
        out.extend(ring.sample(24).into_iter().map(SpherePoint::Finite));
    }
    out
}

/// Checks that `t` maps the closed exterior of `c1` into the interior of `c2`
/// and `∂c1` onto `∂c2`; returns (holds, boundary residual).
pub fn exterior_to_interior(t: &MoebiusMap, c1: &Circle, c2: &Circle) -> (bool, f64) {
    let scale = c2.radius.max(1.0);
    let mut residual: f64 = 0.0;
    for z in c1.sample(24) {
        match t.apply_c(z) {
            SpherePoint::Finite(w) => residual = residual.max(((w - c2.center).norm() - c2.radius).abs() / c2.radius),
            SpherePoint::Infinity => return (false, f64::INFINITY),
        }
    }
    let exterior_ok = match c1.interior {
        Interior::BoundedDisc => exterior_samples(c1)
            .into_iter()
            .all(|p| c2.contains(t.apply(p), 1e-9 * scale)),
        Interior::UnboundedComplement => {
            let inner = Circle {
                radius: c1.radius * (1.0 - 1e-3),
                interior: Interior::BoundedDisc,
                ..*c1
            };
            inner
                .sample(24)
                .into_iter()
                .chain(std::iter::once(c1.center))
                .all(|z| c2.contains(t.apply_c(z), 1e-9 * scale))
        }
    };
    (exterior_ok, residual)
}

/// Checks the combination hypotheses: disjoint orbit circles, invariance of
/// C1 and C2 under their stabilizers, and the exterior→interior mapping.
pub fn verify_combination(group_elements: &[MoebiusMap], pairing: &PairedCircles, tol: f64) -> CombinationCertificate {
    let w = &pairing.conjugation_witness;
    let (ext_ok, boundary_residual) = exterior_to_interior(&pairing.t, &pairing.c1, &pairing.c2);
    let residual = |g: &MoebiusMap, c: &Circle| invariance_residual(g, c).unwrap_or(f64::INFINITY);
    let stabilizer_checks = vec![
        StabilizerCheck {
            circle: "C1".into(),
            elliptic: w.source,
            residual: residual(&w.source, &pairing.c1),
        },
        StabilizerCheck {
            circle: "C2".into(),
            elliptic: w.target,
            residual: residual(&w.target, &pairing.c2),
        },
    ];
    let orbits = circle_orbit(group_elements, &pairing.c1)
        .and_then(|o1| circle_orbit(group_elements, &pairing.c2).map(|o2| (o1, o2)));
    let (circles, c1_orbit, pairwise_margin) = match orbits {
        Ok((o1, o2)) => {
            let n1 = o1.len();
            let circles: Vec<Circle> = o1.into_iter().chain(o2).map(|(c, _)| c).collect();
            let m = min_pairwise_margin(&circles);
            (circles, n1, m)
        }
        Err(_) => (Vec::new(), 0, f64::NEG_INFINITY),
    };
    let verdict = pairwise_margin > MIN_MARGIN
        && pairwise_margin.is_finite()
        && stabilizer_checks.iter().all(|s| s.residual < tol)
        && ext_ok
        && boundary_residual < tol
        && w.residual < tol;
    CombinationCertificate {
        circles,
        c1_orbit,
        pairwise_margin,
        stabilizer_checks,
        exterior_to_interior: ext_ok,
        boundary_residual,
        conjugation_residual: w.residual,
        verdict,
    }
}

/// Builds the pairing `T = h₂⁻¹ ∘ m ∘ h₁` where `h₁` sends (p, p′) and `h₂`
/// sends (q, q′) to (0, ∞). C1 is the `source`-invariant circle about `p`.
#[allow(clippy::too_many_arguments)]
pub fn pairing_candidate(
    source: &MoebiusMap,
    target: &MoebiusMap,
    p: SpherePoint,
    q: SpherePoint,
    r: f64,
    lambda: Complex64,
    form: PairingForm,
) -> Result<PairedCircles, GeometryError> {
    let p_other = matching_fixed_point(source, p)?;
    let q_other = matching_fixed_point(target, q)?;
    let h1 = MoebiusMap::sending_to_zero_and_infinity(p, p_other)?;
    let h2 = MoebiusMap::sending_to_zero_and_infinity(q, q_other)?;
    let m = match form {
        PairingForm::Scaling => MoebiusMap::scaling(lambda)?,
        PairingForm::InvertedScaling => MoebiusMap::inverted_scaling(lambda)?,
    };
    let t = h2.inverse().compose(&m).compose(&h1);
    let c1 = invariant_circle(source, p, r)?;
    let c2 = image_circle(&t, &c1)?.complement();
    let residual = source.conjugate_by(&t).projective_distance(target);
    Ok(PairedCircles {
        c1,
        c2,
        t,
        conjugation_witness: ConjugationWitness {
            source: *source,
            target: *target,
            residual,
        },
        lambda,
        form,
        r,
    })
}

/// λ ∈ {2, −2, 4, −4, …, ±2¹²}.
pub fn default_dihedral_grid() -> Vec<f64> {
    (1..=12).flat_map(|k| [2f64.powi(k), -(2f64.powi(k))]).collect()
}

/// λ = 2ᵏ e^{iπj/6} for k = 1..12, j = 0..11.
pub fn default_a4_grid() -> Vec<Complex64> {
    (1..=12)
        .flat_map(|k| (0..12).map(move |j| Complex64::from_polar(2f64.powi(k), PI * j as f64 / 6.0)))
        .collect()
}

fn accept(
    candidate: Result<PairedCircles, GeometryError>,
    elements: &[MoebiusMap],
    best: &mut f64,
) -> Option<PairedCircles> {
    let pairing = candidate.ok()?;
    if pairing.t.classify(DEFAULT_TOL) != MapClass::Loxodromic
        || pairing.conjugation_witness.residual >= CONJUGATION_TOL
    {
        return None;
    }
    let cert = verify_combination(elements, &pairing, DEFAULT_TOL);
    if cert.pairwise_margin.is_finite() {
        *best = best.max(cert.pairwise_margin);
    }
    cert.verdict.then_some(pairing)
}

fn ordered_pairs(g: &MoebiusMap) -> Result<[SpherePoint; 2], GeometryError> {
    let (a, b) = g.fixed_points()?;
    Ok([a, b])
}

/// Scans choices of fixed points, λ and the form of the middle map for a
/// pairing T with T·B·T⁻¹ = AB that passes the combination certificate.
pub fn find_pairing_dihedral(n: u32, r: f64, lambda_grid: &[f64]) -> Result<PairedCircles, GeometryError> {
    let (a, b) = crate::moebius::dn_generators(n)?;
    let ab = a.compose(&b);
    let elements = dihedral_elements(&a, &b, n)?;
    let mut best = f64::NEG_INFINITY;
    for p in ordered_pairs(&b)? {
        for q in ordered_pairs(&ab)? {
            for &lambda in lambda_grid {
                for form in [PairingForm::Scaling, PairingForm::InvertedScaling] {
                    let cand = pairing_candidate(&b, &ab, p, q, r, Complex64::new(lambda, 0.0), form);
                    if let Some(found) = accept(cand, &elements, &mut best) {
                        return Ok(found);
                    }
                }
            }
        }
    }
    Err(GeometryError::PairingSearchFailed { best_margin: best })
}

/// Scans λ with |λ| > 1 for T = h⁻¹(λw)h commuting with A.
pub fn find_pairing_a4(r: f64, lambda_grid: &[Complex64]) -> Result<PairedCircles, GeometryError> {
    let (a, b) = crate::moebius::a4_generators()?;
    let elements = a4_elements(&a, &b)?;
    let mut best = f64::NEG_INFINITY;
    for p in ordered_pairs(&a)? {
        for &lambda in lambda_grid.iter().filter(|l| l.norm() > 1.0) {
            let cand = pairing_candidate(&a, &a, p, p, r, lambda, PairingForm::Scaling);
            if let Some(found) = accept(cand, &elements, &mut best) {
                return Ok(found);
            }
        }
    }
    Err(GeometryError::PairingSearchFailed { best_margin: best })
}

fn closure_of(gens: &[MoebiusMap], order: usize) -> Result<Vec<MoebiusMap>, GeometryError> {
    match finite_closure(gens, order + 1, DEFAULT_TOL) {
        Some(e) if e.len() == order => Ok(e),
        _ => Err(GeometryError::InvalidParameter(format!(
            "generators do not close to a group of order {order}"
        ))),
    }
}

/// All 2n elements of the dihedral group generated by `a` and `b`.
pub fn dihedral_elements(a: &MoebiusMap, b: &MoebiusMap, n: u32) -> Result<Vec<MoebiusMap>, GeometryError> {
    closure_of(&[*a, *b], 2 * n as usize)
}

/// All 12 elements of the tetrahedral group generated by `a` and `b`.
pub fn a4_elements(a: &MoebiusMap, b: &MoebiusMap) -> Result<Vec<MoebiusMap>, GeometryError> {
    closure_of(&[*a, *b], 12)
}

/// Shrinks r from 0.5 by factors of 0.9 until the orbit of the invariant
/// circles at the seeds has margin ≥ 10% of the smallest distance between
/// seed-orbit points, then halves it.
fn adaptive_radius(elements: &[MoebiusMap], seeds: &[(MoebiusMap, SpherePoint)]) -> Result<f64, GeometryError> {
    let mut points: Vec<Complex64> = Vec::new();
    for (_, p) in seeds {
        for g in elements {
            let z = g
                .apply(*p)
                .finite()
                .ok_or_else(|| GeometryError::InvalidParameter("seed orbit meets ∞".into()))?;
            if !points.iter().any(|w| (w - z).norm() < 1e-9) {
                points.push(z);
            }
        }
    }
    let mut sep = f64::INFINITY;
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            sep = sep.min((points[i] - points[j]).norm());
        }
    }
    let mut r = 0.5;
    for _ in 0..400 {
        let mut circles = Vec::new();
        for (g, p) in seeds {
            let c = invariant_circle(g, *p, r)?;
            circles.extend(circle_orbit(elements, &c)?.into_iter().map(|(c, _)| c));
        }
        if min_pairwise_margin(&circles) >= 0.1 * sep {
            return Ok(r / 2.0);
        }
        r *= 0.9;
    }
    Err(GeometryError::InvalidParameter("no admissible circle radius".into()))
}

/// Default circle parameter for the dihedral construction.
pub fn default_radius_dihedral(n: u32) -> Result<f64, GeometryError> {
    let (a, b) = crate::moebius::dn_generators(n)?;
    let ab = a.compose(&b);
    let elements = dihedral_elements(&a, &b, n)?;
    let seeds = [(b, b.fixed_points()?.0), (ab, ab.fixed_points()?.0)];
    adaptive_radius(&elements, &seeds)
}

/// Default circle parameter for the tetrahedral construction.
pub fn default_radius_a4() -> Result<f64, GeometryError> {
    let (a, b) = crate::moebius::a4_generators()?;
    let elements = a4_elements(&a, &b)?;
    let (p, q) = a.fixed_points()?;
    adaptive_radius(&elements, &[(a, p), (a, q)])
}
