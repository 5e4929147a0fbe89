//! Breadth-first orbit enumeration, limit-set point clouds and circle
//! nesting diagnostics.

use std::collections::HashMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::builder::OrigamiSchottkyGroup;
use crate::geometry::{circle_orbit, image_circle, Circle, GeometryError};
use crate::moebius::{MoebiusMap, SpherePoint};
use crate::presentation::{case_a_rotation_word, Family, Word};

/// Largest depth accepted by the point-cloud commands.
pub const MAX_DEPTH: usize = 8;

/// Default cap on enumerated elements.
pub const DEFAULT_ELEMENT_CAP: usize = 5_000_000;

/// Points farther out than this are dropped.
pub const FAR_CUTOFF: f64 = 1e8;

/// Spatial resolution for point deduplication.
pub const POINT_RESOLUTION: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LimitSetError {
    #[error("depth must be in {min}..={max}, got {depth}")]
    InvalidDepth { depth: usize, min: usize, max: usize },
    #[error("element cap exceeded after {count} elements")]
    TooManyElements { count: usize },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Element {
    pub word: Word,
    pub map: MoebiusMap,
    /// Breadth-first level at which the element first appeared.
    pub length: usize,
}

/// The six letters A, A⁻¹, B, B⁻¹, T, T⁻¹ as words over the presentation
/// generators together with their matrices.
pub fn letters(k: &OrigamiSchottkyGroup) -> Vec<(Word, MoebiusMap)> {
    let (a, b, t) = match k.kind {
        Family::CaseA { .. } => (case_a_rotation_word(), Word::generator(0), Word::generator(1)),
        Family::CaseB => (Word::generator(0), Word::generator(1), Word::generator(2)),
    };
    [a.clone(), a.inverse(), b.clone(), b.inverse(), t.clone(), t.inverse()]
        .into_iter()
        .map(|w| {
            let m = k.eval(&w);
            (w, m)
        })
        .collect()
}

/// Projective deduplication keyed on a sign-invariant weighted norm.
struct ProjectiveIndex {
    buckets: HashMap<i64, Vec<usize>>,
}

fn norm_key(m: &MoebiusMap) -> i64 {
    let [a, b, c, d] = m.coefficients();
    let s = a.norm_sqr()
        + std::f64::consts::PI * b.norm_sqr()
        + std::f64::consts::E * c.norm_sqr()
        + std::f64::consts::SQRT_2 * d.norm_sqr();
    (s.ln() * 1e6).floor() as i64
}

fn dedup_tol(m: &MoebiusMap) -> f64 {
    1e-9 * m.norm_max().max(1.0)
}

impl ProjectiveIndex {
    fn new() -> Self {
        ProjectiveIndex {
            buckets: HashMap::new(),
        }
    }

    fn find(&self, m: &MoebiusMap, elements: &[Element]) -> bool {
        let key = norm_key(m);
        let tol = dedup_tol(m);
        (key - 1..=key + 1).any(|k| {
            self.buckets
                .get(&k)
                .is_some_and(|v| v.iter().any(|&i| elements[i].map.approx_eq(m, tol)))
        })
    }

    fn insert(&mut self, m: &MoebiusMap, idx: usize) {
        self.buckets.entry(norm_key(m)).or_default().push(idx);
    }
}

pub fn enumerate_elements(k: &OrigamiSchottkyGroup, depth: usize) -> Result<Vec<Element>, LimitSetError> {
    enumerate_elements_capped(k, depth, DEFAULT_ELEMENT_CAP)
}

/// All distinct products of at most `depth` letters, breadth first with the
/// letter order A, A⁻¹, B, B⁻¹, T, T⁻¹.
pub fn enumerate_elements_capped(
    k: &OrigamiSchottkyGroup,
    depth: usize,
    cap: usize,
) -> Result<Vec<Element>, LimitSetError> {
    let letters = letters(k);
    let mut elements = vec![Element {
        word: Word::empty(),
        map: MoebiusMap::identity(),
        length: 0,
    }];
    let mut index = ProjectiveIndex::new();
    index.insert(&elements[0].map, 0);
    let mut start = 0;
    for len in 1..=depth {
        let end = elements.len();
        for i in start..end {
            for (w, m) in &letters {
                let map = elements[i].map.compose(m);
                if index.find(&map, &elements) {
                    continue;
                }
                if elements.len() >= cap {
                    return Err(LimitSetError::TooManyElements { count: elements.len() });
                }
                let word = elements[i].word.concat(w);
                index.insert(&map, elements.len());
                elements.push(Element { word, map, length: len });
            }
        }
        start = end;
    }
    Ok(elements)
}

/// What gets pushed around by the group to approximate the limit set.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LimitSeeds {
    /// The two fixed points of T (points of the limit set).
    FixedPointsOfT,
    /// The centers of C1 and C2.
    CircleCenters,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrbitPoint {
    pub position: Complex64,
    pub word_length: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitCloud {
    pub seeds: LimitSeeds,
    pub max_depth: usize,
    /// Sorted by (re, im, word_length).
    pub points: Vec<OrbitPoint>,
    pub dropped_near_infinity: usize,
}

fn seed_points(k: &OrigamiSchottkyGroup, seeds: LimitSeeds) -> Result<Vec<SpherePoint>, LimitSetError> {
    Ok(match seeds {
        LimitSeeds::FixedPointsOfT => {
            let (p, q) = k.t.fixed_points().map_err(GeometryError::from)?;
            vec![p, q]
        }
        LimitSeeds::CircleCenters => vec![
            SpherePoint::Finite(k.pairing.c1.center),
            SpherePoint::Finite(k.pairing.c2.center),
        ],
    })
}

fn check_depth(depth: usize, min: usize) -> Result<(), LimitSetError> {
    if depth < min || depth > MAX_DEPTH {
        return Err(LimitSetError::InvalidDepth {
            depth,
            min,
            max: MAX_DEPTH,
        });
    }
    Ok(())
}

fn cmp_points(a: &OrbitPoint, b: &OrbitPoint) -> std::cmp::Ordering {
    a.position
        .re
        .total_cmp(&b.position.re)
        .then(a.position.im.total_cmp(&b.position.im))
        .then(a.word_length.cmp(&b.word_length))
}

/// Sorts and removes points within [`POINT_RESOLUTION`] of an earlier kept point.
fn dedup_sorted(mut pts: Vec<OrbitPoint>) -> Vec<OrbitPoint> {
    pts.sort_by(cmp_points);
    let mut kept: Vec<OrbitPoint> = Vec::with_capacity(pts.len());
    for p in pts {
        let dup = kept
            .iter()
            .rev()
            .take_while(|q| p.position.re - q.position.re <= POINT_RESOLUTION)
            .any(|q| (q.position - p.position).norm() <= POINT_RESOLUTION);
        if !dup {
            kept.push(p);
        }
    }
    kept
}

fn cloud_from(
    elements: &[Element],
    seeds: &[SpherePoint],
    depths: std::ops::RangeInclusive<usize>,
) -> (Vec<OrbitPoint>, usize) {
    let mut dropped = 0;
    let mut per_depth: Vec<Vec<OrbitPoint>> = vec![Vec::new(); depths.end() + 1];
    for e in elements.iter().filter(|e| depths.contains(&e.length)) {
        for s in seeds {
            match e.map.apply(*s) {
                SpherePoint::Finite(z) if z.norm() <= FAR_CUTOFF => per_depth[e.length].push(OrbitPoint {
                    position: z,
                    word_length: e.length,
                }),
                _ => dropped += 1,
            }
        }
    }
    let mut all: Vec<OrbitPoint> = per_depth.into_iter().flat_map(dedup_sorted).collect();
    all.sort_by(cmp_points);
    (all, dropped)
}

/// Images of the fixed points of T under the elements of exact length `depth`.
pub fn limit_points(k: &OrigamiSchottkyGroup, depth: usize) -> Result<Vec<OrbitPoint>, LimitSetError> {
    limit_points_seeded(k, depth, LimitSeeds::FixedPointsOfT)
}

pub fn limit_points_seeded(
    k: &OrigamiSchottkyGroup,
    depth: usize,
    seeds: LimitSeeds,
) -> Result<Vec<OrbitPoint>, LimitSetError> {
    check_depth(depth, 1)?;
    let elements = enumerate_elements(k, depth)?;
    Ok(cloud_from(&elements, &seed_points(k, seeds)?, depth..=depth).0)
}

/// Orbit points for every depth 1..=max_depth from a single enumeration.
pub fn limit_point_cloud(
    k: &OrigamiSchottkyGroup,
    max_depth: usize,
    seeds: LimitSeeds,
) -> Result<LimitCloud, LimitSetError> {
    check_depth(max_depth, 1)?;
    let elements = enumerate_elements(k, max_depth)?;
    let (points, dropped_near_infinity) = cloud_from(&elements, &seed_points(k, seeds)?, 1..=max_depth);
    Ok(LimitCloud {
        seeds,
        max_depth,
        points,
        dropped_near_infinity,
    })
}

/// Number of points outside the closed union of `discs` (slack `tol`).
pub fn points_outside(points: &[OrbitPoint], discs: &[Circle], tol: f64) -> usize {
    points
        .iter()
        .filter(|p| !discs.iter().any(|c| c.contains(SpherePoint::Finite(p.position), tol)))
        .count()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NestingMode {
    /// Level d holds g(C1), g(C2) for elements g of word length d.
    WordLength,
    /// Level d holds the discs nested d steps inside the orbit discs.
    NestingLevel,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingLevel {
    pub depth: usize,
    pub circle_count: usize,
    pub rejected: usize,
    pub max_radius: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NestingReport {
    pub mode: NestingMode,
    pub levels: Vec<NestingLevel>,
}

impl NestingReport {
    pub fn max_radius(&self, depth: usize) -> Option<f64> {
        self.levels.iter().find(|l| l.depth == depth).map(|l| l.max_radius)
    }
}

/// Largest radius of g(C1), g(C2) over the elements g of each word length 1..=depth.
pub fn nesting_report(k: &OrigamiSchottkyGroup, depth: usize) -> Result<NestingReport, LimitSetError> {
    check_depth(depth, 1)?;
    let elements = enumerate_elements(k, depth)?;
    let mut levels: Vec<NestingLevel> = (1..=depth)
        .map(|d| NestingLevel {
            depth: d,
            circle_count: 0,
            rejected: 0,
            max_radius: 0.0,
        })
        .collect();
    for e in elements.iter().filter(|e| e.length >= 1) {
        let level = &mut levels[e.length - 1];
        for c in [k.pairing.c1, k.pairing.c2] {
            match image_circle(&e.map, &c) {
                Ok(img) => {
                    level.circle_count += 1;
                    level.max_radius = level.max_radius.max(img.radius);
                }
                Err(_) => level.rejected += 1,
            }
        }
    }
    Ok(NestingReport {
        mode: NestingMode::WordLength,
        levels,
    })
}

/// Nested disc tree. Level 0 is the orbit of C1 and C2 under the vertex group.
/// Level d+1 holds k·T(E) for level-d discs E outside D1 and k·T⁻¹(E) for E
/// outside D2, with k running over coset representatives of the stabilizer
/// of D2 (resp. D1). Each level has 2m(2m−1)^d discs for 2m orbit discs.
pub fn disc_tree_report(k: &OrigamiSchottkyGroup, depth: usize) -> Result<NestingReport, LimitSetError> {
    check_depth(depth, 0)?;
    let group = k.vertex_group()?;
    let orbit1 = circle_orbit(&group, &k.pairing.c1)?;
    let orbit2 = circle_orbit(&group, &k.pairing.c2)?;
    let n1 = orbit1.len();
    let locate = |orbit: &[(Circle, MoebiusMap)], c: &Circle| {
        orbit
            .iter()
            .position(|(o, _)| o.distance(c) <= 1e-7 * c.radius.max(1.0))
    };
    let root1 = locate(&orbit1, &k.pairing.c1).ok_or(GeometryError::DegenerateImage)?;
    let root2 = n1 + locate(&orbit2, &k.pairing.c2).ok_or(GeometryError::DegenerateImage)?;
    let forward: Vec<(MoebiusMap, usize)> = orbit2
        .iter()
        .enumerate()
        .map(|(j, (_, g))| (g.compose(&k.t), n1 + j))
        .collect();
    let backward: Vec<(MoebiusMap, usize)> = orbit1
        .iter()
        .enumerate()
        .map(|(j, (_, g))| (g.compose(&k.t.inverse()), j))
        .collect();

    let mut current: Vec<(Circle, usize)> = orbit1
        .iter()
        .map(|(c, _)| *c)
        .chain(orbit2.iter().map(|(c, _)| *c))
        .enumerate()
        .map(|(i, c)| (c, i))
        .collect();
    let summarize = |d: usize, discs: &[(Circle, usize)], rejected: usize| NestingLevel {
        depth: d,
        circle_count: discs.len(),
        rejected,
        max_radius: discs.iter().map(|(c, _)| c.radius).fold(0.0, f64::max),
    };
    let mut levels = vec![summarize(0, &current, 0)];
    for d in 1..=depth {
        let mut next = Vec::new();
        let mut rejected = 0;
        for (e, root) in &current {
            let branches = [(*root != root1, &forward), (*root != root2, &backward)];
            for (allowed, maps) in branches {
                if !allowed {
                    continue;
                }
                for (g, new_root) in maps.iter() {
                    match image_circle(g, e) {
                        Ok(img) => next.push((img, *new_root)),
                        Err(_) => rejected += 1,
                    }
                }
            }
            if next.len() > DEFAULT_ELEMENT_CAP {
                return Err(LimitSetError::TooManyElements { count: next.len() });
            }
        }
        levels.push(summarize(d, &next, rejected));
        current = next;
    }
    Ok(NestingReport {
        mode: NestingMode::NestingLevel,
        levels,
    })
}

/// `re,im,depth` rows in the order given.
pub fn to_csv(points: &[OrbitPoint]) -> String {
    let mut s = String::from("re,im,depth\n");
    for p in points {
        s.push_str(&format!("{},{},{}\n", p.position.re, p.position.im, p.word_length));
    }
    s
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RenderOptions {
    pub width: usize,
    pub height: usize,
    /// [xmin, xmax, ymin, ymax]
    pub bbox: [f64; 4],
}

/// Binary 8-bit grayscale (PGM, `P5`) image; each point lights its pixel and
/// the four neighbours.
pub fn render_pgm(points: &[OrbitPoint], opts: &RenderOptions) -> Vec<u8> {
    let (w, h) = (opts.width, opts.height);
    let [x0, x1, y0, y1] = opts.bbox;
    let mut pixels = vec![0u8; w * h];
    for p in points {
        let fx = (p.position.re - x0) / (x1 - x0) * w as f64;
        let fy = (y1 - p.position.im) / (y1 - y0) * h as f64;
        if !(fx.is_finite() && fy.is_finite()) {
            continue;
        }
        let (cx, cy) = (fx.floor() as i64, fy.floor() as i64);
        for (dx, dy) in [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)] {
            let (x, y) = (cx + dx, cy + dy);
            if x >= 0 && y >= 0 && (x as usize) < w && (y as usize) < h {
                pixels[y as usize * w + x as usize] = 255;
            }
        }
    }
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend_from_slice(&pixels);
    out
}

/// Bounding box of the certificate circles, padded by 5%.
pub fn default_bbox(discs: &[Circle]) -> [f64; 4] {
    let mut b = [f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY];
    for c in discs {
        b[0] = b[0].min(c.center.re - c.radius);
        b[1] = b[1].max(c.center.re + c.radius);
        b[2] = b[2].min(c.center.im - c.radius);
        b[3] = b[3].max(c.center.im + c.radius);
    }
    if !b.iter().all(|v| v.is_finite()) {
        return [-2.0, 2.0, -2.0, 2.0];
    }
    let (pw, ph) = (0.05 * (b[1] - b[0]), 0.05 * (b[3] - b[2]));
    [b[0] - pw, b[1] + pw, b[2] - ph, b[3] + ph]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builder::{build_case_a, build_case_b};

    #[test]
    fn depth_zero_and_one() {
        let k = build_case_a(3).unwrap();
        let e0 = enumerate_elements(&k, 0).unwrap();
        assert_eq!(e0.len(), 1);
        assert!(e0[0].map.is_identity(0.0));
        let e1 = enumerate_elements(&k, 1).unwrap();
        // B and B⁻¹ coincide.
        assert_eq!(e1.len(), 6);
    }

    #[test]
    fn enumeration_dedups_projectively() {
        let k = build_case_a(2).unwrap();
        let e = enumerate_elements(&k, 3).unwrap();
        for i in 0..e.len() {
            for j in i + 1..e.len() {
                assert!(!e[i].map.approx_eq(&e[j].map, 1e-9), "{} {}", e[i].word, e[j].word);
            }
        }
    }

    #[test]
    fn words_match_matrices() {
        let k = build_case_b().unwrap();
        for e in enumerate_elements(&k, 3).unwrap() {
            assert!(k.eval(&e.word).projective_distance(&e.map) < 1e-9 * e.map.norm_max().max(1.0));
        }
    }

    #[test]
    fn cap_is_enforced() {
        let k = build_case_a(3).unwrap();
        assert!(matches!(
            enumerate_elements_capped(&k, 4, 50),
            Err(LimitSetError::TooManyElements { .. })
        ));
    }

    #[test]
    fn limit_points_are_sorted_and_contained() {
        let k = build_case_a(3).unwrap();
        for d in 1..=4 {
            let pts = limit_points(&k, d).unwrap();
            assert!(pts.windows(2).all(|w| cmp_points(&w[0], &w[1]).is_lt()));
            assert_eq!(points_outside(&pts, &k.certificate.circles, 1e-9), 0);
            assert!(pts.iter().all(|p| p.word_length == d));
        }
        assert!(limit_points(&k, 0).is_err());
    }

    #[test]
    fn depth_one_point_count_bound() {
        let k = build_case_a(3).unwrap();
        let elements = enumerate_elements(&k, 1)
            .unwrap()
            .into_iter()
            .filter(|e| e.length == 1)
            .count();
        assert!(limit_points(&k, 1).unwrap().len() <= 2 * elements);
    }

    #[test]
    fn disc_tree_counts_and_contraction() {
        let k = build_case_a(3).unwrap();
        let rep = disc_tree_report(&k, 4).unwrap();
        for l in &rep.levels {
            assert_eq!(l.circle_count, 6 * 5usize.pow(l.depth as u32));
            assert_eq!(l.rejected, 0);
        }
        for w in rep.levels.windows(2) {
            assert!(w[1].max_radius < w[0].max_radius);
        }
        let rep_b = disc_tree_report(&build_case_b().unwrap(), 2).unwrap();
        assert_eq!(rep_b.levels[2].circle_count, 8 * 49);
    }

    #[test]
    fn word_length_report_bookkeeping() {
        let k = build_case_a(3).unwrap();
        let rep = nesting_report(&k, 3).unwrap();
        let elements = enumerate_elements(&k, 3).unwrap();
        for l in &rep.levels {
            let count = elements.iter().filter(|e| e.length == l.depth).count();
            assert_eq!(l.circle_count + l.rejected, 2 * count);
        }
    }

    #[test]
    fn csv_and_pgm() {
        let pts = vec![
            OrbitPoint {
                position: Complex64::new(0.0, 0.0),
                word_length: 1,
            },
            OrbitPoint {
                position: Complex64::new(0.5, -0.25),
                word_length: 2,
            },
        ];
        assert_eq!(to_csv(&pts), "re,im,depth\n0,0,1\n0.5,-0.25,2\n");
        let img = render_pgm(
            &pts,
            &RenderOptions {
                width: 4,
                height: 4,
                bbox: [-1.0, 1.0, -1.0, 1.0],
            },
        );
        let header = b"P5\n4 4\n255\n";
        assert_eq!(&img[..header.len()], header);
        let px = &img[header.len()..];
        assert_eq!(px.len(), 16);
        // (0,0) lands on pixel (2,2); its plus-shaped splat lights 5 pixels.
        assert_eq!(px[2 * 4 + 2], 255);
        assert_eq!(px[4 + 2], 255);
        assert_eq!(px[0], 0);
    }
}
