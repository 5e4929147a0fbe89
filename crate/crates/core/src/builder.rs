//! Certified origami-Schottky groups, their subgroups as matrix groups, and
//! the Riemann-Hurwitz arithmetic.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, verify_combination, CombinationCertificate, GeometryError, PairedCircles, DEFAULT_TOL};
use crate::moebius::{a4_generators, dn_generators, MapClass, MoebiusError, MoebiusMap};
use crate::presentation::{
    self, is_normal, normal_core, quotient_structure, todd_coxeter, vertex_group_acts_freely, Family, Presentation,
    PresentationError, StructureTag, Word, DEFAULT_MAX_COSETS,
};

/// Relators must evaluate within this of the identity.
pub const RELATOR_TOL: f64 = 1e-9;

/// Word-certificate tolerance for "close to the identity".
pub const FREENESS_TOL: f64 = 1e-6;

/// Violations kept in a word-certificate report.
const MAX_LISTED: usize = 32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BuildError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("index incompatible with cone order: index {index}, cone order {cone_order}")]
    IncompatibleIndex { index: u64, cone_order: u64 },
    #[error("combination certificate failed (margin {margin:e})")]
    CertificateFailed { margin: f64 },
    #[error("relator {relator} has residual {residual:e}")]
    RelatorResidual { relator: String, residual: f64 },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Presentation(#[from] PresentationError),
    #[error(transparent)]
    Moebius(#[from] MoebiusError),
}

/// Overrides for the circle parameter and the λ grids.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct BuildOptions {
    pub r: Option<f64>,
    pub dihedral_grid: Option<Vec<f64>>,
    pub a4_grid: Option<Vec<Complex64>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OrigamiSchottkyGroup {
    pub kind: Family,
    pub a: MoebiusMap,
    pub b: MoebiusMap,
    pub t: MoebiusMap,
    pub pairing: PairedCircles,
    pub certificate: CombinationCertificate,
    pub presentation: Presentation,
    /// Largest relator residual on (A, B, T).
    pub relator_residual: f64,
}

impl OrigamiSchottkyGroup {
    /// Matrices for the presentation generators: (B, T) or (A, B, T).
    pub fn generator_images(&self) -> Vec<MoebiusMap> {
        match self.kind {
            Family::CaseA { .. } => vec![self.b, self.t],
            Family::CaseB => vec![self.a, self.b, self.t],
        }
    }

    pub fn eval(&self, w: &Word) -> MoebiusMap {
        eval_word(&self.generator_images(), w)
    }

    /// Elements of the finite vertex group D_n or A_4.
    pub fn vertex_group(&self) -> Result<Vec<MoebiusMap>, GeometryError> {
        match self.kind {
            Family::CaseA { n } => geometry::dihedral_elements(&self.a, &self.b, n),
            Family::CaseB => geometry::a4_elements(&self.a, &self.b),
        }
    }

    /// Re-runs the relator and certificate checks (for groups read from disk).
    pub fn check(&self) -> Result<(), BuildError> {
        relator_residual(&self.presentation, &self.generator_images())?;
        let cert = verify_combination(&self.vertex_group()?, &self.pairing, DEFAULT_TOL);
        if !cert.verdict {
            return Err(BuildError::CertificateFailed {
                margin: cert.pairwise_margin,
            });
        }
        Ok(())
    }
}

/// Product of generator matrices along a word, left to right.
pub fn eval_word(gens: &[MoebiusMap], w: &Word) -> MoebiusMap {
    w.letters().iter().fold(MoebiusMap::identity(), |acc, &l| {
        let g = gens[(l.unsigned_abs() - 1) as usize];
        acc.compose(&if l > 0 { g } else { g.inverse() })
    })
}

fn relator_residual(p: &Presentation, gens: &[MoebiusMap]) -> Result<f64, BuildError> {
    let mut worst: f64 = 0.0;
    for r in &p.relators {
        let residual = eval_word(gens, r).distance_to_identity();
        if residual >= RELATOR_TOL {
            return Err(BuildError::RelatorResidual {
                relator: r.display_with(&p.generators),
                residual,
            });
        }
        worst = worst.max(residual);
    }
    Ok(worst)
}

fn assemble(
    kind: Family,
    a: MoebiusMap,
    b: MoebiusMap,
    pairing: PairedCircles,
    presentation: Presentation,
    elements: &[MoebiusMap],
) -> Result<OrigamiSchottkyGroup, BuildError> {
    let certificate = verify_combination(elements, &pairing, DEFAULT_TOL);
    if !certificate.verdict {
        return Err(BuildError::CertificateFailed {
            margin: certificate.pairwise_margin,
        });
    }
    let t = pairing.t;
    let gens = match kind {
        Family::CaseA { .. } => vec![b, t],
        Family::CaseB => vec![a, b, t],
    };
    let relator_residual = relator_residual(&presentation, &gens)?;
    Ok(OrigamiSchottkyGroup {
        kind,
        a,
        b,
        t,
        pairing,
        certificate,
        presentation,
        relator_residual,
    })
}

pub fn build_case_a(n: u32) -> Result<OrigamiSchottkyGroup, BuildError> {
    build_case_a_with(n, &BuildOptions::default())
}

/// HNN extension of D_n: T conjugates B to AB.
pub fn build_case_a_with(n: u32, opts: &BuildOptions) -> Result<OrigamiSchottkyGroup, BuildError> {
    if n < 2 {
        return Err(BuildError::InvalidParameter(format!("n must be ≥ 2, got {n}")));
    }
    let (a, b) = dn_generators(n)?;
    let r = match opts.r {
        Some(r) => r,
        None => geometry::default_radius_dihedral(n)?,
    };
    let grid = opts
        .dihedral_grid
        .clone()
        .unwrap_or_else(geometry::default_dihedral_grid);
    let pairing = geometry::find_pairing_dihedral(n, r, &grid)?;
    let elements = geometry::dihedral_elements(&a, &b, n)?;
    assemble(
        Family::CaseA { n },
        a,
        b,
        pairing,
        presentation::presentation_case_a(n)?,
        &elements,
    )
}

pub fn build_case_b() -> Result<OrigamiSchottkyGroup, BuildError> {
    build_case_b_with(&BuildOptions::default())
}

/// HNN extension of A_4: T commutes with A.
pub fn build_case_b_with(opts: &BuildOptions) -> Result<OrigamiSchottkyGroup, BuildError> {
    let (a, b) = a4_generators()?;
    let r = match opts.r {
        Some(r) => r,
        None => geometry::default_radius_a4()?,
    };
    let grid = opts.a4_grid.clone().unwrap_or_else(geometry::default_a4_grid);
    let pairing = geometry::find_pairing_a4(r, &grid)?;
    let elements = geometry::a4_elements(&a, &b)?;
    assemble(
        Family::CaseB,
        a,
        b,
        pairing,
        presentation::presentation_case_b(),
        &elements,
    )
}

/// The g with 2 − 2g = −index·(cone_order − 1)/cone_order.
pub fn riemann_hurwitz_genus(index: u64, cone_order: u64) -> Result<u64, BuildError> {
    if index < 1 || cone_order < 2 {
        return Err(BuildError::InvalidParameter("need index ≥ 1 and cone order ≥ 2".into()));
    }
    let num = index * (cone_order - 1);
    if !num.is_multiple_of(2 * cone_order) {
        return Err(BuildError::IncompatibleIndex { index, cone_order });
    }
    Ok(1 + num / (2 * cone_order))
}

/// Whether a deck group of `group_order` attains the bound 4(g − 1).
pub fn hurwitz_equality(genus: u64, group_order: u64) -> Result<bool, BuildError> {
    if genus < 2 {
        return Err(BuildError::InvalidParameter(format!("genus must be ≥ 2, got {genus}")));
    }
    Ok(group_order == 4 * (genus - 1))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FreenessReport {
    pub max_length: usize,
    pub words_checked: u64,
    pub min_distance_to_identity: f64,
    pub closest_word: Option<Word>,
    pub identity_hits: Vec<Word>,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoxodromyViolation {
    pub word: Word,
    pub class: MapClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoxodromyReport {
    pub max_length: usize,
    pub words_checked: u64,
    pub violation_count: u64,
    pub violations: Vec<LoxodromyViolation>,
    pub passed: bool,
}

/// Depth-first walk over nonempty freely reduced words of length ≤ `max_length`.
fn for_each_word<F: FnMut(&[i32], &MoebiusMap)>(gens: &[MoebiusMap], max_length: usize, mut visit: F) {
    let letters: Vec<(i32, MoebiusMap)> = gens
        .iter()
        .enumerate()
        .flat_map(|(i, g)| [(i as i32 + 1, *g), (-(i as i32 + 1), g.inverse())])
        .collect();
    let mut word: Vec<i32> = Vec::with_capacity(max_length);
    let mut stack: Vec<MoebiusMap> = vec![MoebiusMap::identity()];
    fn rec<F: FnMut(&[i32], &MoebiusMap)>(
        letters: &[(i32, MoebiusMap)],
        max_length: usize,
        word: &mut Vec<i32>,
        stack: &mut Vec<MoebiusMap>,
        visit: &mut F,
    ) {
        if word.len() == max_length {
            return;
        }
        for (l, m) in letters {
            if word.last() == Some(&-l) {
                continue;
            }
            let next = stack.last().expect("nonempty").compose(m);
            word.push(*l);
            stack.push(next);
            visit(word, &next);
            rec(letters, max_length, word, stack, visit);
            stack.pop();
            word.pop();
        }
    }
    rec(&letters, max_length, &mut word, &mut stack, &mut visit);
}

/// Searches reduced words of length ≤ `max_length` for one within `tol` of the identity.
pub fn freeness_certificate(generators: &[MoebiusMap], max_length: usize, tol: f64) -> FreenessReport {
    let mut words_checked = 0u64;
    let mut min_distance = f64::INFINITY;
    let mut closest = None;
    let mut hits = Vec::new();
    let mut hit_count = 0u64;
    for_each_word(generators, max_length, |w, m| {
        words_checked += 1;
        let d = m.distance_to_identity();
        if d < min_distance {
            min_distance = d;
            closest = Some(Word::new(w.iter().copied()));
        }
        if d <= tol {
            hit_count += 1;
            if hits.len() < MAX_LISTED {
                hits.push(Word::new(w.iter().copied()));
            }
        }
    });
    FreenessReport {
        max_length,
        words_checked,
        min_distance_to_identity: min_distance,
        closest_word: closest,
        identity_hits: hits,
        passed: hit_count == 0,
    }
}

/// Checks that every nonempty reduced word of length ≤ `max_length` is loxodromic.
pub fn loxodromy_certificate(generators: &[MoebiusMap], max_length: usize) -> LoxodromyReport {
    let mut words_checked = 0u64;
    let mut violation_count = 0u64;
    let mut violations = Vec::new();
    for_each_word(generators, max_length, |w, m| {
        words_checked += 1;
        let class = m.classify(DEFAULT_TOL);
        if class != MapClass::Loxodromic {
            violation_count += 1;
            if violations.len() < MAX_LISTED {
                violations.push(LoxodromyViolation {
                    word: Word::new(w.iter().copied()),
                    class,
                });
            }
        }
    });
    LoxodromyReport {
        max_length,
        words_checked,
        violation_count,
        violations,
        passed: violation_count == 0,
    }
}

/// Word length used by the certificates: 6 up to rank 3, 4 above.
pub fn default_certificate_depth(rank: usize) -> usize {
    if rank <= 3 {
        6
    } else {
        4
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubgroupReport {
    pub generator_words: Vec<Word>,
    pub generator_text: Vec<String>,
    pub generator_matrices: Vec<MoebiusMap>,
    pub index: usize,
    pub normal: bool,
    /// Present only for normal subgroups.
    pub quotient_tag: Option<StructureTag>,
    pub core_index: u128,
    /// No conjugate of the vertex group meets the subgroup.
    pub torsion_free: bool,
    pub genus: u64,
    /// Evaluated only for normal subgroups (deck group order = index).
    pub hurwitz_equality: Option<bool>,
    pub freeness_depth_checked: usize,
    pub loxodromy_depth_checked: usize,
    pub freeness: FreenessReport,
    pub loxodromy: LoxodromyReport,
}

impl SubgroupReport {
    /// Every check that is a property of any subgroup from the constructions.
    pub fn passed(&self) -> bool {
        self.torsion_free && self.freeness.passed && self.loxodromy.passed
    }
}

/// Index, normality, quotient, genus and word certificates for ⟨words⟩.
pub fn realize_subgroup(k: &OrigamiSchottkyGroup, words: &[Word]) -> Result<SubgroupReport, BuildError> {
    realize_subgroup_with_depth(k, words, None)
}

pub fn realize_subgroup_with_depth(
    k: &OrigamiSchottkyGroup,
    words: &[Word],
    depth: Option<usize>,
) -> Result<SubgroupReport, BuildError> {
    if words.is_empty() {
        return Err(BuildError::InvalidParameter("no subgroup generators".into()));
    }
    if words
        .iter()
        .any(|w| w.generator_bound() > k.presentation.generator_count())
    {
        return Err(BuildError::InvalidParameter("word uses an unknown generator".into()));
    }
    relator_residual(&k.presentation, &k.generator_images())?;
    let matrices: Vec<MoebiusMap> = words.iter().map(|w| k.eval(w)).collect();
    let table = todd_coxeter(&k.presentation, words, DEFAULT_MAX_COSETS)?;
    let index = table.index();
    let normal = is_normal(&table);
    let quotient_tag = if normal {
        Some(quotient_structure(&table)?.1)
    } else {
        None
    };
    let genus = riemann_hurwitz_genus(index as u64, k.kind.cone_order() as u64)?;
    let hurwitz = if normal && genus >= 2 {
        Some(hurwitz_equality(genus, index as u64)?)
    } else {
        None
    };
    let depth = depth.unwrap_or_else(|| default_certificate_depth(words.len()));
    Ok(SubgroupReport {
        generator_words: words.to_vec(),
        generator_text: words
            .iter()
            .map(|w| w.display_with(&k.presentation.generators))
            .collect(),
        generator_matrices: matrices.clone(),
        index,
        normal,
        quotient_tag,
        core_index: normal_core(&table).core_index,
        torsion_free: vertex_group_acts_freely(&table, k.kind),
        genus,
        hurwitz_equality: hurwitz,
        freeness_depth_checked: depth,
        loxodromy_depth_checked: depth,
        freeness: freeness_certificate(&matrices, depth, FREENESS_TOL),
        loxodromy: loxodromy_certificate(&matrices, depth),
    })
}
