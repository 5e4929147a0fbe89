//! Free words, finite presentations, Todd-Coxeter coset enumeration,
//! permutation quotients and exhaustive homomorphism search.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Largest target order accepted by [`enumerate_homs`].
pub const MAX_HOM_TARGET: u64 = 10_000;

/// Default coset limit for [`todd_coxeter`].
pub const DEFAULT_MAX_COSETS: usize = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PresentationError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("enumeration did not close within {max_cosets} cosets (the index may be infinite)")]
    EnumerationOverflow { max_cosets: usize },
    #[error("quotient undefined: the subgroup is not normal")]
    QuotientUndefined,
    #[error("target group of order {0} exceeds the exhaustive-scan guard")]
    ScanTooLarge(u64),
}

/// A freely reduced word. Letter `+(g+1)` is generator `g`, `-(g+1)` its inverse.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Word(Vec<i32>);

fn letter_column(letter: i32) -> usize {
    let g = (letter.unsigned_abs() - 1) as usize;
    if letter > 0 {
        2 * g
    } else {
        2 * g + 1
    }
}

impl Word {
    pub fn new(letters: impl IntoIterator<Item = i32>) -> Self {
        let mut out: Vec<i32> = Vec::new();
        for l in letters {
            assert!(l != 0, "0 is not a letter");
            if out.last() == Some(&-l) {
                out.pop();
            } else {
                out.push(l);
            }
        }
        Word(out)
    }

    pub fn empty() -> Self {
        Word(Vec::new())
    }

    /// The one-letter word for generator `g` (0-based).
    pub fn generator(g: usize) -> Self {
        Word(vec![g as i32 + 1])
    }

    pub fn letters(&self) -> &[i32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word(self.0.iter().rev().map(|l| -l).collect())
    }

    pub fn concat(&self, other: &Word) -> Word {
        Word::new(self.0.iter().chain(other.0.iter()).copied())
    }

    pub fn pow(&self, k: i64) -> Word {
        let base = if k < 0 { self.inverse() } else { self.clone() };
        let mut out = Word::empty();
        for _ in 0..k.unsigned_abs() {
            out = out.concat(&base);
        }
        out
    }

    /// `g · self · g⁻¹`.
    pub fn conjugate_by(&self, g: &Word) -> Word {
        g.concat(self).concat(&g.inverse())
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        match (self.0.first(), self.0.last()) {
            (Some(f), Some(l)) => self.0.len() == 1 || *f != -*l,
            _ => true,
        }
    }

    pub fn cyclically_reduced(&self) -> Word {
        let mut v = self.0.as_slice();
        while v.len() >= 2 && v[0] == -v[v.len() - 1] {
            v = &v[1..v.len() - 1];
        }
        Word(v.to_vec())
    }

    /// Sum of the exponents of generator `g`.
    pub fn exponent_sum(&self, g: usize) -> i64 {
        let id = g as i32 + 1;
        self.0
            .iter()
            .map(|&l| {
                if l == id {
                    1
                } else if l == -id {
                    -1
                } else {
                    0
                }
            })
            .sum()
    }

    /// Largest generator index used plus one.
    pub fn generator_bound(&self) -> usize {
        self.0.iter().map(|l| l.unsigned_abs() as usize).max().unwrap_or(0)
    }

    /// Replaces every generator by a word (inverse letters by the inverse word).
    pub fn substitute(&self, images: &[Word]) -> Word {
        let mut out = Vec::new();
        for &l in &self.0 {
            let w = &images[(l.unsigned_abs() - 1) as usize];
            if l > 0 {
                out.extend_from_slice(&w.0);
            } else {
                out.extend(w.0.iter().rev().map(|x| -x));
            }
        }
        Word::new(out)
    }

    /// Renders with generator names, e.g. `T B T^-1 B`.
    pub fn display_with(&self, names: &[String]) -> String {
        if self.0.is_empty() {
            return "1".into();
        }
        self.0
            .iter()
            .map(|&l| {
                let name = &names[(l.unsigned_abs() - 1) as usize];
                if l > 0 {
                    name.clone()
                } else {
                    format!("{name}^-1")
                }
            })
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses whitespace-separated generator names with optional `^k` suffixes.
    pub fn parse(text: &str, names: &[String]) -> Result<Word, String> {
        let mut letters = Vec::new();
        for token in text.split_whitespace() {
            if token == "1" {
                continue;
            }
            let (name, exp) = match token.split_once('^') {
                Some((n, e)) => (n, e.parse::<i64>().map_err(|_| format!("bad exponent in `{token}`"))?),
                None => (token, 1),
            };
            let g = names
                .iter()
                .position(|n| n == name)
                .ok_or_else(|| format!("unknown generator `{name}`"))?;
            let l = g as i32 + 1;
            for _ in 0..exp.unsigned_abs() {
                letters.push(if exp > 0 { l } else { -l });
            }
        }
        Ok(Word::new(letters))
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Which HNN construction a presentation encodes.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Family {
    /// Dihedral vertex group D_n; generators (B, T).
    CaseA { n: u32 },
    /// Tetrahedral vertex group A_4; generators (A, B, T).
    CaseB,
}

impl Family {
    /// Order of the cone point of the quotient orbifold.
    pub fn cone_order(&self) -> u32 {
        match *self {
            Family::CaseA { n } => n,
            Family::CaseB => 2,
        }
    }

    /// Order of the finite vertex group.
    pub fn vertex_group_order(&self) -> usize {
        match *self {
            Family::CaseA { n } => 2 * n as usize,
            Family::CaseB => 12,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Presentation {
    pub generators: Vec<String>,
    pub relators: Vec<Word>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<Family>,
}

impl Presentation {
    pub fn new(generators: Vec<String>, relators: Vec<Word>) -> Result<Self, PresentationError> {
        if generators.is_empty() {
            return Err(PresentationError::InvalidParameter("no generators".into()));
        }
        let mut rels = Vec::with_capacity(relators.len());
        for r in relators {
            let r = r.cyclically_reduced();
            if r.is_empty() {
                return Err(PresentationError::InvalidParameter("empty relator".into()));
            }
            if r.generator_bound() > generators.len() {
                return Err(PresentationError::InvalidParameter(
                    "relator uses an unknown generator".into(),
                ));
            }
            rels.push(r);
        }
        Ok(Presentation {
            generators,
            relators: rels,
            family: None,
        })
    }

    fn with_family(mut self, family: Family) -> Self {
        self.family = Some(family);
        self
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn word(&self, text: &str) -> Result<Word, PresentationError> {
        Word::parse(text, &self.generators).map_err(|message| PresentationError::Parse { line: 0, message })
    }

    /// Parses the `gens: ...` / `rel: ...` text format.
    pub fn parse(text: &str) -> Result<Self, PresentationError> {
        let mut gens: Option<Vec<String>> = None;
        let mut rels = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| PresentationError::Parse { line: i + 1, message };
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| err("expected `key: value`".into()))?;
            match key.trim() {
                "gens" => {
                    if gens.is_some() {
                        return Err(err("duplicate gens line".into()));
                    }
                    let names: Vec<String> = rest.split_whitespace().map(str::to_string).collect();
                    if names.iter().any(|n| n.contains('^') || n == "1") {
                        return Err(err("invalid generator name".into()));
                    }
                    gens = Some(names);
                }
                "rel" => {
                    let names = gens.as_ref().ok_or_else(|| err("rel before gens".into()))?;
                    rels.push(Word::parse(rest, names).map_err(err)?);
                }
                other => return Err(err(format!("unknown key `{other}`"))),
            }
        }
        let gens = gens.ok_or(PresentationError::Parse {
            line: 0,
            message: "missing gens line".into(),
        })?;
        Presentation::new(gens, rels)
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("gens: {}\n", self.generators.join(" "));
        for r in &self.relators {
            s.push_str(&format!("rel: {}\n", r.display_with(&self.generators)));
        }
        s
    }
}

fn gen(g: usize) -> Word {
    Word::generator(g)
}

/// `[T,B] = T B T⁻¹ B` over generators (B, T).
pub fn case_a_rotation_word() -> Word {
    let (b, t) = (gen(0), gen(1));
    t.concat(&b).concat(&t.inverse()).concat(&b)
}

/// ⟨B, T | B², [T,B]ⁿ, ([T,B]·B)²⟩ with [T,B] = T B T⁻¹ B.
pub fn presentation_case_a(n: u32) -> Result<Presentation, PresentationError> {
    if n < 2 {
        return Err(PresentationError::InvalidParameter(format!("n must be ≥ 2, got {n}")));
    }
    let b = gen(0);
    let a = case_a_rotation_word();
    let ab = a.concat(&b);
    let p = Presentation::new(vec!["B".into(), "T".into()], vec![b.pow(2), a.pow(n as i64), ab.pow(2)])?;
    Ok(p.with_family(Family::CaseA { n }))
}

/// ⟨A, B, T | A³, B², (AB)³, [T,A]⟩: the tetrahedral group extended by a
/// stable letter commuting with A.
pub fn presentation_case_b() -> Presentation {
    let (a, b, t) = (gen(0), gen(1), gen(2));
    let comm = t.concat(&a).concat(&t.inverse()).concat(&a.inverse());
    Presentation::new(
        vec!["A".into(), "B".into(), "T".into()],
        vec![a.pow(3), b.pow(2), a.concat(&b).pow(3), comm],
    )
    .expect("static presentation")
    .with_family(Family::CaseB)
}

/// Exponents `lo..=hi` with `hi − lo + 1 = n`, used for the conjugate lists.
fn conjugate_range(n: u32) -> (i64, i64) {
    let n = n as i64;
    if n % 2 == 1 {
        (-(n - 1) / 2, (n - 1) / 2)
    } else {
        (-(n / 2 - 1), n / 2)
    }
}

/// `A^k C A^{-k}` for k = −(n−1)/2 ..= (n−1)/2, where C = A^{(n−1)/2} T.
pub fn subgroup_words_odd(n: u32) -> Result<Vec<Word>, PresentationError> {
    if n < 3 || n.is_multiple_of(2) {
        return Err(PresentationError::InvalidParameter(format!(
            "n must be odd and ≥ 3, got {n}"
        )));
    }
    let a = case_a_rotation_word();
    let c = a.pow(((n - 1) / 2) as i64).concat(&gen(1));
    let (lo, hi) = conjugate_range(n);
    Ok((lo..=hi).map(|k| c.conjugate_by(&a.pow(k))).collect())
}

/// `A^k T A^{-k}` for k = −(n/2 − 1) ..= n/2.
pub fn subgroup_words_even(n: u32) -> Result<Vec<Word>, PresentationError> {
    if n < 2 || n % 2 == 1 {
        return Err(PresentationError::InvalidParameter(format!(
            "n must be even and ≥ 2, got {n}"
        )));
    }
    let a = case_a_rotation_word();
    let (lo, hi) = conjugate_range(n);
    Ok((lo..=hi).map(|k| gen(1).conjugate_by(&a.pow(k))).collect())
}

/// T, BTB, ABTBA⁻¹, A⁻¹BTBA over generators (A, B, T).
pub fn subgroup_words_a4() -> Vec<Word> {
    let (a, b, t) = (gen(0), gen(1), gen(2));
    let btb = b.concat(&t).concat(&b);
    vec![
        t.clone(),
        btb.clone(),
        btb.conjugate_by(&a),
        btb.conjugate_by(&a.inverse()),
    ]
}

const UNDEF: u32 = u32::MAX;

/// Working state of the HLT enumeration.
struct Enumerator<'a> {
    ncols: usize,
    table: Vec<u32>,
    parent: Vec<u32>,
    active: usize,
    max_cosets: usize,
    relators: Vec<Vec<usize>>,
    queue: Vec<u32>,
    _p: &'a Presentation,
}

struct NeedSpace;

impl<'a> Enumerator<'a> {
    fn new(p: &'a Presentation, max_cosets: usize) -> Self {
        let ncols = 2 * p.generator_count();
        Enumerator {
            ncols,
            table: vec![UNDEF; ncols],
            parent: vec![0],
            active: 1,
            max_cosets,
            relators: p
                .relators
                .iter()
                .map(|r| r.letters().iter().map(|&l| letter_column(l)).collect())
                .collect(),
            queue: Vec::new(),
            _p: p,
        }
    }

    #[inline]
    fn get(&self, c: u32, x: usize) -> u32 {
        self.table[c as usize * self.ncols + x]
    }

    #[inline]
    fn set(&mut self, c: u32, x: usize, v: u32) {
        self.table[c as usize * self.ncols + x] = v;
    }

    fn is_live(&self, c: u32) -> bool {
        self.parent[c as usize] == c
    }

    fn len(&self) -> usize {
        self.parent.len()
    }

    fn define(&mut self, c: u32, x: usize) -> Result<(), NeedSpace> {
        if self.active >= self.max_cosets {
            return Err(NeedSpace);
        }
        let n = self.parent.len() as u32;
        self.parent.push(n);
        self.table.extend(std::iter::repeat_n(UNDEF, self.ncols));
        self.active += 1;
        self.set(c, x, n);
        self.set(n, x ^ 1, c);
        Ok(())
    }

    fn rep(&mut self, c: u32) -> u32 {
        let mut r = c;
        while self.parent[r as usize] != r {
            r = self.parent[r as usize];
        }
        let mut s = c;
        while self.parent[s as usize] != r {
            let next = self.parent[s as usize];
            self.parent[s as usize] = r;
            s = next;
        }
        r
    }

    fn merge(&mut self, k: u32, l: u32) {
        let (k, l) = (self.rep(k), self.rep(l));
        if k == l {
            return;
        }
        let (lo, hi) = if k < l { (k, l) } else { (l, k) };
        self.parent[hi as usize] = lo;
        self.active -= 1;
        self.queue.push(hi);
    }

    fn coincidence(&mut self, a: u32, b: u32) {
        self.merge(a, b);
        let mut i = 0;
        while i < self.queue.len() {
            let e = self.queue[i];
            i += 1;
            for x in 0..self.ncols {
                let f = self.get(e, x);
                if f == UNDEF {
                    continue;
                }
                self.set(f, x ^ 1, UNDEF);
                let e1 = self.rep(e);
                let f1 = self.rep(f);
                let ex = self.get(e1, x);
                if ex != UNDEF {
                    self.merge(f1, ex);
                } else {
                    let fx = self.get(f1, x ^ 1);
                    if fx != UNDEF {
                        self.merge(e1, fx);
                    } else {
                        self.set(e1, x, f1);
                        self.set(f1, x ^ 1, e1);
                    }
                }
            }
        }
        self.queue.clear();
    }

    /// Scans `word` from coset `c`; fills gaps by definition when `fill` is set.
    fn scan(&mut self, c: u32, word: &[usize], fill: bool) -> Result<(), NeedSpace> {
        if word.is_empty() {
            return Ok(());
        }
        let (mut f, mut b) = (c, c);
        let mut i = 0usize;
        let mut j = word.len() as isize - 1;
        loop {
            while (i as isize) <= j {
                let next = self.get(f, word[i]);
                if next == UNDEF {
                    break;
                }
                f = next;
                i += 1;
            }
            if (i as isize) > j {
                if f != b {
                    self.coincidence(f, b);
                }
                return Ok(());
            }
            while j >= i as isize {
                let prev = self.get(b, word[j as usize] ^ 1);
                if prev == UNDEF {
                    break;
                }
                b = prev;
                j -= 1;
            }
            if j < i as isize {
                self.coincidence(f, b);
                return Ok(());
            }
            if j == i as isize {
                self.set(f, word[i], b);
                self.set(b, word[i] ^ 1, f);
                return Ok(());
            }
            if !fill {
                return Ok(());
            }
            self.define(f, word[i])?;
        }
    }

    fn lookahead(&mut self) {
        let mut c = 0;
        while c < self.len() {
            let cu = c as u32;
            for r in 0..self.relators.len() {
                if !self.is_live(cu) {
                    break;
                }
                let w = std::mem::take(&mut self.relators[r]);
                let _ = self.scan(cu, &w, false);
                self.relators[r] = w;
            }
            c += 1;
        }
    }

    fn with_space<F>(&mut self, mut step: F) -> Result<(), PresentationError>
    where
        F: FnMut(&mut Self) -> Result<(), NeedSpace>,
    {
        loop {
            match step(self) {
                Ok(()) => return Ok(()),
                Err(NeedSpace) => {
                    let before = self.active;
                    self.lookahead();
                    if self.active >= before {
                        return Err(PresentationError::EnumerationOverflow {
                            max_cosets: self.max_cosets,
                        });
                    }
                }
            }
        }
    }

    fn run(&mut self, subgroup: &[Vec<usize>]) -> Result<(), PresentationError> {
        for w in subgroup {
            self.with_space(|e| e.scan(0, w, true))?;
        }
        let mut c = 0usize;
        while c < self.len() {
            let cu = c as u32;
            for r in 0..self.relators.len() {
                if !self.is_live(cu) {
                    break;
                }
                let w = self.relators[r].clone();
                self.with_space(|e| e.scan(cu, &w, true))?;
            }
            if self.is_live(cu) {
                for x in 0..self.ncols {
                    if self.get(cu, x) == UNDEF {
                        self.with_space(|e| if e.get(cu, x) == UNDEF { e.define(cu, x) } else { Ok(()) })?;
                    }
                }
            }
            c += 1;
        }
        Ok(())
    }

    /// Renumbers live cosets in breadth-first order from coset 0.
    fn standardized(&mut self) -> (usize, Vec<u32>) {
        let mut order: Vec<u32> = Vec::with_capacity(self.active);
        let mut label = vec![UNDEF; self.len()];
        label[0] = 0;
        order.push(0);
        let mut head = 0;
        while head < order.len() {
            let c = order[head];
            head += 1;
            for x in 0..self.ncols {
                let d = self.rep(self.get(c, x));
                if label[d as usize] == UNDEF {
                    label[d as usize] = order.len() as u32;
                    order.push(d);
                }
            }
        }
        let n = order.len();
        let mut out = vec![UNDEF; n * self.ncols];
        for (new, &old) in order.iter().enumerate() {
            for x in 0..self.ncols {
                let d = self.rep(self.get(old, x));
                out[new * self.ncols + x] = label[d as usize];
            }
        }
        (n, out)
    }
}

/// A complete coset table: row = coset, column `2g` = generator g, `2g+1` = its inverse.
#[derive(Clone, Debug, PartialEq)]
pub struct CosetTable {
    presentation: Presentation,
    subgroup: Vec<Word>,
    n_cosets: usize,
    ncols: usize,
    table: Vec<u32>,
}

/// HLT coset enumeration with lookahead on overflow. The returned table is
/// standardized (cosets numbered breadth-first from the subgroup coset).
pub fn todd_coxeter(p: &Presentation, subgroup: &[Word], max_cosets: usize) -> Result<CosetTable, PresentationError> {
    if max_cosets < 1 {
        return Err(PresentationError::InvalidParameter("max_cosets must be ≥ 1".into()));
    }
    if subgroup.iter().any(|w| w.generator_bound() > p.generator_count()) {
        return Err(PresentationError::InvalidParameter(
            "subgroup word uses an unknown generator".into(),
        ));
    }
    let mut e = Enumerator::new(p, max_cosets);
    let sub: Vec<Vec<usize>> = subgroup
        .iter()
        .map(|w| w.letters().iter().map(|&l| letter_column(l)).collect())
        .collect();
    e.run(&sub)?;
    let (n_cosets, table) = e.standardized();
    debug_assert!(table.iter().all(|&v| v != UNDEF));
    Ok(CosetTable {
        presentation: p.clone(),
        subgroup: subgroup.to_vec(),
        n_cosets,
        ncols: e.ncols,
        table,
    })
}

impl CosetTable {
    /// Number of cosets, i.e. the subgroup index.
    pub fn index(&self) -> usize {
        self.n_cosets
    }

    pub fn presentation(&self) -> &Presentation {
        &self.presentation
    }

    pub fn subgroup(&self) -> &[Word] {
        &self.subgroup
    }

    /// Image of coset `c` under one letter.
    pub fn act(&self, c: usize, letter: i32) -> usize {
        self.table[c * self.ncols + letter_column(letter)] as usize
    }

    /// Coset reached from `c` by reading `w` left to right.
    pub fn trace(&self, c: usize, w: &Word) -> usize {
        w.letters().iter().fold(c, |c, &l| self.act(c, l))
    }

    pub fn row(&self, c: usize) -> &[u32] {
        &self.table[c * self.ncols..(c + 1) * self.ncols]
    }

    /// Checks the structural invariants: bijective columns, trivial relators,
    /// transitivity, and the subgroup fixing coset 0.
    pub fn check(&self) -> Result<(), String> {
        let n = self.n_cosets;
        for x in 0..self.ncols {
            let mut seen = vec![false; n];
            for c in 0..n {
                let d = self.table[c * self.ncols + x] as usize;
                if d >= n || seen[d] {
                    return Err(format!("column {x} is not a permutation"));
                }
                seen[d] = true;
                if self.table[d * self.ncols + (x ^ 1)] as usize != c {
                    return Err(format!("column {x} and its inverse disagree at coset {c}"));
                }
            }
        }
        for c in 0..n {
            for r in &self.presentation.relators {
                if self.trace(c, r) != c {
                    return Err(format!("relator {r} moves coset {c}"));
                }
            }
        }
        for w in &self.subgroup {
            if self.trace(0, w) != 0 {
                return Err(format!("subgroup word {w} moves coset 0"));
            }
        }
        let mut seen = vec![false; n];
        let mut stack = vec![0usize];
        seen[0] = true;
        while let Some(c) = stack.pop() {
            for &d in self.row(c) {
                if !seen[d as usize] {
                    seen[d as usize] = true;
                    stack.push(d as usize);
                }
            }
        }
        if seen.iter().any(|s| !s) {
            return Err("action is not transitive".into());
        }
        Ok(())
    }

    /// CSV with one row per coset and one column per generator and inverse.
    pub fn to_csv(&self) -> String {
        let names = &self.presentation.generators;
        let mut s = String::from("coset");
        for g in names {
            s.push_str(&format!(",{g},{g}^-1"));
        }
        s.push('\n');
        for c in 0..self.n_cosets {
            s.push_str(&c.to_string());
            for v in self.row(c) {
                s.push_str(&format!(",{v}"));
            }
            s.push('\n');
        }
        s
    }
}

/// A permutation of `0..n` acting on the right: `x ↦ self[x]`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Permutation(pub Vec<u32>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Permutation((0..n as u32).collect())
    }

    pub fn degree(&self) -> usize {
        self.0.len()
    }

    pub fn image(&self, x: usize) -> usize {
        self.0[x] as usize
    }

    /// First `self`, then `other`.
    pub fn then(&self, other: &Permutation) -> Permutation {
        Permutation(self.0.iter().map(|&x| other.0[x as usize]).collect())
    }

    pub fn inverse(&self) -> Permutation {
        let mut v = vec![0u32; self.0.len()];
        for (i, &x) in self.0.iter().enumerate() {
            v[x as usize] = i as u32;
        }
        Permutation(v)
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &x)| i as u32 == x)
    }

    pub fn fixed_point_count(&self) -> usize {
        self.0.iter().enumerate().filter(|&(i, &x)| i as u32 == x).count()
    }

    pub fn order(&self) -> u64 {
        let n = self.0.len();
        let mut seen = vec![false; n];
        let mut l: u64 = 1;
        for s in 0..n {
            if seen[s] {
                continue;
            }
            let mut len = 0u64;
            let mut x = s;
            while !seen[x] {
                seen[x] = true;
                x = self.0[x] as usize;
                len += 1;
            }
            l = lcm(l, len);
        }
        l
    }
}

fn gcd(a: u64, b: u64) -> u64 {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

fn lcm(a: u64, b: u64) -> u64 {
    a / gcd(a, b) * b
}

/// The right coset action of each presentation generator.
pub fn permutation_rep(t: &CosetTable) -> Vec<Permutation> {
    (0..t.presentation.generator_count())
        .map(|g| Permutation((0..t.n_cosets).map(|c| t.table[c * t.ncols + 2 * g]).collect()))
        .collect()
}

/// Permutation of the cosets induced by a word.
pub fn word_permutation(t: &CosetTable, w: &Word) -> Permutation {
    Permutation((0..t.n_cosets).map(|c| t.trace(c, w) as u32).collect())
}

/// Stabilizer chain over the base 0, 1, 2, … (Knuth's formulation of Schreier-Sims).
struct StabilizerChain {
    n: usize,
    sigma: Vec<Vec<Option<Permutation>>>,
    gens: Vec<Vec<Permutation>>,
}

impl StabilizerChain {
    fn new(n: usize) -> Self {
        let mut sigma = vec![vec![None; n]; n];
        for (k, row) in sigma.iter_mut().enumerate() {
            row[k] = Some(Permutation::identity(n));
        }
        StabilizerChain {
            n,
            sigma,
            gens: vec![Vec::new(); n],
        }
    }

    fn contains_from(&self, mut k: usize, mut g: Permutation) -> bool {
        while k < self.n {
            let j = g.image(k);
            match &self.sigma[k][j] {
                None => return false,
                Some(s) => g = g.then(&s.inverse()),
            }
            k += 1;
        }
        true
    }

    fn add(&mut self, k: usize, g: Permutation) {
        if k >= self.n || self.contains_from(k, g.clone()) {
            return;
        }
        self.gens[k].push(g.clone());
        let reps: Vec<Permutation> = self.sigma[k].iter().flatten().cloned().collect();
        for s in reps {
            self.close(k, s.then(&g));
        }
    }

    fn close(&mut self, k: usize, g: Permutation) {
        let j = g.image(k);
        match self.sigma[k][j].clone() {
            None => {
                self.sigma[k][j] = Some(g.clone());
                let gens = self.gens[k].clone();
                for r in gens {
                    self.close(k, g.then(&r));
                }
            }
            Some(s) => {
                let h = g.then(&s.inverse());
                if !self.contains_from(k + 1, h.clone()) {
                    self.add(k + 1, h);
                }
            }
        }
    }

    fn order(&self) -> u128 {
        self.sigma
            .iter()
            .map(|row| row.iter().filter(|s| s.is_some()).count() as u128)
            .product()
    }
}

/// Order of the permutation group generated by `gens`.
pub fn permutation_group_order(gens: &[Permutation]) -> u128 {
    let Some(n) = gens.first().map(|g| g.degree()) else {
        return 1;
    };
    let mut chain = StabilizerChain::new(n);
    for g in gens {
        chain.add(0, g.clone());
    }
    chain.order()
}

/// Whether the stabilized subgroup is normal: the image group acts regularly.
pub fn is_normal(t: &CosetTable) -> bool {
    permutation_group_order(&permutation_rep(t)) == t.index() as u128
}

/// The kernel of the coset action (the normal core of the subgroup).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormalCore {
    /// Index of the core = order of the permutation image.
    pub core_index: u128,
    /// Degree of the action whose kernel is the core.
    pub degree: usize,
    /// Images of the presentation generators; the core is the kernel of this map.
    pub generator_images: Vec<Permutation>,
}

pub fn normal_core(t: &CosetTable) -> NormalCore {
    let images = permutation_rep(t);
    NormalCore {
        core_index: permutation_group_order(&images),
        degree: t.index(),
        generator_images: images,
    }
}

/// Coarse isomorphism type of a small finite group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", content = "m", rename_all = "snake_case")]
pub enum StructureTag {
    Cyclic(usize),
    Dihedral(usize),
    A4,
    Other,
}

impl fmt::Display for StructureTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            StructureTag::Cyclic(m) => write!(f, "cyclic({m})"),
            StructureTag::Dihedral(m) => write!(f, "dihedral({m})"),
            StructureTag::A4 => write!(f, "A4"),
            StructureTag::Other => write!(f, "other"),
        }
    }
}

/// A finite group given by its Cayley table; element 0 is the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteGroup {
    pub name: String,
    /// `table[x][y] = x·y`.
    pub table: Vec<Vec<u32>>,
    pub inverse: Vec<u32>,
    pub generators: Vec<usize>,
}

/// Cap on closure size when building groups from permutations.
const MAX_GROUP_ORDER: usize = 100_000;

impl FiniteGroup {
    /// Closes `gens` under composition (`x·y` = first x, then y).
    pub fn from_permutations(name: &str, gens: &[Permutation]) -> Result<Self, PresentationError> {
        let degree = gens.first().map(|g| g.degree()).unwrap_or(0);
        if gens.iter().any(|g| g.degree() != degree) {
            return Err(PresentationError::InvalidParameter("mixed permutation degrees".into()));
        }
        let mut elements = vec![Permutation::identity(degree)];
        // BFS tree: element i = elements[parent[i]] · gens[via[i]].
        let mut parent = vec![0usize];
        let mut via = vec![0usize];
        let mut index = std::collections::HashMap::new();
        index.insert(elements[0].clone(), 0usize);
        let mut right: Vec<Vec<u32>> = Vec::new();
        let mut head = 0;
        while head < elements.len() {
            let x = elements[head].clone();
            let mut row = Vec::with_capacity(gens.len());
            for (gi, g) in gens.iter().enumerate() {
                let y = x.then(g);
                let j = match index.get(&y) {
                    Some(&j) => j,
                    None => {
                        if elements.len() >= MAX_GROUP_ORDER {
                            return Err(PresentationError::InvalidParameter("group too large".into()));
                        }
                        let j = elements.len();
                        index.insert(y.clone(), j);
                        elements.push(y);
                        parent.push(head);
                        via.push(gi);
                        j
                    }
                };
                row.push(j as u32);
            }
            right.push(row);
            head += 1;
        }
        let n = elements.len();
        let mut table = vec![vec![0u32; n]; n];
        for (x, row) in table.iter_mut().enumerate() {
            row[0] = x as u32;
            for y in 1..n {
                row[y] = right[row[parent[y]] as usize][via[y]];
            }
        }
        let inverse = elements.iter().map(|x| index[&x.inverse()] as u32).collect();
        let generators = gens.iter().map(|g| index[g]).collect();
        debug_assert_eq!(table.len(), n);
        Ok(FiniteGroup {
            name: name.into(),
            table,
            inverse,
            generators,
        })
    }

    /// ℤ_m.
    pub fn cyclic(m: usize) -> Result<Self, PresentationError> {
        if m < 1 {
            return Err(PresentationError::InvalidParameter("cyclic order must be ≥ 1".into()));
        }
        let r = Permutation((0..m as u32).map(|i| (i + 1) % m as u32).collect());
        Self::from_permutations(&format!("Z{m}"), &[r])
    }

    /// Dihedral group of order 2m, generated by a rotation r and a reflection s.
    pub fn dihedral(m: usize) -> Result<Self, PresentationError> {
        if m < 2 {
            return Err(PresentationError::InvalidParameter(
                "dihedral parameter must be ≥ 2".into(),
            ));
        }
        // Right regular action on r^k s^e, indexed k + e·m.
        let k = m as u32;
        let rot = Permutation(
            (0..2 * k)
                .map(|i| if i < k { (i + 1) % k } else { k + (i - k + k - 1) % k })
                .collect(),
        );
        let refl = Permutation((0..2 * k).map(|i| if i < k { i + k } else { i - k }).collect());
        Self::from_permutations(&format!("D{m}"), &[rot, refl])
    }

    /// Alternating group on four points, generated by (0 1 2) and (0 1)(2 3).
    pub fn a4() -> Self {
        let a = Permutation(vec![1, 2, 0, 3]);
        let b = Permutation(vec![1, 0, 3, 2]);
        Self::from_permutations("A4", &[a, b]).expect("A4")
    }

    /// Parses `Zm`, `Dm` or `A4`.
    pub fn by_name(name: &str) -> Result<Self, PresentationError> {
        let bad = || PresentationError::InvalidParameter(format!("unknown target group `{name}`"));
        if name == "A4" {
            return Ok(Self::a4());
        }
        let (kind, m) = name.split_at(1);
        let m: usize = m.parse().map_err(|_| bad())?;
        let order = if kind == "D" { m.saturating_mul(2) } else { m };
        if order as u64 > MAX_HOM_TARGET {
            return Err(PresentationError::ScanTooLarge(order as u64));
        }
        match kind {
            "Z" => Self::cyclic(m),
            "D" => Self::dihedral(m),
            _ => Err(bad()),
        }
    }

    pub fn order(&self) -> usize {
        self.table.len()
    }

    pub fn mul(&self, x: usize, y: usize) -> usize {
        self.table[x][y] as usize
    }

    pub fn inv(&self, x: usize) -> usize {
        self.inverse[x] as usize
    }

    pub fn element_order(&self, x: usize) -> usize {
        let mut k = 1;
        let mut y = x;
        while y != 0 {
            y = self.mul(y, x);
            k += 1;
        }
        k
    }

    /// Evaluates a word with generator `g` sent to `images[g]`.
    pub fn eval(&self, w: &Word, images: &[usize]) -> usize {
        w.letters().iter().fold(0, |acc, &l| {
            let x = images[(l.unsigned_abs() - 1) as usize];
            self.mul(acc, if l > 0 { x } else { self.inv(x) })
        })
    }

    /// Size of the subgroup generated by `elements`.
    pub fn generated_order(&self, elements: &[usize]) -> usize {
        let mut seen = vec![false; self.order()];
        seen[0] = true;
        let mut stack = vec![0usize];
        let mut count = 1;
        while let Some(x) = stack.pop() {
            for &g in elements {
                let y = self.mul(x, g);
                if !seen[y] {
                    seen[y] = true;
                    count += 1;
                    stack.push(y);
                }
            }
        }
        count
    }

    /// Identity, inverses, closure and associativity (on all triples for
    /// small groups, on a deterministic sample otherwise).
    pub fn check_axioms(&self) -> bool {
        let n = self.order();
        if self
            .table
            .iter()
            .any(|row| row.len() != n || row.iter().any(|&v| v as usize >= n))
        {
            return false;
        }
        if (0..n).any(|x| self.mul(0, x) != x || self.mul(x, 0) != x || self.mul(x, self.inv(x)) != 0) {
            return false;
        }
        let step = if n <= 24 { 1 } else { n / 17 + 1 };
        for x in (0..n).step_by(step) {
            for y in (0..n).step_by(step) {
                for z in (0..n).step_by(step) {
                    if self.mul(self.mul(x, y), z) != self.mul(x, self.mul(y, z)) {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Recognizes cyclic, dihedral and A_4 structure from element orders.
    pub fn structure(&self) -> StructureTag {
        let n = self.order();
        let orders: Vec<usize> = (0..n).map(|x| self.element_order(x)).collect();
        if orders.contains(&n) {
            return StructureTag::Cyclic(n);
        }
        if n.is_multiple_of(2) && n >= 4 {
            let m = n / 2;
            // D_m: an element a of order m with every element outside ⟨a⟩ an involution.
            for a in 0..n {
                if orders[a] != m {
                    continue;
                }
                let mut in_a = vec![false; n];
                let mut y = 0;
                loop {
                    in_a[y] = true;
                    y = self.mul(y, a);
                    if y == 0 {
                        break;
                    }
                }
                if (0..n).all(|x| in_a[x] || orders[x] == 2) {
                    return StructureTag::Dihedral(m);
                }
            }
        }
        if n == 12 {
            let inv = orders.iter().filter(|&&o| o == 2).count();
            let three = orders.iter().filter(|&&o| o == 3).count();
            if inv == 3 && three == 8 {
                return StructureTag::A4;
            }
        }
        StructureTag::Other
    }
}

/// The image group of a coset table whose subgroup is normal.
pub fn quotient_structure(t: &CosetTable) -> Result<(FiniteGroup, StructureTag), PresentationError> {
    if !is_normal(t) {
        return Err(PresentationError::QuotientUndefined);
    }
    let g = FiniteGroup::from_permutations("quotient", &permutation_rep(t))?;
    let tag = g.structure();
    Ok((g, tag))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Homomorphism {
    /// Target element for each presentation generator.
    pub images: Vec<usize>,
    pub surjective: bool,
    /// `None` when the presentation carries no HNN family.
    pub torsion_free_kernel: Option<bool>,
}

/// Every assignment of generator images satisfying all relators, in
/// lexicographic order of the image tuple.
pub fn enumerate_homs(p: &Presentation, target: &FiniteGroup) -> Result<Vec<Homomorphism>, PresentationError> {
    let k = p.generator_count() as u32;
    let n = target.order();
    if n as u64 > MAX_HOM_TARGET {
        return Err(PresentationError::ScanTooLarge(n as u64));
    }
    let mut out = Vec::new();
    let mut images = vec![0usize; k as usize];
    loop {
        if p.relators.iter().all(|r| target.eval(r, &images) == 0) {
            let surjective = target.generated_order(&images) == n;
            let torsion_free_kernel = p.family.map(|f| torsion_free_kernel(&images, target, f));
            out.push(Homomorphism {
                images: images.clone(),
                surjective,
                torsion_free_kernel,
            });
        }
        // odometer, last generator fastest
        let mut pos = k as usize;
        loop {
            if pos == 0 {
                return Ok(out);
            }
            pos -= 1;
            images[pos] += 1;
            if images[pos] < n {
                break;
            }
            images[pos] = 0;
        }
    }
}

/// Whether the kernel is torsion free: the finite vertex group must inject.
pub fn torsion_free_kernel(images: &[usize], target: &FiniteGroup, family: Family) -> bool {
    match family {
        Family::CaseA { n } => {
            let (b, t) = (images[0], images[1]);
            let a = target.eval(&case_a_rotation_word(), &[b, t]);
            target.element_order(b) == 2
                && target.element_order(a) == n as usize
                && target.element_order(target.mul(a, b)) == 2
        }
        Family::CaseB => {
            let (a, b) = (images[0], images[1]);
            target.element_order(a) == 3 && target.element_order(b) == 2 && target.element_order(target.mul(a, b)) == 3
        }
    }
}

/// Words in the presentation generators for the elements of the finite
/// vertex group, found by breadth-first search in `target`-free form:
/// returns generator words for the vertex group itself.
pub fn vertex_group_generators(family: Family) -> Vec<Word> {
    match family {
        Family::CaseA { .. } => vec![gen(0), case_a_rotation_word()],
        Family::CaseB => vec![gen(0), gen(1)],
    }
}

/// Whether the subgroup of a coset table meets no conjugate of the finite
/// vertex group: the vertex group must act faithfully and freely on cosets.
pub fn vertex_group_acts_freely(t: &CosetTable, family: Family) -> bool {
    let perms: Vec<Permutation> = vertex_group_generators(family)
        .iter()
        .map(|w| word_permutation(t, w))
        .collect();
    let Ok(g) = FiniteGroup::from_permutations("vertex", &perms) else {
        return false;
    };
    if g.order() != family.vertex_group_order() {
        return false;
    }
    // Recover the permutations of every element to test for fixed points.
    let mut elems = vec![Permutation::identity(t.index())];
    let mut queue = VecDeque::from([0usize]);
    let mut seen = vec![false; g.order()];
    seen[0] = true;
    let mut perm_of = vec![None; g.order()];
    perm_of[0] = Some(elems[0].clone());
    while let Some(x) = queue.pop_front() {
        let px = perm_of[x].clone().expect("visited");
        for (gi, &ge) in g.generators.iter().enumerate() {
            let y = g.mul(x, ge);
            if !seen[y] {
                seen[y] = true;
                let py = px.then(&perms[gi]);
                elems.push(py.clone());
                perm_of[y] = Some(py);
                queue.push_back(y);
            }
        }
    }
    elems.iter().skip(1).all(|p| p.fixed_point_count() == 0)
}

/// Number of homomorphisms onto-or-into ℤ_m; used as a finite probe of the
/// abelianization.
pub fn count_cyclic_homs(p: &Presentation, m: usize) -> Result<usize, PresentationError> {
    let z = FiniteGroup::cyclic(m)?;
    let mut bare = p.clone();
    bare.family = None;
    Ok(enumerate_homs(&bare, &z)?.len())
}
