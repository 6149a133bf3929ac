//! Exact arithmetic and word metrics in the lamplighter group `L_m = Z/m ≀ Z`.
//!
//! An element is a finitely supported coloring `f: Z → Z/m` and a cursor `c`.
//! Multiplication is `(f, c)·(g, d) = (f + g(· − c), c + d)`, so right
//! multiplication by `t = (0, 1)` moves the cursor and by `a = (δ₀, 0)` adds
//! one to the color under the cursor.

use std::fmt;

use num_rational::Ratio;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;
use crate::similarity::{self, CompareConfig, Sample, SimilarityReport, Verdict};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LampError {
    #[error("modulus must be between 2 and 255, got {0}")]
    BadModulus(u32),
    #[error("modulus mismatch: {0} vs {1}")]
    ModulusMismatch(u8, u8),
    #[error("generating set contains the identity")]
    IdentityGenerator,
    #[error("generating set is empty")]
    EmptyGenerators,
}

/// Canonical element: `colors[i]` is the color at position `offset + i`,
/// with no zero colors at either end. The identity has empty colors and
/// offset 0.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct LampElement {
    modulus: u8,
    offset: i64,
    colors: Vec<u8>,
    cursor: i64,
}

impl fmt::Debug for LampElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "L{}[", self.modulus)?;
        for (i, c) in self.colors.iter().enumerate() {
            if *c != 0 {
                write!(f, " {}:{}", self.offset + i as i64, c)?;
            }
        }
        write!(f, " | cursor {}]", self.cursor)
    }
}

fn check_modulus(m: u32) -> Result<u8, LampError> {
    if (2..=255).contains(&m) {
        Ok(m as u8)
    } else {
        Err(LampError::BadModulus(m))
    }
}

impl LampElement {
    pub fn identity(m: u32) -> Result<Self, LampError> {
        Ok(Self { modulus: check_modulus(m)?, offset: 0, colors: Vec::new(), cursor: 0 })
    }

    /// The cursor step `t`.
    pub fn t(m: u32) -> Result<Self, LampError> {
        Ok(Self { cursor: 1, ..Self::identity(m)? })
    }

    /// The lamp toggle `a`.
    pub fn a(m: u32) -> Result<Self, LampError> {
        Ok(Self { colors: vec![1], ..Self::identity(m)? })
    }

    /// Element from explicit `(position, color)` pairs and a cursor.
    pub fn from_lamps(m: u32, lamps: &[(i64, u32)], cursor: i64) -> Result<Self, LampError> {
        let modulus = check_modulus(m)?;
        let mut e = Self::identity(m)?;
        e.cursor = cursor;
        if let (Some(lo), Some(hi)) = (lamps.iter().map(|l| l.0).min(), lamps.iter().map(|l| l.0).max()) {
            e.offset = lo;
            e.colors = vec![0; (hi - lo + 1) as usize];
            for &(pos, c) in lamps {
                let slot = &mut e.colors[(pos - lo) as usize];
                *slot = ((*slot as u32 + c) % modulus as u32) as u8;
            }
        }
        e.canonicalize();
        Ok(e)
    }

    pub fn modulus(&self) -> u32 {
        self.modulus as u32
    }

    pub fn cursor(&self) -> i64 {
        self.cursor
    }

    pub fn color(&self, pos: i64) -> u32 {
        let i = pos - self.offset;
        if i < 0 || i >= self.colors.len() as i64 {
            0
        } else {
            self.colors[i as usize] as u32
        }
    }

    /// Lit positions, ascending.
    pub fn support(&self) -> impl Iterator<Item = i64> + '_ {
        self.colors
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0)
            .map(|(i, _)| self.offset + i as i64)
    }

    pub fn lit_count(&self) -> usize {
        self.colors.iter().filter(|c| **c != 0).count()
    }

    pub fn is_identity(&self) -> bool {
        self.colors.is_empty() && self.cursor == 0
    }

    fn canonicalize(&mut self) {
        let lead = self.colors.iter().take_while(|c| **c == 0).count();
        if lead == self.colors.len() {
            self.colors.clear();
            self.offset = 0;
            return;
        }
        let trail = self.colors.iter().rev().take_while(|c| **c == 0).count();
        self.colors.truncate(self.colors.len() - trail);
        self.colors.drain(..lead);
        self.offset += lead as i64;
    }

    /// Flat byte encoding of the canonical form, used as a hash key.
    pub fn key(&self) -> Box<[u8]> {
        let mut k = Vec::with_capacity(16 + self.colors.len());
        k.extend_from_slice(&self.offset.to_le_bytes());
        k.extend_from_slice(&self.cursor.to_le_bytes());
        k.extend_from_slice(&self.colors);
        k.into_boxed_slice()
    }

    pub fn multiply(&self, other: &Self) -> Result<Self, LampError> {
        if self.modulus != other.modulus {
            return Err(LampError::ModulusMismatch(self.modulus, other.modulus));
        }
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let m = self.modulus as u16;
        let mut out = Self { modulus: self.modulus, offset: 0, colors: Vec::new(), cursor: self.cursor + other.cursor };
        if other.colors.is_empty() {
            out.offset = self.offset;
            out.colors = self.colors.clone();
            return out;
        }
        let shifted = other.offset + self.cursor;
        if self.colors.is_empty() {
            out.offset = shifted;
            out.colors = other.colors.clone();
            return out;
        }
        let lo = self.offset.min(shifted);
        let hi = (self.offset + self.colors.len() as i64).max(shifted + other.colors.len() as i64);
        out.offset = lo;
        out.colors = vec![0; (hi - lo) as usize];
        let a = (self.offset - lo) as usize;
        out.colors[a..a + self.colors.len()].copy_from_slice(&self.colors);
        let b = (shifted - lo) as usize;
        for (slot, c) in out.colors[b..].iter_mut().zip(&other.colors) {
            *slot = ((*slot as u16 + *c as u16) % m) as u8;
        }
        out.canonicalize();
        out
    }

    /// `(f, c)⁻¹ = (−f(· + c), −c)`.
    pub fn inverse(&self) -> Self {
        let m = self.modulus;
        Self {
            modulus: m,
            offset: if self.colors.is_empty() { 0 } else { self.offset - self.cursor },
            colors: self.colors.iter().map(|c| if *c == 0 { 0 } else { m - c }).collect(),
            cursor: -self.cursor,
        }
    }

    pub fn pow(&self, n: i64) -> Self {
        let base = if n < 0 { self.inverse() } else { self.clone() };
        let mut acc = Self { modulus: self.modulus, offset: 0, colors: Vec::new(), cursor: 0 };
        for _ in 0..n.unsigned_abs() {
            acc = acc.mul_unchecked(&base);
        }
        acc
    }

    /// Product of a word of `(element, exponent)` letters.
    pub fn word(m: u32, letters: &[(&LampElement, i64)]) -> Result<Self, LampError> {
        let mut acc = Self::identity(m)?;
        for (g, e) in letters {
            acc = acc.multiply(&g.pow(*e))?;
        }
        Ok(acc)
    }
}

/// `g·h`.
pub fn lamp_multiply(g: &LampElement, h: &LampElement) -> Result<LampElement, LampError> {
    g.multiply(h)
}

/// Named finite generating set; inverses are added by [`GenSet::symmetric`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSet {
    pub name: String,
    pub generators: Vec<LampElement>,
}

impl GenSet {
    pub fn new(name: &str, generators: Vec<LampElement>) -> Result<Self, LampError> {
        if generators.is_empty() {
            return Err(LampError::EmptyGenerators);
        }
        if generators.iter().any(LampElement::is_identity) {
            return Err(LampError::IdentityGenerator);
        }
        let m = generators[0].modulus;
        if let Some(g) = generators.iter().find(|g| g.modulus != m) {
            return Err(LampError::ModulusMismatch(m, g.modulus));
        }
        Ok(Self { name: name.to_string(), generators })
    }

    /// `{a, t}`.
    pub fn wreath(m: u32) -> Result<Self, LampError> {
        Self::new("wreath", vec![LampElement::a(m)?, LampElement::t(m)?])
    }

    /// `{t, ta}`.
    pub fn automaton(m: u32) -> Result<Self, LampError> {
        let t = LampElement::t(m)?;
        let ta = t.multiply(&LampElement::a(m)?)?;
        Self::new("automaton", vec![t, ta])
    }

    pub fn modulus(&self) -> u32 {
        self.generators[0].modulus()
    }

    /// Generators and their inverses, deduplicated, in a fixed order.
    pub fn symmetric(&self) -> Vec<LampElement> {
        let mut out: Vec<LampElement> = Vec::new();
        for g in &self.generators {
            for x in [g.clone(), g.inverse()] {
                if !out.contains(&x) {
                    out.push(x);
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WordLength {
    Exact(u32),
    Unknown,
}

impl WordLength {
    pub fn value(self) -> Option<u32> {
        match self {
            WordLength::Exact(n) => Some(n),
            WordLength::Unknown => None,
        }
    }
}

impl fmt::Display for WordLength {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WordLength::Exact(n) => write!(f, "{n}"),
            WordLength::Unknown => write!(f, "unknown"),
        }
    }
}

/// Admissible lower bound on word length, derived from the generators'
/// cursor shifts and the positions they recolor.
///
/// Recoloring a lamp at `x` with a generator that touches offset `o` and
/// shifts the cursor by `σ` puts the cursor at `x − o` and `x − o + σ`. Over
/// all such moves, the walk must therefore visit a position at most
/// `x + lo_rel` and one at least `x + hi_rel`.
#[derive(Debug, Clone)]
pub struct LowerBound {
    max_shift: i64,
    lo_rel: i64,
    hi_rel: i64,
    max_lamps: usize,
    movers_recolor: bool,
    max_lamps_static: usize,
}

impl LowerBound {
    pub fn new(gens: &[LampElement]) -> Self {
        let max_shift = gens.iter().map(|g| g.cursor.abs()).max().unwrap_or(0);
        let mut lo_rel = i64::MIN;
        let mut hi_rel = i64::MAX;
        for g in gens {
            for o in g.support() {
                let (a, b) = (-o, -o + g.cursor);
                lo_rel = lo_rel.max(a.min(b));
                hi_rel = hi_rel.min(a.max(b));
            }
        }
        let max_lamps = gens.iter().map(LampElement::lit_count).max().unwrap_or(0);
        let movers_recolor = gens.iter().any(|g| g.cursor != 0 && g.lit_count() > 0);
        let max_lamps_static = gens.iter().filter(|g| g.cursor == 0).map(LampElement::lit_count).max().unwrap_or(0);
        Self { max_shift, lo_rel, hi_rel, max_lamps, movers_recolor, max_lamps_static }
    }

    /// Lower bound on the word length of `g`.
    pub fn of(&self, g: &LampElement) -> u32 {
        let c = g.cursor;
        let mut lo = 0.min(c);
        let mut hi = 0.max(c);
        if let (Some(first), Some(last)) = (g.support().next(), g.support().last()) {
            lo = lo.min(first + self.lo_rel);
            hi = hi.max(last + self.hi_rel);
        }
        // walk from 0 covering [lo, hi] and ending at c
        let left_first = -lo + (hi - lo) + (hi - c);
        let right_first = hi + (hi - lo) + (c - lo);
        let walk = left_first.min(right_first);
        let steps = if self.max_shift == 0 { 0 } else { div_ceil(walk, self.max_shift) };
        let lit = g.lit_count();
        if lit == 0 {
            return steps as u32;
        }
        if self.movers_recolor {
            let needed = lit.div_ceil(self.max_lamps.max(1)) as i64;
            steps.max(needed) as u32
        } else {
            let needed = lit.div_ceil(self.max_lamps_static.max(1)) as i64;
            (steps + needed) as u32
        }
    }
}

fn div_ceil(a: i64, b: i64) -> i64 {
    (a + b - 1) / b
}

type Visited = FxHashMap<Box<[u8]>, u32>;

/// Expands one BFS layer. New elements are returned in a deterministic order:
/// frontier order, then generator order.
fn expand<F>(frontier: &[LampElement], gens: &[LampElement], visited: &mut Visited, depth: u32, keep: F) -> Vec<LampElement>
where
    F: Fn(&LampElement) -> bool + Sync + Send,
{
    let candidates: Vec<Vec<(Box<[u8]>, LampElement)>> = par::map(frontier, |_, u| {
        gens.iter()
            .map(|s| u.mul_unchecked(s))
            .filter(|v| keep(v))
            .map(|v| (v.key(), v))
            .collect()
    });
    let mut next = Vec::new();
    for (key, v) in candidates.into_iter().flatten() {
        if let std::collections::hash_map::Entry::Vacant(e) = visited.entry(key) {
            e.insert(depth);
            next.push(v);
        }
    }
    next
}

/// Elements within a radius, keyed by [`LampElement::key`], with their word lengths.
pub type Ball = FxHashMap<Box<[u8]>, (LampElement, u32)>;

/// Word lengths of every element within `radius` of the identity.
pub fn ball(set: &GenSet, radius: u32) -> Ball {
    let gens = set.symmetric();
    let id = LampElement { modulus: gens[0].modulus, offset: 0, colors: Vec::new(), cursor: 0 };
    let mut visited: Visited = FxHashMap::default();
    visited.insert(id.key(), 0);
    let mut out = FxHashMap::default();
    out.insert(id.key(), (id.clone(), 0));
    let mut frontier = vec![id];
    for depth in 1..=radius {
        frontier = expand(&frontier, &gens, &mut visited, depth, |_| true);
        for v in &frontier {
            out.insert(v.key(), (v.clone(), depth));
        }
        if frontier.is_empty() {
            break;
        }
    }
    out
}

/// Exact word length by bidirectional search with admissible pruning.
///
/// For each cap `C` from the lower bound up to `radius_cap`, the forward
/// search from the identity runs `⌈C/2⌉` layers and the backward search from
/// `g` runs `⌊C/2⌋` layers, both discarding nodes whose depth plus the lower
/// bound to the other end exceeds `C`. The first cap with a meeting point is
/// the distance.
pub fn word_length(set: &GenSet, g: &LampElement, radius_cap: u32) -> WordLength {
    if g.modulus != set.generators[0].modulus {
        return WordLength::Unknown;
    }
    if g.is_identity() {
        return WordLength::Exact(0);
    }
    let gens = set.symmetric();
    let bound = LowerBound::new(&gens);
    let start = bound.of(g);
    for cap in start..=radius_cap {
        if let Some(d) = search_with_cap(&gens, &bound, g, cap) {
            return WordLength::Exact(d);
        }
    }
    WordLength::Unknown
}

fn search_with_cap(gens: &[LampElement], bound: &LowerBound, g: &LampElement, cap: u32) -> Option<u32> {
    let id = LampElement { modulus: g.modulus, offset: 0, colors: Vec::new(), cursor: 0 };
    let mut fwd: Visited = FxHashMap::default();
    let mut bwd: Visited = FxHashMap::default();
    fwd.insert(id.key(), 0);
    bwd.insert(g.key(), 0);
    let mut f_front = vec![id];
    let mut b_front = vec![g.clone()];
    let f_depth = cap.div_ceil(2);
    let b_depth = cap / 2;
    for depth in 1..=f_depth {
        // distance from u to g is the length of u⁻¹g
        f_front = expand(&f_front, gens, &mut fwd, depth, |u| {
            depth + bound.of(&u.inverse().mul_unchecked(g)) <= cap
        });
    }
    for depth in 1..=b_depth {
        b_front = expand(&b_front, gens, &mut bwd, depth, |w| depth + bound.of(w) <= cap);
    }
    let (small, large) = if fwd.len() <= bwd.len() { (&fwd, &bwd) } else { (&bwd, &fwd) };
    small
        .iter()
        .filter_map(|(k, d)| large.get(k).map(|e| d + e))
        .filter(|&d| d <= cap)
        .min()
}

/// One row of the lamplighter table.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableRow {
    pub n: u32,
    /// `d_w(t^n a t^{-n})`
    pub wreath_conjugate: WordLength,
    /// `d_a(t^n a t^{-n})`
    pub automaton_conjugate: WordLength,
    /// `d_w((ta)^n)`
    pub wreath_power: WordLength,
    /// `d_a((ta)^n)`
    pub automaton_power: WordLength,
    /// Explicit words of the closed-form lengths multiply to the elements.
    pub witnesses_ok: bool,
}

impl TableRow {
    /// `[2n+1, 2n, 2n, n]` for `n ≥ 1`. At `n = 0` the conjugate is `a`
    /// itself, with `d_a(a) = 2` since `a = t⁻¹·(ta)`.
    pub fn closed_form(n: u32) -> [u32; 4] {
        if n == 0 {
            [1, 2, 0, 0]
        } else {
            [2 * n + 1, 2 * n, 2 * n, n]
        }
    }

    pub fn values(&self) -> [WordLength; 4] {
        [self.wreath_conjugate, self.automaton_conjugate, self.wreath_power, self.automaton_power]
    }

    pub fn matches_closed_form(&self) -> bool {
        self.witnesses_ok
            && self
                .values()
                .iter()
                .zip(Self::closed_form(self.n))
                .all(|(v, c)| *v == WordLength::Exact(c))
    }
}

/// `t^n a t^{-n}`.
pub fn conjugate_element(m: u32, n: u32) -> Result<LampElement, LampError> {
    LampElement::from_lamps(m, &[(n as i64, 1)], 0)
}

/// `(ta)^n`.
pub fn power_element(m: u32, n: u32) -> Result<LampElement, LampError> {
    let ta = LampElement::t(m)?.multiply(&LampElement::a(m)?)?;
    Ok(ta.pow(n as i64))
}

/// Checks the explicit words realizing the closed-form lengths:
/// `t^n a t^{-n}` (wreath, `2n+1`), `(ta)^n t^{-1} (ta)^{-(n-1)}` (automaton,
/// `2n`), `(t a)^n` spelled in `{a, t}` (wreath, `2n`) and in `{t, ta}`
/// (automaton, `n`).
pub fn check_witnesses(m: u32, n: u32) -> Result<bool, LampError> {
    let t = LampElement::t(m)?;
    let a = LampElement::a(m)?;
    let ta = t.multiply(&a)?;
    let conj = conjugate_element(m, n)?;
    let power = power_element(m, n)?;
    let n = n as i64;

    let w_conj = LampElement::word(m, &[(&t, n), (&a, 1), (&t, -n)])?;
    let a_conj = if n == 0 {
        LampElement::word(m, &[(&t, -1), (&ta, 1)])?
    } else {
        LampElement::word(m, &[(&ta, n), (&t, -1), (&ta, -(n - 1))])?
    };
    let mut w_power = LampElement::identity(m)?;
    for _ in 0..n {
        w_power = LampElement::word(m, &[(&w_power, 1), (&t, 1), (&a, 1)])?;
    }
    let a_power = LampElement::word(m, &[(&ta, n)])?;
    Ok(w_conj == conj && a_conj == conj && w_power == power && a_power == power)
}

/// How the table rows are computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TableMethod {
    /// Full balls of radius `2·n_max + 1` around the identity.
    FullBall,
    /// Bidirectional search per entry.
    Bidirectional,
}

/// Word lengths of `t^n a t^{-n}` and `(ta)^n` in both generating sets, for
/// `n = 0..=n_max`.
pub fn word_length_table(m: u32, n_max: u32, method: TableMethod) -> Result<Vec<TableRow>, LampError> {
    let wreath = GenSet::wreath(m)?;
    let automaton = GenSet::automaton(m)?;
    let (ball_w, ball_a) = match method {
        TableMethod::FullBall => {
            let r = 2 * n_max + 1;
            (Some(ball(&wreath, r)), Some(ball(&automaton, r)))
        }
        TableMethod::Bidirectional => (None, None),
    };
    let lookup = |set: &GenSet, b: &Option<Ball>, g: &LampElement, cap: u32| match b {
        Some(b) => b.get(&g.key()).map_or(WordLength::Unknown, |e| WordLength::Exact(e.1)),
        None => word_length(set, g, cap),
    };
    (0..=n_max)
        .map(|n| {
            let conj = conjugate_element(m, n)?;
            let power = power_element(m, n)?;
            let cap = 2 * n + 3;
            Ok(TableRow {
                n,
                wreath_conjugate: lookup(&wreath, &ball_w, &conj, cap),
                automaton_conjugate: lookup(&automaton, &ball_a, &conj, cap),
                wreath_power: lookup(&wreath, &ball_w, &power, cap),
                automaton_power: lookup(&automaton, &ball_a, &power, cap),
                witnesses_ok: check_witnesses(m, n)?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRow {
    pub n: u32,
    /// `d_w/d_a` along `t^n a t^{-n}`.
    pub conjugate_ratio: Ratio<i64>,
    /// `d_w/d_a` along `(ta)^n`.
    pub power_ratio: Ratio<i64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NonSimilarityCertificate {
    pub m: u32,
    pub n_max: u32,
    pub rows: Vec<CertificateRow>,
    /// `power_ratio − conjugate_ratio` at `n_max`.
    pub gap: Ratio<i64>,
    /// Every searched length equals its closed form.
    pub exact: bool,
    /// `exact` and the gap is at least one half.
    pub valid: bool,
    pub report: SimilarityReport,
}

impl NonSimilarityCertificate {
    pub fn verdict(&self) -> Verdict {
        self.report.verdict
    }
}

/// Exhibits the two families with diverging `d_w/d_a` ratios and runs the
/// rough-similarity comparison on them.
pub fn non_similarity_certificate(m: u32, n_max: u32) -> Result<NonSimilarityCertificate, LampError> {
    let n_max = n_max.max(1);
    let table = word_length_table(m, n_max, TableMethod::Bidirectional)?;
    let exact = table.iter().all(TableRow::matches_closed_form);
    let ratio = |w: WordLength, a: WordLength| -> Ratio<i64> {
        match (w.value(), a.value()) {
            (Some(w), Some(a)) if a > 0 => Ratio::new(w as i64, a as i64),
            _ => Ratio::from_integer(0),
        }
    };
    let rows: Vec<CertificateRow> = table
        .iter()
        .filter(|r| r.n > 0)
        .map(|r| CertificateRow {
            n: r.n,
            conjugate_ratio: ratio(r.wreath_conjugate, r.automaton_conjugate),
            power_ratio: ratio(r.wreath_power, r.automaton_power),
        })
        .collect();
    let last = rows.last().expect("n_max ≥ 1");
    let gap = last.power_ratio - last.conjugate_ratio;

    // word lengths already searched for the table, keyed by element
    let mut known: FxHashMap<Box<[u8]>, (WordLength, WordLength)> = FxHashMap::default();
    let mut samples = Vec::new();
    let id = LampElement::identity(m)?;
    for r in table.iter().filter(|r| r.n > 0) {
        let conj = conjugate_element(m, r.n)?;
        let power = power_element(m, r.n)?;
        known.insert(conj.key(), (r.wreath_conjugate, r.automaton_conjugate));
        known.insert(power.key(), (r.wreath_power, r.automaton_power));
        let separation = r.n as f64;
        samples.push(Sample { p: id.clone(), q: conj, separation });
        samples.push(Sample { p: id.clone(), q: power, separation });
    }
    let wreath = GenSet::wreath(m)?;
    let automaton = GenSet::automaton(m)?;
    let metric = |set: &GenSet, pick: fn(&(WordLength, WordLength)) -> WordLength, p: &LampElement, q: &LampElement| {
        let g = p.inverse().mul_unchecked(q);
        let len = known.get(&g.key()).map(pick).unwrap_or_else(|| word_length(set, &g, 4 * n_max + 4));
        len.value().map(f64::from).ok_or("word length beyond search radius")
    };
    let config = CompareConfig { min_count: 4, ..CompareConfig::default() };
    let report = similarity::compare(
        &samples,
        |p, q| metric(&wreath, |x| x.0, p, q),
        |p, q| metric(&automaton, |x| x.1, p, q),
        &config,
    )
    .unwrap_or_else(|_| similarity::report_from_values(&[], &config));

    let valid = exact && gap >= Ratio::new(1, 2);
    Ok(NonSimilarityCertificate { m, n_max, rows, gap, exact, valid, report })
}
