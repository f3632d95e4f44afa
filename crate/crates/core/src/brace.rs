//! Skew braces on the index set of N: construction from regular subgroups
//! of Hol(N), axiom checking, the lambda map, ideals, opposites,
//! isomorphism and automorphisms.

use crate::fpalg::{Frame, FrameFile, FpVector};
use crate::group::{CayleyTable, GroupError, GroupProfile};
use crate::holo::{AutNElem, HolElem, HoloError, Holomorph};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use thiserror::Error;

/// Largest order for which both Cayley tables are stored.
pub const TABLE_BUDGET: u32 = 4096;
/// Default cap on the number of subgroups the generic ideal search builds.
pub const SUBGROUP_BUDGET: usize = 4096;
pub const SAMPLE_SEED: u64 = 0x5B4ACE;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BraceError {
    #[error("map does not describe a regular subgroup: {0}")]
    NotRegular(String),
    #[error("not a skew brace table: {0}")]
    Malformed(String),
    #[error("operation needs table mode (n = {0} exceeds the table budget)")]
    NeedsTable(u32),
    #[error("subgroup enumeration exceeded budget {0}")]
    BudgetExceeded(usize),
    #[error(transparent)]
    Group(GroupError),
    #[error(transparent)]
    Holo(#[from] HoloError),
}

impl From<GroupError> for BraceError {
    fn from(e: GroupError) -> Self {
        match e {
            GroupError::BudgetExceeded(b) => BraceError::BudgetExceeded(b),
            other => BraceError::Group(other),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Which {
    B,
    Bopp,
    #[serde(rename = "custom")]
    Custom,
}

impl fmt::Display for Which {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Which::B => "B",
            Which::Bopp => "Bopp",
            Which::Custom => "custom",
        })
    }
}

impl FromStr for Which {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "B" => Ok(Which::B),
            "Bopp" => Ok(Which::Bopp),
            "custom" => Ok(Which::Custom),
            _ => Err(format!("expected B or Bopp, got {s:?}")),
        }
    }
}

/// What (B,·) is, as far as the ideal fast path is concerned.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Additive {
    /// The multiplication of N in ElementIndex order.
    N,
    /// Its transpose.
    NOpposite,
    Other,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Provenance {
    pub which: Which,
    pub additive: Additive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Effort {
    Exhaustive,
    Sampled(u64),
}

impl FromStr for Effort {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        if s == "exhaustive" {
            return Ok(Effort::Exhaustive);
        }
        s.strip_prefix("sampled:")
            .and_then(|c| c.parse().ok())
            .map(Effort::Sampled)
            .ok_or_else(|| format!("expected exhaustive or sampled:<count>, got {s:?}"))
    }
}

impl fmt::Display for Effort {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Effort::Exhaustive => f.write_str("exhaustive"),
            Effort::Sampled(c) => write!(f, "sampled:{c}"),
        }
    }
}

/// eta -> alpha_eta for a regular subgroup {(eta, alpha_eta)} of Hol(N),
/// indexed by the ElementIndex of eta.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RegularSubgroupMap {
    alphas: Vec<AutNElem>,
}

impl RegularSubgroupMap {
    pub fn new(alphas: Vec<AutNElem>) -> Self {
        RegularSubgroupMap { alphas }
    }

    /// From the element list of a subgroup; fails unless the first
    /// components hit every element of N exactly once.
    pub fn from_elements(hol: &Holomorph, elems: &[HolElem]) -> Result<Self, BraceError> {
        if !hol.is_regular(elems) {
            return Err(BraceError::NotRegular(format!("{} elements, first components not a bijection", elems.len())));
        }
        let mut alphas = vec![hol.aut_identity(); hol.n() as usize];
        for g in elems {
            alphas[hol.n_index(&g.eta) as usize] = g.alpha;
        }
        Ok(RegularSubgroupMap { alphas })
    }

    pub fn len(&self) -> usize {
        self.alphas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.alphas.is_empty()
    }

    pub fn alpha(&self, eta: u32) -> AutNElem {
        self.alphas[eta as usize]
    }

    pub fn alphas(&self) -> &[AutNElem] {
        &self.alphas
    }

    pub fn element(&self, hol: &Holomorph, eta: u32) -> HolElem {
        HolElem {
            eta: hol.n_elem(eta),
            alpha: self.alphas[eta as usize],
        }
    }

    pub fn elements(&self, hol: &Holomorph) -> Vec<HolElem> {
        (0..self.len() as u32).map(|i| self.element(hol, i)).collect()
    }

    /// Sorted elements, the canonical form used for hashing subgroups.
    pub fn sorted_elements(&self, hol: &Holomorph) -> Vec<HolElem> {
        let mut e = self.elements(hol);
        e.sort();
        e
    }

    /// Whether g_a g_b lies in the image for every pair.
    pub fn is_closed(&self, hol: &Holomorph) -> bool {
        let n = self.len() as u32;
        (0..n).all(|a| {
            let ga = self.element(hol, a);
            (0..n).all(|b| {
                let g = hol.hol_mul(&ga, &self.element(hol, b));
                self.alphas[hol.n_index(&g.eta) as usize] == g.alpha
            })
        })
    }

    /// Greedy generating set in ElementIndex order.
    pub fn generators(&self, hol: &Holomorph) -> Vec<HolElem> {
        let n = self.len();
        let mut gens = Vec::new();
        let mut span: HashSet<HolElem> = HashSet::from([hol.hol_identity()]);
        for g in self.elements(hol) {
            if span.len() == n {
                break;
            }
            if !span.contains(&g) {
                gens.push(g);
                span = hol
                    .subgroup_closure(&gens, n)
                    .expect("closure of a regular subgroup stays within n")
                    .into_iter()
                    .collect();
            }
        }
        gens
    }
}

/// g* = (eta^{-1}, conj(eta) alpha) for g = (eta, alpha).
pub fn star_element(hol: &Holomorph, g: &HolElem) -> HolElem {
    HolElem {
        eta: hol.n_inv(&g.eta),
        alpha: hol.aut_compose(&hol.conj_of(&g.eta), &g.alpha),
    }
}

/// The regular subgroup of the opposite brace: the element with first
/// component mu is g*_{mu^{-1}}.
pub fn opposite_regular(hol: &Holomorph, g: &RegularSubgroupMap) -> RegularSubgroupMap {
    let mut alphas = vec![hol.aut_identity(); g.len()];
    for eta in 0..g.len() as u32 {
        let s = star_element(hol, &g.element(hol, eta));
        alphas[hol.n_index(&s.eta) as usize] = s.alpha;
    }
    RegularSubgroupMap { alphas }
}

/// Checks (g_a g_b)* = g_a* g_b* for all pairs.
pub fn star_is_isomorphism(hol: &Holomorph, g: &RegularSubgroupMap) -> bool {
    let elems = g.elements(hol);
    elems.iter().all(|a| {
        let sa = star_element(hol, a);
        elems
            .iter()
            .all(|b| star_element(hol, &hol.hol_mul(a, b)) == hol.hol_mul(&sa, &star_element(hol, b)))
    })
}

/// Some alpha in Aut(N) with alpha G1 alpha^{-1} = G2, tried in
/// aut_enumerate order.
pub fn are_isomorphic(hol: &Holomorph, g1: &RegularSubgroupMap, g2: &RegularSubgroupMap) -> Option<AutNElem> {
    let gens = g1.generators(hol);
    let all = g1.elements(hol);
    let inside = |a: &AutNElem, g: &HolElem| {
        let c = hol.hol_conjugate_by_aut(a, g);
        g2.alpha(hol.n_index(&c.eta)) == c.alpha
    };
    hol.aut_enumerate()
        .into_iter()
        .find(|a| gens.iter().all(|g| inside(a, g)) && all.iter().all(|g| inside(a, g)))
}

#[derive(Debug, Clone)]
enum Repr {
    Table {
        dot: Vec<u32>,
        circ: Vec<u32>,
        dot_inv: Vec<u32>,
        circ_inv: Vec<u32>,
    },
    Structural {
        hol: Arc<Holomorph>,
        map: RegularSubgroupMap,
        dot_opposite: bool,
    },
}

/// A skew brace on `0..n`. Index 0 is the identity whenever the brace
/// comes from Hol(N).
#[derive(Debug, Clone)]
pub struct SkewBrace {
    n: u32,
    p: u32,
    q: u32,
    identity: u32,
    provenance: Provenance,
    repr: Repr,
}

const NO_INVERSE: u32 = u32::MAX;

fn inverses(n: u32, t: &[u32], e: u32) -> Vec<u32> {
    (0..n)
        .map(|a| {
            (0..n)
                .find(|&b| t[(a * n + b) as usize] == e)
                .unwrap_or(NO_INVERSE)
        })
        .collect()
}

/// The multiplication table of N in ElementIndex order.
pub fn n_table(hol: &Holomorph) -> Vec<u32> {
    let elems: Vec<_> = hol.n_elements().collect();
    let mut t = Vec::with_capacity(elems.len() * elems.len());
    for a in &elems {
        for b in &elems {
            t.push(hol.n_index(&hol.n_mul(a, b)));
        }
    }
    t
}

/// Builds the brace of a regular subgroup: dot is N, circ is read off
/// g_a g_b. Table mode iff n <= [`TABLE_BUDGET`].
pub fn brace_from_regular(hol: &Arc<Holomorph>, g: &RegularSubgroupMap, which: Which) -> Result<SkewBrace, BraceError> {
    let n = hol.n();
    if g.len() != n as usize {
        return Err(BraceError::NotRegular(format!("map has {} entries, |N| = {n}", g.len())));
    }
    let provenance = Provenance {
        which,
        additive: Additive::N,
    };
    let (p, q) = (hol.p(), hol.q());
    if n > TABLE_BUDGET {
        let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
        for _ in 0..10_000 {
            let (a, b) = (rng.gen_range(0..n), rng.gen_range(0..n));
            let prod = hol.hol_mul(&g.element(hol, a), &g.element(hol, b));
            if g.alpha(hol.n_index(&prod.eta)) != prod.alpha {
                return Err(BraceError::NotRegular(format!("g_{a} g_{b} is not in the image")));
            }
        }
        return Ok(SkewBrace {
            n,
            p,
            q,
            identity: 0,
            provenance,
            repr: Repr::Structural {
                hol: hol.clone(),
                map: g.clone(),
                dot_opposite: false,
            },
        });
    }
    let elems = g.elements(hol);
    let mut circ = Vec::with_capacity((n * n) as usize);
    for a in &elems {
        for b in &elems {
            let prod = hol.hol_mul(a, b);
            let idx = hol.n_index(&prod.eta);
            if g.alpha(idx) != prod.alpha {
                return Err(BraceError::NotRegular(format!(
                    "g_{} g_{} is not in the image",
                    hol.n_index(&a.eta),
                    hol.n_index(&b.eta)
                )));
            }
            circ.push(idx);
        }
    }
    SkewBrace::from_tables(p, q, n_table(hol), circ, provenance)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomCheck {
    pub name: &'static str,
    pub passed: bool,
    pub checked: u64,
    pub witness: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct AxiomReport {
    pub effort: String,
    pub checks: Vec<AxiomCheck>,
}

impl AxiomReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn check(&self, name: &str) -> Option<&AxiomCheck> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ideal {
    pub elements: Vec<u32>,
    pub left_ideal: bool,
    pub dot_normal: bool,
    pub circ_normal: bool,
}

impl Ideal {
    pub fn is_ideal(&self) -> bool {
        self.left_ideal && self.dot_normal && self.circ_normal
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum IdealPath {
    /// All subgroups of (B,·), then filter.
    Generic { budget: usize },
    /// Only {1}, P and N; valid when (B,·) is N or its opposite.
    Fast,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct LambdaReport {
    pub dot_automorphisms: bool,
    pub circ_homomorphism: bool,
    pub witness: Option<Vec<u32>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct StructureReport {
    pub dot: GroupProfile,
    pub circ: GroupProfile,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BraceAutomorphisms {
    pub members: Vec<AutNElem>,
    pub order: usize,
    pub cyclic_generator: Option<AutNElem>,
}

#[derive(Serialize, Deserialize)]
struct TableFile {
    n: u32,
    p: u32,
    q: u32,
    which: Which,
    dot: Vec<Vec<u32>>,
    circ: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct StructuralFile {
    n: u32,
    p: u32,
    q: u32,
    which: Which,
    frame: FrameFile,
    g_map: Vec<(u32, u32, Vec<u32>)>,
}

/// A brace file in either of the two on-disk layouts.
pub enum BraceFile {
    Table(SkewBrace),
    Structural {
        which: Which,
        frame: Frame,
        map: RegularSubgroupMap,
    },
}

impl SkewBrace {
    /// Table-mode brace from raw tables. Only the identity is required up
    /// front; everything else is left to [`SkewBrace::verify_axioms`].
    pub fn from_tables(p: u32, q: u32, dot: Vec<u32>, circ: Vec<u32>, provenance: Provenance) -> Result<SkewBrace, BraceError> {
        let n2 = dot.len();
        let n = (n2 as f64).sqrt().round() as u32;
        if (n * n) as usize != n2 || circ.len() != n2 || n == 0 {
            return Err(BraceError::Malformed("tables are not square of equal size".into()));
        }
        if dot.iter().chain(&circ).any(|&x| x >= n) {
            return Err(BraceError::Malformed("entry out of range".into()));
        }
        let is_identity = |t: &[u32], e: u32| (0..n).all(|a| t[(e * n + a) as usize] == a && t[(a * n + e) as usize] == a);
        let identity = (0..n)
            .find(|&e| is_identity(&dot, e))
            .ok_or_else(|| BraceError::Malformed("dot has no identity".into()))?;
        let dot_inv = inverses(n, &dot, identity);
        let circ_inv = inverses(n, &circ, identity);
        Ok(SkewBrace {
            n,
            p,
            q,
            identity,
            provenance,
            repr: Repr::Table {
                dot,
                circ,
                dot_inv,
                circ_inv,
            },
        })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn is_table_mode(&self) -> bool {
        matches!(self.repr, Repr::Table { .. })
    }

    #[inline]
    pub fn dot(&self, a: u32, b: u32) -> u32 {
        match &self.repr {
            Repr::Table { dot, .. } => dot[(a * self.n + b) as usize],
            Repr::Structural { hol, dot_opposite, .. } => {
                let (x, y) = if *dot_opposite { (b, a) } else { (a, b) };
                hol.n_index(&hol.n_mul(&hol.n_elem(x), &hol.n_elem(y)))
            }
        }
    }

    #[inline]
    pub fn circ(&self, a: u32, b: u32) -> u32 {
        match &self.repr {
            Repr::Table { circ, .. } => circ[(a * self.n + b) as usize],
            Repr::Structural { hol, map, .. } => {
                let eta = hol.n_mul(&hol.n_elem(a), &hol.aut_apply(&map.alpha(a), &hol.n_elem(b)));
                hol.n_index(&eta)
            }
        }
    }

    #[inline]
    pub fn dot_inv(&self, a: u32) -> u32 {
        match &self.repr {
            Repr::Table { dot_inv, .. } => dot_inv[a as usize],
            Repr::Structural { hol, .. } => hol.n_index(&hol.n_inv(&hol.n_elem(a))),
        }
    }

    #[inline]
    pub fn circ_inv(&self, a: u32) -> u32 {
        match &self.repr {
            Repr::Table { circ_inv, .. } => circ_inv[a as usize],
            Repr::Structural { hol, map, .. } => hol.n_index(&hol.hol_inv(&map.element(hol, a)).eta),
        }
    }

    /// The full circ table (computed on demand in structural mode).
    pub fn circ_table(&self) -> Vec<u32> {
        match &self.repr {
            Repr::Table { circ, .. } => circ.clone(),
            Repr::Structural { .. } => self.full_table(|a, b| self.circ(a, b)),
        }
    }

    pub fn dot_table(&self) -> Vec<u32> {
        match &self.repr {
            Repr::Table { dot, .. } => dot.clone(),
            Repr::Structural { .. } => self.full_table(|a, b| self.dot(a, b)),
        }
    }

    fn full_table(&self, f: impl Fn(u32, u32) -> u32) -> Vec<u32> {
        let mut t = Vec::with_capacity((self.n * self.n) as usize);
        for a in 0..self.n {
            for b in 0..self.n {
                t.push(f(a, b));
            }
        }
        t
    }

    /// Converts a structural brace to table mode.
    pub fn to_table_mode(&self) -> Result<SkewBrace, BraceError> {
        if self.n > TABLE_BUDGET {
            return Err(BraceError::NeedsTable(self.n));
        }
        SkewBrace::from_tables(self.p, self.q, self.dot_table(), self.circ_table(), self.provenance)
    }

    pub fn dot_group(&self) -> Result<CayleyTable, BraceError> {
        self.require_table()?;
        Ok(CayleyTable::new(self.n as usize, self.dot_table())?)
    }

    pub fn circ_group(&self) -> Result<CayleyTable, BraceError> {
        self.require_table()?;
        Ok(CayleyTable::new(self.n as usize, self.circ_table())?)
    }

    fn require_table(&self) -> Result<(), BraceError> {
        if self.n > TABLE_BUDGET {
            Err(BraceError::NeedsTable(self.n))
        } else {
            Ok(())
        }
    }

    /// Violations at (a, b, c) of dot associativity, circ associativity
    /// and the brace relation a∘(b·c) = (a∘b)·a⁻¹·(a∘c).
    #[inline]
    fn triple(&self, a: u32, b: u32, c: u32, ab: u32, acb: u32, ainv: u32) -> [bool; 3] {
        let bc = self.dot(b, c);
        let dot_ok = self.dot(ab, c) == self.dot(a, bc);
        let circ_ok = self.circ(acb, c) == self.circ(a, self.circ(b, c));
        let brace_ok = self.circ(a, bc) == self.dot(self.dot(acb, ainv), self.circ(a, c));
        [!dot_ok, !circ_ok, !brace_ok]
    }

    fn scan_range(&self, a_range: std::ops::Range<u32>) -> [Option<[u32; 3]>; 3] {
        let mut first: [Option<[u32; 3]>; 3] = [None; 3];
        for a in a_range {
            let ainv = self.dot_inv(a);
            for b in 0..self.n {
                let ab = self.dot(a, b);
                let acb = self.circ(a, b);
                for c in 0..self.n {
                    let bad = self.triple(a, b, c, ab, acb, ainv);
                    if bad[0] | bad[1] | bad[2] {
                        for k in 0..3 {
                            if bad[k] && first[k].is_none() {
                                first[k] = Some([a, b, c]);
                            }
                        }
                    }
                }
            }
        }
        first
    }

    /// Group axioms for both operations and the brace relation.
    /// Exhaustive runs over all n³ triples (split over `threads` by the
    /// first coordinate); sampled draws triples from a fixed seed.
    pub fn verify_axioms(&self, effort: Effort, threads: usize) -> AxiomReport {
        let n = self.n;
        let e = self.identity;
        let mut checks = Vec::new();
        let unary = |name, bad: Option<u32>| AxiomCheck {
            name,
            passed: bad.is_none(),
            checked: n as u64,
            witness: bad.map(|a| vec![a]),
        };
        checks.push(unary("dot_identity", (0..n).find(|&a| self.dot(e, a) != a || self.dot(a, e) != a)));
        checks.push(unary("circ_identity", (0..n).find(|&a| self.circ(e, a) != a || self.circ(a, e) != a)));
        checks.push(unary(
            "dot_inverse",
            (0..n).find(|&a| {
                let i = self.dot_inv(a);
                i == NO_INVERSE || self.dot(i, a) != e
            }),
        ));
        checks.push(unary(
            "circ_inverse",
            (0..n).find(|&a| {
                let i = self.circ_inv(a);
                i == NO_INVERSE || self.circ(i, a) != e
            }),
        ));
        if !checks[2].passed {
            return AxiomReport {
                effort: effort.to_string(),
                checks,
            };
        }
        let (first, count) = match effort {
            Effort::Exhaustive => {
                let threads = threads.max(1).min(n as usize) as u32;
                let chunk = n.div_ceil(threads);
                let parts: Vec<[Option<[u32; 3]>; 3]> = std::thread::scope(|s| {
                    let handles: Vec<_> = (0..threads)
                        .map(|t| {
                            let lo = (t * chunk).min(n);
                            let hi = ((t + 1) * chunk).min(n);
                            s.spawn(move || self.scan_range(lo..hi))
                        })
                        .collect();
                    handles.into_iter().map(|h| h.join().expect("worker panicked")).collect()
                });
                let mut first: [Option<[u32; 3]>; 3] = [None; 3];
                for part in parts {
                    for k in 0..3 {
                        if first[k].is_none() {
                            first[k] = part[k];
                        }
                    }
                }
                (first, (n as u64).pow(3))
            }
            Effort::Sampled(count) => {
                let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
                let mut first: [Option<[u32; 3]>; 3] = [None; 3];
                for _ in 0..count {
                    let (a, b, c) = (rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n));
                    let bad = self.triple(a, b, c, self.dot(a, b), self.circ(a, b), self.dot_inv(a));
                    for k in 0..3 {
                        if bad[k] && first[k].is_none() {
                            first[k] = Some([a, b, c]);
                        }
                    }
                }
                (first, count)
            }
        };
        for (k, name) in ["dot_associative", "circ_associative", "brace_relation"].into_iter().enumerate() {
            checks.push(AxiomCheck {
                name,
                passed: first[k].is_none(),
                checked: count,
                witness: first[k].map(|t| t.to_vec()),
            });
        }
        checks.push(AxiomCheck {
            name: "shared_identity",
            passed: true,
            checked: 1,
            witness: None,
        });
        AxiomReport {
            effort: effort.to_string(),
            checks,
        }
    }

    /// λ_a(b) = a⁻¹·(a∘b) as a permutation.
    pub fn lambda_map(&self, a: u32) -> Vec<u32> {
        let ainv = self.dot_inv(a);
        (0..self.n).map(|b| self.dot(ainv, self.circ(a, b))).collect()
    }

    /// Each λ_a is an automorphism of (B,·) and λ_{a∘b} = λ_a λ_b.
    pub fn verify_lambda(&self, effort: Effort) -> LambdaReport {
        let n = self.n;
        let as_: Vec<u32> = match effort {
            Effort::Exhaustive => (0..n).collect(),
            Effort::Sampled(c) => {
                let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
                (0..c.min(n as u64)).map(|_| rng.gen_range(0..n)).collect()
            }
        };
        let lambdas: Vec<Option<Vec<u32>>> = (0..n)
            .map(|a| if n <= TABLE_BUDGET || as_.contains(&a) { Some(self.lambda_map(a)) } else { None })
            .collect();
        let lam = |a: u32, b: u32| match &lambdas[a as usize] {
            Some(l) => l[b as usize],
            None => self.dot(self.dot_inv(a), self.circ(a, b)),
        };
        let mut report = LambdaReport {
            dot_automorphisms: true,
            circ_homomorphism: true,
            witness: None,
        };
        for &a in &as_ {
            let l = self.lambda_map(a);
            let mut seen = vec![false; n as usize];
            let bijective = l.iter().all(|&x| !std::mem::replace(&mut seen[x as usize], true));
            let hom = bijective
                && (0..n).all(|b| (0..n).all(|c| l[self.dot(b, c) as usize] == self.dot(l[b as usize], l[c as usize])));
            if !hom {
                report.dot_automorphisms = false;
                report.witness.get_or_insert(vec![a]);
            }
            for b in 0..n {
                let ab = self.circ(a, b);
                if let Some(c) = (0..n).find(|&c| lam(ab, c) != l[lam(b, c) as usize]) {
                    report.circ_homomorphism = false;
                    report.witness.get_or_insert(vec![a, b, c]);
                    break;
                }
            }
        }
        report
    }

    fn flags(&self, elems: Vec<u32>) -> Ideal {
        let n = self.n;
        let mut member = vec![false; n as usize];
        for &x in &elems {
            member[x as usize] = true;
        }
        let left_ideal = (0..n).all(|a| {
            let ainv = self.dot_inv(a);
            elems.iter().all(|&x| member[self.dot(ainv, self.circ(a, x)) as usize])
        });
        let dot_normal = (0..n).all(|a| {
            let ainv = self.dot_inv(a);
            elems.iter().all(|&x| member[self.dot(self.dot(a, x), ainv) as usize])
        });
        let circ_normal = (0..n).all(|a| {
            let ainv = self.circ_inv(a);
            elems.iter().all(|&x| member[self.circ(self.circ(a, x), ainv) as usize])
        });
        Ideal {
            elements: elems,
            left_ideal,
            dot_normal,
            circ_normal,
        }
    }

    /// The normal subgroups of (B,·) with their ideal flags, ordered by
    /// size then lexicographically.
    pub fn enumerate_ideals(&self, path: IdealPath) -> Result<Vec<Ideal>, BraceError> {
        let candidates: Vec<Vec<u32>> = match path {
            IdealPath::Fast => {
                if self.provenance.additive == Additive::Other {
                    return Err(BraceError::Malformed("fast path needs (B,·) = N".into()));
                }
                let pp = self.n / self.q;
                vec![vec![self.identity], (0..pp).collect(), (0..self.n).collect()]
            }
            IdealPath::Generic { budget } => self.dot_group()?.normal_subgroups(budget)?,
        };
        Ok(candidates.into_iter().map(|c| self.flags(c)).filter(|i| i.dot_normal).collect())
    }

    /// Fast path when provenance allows, generic otherwise.
    pub fn default_ideal_path(&self) -> IdealPath {
        if self.provenance.additive == Additive::Other {
            IdealPath::Generic { budget: SUBGROUP_BUDGET }
        } else {
            IdealPath::Fast
        }
    }

    pub fn ideals(&self, path: IdealPath) -> Result<Vec<Ideal>, BraceError> {
        Ok(self.enumerate_ideals(path)?.into_iter().filter(Ideal::is_ideal).collect())
    }

    pub fn is_simple(&self, path: IdealPath) -> Result<bool, BraceError> {
        Ok(self.n > 1 && self.ideals(path)?.len() == 2)
    }

    /// Same circ, dot replaced by a·b ↦ b·a.
    pub fn opposite_brace(&self) -> SkewBrace {
        let additive = match self.provenance.additive {
            Additive::N => Additive::NOpposite,
            Additive::NOpposite => Additive::N,
            Additive::Other => Additive::Other,
        };
        let provenance = Provenance {
            which: Which::Custom,
            additive,
        };
        let repr = match &self.repr {
            Repr::Table {
                dot,
                circ,
                dot_inv,
                circ_inv,
            } => {
                let n = self.n as usize;
                let mut t = vec![0; n * n];
                for a in 0..n {
                    for b in 0..n {
                        t[a * n + b] = dot[b * n + a];
                    }
                }
                Repr::Table {
                    dot: t,
                    circ: circ.clone(),
                    dot_inv: dot_inv.clone(),
                    circ_inv: circ_inv.clone(),
                }
            }
            Repr::Structural { hol, map, dot_opposite } => Repr::Structural {
                hol: hol.clone(),
                map: map.clone(),
                dot_opposite: !dot_opposite,
            },
        };
        SkewBrace {
            provenance,
            repr,
            ..*self
        }
    }

    /// Whether `f` is a bijection preserving both operations from `self`
    /// to `other`.
    pub fn is_isomorphism_to(&self, other: &SkewBrace, f: &[u32]) -> bool {
        let n = self.n;
        if other.n != n || f.len() != n as usize {
            return false;
        }
        let mut seen = vec![false; n as usize];
        if f.iter().any(|&x| x >= n || std::mem::replace(&mut seen[x as usize], true)) {
            return false;
        }
        (0..n).all(|a| {
            (0..n).all(|b| {
                f[self.dot(a, b) as usize] == other.dot(f[a as usize], f[b as usize])
                    && f[self.circ(a, b) as usize] == other.circ(f[a as usize], f[b as usize])
            })
        })
    }

    pub fn identify_structure(&self) -> Result<StructureReport, BraceError> {
        let (p, q) = (self.p as u64, self.q as u64);
        Ok(StructureReport {
            dot: self.dot_group()?.profile(p, q),
            circ: self.circ_group()?.profile(p, q),
        })
    }

    /// Dot-automorphisms (found by raw search on the Cayley table) that
    /// also preserve circ.
    pub fn raw_automorphisms(&self) -> Result<Vec<Vec<u32>>, BraceError> {
        let dot = self.dot_group()?;
        Ok(dot
            .automorphisms()
            .into_iter()
            .filter(|f| (0..self.n).all(|a| (0..self.n).all(|b| f[self.circ(a, b) as usize] == self.circ(f[a as usize], f[b as usize]))))
            .collect())
    }

    pub fn to_json(&self) -> serde_json::Value {
        match &self.repr {
            Repr::Structural { hol, map, dot_opposite: false } => serde_json::to_value(StructuralFile {
                n: self.n,
                p: self.p,
                q: self.q,
                which: self.provenance.which,
                frame: hol.frame().to_file(),
                g_map: map
                    .alphas()
                    .iter()
                    .map(|a| (a.i, a.j, a.w.entries().iter().map(|&x| x as u32).collect()))
                    .collect(),
            }),
            _ => {
                let rows = |t: Vec<u32>| t.chunks(self.n as usize).map(|r| r.to_vec()).collect();
                serde_json::to_value(TableFile {
                    n: self.n,
                    p: self.p,
                    q: self.q,
                    which: self.provenance.which,
                    dot: rows(self.dot_table()),
                    circ: rows(self.circ_table()),
                })
            }
        }
        .expect("brace files serialise")
    }

    /// Parses either file layout. The provenance of a table file records
    /// `which` and leaves the additive group unknown.
    pub fn from_json(v: &serde_json::Value) -> Result<BraceFile, BraceError> {
        if v.get("g_map").is_some() {
            let f: StructuralFile = serde_json::from_value(v.clone()).map_err(|e| BraceError::Malformed(e.to_string()))?;
            let frame = Frame::from_file(&f.frame).map_err(|e| BraceError::Malformed(e.to_string()))?;
            let p = f.p;
            let alphas = f
                .g_map
                .iter()
                .map(|(i, j, w)| {
                    if w.len() != p as usize || *j >= p {
                        return Err(BraceError::Malformed("bad g_map entry".into()));
                    }
                    let w: Vec<i64> = w.iter().map(|&x| x as i64).collect();
                    Ok(AutNElem {
                        i: *i,
                        j: *j,
                        w: FpVector::from_entries(p, &w),
                    })
                })
                .collect::<Result<Vec<_>, _>>()?;
            return Ok(BraceFile::Structural {
                which: f.which,
                frame,
                map: RegularSubgroupMap::new(alphas),
            });
        }
        let f: TableFile = serde_json::from_value(v.clone()).map_err(|e| BraceError::Malformed(e.to_string()))?;
        if f.dot.len() != f.n as usize || f.circ.len() != f.n as usize || f.dot.iter().chain(&f.circ).any(|r| r.len() != f.n as usize) {
            return Err(BraceError::Malformed("table rows do not match n".into()));
        }
        let provenance = Provenance {
            which: f.which,
            additive: Additive::Other,
        };
        Ok(BraceFile::Table(SkewBrace::from_tables(
            f.p,
            f.q,
            f.dot.concat(),
            f.circ.concat(),
            provenance,
        )?))
    }

    /// Marks (B,·) as N (or its opposite) after the caller has compared
    /// the table against N's.
    pub fn with_additive(mut self, additive: Additive) -> SkewBrace {
        self.provenance.additive = additive;
        self
    }
}

fn aut_perm(hol: &Holomorph, a: &AutNElem) -> Vec<u32> {
    hol.n_elements().map(|x| hol.n_index(&hol.aut_apply(a, &x))).collect()
}

fn aut_order(hol: &Holomorph, a: &AutNElem) -> usize {
    let id = hol.aut_identity();
    let mut x = *a;
    let mut k = 1;
    while x != id {
        x = hol.aut_compose(&x, a);
        k += 1;
    }
    k
}

/// The α in Aut(N) that also preserve circ, screened on circ generators
/// and confirmed on all pairs.
pub fn brace_automorphisms(hol: &Holomorph, brace: &SkewBrace) -> BraceAutomorphisms {
    let n = brace.n();
    let gens = brace
        .circ_group()
        .map(|g| g.generating_set())
        .unwrap_or_else(|_| (0..n).collect());
    let members: Vec<AutNElem> = hol
        .aut_enumerate()
        .into_iter()
        .filter(|a| {
            let f = aut_perm(hol, a);
            let preserves = |x: u32, y: u32| f[brace.circ(x, y) as usize] == brace.circ(f[x as usize], f[y as usize]);
            gens.iter().all(|&g| (0..n).all(|b| preserves(g, b))) && (0..n).all(|a| (0..n).all(|b| preserves(a, b)))
        })
        .collect();
    let order = members.len();
    let preferred = AutNElem {
        i: 0,
        j: 1 % hol.p(),
        w: FpVector::zero(hol.p()),
    };
    let is_gen = |a: &AutNElem| aut_order(hol, a) == order;
    let cyclic_generator = if members.contains(&preferred) && is_gen(&preferred) {
        Some(preferred)
    } else {
        members.iter().copied().find(is_gen)
    };
    BraceAutomorphisms {
        members,
        order,
        cyclic_generator,
    }
}

/// The permutations of N induced by a list of automorphisms, sorted.
pub fn automorphism_permutations(hol: &Holomorph, auts: &[AutNElem]) -> Vec<Vec<u32>> {
    let mut out: Vec<Vec<u32>> = auts.iter().map(|a| aut_perm(hol, a)).collect();
    out.sort();
    out
}
