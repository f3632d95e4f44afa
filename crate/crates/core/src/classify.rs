//! Classification of regular subgroups of Hol(N): structure of groups of
//! order p^p q, free subgroups of order q up to Aut(N), regular overgroups
//! of those, and a census of all skew braces with additive group N.

use crate::brace::{are_isomorphic, brace_from_regular, opposite_regular, star_element, BraceError, IdealPath, RegularSubgroupMap, Which};
use crate::construct::{build_g, build_g_star, gen_x, ConstructError};
use crate::fpalg::FpVector;
use crate::group::CayleyTable;
use crate::holo::{AutNElem, HolElem, Holomorph, NElem};
use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::sync::Arc;
use thiserror::Error;

/// Default search-node cap; `SBFORGE_BUDGET` overrides it.
pub const DEFAULT_BUDGET: u64 = 50_000_000;
/// Largest n for which the census searches all of Hol(N).
pub const FULL_CENSUS_MAX: u32 = 64;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("not a group: {0}")]
    NotAGroup(String),
    #[error("subgroup has no canonical order-q generator")]
    NoCanonicalForm,
    #[error("subgroup reduces to several canonical types: {0:?}")]
    AmbiguousType(Vec<&'static str>),
    #[error("canonical generator check failed: {0}")]
    Canonical(String),
    #[error("search exceeded budget of {0} nodes")]
    BudgetExceeded(u64),
    #[error("census at n = {n} needs n_cap >= {n} (cap is {cap})")]
    NotEnabled { n: u32, cap: u32 },
    #[error(transparent)]
    Brace(#[from] BraceError),
    #[error(transparent)]
    Construct(#[from] ConstructError),
}

pub fn budget_from_env() -> u64 {
    std::env::var("SBFORGE_BUDGET")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// The trichotomy for groups of order p^p q.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum GroupTag {
    /// Both Sylow subgroups normal.
    DirectProduct,
    /// Sylow-p normal, Sylow-q not.
    TypeIi,
    /// Sylow-q normal, Sylow-p not.
    TypeIii,
    Other,
}

impl fmt::Display for GroupTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            GroupTag::DirectProduct => "direct_product",
            GroupTag::TypeIi => "type_ii",
            GroupTag::TypeIii => "type_iii",
            GroupTag::Other => "other",
        })
    }
}

pub fn tag_of(table: &CayleyTable, p: u64, q: u64) -> GroupTag {
    match (table.sylow_is_normal(p), table.sylow_is_normal(q)) {
        (true, true) => GroupTag::DirectProduct,
        (true, false) => GroupTag::TypeIi,
        (false, true) => GroupTag::TypeIii,
        (false, false) => GroupTag::Other,
    }
}

/// Validates `mul` as a group table (including associativity) and tags it.
pub fn classify_group_structure(mul: &[u32], n: usize, p: u64, q: u64) -> Result<GroupTag, ClassifyError> {
    let table = CayleyTable::new(n, mul.to_vec()).map_err(|e| ClassifyError::NotAGroup(e.to_string()))?;
    if let Some(t) = table.associativity_violation() {
        return Err(ClassifyError::NotAGroup(format!("not associative at {t:?}")));
    }
    Ok(tag_of(&table, p, q))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum OrderQType {
    TypeI,
    TypeII,
    TypeIII { k: u32, v: FpVector },
}

impl OrderQType {
    pub fn tag(&self) -> &'static str {
        match self {
            OrderQType::TypeI => "TypeI",
            OrderQType::TypeII => "TypeII",
            OrderQType::TypeIII { .. } => "TypeIII",
        }
    }
}

fn conj_m(hol: &Holomorph, power: u32) -> AutNElem {
    hol.conj_of(&NElem {
        k: power % hol.q(),
        v: FpVector::zero(hol.p()),
    })
}

/// [(M^-1, 0), conj(M, 0)].
pub fn type_ii_generator(hol: &Holomorph) -> HolElem {
    HolElem {
        eta: NElem {
            k: hol.q() - 1,
            v: FpVector::zero(hol.p()),
        },
        alpha: conj_m(hol, 1),
    }
}

/// [(M^k, v), conj(M, 0)].
pub fn type_iii_generator(hol: &Holomorph, k: u32, v: FpVector) -> HolElem {
    HolElem {
        eta: NElem { k, v },
        alpha: conj_m(hol, 1),
    }
}

fn shape_of(hol: &Holomorph, g: &HolElem) -> Option<OrderQType> {
    if *g == gen_x(hol) {
        Some(OrderQType::TypeI)
    } else if *g == type_ii_generator(hol) {
        Some(OrderQType::TypeII)
    } else if g.alpha == conj_m(hol, 1) && g.eta.k >= 1 && g.eta.k + 2 <= hol.q() {
        Some(OrderQType::TypeIII { k: g.eta.k, v: g.eta.v })
    } else {
        None
    }
}

fn cyclic(hol: &Holomorph, g: &HolElem) -> Vec<HolElem> {
    hol.subgroup_closure(&[*g], hol.n() as usize + 1).expect("cyclic subgroups of order <= n")
}

/// The canonical free order-q generators: TypeI, TypeII, and TypeIII(k, v)
/// for 1 <= k <= q-2 and every v. Each is checked to have order q and to
/// act freely, and TypeII is checked to be the star of TypeI.
pub fn order_q_canonical_types(hol: &Holomorph) -> Result<Vec<(OrderQType, HolElem)>, ClassifyError> {
    let mut out = vec![(OrderQType::TypeI, gen_x(hol)), (OrderQType::TypeII, type_ii_generator(hol))];
    for k in 1..=hol.q() - 2 {
        for v in FpVector::all(hol.p()) {
            out.push((OrderQType::TypeIII { k, v }, type_iii_generator(hol, k, v)));
        }
    }
    for (t, g) in &out {
        if hol.hol_element_order(g) != hol.q() as u64 {
            return Err(ClassifyError::Canonical(format!("{t:?} does not have order q")));
        }
        if !hol.acts_freely(&cyclic(hol, g)) {
            return Err(ClassifyError::Canonical(format!("{t:?} does not act freely")));
        }
    }
    if star_element(hol, &gen_x(hol)) != type_ii_generator(hol) {
        return Err(ClassifyError::Canonical("star of TypeI is not TypeII".into()));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    pub kind: OrderQType,
    pub witness: AutNElem,
    pub generator: HolElem,
}

/// Finds α in Aut(N) and a generator of `sub` whose α-conjugate has one of
/// the canonical shapes. Every reachable shape must carry the same tag.
pub fn reduce_to_canonical(hol: &Holomorph, sub: &[HolElem]) -> Result<Reduction, ClassifyError> {
    let id = hol.hol_identity();
    let mut first = None;
    let mut tags = BTreeSet::new();
    for a in hol.aut_enumerate() {
        for g in sub.iter().filter(|g| **g != id) {
            let c = hol.hol_conjugate_by_aut(&a, g);
            if let Some(kind) = shape_of(hol, &c) {
                tags.insert(kind.tag());
                first.get_or_insert(Reduction {
                    kind,
                    witness: a,
                    generator: *g,
                });
            }
        }
    }
    match tags.len() {
        0 => Err(ClassifyError::NoCanonicalForm),
        1 => Ok(first.expect("a tag implies a witness")),
        _ => Err(ClassifyError::AmbiguousType(tags.into_iter().collect())),
    }
}

/// All subgroups of order q of Hol(N) that act freely, as sorted lists.
pub fn free_order_q_subgroups(hol: &Holomorph) -> Vec<Vec<HolElem>> {
    let q = hol.q() as u64;
    let mut seen = BTreeSet::new();
    for idx in 0..hol.hol_order() {
        let g = hol.hol_from_index(idx);
        if hol.hol_element_order(&g) == q {
            let c = cyclic(hol, &g);
            if hol.acts_freely(&c) {
                seen.insert(c);
            }
        }
    }
    seen.into_iter().collect()
}

struct Search<'a> {
    hol: &'a Holomorph,
    pool: HashSet<HolElem>,
    by_eta: Vec<Vec<HolElem>>,
    budget: u64,
    nodes: u64,
    found: Vec<Vec<HolElem>>,
}

impl<'a> Search<'a> {
    fn new(hol: &'a Holomorph, pool: Vec<HolElem>, budget: u64) -> Self {
        let mut by_eta = vec![Vec::new(); hol.n() as usize];
        for g in &pool {
            by_eta[hol.n_index(&g.eta) as usize].push(*g);
        }
        for v in &mut by_eta {
            v.sort();
        }
        Search {
            hol,
            pool: pool.into_iter().collect(),
            by_eta,
            budget,
            nodes: 0,
            found: Vec::new(),
        }
    }

    /// Closure of `gens`, or None as soon as two elements share a first
    /// component, an element leaves the pool, or the size passes n.
    fn closure(&self, gens: &[HolElem]) -> Option<Vec<HolElem>> {
        let h = self.hol;
        let id = h.hol_identity();
        let mut slot: Vec<Option<HolElem>> = vec![None; h.n() as usize];
        slot[0] = Some(id);
        let mut elems = vec![id];
        let mut cursor = 0;
        while cursor < elems.len() {
            let x = elems[cursor];
            cursor += 1;
            for g in gens {
                let y = h.hol_mul(&x, g);
                let idx = h.n_index(&y.eta) as usize;
                match slot[idx] {
                    Some(z) if z == y => continue,
                    Some(_) => return None,
                    None => {}
                }
                if !self.pool.contains(&y) {
                    return None;
                }
                slot[idx] = Some(y);
                elems.push(y);
            }
        }
        Some(elems)
    }

    fn run(&mut self, gens: Vec<HolElem>, group: Vec<HolElem>) -> Result<(), ClassifyError> {
        let n = self.hol.n() as usize;
        if group.len() == n {
            let mut g = group;
            g.sort();
            self.found.push(g);
            return Ok(());
        }
        let mut covered = vec![false; n];
        for g in &group {
            covered[self.hol.n_index(&g.eta) as usize] = true;
        }
        let target = covered.iter().position(|c| !c).expect("group smaller than n");
        for cand in self.by_eta[target].clone() {
            self.nodes += 1;
            if self.nodes > self.budget {
                return Err(ClassifyError::BudgetExceeded(self.budget));
            }
            let mut g2 = gens.clone();
            g2.push(cand);
            if let Some(next) = self.closure(&g2) {
                if n % next.len() == 0 {
                    self.run(g2, next)?;
                }
            }
        }
        Ok(())
    }
}

/// Every regular subgroup of Hol(N) that contains `seed_gens` and lies in
/// `pool` (plus the identity), each reported once as a sorted list.
pub fn regular_subgroups_within(
    hol: &Holomorph,
    pool: Vec<HolElem>,
    seed_gens: &[HolElem],
    budget: u64,
) -> Result<Vec<Vec<HolElem>>, ClassifyError> {
    let mut s = Search::new(hol, pool, budget);
    let Some(seed) = s.closure(seed_gens) else {
        return Ok(Vec::new());
    };
    if hol.n() as usize % seed.len() != 0 {
        return Ok(Vec::new());
    }
    s.run(seed_gens.to_vec(), seed)?;
    let mut found = s.found;
    found.sort();
    found.dedup();
    Ok(found)
}

/// Fixed-point-free elements of Hol(N), in index order.
pub fn fixed_point_free(hol: &Holomorph) -> Vec<HolElem> {
    (0..hol.hol_order())
        .map(|i| hol.hol_from_index(i))
        .filter(|g| hol.is_fixed_point_free(g))
        .collect()
}

fn normalizer_pool(hol: &Holomorph, x: &HolElem) -> Vec<HolElem> {
    let xs: HashSet<HolElem> = cyclic(hol, x).into_iter().collect();
    let x = *x;
    (0..hol.hol_order())
        .map(|i| hol.hol_from_index(i))
        .filter(|u| xs.contains(&hol.hol_mul(&hol.hol_mul(u, &x), &hol.hol_inv(u))))
        .filter(|u| hol.is_fixed_point_free(u))
        .collect()
}

fn p_part_is_normal(hol: &Holomorph, group: &[HolElem]) -> bool {
    let p = hol.p() as u64;
    let count = group
        .iter()
        .filter(|g| {
            let mut o = hol.hol_element_order(g);
            while o % p == 0 {
                o /= p;
            }
            o == 1
        })
        .count();
    count == hol.p_to_p() as usize
}

/// Splits `groups` into Aut(N)-conjugacy classes, keeping the first
/// member of each class.
pub fn dedupe_by_conjugacy(hol: &Holomorph, groups: Vec<RegularSubgroupMap>) -> Vec<RegularSubgroupMap> {
    let mut reps: Vec<RegularSubgroupMap> = Vec::new();
    for g in groups {
        if !reps.iter().any(|r| are_isomorphic(hol, r, &g).is_some()) {
            reps.push(g);
        }
    }
    reps
}

/// Regular subgroups in which <x> is normal and the Sylow p-subgroup is
/// not, one per Aut(N)-conjugacy class.
pub fn regular_overgroups(hol: &Holomorph, x: &HolElem, budget: u64) -> Result<Vec<RegularSubgroupMap>, ClassifyError> {
    let pool = normalizer_pool(hol, x);
    let groups = regular_subgroups_within(hol, pool, &[*x], budget)?;
    let maps = groups
        .into_iter()
        .filter(|g| !p_part_is_normal(hol, g))
        .map(|g| RegularSubgroupMap::from_elements(hol, &g))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(dedupe_by_conjugacy(hol, maps))
}

/// The least sorted index sequence over all Aut(N)-conjugates.
pub fn canonical_key(hol: &Holomorph, group: &[HolElem]) -> Vec<u64> {
    let mut best: Option<Vec<u64>> = None;
    for a in hol.aut_enumerate() {
        let mut key: Vec<u64> = group.iter().map(|g| hol.hol_index(&hol.hol_conjugate_by_aut(&a, g))).collect();
        key.sort_unstable();
        if best.as_ref().map_or(true, |b| key < *b) {
            best = Some(key);
        }
    }
    best.unwrap_or_default()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CensusMode {
    /// Backtracking over all of Hol(N).
    Full,
    /// Only overgroups of the canonical free order-q subgroups.
    Guided,
}

#[derive(Debug, Clone, Serialize)]
pub struct CensusEntry {
    pub iso_class: usize,
    pub simple: bool,
    pub dot_tag: GroupTag,
    pub circ_tag: GroupTag,
    pub dot_sylow_p_normal: bool,
    pub circ_sylow_p_normal: bool,
    pub circ_sylow_q_normal: bool,
    pub ideal_orders: Vec<usize>,
    pub opposite_class: Option<usize>,
    pub generators: Vec<String>,
    #[serde(skip)]
    pub subgroup: RegularSubgroupMap,
}

#[derive(Debug, Clone, Serialize)]
pub struct Census {
    pub n: u32,
    pub mode: CensusMode,
    pub regular_subgroups_found: usize,
    pub entries: Vec<CensusEntry>,
    /// Classes of G and G*.
    pub g_class: Option<usize>,
    pub g_star_class: Option<usize>,
}

impl Census {
    pub fn simple_classes(&self) -> Vec<&CensusEntry> {
        self.entries.iter().filter(|e| e.simple).collect()
    }

    /// Exactly two simple classes, those of G and G*, each the opposite of
    /// the other.
    pub fn simple_pair_is_g_and_g_star(&self) -> bool {
        let simple = self.simple_classes();
        let ids: BTreeSet<usize> = simple.iter().map(|e| e.iso_class).collect();
        match (self.g_class, self.g_star_class) {
            (Some(a), Some(b)) => {
                simple.len() == 2
                    && a != b
                    && ids == BTreeSet::from([a, b])
                    && simple.iter().all(|e| e.opposite_class == Some(if e.iso_class == a { b } else { a }))
            }
            _ => false,
        }
    }
}

fn class_of(hol: &Holomorph, reps: &[RegularSubgroupMap], g: &RegularSubgroupMap) -> Option<usize> {
    reps.iter().position(|r| are_isomorphic(hol, r, g).is_some())
}

/// Enumerates regular subgroups of Hol(N) up to Aut(N)-conjugacy and
/// describes the brace of each class. Searches all of Hol(N) when
/// n <= [`FULL_CENSUS_MAX`], otherwise only the overgroups of the
/// canonical order-q types (TypeIII taken up to the action of T on v).
pub fn census(hol: &Arc<Holomorph>, n_cap: u32, budget: u64) -> Result<Census, ClassifyError> {
    let n = hol.n();
    if n > n_cap {
        return Err(ClassifyError::NotEnabled { n, cap: n_cap });
    }
    let (mode, found, reps) = if n <= FULL_CENSUS_MAX {
        let groups = regular_subgroups_within(hol, fixed_point_free(hol), &[], budget)?;
        let found = groups.len();
        let mut by_key: BTreeMap<Vec<u64>, Vec<HolElem>> = BTreeMap::new();
        for g in groups {
            by_key.entry(canonical_key(hol, &g)).or_insert(g);
        }
        let reps = by_key
            .into_values()
            .map(|g| RegularSubgroupMap::from_elements(hol, &g))
            .collect::<Result<Vec<_>, _>>()?;
        (CensusMode::Full, found, reps)
    } else {
        let mut gens = vec![gen_x(hol), type_ii_generator(hol)];
        let e1 = FpVector::basis(hol.p(), 1);
        for k in 1..=hol.q() - 2 {
            gens.push(type_iii_generator(hol, k, FpVector::zero(hol.p())));
            gens.push(type_iii_generator(hol, k, e1));
        }
        let mut all = Vec::new();
        for x in &gens {
            all.extend(regular_overgroups(hol, x, budget)?);
        }
        let found = all.len();
        (CensusMode::Guided, found, dedupe_by_conjugacy(hol, all))
    };
    let (p, q) = (hol.p() as u64, hol.q() as u64);
    let g = build_g(hol)?;
    let gs = build_g_star(hol)?;
    let mut entries = Vec::new();
    for (id, rep) in reps.iter().enumerate() {
        let b = brace_from_regular(hol, rep, Which::Custom)?;
        let ideals = b.ideals(IdealPath::Fast)?;
        let dot = b.dot_group()?;
        let circ = b.circ_group()?;
        entries.push(CensusEntry {
            iso_class: id,
            simple: ideals.len() == 2,
            dot_tag: tag_of(&dot, p, q),
            circ_tag: tag_of(&circ, p, q),
            dot_sylow_p_normal: dot.sylow_is_normal(p),
            circ_sylow_p_normal: circ.sylow_is_normal(p),
            circ_sylow_q_normal: circ.sylow_is_normal(q),
            ideal_orders: ideals.iter().map(|i| i.elements.len()).collect(),
            opposite_class: class_of(hol, &reps, &opposite_regular(hol, rep)),
            generators: rep.generators(hol).iter().map(|g| g.to_string()).collect(),
            subgroup: rep.clone(),
        });
    }
    Ok(Census {
        n,
        mode,
        regular_subgroups_found: found,
        g_class: class_of(hol, &reps, &g),
        g_star_class: class_of(hol, &reps, &gs),
        entries,
    })
}

/// Whether T acts transitively on the nonzero vectors, which lets the
/// guided census take v in {0, e_1} for TypeIII.
pub fn t_orbit_is_transitive(hol: &Holomorph) -> bool {
    let t = hol.frame().t();
    let mut seen = HashSet::new();
    let mut v = FpVector::basis(hol.p(), 1);
    while seen.insert(v) {
        v = t.mul_vec(&v);
    }
    seen.len() as u32 == hol.p_to_p() - 1
}
