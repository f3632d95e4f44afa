//! Finite groups given by Cayley tables over `0..n`.
//!
//! Everything here is brute force and independent of the matrix machinery,
//! so it doubles as the oracle for the structural computations elsewhere.

use crate::fpalg::factorize;
use serde::Serialize;
use std::collections::{BTreeMap, HashSet, VecDeque};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GroupError {
    #[error("table is not a group: {0}")]
    NotAGroup(String),
    #[error("subgroup enumeration exceeded budget {0}")]
    BudgetExceeded(usize),
}

/// A group on `0..n` with a row-major multiplication table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CayleyTable {
    n: usize,
    t: Vec<u32>,
    identity: u32,
    inv: Vec<u32>,
}

/// Summary used to recognise the groups that occur as (B,·) and (B,∘).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroupProfile {
    pub order_profile: BTreeMap<usize, usize>,
    pub abelian: bool,
    pub center_size: usize,
    pub sylow_p_normal: bool,
    pub sylow_q_normal: bool,
    pub sylow_p_exponent: usize,
    pub sylow_p_class: Option<usize>,
}

impl CayleyTable {
    /// Checks range, identity and two-sided inverses. Associativity is
    /// left to [`CayleyTable::associativity_violation`].
    pub fn new(n: usize, t: Vec<u32>) -> Result<Self, GroupError> {
        if t.len() != n * n || n == 0 {
            return Err(GroupError::NotAGroup(format!("table has {} entries, expected {}", t.len(), n * n)));
        }
        if let Some(x) = t.iter().find(|&&x| x as usize >= n) {
            return Err(GroupError::NotAGroup(format!("entry {x} out of range")));
        }
        let identity = (0..n)
            .find(|&e| (0..n).all(|a| t[e * n + a] as usize == a && t[a * n + e] as usize == a))
            .ok_or_else(|| GroupError::NotAGroup("no identity".into()))? as u32;
        let mut inv = vec![0u32; n];
        for a in 0..n {
            let b = (0..n)
                .find(|&b| t[a * n + b] == identity)
                .ok_or_else(|| GroupError::NotAGroup(format!("{a} has no right inverse")))?;
            if t[b * n + a] != identity {
                return Err(GroupError::NotAGroup(format!("{a} has no two-sided inverse")));
            }
            inv[a] = b as u32;
        }
        Ok(CayleyTable { n, t, identity, inv })
    }

    pub fn from_fn(n: usize, f: impl Fn(u32, u32) -> u32) -> Result<Self, GroupError> {
        let mut t = Vec::with_capacity(n * n);
        for a in 0..n as u32 {
            for b in 0..n as u32 {
                t.push(f(a, b));
            }
        }
        Self::new(n, t)
    }

    pub fn order(&self) -> usize {
        self.n
    }

    pub fn identity(&self) -> u32 {
        self.identity
    }

    #[inline]
    pub fn mul(&self, a: u32, b: u32) -> u32 {
        self.t[a as usize * self.n + b as usize]
    }

    #[inline]
    pub fn inv(&self, a: u32) -> u32 {
        self.inv[a as usize]
    }

    pub fn table(&self) -> &[u32] {
        &self.t
    }

    /// The opposite group a * b = b a.
    pub fn transpose(&self) -> CayleyTable {
        let n = self.n;
        let mut t = vec![0; n * n];
        for a in 0..n {
            for b in 0..n {
                t[a * n + b] = self.t[b * n + a];
            }
        }
        CayleyTable {
            n,
            t,
            identity: self.identity,
            inv: self.inv.clone(),
        }
    }

    /// First (a, b, c) in lexicographic order with (ab)c != a(bc).
    pub fn associativity_violation(&self) -> Option<(u32, u32, u32)> {
        let n = self.n as u32;
        for a in 0..n {
            for b in 0..n {
                let ab = self.mul(a, b);
                for c in 0..n {
                    if self.mul(ab, c) != self.mul(a, self.mul(b, c)) {
                        return Some((a, b, c));
                    }
                }
            }
        }
        None
    }

    pub fn element_order(&self, a: u32) -> usize {
        let mut x = a;
        let mut k = 1;
        while x != self.identity {
            x = self.mul(x, a);
            k += 1;
        }
        k
    }

    pub fn order_profile(&self) -> BTreeMap<usize, usize> {
        let mut out = BTreeMap::new();
        for a in 0..self.n as u32 {
            *out.entry(self.element_order(a)).or_insert(0) += 1;
        }
        out
    }

    pub fn is_abelian(&self) -> bool {
        let n = self.n as u32;
        (0..n).all(|a| (a + 1..n).all(|b| self.mul(a, b) == self.mul(b, a)))
    }

    pub fn center_size(&self) -> usize {
        let n = self.n as u32;
        (0..n).filter(|&a| (0..n).all(|b| self.mul(a, b) == self.mul(b, a))).count()
    }

    /// Subgroup generated by `gens`, sorted.
    pub fn closure(&self, gens: &[u32]) -> Vec<u32> {
        let mut seen = vec![false; self.n];
        seen[self.identity as usize] = true;
        let mut elems = vec![self.identity];
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for &g in gens {
                let y = self.mul(x, g);
                if !seen[y as usize] {
                    seen[y as usize] = true;
                    elems.push(y);
                    queue.push_back(y);
                }
            }
        }
        elems.sort_unstable();
        elems
    }

    /// Greedy generating set of the subgroup `sub` (sorted elements).
    pub fn subgroup_generators(&self, sub: &[u32]) -> Vec<u32> {
        let mut gens = Vec::new();
        let mut span = vec![self.identity];
        for &x in sub {
            if span.binary_search(&x).is_err() {
                gens.push(x);
                span = self.closure(&gens);
                if span.len() == sub.len() {
                    break;
                }
            }
        }
        gens
    }

    pub fn generating_set(&self) -> Vec<u32> {
        let all: Vec<u32> = (0..self.n as u32).collect();
        self.subgroup_generators(&all)
    }

    pub fn is_subgroup(&self, sub: &[u32]) -> bool {
        let set: HashSet<u32> = sub.iter().copied().collect();
        set.contains(&self.identity) && sub.iter().all(|&a| sub.iter().all(|&b| set.contains(&self.mul(a, b))))
    }

    /// Normality of the subgroup `sub` (sorted), tested against generators
    /// of the whole group.
    pub fn is_normal(&self, sub: &[u32]) -> bool {
        let gens = self.generating_set();
        let mut member = vec![false; self.n];
        for &x in sub {
            member[x as usize] = true;
        }
        gens.iter().all(|&g| {
            let gi = self.inv(g);
            sub.iter().all(|&h| member[self.mul(self.mul(g, h), gi) as usize])
        })
    }

    fn prime_part(&self, prime: u64) -> usize {
        factorize(self.n as u64).get(&prime).map_or(1, |&e| (prime as usize).pow(e))
    }

    fn is_power_of(x: usize, prime: usize) -> bool {
        let mut x = x;
        while x % prime == 0 {
            x /= prime;
        }
        x == 1
    }

    /// A Sylow subgroup is normal iff it is the only one, i.e. iff the
    /// elements of prime-power order number exactly its order.
    pub fn sylow_is_normal(&self, prime: u64) -> bool {
        let count = (0..self.n as u32)
            .filter(|&a| Self::is_power_of(self.element_order(a), prime as usize))
            .count();
        count == self.prime_part(prime)
    }

    /// A Sylow subgroup, grown greedily in index order.
    pub fn sylow_subgroup(&self, prime: u64) -> Vec<u32> {
        let target = self.prime_part(prime);
        let mut sub = vec![self.identity];
        let mut gens = Vec::new();
        for a in 0..self.n as u32 {
            if sub.len() == target {
                break;
            }
            if sub.binary_search(&a).is_ok() || !Self::is_power_of(self.element_order(a), prime as usize) {
                continue;
            }
            gens.push(a);
            let next = self.closure(&gens);
            if Self::is_power_of(next.len(), prime as usize) {
                sub = next;
            } else {
                gens.pop();
            }
        }
        sub
    }

    pub fn exponent(&self, sub: &[u32]) -> usize {
        sub.iter().fold(1, |acc, &a| {
            let o = self.element_order(a);
            acc / gcd(acc, o) * o
        })
    }

    /// Length of the lower central series of `sub`, or `None` if it does
    /// not reach the trivial group.
    pub fn nilpotency_class(&self, sub: &[u32]) -> Option<usize> {
        let mut gamma = sub.to_vec();
        let mut class = 0;
        while gamma.len() > 1 {
            let mut comms = Vec::new();
            let mut seen = HashSet::new();
            for &x in &gamma {
                for &y in sub {
                    let c = self.mul(self.mul(self.inv(x), self.inv(y)), self.mul(x, y));
                    if seen.insert(c) {
                        comms.push(c);
                    }
                }
            }
            let next = self.closure(&comms);
            if next.len() == gamma.len() {
                return None;
            }
            gamma = next;
            class += 1;
        }
        Some(class)
    }

    pub fn profile(&self, p: u64, q: u64) -> GroupProfile {
        let sp = self.sylow_subgroup(p);
        GroupProfile {
            order_profile: self.order_profile(),
            abelian: self.is_abelian(),
            center_size: self.center_size(),
            sylow_p_normal: self.sylow_is_normal(p),
            sylow_q_normal: self.sylow_is_normal(q),
            sylow_p_exponent: self.exponent(&sp),
            sylow_p_class: self.nilpotency_class(&sp),
        }
    }

    /// Every subgroup, as sorted element lists in a deterministic order
    /// (by size, then lexicographically). Built from the cyclic subgroups
    /// by repeated joins.
    pub fn all_subgroups(&self, budget: usize) -> Result<Vec<Vec<u32>>, GroupError> {
        let mut found: HashSet<Vec<u32>> = HashSet::new();
        let mut cyclic: Vec<(u32, Vec<u32>)> = Vec::new();
        for a in 0..self.n as u32 {
            let c = self.closure(&[a]);
            if found.insert(c.clone()) {
                cyclic.push((a, c));
            }
        }
        let mut work: Vec<(Vec<u32>, Vec<u32>)> = cyclic.iter().map(|(a, c)| (vec![*a], c.clone())).collect();
        let mut all: Vec<Vec<u32>> = work.iter().map(|(_, s)| s.clone()).collect();
        while let Some((gens, sub)) = work.pop() {
            for (a, _) in &cyclic {
                if sub.binary_search(a).is_ok() {
                    continue;
                }
                let mut g = gens.clone();
                g.push(*a);
                let joined = self.closure(&g);
                if found.insert(joined.clone()) {
                    if found.len() > budget {
                        return Err(GroupError::BudgetExceeded(budget));
                    }
                    all.push(joined.clone());
                    work.push((g, joined));
                }
            }
        }
        all.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
        Ok(all)
    }

    pub fn normal_subgroups(&self, budget: usize) -> Result<Vec<Vec<u32>>, GroupError> {
        Ok(self.all_subgroups(budget)?.into_iter().filter(|s| self.is_normal(s)).collect())
    }

    /// All automorphisms as permutations of `0..n`, found by backtracking
    /// over images of a generating set.
    pub fn automorphisms(&self) -> Vec<Vec<u32>> {
        let gens = self.generating_set();
        let orders: Vec<usize> = (0..self.n as u32).map(|a| self.element_order(a)).collect();
        let candidates: Vec<Vec<u32>> = gens
            .iter()
            .map(|&g| (0..self.n as u32).filter(|&x| orders[x as usize] == orders[g as usize]).collect())
            .collect();
        let mut out = Vec::new();
        let mut images = vec![0u32; gens.len()];
        self.aut_search(&gens, &candidates, 0, &mut images, &mut out);
        out.sort();
        out
    }

    fn aut_search(&self, gens: &[u32], cands: &[Vec<u32>], depth: usize, images: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if depth == gens.len() {
            if let Some(f) = self.extend_hom(gens, images) {
                out.push(f);
            }
            return;
        }
        for &c in &cands[depth] {
            images[depth] = c;
            self.aut_search(gens, cands, depth + 1, images, out);
        }
    }

    /// Extends gens -> images along right multiplication; returns the map if
    /// it is a well-defined bijective homomorphism.
    fn extend_hom(&self, gens: &[u32], images: &[u32]) -> Option<Vec<u32>> {
        const UNSET: u32 = u32::MAX;
        let mut f = vec![UNSET; self.n];
        f[self.identity as usize] = self.identity;
        let mut queue = VecDeque::from([self.identity]);
        while let Some(x) = queue.pop_front() {
            for (&g, &fg) in gens.iter().zip(images) {
                let y = self.mul(x, g) as usize;
                let fy = self.mul(f[x as usize], fg);
                if f[y] == UNSET {
                    f[y] = fy;
                    queue.push_back(y as u32);
                } else if f[y] != fy {
                    return None;
                }
            }
        }
        let mut hit = vec![false; self.n];
        for &y in &f {
            if y == UNSET || hit[y as usize] {
                return None;
            }
            hit[y as usize] = true;
        }
        Some(f)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cyclic(n: usize) -> CayleyTable {
        CayleyTable::from_fn(n, |a, b| (a + b) % n as u32).unwrap()
    }

    /// S_3 as permutations of {0,1,2}, indexed lexicographically.
    fn s3() -> CayleyTable {
        let perms: Vec<[u32; 3]> = vec![[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        CayleyTable::from_fn(6, |a, b| {
            let (x, y) = (perms[a as usize], perms[b as usize]);
            let c = [x[y[0] as usize], x[y[1] as usize], x[y[2] as usize]];
            perms.iter().position(|p| *p == c).unwrap() as u32
        })
        .unwrap()
    }

    /// Q_8 = {±1, ±i, ±j, ±k}.
    fn q8() -> CayleyTable {
        // index = 2*unit + sign, units 1,i,j,k
        let table = [[0, 1, 2, 3], [1, 0, 3, 2], [2, 3, 0, 1], [3, 2, 1, 0]];
        let sign = [[0, 0, 0, 0], [0, 1, 0, 1], [0, 1, 1, 0], [0, 0, 1, 1]];
        CayleyTable::from_fn(8, |a, b| {
            let (ua, sa) = ((a / 2) as usize, a % 2);
            let (ub, sb) = ((b / 2) as usize, b % 2);
            2 * table[ua][ub] + (sa + sb + sign[ua][ub]) % 2
        })
        .unwrap()
    }

    #[test]
    fn rejects_non_groups() {
        assert!(CayleyTable::new(2, vec![0, 0, 0, 0]).is_err());
        assert!(CayleyTable::new(2, vec![0, 1, 1]).is_err());
        assert!(CayleyTable::new(2, vec![0, 1, 1, 2]).is_err());
    }

    #[test]
    fn small_group_invariants() {
        let c6 = cyclic(6);
        assert!(c6.is_abelian());
        assert_eq!(c6.associativity_violation(), None);
        assert_eq!(c6.order_profile(), BTreeMap::from([(1, 1), (2, 1), (3, 2), (6, 2)]));
        let s = s3();
        assert_eq!(s.associativity_violation(), None);
        assert!(!s.is_abelian());
        assert_eq!(s.center_size(), 1);
        assert!(s.sylow_is_normal(3));
        assert!(!s.sylow_is_normal(2));
        assert_eq!(s.all_subgroups(100).unwrap().len(), 6);
        assert_eq!(s.normal_subgroups(100).unwrap().len(), 3);
        assert_eq!(s.automorphisms().len(), 6);
        assert_eq!(c6.automorphisms().len(), 2);
        assert_eq!(s.nilpotency_class(&(0..6).collect::<Vec<_>>()), None);
    }

    #[test]
    fn quaternion_invariants() {
        let q = q8();
        assert_eq!(q.associativity_violation(), None);
        assert_eq!(q.center_size(), 2);
        assert_eq!(q.order_profile(), BTreeMap::from([(1, 1), (2, 1), (4, 6)]));
        let all: Vec<u32> = (0..8).collect();
        assert_eq!(q.exponent(&all), 4);
        assert_eq!(q.nilpotency_class(&all), Some(2));
        assert_eq!(q.all_subgroups(100).unwrap().len(), 6);
        assert_eq!(q.normal_subgroups(100).unwrap().len(), 6);
        assert_eq!(q.automorphisms().len(), 24);
        assert_eq!(q.sylow_subgroup(2).len(), 8);
    }

    #[test]
    fn sylow_and_budget() {
        let s = s3();
        assert_eq!(s.sylow_subgroup(3).len(), 3);
        assert_eq!(s.sylow_subgroup(2).len(), 2);
        assert_eq!(s.all_subgroups(2), Err(GroupError::BudgetExceeded(2)));
        let t = s.transpose();
        assert_eq!(t.associativity_violation(), None);
        assert_eq!(t.order_profile(), s.order_profile());
    }
}
