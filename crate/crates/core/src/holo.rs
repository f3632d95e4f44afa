//! The group N of block matrices [[M^k, v], [0, 1]], its automorphism group
//! (conjugation by [[A, w], [0, 1]] with A = T^i J^j normalising <M>), and
//! the holomorph Hol(N) = N x| Aut(N) acting on N.
//!
//! Elements of N are addressed by a canonical index
//! `k * p^p + (v_1 p^{p-1} + ... + v_p)`, which every table and file uses.

use crate::fpalg::{pow_mod, verify_frame, FpError, FpMatrix, FpVector, Frame, PrimePair};
use std::collections::{HashMap, HashSet};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum HoloError {
    #[error(transparent)]
    Field(#[from] FpError),
    #[error("frame fails verification: items {0:?}")]
    InvalidFrame(Vec<&'static str>),
    #[error("matrix does not normalise <M>")]
    NotInNormalizer,
    #[error("subgroup closure exceeded bound {0}")]
    BoundExceeded(usize),
}

/// An element [[M^k, v], [0, 1]] of N.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct NElem {
    pub k: u32,
    pub v: FpVector,
}

impl fmt::Display for NElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({};{})", self.k, self.v)
    }
}

/// Conjugation by [[T^i J^j, w], [0, 1]].
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct AutNElem {
    pub i: u32,
    pub j: u32,
    pub w: FpVector,
}

impl fmt::Display for AutNElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "conj(T^{} J^{};{})", self.i, self.j, self.w)
    }
}

/// (eta, alpha) in Hol(N), acting by x -> eta * alpha(x).
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct HolElem {
    pub eta: NElem,
    pub alpha: AutNElem,
}

impl fmt::Display for HolElem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.eta, self.alpha)
    }
}

/// Precomputed data for a fixed frame: powers of M, the normaliser
/// {T^i J^j} with its discrete-log table, and exponent tables.
#[derive(Debug, Clone)]
pub struct Holomorph {
    frame: Frame,
    pair: PrimePair,
    p: u32,
    q: u32,
    p_to_p: u32,
    unit: u32,
    m_pows: Vec<FpMatrix>,
    normalizer: Vec<FpMatrix>,
    dlog: HashMap<FpMatrix, (u32, u32)>,
    p_pow_mod_q: Vec<u32>,
    p_pow_mod_unit: Vec<u32>,
}

impl Holomorph {
    /// Precomputes the tables for `frame`, rejecting frames that fail
    /// [`verify_frame`].
    pub fn new(frame: Frame) -> Result<Self, HoloError> {
        let report = verify_frame(&frame);
        if !report.all_passed() {
            return Err(HoloError::InvalidFrame(report.failed_items()));
        }
        Ok(Self::new_unchecked(frame))
    }

    pub(crate) fn new_unchecked(frame: Frame) -> Self {
        let pair = frame.pair();
        let (p, q) = (pair.p(), pair.q());
        let p_to_p = pair.p_to_p() as u32;
        let unit = p_to_p - 1;
        let m_pows: Vec<FpMatrix> = (0..q as u64).map(|k| frame.m().pow_u(k)).collect();
        let mut normalizer = Vec::with_capacity((unit * p) as usize);
        let mut dlog = HashMap::with_capacity((unit * p) as usize);
        let mut ti = FpMatrix::identity(p);
        for i in 0..unit {
            let mut a = ti;
            for j in 0..p {
                normalizer.push(a);
                dlog.insert(a, (i, j));
                a = a * frame.j();
            }
            ti = ti * frame.t();
        }
        Holomorph {
            pair,
            p,
            q,
            p_to_p,
            unit,
            m_pows,
            normalizer,
            dlog,
            p_pow_mod_q: (0..p).map(|j| pow_mod(p as u64, j as u64, q as u64) as u32).collect(),
            p_pow_mod_unit: (0..p).map(|j| pow_mod(p as u64, j as u64, unit as u64) as u32).collect(),
            frame,
        }
    }

    pub fn frame(&self) -> &Frame {
        &self.frame
    }

    pub fn pair(&self) -> PrimePair {
        self.pair
    }

    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// |N| = p^p q.
    pub fn n(&self) -> u32 {
        self.p_to_p * self.q
    }

    pub fn p_to_p(&self) -> u32 {
        self.p_to_p
    }

    /// |Aut(N)| = (p^p - 1) p p^p.
    pub fn aut_order(&self) -> u32 {
        self.unit * self.p * self.p_to_p
    }

    pub fn hol_order(&self) -> u64 {
        self.n() as u64 * self.aut_order() as u64
    }

    /// M^k for any integer k.
    pub fn m_pow(&self, k: i64) -> FpMatrix {
        self.m_pows[k.rem_euclid(self.q as i64) as usize]
    }

    /// p^j mod q, the exponent s with A M A^{-1} = M^s for A = T^i J^j.
    pub fn frobenius_exponent(&self, j: u32) -> u32 {
        self.p_pow_mod_q[(j % self.p) as usize]
    }

    // ----- N -----

    pub fn n_identity(&self) -> NElem {
        NElem {
            k: 0,
            v: FpVector::zero(self.p),
        }
    }

    pub fn n_mul(&self, a: &NElem, b: &NElem) -> NElem {
        NElem {
            k: (a.k + b.k) % self.q,
            v: a.v + self.m_pows[a.k as usize].mul_vec(&b.v),
        }
    }

    pub fn n_inv(&self, a: &NElem) -> NElem {
        let k = (self.q - a.k) % self.q;
        NElem {
            k,
            v: -self.m_pows[k as usize].mul_vec(&a.v),
        }
    }

    pub fn n_index(&self, a: &NElem) -> u32 {
        a.k * self.p_to_p + a.v.index()
    }

    pub fn n_elem(&self, idx: u32) -> NElem {
        debug_assert!(idx < self.n());
        NElem {
            k: idx / self.p_to_p,
            v: FpVector::from_index(self.p, idx % self.p_to_p),
        }
    }

    pub fn n_elements(&self) -> impl Iterator<Item = NElem> + '_ {
        (0..self.n()).map(move |i| self.n_elem(i))
    }

    // ----- Aut(N) -----

    pub fn aut_identity(&self) -> AutNElem {
        AutNElem {
            i: 0,
            j: 0,
            w: FpVector::zero(self.p),
        }
    }

    /// The matrix part T^i J^j.
    pub fn aut_matrix(&self, a: &AutNElem) -> FpMatrix {
        self.normalizer[(a.i * self.p + a.j) as usize]
    }

    /// Discrete logarithm of a normaliser element: A = T^i J^j.
    pub fn normalizer_coords(&self, a: &FpMatrix) -> Result<(u32, u32), HoloError> {
        self.dlog.get(a).copied().ok_or(HoloError::NotInNormalizer)
    }

    /// The automorphism given by conjugation with [[A, w], [0, 1]].
    pub fn aut_from_block(&self, a: &FpMatrix, w: FpVector) -> Result<AutNElem, HoloError> {
        let (i, j) = self.normalizer_coords(a)?;
        Ok(AutNElem { i, j, w })
    }

    /// Inner automorphism x -> eta x eta^{-1}.
    pub fn conj_of(&self, eta: &NElem) -> AutNElem {
        AutNElem {
            i: (eta.k as u64 * (self.unit / self.q) as u64 % self.unit as u64) as u32,
            j: 0,
            w: eta.v,
        }
    }

    pub fn aut_apply(&self, a: &AutNElem, x: &NElem) -> NElem {
        let k = (x.k as u64 * self.frobenius_exponent(a.j) as u64 % self.q as u64) as u32;
        let mk = self.m_pows[k as usize];
        NElem {
            k,
            v: (a.w - mk.mul_vec(&a.w)) + self.aut_matrix(a).mul_vec(&x.v),
        }
    }

    /// Composition a . b (apply b first). Uses J T J^{-1} = T^p, which
    /// [`Holomorph::new`] has checked.
    pub fn aut_compose(&self, a: &AutNElem, b: &AutNElem) -> AutNElem {
        let twist = self.p_pow_mod_unit[a.j as usize] as u64;
        AutNElem {
            i: ((a.i as u64 + b.i as u64 * twist) % self.unit as u64) as u32,
            j: (a.j + b.j) % self.p,
            w: self.aut_matrix(a).mul_vec(&b.w) + a.w,
        }
    }

    /// Composition through explicit block-matrix products and the
    /// discrete-log table.
    pub fn aut_compose_checked(&self, a: &AutNElem, b: &AutNElem) -> Result<AutNElem, HoloError> {
        let (aa, ab) = (self.aut_matrix(a), self.aut_matrix(b));
        self.aut_from_block(&(aa * ab), aa.mul_vec(&b.w) + a.w)
    }

    pub fn aut_inv(&self, a: &AutNElem) -> AutNElem {
        let j = (self.p - a.j) % self.p;
        let twist = self.p_pow_mod_unit[j as usize] as u64;
        let i = ((self.unit as u64 - a.i as u64 * twist % self.unit as u64) % self.unit as u64) as u32;
        let inv = AutNElem {
            i,
            j,
            w: FpVector::zero(self.p),
        };
        AutNElem {
            w: -self.aut_matrix(&inv).mul_vec(&a.w),
            ..inv
        }
    }

    pub fn aut_index(&self, a: &AutNElem) -> u32 {
        (a.i * self.p + a.j) * self.p_to_p + a.w.index()
    }

    pub fn aut_from_index(&self, idx: u32) -> AutNElem {
        let w = FpVector::from_index(self.p, idx % self.p_to_p);
        let ij = idx / self.p_to_p;
        AutNElem {
            i: ij / self.p,
            j: ij % self.p,
            w,
        }
    }

    /// All automorphisms in lexicographic (i, j, w) order.
    pub fn aut_enumerate(&self) -> Vec<AutNElem> {
        (0..self.aut_order()).map(|x| self.aut_from_index(x)).collect()
    }

    // ----- Hol(N) -----

    pub fn hol_identity(&self) -> HolElem {
        HolElem {
            eta: self.n_identity(),
            alpha: self.aut_identity(),
        }
    }

    pub fn hol_mul(&self, g: &HolElem, h: &HolElem) -> HolElem {
        HolElem {
            eta: self.n_mul(&g.eta, &self.aut_apply(&g.alpha, &h.eta)),
            alpha: self.aut_compose(&g.alpha, &h.alpha),
        }
    }

    pub fn hol_inv(&self, g: &HolElem) -> HolElem {
        let ainv = self.aut_inv(&g.alpha);
        HolElem {
            eta: self.aut_apply(&ainv, &self.n_inv(&g.eta)),
            alpha: ainv,
        }
    }

    pub fn hol_apply(&self, g: &HolElem, x: &NElem) -> NElem {
        self.n_mul(&g.eta, &self.aut_apply(&g.alpha, x))
    }

    pub fn hol_pow(&self, g: &HolElem, e: u64) -> HolElem {
        let mut acc = self.hol_identity();
        let mut b = *g;
        let mut e = e;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.hol_mul(&acc, &b);
            }
            b = self.hol_mul(&b, &b);
            e >>= 1;
        }
        acc
    }

    pub fn hol_element_order(&self, g: &HolElem) -> u64 {
        let id = self.hol_identity();
        let mut x = *g;
        let mut k = 1;
        while x != id {
            x = self.hol_mul(&x, g);
            k += 1;
        }
        k
    }

    /// (1, a) g (1, a)^{-1} = (a(eta), a alpha a^{-1}).
    pub fn hol_conjugate_by_aut(&self, a: &AutNElem, g: &HolElem) -> HolElem {
        HolElem {
            eta: self.aut_apply(a, &g.eta),
            alpha: self.aut_compose(&self.aut_compose(a, &g.alpha), &self.aut_inv(a)),
        }
    }

    pub fn hol_index(&self, g: &HolElem) -> u64 {
        self.n_index(&g.eta) as u64 * self.aut_order() as u64 + self.aut_index(&g.alpha) as u64
    }

    pub fn hol_from_index(&self, idx: u64) -> HolElem {
        let a = self.aut_order() as u64;
        HolElem {
            eta: self.n_elem((idx / a) as u32),
            alpha: self.aut_from_index((idx % a) as u32),
        }
    }

    /// Closure of `gens` under multiplication (finite, so inverses come for
    /// free). Sorted by index.
    pub fn subgroup_closure(&self, gens: &[HolElem], bound: usize) -> Result<Vec<HolElem>, HoloError> {
        let id = self.hol_identity();
        let mut seen = HashSet::new();
        seen.insert(id);
        let mut elems = vec![id];
        let mut cursor = 0;
        while cursor < elems.len() {
            let x = elems[cursor];
            cursor += 1;
            for g in gens {
                let y = self.hol_mul(&x, g);
                if seen.insert(y) {
                    if elems.len() == bound {
                        return Err(HoloError::BoundExceeded(bound));
                    }
                    elems.push(y);
                }
            }
        }
        elems.sort();
        Ok(elems)
    }

    /// |G| = |N| and the first components exhaust N.
    pub fn is_regular(&self, group: &[HolElem]) -> bool {
        if group.len() != self.n() as usize {
            return false;
        }
        let mut hit = vec![false; self.n() as usize];
        for g in group {
            let idx = self.n_index(&g.eta) as usize;
            if hit[idx] {
                return false;
            }
            hit[idx] = true;
        }
        true
    }

    /// No non-identity element fixes a point of N.
    pub fn acts_freely(&self, group: &[HolElem]) -> bool {
        let id = self.hol_identity();
        group
            .iter()
            .filter(|g| **g != id)
            .all(|g| self.is_fixed_point_free(g))
    }

    pub fn is_fixed_point_free(&self, g: &HolElem) -> bool {
        self.n_elements().all(|x| self.hol_apply(g, &x) != x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpalg::{build_frame, validate_prime_pair};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn hol(p: u64, q: u64) -> Holomorph {
        Holomorph::new(build_frame(validate_prime_pair(p, q).unwrap()).unwrap()).unwrap()
    }

    /// Literal (p+1)x(p+1) block matrix [[A, v], [0, 1]] over F_p.
    type Block = Vec<Vec<u32>>;

    fn block(a: &FpMatrix, v: &FpVector) -> Block {
        let d = a.modulus() as usize;
        let mut out = vec![vec![0; d + 1]; d + 1];
        for r in 0..d {
            for c in 0..d {
                out[r][c] = a.get(r, c);
            }
            out[r][d] = v.get(r + 1);
        }
        out[d][d] = 1;
        out
    }

    fn block_mul(a: &Block, b: &Block, p: u32) -> Block {
        let d = a.len();
        (0..d)
            .map(|r| (0..d).map(|c| (0..d).map(|k| a[r][k] * b[k][c]).sum::<u32>() % p).collect())
            .collect()
    }

    fn n_block(h: &Holomorph, x: &NElem) -> Block {
        block(&h.m_pow(x.k as i64), &x.v)
    }

    #[test]
    fn n_mul_examples() {
        let h = hol(2, 3);
        let zero = FpVector::zero(2);
        let v = FpVector::basis(2, 1);
        let w = FpVector::basis(2, 2);
        assert_eq!(
            h.n_mul(&NElem { k: 0, v }, &NElem { k: 0, v: w }),
            NElem { k: 0, v: v + w }
        );
        assert_eq!(
            h.n_mul(&NElem { k: 1, v: zero }, &NElem { k: 0, v }),
            NElem { k: 1, v: FpVector::basis(2, 2) }
        );
        for a in h.n_elements() {
            assert_eq!(h.n_mul(&a, &h.n_inv(&a)), h.n_identity());
        }
    }

    #[test]
    fn n_arithmetic_matches_block_matrices() {
        let h = hol(2, 3);
        for a in h.n_elements() {
            for b in h.n_elements() {
                let prod = h.n_mul(&a, &b);
                assert_eq!(n_block(&h, &prod), block_mul(&n_block(&h, &a), &n_block(&h, &b), 2));
            }
            let inv = h.n_inv(&a);
            let id = block(&FpMatrix::identity(2), &FpVector::zero(2));
            assert_eq!(block_mul(&n_block(&h, &inv), &n_block(&h, &a), 2), id);
        }
        let h = hol(3, 13);
        let mut rng = ChaCha8Rng::seed_from_u64(0x5B4ACE);
        for _ in 0..100_000 {
            let a = h.n_elem(rng.gen_range(0..h.n()));
            let b = h.n_elem(rng.gen_range(0..h.n()));
            assert_eq!(n_block(&h, &h.n_mul(&a, &b)), block_mul(&n_block(&h, &a), &n_block(&h, &b), 3));
        }
    }

    #[test]
    fn aut_apply_is_block_conjugation_and_homomorphism() {
        let h = hol(2, 3);
        for a in h.aut_enumerate() {
            let s = block(&h.aut_matrix(&a), &a.w);
            let s_inv = block(&h.aut_matrix(&a).inv().unwrap(), &-h.aut_matrix(&a).inv().unwrap().mul_vec(&a.w));
            for x in h.n_elements() {
                let lit = block_mul(&block_mul(&s, &n_block(&h, &x), 2), &s_inv, 2);
                assert_eq!(n_block(&h, &h.aut_apply(&a, &x)), lit);
                for y in h.n_elements() {
                    assert_eq!(
                        h.aut_apply(&a, &h.n_mul(&x, &y)),
                        h.n_mul(&h.aut_apply(&a, &x), &h.aut_apply(&a, &y))
                    );
                }
            }
        }
        let h = hol(3, 13);
        let auts = h.aut_enumerate();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10_000 {
            let a = auts[rng.gen_range(0..auts.len())];
            let x = h.n_elem(rng.gen_range(0..h.n()));
            let y = h.n_elem(rng.gen_range(0..h.n()));
            assert_eq!(
                h.aut_apply(&a, &h.n_mul(&x, &y)),
                h.n_mul(&h.aut_apply(&a, &x), &h.aut_apply(&a, &y))
            );
        }
    }

    #[test]
    fn aut_apply_examples() {
        let h = hol(2, 3);
        let id = h.aut_identity();
        for x in h.n_elements() {
            assert_eq!(h.aut_apply(&id, &x), x);
        }
        let conj_j = AutNElem { i: 0, j: 1, w: FpVector::zero(2) };
        assert_eq!(
            h.aut_apply(&conj_j, &NElem { k: 0, v: FpVector::basis(2, 2) }),
            NElem { k: 0, v: FpVector::from_entries(2, &[1, 1]) }
        );
        for a in h.aut_enumerate() {
            for v in FpVector::all(2) {
                assert_eq!(h.aut_apply(&a, &NElem { k: 0, v }).k, 0);
            }
        }
    }

    #[test]
    fn aut_group_structure() {
        let h = hol(2, 3);
        let auts = h.aut_enumerate();
        assert_eq!(auts.len(), 24);
        assert_eq!(auts[0], h.aut_identity());
        assert_eq!(h.aut_inv(&h.aut_identity()), h.aut_identity());
        let mut perms = HashSet::new();
        for a in &auts {
            assert_eq!(h.aut_compose(a, &h.aut_inv(a)), h.aut_identity());
            let perm: Vec<u32> = h.n_elements().map(|x| h.n_index(&h.aut_apply(a, &x))).collect();
            perms.insert(perm);
            for b in &auts {
                let ab = h.aut_compose(a, b);
                assert_eq!(Ok(ab), h.aut_compose_checked(a, b));
                for x in h.n_elements() {
                    assert_eq!(h.aut_apply(&ab, &x), h.aut_apply(a, &h.aut_apply(b, &x)));
                }
            }
        }
        assert_eq!(perms.len(), 24);
        let h3 = hol(3, 13);
        assert_eq!(h3.aut_enumerate().len(), 2106);
        let zero = FpVector::zero(3);
        let t = |i| AutNElem { i, j: 0, w: zero };
        assert_eq!(h3.aut_compose(&t(20), &t(10)), t(4));
        let auts3 = h3.aut_enumerate();
        for (x, a) in auts3.iter().enumerate().step_by(37) {
            assert_eq!(h3.aut_index(a), x as u32);
            for b in auts3.iter().step_by(53) {
                assert_eq!(Ok(h3.aut_compose(a, b)), h3.aut_compose_checked(a, b));
            }
            assert_eq!(h3.aut_compose(&h3.aut_inv(a), a), h3.aut_identity());
        }
    }

    #[test]
    fn normalizer_outside_is_rejected() {
        let h = hol(3, 13);
        let e = FpMatrix::from_fn(3, |r, c| (r == c) as i64 + (r == 0 && c == 2) as i64);
        assert!(!h.frame().m().pow_u(1).eq(&(e * h.frame().m() * e.inv().unwrap())));
        assert_eq!(h.normalizer_coords(&e), Err(HoloError::NotInNormalizer));
    }

    #[test]
    fn holomorph_basics() {
        let h = hol(2, 3);
        assert_eq!(h.hol_order(), 288);
        let all: Vec<HolElem> = (0..h.hol_order()).map(|x| h.hol_from_index(x)).collect();
        for (x, g) in all.iter().enumerate() {
            assert_eq!(h.hol_index(g), x as u64);
            assert_eq!(h.hol_apply(g, &h.n_identity()), g.eta);
            assert_eq!(h.hol_mul(g, &h.hol_inv(g)), h.hol_identity());
            assert_eq!(h.hol_mul(&h.hol_inv(g), g), h.hol_identity());
        }
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2000 {
            let g = all[rng.gen_range(0..all.len())];
            let k = all[rng.gen_range(0..all.len())];
            let x = h.n_elem(rng.gen_range(0..12));
            assert_eq!(h.hol_apply(&g, &h.hol_apply(&k, &x)), h.hol_apply(&h.hol_mul(&g, &k), &x));
        }
        let h3 = hol(3, 13);
        assert_eq!(h3.hol_order(), 351 * 2106);
    }

    #[test]
    fn closure_and_regularity() {
        let h = hol(2, 3);
        let id = h.hol_identity();
        assert_eq!(h.subgroup_closure(&[id], 1).unwrap(), vec![id]);
        let x = HolElem {
            eta: NElem { k: 1, v: FpVector::zero(2) },
            alpha: h.aut_identity(),
        };
        let cx = h.subgroup_closure(&[x], 12).unwrap();
        assert_eq!(cx.len(), 3);
        assert!(h.acts_freely(&cx));
        assert!(!h.is_regular(&cx));
        // left regular representation {(eta, id)}
        let left: Vec<HolElem> = h.n_elements().map(|eta| HolElem { eta, alpha: h.aut_identity() }).collect();
        assert!(h.is_regular(&left));
        assert!(h.acts_freely(&left));
        // an order-q element with k = 0 and A = M fixes a point
        let m_aut = h.conj_of(&NElem { k: 1, v: FpVector::zero(2) });
        let bad = HolElem { eta: h.n_identity(), alpha: m_aut };
        let cb = h.subgroup_closure(&[bad], 12).unwrap();
        assert_eq!(cb.len(), 3);
        assert!(!h.acts_freely(&cb));
        let all: Vec<HolElem> = (0..288).map(|x| h.hol_from_index(x)).collect();
        assert_eq!(h.subgroup_closure(&all[..40], 10), Err(HoloError::BoundExceeded(10)));
    }
}
