//! The generators X, Y_v, Z of the regular subgroup G and their starred
//! versions for G*, the normal form X^i Y_u Z^k, and the conversions
//! between elements of N and normal forms.

use crate::brace::{opposite_regular, RegularSubgroupMap};
use crate::fpalg::{FpMatrix, FpVector};
use crate::holo::{AutNElem, HolElem, HoloError, Holomorph, NElem};
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ConstructError {
    #[error("formula and closure disagree for {0}")]
    ClosureMismatch(&'static str),
    #[error(transparent)]
    Holo(#[from] HoloError),
}

/// X^i Y_u Z^k with 0 <= i < q, u in V_0 and 0 <= k < p.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GNormalForm {
    pub i: u32,
    pub u: FpVector,
    pub k: u32,
}

impl fmt::Display for GNormalForm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "X^{} Y_[{}] Z^{}", self.i, self.u, self.k)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KappaDecomposition {
    pub kappa: u32,
    pub kappa_tilde: u32,
    pub pi: FpVector,
}

fn e_p(hol: &Holomorph) -> FpVector {
    FpVector::basis(hol.p(), hol.p() as usize)
}

/// J^[k] e_p.
pub fn j_bracket_ep(hol: &Holomorph, k: u64) -> FpVector {
    hol.frame().j().bracket_power(k).mul_vec(&e_p(hol))
}

fn j_pow(hol: &Holomorph, k: u32) -> FpMatrix {
    hol.frame().j().pow_u(k as u64)
}

fn aut(hol: &Holomorph, j: u32, w: FpVector) -> AutNElem {
    AutNElem { i: 0, j: j % hol.p(), w }
}

fn n_elem(k: u32, v: FpVector) -> NElem {
    NElem { k, v }
}

/// X = [(M, 0), conj(I, 0)].
pub fn gen_x(hol: &Holomorph) -> HolElem {
    HolElem {
        eta: n_elem(1, FpVector::zero(hol.p())),
        alpha: hol.aut_identity(),
    }
}

/// Y_v = [(I, v), conj(I, -v)].
pub fn gen_y(hol: &Holomorph, v: FpVector) -> HolElem {
    HolElem {
        eta: n_elem(0, v),
        alpha: aut(hol, 0, -v),
    }
}

/// Z = [(I, e_p), conj(J, -e_p)].
pub fn gen_z(hol: &Holomorph) -> HolElem {
    HolElem {
        eta: n_elem(0, e_p(hol)),
        alpha: aut(hol, 1, -e_p(hol)),
    }
}

/// X* = [(M, 0), conj(M^{-1}, 0)].
pub fn gen_x_star(hol: &Holomorph) -> HolElem {
    HolElem {
        eta: n_elem(1, FpVector::zero(hol.p())),
        alpha: hol.conj_of(&n_elem(hol.q() - 1, FpVector::zero(hol.p()))),
    }
}

/// Y*_v = [(I, v), conj(I, 0)].
pub fn gen_y_star(hol: &Holomorph, v: FpVector) -> HolElem {
    HolElem {
        eta: n_elem(0, v),
        alpha: hol.aut_identity(),
    }
}

/// Z* = [(I, J^{-1} e_p), conj(J^{-1}, 0)].
pub fn gen_z_star(hol: &Holomorph) -> HolElem {
    let p = hol.p();
    HolElem {
        eta: n_elem(0, j_pow(hol, p - 1).mul_vec(&e_p(hol))),
        alpha: aut(hol, p - 1, FpVector::zero(p)),
    }
}

/// Z^k = [(I, J^[k] e_p), conj(J^k, -J^[k] e_p)].
pub fn z_power_closed_form(hol: &Holomorph, k: u64) -> HolElem {
    let b = j_bracket_ep(hol, k);
    HolElem {
        eta: n_elem(0, b),
        alpha: aut(hol, (k % hol.p() as u64) as u32, -b),
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationCheck {
    pub name: String,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RelationReport {
    pub checks: Vec<RelationCheck>,
}

impl RelationReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<&str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.name.as_str()).collect()
    }
}

/// The defining relations of G and G*, checked by multiplying out in
/// Hol(N).
pub fn check_relations(hol: &Holomorph) -> RelationReport {
    let p = hol.p();
    let q = hol.q() as u64;
    let mul = |a: &HolElem, b: &HolElem| hol.hol_mul(a, b);
    let pw = |a: &HolElem, e: u64| hol.hol_pow(a, e);
    let id = hol.hol_identity();
    let e = |i: usize| FpVector::basis(p, i);
    let jm = hol.frame().j();
    let mut checks = Vec::new();
    let mut push = |name: String, passed: bool| checks.push(RelationCheck { name, passed });

    let (x, z) = (gen_x(hol), gen_z(hol));
    push("X^q = 1".into(), pw(&x, q) == id);
    push("Z^p = Y_e1".into(), pw(&z, p as u64) == gen_y(hol, e(1)));
    push("ZX = X^p Z".into(), mul(&z, &x) == mul(&pw(&x, p as u64), &z));
    for a in 1..=p as usize {
        let ya = gen_y(hol, e(a));
        push(format!("Y_e{a} X = X Y_e{a}"), mul(&ya, &x) == mul(&x, &ya));
        for b in 1..=p as usize {
            push(
                format!("Y_e{a} Y_e{b} = Y_(e{a}+e{b})"),
                mul(&ya, &gen_y(hol, e(b))) == gen_y(hol, e(a) + e(b)),
            );
        }
        push(format!("Z Y_e{a} = Y_(J e{a}) Z"), mul(&z, &ya) == mul(&gen_y(hol, jm.mul_vec(&e(a))), &z));
    }
    for i in 2..=p as usize {
        let yi = gen_y(hol, e(i));
        let comm = mul(&mul(&mul(&z, &yi), &hol.hol_inv(&z)), &hol.hol_inv(&yi));
        push(format!("Z Y_e{i} Z^-1 Y_e{i}^-1 = Y_e{}", i - 1), comm == gen_y(hol, e(i - 1)));
    }
    let mut zk = id;
    for k in 0..=(p * p) as u64 {
        push(format!("Z^{k} closed form"), zk == z_power_closed_form(hol, k));
        zk = mul(&zk, &z);
    }
    push("Z has order p^2".into(), hol.hol_element_order(&z) == (p * p) as u64);

    let (xs, zs) = (gen_x_star(hol), gen_z_star(hol));
    push("X*^q = 1".into(), pw(&xs, q) == id);
    push("Z*^p = Y*_e1".into(), pw(&zs, p as u64) == gen_y_star(hol, e(1)));
    push("X* Z* = Z* X*^p".into(), mul(&xs, &zs) == mul(&zs, &pw(&xs, p as u64)));
    for a in 1..=p as usize {
        let ya = gen_y_star(hol, e(a));
        push(format!("X* Y*_e{a} = Y*_e{a} X*"), mul(&xs, &ya) == mul(&ya, &xs));
        for b in 1..=p as usize {
            push(
                format!("Y*_e{a} Y*_e{b} = Y*_(e{a}+e{b})"),
                mul(&ya, &gen_y_star(hol, e(b))) == gen_y_star(hol, e(a) + e(b)),
            );
        }
        push(
            format!("Y*_e{a} Z* = Z* Y*_(J e{a})"),
            mul(&ya, &zs) == mul(&zs, &gen_y_star(hol, jm.mul_vec(&e(a)))),
        );
    }
    RelationReport { checks }
}

/// κ(v) = v_p, its lift κ̃ in [0, p), and π(v) = v - J^[κ̃] e_p in V_0.
pub fn kappa_decompose(hol: &Holomorph, v: &FpVector) -> KappaDecomposition {
    let kappa = v.get(hol.p() as usize);
    let pi = *v - j_bracket_ep(hol, kappa as u64);
    debug_assert_eq!(pi.get(hol.p() as usize), 0);
    KappaDecomposition {
        kappa,
        kappa_tilde: kappa,
        pi,
    }
}

/// Normal form of g_eta: for eta = (M^i, M^i v), g_eta = X^i Y_π(v) Z^κ̃(v).
pub fn g_of_eta(hol: &Holomorph, eta: &NElem) -> GNormalForm {
    let v = hol.m_pow(-(eta.k as i64)).mul_vec(&eta.v);
    let d = kappa_decompose(hol, &v);
    GNormalForm {
        i: eta.k,
        u: d.pi,
        k: d.kappa_tilde,
    }
}

/// First component of X^i Y_u Z^k: (M^i, M^i (u + J^[k] e_p)).
pub fn eta_of_g(hol: &Holomorph, f: &GNormalForm) -> NElem {
    let i = f.i % hol.q();
    n_elem(i, hol.m_pow(i as i64).mul_vec(&(f.u + j_bracket_ep(hol, f.k as u64))))
}

/// X^i Y_u Z^k as an element of Hol(N).
pub fn hol_of_g(hol: &Holomorph, f: &GNormalForm) -> HolElem {
    let b = f.u + j_bracket_ep(hol, f.k as u64);
    HolElem {
        eta: eta_of_g(hol, f),
        alpha: aut(hol, f.k, -b),
    }
}

/// (X^i Y_u Z^k)(X^i' Y_u' Z^k') = X^{i+i'p^k} Y_{u+J^k u'} Z^{k+k'},
/// rewriting Z^p as Y_e1.
pub fn nf_mul(hol: &Holomorph, a: &GNormalForm, b: &GNormalForm) -> GNormalForm {
    let p = hol.p();
    let q = hol.q() as u64;
    let i = (a.i as u64 + b.i as u64 * hol.frobenius_exponent(a.k) as u64) % q;
    let mut u = a.u + j_pow(hol, a.k).mul_vec(&b.u);
    let mut k = a.k + b.k;
    if k >= p {
        u = u + FpVector::basis(p, 1);
        k -= p;
    }
    GNormalForm { i: i as u32, u, k }
}

fn closure_set(hol: &Holomorph, gens: &[HolElem]) -> Result<BTreeSet<HolElem>, HoloError> {
    Ok(hol.subgroup_closure(gens, hol.n() as usize)?.into_iter().collect())
}

/// G = <X, Y_{e_{p-1}}, Z>, filled in from the normal form and checked
/// against the closure of the generators.
pub fn build_g(hol: &Holomorph) -> Result<RegularSubgroupMap, ConstructError> {
    let alphas = hol.n_elements().map(|eta| hol_of_g(hol, &g_of_eta(hol, &eta)).alpha).collect();
    let map = RegularSubgroupMap::new(alphas);
    let gens = [gen_x(hol), gen_y(hol, FpVector::basis(hol.p(), hol.p() as usize - 1)), gen_z(hol)];
    let closed = closure_set(hol, &gens).map_err(|_| ConstructError::ClosureMismatch("G"))?;
    if closed != map.elements(hol).into_iter().collect() {
        return Err(ConstructError::ClosureMismatch("G"));
    }
    Ok(map)
}

/// G* from the star operation, checked against <X*, Y*_{e_{p-1}}, Z*>.
pub fn build_g_star(hol: &Holomorph) -> Result<RegularSubgroupMap, ConstructError> {
    let map = opposite_regular(hol, &build_g(hol)?);
    let gens = [
        gen_x_star(hol),
        gen_y_star(hol, FpVector::basis(hol.p(), hol.p() as usize - 1)),
        gen_z_star(hol),
    ];
    let closed = closure_set(hol, &gens).map_err(|_| ConstructError::ClosureMismatch("G*"))?;
    if closed != map.elements(hol).into_iter().collect() {
        return Err(ConstructError::ClosureMismatch("G*"));
    }
    Ok(map)
}

fn frob_split(hol: &Holomorph, alpha: &AutNElem, eta: &NElem) -> (GNormalForm, u64, FpVector) {
    let f = g_of_eta(hol, eta);
    let s = hol.frobenius_exponent(alpha.j) as u64;
    let is = f.i as u64 * s % hol.q() as u64;
    (f, is, f.u + j_bracket_ep(hol, f.k as u64))
}

/// Normal form of g_{α(η)}: X^{is} Y_π(v) Z^κ̃(v) with
/// v = (M^{-is} - I) w + A (u + J^[k] e_p).
pub fn alpha_image(hol: &Holomorph, alpha: &AutNElem, eta: &NElem) -> GNormalForm {
    let (_, is, b) = frob_split(hol, alpha, eta);
    let a = hol.aut_matrix(alpha);
    let v = (hol.m_pow(-(is as i64)) - FpMatrix::identity(hol.p())).mul_vec(&alpha.w) + a.mul_vec(&b);
    let d = kappa_decompose(hol, &v);
    GNormalForm {
        i: is as u32,
        u: d.pi,
        k: d.kappa_tilde,
    }
}

/// Normal form of g_{α(η)^{-1}}: X^{-is} Y_π(y) Z^κ̃(y) with
/// y = (M^{is} - I) w - A M^i (u + J^[k] e_p).
pub fn phi_image(hol: &Holomorph, alpha: &AutNElem, eta: &NElem) -> GNormalForm {
    let (f, is, b) = frob_split(hol, alpha, eta);
    let a = hol.aut_matrix(alpha);
    let y = (hol.m_pow(is as i64) - FpMatrix::identity(hol.p())).mul_vec(&alpha.w)
        - (a * hol.m_pow(f.i as i64)).mul_vec(&b);
    let d = kappa_decompose(hol, &y);
    GNormalForm {
        i: ((hol.q() as u64 - is) % hol.q() as u64) as u32,
        u: d.pi,
        k: d.kappa_tilde,
    }
}
