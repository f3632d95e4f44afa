//! Exact arithmetic over the prime field F_p: fixed-capacity vectors and
//! square matrices of dimension p, a handful of polynomial routines, and the
//! construction of the (M, T, J) frame the rest of the crate is built on.
//!
//! Conventions: column vectors, matrices act on the left, companion matrices
//! carry the polynomial coefficients in their last column.

use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, HashSet};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};
use thiserror::Error;

/// Largest prime p supported. Matrices and vectors are stored inline with
/// this capacity.
pub const MAX_P: usize = 5;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FpError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("q = {q} does not divide (p^p - 1)/(p - 1) for p = {p}")]
    DivisibilityFails { p: u64, q: u64 },
    #[error("p = {0} is outside the supported range 2..={MAX_P}")]
    UnsupportedPrime(u64),
    #[error("matrix is singular")]
    Singular,
    #[error("internal search exhausted: {0}")]
    InternalSearchExhausted(&'static str),
    #[error("malformed frame: {0}")]
    MalformedFrame(String),
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2u64;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 1;
    }
    true
}

/// Prime factorisation by trial division, as an ordered prime -> exponent map.
pub fn factorize(mut n: u64) -> BTreeMap<u64, u32> {
    let mut out = BTreeMap::new();
    let mut d = 2u64;
    while d * d <= n {
        while n % d == 0 {
            *out.entry(d).or_insert(0) += 1;
            n /= d;
        }
        d += 1;
    }
    if n > 1 {
        *out.entry(n).or_insert(0) += 1;
    }
    out
}

pub fn pow_mod(mut base: u64, mut exp: u64, m: u64) -> u64 {
    if m == 1 {
        return 0;
    }
    let mut acc = 1u64;
    base %= m;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = (acc as u128 * base as u128 % m as u128) as u64;
        }
        base = (base as u128 * base as u128 % m as u128) as u64;
        exp >>= 1;
    }
    acc
}

/// Multiplicative order of `a` modulo `m` (requires gcd(a, m) = 1).
pub fn multiplicative_order(a: u64, m: u64) -> u64 {
    let mut x = a % m;
    let mut k = 1;
    while x != 1 {
        x = x * a % m;
        k += 1;
    }
    k
}

fn inv_mod_p(x: u32, p: u32) -> u32 {
    debug_assert!(x % p != 0);
    pow_mod(x as u64, p as u64 - 2, p as u64) as u32
}

/// A validated pair of primes with q | (p^p - 1)/(p - 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct PrimePair {
    p: u32,
    q: u32,
    n: u64,
}

impl PrimePair {
    pub fn p(&self) -> u32 {
        self.p
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    /// The order p^p * q.
    pub fn n(&self) -> u64 {
        self.n
    }

    /// p^p, the order of V.
    pub fn p_to_p(&self) -> u64 {
        (self.p as u64).pow(self.p)
    }

    /// p^p - 1, the order of the unit group of F_{p^p}.
    pub fn unit_order(&self) -> u64 {
        self.p_to_p() - 1
    }
}

impl fmt::Display for PrimePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(p={}, q={}, n={})", self.p, self.q, self.n)
    }
}

pub fn validate_prime_pair(p: u64, q: u64) -> Result<PrimePair, FpError> {
    if !is_prime(p) {
        return Err(FpError::NotPrime(p));
    }
    if !is_prime(q) {
        return Err(FpError::NotPrime(q));
    }
    if p as usize > MAX_P {
        return Err(FpError::UnsupportedPrime(p));
    }
    let pp = p.pow(p as u32);
    if ((pp - 1) / (p - 1)) % q != 0 {
        return Err(FpError::DivisibilityFails { p, q });
    }
    debug_assert_eq!(multiplicative_order(p % q, q), p);
    Ok(PrimePair {
        p: p as u32,
        q: q as u32,
        n: pp * q,
    })
}

/// A column vector in F_p^p.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FpVector {
    p: u8,
    e: [u8; MAX_P],
}

impl FpVector {
    pub fn zero(p: u32) -> Self {
        debug_assert!(p as usize <= MAX_P);
        FpVector {
            p: p as u8,
            e: [0; MAX_P],
        }
    }

    /// The standard basis vector e_i, with `i` counted from 1 as in e_1..e_p.
    pub fn basis(p: u32, i: usize) -> Self {
        assert!(i >= 1 && i <= p as usize, "basis index {i} out of range");
        let mut v = Self::zero(p);
        v.e[i - 1] = 1;
        v
    }

    pub fn from_entries(p: u32, entries: &[i64]) -> Self {
        assert_eq!(entries.len(), p as usize, "vector length must equal p");
        let mut v = Self::zero(p);
        for (slot, &x) in v.e.iter_mut().zip(entries) {
            *slot = x.rem_euclid(p as i64) as u8;
        }
        v
    }

    /// Decodes the canonical index: v_1 is the most significant base-p digit.
    pub fn from_index(p: u32, mut idx: u32) -> Self {
        let mut v = Self::zero(p);
        for i in (0..p as usize).rev() {
            v.e[i] = (idx % p) as u8;
            idx /= p;
        }
        v
    }

    pub fn index(&self) -> u32 {
        self.entries()
            .iter()
            .fold(0u32, |acc, &x| acc * self.p as u32 + x as u32)
    }

    pub fn modulus(&self) -> u32 {
        self.p as u32
    }

    pub fn entries(&self) -> &[u8] {
        &self.e[..self.p as usize]
    }

    /// Coordinate `i` (1-based).
    pub fn get(&self, i: usize) -> u32 {
        self.e[i - 1] as u32
    }

    pub fn is_zero(&self) -> bool {
        self.entries().iter().all(|&x| x == 0)
    }

    pub fn scale(&self, c: u32) -> Self {
        let p = self.p as u32;
        let mut out = *self;
        for x in out.e[..self.p as usize].iter_mut() {
            *x = ((*x as u32 * c) % p) as u8;
        }
        out
    }

    /// All p^p vectors in index order.
    pub fn all(p: u32) -> impl Iterator<Item = FpVector> {
        (0..(p as u32).pow(p)).map(move |i| FpVector::from_index(p, i))
    }
}

impl fmt::Debug for FpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.entries())
    }
}

impl Serialize for FpVector {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(self.entries())
    }
}

impl fmt::Display for FpVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries().iter().map(|x| x.to_string()).collect();
        write!(f, "{}", parts.join(","))
    }
}

impl Add for FpVector {
    type Output = FpVector;
    fn add(self, rhs: FpVector) -> FpVector {
        debug_assert_eq!(self.p, rhs.p);
        let mut out = self;
        for i in 0..self.p as usize {
            out.e[i] = (self.e[i] + rhs.e[i]) % self.p;
        }
        out
    }
}

impl Sub for FpVector {
    type Output = FpVector;
    fn sub(self, rhs: FpVector) -> FpVector {
        self + (-rhs)
    }
}

impl Neg for FpVector {
    type Output = FpVector;
    fn neg(self) -> FpVector {
        let mut out = self;
        for i in 0..self.p as usize {
            out.e[i] = (self.p - self.e[i]) % self.p;
        }
        out
    }
}

/// A p x p matrix over F_p, row-major.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FpMatrix {
    p: u8,
    e: [[u8; MAX_P]; MAX_P],
}

impl FpMatrix {
    pub fn zero(p: u32) -> Self {
        debug_assert!(p as usize <= MAX_P);
        FpMatrix {
            p: p as u8,
            e: [[0; MAX_P]; MAX_P],
        }
    }

    pub fn identity(p: u32) -> Self {
        Self::scalar(p, 1)
    }

    pub fn scalar(p: u32, c: u32) -> Self {
        let mut m = Self::zero(p);
        for i in 0..p as usize {
            m.e[i][i] = (c % p) as u8;
        }
        m
    }

    pub fn from_fn(p: u32, mut f: impl FnMut(usize, usize) -> i64) -> Self {
        let mut m = Self::zero(p);
        for r in 0..p as usize {
            for c in 0..p as usize {
                m.e[r][c] = f(r, c).rem_euclid(p as i64) as u8;
            }
        }
        m
    }

    pub fn from_rows(p: u32, rows: &[Vec<i64>]) -> Self {
        assert_eq!(rows.len(), p as usize, "matrix must have p rows");
        for row in rows {
            assert_eq!(row.len(), p as usize, "matrix rows must have p entries");
        }
        Self::from_fn(p, |r, c| rows[r][c])
    }

    /// The Jordan block with ones on the diagonal and superdiagonal.
    pub fn jordan(p: u32) -> Self {
        Self::from_fn(p, |r, c| (r == c || r + 1 == c) as i64)
    }

    /// Companion matrix of the monic polynomial whose coefficients (low to
    /// high, leading 1 included) are `poly`; the negated coefficients sit in
    /// the last column.
    pub fn companion(p: u32, poly: &[u32]) -> Self {
        let d = p as usize;
        assert_eq!(poly.len(), d + 1);
        assert_eq!(poly[d] % p, 1, "companion polynomial must be monic");
        Self::from_fn(p, |r, c| {
            if c == d - 1 {
                -(poly[r] as i64)
            } else {
                (r == c + 1) as i64
            }
        })
    }

    pub fn modulus(&self) -> u32 {
        self.p as u32
    }

    pub fn get(&self, r: usize, c: usize) -> u32 {
        self.e[r][c] as u32
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        (0..self.p as usize)
            .map(|r| self.e[r][..self.p as usize].iter().map(|&x| x as u32).collect())
            .collect()
    }

    pub fn column(&self, c: usize) -> FpVector {
        let mut v = FpVector::zero(self.p as u32);
        for r in 0..self.p as usize {
            v.e[r] = self.e[r][c];
        }
        v
    }

    pub fn from_columns(cols: &[FpVector]) -> Self {
        let p = cols[0].modulus();
        assert_eq!(cols.len(), p as usize);
        Self::from_fn(p, |r, c| cols[c].e[r] as i64)
    }

    pub fn is_scalar(&self) -> bool {
        let d = self.p as usize;
        (0..d).all(|r| (0..d).all(|c| if r == c { self.e[r][c] == self.e[0][0] } else { self.e[r][c] == 0 }))
    }

    pub fn mul_vec(&self, v: &FpVector) -> FpVector {
        let d = self.p as usize;
        let p = self.p as u32;
        let mut out = FpVector::zero(p);
        for r in 0..d {
            let mut acc = 0u32;
            for c in 0..d {
                acc += self.e[r][c] as u32 * v.e[c] as u32;
            }
            out.e[r] = (acc % p) as u8;
        }
        out
    }

    pub fn scale(&self, c: u32) -> Self {
        let p = self.p as u32;
        let mut out = *self;
        for row in out.e.iter_mut() {
            for x in row.iter_mut() {
                *x = ((*x as u32 * c) % p) as u8;
            }
        }
        out
    }

    pub fn inv(&self) -> Result<FpMatrix, FpError> {
        let d = self.p as usize;
        let p = self.p as u32;
        let mut a: Vec<Vec<u32>> = (0..d)
            .map(|r| {
                let mut row: Vec<u32> = self.e[r][..d].iter().map(|&x| x as u32).collect();
                row.extend((0..d).map(|c| (r == c) as u32));
                row
            })
            .collect();
        for col in 0..d {
            let pivot = (col..d).find(|&r| a[r][col] != 0).ok_or(FpError::Singular)?;
            a.swap(col, pivot);
            let s = inv_mod_p(a[col][col], p);
            for x in a[col].iter_mut() {
                *x = *x * s % p;
            }
            for r in 0..d {
                if r != col && a[r][col] != 0 {
                    let f = a[r][col];
                    for c in 0..2 * d {
                        a[r][c] = (a[r][c] + p * p - f * a[col][c] % p) % p;
                    }
                }
            }
        }
        Ok(Self::from_fn(p, |r, c| a[r][d + c] as i64))
    }

    pub fn is_invertible(&self) -> bool {
        self.inv().is_ok()
    }

    /// `self^e`; negative exponents go through the inverse.
    pub fn pow(&self, e: i64) -> Result<FpMatrix, FpError> {
        let base = if e < 0 { self.inv()? } else { *self };
        Ok(base.pow_u(e.unsigned_abs()))
    }

    pub fn pow_u(&self, mut e: u64) -> FpMatrix {
        let mut acc = Self::identity(self.p as u32);
        let mut b = *self;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc * b;
            }
            b = b * b;
            e >>= 1;
        }
        acc
    }

    /// A^[k] = I + A + ... + A^{k-1}, with A^[0] = 0.
    pub fn bracket_power(&self, k: u64) -> FpMatrix {
        // Returns (A^[k], A^k) by doubling.
        fn go(a: &FpMatrix, k: u64) -> (FpMatrix, FpMatrix) {
            if k == 0 {
                (FpMatrix::zero(a.modulus()), FpMatrix::identity(a.modulus()))
            } else if k % 2 == 0 {
                let (s, pw) = go(a, k / 2);
                (s + pw * s, pw * pw)
            } else {
                let (s, pw) = go(a, k - 1);
                (s + pw, pw * *a)
            }
        }
        go(self, k).0
    }

    /// Multiplicative order, found by stripping prime factors from |GL_p(F_p)|.
    pub fn order(&self) -> Result<u64, FpError> {
        if !self.is_invertible() {
            return Err(FpError::Singular);
        }
        let p = self.p as u64;
        let mut factors: BTreeMap<u64, u32> = BTreeMap::new();
        let mut e = 1u64;
        for i in 0..p as u32 {
            // p^p - p^i = p^i (p^{p-i} - 1)
            let a = p.pow(i);
            let b = p.pow(p as u32 - i) - 1;
            e *= a * b;
            for (r, k) in factorize(a).into_iter().chain(factorize(b)) {
                *factors.entry(r).or_insert(0) += k;
            }
        }
        let id = Self::identity(self.p as u32);
        debug_assert_eq!(self.pow_u(e), id);
        for (r, k) in factors {
            for _ in 0..k {
                if self.pow_u(e / r) == id {
                    e /= r;
                } else {
                    break;
                }
            }
        }
        Ok(e)
    }

    fn flatten(&self) -> Vec<u32> {
        let d = self.p as usize;
        (0..d * d).map(|x| self.e[x / d][x % d] as u32).collect()
    }

    /// Monic minimal polynomial, coefficients low to high.
    pub fn minimal_polynomial(&self) -> Vec<u32> {
        let p = self.p as u32;
        let mut powers = vec![Self::identity(p).flatten()];
        let mut cur = Self::identity(p);
        loop {
            cur = cur * *self;
            let target = cur.flatten();
            if let Some(c) = solve_combination(&powers, &target, p) {
                let mut poly: Vec<u32> = c.iter().map(|&x| (p - x) % p).collect();
                poly.push(1);
                return poly;
            }
            powers.push(target);
        }
    }
}

impl fmt::Debug for FpMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.rows())
    }
}

impl Mul for FpMatrix {
    type Output = FpMatrix;
    fn mul(self, rhs: FpMatrix) -> FpMatrix {
        debug_assert_eq!(self.p, rhs.p);
        let d = self.p as usize;
        let p = self.p as u32;
        let mut out = FpMatrix::zero(p);
        for r in 0..d {
            for c in 0..d {
                let mut acc = 0u32;
                for k in 0..d {
                    acc += self.e[r][k] as u32 * rhs.e[k][c] as u32;
                }
                out.e[r][c] = (acc % p) as u8;
            }
        }
        out
    }
}

impl Mul<FpVector> for FpMatrix {
    type Output = FpVector;
    fn mul(self, rhs: FpVector) -> FpVector {
        self.mul_vec(&rhs)
    }
}

impl Add for FpMatrix {
    type Output = FpMatrix;
    fn add(self, rhs: FpMatrix) -> FpMatrix {
        let d = self.p as usize;
        let mut out = self;
        for r in 0..d {
            for c in 0..d {
                out.e[r][c] = (self.e[r][c] + rhs.e[r][c]) % self.p;
            }
        }
        out
    }
}

impl Sub for FpMatrix {
    type Output = FpMatrix;
    fn sub(self, rhs: FpMatrix) -> FpMatrix {
        self + rhs.scale(self.p as u32 - 1)
    }
}

// ---------------------------------------------------------------------------
// Dense linear algebra on Vec<Vec<u32>> rows.

/// Reduced row echelon form in place; returns pivot columns.
fn rref(rows: &mut [Vec<u32>], p: u32) -> Vec<usize> {
    let ncols = rows.first().map_or(0, |r| r.len());
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(pr) = (r..rows.len()).find(|&i| rows[i][c] != 0) else {
            continue;
        };
        rows.swap(r, pr);
        let s = inv_mod_p(rows[r][c], p);
        for x in rows[r].iter_mut() {
            *x = *x * s % p;
        }
        for i in 0..rows.len() {
            if i != r && rows[i][c] != 0 {
                let f = rows[i][c];
                for k in 0..ncols {
                    rows[i][k] = (rows[i][k] + p * p - f * rows[r][k] % p) % p;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub(crate) fn rank(rows: &[Vec<u32>], p: u32) -> usize {
    let mut m = rows.to_vec();
    rref(&mut m, p).len()
}

/// Basis of the null space of the system `rows * x = 0`, one vector per free
/// column in increasing column order.
fn nullspace(rows: &[Vec<u32>], ncols: usize, p: u32) -> Vec<Vec<u32>> {
    let mut m = rows.to_vec();
    let pivots = rref(&mut m, p);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut x = vec![0u32; ncols];
            x[f] = 1;
            for (row, &pc) in pivots.iter().enumerate() {
                x[pc] = (p - m[row][f]) % p;
            }
            x
        })
        .collect()
}

/// Coefficients c with sum c_i * vectors[i] = target, if any.
fn solve_combination(vectors: &[Vec<u32>], target: &[u32], p: u32) -> Option<Vec<u32>> {
    let k = vectors.len();
    let mut rows: Vec<Vec<u32>> = (0..target.len())
        .map(|r| {
            let mut row: Vec<u32> = vectors.iter().map(|v| v[r]).collect();
            row.push(target[r]);
            row
        })
        .collect();
    let pivots = rref(&mut rows, p);
    if pivots.contains(&k) {
        return None;
    }
    let mut c = vec![0u32; k];
    for (row, &pc) in pivots.iter().enumerate() {
        c[pc] = rows[row][k];
    }
    Some(c)
}

// ---------------------------------------------------------------------------
// Polynomials over F_p, coefficients low to high.

fn poly_trim(a: &mut Vec<u32>) {
    while a.len() > 1 && *a.last().unwrap() == 0 {
        a.pop();
    }
}

fn poly_rem(a: &[u32], b: &[u32], p: u32) -> Vec<u32> {
    let mut r = a.to_vec();
    poly_trim(&mut r);
    let mut b = b.to_vec();
    poly_trim(&mut b);
    let db = b.len() - 1;
    let lead_inv = inv_mod_p(b[db], p);
    while r.len() - 1 >= db && !(r.len() == 1 && r[0] == 0) {
        let dr = r.len() - 1;
        let f = r[dr] * lead_inv % p;
        for i in 0..=db {
            let idx = dr - db + i;
            r[idx] = (r[idx] + p * p - f * b[i] % p) % p;
        }
        poly_trim(&mut r);
        if dr == 0 {
            break;
        }
    }
    r
}

fn poly_mulmod(a: &[u32], b: &[u32], f: &[u32], p: u32) -> Vec<u32> {
    let mut prod = vec![0u32; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            prod[i + j] = (prod[i + j] + x * y) % p;
        }
    }
    poly_rem(&prod, f, p)
}

fn poly_powmod(a: &[u32], mut e: u64, f: &[u32], p: u32) -> Vec<u32> {
    let mut acc = vec![1u32];
    let mut b = poly_rem(a, f, p);
    while e > 0 {
        if e & 1 == 1 {
            acc = poly_mulmod(&acc, &b, f, p);
        }
        b = poly_mulmod(&b, &b, f, p);
        e >>= 1;
    }
    acc
}

fn is_one(a: &[u32]) -> bool {
    let mut a = a.to_vec();
    poly_trim(&mut a);
    a == [1]
}

/// Digits of `value` in base p, least significant first, padded to `len`.
fn digits(mut value: u64, p: u32, len: usize) -> Vec<u32> {
    (0..len)
        .map(|_| {
            let d = (value % p as u64) as u32;
            value /= p as u64;
            d
        })
        .collect()
}

/// Irreducibility by trial division with every monic polynomial of degree
/// 1..=deg/2.
pub fn is_irreducible(f: &[u32], p: u32) -> bool {
    let mut f = f.to_vec();
    poly_trim(&mut f);
    let d = f.len() - 1;
    if d == 0 {
        return false;
    }
    for dg in 1..=d / 2 {
        for value in 0..(p as u64).pow(dg as u32) {
            let mut g = digits(value, p, dg);
            g.push(1);
            let r = poly_rem(&f, &g, p);
            if r.iter().all(|&x| x == 0) {
                return false;
            }
        }
    }
    true
}

// ---------------------------------------------------------------------------
// Frame.

/// The matrices (M, T, J) for a prime pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Frame {
    pair: PrimePair,
    m: FpMatrix,
    t: FpMatrix,
    j: FpMatrix,
}

/// On-disk form of a frame.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameFile {
    pub p: u32,
    pub q: u32,
    #[serde(rename = "M")]
    pub m: Vec<Vec<u32>>,
    #[serde(rename = "T")]
    pub t: Vec<Vec<u32>>,
    #[serde(rename = "J")]
    pub j: Vec<Vec<u32>>,
}

impl Frame {
    /// Assembles a frame from parts without checking the frame invariants;
    /// run [`verify_frame`] on anything that did not come from [`build_frame`].
    pub fn from_parts(pair: PrimePair, m: FpMatrix, t: FpMatrix, j: FpMatrix) -> Self {
        Frame { pair, m, t, j }
    }

    pub fn pair(&self) -> PrimePair {
        self.pair
    }

    pub fn m(&self) -> FpMatrix {
        self.m
    }

    pub fn t(&self) -> FpMatrix {
        self.t
    }

    pub fn j(&self) -> FpMatrix {
        self.j
    }

    pub fn to_file(&self) -> FrameFile {
        FrameFile {
            p: self.pair.p,
            q: self.pair.q,
            m: self.m.rows(),
            t: self.t.rows(),
            j: self.j.rows(),
        }
    }

    pub fn from_file(file: &FrameFile) -> Result<Self, FpError> {
        let pair = validate_prime_pair(file.p as u64, file.q as u64)?;
        let p = pair.p;
        let read = |name: &str, rows: &Vec<Vec<u32>>| -> Result<FpMatrix, FpError> {
            if rows.len() != p as usize
                || rows.iter().any(|r| r.len() != p as usize || r.iter().any(|&x| x >= p))
            {
                return Err(FpError::MalformedFrame(format!(
                    "{name} must be {p}x{p} with entries in [0,{p})"
                )));
            }
            Ok(FpMatrix::from_fn(p, |r, c| rows[r][c] as i64))
        };
        Ok(Frame {
            pair,
            m: read("M", &file.m)?,
            t: read("T", &file.t)?,
            j: read("J", &file.j)?,
        })
    }
}

/// Deterministic construction of (M, T, J).
///
/// 1. least irreducible monic f of degree p (coefficients read as a base-p
///    number, constant term least significant);
/// 2. least generator g of (F_p[x]/f)^x in the same order, alpha = g^{(p^p-1)/q};
/// 3. M0 = companion matrix of the minimal polynomial of alpha;
/// 4. least invertible J0 with J0 M0 = M0^p J0, enumerating combinations of
///    the RREF null-space basis with the first coefficient most significant;
/// 5. J0 <- J0^s with s = 1 mod p and s = 0 mod ord(J0^p);
/// 6. conjugate by the Jordan chain of the least w with (J0-I)^{p-1} w != 0;
/// 7. T = least polynomial in M generating F_p[M]^x with T^{(p^p-1)/q} = M.
pub fn build_frame(pair: PrimePair) -> Result<Frame, FpError> {
    let p = pair.p;
    let d = p as usize;
    let unit = pair.unit_order();
    let unit_primes: Vec<u64> = factorize(unit).into_keys().collect();
    let cofactor = unit / pair.q as u64;

    // (1)
    let f = (0..(p as u64).pow(p))
        .map(|value| {
            let mut f = digits(value, p, d);
            f.push(1);
            f
        })
        .find(|f| is_irreducible(f, p))
        .ok_or(FpError::InternalSearchExhausted("irreducible polynomial"))?;

    // (2)
    let is_generator = |g: &[u32]| unit_primes.iter().all(|&r| !is_one(&poly_powmod(g, unit / r, &f, p)));
    let g = (1..(p as u64).pow(p))
        .map(|value| digits(value, p, d))
        .find(|g| is_generator(g))
        .ok_or(FpError::InternalSearchExhausted("unit group generator"))?;
    let alpha = poly_powmod(&g, cofactor, &f, p);

    // (3) minimal polynomial of alpha: express alpha^p in the basis alpha^0..alpha^{p-1}
    let mut powers: Vec<Vec<u32>> = Vec::with_capacity(d + 1);
    let mut cur = vec![1u32];
    for _ in 0..=d {
        let mut padded = cur.clone();
        padded.resize(d, 0);
        powers.push(padded);
        cur = poly_mulmod(&cur, &alpha, &f, p);
    }
    let coeffs = solve_combination(&powers[..d], &powers[d], p)
        .ok_or(FpError::InternalSearchExhausted("minimal polynomial of alpha"))?;
    let mut minpoly: Vec<u32> = coeffs.iter().map(|&c| (p - c) % p).collect();
    minpoly.push(1);
    let m0 = FpMatrix::companion(p, &minpoly);

    // (4) J0 M0 - M0^p J0 = 0 as a linear system in the p^2 entries of J0
    let mp = m0.pow_u(p as u64);
    let mut system = Vec::with_capacity(d * d);
    for r in 0..d {
        for c in 0..d {
            let mut row = vec![0u32; d * d];
            for k in 0..d {
                row[r * d + k] = (row[r * d + k] + m0.get(k, c)) % p;
                row[k * d + c] = (row[k * d + c] + p - mp.get(r, k)) % p;
            }
            system.push(row);
        }
    }
    let basis = nullspace(&system, d * d, p);
    let nb = basis.len();
    let mut j0 = None;
    for value in 1..(p as u64).pow(nb as u32) {
        let mut coef = digits(value, p, nb);
        coef.reverse();
        let flat: Vec<u32> = (0..d * d)
            .map(|x| coef.iter().zip(&basis).map(|(&c, b)| c * b[x]).sum::<u32>() % p)
            .collect();
        let cand = FpMatrix::from_fn(p, |r, c| flat[r * d + c] as i64);
        if cand.is_invertible() {
            j0 = Some(cand);
            break;
        }
    }
    let mut j0 = j0.ok_or(FpError::InternalSearchExhausted("Frobenius-inducing matrix"))?;

    // (5)
    let r = j0.pow_u(p as u64).order()?;
    let t_inv = inv_mod_p((r % p as u64) as u32, p) as u64;
    j0 = j0.pow_u(r * t_inv);

    // (6)
    let id = FpMatrix::identity(p);
    let nil = j0 - id;
    let top = nil.pow_u(p as u64 - 1);
    let w = FpVector::all(p)
        .find(|w| !top.mul_vec(w).is_zero())
        .ok_or(FpError::InternalSearchExhausted("Jordan chain start"))?;
    let mut chain = vec![w];
    for _ in 1..d {
        let next = nil.mul_vec(chain.last().unwrap());
        chain.push(next);
    }
    chain.reverse();
    let s = FpMatrix::from_columns(&chain);
    let s_inv = s.inv()?;
    let m = s_inv * m0 * s;
    let j = s_inv * j0 * s;
    if j != FpMatrix::jordan(p) {
        return Err(FpError::InternalSearchExhausted("Jordan normalisation"));
    }

    // (7)
    let mpowers: Vec<FpMatrix> = (0..d).map(|i| m.pow_u(i as u64)).collect();
    let t = (1..(p as u64).pow(p))
        .map(|value| {
            digits(value, p, d)
                .iter()
                .zip(&mpowers)
                .fold(FpMatrix::zero(p), |acc, (&c, mi)| acc + mi.scale(c))
        })
        .find(|t| {
            t.is_invertible()
                && t.pow_u(cofactor) == m
                && unit_primes.iter().all(|&r| t.pow_u(unit / r) != id)
        })
        .ok_or(FpError::InternalSearchExhausted("centraliser generator"))?;

    Ok(Frame { pair, m, t, j })
}

/// One item of a frame verification report.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameCheck {
    pub item: &'static str,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FrameReport {
    pub checks: Vec<FrameCheck>,
}

impl FrameReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_items(&self) -> Vec<&'static str> {
        self.checks.iter().filter(|c| !c.passed).map(|c| c.item).collect()
    }
}

fn krylov_rank(a: &FpMatrix, v: &FpVector) -> usize {
    let p = a.modulus();
    let mut rows = Vec::with_capacity(p as usize);
    let mut cur = *v;
    for _ in 0..p {
        rows.push(cur.entries().iter().map(|&x| x as u32).collect::<Vec<_>>());
        cur = a.mul_vec(&cur);
    }
    rank(&rows, p)
}

/// Checks the seven structural facts about (M, T, J) and reports each one.
pub fn verify_frame(frame: &Frame) -> FrameReport {
    let pair = frame.pair;
    let p = pair.p;
    let q = pair.q as u64;
    let unit = pair.unit_order();
    let (m, t, j) = (frame.m, frame.t, frame.j);
    let id = FpMatrix::identity(p);
    let mut checks = Vec::new();
    let mut push = |item: &'static str, passed: bool, detail: String| {
        checks.push(FrameCheck { item, passed, detail });
    };

    // (i) no proper nonzero M-invariant subspace: irreducible minimal
    // polynomial of degree p, and every nonzero vector generates V.
    let mp = m.minimal_polynomial();
    let cyclic_everywhere = FpVector::all(p).skip(1).all(|v| krylov_rank(&m, &v) == p as usize);
    let ok = mp.len() == p as usize + 1 && is_irreducible(&mp, p) && cyclic_everywhere;
    push(
        "i",
        ok,
        format!("minimal polynomial {:?}, every nonzero vector cyclic: {}", mp, cyclic_everywhere),
    );

    // (ii)
    let ok = (m - id).is_invertible();
    push("ii", ok, "M - I invertible".into());

    // (iii)
    let diffs: Vec<FpMatrix> = (1..=p as u64).map(|i| m.pow_u(i) - id).collect();
    let bad = FpVector::all(p).skip(1).find(|w| {
        let rows: Vec<Vec<u32>> = diffs
            .iter()
            .map(|d| d.mul_vec(w).entries().iter().map(|&x| x as u32).collect())
            .collect();
        rank(&rows, p) != p as usize
    });
    push(
        "iii",
        bad.is_none(),
        match bad {
            None => "(M^i - I)w, i = 1..p, span V for every nonzero w".into(),
            Some(w) => format!("span deficient for w = {w:?}"),
        },
    );

    // (iv)
    let t_order = t.order().unwrap_or(0);
    let ok = t * m == m * t && t_order == unit && t.pow_u(unit / q) == m;
    push("iv", ok, format!("ord(T) = {t_order}, T^{} = M: {}", unit / q, t.pow_u(unit / q) == m));

    // (v) sampled powers of T
    let stride = (unit / 128).max(1);
    let mut failures = Vec::new();
    let mut sampled = 0;
    for i in (0..unit).step_by(stride as usize) {
        let a = t.pow_u(i);
        if a.is_scalar() {
            continue;
        }
        sampled += 1;
        let mpa = a.minimal_polynomial();
        if !(mpa.len() == p as usize + 1 && is_irreducible(&mpa, p)) {
            failures.push(i);
        }
    }
    push(
        "v",
        failures.is_empty(),
        format!("{sampled} non-scalar powers of T sampled, failures at exponents {failures:?}"),
    );

    // (vi)
    let mj = j.minimal_polynomial();
    let expected: Vec<u32> = (0..=p)
        .map(|i| {
            // (X - 1)^p = X^p - 1 over F_p
            if i == 0 {
                p - 1
            } else if i == p {
                1
            } else {
                0
            }
        })
        .collect();
    let ok = mj == expected && j * m * j.inv().unwrap_or(id) == m.pow_u(p as u64) && j.pow_u(p as u64) == id;
    push("vi", ok, format!("minimal polynomial of J {:?}", mj));

    // (vii) normaliser {T^i J^j}
    let mut seen = HashSet::new();
    let mut conj_ok = true;
    let mut order_p_ok = true;
    let mut order_q_ok = true;
    let mpows: Vec<FpMatrix> = (0..q).map(|r| m.pow_u(r)).collect();
    let mut ti = id;
    for i in 0..unit {
        let mut a = ti;
        for jj in 0..p as u64 {
            seen.insert(a);
            let a_inv = match a.inv() {
                Ok(x) => x,
                Err(_) => {
                    conj_ok = false;
                    break;
                }
            };
            let s = pow_mod(p as u64, jj, q);
            if a * m * a_inv != mpows[s as usize] {
                conj_ok = false;
            }
            let is_order_p = a != id && a.pow_u(p as u64) == id;
            let predicted_p = i % (p as u64 - 1) == 0 && jj != 0;
            if is_order_p != predicted_p {
                order_p_ok = false;
            }
            let is_order_q = a != id && a.pow_u(q) == id;
            let predicted_q = jj == 0 && mpows[1..].contains(&a);
            if is_order_q != predicted_q {
                order_q_ok = false;
            }
            a = a * j;
        }
        ti = ti * t;
    }
    let size_ok = seen.len() as u64 == unit * p as u64;
    push(
        "vii",
        size_ok && conj_ok && order_p_ok && order_q_ok,
        format!(
            "|<T,J>| = {} (expected {}), conjugation law {}, order-p classification {}, order-q classification {}",
            seen.len(),
            unit * p as u64,
            conj_ok,
            order_p_ok,
            order_q_ok
        ),
    );

    FrameReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn mat(p: u32, rows: &[&[i64]]) -> FpMatrix {
        FpMatrix::from_rows(p, &rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>())
    }

    #[test]
    fn prime_pairs() {
        let a = validate_prime_pair(2, 3).unwrap();
        assert_eq!((a.p(), a.q(), a.n()), (2, 3, 12));
        let b = validate_prime_pair(3, 13).unwrap();
        assert_eq!(b.n(), 351);
        assert_eq!(validate_prime_pair(2, 5), Err(FpError::DivisibilityFails { p: 2, q: 5 }));
        assert_eq!(validate_prime_pair(4, 3), Err(FpError::NotPrime(4)));
        assert_eq!(validate_prime_pair(3, 1), Err(FpError::NotPrime(1)));
        assert_eq!(validate_prime_pair(5, 11).unwrap().n(), 34_375);
        assert_eq!(validate_prime_pair(5, 71).unwrap().n(), 221_875);
        assert_eq!(validate_prime_pair(7, 29), Err(FpError::UnsupportedPrime(7)));
    }

    #[test]
    fn matrix_basics() {
        let i = FpMatrix::identity(3);
        assert_eq!(i.inv().unwrap(), i);
        let a = mat(3, &[&[1, 2, 0], &[0, 1, 1], &[2, 0, 1]]);
        assert_eq!(a.pow(0).unwrap(), i);
        let ai = a.inv().unwrap();
        assert_eq!(a * ai, i);
        assert_eq!(a.pow(-2).unwrap() * a.pow(2).unwrap(), i);
        let singular = mat(3, &[&[1, 1, 0], &[2, 2, 0], &[0, 0, 1]]);
        assert_eq!(singular.inv(), Err(FpError::Singular));
        assert_eq!(singular.order(), Err(FpError::Singular));
        assert_eq!(i.order().unwrap(), 1);
    }

    #[test]
    fn bracket_power_examples() {
        let j = FpMatrix::jordan(2);
        assert_eq!(j.bracket_power(2), mat(2, &[&[0, 1], &[0, 0]]));
        assert_eq!(j.bracket_power(0), FpMatrix::zero(2));
        for k in 0..20 {
            assert_eq!(FpMatrix::identity(3).bracket_power(k), FpMatrix::scalar(3, (k % 3) as u32));
        }
    }

    #[test]
    fn bracket_power_recurrence_and_block_power_law() {
        for p in [2u32, 3, 5] {
            let a = FpMatrix::from_fn(p, |r, c| (r * 3 + c * 2 + 1) as i64);
            let v = FpVector::from_entries(p, &(0..p as i64).map(|x| x + 1).collect::<Vec<_>>());
            // repeated block multiplication [[A, v],[0, 1]]^k, tracking (A^k, top-right)
            let mut blk = (FpMatrix::identity(p), FpVector::zero(p));
            for k in 0..(p * p) as u64 {
                assert_eq!(a.bracket_power(k + 1), a.bracket_power(k) + a.pow_u(k));
                assert_eq!(blk.0, a.pow_u(k));
                assert_eq!(blk.1, a.bracket_power(k).mul_vec(&v));
                blk = (blk.0 * a, blk.0.mul_vec(&v) + blk.1);
            }
        }
    }

    #[test]
    fn vector_index_roundtrip() {
        for p in [2u32, 3] {
            for idx in 0..p.pow(p) {
                assert_eq!(FpVector::from_index(p, idx).index(), idx);
            }
        }
        let v = FpVector::from_entries(3, &[1, 0, 2]);
        assert_eq!(v.index(), 9 + 2);
    }

    #[test]
    fn irreducibility() {
        assert!(is_irreducible(&[1, 1, 1], 2));
        assert!(!is_irreducible(&[1, 0, 1], 2));
        assert!(is_irreducible(&[1, 2, 0, 1], 3));
        assert!(!is_irreducible(&[1, 1, 0, 1], 3));
    }

    #[test]
    fn frame_2_3_is_the_expected_one() {
        let pair = validate_prime_pair(2, 3).unwrap();
        let f = build_frame(pair).unwrap();
        let m = mat(2, &[&[0, 1], &[1, 1]]);
        let j = mat(2, &[&[1, 1], &[0, 1]]);
        assert_eq!(f.m(), m);
        assert_eq!(f.j(), j);
        assert_eq!(f.t(), m);
        // independent arithmetic: M^3 = I, J M J^{-1} = M^2, J^2 = I
        assert_eq!(m * m * m, FpMatrix::identity(2));
        assert_eq!(j * m * j, m * m);
        assert_eq!(j * j, FpMatrix::identity(2));
        assert_eq!(f.m().pow(3).unwrap(), FpMatrix::identity(2));
    }

    #[test]
    fn frames_verify_and_are_deterministic() {
        for (p, q) in [(2, 3), (3, 13), (5, 11)] {
            let pair = validate_prime_pair(p, q).unwrap();
            let f = build_frame(pair).unwrap();
            assert_eq!(f, build_frame(pair).unwrap());
            let report = verify_frame(&f);
            assert!(report.all_passed(), "{:?}", report);
            assert_eq!(f.m().order().unwrap(), q);
            assert_eq!(f.j().order().unwrap(), p);
            assert_eq!(f.t().order().unwrap(), pair.unit_order());
            assert!((f.m() - FpMatrix::identity(p as u32)).is_invertible());
            assert_eq!(f.j(), FpMatrix::jordan(p as u32));
        }
    }

    #[test]
    fn broken_frame_fails_items_vi_and_vii() {
        let pair = validate_prime_pair(2, 3).unwrap();
        let f = build_frame(pair).unwrap();
        let bad = Frame::from_parts(pair, f.m(), f.t(), FpMatrix::identity(2));
        let failed = verify_frame(&bad).failed_items();
        assert!(failed.contains(&"vi") && failed.contains(&"vii"), "{failed:?}");
        assert!(!failed.contains(&"i"));
    }

    #[test]
    fn frame_file_roundtrip() {
        let pair = validate_prime_pair(3, 13).unwrap();
        let f = build_frame(pair).unwrap();
        let json = serde_json::to_string(&f.to_file()).unwrap();
        assert!(json.starts_with("{\"p\":3,\"q\":13,\"M\":[["));
        let back: FrameFile = serde_json::from_str(&json).unwrap();
        assert_eq!(Frame::from_file(&back).unwrap(), f);
    }
}
