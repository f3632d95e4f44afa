//! Set-theoretic solutions of the Yang-Baxter equation from skew braces:
//! r(a, b) = (λ_a(b), λ_a(b)^{-1} ∘ a ∘ b), inverse taken in (B,∘).

use crate::brace::{BraceError, Effort, SkewBrace, SAMPLE_SEED, TABLE_BUDGET};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct YbeSolution {
    n: u32,
    r: Vec<(u32, u32)>,
}

#[derive(Serialize)]
struct SolutionFile<'a> {
    n: u32,
    r: Vec<&'a [(u32, u32)]>,
}

/// Outcome of the braid check with the first failing triple.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BraidReport {
    pub passed: bool,
    pub checked: u64,
    pub witness: Option<[u32; 3]>,
}

pub fn solution_from_brace(b: &SkewBrace) -> Result<YbeSolution, BraceError> {
    let n = b.n();
    if n > TABLE_BUDGET {
        return Err(BraceError::NeedsTable(n));
    }
    let mut r = Vec::with_capacity((n * n) as usize);
    for a in 0..n {
        let lam = b.lambda_map(a);
        for c in 0..n {
            let x = lam[c as usize];
            r.push((x, b.circ(b.circ(b.circ_inv(x), a), c)));
        }
    }
    Ok(YbeSolution { n, r })
}

impl YbeSolution {
    /// From an explicit table indexed by a * n + b.
    pub fn from_table(n: u32, r: Vec<(u32, u32)>) -> Self {
        assert_eq!(r.len(), (n * n) as usize);
        YbeSolution { n, r }
    }

    /// The flip (a, b) -> (b, a).
    pub fn flip(n: u32) -> Self {
        YbeSolution {
            n,
            r: (0..n).flat_map(|a| (0..n).map(move |b| (b, a))).collect(),
        }
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    #[inline]
    pub fn apply(&self, a: u32, b: u32) -> (u32, u32) {
        self.r[(a * self.n + b) as usize]
    }

    fn braid_at(&self, a: u32, b: u32, c: u32) -> bool {
        let (x1, y1) = self.apply(a, b);
        let (y2, z2) = self.apply(y1, c);
        let (x3, y3) = self.apply(x1, y2);
        let (b1, c1) = self.apply(b, c);
        let (a2, b2) = self.apply(a, b1);
        let (b3, c3) = self.apply(b2, c1);
        (x3, y3, z2) == (a2, b3, c3)
    }

    fn braid_range(&self, range: std::ops::Range<u32>) -> Option<[u32; 3]> {
        for a in range {
            for b in 0..self.n {
                for c in 0..self.n {
                    if !self.braid_at(a, b, c) {
                        return Some([a, b, c]);
                    }
                }
            }
        }
        None
    }

    /// (r×id)(id×r)(r×id) = (id×r)(r×id)(id×r) on all triples, or on a
    /// seeded sample.
    pub fn check_braid(&self, effort: Effort, threads: usize) -> BraidReport {
        let n = self.n;
        match effort {
            Effort::Exhaustive => {
                let threads = threads.max(1).min(n as usize) as u32;
                let chunk = n.div_ceil(threads);
                let parts: Vec<Option<[u32; 3]>> = std::thread::scope(|s| {
                    let hs: Vec<_> = (0..threads)
                        .map(|t| {
                            let lo = (t * chunk).min(n);
                            let hi = ((t + 1) * chunk).min(n);
                            s.spawn(move || self.braid_range(lo..hi))
                        })
                        .collect();
                    hs.into_iter().map(|h| h.join().expect("worker panicked")).collect()
                });
                let witness = parts.into_iter().flatten().next();
                BraidReport {
                    passed: witness.is_none(),
                    checked: (n as u64).pow(3),
                    witness,
                }
            }
            Effort::Sampled(count) => {
                let mut rng = ChaCha8Rng::seed_from_u64(SAMPLE_SEED);
                let witness = (0..count)
                    .map(|_| [rng.gen_range(0..n), rng.gen_range(0..n), rng.gen_range(0..n)])
                    .find(|&[a, b, c]| !self.braid_at(a, b, c));
                BraidReport {
                    passed: witness.is_none(),
                    checked: count,
                    witness,
                }
            }
        }
    }

    /// r is a bijection of B × B.
    pub fn is_bijective(&self) -> bool {
        let n = self.n as usize;
        let mut seen = vec![false; n * n];
        self.r
            .iter()
            .all(|&(x, y)| !std::mem::replace(&mut seen[x as usize * n + y as usize], true))
    }

    /// b ↦ r(a, b)_1 and a ↦ r(a, b)_2 are bijections for every fixed
    /// partner.
    pub fn check_nondegenerate(&self) -> bool {
        let n = self.n;
        let perm = |f: &dyn Fn(u32) -> u32| {
            let mut seen = vec![false; n as usize];
            (0..n).all(|x| !std::mem::replace(&mut seen[f(x) as usize], true))
        };
        (0..n).all(|a| perm(&|b| self.apply(a, b).0)) && (0..n).all(|b| perm(&|a| self.apply(a, b).1))
    }

    /// r ∘ r = id.
    pub fn check_involutive(&self) -> bool {
        (0..self.n).all(|a| (0..self.n).all(|b| {
            let (x, y) = self.apply(a, b);
            self.apply(x, y) == (a, b)
        }))
    }

    pub fn to_json(&self) -> serde_json::Value {
        let f = SolutionFile {
            n: self.n,
            r: self.r.chunks(self.n as usize).collect(),
        };
        serde_json::to_value(f).expect("solutions serialise")
    }
}
