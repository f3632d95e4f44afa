//! Acceptance run: one PASS/FAIL line per criterion, nonzero exit if any
//! criterion fails.

use sbforge::brace::{
    are_isomorphic, automorphism_permutations, brace_automorphisms, brace_from_regular, opposite_regular, Effort,
    IdealPath, SkewBrace, Which, SUBGROUP_BUDGET,
};
use sbforge::classify::{
    census, free_order_q_subgroups, reduce_to_canonical, regular_overgroups, type_iii_generator, CensusMode,
    DEFAULT_BUDGET,
};
use sbforge::construct::{build_g, build_g_star, check_relations};
use sbforge::fpalg::{build_frame, validate_prime_pair, FpVector};
use sbforge::holo::{AutNElem, Holomorph};
use sbforge::ybe::solution_from_brace;
use std::process::Command;
use std::sync::Arc;
use std::time::{Duration, Instant};

const PAIRS: [(u64, u64); 2] = [(2, 3), (3, 13)];

struct Fixture {
    hol: Arc<Holomorph>,
    b: SkewBrace,
    bo: SkewBrace,
}

fn fixture(p: u64, q: u64) -> Fixture {
    let hol = Arc::new(Holomorph::new(build_frame(validate_prime_pair(p, q).unwrap()).unwrap()).unwrap());
    let b = brace_from_regular(&hol, &build_g(&hol).unwrap(), Which::B).unwrap();
    let bo = brace_from_regular(&hol, &build_g_star(&hol).unwrap(), Which::Bopp).unwrap();
    Fixture { hol, b, bo }
}

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn construction_and_axioms(fx: &[Fixture]) -> Outcome {
    let mut notes = Vec::new();
    for f in fx {
        let n = f.hol.n();
        let g = build_g(&f.hol).map_err(|e| e.to_string())?;
        ensure(g.len() == n as usize && g.is_closed(&f.hol), format!("G is not regular of order {n}"))?;
        let start = Instant::now();
        let r = f.b.verify_axioms(Effort::Exhaustive, 1);
        let took = start.elapsed();
        ensure(r.all_passed(), format!("axiom violation at n={n}: {r:?}"))?;
        let checked = r.check("brace_relation").map(|c| c.checked).unwrap_or(0);
        ensure(checked == (n as u64).pow(3), format!("only {checked} triples at n={n}"))?;
        if n == 351 {
            ensure(took < Duration::from_secs(10), format!("n=351 axioms took {took:?}"))?;
        }
        notes.push(format!("n={n}: {checked} triples in {:.2}s", took.as_secs_f64()));
    }
    Ok(notes.join("; "))
}

fn relations(fx: &[Fixture]) -> Outcome {
    let mut notes = Vec::new();
    for f in fx {
        let r = check_relations(&f.hol);
        ensure(r.all_passed(), format!("failed at n={}: {:?}", f.hol.n(), r.failed()))?;
        notes.push(format!("n={}: {} relations", f.hol.n(), r.checks.len()));
    }
    Ok(notes.join("; "))
}

fn simplicity(fx: &[Fixture]) -> Outcome {
    for f in fx {
        for b in [&f.b, &f.bo] {
            ensure(b.is_simple(IdealPath::Fast).map_err(|e| e.to_string())?, format!("not simple at n={}", b.n()))?;
            if b.n() == 12 {
                let fast = b.enumerate_ideals(IdealPath::Fast).map_err(|e| e.to_string())?;
                let generic = b
                    .enumerate_ideals(IdealPath::Generic { budget: SUBGROUP_BUDGET })
                    .map_err(|e| e.to_string())?;
                ensure(fast == generic, "fast and generic ideal paths disagree at n=12")?;
            }
        }
    }
    Ok("B and Bopp simple at n=12 and n=351; ideal paths agree at n=12".into())
}

fn non_isomorphism(fx: &[Fixture]) -> Outcome {
    let mut notes = Vec::new();
    for (f, expect) in fx.iter().zip([24u64, 2106]) {
        let candidates = f.hol.aut_enumerate().len() as u64;
        ensure(candidates == expect && f.hol.aut_order() as u64 == expect, format!("|Aut(N)| = {candidates}"))?;
        let g = build_g(&f.hol).unwrap();
        let gs = build_g_star(&f.hol).unwrap();
        ensure(are_isomorphic(&f.hol, &g, &gs).is_none(), format!("G and G* conjugate at n={}", f.hol.n()))?;
        notes.push(format!("{candidates} candidates rejected"));
    }
    Ok(notes.join("; "))
}

fn automorphisms(fx: &[Fixture]) -> Outcome {
    let mut notes = Vec::new();
    for f in fx {
        let p = f.hol.p();
        let auts = brace_automorphisms(&f.hol, &f.b);
        let conj_j = AutNElem { i: 0, j: 1, w: FpVector::zero(p) };
        ensure(auts.order == p as usize, format!("order {} at p={p}", auts.order))?;
        ensure(auts.cyclic_generator == Some(conj_j), "conj by [[J,0],[0,1]] is not the generator")?;
        if f.hol.n() == 12 {
            let raw = f.b.raw_automorphisms().map_err(|e| e.to_string())?;
            ensure(
                automorphism_permutations(&f.hol, &auts.members) == raw,
                "raw sweep over dot-automorphisms disagrees",
            )?;
            ensure(f.b.dot_group().unwrap().automorphisms().len() == 24, "expected 24 dot-automorphisms")?;
        }
        notes.push(format!("p={p}: order {}, cyclic", auts.order));
    }
    Ok(notes.join("; "))
}

fn classification(f: &Fixture) -> Outcome {
    let hol = &f.hol;
    ensure(hol.hol_order() == 288, "Hol(N) at n=12 should have 288 elements")?;
    let c = census(hol, 12, DEFAULT_BUDGET).map_err(|e| e.to_string())?;
    ensure(c.mode == CensusMode::Full, "census did not search all of Hol(N)")?;
    ensure(c.simple_classes().len() == 2, format!("{} simple classes", c.simple_classes().len()))?;
    ensure(c.simple_pair_is_g_and_g_star(), "simple classes are not those of G and G*")?;
    for k in 1..=hol.q() - 2 {
        for v in FpVector::all(hol.p()) {
            let found = regular_overgroups(hol, &type_iii_generator(hol, k, v), DEFAULT_BUDGET).map_err(|e| e.to_string())?;
            ensure(found.is_empty(), format!("TypeIII k={k} v={v} has a regular overgroup"))?;
        }
    }
    let subs = free_order_q_subgroups(hol);
    for s in &subs {
        reduce_to_canonical(hol, s).map_err(|e| e.to_string())?;
    }
    Ok(format!(
        "{} classes, 2 simple; {} free order-q subgroups each of one type",
        c.entries.len(),
        subs.len()
    ))
}

fn structure(fx: &[Fixture]) -> Outcome {
    for f in fx {
        let p = f.hol.p() as usize;
        for b in [&f.b, &f.bo] {
            let s = b.identify_structure().map_err(|e| e.to_string())?;
            ensure(s.dot.sylow_p_normal && !s.dot.sylow_q_normal, format!("dot pattern wrong at p={p}"))?;
            ensure(!s.circ.sylow_p_normal && s.circ.sylow_q_normal, format!("circ pattern wrong at p={p}"))?;
            ensure(s.circ.sylow_p_exponent == p * p, format!("exponent {}", s.circ.sylow_p_exponent))?;
            ensure(s.circ.sylow_p_class == Some(p - 1), format!("class {:?}", s.circ.sylow_p_class))?;
        }
    }
    Ok("circ Sylow-p: exponent 4 class 1 at n=12, exponent 9 class 2 at n=351".into())
}

fn opposites(fx: &[Fixture]) -> Outcome {
    for f in fx {
        let g = build_g(&f.hol).unwrap();
        let gs = opposite_regular(&f.hol, &g);
        ensure(gs == build_g_star(&f.hol).unwrap(), "opposite_regular(G) differs from G*")?;
        ensure(opposite_regular(&f.hol, &gs) == g, "(G*)* != G")?;
        if f.hol.n() == 12 {
            let inv: Vec<u32> = (0..12).map(|a| f.b.dot_inv(a)).collect();
            ensure(f.b.opposite_brace().is_isomorphism_to(&f.bo, &inv), "inversion is not an isomorphism")?;
        }
    }
    Ok("inversion isomorphism at n=12; (G*)* = G at both pairs".into())
}

fn ybe(fx: &[Fixture]) -> Outcome {
    let mut notes = Vec::new();
    for f in fx {
        let n = f.hol.n();
        let s = solution_from_brace(&f.b).map_err(|e| e.to_string())?;
        let start = Instant::now();
        let r = s.check_braid(Effort::Exhaustive, 1);
        let took = start.elapsed();
        ensure(r.passed, format!("braid fails at n={n}: {:?}", r.witness))?;
        ensure(s.check_nondegenerate(), format!("degenerate at n={n}"))?;
        ensure(!s.check_involutive(), format!("involutive at n={n}"))?;
        if n == 351 {
            ensure(took < Duration::from_secs(30), format!("braid sweep took {took:?}"))?;
        }
        notes.push(format!("n={n}: {} triples in {:.2}s", r.checked, took.as_secs_f64()));
    }
    Ok(notes.join("; "))
}

fn cli_suites() -> Outcome {
    let runs: &[&[&str]] = &[
        &["verify", "--p", "2", "--q", "3", "--which", "B", "--effort", "exhaustive"],
        &["verify", "--p", "2", "--q", "3", "--which", "Bopp", "--effort", "exhaustive"],
        &["verify", "--p", "3", "--q", "13", "--which", "B", "--effort", "exhaustive"],
        &["verify", "--p", "3", "--q", "13", "--which", "Bopp", "--effort", "exhaustive"],
        &["aut", "--p", "2", "--q", "3", "--which", "B"],
        &["aut", "--p", "3", "--q", "13", "--which", "B"],
        &["classify", "--p", "2", "--q", "3"],
        &["ybe", "--p", "2", "--q", "3", "--which", "B"],
        &["ybe", "--p", "3", "--q", "13", "--which", "B"],
    ];
    let exe = env!("CARGO_BIN_EXE_sbforge");
    for args in runs {
        let first = Command::new(exe).args(*args).output().map_err(|e| e.to_string())?;
        let second = Command::new(exe).args(*args).output().map_err(|e| e.to_string())?;
        let line = args.join(" ");
        ensure(first.status.code() == Some(0), format!("`{line}` exited {:?}", first.status.code()))?;
        ensure(first.stdout == second.stdout, format!("`{line}` output differs between runs"))?;
    }
    Ok(format!("{} commands, exit 0, byte-identical reruns", runs.len()))
}

fn main() {
    let fx: Vec<Fixture> = PAIRS.iter().map(|&(p, q)| fixture(p, q)).collect();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("construction and axioms", Box::new(|| construction_and_axioms(&fx))),
        ("relations", Box::new(|| relations(&fx))),
        ("simplicity", Box::new(|| simplicity(&fx))),
        ("non-isomorphism", Box::new(|| non_isomorphism(&fx))),
        ("automorphism group", Box::new(|| automorphisms(&fx))),
        ("classification", Box::new(|| classification(&fx[0]))),
        ("structure identification", Box::new(|| structure(&fx))),
        ("opposite coherence", Box::new(|| opposites(&fx))),
        ("Yang-Baxter", Box::new(|| ybe(&fx))),
        ("CLI suites", Box::new(cli_suites)),
    ];
    let mut failures = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("criterion {:>2} {name}: PASS ({detail})", i + 1),
            Err(why) => {
                failures += 1;
                println!("criterion {:>2} {name}: FAIL ({why})", i + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria pass", criteria.len() - failures, criteria.len());
    if failures > 0 {
        std::process::exit(1);
    }
}
