//! Command-line front end. Reports are `key=value` lines (or one JSON
//! object with `--json`) and never contain timings, so identical
//! invocations print identical bytes.

use crate::brace::{
    are_isomorphic, automorphism_permutations, brace_automorphisms, brace_from_regular, n_table, opposite_regular,
    Additive, BraceError, BraceFile, Effort, IdealPath, RegularSubgroupMap, SkewBrace, Which, SUBGROUP_BUDGET,
};
use crate::classify::{
    budget_from_env, census, free_order_q_subgroups, reduce_to_canonical, regular_overgroups, type_iii_generator,
    ClassifyError, GroupTag, FULL_CENSUS_MAX,
};
use crate::construct::{build_g, build_g_star, check_relations, ConstructError};
use crate::fpalg::{build_frame, validate_prime_pair, verify_frame, FpError, FpVector, Frame, PrimePair};
use crate::group::GroupProfile;
use crate::holo::{AutNElem, HoloError, Holomorph};
use crate::ybe::solution_from_brace;
use clap::{Args, Parser, Subcommand};
use std::fmt::Write as _;
use std::path::PathBuf;
use std::sync::Arc;
use thiserror::Error;

/// Orders up to which the generic ideal search and the raw automorphism
/// sweep run next to the fast paths.
const CROSS_CHECK_MAX: u32 = 64;

#[derive(Parser, Debug)]
#[command(name = "sbforge", version, about = "Simple skew braces of order p^p q")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Emit the frame (M, T, J) as JSON.
    Frame(Opts),
    /// Emit the brace file for B or Bopp.
    Build(Opts),
    /// Run the axiom, relation, simplicity and structure suites.
    Verify(Opts),
    /// Census of regular subgroups of Hol(N) up to conjugacy.
    Classify(Opts),
    /// Automorphism group of the brace.
    Aut(Opts),
    /// Yang-Baxter checks on the associated solution.
    Ybe(Opts),
    /// Convert a structural brace file to a table file.
    Export(Opts),
}

#[derive(Args, Debug, Clone)]
pub struct Opts {
    #[arg(long)]
    pub p: Option<u64>,
    #[arg(long)]
    pub q: Option<u64>,
    #[arg(long, default_value = "B", value_parser = parse_which)]
    pub which: Which,
    #[arg(long, default_value = "exhaustive")]
    pub effort: Effort,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long = "from-file")]
    pub from_file: Option<PathBuf>,
    #[arg(long, default_value_t = 1)]
    pub threads: usize,
    #[arg(long)]
    pub json: bool,
}

fn parse_which(s: &str) -> Result<Which, String> {
    match s.parse()? {
        Which::Custom => Err("expected B or Bopp".into()),
        w => Ok(w),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Budget(String),
    #[error("{0}")]
    Failed(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Failed(_) => 1,
            CliError::Usage(_) => 2,
            CliError::Budget(_) => 3,
        }
    }
}

impl From<FpError> for CliError {
    fn from(e: FpError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<HoloError> for CliError {
    fn from(e: HoloError) -> Self {
        match e {
            HoloError::BoundExceeded(_) => CliError::Budget(e.to_string()),
            HoloError::Field(f) => f.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<BraceError> for CliError {
    fn from(e: BraceError) -> Self {
        match e {
            BraceError::BudgetExceeded(_) | BraceError::NeedsTable(_) => CliError::Budget(e.to_string()),
            BraceError::Malformed(_) => CliError::Usage(e.to_string()),
            BraceError::Holo(h) => h.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<ConstructError> for CliError {
    fn from(e: ConstructError) -> Self {
        match e {
            ConstructError::Holo(h) => h.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

impl From<ClassifyError> for CliError {
    fn from(e: ClassifyError) -> Self {
        match e {
            ClassifyError::BudgetExceeded(_) => CliError::Budget(e.to_string()),
            ClassifyError::Brace(b) => b.into(),
            ClassifyError::Construct(c) => c.into(),
            other => CliError::Failed(other.to_string()),
        }
    }
}

/// Ordered key/value report with a running pass flag.
#[derive(Debug, Default)]
pub struct Report {
    entries: Vec<(String, String)>,
    failed: bool,
}

impl Report {
    pub fn kv(&mut self, key: impl Into<String>, value: impl ToString) {
        self.entries.push((key.into(), value.to_string()));
    }

    pub fn check(&mut self, key: impl Into<String>, passed: bool) -> bool {
        self.kv(key, if passed { "pass" } else { "fail" });
        self.failed |= !passed;
        passed
    }

    pub fn passed(&self) -> bool {
        !self.failed
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    pub fn render(&self, json: bool) -> String {
        if json {
            let map: serde_json::Map<String, serde_json::Value> =
                self.entries.iter().map(|(k, v)| (k.clone(), v.clone().into())).collect();
            let mut s = serde_json::to_string_pretty(&map).expect("report serialises");
            s.push('\n');
            return s;
        }
        let mut s = String::new();
        for (k, v) in &self.entries {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }
}

/// Output of one invocation: what to print and the exit status.
#[derive(Debug)]
pub struct Outcome {
    pub stdout: String,
    pub code: i32,
}

/// Runs a parsed command. Errors are folded into the outcome so the exit
/// status is always one of 0, 1, 2, 3.
pub fn run(cli: &Cli) -> Outcome {
    let result = match &cli.command {
        Command::Frame(o) => cmd_frame(o),
        Command::Build(o) => cmd_build(o),
        Command::Verify(o) => cmd_verify(o),
        Command::Classify(o) => cmd_classify(o),
        Command::Aut(o) => cmd_aut(o),
        Command::Ybe(o) => cmd_ybe(o),
        Command::Export(o) => cmd_export(o),
    };
    match result {
        Ok((stdout, ok)) => Outcome {
            stdout,
            code: if ok { 0 } else { 1 },
        },
        Err(e) => Outcome {
            stdout: format!("error={e}\n"),
            code: e.exit_code(),
        },
    }
}

type CmdResult = Result<(String, bool), CliError>;

fn finish(mut r: Report, json: bool) -> CmdResult {
    let ok = r.passed();
    r.kv("result", if ok { "pass" } else { "fail" });
    Ok((r.render(json), ok))
}

fn pair_from_flags(o: &Opts) -> Result<PrimePair, CliError> {
    match (o.p, o.q) {
        (Some(p), Some(q)) => Ok(validate_prime_pair(p, q)?),
        _ => Err(CliError::Usage("--p and --q are required".into())),
    }
}

fn holomorph(pair: PrimePair) -> Result<Arc<Holomorph>, CliError> {
    Ok(Arc::new(Holomorph::new(build_frame(pair)?)?))
}

fn regular_map(hol: &Holomorph, which: Which) -> Result<RegularSubgroupMap, CliError> {
    Ok(match which {
        Which::Bopp => build_g_star(hol)?,
        _ => build_g(hol)?,
    })
}

fn write_out(o: &Opts, json: &serde_json::Value, r: &mut Report) -> Result<Option<String>, CliError> {
    let mut text = serde_json::to_string_pretty(json).expect("values serialise");
    text.push('\n');
    match &o.out {
        Some(path) => {
            std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
            r.kv("out", path.display());
            Ok(None)
        }
        None => Ok(Some(text)),
    }
}

fn emit(o: &Opts, json: &serde_json::Value, r: Report) -> CmdResult {
    let mut r = r;
    match write_out(o, json, &mut r)? {
        Some(text) => Ok((text, r.passed())),
        None => finish(r, o.json),
    }
}

fn cmd_frame(o: &Opts) -> CmdResult {
    let pair = pair_from_flags(o)?;
    let frame = build_frame(pair)?;
    let mut r = Report::default();
    r.kv("p", pair.p());
    r.kv("q", pair.q());
    frame_checks(&frame, &mut r);
    let json = serde_json::to_value(frame.to_file()).expect("frames serialise");
    emit(o, &json, r)
}

fn frame_checks(frame: &Frame, r: &mut Report) {
    let report = verify_frame(frame);
    for c in &report.checks {
        r.check(format!("frame.{}", c.item), c.passed);
    }
}

fn cmd_build(o: &Opts) -> CmdResult {
    let pair = pair_from_flags(o)?;
    let hol = holomorph(pair)?;
    let brace = brace_from_regular(&hol, &regular_map(&hol, o.which)?, o.which)?;
    let mut r = Report::default();
    r.kv("n", brace.n());
    r.kv("which", o.which);
    r.kv("layout", if brace.is_table_mode() { "table" } else { "structural" });
    emit(o, &brace.to_json(), r)
}

/// A brace read from disk together with the Holomorph it lives in.
struct Loaded {
    hol: Arc<Holomorph>,
    brace: SkewBrace,
    which: Which,
    structural: bool,
    original: serde_json::Value,
}

fn load(path: &PathBuf, o: &Opts) -> Result<Loaded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let original: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
    let loaded = match SkewBrace::from_json(&original)? {
        BraceFile::Table(b) => {
            let pair = validate_prime_pair(b.p() as u64, b.q() as u64)?;
            let hol = holomorph(pair)?;
            if b.n() != hol.n() {
                return Err(CliError::Usage(format!("n = {} does not match p^p q = {}", b.n(), hol.n())));
            }
            let dot = b.dot_table();
            let nt = n_table(&hol);
            let n = b.n() as usize;
            let additive = if dot == nt {
                Additive::N
            } else if (0..n * n).all(|x| dot[x] == nt[(x % n) * n + x / n]) {
                Additive::NOpposite
            } else {
                Additive::Other
            };
            let which = b.provenance().which;
            Loaded {
                hol,
                brace: b.with_additive(additive),
                which,
                structural: false,
                original,
            }
        }
        BraceFile::Structural { which, frame, map } => {
            let hol = Arc::new(Holomorph::new(frame)?);
            let brace = brace_from_regular(&hol, &map, which)?;
            Loaded {
                hol,
                brace,
                which,
                structural: true,
                original,
            }
        }
    };
    for (flag, v) in [(o.p, loaded.hol.p()), (o.q, loaded.hol.q())] {
        if flag.is_some_and(|f| f != v as u64) {
            return Err(CliError::Usage("--p/--q disagree with the file".into()));
        }
    }
    Ok(loaded)
}

fn profile_text(p: &GroupProfile) -> String {
    p.order_profile.iter().map(|(o, c)| format!("{o}:{c}")).collect::<Vec<_>>().join(",")
}

fn join<T: ToString>(xs: impl IntoIterator<Item = T>) -> String {
    xs.into_iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn cmd_verify(o: &Opts) -> CmdResult {
    let (hol, brace, which, from_file) = match &o.from_file {
        Some(path) => {
            let l = load(path, o)?;
            let mut r = Report::default();
            r.kv("source", path.display());
            r.kv("layout", if l.structural { "structural" } else { "table" });
            if !l.structural {
                r.check("roundtrip", l.brace.to_json() == l.original);
            }
            (l.hol, l.brace, l.which, Some(r))
        }
        None => {
            let pair = pair_from_flags(o)?;
            let hol = holomorph(pair)?;
            let g = regular_map(&hol, o.which)?;
            let b = brace_from_regular(&hol, &g, o.which)?;
            (hol, b, o.which, None)
        }
    };
    let from_file_flag = from_file.is_some();
    let mut r = from_file.unwrap_or_default();
    let (p, n) = (hol.p(), hol.n());
    r.kv("p", p);
    r.kv("q", hol.q());
    r.kv("n", n);
    r.kv("which", which);
    r.kv("effort", o.effort);
    frame_checks(hol.frame(), &mut r);

    let rel = check_relations(&hol);
    r.kv("relations.count", rel.checks.len());
    if !r.check("relations", rel.all_passed()) {
        r.kv("relations.failed", rel.failed().join(";"));
    }

    let ax = brace.verify_axioms(o.effort, o.threads);
    for c in &ax.checks {
        r.check(format!("axioms.{}", c.name), c.passed);
        r.kv(format!("axioms.{}.checked", c.name), c.checked);
        if let Some(w) = &c.witness {
            r.kv(format!("axioms.{}.witness", c.name), join(w));
        }
    }
    if !ax.checks.iter().all(|c| c.passed) {
        return finish(r, o.json);
    }

    let lam = brace.verify_lambda(o.effort);
    r.check("lambda.dot_automorphisms", lam.dot_automorphisms);
    r.check("lambda.circ_homomorphism", lam.circ_homomorphism);
    if let Some(w) = &lam.witness {
        r.kv("lambda.witness", join(w));
    }

    let path = brace.default_ideal_path();
    let ideals = brace.ideals(path)?;
    r.kv("simplicity.path", if path == IdealPath::Fast { "fast" } else { "generic" });
    r.kv("simplicity.ideal_orders", join(ideals.iter().map(|i| i.elements.len())));
    r.check("simplicity", ideals.len() == 2);
    if n <= CROSS_CHECK_MAX && path == IdealPath::Fast {
        let generic = IdealPath::Generic { budget: SUBGROUP_BUDGET };
        r.check("simplicity.paths_agree", brace.enumerate_ideals(path)? == brace.enumerate_ideals(generic)?);
    }

    let s = brace.identify_structure()?;
    for (name, g) in [("dot", &s.dot), ("circ", &s.circ)] {
        r.kv(format!("structure.{name}.order_profile"), profile_text(g));
        r.kv(format!("structure.{name}.sylow_p_normal"), g.sylow_p_normal);
        r.kv(format!("structure.{name}.sylow_q_normal"), g.sylow_q_normal);
    }
    r.kv("structure.circ.sylow_p_exponent", s.circ.sylow_p_exponent);
    r.kv(
        "structure.circ.sylow_p_class",
        s.circ.sylow_p_class.map_or("none".to_string(), |c| c.to_string()),
    );
    if which != Which::Custom {
        let pu = p as usize;
        r.check(
            "structure",
            s.dot.sylow_p_normal
                && !s.dot.sylow_q_normal
                && !s.circ.sylow_p_normal
                && s.circ.sylow_q_normal
                && s.circ.sylow_p_exponent == pu * pu
                && s.circ.sylow_p_class == Some(pu - 1),
        );
    }

    if !from_file_flag {
        let g = build_g(&hol)?;
        let gs = build_g_star(&hol)?;
        r.kv("non_isomorphic.candidates", hol.aut_order());
        r.check("non_isomorphic", are_isomorphic(&hol, &g, &gs).is_none());
        let mine = regular_map(&hol, which)?;
        let other = opposite_regular(&hol, &mine);
        r.check("opposite.double_star", opposite_regular(&hol, &other) == mine);
        let other_which = if which == Which::B { Which::Bopp } else { Which::B };
        let ob = brace_from_regular(&hol, &other, other_which)?;
        let inv: Vec<u32> = (0..n).map(|a| brace.dot_inv(a)).collect();
        r.check("opposite.inversion_isomorphism", brace.opposite_brace().is_isomorphism_to(&ob, &inv));
    }
    finish(r, o.json)
}

fn aut_text(hol: &Holomorph, a: &AutNElem) -> String {
    if a.i == 0 && a.j == 1 && a.w.is_zero() {
        "conj [[J,0],[0,1]]".into()
    } else if *a == hol.aut_identity() {
        "identity".into()
    } else {
        a.to_string()
    }
}

fn cmd_aut(o: &Opts) -> CmdResult {
    let pair = pair_from_flags(o)?;
    let hol = holomorph(pair)?;
    let brace = brace_from_regular(&hol, &regular_map(&hol, o.which)?, o.which)?;
    let auts = brace_automorphisms(&hol, &brace);
    let mut r = Report::default();
    r.kv("p", pair.p());
    r.kv("q", pair.q());
    r.kv("which", o.which);
    r.kv("order", auts.order);
    r.kv("cyclic", auts.cyclic_generator.is_some());
    let summary = match &auts.cyclic_generator {
        Some(g) => format!("order {}, cyclic, generator = {}", auts.order, aut_text(&hol, g)),
        None => format!("order {}, not cyclic", auts.order),
    };
    r.kv("members", auts.members.iter().map(|a| a.to_string()).collect::<Vec<_>>().join(";"));
    let set: std::collections::BTreeSet<_> = auts.members.iter().copied().collect();
    let closed = auts
        .members
        .iter()
        .all(|a| set.contains(&hol.aut_inv(a)) && auts.members.iter().all(|b| set.contains(&hol.aut_compose(a, b))));
    r.check("group", closed);
    r.check("order_is_p", auts.order == pair.p() as usize && auts.cyclic_generator.is_some());
    if hol.n() <= CROSS_CHECK_MAX {
        r.check(
            "raw_sweep",
            automorphism_permutations(&hol, &auts.members) == brace.raw_automorphisms()?,
        );
    }
    r.kv("summary", summary);
    finish(r, o.json)
}

fn cmd_classify(o: &Opts) -> CmdResult {
    let pair = pair_from_flags(o)?;
    let hol = holomorph(pair)?;
    let budget = budget_from_env();
    let c = census(&hol, hol.n(), budget)?;
    let mut r = Report::default();
    r.kv("p", pair.p());
    r.kv("q", pair.q());
    r.kv("n", c.n);
    r.kv("mode", serde_json::to_value(c.mode).expect("modes serialise").as_str().unwrap_or_default());
    r.kv("regular_subgroups_found", c.regular_subgroups_found);
    r.kv("classes", c.entries.len());
    for e in &c.entries {
        let k = format!("class.{}", e.iso_class);
        r.kv(format!("{k}.simple"), e.simple);
        r.kv(format!("{k}.dot"), e.dot_tag);
        r.kv(format!("{k}.circ"), e.circ_tag);
        r.kv(format!("{k}.ideal_orders"), join(&e.ideal_orders));
        r.kv(format!("{k}.opposite"), e.opposite_class.map_or("none".to_string(), |x| x.to_string()));
        r.kv(format!("{k}.generators"), e.generators.join(";"));
    }
    let opt = |x: Option<usize>| x.map_or("none".to_string(), |x| x.to_string());
    r.kv("g_class", opt(c.g_class));
    r.kv("g_star_class", opt(c.g_star_class));
    let simple = c.simple_classes();
    let pair_ok = r.check("simple_pair", c.simple_pair_is_g_and_g_star());
    r.check(
        "simple_tags",
        simple.iter().all(|e| e.dot_tag == GroupTag::TypeIi && e.circ_tag == GroupTag::TypeIii),
    );
    let (pp, q) = (hol.p_to_p() as usize, hol.q() as usize);
    r.check(
        "non_simple_ideals",
        c.entries
            .iter()
            .filter(|e| !e.simple)
            .all(|e| e.ideal_orders.iter().any(|&x| x == pp || x == q)),
    );
    if hol.n() <= FULL_CENSUS_MAX {
        let mut empty = true;
        for k in 1..=hol.q() - 2 {
            for v in FpVector::all(hol.p()) {
                empty &= regular_overgroups(&hol, &type_iii_generator(&hol, k, v), budget)?.is_empty();
            }
        }
        r.check("type_iii_overgroups_empty", empty);
        let subs = free_order_q_subgroups(&hol);
        r.kv("free_order_q_subgroups", subs.len());
        r.check("order_q_reduction", subs.iter().all(|s| reduce_to_canonical(&hol, s).is_ok()));
    }
    let summary = if pair_ok {
        format!("simple classes: {}; mutually opposite", simple.len())
    } else {
        format!("simple classes: {}", simple.len())
    };
    r.kv("summary", summary);
    if o.json {
        let mut s = serde_json::to_string_pretty(&c.entries).expect("census serialises");
        s.push('\n');
        return Ok((s, r.passed()));
    }
    finish(r, false)
}

fn cmd_ybe(o: &Opts) -> CmdResult {
    let (brace, which) = match &o.from_file {
        Some(path) => {
            let l = load(path, o)?;
            (l.brace, l.which)
        }
        None => {
            let pair = pair_from_flags(o)?;
            let hol = holomorph(pair)?;
            (brace_from_regular(&hol, &regular_map(&hol, o.which)?, o.which)?, o.which)
        }
    };
    let sol = solution_from_brace(&brace)?;
    let mut r = Report::default();
    r.kv("n", sol.n());
    r.kv("which", which);
    r.kv("effort", o.effort);
    r.check("bijective", sol.is_bijective());
    let braid = sol.check_braid(o.effort, o.threads);
    r.check("braid", braid.passed);
    r.kv("braid.checked", braid.checked);
    if let Some(w) = braid.witness {
        r.kv("braid.witness", join(w));
    }
    r.check("nondegenerate", sol.check_nondegenerate());
    r.kv("involutive", sol.check_involutive());
    if let Some(path) = &o.out {
        let mut text = serde_json::to_string(&sol.to_json()).expect("solutions serialise");
        text.push('\n');
        std::fs::write(path, text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?;
        r.kv("out", path.display());
    }
    finish(r, o.json)
}

fn cmd_export(o: &Opts) -> CmdResult {
    let path = o
        .from_file
        .as_ref()
        .ok_or_else(|| CliError::Usage("export needs --from-file".into()))?;
    let l = load(path, o)?;
    let table = l.brace.to_table_mode()?;
    let mut r = Report::default();
    r.kv("source", path.display());
    r.kv("layout.in", if l.structural { "structural" } else { "table" });
    r.kv("layout.out", "table");
    r.kv("n", table.n());
    emit(o, &table.to_json(), r)
}
