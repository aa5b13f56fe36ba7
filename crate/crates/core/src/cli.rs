//! Command-line front end. Every command returns an exit status and the
//! document it produced, so the commands can be driven from tests.
//!
//! Exit status: 0 found/passed, 1 negative result, 2 budget or refinement
//! failure, 3 usage, I/O or parse error.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::axioms::{check_claims, check_dta, check_dta_claims, check_pnu, Report, PAIR_BUDGET};
use crate::catalog::{AlgebraCatalog, CatalogEntry};
use crate::eliminate::{check_stability, eliminate, ElimConfig, ElimRun, GoalValue, StageTrace};
use crate::error::Error;
use crate::eval::OracleContext;
use crate::filter::{FfsFilter, Verdict};
use crate::hindman::{Coloring, IhtProblem, IhtSolution, SearchBudget};
use crate::parse::{parse_program, parse_set_expr};
use crate::sets::{AscendingSeq, BlockSum, Horizon};
use crate::summable::{check_ss, eliminate_ss, TailRecord};

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_RESOURCE: i32 = 2;
pub const EXIT_USAGE: i32 = 3;

#[derive(Parser, Debug)]
#[command(name = "ultrafin", version, about = "Finite approximations of idempotent ultrafilters")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Find a sequence whose finite sums are monochromatic.
    SolveHt(SolveArgs),
    /// Iterated version: tail k homogeneous for coloring k.
    SolveIht(SolveArgs),
    /// Run oracle elimination on a program.
    Eliminate(ElimArgs),
    /// Elimination with finite-sum tails re-inserted after each stage.
    EliminateSs(ElimArgs),
    /// Check a serialized filter and catalog.
    Verify(VerifyArgs),
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Json,
    Text,
}

#[derive(Args, Debug, Clone)]
pub struct Common {
    /// Exclusive upper bound of the evaluation window.
    #[arg(long, default_value_t = 4096)]
    pub horizon: u64,
    /// Fewest generators a witness tail must keep.
    #[arg(long, default_value_t = 1)]
    pub min_tail: usize,
    /// Maximum number of search nodes.
    #[arg(long, default_value_t = 2_000_000)]
    pub budget: u64,
    /// Seed for random colorings that do not carry their own.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Write the document here instead of stdout.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Args, Debug, Clone)]
pub struct SolveArgs {
    /// Coloring spec: inline JSON or a path to a JSON file. Repeatable.
    #[arg(long = "coloring", required = true)]
    pub colorings: Vec<String>,
    /// Ground sequence: `a..b` (inclusive) or a comma-separated list.
    #[arg(long, default_value = "1..20")]
    pub ground: String,
    #[arg(long = "len", default_value_t = 3)]
    pub target_len: usize,
    /// Largest generator block; unlimited when omitted.
    #[arg(long)]
    pub max_block: Option<usize>,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct ElimArgs {
    /// Program file.
    pub program: PathBuf,
    /// Translates `X - n` for `n ≤ T` join the catalog.
    #[arg(long, default_value_t = 1)]
    pub trans_bound: u64,
    /// Families are materialized for `j` below this.
    #[arg(long, default_value_t = 2)]
    pub param_range: u64,
    #[arg(long, default_value_t = 3)]
    pub max_block: usize,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone)]
pub struct VerifyArgs {
    /// Filter/catalog JSON, or a trace written by `eliminate`.
    pub input: PathBuf,
    #[command(flatten)]
    pub common: Common,
}

/// Coloring specification as accepted on the command line.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ColoringSpec {
    /// Color 0 on `n ≡ residue (mod mod)`, 1 elsewhere.
    Residue {
        #[serde(rename = "mod")]
        modulus: u64,
        #[serde(default)]
        residue: u64,
    },
    Table { colors: Vec<u8> },
    Random { seed: Option<u64> },
    Constant { color: u8 },
}

impl ColoringSpec {
    pub fn build(&self, bound: u64, default_seed: u64) -> Result<Coloring, Error> {
        match self {
            ColoringSpec::Residue { modulus: 0, .. } => Err(Error::Config("modulus must be positive".into())),
            ColoringSpec::Residue { modulus, residue } => Ok(Coloring::residue(*modulus, *residue, bound)),
            ColoringSpec::Table { colors } => Coloring::from_table(colors.clone()),
            ColoringSpec::Random { seed } => Ok(Coloring::random(seed.unwrap_or(default_seed), bound)),
            ColoringSpec::Constant { color } if *color > 1 => Err(Error::Config(format!("color {color} is not 0 or 1"))),
            ColoringSpec::Constant { color } => Ok(Coloring::constant(*color, bound)),
        }
    }
}

/// Serialized filter plus catalog.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterDoc {
    pub generators: Vec<u64>,
    pub horizon: u64,
    #[serde(default = "one")]
    pub min_tail: usize,
    #[serde(default)]
    pub catalog: Vec<EntryDoc>,
}

fn one() -> usize {
    1
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryDoc {
    pub name: String,
    pub expr: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verdict: Option<Verdict>,
}

impl FilterDoc {
    pub fn from_run(f: &FfsFilter, cat: &AlgebraCatalog) -> Self {
        FilterDoc {
            generators: f.generators().as_slice().to_vec(),
            horizon: f.bound(),
            min_tail: f.horizon().min_tail,
            catalog: cat
                .entries()
                .iter()
                .map(|e| EntryDoc { name: e.name.clone(), expr: e.expr.to_string(), verdict: Some(f.member(&e.set)) })
                .collect(),
        }
    }

    /// Rebuilds the filter and materializes every entry under it.
    pub fn load(&self) -> Result<(FfsFilter, AlgebraCatalog, Vec<Option<Verdict>>), Error> {
        let h = Horizon::new(self.horizon, self.min_tail)?;
        let f = FfsFilter::new(AscendingSeq::generators(self.generators.clone())?, h, 0)?;
        let ctx = OracleContext::closed(f.clone());
        let mut cat = AlgebraCatalog::new(0);
        let mut claims = Vec::new();
        for e in &self.catalog {
            let expr = parse_set_expr(&e.expr)?;
            if !expr.is_closed() {
                return Err(Error::Config(format!("catalog entry `{}` is not closed", e.name)));
            }
            let set = ctx.materialize(&expr, None)?;
            cat.push_raw(CatalogEntry { name: e.name.clone(), expr, param: None, shift: 0, set, stage: 0 });
            claims.push(e.verdict);
        }
        Ok((f, cat, claims))
    }
}

#[derive(Clone, Debug, Serialize)]
struct SolveDoc<'a> {
    status: &'static str,
    target_len: usize,
    values: Vec<u64>,
    blocks: Vec<&'a [usize]>,
    colors: &'a [Option<u8>],
    nodes: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Checks {
    pub pnu: Report,
    pub dta: Report,
    pub stability: Report,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub summable: Option<Report>,
}

impl Checks {
    pub fn passed(&self) -> bool {
        self.pnu.passed() && self.dta.passed() && self.stability.passed() && self.summable.as_ref().map_or(true, Report::passed)
    }
}

/// The trace document of an elimination run.
#[derive(Clone, Debug, Serialize)]
pub struct ElimDoc {
    pub config: ElimConfig,
    pub program: Vec<String>,
    pub stages: Vec<StageTrace>,
    pub final_generators: Vec<u64>,
    pub goal: GoalValue,
    pub filter: FilterDoc,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tails: Option<Vec<TailRecord>>,
    pub checks: Checks,
    pub passed: bool,
}

impl ElimDoc {
    pub fn new(run: &ElimRun, tails: Option<(Vec<TailRecord>, Report)>) -> Self {
        let f = run.final_filter();
        let (tails, summable) = match tails {
            Some((t, r)) => (Some(t), Some(r)),
            None => (None, None),
        };
        let checks = Checks {
            pnu: check_pnu(f, &run.catalog, PAIR_BUDGET),
            dta: check_dta(f, &run.catalog),
            stability: check_stability(run),
            summable,
        };
        ElimDoc {
            config: run.config,
            program: run.terms.iter().map(|t| format!("{}(j) = {}", t.name, t.family)).collect(),
            stages: run.traces.clone(),
            final_generators: f.generators().as_slice().to_vec(),
            goal: run.goal,
            filter: FilterDoc::from_run(f, &run.catalog),
            tails,
            passed: checks.passed(),
            checks,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
struct VerifyDoc {
    generators: Vec<u64>,
    entries: usize,
    pnu: Report,
    dta: Report,
    claims: Report,
    passed: bool,
}

/// Outcome of one command.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Outcome {
    pub code: i32,
    pub output: String,
}

impl Outcome {
    fn new(code: i32, output: String) -> Self {
        Outcome { code, output }
    }

    fn error(e: &Error) -> Self {
        Outcome::new(exit_code(e), format!("error: {e}\n"))
    }
}

/// Exit status for an error.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NotFound => EXIT_NEGATIVE,
        Error::BudgetExhausted { .. } | Error::RefinementFailed { .. } | Error::SpaceTooLarge(_) => EXIT_RESOURCE,
        _ => EXIT_USAGE,
    }
}

/// Parses arguments (including the program name) and runs the command.
pub fn run_args<I, T>(args: I) -> Outcome
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(&cli),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            Outcome::new(code, e.to_string())
        }
    }
}

pub fn run(cli: &Cli) -> Outcome {
    match &cli.command {
        Command::SolveHt(a) | Command::SolveIht(a) => {
            if matches!(cli.command, Command::SolveHt(_)) && a.colorings.len() != 1 {
                return Outcome::error(&Error::Config("solve-ht takes exactly one coloring".into()));
            }
            cmd_solve(a)
        }
        Command::Eliminate(a) => cmd_eliminate(a, false),
        Command::EliminateSs(a) => cmd_eliminate(a, true),
        Command::Verify(a) => cmd_verify(a),
    }
}

fn horizon(c: &Common) -> Result<Horizon, Error> {
    Horizon::new(c.horizon, c.min_tail)
}

fn render<T: Serialize>(doc: &T, text: impl FnOnce() -> String, c: &Common) -> Result<String, Error> {
    let out = match c.format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(doc).map_err(|e| Error::Config(e.to_string()))?;
            s.push('\n');
            s
        }
        Format::Text => text(),
    };
    match &c.out {
        Some(path) => {
            std::fs::write(path, &out).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            Ok(String::new())
        }
        None => Ok(out),
    }
}

fn read(path: &Path) -> Result<String, Error> {
    std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

/// `a..b` (inclusive) or `x,y,z`.
pub fn parse_ground(s: &str) -> Result<AscendingSeq, Error> {
    let bad = || Error::Config(format!("bad ground sequence `{s}`"));
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        return AscendingSeq::generators((a..=b).collect());
    }
    let v = s.split(',').map(|x| x.trim().parse::<u64>().map_err(|_| bad())).collect::<Result<Vec<_>, _>>()?;
    AscendingSeq::generators(v)
}

pub fn parse_coloring(spec: &str) -> Result<ColoringSpec, Error> {
    let text = if spec.trim_start().starts_with('{') { spec.to_string() } else { read(Path::new(spec))? };
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("coloring spec: {e}")))
}

fn cmd_solve(a: &SolveArgs) -> Outcome {
    let prepared = (|| {
        let h = horizon(&a.common)?;
        let ground = parse_ground(&a.ground)?;
        let cs = a
            .colorings
            .iter()
            .map(|s| parse_coloring(s)?.build(h.bound, a.common.seed))
            .collect::<Result<Vec<_>, _>>()?;
        Ok::<_, Error>((h, ground, cs))
    })();
    let (h, ground, cs) = match prepared {
        Ok(p) => p,
        Err(e) => return Outcome::error(&e),
    };
    let mut p = IhtProblem::new(&cs, &ground, a.target_len, h);
    p.max_block = a.max_block;
    let result = p.solve(SearchBudget::nodes(a.common.budget));
    let empty = IhtSolution { ys: Vec::new(), colors: Vec::new(), complete: false, nodes: 0 };
    let (code, status, sol) = match &result {
        Ok(s) => (EXIT_OK, "found", s),
        Err(Error::NotFound) => (EXIT_NEGATIVE, "not-found", &empty),
        Err(e @ Error::BudgetExhausted { .. }) => (exit_code(e), "budget-exhausted", &empty),
        Err(e) => return Outcome::error(e),
    };
    let doc = SolveDoc {
        status,
        target_len: a.target_len,
        values: sol.ys.iter().map(|y| y.value).collect(),
        blocks: sol.ys.iter().map(|y: &BlockSum| y.block.as_slice()).collect(),
        colors: &sol.colors,
        nodes: sol.nodes,
    };
    let text = || {
        let mut s = format!("{status}\n");
        for y in &sol.ys {
            let _ = writeln!(s, "  {} = block {:?}", y.value, y.block);
        }
        s
    };
    match render(&doc, text, &a.common) {
        Ok(out) => Outcome::new(code, out),
        Err(e) => Outcome::error(&e),
    }
}

/// Elimination config from command-line arguments.
pub fn elim_config(a: &ElimArgs) -> Result<ElimConfig, Error> {
    let cfg = ElimConfig {
        horizon: horizon(&a.common)?,
        trans_bound: a.trans_bound,
        param_range: a.param_range,
        budget: SearchBudget::nodes(a.common.budget),
        max_block: Some(a.max_block),
    };
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_eliminate(a: &ElimArgs, ss: bool) -> Outcome {
    let built = (|| {
        let cfg = elim_config(a)?;
        let program = parse_program(&read(&a.program)?)?;
        if ss {
            let r = eliminate_ss(&program, &cfg)?;
            let report = check_ss(&r);
            Ok::<_, Error>(ElimDoc::new(&r.run, Some((r.tails, report))))
        } else {
            Ok(ElimDoc::new(&eliminate(&program, &cfg)?, None))
        }
    })();
    let doc = match built {
        Ok(d) => d,
        Err(e) => return Outcome::error(&e),
    };
    let code = if doc.passed { EXIT_OK } else { EXIT_NEGATIVE };
    let text = || {
        let mut s = String::new();
        for t in &doc.stages {
            let _ = writeln!(
                s,
                "stage {} ({}): catalog {} -> {}, generators {} -> {}",
                t.stage,
                t.term,
                t.catalog_before,
                t.catalog_after,
                t.generators_before.len(),
                t.generators_after.len()
            );
        }
        let _ = writeln!(s, "final generators: {:?}", doc.final_generators);
        let _ = writeln!(s, "goal: {:?}", doc.goal);
        let _ = writeln!(s, "checks: {}", if doc.passed { "pass" } else { "FAIL" });
        s
    };
    match render(&doc, text, &a.common) {
        Ok(out) => Outcome::new(code, out),
        Err(e) => Outcome::error(&e),
    }
}

/// Loads a filter document: either a bare filter/catalog object or a trace
/// that holds one under `filter`.
pub fn load_filter_doc(text: &str) -> Result<FilterDoc, Error> {
    let value: serde_json::Value = serde_json::from_str(text).map_err(|e| Error::Config(format!("json: {e}")))?;
    let inner = value.get("filter").cloned().unwrap_or(value);
    serde_json::from_value(inner).map_err(|e| Error::Config(format!("filter schema: {e}")))
}

/// Runs the checks behind `verify` on a loaded document.
pub fn verify_doc(doc: &FilterDoc) -> Result<(FfsFilter, Report, Report, Report), Error> {
    let (f, cat, claims) = doc.load()?;
    let computed: Vec<Verdict> = cat.entries().iter().map(|e| f.member(&e.set)).collect();
    let stated: Vec<Verdict> = claims.iter().zip(&computed).map(|(c, v)| c.unwrap_or(*v)).collect();
    let pnu = check_pnu(&f, &cat, PAIR_BUDGET);
    let dta = check_dta_claims(&f, &cat, &stated);
    let recorded = check_claims(&f, &cat, &stated);
    Ok((f, pnu, dta, recorded))
}

fn cmd_verify(a: &VerifyArgs) -> Outcome {
    let checked = read(&a.input).and_then(|t| load_filter_doc(&t)).and_then(|d| verify_doc(&d).map(|r| (d, r)));
    let (doc, (_, pnu, dta, claims)) = match checked {
        Ok(r) => r,
        Err(e) => return Outcome::error(&e),
    };
    let passed = pnu.passed() && dta.passed() && claims.passed();
    let out = VerifyDoc { generators: doc.generators.clone(), entries: doc.catalog.len(), pnu, dta, claims, passed };
    let text = || {
        let mut s = format!("{}\n", if passed { "pass" } else { "FAIL" });
        for v in out.pnu.violations.iter().chain(&out.dta.violations).chain(&out.claims.violations) {
            let _ = writeln!(s, "  {} {:?} at {:?}: {}", v.entry, v.axiom, v.point, v.detail);
        }
        s
    };
    match render(&out, text, &a.common) {
        Ok(s) => Outcome::new(if passed { EXIT_OK } else { EXIT_NEGATIVE }, s),
        Err(e) => Outcome::error(&e),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn go(args: &[&str]) -> Outcome {
        run_args(std::iter::once("ultrafin").chain(args.iter().copied()))
    }

    #[test]
    fn solve_examples() {
        let o = go(&["solve-ht", "--coloring", r#"{"kind":"residue","mod":2}"#, "--ground", "1..20", "--len", "3"]);
        assert_eq!(o.code, EXIT_OK, "{}", o.output);
        let v: serde_json::Value = serde_json::from_str(&o.output).unwrap();
        assert_eq!(v["values"], serde_json::json!([2, 4, 6]));
        let o = go(&["solve-ht", "--coloring", r#"{"kind":"constant","color":0}"#, "--ground", "1..10"]);
        assert_eq!(o.code, EXIT_OK);
        let o = go(&["solve-ht", "--coloring", r#"{"kind":"residue","mod":2}"#, "--ground", "1", "--len", "2"]);
        assert_eq!(o.code, EXIT_NEGATIVE);
        let o = go(&["solve-ht", "--coloring", r#"{"kind":"random"}"#, "--ground", "1..30", "--len", "12", "--budget", "5"]);
        assert_eq!(o.code, EXIT_RESOURCE);
    }

    #[test]
    fn usage_errors() {
        assert_eq!(go(&["solve-ht", "--coloring", "{nope"]).code, EXIT_USAGE);
        assert_eq!(go(&["frobnicate"]).code, EXIT_USAGE);
        assert_eq!(go(&["verify", "/nonexistent/x.json"]).code, EXIT_USAGE);
        assert_eq!(go(&["--help"]).code, EXIT_OK);
    }

    #[test]
    fn ground_specs() {
        assert_eq!(parse_ground("1..4").unwrap().as_slice(), &[1, 2, 3, 4]);
        assert_eq!(parse_ground("2, 5,9").unwrap().as_slice(), &[2, 5, 9]);
        assert!(parse_ground("0..3").is_err());
        assert!(parse_ground("3,2").is_err());
    }

    #[test]
    fn coloring_specs() {
        let s = parse_coloring(r#"{"kind":"table","colors":[0,1,1]}"#).unwrap();
        assert_eq!(s, ColoringSpec::Table { colors: vec![0, 1, 1] });
        assert_eq!(s.build(3, 0).unwrap().color(1), Some(1));
        let r = parse_coloring(r#"{"kind":"residue","mod":3,"residue":1}"#).unwrap().build(10, 0).unwrap();
        assert_eq!(r.color(4), Some(0));
        assert_eq!(r.color(3), Some(1));
        assert!(parse_coloring(r#"{"kind":"table","colors":[2]}"#).unwrap().build(1, 0).is_err());
    }

    #[test]
    fn verify_empty_catalog_and_corruption() {
        let doc = FilterDoc { generators: vec![2, 4, 8], horizon: 64, min_tail: 1, catalog: vec![] };
        let (_, p, d, c) = verify_doc(&doc).unwrap();
        assert!(p.passed() && d.passed() && c.passed());
        let mut doc = doc;
        doc.catalog.push(EntryDoc { name: "evens".into(), expr: "res(0, 2)".into(), verdict: Some(Verdict::In(0)) });
        let (_, p, d, c) = verify_doc(&doc).unwrap();
        assert!(p.passed() && d.passed() && c.passed());
        doc.generators = vec![2, 5, 8];
        let (_, _, _, c) = verify_doc(&doc).unwrap();
        assert!(!c.passed());
        assert_eq!(c.violations[0].entry, "evens");
    }
}
