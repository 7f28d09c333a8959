//! The `repspace` command line. [`run`] parses arguments, dispatches to the
//! library and returns the exit code, the printed text and a transcript.
//! Exit codes: 0 done, 1 contract or usage error, 2 not known within fuel.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;
use serde_json::{json, Value};

use crate::borel_codes::{self, BorelCode, LeqVerdict, PointVerdict, SbcVerdict};
use crate::codec::{rational_code, rational_decode, Nat};
use crate::completion::{rcf_compare, rcf_to_r, RcfName};
use crate::constructions::{dedup_dense, dedup_finite, rescale};
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::functions::{apply, diagram_to_function, function_to_diagram, FunctionName, Universe};
use crate::metric::{
    self, halting_space, validate_cauchy_prefix, CauchyCheck, CauchyName, CmsDescriptor, ProgramMetric, RpmsDescriptor,
    SequenceSpace,
};
use crate::names::BaireName;
use crate::open_sets::{base_op, base_ball, semirec_to_theta, theta_to_semirec, Ball, Nbhd, SemiRecName, ThetaEnName};
use crate::rational::{parse_rational, pow2_neg, Rational};
use crate::sierpinski::{eval_s, SierpName, Verdict};
use crate::vm::{ProgramTable, RealizerProgram};

#[derive(Parser, Debug)]
#[command(name = "repspace", version, about = "Fueled name transformers for computable metric spaces")]
struct Cli {
    /// Step budget.
    #[arg(long, global = true, default_value_t = 100_000)]
    fuel: u64,
    /// Write the JSON transcript here.
    #[arg(long, global = true)]
    transcript: Option<PathBuf>,
    /// Space descriptor: a file, or text such as `euclidean-q dim=1`.
    #[arg(long, global = true)]
    space: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Approximate d(a_u, a_v), or semidecide a comparison with a rational.
    Dist(DistArgs),
    #[command(subcommand)]
    Cauchy(CauchyCmd),
    /// Emit the first indices of the repetition-free subsequence.
    Dedup {
        #[arg(long, default_value_t = 8)]
        emit: usize,
    },
    /// Digits of the rescaling factor α.
    Rescale {
        #[arg(long, default_value_t = 16)]
        digits: usize,
    },
    #[command(subcommand)]
    Open(OpenCmd),
    #[command(subcommand)]
    Fn(FnCmd),
    #[command(subcommand)]
    Rcf(RcfCmd),
    #[command(subcommand)]
    Sierp(SierpCmd),
    #[command(subcommand)]
    Borel(BorelCmd),
}

#[derive(Args, Debug)]
struct DistArgs {
    #[arg(long)]
    u: Nat,
    #[arg(long)]
    v: Nat,
    /// Precision exponent.
    #[arg(long, default_value_t = 10)]
    k: u32,
    #[arg(long, conflicts_with_all = ["greater", "equal"])]
    less: Option<String>,
    #[arg(long, conflicts_with = "equal")]
    greater: Option<String>,
    #[arg(long)]
    equal: Option<String>,
}

#[derive(Subcommand, Debug)]
enum CauchyCmd {
    /// Check d(x_i, x_j) <= 2^{-i} on a prefix.
    Validate {
        #[arg(long)]
        name: String,
        #[arg(long, default_value_t = 16)]
        len: u64,
    },
}

#[derive(Subcommand, Debug)]
enum OpenCmd {
    Member {
        #[arg(long)]
        set: String,
        #[arg(long)]
        point: String,
    },
    /// semirec -> theta or theta -> semirec.
    Translate {
        #[arg(long)]
        set: String,
        #[arg(long, default_value_t = 8)]
        count: u64,
    },
    Base {
        #[arg(long)]
        set: String,
        #[arg(long)]
        point: String,
    },
}

#[derive(Args, Debug)]
struct MachineArgs {
    #[arg(long)]
    machine: u64,
    /// Parameter name literal.
    #[arg(long)]
    param: Option<String>,
}

#[derive(Subcommand, Debug)]
enum FnCmd {
    Apply {
        #[command(flatten)]
        f: MachineArgs,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 8)]
        positions: u64,
    },
    Diagram {
        #[command(flatten)]
        f: MachineArgs,
        #[arg(long, default_value_t = 8)]
        entries: u64,
    },
    /// Rebuild a function from its diagram and evaluate it.
    Undiagram {
        #[command(flatten)]
        f: MachineArgs,
        #[arg(long)]
        input: String,
        #[arg(long, default_value_t = 4)]
        index: u64,
    },
}

#[derive(Subcommand, Debug)]
enum RcfCmd {
    Compare {
        #[arg(long)]
        x: String,
        #[arg(long)]
        q: String,
    },
    Tocauchy {
        #[arg(long)]
        x: String,
        #[arg(long, default_value_t = 8)]
        len: u64,
    },
}

#[derive(Subcommand, Debug)]
enum SierpCmd {
    Eval {
        #[arg(long)]
        name: String,
    },
}

#[derive(Subcommand, Debug)]
enum BorelCmd {
    Rank {
        #[arg(long)]
        code: String,
    },
    /// At a Cantor point when `--point` is given, else in S_BC.
    Eval {
        #[arg(long)]
        code: String,
        #[arg(long)]
        point: Option<String>,
    },
    Neg {
        #[arg(long)]
        code: String,
    },
    And {
        #[arg(long)]
        code: String,
        #[arg(long)]
        other: String,
    },
    Or {
        #[arg(long)]
        code: String,
        #[arg(long)]
        other: String,
    },
    Leq {
        #[arg(long)]
        code: String,
        #[arg(long)]
        other: String,
        #[arg(long, default_value_t = 4)]
        depth: u32,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct Transcript {
    pub command: Vec<String>,
    pub params: BTreeMap<String, Value>,
    pub events: Vec<Value>,
    pub result: Value,
    pub exit: i32,
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub exit: i32,
    pub stdout: String,
    pub stderr: String,
    pub transcript: Transcript,
}

/// What a verb produced: printed lines, a result value, and whether the
/// answer is settled.
struct Report {
    lines: Vec<String>,
    events: Vec<Value>,
    result: Value,
    settled: bool,
}

impl Report {
    fn done(lines: Vec<String>, result: Value) -> Self {
        Report {
            lines,
            events: Vec::new(),
            result,
            settled: true,
        }
    }
}

pub fn run(argv: Vec<String>) -> Outcome {
    let mut transcript = Transcript {
        command: argv.clone(),
        params: BTreeMap::new(),
        events: Vec::new(),
        result: Value::Null,
        exit: 1,
    };
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            let exit = match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            transcript.exit = exit;
            let (stdout, stderr) = if exit == 0 { (text, String::new()) } else { (String::new(), text) };
            return Outcome {
                exit,
                stdout,
                stderr,
                transcript,
            };
        }
    };
    transcript.params.insert("fuel".into(), json!(cli.fuel));
    transcript.params.insert("space".into(), json!(cli.space.clone().unwrap_or_else(|| DEFAULT_SPACE.into())));

    let (exit, stdout, stderr) = match dispatch(&cli) {
        Ok(report) => {
            let exit = if report.settled { 0 } else { 2 };
            transcript.events = report.events;
            transcript.result = report.result;
            (exit, report.lines.join("\n") + "\n", String::new())
        }
        Err(Error::FuelExhausted) => {
            transcript.result = json!("FUEL_EXHAUSTED");
            (2, "FUEL_EXHAUSTED\n".to_string(), String::new())
        }
        Err(e) => {
            transcript.result = json!({ "error": e.to_string() });
            (1, String::new(), format!("error: {e}\n"))
        }
    };
    transcript.exit = exit;
    let mut stderr = stderr;
    if let Some(path) = &cli.transcript {
        let text = serde_json::to_string_pretty(&transcript).expect("transcript serializes");
        if let Err(e) = std::fs::write(path, text + "\n") {
            stderr.push_str(&format!("error: cannot write transcript {}: {e}\n", path.display()));
        }
    }
    Outcome {
        exit,
        stdout,
        stderr,
        transcript,
    }
}

const DEFAULT_SPACE: &str = "euclidean-q dim=1";

/// The contents of `arg` when it names a file, else `arg` itself.
fn load(arg: &str) -> Result<String> {
    let path = Path::new(arg);
    if path.is_file() {
        std::fs::read_to_string(path).map_err(|e| Error::Parse(format!("cannot read {arg}: {e}")))
    } else {
        Ok(arg.to_string())
    }
}

/// `ids` like `7,6,5` or a file of lines `<id>` and `program <name>`
/// blocks of assembly.
fn parse_suite(arg: &str, table: &ProgramTable) -> Result<Vec<Arc<RealizerProgram>>> {
    let text = load(arg)?;
    let mut suite = Vec::new();
    let mut block: Option<(String, String)> = None;
    let flush = |block: &mut Option<(String, String)>, suite: &mut Vec<Arc<RealizerProgram>>| -> Result<()> {
        if let Some((name, src)) = block.take() {
            let id = 1000 + suite.len() as u64;
            suite.push(Arc::new(RealizerProgram::assemble(id, &name, &src)?));
        }
        Ok(())
    };
    for line in text.lines() {
        let t = line.split(';').next().unwrap_or("").trim();
        if let Some(name) = t.strip_prefix("program") {
            flush(&mut block, &mut suite)?;
            block = Some((name.trim().to_string(), String::new()));
        } else if let Some((_, src)) = block.as_mut() {
            src.push_str(line);
            src.push('\n');
        } else {
            for id in t.split(|c: char| c == ',' || c.is_whitespace()).filter(|s| !s.is_empty()) {
                let id: u64 = id.parse().map_err(|_| Error::Parse(format!("bad program id {id:?}")))?;
                suite.push(table.get(id)?);
            }
        }
    }
    flush(&mut block, &mut suite)?;
    Ok(suite)
}

/// `euclidean-q [dim=N]`, `baire`, `cantor`, `integers`,
/// `halting suite=<ids|file>`, `custom approx=<program-id>`,
/// `finite points=<q,q,...>`; a leading `space` is optional.
pub fn parse_space(arg: &str, table: &ProgramTable) -> Result<CmsDescriptor> {
    let text = load(arg)?;
    let line = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or("").trim())
        .find(|l| !l.is_empty())
        .ok_or_else(|| Error::Parse("empty space descriptor".into()))?;
    let line = line.strip_prefix("space").map(str::trim).unwrap_or(line);
    let mut words = line.split_whitespace();
    let kind = words.next().unwrap_or("");
    let mut opts = BTreeMap::new();
    for w in words {
        let (k, v) = w.split_once('=').ok_or_else(|| Error::Parse(format!("expected key=value, got {w:?}")))?;
        opts.insert(k, v);
    }
    let opt = |k: &str| opts.get(k).copied().ok_or_else(|| Error::Parse(format!("{kind} needs {k}=")));
    match kind {
        "euclidean-q" => {
            let dim = match opts.get("dim") {
                Some(d) => d.parse().map_err(|_| Error::Parse(format!("bad dim {d:?}")))?,
                None => 1,
            };
            metric::euclidean_q(dim)
        }
        "baire" => Ok(metric::baire()),
        "cantor" => Ok(metric::cantor()),
        "integers" => Ok(metric::integers()),
        "halting" => halting_space(parse_suite(opt("suite")?, table)?),
        "custom" => {
            let id: u64 = opt("approx")?.parse().map_err(|_| Error::Parse("bad approx program id".into()))?;
            let program = table.get(id)?;
            let m = ProgramMetric { program };
            Ok(CmsDescriptor::new(format!("custom approx={id}"), Arc::new(m)))
        }
        "finite" => {
            let points = opt("points")?
                .split(',')
                .map(parse_rational)
                .collect::<Result<Vec<_>>>()?;
            metric::finite_space(points)
        }
        _ => Err(Error::Parse(format!("unknown space {kind:?}"))),
    }
}

fn is_sequence_space(d: &CmsDescriptor) -> bool {
    d.space_id == "cantor" || d.space_id == "baire"
}

/// A word `0110`, `3,1,4` or `3 1 4`, with an optional trailing `...`.
fn parse_word(s: &str) -> Result<Vec<Nat>> {
    let s = s.trim().trim_end_matches("...").trim_end_matches('…');
    let bad = || Error::Parse(format!("bad word {s:?}"));
    if s.contains(',') || s.contains(' ') {
        s.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| bad()))
            .collect()
    } else {
        s.chars().map(|c| c.to_digit(10).map(Nat::from).ok_or_else(bad)).collect()
    }
}

/// Approximations of `w 0^ω`.
pub fn sequence_point(cantor: bool, w: Vec<Nat>) -> CauchyName {
    let space = if cantor { SequenceSpace::cantor() } else { SequenceSpace::baire() };
    CauchyName(BaireName::from_fn("word point", move |j, _| {
        let prefix: Vec<Nat> = (0..j as usize).map(|i| w.get(i).copied().unwrap_or(0)).collect();
        space.index_of(&prefix)
    }))
}

/// A name literal, `a<n>` for the dense point `a_n`, a word in Baire or
/// Cantor space, or a rational on the Euclidean line.
fn parse_point(d: &CmsDescriptor, s: &str, table: &ProgramTable) -> Result<CauchyName> {
    let s = s.trim();
    if ["const", "table", "prog"].iter().any(|p| s.starts_with(p)) {
        return BaireName::parse(s, table).map(CauchyName);
    }
    if let Some(n) = s.strip_prefix('a') {
        let n: Nat = n.parse().map_err(|_| Error::Parse(format!("bad dense index {s:?}")))?;
        d.check_index(n)?;
        return Ok(CauchyName::constant(n));
    }
    if is_sequence_space(d) {
        return Ok(sequence_point(d.space_id == "cantor", parse_word(s)?));
    }
    if d.space_id == "euclidean-q dim=1" {
        return Ok(CauchyName::constant(rational_code(&parse_rational(s)?)?));
    }
    Err(Error::Parse(format!("cannot read point {s:?} in {}; use a<n> or a name literal", d.space_id)))
}

fn ball_text(d: &CmsDescriptor, b: &Ball) -> String {
    match b {
        Ball::Empty => "∅".into(),
        Ball::Basic { center, k } => format!("B({}, 2^-{k})", d.metric.describe(*center)),
    }
}

fn nbhd_text(d: &CmsDescriptor, n: &Nbhd) -> String {
    match n {
        Nbhd::Empty => "∅".into(),
        Nbhd::Basic { center, radius } => format!("N({}, {radius})", d.metric.describe(*center)),
    }
}

fn verdict_report(label: &str, v: Verdict, fuel_used: u64) -> Report {
    Report {
        lines: vec![v.word().to_string()],
        events: vec![json!({ "event": label, "fuel_used": fuel_used })],
        result: json!(v.word()),
        settled: v.is_top(),
    }
}

fn dispatch(cli: &Cli) -> Result<Report> {
    let table = ProgramTable::builtin();
    let space = || parse_space(cli.space.as_deref().unwrap_or(DEFAULT_SPACE), &table);
    let mut fuel = Fuel::new(cli.fuel);
    match &cli.command {
        Command::Dist(a) => dist(&space()?, a, &mut fuel),
        Command::Cauchy(CauchyCmd::Validate { name, len }) => {
            let d = space()?;
            let c = CauchyName(BaireName::parse(&load(name)?, &table)?);
            match validate_cauchy_prefix(&d, &c, *len, cli.fuel)? {
                CauchyCheck::Ok => Ok(Report::done(vec!["OK".into()], json!("OK"))),
                CauchyCheck::Violation(i, j) => Err(Error::Precondition(format!("not Cauchy: d(x_{i}, x_{j}) > 2^-{i}"))),
                CauchyCheck::FuelExhausted => Err(Error::FuelExhausted),
            }
        }
        Command::Dedup { emit } => {
            let d = space()?;
            if d.is_finite() {
                let (_, keep) = dedup_finite(&d)?;
                if keep.len() < *emit {
                    return Err(Error::Precondition(format!("only {} distinct points", keep.len())));
                }
                let kept: Vec<String> = keep[..*emit].iter().map(|a| a.to_string()).collect();
                let lines = kept.iter().enumerate().map(|(i, a)| format!("a'_{i} = a_{a}")).collect();
                return Ok(Report::done(lines, json!({ "emitted": kept })));
            }
            let (_, _, run) = dedup_dense(&d)?;
            let mut report = Report::done(Vec::new(), Value::Null);
            let mut emitted = Vec::new();
            for i in 0..*emit {
                match run.original(i as u64, &mut fuel) {
                    Ok(a) => {
                        report.lines.push(format!("a'_{i} = a_{a}"));
                        report.events.push(json!({ "event": "emit", "index": i, "original": a.to_string() }));
                        emitted.push(a.to_string());
                    }
                    Err(Error::FuelExhausted) => {
                        report.lines.push("FUEL_EXHAUSTED".into());
                        report.settled = false;
                        break;
                    }
                    Err(e) => return Err(e),
                }
            }
            report.result = json!({ "emitted": emitted });
            Ok(report)
        }
        Command::Rescale { digits } => {
            let d = space()?;
            let d = if d.repetition_free || d.is_finite() { d } else { dedup_dense(&d)?.0 };
            let p = rescale(&d)?;
            let ds = p.alpha.digits(*digits, &mut fuel)?;
            let (lo, hi) = p.alpha.interval(*digits, &mut fuel)?;
            let text: String = ds.iter().map(|d| char::from(b'0' + d)).collect();
            Ok(Report::done(
                vec![format!("digits {text}"), format!("alpha in [{lo}, {hi}]")],
                json!({ "digits": text, "lower": lo.to_string(), "upper": hi.to_string() }),
            ))
        }
        Command::Open(op) => open(&space()?, op, &table, cli.fuel),
        Command::Fn(op) => function(&space()?, op, &table, &mut fuel),
        Command::Rcf(RcfCmd::Compare { x, q }) => {
            let x = RcfName::parse(&load(x)?)?;
            let q = parse_rational(q)?;
            let v = rcf_compare(&x, &q, &mut fuel)?;
            Ok(Report::done(vec![v.word().into()], json!(v.word())))
        }
        Command::Rcf(RcfCmd::Tocauchy { x, len }) => {
            let x = RcfName::parse(&load(x)?)?;
            let c = rcf_to_r(&x);
            let mut values = Vec::new();
            for i in 0..*len {
                values.push(rational_decode(c.index(i, &mut fuel)?).to_string());
            }
            Ok(Report::done(values.clone(), json!({ "name": values })))
        }
        Command::Sierp(SierpCmd::Eval { name }) => {
            let s = SierpName::parse(&load(name)?, &table)?;
            let r = eval_s(&s, cli.fuel)?;
            Ok(verdict_report("eval", r.verdict, r.fuel_used))
        }
        Command::Borel(op) => borel(op, &table, cli.fuel),
    }
}

fn dist(d: &CmsDescriptor, a: &DistArgs, fuel: &mut Fuel) -> Result<Report> {
    let approx = d.dist_approx(a.u, a.v, a.k, fuel)?;
    let mut report = Report::done(
        vec![format!("{approx}")],
        json!({ "approx": approx.to_string(), "k": a.k }),
    );
    let (query, q) = match (&a.less, &a.greater, &a.equal) {
        (Some(q), _, _) => ("less", q),
        (_, Some(q), _) => ("greater", q),
        (_, _, Some(q)) => ("equal", q),
        _ => return Ok(report),
    };
    let q = parse_rational(q)?;
    let wanted = match query {
        "less" => Ordering::Less,
        "greater" => Ordering::Greater,
        _ => Ordering::Equal,
    };
    let found = if let Some(exact) = d.compare_exact(a.u, a.v, &q, fuel) {
        Some(exact?)
    } else {
        // no exact comparison: race the two strict sides
        let mut found = None;
        for k in 0u32.. {
            match d.separate(a.u, a.v, &q, k, fuel) {
                Ok(Some(o)) => {
                    found = Some(o);
                    break;
                }
                Ok(None) => {}
                Err(Error::FuelExhausted) => break,
                Err(e) => return Err(e),
            }
        }
        found
    };
    let word = match found {
        Some(o) if o == wanted => "CONFIRMED",
        Some(_) => "REFUTED",
        None => "UNCONFIRMED",
    };
    report.settled = found.is_some();
    report.lines.push(format!("d {query} {q}: {word}"));
    report.events.push(json!({ "event": "query", "relation": query, "q": q.to_string(), "fuel_used": fuel.used() }));
    report.result = json!({ "approx": approx.to_string(), "k": a.k, "query": query, "verdict": word });
    Ok(report)
}

enum OpenSet {
    Theta(ThetaEnName),
    SemiRec(SemiRecName),
}

fn parse_open(s: &str, table: &ProgramTable) -> Result<OpenSet> {
    let text = load(s)?;
    let t = text.trim();
    if t.starts_with("theta") {
        ThetaEnName::parse(t, table).map(OpenSet::Theta)
    } else if t.starts_with("semirec") {
        SemiRecName::parse(t, table).map(OpenSet::SemiRec)
    } else {
        Err(Error::Parse(format!("open sets start with theta or semirec: {t:?}")))
    }
}

fn open(d: &CmsDescriptor, op: &OpenCmd, table: &ProgramTable, budget: u64) -> Result<Report> {
    let mut fuel = Fuel::new(budget);
    match op {
        OpenCmd::Member { set, point } => {
            let x = parse_point(d, point, table)?;
            let r = match parse_open(set, table)? {
                OpenSet::Theta(u) => u.member(d, &x, budget)?,
                OpenSet::SemiRec(v) => v.member(d, &x, budget)?,
            };
            Ok(verdict_report("member", r.verdict, r.fuel_used))
        }
        OpenCmd::Translate { set, count } => {
            let mut report = Report::done(Vec::new(), Value::Null);
            let mut out = Vec::new();
            match parse_open(set, table)? {
                OpenSet::SemiRec(v) => {
                    let r = RpmsDescriptor::new(d.clone())?;
                    let u = semirec_to_theta(&r, &v);
                    for n in 0..*count {
                        let b = u.ball(n, &mut fuel)?;
                        report.lines.push(format!("theta[{n}] = {} {}", b.code()?, ball_text(d, &b)));
                        out.push(b.code()?.to_string());
                    }
                    report.result = json!({ "theta": out });
                }
                OpenSet::Theta(u) => {
                    let v = theta_to_semirec(&u);
                    for n in 0..*count {
                        let s = v.0.force(n, &mut fuel)?;
                        report.lines.push(format!("semirec[{n}] = {} {}", s.code()?, nbhd_text(d, &s)));
                        out.push(s.code()?.to_string());
                    }
                    report.result = json!({ "semirec": out });
                }
            }
            Ok(report)
        }
        OpenCmd::Base { set, point } => {
            let x = parse_point(d, point, table)?;
            let OpenSet::Theta(u) = parse_open(set, table)? else {
                return Err(Error::Precondition("base takes a theta set".into()));
            };
            let m = base_op(d, &x, &u, &mut fuel)?;
            let b = base_ball(m)?;
            Ok(Report::done(
                vec![format!("U_{m} = {}", ball_text(d, &b))],
                json!({ "base": m.to_string(), "ball": ball_text(d, &b) }),
            ))
        }
    }
}

fn machine(f: &MachineArgs, table: &ProgramTable) -> Result<FunctionName> {
    let oracle = match &f.param {
        Some(p) => BaireName::parse(&load(p)?, table)?,
        None => BaireName::constant(0),
    };
    Ok(FunctionName::new(f.machine, oracle))
}

fn function(d: &CmsDescriptor, op: &FnCmd, table: &ProgramTable, fuel: &mut Fuel) -> Result<Report> {
    let mut u = Universe::new(table.clone());
    match op {
        FnCmd::Apply { f, input, positions } => {
            let f = machine(f, table)?;
            u.machine(f.machine)?;
            let x = BaireName::parse(&load(input)?, table)?;
            let y = apply(&u, &f, &x).force_prefix(*positions, fuel)?;
            let text: Vec<String> = y.iter().map(|v| v.to_string()).collect();
            Ok(Report::done(vec![text.join(" ")], json!({ "output": text })))
        }
        FnCmd::Diagram { f, entries } => {
            let f = machine(f, table)?;
            u.machine(f.machine)?;
            let g = function_to_diagram(&u, &f, d);
            let mut report = Report::done(Vec::new(), Value::Null);
            let mut out = Vec::new();
            for n in 0..*entries {
                let line = match g.0.force(n, fuel)? {
                    Some(e) => format!("{} -> {}", ball_text(d, &e.x_ball), nbhd_text(d, &e.s)),
                    None => "-".to_string(),
                };
                report.lines.push(format!("[{n}] {line}"));
                out.push(line);
            }
            report.result = json!({ "diagram": out });
            Ok(report)
        }
        FnCmd::Undiagram { f, input, index } => {
            let f = machine(f, table)?;
            u.machine(f.machine)?;
            let x = parse_point(d, input, table)?;
            let g = function_to_diagram(&u, &f, d);
            let h = diagram_to_function(&mut u, d, &g);
            let y = CauchyName(apply(&u, &h, &x.0));
            let v = y.index(*index, fuel)?;
            let text = d.metric.describe(v);
            Ok(Report::done(
                vec![format!("y_{index} = {text} (within 2^-{index})")],
                json!({ "index": index, "value": text }),
            ))
        }
    }
}

fn borel(op: &BorelCmd, table: &ProgramTable, budget: u64) -> Result<Report> {
    let code = |s: &str| -> Result<BorelCode> { BorelCode::parse(load(s)?.trim(), table) };
    let show = |c: BorelCode| -> Result<Report> {
        let s = c.to_sexpr()?;
        Ok(Report::done(vec![s.clone()], json!({ "code": s })))
    };
    match op {
        BorelCmd::Rank { code: c } => {
            let r = borel_codes::rank(&code(c)?)?;
            Ok(Report::done(vec![r.to_string()], json!({ "rank": r.to_string() })))
        }
        BorelCmd::Eval { code: c, point } => {
            let c = code(c)?;
            let (word, settled) = match point {
                Some(p) => {
                    let x = sequence_point(true, parse_word(p)?);
                    let v = borel_codes::eval_code_at_point(&metric::cantor(), &c, &x, budget)?;
                    (v.word(), v != PointVerdict::Unknown)
                }
                None => {
                    let v = borel_codes::eval_sbc(&c, budget)?;
                    (v.word(), v != SbcVerdict::Unknown)
                }
            };
            Ok(Report {
                lines: vec![word.into()],
                events: Vec::new(),
                result: json!(word),
                settled,
            })
        }
        BorelCmd::Neg { code: c } => show(borel_codes::neg(&code(c)?)),
        BorelCmd::And { code: c, other } => show(borel_codes::and(&code(c)?, &code(other)?)),
        BorelCmd::Or { code: c, other } => show(borel_codes::or(&code(c)?, &code(other)?)),
        BorelCmd::Leq { code: c, other, depth } => {
            let v = borel_codes::leq_sigma_bounded(&code(c)?, &code(other)?, *depth)?;
            let word = match v {
                LeqVerdict::Yes => "YES",
                LeqVerdict::NoWitnessFound => "NO_WITNESS_FOUND",
            };
            Ok(Report {
                lines: vec![word.into()],
                events: Vec::new(),
                result: json!(word),
                settled: v == LeqVerdict::Yes,
            })
        }
    }
}

/// `2^{-k}`, for callers checking CLI output.
pub fn tolerance(k: u32) -> Rational {
    pow2_neg(k)
}
