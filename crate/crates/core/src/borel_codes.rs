//! Borel codes: well-founded trees whose leaves name open sets (or elements
//! of Sierpiński space) and whose nodes take the complement of the union
//! of their children.

use std::fmt;
use std::sync::Arc;

use crate::codec::Nat;
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::functions::{run_realizer, FunctionName, Universe};
use crate::metric::{CauchyName, CmsDescriptor, SequenceSpace};
use crate::names::{BaireName, Stream};
use crate::open_sets::{Ball, ThetaEnName};
use crate::rational::{pow2_neg, Rational};
use crate::sierpinski::SierpName;
use crate::vm::ProgramTable;

#[derive(Clone, Debug)]
pub enum Leaf {
    /// An open set. `entries` is the full θ-name when it is a declared
    /// finite list (then padded with 0).
    Theta { name: ThetaEnName, entries: Option<Vec<Nat>> },
    /// An element of 𝕊. `total` declares its value, which is the only way a
    /// leaf can confirm ⊥.
    Sierp {
        name: SierpName,
        total: Option<bool>,
        literal: Option<String>,
    },
}

impl Leaf {
    pub fn theta(entries: Vec<Nat>) -> Self {
        let name = ThetaEnName(Stream::table(entries.clone(), vec![0]).expect("nonempty period"));
        Leaf::Theta {
            name,
            entries: Some(entries),
        }
    }

    /// ⊤ or ⊥, declared.
    pub fn sierp_value(v: bool) -> Self {
        let literal = if v { "const 1" } else { "const 0" };
        Leaf::Sierp {
            name: if v { SierpName::top() } else { SierpName::bottom() },
            total: Some(v),
            literal: Some(literal.into()),
        }
    }

    /// An undeclared Sierpiński name: it can confirm ⊤ but never ⊥.
    pub fn sierp(name: SierpName) -> Self {
        Leaf::Sierp {
            name,
            total: None,
            literal: None,
        }
    }
}

/// Every child at index `>= list.len()` is `tail`.
#[derive(Clone)]
pub enum Children {
    Listed { list: Vec<Arc<BorelCode>>, tail: Arc<BorelCode> },
    Generated(Generator),
}

/// Children computed on demand. `sup` is the declared supremum of their
/// ranks; without it the rank is not computed.
#[derive(Clone)]
pub struct Generator {
    pub label: String,
    pub child: Arc<dyn Fn(u64) -> BorelCode + Send + Sync>,
    pub sup: Option<RankSup>,
}

impl fmt::Debug for Children {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Children::Listed { list, tail } => f.debug_struct("Listed").field("list", list).field("tail", tail).finish(),
            Children::Generated(g) => write!(f, "Generated({})", g.label),
        }
    }
}

impl Children {
    pub fn child(&self, i: u64) -> Arc<BorelCode> {
        match self {
            Children::Listed { list, tail } => list.get(i as usize).cloned().unwrap_or_else(|| tail.clone()),
            Children::Generated(g) => Arc::new((g.child)(i)),
        }
    }

    /// Distinct children positions, the tail last.
    fn support(&self) -> Option<usize> {
        match self {
            Children::Listed { list, .. } => Some(list.len() + 1),
            Children::Generated(_) => None,
        }
    }

    pub fn listed(list: Vec<BorelCode>, tail: BorelCode) -> Self {
        Children::Listed {
            list: list.into_iter().map(Arc::new).collect(),
            tail: Arc::new(tail),
        }
    }

    fn map(&self, f: impl Fn(&BorelCode) -> BorelCode + Send + Sync + 'static) -> Children {
        match self {
            Children::Listed { list, tail } => Children::Listed {
                list: list.iter().map(|c| Arc::new(f(c))).collect(),
                tail: Arc::new(f(tail)),
            },
            Children::Generated(g) => {
                let inner = g.child.clone();
                Children::Generated(Generator {
                    label: format!("map {}", g.label),
                    child: Arc::new(move |i| f(&inner(i))),
                    sup: None,
                })
            }
        }
    }
}

#[derive(Clone, Debug)]
pub enum BorelCode {
    Leaf(Leaf),
    Node(Children),
}

/// `ω·omega + n`, for `omega` in {0, 1}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct CodeRank {
    pub omega: bool,
    pub n: u64,
}

impl CodeRank {
    pub const ZERO: CodeRank = CodeRank { omega: false, n: 0 };
    pub const OMEGA: CodeRank = CodeRank { omega: true, n: 0 };

    pub fn finite(n: u64) -> Self {
        CodeRank { omega: false, n }
    }

    pub fn succ(self) -> Result<Self> {
        let n = self.n.checked_add(1).ok_or(Error::RankOverflow)?;
        Ok(CodeRank { n, ..self })
    }
}

impl fmt::Display for CodeRank {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.omega, self.n) {
            (false, n) => write!(f, "{n}"),
            (true, 0) => write!(f, "ω"),
            (true, n) => write!(f, "ω+{n}"),
        }
    }
}

/// Declared supremum of the children's ranks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RankSup {
    /// Attained.
    Max(CodeRank),
    /// The limit `ω·k`, not attained.
    OmegaTimes(u32),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbcVerdict {
    Top,
    Bot,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointVerdict {
    In,
    Out,
    Unknown,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LeqVerdict {
    Yes,
    NoWitnessFound,
}

impl SbcVerdict {
    fn from_tri(t: Option<bool>) -> Self {
        match t {
            Some(true) => SbcVerdict::Top,
            Some(false) => SbcVerdict::Bot,
            None => SbcVerdict::Unknown,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            SbcVerdict::Top => "TOP",
            SbcVerdict::Bot => "BOT",
            SbcVerdict::Unknown => "UNKNOWN",
        }
    }
}

impl PointVerdict {
    fn from_tri(t: Option<bool>) -> Self {
        match t {
            Some(true) => PointVerdict::In,
            Some(false) => PointVerdict::Out,
            None => PointVerdict::Unknown,
        }
    }

    pub fn word(self) -> &'static str {
        match self {
            PointVerdict::In => "IN",
            PointVerdict::Out => "OUT",
            PointVerdict::Unknown => "UNKNOWN",
        }
    }
}

impl BorelCode {
    pub fn leaf(l: Leaf) -> Self {
        BorelCode::Leaf(l)
    }

    pub fn node(list: Vec<BorelCode>, tail: BorelCode) -> Self {
        BorelCode::Node(Children::listed(list, tail))
    }

    /// 0 for leaves, 1 for nodes.
    pub fn head(&self) -> Nat {
        match self {
            BorelCode::Leaf(_) => 0,
            BorelCode::Node(_) => 1,
        }
    }

    /// `0p` for a leaf named by `p`, `1⟨p_0, p_1, ...⟩` for a node.
    pub fn to_name(&self) -> BaireName {
        match self {
            BorelCode::Leaf(Leaf::Theta { name, .. }) => BaireName::prepend(vec![0], &name.0),
            BorelCode::Leaf(Leaf::Sierp { name, .. }) => BaireName::prepend(vec![0], &name.0),
            BorelCode::Node(children) => {
                let children = children.clone();
                BaireName::prepend(vec![1], &BaireName::interleave(move |i| children.child(i).to_name()))
            }
        }
    }
}

/// `sup_n |p_n| + 1` over the children, 0 on leaves.
pub fn rank(c: &BorelCode) -> Result<CodeRank> {
    match c {
        BorelCode::Leaf(_) => Ok(CodeRank::ZERO),
        BorelCode::Node(Children::Listed { list, tail }) => {
            let mut sup = rank(tail)?;
            for child in list {
                sup = sup.max(rank(child)?);
            }
            sup.succ()
        }
        BorelCode::Node(Children::Generated(g)) => match g.sup {
            Some(RankSup::Max(r)) => r.succ(),
            Some(RankSup::OmegaTimes(1)) => CodeRank::OMEGA.succ(),
            Some(RankSup::OmegaTimes(0)) => Err(Error::Precondition("ω·0 is not a limit".into())),
            Some(RankSup::OmegaTimes(_)) => Err(Error::RankOverflow),
            None => Err(Error::Unsupported(format!("rank of {} needs a declared supremum", g.label))),
        },
    }
}

/// Evaluates a node whose value is `!hit` once some child evaluates to
/// `hit`, and `hit` once every child is known to differ from `hit`. Children
/// are tried in index order with budgets 1, 2, 4, ...; generated children
/// enter one more per round.
fn eval_node(
    support: Option<usize>,
    hit: bool,
    decided: bool,
    fuel: &mut Fuel,
    child: &dyn Fn(u64, &mut Fuel) -> Result<Option<bool>>,
) -> Result<Option<bool>> {
    // every child settles, so running them in order is already fair
    if let (true, Some(width)) = (decided, support) {
        for i in 0..width as u64 {
            fuel.tick()?;
            if child(i, fuel)? == Some(hit) {
                return Ok(Some(!hit));
            }
        }
        return Ok(Some(hit));
    }
    let mut budget = 1u64;
    for round in 0u64.. {
        fuel.tick()?;
        let width = support.map_or(round + 1, |s| s as u64);
        let mut all_miss = true;
        for i in 0..width {
            let (out, truncated) = fuel.scoped(budget, |f| child(i, f));
            match out {
                Ok(Some(v)) if v == hit => return Ok(Some(!hit)),
                Ok(Some(_)) => {}
                Ok(None) | Err(Error::FuelExhausted) => all_miss = false,
                Err(e) => return Err(e),
            }
            if truncated {
                return Err(Error::FuelExhausted);
            }
        }
        if support.is_some() && all_miss {
            return Ok(Some(hit));
        }
        budget = budget.saturating_mul(2);
    }
    unreachable!("the round loop only ends by returning")
}

fn sierp_search(name: &SierpName, fuel: &mut Fuel) -> Result<Option<bool>> {
    for i in 0u64.. {
        fuel.tick()?;
        if name.0.force(i, fuel)? != 0 {
            return Ok(Some(true));
        }
    }
    unreachable!("the search only ends by returning")
}

fn sbc(c: &BorelCode, decided: bool, fuel: &mut Fuel) -> Result<Option<bool>> {
    match c {
        BorelCode::Leaf(Leaf::Sierp { total: Some(v), .. }) => fuel.tick().map(|_| Some(*v)),
        BorelCode::Leaf(Leaf::Sierp { name, .. }) => sierp_search(name, fuel),
        BorelCode::Leaf(Leaf::Theta { .. }) => Err(Error::Precondition("S_BC codes have Sierpiński leaves".into())),
        BorelCode::Node(children) => {
            eval_node(children.support(), false, decided, fuel, &|i, f| sbc(&children.child(i), decided, f))
        }
    }
}

/// `δ_BC(0p) = δ_𝕊(p)`, `δ_BC(1⟨p_0, p_1, ...⟩) = ⋁_i ¬δ_BC(p_i)`.
pub fn eval_sbc(s: &BorelCode, fuel: u64) -> Result<SbcVerdict> {
    match sbc(s, always_decided(s, false), &mut Fuel::new(fuel)) {
        Ok(t) => Ok(SbcVerdict::from_tri(t)),
        Err(Error::FuelExhausted) => Ok(SbcVerdict::Unknown),
        Err(e) => Err(e),
    }
}

fn sbc_name(p: &BaireName, fuel: &mut Fuel) -> Result<Option<bool>> {
    match p.force(0, fuel)? {
        0 => sierp_search(&SierpName(p.shift(1)), fuel),
        1 => {
            let body = p.shift(1);
            eval_node(None, false, false, fuel, &|i, f| sbc_name(&body.project(i), f))
        }
        h => Err(Error::Precondition(format!("head digit {h} names no Borel code"))),
    }
}

/// [`eval_sbc`] on an encoded name. Encoded nodes have no declared support:
/// ⊥ is never confirmed, and so neither is a node's ⊤. Only leaves settle.
pub fn eval_sbc_name(p: &BaireName, fuel: u64) -> Result<SbcVerdict> {
    match sbc_name(p, &mut Fuel::new(fuel)) {
        Ok(t) => Ok(SbcVerdict::from_tri(t)),
        Err(Error::FuelExhausted) => Ok(SbcVerdict::Unknown),
        Err(e) => Err(e),
    }
}

/// In a dyadic ultrametric, decides `x ∈ B(a_center, radius)`: once
/// `d(x_j, a) > 2^{-j} >= d(x, x_j)`, `d(x, a) = d(x_j, a)`; once
/// `2^{-j} < radius` with `d(x_j, a) <= 2^{-j}`, `d(x, a) <= 2^{-j}`.
fn clopen_inside(d: &CmsDescriptor, x: &CauchyName, center: Nat, radius: &Rational, fuel: &mut Fuel) -> Result<bool> {
    for j in 0u64.. {
        let e = pow2_neg(j as u32);
        let u = x.index(j, fuel)?;
        let dist = d
            .metric
            .exact(u, center, fuel)
            .ok_or_else(|| Error::Unsupported(format!("{} has no exact distances", d.space_id)))??;
        if dist > e {
            return Ok(&dist < radius);
        }
        if &e < radius {
            return Ok(true);
        }
    }
    unreachable!("the refinement loop only ends by returning")
}

fn theta_leaf(d: &CmsDescriptor, x: &CauchyName, name: &ThetaEnName, entries: Option<&Vec<Nat>>, fuel: &mut Fuel) -> Result<Option<bool>> {
    if let (Some(entries), true) = (entries, d.metric.dyadic_ultrametric()) {
        for &w in entries {
            if let Ball::Basic { center, k } = Ball::decode(w)? {
                if clopen_inside(d, x, center, &pow2_neg(k), fuel)? {
                    return Ok(Some(true));
                }
            }
        }
        return Ok(Some(false));
    }
    name.hit(d, x, fuel).map(|_| Some(true))
}

/// Leaves that always answer: declared Sierpiński values, and finite ball lists
/// over a dyadic ultrametric when `clopen` holds. Nodes need finite support.
fn always_decided(c: &BorelCode, clopen: bool) -> bool {
    match c {
        BorelCode::Leaf(Leaf::Sierp { total, .. }) => total.is_some(),
        BorelCode::Leaf(Leaf::Theta { entries, .. }) => clopen && entries.is_some(),
        BorelCode::Node(children) => {
            children.support().is_some_and(|w| (0..w as u64).all(|i| always_decided(&children.child(i), clopen)))
        }
    }
}

fn at_point(d: &CmsDescriptor, c: &BorelCode, x: &CauchyName, decided: bool, fuel: &mut Fuel) -> Result<Option<bool>> {
    match c {
        BorelCode::Leaf(Leaf::Theta { name, entries }) => theta_leaf(d, x, name, entries.as_ref(), fuel),
        BorelCode::Leaf(Leaf::Sierp { .. }) => Err(Error::Precondition("point codes have open-set leaves".into())),
        BorelCode::Node(children) => {
            eval_node(children.support(), true, decided, fuel, &|i, f| at_point(d, &children.child(i), x, decided, f))
        }
    }
}

/// `π(0p) = δ_𝒪(p)`, `π(1⟨p_0, p_1, ...⟩) = (⋃_n π(p_n))^C`. Leaves confirm
/// `Out` only when they list finitely many balls of a dyadic ultrametric.
pub fn eval_code_at_point(d: &CmsDescriptor, c: &BorelCode, x: &CauchyName, fuel: u64) -> Result<PointVerdict> {
    let decided = always_decided(c, d.metric.dyadic_ultrametric());
    match at_point(d, c, x, decided, &mut Fuel::new(fuel)) {
        Ok(t) => Ok(PointVerdict::from_tri(t)),
        Err(Error::FuelExhausted) => Ok(PointVerdict::Unknown),
        Err(e) => Err(e),
    }
}

/// `p ↦ ⟨1, p, p, p, ...⟩`
pub fn neg(s: &BorelCode) -> BorelCode {
    BorelCode::node(vec![], s.clone())
}

/// `(p_i) ↦ ⟨1, ⟨1, p_0, p_1, ...⟩, ⟨1, p_0, p_1, ...⟩, ...⟩`
pub fn big_and(children: &Children) -> BorelCode {
    neg(&BorelCode::Node(children.clone()))
}

/// `¬⋀_i ¬p_i`
pub fn big_or(children: &Children) -> BorelCode {
    neg(&big_and(&children.map(neg)))
}

pub fn and(s: &BorelCode, t: &BorelCode) -> BorelCode {
    big_and(&Children::listed(vec![s.clone()], t.clone()))
}

pub fn or(s: &BorelCode, t: &BorelCode) -> BorelCode {
    neg(&and(&neg(s), &neg(t)))
}

/// The successor `q ↦ 1⟨q, q, ...⟩`, with `|S(q)| = |q| + 1`.
pub fn successor(q: &BorelCode) -> BorelCode {
    neg(q)
}

fn r_relation(p: &BorelCode, q: &BorelCode, depth: u32) -> Result<bool> {
    let q_children = match q {
        BorelCode::Leaf(_) => return Ok(true),
        BorelCode::Node(c) => c,
    };
    let p_children = match p {
        BorelCode::Leaf(_) => return Ok(false),
        BorelCode::Node(c) => c,
    };
    if depth == 0 {
        return Ok(false);
    }
    let (Some(ps), Some(qs)) = (p_children.support(), q_children.support()) else {
        return Err(Error::Precondition("≤_Σ needs explicit finite supports".into()));
    };
    for n in 0..ps as u64 {
        let pn = p_children.child(n);
        let mut found = false;
        for m in 0..qs as u64 {
            if r_relation(&pn, &q_children.child(m), depth - 1)? {
                found = true;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Searches for a witness of `q(0) = 0 ∨ (p, q nodes ∧ ∀n R(p_n, q_{t'(n)}))`
/// down to `depth` node levels. Children past the listed ones all equal the
/// tail, so one choice of `t'` serves them all.
pub fn leq_sigma_bounded(p: &BorelCode, q: &BorelCode, depth: u32) -> Result<LeqVerdict> {
    if depth == 0 {
        return Err(Error::Precondition("depth must be at least 1".into()));
    }
    Ok(if r_relation(p, q, depth)? {
        LeqVerdict::Yes
    } else {
        LeqVerdict::NoWitnessFound
    })
}

/// Longest modulus sampled by [`chi_to_code_bounded`].
pub const MAX_MODULUS: u64 = 16;

/// Cantor cylinder `[w]` as a ball: `B(w0^ω, 2^{-(|w|-1)})`.
pub fn cylinder(w: &[Nat]) -> Result<Ball> {
    if w.is_empty() {
        return Err(Error::Precondition("the empty cylinder is the whole space, not a ball".into()));
    }
    let center = SequenceSpace::cantor().index_of(w)?;
    Ok(Ball::Basic {
        center,
        k: w.len() as u32 - 1,
    })
}

/// A θ leaf listing the cylinders `[w]`; the empty word lists `[0]` and `[1]`.
pub fn cylinders_leaf(words: &[Vec<Nat>]) -> Result<BorelCode> {
    let mut entries = Vec::new();
    for w in words {
        if w.is_empty() {
            entries.push(cylinder(&[0])?.code()?);
            entries.push(cylinder(&[1])?.code()?);
        } else {
            entries.push(cylinder(w)?.code()?);
        }
    }
    Ok(BorelCode::Leaf(Leaf::theta(entries)))
}

pub fn whole_cantor() -> BorelCode {
    cylinders_leaf(&[vec![]]).expect("fixed cylinders")
}

fn binary_words(len: u64) -> impl Iterator<Item = Vec<Nat>> {
    (0..1u64 << len).map(move |m| (0..len).rev().map(|b| ((m >> b) & 1) as Nat).collect())
}

/// Rebuilds `{x ∈ 2^ℕ : chi(x) = ⊤}` from the `2^B` cylinders of length
/// `B = modulus`. Outputs are read as S_BC names; a cylinder counts as ⊤
/// when that is confirmed within `fuel`. A read at position `>= B` breaks
/// the declared modulus.
pub fn chi_to_code_bounded(u: &Universe, chi: &FunctionName, modulus: Option<u64>, fuel: u64) -> Result<BorelCode> {
    let b = modulus.ok_or(Error::UndeclaredModulus)?;
    if b > MAX_MODULUS {
        return Err(Error::BudgetExceeded(format!("modulus {b} exceeds {MAX_MODULUS}")));
    }
    let mut top = Vec::new();
    let mut all = true;
    for w in binary_words(b) {
        let x = BaireName::prepend(w.clone(), &BaireName::constant(0));
        let (u, chi) = (u.clone(), chi.clone());
        let out = BaireName::from_fn("chi", move |pos, f| {
            let round = run_realizer(&u, &chi, &x, pos, f)?;
            if let Some(&r) = round.reads.iter().find(|&&r| r >= b) {
                return Err(Error::BudgetExceeded(format!("read position {r} beyond modulus {b}")));
            }
            Ok(round.value)
        });
        if eval_sbc_name(&out, fuel)? == SbcVerdict::Top {
            top.push(w);
        } else {
            all = false;
        }
    }
    if all {
        return Ok(whole_cantor());
    }
    cylinders_leaf(&top)
}

// ---------------------------------------------------------------------------
// Text form

/// Deepest nesting accepted by the parser.
pub const MAX_DEPTH: usize = 256;

impl BorelCode {
    /// `(leaf theta [w…])`, `(leaf sierp <literal> [total=top|bot])`,
    /// `(node c0 … tail=ck)`.
    pub fn to_sexpr(&self) -> Result<String> {
        match self {
            BorelCode::Leaf(Leaf::Theta { entries: Some(e), .. }) => Ok(format!(
                "(leaf theta [{}])",
                e.iter().map(|w| w.to_string()).collect::<Vec<_>>().join(" ")
            )),
            BorelCode::Leaf(Leaf::Theta { name, .. }) => Err(Error::Unsupported(format!("θ-name {} is not a finite list", name.0.label()))),
            BorelCode::Leaf(Leaf::Sierp { literal: Some(l), total, .. }) => Ok(match total {
                Some(true) => format!("(leaf sierp {l} total=top)"),
                Some(false) => format!("(leaf sierp {l} total=bot)"),
                None => format!("(leaf sierp {l})"),
            }),
            BorelCode::Leaf(Leaf::Sierp { name, .. }) => Err(Error::Unsupported(format!("Sierpiński name {} has no literal", name.0.label()))),
            BorelCode::Node(Children::Listed { list, tail }) => {
                let mut parts = vec!["(node".to_string()];
                for c in list {
                    parts.push(c.to_sexpr()?);
                }
                parts.push(format!("tail={})", tail.to_sexpr()?));
                Ok(parts.join(" "))
            }
            BorelCode::Node(Children::Generated(g)) => Err(Error::Unsupported(format!("generated children {}", g.label))),
        }
    }

    pub fn parse(s: &str, programs: &ProgramTable) -> Result<Self> {
        let mut p = SexprParser { src: s, pos: 0, programs };
        let code = p.code(0)?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.bad("trailing text"));
        }
        Ok(code)
    }
}

impl fmt::Display for BorelCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.to_sexpr() {
            Ok(s) => f.write_str(&s),
            Err(_) => write!(f, "<code of rank {}>", rank(self).map_or("?".into(), |r| r.to_string())),
        }
    }
}

struct SexprParser<'a> {
    src: &'a str,
    pos: usize,
    programs: &'a ProgramTable,
}

impl<'a> SexprParser<'a> {
    fn bad(&self, what: &str) -> Error {
        Error::Parse(format!("{what} at byte {} of Borel code", self.pos))
    }

    fn rest(&self) -> &'a str {
        &self.src[self.pos..]
    }

    fn skip_ws(&mut self) {
        let trimmed = self.rest().trim_start();
        self.pos = self.src.len() - trimmed.len();
    }

    fn eat(&mut self, token: &str) -> bool {
        self.skip_ws();
        if self.rest().starts_with(token) {
            self.pos += token.len();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, token: &str) -> Result<()> {
        if self.eat(token) {
            Ok(())
        } else {
            Err(self.bad(&format!("expected {token:?}")))
        }
    }

    fn code(&mut self, depth: usize) -> Result<BorelCode> {
        if depth > MAX_DEPTH {
            return Err(self.bad("nesting too deep"));
        }
        self.expect("(")?;
        if self.eat("leaf") {
            if self.eat("theta") {
                self.expect("[")?;
                let close = self.rest().find(']').ok_or_else(|| self.bad("unclosed ["))?;
                let entries = self.rest()[..close]
                    .split_whitespace()
                    .map(|w| w.parse::<Nat>().map_err(|_| self.bad("bad θ entry")))
                    .collect::<Result<Vec<_>>>()?;
                self.pos += close + 1;
                self.expect(")")?;
                return Ok(BorelCode::Leaf(Leaf::theta(entries)));
            }
            if self.eat("sierp") {
                self.skip_ws();
                let close = self.rest().find(')').ok_or_else(|| self.bad("unclosed leaf"))?;
                let body = self.rest()[..close].trim();
                let (literal, total) = match body.rsplit_once("total=") {
                    Some((lit, "top")) => (lit.trim(), Some(true)),
                    Some((lit, "bot")) => (lit.trim(), Some(false)),
                    Some(_) => return Err(self.bad("total must be top or bot")),
                    None => (body, None),
                };
                let name = SierpName::parse(literal, self.programs)?;
                self.pos += close + 1;
                return Ok(BorelCode::Leaf(Leaf::Sierp {
                    name,
                    total,
                    literal: Some(literal.to_string()),
                }));
            }
            return Err(self.bad("expected theta or sierp"));
        }
        if self.eat("node") {
            let mut list = Vec::new();
            loop {
                if self.eat("tail=") {
                    let tail = self.code(depth + 1)?;
                    self.expect(")")?;
                    return Ok(BorelCode::node(list, tail));
                }
                list.push(self.code(depth + 1)?);
            }
        }
        Err(self.bad("expected leaf or node"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric::cantor;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn top() -> BorelCode {
        BorelCode::Leaf(Leaf::sierp_value(true))
    }

    fn bot() -> BorelCode {
        BorelCode::Leaf(Leaf::sierp_value(false))
    }

    fn sbc_of(b: bool) -> BorelCode {
        if b {
            top()
        } else {
            bot()
        }
    }

    fn eval(c: &BorelCode) -> SbcVerdict {
        eval_sbc(c, 100_000).unwrap()
    }

    /// Dense approximations of w 0^ω.
    fn point(w: &[Nat]) -> CauchyName {
        let w = w.to_vec();
        CauchyName(BaireName::from_fn("cantor point", move |j, _| {
            let prefix: Vec<Nat> = (0..j as usize).map(|i| w.get(i).copied().unwrap_or(0)).collect();
            SequenceSpace::cantor().index_of(&prefix)
        }))
    }

    /// Membership of w 0^ω by direct prefix comparison.
    fn oracle(c: &BorelCode, w: &[Nat]) -> bool {
        match c {
            BorelCode::Leaf(Leaf::Theta { entries: Some(e), .. }) => e.iter().any(|&code| match Ball::decode(code).unwrap() {
                Ball::Empty => false,
                Ball::Basic { center, k } => {
                    let cw = SequenceSpace::cantor().word(center);
                    (0..=k as usize).all(|i| cw.get(i).copied().unwrap_or(0) == w.get(i).copied().unwrap_or(0))
                }
            }),
            BorelCode::Node(Children::Listed { list, tail }) => {
                !(list.iter().any(|c| oracle(c, w)) || oracle(tail, w))
            }
            _ => unreachable!("oracle covers finite codes"),
        }
    }

    /// Truth value of a code with declared leaves.
    fn truth(c: &BorelCode) -> bool {
        match c {
            BorelCode::Leaf(Leaf::Sierp { total: Some(v), .. }) => *v,
            BorelCode::Node(Children::Listed { list, tail }) => list.iter().any(|c| !truth(c)) || !truth(tail),
            _ => unreachable!("truth covers declared codes"),
        }
    }

    fn words(len: u64) -> Vec<Vec<Nat>> {
        binary_words(len).collect()
    }

    fn random_sbc(rng: &mut ChaCha8Rng, depth: u32) -> BorelCode {
        if depth == 0 || rng.gen_bool(0.3) {
            return sbc_of(rng.gen_bool(0.5));
        }
        let n = rng.gen_range(0..3);
        let list = (0..n).map(|_| random_sbc(rng, depth - 1)).collect();
        BorelCode::node(list, random_sbc(rng, depth - 1))
    }

    #[test]
    fn ranks() {
        assert_eq!(rank(&top()).unwrap(), CodeRank::ZERO);
        assert_eq!(rank(&BorelCode::node(vec![], top())).unwrap(), CodeRank::finite(1));

        // child n has rank n for n < 6, then constant rank 5
        let chain: Vec<BorelCode> = (0..6).scan(top(), |c, _| {
            let out = c.clone();
            *c = neg(c);
            Some(out)
        }).collect();
        let tail = chain[5].clone();
        assert_eq!(rank(&BorelCode::node(chain, tail)).unwrap(), CodeRank::finite(6));

        let gen = |sup| {
            BorelCode::Node(Children::Generated(Generator {
                label: "chain".into(),
                child: Arc::new(|n| (0..n).fold(top(), |c, _| neg(&c))),
                sup,
            }))
        };
        assert_eq!(rank(&gen(Some(RankSup::OmegaTimes(1)))).unwrap(), CodeRank { omega: true, n: 1 });
        assert_eq!(rank(&gen(Some(RankSup::OmegaTimes(2)))), Err(Error::RankOverflow));
        assert!(matches!(rank(&gen(None)), Err(Error::Unsupported(_))));
        assert_eq!(CodeRank { omega: true, n: 3 }.to_string(), "ω+3");
    }

    #[test]
    fn rank_increases_from_child_to_parent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..50 {
            let c = random_sbc(&mut rng, 4);
            if let BorelCode::Node(Children::Listed { list, tail }) = &c {
                let r = rank(&c).unwrap();
                assert!(r > CodeRank::ZERO);
                for child in list.iter().chain(std::iter::once(tail)) {
                    assert!(rank(child).unwrap() < r);
                }
            } else {
                assert_eq!(rank(&c).unwrap(), CodeRank::ZERO);
            }
        }
    }

    #[test]
    fn sbc_examples() {
        assert_eq!(eval(&top()), SbcVerdict::Top);
        assert_eq!(eval(&BorelCode::node(vec![top(), top()], top())), SbcVerdict::Bot);
        // finitely many children confirmed ⊤ settle a node without declarations
        let undeclared = BorelCode::Leaf(Leaf::sierp(SierpName::top()));
        assert_eq!(eval(&BorelCode::node(vec![], undeclared)), SbcVerdict::Bot);
        let silent = BorelCode::Leaf(Leaf::sierp(SierpName::bottom()));
        assert_eq!(eval(&silent), SbcVerdict::Unknown);
        assert_eq!(eval(&neg(&top())), SbcVerdict::Bot);
        assert_eq!(eval(&neg(&neg(&top()))), SbcVerdict::Top);
    }

    #[test]
    fn closure_truth_tables() {
        for a in [false, true] {
            for b in [false, true] {
                let (s, t) = (sbc_of(a), sbc_of(b));
                assert_eq!(eval(&and(&s, &t)) == SbcVerdict::Top, a && b);
                assert_eq!(eval(&or(&s, &t)) == SbcVerdict::Top, a || b);
                assert_ne!(eval(&or(&s, &t)), SbcVerdict::Unknown);
                assert_eq!(eval(&neg(&and(&neg(&s), &neg(&t)))), eval(&or(&s, &t)));
            }
        }
        let stream = Children::listed(vec![top(), top(), bot()], top());
        assert_eq!(eval(&big_and(&stream)), SbcVerdict::Bot);
        assert_eq!(eval(&big_or(&stream)), SbcVerdict::Top);
        let all_top = Children::listed(vec![], top());
        assert_eq!(eval(&big_and(&all_top)), SbcVerdict::Top);
    }

    #[test]
    fn generated_children_confirm_only_top() {
        let gen = Children::Generated(Generator {
            label: "bot at 5".into(),
            child: Arc::new(|i| sbc_of(i != 5)),
            sup: Some(RankSup::Max(CodeRank::ZERO)),
        });
        assert_eq!(eval(&BorelCode::Node(gen.clone())), SbcVerdict::Top);
        assert_eq!(eval(&big_and(&gen)), SbcVerdict::Bot);
        let tops = Children::Generated(Generator {
            label: "tops".into(),
            child: Arc::new(|_| top()),
            sup: None,
        });
        assert_eq!(eval_sbc(&BorelCode::Node(tops), 5_000).unwrap(), SbcVerdict::Unknown);
    }

    #[test]
    fn de_morgan_and_double_negation_on_random_codes() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let (s, t) = (random_sbc(&mut rng, 3), random_sbc(&mut rng, 3));
            let (a, b) = (truth(&s), truth(&t));
            assert_eq!(eval(&s), SbcVerdict::from_tri(Some(a)));
            assert_eq!(eval(&or(&s, &t)), SbcVerdict::from_tri(Some(a || b)));
            assert_eq!(eval(&and(&s, &t)), SbcVerdict::from_tri(Some(a && b)));
            assert_eq!(eval(&neg(&or(&neg(&s), &neg(&t)))), eval(&and(&s, &t)));
            assert_eq!(eval(&neg(&neg(&s))), eval(&s));
        }
    }

    #[test]
    fn encoded_names_confirm_top() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..20 {
            let c = random_sbc(&mut rng, 2);
            let v = eval_sbc_name(&c.to_name(), 200_000).unwrap();
            // encoded nodes have no declared support, so only leaves settle
            if truth(&c) && c.head() == 0 {
                assert_eq!(v, SbcVerdict::Top, "{c}");
            } else {
                assert_eq!(v, SbcVerdict::Unknown);
            }
        }
        assert!(eval_sbc_name(&BaireName::constant(2), 10).is_err());
    }

    #[test]
    fn point_examples() {
        let d = cantor();
        assert_eq!(eval_code_at_point(&d, &whole_cantor(), &point(&[1, 0, 1]), 10_000).unwrap(), PointVerdict::In);
        let c = BorelCode::node(vec![], cylinders_leaf(&[vec![0]]).unwrap());
        assert_eq!(eval_code_at_point(&d, &c, &point(&[1, 0, 0]), 10_000).unwrap(), PointVerdict::In);
        assert_eq!(eval_code_at_point(&d, &c, &point(&[0]), 10_000).unwrap(), PointVerdict::Out);
        assert!(eval_code_at_point(&d, &top(), &point(&[0]), 10).is_err());
    }

    #[test]
    fn depth_two_codes_match_the_cylinder_oracle() {
        let d = cantor();
        let cyl: Vec<Vec<Nat>> = [vec![0], vec![1], vec![0, 1], vec![1, 1], vec![0, 0]].to_vec();
        let leaves: Vec<BorelCode> = cyl.iter().map(|w| cylinders_leaf(&[w.clone()]).unwrap()).collect();
        let mut codes = leaves.clone();
        for a in &leaves {
            for b in &leaves {
                codes.push(BorelCode::node(vec![a.clone()], b.clone()));
            }
        }
        let firsts = codes.clone();
        for (i, a) in firsts.iter().enumerate().step_by(3) {
            let b = &firsts[(i * 7 + 1) % firsts.len()];
            codes.push(BorelCode::node(vec![a.clone()], b.clone()));
        }
        for c in &codes {
            for w in words(3) {
                let expected = if oracle(c, &w) { PointVerdict::In } else { PointVerdict::Out };
                assert_eq!(eval_code_at_point(&d, c, &point(&w), 100_000).unwrap(), expected, "{c} at {w:?}");
            }
        }
    }

    #[test]
    fn non_clopen_leaves_only_confirm_membership() {
        let d = crate::metric::euclidean_q(1).unwrap();
        let ball = Ball::Basic { center: 0, k: 0 }.code().unwrap();
        let leaf = BorelCode::Leaf(Leaf::theta(vec![ball]));
        let zero = CauchyName::constant(0);
        assert_eq!(eval_code_at_point(&d, &leaf, &zero, 10_000).unwrap(), PointVerdict::In);
        assert_eq!(eval_code_at_point(&d, &neg(&leaf), &zero, 10_000).unwrap(), PointVerdict::Out);
        let far = CauchyName::constant(crate::codec::rational_code(&Rational::from_integer(5.into())).unwrap());
        assert_eq!(eval_code_at_point(&d, &neg(&leaf), &far, 10_000).unwrap(), PointVerdict::Unknown);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(30))]

        #[test]
        fn fuel_only_settles_verdicts(seed in 0u64..1000, bits in proptest::collection::vec(0u128..2, 3)) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let s = random_sbc(&mut rng, 3);
            let mut last = SbcVerdict::Unknown;
            for fuel in [1, 4, 16, 64, 256, 4096] {
                let v = eval_sbc(&s, fuel).unwrap();
                prop_assert!(last == SbcVerdict::Unknown || v == last);
                last = v;
            }
            let c = BorelCode::node(vec![cylinders_leaf(&[vec![0, 1]]).unwrap()], cylinders_leaf(&[vec![1]]).unwrap());
            let mut last = PointVerdict::Unknown;
            for fuel in [1, 4, 16, 64, 256, 4096] {
                let v = eval_code_at_point(&cantor(), &c, &point(&bits), fuel).unwrap();
                prop_assert!(last == PointVerdict::Unknown || v == last);
                last = v;
            }
        }
    }

    /// Brute force over every map t' from p's support to q's.
    fn leq_oracle(p: &BorelCode, q: &BorelCode, depth: u32) -> bool {
        match (p, q) {
            (_, BorelCode::Leaf(_)) => true,
            (BorelCode::Leaf(_), _) => false,
            _ if depth == 0 => false,
            (BorelCode::Node(Children::Listed { list: pl, tail: pt }), BorelCode::Node(Children::Listed { list: ql, tail: qt })) => {
                let ps: Vec<_> = pl.iter().chain(std::iter::once(pt)).collect();
                let qs: Vec<_> = ql.iter().chain(std::iter::once(qt)).collect();
                let maps = (qs.len() as u64).pow(ps.len() as u32);
                (0..maps).any(|mut m| {
                    ps.iter().all(|pn| {
                        let t = (m % qs.len() as u64) as usize;
                        m /= qs.len() as u64;
                        leq_oracle(pn, qs[t], depth - 1)
                    })
                })
            }
            _ => unreachable!("finite supports"),
        }
    }

    #[test]
    fn leq_examples() {
        let leaf = top();
        let r1 = BorelCode::node(vec![top(), bot()], top());
        let r2 = BorelCode::node(vec![r1.clone(), neg(&bot())], r1.clone());
        assert_eq!(leq_sigma_bounded(&r2, &leaf, 1).unwrap(), LeqVerdict::Yes);
        assert_eq!(leq_sigma_bounded(&r2, &r2, 3).unwrap(), LeqVerdict::Yes);
        assert_eq!(leq_sigma_bounded(&r1, &r2, 4).unwrap(), LeqVerdict::NoWitnessFound);
        assert!(leq_oracle(&r2, &r2, 3) && !leq_oracle(&r1, &r2, 4));
        assert!(leq_sigma_bounded(&r1, &r2, 0).is_err());

        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let (p, q) = (random_sbc(&mut rng, 3), random_sbc(&mut rng, 3));
            let depth = rng.gen_range(1..4);
            let expected = if leq_oracle(&p, &q, depth) { LeqVerdict::Yes } else { LeqVerdict::NoWitnessFound };
            assert_eq!(leq_sigma_bounded(&p, &q, depth).unwrap(), expected);
        }
    }

    #[test]
    fn successor_adds_one_to_rank() {
        let r2 = BorelCode::node(vec![neg(&top())], top());
        assert_eq!(rank(&successor(&r2)).unwrap(), rank(&r2).unwrap().succ().unwrap());
    }

    fn universe_with(chi: impl Fn(u64, &BaireName, &mut Fuel) -> Result<Nat> + Send + Sync + 'static) -> (Universe, FunctionName) {
        let mut u = Universe::standard();
        let id = u.register_native("chi", move |_, pos, x, _, fuel| chi(pos, x, fuel));
        (u, FunctionName::program(id))
    }

    #[test]
    fn chi_reconstruction() {
        let d = cantor();
        // leaf head, then ⊤ exactly on [01]
        let (u, chi) = universe_with(|pos, x, fuel| {
            if pos == 0 {
                return Ok(0);
            }
            Ok((x.force(0, fuel)? == 0 && x.force(1, fuel)? == 1) as Nat)
        });
        let code = chi_to_code_bounded(&u, &chi, Some(2), 1_000).unwrap();
        let target = cylinders_leaf(&[vec![0, 1]]).unwrap();
        for w in words(3) {
            assert_eq!(
                eval_code_at_point(&d, &code, &point(&w), 10_000).unwrap(),
                eval_code_at_point(&d, &target, &point(&w), 10_000).unwrap()
            );
        }
        assert!(matches!(chi_to_code_bounded(&u, &chi, Some(1), 1_000), Err(Error::BudgetExceeded(_))));
        assert_eq!(chi_to_code_bounded(&u, &chi, None, 1_000).unwrap_err(), Error::UndeclaredModulus);

        let (u, one) = universe_with(|pos, _, _| Ok((pos > 0) as Nat));
        let code = chi_to_code_bounded(&u, &one, Some(0), 1_000).unwrap();
        assert_eq!(code.to_sexpr().unwrap(), whole_cantor().to_sexpr().unwrap());
    }

    #[test]
    fn sexpr_round_trip() {
        let p = ProgramTable::builtin();
        let text = "(node (leaf theta [1 2]) (leaf sierp const 1 total=top) tail=(node tail=(leaf sierp table [0 0 1] total=top)))";
        let c = BorelCode::parse(text, &p).unwrap();
        assert_eq!(c.to_sexpr().unwrap(), text);
        assert_eq!(rank(&c).unwrap(), CodeRank::finite(2));

        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..20 {
            let c = random_sbc(&mut rng, 4);
            let s = c.to_sexpr().unwrap();
            let back = BorelCode::parse(&s, &p).unwrap();
            assert_eq!(back.to_sexpr().unwrap(), s);
            assert_eq!(eval(&back), eval(&c));
        }
        for bad in ["(leaf)", "(node (leaf theta [1]))", "(leaf sierp const 1 total=maybe)", "(leaf theta [x])", "(leaf theta [1]) x"] {
            assert!(BorelCode::parse(bad, &p).is_err(), "{bad}");
        }
        let deep = format!("{}(leaf theta []){}", "(node tail=".repeat(MAX_DEPTH + 2), ")".repeat(MAX_DEPTH + 2));
        assert!(BorelCode::parse(&deep, &p).is_err());
    }
}
