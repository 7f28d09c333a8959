//! Computable and recursively presented metric spaces, Cauchy names, and
//! the built-in example spaces.

use std::cmp::Ordering;
use std::fmt;
use std::sync::Arc;

use num::{One, Signed, Zero};

use crate::codec::{decode_word, nu_q_small, rational_code, rational_decode, unpair, Nat};
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::names::BaireName;
use crate::rational::{abs, int, pow2_neg, Rational};
use crate::vm::RealizerProgram;

/// A dense sequence together with a distance oracle on it.
pub trait Metric: Send + Sync + fmt::Debug {
    fn label(&self) -> String;

    /// Number of dense points, when finite.
    fn size(&self) -> Option<Nat> {
        None
    }

    /// Some `r` with `|r - d(a_u, a_v)| <= 2^{-k}`.
    fn approx(&self, u: Nat, v: Nat, k: u32, fuel: &mut Fuel) -> Result<Rational>;

    /// The exact distance, for spaces whose distances are rational and known.
    fn exact(&self, _u: Nat, _v: Nat, _fuel: &mut Fuel) -> Option<Result<Rational>> {
        None
    }

    /// Decides how `d(a_u, a_v)` compares with `q`, when that is decidable.
    fn compare(&self, u: Nat, v: Nat, q: &Rational, fuel: &mut Fuel) -> Option<Result<Ordering>> {
        self.exact(u, v, fuel).map(|d| d.map(|d| d.cmp(q)))
    }

    /// All distances are 0 or `2^{-n}` and balls are clopen.
    fn dyadic_ultrametric(&self) -> bool {
        false
    }

    /// Coordinates of a dense point in ℚ^dim, for Euclidean spaces.
    fn coords(&self, _u: Nat) -> Option<Vec<Rational>> {
        None
    }

    fn describe(&self, u: Nat) -> String {
        format!("a_{u}")
    }
}

#[derive(Clone)]
pub struct CmsDescriptor {
    pub space_id: String,
    pub complete: bool,
    /// Known to list no point twice.
    pub repetition_free: bool,
    pub metric: Arc<dyn Metric>,
}

impl fmt::Debug for CmsDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CmsDescriptor")
            .field("space_id", &self.space_id)
            .field("complete", &self.complete)
            .field("repetition_free", &self.repetition_free)
            .field("metric", &self.metric.label())
            .finish()
    }
}

impl CmsDescriptor {
    pub fn new(space_id: impl Into<String>, metric: Arc<dyn Metric>) -> Self {
        CmsDescriptor {
            space_id: space_id.into(),
            complete: false,
            repetition_free: false,
            metric,
        }
    }

    pub fn repetition_free(mut self, flag: bool) -> Self {
        self.repetition_free = flag;
        self
    }

    pub fn check_index(&self, u: Nat) -> Result<()> {
        match self.metric.size() {
            Some(n) if u >= n => Err(Error::InvalidIndex(format!(
                "{} has {n} dense points, asked for {u}",
                self.space_id
            ))),
            _ => Ok(()),
        }
    }

    pub fn is_finite(&self) -> bool {
        self.metric.size().is_some()
    }

    pub fn dist_approx(&self, u: Nat, v: Nat, k: u32, fuel: &mut Fuel) -> Result<Rational> {
        self.check_index(u)?;
        self.check_index(v)?;
        self.metric.approx(u, v, k, fuel)
    }

    /// Closed interval certified to contain `d(a_u, a_v)`.
    pub fn interval(&self, u: Nat, v: Nat, k: u32, fuel: &mut Fuel) -> Result<(Rational, Rational)> {
        let a = self.dist_approx(u, v, k, fuel)?;
        let e = pow2_neg(k);
        let lo = a.clone() - &e;
        Ok((if lo.is_negative() { Rational::zero() } else { lo }, a + e))
    }

    pub fn compare_exact(&self, u: Nat, v: Nat, q: &Rational, fuel: &mut Fuel) -> Option<Result<Ordering>> {
        if let Err(e) = self.check_index(u).and(self.check_index(v)) {
            return Some(Err(e));
        }
        self.metric.compare(u, v, q, fuel)
    }

    /// One refinement step of the strict-inequality race at precision `k`:
    /// `Some(Less)` certifies `d < q`, `Some(Greater)` certifies `d > q`,
    /// and `Some(Equal)` comes only from an exact comparison.
    pub fn separate(&self, u: Nat, v: Nat, q: &Rational, k: u32, fuel: &mut Fuel) -> Result<Option<Ordering>> {
        if let Some(c) = self.compare_exact(u, v, q, fuel) {
            return c.map(Some);
        }
        let (lo, hi) = self.interval(u, v, k, fuel)?;
        Ok(if &hi < q {
            Some(Ordering::Less)
        } else if &lo > q {
            Some(Ordering::Greater)
        } else {
            None
        })
    }

    /// Races `d < q` against `d > q` with growing precision until one side
    /// is certified; runs out of fuel when `d = q` in a space without
    /// exact comparison.
    pub fn race(&self, u: Nat, v: Nat, q: &Rational, fuel: &mut Fuel) -> Result<Ordering> {
        let mut k = 0u32;
        loop {
            if let Some(c) = self.separate(u, v, q, k, fuel)? {
                return Ok(c);
            }
            k = k.checked_add(1).ok_or(Error::FuelExhausted)?;
        }
    }

    /// Semidecides `d(a_u, a_v) < q`.
    pub fn less_than(&self, u: Nat, v: Nat, q: &Rational, fuel: &mut Fuel) -> Result<bool> {
        self.one_sided(u, v, q, Ordering::Less, fuel)
    }

    /// Semidecides `d(a_u, a_v) > q`.
    pub fn greater_than(&self, u: Nat, v: Nat, q: &Rational, fuel: &mut Fuel) -> Result<bool> {
        self.one_sided(u, v, q, Ordering::Greater, fuel)
    }

    fn one_sided(&self, u: Nat, v: Nat, q: &Rational, want: Ordering, fuel: &mut Fuel) -> Result<bool> {
        let mut k = 0u32;
        loop {
            if let Some(c) = self.separate(u, v, q, k, fuel)? {
                return Ok(c == want);
            }
            k = k.checked_add(1).ok_or(Error::FuelExhausted)?;
        }
    }

    /// The r.e. relation `nu_Q(t) < d(a_u, a_v) < nu_Q(w)`.
    pub fn dist_strict(&self, t: u64, u: Nat, v: Nat, w: u64, fuel: &mut Fuel) -> Result<bool> {
        Ok(self.greater_than(u, v, &nu_q_small(t), fuel)? && self.less_than(u, v, &nu_q_small(w), fuel)?)
    }

    pub fn describe(&self, u: Nat) -> String {
        self.metric.describe(u)
    }
}

/// Completion keeps the dense sequence and the oracle; only the
/// bookkeeping flag changes.
pub fn complete(d: &CmsDescriptor) -> CmsDescriptor {
    let mut out = d.clone();
    out.complete = true;
    out
}

/// A CMS whose comparisons against rationals are decidable.
#[derive(Clone, Debug)]
pub struct RpmsDescriptor {
    pub base: CmsDescriptor,
}

impl RpmsDescriptor {
    pub fn new(base: CmsDescriptor) -> Result<Self> {
        let probe = base.metric.compare(0, 0, &Rational::one(), &mut Fuel::new(1_000_000));
        match probe {
            Some(Ok(_)) => Ok(RpmsDescriptor { base }),
            Some(Err(e)) => Err(e),
            None => Err(Error::Unsupported(format!(
                "{} has no exact distance comparison",
                base.space_id
            ))),
        }
    }

    pub fn cmp_exact(&self, u: Nat, v: Nat, q: &Rational, fuel: &mut Fuel) -> Result<Ordering> {
        self.base
            .compare_exact(u, v, q, fuel)
            .unwrap_or_else(|| Err(Error::Unsupported("exact comparison".into())))
    }

    /// `P(i, j, k)`: `d(r_i, r_j) <= nu_Q(k)`.
    pub fn p_relation(&self, i: Nat, j: Nat, k: u64, fuel: &mut Fuel) -> Result<bool> {
        Ok(self.cmp_exact(i, j, &nu_q_small(k), fuel)? != Ordering::Greater)
    }

    /// `Q(i, j, k)`: `d(r_i, r_j) < nu_Q(k)`.
    pub fn q_relation(&self, i: Nat, j: Nat, k: u64, fuel: &mut Fuel) -> Result<bool> {
        Ok(self.cmp_exact(i, j, &nu_q_small(k), fuel)? == Ordering::Less)
    }
}

/// Every RPMS is a CMS: strict semidecisions are answered by the exact
/// comparison, which the descriptor's `separate` already prefers.
pub fn rpms_as_cms(r: &RpmsDescriptor) -> CmsDescriptor {
    r.base.clone()
}

// ---------------------------------------------------------------------------
// Example spaces

/// A subset of the real line given by a computable sequence of rationals.
#[derive(Clone)]
pub struct RealLine {
    label: String,
    seq: Arc<dyn Fn(Nat) -> Result<Rational> + Send + Sync>,
    size: Option<Nat>,
}

impl fmt::Debug for RealLine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "RealLine({})", self.label)
    }
}

impl RealLine {
    pub fn new(label: impl Into<String>, seq: impl Fn(Nat) -> Result<Rational> + Send + Sync + 'static) -> Self {
        RealLine {
            label: label.into(),
            seq: Arc::new(seq),
            size: None,
        }
    }

    /// Euclidean ℚ with dense sequence `a_<z,d> = zigzag(z)/(d+1)`.
    pub fn rationals() -> Self {
        RealLine::new("euclidean-q", |n| Ok(rational_decode(n)))
    }

    pub fn integers() -> Self {
        RealLine::new("integers", |n| Ok(Rational::from_integer((n as i128).into())))
    }

    pub fn finite(points: Vec<Rational>) -> Self {
        let size = points.len() as Nat;
        let label = format!(
            "finite {{{}}}",
            points.iter().map(|p| p.to_string()).collect::<Vec<_>>().join(", ")
        );
        let mut line = RealLine::new(label, move |n| {
            points
                .get(n as usize)
                .cloned()
                .ok_or_else(|| Error::InvalidIndex(format!("no dense point {n}")))
        });
        line.size = Some(size);
        line
    }

    pub fn point(&self, n: Nat) -> Result<Rational> {
        (self.seq)(n)
    }
}

impl Metric for RealLine {
    fn label(&self) -> String {
        self.label.clone()
    }

    fn size(&self) -> Option<Nat> {
        self.size
    }

    fn approx(&self, u: Nat, v: Nat, _k: u32, fuel: &mut Fuel) -> Result<Rational> {
        self.exact(u, v, fuel).expect("exact metric")
    }

    fn exact(&self, u: Nat, v: Nat, fuel: &mut Fuel) -> Option<Result<Rational>> {
        Some(fuel.tick().and_then(|_| Ok(abs(&(self.point(u)? - self.point(v)?)))))
    }

    fn coords(&self, u: Nat) -> Option<Vec<Rational>> {
        self.point(u).ok().map(|p| vec![p])
    }

    fn describe(&self, u: Nat) -> String {
        match self.point(u) {
            Ok(p) => p.to_string(),
            Err(_) => format!("a_{u}"),
        }
    }
}

/// ℚ^dim with the max norm; index `n` splits into `dim` Cantor components,
/// each read through Euclidean ℚ's dense sequence.
#[derive(Clone, Debug)]
pub struct EuclideanQ {
    pub dim: u32,
}

impl EuclideanQ {
    pub fn point(&self, n: Nat) -> Vec<Rational> {
        let mut out = Vec::with_capacity(self.dim as usize);
        let mut rest = n;
        for _ in 1..self.dim {
            let (c, r) = unpair(rest);
            out.push(rational_decode(c));
            rest = r;
        }
        out.push(rational_decode(rest));
        out
    }

    pub fn index_of(&self, coords: &[Rational]) -> Result<Nat> {
        if coords.len() != self.dim as usize {
            return Err(Error::Precondition(format!("expected {} coordinates", self.dim)));
        }
        let mut n = rational_code(coords.last().expect("dim >= 1"))?;
        for c in coords[..coords.len() - 1].iter().rev() {
            n = crate::codec::pair(rational_code(c)?, n)?;
        }
        Ok(n)
    }
}

impl Metric for EuclideanQ {
    fn label(&self) -> String {
        format!("euclidean-q dim={}", self.dim)
    }

    fn approx(&self, u: Nat, v: Nat, _k: u32, fuel: &mut Fuel) -> Result<Rational> {
        self.exact(u, v, fuel).expect("exact metric")
    }

    fn exact(&self, u: Nat, v: Nat, fuel: &mut Fuel) -> Option<Result<Rational>> {
        Some(fuel.tick().map(|_| {
            self.point(u)
                .iter()
                .zip(self.point(v).iter())
                .map(|(a, b)| abs(&(a - b)))
                .fold(Rational::zero(), |m, x| if x > m { x } else { m })
        }))
    }

    fn coords(&self, u: Nat) -> Option<Vec<Rational>> {
        Some(self.point(u))
    }

    fn describe(&self, u: Nat) -> String {
        let p = self.point(u);
        if p.len() == 1 {
            p[0].to_string()
        } else {
            format!("({})", p.iter().map(|c| c.to_string()).collect::<Vec<_>>().join(", "))
        }
    }
}

/// Baire or Cantor space with `d(x, y) = 2^{-min{n : x(n) != y(n)}}`;
/// dense points are finite words padded with zeros.
#[derive(Clone, Debug)]
pub struct SequenceSpace {
    pub binary: bool,
}

impl SequenceSpace {
    pub fn baire() -> Self {
        SequenceSpace { binary: false }
    }

    pub fn cantor() -> Self {
        SequenceSpace { binary: true }
    }

    /// The word of dense point `n` (before zero padding).
    pub fn word(&self, n: Nat) -> Vec<Nat> {
        if self.binary {
            let m = n + 1;
            let bits = 128 - m.leading_zeros() - 1;
            (0..bits).rev().map(|b| (m >> b) & 1).collect()
        } else {
            decode_word(n)
        }
    }

    pub fn entry(&self, n: Nat, i: usize) -> Nat {
        self.word(n).get(i).copied().unwrap_or(0)
    }

    /// Index of the first difference between dense points, if any.
    pub fn first_difference(&self, u: Nat, v: Nat) -> Option<usize> {
        let (a, b) = (self.word(u), self.word(v));
        let len = a.len().max(b.len());
        (0..len).find(|&i| a.get(i).copied().unwrap_or(0) != b.get(i).copied().unwrap_or(0))
    }

    /// Dense index of the word `w` (zero padded).
    pub fn index_of(&self, w: &[Nat]) -> Result<Nat> {
        if self.binary {
            let mut m: Nat = 1;
            for &b in w {
                if b > 1 {
                    return Err(Error::Precondition("Cantor words are binary".into()));
                }
                m = m.checked_mul(2).ok_or(Error::Overflow("cantor index"))? | b;
            }
            Ok(m - 1)
        } else {
            crate::codec::encode_word(w)
        }
    }
}

impl Metric for SequenceSpace {
    fn label(&self) -> String {
        if self.binary { "cantor" } else { "baire" }.to_string()
    }

    fn approx(&self, u: Nat, v: Nat, _k: u32, fuel: &mut Fuel) -> Result<Rational> {
        self.exact(u, v, fuel).expect("exact metric")
    }

    fn exact(&self, u: Nat, v: Nat, fuel: &mut Fuel) -> Option<Result<Rational>> {
        Some(fuel.tick().map(|_| match self.first_difference(u, v) {
            Some(i) => pow2_neg(i as u32),
            None => Rational::zero(),
        }))
    }

    fn dyadic_ultrametric(&self) -> bool {
        true
    }

    fn describe(&self, u: Nat) -> String {
        let w: Vec<String> = self.word(u).iter().map(|e| e.to_string()).collect();
        if w.is_empty() {
            "0^w".to_string()
        } else {
            format!("{}.0^w", w.join("."))
        }
    }
}

/// Two copies of ℕ whose cross distances encode halting times of a suite
/// of machines. Dense index `2i` is `n_i`, `2i+1` is `n'_i`; point `i` is
/// governed by machine `i mod suite.len()`.
#[derive(Clone, Debug)]
pub struct HaltingSpace {
    pub suite: Vec<Arc<RealizerProgram>>,
}

impl HaltingSpace {
    /// `d(n_i, n'_i)` within `2^{-(k+1)}`: exact `1 + 1/s` when machine `i`
    /// halts within `2^{k+1}` steps, else `1`.
    fn spoke(&self, i: Nat, k: u32, fuel: &mut Fuel) -> Result<Rational> {
        let program = &self.suite[(i % self.suite.len() as Nat) as usize];
        let budget = 1u64 << (k + 1).min(62);
        let (out, truncated) = fuel.scoped(budget, |inner| program.halting_steps(inner));
        match out {
            Ok(s) => Ok(Rational::one() + Rational::new(1.into(), (s as i128).into())),
            Err(Error::FuelExhausted) if truncated => Err(Error::FuelExhausted),
            Err(Error::FuelExhausted) => Ok(Rational::one()),
            Err(e) => Err(e),
        }
    }

    /// Steps until machine `i` halts, searching up to `limit` steps.
    pub fn steps(&self, i: Nat, limit: u64) -> Result<Option<u64>> {
        let program = &self.suite[(i % self.suite.len() as Nat) as usize];
        match program.halting_steps(&mut Fuel::new(limit)) {
            Ok(s) => Ok(Some(s)),
            Err(Error::FuelExhausted) => Ok(None),
            Err(e) => Err(e),
        }
    }
}

impl Metric for HaltingSpace {
    fn label(&self) -> String {
        format!(
            "halting suite=[{}]",
            self.suite.iter().map(|p| p.name.clone()).collect::<Vec<_>>().join(", ")
        )
    }

    fn approx(&self, u: Nat, v: Nat, k: u32, fuel: &mut Fuel) -> Result<Rational> {
        fuel.tick()?;
        let (i, pi) = (u / 2, u % 2 == 1);
        let (j, pj) = (v / 2, v % 2 == 1);
        let gap = int(i as i128 - j as i128).abs();
        match (pi, pj) {
            (false, false) => Ok(gap),
            _ if u == v => Ok(Rational::zero()),
            // d(n_j, n'_i) = d(n_i, n'_i) + d(n_i, n_j)
            (false, true) => Ok(self.spoke(j, k, fuel)? + gap),
            (true, false) => Ok(self.spoke(i, k, fuel)? + gap),
            // d(n'_j, n'_i) = d(n_j, n'_i) + d(n'_j, n_j); each spoke is
            // within 2^{-(k+2)}
            (true, true) => Ok(self.spoke(i, k + 1, fuel)? + gap + self.spoke(j, k + 1, fuel)?),
        }
    }

    fn describe(&self, u: Nat) -> String {
        if u % 2 == 0 {
            format!("n_{}", u / 2)
        } else {
            format!("n'_{}", u / 2)
        }
    }
}

pub fn halting_space(suite: Vec<Arc<RealizerProgram>>) -> Result<CmsDescriptor> {
    if suite.is_empty() {
        return Err(Error::Precondition("halting space needs at least one machine".into()));
    }
    let metric = HaltingSpace { suite };
    Ok(CmsDescriptor::new(metric.label(), Arc::new(metric)))
}

/// Distance oracle given by a program: run at position `k` on the input
/// `u, v, 0, 0, ...` it emits the Euclidean-ℚ code of a `2^{-k}`
/// approximation.
#[derive(Clone, Debug)]
pub struct ProgramMetric {
    pub program: Arc<RealizerProgram>,
}

impl Metric for ProgramMetric {
    fn label(&self) -> String {
        format!("custom approx={}", self.program.program_id)
    }

    fn approx(&self, u: Nat, v: Nat, k: u32, fuel: &mut Fuel) -> Result<Rational> {
        let input = BaireName::table(vec![u, v], vec![0])?;
        let r = self.program.run(k as u64, &input, &BaireName::constant(0), fuel)?;
        Ok(rational_decode(r.value))
    }
}

// ---------------------------------------------------------------------------
// Cauchy names

/// `p` names `lim a_{p(i)}` when `d(a_{p(i)}, a_{p(k)}) <= 2^{-i}` for `i < k`.
#[derive(Clone, Debug)]
pub struct CauchyName(pub BaireName);

impl CauchyName {
    pub fn constant(n: Nat) -> Self {
        CauchyName(BaireName::constant(n))
    }

    pub fn index(&self, i: u64, fuel: &mut Fuel) -> Result<Nat> {
        self.0.force(i, fuel)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauchyCheck {
    Ok,
    Violation(u64, u64),
    FuelExhausted,
}

/// Extra precision tried when certifying a strict violation.
const VIOLATION_PRECISION: u32 = 48;

pub fn validate_cauchy_prefix(d: &CmsDescriptor, c: &CauchyName, len: u64, fuel: u64) -> Result<CauchyCheck> {
    let mut fuel = Fuel::new(fuel);
    match check_prefix(d, c, len, &mut fuel) {
        Ok(None) => Ok(CauchyCheck::Ok),
        Ok(Some((i, k))) => Ok(CauchyCheck::Violation(i, k)),
        Err(Error::FuelExhausted) => Ok(CauchyCheck::FuelExhausted),
        Err(e) => Err(e),
    }
}

fn check_prefix(d: &CmsDescriptor, c: &CauchyName, len: u64, fuel: &mut Fuel) -> Result<Option<(u64, u64)>> {
    let idx = c.0.force_prefix(len, fuel)?;
    for k in 1..len {
        for i in 0..k {
            let bound = pow2_neg(i as u32);
            let (u, v) = (idx[i as usize], idx[k as usize]);
            if d.compare_exact(u, v, &bound, fuel).is_some() {
                if d.compare_exact(u, v, &bound, fuel).expect("exact")? == Ordering::Greater {
                    return Ok(Some((i, k)));
                }
                continue;
            }
            for m in 0..VIOLATION_PRECISION {
                let (lo, hi) = d.interval(u, v, i as u32 + m, fuel)?;
                if lo > bound {
                    return Ok(Some((i, k)));
                }
                if hi <= bound {
                    break;
                }
            }
        }
    }
    Ok(None)
}

/// `d(x, y)` within `2^{-k}` for points given by Cauchy names.
pub fn point_distance(d: &CmsDescriptor, x: &CauchyName, y: &CauchyName, k: u32, fuel: &mut Fuel) -> Result<Rational> {
    let i = (k + 2) as u64;
    let u = x.index(i, fuel)?;
    let v = y.index(i, fuel)?;
    d.dist_approx(u, v, k + 2, fuel)
}

/// The limit of a Cauchy name on a real line, within `2^{-k}`.
pub fn real_value(d: &CmsDescriptor, x: &CauchyName, k: u32, fuel: &mut Fuel) -> Result<Rational> {
    let u = x.index(k as u64, fuel)?;
    let c = d
        .metric
        .coords(u)
        .ok_or_else(|| Error::Unsupported(format!("{} is not a real line", d.space_id)))?;
    c.into_iter()
        .next()
        .ok_or_else(|| Error::Unsupported("zero-dimensional point".into()))
}

/// Index stream of floor(sqrt(2) 2^{i+1}) / 2^{i+1}.
pub fn sqrt2_name() -> CauchyName {
    CauchyName(BaireName::from_fn("sqrt2", |i, _| {
        let scale = num::BigInt::from(1) << (2 * (i as usize + 1));
        let n = (scale * 2u32).sqrt();
        rational_code(&Rational::new(n, num::BigInt::from(1) << (i as usize + 1)))
    }))
}

pub fn euclidean_q(dim: u32) -> Result<CmsDescriptor> {
    match dim {
        0 => Err(Error::Precondition("dim must be at least 1".into())),
        1 => Ok(CmsDescriptor::new("euclidean-q dim=1", Arc::new(RealLine::rationals()))),
        _ => Ok(CmsDescriptor::new(format!("euclidean-q dim={dim}"), Arc::new(EuclideanQ { dim }))),
    }
}

pub fn baire() -> CmsDescriptor {
    CmsDescriptor::new("baire", Arc::new(SequenceSpace::baire()))
}

pub fn cantor() -> CmsDescriptor {
    CmsDescriptor::new("cantor", Arc::new(SequenceSpace::cantor()))
}

pub fn integers() -> CmsDescriptor {
    CmsDescriptor::new("integers", Arc::new(RealLine::integers())).repetition_free(true)
}

pub fn finite_space(points: Vec<Rational>) -> Result<CmsDescriptor> {
    let mut sorted = points.clone();
    sorted.sort();
    sorted.dedup();
    if sorted.is_empty() {
        return Err(Error::Precondition("finite space needs a point".into()));
    }
    let free = sorted.len() == points.len();
    let line = RealLine::finite(points);
    Ok(CmsDescriptor::new(line.label(), Arc::new(line)).repetition_free(free))
}
