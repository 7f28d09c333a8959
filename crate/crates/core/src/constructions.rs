//! Re-presentations of a computable metric space: dense-sequence
//! translation, duplicate removal, a repetition-free dense sequence, and
//! the α-rescaling that makes distance comparisons decidable.

use std::cmp::Ordering;
use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::sync::Arc;

use num::bigint::BigUint;
use num::{One, Signed, Zero};

use crate::codec::{nu_q_pos, unpair, unpair_nondiag, Nat};
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::metric::{point_distance, CauchyName, CmsDescriptor, Metric, RpmsDescriptor};
use crate::names::BaireName;
use crate::progress::Progress;
use crate::rational::{int, pow2_neg, Rational};
use crate::sierpinski::stage_slot;

pub type IndexMap = Arc<dyn Fn(Nat, u32, &mut Fuel) -> Result<Nat> + Send + Sync>;

/// Uniform approximation of one dense sequence by another, both ways:
/// `forward(n, k)` is an index `i` with `d(a'_i, a_n) < 2^{-k}`.
#[derive(Clone)]
pub struct DenseSeqMap {
    pub forward: IndexMap,
    pub backward: IndexMap,
}

impl fmt::Debug for DenseSeqMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("DenseSeqMap")
    }
}

impl DenseSeqMap {
    pub fn identity() -> Self {
        let id: IndexMap = Arc::new(|n, _, _| Ok(n));
        DenseSeqMap {
            forward: id.clone(),
            backward: id,
        }
    }

    pub fn new(
        forward: impl Fn(Nat, u32, &mut Fuel) -> Result<Nat> + Send + Sync + 'static,
        backward: impl Fn(Nat, u32, &mut Fuel) -> Result<Nat> + Send + Sync + 'static,
    ) -> Self {
        DenseSeqMap {
            forward: Arc::new(forward),
            backward: Arc::new(backward),
        }
    }

    pub fn inverse(&self) -> Self {
        DenseSeqMap {
            forward: self.backward.clone(),
            backward: self.forward.clone(),
        }
    }
}

/// `output(j) = forward(c(j+1), j+1)`.
pub fn translate_name(m: &DenseSeqMap, c: &CauchyName) -> CauchyName {
    let forward = m.forward.clone();
    let src = c.0.clone();
    CauchyName(BaireName::from_fn(format!("translate({})", c.0.label()), move |j, fuel| {
        let n = src.force(j + 1, fuel)?;
        let k = u32::try_from(j + 1).map_err(|_| Error::Overflow("precision"))?;
        forward(n, k, fuel)
    }))
}

/// Semidecides `x != y` for points given by Cauchy names.
pub fn points_differ(d: &CmsDescriptor, x: &CauchyName, y: &CauchyName, fuel: &mut Fuel) -> Result<bool> {
    let mut k = 0u32;
    loop {
        if point_distance(d, x, y, k, fuel)? > pow2_neg(k) {
            return Ok(true);
        }
        k = k.checked_add(1).ok_or(Error::FuelExhausted)?;
    }
}

// ---------------------------------------------------------------------------
// Injective enumeration of an r.e. set

#[derive(Clone, Default)]
struct Listing {
    stage: u64,
    found: Vec<(u64, u64)>,
    members: BTreeSet<u64>,
}

/// `λ(0), λ(1), ...`: the members of `{n | accepts(n)}` in the order the
/// deterministic dovetail confirms them.
pub struct ReListing {
    accepts: Arc<dyn Fn(u64, &mut Fuel) -> Result<bool> + Send + Sync>,
    progress: Progress<Listing>,
}

impl ReListing {
    pub fn new(accepts: impl Fn(u64, &mut Fuel) -> Result<bool> + Send + Sync + 'static) -> Self {
        ReListing {
            accepts: Arc::new(accepts),
            progress: Progress::new(Listing::default()),
        }
    }

    /// Stalls (FuelExhausted) when the set has at most `m` members.
    pub fn nth(&self, m: usize, fuel: &mut Fuel) -> Result<u64> {
        let accepts = self.accepts.clone();
        self.progress.run(
            fuel,
            |s| Ok(s.found.get(m).copied()),
            move |s, spent, f| {
                // one dovetail stage: a single witness rerun with its budget
                let (w, r) = stage_slot(s.stage);
                s.stage += 1;
                if s.members.contains(&w) {
                    return f.tick();
                }
                let (out, truncated) = f.scoped(r + 1, |inner| accepts(w, inner));
                match out {
                    Ok(true) => {
                        s.members.insert(w);
                        s.found.push((w, spent + f.used()));
                    }
                    Ok(false) => {}
                    Err(Error::FuelExhausted) if truncated => return Err(Error::FuelExhausted),
                    Err(Error::FuelExhausted) => {}
                    Err(e) => return Err(e),
                }
                Ok(())
            },
        )
    }
}

/// Duplicate-free subsequence of `xs`: enumerates
/// `{n | for all i < n, x_i != x_n}` injectively.
pub struct RemoveDuplicates {
    pub xs: Arc<dyn Fn(u64) -> CauchyName + Send + Sync>,
    listing: ReListing,
}

impl RemoveDuplicates {
    /// Index into `xs` of the `m`-th output point.
    pub fn nth_index(&self, m: usize, fuel: &mut Fuel) -> Result<u64> {
        self.listing.nth(m, fuel)
    }

    pub fn nth(&self, m: usize, fuel: &mut Fuel) -> Result<CauchyName> {
        Ok((self.xs)(self.nth_index(m, fuel)?))
    }
}

pub fn remove_duplicates(d: &CmsDescriptor, xs: impl Fn(u64) -> CauchyName + Send + Sync + 'static) -> RemoveDuplicates {
    let xs: Arc<dyn Fn(u64) -> CauchyName + Send + Sync> = Arc::new(xs);
    let space = d.clone();
    let seq = xs.clone();
    let listing = ReListing::new(move |n, fuel| {
        let xn = seq(n);
        for i in 0..n {
            if !points_differ(&space, &seq(i), &xn, fuel)? {
                return Ok(false);
            }
        }
        Ok(true)
    });
    RemoveDuplicates { xs, listing }
}

// ---------------------------------------------------------------------------
// Repetition-free dense sequence

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SkipRecord {
    /// Precision parameter of the round.
    pub round: u32,
    /// Position in the emitted sequence witnessing `min_b < 2^{-round}`.
    pub witness: u64,
    stamp: u64,
}

#[derive(Clone, Default)]
struct DedupState {
    /// Original indices of `a'_0, a'_1, ...` with cost stamps.
    emitted: Vec<(Nat, u64)>,
    position: HashMap<Nat, usize>,
    pending: Vec<Nat>,
    skips: HashMap<Nat, Vec<SkipRecord>>,
    n: u32,
    next: Nat,
}

/// One run of the emission algorithm, shared by the new descriptor and
/// both directions of the identity.
pub struct DedupRun {
    pub base: CmsDescriptor,
    progress: Progress<DedupState>,
}

impl DedupRun {
    fn step(base: &CmsDescriptor, s: &mut DedupState, spent: u64, f: &mut Fuel) -> Result<()> {
        if s.emitted.is_empty() {
            base.check_index(0)?;
            f.tick()?;
            s.emitted.push((0, spent + f.used()));
            s.position.insert(0, 0);
            s.n = 1;
            s.next = 1;
            return Ok(());
        }
        if let Some(size) = base.metric.size() {
            if s.next >= size {
                return Err(Error::Unsupported("dedup of a finite sequence never terminates".into()));
            }
        }
        s.pending.push(s.next);
        s.next += 1;
        s.n += 1;
        let n = s.n;
        let precision = n + 3;
        let skip_below = pow2_neg(n) * Rational::new(5.into(), 8.into());
        loop {
            let mut emitted = None;
            for (slot, &b) in s.pending.iter().enumerate() {
                // min over A' at precision n+3, keeping the argmin
                let mut best: Option<(Rational, usize)> = None;
                for (l, &(a, _)) in s.emitted.iter().enumerate() {
                    let v = base.dist_approx(a, b, precision, f)?;
                    if best.as_ref().map_or(true, |(m, _)| &v < m) {
                        best = Some((v, l));
                    }
                }
                let (m, l) = best.expect("A' is never empty");
                if m > skip_below {
                    // certified min_b > 2^{-n-1}
                    emitted = Some(slot);
                    break;
                }
                // certified min_b < 2^{-n}
                let rec = s.skips.entry(b).or_default();
                let stamp = spent + f.used();
                match rec.last_mut() {
                    Some(last) if last.round == n => last.witness = l as u64,
                    _ => rec.push(SkipRecord {
                        round: n,
                        witness: l as u64,
                        stamp,
                    }),
                }
            }
            match emitted {
                Some(slot) => {
                    let b = s.pending.remove(slot);
                    s.position.insert(b, s.emitted.len());
                    s.emitted.push((b, spent + f.used()));
                }
                None => break,
            }
        }
        Ok(())
    }

    /// Original index of `a'_i`.
    pub fn original(&self, i: u64, fuel: &mut Fuel) -> Result<Nat> {
        let base = self.base.clone();
        self.progress.run(
            fuel,
            |s| Ok(s.emitted.get(i as usize).copied()),
            |s, spent, f| DedupRun::step(&base, s, spent, f),
        )
    }

    /// Some `l` with `d(a'_l, a_n) < 2^{-k}`: the position of `a_n` once it
    /// is emitted, or the witness of a skip in a round `>= k`.
    pub fn approximant(&self, n: Nat, k: u32, fuel: &mut Fuel) -> Result<u64> {
        let base = self.base.clone();
        self.progress.run(
            fuel,
            |s| {
                if let Some(&p) = s.position.get(&n) {
                    return Ok(Some((p as u64, s.emitted[p].1)));
                }
                Ok(s.skips
                    .get(&n)
                    .and_then(|recs| recs.iter().find(|r| r.round >= k))
                    .map(|r| (r.witness, r.stamp)))
            },
            |s, spent, f| DedupRun::step(&base, s, spent, f),
        )
    }

    /// Skip records of `a_n` observed so far.
    pub fn skips(&self, n: Nat) -> Vec<SkipRecord> {
        self.progress.peek(|s| s.skips.get(&n).cloned().unwrap_or_default())
    }

    /// Precision parameter reached so far.
    pub fn round(&self) -> u32 {
        self.progress.peek(|s| s.n)
    }

    /// Original indices emitted so far, without running further.
    pub fn emitted_so_far(&self) -> Vec<Nat> {
        self.progress.peek(|s| s.emitted.iter().map(|e| e.0).collect())
    }
}

#[derive(Debug)]
struct DedupMetric {
    run: Arc<DedupRun>,
}

impl fmt::Debug for DedupRun {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "DedupRun({})", self.base.space_id)
    }
}

impl Metric for DedupMetric {
    fn label(&self) -> String {
        format!("dedup({})", self.run.base.metric.label())
    }

    fn approx(&self, u: Nat, v: Nat, k: u32, fuel: &mut Fuel) -> Result<Rational> {
        let a = self.run.original(u as u64, fuel)?;
        let b = self.run.original(v as u64, fuel)?;
        self.run.base.dist_approx(a, b, k, fuel)
    }

    fn compare(&self, u: Nat, v: Nat, q: &Rational, fuel: &mut Fuel) -> Option<Result<Ordering>> {
        if self.run.base.metric.exact(0, 0, &mut Fuel::unlimited()).is_none() {
            return None;
        }
        let pair = (|| {
            let a = self.run.original(u as u64, fuel)?;
            let b = self.run.original(v as u64, fuel)?;
            Ok((a, b))
        })();
        match pair {
            Ok((a, b)) => self.run.base.compare_exact(a, b, q, fuel),
            Err(e) => Some(Err(e)),
        }
    }

    fn dyadic_ultrametric(&self) -> bool {
        self.run.base.metric.dyadic_ultrametric()
    }

    fn coords(&self, u: Nat) -> Option<Vec<Rational>> {
        let a = self.run.original(u as u64, &mut Fuel::new(1_000_000)).ok()?;
        self.run.base.metric.coords(a)
    }

    fn describe(&self, u: Nat) -> String {
        match self.run.original(u as u64, &mut Fuel::new(1_000_000)) {
            Ok(a) => self.run.base.describe(a),
            Err(_) => format!("a'_{u}"),
        }
    }
}

/// Repetition-free re-presentation. The map's forward direction goes from
/// the original sequence to the new one.
pub fn dedup_dense(d: &CmsDescriptor) -> Result<(CmsDescriptor, DenseSeqMap, Arc<DedupRun>)> {
    if d.is_finite() {
        return Err(Error::Unsupported(
            "finite spaces are deduplicated with dedup_finite".into(),
        ));
    }
    let run = Arc::new(DedupRun {
        base: d.clone(),
        progress: Progress::new(DedupState::default()),
    });
    let metric = DedupMetric { run: run.clone() };
    let mut out = CmsDescriptor::new(format!("dedup({})", d.space_id), Arc::new(metric)).repetition_free(true);
    out.complete = d.complete;
    let (r1, r2) = (run.clone(), run.clone());
    let map = DenseSeqMap::new(
        move |n, k, fuel| r1.approximant(n, k, fuel).map(|l| l as Nat),
        move |i, _, fuel| r2.original(i as u64, fuel),
    );
    Ok((out, map, run))
}

/// Keeps the first occurrence of each point of a finite space with exact
/// distances.
pub fn dedup_finite(d: &CmsDescriptor) -> Result<(CmsDescriptor, Vec<Nat>)> {
    let size = d
        .metric
        .size()
        .ok_or_else(|| Error::Precondition("dedup_finite needs a finite space".into()))?;
    let mut keep: Vec<Nat> = Vec::new();
    let mut fuel = Fuel::unlimited();
    for u in 0..size {
        let mut fresh = true;
        for &v in &keep {
            let c = d
                .compare_exact(u, v, &Rational::zero(), &mut fuel)
                .ok_or_else(|| Error::Unsupported("finite dedup needs exact distances".into()))??;
            if c == Ordering::Equal {
                fresh = false;
                break;
            }
        }
        if fresh {
            keep.push(u);
        }
    }
    let points: Vec<Rational> = keep
        .iter()
        .map(|&u| {
            d.metric
                .coords(u)
                .and_then(|c| c.into_iter().next())
                .ok_or_else(|| Error::Unsupported("finite dedup of a non-real space".into()))
        })
        .collect::<Result<_>>()?;
    Ok((crate::metric::finite_space(points)?, keep))
}

// ---------------------------------------------------------------------------
// Rescaling

/// One diagonalization step: the quarter of the current interval chosen
/// for α, and the certified interval of `D_n` it keeps away from.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AlphaStep {
    pub n: u64,
    pub k: u64,
    pub i: Nat,
    pub j: Nat,
    pub d_lo: Rational,
    pub d_hi: Rational,
    pub lo_before: Rational,
    pub width_before: Rational,
    pub quarter: u8,
    stamp: u64,
}

#[derive(Clone, Default)]
struct AlphaState {
    steps: Vec<AlphaStep>,
}

/// A computable α in `[1/2, 1]` avoiding every `D_n = ν⁺(k)/d(a_i, a_j)`.
pub struct Alpha {
    base: CmsDescriptor,
    progress: Progress<AlphaState>,
}

impl fmt::Debug for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Alpha({})", self.base.space_id)
    }
}

/// Quarter preferred at step `n` when `D_n` leaves a choice: base-4
/// digit `n` of `sqrt(2) - 1`, so that α does not drift towards a rational
/// with small denominator.
pub fn preferred_quarter(n: u64) -> u8 {
    let scale = BigUint::one() << (2 * (n as usize + 1));
    let root = (&scale * &scale * 2u32).sqrt();
    ((root % 4u32).to_u32_digits().first().copied().unwrap_or(0)) as u8
}

/// The off-diagonal pair indexed by `m`; finite spaces cycle through
/// their pairs.
pub fn diagonal_pair(size: Option<Nat>, m: Nat) -> (Nat, Nat) {
    match size {
        Some(s) if s >= 2 => {
            let m = m % (s * (s - 1));
            let i = m / (s - 1);
            let r = m % (s - 1);
            (i, if r >= i { r + 1 } else { r })
        }
        _ => unpair_nondiag(m),
    }
}

impl Alpha {
    fn d_interval(&self, i: Nat, j: Nat, q: &Rational, width: &Rational, f: &mut Fuel) -> Result<(Rational, Rational)> {
        if let Some(d) = self.base.metric.exact(i, j, f) {
            let d = d?;
            if d.is_zero() {
                return Err(Error::Precondition("dense sequence has a repetition".into()));
            }
            let v = q / d;
            return Ok((v.clone(), v));
        }
        let mut p = 2u32;
        loop {
            let (lo, hi) = self.base.interval(i, j, p, f)?;
            if lo.is_positive() {
                let (dlo, dhi) = (q / &hi, q / &lo);
                if &(&dhi - &dlo) <= width {
                    return Ok((dlo, dhi));
                }
            }
            p = p.checked_add(1).ok_or(Error::FuelExhausted)?;
        }
    }

    fn step(&self, s: &mut AlphaState, spent: u64, f: &mut Fuel) -> Result<()> {
        let n = s.steps.len() as u64;
        let (lo, w) = match s.steps.last() {
            None => (Rational::new(1.into(), 2.into()), Rational::new(1.into(), 2.into())),
            Some(st) => {
                let qw = &st.width_before / int(4);
                (&st.lo_before + &qw * int(st.quarter as i128), qw)
            }
        };
        let (k, m) = unpair(n as Nat);
        let (i, j) = diagonal_pair(self.base.metric.size(), m);
        f.tick()?;
        let q = nu_q_pos(&BigUint::from(k));
        let margin = &w / int(8);
        let (d_lo, d_hi) = self.d_interval(i, j, &q, &margin, f)?;
        let pref = preferred_quarter(n);
        let order = [pref, (pref + 2) % 4, (pref + 1) % 4, (pref + 3) % 4];
        let qw = &w / int(4);
        let quarter = order
            .into_iter()
            .find(|&c| {
                let q_lo = &lo + &qw * int(c as i128) - &margin;
                let q_hi = &lo + &qw * int(c as i128 + 1) + &margin;
                d_hi < q_lo || d_lo > q_hi
            })
            .expect("an interval of width 3w/8 meets at most three quarters");
        s.steps.push(AlphaStep {
            n,
            k: k as u64,
            i,
            j,
            d_lo,
            d_hi,
            lo_before: lo,
            width_before: w,
            quarter,
            stamp: spent + f.used(),
        });
        Ok(())
    }

    pub fn steps(&self, count: usize, fuel: &mut Fuel) -> Result<Vec<AlphaStep>> {
        if count == 0 {
            return Ok(Vec::new());
        }
        self.progress.run(
            fuel,
            |s| {
                Ok((s.steps.len() >= count).then(|| (s.steps[..count].to_vec(), s.steps[count - 1].stamp)))
            },
            |s, spent, f| self.step(s, spent, f),
        )
    }

    /// `[lo, lo + w]` containing α after `count` steps, `w = 2^{-1-2count}`.
    pub fn interval(&self, count: usize, fuel: &mut Fuel) -> Result<(Rational, Rational)> {
        let steps = self.steps(count, fuel)?;
        let (mut lo, mut w) = (Rational::new(1.into(), 2.into()), Rational::new(1.into(), 2.into()));
        for st in &steps {
            w /= int(4);
            lo += &w * int(st.quarter as i128);
        }
        let hi = &lo + &w;
        Ok((lo, hi))
    }

    /// Binary digits after the point: `1`, then two per step.
    pub fn digits(&self, count: usize, fuel: &mut Fuel) -> Result<Vec<u8>> {
        let steps = self.steps(count.saturating_sub(1).div_ceil(2), fuel)?;
        let mut out = vec![1u8];
        for st in &steps {
            out.push(st.quarter >> 1);
            out.push(st.quarter & 1);
        }
        out.truncate(count);
        Ok(out)
    }
}

#[derive(Debug)]
struct RescaledMetric {
    base: CmsDescriptor,
    alpha: Arc<Alpha>,
}

impl RescaledMetric {
    fn steps_for(width: &Rational) -> usize {
        // 2^{-1-2s} <= width
        let mut s = 0usize;
        let mut w = Rational::new(1.into(), 2.into());
        while &w > width {
            w /= int(4);
            s += 1;
        }
        s
    }
}

impl Metric for RescaledMetric {
    fn label(&self) -> String {
        format!("rescaled({})", self.base.metric.label())
    }

    fn size(&self) -> Option<Nat> {
        self.base.metric.size()
    }

    fn approx(&self, u: Nat, v: Nat, k: u32, fuel: &mut Fuel) -> Result<Rational> {
        let d = self.base.dist_approx(u, v, k + 2, fuel)?;
        let bound = &d + int(1);
        let s = RescaledMetric::steps_for(&(pow2_neg(k + 1) / bound));
        let (lo, _) = self.alpha.interval(s, fuel)?;
        Ok(lo * d)
    }

    fn compare(&self, u: Nat, v: Nat, q: &Rational, fuel: &mut Fuel) -> Option<Result<Ordering>> {
        if u == v {
            return Some(Ok(Rational::zero().cmp(q)));
        }
        let mut s = 0usize;
        Some(loop {
            let r = (|| -> Result<Option<Ordering>> {
                let (alo, ahi) = self.alpha.interval(s, fuel)?;
                let (dlo, dhi) = self.base.interval(u, v, 2 * s as u32 + 2, fuel)?;
                let (plo, phi) = (alo * dlo, ahi * dhi);
                Ok(if &phi < q {
                    Some(Ordering::Less)
                } else if &plo > q {
                    Some(Ordering::Greater)
                } else {
                    None
                })
            })();
            match r {
                Ok(Some(c)) => break Ok(c),
                Ok(None) => s += 1,
                Err(e) => break Err(e),
            }
        })
    }

    fn dyadic_ultrametric(&self) -> bool {
        false
    }

    fn coords(&self, _u: Nat) -> Option<Vec<Rational>> {
        None
    }

    fn describe(&self, u: Nat) -> String {
        self.base.describe(u)
    }
}

/// `(M, αd, a)` together with the generator of α.
#[derive(Clone, Debug)]
pub struct RescaledPresentation {
    pub base: CmsDescriptor,
    pub alpha: Arc<Alpha>,
    pub rescaled: CmsDescriptor,
}

impl RescaledPresentation {
    pub fn rpms(&self) -> Result<RpmsDescriptor> {
        RpmsDescriptor::new(self.rescaled.clone())
    }

    /// Decides `αd(a_i, a_j)` against `q`.
    pub fn cmp_exact(&self, i: Nat, j: Nat, q: &Rational, fuel: &mut Fuel) -> Result<Ordering> {
        self.rescaled
            .compare_exact(i, j, q, fuel)
            .expect("rescaled spaces compare exactly")
    }

    /// Names in `X` become names in `X'` by dropping the first index.
    pub fn to_rescaled(&self, c: &CauchyName) -> CauchyName {
        CauchyName(c.0.shift(1))
    }

    /// `d <= 2αd`, so names in `X'` need the same shift to become names
    /// in `X`.
    pub fn from_rescaled(&self, c: &CauchyName) -> CauchyName {
        CauchyName(c.0.shift(1))
    }
}

pub fn rescale(d: &CmsDescriptor) -> Result<RescaledPresentation> {
    if !d.repetition_free {
        return Err(Error::Precondition(
            "rescale needs a repetition-free dense sequence; run dedup first".into(),
        ));
    }
    if let Some(s) = d.metric.size() {
        if s < 2 {
            return Err(Error::Precondition("rescale needs two distinct points".into()));
        }
    }
    let alpha = Arc::new(Alpha {
        base: d.clone(),
        progress: Progress::new(AlphaState::default()),
    });
    let metric = RescaledMetric {
        base: d.clone(),
        alpha: alpha.clone(),
    };
    let mut rescaled = CmsDescriptor::new(format!("rescaled({})", d.space_id), Arc::new(metric)).repetition_free(true);
    rescaled.complete = d.complete;
    Ok(RescaledPresentation {
        base: d.clone(),
        alpha,
        rescaled,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{rational_code, rational_decode};
    use crate::metric::{euclidean_q, finite_space, integers, real_value, validate_cauchy_prefix, CauchyCheck, RealLine};
    use crate::rational::{abs, rat};
    use num::BigInt;

    #[test]
    fn translate_identity_is_the_shift() {
        let c = CauchyName(BaireName::from_fn("c", |i, _| Ok(3 * i as Nat)));
        let t = translate_name(&DenseSeqMap::identity(), &c);
        let mut f = Fuel::unlimited();
        for j in 0..10 {
            assert_eq!(t.index(j, &mut f).unwrap(), c.index(j + 1, &mut f).unwrap());
        }
    }

    /// Euclidean ℚ whose dense sequence is read through the involution
    /// swapping `2m` and `2m+1`.
    fn swapped() -> CmsDescriptor {
        let perm = |n: Nat| n ^ 1;
        CmsDescriptor::new(
            "swapped",
            Arc::new(RealLine::new("swapped", move |n| Ok(rational_decode(perm(n))))),
        )
    }

    #[test]
    fn translate_through_permutation() {
        let q = euclid();
        let target = swapped();
        let m = DenseSeqMap::new(|n, _, _| Ok(n ^ 1), |n, _, _| Ok(n ^ 1));
        let root2 = crate::metric::sqrt2_name();
        let t = translate_name(&m, &root2);
        assert_eq!(validate_cauchy_prefix(&target, &t, 15, 1_000_000).unwrap(), CauchyCheck::Ok);
        let mut f = Fuel::unlimited();
        let a = real_value(&q, &root2, 12, &mut f).unwrap();
        let b = real_value(&target, &t, 12, &mut f).unwrap();
        assert!(abs(&(a - b)) <= pow2_neg(10));
    }

    fn euclid() -> CmsDescriptor {
        euclidean_q(1).unwrap()
    }

    #[test]
    fn constant_name_translates_to_its_point() {
        let q = euclid();
        let n = rational_code(&rat(3, 7)).unwrap();
        let t = translate_name(&DenseSeqMap::identity(), &CauchyName::constant(n));
        let v = real_value(&q, &t, 12, &mut Fuel::unlimited()).unwrap();
        assert!(abs(&(v - rat(3, 7))) <= pow2_neg(12));
    }

    fn integer_points(f: impl Fn(u64) -> i64 + Send + Sync + 'static) -> impl Fn(u64) -> CauchyName + Send + Sync {
        move |i| CauchyName::constant(rational_code(&int(f(i) as i128)).unwrap())
    }

    #[test]
    fn remove_duplicates_examples() {
        let q = euclid();
        let injective = remove_duplicates(&q, integer_points(|i| i as i64));
        let mut f = Fuel::new(1_000_000);
        let got: Vec<u64> = (0..10).map(|m| injective.nth_index(m, &mut f).unwrap()).collect();
        assert_eq!(got, (0..10).collect::<Vec<_>>());

        let doubled = remove_duplicates(&q, integer_points(|i| (i / 2) as i64));
        let mut f = Fuel::new(5_000_000);
        let got: Vec<u64> = (0..10).map(|m| doubled.nth_index(m, &mut f).unwrap()).collect();
        assert_eq!(got, (0..10).map(|i| 2 * i).collect::<Vec<_>>());
    }

    #[test]
    fn equal_points_with_distinct_names_are_never_told_apart() {
        let q = euclid();
        // 1/2 and 2/4 have different dense indices
        let a = CauchyName::constant(rational_code(&rat(1, 2)).unwrap());
        let b = CauchyName(BaireName::from_fn("half", |i, _| {
            rational_code(&(rat(1, 2) + Rational::new(1.into(), BigInt::from(1) << (i as usize + 3))))
        }));
        assert!(!matches!(points_differ(&q, &a, &b, &mut Fuel::new(10_000)), Ok(true)));
        let rd = remove_duplicates(&q, move |i| if i == 0 { a.clone() } else if i == 1 { b.clone() } else {
            CauchyName::constant(rational_code(&int(i as i128)).unwrap())
        });
        let mut f = Fuel::new(200_000);
        let got: Vec<u64> = (0..4).map(|m| rd.nth_index(m, &mut f).unwrap()).collect();
        assert!(!got.contains(&1));
    }

    #[test]
    fn finite_range_stalls() {
        let q = euclid();
        let rd = remove_duplicates(&q, integer_points(|i| (i % 2) as i64));
        let mut f = Fuel::new(50_000);
        assert_eq!(rd.nth_index(0, &mut f).unwrap(), 0);
        assert_eq!(rd.nth_index(1, &mut f).unwrap(), 1);
        assert_eq!(rd.nth_index(2, &mut Fuel::new(50_000)), Err(Error::FuelExhausted));
    }

    /// Straightforward rerun of the emission algorithm on exact rationals.
    fn oracle_emissions(points: impl Fn(Nat) -> Rational, count: usize) -> Vec<Nat> {
        let mut emitted: Vec<Nat> = vec![0];
        let mut pending: Vec<Nat> = Vec::new();
        let mut n = 1u32;
        let mut next: Nat = 1;
        while emitted.len() < count {
            pending.push(next);
            next += 1;
            n += 1;
            'again: loop {
                for (slot, &b) in pending.iter().enumerate() {
                    let min = emitted
                        .iter()
                        .map(|&a| abs(&(points(a) - points(b))))
                        .min()
                        .unwrap();
                    if min > pow2_neg(n) * rat(5, 8) {
                        emitted.push(b);
                        pending.remove(slot);
                        continue 'again;
                    }
                }
                break;
            }
        }
        emitted.truncate(count);
        emitted
    }

    #[test]
    fn dedup_on_integers_is_a_relabeling() {
        let z = integers();
        let (_, _, run) = dedup_dense(&z).unwrap();
        let mut f = Fuel::new(1_000_000);
        let got: Vec<Nat> = (0..8).map(|i| run.original(i, &mut f).unwrap()).collect();
        let expected = oracle_emissions(|n| int(n as i128), 8);
        assert_eq!(got, expected);
        assert_eq!(got, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn dedup_matches_oracle_on_euclid() {
        let q = euclid();
        let (_, _, run) = dedup_dense(&q).unwrap();
        let mut f = Fuel::new(5_000_000);
        let got: Vec<Nat> = (0..12).map(|i| run.original(i, &mut f).unwrap()).collect();
        assert_eq!(got, oracle_emissions(rational_decode, 12));
    }

    #[test]
    fn dedup_on_duplicate_heavy_sequence() {
        let dup = CmsDescriptor::new(
            "doubled",
            Arc::new(RealLine::new("doubled", |n| Ok(rational_decode(n / 2)))),
        );
        let (x2, map, run) = dedup_dense(&dup).unwrap();
        let mut f = Fuel::new(5_000_000);
        let got: Vec<Nat> = (0..10).map(|i| run.original(i, &mut f).unwrap()).collect();
        let mut pts: Vec<Rational> = got.iter().map(|&o| rational_decode(o / 2)).collect();
        pts.sort();
        pts.dedup();
        assert_eq!(pts.len(), got.len(), "no point emitted twice");
        // every emitted pair is certified apart
        let mut f = Fuel::unlimited();
        for l in 0..10u128 {
            for m in 0..l {
                assert!(x2.greater_than(l, m, &Rational::zero(), &mut f).unwrap());
            }
        }
        // density on sample targets
        for target in [0u128, 3, 9, 14, 27] {
            for k in 0..=4u32 {
                let l = (map.forward)(target, k, &mut Fuel::new(5_000_000)).unwrap();
                let d = abs(&(rational_decode(run.original(l as u64, &mut f).unwrap() / 2) - rational_decode(target / 2)));
                assert!(d < pow2_neg(k), "target {target} k {k}");
            }
        }
        // backward witnesses
        for b in 0..30u128 {
            for rec in run.skips(b) {
                let j = rec.round;
                let a = run.original(rec.witness, &mut f).unwrap();
                let v = dup.dist_approx(b, a, j + 2, &mut f).unwrap();
                assert!(v < pow2_neg(j) + pow2_neg(j + 2));
            }
        }
    }

    #[test]
    fn preferred_quarters_follow_sqrt2() {
        // sqrt(2) - 1 = 0.122200213... in base 4
        let got: Vec<u8> = (0..9).map(preferred_quarter).collect();
        assert_eq!(got, vec![1, 2, 2, 2, 0, 0, 2, 1, 3]);
    }

    fn two_point() -> CmsDescriptor {
        finite_space(vec![int(0), int(1)]).unwrap()
    }

    #[test]
    fn alpha_avoids_small_rationals() {
        let r = rescale(&two_point()).unwrap();
        let mut f = Fuel::new(10_000_000);
        let (lo, hi) = r.alpha.interval(20, &mut f).unwrap();
        assert!(lo >= rat(1, 2) && hi <= int(1));
        for den in 1..=64i64 {
            for num in 0..=den {
                let q = rat(num, den);
                assert!(abs(&(&lo - &q)) > pow2_neg(20) && abs(&(&hi - &q)) > pow2_neg(20), "{q}");
                assert!(q < lo || q > hi);
            }
        }
    }

    #[test]
    fn alpha_steps_avoid_their_targets() {
        let r = rescale(&two_point()).unwrap();
        let mut f = Fuel::new(10_000_000);
        for st in r.alpha.steps(16, &mut f).unwrap() {
            let d = nu_q_pos(&BigUint::from(st.k));
            let qw = &st.width_before / int(4);
            let q_lo = &st.lo_before + &qw * int(st.quarter as i128);
            let q_hi = &q_lo + &qw;
            assert!(d < q_lo || d > q_hi, "step {}", st.n);
        }
        let digits = r.alpha.digits(24, &mut f).unwrap();
        assert_eq!(digits.len(), 24);
        assert_eq!(digits[0], 1);
    }

    #[test]
    fn rescaled_comparisons_decide() {
        let r = rescale(&two_point()).unwrap();
        let rp = r.rpms().unwrap();
        for den in 1..=50i64 {
            let q = rat(den + 3, 2 * den);
            let mut f = Fuel::new(100_000);
            let c = rp.cmp_exact(0, 1, &q, &mut f).unwrap();
            let (lo, hi) = r.alpha.interval(30, &mut Fuel::unlimited()).unwrap();
            match c {
                Ordering::Less => assert!(lo < q),
                Ordering::Greater => assert!(hi > q),
                Ordering::Equal => panic!("α·1 is irrational-like"),
            }
        }
        assert_eq!(rp.cmp_exact(1, 1, &Rational::zero(), &mut Fuel::new(10)).unwrap(), Ordering::Equal);
    }

    #[test]
    fn rescale_needs_repetition_free() {
        assert!(matches!(rescale(&euclid()), Err(Error::Precondition(_))));
    }

    #[test]
    fn shifted_names_validate_in_both_presentations() {
        let z = integers();
        let r = rescale(&z).unwrap();
        let c = CauchyName::constant(5);
        let c2 = r.to_rescaled(&c);
        assert_eq!(validate_cauchy_prefix(&r.rescaled, &c2, 6, 1_000_000).unwrap(), CauchyCheck::Ok);
        let back = r.from_rescaled(&c2);
        assert_eq!(validate_cauchy_prefix(&z, &back, 6, 1_000_000).unwrap(), CauchyCheck::Ok);
    }

    #[test]
    fn rescaled_approx_is_within_bound() {
        let z = integers();
        let r = rescale(&z).unwrap();
        let mut f = Fuel::new(10_000_000);
        let (lo, hi) = r.alpha.interval(25, &mut f).unwrap();
        for (u, v) in [(0u128, 3u128), (2, 9), (7, 1)] {
            let d = int((u as i128 - v as i128).abs());
            for k in [0u32, 4, 10] {
                let a = r.rescaled.dist_approx(u, v, k, &mut f).unwrap();
                assert!(abs(&(&a - &lo * &d)) <= pow2_neg(k) + (&hi - &lo) * &d);
            }
        }
    }
}
