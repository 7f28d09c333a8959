//! Open sets of metric spaces: the ball numbering `I`, θ-names, Moschovakis
//! neighbourhoods, semirecursive names and the translations between them.

use std::cmp::Ordering;

use num::{BigUint, Integer, Signed, Zero};

use crate::codec::{decode_prime_pair, encode_prime_pair, nu_q, nu_q_inv, pair, unpair, Nat};
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::metric::{CauchyName, CmsDescriptor, RpmsDescriptor};
use crate::names::{BaireName, Stream};
use crate::rational::{biguint_to_u128, dyadic_exponent_below, pow2_neg, Rational};
use crate::sierpinski::{dovetail_find, search, OpenNatName, SemiDecision, Verdict};
use crate::vm::ProgramTable;

/// `I(0) = ∅`, `I(<n,k>+1) = B(a_n, 2^{-k})`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Ball {
    Empty,
    Basic { center: Nat, k: u32 },
}

impl Ball {
    pub fn decode(w: Nat) -> Result<Ball> {
        if w == 0 {
            return Ok(Ball::Empty);
        }
        let (center, k) = unpair(w - 1);
        let k = u32::try_from(k).map_err(|_| Error::Overflow("ball radius exponent"))?;
        Ok(Ball::Basic { center, k })
    }

    pub fn code(&self) -> Result<Nat> {
        match self {
            Ball::Empty => Ok(0),
            Ball::Basic { center, k } => pair(*center, *k as Nat)?
                .checked_add(1)
                .ok_or(Error::Overflow("ball code")),
        }
    }

    pub fn radius(&self) -> Option<Rational> {
        match self {
            Ball::Empty => None,
            Ball::Basic { k, .. } => Some(pow2_neg(*k)),
        }
    }
}

/// The basic open set `U_m = I(m+1)` of the effective base.
pub fn base_ball(m: Nat) -> Result<Ball> {
    Ball::decode(m.checked_add(1).ok_or(Error::Overflow("base index"))?)
}

/// `N(X, 2^{i+1} 3^{k+1}) = {x | d(x, r_i) < nu_Q(k)}`; every other code
/// denotes ∅. The radius is kept as a rational since dyadic radii have
/// enormous `nu_Q` indices.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Nbhd {
    Empty,
    Basic { center: Nat, radius: Rational },
}

/// Calkin-Wilf indices of `p/q` have about as many bits as the sum of the
/// continued fraction digits; refuse codes larger than this.
const MAX_NBHD_CODE_BITS: u64 = 1 << 16;

impl Nbhd {
    pub fn decode(s: &BigUint) -> Result<Nbhd> {
        match decode_prime_pair(s) {
            None => Ok(Nbhd::Empty),
            Some((i, k)) => {
                let center = biguint_to_u128(&i).ok_or(Error::Overflow("nbhd center"))?;
                Ok(Nbhd::Basic {
                    center,
                    radius: nu_q(&k),
                })
            }
        }
    }

    pub fn code(&self) -> Result<BigUint> {
        match self {
            Nbhd::Empty => Ok(BigUint::zero()),
            Nbhd::Basic { center, radius } => {
                if cf_digit_sum(radius) > MAX_NBHD_CODE_BITS {
                    return Err(Error::Overflow("nbhd radius index"));
                }
                encode_prime_pair(&BigUint::from(*center), &nu_q_inv(radius))
            }
        }
    }
}

fn cf_digit_sum(q: &Rational) -> u64 {
    let (mut a, mut b) = (q.numer().abs(), q.denom().clone());
    let mut sum = 0u64;
    while !b.is_zero() {
        let (d, r) = a.div_rem(&b);
        sum = sum.saturating_add(u64::try_from(d).unwrap_or(u64::MAX));
        a = b;
        b = r;
    }
    sum
}

pub fn tau(w: &Ball) -> Nbhd {
    match w {
        Ball::Empty => Nbhd::Empty,
        Ball::Basic { center, k } => Nbhd::Basic {
            center: *center,
            radius: pow2_neg(*k),
        },
    }
}

/// `n` is read as `<j, m>`; emits `B(r_j, 2^{-m})` when
/// `2^{-m} < radius - d(r_i, r_j)`, else ∅.
pub fn sigma(r: &RpmsDescriptor, s: &Nbhd, n: Nat, fuel: &mut Fuel) -> Result<Ball> {
    let Nbhd::Basic { center, radius } = s else {
        return Ok(Ball::Empty);
    };
    let (j, m) = unpair(n);
    let Ok(m) = u32::try_from(m) else {
        return Ok(Ball::Empty);
    };
    if r.base.check_index(*center).is_err() || r.base.check_index(j).is_err() {
        return Ok(Ball::Empty);
    }
    let bound = radius - pow2_neg(m);
    if !bound.is_positive() {
        return Ok(Ball::Empty);
    }
    Ok(match r.cmp_exact(*center, j, &bound, fuel)? {
        Ordering::Less => Ball::Basic { center: j, k: m },
        _ => Ball::Empty,
    })
}

/// Evidence that `x ∈ B(a_center, radius)`: `d(x_j, a_center) <= upper`
/// with `upper < radius - 2^{-j}`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Certificate {
    pub position: u64,
    pub approximant: Nat,
    pub upper: Rational,
}

/// Searches stages `<j, precision>` for a certificate; runs until the fuel
/// is gone when `x` is outside or on the boundary.
pub fn certify(
    d: &CmsDescriptor,
    x: &CauchyName,
    center: Nat,
    radius: &Rational,
    fuel: &mut Fuel,
) -> Result<Certificate> {
    d.check_index(center)?;
    // exact spaces need no precision stages
    let exact = d.metric.exact(center, center, fuel).is_some();
    let mut stage: Nat = 0;
    loop {
        fuel.tick()?;
        let (j, prec) = if exact { (stage, 0) } else { unpair(stage) };
        stage += 1;
        let j = j as u64;
        // arithmetic on 2^{-j} is charged by machine word
        fuel.spend(j / 64)?;
        let slack = radius - pow2_neg(j as u32);
        if !slack.is_positive() {
            continue;
        }
        let u = x.index(j, fuel)?;
        let upper = match d.metric.exact(u, center, fuel) {
            Some(e) => e?,
            None => d.interval(u, center, prec as u32, fuel)?.1,
        };
        if upper < slack {
            return Ok(Certificate {
                position: j,
                approximant: u,
                upper,
            });
        }
    }
}

pub fn ball_certificate(d: &CmsDescriptor, x: &CauchyName, w: &Ball, fuel: &mut Fuel) -> Result<Certificate> {
    match w {
        Ball::Empty => {
            fuel.spend(fuel.remaining())?;
            Err(Error::FuelExhausted)
        }
        Ball::Basic { center, k } => certify(d, x, *center, &pow2_neg(*k), fuel),
    }
}

fn semidecide(fuel: u64, run: impl FnOnce(&mut Fuel) -> Result<()>) -> Result<SemiDecision> {
    let mut f = Fuel::new(fuel);
    let verdict = match run(&mut f) {
        Ok(()) => Verdict::Top,
        Err(Error::FuelExhausted) => Verdict::BotUnconfirmed,
        Err(e) => return Err(e),
    };
    Ok(SemiDecision {
        verdict,
        fuel_used: f.used(),
    })
}

pub fn member_ball(d: &CmsDescriptor, x: &CauchyName, w: Nat, fuel: u64) -> Result<SemiDecision> {
    let ball = Ball::decode(w)?;
    semidecide(fuel, |f| ball_certificate(d, x, &ball, f).map(|_| ()))
}

pub fn member_nbhd(d: &CmsDescriptor, x: &CauchyName, s: &Nbhd, fuel: u64) -> Result<SemiDecision> {
    semidecide(fuel, |f| match s {
        Nbhd::Empty => {
            f.spend(f.remaining())?;
            Err(Error::FuelExhausted)
        }
        Nbhd::Basic { center, radius } => certify(d, x, *center, radius, f).map(|_| ()),
    })
}

/// Which entry of an open-set name confirmed membership, and how.
#[derive(Clone, Debug)]
pub struct Hit {
    pub position: u64,
    pub center: Nat,
    pub radius: Rational,
    pub certificate: Certificate,
}

fn first_hit(
    d: &CmsDescriptor,
    x: &CauchyName,
    entry: impl Fn(u64, &mut Fuel) -> Result<Option<(Nat, Rational)>>,
    fuel: &mut Fuel,
) -> Result<Hit> {
    dovetail_find(fuel, |n, f| {
        let Some((center, radius)) = entry(n, f)? else {
            return Ok(None);
        };
        let certificate = certify(d, x, center, &radius, f)?;
        Ok(Some(Hit {
            position: n,
            center,
            radius,
            certificate,
        }))
    })
}

/// `p` denotes `⋃_n I(p(n))`.
#[derive(Clone, Debug)]
pub struct ThetaEnName(pub BaireName);

impl ThetaEnName {
    pub fn empty() -> Self {
        ThetaEnName(BaireName::constant(0).relabel("theta ∅"))
    }

    pub fn balls(balls: &[Ball]) -> Result<Self> {
        let codes = balls.iter().map(Ball::code).collect::<Result<Vec<_>>>()?;
        Ok(ThetaEnName(BaireName::table(codes, vec![0])?))
    }

    /// `theta [w0 w1 ...]` (then ∅ forever) or `theta <name literal>`.
    pub fn parse(s: &str, programs: &ProgramTable) -> Result<Self> {
        let rest = s
            .trim()
            .strip_prefix("theta")
            .ok_or_else(|| Error::Parse(format!("expected theta name, got {s:?}")))?
            .trim();
        if rest.starts_with('[') {
            BaireName::parse(&format!("table {rest}"), programs).map(ThetaEnName)
        } else {
            BaireName::parse(rest, programs).map(ThetaEnName)
        }
    }

    pub fn ball(&self, n: u64, fuel: &mut Fuel) -> Result<Ball> {
        Ball::decode(self.0.force(n, fuel)?)
    }

    pub fn hit(&self, d: &CmsDescriptor, x: &CauchyName, fuel: &mut Fuel) -> Result<Hit> {
        first_hit(
            d,
            x,
            |n, f| {
                Ok(match self.ball(n, f)? {
                    Ball::Empty => None,
                    Ball::Basic { center, k } => Some((center, pow2_neg(k))),
                })
            },
            fuel,
        )
    }

    pub fn member(&self, d: &CmsDescriptor, x: &CauchyName, fuel: u64) -> Result<SemiDecision> {
        semidecide(fuel, |f| self.hit(d, x, f).map(|_| ()))
    }
}

/// `ε` denotes `⋃_n N(X, ε(n))`.
#[derive(Clone, Debug)]
pub struct SemiRecName(pub Stream<Nbhd>);

impl SemiRecName {
    pub fn from_codes(codes: &BaireName) -> Self {
        SemiRecName(codes.map("semirec", |s, _| Nbhd::decode(&BigUint::from(s))))
    }

    pub fn nbhds(list: Vec<Nbhd>) -> Result<Self> {
        Ok(SemiRecName(Stream::table(list, vec![Nbhd::Empty])?))
    }

    /// `semirec [s0 s1 ...]` (codes `2^{i+1} 3^{k+1}`, then ∅ forever) or
    /// `semirec <name literal>`.
    pub fn parse(s: &str, programs: &ProgramTable) -> Result<Self> {
        let rest = s
            .trim()
            .strip_prefix("semirec")
            .ok_or_else(|| Error::Parse(format!("expected semirec name, got {s:?}")))?
            .trim();
        if let Some(body) = rest.strip_prefix('[') {
            let body = body
                .strip_suffix(']')
                .ok_or_else(|| Error::Parse(format!("unclosed list in {s:?}")))?;
            let list = body
                .split_whitespace()
                .map(|w| {
                    let code: BigUint = w.parse().map_err(|_| Error::Parse(format!("bad nbhd code {w:?}")))?;
                    Nbhd::decode(&code)
                })
                .collect::<Result<Vec<_>>>()?;
            if list.is_empty() {
                return Ok(SemiRecName(Stream::constant(Nbhd::Empty)));
            }
            return SemiRecName::nbhds(list);
        }
        Ok(SemiRecName::from_codes(&BaireName::parse(rest, programs)?))
    }

    pub fn hit(&self, d: &CmsDescriptor, x: &CauchyName, fuel: &mut Fuel) -> Result<Hit> {
        first_hit(
            d,
            x,
            |n, f| {
                Ok(match self.0.force(n, f)? {
                    Nbhd::Empty => None,
                    Nbhd::Basic { center, radius } => Some((center, radius)),
                })
            },
            fuel,
        )
    }

    pub fn member(&self, d: &CmsDescriptor, x: &CauchyName, fuel: u64) -> Result<SemiDecision> {
        semidecide(fuel, |f| self.hit(d, x, f).map(|_| ()))
    }
}

/// Position `<m, n>` of the output is `σ(ε(m), n)`.
pub fn semirec_to_theta(r: &RpmsDescriptor, v: &SemiRecName) -> ThetaEnName {
    let (r, v) = (r.clone(), v.clone());
    ThetaEnName(BaireName::from_fn("semirec->theta", move |t, fuel| {
        let (m, n) = unpair(t as Nat);
        let s = v.0.force(m as u64, fuel)?;
        sigma(&r, &s, n, fuel)?.code()
    }))
}

pub fn theta_to_semirec(u: &ThetaEnName) -> SemiRecName {
    SemiRecName(u.0.map("theta->semirec", |w, _| Ok(tau(&Ball::decode(w)?))))
}

/// The fixed realizer of Base: the first dovetail stage confirming
/// `x ∈ U` yields a ball `B(a_j', 2^{-m})` around a later approximant
/// that still fits inside the confirming ball. Returns the base index.
pub fn base_op(d: &CmsDescriptor, x: &CauchyName, u: &ThetaEnName, fuel: &mut Fuel) -> Result<Nat> {
    let hit = u.hit(d, x, fuel)?;
    let cert = &hit.certificate;
    let gap = &hit.radius - pow2_neg(cert.position as u32) - &cert.upper;
    let m = dyadic_exponent_below(&gap);
    let i = m.max(cert.position as u32) + 1;
    let center = x.index(i as u64, fuel)?;
    pair(center, m as Nat)
}

/// ⋃: 𝒪(ℕ) → 𝒪(X). Entry `m+1` of an 𝒪(ℕ) name is the ball code of
/// `U_m`, so the θ-name is the same stream.
pub fn union_on(s: &OpenNatName) -> ThetaEnName {
    ThetaEnName(s.0.clone())
}

fn stage_budget(b: Nat) -> u64 {
    u64::try_from(b).unwrap_or(u64::MAX).saturating_add(1).saturating_mul(32)
}

/// Runs `task` on a budget; `Ok(None)` when the budget was not enough
/// and `FuelExhausted` when the caller could not afford the budget.
fn budgeted<T>(budget: u64, fuel: &mut Fuel, task: impl FnOnce(&mut Fuel) -> Result<T>) -> Result<Option<T>> {
    let (out, truncated) = fuel.scoped(budget, task);
    match out {
        Ok(v) => Ok(Some(v)),
        Err(Error::FuelExhausted) if !truncated => Ok(None),
        Err(e) => Err(e),
    }
}

/// Position `<n, b>` runs Base on `a_n` with a budget of `32(b+1)`.
pub fn union_on_inverse(d: &CmsDescriptor, u: &ThetaEnName) -> OpenNatName {
    let (d, u) = (d.clone(), u.clone());
    OpenNatName(BaireName::from_fn("union-inverse", move |t, fuel| {
        let (n, b) = unpair(t as Nat);
        if d.check_index(n).is_err() {
            return Ok(0);
        }
        let x = CauchyName::constant(n);
        let found = budgeted(stage_budget(b), fuel, |f| base_op(&d, &x, &u, f))?;
        match found {
            Some(m) => m.checked_add(1).ok_or(Error::Overflow("base index")),
            None => Ok(0),
        }
    }))
}

/// Ball index and budget tried at filter position `t`. Diagonal `s` lists
/// the blocks `j = 0..=s`: balls `2^j - 1 .. 2^{j+1} - 1`, each with a
/// budget of `32 * 2^{s-j}`. Ball `m` gets budget `B` after about
/// `m B log(m B)` steps.
fn filter_stage(t: u64) -> (Nat, u64) {
    let mut rest = t;
    for s in 0u32..64 {
        for j in 0..=s {
            let size = 1u64 << j;
            if rest < size {
                return ((size - 1 + rest) as Nat, 32u64 << (s - j).min(40));
            }
            rest -= size;
        }
    }
    unreachable!("diagonals up to 63 cover every u64 position")
}

/// `{m | x ∈ U_m}`, trying the pairs of [`filter_stage`].
pub fn point_to_on(d: &CmsDescriptor, x: &CauchyName) -> OpenNatName {
    let (d, x) = (d.clone(), x.clone());
    OpenNatName(BaireName::from_fn("point->on", move |t, fuel| {
        let (m, budget) = filter_stage(t);
        let ball = base_ball(m)?;
        if let Ball::Basic { center, .. } = ball {
            if d.check_index(center).is_err() {
                return Ok(0);
            }
        }
        let found = budgeted(budget, fuel, |f| ball_certificate(&d, &x, &ball, f))?;
        Ok(if found.is_some() { m + 1 } else { 0 })
    }))
}

/// Index `k` of the recovered name is the center of the first listed
/// ball of radius `2^{-(k+2)}`.
pub fn on_to_point(s: &OpenNatName) -> CauchyName {
    let s = s.clone();
    CauchyName(BaireName::from_fn("on->point", move |k, fuel| {
        let want = k as Nat + 2;
        let mut found = None;
        search(fuel, |pos, f| {
            let v = s.0.force(pos, f)?;
            if v == 0 {
                return Ok(false);
            }
            let (center, r) = unpair(v - 1);
            if r == want {
                found = Some(center);
            }
            Ok(found.is_some())
        })?;
        found.ok_or(Error::FuelExhausted)
    }))
}

/// True when `B(a_c, 2^{-m}) ⊆ B(a_c0, r0)` is certified by
/// `d(a_c, a_c0) + 2^{-m} <= r0`.
pub fn ball_inside(d: &CmsDescriptor, inner: &Ball, center: Nat, radius: &Rational, fuel: &mut Fuel) -> Result<bool> {
    match inner {
        Ball::Empty => Ok(true),
        Ball::Basic { center: c, k } => {
            let slack = radius - pow2_neg(*k);
            if slack.is_negative() {
                return Ok(false);
            }
            match d.metric.exact(*c, center, fuel) {
                Some(dist) => Ok(dist? <= slack),
                None => match d.compare_exact(*c, center, &slack, fuel) {
                    Some(ord) => Ok(ord? != Ordering::Greater),
                    None => Ok(false),
                },
            }
        }
    }
}
