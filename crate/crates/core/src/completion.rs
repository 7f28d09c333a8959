//! Fast Cauchy sequences and their limits, filter recovery, and ℝ_cf, the
//! reals named by decimal expansions with marked repetitions.

use std::cmp::Ordering;
use std::fmt;

use num::{BigInt, Integer, One, Signed, ToPrimitive, Zero};

use crate::codec::{rational_code, Nat};
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::metric::{point_distance, CauchyCheck, CauchyName, CmsDescriptor};
use crate::names::{BaireName, Stream};
use crate::open_sets::on_to_point;
use crate::rational::{pow2_neg, Rational};
use crate::sierpinski::OpenNatName;

/// `(x_n)` with `d(x_i, x_j) < 2^{-N}` for `i, j >= N`.
#[derive(Clone, Debug)]
pub struct FastCauchyName(pub Stream<CauchyName>);

impl FastCauchyName {
    pub fn constant(x: CauchyName) -> Self {
        FastCauchyName(Stream::constant(x))
    }

    /// Dense points as a sequence of constant names.
    pub fn from_indices(p: &BaireName) -> Self {
        FastCauchyName(p.map("points", |n, _| Ok(CauchyName::constant(n))))
    }
}

/// Precision used when refuting `d(x_i, x_j) < 2^{-i}`.
const FAST_CHECK_PRECISION: u32 = 24;

/// Looks for `i < j < len` with `d(x_i, x_j) >= 2^{-i}` certified.
pub fn validate_fast(d: &CmsDescriptor, s: &FastCauchyName, len: u64, fuel: u64) -> Result<CauchyCheck> {
    let mut fuel = Fuel::new(fuel);
    let run = |fuel: &mut Fuel| -> Result<Option<(u64, u64)>> {
        let xs = s.0.force_prefix(len, fuel)?;
        for j in 1..len {
            for i in 0..j {
                let k = i as u32 + FAST_CHECK_PRECISION;
                let approx = point_distance(d, &xs[i as usize], &xs[j as usize], k, fuel)?;
                if approx - pow2_neg(k) >= pow2_neg(i as u32) {
                    return Ok(Some((i, j)));
                }
            }
        }
        Ok(None)
    };
    match run(&mut fuel) {
        Ok(None) => Ok(CauchyCheck::Ok),
        Ok(Some((i, j))) => Ok(CauchyCheck::Violation(i, j)),
        Err(Error::FuelExhausted) => Ok(CauchyCheck::FuelExhausted),
        Err(e) => Err(e),
    }
}

/// Index `k` of the limit is index `k+1` of `x_{k+1}`:
/// `d(x, a) <= d(x, x_{k+1}) + d(x_{k+1}, a) <= 2^{-(k+1)} + 2^{-(k+1)}`.
pub fn lim_c(d: &CmsDescriptor, s: &FastCauchyName) -> Result<CauchyName> {
    if !d.complete {
        return Err(Error::Precondition(format!("{} is not flagged complete", d.space_id)));
    }
    let s = s.clone();
    Ok(CauchyName(BaireName::from_fn("lim", move |k, fuel| {
        s.0.force(k + 1, fuel)?.index(k + 1, fuel)
    })))
}

/// Index `k` is the center of the first listed ball of radius
/// `2^{-(k+2)}`; consecutive centers form a fast Cauchy sequence.
pub fn recover_from_filter(filter: &OpenNatName) -> CauchyName {
    on_to_point(filter)
}

// ---------------------------------------------------------------------------
// Reals given by rational approximations

/// `q_i` with `|q_i - x| <= 2^{-i}`.
#[derive(Clone, Debug)]
pub struct RealName(pub Stream<Rational>);

impl RealName {
    pub fn from_cauchy(d: &CmsDescriptor, x: &CauchyName) -> Self {
        let (d, x) = (d.clone(), x.clone());
        RealName(Stream::from_fn("real", move |i, fuel| {
            crate::metric::real_value(&d, &x, i as u32, fuel)
        }))
    }
}

// ---------------------------------------------------------------------------
// ℝ_cf

#[derive(Clone, Debug)]
pub enum RcfTail {
    /// Repeated forever; the marker.
    Period(Vec<u8>),
    /// Unmarked digits.
    Digits(Stream<Nat>),
}

/// `int + 0.d_1 d_2 ...` with `prefix` then `tail` as the digits. `int`
/// is the floor, so negative numbers carry complemented digits.
#[derive(Clone, Debug)]
pub struct RcfName {
    pub int: BigInt,
    pub prefix: Vec<u8>,
    pub tail: RcfTail,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RcfVerdict {
    /// `x <= q` holds and `x >= q` fails.
    Le,
    /// `x >= q` holds and `x <= q` fails.
    Ge,
    /// Both hold.
    EqBoth,
}

impl RcfVerdict {
    pub fn word(self) -> &'static str {
        match self {
            RcfVerdict::Le => "LE",
            RcfVerdict::Ge => "GE",
            RcfVerdict::EqBoth => "EQ-both",
        }
    }
}

fn digits_value(ds: &[u8]) -> BigInt {
    ds.iter().fold(BigInt::zero(), |acc, &d| acc * 10 + d)
}

fn pow10(n: usize) -> BigInt {
    num::pow(BigInt::from(10), n)
}

impl RcfName {
    /// Parses `rcf [-]I.D#(P)`, `rcf [-]I.D(P)`, `rcf [-]I.D` or `rcf [-]I`;
    /// a missing period means `(0)`.
    pub fn parse(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad rcf literal {s:?}"));
        let body = s.trim().strip_prefix("rcf").ok_or_else(bad)?.trim();
        let (negative, body) = match body.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, body),
        };
        let (head, period) = match body.find('(') {
            Some(open) => {
                let inner = body[open + 1..].strip_suffix(')').ok_or_else(bad)?;
                (body[..open].trim_end_matches('#'), inner)
            }
            None => (body, "0"),
        };
        let (int_txt, frac_txt) = head.split_once('.').unwrap_or((head, ""));
        let digits = |t: &str| -> Result<Vec<u8>> {
            t.chars()
                .map(|c| c.to_digit(10).map(|d| d as u8).ok_or_else(bad))
                .collect()
        };
        if int_txt.is_empty() {
            return Err(bad());
        }
        let int: BigInt = int_txt.parse().map_err(|_| bad())?;
        let prefix = digits(frac_txt)?;
        let period = digits(period)?;
        if period.is_empty() {
            return Err(bad());
        }
        let name = RcfName {
            int,
            prefix,
            tail: RcfTail::Period(period),
        };
        Ok(if negative { name.negated_marked() } else { name })
    }

    /// `-(I + 0.D(P)) = -(I+1) + 0.(9-D)(9-P)`, since `1 = 0.(9)`.
    fn negated_marked(self) -> Self {
        let flip = |ds: Vec<u8>| ds.into_iter().map(|d| 9 - d).collect::<Vec<_>>();
        let tail = match self.tail {
            RcfTail::Period(p) => RcfTail::Period(flip(p)),
            other => other,
        };
        RcfName {
            int: -self.int - 1,
            prefix: flip(self.prefix),
            tail,
        }
    }

    pub fn is_marked(&self) -> bool {
        matches!(self.tail, RcfTail::Period(_))
    }

    /// The exact value, for marked names.
    pub fn value(&self) -> Option<Rational> {
        let RcfTail::Period(period) = &self.tail else {
            return None;
        };
        let p = self.prefix.len();
        let head = Rational::new(digits_value(&self.prefix), pow10(p));
        let rep = Rational::new(digits_value(period), pow10(p) * (pow10(period.len()) - 1));
        Some(Rational::from_integer(self.int.clone()) + head + rep)
    }

    pub fn digit(&self, n: u64, fuel: &mut Fuel) -> Result<u8> {
        let p = self.prefix.len() as u64;
        if n < p {
            fuel.tick()?;
            return Ok(self.prefix[n as usize]);
        }
        match &self.tail {
            RcfTail::Period(period) => {
                fuel.tick()?;
                Ok(period[((n - p) % period.len() as u64) as usize])
            }
            RcfTail::Digits(s) => {
                let d = s.force(n - p, fuel)?;
                u8::try_from(d)
                    .ok()
                    .filter(|d| *d < 10)
                    .ok_or_else(|| Error::Precondition(format!("digit {d} out of range")))
            }
        }
    }

    /// `int + 0.d_1 ... d_n`, a lower bound within `10^{-n}`.
    pub fn truncation(&self, n: u64, fuel: &mut Fuel) -> Result<Rational> {
        let mut acc = BigInt::zero();
        for i in 0..n {
            acc = acc * 10 + self.digit(i, fuel)?;
        }
        Ok(Rational::from_integer(self.int.clone()) + Rational::new(acc, pow10(n as usize)))
    }
}

impl fmt::Display for RcfName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |ds: &[u8]| ds.iter().map(|d| char::from(b'0' + d)).collect::<String>();
        let (sign, name) = if self.int.is_negative() && self.is_marked() {
            ("-", self.clone().negated_marked())
        } else {
            ("", self.clone())
        };
        write!(f, "rcf {sign}{}.{}", name.int, show(&name.prefix))?;
        match &name.tail {
            RcfTail::Period(p) => write!(f, "#({})", show(p)),
            RcfTail::Digits(_) => write!(f, "..."),
        }
    }
}

/// Decides `x <= q` and `x >= q` together. Marked names are compared
/// exactly; unmarked names digit by digit, which runs out of fuel only
/// when `x = q`.
pub fn rcf_compare(x: &RcfName, q: &Rational, fuel: &mut Fuel) -> Result<RcfVerdict> {
    fuel.tick()?;
    if let Some(v) = x.value() {
        return Ok(match v.cmp(q) {
            Ordering::Less => RcfVerdict::Le,
            Ordering::Greater => RcfVerdict::Ge,
            Ordering::Equal => RcfVerdict::EqBoth,
        });
    }
    let mut lower = Rational::from_integer(x.int.clone());
    let mut width = Rational::one();
    for n in 0u64.. {
        let upper = &lower + &width;
        if &upper < q {
            return Ok(RcfVerdict::Le);
        }
        if &lower > q {
            return Ok(RcfVerdict::Ge);
        }
        width /= Rational::from_integer(10.into());
        lower += &width * Rational::from_integer(x.digit(n, fuel)?.into());
    }
    unreachable!("the digit loop only ends by returning")
}

/// Index `i` is the truncation after `n` digits, `10^{-n} <= 2^{-(i+1)}`,
/// as a Euclidean-ℚ index.
pub fn rcf_to_r(x: &RcfName) -> CauchyName {
    let x = x.clone();
    CauchyName(BaireName::from_fn("rcf->R", move |i, fuel| {
        let target = pow2_neg(i as u32 + 1);
        let mut n = 0u64;
        let mut w = Rational::one();
        while w > target {
            w /= Rational::from_integer(10.into());
            n += 1;
        }
        rational_code(&x.truncation(n, fuel)?)
    }))
}

/// `floor(x 10^n)`, found by refining until an approximation interval
/// fits inside one decimal cell. Never returns when `x 10^n` is an
/// integer: every interval around it straddles a cell boundary.
fn decimal_cell(x: &RealName, n: u32, fuel: &mut Fuel) -> Result<BigInt> {
    let scale = Rational::from_integer(pow10(n as usize));
    for i in 0u64.. {
        // arithmetic on 2^{-i} is charged by machine word
        fuel.spend(1 + i / 64)?;
        let q = x.0.force(i, fuel)?;
        let e = pow2_neg(i as u32);
        let lo = ((&q - &e) * &scale).floor().to_integer();
        let hi_scaled = (&q + &e) * &scale;
        if hi_scaled.is_integer() {
            continue;
        }
        if lo == hi_scaled.floor().to_integer() {
            return Ok(lo);
        }
    }
    unreachable!("the refinement loop only ends by returning")
}

/// Tries to write `x` in ℝ_cf: the integer part and `digits` certified
/// digits, then further digits on demand. The result is never marked,
/// and on a decimal boundary the extraction runs out of fuel. That is the
/// failure of ℝ → ℝ_cf.
pub fn r_to_rcf_demo(x: &RealName, digits: u32, fuel: &mut Fuel) -> Result<RcfName> {
    let int = decimal_cell(x, 0, fuel)?;
    let mut prefix = Vec::with_capacity(digits as usize);
    for n in 1..=digits {
        let c = decimal_cell(x, n, fuel)?;
        prefix.push(c.mod_floor(&BigInt::from(10)).to_u8().expect("digit"));
    }
    let rest = x.clone();
    let tail = Stream::from_fn("rcf digits", move |k, fuel| {
        let c = decimal_cell(&rest, digits + 1 + k as u32, fuel)?;
        Ok(c.mod_floor(&BigInt::from(10)).to_u128().expect("digit"))
    });
    Ok(RcfName {
        int,
        prefix,
        tail: RcfTail::Digits(tail),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::rational_decode;
    use crate::metric::{complete, euclidean_q, sqrt2_name};
    use crate::open_sets::point_to_on;
    use crate::rational::{abs, rat};
    use proptest::prelude::*;

    fn reals() -> CmsDescriptor {
        complete(&euclidean_q(1).unwrap())
    }

    fn at(q: &Rational) -> CauchyName {
        CauchyName::constant(rational_code(q).unwrap())
    }

    /// x_n = floor(q 2^{n+1}) / 2^{n+1}, each a constant name
    fn dyadic_seq(q: Rational) -> FastCauchyName {
        FastCauchyName(Stream::from_fn("dyadic seq", move |n, _| {
            let scale = pow2_neg(n as u32 + 1);
            Ok(at(&((&q / &scale).floor() * scale)))
        }))
    }

    fn value_at(x: &CauchyName, k: u64) -> Rational {
        rational_decode(x.index(k, &mut Fuel::new(10_000_000)).unwrap())
    }

    #[test]
    fn limit_of_constant_sequence() {
        let d = reals();
        let a = rat(5, 7);
        let x = lim_c(&d, &FastCauchyName::constant(at(&a))).unwrap();
        assert!(abs(&(value_at(&x, 8) - &a)) <= pow2_neg(10));
    }

    #[test]
    fn limit_of_dyadic_third() {
        let d = reals();
        let x = lim_c(&d, &dyadic_seq(rat(1, 3))).unwrap();
        for k in [0, 4, 8] {
            assert!(abs(&(value_at(&x, k) - rat(1, 3))) <= pow2_neg(k as u32 + 2));
        }
    }

    #[test]
    fn sqrt2_surrogate_is_fast() {
        let d = reals();
        let root = sqrt2_name();
        let s = FastCauchyName(Stream::from_fn("sqrt2 seq", move |n, f| {
            Ok(CauchyName::constant(root.index(n + 1, f)?))
        }));
        assert_eq!(validate_fast(&d, &s, 16, 10_000_000).unwrap(), CauchyCheck::Ok);
        let x = lim_c(&d, &s).unwrap();
        let v = value_at(&x, 8);
        // |v^2 - 2| <= |v - sqrt2| (v + sqrt2) < 2^{-8} * 3
        assert!(abs(&(&v * &v - rat(2, 1))) < rat(3, 256));
    }

    /// d(0, 1) = 1 is not certified >= 1, so the first refutation is (0, 2).
    #[test]
    fn slow_sequence_is_refuted() {
        let d = reals();
        let s = FastCauchyName::from_indices(&BaireName::from_fn("ints", |n, _| {
            rational_code(&Rational::from_integer((n as i64).into()))
        }));
        assert_eq!(validate_fast(&d, &s, 4, 1_000_000).unwrap(), CauchyCheck::Violation(0, 2));
    }

    #[test]
    fn limit_needs_completeness() {
        let d = euclidean_q(1).unwrap();
        assert!(matches!(
            lim_c(&d, &FastCauchyName::constant(CauchyName::constant(0))),
            Err(Error::Precondition(_))
        ));
    }

    fn exact_filter(q: Rational) -> OpenNatName {
        OpenNatName(BaireName::from_fn("filter", move |m, _| {
            let inside = match crate::open_sets::base_ball(m as Nat)? {
                crate::open_sets::Ball::Basic { center, k } => abs(&(rational_decode(center) - &q)) < pow2_neg(k),
                crate::open_sets::Ball::Empty => false,
            };
            Ok(if inside { m as Nat + 1 } else { 0 })
        }))
    }

    #[test]
    fn recover_examples() {
        let a7 = rational_decode(7);
        let x = recover_from_filter(&exact_filter(a7.clone()));
        assert!(abs(&(value_at(&x, 8) - a7)) <= pow2_neg(10));

        let x = recover_from_filter(&exact_filter(rat(1, 3)));
        assert!(abs(&(value_at(&x, 6) - rat(1, 3))) <= pow2_neg(8));

        let empty = recover_from_filter(&OpenNatName(BaireName::from_fn("empty", |_, _| Ok(0))));
        assert_eq!(empty.index(0, &mut Fuel::new(50_000)), Err(Error::FuelExhausted));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]

        #[test]
        fn limit_of_constant_is_identity(n in -40i64..40, m in 1i64..12) {
            let q = rat(n, m);
            let x = lim_c(&reals(), &FastCauchyName::constant(at(&q))).unwrap();
            prop_assert!(abs(&(value_at(&x, 6) - &q)) <= pow2_neg(8));
        }

        #[test]
        fn recover_inverts_point_filter(c in 0u128..60) {
            let d = euclidean_q(1).unwrap();
            let x = recover_from_filter(&point_to_on(&d, &CauchyName::constant(c)));
            let y = rational_decode(x.index(6, &mut Fuel::new(100_000_000)).unwrap());
            prop_assert!(abs(&(y - rational_decode(c))) <= pow2_neg(8));
        }
    }

    fn rcf(s: &str) -> RcfName {
        RcfName::parse(s).unwrap()
    }

    #[test]
    fn rcf_literals() {
        assert_eq!(rcf("rcf 0.142857#(142857)").value(), Some(rat(1, 7)));
        assert_eq!(rcf("rcf 0.(3)").value(), Some(rat(1, 3)));
        assert_eq!(rcf("rcf 2.5").value(), Some(rat(5, 2)));
        assert_eq!(rcf("rcf -1.25").value(), Some(rat(-5, 4)));
        assert_eq!(rcf("rcf -0.(3)").value(), Some(rat(-1, 3)));
        assert_eq!(rcf("rcf 0.1#(6)").to_string(), "rcf 0.1#(6)");
        assert_eq!(rcf("rcf -2.5").to_string(), "rcf -2.5#(0)");
        for bad in ["0.5", "rcf .5", "rcf 1.2(", "rcf 1.x", "rcf 1.()"] {
            assert!(RcfName::parse(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn rcf_compare_examples() {
        let mut f = Fuel::new(100);
        assert_eq!(rcf_compare(&rcf("rcf 0.(3)"), &rat(1, 3), &mut f).unwrap(), RcfVerdict::EqBoth);
        assert_eq!(rcf_compare(&rcf("rcf 1.(0)"), &rat(1, 1), &mut f).unwrap(), RcfVerdict::EqBoth);
        assert_eq!(rcf_compare(&rcf("rcf 0.(9)"), &rat(1, 1), &mut f).unwrap(), RcfVerdict::EqBoth);
        assert_eq!(rcf_compare(&rcf("rcf 0.(3)"), &rat(1, 2), &mut f).unwrap(), RcfVerdict::Le);
        assert_eq!(rcf_compare(&rcf("rcf 0.(3)"), &rat(3, 10), &mut f).unwrap(), RcfVerdict::Ge);
    }

    #[test]
    fn rcf_compare_is_total_on_small_denominators() {
        let x = rcf("rcf 0.1#(6)");
        for den in (1..=10_000i64).step_by(97) {
            for num in [0, den / 6, den / 3, den] {
                let q = rat(num, den);
                let v = rcf_compare(&x, &q, &mut Fuel::new(10)).unwrap();
                let expected = match rat(1, 6).cmp(&q) {
                    Ordering::Less => RcfVerdict::Le,
                    Ordering::Greater => RcfVerdict::Ge,
                    Ordering::Equal => RcfVerdict::EqBoth,
                };
                assert_eq!(v, expected);
            }
        }
    }

    #[test]
    fn unmarked_names_compare_by_digits() {
        let threes = RcfName {
            int: BigInt::zero(),
            prefix: vec![],
            tail: RcfTail::Digits(Stream::constant(3)),
        };
        let mut f = Fuel::new(1_000);
        assert_eq!(rcf_compare(&threes, &rat(1, 4), &mut f).unwrap(), RcfVerdict::Ge);
        assert_eq!(rcf_compare(&threes, &rat(1, 3), &mut f), Err(Error::FuelExhausted));
    }

    #[test]
    fn rcf_to_reals_preserves_order() {
        let d = euclidean_q(1).unwrap();
        let x = rcf("rcf 0.142857#(142857)");
        let y = rcf_to_r(&x);
        assert_eq!(crate::metric::validate_cauchy_prefix(&d, &y, 20, 1_000_000).unwrap(), CauchyCheck::Ok);
        let approx = value_at(&y, 20);
        for i in 0..100i64 {
            let q = rat(i - 50, 70);
            if q == rat(1, 7) {
                continue;
            }
            let cf = rcf_compare(&x, &q, &mut Fuel::new(10)).unwrap();
            // |approx - 1/7| <= 2^{-21}, and each q differs from 1/7 by at least 1/70
            let real = if approx < q { RcfVerdict::Le } else { RcfVerdict::Ge };
            assert_eq!(cf, real, "{q}");
        }
    }

    #[test]
    fn r_to_rcf_fails_at_a_boundary() {
        // 1/2 ± 2^{-(i+1)}, alternating
        let osc = RealName(Stream::from_fn("osc", |i, _| {
            let e = pow2_neg(i as u32 + 1);
            Ok(if i % 2 == 0 { rat(1, 2) + e } else { rat(1, 2) - e })
        }));
        let r = r_to_rcf_demo(&osc, 3, &mut Fuel::new(100_000));
        assert!(matches!(r, Err(Error::FuelExhausted)));
    }

    #[test]
    fn r_to_rcf_reads_a_third() {
        let d = euclidean_q(1).unwrap();
        let x = RealName::from_cauchy(&d, &at(&rat(1, 3)));
        let mut f = Fuel::new(100_000);
        let name = r_to_rcf_demo(&x, 4, &mut f).unwrap();
        assert_eq!(name.int, BigInt::zero());
        assert_eq!(name.prefix, vec![3, 3, 3, 3]);
        assert_eq!(name.digit(6, &mut f).unwrap(), 3);
        assert!(!name.is_marked());

        let neg = RealName::from_cauchy(&d, &at(&rat(-1, 3)));
        let name = r_to_rcf_demo(&neg, 2, &mut f).unwrap();
        assert_eq!(name.int, BigInt::from(-1));
        assert_eq!(name.prefix, vec![6, 6]);
    }
}
