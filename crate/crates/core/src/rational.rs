use num::bigint::{BigInt, BigUint};
use num::{BigRational, One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Exact rationals, always in lowest terms with positive denominator.
pub type Rational = BigRational;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

pub fn int(n: i128) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// `2^{-k}`
pub fn pow2_neg(k: u32) -> Rational {
    Rational::new(BigInt::one(), BigInt::one() << k as usize)
}

pub fn pow2(k: u32) -> Rational {
    Rational::from_integer(BigInt::one() << k as usize)
}

pub fn abs(q: &Rational) -> Rational {
    q.abs()
}

pub fn min(a: Rational, b: Rational) -> Rational {
    if a <= b {
        a
    } else {
        b
    }
}

pub fn max(a: Rational, b: Rational) -> Rational {
    if a >= b {
        a
    } else {
        b
    }
}

/// Largest `k` with `2^{-k} >= q` is not needed often; this returns the
/// smallest `k` such that `2^{-k} <= q` for positive `q`.
pub fn dyadic_exponent_below(q: &Rational) -> u32 {
    assert!(q.is_positive());
    let mut k = 0u32;
    let mut p = Rational::one();
    while &p > q {
        p /= int(2);
        k += 1;
    }
    k
}

/// Floor of `q * 2^k` as a dyadic numerator.
pub fn floor_dyadic(q: &Rational, k: u32) -> BigInt {
    (q * pow2(k)).floor().to_integer()
}

pub fn to_f64(q: &Rational) -> f64 {
    let n = q.numer().to_f64().unwrap_or(f64::NAN);
    let d = q.denom().to_f64().unwrap_or(f64::NAN);
    if n.is_finite() && d.is_finite() {
        n / d
    } else {
        f64::NAN
    }
}

/// Parses `a`, `-a`, `a/b` or a finite decimal `1.25`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let s = s.trim();
    let err = || Error::Parse(format!("not a rational: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((i, f)) = s.split_once('.') {
        let neg = i.starts_with('-');
        let digits = format!("{}{}", i.trim_start_matches('-'), f);
        let n: BigInt = digits.parse().map_err(|_| err())?;
        let d = num::pow(BigInt::from(10), f.len());
        let q = Rational::new(n, d);
        return Ok(if neg { -q } else { q });
    }
    let n: BigInt = s.parse().map_err(|_| err())?;
    Ok(Rational::from_integer(n))
}

pub fn biguint_to_u128(n: &BigUint) -> Option<u128> {
    n.to_u128()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_forms() {
        assert_eq!(parse_rational("1/2").unwrap(), rat(1, 2));
        assert_eq!(parse_rational("-3").unwrap(), int(-3));
        assert_eq!(parse_rational("1.25").unwrap(), rat(5, 4));
        assert_eq!(parse_rational("-0.5").unwrap(), rat(-1, 2));
        assert!(parse_rational("1/0").is_err());
    }

    #[test]
    fn dyadic_helpers() {
        assert_eq!(dyadic_exponent_below(&rat(1, 3)), 2);
        assert_eq!(dyadic_exponent_below(&rat(1, 4)), 2);
        assert_eq!(floor_dyadic(&rat(1, 3), 4), BigInt::from(5));
    }
}
