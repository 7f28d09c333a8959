//! Pairings and numberings on the naturals.
//!
//! `pair` is the Cantor pairing, `nu_q_pos` walks the Calkin–Wilf tree
//! (the Stern–Brocot ordering read breadth first), and `pair_nondiag`
//! skips the diagonal in Cantor order.

use num::bigint::{BigInt, BigUint};
use num::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// Naturals carried by names.
pub type Nat = u128;

fn isqrt(n: Nat) -> Nat {
    if n < 2 {
        return n;
    }
    let mut x = (n as f64).sqrt() as Nat;
    // correct the float estimate in both directions
    while x.checked_mul(x).map_or(true, |sq| sq > n) {
        x -= 1;
    }
    while (x + 1).checked_mul(x + 1).map_or(false, |sq| sq <= n) {
        x += 1;
    }
    x
}

fn triangle(w: Nat) -> Option<Nat> {
    if w % 2 == 0 {
        (w / 2).checked_mul(w + 1)
    } else {
        w.checked_mul((w + 1) / 2)
    }
}

/// Cantor pairing `<x, y> = (x+y)(x+y+1)/2 + y`.
pub fn pair(x: Nat, y: Nat) -> Result<Nat> {
    let s = x.checked_add(y).ok_or(Error::Overflow("pair"))?;
    triangle(s)
        .and_then(|t| t.checked_add(y))
        .ok_or(Error::Overflow("pair"))
}

pub fn unpair(z: Nat) -> (Nat, Nat) {
    let mut w = isqrt(z.saturating_mul(2));
    while triangle(w).map_or(true, |t| t > z) {
        w -= 1;
    }
    while triangle(w + 1).map_or(false, |t| t <= z) {
        w += 1;
    }
    let y = z - triangle(w).unwrap_or(0);
    (w - y, y)
}

fn is_diagonal_code(c: Nat) -> bool {
    let (x, y) = unpair(c);
    x == y
}

/// Number of diagonal Cantor codes strictly below `c`; `<n,n> = 2n^2 + 2n`.
fn diagonal_below(c: Nat) -> Nat {
    if c == 0 {
        return 0;
    }
    let bound = c - 1;
    let mut n = isqrt(bound / 2);
    while n > 0 && 2 * n * (n + 1) > bound {
        n -= 1;
    }
    while 2 * (n + 1) * (n + 2) <= bound {
        n += 1;
    }
    n + 1
}

/// Bijection from off-diagonal pairs onto the naturals.
pub fn pair_nondiag(i: Nat, j: Nat) -> Result<Nat> {
    if i == j {
        return Err(Error::Precondition(format!(
            "pair_nondiag undefined on the diagonal ({i},{j})"
        )));
    }
    let c = pair(i, j)?;
    Ok(c - diagonal_below(c))
}

pub fn unpair_nondiag(m: Nat) -> (Nat, Nat) {
    let mut c = m;
    loop {
        let f = c - diagonal_below(c);
        if f < m {
            c += m - f;
        } else if is_diagonal_code(c) {
            c += 1;
        } else {
            return unpair(c);
        }
    }
}

/// Finite words over the naturals: `0` is the empty word and `n+1`
/// codes `h :: w` where `<h, code(w)> = n`.
pub fn decode_word(n: Nat) -> Vec<Nat> {
    let mut out = Vec::new();
    let mut n = n;
    while n > 0 {
        let (h, t) = unpair(n - 1);
        out.push(h);
        n = t;
    }
    out
}

pub fn encode_word(w: &[Nat]) -> Result<Nat> {
    let mut n: Nat = 0;
    for &h in w.iter().rev() {
        n = pair(h, n)?.checked_add(1).ok_or(Error::Overflow("encode_word"))?;
    }
    Ok(n)
}

/// 0, 1, -1, 2, -2, ... read from the naturals.
pub fn zigzag(z: Nat) -> BigInt {
    if z % 2 == 1 {
        BigInt::from(z / 2 + 1)
    } else {
        -BigInt::from(z / 2)
    }
}

pub fn unzigzag(v: &BigInt) -> Result<Nat> {
    let twice: BigInt = if v.is_positive() { v * 2 - 1 } else { -v * 2 };
    u128::try_from(twice).map_err(|_| Error::Overflow("unzigzag"))
}

/// Positive rationals: node `n+1` of the Calkin–Wilf tree.
pub fn nu_q_pos(n: &BigUint) -> Rational {
    let node = n + 1u32;
    let bits = node.bits();
    let mut a = BigInt::one();
    let mut b = BigInt::one();
    for i in (0..bits.saturating_sub(1)).rev() {
        if node.bit(i) {
            a += &b;
        } else {
            b += &a;
        }
    }
    Rational::new(a, b)
}

pub fn nu_q_pos_inv(q: &Rational) -> Result<BigUint> {
    if !q.is_positive() {
        return Err(Error::Precondition(format!("{q} is not positive")));
    }
    let mut a = q.numer().clone();
    let mut b = q.denom().clone();
    // runs of equal path bits, collected leaf to root
    let mut runs: Vec<(bool, BigInt)> = Vec::new();
    while !(a.is_one() && b.is_one()) {
        if a < b {
            let t = (&b - 1u32) / &a;
            b -= &t * &a;
            runs.push((false, t));
        } else {
            let t = (&a - 1u32) / &b;
            a -= &t * &b;
            runs.push((true, t));
        }
    }
    let mut node = BigUint::one();
    for (bit, count) in runs.into_iter().rev() {
        let count: usize = count
            .try_into()
            .map_err(|_| Error::Overflow("nu_q_pos_inv"))?;
        node <<= count;
        if bit {
            node += (BigUint::one() << count) - 1u32;
        }
    }
    Ok(node - 1u32)
}

/// `nu_Q(0) = 0`, odd indices enumerate the positive rationals and even
/// indices their negatives.
pub fn nu_q(n: &BigUint) -> Rational {
    if n.is_zero() {
        return Rational::zero();
    }
    let m: BigUint = (n - 1u32) >> 1;
    let q = nu_q_pos(&m);
    if n.bit(0) {
        q
    } else {
        -q
    }
}

pub fn nu_q_inv(q: &Rational) -> BigUint {
    if q.is_zero() {
        return BigUint::zero();
    }
    let m = nu_q_pos_inv(&q.abs()).expect("nonzero magnitude is positive");
    if q.is_positive() {
        m * 2u32 + 1u32
    } else {
        m * 2u32 + 2u32
    }
}

pub fn nu_q_small(n: u64) -> Rational {
    nu_q(&BigUint::from(n))
}

/// Index into Euclidean-Q's dense sequence `a_<z,d> = zigzag(z)/(d+1)`.
/// Duplicates are intentional: `2/2` and `1/1` get different indices.
pub fn rational_code(q: &Rational) -> Result<Nat> {
    let z = unzigzag(q.numer())?;
    let d: Nat = u128::try_from(q.denom() - BigInt::one()).map_err(|_| Error::Overflow("denominator"))?;
    pair(z, d)
}

pub fn rational_decode(n: Nat) -> Rational {
    let (z, d) = unpair(n);
    Rational::new(zigzag(z), BigInt::from(d) + 1)
}

/// Factors `s` as `2^{i+1} 3^{k+1}`, returning `(i, k)`.
pub fn decode_prime_pair(s: &BigUint) -> Option<(BigUint, BigUint)> {
    if s.is_zero() {
        return None;
    }
    let mut rest = s.clone();
    let mut twos = BigUint::zero();
    while !rest.bit(0) {
        rest >>= 1;
        twos += 1u32;
    }
    let mut threes = BigUint::zero();
    let three = BigUint::from(3u32);
    while (&rest % &three).is_zero() {
        rest /= &three;
        threes += 1u32;
    }
    if rest.is_one() && !twos.is_zero() && !threes.is_zero() {
        Some((twos - 1u32, threes - 1u32))
    } else {
        None
    }
}

pub fn encode_prime_pair(i: &BigUint, k: &BigUint) -> Result<BigUint> {
    let e2: usize = (i + 1u32).try_into().map_err(|_| Error::Overflow("nbhd code"))?;
    let e3: usize = (k + 1u32).try_into().map_err(|_| Error::Overflow("nbhd code"))?;
    Ok((BigUint::one() << e2) * num::pow(BigUint::from(3u32), e3))
}
