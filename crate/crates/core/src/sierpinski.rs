//! Sierpiński space, fueled semidecisions, and names of subsets of ℕ.

use std::sync::Arc;

use serde::Serialize;

use crate::codec::{pair, unpair, Nat};
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::names::BaireName;
use crate::vm::ProgramTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    Top,
    BotUnconfirmed,
    FuelExhausted,
}

impl Verdict {
    pub fn is_top(self) -> bool {
        self == Verdict::Top
    }

    /// CLI spelling.
    pub fn word(self) -> &'static str {
        match self {
            Verdict::Top => "TOP",
            Verdict::BotUnconfirmed => "UNCONFIRMED",
            Verdict::FuelExhausted => "FUEL_EXHAUSTED",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct SemiDecision {
    pub verdict: Verdict,
    pub fuel_used: u64,
}

/// A fueled semidecision procedure: `Ok(true)` confirms membership,
/// `Ok(false)` or `Err(FuelExhausted)` means nothing was confirmed within
/// the budget. Implementations must be monotone in fuel.
pub type Semi<A> = Arc<dyn Fn(&A, &mut Fuel) -> Result<bool> + Send + Sync>;

pub fn semi<A>(f: impl Fn(&A, &mut Fuel) -> Result<bool> + Send + Sync + 'static) -> Semi<A> {
    Arc::new(f)
}

/// Runs a semidecider on a fresh budget.
pub fn decide<A>(s: &Semi<A>, a: &A, fuel: u64) -> Result<SemiDecision> {
    let mut f = Fuel::new(fuel);
    let verdict = match s(a, &mut f) {
        Ok(true) => Verdict::Top,
        Ok(false) | Err(Error::FuelExhausted) => Verdict::BotUnconfirmed,
        Err(e) => return Err(e),
    };
    Ok(SemiDecision {
        verdict,
        fuel_used: f.used(),
    })
}

/// Runs `step(0), step(1), ...` until one confirms or the budget ends.
///
/// Gives `FuelExhausted` when not even stage 0 completed, otherwise
/// `BotUnconfirmed` on running out.
pub fn search(fuel: &mut Fuel, mut step: impl FnMut(u64, &mut Fuel) -> Result<bool>) -> Result<Verdict> {
    let mut completed = 0u64;
    let mut stage = 0u64;
    while !fuel.is_empty() {
        let before = fuel.used();
        match step(stage, fuel) {
            Ok(true) => return Ok(Verdict::Top),
            Ok(false) => completed += 1,
            Err(Error::FuelExhausted) => break,
            Err(e) => return Err(e),
        }
        if fuel.used() == before {
            fuel.tick()?;
        }
        stage += 1;
    }
    Ok(if completed == 0 {
        Verdict::FuelExhausted
    } else {
        Verdict::BotUnconfirmed
    })
}

/// Deterministic round-robin over witnesses: stage `<w, t>` reruns task
/// `w` from scratch with a budget of `t+1` units.
pub fn dovetail(
    fuel: &mut Fuel,
    mut trace: Option<&mut Vec<(u64, u64)>>,
    task: impl Fn(u64, &mut Fuel) -> Result<bool>,
) -> Result<Verdict> {
    search(fuel, |stage, fuel| {
        let (w, t) = stage_slot(stage);
        if let Some(tr) = trace.as_deref_mut() {
            tr.push((w, t));
        }
        let (out, _) = fuel.scoped(t + 1, |inner| task(w, inner));
        match out {
            Ok(found) => Ok(found),
            Err(Error::FuelExhausted) => Ok(false),
            Err(e) => Err(e),
        }
    })
}

/// `dovetail` for tasks that produce a witness: returns the result of the
/// first stage that confirms, or `FuelExhausted`.
pub fn dovetail_find<T>(fuel: &mut Fuel, task: impl Fn(u64, &mut Fuel) -> Result<Option<T>>) -> Result<T> {
    let mut stage = 0u64;
    while !fuel.is_empty() {
        let (w, t) = stage_slot(stage);
        let before = fuel.used();
        let (out, _) = fuel.scoped(t + 1, |inner| task(w, inner));
        match out {
            Ok(Some(v)) => return Ok(v),
            Ok(None) | Err(Error::FuelExhausted) => {}
            Err(e) => return Err(e),
        }
        if fuel.used() == before {
            fuel.tick()?;
        }
        stage += 1;
    }
    Err(Error::FuelExhausted)
}

/// Same as `dovetail`, folded into a plain confirmation flag.
pub fn dovetail_semi(fuel: &mut Fuel, task: impl Fn(u64, &mut Fuel) -> Result<bool>) -> Result<bool> {
    Ok(dovetail(fuel, None, task)?.is_top())
}

/// A name of an element of Sierpiński space: ⊤ iff some entry is nonzero.
#[derive(Clone, Debug)]
pub struct SierpName(pub BaireName);

impl SierpName {
    pub fn top() -> Self {
        SierpName(BaireName::constant(1))
    }

    pub fn bottom() -> Self {
        SierpName(BaireName::constant(0))
    }

    pub fn parse(s: &str, programs: &ProgramTable) -> Result<Self> {
        BaireName::parse(s, programs).map(SierpName)
    }

    /// Nonzero at some position iff one of the inputs is.
    pub fn or(&self, other: &SierpName) -> SierpName {
        SierpName(BaireName::zip(&self.0, &other.0))
    }

    /// Nonzero at `<i, j>` iff `self(i)` and `other(j)` are.
    pub fn and(&self, other: &SierpName) -> SierpName {
        let (p, q) = (self.0.clone(), other.0.clone());
        SierpName(BaireName::from_fn("and", move |n, fuel| {
            let (i, j) = unpair(n as Nat);
            let a = p.force(i as u64, fuel)?;
            if a == 0 {
                return Ok(0);
            }
            Ok((q.force(j as u64, fuel)? != 0) as Nat)
        }))
    }

    /// The name that turns nonzero once `s` confirms at budget `t`.
    pub fn from_semi(label: &str, s: impl Fn(&mut Fuel) -> Result<bool> + Send + Sync + 'static) -> Self {
        SierpName(BaireName::from_fn(label.to_string(), move |t, fuel| {
            let (out, _) = fuel.scoped(t.saturating_add(1), |inner| s(inner));
            Ok(matches!(out, Ok(true)) as Nat)
        }))
    }
}

/// Top iff a nonzero entry occurs among the positions forced within `fuel`.
pub fn eval_s(s: &SierpName, fuel: u64) -> Result<SemiDecision> {
    let mut f = Fuel::new(fuel);
    let verdict = search(&mut f, |i, f| Ok(s.0.force(i, f)? != 0))?;
    Ok(SemiDecision {
        verdict,
        fuel_used: f.used(),
    })
}

/// A name of `{n | n+1 occurs in the stream}`.
#[derive(Clone, Debug)]
pub struct OpenNatName(pub BaireName);

impl OpenNatName {
    pub fn parse(s: &str, programs: &ProgramTable) -> Result<Self> {
        BaireName::parse(s, programs).map(OpenNatName)
    }

    /// Lists exactly the elements of `set` (padding with 0).
    pub fn finite(set: &[Nat]) -> Result<Self> {
        let entries = set
            .iter()
            .map(|n| n.checked_add(1).ok_or(Error::Overflow("finite set")))
            .collect::<Result<Vec<_>>>()?;
        Ok(OpenNatName(BaireName::table(entries, vec![0])?))
    }

    /// Element `w` of the dense sequence of eventually-constant names:
    /// the word `dense_word(w)`, then zeros.
    pub fn dense(w: Nat) -> Self {
        OpenNatName(
            BaireName::table(dense_word(w as u64), vec![0])
                .expect("non-empty period")
                .relabel(format!("dense-on {w}")),
        )
    }

    /// Scans for `n+1`; `Ok(true)` once found.
    pub fn contains(&self, n: Nat, fuel: &mut Fuel) -> Result<bool> {
        let target = n.checked_add(1).ok_or(Error::Overflow("member_ON"))?;
        Ok(search(fuel, |i, f| Ok(self.0.force(i, f)? == target))?.is_top())
    }
}

pub fn member_on(s: &OpenNatName, n: Nat, fuel: u64) -> Result<SemiDecision> {
    let mut f = Fuel::new(fuel);
    let target = n.checked_add(1).ok_or(Error::Overflow("member_ON"))?;
    let verdict = search(&mut f, |i, f| Ok(s.0.force(i, f)? == target))?;
    Ok(SemiDecision {
        verdict,
        fuel_used: f.used(),
    })
}

/// Words in level order: level `L` holds the words of length at most `L`
/// over the alphabet `{0..L-1}` not already in level `L-1`, each level
/// listed length-lexicographically.
pub fn dense_word(w: u64) -> Vec<Nat> {
    let mut rest = w;
    let mut level = 0u64;
    loop {
        let size = level_size(level);
        if rest < size {
            break;
        }
        rest -= size;
        level += 1;
    }
    if level == 0 {
        return Vec::new();
    }
    let top = level - 1;
    for len in 0..=level {
        // completions of a word of this length, given whether `top` occurred
        let count = |rem: u64, seen: bool| -> u64 {
            if seen || len == level {
                level.saturating_pow(rem as u32)
            } else {
                level.saturating_pow(rem as u32) - top.saturating_pow(rem as u32)
            }
        };
        let here = count(len, false);
        if rest >= here {
            rest -= here;
            continue;
        }
        let mut word = Vec::with_capacity(len as usize);
        let mut seen = false;
        for i in 0..len {
            for d in 0..level {
                let n = count(len - i - 1, seen || d == top);
                if rest < n {
                    word.push(d as Nat);
                    seen |= d == top;
                    break;
                }
                rest -= n;
            }
        }
        return word;
    }
    unreachable!("level size accounts for every fresh word")
}

fn words_up_to(len: u64, alphabet: u64) -> u64 {
    (0..=len).map(|l| alphabet.saturating_pow(l as u32)).fold(0u64, u64::saturating_add)
}

fn level_size(level: u64) -> u64 {
    if level == 0 {
        1
    } else {
        words_up_to(level, level) - words_up_to(level - 1, level - 1)
    }
}

/// Existential projection along 𝒪(ℕ): `(x, n)` is accepted iff some
/// eventually-constant `V` with `n ∈ V` has `(x, V)` accepted by `u`.
///
/// Open subsets of 𝒪(ℕ) are upward closed, so it suffices to try the
/// names `n+1 :: dense_word(w)`.
pub fn exists_over_on(u: Semi<(BaireName, OpenNatName)>) -> Semi<(BaireName, Nat)> {
    Arc::new(move |(x, n): &(BaireName, Nat), fuel: &mut Fuel| {
        let target = n.checked_add(1).ok_or(Error::Overflow("exists_over_ON"))?;
        dovetail_semi(fuel, |w, inner| {
            let mut word = vec![target];
            word.extend(dense_word(w));
            let v = OpenNatName(BaireName::table(word, vec![0])?);
            u(&(x.clone(), v), inner)
        })
    })
}

/// `<i, j>`-indexed enumeration name of `{n | semidecider accepts n}`:
/// entry `<n, t>` is `n+1` when `accepts(n)` confirms within `t+1` units.
pub fn enumerate_semi(label: &str, accepts: impl Fn(Nat, &mut Fuel) -> Result<bool> + Send + Sync + 'static) -> OpenNatName {
    OpenNatName(BaireName::from_fn(label.to_string(), move |i, fuel| {
        let (n, t) = unpair(i as Nat);
        let (out, _) = fuel.scoped((t as u64).saturating_add(1), |inner| accepts(n, inner));
        Ok(if matches!(out, Ok(true)) { n + 1 } else { 0 })
    }))
}

/// `(witness, slice)` scheduled at a dovetail stage.
pub fn stage_slot(stage: u64) -> (u64, u64) {
    let (w, t) = unpair(stage as Nat);
    (w as u64, t as u64)
}

/// Stage at which witness `w` runs with slice `t`.
pub fn stage_of(w: u64, t: u64) -> Option<u64> {
    pair(w as Nat, t as Nat).ok().and_then(|s| u64::try_from(s).ok())
}
