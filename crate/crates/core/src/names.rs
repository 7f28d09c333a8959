//! Baire-space names as lazily forced streams.

use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, Mutex};

use crate::codec::{pair, unpair, Nat};
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::vm::ProgramTable;

pub type StepFn<T> = Arc<dyn Fn(u64, &mut Fuel) -> Result<T> + Send + Sync>;

#[derive(Clone)]
enum Source<T> {
    Const(T),
    /// `prefix` followed by `period` repeated forever (empty period means
    /// the prefix is padded with its last entry).
    Table { prefix: Vec<T>, period: Vec<T> },
    Step(StepFn<T>),
}

/// A total stream `N -> T` with a memoized, monotone prefix cache.
///
/// Forcing charges fuel deterministically: a cached position charges the
/// same amount its first evaluation used, so the outcome of a fueled
/// computation never depends on what other readers forced before.
pub struct Stream<T> {
    source: Source<T>,
    cache: Arc<Mutex<HashMap<u64, (T, u64)>>>,
    label: Arc<str>,
}

impl<T: Clone> Clone for Stream<T> {
    fn clone(&self) -> Self {
        Stream {
            source: self.source.clone(),
            cache: Arc::clone(&self.cache),
            label: Arc::clone(&self.label),
        }
    }
}

impl<T> fmt::Debug for Stream<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Stream({})", self.label)
    }
}

impl<T: Clone + Send + Sync + 'static> Stream<T> {
    pub fn constant(v: T) -> Self {
        Self::with_source(Source::Const(v), "const")
    }

    pub fn table(prefix: Vec<T>, period: Vec<T>) -> Result<Self> {
        if prefix.is_empty() && period.is_empty() {
            return Err(Error::Parse("table needs at least one entry".into()));
        }
        Ok(Self::with_source(Source::Table { prefix, period }, "table"))
    }

    pub fn from_fn(
        label: impl Into<String>,
        f: impl Fn(u64, &mut Fuel) -> Result<T> + Send + Sync + 'static,
    ) -> Self {
        Self::with_source(Source::Step(Arc::new(f)), &label.into())
    }

    fn with_source(source: Source<T>, label: &str) -> Self {
        Stream {
            source,
            cache: Arc::new(Mutex::new(HashMap::new())),
            label: Arc::from(label),
        }
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn relabel(mut self, label: impl Into<String>) -> Self {
        self.label = Arc::from(label.into().as_str());
        self
    }

    pub fn force(&self, i: u64, fuel: &mut Fuel) -> Result<T> {
        match &self.source {
            Source::Const(v) => {
                fuel.tick()?;
                Ok(v.clone())
            }
            Source::Table { prefix, period } => {
                fuel.tick()?;
                Ok(table_entry(prefix, period, i).clone())
            }
            Source::Step(f) => {
                let hit = self.cache.lock().expect("cache poisoned").get(&i).cloned();
                if let Some((v, cost)) = hit {
                    fuel.spend(cost)?;
                    return Ok(v);
                }
                let before = fuel.used();
                fuel.tick()?;
                let v = f(i, fuel)?;
                let cost = fuel.used() - before;
                self.cache
                    .lock()
                    .expect("cache poisoned")
                    .insert(i, (v.clone(), cost));
                Ok(v)
            }
        }
    }

    pub fn force_prefix(&self, n: u64, fuel: &mut Fuel) -> Result<Vec<T>> {
        (0..n).map(|i| self.force(i, fuel)).collect()
    }

    /// Explicit finite support, when the stream is a table whose tail is a
    /// single repeated value.
    pub fn eventually_constant(&self) -> Option<(Vec<T>, T)> {
        match &self.source {
            Source::Const(v) => Some((Vec::new(), v.clone())),
            Source::Table { prefix, period } => match period.len() {
                0 => prefix.last().map(|l| (prefix.clone(), l.clone())),
                1 => Some((prefix.clone(), period[0].clone())),
                _ => None,
            },
            Source::Step(_) => None,
        }
    }

    pub fn map<U: Clone + Send + Sync + 'static>(
        &self,
        label: impl Into<String>,
        f: impl Fn(T, &mut Fuel) -> Result<U> + Send + Sync + 'static,
    ) -> Stream<U> {
        let inner = self.clone();
        Stream::from_fn(label, move |i, fuel| {
            let v = inner.force(i, fuel)?;
            f(v, fuel)
        })
    }
}

fn table_entry<'a, T>(prefix: &'a [T], period: &'a [T], i: u64) -> &'a T {
    let i = i as usize;
    if i < prefix.len() {
        &prefix[i]
    } else if period.is_empty() {
        prefix.last().expect("nonempty table")
    } else {
        &period[(i - prefix.len()) % period.len()]
    }
}

/// An element of Baire space.
pub type BaireName = Stream<Nat>;

impl BaireName {
    /// Parses `const k`, `table [a0 a1 ... | period p0 ... pk]` or
    /// `prog <program-id>`.
    pub fn parse(s: &str, programs: &ProgramTable) -> Result<BaireName> {
        let s = s.trim();
        let bad = || Error::Parse(format!("bad name literal {s:?}"));
        if let Some(rest) = s.strip_prefix("const") {
            let k: Nat = rest.trim().parse().map_err(|_| bad())?;
            return Ok(BaireName::constant(k).relabel(format!("const {k}")));
        }
        if let Some(rest) = s.strip_prefix("table") {
            let body = rest
                .trim()
                .strip_prefix('[')
                .and_then(|r| r.strip_suffix(']'))
                .ok_or_else(bad)?;
            let (head, tail) = match body.split_once('|') {
                Some((h, t)) => {
                    let t = t.trim().strip_prefix("period").ok_or_else(bad)?;
                    (h, Some(t))
                }
                None => (body, None),
            };
            let nums = |txt: &str| -> Result<Vec<Nat>> {
                txt.split_whitespace()
                    .map(|w| w.parse().map_err(|_| bad()))
                    .collect()
            };
            let prefix = nums(head)?;
            let period = match tail {
                Some(t) => nums(t)?,
                None => vec![0],
            };
            return Ok(BaireName::table(prefix, period)?.relabel(s.to_string()));
        }
        if let Some(rest) = s.strip_prefix("prog") {
            let id: u64 = rest.trim().parse().map_err(|_| bad())?;
            return programs.nullary_name(id);
        }
        Err(bad())
    }

    /// Pointwise interleaving `<p, q>(2i) = p(i)`, `<p, q>(2i+1) = q(i)`.
    pub fn zip(p: &BaireName, q: &BaireName) -> BaireName {
        let (p, q) = (p.clone(), q.clone());
        BaireName::from_fn("zip", move |i, fuel| {
            if i % 2 == 0 {
                p.force(i / 2, fuel)
            } else {
                q.force(i / 2, fuel)
            }
        })
    }

    pub fn unzip(&self) -> (BaireName, BaireName) {
        let a = self.clone();
        let b = self.clone();
        (
            BaireName::from_fn("left", move |i, fuel| a.force(2 * i, fuel)),
            BaireName::from_fn("right", move |i, fuel| b.force(2 * i + 1, fuel)),
        )
    }

    /// `<p_0, p_1, ...>(<n, i>) = p_n(i)` over the Cantor pairing.
    pub fn interleave(
        parts: impl Fn(u64) -> BaireName + Send + Sync + 'static,
    ) -> BaireName {
        BaireName::from_fn("interleave", move |z, fuel| {
            let (n, i) = unpair(z as Nat);
            let (n, i) = (to_pos(n)?, to_pos(i)?);
            parts(n).force(i, fuel)
        })
    }

    pub fn project(&self, n: u64) -> BaireName {
        let whole = self.clone();
        BaireName::from_fn(format!("project {n}"), move |i, fuel| {
            let z = pair(n as Nat, i as Nat)?;
            whole.force(to_pos(z)?, fuel)
        })
    }

    /// `p(k), p(k+1), ...`
    pub fn shift(&self, k: u64) -> BaireName {
        let whole = self.clone();
        BaireName::from_fn(format!("shift {k}"), move |i, fuel| whole.force(i + k, fuel))
    }

    /// `w` followed by `p`.
    pub fn prepend(w: Vec<Nat>, p: &BaireName) -> BaireName {
        let p = p.clone();
        BaireName::from_fn("prepend", move |i, fuel| {
            let i = i as usize;
            if i < w.len() {
                fuel.tick()?;
                Ok(w[i])
            } else {
                p.force((i - w.len()) as u64, fuel)
            }
        })
    }
}

pub fn to_pos(n: Nat) -> Result<u64> {
    u64::try_from(n).map_err(|_| Error::Overflow("stream position"))
}

/// `force_prefix` under a fresh budget.
pub fn force_prefix(p: &BaireName, n: u64, fuel: u64) -> Result<Vec<Nat>> {
    p.force_prefix(n, &mut Fuel::new(fuel))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_and_table() {
        let programs = ProgramTable::builtin();
        let z = BaireName::parse("const 0", &programs).unwrap();
        assert_eq!(force_prefix(&z, 5, 100).unwrap(), vec![0; 5]);
        let t = BaireName::parse("table [0 1 2 | period 3]", &programs).unwrap();
        assert_eq!(force_prefix(&t, 6, 100).unwrap(), vec![0, 1, 2, 3, 3, 3]);
        let u = BaireName::parse("table [5 6]", &programs).unwrap();
        assert_eq!(force_prefix(&u, 4, 100).unwrap(), vec![5, 6, 0, 0]);
        assert!(BaireName::parse("table 1 2", &programs).is_err());
    }

    #[test]
    fn fuel_exhaustion_on_prefix() {
        let z = BaireName::constant(0);
        assert_eq!(force_prefix(&z, 5, 3), Err(Error::FuelExhausted));
    }

    #[test]
    fn cached_positions_charge_the_same_fuel() {
        let p = BaireName::from_fn("slow", |i, fuel| {
            fuel.spend(10)?;
            Ok(i as Nat)
        });
        let mut a = Fuel::new(1000);
        p.force(3, &mut a).unwrap();
        let mut b = Fuel::new(1000);
        p.force(3, &mut b).unwrap();
        assert_eq!(a.used(), b.used());
        assert_eq!(p.force(3, &mut Fuel::new(5)), Err(Error::FuelExhausted));
    }

    #[test]
    fn interleave_project_law() {
        let all = BaireName::interleave(|n| {
            BaireName::from_fn("row", move |i, _| Ok((n * 1000 + i) as Nat))
        });
        let row = all.project(7);
        assert_eq!(force_prefix(&row, 4, 1000).unwrap(), vec![7000, 7001, 7002, 7003]);
    }

    proptest! {
        #[test]
        fn prefixes_are_monotone(prefix in proptest::collection::vec(0u128..50, 1..8),
                                 period in proptest::collection::vec(0u128..50, 0..4),
                                 n in 0u64..20, m in 0u64..20) {
            let p = BaireName::table(prefix, period).unwrap();
            let (lo, hi) = (n.min(m), n.max(m));
            let short = force_prefix(&p, lo, 1_000).unwrap();
            let long = force_prefix(&p, hi, 1_000).unwrap();
            prop_assert_eq!(&long[..lo as usize], &short[..]);
        }

        #[test]
        fn zip_unzip(a in proptest::collection::vec(0u128..9, 1..6), b in proptest::collection::vec(0u128..9, 1..6)) {
            let p = BaireName::table(a, vec![]).unwrap();
            let q = BaireName::table(b, vec![]).unwrap();
            let (l, r) = BaireName::zip(&p, &q).unzip();
            prop_assert_eq!(force_prefix(&l, 10, 100).unwrap(), force_prefix(&p, 10, 100).unwrap());
            prop_assert_eq!(force_prefix(&r, 10, 100).unwrap(), force_prefix(&q, 10, 100).unwrap());
        }
    }
}
