//! Names of continuous functions (`0^n 1 p`), application, s-m-n and
//! currying, neighbourhood diagrams, and the point translators.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::{Arc, Mutex};

use num::{BigInt, One, Signed};

use crate::codec::{pair, rational_code, rational_decode, unpair, unzigzag, zigzag, Nat};
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::metric::{CauchyName, CmsDescriptor, RpmsDescriptor};
use crate::names::{BaireName, Stream};
use crate::open_sets::{base_ball, certify, on_to_point, point_to_on, tau, Ball, Nbhd, SemiRecName};
use crate::rational::{pow2, pow2_neg, Rational};
use crate::sierpinski::{dovetail_find, OpenNatName, SemiDecision, Verdict};
use crate::vm::{ProgramTable, RealizerProgram, Round, MAX_PROGRAMS};

/// Id of the s-m-n composer.
pub const SMN: u64 = MAX_PROGRAMS;
pub const CURRY: u64 = MAX_PROGRAMS + 1;
pub const UNCURRY: u64 = MAX_PROGRAMS + 2;

pub type NativeFn = Arc<dyn Fn(&Universe, u64, &BaireName, &BaireName, &mut Fuel) -> Result<Nat> + Send + Sync>;

/// A realizer written in Rust rather than bytecode. It sees the universe,
/// so it can decode and run other function names.
#[derive(Clone)]
pub struct Native {
    pub id: u64,
    pub name: String,
    run: NativeFn,
}

impl fmt::Debug for Native {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Native({} {})", self.id, self.name)
    }
}

#[derive(Clone, Debug)]
pub enum Machine {
    Program(Arc<RealizerProgram>),
    Native(Arc<Native>),
}

/// Every machine id in use: bytecode programs below `MAX_PROGRAMS`,
/// natives from there on.
#[derive(Clone, Debug)]
pub struct Universe {
    pub programs: ProgramTable,
    natives: Vec<Arc<Native>>,
}

impl Universe {
    pub fn new(programs: ProgramTable) -> Self {
        let mut u = Universe {
            programs,
            natives: Vec::new(),
        };
        u.register_native("smn", smn_native);
        u.register_native("curry", curry_native);
        u.register_native("uncurry", uncurry_native);
        u
    }

    pub fn standard() -> Self {
        Universe::new(ProgramTable::builtin())
    }

    pub fn register_native(
        &mut self,
        name: &str,
        run: impl Fn(&Universe, u64, &BaireName, &BaireName, &mut Fuel) -> Result<Nat> + Send + Sync + 'static,
    ) -> u64 {
        let id = MAX_PROGRAMS + self.natives.len() as u64;
        self.natives.push(Arc::new(Native {
            id,
            name: name.to_string(),
            run: Arc::new(run),
        }));
        id
    }

    pub fn machine(&self, id: u64) -> Result<Machine> {
        if id < MAX_PROGRAMS {
            return self.programs.get(id).map(Machine::Program);
        }
        self.natives
            .get((id - MAX_PROGRAMS) as usize)
            .cloned()
            .map(Machine::Native)
            .ok_or_else(|| Error::InvalidIndex(format!("no machine with id {id}")))
    }
}

/// Machine `n` with oracle `p`; as a single name, `0^n 1 p`.
#[derive(Clone, Debug)]
pub struct FunctionName {
    pub machine: u64,
    pub oracle: BaireName,
}

impl FunctionName {
    pub fn new(machine: u64, oracle: BaireName) -> Self {
        FunctionName { machine, oracle }
    }

    pub fn program(machine: u64) -> Self {
        FunctionName::new(machine, BaireName::constant(0))
    }

    pub fn encode(&self) -> BaireName {
        let (n, p) = (self.machine, self.oracle.clone());
        BaireName::from_fn(format!("0^{n} 1 {}", p.label()), move |i, fuel| {
            if i < n {
                Ok(0)
            } else if i == n {
                Ok(1)
            } else {
                p.force(i - n - 1, fuel)
            }
        })
    }

    /// Reads up to the first nonzero entry, which must be 1.
    pub fn decode(name: &BaireName, fuel: &mut Fuel) -> Result<FunctionName> {
        let mut n = 0u64;
        loop {
            match name.force(n, fuel)? {
                0 => n += 1,
                1 => break,
                v => return Err(Error::Parse(format!("function name has {v} at position {n}, expected 0 or 1"))),
            }
        }
        Ok(FunctionName::new(n, name.shift(n + 1)))
    }
}

fn recording(p: &BaireName, log: &Arc<Mutex<BTreeSet<u64>>>) -> BaireName {
    let (p, log) = (p.clone(), log.clone());
    BaireName::from_fn(p.label().to_string(), move |i, fuel| {
        log.lock().expect("read log poisoned").insert(i);
        p.force(i, fuel)
    })
}

/// Output position `pos` of `f` on input `p`, with the oracle positions read.
pub fn run_realizer(u: &Universe, f: &FunctionName, p: &BaireName, pos: u64, fuel: &mut Fuel) -> Result<Round> {
    match u.machine(f.machine)? {
        Machine::Program(prog) => prog.run(pos, p, &f.oracle, fuel),
        Machine::Native(native) => {
            let reads = Arc::new(Mutex::new(BTreeSet::new()));
            let param_reads = Arc::new(Mutex::new(BTreeSet::new()));
            let before = fuel.used();
            let value = (native.run)(u, pos, &recording(p, &reads), &recording(&f.oracle, &param_reads), fuel)?;
            let take = |log: Arc<Mutex<BTreeSet<u64>>>| std::mem::take(&mut *log.lock().expect("read log poisoned"));
            Ok(Round {
                value,
                steps: fuel.used() - before,
                reads: take(reads),
                param_reads: take(param_reads),
            })
        }
    }
}

pub fn apply(u: &Universe, f: &FunctionName, x: &BaireName) -> BaireName {
    let (u, f, x) = (u.clone(), f.clone(), x.clone());
    BaireName::from_fn(format!("apply {}", f.machine), move |pos, fuel| {
        run_realizer(&u, &f, &x, pos, fuel).map(|r| r.value)
    })
}

/// Fixes the first argument: `smn(z, y)` on `x` runs `z` on `<y, x>`.
pub fn smn(z: &FunctionName, y: &BaireName) -> FunctionName {
    FunctionName::new(SMN, BaireName::zip(&z.encode(), y))
}

fn smn_native(u: &Universe, pos: u64, x: &BaireName, param: &BaireName, fuel: &mut Fuel) -> Result<Nat> {
    let (z, y) = param.unzip();
    let z = FunctionName::decode(&z, fuel)?;
    run_realizer(u, &z, &BaireName::zip(&y, x), pos, fuel).map(|r| r.value)
}

/// `curry(g)` on `x` outputs the name `smn(g, x)`.
pub fn curry(g: &FunctionName) -> FunctionName {
    FunctionName::new(CURRY, g.encode())
}

fn curry_native(_: &Universe, pos: u64, x: &BaireName, param: &BaireName, fuel: &mut Fuel) -> Result<Nat> {
    let g = FunctionName::decode(param, fuel)?;
    smn(&g, x).encode().force(pos, fuel)
}

/// `uncurry(h)` on `<x, y>` runs the function named by `h(x)` on `y`.
pub fn uncurry(h: &FunctionName) -> FunctionName {
    FunctionName::new(UNCURRY, h.encode())
}

fn uncurry_native(u: &Universe, pos: u64, xy: &BaireName, param: &BaireName, fuel: &mut Fuel) -> Result<Nat> {
    let h = FunctionName::decode(param, fuel)?;
    let (x, y) = xy.unzip();
    let g = FunctionName::decode(&apply(u, &h, &x), fuel)?;
    run_realizer(u, &g, &y, pos, fuel).map(|r| r.value)
}

// ---------------------------------------------------------------------------
// Neighbourhood diagrams

/// `x ∈ x_ball` implies `f(x) ∈ N(Y, s)`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DiagramEntry {
    pub x_ball: Ball,
    pub s: Nbhd,
}

/// Lists basic rectangles of `G^f = {(x, s) | f(x) ∈ N(Y, s)}`. The set
/// named is the upward closure: `(x, s)` belongs when some listed
/// `(B, s0)` has `x ∈ B` and `N(Y, s0) ⊆ N(Y, s)`.
#[derive(Clone, Debug)]
pub struct NbhdDiagramName(pub Stream<Option<DiagramEntry>>);

impl NbhdDiagramName {
    pub fn entries(list: Vec<DiagramEntry>) -> Result<Self> {
        Ok(NbhdDiagramName(Stream::table(list.into_iter().map(Some).collect(), vec![None])?))
    }

    /// `0` for no entry, else `1 + <ball code, <center, radius code>>`.
    /// Entries too large for a code are dropped, which only loses
    /// information.
    pub fn encode(&self) -> BaireName {
        self.0.map("diagram", |e, _| match e {
            None
            | Some(DiagramEntry {
                s: Nbhd::Empty, ..
            }) => Ok(0),
            Some(DiagramEntry {
                x_ball,
                s: Nbhd::Basic { center, radius },
            }) => {
                let code = (|| {
                    let inner = pair(center, radius_code(&radius)?)?;
                    pair(x_ball.code()?, inner)?
                        .checked_add(1)
                        .ok_or(Error::Overflow("diagram entry"))
                })();
                match code {
                    Err(Error::Overflow(_)) => Ok(0),
                    other => other,
                }
            }
        })
    }

    pub fn decode(p: &BaireName) -> Self {
        NbhdDiagramName(p.map("diagram", |v, _| {
            if v == 0 {
                return Ok(None);
            }
            let (b, inner) = unpair(v - 1);
            let (center, r) = unpair(inner);
            Ok(Some(DiagramEntry {
                x_ball: Ball::decode(b)?,
                s: Nbhd::Basic {
                    center,
                    radius: radius_decode(r),
                },
            }))
        }))
    }

    /// Semidecides `(x, s) ∈ G` over the upward closure.
    pub fn member(
        &self,
        xd: &CmsDescriptor,
        yd: &RpmsDescriptor,
        x: &CauchyName,
        s: &Nbhd,
        fuel: u64,
    ) -> Result<SemiDecision> {
        let Nbhd::Basic { center, radius } = s else {
            return Ok(SemiDecision {
                verdict: Verdict::BotUnconfirmed,
                fuel_used: fuel,
            });
        };
        let mut f = Fuel::new(fuel);
        let found = dovetail_find(&mut f, |e, f| {
            let Some(DiagramEntry {
                x_ball: Ball::Basic { center: bc, k },
                s: Nbhd::Basic { center: c0, radius: r0 },
            }) = self.0.force(e, f)?
            else {
                return Ok(None);
            };
            let room = radius - &r0;
            if room.is_negative() || yd.cmp_exact(c0, *center, &room, f)? == std::cmp::Ordering::Greater {
                return Ok(None);
            }
            certify(xd, x, bc, &pow2_neg(k), f).map(Some)
        });
        let verdict = match found {
            Ok(_) => Verdict::Top,
            Err(Error::FuelExhausted) => Verdict::BotUnconfirmed,
            Err(e) => return Err(e),
        };
        Ok(SemiDecision {
            verdict,
            fuel_used: f.used(),
        })
    }
}

/// Fuel per output position granted to a realizer while building a diagram.
pub const DIAGRAM_RUN_BUDGET: u64 = 4096;

/// Entry `<n, i>` runs `f` on the constant name of `a_n` at output position
/// `i`. If it reads `L` input positions and outputs `y`, every point of
/// `B(a_n, 2^{-L})` has a name starting with `n^L`, so its image lies
/// within `2^{-i}` of `b_y`: the entry is `(B(a_n, 2^{-L}), N(b_y, 2^{1-i}))`.
pub fn function_to_diagram(u: &Universe, f: &FunctionName, xd: &CmsDescriptor) -> NbhdDiagramName {
    let (u, f, xd) = (u.clone(), f.clone(), xd.clone());
    NbhdDiagramName(Stream::from_fn("diagram", move |e, fuel| {
        let (n, i) = unpair(e as Nat);
        if xd.check_index(n).is_err() {
            return Ok(None);
        }
        let Ok(i) = u32::try_from(i) else {
            return Ok(None);
        };
        let budget = DIAGRAM_RUN_BUDGET.saturating_mul(i as u64 + 1);
        let x = BaireName::constant(n);
        let (out, truncated) = fuel.scoped(budget, |f2| run_realizer(&u, &f, &x, i as u64, f2));
        let round = match out {
            Ok(r) => r,
            Err(Error::FuelExhausted) if truncated => return Err(Error::FuelExhausted),
            Err(Error::FuelExhausted) | Err(Error::Overflow(_)) => return Ok(None),
            Err(e) => return Err(e),
        };
        let reads = round.reads.iter().next_back().map_or(0, |m| m + 1);
        let k = u32::try_from(reads).map_err(|_| Error::Overflow("read length"))?;
        Ok(Some(DiagramEntry {
            x_ball: Ball::Basic { center: n, k },
            s: Nbhd::Basic {
                center: round.value,
                radius: pow2_neg(i) * Rational::from_integer(2.into()),
            },
        }))
    }))
}

/// The slice `{s | (x, s) listed with x ∈ B}`: position `<e, b>` tries to
/// certify `x ∈ B_e` with a budget of `32(b+1)`.
pub fn cut(xd: &CmsDescriptor, g: &NbhdDiagramName, x: &CauchyName) -> SemiRecName {
    cut_where(xd, g, x, |_| true)
}

/// `cut` restricted to entries whose neighbourhood passes `keep`; the
/// others read as ∅ without any work on `x`.
fn cut_where(
    xd: &CmsDescriptor,
    g: &NbhdDiagramName,
    x: &CauchyName,
    keep: impl Fn(&Nbhd) -> bool + Send + Sync + 'static,
) -> SemiRecName {
    let (xd, g, x) = (xd.clone(), g.clone(), x.clone());
    SemiRecName(Stream::from_fn("cut", move |t, fuel| {
        let (e, b) = unpair(t as Nat);
        let Some(DiagramEntry {
            x_ball: Ball::Basic { center, k },
            s,
        }) = g.0.force(e as u64, fuel)?
        else {
            return Ok(Nbhd::Empty);
        };
        if !keep(&s) {
            return Ok(Nbhd::Empty);
        }
        let budget = 32u64.saturating_mul(b as u64 + 1);
        let (out, truncated) = fuel.scoped(budget, |f| certify(&xd, &x, center, &pow2_neg(k), f));
        match out {
            Ok(_) => Ok(s),
            Err(Error::FuelExhausted) if !truncated => Ok(Nbhd::Empty),
            Err(e) => Err(e),
        }
    }))
}

/// `k` with `r = 2^{-k}`.
fn dyadic_exponent(r: &Rational) -> Option<u32> {
    if !r.is_positive() || !r.numer().is_one() {
        return None;
    }
    let d = r.denom();
    let bits = d.bits();
    (d == &(BigInt::one() << (bits - 1))).then(|| (bits - 1) as u32)
}

/// Radii `2^e` as `2 zigzag^{-1}(e)`, anything else as `2 code + 1`.
fn radius_code(r: &Rational) -> Result<Nat> {
    let e = if r.is_positive() && r.numer().is_one() {
        dyadic_exponent(r).map(|k| -BigInt::from(k))
    } else if r.is_positive() && r.denom().is_one() {
        let n = r.numer();
        let bits = n.bits();
        (n == &(BigInt::one() << (bits - 1))).then(|| BigInt::from(bits - 1))
    } else {
        None
    };
    let (v, tag) = match e {
        Some(e) => (unzigzag(&e)?, 0),
        None => (rational_code(r)?, 1),
    };
    v.checked_mul(2)
        .and_then(|v| v.checked_add(tag))
        .ok_or(Error::Overflow("radius code"))
}

fn radius_decode(c: Nat) -> Rational {
    if c % 2 == 1 {
        return rational_decode(c / 2);
    }
    let e = zigzag(c / 2);
    let k = e.magnitude().to_u32_digits().first().copied().unwrap_or(0);
    if e.is_negative() {
        pow2_neg(k)
    } else {
        pow2(k)
    }
}

/// The balls `w` with `τ(w)` listed in `v`, as an 𝒪(ℕ) name of base indices.
pub fn ball_filter(v: &SemiRecName) -> OpenNatName {
    let v = v.clone();
    OpenNatName(BaireName::from_fn("ball filter", move |t, fuel| {
        Ok(match v.0.force(t, fuel)? {
            Nbhd::Basic { center, radius } => match dyadic_exponent(&radius) {
                Some(k) => pair(center, k as Nat)? + 1,
                None => 0,
            },
            Nbhd::Empty => 0,
        })
    }))
}

pub fn point_to_semirec(d: &CmsDescriptor, x: &CauchyName) -> SemiRecName {
    SemiRecName(point_to_on(d, x).0.map("point->semirec", |v, _| {
        if v == 0 {
            Ok(Nbhd::Empty)
        } else {
            Ok(tau(&base_ball(v - 1)?))
        }
    }))
}

pub fn semirec_to_point(v: &SemiRecName) -> CauchyName {
    on_to_point(&ball_filter(v))
}

/// Cut, τ-reindexing and `on_to_point`, packaged as a native realizer
/// whose oracle is the encoded diagram.
pub fn diagram_to_function(u: &mut Universe, xd: &CmsDescriptor, g: &NbhdDiagramName) -> FunctionName {
    let xd = xd.clone();
    let id = u.register_native("undiagram", move |_, pos, x, param, fuel| {
        let g = NbhdDiagramName::decode(param);
        // index `pos` only looks at radius 2^{-(pos+2)}
        let want = pow2_neg(pos as u32 + 2);
        let slice = cut_where(&xd, &g, &CauchyName(x.clone()), move |s| {
            matches!(s, Nbhd::Basic { radius, .. } if *radius == want)
        });
        semirec_to_point(&slice).index(pos, fuel)
    });
    FunctionName::new(id, g.encode())
}
