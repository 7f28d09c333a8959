//! A small deterministic stack machine computing stream transformers.
//!
//! A program computes one output position per *round*: it starts with an
//! empty stack and zeroed registers, may read the input name (`ORACLE`)
//! and its parameter oracle (`PARAM`), and ends the round with `EMIT`
//! (output the top of stack) or `HALT` (output 0). Every executed
//! instruction costs one unit of fuel.
//!
//! Assembly opcodes, one per line, `;` starts a comment, `name:` is a label:
//!
//! | opcode       | effect                                      |
//! |--------------|---------------------------------------------|
//! | `CONST k`    | push k                                      |
//! | `POS`        | push the output position of this round      |
//! | `ORACLE`     | pop i, push input(i)                        |
//! | `PARAM`      | pop i, push param(i)                        |
//! | `ADD` `MUL`  | pop b, a; push a+b / a*b                    |
//! | `SUB`        | pop b, a; push max(a-b, 0)                  |
//! | `DIV` `MOD`  | pop b, a; push a/b, a%b (b = 0 is an error) |
//! | `LT` `EQ`    | pop b, a; push 1 if a<b / a==b, else 0      |
//! | `PAIR`       | pop y, x; push <x, y>                       |
//! | `UNPAIR`     | pop z; push x, then y                       |
//! | `DUP` `SWAP` `OVER` `POP` | stack shuffling                |
//! | `LOAD r` `STORE r` | registers 0..7                        |
//! | `JZ label`   | pop v, jump if v = 0                        |
//! | `JMP label`  | jump                                        |
//! | `EMIT`       | pop v, end round with output v              |
//! | `HALT`       | end round with output 0                     |

use std::collections::{BTreeSet, HashMap};
use std::sync::Arc;

use crate::codec::{pair, unpair, Nat};
use crate::error::{Error, Result};
use crate::fuel::Fuel;
use crate::names::BaireName;

const REGISTERS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instr {
    Const(Nat),
    Pos,
    Oracle,
    Param,
    Add,
    Sub,
    Mul,
    Div,
    Mod,
    Lt,
    Eq,
    Pair,
    Unpair,
    Dup,
    Swap,
    Over,
    Pop,
    Load(usize),
    Store(usize),
    Jz(usize),
    Jmp(usize),
    Emit,
    Halt,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RealizerProgram {
    pub program_id: u64,
    pub name: String,
    pub code: Vec<Instr>,
}

/// Result of one round.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Round {
    pub value: Nat,
    pub steps: u64,
    /// Input positions read, in ascending order.
    pub reads: BTreeSet<u64>,
    pub param_reads: BTreeSet<u64>,
}

impl RealizerProgram {
    pub fn assemble(program_id: u64, name: &str, source: &str) -> Result<Self> {
        let mut labels = HashMap::new();
        let mut lines = Vec::new();
        for raw in source.lines() {
            let line = raw.split(';').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            if let Some(label) = line.strip_suffix(':') {
                if labels.insert(label.trim().to_string(), lines.len()).is_some() {
                    return Err(Error::MalformedProgram(format!("duplicate label {label}")));
                }
                continue;
            }
            lines.push(line.to_string());
        }
        let code = lines
            .iter()
            .map(|line| parse_instr(line, &labels))
            .collect::<Result<Vec<_>>>()?;
        if code.is_empty() {
            return Err(Error::MalformedProgram("empty program".into()));
        }
        Ok(RealizerProgram {
            program_id,
            name: name.to_string(),
            code,
        })
    }

    /// Computes output position `pos` on `input` with parameter oracle `param`.
    pub fn run(&self, pos: u64, input: &BaireName, param: &BaireName, fuel: &mut Fuel) -> Result<Round> {
        let mut stack: Vec<Nat> = Vec::with_capacity(16);
        let mut regs = [0 as Nat; REGISTERS];
        let mut pc = 0usize;
        let mut round = Round {
            value: 0,
            steps: 0,
            reads: BTreeSet::new(),
            param_reads: BTreeSet::new(),
        };
        let underflow = || Error::MalformedProgram("stack underflow".into());
        loop {
            let instr = *self
                .code
                .get(pc)
                .ok_or_else(|| Error::MalformedProgram(format!("fell off the end at {pc}")))?;
            fuel.tick()?;
            round.steps += 1;
            pc += 1;
            match instr {
                Instr::Const(k) => stack.push(k),
                Instr::Pos => stack.push(pos as Nat),
                Instr::Oracle | Instr::Param => {
                    let i = stack.pop().ok_or_else(underflow)?;
                    let i = u64::try_from(i).map_err(|_| Error::Overflow("oracle position"))?;
                    let v = if instr == Instr::Oracle {
                        round.reads.insert(i);
                        input.force(i, fuel)?
                    } else {
                        round.param_reads.insert(i);
                        param.force(i, fuel)?
                    };
                    stack.push(v);
                }
                Instr::Add
                | Instr::Sub
                | Instr::Mul
                | Instr::Div
                | Instr::Mod
                | Instr::Lt
                | Instr::Eq
                | Instr::Pair => {
                    let b = stack.pop().ok_or_else(underflow)?;
                    let a = stack.pop().ok_or_else(underflow)?;
                    let v = match instr {
                        Instr::Add => a.checked_add(b).ok_or(Error::Overflow("ADD"))?,
                        Instr::Sub => a.saturating_sub(b),
                        Instr::Mul => a.checked_mul(b).ok_or(Error::Overflow("MUL"))?,
                        Instr::Div => a
                            .checked_div(b)
                            .ok_or_else(|| Error::MalformedProgram("division by zero".into()))?,
                        Instr::Mod => a
                            .checked_rem(b)
                            .ok_or_else(|| Error::MalformedProgram("division by zero".into()))?,
                        Instr::Lt => (a < b) as Nat,
                        Instr::Eq => (a == b) as Nat,
                        _ => pair(a, b)?,
                    };
                    stack.push(v);
                }
                Instr::Unpair => {
                    let z = stack.pop().ok_or_else(underflow)?;
                    let (x, y) = unpair(z);
                    stack.push(x);
                    stack.push(y);
                }
                Instr::Dup => {
                    let v = *stack.last().ok_or_else(underflow)?;
                    stack.push(v);
                }
                Instr::Swap => {
                    let n = stack.len();
                    if n < 2 {
                        return Err(underflow());
                    }
                    stack.swap(n - 1, n - 2);
                }
                Instr::Over => {
                    let n = stack.len();
                    if n < 2 {
                        return Err(underflow());
                    }
                    stack.push(stack[n - 2]);
                }
                Instr::Pop => {
                    stack.pop().ok_or_else(underflow)?;
                }
                Instr::Load(r) => stack.push(regs[r]),
                Instr::Store(r) => regs[r] = stack.pop().ok_or_else(underflow)?,
                Instr::Jz(t) => {
                    if stack.pop().ok_or_else(underflow)? == 0 {
                        pc = t;
                    }
                }
                Instr::Jmp(t) => pc = t,
                Instr::Emit => {
                    round.value = stack.pop().ok_or_else(underflow)?;
                    return Ok(round);
                }
                Instr::Halt => {
                    round.value = 0;
                    return Ok(round);
                }
            }
        }
    }

    /// Steps until the first round (position 0, all-zero oracles) ends.
    pub fn halting_steps(&self, fuel: &mut Fuel) -> Result<u64> {
        let zero = BaireName::constant(0);
        self.run(0, &zero, &zero, fuel).map(|r| r.steps)
    }
}

fn parse_instr(line: &str, labels: &HashMap<String, usize>) -> Result<Instr> {
    let mut words = line.split_whitespace();
    let op = words.next().unwrap_or("").to_ascii_uppercase();
    let arg = words.next();
    if words.next().is_some() {
        return Err(Error::MalformedProgram(format!("trailing operands in {line:?}")));
    }
    let need = |what: &str| Error::MalformedProgram(format!("{op} needs {what} in {line:?}"));
    let number = || -> Result<Nat> {
        arg.ok_or_else(|| need("a number"))?
            .parse()
            .map_err(|_| need("a number"))
    };
    let register = || -> Result<usize> {
        let r = number()? as usize;
        if r >= REGISTERS {
            return Err(Error::MalformedProgram(format!("register {r} out of range")));
        }
        Ok(r)
    };
    let target = || -> Result<usize> {
        let l = arg.ok_or_else(|| need("a label"))?;
        labels
            .get(l)
            .copied()
            .ok_or_else(|| Error::MalformedProgram(format!("unknown label {l}")))
    };
    let no_arg = |i: Instr| -> Result<Instr> {
        if arg.is_some() {
            Err(Error::MalformedProgram(format!("{op} takes no operand")))
        } else {
            Ok(i)
        }
    };
    match op.as_str() {
        "CONST" => Ok(Instr::Const(number()?)),
        "POS" => no_arg(Instr::Pos),
        "ORACLE" => no_arg(Instr::Oracle),
        "PARAM" => no_arg(Instr::Param),
        "ADD" => no_arg(Instr::Add),
        "SUB" => no_arg(Instr::Sub),
        "MUL" => no_arg(Instr::Mul),
        "DIV" => no_arg(Instr::Div),
        "MOD" => no_arg(Instr::Mod),
        "LT" => no_arg(Instr::Lt),
        "EQ" => no_arg(Instr::Eq),
        "PAIR" => no_arg(Instr::Pair),
        "UNPAIR" => no_arg(Instr::Unpair),
        "DUP" => no_arg(Instr::Dup),
        "SWAP" => no_arg(Instr::Swap),
        "OVER" => no_arg(Instr::Over),
        "POP" => no_arg(Instr::Pop),
        "LOAD" => Ok(Instr::Load(register()?)),
        "STORE" => Ok(Instr::Store(register()?)),
        "JZ" => Ok(Instr::Jz(target()?)),
        "JMP" => Ok(Instr::Jmp(target()?)),
        "EMIT" => no_arg(Instr::Emit),
        "HALT" => no_arg(Instr::Halt),
        _ => Err(Error::MalformedProgram(format!("unknown opcode {op:?}"))),
    }
}

pub mod builtin {
    pub const IDENTITY: u64 = 0;
    pub const SHIFT: u64 = 1;
    /// x -> x + 1 on Cauchy names over Euclidean-Q's dense sequence.
    pub const SUCC_Q: u64 = 2;
    /// Constant name `param(0), param(0), ...`.
    pub const CONST_PARAM: u64 = 3;
    /// Pointwise sum of the two halves of a zipped input.
    pub const ADD2: u64 = 4;
    /// Nullary stream `i + 1`.
    pub const SUCC_NAT: u64 = 5;
    /// Halts after exactly four steps.
    pub const HALT4: u64 = 6;
    /// Never ends its first round.
    pub const LOOP: u64 = 7;
    /// Characteristic map of the Cantor cylinder [01], as an explicit S_BC code stream.
    pub const CHI_CYL01: u64 = 8;
    /// Constant-top characteristic map, explicit S_BC code stream.
    pub const CHI_TOP: u64 = 9;
}

const SUCC_Q_SRC: &str = "
    POS
    ORACLE
    UNPAIR          ; z d
    STORE 1         ; r1 = d
    STORE 0         ; r0 = z
    LOAD 1
    CONST 1
    ADD
    STORE 2         ; r2 = d + 1
    LOAD 0
    CONST 2
    MOD
    JZ even
    LOAD 0          ; odd z: numerator (z+1)/2 > 0
    CONST 1
    ADD
    CONST 2
    DIV
    LOAD 2
    ADD
    CONST 2
    MUL
    CONST 1
    SUB
    JMP done
even:
    LOAD 0          ; even z: numerator -z/2
    CONST 2
    DIV
    STORE 3         ; r3 = |numerator|
    LOAD 3
    LOAD 2
    LT
    JZ nonpositive
    LOAD 2          ; (d+1) - |v| > 0
    LOAD 3
    SUB
    CONST 2
    MUL
    CONST 1
    SUB
    JMP done
nonpositive:
    LOAD 3
    LOAD 2
    SUB
    CONST 2
    MUL
done:
    LOAD 1
    PAIR
    EMIT
";

// Explicit S_BC code stream: [0, 1] is a leaf declared top, [0, 2] a leaf
// declared bottom.
const CHI_CYL01_SRC: &str = "
    POS
    JZ tag
    POS
    CONST 1
    EQ
    JZ pad
    CONST 0
    ORACLE
    CONST 0
    EQ
    CONST 1
    ORACLE
    CONST 1
    EQ
    MUL
    JZ bottom
    CONST 1
    EMIT
bottom:
    CONST 2
    EMIT
tag:
pad:
    CONST 0
    EMIT
";

const CHI_TOP_SRC: &str = "
    POS
    CONST 1
    EQ
    EMIT
";

/// Ids from here on belong to native realizers.
pub const MAX_PROGRAMS: u64 = 100;

/// Programs addressable by id.
#[derive(Debug, Clone)]
pub struct ProgramTable {
    programs: Vec<Arc<RealizerProgram>>,
}

impl ProgramTable {
    pub fn builtin() -> Self {
        let sources: [(&str, &str); 10] = [
            ("identity", "POS\nORACLE\nEMIT"),
            ("shift", "POS\nCONST 1\nADD\nORACLE\nEMIT"),
            ("succ-q", SUCC_Q_SRC),
            ("const-param", "CONST 0\nPARAM\nEMIT"),
            (
                "add2",
                "POS\nCONST 2\nMUL\nORACLE\nPOS\nCONST 2\nMUL\nCONST 1\nADD\nORACLE\nADD\nEMIT",
            ),
            ("succ-nat", "POS\nCONST 1\nADD\nEMIT"),
            ("halt4", "CONST 0\nCONST 0\nADD\nEMIT"),
            ("loop", "top:\nJMP top"),
            ("chi-cyl01", CHI_CYL01_SRC),
            ("chi-top", CHI_TOP_SRC),
        ];
        let programs = sources
            .iter()
            .enumerate()
            .map(|(id, (name, src))| {
                Arc::new(RealizerProgram::assemble(id as u64, name, src).expect("builtin assembles"))
            })
            .collect();
        ProgramTable { programs }
    }

    /// Appends a program, assigning it the next free id.
    pub fn register(&mut self, name: &str, source: &str) -> Result<u64> {
        let id = self.programs.len() as u64;
        if id >= MAX_PROGRAMS {
            return Err(Error::Unsupported(format!("program ids stop at {MAX_PROGRAMS}")));
        }
        let program = RealizerProgram::assemble(id, name, source)?;
        self.programs.push(Arc::new(program));
        Ok(id)
    }

    pub fn get(&self, id: u64) -> Result<Arc<RealizerProgram>> {
        self.programs
            .get(id as usize)
            .cloned()
            .ok_or_else(|| Error::InvalidIndex(format!("no program with id {id}")))
    }

    pub fn len(&self) -> usize {
        self.programs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.programs.is_empty()
    }

    /// The stream `i -> program(i)` on all-zero oracles.
    pub fn nullary_name(&self, id: u64) -> Result<BaireName> {
        let program = self.get(id)?;
        let zero = BaireName::constant(0);
        Ok(BaireName::from_fn(format!("prog {id}"), move |i, fuel| {
            program.run(i, &zero, &zero, fuel).map(|r| r.value)
        }))
    }
}
