//! Abstract syntax for quantum-block subroutines.
//!
//! The textual grammar is line-based. A subroutine starts with two header
//! directives and is followed by one instruction per line; `//` starts a
//! comment; `LABEL:` lines name branch targets. Registers come in three
//! files of 16: general (R0-R15), qubit-id (Q0-Q15), and measurement
//! outcome (M0-M15). Arrays are `@id`, indexed `@id[expr]` and sliced
//! `@id[lo:hi]`.
//!
//! Entanglement instructions follow the SDK-emitted shape
//! `create_epr(<remote_node>,<er_socket>) vq args res cnt flags` and
//! `recv_epr(<remote_node>,<er_socket>) vq res`; the trailing operand lists
//! are artifact-defined (see grammar notes in the fixtures directory).

use crate::angle::Angle;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Register {
    /// General-purpose.
    R(u8),
    /// Qubit-id.
    Q(u8),
    /// Measurement outcome.
    M(u8),
}

pub const REGISTER_FILE_SIZE: u8 = 16;

impl fmt::Display for Register {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Register::R(i) => write!(f, "R{i}"),
            Register::Q(i) => write!(f, "Q{i}"),
            Register::M(i) => write!(f, "M{i}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Operand {
    Reg(Register),
    Imm(i64),
}

impl fmt::Display for Operand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Operand::Reg(r) => write!(f, "{r}"),
            Operand::Imm(v) => write!(f, "{v}"),
        }
    }
}

/// Rotation axis at the language level (lowering decides the pulses).
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LangAxis {
    X,
    Y,
    Z,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FixedGate {
    X,
    Y,
    Z,
    H,
}

impl FixedGate {
    pub fn mnemonic(self) -> &'static str {
        match self {
            FixedGate::X => "x",
            FixedGate::Y => "y",
            FixedGate::Z => "z",
            FixedGate::H => "h",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BranchCond {
    Bez,
    Bnz,
    Beq,
    Bne,
    Blt,
    Bge,
}

impl BranchCond {
    pub fn mnemonic(self) -> &'static str {
        match self {
            BranchCond::Bez => "bez",
            BranchCond::Bnz => "bnz",
            BranchCond::Beq => "beq",
            BranchCond::Bne => "bne",
            BranchCond::Blt => "blt",
            BranchCond::Bge => "bge",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            BranchCond::Bez | BranchCond::Bnz => 1,
            _ => 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum NetQasmInstr {
    Set { dst: Register, src: Operand },
    Mov { dst: Register, src: Register },
    Add { dst: Register, a: Operand, b: Operand },
    Sub { dst: Register, a: Operand, b: Operand },
    Array { len: u32, arr: u16 },
    Store { src: Operand, arr: u16, idx: Operand },
    Load { dst: Register, arr: u16, idx: Operand },
    Jmp { target: usize },
    Branch { cond: BranchCond, a: Operand, b: Option<Operand>, target: usize },
    Qalloc { q: Register },
    Qfree { q: Register },
    Init { q: Register },
    Gate { gate: FixedGate, q: Register },
    Rot { axis: LangAxis, q: Register, angle: Angle },
    Cnot { ctrl: Register, tgt: Register },
    Cphase { ctrl: Register, tgt: Register },
    Meas { q: Register, dst: Register },
    CreateEpr {
        remote_node: u32,
        socket: u32,
        vqubit: Operand,
        arg_array: u16,
        result_array: u16,
        count: Operand,
        flags: Operand,
    },
    RecvEpr { remote_node: u32, socket: u32, vqubit: Operand, result_array: u16 },
    WaitAll { arr: u16, lo: u32, hi: u32 },
    WaitAny { arr: u16, lo: u32, hi: u32 },
    RetReg { reg: Register },
    RetArr { arr: u16 },
}

impl NetQasmInstr {
    pub fn branch_target(&self) -> Option<usize> {
        match self {
            NetQasmInstr::Jmp { target } => Some(*target),
            NetQasmInstr::Branch { target, .. } => Some(*target),
            _ => None,
        }
    }

    pub fn is_quantum(&self) -> bool {
        matches!(
            self,
            NetQasmInstr::Init { .. }
                | NetQasmInstr::Gate { .. }
                | NetQasmInstr::Rot { .. }
                | NetQasmInstr::Cnot { .. }
                | NetQasmInstr::Cphase { .. }
                | NetQasmInstr::Meas { .. }
        )
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Located<T> {
    pub item: T,
    pub line: u32,
    pub col: u32,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Subroutine {
    pub app_id: u32,
    pub version: (u32, u32),
    pub instrs: Vec<Located<NetQasmInstr>>,
}

impl Subroutine {
    /// Structural equality ignoring source locations.
    pub fn structurally_equal(&self, other: &Subroutine) -> bool {
        self.app_id == other.app_id
            && self.version == other.version
            && self.instrs.len() == other.instrs.len()
            && self
                .instrs
                .iter()
                .zip(other.instrs.iter())
                .all(|(a, b)| a.item == b.item)
    }

    /// Canonical text. Comments are not preserved (parsing drops them);
    /// labels are regenerated as `L<index>:` at branch targets.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!("# NETQASM {}.{}\n", self.version.0, self.version.1));
        out.push_str(&format!("# APPID {}\n", self.app_id));
        let targets: std::collections::BTreeSet<usize> = self
            .instrs
            .iter()
            .filter_map(|i| i.item.branch_target())
            .collect();
        for (idx, instr) in self.instrs.iter().enumerate() {
            if targets.contains(&idx) {
                out.push_str(&format!("L{idx}:\n"));
            }
            out.push_str("    ");
            out.push_str(&render(&instr.item));
            out.push('\n');
        }
        // A trailing branch target needs its label emitted even at the end.
        if targets.contains(&self.instrs.len()) {
            out.push_str(&format!("L{}:\n", self.instrs.len()));
        }
        out
    }
}

fn render(i: &NetQasmInstr) -> String {
    use NetQasmInstr::*;
    match i {
        Set { dst, src } => format!("set {dst} {src}"),
        Mov { dst, src } => format!("mov {dst} {src}"),
        Add { dst, a, b } => format!("add {dst} {a} {b}"),
        Sub { dst, a, b } => format!("sub {dst} {a} {b}"),
        Array { len, arr } => format!("array {len} @{arr}"),
        Store { src, arr, idx } => format!("store {src} @{arr}[{idx}]"),
        Load { dst, arr, idx } => format!("load {dst} @{arr}[{idx}]"),
        Jmp { target } => format!("jmp L{target}"),
        Branch { cond, a, b, target } => match b {
            Some(b) => format!("{} {a} {b} L{target}", cond.mnemonic()),
            None => format!("{} {a} L{target}", cond.mnemonic()),
        },
        Qalloc { q } => format!("qalloc {q}"),
        Qfree { q } => format!("qfree {q}"),
        Init { q } => format!("init {q}"),
        Gate { gate, q } => format!("{} {q}", gate.mnemonic()),
        Rot { axis, q, angle } => {
            let m = match axis {
                LangAxis::X => "rot_x",
                LangAxis::Y => "rot_y",
                LangAxis::Z => "rot_z",
            };
            format!("{m} {q} {} {}", angle.n, angle.d)
        }
        Cnot { ctrl, tgt } => format!("cnot {ctrl} {tgt}"),
        Cphase { ctrl, tgt } => format!("cphase {ctrl} {tgt}"),
        Meas { q, dst } => format!("meas {q} {dst}"),
        CreateEpr { remote_node, socket, vqubit, arg_array, result_array, count, flags } => {
            format!("create_epr({remote_node},{socket}) {vqubit} {arg_array} {result_array} {count} {flags}")
        }
        RecvEpr { remote_node, socket, vqubit, result_array } => {
            format!("recv_epr({remote_node},{socket}) {vqubit} {result_array}")
        }
        WaitAll { arr, lo, hi } => format!("wait_all @{arr}[{lo}:{hi}]"),
        WaitAny { arr, lo, hi } => format!("wait_any @{arr}[{lo}:{hi}]"),
        RetReg { reg } => format!("ret_reg {reg}"),
        RetArr { arr } => format!("ret_arr @{arr}"),
    }
}
