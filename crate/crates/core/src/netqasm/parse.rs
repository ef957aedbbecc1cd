//! Text -> AST. Errors carry line and column; comments are stripped; labels
//! are resolved to instruction indices in a second pass.

use super::ast::*;
use crate::angle::Angle;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{line}:{col}: {msg}")]
pub struct ParseError {
    pub line: u32,
    pub col: u32,
    pub msg: String,
}

fn err<T>(line: u32, col: u32, msg: impl Into<String>) -> Result<T, ParseError> {
    Err(ParseError { line, col, msg: msg.into() })
}

enum RawLine {
    Label(String),
    Instr { mnemonic: String, rest: Vec<String>, col: u32 },
}

pub fn parse(text: &str) -> Result<Subroutine, ParseError> {
    let mut version = (1u32, 0u32);
    let mut app_id = 0u32;
    let mut raw: Vec<(u32, RawLine)> = Vec::new();

    for (idx, full_line) in text.lines().enumerate() {
        let lineno = idx as u32 + 1;
        let line = match full_line.find("//") {
            Some(p) => &full_line[..p],
            None => full_line,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() {
            continue;
        }
        if let Some(rest) = trimmed.strip_prefix('#') {
            let rest = rest.trim();
            if let Some(v) = rest.strip_prefix("NETQASM") {
                let v = v.trim();
                let (maj, min) = v
                    .split_once('.')
                    .ok_or(ParseError { line: lineno, col: 1, msg: format!("bad version `{v}`") })?;
                version = (
                    maj.parse().map_err(|_| ParseError { line: lineno, col: 1, msg: format!("bad version `{v}`") })?,
                    min.parse().map_err(|_| ParseError { line: lineno, col: 1, msg: format!("bad version `{v}`") })?,
                );
            } else if let Some(v) = rest.strip_prefix("APPID") {
                app_id = v.trim().parse().map_err(|_| ParseError {
                    line: lineno,
                    col: 1,
                    msg: format!("bad app id `{}`", v.trim()),
                })?;
            } else {
                return err(lineno, 1, format!("unknown directive `#{rest}`"));
            }
            continue;
        }
        if let Some(label) = trimmed.strip_suffix(':') {
            if label.is_empty() || !label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_') {
                return err(lineno, 1, format!("bad label `{label}`"));
            }
            raw.push((lineno, RawLine::Label(label.to_string())));
            continue;
        }
        let col = (line.len() - line.trim_start().len()) as u32 + 1;
        let mut parts = trimmed.split_whitespace();
        let head = parts.next().expect("non-empty line");
        // `create_epr(1,0)` keeps its parenthesized pair attached to the head.
        let (mnemonic, inline_args) = match head.find('(') {
            Some(p) => (head[..p].to_string(), Some(head[p..].to_string())),
            None => (head.to_string(), None),
        };
        let mut rest: Vec<String> = Vec::new();
        if let Some(a) = inline_args {
            rest.push(a);
        }
        rest.extend(parts.map(|s| s.to_string()));
        raw.push((lineno, RawLine::Instr { mnemonic, rest, col }));
    }

    // First pass: label -> instruction index.
    let mut labels: HashMap<String, usize> = HashMap::new();
    let mut n_instrs = 0usize;
    for (lineno, l) in &raw {
        match l {
            RawLine::Label(name) => {
                if labels.insert(name.clone(), n_instrs).is_some() {
                    return err(*lineno, 1, format!("duplicate label `{name}`"));
                }
            }
            RawLine::Instr { .. } => n_instrs += 1,
        }
    }

    let mut instrs = Vec::with_capacity(n_instrs);
    for (lineno, l) in raw {
        let RawLine::Instr { mnemonic, rest, col } = l else { continue };
        let instr = parse_instr(&mnemonic, &rest, lineno, col, &labels, n_instrs)?;
        instrs.push(Located { item: instr, line: lineno, col });
    }
    Ok(Subroutine { app_id, version, instrs })
}

struct Args<'a> {
    parts: &'a [String],
    pos: usize,
    line: u32,
    col: u32,
    mnemonic: &'a str,
}

impl<'a> Args<'a> {
    fn next(&mut self) -> Result<&'a str, ParseError> {
        let p = self.parts.get(self.pos).ok_or(ParseError {
            line: self.line,
            col: self.col,
            msg: format!(
                "`{}` expects more operands (got {})",
                self.mnemonic,
                self.parts.len()
            ),
        })?;
        self.pos += 1;
        Ok(p)
    }

    fn finish(&self) -> Result<(), ParseError> {
        if self.pos != self.parts.len() {
            err(
                self.line,
                self.col,
                format!(
                    "`{}` takes {} operand(s), got {}",
                    self.mnemonic,
                    self.pos,
                    self.parts.len()
                ),
            )
        } else {
            Ok(())
        }
    }

    fn reg(&mut self) -> Result<Register, ParseError> {
        let s = self.next()?;
        parse_register(s).ok_or(ParseError {
            line: self.line,
            col: self.col,
            msg: format!("expected register, got `{s}`"),
        })
    }

    fn operand(&mut self) -> Result<Operand, ParseError> {
        let s = self.next()?;
        parse_operand(s).ok_or(ParseError {
            line: self.line,
            col: self.col,
            msg: format!("expected register or immediate, got `{s}`"),
        })
    }

    fn int<T: std::str::FromStr>(&mut self) -> Result<T, ParseError> {
        let s = self.next()?;
        s.parse().map_err(|_| ParseError {
            line: self.line,
            col: self.col,
            msg: format!("expected integer, got `{s}`"),
        })
    }

    fn array_ref(&mut self) -> Result<u16, ParseError> {
        let s = self.next()?;
        let inner = s.strip_prefix('@').ok_or(ParseError {
            line: self.line,
            col: self.col,
            msg: format!("expected array `@id`, got `{s}`"),
        })?;
        inner.parse().map_err(|_| ParseError {
            line: self.line,
            col: self.col,
            msg: format!("bad array id `{s}`"),
        })
    }

    /// `@id[idx]` with idx a register or immediate.
    fn array_index(&mut self) -> Result<(u16, Operand), ParseError> {
        let s = self.next()?;
        let bad = || ParseError {
            line: self.line,
            col: self.col,
            msg: format!("expected `@id[index]`, got `{s}`"),
        };
        let inner = s.strip_prefix('@').ok_or_else(bad)?;
        let open = inner.find('[').ok_or_else(bad)?;
        if !inner.ends_with(']') {
            return Err(bad());
        }
        let arr = inner[..open].parse().map_err(|_| bad())?;
        let idx = parse_operand(&inner[open + 1..inner.len() - 1]).ok_or_else(bad)?;
        Ok((arr, idx))
    }

    /// `@id[lo:hi]`
    fn array_slice(&mut self) -> Result<(u16, u32, u32), ParseError> {
        let s = self.next()?;
        let bad = || ParseError {
            line: self.line,
            col: self.col,
            msg: format!("expected `@id[lo:hi]`, got `{s}`"),
        };
        let inner = s.strip_prefix('@').ok_or_else(bad)?;
        let open = inner.find('[').ok_or_else(bad)?;
        if !inner.ends_with(']') {
            return Err(bad());
        }
        let arr = inner[..open].parse().map_err(|_| bad())?;
        let (lo, hi) = inner[open + 1..inner.len() - 1].split_once(':').ok_or_else(bad)?;
        Ok((arr, lo.parse().map_err(|_| bad())?, hi.parse().map_err(|_| bad())?))
    }

    fn label(&mut self, labels: &HashMap<String, usize>, n_instrs: usize) -> Result<usize, ParseError> {
        let s = self.next()?;
        let target = labels.get(s).copied().ok_or(ParseError {
            line: self.line,
            col: self.col,
            msg: format!("unresolved label `{s}`"),
        })?;
        if target > n_instrs {
            return err(self.line, self.col, format!("label `{s}` out of range"));
        }
        Ok(target)
    }

    fn angle(&mut self) -> Result<Angle, ParseError> {
        let n: i64 = self.int()?;
        let d: u8 = self.int()?;
        if d > 8 {
            return err(self.line, self.col, format!("angle exponent {d} too large"));
        }
        Ok(Angle::new(n, d))
    }

    /// The `(a,b)` pair glued to create_epr/recv_epr mnemonics.
    fn paren_pair(&mut self) -> Result<(u32, u32), ParseError> {
        let s = self.next()?;
        let bad = || ParseError {
            line: self.line,
            col: self.col,
            msg: format!("expected `(remote_node,socket)`, got `{s}`"),
        };
        let inner = s.strip_prefix('(').and_then(|x| x.strip_suffix(')')).ok_or_else(bad)?;
        let (a, b) = inner.split_once(',').ok_or_else(bad)?;
        Ok((a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?))
    }
}

fn parse_register(s: &str) -> Option<Register> {
    let (class, num) = s.split_at(1);
    let idx: u8 = num.parse().ok()?;
    if idx >= REGISTER_FILE_SIZE {
        return None;
    }
    match class {
        "R" => Some(Register::R(idx)),
        "Q" => Some(Register::Q(idx)),
        "M" => Some(Register::M(idx)),
        _ => None,
    }
}

fn parse_operand(s: &str) -> Option<Operand> {
    if let Some(r) = parse_register(s) {
        return Some(Operand::Reg(r));
    }
    s.parse().ok().map(Operand::Imm)
}

fn parse_instr(
    mnemonic: &str,
    rest: &[String],
    line: u32,
    col: u32,
    labels: &HashMap<String, usize>,
    n_instrs: usize,
) -> Result<NetQasmInstr, ParseError> {
    use NetQasmInstr::*;
    let mut a = Args { parts: rest, pos: 0, line, col, mnemonic };
    let instr = match mnemonic {
        "set" => Set { dst: a.reg()?, src: a.operand()? },
        "mov" => Mov { dst: a.reg()?, src: a.reg()? },
        "add" => Add { dst: a.reg()?, a: a.operand()?, b: a.operand()? },
        "sub" => Sub { dst: a.reg()?, a: a.operand()?, b: a.operand()? },
        "array" => Array { len: a.int()?, arr: a.array_ref()? },
        "store" => {
            let src = a.operand()?;
            let (arr, idx) = a.array_index()?;
            Store { src, arr, idx }
        }
        "load" => {
            let dst = a.reg()?;
            let (arr, idx) = a.array_index()?;
            Load { dst, arr, idx }
        }
        "jmp" => Jmp { target: a.label(labels, n_instrs)? },
        "bez" | "bnz" => {
            let cond = if mnemonic == "bez" { BranchCond::Bez } else { BranchCond::Bnz };
            Branch { cond, a: a.operand()?, b: None, target: a.label(labels, n_instrs)? }
        }
        "beq" | "bne" | "blt" | "bge" => {
            let cond = match mnemonic {
                "beq" => BranchCond::Beq,
                "bne" => BranchCond::Bne,
                "blt" => BranchCond::Blt,
                _ => BranchCond::Bge,
            };
            Branch {
                cond,
                a: a.operand()?,
                b: Some(a.operand()?),
                target: a.label(labels, n_instrs)?,
            }
        }
        "qalloc" => Qalloc { q: a.reg()? },
        "qfree" => Qfree { q: a.reg()? },
        "init" => Init { q: a.reg()? },
        "x" => Gate { gate: FixedGate::X, q: a.reg()? },
        "y" => Gate { gate: FixedGate::Y, q: a.reg()? },
        "z" => Gate { gate: FixedGate::Z, q: a.reg()? },
        "h" => Gate { gate: FixedGate::H, q: a.reg()? },
        "rot_x" => Rot { axis: LangAxis::X, q: a.reg()?, angle: a.angle()? },
        "rot_y" => Rot { axis: LangAxis::Y, q: a.reg()?, angle: a.angle()? },
        "rot_z" => Rot { axis: LangAxis::Z, q: a.reg()?, angle: a.angle()? },
        "cnot" => Cnot { ctrl: a.reg()?, tgt: a.reg()? },
        "cphase" => Cphase { ctrl: a.reg()?, tgt: a.reg()? },
        "meas" => Meas { q: a.reg()?, dst: a.reg()? },
        "create_epr" => {
            let (remote_node, socket) = a.paren_pair()?;
            let vqubit = a.operand()?;
            let arg_array = a.int()?;
            let result_array = a.int()?;
            let count = a.operand()?;
            let flags = a.operand()?;
            CreateEpr { remote_node, socket, vqubit, arg_array, result_array, count, flags }
        }
        "recv_epr" => {
            let (remote_node, socket) = a.paren_pair()?;
            RecvEpr { remote_node, socket, vqubit: a.operand()?, result_array: a.int()? }
        }
        "wait_all" => {
            let (arr, lo, hi) = a.array_slice()?;
            WaitAll { arr, lo, hi }
        }
        "wait_any" => {
            let (arr, lo, hi) = a.array_slice()?;
            WaitAny { arr, lo, hi }
        }
        "ret_reg" => RetReg { reg: a.reg()? },
        "ret_arr" => RetArr { arr: a.array_ref()? },
        other => return err(line, col, format!("unknown mnemonic `{other}`")),
    };
    a.finish()?;
    Ok(instr)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_set_with_immediate() {
        let sub = parse("set R0 0\n").unwrap();
        assert_eq!(sub.instrs.len(), 1);
        assert_eq!(
            sub.instrs[0].item,
            NetQasmInstr::Set { dst: Register::R(0), src: Operand::Imm(0) }
        );
    }

    #[test]
    fn parses_sdk_style_create_epr() {
        let sub = parse("create_epr(1,0) 1 0 2 3 4\n").unwrap();
        match &sub.instrs[0].item {
            NetQasmInstr::CreateEpr { remote_node, socket, result_array, .. } => {
                assert_eq!(*remote_node, 1);
                assert_eq!(*socket, 0);
                assert_eq!(*result_array, 2);
            }
            other => panic!("wrong instr: {other:?}"),
        }
    }

    #[test]
    fn unknown_mnemonic_reports_location() {
        let e = parse("set R0 0\nfrobnicate R0\n").unwrap_err();
        assert_eq!(e.line, 2);
        assert!(e.msg.contains("frobnicate"), "{}", e.msg);
    }

    #[test]
    fn bad_arity_is_an_error() {
        let e = parse("set R0\n").unwrap_err();
        assert!(e.msg.contains("expects more operands"), "{}", e.msg);
        let e = parse("set R0 1 2\n").unwrap_err();
        assert!(e.msg.contains("takes 2 operand(s)"), "{}", e.msg);
    }

    #[test]
    fn unresolved_label_is_an_error() {
        let e = parse("jmp NOWHERE\n").unwrap_err();
        assert!(e.msg.contains("unresolved label"), "{}", e.msg);
    }

    #[test]
    fn labels_resolve_to_indices() {
        let text = "set R0 0\nLOOP:\n  add R0 R0 1\n  blt R0 10 LOOP\n";
        let sub = parse(text).unwrap();
        assert_eq!(sub.instrs[2].item.branch_target(), Some(1));
    }

    #[test]
    fn comments_and_headers() {
        let text = "# NETQASM 1.0\n# APPID 3\n// full line comment\nset R0 5 // trailing\n";
        let sub = parse(text).unwrap();
        assert_eq!(sub.app_id, 3);
        assert_eq!(sub.version, (1, 0));
        assert_eq!(sub.instrs.len(), 1);
    }

    #[test]
    fn angles_parse_as_n_d_pairs() {
        let sub = parse("rot_z Q0 3 1\n").unwrap();
        match &sub.instrs[0].item {
            NetQasmInstr::Rot { angle, .. } => {
                assert_eq!(*angle, Angle::new(3, 1));
            }
            other => panic!("wrong instr: {other:?}"),
        }
    }

    #[test]
    fn serialize_parse_round_trip() {
        let text = "\
# NETQASM 1.0
# APPID 2
array 4 @0
set Q0 0
qalloc Q0
init Q0
rot_y Q0 1 1
meas Q0 M0
store M0 @0[0]
qfree Q0
ret_arr @0
";
        let sub = parse(text).unwrap();
        let re = parse(&sub.serialize()).unwrap();
        assert!(sub.structurally_equal(&re));
        // Determinism: serializing twice is byte-identical.
        assert_eq!(sub.serialize(), re.serialize());
    }
}
