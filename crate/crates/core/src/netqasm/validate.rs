//! Profile-aware validation. Returns diagnostics, never fails hard: a
//! subroutine is runnable on a device iff the diagnostics list is empty.

use super::ast::*;
use crate::qdevice::{DeviceProfile, Opcode, ZLowering};
use crate::qbackend::RotAxis;
use std::collections::{HashMap, HashSet};
use std::fmt;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Diagnostic {
    pub line: u32,
    pub col: u32,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.col, self.message)
    }
}

pub fn validate(sub: &Subroutine, profile: &DeviceProfile) -> Vec<Diagnostic> {
    let mut diags = Vec::new();
    let mut arrays: HashMap<u16, u32> = HashMap::new();
    let mut allocated: HashSet<Register> = HashSet::new();

    let push = |line: u32, col: u32, message: String, diags: &mut Vec<Diagnostic>| {
        diags.push(Diagnostic { line, col, message });
    };

    for located in &sub.instrs {
        let (line, col) = (located.line, located.col);
        let i = &located.item;

        let need_op = |op: Opcode, diags: &mut Vec<Diagnostic>| {
            if !profile.supports(op) {
                push(line, col, format!("profile `{}` does not support {op}", profile.name), diags);
            }
        };
        let need_axis = |axis: RotAxis, diags: &mut Vec<Diagnostic>| {
            if !profile.supports_axis(axis) {
                push(
                    line,
                    col,
                    format!("profile `{}` does not rotate about the {} axis", profile.name, axis.as_str()),
                    diags,
                );
            }
        };
        let need_angle = |angle: crate::angle::Angle, diags: &mut Vec<Diagnostic>| {
            if !angle.representable_at(profile.max_angle_denpow) {
                push(
                    line,
                    col,
                    format!(
                        "angle {angle} not representable at granularity pi/{} of profile `{}`",
                        1u32 << profile.max_angle_denpow,
                        profile.name
                    ),
                    diags,
                );
            }
        };
        let need_array = |arr: u16, arrays: &HashMap<u16, u32>, diags: &mut Vec<Diagnostic>| {
            if !arrays.contains_key(&arr) {
                push(line, col, format!("array @{arr} used before declaration"), diags);
            }
        };
        let need_alloc = |q: Register, allocated: &HashSet<Register>, diags: &mut Vec<Diagnostic>| {
            if !allocated.contains(&q) {
                push(line, col, format!("qubit register {q} used before qalloc"), diags);
            }
        };

        match i {
            NetQasmInstr::Array { len, arr } => {
                if arrays.insert(*arr, *len).is_some() {
                    push(line, col, format!("array @{arr} declared twice"), &mut diags);
                }
            }
            NetQasmInstr::Store { arr, idx, .. } | NetQasmInstr::Load { arr, idx, .. } => {
                need_array(*arr, &arrays, &mut diags);
                if let (Operand::Imm(v), Some(len)) = (idx, arrays.get(arr)) {
                    if *v < 0 || *v as u32 >= *len {
                        push(line, col, format!("index {v} out of bounds for @{arr} (len {len})"), &mut diags);
                    }
                }
            }
            NetQasmInstr::WaitAll { arr, lo, hi } | NetQasmInstr::WaitAny { arr, lo, hi } => {
                need_array(*arr, &arrays, &mut diags);
                if let Some(len) = arrays.get(arr) {
                    if lo > hi || *hi > *len {
                        push(line, col, format!("slice {lo}:{hi} out of bounds for @{arr} (len {len})"), &mut diags);
                    }
                }
            }
            NetQasmInstr::RetArr { arr } => need_array(*arr, &arrays, &mut diags),
            NetQasmInstr::Qalloc { q } => {
                need_op(Opcode::INI, &mut diags);
                allocated.insert(*q);
            }
            NetQasmInstr::Qfree { q } => {
                need_alloc(*q, &allocated, &mut diags);
                allocated.remove(q);
            }
            NetQasmInstr::Init { q } => {
                need_op(Opcode::INI, &mut diags);
                need_alloc(*q, &allocated, &mut diags);
            }
            NetQasmInstr::Gate { gate, q } => {
                need_op(Opcode::SQG, &mut diags);
                need_alloc(*q, &allocated, &mut diags);
                match gate {
                    FixedGate::X => need_axis(RotAxis::X, &mut diags),
                    FixedGate::Y => need_axis(RotAxis::Y, &mut diags),
                    FixedGate::Z => match profile.z_lowering {
                        ZLowering::Native => need_axis(RotAxis::Z, &mut diags),
                        ZLowering::DecomposeXy => {}
                        ZLowering::Forbidden => push(
                            line,
                            col,
                            format!("profile `{}` has no Z rotations", profile.name),
                            &mut diags,
                        ),
                    },
                    // h lowers to Y/X pulses everywhere.
                    FixedGate::H => {
                        need_axis(RotAxis::X, &mut diags);
                        need_axis(RotAxis::Y, &mut diags);
                    }
                }
            }
            NetQasmInstr::Rot { axis, q, angle } => {
                need_op(Opcode::SQG, &mut diags);
                need_alloc(*q, &allocated, &mut diags);
                need_angle(*angle, &mut diags);
                match axis {
                    LangAxis::X => need_axis(RotAxis::X, &mut diags),
                    LangAxis::Y => need_axis(RotAxis::Y, &mut diags),
                    LangAxis::Z => match profile.z_lowering {
                        ZLowering::Native => need_axis(RotAxis::Z, &mut diags),
                        ZLowering::DecomposeXy => {
                            // decomposition adds pi/2 pulses; d=1 must fit
                            need_angle(crate::angle::Angle::new(1, 1), &mut diags);
                        }
                        ZLowering::Forbidden => push(
                            line,
                            col,
                            format!("profile `{}` has no Z rotations", profile.name),
                            &mut diags,
                        ),
                    },
                }
            }
            NetQasmInstr::Cnot { ctrl, tgt } | NetQasmInstr::Cphase { ctrl, tgt } => {
                need_op(Opcode::TQG, &mut diags);
                need_alloc(*ctrl, &allocated, &mut diags);
                need_alloc(*tgt, &allocated, &mut diags);
                if matches!(i, NetQasmInstr::Cphase { .. }) && profile.z_lowering == ZLowering::Forbidden {
                    push(line, col, format!("profile `{}` has no Z rotations", profile.name), &mut diags);
                }
            }
            NetQasmInstr::Meas { q, .. } => {
                need_op(Opcode::MSR, &mut diags);
                need_alloc(*q, &allocated, &mut diags);
            }
            NetQasmInstr::CreateEpr { vqubit, result_array, count, .. } => {
                need_op(Opcode::ENT, &mut diags);
                need_array(*result_array, &arrays, &mut diags);
                if let Operand::Imm(c) = count {
                    if *c != 1 {
                        push(line, col, format!("entanglement count {c} unsupported (must be 1)"), &mut diags);
                    }
                }
                if let Operand::Reg(r) = vqubit {
                    allocated.insert(*r);
                }
            }
            NetQasmInstr::RecvEpr { vqubit, result_array, .. } => {
                need_op(Opcode::ENT, &mut diags);
                need_array(*result_array, &arrays, &mut diags);
                if let Operand::Reg(r) = vqubit {
                    allocated.insert(*r);
                }
            }
            NetQasmInstr::Set { .. }
            | NetQasmInstr::Mov { .. }
            | NetQasmInstr::Add { .. }
            | NetQasmInstr::Sub { .. }
            | NetQasmInstr::Jmp { .. }
            | NetQasmInstr::Branch { .. }
            | NetQasmInstr::RetReg { .. } => {}
        }
    }
    diags
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse;
    use super::*;

    #[test]
    fn clean_subroutine_has_no_diagnostics() {
        let text = "set Q0 0\nqalloc Q0\ninit Q0\nrot_y Q0 1 1\nmeas Q0 M0\nqfree Q0\nret_reg M0\n";
        let sub = parse(text).unwrap();
        let diags = validate(&sub, &DeviceProfile::nv_client());
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn fine_rot_z_rejected_on_ion_profile() {
        let sub = parse("set Q0 0\nqalloc Q0\nrot_z Q0 1 4\n").unwrap();
        let diags = validate(&sub, &DeviceProfile::trapped_ion());
        assert!(
            diags.iter().any(|d| d.message.contains("no Z rotations")),
            "{diags:?}"
        );
    }

    #[test]
    fn fine_angle_rejected_on_ion_profile() {
        let sub = parse("set Q0 0\nqalloc Q0\nrot_x Q0 1 4\n").unwrap();
        let diags = validate(&sub, &DeviceProfile::trapped_ion());
        assert!(
            diags.iter().any(|d| d.message.contains("not representable")),
            "{diags:?}"
        );
    }

    #[test]
    fn use_before_qalloc_flagged() {
        let sub = parse("set Q0 0\nmeas Q0 M0\n").unwrap();
        let diags = validate(&sub, &DeviceProfile::nv_client());
        assert!(
            diags.iter().any(|d| d.message.contains("before qalloc")),
            "{diags:?}"
        );
    }

    #[test]
    fn entanglement_needs_ent_support() {
        let sub = parse("array 2 @0\ncreate_epr(1,0) Q0 0 0 1 0\nwait_all @0[0:2]\n").unwrap();
        let diags = validate(&sub, &DeviceProfile::trapped_ion());
        assert!(diags.iter().any(|d| d.message.contains("does not support ENT")), "{diags:?}");
        let diags = validate(&sub, &DeviceProfile::nv_client());
        assert!(diags.is_empty(), "{diags:?}");
    }

    #[test]
    fn array_misuse_flagged() {
        let sub = parse("store R0 @3[0]\n").unwrap();
        let diags = validate(&sub, &DeviceProfile::perfect(1));
        assert!(diags.iter().any(|d| d.message.contains("before declaration")));
        let sub = parse("array 2 @0\nstore R0 @0[5]\n").unwrap();
        let diags = validate(&sub, &DeviceProfile::perfect(1));
        assert!(diags.iter().any(|d| d.message.contains("out of bounds")));
    }
}
