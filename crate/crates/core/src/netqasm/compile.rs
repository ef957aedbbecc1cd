//! Lowering language instructions to device operations.
//!
//! The compiled block keeps a one-to-one step list with the source
//! subroutine so branch targets stay valid: each quantum instruction lowers
//! to a (possibly empty) sequence of physical operations attached to its own
//! step. A maximal `rot_y; rot_z; rot_y; meas` run on one qubit fuses into a
//! pre-measurement-gates setting plus measurement when the profile supports
//! it, leaving the three rotation steps empty.

use super::ast::*;
use super::validate::{validate, Diagnostic};
use crate::angle::Angle;
use crate::qbackend::RotAxis;
use crate::qdevice::{DeviceProfile, Opcode, PmgAxes, ZLowering};

/// A device operation with still-virtual qubit references (registers are
/// resolved by the processor, then translated to physical addresses).
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhysOp {
    Init { q: Register },
    Sqg { q: Register, axis: RotAxis, angle: Angle },
    Tqg { ctrl: Register, tgt: Register, axis: RotAxis, angle: Angle },
    Pmg { axes: PmgAxes, angles: [Angle; 3] },
    Msr { q: Register, dst: Register },
}

impl PhysOp {
    pub fn opcode(&self) -> Opcode {
        match self {
            PhysOp::Init { .. } => Opcode::INI,
            PhysOp::Sqg { .. } => Opcode::SQG,
            PhysOp::Tqg { .. } => Opcode::TQG,
            PhysOp::Pmg { .. } => Opcode::PMG,
            PhysOp::Msr { .. } => Opcode::MSR,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EprDirection {
    Create,
    Recv,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CompiledStep {
    Classical(NetQasmInstr),
    Quantum(Vec<PhysOp>),
    Qalloc(Register),
    Qfree(Register),
    EprRequest {
        dir: EprDirection,
        remote_node: u32,
        socket: u32,
        vqubit: Operand,
        result_array: u16,
    },
    WaitAll { arr: u16, lo: u32, hi: u32 },
}

#[derive(Clone, Debug)]
pub struct CompiledBlock {
    pub app_id: u32,
    pub steps: Vec<CompiledStep>,
}

impl CompiledBlock {
    /// All device opcodes this block can issue.
    pub fn used_opcodes(&self) -> Vec<Opcode> {
        let mut ops: Vec<Opcode> = Vec::new();
        for s in &self.steps {
            if let CompiledStep::Quantum(seq) = s {
                for op in seq {
                    if !ops.contains(&op.opcode()) {
                        ops.push(op.opcode());
                    }
                }
            }
            if let CompiledStep::Qalloc(_) = s {
                if !ops.contains(&Opcode::INI) {
                    ops.push(Opcode::INI);
                }
            }
        }
        ops
    }
}

fn lower_rz(profile: &DeviceProfile, q: Register, angle: Angle) -> Vec<PhysOp> {
    match profile.z_lowering {
        ZLowering::Native => vec![PhysOp::Sqg { q, axis: RotAxis::Z, angle }],
        // Rz(t) as a circuit: Rx(-pi/2), Ry(t), Rx(pi/2).
        ZLowering::DecomposeXy => vec![
            PhysOp::Sqg { q, axis: RotAxis::X, angle: Angle::new(-1, 1) },
            PhysOp::Sqg { q, axis: RotAxis::Y, angle },
            PhysOp::Sqg { q, axis: RotAxis::X, angle: Angle::new(1, 1) },
        ],
        ZLowering::Forbidden => unreachable!("validator rejects Z rotations on this profile"),
    }
}

fn lower_gate(profile: &DeviceProfile, gate: FixedGate, q: Register) -> Vec<PhysOp> {
    let pi = Angle::PI;
    match gate {
        FixedGate::X => vec![PhysOp::Sqg { q, axis: RotAxis::X, angle: pi }],
        FixedGate::Y => vec![PhysOp::Sqg { q, axis: RotAxis::Y, angle: pi }],
        FixedGate::Z => lower_rz(profile, q, pi),
        // h as a circuit: Ry(pi/2) then Rx(pi) (equals H up to global phase).
        FixedGate::H => vec![
            PhysOp::Sqg { q, axis: RotAxis::Y, angle: Angle::new(1, 1) },
            PhysOp::Sqg { q, axis: RotAxis::X, angle: pi },
        ],
    }
}

pub fn compile(sub: &Subroutine, profile: &DeviceProfile) -> Result<CompiledBlock, Vec<Diagnostic>> {
    let diags = validate(sub, profile);
    if !diags.is_empty() {
        return Err(diags);
    }

    let branch_targets: std::collections::HashSet<usize> =
        sub.instrs.iter().filter_map(|i| i.item.branch_target()).collect();

    // Find measurement fusion windows: indices i..i+3 holding the
    // rot_y/rot_z/rot_y/meas pattern on one qubit register, with no branch
    // landing inside the window.
    let n = sub.instrs.len();
    let mut fused_meas: std::collections::HashMap<usize, (Angle, Angle, Angle)> = Default::default();
    let mut emptied: std::collections::HashSet<usize> = Default::default();
    if profile.supports(Opcode::PMG) {
        for i in 0..n.saturating_sub(3) {
            let (a1, q1) = match &sub.instrs[i].item {
                NetQasmInstr::Rot { axis: LangAxis::Y, q, angle } => (*angle, *q),
                _ => continue,
            };
            let (a2, q2) = match &sub.instrs[i + 1].item {
                NetQasmInstr::Rot { axis: LangAxis::Z, q, angle } => (*angle, *q),
                _ => continue,
            };
            let (a3, q3) = match &sub.instrs[i + 2].item {
                NetQasmInstr::Rot { axis: LangAxis::Y, q, angle } => (*angle, *q),
                _ => continue,
            };
            let qm = match &sub.instrs[i + 3].item {
                NetQasmInstr::Meas { q, .. } => *q,
                _ => continue,
            };
            if q1 != q2 || q2 != q3 || q3 != qm {
                continue;
            }
            if (i + 1..=i + 3).any(|t| branch_targets.contains(&t)) {
                continue;
            }
            fused_meas.insert(i + 3, (a1, a2, a3));
            emptied.extend([i, i + 1, i + 2]);
        }
    }

    let mut steps = Vec::with_capacity(n);
    for (idx, located) in sub.instrs.iter().enumerate() {
        let i = &located.item;
        let step = match i {
            NetQasmInstr::Qalloc { q } => CompiledStep::Qalloc(*q),
            NetQasmInstr::Qfree { q } => CompiledStep::Qfree(*q),
            NetQasmInstr::Init { q } => CompiledStep::Quantum(vec![PhysOp::Init { q: *q }]),
            NetQasmInstr::Gate { gate, q } => {
                if emptied.contains(&idx) {
                    unreachable!("fixed gates are never part of a fusion window")
                }
                CompiledStep::Quantum(lower_gate(profile, *gate, *q))
            }
            NetQasmInstr::Rot { axis, q, angle } => {
                if emptied.contains(&idx) {
                    CompiledStep::Quantum(Vec::new())
                } else {
                    match axis {
                        LangAxis::X => CompiledStep::Quantum(vec![PhysOp::Sqg {
                            q: *q,
                            axis: RotAxis::X,
                            angle: *angle,
                        }]),
                        LangAxis::Y => CompiledStep::Quantum(vec![PhysOp::Sqg {
                            q: *q,
                            axis: RotAxis::Y,
                            angle: *angle,
                        }]),
                        LangAxis::Z => CompiledStep::Quantum(lower_rz(profile, *q, *angle)),
                    }
                }
            }
            NetQasmInstr::Cnot { ctrl, tgt } => CompiledStep::Quantum(vec![PhysOp::Tqg {
                ctrl: *ctrl,
                tgt: *tgt,
                axis: RotAxis::X,
                angle: Angle::PI,
            }]),
            NetQasmInstr::Cphase { ctrl, tgt } => CompiledStep::Quantum(vec![PhysOp::Tqg {
                ctrl: *ctrl,
                tgt: *tgt,
                axis: RotAxis::Z,
                angle: Angle::PI,
            }]),
            NetQasmInstr::Meas { q, dst } => {
                let mut seq = Vec::new();
                if let Some((a1, a2, a3)) = fused_meas.get(&idx) {
                    seq.push(PhysOp::Pmg { axes: PmgAxes::YZY, angles: [*a1, *a2, *a3] });
                }
                seq.push(PhysOp::Msr { q: *q, dst: *dst });
                CompiledStep::Quantum(seq)
            }
            NetQasmInstr::CreateEpr { remote_node, socket, vqubit, result_array, .. } => {
                CompiledStep::EprRequest {
                    dir: EprDirection::Create,
                    remote_node: *remote_node,
                    socket: *socket,
                    vqubit: *vqubit,
                    result_array: *result_array,
                }
            }
            NetQasmInstr::RecvEpr { remote_node, socket, vqubit, result_array } => {
                CompiledStep::EprRequest {
                    dir: EprDirection::Recv,
                    remote_node: *remote_node,
                    socket: *socket,
                    vqubit: *vqubit,
                    result_array: *result_array,
                }
            }
            NetQasmInstr::WaitAll { arr, lo, hi } => {
                CompiledStep::WaitAll { arr: *arr, lo: *lo, hi: *hi }
            }
            classical => CompiledStep::Classical(classical.clone()),
        };
        steps.push(step);
    }
    Ok(CompiledBlock { app_id: sub.app_id, steps })
}

#[cfg(test)]
mod tests {
    use super::super::parse::parse;
    use super::*;
    use crate::qbackend::dm::rotation_unitary;
    use num_complex::Complex64;

    fn unitary_2x2_of(ops: &[PhysOp]) -> [Complex64; 4] {
        let mut u = [Complex64::ONE, Complex64::ZERO, Complex64::ZERO, Complex64::ONE];
        for op in ops {
            let g = match op {
                PhysOp::Sqg { axis, angle, .. } => rotation_unitary(*axis, angle.to_radians()),
                other => panic!("not a single-qubit gate: {other:?}"),
            };
            // compose: u <- g * u
            u = [
                g[0] * u[0] + g[1] * u[2],
                g[0] * u[1] + g[1] * u[3],
                g[2] * u[0] + g[3] * u[2],
                g[2] * u[1] + g[3] * u[3],
            ];
        }
        u
    }

    fn equal_up_to_phase(a: &[Complex64; 4], b: &[Complex64; 4]) -> bool {
        // find the largest entry of b to anchor the phase
        let k = (0..4).max_by(|i, j| b[*i].norm().partial_cmp(&b[*j].norm()).unwrap()).unwrap();
        if b[k].norm() < 1e-12 {
            return false;
        }
        let phase = a[k] / b[k];
        if (phase.norm() - 1.0).abs() > 1e-9 {
            return false;
        }
        (0..4).all(|i| (a[i] - b[i] * phase).norm() < 1e-9)
    }

    #[test]
    fn h_lowering_is_hadamard_up_to_phase() {
        let sub = parse("set Q0 0\nqalloc Q0\nh Q0\n").unwrap();
        let block = compile(&sub, &DeviceProfile::nv_client()).unwrap();
        let CompiledStep::Quantum(seq) = &block.steps[2] else { panic!() };
        let u = unitary_2x2_of(seq);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let h = [
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(s, 0.0),
            Complex64::new(-s, 0.0),
        ];
        assert!(equal_up_to_phase(&u, &h), "{u:?}");
    }

    #[test]
    fn rz_decomposition_matches_native_rotation() {
        for n in 0..16 {
            let angle = Angle::new(n, 3);
            let text = format!("set Q0 0\nqalloc Q0\nrot_z Q0 {} {}\n", angle.n, angle.d);
            let sub = parse(&text).unwrap();
            let block = compile(&sub, &DeviceProfile::nv_client()).unwrap();
            let CompiledStep::Quantum(seq) = &block.steps[2] else { panic!() };
            assert_eq!(seq.len(), 3, "NV profile decomposes Rz into X/Y pulses");
            let u = unitary_2x2_of(seq);
            let rz = rotation_unitary(RotAxis::Z, angle.to_radians());
            assert!(equal_up_to_phase(&u, &rz), "angle {angle}");
        }
    }

    #[test]
    fn measurement_fusion_produces_pmg() {
        let text = "set Q0 0\nqalloc Q0\ninit Q0\nrot_y Q0 1 1\nrot_z Q0 1 2\nrot_y Q0 3 1\nmeas Q0 M0\n";
        let sub = parse(text).unwrap();
        let block = compile(&sub, &DeviceProfile::nv_client()).unwrap();
        // the three rotations lower to empty steps
        for idx in 3..=5 {
            let CompiledStep::Quantum(seq) = &block.steps[idx] else { panic!() };
            assert!(seq.is_empty());
        }
        let CompiledStep::Quantum(seq) = &block.steps[6] else { panic!() };
        assert_eq!(seq.len(), 2);
        assert!(matches!(seq[0], PhysOp::Pmg { axes: PmgAxes::YZY, .. }));
        assert!(matches!(seq[1], PhysOp::Msr { .. }));
    }

    #[test]
    fn no_fusion_when_branch_lands_inside_window() {
        let text = "set Q0 0\nqalloc Q0\njmp MID\nrot_y Q0 1 1\nMID:\nrot_z Q0 1 2\nrot_y Q0 3 1\nmeas Q0 M0\n";
        let sub = parse(text).unwrap();
        let block = compile(&sub, &DeviceProfile::nv_client()).unwrap();
        let CompiledStep::Quantum(seq) = block.steps.last().unwrap() else { panic!() };
        assert_eq!(seq.len(), 1, "plain MSR, no PMG");
    }

    #[test]
    fn classical_instructions_pass_through() {
        let sub = parse("set R0 1\nadd R0 R0 2\njmp END\nEND:\n").unwrap();
        let block = compile(&sub, &DeviceProfile::nv_client()).unwrap();
        assert!(matches!(block.steps[0], CompiledStep::Classical(NetQasmInstr::Set { .. })));
        assert!(matches!(block.steps[1], CompiledStep::Classical(NetQasmInstr::Add { .. })));
        assert!(matches!(block.steps[2], CompiledStep::Classical(NetQasmInstr::Jmp { target: 3 })));
    }

    #[test]
    fn validated_blocks_contain_only_supported_opcodes() {
        let text = "array 2 @0\nset Q0 0\ncreate_epr(1,0) Q0 0 0 1 0\nwait_all @0[0:2]\nrot_z Q0 1 2\nh Q0\nmeas Q0 M0\nqfree Q0\n";
        let sub = parse(text).unwrap();
        let profile = DeviceProfile::nv_client();
        let block = compile(&sub, &profile).unwrap();
        for op in block.used_opcodes() {
            assert!(profile.supports(op), "{op} not supported");
        }
    }

    #[test]
    fn compile_rejects_invalid_input_with_diagnostics() {
        let sub = parse("rot_z Q0 1 4\n").unwrap();
        let err = compile(&sub, &DeviceProfile::trapped_ion()).unwrap_err();
        assert!(!err.is_empty());
    }
}
