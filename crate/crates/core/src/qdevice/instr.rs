//! The device wire vocabulary: physical instructions, responses, and device
//! profiles describing what a given platform supports and how long its
//! operations take.

use crate::angle::Angle;
use crate::qbackend::{BellLabel, NoiseParams, ReadoutErrorModel, RotAxis};
use crate::sim::SimDuration;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Opcode {
    INI,
    SQG,
    TQG,
    AQG,
    MSR,
    ENT,
    ENM,
    MOV,
    SWP,
    ESW,
    PMG,
    NOP,
}

impl Opcode {
    pub fn as_str(self) -> &'static str {
        match self {
            Opcode::INI => "INI",
            Opcode::SQG => "SQG",
            Opcode::TQG => "TQG",
            Opcode::AQG => "AQG",
            Opcode::MSR => "MSR",
            Opcode::ENT => "ENT",
            Opcode::ENM => "ENM",
            Opcode::MOV => "MOV",
            Opcode::SWP => "SWP",
            Opcode::ESW => "ESW",
            Opcode::PMG => "PMG",
            Opcode::NOP => "NOP",
        }
    }
}

impl fmt::Display for Opcode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Axes triple for pre-measurement rotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum PmgAxes {
    XYX,
    YZY,
    ZXZ,
}

impl PmgAxes {
    pub fn axes(self) -> [RotAxis; 3] {
        match self {
            PmgAxes::XYX => [RotAxis::X, RotAxis::Y, RotAxis::X],
            PmgAxes::YZY => [RotAxis::Y, RotAxis::Z, RotAxis::Y],
            PmgAxes::ZXZ => [RotAxis::Z, RotAxis::X, RotAxis::Z],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            PmgAxes::XYX => "X-Y-X",
            PmgAxes::YZY => "Y-Z-Y",
            PmgAxes::ZXZ => "Z-X-Z",
        }
    }
}

/// A physical instruction with resolved physical qubit addresses.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PhysicalInstruction {
    Ini { qubit: usize },
    Sqg { qubit: usize, axis: RotAxis, angle: Angle },
    Tqg { ctrl: usize, tgt: usize, axis: RotAxis, angle: Angle },
    Aqg { axis: RotAxis, angle: Angle },
    Msr { qubit: usize },
    Ent { qubit: usize, neighbor: u32, fid: u32 },
    Enm { qubit: usize, neighbor: u32, fid: u32 },
    Mov { src: usize, dst: usize },
    Swp { a: usize, b: usize },
    Esw { a: usize, b: usize },
    Pmg { axes: PmgAxes, angles: [Angle; 3] },
    Nop,
}

impl PhysicalInstruction {
    pub fn opcode(&self) -> Opcode {
        match self {
            PhysicalInstruction::Ini { .. } => Opcode::INI,
            PhysicalInstruction::Sqg { .. } => Opcode::SQG,
            PhysicalInstruction::Tqg { .. } => Opcode::TQG,
            PhysicalInstruction::Aqg { .. } => Opcode::AQG,
            PhysicalInstruction::Msr { .. } => Opcode::MSR,
            PhysicalInstruction::Ent { .. } => Opcode::ENT,
            PhysicalInstruction::Enm { .. } => Opcode::ENM,
            PhysicalInstruction::Mov { .. } => Opcode::MOV,
            PhysicalInstruction::Swp { .. } => Opcode::SWP,
            PhysicalInstruction::Esw { .. } => Opcode::ESW,
            PhysicalInstruction::Pmg { .. } => Opcode::PMG,
            PhysicalInstruction::Nop => Opcode::NOP,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum QDeviceResponse {
    Success,
    /// Measurement outcome (SUCCESS_0 / SUCCESS_1).
    Outcome(u8),
    /// Entanglement succeeded with the given heralded state.
    EntSuccess(BellLabel),
    /// Entangle-and-measure succeeded; heralded state plus local outcome.
    EnmSuccess(BellLabel, u8),
    EntFailure,
    EntSyncFailure,
}

impl QDeviceResponse {
    pub fn label(&self) -> String {
        match self {
            QDeviceResponse::Success => "SUCCESS".into(),
            QDeviceResponse::Outcome(b) => format!("SUCCESS_{b}"),
            QDeviceResponse::EntSuccess(l) => format!("SUCCESS_{}", l.as_str()),
            QDeviceResponse::EnmSuccess(l, b) => format!("SUCCESS_{}_{b}", l.as_str()),
            QDeviceResponse::EntFailure => "ENT_FAILURE".into(),
            QDeviceResponse::EntSyncFailure => "ENT_SYNC_FAILURE".into(),
        }
    }

    /// Whether this response kind is legal for the instruction it answers.
    pub fn legal_for(&self, op: Opcode) -> bool {
        use Opcode::*;
        match self {
            QDeviceResponse::Success => {
                matches!(op, INI | SQG | TQG | AQG | PMG | MOV | SWP | ESW | NOP)
            }
            QDeviceResponse::Outcome(_) => op == MSR,
            QDeviceResponse::EntSuccess(_) => op == ENT,
            QDeviceResponse::EnmSuccess(..) => op == ENM,
            QDeviceResponse::EntFailure | QDeviceResponse::EntSyncFailure => {
                matches!(op, ENT | ENM)
            }
        }
    }
}

/// How the compiler should realize Z-axis rotations.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ZLowering {
    /// Device rotates about Z natively.
    Native,
    /// Rz(theta) = Rx(pi/2) Ry(theta) Rx(-pi/2); only X/Y pulses exist.
    DecomposeXy,
    /// Z rotations are not available at all.
    Forbidden,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DurationRange {
    pub min_ns: u64,
    pub max_ns: u64,
}

impl DurationRange {
    pub fn fixed(ns: u64) -> DurationRange {
        DurationRange { min_ns: ns, max_ns: ns }
    }

    pub fn midpoint(&self) -> SimDuration {
        SimDuration::from_ns((self.min_ns + self.max_ns) / 2)
    }
}

/// Everything the kernel and compiler need to know about one device.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DeviceProfile {
    pub name: String,
    /// Communication tick period with the kernel, in ns (10 us at 100 kHz).
    pub tick_ns: u64,
    pub num_qubits: usize,
    pub supported_opcodes: Vec<Opcode>,
    /// Rotation axes accepted for SQG/TQG/AQG.
    pub sqg_axes: Vec<RotAxis>,
    /// Maximum angle denominator exponent d in n*pi/2^d.
    pub max_angle_denpow: u8,
    pub z_lowering: ZLowering,
    /// Instruction durations by opcode; response arrives on the first tick
    /// after the duration, rounded up to whole ticks.
    pub durations: BTreeMap<Opcode, DurationRange>,
    /// Extra time MSR/ENM takes per pending nonzero pre-measurement rotation.
    pub pmg_rotation_ns: u64,
    /// Bernoulli parameter of the abstract charge-resonance pass flag.
    pub cr_pass_probability: f64,
    pub readout: ReadoutErrorModel,
    pub noise: NoiseParams,
}

impl DeviceProfile {
    pub fn supports(&self, op: Opcode) -> bool {
        self.supported_opcodes.contains(&op)
    }

    pub fn supports_axis(&self, axis: RotAxis) -> bool {
        self.sqg_axes.contains(&axis)
    }

    pub fn duration(&self, op: Opcode) -> SimDuration {
        self.durations
            .get(&op)
            .map(|r| r.midpoint())
            .unwrap_or(SimDuration::from_ns(self.tick_ns))
    }

    /// The NV-style profile of the benchmarked client node (100 kHz ticks).
    pub fn nv_client() -> DeviceProfile {
        DeviceProfile::nv_node("nv-client", 145_000, ReadoutErrorModel { f00: 0.841, f11: 0.997 })
    }

    /// The NV-style profile of the benchmarked server node.
    pub fn nv_server() -> DeviceProfile {
        DeviceProfile::nv_node("nv-server", 90_000, ReadoutErrorModel { f00: 0.912, f11: 0.995 })
    }

    fn nv_node(name: &str, msr_mid_ns: u64, readout: ReadoutErrorModel) -> DeviceProfile {
        use Opcode::*;
        let mut durations = BTreeMap::new();
        durations.insert(INI, DurationRange { min_ns: 55_000, max_ns: 65_000 });
        durations.insert(SQG, DurationRange { min_ns: 80_000, max_ns: 100_000 });
        durations.insert(TQG, DurationRange { min_ns: 80_000, max_ns: 100_000 });
        durations.insert(AQG, DurationRange { min_ns: 80_000, max_ns: 100_000 });
        durations.insert(MSR, DurationRange { min_ns: msr_mid_ns - 15_000, max_ns: msr_mid_ns + 15_000 });
        durations.insert(PMG, DurationRange::fixed(10_000));
        durations.insert(MOV, DurationRange { min_ns: 80_000, max_ns: 100_000 });
        durations.insert(SWP, DurationRange { min_ns: 80_000, max_ns: 100_000 });
        DeviceProfile {
            name: name.into(),
            tick_ns: 10_000,
            num_qubits: 1,
            supported_opcodes: vec![INI, SQG, TQG, AQG, MSR, ENT, ENM, MOV, SWP, PMG, NOP],
            sqg_axes: vec![RotAxis::X, RotAxis::Y, RotAxis::H],
            max_angle_denpow: 4,
            z_lowering: ZLowering::DecomposeXy,
            durations,
            pmg_rotation_ns: 90_000,
            cr_pass_probability: 1.0,
            readout,
            noise: NoiseParams::default(),
        }
    }

    /// Trapped-ion profile: 50 kHz ticks and the seven-instruction subset
    /// (initialization, X/Y pulses at multiples of pi/2, measurement).
    pub fn trapped_ion() -> DeviceProfile {
        use Opcode::*;
        let mut durations = BTreeMap::new();
        durations.insert(INI, DurationRange::fixed(2_000_000));
        durations.insert(SQG, DurationRange::fixed(100_000));
        durations.insert(MSR, DurationRange::fixed(1_000_000));
        DeviceProfile {
            name: "trapped-ion".into(),
            tick_ns: 20_000,
            num_qubits: 1,
            supported_opcodes: vec![INI, SQG, MSR, NOP],
            sqg_axes: vec![RotAxis::X, RotAxis::Y],
            max_angle_denpow: 1,
            z_lowering: ZLowering::Forbidden,
            durations,
            pmg_rotation_ns: 100_000,
            cr_pass_probability: 1.0,
            readout: ReadoutErrorModel::IDEAL,
            noise: NoiseParams::default(),
        }
    }

    /// An idealized profile for unit tests: every opcode, native Z, exact
    /// readout, one-tick gates.
    pub fn perfect(num_qubits: usize) -> DeviceProfile {
        use Opcode::*;
        let all = vec![INI, SQG, TQG, AQG, MSR, ENT, ENM, MOV, SWP, ESW, PMG, NOP];
        let mut durations = BTreeMap::new();
        for op in &all {
            durations.insert(*op, DurationRange::fixed(10_000));
        }
        DeviceProfile {
            name: "perfect".into(),
            tick_ns: 10_000,
            num_qubits,
            supported_opcodes: all,
            sqg_axes: vec![RotAxis::X, RotAxis::Y, RotAxis::Z, RotAxis::H],
            max_angle_denpow: 4,
            z_lowering: ZLowering::Native,
            durations,
            pmg_rotation_ns: 0,
            cr_pass_probability: 1.0,
            readout: ReadoutErrorModel::IDEAL,
            noise: NoiseParams { t_coh_ms: 1e12, exponent: 1.0 },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn response_legality_follows_the_table() {
        assert!(QDeviceResponse::Success.legal_for(Opcode::INI));
        assert!(QDeviceResponse::Success.legal_for(Opcode::PMG));
        assert!(!QDeviceResponse::Success.legal_for(Opcode::MSR));
        assert!(QDeviceResponse::Outcome(0).legal_for(Opcode::MSR));
        assert!(QDeviceResponse::EntSuccess(BellLabel::PsiPlus).legal_for(Opcode::ENT));
        assert!(!QDeviceResponse::EntSuccess(BellLabel::PsiPlus).legal_for(Opcode::ENM));
        assert!(QDeviceResponse::EnmSuccess(BellLabel::PsiMinus, 1).legal_for(Opcode::ENM));
        assert!(QDeviceResponse::EntSyncFailure.legal_for(Opcode::ENT));
        assert!(QDeviceResponse::EntSyncFailure.legal_for(Opcode::ENM));
    }

    #[test]
    fn response_labels() {
        assert_eq!(QDeviceResponse::Outcome(1).label(), "SUCCESS_1");
        assert_eq!(
            QDeviceResponse::EntSuccess(BellLabel::PsiPlus).label(),
            "SUCCESS_PSI_PLUS"
        );
        assert_eq!(
            QDeviceResponse::EnmSuccess(BellLabel::PsiMinus, 0).label(),
            "SUCCESS_PSI_MINUS_0"
        );
    }

    #[test]
    fn ion_profile_is_the_reduced_subset()
    {
        let ion = DeviceProfile::trapped_ion();
        assert!(ion.supports(Opcode::INI) && ion.supports(Opcode::SQG) && ion.supports(Opcode::MSR));
        assert!(!ion.supports(Opcode::ENT));
        assert!(!ion.supports(Opcode::TQG));
        assert!(!ion.supports_axis(RotAxis::Z));
        assert_eq!(ion.max_angle_denpow, 1);
        assert_eq!(ion.tick_ns, 20_000);
    }
}
