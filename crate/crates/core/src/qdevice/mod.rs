//! The simulated quantum device: instruction vocabulary, device profiles,
//! the per-node execution engine, and the shared entanglement link.

pub mod instr;
pub mod link;

pub use instr::{
    DeviceProfile, DurationRange, Opcode, PhysicalInstruction, PmgAxes, QDeviceResponse,
    ZLowering,
};
pub use link::{LinkParams, MockedEntanglement};
