//! The kernel: process manager, scheduler, quantum memory management,
//! entanglement management, and the network stack's request queue. The
//! processor executing compiled blocks lives in the simulation world, which
//! drives these components.

pub mod emu;
pub mod process;
pub mod qmmu;
pub mod scheduler;

pub use emu::{AvailablePair, Emu, EntRequest, ErSocket, NetJob, NetStack, SocketRole, SubmitOutcome};
pub use process::{
    BlockInstance, ClassicalMemory, MsrMeta, Pcb, Pid, ProcKind, ProcState, ProcessTable,
    StagedResults, WaitReason, NETWORK_PRIORITY, USER_PRIORITY,
};
pub use qmmu::{Qmmu, QmmuError};
pub use scheduler::Scheduler;
