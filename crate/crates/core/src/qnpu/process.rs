//! Kernel processes and their state machine.

use crate::netqasm::{CompiledBlock, Register};
use crate::sim::SimTime;
use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

pub type Pid = u32;

pub const NETWORK_PRIORITY: i32 = 100;
pub const USER_PRIORITY: i32 = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcKind {
    User,
    Network,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WaitReason {
    /// Blocked on entanglement delivery.
    Entanglement,
    /// Blocked on a free physical qubit.
    FreeQubit,
    /// Network process parked until the next schedule bin.
    NextBin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProcState {
    Idle,
    Ready,
    Running,
    Waiting(WaitReason),
}

impl ProcState {
    pub fn label(&self) -> &'static str {
        match self {
            ProcState::Idle => "idle",
            ProcState::Ready => "ready",
            ProcState::Running => "running",
            ProcState::Waiting(_) => "waiting",
        }
    }
}

/// A subroutine queued on a process, with host-side identity for the result
/// round trip.
#[derive(Clone, Debug)]
pub struct BlockInstance {
    pub label: String,
    pub block: Arc<CompiledBlock>,
    /// Host task that submitted the block and awaits its results.
    pub task: usize,
    /// Attach the charge-resonance flag to this block's result delivery.
    pub draw_cr: bool,
}

/// Measurement side data the device attaches to each outcome.
#[derive(Clone, Copy, Debug)]
pub struct MsrMeta {
    /// Pre-collapse probability of outcome 0 (exact, before readout error).
    pub p_zero: f64,
    /// Reported outcome after the readout channel.
    pub outcome: u8,
    /// Time the qubit spent live since entanglement success, if it was an
    /// entangled qubit.
    pub t_mem_ns: Option<u64>,
    pub completion: SimTime,
}

/// Results staged for the host when a block completes.
#[derive(Clone, Debug, Default)]
pub struct StagedResults {
    pub registers: Vec<(String, i64)>,
    pub arrays: Vec<(u16, Vec<Option<i64>>)>,
    pub measurements: Vec<MsrMeta>,
    pub aborted: Option<String>,
    pub cr_flag: Option<bool>,
}

/// Per-process classical memory.
#[derive(Clone, Debug, Default)]
pub struct ClassicalMemory {
    regs: HashMap<Register, i64>,
    arrays: HashMap<u16, Vec<Option<i64>>>,
}

impl ClassicalMemory {
    pub fn read(&self, r: Register) -> i64 {
        *self.regs.get(&r).unwrap_or(&0)
    }

    pub fn write(&mut self, r: Register, v: i64) {
        self.regs.insert(r, v);
    }

    pub fn declare_array(&mut self, arr: u16, len: u32) {
        self.arrays.insert(arr, vec![None; len as usize]);
    }

    pub fn array(&self, arr: u16) -> Option<&Vec<Option<i64>>> {
        self.arrays.get(&arr)
    }

    pub fn array_store(&mut self, arr: u16, idx: usize, v: i64) -> Result<(), String> {
        let a = self.arrays.get_mut(&arr).ok_or(format!("array @{arr} not declared"))?;
        if idx >= a.len() {
            return Err(format!("index {idx} out of bounds for @{arr} (len {})", a.len()));
        }
        a[idx] = Some(v);
        Ok(())
    }

    pub fn array_load(&self, arr: u16, idx: usize) -> Result<i64, String> {
        let a = self.arrays.get(&arr).ok_or(format!("array @{arr} not declared"))?;
        if idx >= a.len() {
            return Err(format!("index {idx} out of bounds for @{arr} (len {})", a.len()));
        }
        a[idx].ok_or(format!("read of unwritten cell @{arr}[{idx}]"))
    }

    pub fn slice_filled(&self, arr: u16, lo: u32, hi: u32) -> bool {
        match self.arrays.get(&arr) {
            Some(a) => a
                .iter()
                .skip(lo as usize)
                .take((hi - lo) as usize)
                .all(|c| c.is_some()),
            None => false,
        }
    }
}

#[derive(Debug)]
pub struct Pcb {
    pub pid: Pid,
    pub owner: String,
    pub kind: ProcKind,
    pub priority: i32,
    pub state: ProcState,
    pub fifo: VecDeque<BlockInstance>,
    pub memory: ClassicalMemory,
    /// Program counter into the current head block.
    pub pc: usize,
    /// Results being accumulated for the current block.
    pub staging: StagedResults,
    /// When the process last entered Ready, for FCFS ordering.
    pub ready_since: SimTime,
    /// Virtual qubits owned, as seen by this process.
    pub vqubits: HashMap<u32, usize>,
}

impl Pcb {
    pub fn is_user(&self) -> bool {
        self.kind == ProcKind::User
    }
}

/// Owns all processes of one node and enforces legal state transitions.
#[derive(Debug, Default)]
pub struct ProcessTable {
    procs: Vec<Pcb>,
}

impl ProcessTable {
    pub fn create(&mut self, owner: &str, kind: ProcKind, priority: i32) -> Pid {
        let pid = self.procs.len() as Pid;
        let state = match kind {
            ProcKind::User => ProcState::Idle,
            ProcKind::Network => ProcState::Waiting(WaitReason::NextBin),
        };
        self.procs.push(Pcb {
            pid,
            owner: owner.to_string(),
            kind,
            priority,
            state,
            fifo: VecDeque::new(),
            memory: ClassicalMemory::default(),
            pc: 0,
            staging: StagedResults::default(),
            ready_since: SimTime::ZERO,
            vqubits: HashMap::new(),
        });
        pid
    }

    pub fn get(&self, pid: Pid) -> &Pcb {
        &self.procs[pid as usize]
    }

    pub fn get_mut(&mut self, pid: Pid) -> &mut Pcb {
        &mut self.procs[pid as usize]
    }

    pub fn exists(&self, pid: Pid) -> bool {
        (pid as usize) < self.procs.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Pcb> {
        self.procs.iter()
    }

    pub fn len(&self) -> usize {
        self.procs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.procs.is_empty()
    }

    /// Moves a process to a new state, checking the edge is one of the
    /// allowed transitions.
    pub fn set_state(&mut self, pid: Pid, to: ProcState, now: SimTime) {
        let p = &mut self.procs[pid as usize];
        let from = p.state;
        let legal = matches!(
            (from, to),
            (ProcState::Idle, ProcState::Ready)
                | (ProcState::Ready, ProcState::Running)
                | (ProcState::Running, ProcState::Waiting(_))
                | (ProcState::Waiting(_), ProcState::Ready)
                | (ProcState::Running, ProcState::Idle)
                | (ProcState::Running, ProcState::Ready)
        );
        assert!(
            legal,
            "illegal process state transition {:?} -> {:?} for pid {} ({})",
            from, to, pid, p.owner
        );
        if to == ProcState::Ready {
            p.ready_since = now;
        }
        p.state = to;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn user_process_starts_idle_network_starts_waiting() {
        let mut pt = ProcessTable::default();
        let u = pt.create("prog", ProcKind::User, USER_PRIORITY);
        let n = pt.create("net", ProcKind::Network, NETWORK_PRIORITY);
        assert_eq!(pt.get(u).state, ProcState::Idle);
        assert_eq!(pt.get(n).state, ProcState::Waiting(WaitReason::NextBin));
        assert_ne!(u, n);
    }

    #[test]
    fn legal_cycle() {
        let mut pt = ProcessTable::default();
        let u = pt.create("prog", ProcKind::User, USER_PRIORITY);
        let t = SimTime::ZERO;
        pt.set_state(u, ProcState::Ready, t);
        pt.set_state(u, ProcState::Running, t);
        pt.set_state(u, ProcState::Waiting(WaitReason::Entanglement), t);
        pt.set_state(u, ProcState::Ready, t);
        pt.set_state(u, ProcState::Running, t);
        pt.set_state(u, ProcState::Idle, t);
    }

    #[test]
    #[should_panic(expected = "illegal process state transition")]
    fn idle_to_running_is_illegal() {
        let mut pt = ProcessTable::default();
        let u = pt.create("prog", ProcKind::User, USER_PRIORITY);
        pt.set_state(u, ProcState::Running, SimTime::ZERO);
    }

    #[test]
    fn classical_memory_bounds() {
        let mut m = ClassicalMemory::default();
        m.declare_array(0, 2);
        assert!(m.array_store(0, 0, 7).is_ok());
        assert_eq!(m.array_load(0, 0).unwrap(), 7);
        assert!(m.array_store(0, 5, 1).is_err());
        assert!(m.array_load(0, 1).is_err(), "unwritten cell");
        assert!(!m.slice_filled(0, 0, 2));
        m.array_store(0, 1, 1).unwrap();
        assert!(m.slice_filled(0, 0, 2));
    }
}
