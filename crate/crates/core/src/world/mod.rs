//! The simulation world: two full node stacks (host runtime, kernel,
//! device), the shared entanglement link, classical channels, and the event
//! loop that drives them deterministically.

mod device;
mod host;
mod kernel;

use crate::angle::Angle;
use crate::cnpu::{HostResults, Journal, NodeLatency, Program};
use crate::config::ExperimentConfig;
use crate::netqasm::PhysOp;
use crate::qbackend::{EprSource, QuantumMemory};
use crate::qdevice::{DeviceProfile, LinkParams, PhysicalInstruction, PmgAxes, QDeviceResponse};
use crate::qnpu::{
    BlockInstance, Emu, MsrMeta, NetStack, Pid, ProcKind, ProcessTable, Qmmu, Scheduler,
    SocketRole, StagedResults, NETWORK_PRIORITY, USER_PRIORITY,
};
use crate::qdevice::link::BatchOutcome;
use crate::qbackend::BellLabel;
use crate::records::IterationRecord;
use crate::sim::{EventQueue, Layer, NodeId, Phase, RngStreams, SimDuration, SimTime, TraceLog, TraceName};
use rand_distr::{Distribution, Normal};
use std::collections::{HashMap, VecDeque};

/// Virtual address used by the network process for the qubit it is
/// entangling before ownership transfer.
pub const NET_VIRT: u32 = 0;

const BLOCK_STEP_BUDGET: u64 = 1_000_000;

#[derive(Debug)]
pub enum Event {
    /// Device consumes the pending instruction (tick-aligned).
    DeviceDeliver { node: usize },
    /// Device emits the response for the completed instruction.
    DeviceRespond { node: usize },
    /// The active entanglement batch resolves (success instant or batch end).
    LinkResolve { generation: u64 },
    /// A device gave up waiting for its peer to synchronize.
    LinkSyncTimeout { node: usize, pending_id: u64 },
    /// Start of a network-schedule time bin on a node.
    BinStart { node: usize },
    SubroutineArrive { node: usize, pid: Pid, block: BlockInstance },
    ResultArrive { node: usize, task: usize, results: Box<HostResults> },
    MessageArrive { node: usize, socket: u32, payload: i64 },
    PeerRequestSync { node: usize, socket: u32 },
    TaskResume { node: usize, task: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Issuer {
    Processor(Pid),
    Net,
    /// Direct device testing without a kernel on top.
    Harness,
}

#[derive(Debug)]
pub struct InFlight {
    pub instr: PhysicalInstruction,
    pub issuer: Issuer,
    pub consume_at: SimTime,
    pub response: Option<QDeviceResponse>,
    pub msr_meta: Option<MsrMeta>,
    /// Link success time for entanglement responses.
    pub success_time: Option<SimTime>,
}

/// Execution state of the user block currently holding the processor.
#[derive(Debug)]
pub struct ExecState {
    pub pid: Pid,
    /// Remaining device operations of the current quantum step.
    pub ops: VecDeque<PhysOp>,
    pub steps_executed: u64,
}

#[derive(Debug)]
pub struct NetServing {
    pub socket: u32,
    pub phys: usize,
    pub corrections: VecDeque<(crate::qbackend::RotAxis, Angle)>,
    pub success: Option<(BellLabel, SimTime)>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TaskState {
    NotStarted,
    Runnable,
    AwaitResult,
    AwaitMessage(u32),
    Delay,
    Done,
    Aborted,
}

pub struct Task {
    pub program: Box<dyn Program>,
    pub label: String,
    pub pid: Pid,
    pub state: TaskState,
    pub pending_result: Option<HostResults>,
    pub pending_message: Option<i64>,
}

pub struct Node {
    pub name: String,
    pub profile: DeviceProfile,
    pub qubit_offset: usize,
    // kernel
    pub procs: ProcessTable,
    pub sched: Scheduler,
    pub running: Option<Pid>,
    pub exec: Option<ExecState>,
    pub emu: Emu,
    pub netstack: NetStack,
    pub qmmu: Qmmu,
    pub net_pid: Pid,
    pub net_serving: Option<NetServing>,
    /// wait_all predicates for waiting processes: (array, lo, hi).
    pub wait_preds: HashMap<Pid, (u16, u32, u32)>,
    // device
    pub in_flight: Option<InFlight>,
    pub last_send_tick: Option<SimTime>,
    pub pending_pmg: Option<(PmgAxes, [Angle; 3])>,
    // host
    pub latency: NodeLatency,
    pub tasks: Vec<Task>,
    pub inboxes: HashMap<u32, VecDeque<i64>>,
    pub serial: bool,
    pub clock_offset_us: f64,
}

impl Node {
    pub fn global_qubit(&self, local: usize) -> usize {
        self.qubit_offset + local
    }
}

pub struct LinkRuntime {
    pub params: LinkParams,
    pub source: EprSource,
    pub mocked: bool,
    pub attempt_p: f64,
    pub pending: [Option<PendingEnt>; 2],
    pub batch: Option<ActiveBatch>,
    /// Deferral floor anchor while one request keeps batching.
    pub prev_batch_start: Option<SimTime>,
    pub generation: u64,
    pub next_pending_id: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct PendingEnt {
    pub local_qubit: usize,
    pub measure_after: bool,
    pub ready_at: SimTime,
    pub id: u64,
}

#[derive(Clone, Copy, Debug)]
pub struct ActiveBatch {
    pub start: SimTime,
    pub outcome: BatchOutcome,
    pub label: Option<BellLabel>,
    /// Global qubit addresses per node index.
    pub qubits: [usize; 2],
    pub measure_after: [bool; 2],
}

/// A program to install at construction: host task + kernel process + its
/// ER sockets.
pub struct ProgramSpec {
    pub node: usize,
    pub label: String,
    pub program: Box<dyn Program>,
    pub sockets: Vec<SocketSpec>,
}

#[derive(Clone, Copy, Debug)]
pub struct SocketSpec {
    pub local_id: u32,
    pub remote_node: usize,
    pub remote_id: u32,
    pub role: SocketRole,
}

pub struct RunSettings {
    pub bin_length: SimDuration,
    pub bin_origin: SimTime,
    pub peer_latency: SimDuration,
    pub cc_latency: SimDuration,
    pub clock_jitter_sd_us: f64,
    pub max_virtual: SimTime,
}

pub struct Simulation {
    pub settings: RunSettings,
    pub queue: EventQueue<Event>,
    pub trace: TraceLog,
    pub rng: RngStreams,
    pub memory: QuantumMemory,
    pub nodes: Vec<Node>,
    pub link: LinkRuntime,
    pub records: Vec<IterationRecord>,
    pub journal: Journal,
    pub harness_responses: Vec<(SimTime, usize, QDeviceResponse)>,
    finished_tasks: usize,
    total_tasks: usize,
}

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("simulation stalled at {0}: event queue empty with {1} task(s) unfinished")]
    Stalled(SimTime, usize),
    #[error("virtual time cap {0} reached with {1} task(s) unfinished")]
    TimeCap(SimTime, usize),
}

impl Simulation {
    pub fn new(cfg: &ExperimentConfig, programs: Vec<ProgramSpec>) -> Simulation {
        let client_profile = cfg.client_profile();
        let server_profile = cfg.server_profile();
        assert_eq!(
            client_profile.tick_ns, server_profile.tick_ns,
            "linked nodes must share a tick rate"
        );
        let mut noise = Vec::new();
        for p in [&client_profile, &server_profile] {
            for _ in 0..p.num_qubits {
                noise.push(p.noise);
            }
        }
        let memory = QuantumMemory::new(noise).expect("register size");

        let mut trace = TraceLog::new(vec!["client".into(), "server".into()]);
        for line in cfg.to_toml().lines() {
            trace.header.push(line.to_string());
        }

        let latency = &cfg.latency;
        let serial = cfg.app.serial.unwrap_or(false);
        let mk_node = |name: &str, profile: DeviceProfile, offset: usize, lat: NodeLatency| {
            let num_qubits = profile.num_qubits;
            let mut procs = ProcessTable::default();
            let net_pid = procs.create("qnetstack", ProcKind::Network, NETWORK_PRIORITY);
            Node {
                name: name.into(),
                profile,
                qubit_offset: offset,
                procs,
                sched: Scheduler,
                running: None,
                exec: None,
                emu: Emu::default(),
                netstack: NetStack::default(),
                qmmu: Qmmu::new(num_qubits),
                net_pid,
                net_serving: None,
                wait_preds: HashMap::new(),
                in_flight: None,
                last_send_tick: None,
                pending_pmg: None,
                latency: lat,
                tasks: Vec::new(),
                inboxes: HashMap::new(),
                serial,
                clock_offset_us: 0.0,
            }
        };
        let client_qubits = client_profile.num_qubits;
        let nodes = vec![
            mk_node("client", client_profile, 0, NodeLatency::resolve(&latency.client, latency)),
            mk_node("server", server_profile, client_qubits, NodeLatency::resolve(&latency.server, latency)),
        ];

        let link_params = cfg.link_params();
        let mocked = cfg.mocked();
        let attempt_p = if mocked.enabled && mocked.target_rate_per_s.is_finite() {
            link_params.fit_attempt_probability(mocked.target_rate_per_s)
        } else {
            link_params.p_success_per_attempt
        };

        let mut sim = Simulation {
            settings: RunSettings {
                bin_length: SimDuration::from_ns(cfg.network.bin_length_ns),
                bin_origin: SimTime::from_ns(cfg.network.origin_ns),
                peer_latency: SimDuration::from_ns(cfg.network.peer_latency_ns),
                cc_latency: SimDuration::from_us_f64(cfg.latency.classical_message_us),
                clock_jitter_sd_us: cfg.latency.clock_jitter_walk_sd_us,
                max_virtual: SimTime::from_ms(cfg.max_virtual_ms.unwrap_or(3_600_000)),
            },
            queue: EventQueue::new(),
            trace,
            rng: RngStreams::new(cfg.seed),
            memory,
            nodes,
            link: LinkRuntime {
                params: link_params,
                source: cfg.epr_source(),
                mocked: mocked.enabled,
                attempt_p,
                pending: [None, None],
                batch: None,
                prev_batch_start: None,
                generation: 0,
                next_pending_id: 0,
            },
            records: Vec::new(),
            journal: Journal::new(),
            harness_responses: Vec::new(),
            finished_tasks: 0,
            total_tasks: 0,
        };

        for spec in programs {
            sim.install_program(spec);
        }
        for node in 0..sim.nodes.len() {
            sim.queue
                .schedule(sim.settings.bin_origin, Phase::Qnpu, Event::BinStart { node });
        }
        // Kick off host tasks (the first one per node in serial mode).
        for node in 0..sim.nodes.len() {
            let count = sim.nodes[node].tasks.len();
            let launch = if sim.nodes[node].serial { count.min(1) } else { count };
            for task in 0..launch {
                sim.nodes[node].tasks[task].state = TaskState::Runnable;
                sim.queue.schedule(SimTime::ZERO, Phase::Cnpu, Event::TaskResume { node, task });
            }
        }
        sim
    }

    fn install_program(&mut self, spec: ProgramSpec) {
        let node = spec.node;
        let pid = self.nodes[node].procs.create(&spec.label, ProcKind::User, USER_PRIORITY);
        for s in &spec.sockets {
            let socket = crate::qnpu::ErSocket {
                node_id: node as u32,
                er_socket_id: s.local_id,
                remote_node_id: s.remote_node as u32,
                remote_er_socket_id: s.remote_id,
                role: s.role,
                owner: pid,
            };
            self.nodes[node]
                .emu
                .open_socket(socket)
                .expect("unique er socket id per node");
            self.nodes[node].netstack.unpark(s.local_id);
        }
        self.nodes[node].tasks.push(Task {
            program: spec.program,
            label: spec.label,
            pid,
            state: TaskState::NotStarted,
            pending_result: None,
            pending_message: None,
        });
        self.total_tasks += 1;
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn all_tasks_done(&self) -> bool {
        self.finished_tasks >= self.total_tasks
    }

    /// Dispatches every event due at or before `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) {
        while let Some((_, ev)) = self.queue.pop_until(t_end) {
            self.dispatch(ev);
        }
    }

    /// Runs until every host task finished.
    pub fn run_to_completion(&mut self) -> Result<(), RunError> {
        let cap = self.settings.max_virtual;
        while !self.all_tasks_done() {
            match self.queue.pop_until(cap) {
                Some((_, ev)) => self.dispatch(ev),
                None => {
                    let unfinished = self.total_tasks - self.finished_tasks;
                    if self.queue.is_empty() {
                        return Err(RunError::Stalled(self.now(), unfinished));
                    }
                    return Err(RunError::TimeCap(cap, unfinished));
                }
            }
        }
        Ok(())
    }

    fn dispatch(&mut self, ev: Event) {
        match ev {
            Event::DeviceDeliver { node } => self.on_device_deliver(node),
            Event::DeviceRespond { node } => self.on_device_respond(node),
            Event::LinkResolve { generation } => self.on_link_resolve(generation),
            Event::LinkSyncTimeout { node, pending_id } => {
                self.on_link_sync_timeout(node, pending_id)
            }
            Event::BinStart { node } => self.on_bin_start(node),
            Event::SubroutineArrive { node, pid, block } => {
                self.on_subroutine_arrive(node, pid, block)
            }
            Event::ResultArrive { node, task, results } => {
                self.on_result_arrive(node, task, *results)
            }
            Event::MessageArrive { node, socket, payload } => {
                self.on_message_arrive(node, socket, payload)
            }
            Event::PeerRequestSync { node, socket } => self.on_peer_request_sync(node, socket),
            Event::TaskResume { node, task } => self.step_task(node, task),
        }
    }

    // ---- trace helpers ----

    pub(crate) fn trace_qnpu(&mut self, node: usize, name: TraceName, payload: Vec<(&'static str, String)>) {
        let t = self.queue.now();
        self.trace.record(NodeId(node), Layer::Qnpu, t, name, payload);
    }

    pub(crate) fn trace_qdev(&mut self, node: usize, name: TraceName, payload: Vec<(&'static str, String)>) {
        let t = self.queue.now();
        self.trace.record(NodeId(node), Layer::Qdevice, t, name, payload);
    }

    /// Records a host event carrying the node's own (possibly jittered)
    /// clock reading in the payload.
    pub(crate) fn trace_cnpu(&mut self, node: usize, name: TraceName, mut payload: Vec<(&'static str, String)>) {
        let t = self.queue.now();
        let clk = self.cnpu_clock(node);
        payload.insert(0, ("clk_us", format!("{clk:.3}")));
        self.trace.record(NodeId(node), Layer::Cnpu, t, name, payload);
    }

    /// The host clock: virtual time plus a zero-mean offset walk stepped at
    /// every reading, emulating an unsynchronized wall clock.
    fn cnpu_clock(&mut self, node: usize) -> f64 {
        let sd = self.settings.clock_jitter_sd_us;
        if sd > 0.0 {
            let step = Normal::new(0.0, sd)
                .expect("valid normal")
                .sample(self.rng.stream(&format!("clock-{node}")));
            self.nodes[node].clock_offset_us += step;
        }
        self.queue.now().as_us_f64() + self.nodes[node].clock_offset_us
    }

    /// Number of exchange slots the tick protocol provides up to `t_end`:
    /// one instruction and one response slot per tick.
    pub fn tick_slot_count(&self, node: usize, t_end: SimTime) -> u64 {
        t_end.as_ns() / self.nodes[node].profile.tick_ns
    }

    /// Submits a physical instruction directly to a node's device, bypassing
    /// the kernel. Responses land in `harness_responses`.
    pub fn harness_submit(&mut self, node: usize, instr: PhysicalInstruction) {
        self.driver_submit(node, instr, Issuer::Harness);
    }
}
