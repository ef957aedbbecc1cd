//! Device-side event handling: the tick-disciplined instruction/response
//! exchange, local instruction execution against the shared register, and
//! the synchronized entanglement link.

use super::{ActiveBatch, Event, Issuer, PendingEnt, Simulation};
use crate::qbackend::{BellLabel, RotAxis};
use crate::qdevice::link::BatchOutcome;
use crate::qdevice::{Opcode, PhysicalInstruction, QDeviceResponse};
use crate::qnpu::MsrMeta;
use crate::sim::{Phase, SimDuration, SimTime, TraceName};
use rand::Rng;

impl Simulation {
    /// Queues an instruction for the next free tick slot. At most one
    /// instruction is in flight per device; the processor model guarantees
    /// the caller blocks until the response, so the slot is always free.
    pub(crate) fn driver_submit(&mut self, node: usize, instr: PhysicalInstruction, issuer: Issuer) {
        let op = instr.opcode();
        assert!(
            self.nodes[node].in_flight.is_none(),
            "instruction submitted while another is in flight on node {node}"
        );
        assert!(
            self.nodes[node].profile.supports(op),
            "opcode {op} not supported by profile `{}` (validator should have caught this)",
            self.nodes[node].profile.name
        );
        self.trace_qnpu(node, TraceName::QdeviceProduceCmd(op.as_str()), vec![]);
        let tick = self.nodes[node].profile.tick_ns;
        let mut send = self.now().ceil_to_tick(tick);
        if self.nodes[node].last_send_tick == Some(send) {
            send = send + SimDuration::from_ns(tick);
        }
        self.nodes[node].last_send_tick = Some(send);
        self.nodes[node].in_flight = Some(super::InFlight {
            instr,
            issuer,
            consume_at: send,
            response: None,
            msr_meta: None,
            success_time: None,
        });
        self.queue.schedule(send, Phase::Qdevice, Event::DeviceDeliver { node });
    }

    pub(crate) fn on_device_deliver(&mut self, node: usize) {
        let now = self.now();
        let tick = self.nodes[node].profile.tick_ns;
        let instr = self.nodes[node].in_flight.as_ref().expect("in flight").instr.clone();
        let op = instr.opcode();
        self.trace_qnpu(node, TraceName::QdeviceConsumeCmd, vec![("op", op.as_str().into())]);
        self.trace_qdev(node, TraceName::QdevInstr, instr_payload(&instr));

        match instr {
            PhysicalInstruction::Ent { qubit, .. } | PhysicalInstruction::Enm { qubit, .. } => {
                let measure_after = op == Opcode::ENM;
                self.link_node_ready(node, qubit, measure_after, now);
            }
            PhysicalInstruction::Nop => {
                // No operation and no response; the device frees immediately.
                self.nodes[node].in_flight = None;
            }
            ref local => {
                let dur = self.local_duration(node, local);
                let completes = now + SimDuration::from_ns(dur.ticks_ceil(tick) * tick);
                let respond = completes + SimDuration::from_ns(tick);
                self.queue.schedule(respond, Phase::Qdevice, Event::DeviceRespond { node });
            }
        }
    }

    /// Duration of a local instruction; measurements pay extra for pending
    /// nonzero pre-measurement rotations.
    fn local_duration(&self, node: usize, instr: &PhysicalInstruction) -> SimDuration {
        let profile = &self.nodes[node].profile;
        let base = profile.duration(instr.opcode());
        if matches!(instr, PhysicalInstruction::Msr { .. }) {
            if let Some((_, angles)) = &self.nodes[node].pending_pmg {
                let extra = angles.iter().filter(|a| !a.is_zero()).count() as u64;
                return base + SimDuration::from_ns(extra * profile.pmg_rotation_ns);
            }
        }
        base
    }

    pub(crate) fn on_device_respond(&mut self, node: usize) {
        let now = self.now();
        let tick = self.nodes[node].profile.tick_ns;
        let mut flight = self.nodes[node].in_flight.take().expect("response without instruction");
        // Entanglement responses were finalized by the link; local ones are
        // applied here, at their completion instant (one tick ago).
        if flight.response.is_none() {
            let completion = SimTime::from_ns(now.as_ns() - tick);
            let (resp, meta) =
                self.apply_local_instruction(node, &flight.instr, flight.issuer, completion);
            flight.response = Some(resp);
            flight.msr_meta = meta;
        }
        let resp = flight.response.expect("response set");
        debug_assert!(resp.legal_for(flight.instr.opcode()));
        self.trace_qdev(node, TraceName::QdevResponse, vec![("kind", resp.label())]);
        self.trace_qnpu(node, TraceName::QdeviceProduceOutcome, vec![("kind", resp.label())]);
        match flight.issuer {
            Issuer::Processor(pid) => {
                self.trace_qnpu(node, TraceName::ProcessorConsumeOutcome, vec![("pid", pid.to_string())]);
                self.processor_on_response(node, pid, resp, flight.msr_meta);
            }
            Issuer::Net => {
                self.trace_qnpu(node, TraceName::ProcessorConsumeOutcome, vec![("pid", self.nodes[node].net_pid.to_string())]);
                self.net_on_response(node, resp, flight.success_time);
            }
            Issuer::Harness => {
                self.harness_responses.push((now, node, resp));
            }
        }
    }

    /// Executes a non-entanglement instruction on the shared register at its
    /// completion instant and forms the response.
    fn apply_local_instruction(
        &mut self,
        node: usize,
        instr: &PhysicalInstruction,
        issuer: Issuer,
        t: SimTime,
    ) -> (QDeviceResponse, Option<MsrMeta>) {
        let offset = self.nodes[node].qubit_offset;
        match instr {
            PhysicalInstruction::Ini { qubit } => {
                self.memory.init(offset + qubit, t).expect("valid address");
                (QDeviceResponse::Success, None)
            }
            PhysicalInstruction::Sqg { qubit, axis, angle } => {
                self.memory
                    .apply_rotation(offset + qubit, *axis, angle.to_radians(), t)
                    .expect("valid address");
                (QDeviceResponse::Success, None)
            }
            PhysicalInstruction::Tqg { ctrl, tgt, axis, angle } => {
                self.memory
                    .apply_controlled(offset + ctrl, offset + tgt, *axis, angle.to_radians(), t)
                    .expect("valid addresses");
                (QDeviceResponse::Success, None)
            }
            PhysicalInstruction::Aqg { axis, angle } => {
                for q in 0..self.nodes[node].profile.num_qubits {
                    self.memory
                        .apply_rotation(offset + q, *axis, angle.to_radians(), t)
                        .expect("valid address");
                }
                (QDeviceResponse::Success, None)
            }
            PhysicalInstruction::Pmg { axes, angles } => {
                self.nodes[node].pending_pmg = Some((*axes, *angles));
                (QDeviceResponse::Success, None)
            }
            PhysicalInstruction::Msr { qubit } => {
                let global = offset + qubit;
                if let Some((axes, angles)) = self.nodes[node].pending_pmg.take() {
                    let dirs = axes.axes();
                    for (axis, angle) in dirs.iter().zip(angles.iter()) {
                        if !angle.is_zero() {
                            self.memory
                                .apply_rotation(global, *axis, angle.to_radians(), t)
                                .expect("valid address");
                        }
                    }
                }
                let meta = self.measure_qubit(node, global, issuer, t);
                (QDeviceResponse::Outcome(meta.outcome), Some(meta))
            }
            PhysicalInstruction::Mov { src, dst } => {
                self.memory.apply_swap(offset + src, offset + dst, t).expect("valid addresses");
                self.memory.release(offset + src).expect("valid address");
                (QDeviceResponse::Success, None)
            }
            PhysicalInstruction::Swp { a, b } | PhysicalInstruction::Esw { a, b } => {
                // ESW is restricted to an exact exchange of the two local
                // qubits' states and pair-membership bookkeeping.
                self.memory.apply_swap(offset + a, offset + b, t).expect("valid addresses");
                (QDeviceResponse::Success, None)
            }
            PhysicalInstruction::Nop => (QDeviceResponse::Success, None),
            PhysicalInstruction::Ent { .. } | PhysicalInstruction::Enm { .. } => {
                unreachable!("entanglement resolves through the link")
            }
        }
    }

    /// Z-basis measurement with the owner program's random stream and the
    /// node's readout-error channel.
    fn measure_qubit(&mut self, node: usize, global: usize, issuer: Issuer, t: SimTime) -> MsrMeta {
        self.memory.touch(global, t).expect("valid address");
        let p_zero = self.memory.state().prob_zero(global).expect("valid address");
        let owner_label = match issuer {
            Issuer::Processor(pid) => self.nodes[node].procs.get(pid).owner.clone(),
            _ => format!("device-{node}"),
        };
        let stream = format!("meas-{owner_label}");
        let rng = self.rng.stream(&stream);
        let true_outcome = if rng.random::<f64>() < p_zero { 0u8 } else { 1u8 };
        let readout = self.nodes[node].profile.readout;
        let reported = readout.apply(true_outcome, self.rng.stream(&stream));
        let dm = self.memory.state_mut();
        dm.project(global, true_outcome).expect("valid address");
        let t_mem_ns = self.memory.epr_born(global).map(|b| (t - b).as_ns());
        MsrMeta { p_zero, outcome: reported, t_mem_ns, completion: t }
    }

    // ---- entanglement link ----

    fn link_node_ready(&mut self, node: usize, local_qubit: usize, measure_after: bool, now: SimTime) {
        let global = self.nodes[node].global_qubit(local_qubit);
        let id = self.link.next_pending_id;
        self.link.next_pending_id += 1;
        self.link.pending[node] =
            Some(PendingEnt { local_qubit: global, measure_after, ready_at: now, id });
        let other = 1 - node;
        if self.link.pending[other].is_some() {
            self.link_start_batch();
        } else {
            let tick = self.nodes[node].profile.tick_ns;
            let window = SimDuration::from_ns(self.link.params.sync_window_ticks * tick);
            self.queue.schedule(
                now + window,
                Phase::Qdevice,
                Event::LinkSyncTimeout { node, pending_id: id },
            );
        }
    }

    fn link_start_batch(&mut self) {
        let a = self.link.pending[0].take().expect("both pending");
        let b = self.link.pending[1].take().expect("both pending");
        let sync_at = a.ready_at.max(b.ready_at);
        let start = match self.link.prev_batch_start {
            Some(prev) => sync_at.max(prev + self.link.params.batch_spacing()),
            None => sync_at,
        };
        let outcome = {
            let p = self.link.attempt_p;
            let params = self.link.params;
            params.run_batch(p, self.rng.stream("link"))
        };
        let (label, resolve_at) = match outcome {
            BatchOutcome::Success { attempt } => {
                let label = {
                    let source = self.link.source;
                    source.draw_label(self.rng.stream("bell"))
                };
                let dt = SimDuration::from_ns(attempt as u64 * self.link.params.attempt_duration_ns);
                (Some(label), start + dt)
            }
            BatchOutcome::Failure => (None, start + self.link.params.batch_duration()),
        };
        self.link.generation += 1;
        self.link.batch = Some(ActiveBatch {
            start,
            outcome,
            label,
            qubits: [a.local_qubit, b.local_qubit],
            measure_after: [a.measure_after, b.measure_after],
        });
        let generation = self.link.generation;
        self.queue.schedule(resolve_at, Phase::Qdevice, Event::LinkResolve { generation });
    }

    pub(crate) fn on_link_resolve(&mut self, generation: u64) {
        assert_eq!(self.link.generation, generation, "stale link resolution");
        let batch = self.link.batch.take().expect("active batch");
        let now = self.now();
        match batch.outcome {
            BatchOutcome::Failure => {
                self.link.prev_batch_start = Some(batch.start);
                for node in 0..2 {
                    self.finish_ent_response(node, QDeviceResponse::EntFailure, None, now);
                }
            }
            BatchOutcome::Success { .. } => {
                let label = batch.label.expect("label drawn on success");
                let success_t = now;
                if self.link.mocked {
                    // Same instruction/response flow, no entangled state:
                    // the local qubits are left initialized.
                    for q in batch.qubits {
                        self.memory.release(q).expect("valid address");
                        self.memory.init(q, success_t).expect("valid address");
                    }
                } else {
                    let pair = self.link.source.pair_state(label);
                    self.memory
                        .inject_pair(batch.qubits[0], batch.qubits[1], &pair, success_t)
                        .expect("link qubits free");
                }
                self.link.prev_batch_start = None;
                for node in 0..2 {
                    let resp = if batch.measure_after[node] {
                        let meta = self.measure_enm(node, batch.qubits[node], success_t);
                        QDeviceResponse::EnmSuccess(label, meta)
                    } else {
                        QDeviceResponse::EntSuccess(label)
                    };
                    self.finish_ent_response(node, resp, Some(success_t), now);
                }
            }
        }
    }

    fn measure_enm(&mut self, node: usize, global: usize, t: SimTime) -> u8 {
        self.memory.touch(global, t).expect("valid address");
        let p_zero = self.memory.state().prob_zero(global).expect("valid address");
        let stream = format!("link-enm-{node}");
        let outcome = if self.rng.stream(&stream).random::<f64>() < p_zero { 0u8 } else { 1u8 };
        self.memory.state_mut().project(global, outcome).expect("valid address");
        let readout = self.nodes[node].profile.readout;
        readout.apply(outcome, self.rng.stream(&stream))
    }

    fn finish_ent_response(
        &mut self,
        node: usize,
        resp: QDeviceResponse,
        success_time: Option<SimTime>,
        completion: SimTime,
    ) {
        let tick = self.nodes[node].profile.tick_ns;
        let respond_at = completion.next_tick(tick);
        let flight = self.nodes[node].in_flight.as_mut().expect("ENT in flight");
        flight.response = Some(resp);
        flight.success_time = success_time;
        self.queue.schedule(respond_at, Phase::Qdevice, Event::DeviceRespond { node });
    }

    pub(crate) fn on_link_sync_timeout(&mut self, node: usize, pending_id: u64) {
        let stale = match &self.link.pending[node] {
            Some(p) => p.id != pending_id,
            None => true,
        };
        if stale {
            return;
        }
        self.link.pending[node] = None;
        let now = self.now();
        self.finish_ent_response(node, QDeviceResponse::EntSyncFailure, None, now);
    }

    /// Bell-correction pulse sequence the receiver applies to rotate the
    /// heralded state onto Phi+: X(pi) for Psi+, and X(pi) followed by Z(pi)
    /// (decomposed into Y and X pulses) for Psi-.
    pub(crate) fn correction_sequence(label: BellLabel) -> Vec<(RotAxis, crate::angle::Angle)> {
        let pi = crate::angle::Angle::PI;
        match label {
            BellLabel::PsiPlus => vec![(RotAxis::X, pi)],
            BellLabel::PsiMinus => vec![(RotAxis::X, pi), (RotAxis::Y, pi), (RotAxis::X, pi)],
        }
    }
}

fn instr_payload(instr: &PhysicalInstruction) -> Vec<(&'static str, String)> {
    let mut p = vec![("op", instr.opcode().as_str().to_string())];
    match instr {
        PhysicalInstruction::Ini { qubit } | PhysicalInstruction::Msr { qubit } => {
            p.push(("arg", qubit.to_string()));
        }
        PhysicalInstruction::Sqg { qubit, axis, angle } => {
            p.push(("arg", qubit.to_string()));
            p.push(("arg", axis.as_str().into()));
            p.push(("angle_n", angle.n.to_string()));
            p.push(("angle_d", angle.d.to_string()));
        }
        PhysicalInstruction::Ent { qubit, neighbor, .. }
        | PhysicalInstruction::Enm { qubit, neighbor, .. } => {
            p.push(("arg", qubit.to_string()));
            p.push(("arg", neighbor.to_string()));
        }
        _ => {}
    }
    p
}
