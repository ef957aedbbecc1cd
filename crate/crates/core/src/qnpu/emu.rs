//! Entanglement management: ER sockets, entanglement requests, and the
//! availability list of produced-but-unclaimed entangled qubits.

use super::process::Pid;
use crate::netqasm::EprDirection;
use crate::qbackend::BellLabel;
use crate::sim::SimTime;
use std::collections::{HashMap, VecDeque};

/// An ER socket endpoint. A matching mirrored tuple must be open on the peer
/// before requests flow.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ErSocket {
    pub node_id: u32,
    pub er_socket_id: u32,
    pub remote_node_id: u32,
    pub remote_er_socket_id: u32,
    pub role: SocketRole,
    pub owner: Pid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SocketRole {
    /// This side's program executes create_epr.
    Initiator,
    /// This side's program executes recv_epr.
    Receiver,
}

/// A local entanglement request submitted by a running process.
#[derive(Clone, Copy, Debug)]
pub struct EntRequest {
    pub socket: u32,
    pub pid: Pid,
    pub dir: EprDirection,
    pub vqubit: u32,
    pub result_array: u16,
    pub submitted: SimTime,
}

/// A produced entangled qubit held for a receiver that has not yet executed
/// its recv_epr.
#[derive(Clone, Copy, Debug)]
pub struct AvailablePair {
    pub phys: usize,
    pub label: BellLabel,
    pub success_time: SimTime,
}

#[derive(Debug, Default)]
pub struct Emu {
    sockets: HashMap<u32, ErSocket>,
    /// Outstanding local requests in submission order.
    pub requests: VecDeque<EntRequest>,
    /// Receiver-held pairs by socket.
    pub available: HashMap<u32, VecDeque<AvailablePair>>,
}

#[derive(Debug, PartialEq, Eq)]
pub enum SubmitOutcome {
    /// Request queued; the initiator side must notify the peer.
    Accepted,
    /// Receiver-side request matched an already-available pair.
    AlreadyAvailable(usize),
    Rejected(String),
}

impl Emu {
    pub fn open_socket(&mut self, socket: ErSocket) -> Result<(), String> {
        if self.sockets.contains_key(&socket.er_socket_id) {
            return Err(format!("er socket {} already open", socket.er_socket_id));
        }
        self.sockets.insert(socket.er_socket_id, socket);
        Ok(())
    }

    pub fn socket(&self, id: u32) -> Option<&ErSocket> {
        self.sockets.get(&id)
    }

    pub fn is_open(&self, id: u32) -> bool {
        self.sockets.contains_key(&id)
    }

    pub fn submit(&mut self, req: EntRequest) -> SubmitOutcome {
        let Some(sock) = self.sockets.get(&req.socket) else {
            return SubmitOutcome::Rejected(format!("er socket {} not open", req.socket));
        };
        let expected_role = match req.dir {
            EprDirection::Create => SocketRole::Initiator,
            EprDirection::Recv => SocketRole::Receiver,
        };
        if sock.role != expected_role {
            return SubmitOutcome::Rejected(format!(
                "er socket {} role mismatch for {:?}",
                req.socket, req.dir
            ));
        }
        if req.dir == EprDirection::Recv {
            if let Some(q) = self.available.get_mut(&req.socket) {
                if let Some(pair) = q.pop_front() {
                    if q.is_empty() {
                        self.available.remove(&req.socket);
                    }
                    return SubmitOutcome::AlreadyAvailable(pair.phys);
                }
            }
        }
        self.requests.push_back(req);
        SubmitOutcome::Accepted
    }

    /// The oldest outstanding request on a socket, if any.
    pub fn take_request(&mut self, socket: u32) -> Option<EntRequest> {
        let pos = self.requests.iter().position(|r| r.socket == socket)?;
        self.requests.remove(pos)
    }

    pub fn peek_request(&self, socket: u32) -> Option<&EntRequest> {
        self.requests.iter().find(|r| r.socket == socket)
    }

    pub fn hold_available(&mut self, socket: u32, pair: AvailablePair) {
        self.available.entry(socket).or_default().push_back(pair);
    }
}

/// One actionable unit of work for the network process.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NetJob {
    pub socket: u32,
    pub arrival: SimTime,
}

/// The network stack's request queue. Local initiator submissions and
/// peer-synchronized requests both land here, deduplicated per socket
/// (one EPR pair is produced per job).
#[derive(Debug, Default)]
pub struct NetStack {
    pub jobs: VecDeque<NetJob>,
    /// Requests synchronized from the peer for sockets not open locally,
    /// parked until the socket opens (or a timeout policy reaps them).
    pub parked: Vec<NetJob>,
}

impl NetStack {
    pub fn enqueue(&mut self, job: NetJob) {
        if !self.jobs.iter().any(|j| j.socket == job.socket) {
            self.jobs.push_back(job);
        }
    }

    pub fn head(&self) -> Option<&NetJob> {
        self.jobs.front()
    }

    pub fn pop(&mut self) -> Option<NetJob> {
        self.jobs.pop_front()
    }

    pub fn park(&mut self, job: NetJob) {
        self.parked.push(job);
    }

    pub fn unpark(&mut self, socket: u32) {
        let mut i = 0;
        while i < self.parked.len() {
            if self.parked[i].socket == socket {
                let job = self.parked.remove(i);
                self.enqueue(job);
            } else {
                i += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn socket(id: u32, role: SocketRole) -> ErSocket {
        ErSocket {
            node_id: 0,
            er_socket_id: id,
            remote_node_id: 1,
            remote_er_socket_id: id,
            role,
            owner: 1,
        }
    }

    fn req(sock: u32, dir: EprDirection) -> EntRequest {
        EntRequest {
            socket: sock,
            pid: 1,
            dir,
            vqubit: 0,
            result_array: 0,
            submitted: SimTime::ZERO,
        }
    }

    #[test]
    fn submit_without_socket_is_rejected() {
        let mut emu = Emu::default();
        match emu.submit(req(0, EprDirection::Create)) {
            SubmitOutcome::Rejected(msg) => assert!(msg.contains("not open")),
            other => panic!("expected rejection, got {other:?}"),
        }
    }

    #[test]
    fn role_mismatch_is_rejected() {
        let mut emu = Emu::default();
        emu.open_socket(socket(0, SocketRole::Receiver)).unwrap();
        assert!(matches!(
            emu.submit(req(0, EprDirection::Create)),
            SubmitOutcome::Rejected(_)
        ));
    }

    #[test]
    fn receiver_request_consumes_available_pair() {
        let mut emu = Emu::default();
        emu.open_socket(socket(0, SocketRole::Receiver)).unwrap();
        emu.hold_available(
            0,
            AvailablePair { phys: 0, label: BellLabel::PsiPlus, success_time: SimTime::ZERO },
        );
        assert_eq!(
            emu.submit(req(0, EprDirection::Recv)),
            SubmitOutcome::AlreadyAvailable(0)
        );
        // The pair is consumed.
        assert_eq!(emu.submit(req(0, EprDirection::Recv)), SubmitOutcome::Accepted);
    }

    #[test]
    fn duplicate_socket_open_fails() {
        let mut emu = Emu::default();
        emu.open_socket(socket(0, SocketRole::Initiator)).unwrap();
        assert!(emu.open_socket(socket(0, SocketRole::Initiator)).is_err());
    }

    #[test]
    fn netstack_dedups_jobs_per_socket() {
        let mut ns = NetStack::default();
        ns.enqueue(NetJob { socket: 0, arrival: SimTime::ZERO });
        ns.enqueue(NetJob { socket: 0, arrival: SimTime::from_ns(5) });
        ns.enqueue(NetJob { socket: 1, arrival: SimTime::from_ns(3) });
        assert_eq!(ns.jobs.len(), 2);
        assert_eq!(ns.pop().unwrap().socket, 0);
        assert_eq!(ns.pop().unwrap().socket, 1);
    }

    #[test]
    fn parked_jobs_released_on_socket_open() {
        let mut ns = NetStack::default();
        ns.park(NetJob { socket: 4, arrival: SimTime::ZERO });
        assert!(ns.head().is_none());
        ns.unpark(4);
        assert_eq!(ns.head().unwrap().socket, 4);
    }
}
