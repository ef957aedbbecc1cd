//! Priority-based non-preemptive scheduling.
//!
//! The scheduler is consulted only when the processor is free (cooperative:
//! a running process keeps the processor until it completes a block or
//! blocks on a wait condition). Among ready processes it picks the highest
//! priority; ties go first-come-first-served by ready-arrival time, then by
//! pid for simultaneous arrivals.

use super::process::{Pid, ProcState, ProcessTable};

#[derive(Debug, Default)]
pub struct Scheduler;

impl Scheduler {
    /// Highest-priority ready process, FCFS within a priority level.
    pub fn pick(&self, table: &ProcessTable) -> Option<Pid> {
        table
            .iter()
            .filter(|p| p.state == ProcState::Ready)
            .min_by_key(|p| (-(p.priority as i64), p.ready_since, p.pid))
            .map(|p| p.pid)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qnpu::process::{ProcKind, NETWORK_PRIORITY, USER_PRIORITY};
    use crate::sim::SimTime;

    #[test]
    fn network_outranks_users_at_simultaneous_arrival() {
        let mut pt = ProcessTable::default();
        let u = pt.create("user", ProcKind::User, USER_PRIORITY);
        let n = pt.create("net", ProcKind::Network, NETWORK_PRIORITY);
        pt.set_state(u, ProcState::Ready, SimTime::ZERO);
        pt.set_state(n, ProcState::Ready, SimTime::ZERO);
        assert_eq!(Scheduler.pick(&pt), Some(n));
    }

    #[test]
    fn fcfs_by_ready_arrival_among_equal_priority() {
        let mut pt = ProcessTable::default();
        let a = pt.create("a", ProcKind::User, USER_PRIORITY);
        let b = pt.create("b", ProcKind::User, USER_PRIORITY);
        pt.set_state(b, ProcState::Ready, SimTime::from_ns(2));
        pt.set_state(a, ProcState::Ready, SimTime::from_ns(1));
        assert_eq!(Scheduler.pick(&pt), Some(a), "earlier arrival wins");
    }

    #[test]
    fn simultaneous_arrivals_break_ties_by_pid() {
        let mut pt = ProcessTable::default();
        let a = pt.create("a", ProcKind::User, USER_PRIORITY);
        let b = pt.create("b", ProcKind::User, USER_PRIORITY);
        pt.set_state(b, ProcState::Ready, SimTime::from_ns(5));
        pt.set_state(a, ProcState::Ready, SimTime::from_ns(5));
        assert_eq!(Scheduler.pick(&pt), Some(a.min(b)));
    }

    #[test]
    fn empty_ready_queue_leaves_processor_idle() {
        let pt = ProcessTable::default();
        assert_eq!(Scheduler.pick(&pt), None);
    }

    #[test]
    fn running_process_not_picked() {
        let mut pt = ProcessTable::default();
        let a = pt.create("a", ProcKind::User, USER_PRIORITY);
        pt.set_state(a, ProcState::Ready, SimTime::ZERO);
        pt.set_state(a, ProcState::Running, SimTime::ZERO);
        assert_eq!(Scheduler.pick(&pt), None);
    }
}
