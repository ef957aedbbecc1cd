//! The pending-event queue.
//!
//! Events are totally ordered by (time, phase, seq). The phase encodes the
//! fixed within-instant dispatch order QDevice -> QNPU -> CNPU, so that device
//! responses produced on a tick are visible to the kernel before it submits
//! new work, and kernel results are visible to host tasks in the same instant.
//! Ties within a phase dispatch in insertion order.

use super::time::SimTime;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

/// Within-instant dispatch phase.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Phase {
    Qdevice = 0,
    Qnpu = 1,
    Cnpu = 2,
}

struct Entry<E> {
    time: SimTime,
    phase: Phase,
    seq: u64,
    event: E,
}

impl<E> PartialEq for Entry<E> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp_key() == other.cmp_key()
    }
}
impl<E> Eq for Entry<E> {}
impl<E> PartialOrd for Entry<E> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl<E> Ord for Entry<E> {
    fn cmp(&self, other: &Self) -> Ordering {
        // BinaryHeap is a max-heap; invert for earliest-first dispatch.
        other.cmp_key().cmp(&self.cmp_key())
    }
}

impl<E> Entry<E> {
    fn cmp_key(&self) -> (SimTime, Phase, u64) {
        (self.time, self.phase, self.seq)
    }
}

pub struct EventQueue<E> {
    heap: BinaryHeap<Entry<E>>,
    now: SimTime,
    seq: u64,
}

impl<E> Default for EventQueue<E> {
    fn default() -> Self {
        Self::new()
    }
}

impl<E> EventQueue<E> {
    pub fn new() -> Self {
        EventQueue { heap: BinaryHeap::new(), now: SimTime::ZERO, seq: 0 }
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    /// Enqueues an event. Scheduling into the past is a simulation bug.
    pub fn schedule(&mut self, time: SimTime, phase: Phase, event: E) {
        assert!(
            time >= self.now,
            "event scheduled in the past: {} < {}",
            time.as_ns(),
            self.now.as_ns()
        );
        self.heap.push(Entry { time, phase, seq: self.seq, event });
        self.seq += 1;
    }

    /// Pops the next event and advances virtual time to it.
    pub fn pop(&mut self) -> Option<(SimTime, E)> {
        let entry = self.heap.pop()?;
        debug_assert!(entry.time >= self.now);
        self.now = entry.time;
        Some((entry.time, entry.event))
    }

    /// Pops the next event only if it is due at or before `t_end`.
    pub fn pop_until(&mut self, t_end: SimTime) -> Option<(SimTime, E)> {
        if self.heap.peek().map(|e| e.time <= t_end)? {
            self.pop()
        } else {
            None
        }
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn earliest_first() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ns(5), Phase::Qnpu, "b");
        q.schedule(SimTime::from_ns(3), Phase::Qnpu, "a");
        assert_eq!(q.pop().unwrap().1, "a");
        assert_eq!(q.pop().unwrap().1, "b");
        assert!(q.pop().is_none());
    }

    #[test]
    fn fifo_tie_break_within_phase() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ns(7), Phase::Qnpu, "first");
        q.schedule(SimTime::from_ns(7), Phase::Qnpu, "second");
        assert_eq!(q.pop().unwrap().1, "first");
        assert_eq!(q.pop().unwrap().1, "second");
    }

    #[test]
    fn phase_order_within_instant() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ns(7), Phase::Cnpu, "host");
        q.schedule(SimTime::from_ns(7), Phase::Qnpu, "kernel");
        q.schedule(SimTime::from_ns(7), Phase::Qdevice, "device");
        let order: Vec<_> = std::iter::from_fn(|| q.pop().map(|(_, e)| e)).collect();
        assert_eq!(order, vec!["device", "kernel", "host"]);
    }

    #[test]
    #[should_panic(expected = "scheduled in the past")]
    fn past_scheduling_panics() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ns(10), Phase::Qnpu, ());
        q.pop();
        q.schedule(SimTime::from_ns(5), Phase::Qnpu, ());
    }

    #[test]
    fn pop_until_respects_bound() {
        let mut q = EventQueue::new();
        q.schedule(SimTime::from_ns(10), Phase::Qnpu, ());
        assert!(q.pop_until(SimTime::from_ns(9)).is_none());
        assert!(q.pop_until(SimTime::from_ns(10)).is_some());
    }
}
