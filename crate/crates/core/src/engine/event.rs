//! Time-ordered event queue with FIFO tie-breaking.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::time::TimeInstant;

/// A scheduled simulation action.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Event<K> {
    pub at: TimeInstant,
    pub seq: u64,
    pub kind: K,
}

struct Entry<K>(Event<K>);

impl<K> PartialEq for Entry<K> {
    fn eq(&self, other: &Self) -> bool {
        self.0.at == other.0.at && self.0.seq == other.0.seq
    }
}

impl<K> Eq for Entry<K> {}

impl<K> PartialOrd for Entry<K> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K> Ord for Entry<K> {
    // BinaryHeap is a max-heap; invert so the earliest (at, seq) pops first.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .0
            .at
            .cmp(&self.0.at)
            .then_with(|| other.0.seq.cmp(&self.0.seq))
    }
}

/// Discrete-event queue. Events at equal instants pop in insertion order, and
/// no event may be scheduled before the instant of the event being processed.
pub struct EventQueue<K> {
    heap: BinaryHeap<Entry<K>>,
    next_seq: u64,
    now: TimeInstant,
}

impl<K> Default for EventQueue<K> {
    fn default() -> Self {
        Self::new()
    }
}

impl<K> EventQueue<K> {
    pub fn new() -> Self {
        EventQueue {
            heap: BinaryHeap::new(),
            next_seq: 0,
            now: TimeInstant::ZERO,
        }
    }

    /// Instant of the most recently popped event.
    pub fn now(&self) -> TimeInstant {
        self.now
    }

    /// Panics if `at` lies before the current instant (causality violation).
    pub fn schedule(&mut self, at: TimeInstant, kind: K) -> u64 {
        assert!(
            at >= self.now,
            "event scheduled in the past: {at} < now {}",
            self.now
        );
        let seq = self.next_seq;
        self.next_seq += 1;
        self.heap.push(Entry(Event { at, seq, kind }));
        seq
    }

    pub fn pop(&mut self) -> Option<Event<K>> {
        let Entry(ev) = self.heap.pop()?;
        self.now = ev.at;
        Some(ev)
    }

    /// Pops the next event only if it is due at or before `horizon`.
    pub fn pop_until(&mut self, horizon: TimeInstant) -> Option<Event<K>> {
        match self.heap.peek() {
            Some(Entry(ev)) if ev.at <= horizon => self.pop(),
            _ => None,
        }
    }

    pub fn peek_time(&self) -> Option<TimeInstant> {
        self.heap.peek().map(|e| e.0.at)
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }
}
