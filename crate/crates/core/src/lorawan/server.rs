use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::engine::time::{Duration, TimeInstant};

/// Queue length of one device after a change.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueueSample {
    pub time: TimeInstant,
    pub device: u32,
    pub len: usize,
}

/// Downlink queues and class-C throttling state.
#[derive(Debug, Clone)]
pub struct NetworkServer {
    queues: Vec<VecDeque<usize>>,
    capacity: Option<usize>,
    throttle: Duration,
    next_class_c: Vec<TimeInstant>,
    /// A downlink for the device is scheduled and not yet over.
    in_flight_until: Vec<Option<TimeInstant>>,
    trace: Vec<QueueSample>,
}

impl NetworkServer {
    pub fn new(devices: usize, capacity: Option<usize>, throttle: Duration) -> Self {
        NetworkServer {
            queues: vec![VecDeque::new(); devices],
            capacity,
            throttle,
            next_class_c: vec![TimeInstant::ZERO; devices],
            in_flight_until: vec![None; devices],
            trace: Vec::new(),
        }
    }

    pub fn queue_len(&self, device: u32) -> usize {
        self.queues[device as usize].len()
    }

    pub fn has_pending(&self, device: u32) -> bool {
        !self.queues[device as usize].is_empty()
    }

    /// Appends a record to the device queue; false if the bound is reached.
    pub fn enqueue(&mut self, device: u32, record: usize, now: TimeInstant) -> bool {
        let q = &mut self.queues[device as usize];
        if self.capacity.is_some_and(|c| q.len() >= c) {
            return false;
        }
        q.push_back(record);
        let len = q.len();
        self.trace.push(QueueSample { time: now, device, len });
        true
    }

    /// Pops the head; the second value is the frame-pending bit.
    pub fn dequeue(&mut self, device: u32, now: TimeInstant) -> Option<(usize, bool)> {
        let q = &mut self.queues[device as usize];
        let head = q.pop_front()?;
        let len = q.len();
        self.trace.push(QueueSample { time: now, device, len });
        Some((head, len > 0))
    }

    pub fn class_c_ready_at(&self, device: u32) -> TimeInstant {
        let t = self.next_class_c[device as usize];
        match self.in_flight_until[device as usize] {
            Some(u) => t.max(u),
            None => t,
        }
    }

    pub fn mark_class_c_sent(&mut self, device: u32, now: TimeInstant) {
        self.next_class_c[device as usize] = now + self.throttle;
    }

    pub fn set_in_flight(&mut self, device: u32, until: Option<TimeInstant>) {
        self.in_flight_until[device as usize] = until;
    }

    pub fn queued(&self, device: u32) -> impl Iterator<Item = &usize> {
        self.queues[device as usize].iter()
    }

    pub fn into_trace(self) -> Vec<QueueSample> {
        self.trace
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pending_bit_only_with_more_frames() {
        let mut ns = NetworkServer::new(2, None, Duration::from_secs(2));
        let t = TimeInstant::ZERO;
        assert!(ns.dequeue(0, t).is_none());
        ns.enqueue(0, 10, t);
        ns.enqueue(0, 11, t);
        assert_eq!(ns.dequeue(0, t), Some((10, true)));
        assert_eq!(ns.dequeue(0, t), Some((11, false)));
    }

    #[test]
    fn bounded_queue() {
        let mut ns = NetworkServer::new(1, Some(1), Duration::from_secs(2));
        assert!(ns.enqueue(0, 1, TimeInstant::ZERO));
        assert!(!ns.enqueue(0, 2, TimeInstant::ZERO));
    }

    #[test]
    fn throttle_spacing() {
        let mut ns = NetworkServer::new(1, None, Duration::from_secs(2));
        ns.mark_class_c_sent(0, TimeInstant::from_micros(500_000));
        assert_eq!(ns.class_c_ready_at(0), TimeInstant::from_micros(2_500_000));
    }
}
