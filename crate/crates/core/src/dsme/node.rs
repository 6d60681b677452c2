use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::schedule::GtsCell;
use crate::engine::time::TimeInstant;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NodeRole {
    Coordinator,
    Child,
}

/// A MAC frame waiting for its cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Frame {
    /// Index of the packet record it carries.
    pub record: usize,
    pub receiver: u32,
    pub bytes: usize,
    pub enqueued_at: TimeInstant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Queued,
    DroppedOverflow,
}

#[derive(Debug, Clone)]
pub struct DsmeNode {
    pub id: u32,
    pub role: NodeRole,
    pub capacity: usize,
    pub tx_cells: Vec<GtsCell>,
    pub rx_cells: Vec<GtsCell>,
    queue: VecDeque<Frame>,
}

impl DsmeNode {
    pub fn new(id: u32, role: NodeRole, capacity: usize) -> Self {
        DsmeNode {
            id,
            role,
            capacity,
            tx_cells: Vec::new(),
            rx_cells: Vec::new(),
            queue: VecDeque::new(),
        }
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    /// Appends at the tail; a full queue drops the new frame.
    pub fn enqueue(&mut self, frame: Frame) -> EnqueueOutcome {
        if self.queue.len() >= self.capacity {
            return EnqueueOutcome::DroppedOverflow;
        }
        self.queue.push_back(frame);
        EnqueueOutcome::Queued
    }

    /// Removes the oldest frame addressed to `receiver`.
    pub fn take_for(&mut self, receiver: u32) -> Option<Frame> {
        let pos = self.queue.iter().position(|f| f.receiver == receiver)?;
        self.queue.remove(pos)
    }

    pub fn frames(&self) -> impl Iterator<Item = &Frame> {
        self.queue.iter()
    }
}
