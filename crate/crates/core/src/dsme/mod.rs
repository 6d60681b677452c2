//! DSME MAC over LoRa: superframe timing, guaranteed time slot (GTS)
//! schedule, per-node FIFO queues and a slotted, collision-free simulator.

mod config;
mod crosscheck;
mod node;
mod schedule;
mod sim;

pub use config::{CellPlacement, DsmeConfig, SuperframeConfig, SLOTS_PER_SUPERFRAME};
pub use crosscheck::{cross_check, single_link_scenario, CrossCheck, CrossCheckError};
pub use node::{DsmeNode, EnqueueOutcome, Frame, NodeRole};
pub use schedule::{build_schedule, GtsCell, GtsSchedule, ScheduleInfeasible, GTS_CSV_HEADER};
pub use sim::{mac_wait_cdf, on_slot_start, radio_intervals, simulate, SlotOutcome};
