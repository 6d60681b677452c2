use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::PacketRecord;
use super::scenario::{ScenarioConfig, ScenarioError, Stack};
use super::time::Duration;
use crate::dsme::{self, GtsSchedule, ScheduleInfeasible};
use crate::energy::RadioStateInterval;
use crate::lorawan::{self, LorawanTrace};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum RunError {
    #[error(transparent)]
    Scenario(#[from] ScenarioError),
    #[error(transparent)]
    Schedule(#[from] ScheduleInfeasible),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutput {
    pub scenario: String,
    pub stack: Stack,
    pub seed: u64,
    pub duration: Duration,
    pub records: Vec<PacketRecord>,
    /// Per-device radio timeline, grouped by device and ordered in time.
    pub intervals: Vec<RadioStateInterval>,
    pub schedule: Option<GtsSchedule>,
    pub lorawan: Option<LorawanTrace>,
}

impl RunOutput {
    pub fn device_intervals(&self, device: u32) -> impl Iterator<Item = &RadioStateInterval> {
        self.intervals.iter().filter(move |i| i.device == device)
    }
}

/// Validates and simulates one scenario to its end time.
pub fn run(scenario: &ScenarioConfig) -> Result<RunOutput, RunError> {
    scenario.validate()?;
    match scenario.stack {
        Stack::DsmeLora => Ok(dsme::simulate(scenario)?),
        Stack::LorawanClassA | Stack::LorawanClassC => Ok(lorawan::simulate(scenario)),
    }
}
