//! Discrete-event core shared by both stack simulators.

pub mod event;
pub mod metrics;
pub mod record;
pub mod rng;
pub mod run;
pub mod scenario;
pub mod time;

pub use event::{Event, EventQueue};
pub use metrics::{completion_cdf, summarize, EmpiricalCdf, MetricsError, MetricsReport};
pub use record::{LossCause, Outcome, PacketRecord};
pub use rng::{Purpose, RngStream};
pub use run::{run, RunError, RunOutput};
pub use scenario::{DeviceRole, DeviceSpec, Flow, ScenarioConfig, ScenarioError, Stack, Traffic};
pub use time::{Duration, TimeInstant};
