//! LoRaWAN class A and class C over a single half-duplex gateway, with a
//! network server that queues downlinks produced by a SCHC endpoint.

mod config;
mod duty;
mod gateway;
mod server;
mod sim;

pub use config::{ChannelPlan, DutyCycleConfig, LorawanConfig, SubBand};
pub use duty::{DutyBucket, DutyLimiter};
pub use gateway::Gateway;
pub use server::{NetworkServer, QueueSample};
pub use sim::{simulate, DeviceClass, EndDevice, LorawanEvent, LorawanTrace, Window, EVENTS_CSV_HEADER};
