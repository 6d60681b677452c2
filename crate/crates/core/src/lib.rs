//! Simulation and analytical models of two LPWAN stacks carrying the same
//! sensor-to-actuator CoAP traffic: IPv6 over 6LoWPAN on a DSME MAC over LoRa
//! ("6LoRa"), and SCHC over LoRaWAN class A or class C.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytics;
pub mod cli;
pub mod compression;
pub mod dsme;
pub mod energy;
pub mod engine;
pub mod lorawan;
pub mod output;
pub mod phy;
