use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{CellPlacement, DsmeConfig};
use super::sim::mac_wait_cdf;
use crate::analytics::{model_delay_cdf, AnalyticsError, DelayCdf, ModelParams};
use crate::engine::run::{run, RunError};
use crate::engine::scenario::{DeviceRole, DeviceSpec, Flow, ScenarioConfig, Stack, Traffic};
use crate::phy::PhyParams;

#[derive(Debug, Error)]
pub enum CrossCheckError {
    #[error(transparent)]
    Model(#[from] AnalyticsError),
    #[error(transparent)]
    Run(#[from] RunError),
}

/// Simulated MAC waiting-time CDF next to the analytic one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossCheck {
    pub rho: f64,
    pub n_slots: u32,
    pub packets: usize,
    pub simulated: DelayCdf,
    pub model: DelayCdf,
    pub sup_distance: f64,
}

/// One sender, one receiver, Poisson arrivals at `rho` packets per
/// multisuperframe and `n_slots` adjacent cells.
pub fn single_link_scenario(rho: f64, n_slots: u32, duration_s: f64, seed: u64) -> ScenarioConfig {
    let dsme = DsmeConfig {
        slots_per_flow: n_slots,
        placement: CellPlacement::Contiguous,
        queue_capacity: 10_000,
        ..DsmeConfig::default()
    };
    let t_msf = dsme.superframe.multisuperframe().as_secs_f64();
    ScenarioConfig {
        name: format!("link_rho{rho}_n{n_slots}"),
        stack: Stack::DsmeLora,
        devices: vec![
            DeviceSpec { id: 0, role: DeviceRole::Actuator, cluster: 0 },
            DeviceSpec { id: 1, role: DeviceRole::Sensor, cluster: 0 },
        ],
        flows: vec![Flow { sender: 1, receiver: 0 }],
        traffic: Traffic::Exponential { rate_per_s: rho / t_msf },
        phy: PhyParams::default(),
        dsme,
        lorawan: Default::default(),
        payload_bytes: crate::compression::TESTBED_PAYLOAD_BYTES,
        duration_s,
        seed,
    }
}

/// Runs the single-link scenario long enough for about `packets` arrivals
/// and compares its waiting-time CDF with the model over `max_n` steps.
pub fn cross_check(rho: f64, n_slots: u32, packets: usize, max_n: usize, seed: u64) -> Result<CrossCheck, CrossCheckError> {
    let probe = single_link_scenario(rho, n_slots, 1.0, seed);
    let t_msf = probe.dsme.superframe.multisuperframe().as_secs_f64();
    let params = ModelParams::from_utilization(rho, t_msf, n_slots)?;
    let model = model_delay_cdf(&params)?;
    if rho == 0.0 {
        let mut values = vec![0.0];
        values.resize(max_n + 1, 1.0);
        return Ok(CrossCheck {
            rho,
            n_slots,
            packets: 0,
            simulated: DelayCdf::from_values(values),
            model,
            sup_distance: 0.0,
        });
    }
    let duration_s = packets as f64 * t_msf / rho;
    let scenario = single_link_scenario(rho, n_slots, duration_s, seed);
    let out = run(&scenario)?;
    let simulated = mac_wait_cdf(&out.records, &scenario.dsme, max_n);
    let sup_distance = (1..=max_n)
        .map(|n| (simulated.at(n) - model.at(n)).abs())
        .fold(0.0, f64::max);
    Ok(CrossCheck {
        rho,
        n_slots,
        packets: out.records.len(),
        simulated,
        model,
        sup_distance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn light_load_agrees() {
        let c = cross_check(0.3, 1, 3000, 6, 1).unwrap();
        assert!(c.sup_distance < 0.03, "{}", c.sup_distance);
    }

    #[test]
    fn idle_link_is_immediate() {
        let c = cross_check(0.0, 2, 100, 4, 1).unwrap();
        assert_eq!(c.simulated.at(1), 1.0);
        assert_eq!(c.model.at(1), 1.0);
    }
}
