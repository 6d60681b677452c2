//! Experiment descriptions, loadable from JSON.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::rng::RngStream;
use super::time::Duration;
use crate::compression::{sixlowpan_frame, schc_frame, PacketTemplate, SchcRule, SixlowpanContext};
use crate::dsme::DsmeConfig;
use crate::lorawan::LorawanConfig;
use crate::phy::PhyParams;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid scenario: {0}")]
pub struct ScenarioError(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Stack {
    DsmeLora,
    LorawanClassA,
    LorawanClassC,
}

impl Stack {
    pub fn label(self) -> &'static str {
        match self {
            Stack::DsmeLora => "6lora",
            Stack::LorawanClassA => "lorawan-a",
            Stack::LorawanClassC => "lorawan-c",
        }
    }

    pub fn is_lorawan(self) -> bool {
        !matches!(self, Stack::DsmeLora)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DeviceRole {
    Sensor,
    Actuator,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DeviceSpec {
    pub id: u32,
    pub role: DeviceRole,
    #[serde(default)]
    pub cluster: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Flow {
    pub sender: u32,
    pub receiver: u32,
}

/// Packet generation law of every flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Traffic {
    /// Inter-arrival uniform on [mean - half_range, mean + half_range].
    Uniform { mean_s: f64, half_range_s: f64 },
    /// Poisson arrivals.
    Exponential { rate_per_s: f64 },
}

impl Traffic {
    pub fn mean_interval_s(&self) -> f64 {
        match *self {
            Traffic::Uniform { mean_s, .. } => mean_s,
            Traffic::Exponential { rate_per_s } => 1.0 / rate_per_s,
        }
    }

    /// Offset of a flow's first packet: uniform on [0, mean) or, for Poisson
    /// traffic, an ordinary exponential gap.
    pub fn first_offset(&self, rng: &mut RngStream) -> Duration {
        match *self {
            Traffic::Uniform { mean_s, .. } => Duration::from_secs_f64(rng.uniform(0.0, mean_s)),
            Traffic::Exponential { rate_per_s } => Duration::from_secs_f64(rng.exponential(rate_per_s)),
        }
    }

    pub fn next_gap(&self, rng: &mut RngStream) -> Duration {
        match *self {
            Traffic::Uniform { mean_s, half_range_s } => {
                Duration::from_secs_f64(rng.uniform(mean_s - half_range_s, mean_s + half_range_s))
            }
            // Floor at 1 us so consecutive packets never share an instant.
            Traffic::Exponential { rate_per_s } => {
                Duration::from_secs_f64(rng.exponential(rate_per_s)).max(Duration::from_micros(1))
            }
        }
    }

    fn validate(&self) -> Result<(), ScenarioError> {
        match *self {
            Traffic::Uniform { mean_s, half_range_s } => {
                if !(mean_s > 0.0 && mean_s.is_finite()) {
                    return Err(ScenarioError(format!("traffic mean_s {mean_s} must be > 0")));
                }
                if !(half_range_s >= 0.0 && half_range_s < mean_s) {
                    return Err(ScenarioError(format!(
                        "traffic half_range_s {half_range_s} must be in [0, mean_s = {mean_s})"
                    )));
                }
            }
            Traffic::Exponential { rate_per_s } => {
                if !(rate_per_s > 0.0 && rate_per_s.is_finite()) {
                    return Err(ScenarioError(format!("traffic rate_per_s {rate_per_s} must be > 0")));
                }
            }
        }
        Ok(())
    }
}

fn default_payload() -> usize {
    crate::compression::TESTBED_PAYLOAD_BYTES
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub name: String,
    pub stack: Stack,
    pub devices: Vec<DeviceSpec>,
    pub flows: Vec<Flow>,
    pub traffic: Traffic,
    #[serde(default)]
    pub phy: PhyParams,
    #[serde(default)]
    pub dsme: DsmeConfig,
    #[serde(default)]
    pub lorawan: LorawanConfig,
    /// CoAP payload carried by every application packet.
    #[serde(default = "default_payload")]
    pub payload_bytes: usize,
    pub duration_s: f64,
    pub seed: u64,
}

impl ScenarioConfig {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let s: ScenarioConfig = serde_json::from_str(text).map_err(|e| ScenarioError(e.to_string()))?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    pub fn duration(&self) -> Duration {
        Duration::from_secs_f64(self.duration_s)
    }

    pub fn device(&self, id: u32) -> Option<&DeviceSpec> {
        self.devices.get(id as usize).filter(|d| d.id == id)
    }

    pub fn sensors(&self) -> impl Iterator<Item = &DeviceSpec> {
        self.devices.iter().filter(|d| d.role == DeviceRole::Sensor)
    }

    pub fn actuators(&self) -> impl Iterator<Item = &DeviceSpec> {
        self.devices.iter().filter(|d| d.role == DeviceRole::Actuator)
    }

    pub fn inbound_flows(&self, device: u32) -> usize {
        self.flows.iter().filter(|f| f.receiver == device).count()
    }

    pub fn template(&self) -> PacketTemplate {
        PacketTemplate::with_payload(self.payload_bytes)
    }

    /// PHY payload of one application packet on this scenario's stack.
    pub fn frame_bytes(&self) -> usize {
        let t = self.template();
        match self.stack {
            Stack::DsmeLora => sixlowpan_frame(&t, &SixlowpanContext::default()).total_phy_payload(),
            _ => schc_frame(&t, &SchcRule::full_elision(1, &t)).total_phy_payload(),
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(ScenarioError(format!("duration_s {} must be > 0", self.duration_s)));
        }
        for (i, d) in self.devices.iter().enumerate() {
            if d.id as usize != i {
                return Err(ScenarioError(format!(
                    "device at position {i} has id {}; ids must be 0, 1, 2, ... in order",
                    d.id
                )));
            }
        }
        for (i, f) in self.flows.iter().enumerate() {
            let sender = self
                .device(f.sender)
                .ok_or_else(|| ScenarioError(format!("flow {i}: unknown sender {}", f.sender)))?;
            let receiver = self
                .device(f.receiver)
                .ok_or_else(|| ScenarioError(format!("flow {i}: unknown receiver {}", f.receiver)))?;
            if sender.role != DeviceRole::Sensor {
                return Err(ScenarioError(format!("flow {i}: sender {} is not a sensor", f.sender)));
            }
            if receiver.role != DeviceRole::Actuator {
                return Err(ScenarioError(format!("flow {i}: receiver {} is not an actuator", f.receiver)));
            }
        }
        self.traffic.validate()?;
        self.phy.validate().map_err(|e| ScenarioError(e.to_string()))?;
        if self.frame_bytes() > 255 {
            return Err(ScenarioError(format!("frame of {} bytes exceeds 255", self.frame_bytes())));
        }
        self.dsme.validate().map_err(ScenarioError)?;
        self.lorawan.validate().map_err(ScenarioError)?;
        Ok(())
    }

    /// The 15-device testbed: actuators 0..3; sensors 3..=8 send to actuator 0,
    /// 9..=11 to actuator 1 and 12..=14 to actuator 2.
    pub fn testbed(stack: Stack, mean_interval_s: f64, seed: u64) -> Self {
        let mut devices = Vec::new();
        for id in 0..3 {
            devices.push(DeviceSpec {
                id,
                role: DeviceRole::Actuator,
                cluster: 1,
            });
        }
        for id in 3..15 {
            devices.push(DeviceSpec {
                id,
                role: DeviceRole::Sensor,
                cluster: if id <= 10 { 2 } else { 3 },
            });
        }
        let flows = (3..15)
            .map(|sender| Flow {
                sender,
                receiver: match sender {
                    3..=8 => 0,
                    9..=11 => 1,
                    _ => 2,
                },
            })
            .collect();
        let prefix = match stack {
            Stack::DsmeLora => "6lora".to_string(),
            Stack::LorawanClassA => "schc_lorawan_a".to_string(),
            Stack::LorawanClassC => "schc_lorawan_c".to_string(),
        };
        ScenarioConfig {
            name: format!("{prefix}_{}s", mean_interval_s.round() as u64),
            stack,
            devices,
            flows,
            traffic: Traffic::Uniform {
                mean_s: mean_interval_s,
                half_range_s: 2.0,
            },
            phy: PhyParams::default(),
            dsme: DsmeConfig::default(),
            lorawan: LorawanConfig::default(),
            payload_bytes: default_payload(),
            duration_s: 3600.0,
            seed,
        }
    }

    /// The six testbed configurations, ordered by name.
    pub fn testbed_suite(seed: u64) -> Vec<Self> {
        let mut v = Vec::new();
        for stack in [Stack::DsmeLora, Stack::LorawanClassA, Stack::LorawanClassC] {
            for txi in [10.0, 20.0] {
                v.push(Self::testbed(stack, txi, seed));
            }
        }
        v.sort_by(|a, b| a.name.cmp(&b.name));
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn testbed_topology() {
        let s = ScenarioConfig::testbed(Stack::DsmeLora, 20.0, 1);
        s.validate().unwrap();
        assert_eq!(s.devices.len(), 15);
        assert_eq!(s.flows.len(), 12);
        assert_eq!(s.inbound_flows(0), 6);
        assert_eq!(s.inbound_flows(1), 3);
        assert_eq!(s.inbound_flows(2), 3);
        assert_eq!(s.name, "6lora_20s");
    }

    #[test]
    fn json_round_trip() {
        let s = ScenarioConfig::testbed(Stack::LorawanClassC, 10.0, 9);
        let back = ScenarioConfig::from_json(&s.to_json()).unwrap();
        assert_eq!(s, back);
    }

    #[test]
    fn minimal_json_uses_defaults() {
        let text = r#"{
            "name": "tiny", "stack": "lorawan-class-a",
            "devices": [{"id": 0, "role": "actuator"}, {"id": 1, "role": "sensor"}],
            "flows": [{"sender": 1, "receiver": 0}],
            "traffic": {"kind": "uniform", "mean_s": 10, "half_range_s": 2},
            "duration_s": 60, "seed": 1
        }"#;
        let s = ScenarioConfig::from_json(text).unwrap();
        assert_eq!(s.payload_bytes, 32);
        assert_eq!(s.phy, PhyParams::default());
    }

    #[test]
    fn rejects_bad_references_and_ranges() {
        let mut s = ScenarioConfig::testbed(Stack::DsmeLora, 10.0, 1);
        s.flows.push(Flow { sender: 3, receiver: 99 });
        assert!(s.validate().unwrap_err().0.contains("unknown receiver"));
        let mut s = ScenarioConfig::testbed(Stack::DsmeLora, 10.0, 1);
        s.traffic = Traffic::Uniform { mean_s: 2.0, half_range_s: 2.0 };
        assert!(s.validate().is_err());
        let mut s = ScenarioConfig::testbed(Stack::DsmeLora, 10.0, 1);
        s.duration_s = 0.0;
        assert!(s.validate().is_err());
        assert!(ScenarioConfig::from_json("{").is_err());
        assert!(ScenarioConfig::from_json(r#"{"name": "x", "bogus": 1}"#).is_err());
    }

    #[test]
    fn frame_sizes_follow_stack() {
        assert_eq!(ScenarioConfig::testbed(Stack::DsmeLora, 10.0, 1).frame_bytes(), 63);
        assert_eq!(ScenarioConfig::testbed(Stack::LorawanClassA, 10.0, 1).frame_bytes(), 56);
    }

    #[test]
    fn uniform_gaps_stay_in_range() {
        let t = Traffic::Uniform { mean_s: 10.0, half_range_s: 2.0 };
        let mut rng = RngStream::new(1, 1);
        for _ in 0..1000 {
            let g = t.next_gap(&mut rng).as_secs_f64();
            assert!((8.0..=12.0).contains(&g));
            let o = t.first_offset(&mut rng).as_secs_f64();
            assert!((0.0..10.0).contains(&o));
        }
    }
}
