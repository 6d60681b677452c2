use serde::{Deserialize, Serialize};

use crate::engine::time::{Duration, TimeInstant};

pub const SLOTS_PER_SUPERFRAME: u32 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuperframeConfig {
    pub superframe_duration_ms: u64,
    pub superframes_per_msf: u32,
    pub cap_slots: u32,
    pub cfp_slots: u32,
    pub channels: u32,
    pub sleep_during_cap: bool,
}

impl Default for SuperframeConfig {
    fn default() -> Self {
        SuperframeConfig {
            superframe_duration_ms: 3840,
            superframes_per_msf: 1,
            cap_slots: 8,
            cfp_slots: 7,
            channels: 4,
            sleep_during_cap: true,
        }
    }
}

impl SuperframeConfig {
    pub fn validate(&self) -> Result<(), String> {
        if 1 + self.cap_slots + self.cfp_slots != SLOTS_PER_SUPERFRAME {
            return Err(format!(
                "1 beacon + {} CAP + {} CFP slots must equal {SLOTS_PER_SUPERFRAME}",
                self.cap_slots, self.cfp_slots
            ));
        }
        if self.channels == 0 || self.superframes_per_msf == 0 || self.cfp_slots == 0 {
            return Err("channels, superframes_per_msf and cfp_slots must be >= 1".into());
        }
        if !self.superframe_duration_ms.is_multiple_of(u64::from(SLOTS_PER_SUPERFRAME)) || self.superframe_duration_ms == 0 {
            return Err(format!(
                "superframe_duration_ms {} must be a positive multiple of {SLOTS_PER_SUPERFRAME}",
                self.superframe_duration_ms
            ));
        }
        Ok(())
    }

    pub fn superframe(&self) -> Duration {
        Duration::from_millis(self.superframe_duration_ms)
    }

    pub fn slot(&self) -> Duration {
        Duration::from_millis(self.superframe_duration_ms / u64::from(SLOTS_PER_SUPERFRAME))
    }

    pub fn multisuperframe(&self) -> Duration {
        self.superframe() * u64::from(self.superframes_per_msf)
    }

    /// CFP slots per multisuperframe.
    pub fn msf_slots(&self) -> u32 {
        self.cfp_slots * self.superframes_per_msf
    }

    /// Offset of a CFP slot within its multisuperframe.
    pub fn cfp_slot_offset(&self, msf_slot_index: u32) -> Duration {
        let sf = msf_slot_index / self.cfp_slots;
        let within = 1 + self.cap_slots + msf_slot_index % self.cfp_slots;
        self.superframe() * u64::from(sf) + self.slot() * u64::from(within)
    }

    pub fn cfp_slot_start(&self, msf: u64, msf_slot_index: u32) -> TimeInstant {
        TimeInstant::ZERO + self.multisuperframe() * msf + self.cfp_slot_offset(msf_slot_index)
    }
}

/// Where the extra cells of a multi-slot flow go.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CellPlacement {
    /// Evenly spaced over the multisuperframe.
    #[default]
    Spread,
    /// Adjacent slots, as close to a single service instant as the radio allows.
    Contiguous,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DsmeConfig {
    pub superframe: SuperframeConfig,
    /// Delay from slot start to frame start.
    pub guard_ms: u64,
    /// Radio wake-up ahead of every receive slot.
    pub rx_early_ms: u64,
    pub queue_capacity: usize,
    pub slots_per_flow: u32,
    pub placement: CellPlacement,
    /// Device sending beacons; defaults to the first device.
    pub coordinator: u32,
    /// PHY payload of a beacon frame.
    pub beacon_bytes: usize,
}

impl Default for DsmeConfig {
    fn default() -> Self {
        DsmeConfig {
            superframe: SuperframeConfig::default(),
            guard_ms: 10,
            rx_early_ms: 20,
            queue_capacity: 16,
            slots_per_flow: 1,
            placement: CellPlacement::Spread,
            coordinator: 0,
            beacon_bytes: 25,
        }
    }
}

impl DsmeConfig {
    pub fn validate(&self) -> Result<(), String> {
        self.superframe.validate()?;
        if self.slots_per_flow == 0 {
            return Err("slots_per_flow must be >= 1".into());
        }
        if self.queue_capacity == 0 {
            return Err("queue_capacity must be >= 1".into());
        }
        if Duration::from_millis(self.guard_ms) >= self.superframe.slot() {
            return Err(format!("guard_ms {} leaves no room in a slot", self.guard_ms));
        }
        Ok(())
    }

    pub fn guard(&self) -> Duration {
        Duration::from_millis(self.guard_ms)
    }

    pub fn rx_early(&self) -> Duration {
        Duration::from_millis(self.rx_early_ms)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_timing() {
        let c = SuperframeConfig::default();
        c.validate().unwrap();
        assert_eq!(c.slot(), Duration::from_millis(240));
        assert_eq!(c.msf_slots(), 7);
        assert_eq!(c.cfp_slot_offset(0), Duration::from_millis(9 * 240));
        assert_eq!(c.cfp_slot_offset(6), Duration::from_millis(15 * 240));
    }

    #[test]
    fn multisuperframe_slot_positions() {
        let c = SuperframeConfig {
            superframes_per_msf: 2,
            ..SuperframeConfig::default()
        };
        assert_eq!(c.msf_slots(), 14);
        assert_eq!(c.cfp_slot_offset(7), Duration::from_millis(3840 + 9 * 240));
        assert_eq!(c.cfp_slot_start(1, 0), TimeInstant::from_micros(7_680_000 + 2_160_000));
    }

    #[test]
    fn rejects_bad_slot_split() {
        let c = SuperframeConfig {
            cap_slots: 9,
            ..SuperframeConfig::default()
        };
        assert!(c.validate().is_err());
    }
}
