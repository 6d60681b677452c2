use serde::{Deserialize, Serialize};

use crate::engine::time::Duration;
use crate::phy::CaptureModel;

/// EU868 regulatory sub-bands touched by the channel plan.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SubBand {
    /// 865.0 - 868.0 MHz
    G,
    /// 868.0 - 868.6 MHz
    G1,
    /// 869.4 - 869.65 MHz
    G3,
    Other,
}

impl SubBand {
    pub fn of(freq_hz: u32) -> Self {
        match freq_hz {
            865_000_000..=867_999_999 => SubBand::G,
            868_000_000..=868_600_000 => SubBand::G1,
            869_400_000..=869_650_000 => SubBand::G3,
            _ => SubBand::Other,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChannelPlan {
    pub uplink_channels_hz: Vec<u32>,
    pub rx2_frequency_hz: u32,
    pub rx2_spreading_factor: u8,
    pub rx1_delay_ms: u64,
    pub rx2_delay_ms: u64,
}

impl Default for ChannelPlan {
    fn default() -> Self {
        ChannelPlan {
            uplink_channels_hz: vec![
                868_100_000,
                868_300_000,
                868_500_000,
                867_100_000,
                867_300_000,
                867_500_000,
                867_700_000,
                867_900_000,
            ],
            rx2_frequency_hz: 869_525_000,
            rx2_spreading_factor: 7,
            rx1_delay_ms: 1000,
            rx2_delay_ms: 2000,
        }
    }
}

impl ChannelPlan {
    pub fn rx1_delay(&self) -> Duration {
        Duration::from_millis(self.rx1_delay_ms)
    }

    pub fn rx2_delay(&self) -> Duration {
        Duration::from_millis(self.rx2_delay_ms)
    }
}

/// Token-bucket duty-cycle limits per sub-band, as fractions of time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DutyCycleConfig {
    pub enabled: bool,
    pub band_g: f64,
    pub band_g1: f64,
    pub band_g3: f64,
    /// Averaging window; the bucket holds `duty * window` of airtime.
    pub window_s: f64,
}

impl DutyCycleConfig {
    pub fn gateway() -> Self {
        DutyCycleConfig {
            enabled: true,
            band_g: 0.01,
            band_g1: 0.01,
            band_g3: 0.10,
            window_s: 3600.0,
        }
    }

    pub fn device() -> Self {
        DutyCycleConfig {
            band_g3: 0.01,
            ..Self::gateway()
        }
    }

    pub fn fraction(&self, band: SubBand) -> f64 {
        match band {
            SubBand::G => self.band_g,
            SubBand::G1 => self.band_g1,
            SubBand::G3 => self.band_g3,
            SubBand::Other => 0.01,
        }
    }
}

impl Default for DutyCycleConfig {
    fn default() -> Self {
        Self::device()
    }
}

fn default_gateway_duty() -> DutyCycleConfig {
    DutyCycleConfig::gateway()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LorawanConfig {
    pub channel_plan: ChannelPlan,
    #[serde(default = "default_gateway_duty")]
    pub gateway_duty: DutyCycleConfig,
    pub device_duty: DutyCycleConfig,
    /// Gateway to network server, including the backhaul.
    pub uplink_path_ms: u64,
    pub endpoint_processing_ms: u64,
    /// From a class-C dequeue at the network server to the gateway transmission.
    pub downlink_path_ms: u64,
    pub class_c_throttle_ms: u64,
    /// Class-C queue scan period of the network server; 0 scans on every change.
    pub scheduler_interval_ms: u64,
    pub poll_interval_ms: u64,
    pub poll_jitter_ms: u64,
    /// Early poll after a frame-pending downlink, drawn from [0, this).
    pub pending_poll_jitter_ms: u64,
    /// Listening time of a receive window that carries nothing.
    pub empty_window_ms: u64,
    pub capture: CaptureModel,
    pub device_queue_capacity: usize,
    pub downlink_queue_capacity: Option<usize>,
    pub tx_power_dbm: f64,
}

impl Default for LorawanConfig {
    fn default() -> Self {
        LorawanConfig {
            channel_plan: ChannelPlan::default(),
            gateway_duty: DutyCycleConfig::gateway(),
            device_duty: DutyCycleConfig::device(),
            uplink_path_ms: 150,
            endpoint_processing_ms: 5,
            downlink_path_ms: 1200,
            class_c_throttle_ms: 2000,
            scheduler_interval_ms: 0,
            poll_interval_ms: 10_000,
            poll_jitter_ms: 500,
            pending_poll_jitter_ms: 500,
            empty_window_ms: 30,
            capture: CaptureModel::default(),
            device_queue_capacity: 16,
            downlink_queue_capacity: None,
            tx_power_dbm: 14.0,
        }
    }
}

impl LorawanConfig {
    pub fn validate(&self) -> Result<(), String> {
        let plan = &self.channel_plan;
        if plan.uplink_channels_hz.is_empty() {
            return Err("channel plan needs at least one uplink channel".into());
        }
        if plan.uplink_channels_hz.contains(&plan.rx2_frequency_hz) {
            return Err("rx2 frequency must differ from every uplink channel".into());
        }
        if plan.rx2_delay_ms <= plan.rx1_delay_ms {
            return Err("rx2_delay_ms must exceed rx1_delay_ms".into());
        }
        if self.uplink_path_ms + self.endpoint_processing_ms >= plan.rx1_delay_ms {
            return Err("uplink path and processing must fit before RX1".into());
        }
        if self.poll_interval_ms == 0 {
            return Err("poll_interval_ms must be > 0".into());
        }
        if self.device_queue_capacity == 0 {
            return Err("device_queue_capacity must be >= 1".into());
        }
        for d in [&self.gateway_duty, &self.device_duty] {
            for f in [d.band_g, d.band_g1, d.band_g3] {
                if !(f > 0.0 && f <= 1.0) {
                    return Err(format!("duty fraction {f} outside (0, 1]"));
                }
            }
            if !(d.window_s > 0.0) {
                return Err("duty window_s must be > 0".into());
            }
        }
        Ok(())
    }
}
