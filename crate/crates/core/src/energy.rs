//! Radio-state energy accounting over simulator timelines.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::run::RunOutput;
use crate::engine::scenario::{DeviceRole, ScenarioConfig, Stack};
use crate::engine::time::{Duration, TimeInstant};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("empty radio trace")]
    EmptyTrace,
    #[error("device {device}: interval starting at {at} overlaps its predecessor")]
    Overlap { device: u32, at: TimeInstant },
    #[error("device {device}: gap before {at}")]
    Gap { device: u32, at: TimeInstant },
    #[error("invalid power profile: {0}")]
    InvalidProfile(String),
    #[error("missing run for {stack} at TXi {txi_s} s")]
    MissingConfiguration { stack: &'static str, txi_s: u32 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadioState {
    Sleep,
    Rx,
    Tx,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RadioStateInterval {
    pub device: u32,
    pub state: RadioState,
    pub start: TimeInstant,
    pub end: TimeInstant,
}

impl RadioStateInterval {
    pub fn duration(&self) -> Duration {
        self.end - self.start
    }
}

/// Turns possibly overlapping activity spans into a gap-free timeline over
/// [0, end). Where spans overlap, tx wins over rx and rx over sleep; time
/// not covered by any span is in `base`.
pub fn tile(
    device: u32,
    end: TimeInstant,
    base: RadioState,
    spans: &[(RadioState, TimeInstant, TimeInstant)],
) -> Vec<RadioStateInterval> {
    let mut marks: Vec<(TimeInstant, RadioState, i32)> = Vec::with_capacity(2 * spans.len());
    for &(state, s, e) in spans {
        let e = e.min(end);
        if s < e {
            marks.push((s, state, 1));
            marks.push((e, state, -1));
        }
    }
    marks.sort_by_key(|m| m.0);
    let mut active = [0i32; 3];
    let top = |active: &[i32; 3]| {
        if active[2] > 0 {
            RadioState::Tx
        } else if active[1] > 0 {
            RadioState::Rx
        } else {
            base
        }
    };
    let mut out: Vec<RadioStateInterval> = Vec::new();
    let mut push = |state: RadioState, s: TimeInstant, e: TimeInstant| {
        if s >= e {
            return;
        }
        match out.last_mut() {
            Some(last) if last.state == state && last.end == s => last.end = e,
            _ => out.push(RadioStateInterval {
                device,
                state,
                start: s,
                end: e,
            }),
        }
    };
    let mut cursor = TimeInstant::ZERO;
    let mut i = 0;
    while i < marks.len() {
        let t = marks[i].0;
        push(top(&active), cursor, t);
        while i < marks.len() && marks[i].0 == t {
            let idx = match marks[i].1 {
                RadioState::Sleep => 0,
                RadioState::Rx => 1,
                RadioState::Tx => 2,
            };
            active[idx] += marks[i].2;
            i += 1;
        }
        cursor = t;
    }
    push(top(&active), cursor, end);
    out
}

/// Power draw per radio state plus a constant stack overhead, milliwatts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerProfile {
    pub p_tx_mw: f64,
    pub p_rx_mw: f64,
    pub p_sleep_mw: f64,
    pub mac_overhead_mw: f64,
}

impl Default for PowerProfile {
    fn default() -> Self {
        PowerProfile {
            p_tx_mw: 90.0,
            p_rx_mw: 40.0,
            p_sleep_mw: 0.01,
            mac_overhead_mw: 0.0,
        }
    }
}

impl PowerProfile {
    pub fn validate(&self) -> Result<(), EnergyError> {
        let ok = self.p_tx_mw >= self.p_rx_mw
            && self.p_rx_mw >= self.p_sleep_mw
            && self.p_sleep_mw >= 0.0
            && self.mac_overhead_mw >= 0.0
            && self.p_tx_mw.is_finite();
        if ok {
            Ok(())
        } else {
            Err(EnergyError::InvalidProfile(format!("{self:?}")))
        }
    }

    pub fn state_power(&self, s: RadioState) -> f64 {
        match s {
            RadioState::Tx => self.p_tx_mw,
            RadioState::Rx => self.p_rx_mw,
            RadioState::Sleep => self.p_sleep_mw,
        }
    }
}

/// Profiles per stack family; they differ only in their overhead.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StackProfiles {
    pub lorawan: PowerProfile,
    pub dsme: PowerProfile,
}

impl StackProfiles {
    pub fn shared(base: PowerProfile, dsme_overhead_mw: f64, lorawan_overhead_mw: f64) -> Self {
        StackProfiles {
            lorawan: PowerProfile {
                mac_overhead_mw: lorawan_overhead_mw,
                ..base
            },
            dsme: PowerProfile {
                mac_overhead_mw: dsme_overhead_mw,
                ..base
            },
        }
    }

    pub fn for_stack(&self, stack: Stack) -> &PowerProfile {
        if stack.is_lorawan() {
            &self.lorawan
        } else {
            &self.dsme
        }
    }
}

/// Time spent in each state by one device.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StateTotals {
    pub tx: Duration,
    pub rx: Duration,
    pub sleep: Duration,
}

impl StateTotals {
    /// Checks that the intervals of one device follow each other without
    /// overlap or gap, and sums them per state.
    pub fn from_intervals<'a>(
        intervals: impl IntoIterator<Item = &'a RadioStateInterval>,
    ) -> Result<Self, EnergyError> {
        let mut t = StateTotals::default();
        let mut prev: Option<&RadioStateInterval> = None;
        for iv in intervals {
            if let Some(p) = prev {
                if iv.start < p.end {
                    return Err(EnergyError::Overlap { device: iv.device, at: iv.start });
                }
                if iv.start > p.end {
                    return Err(EnergyError::Gap { device: iv.device, at: iv.start });
                }
            }
            if iv.end < iv.start {
                return Err(EnergyError::Overlap { device: iv.device, at: iv.start });
            }
            let d = iv.duration();
            match iv.state {
                RadioState::Tx => t.tx += d,
                RadioState::Rx => t.rx += d,
                RadioState::Sleep => t.sleep += d,
            }
            prev = Some(iv);
        }
        if t.total().is_zero() {
            return Err(EnergyError::EmptyTrace);
        }
        Ok(t)
    }

    pub fn total(&self) -> Duration {
        self.tx + self.rx + self.sleep
    }

    /// Fraction of time the radio is not asleep.
    pub fn active_fraction(&self) -> f64 {
        (self.tx + self.rx).as_secs_f64() / self.total().as_secs_f64()
    }

    pub fn average_power(&self, profile: &PowerProfile) -> f64 {
        let total = self.total().as_secs_f64();
        (profile.p_tx_mw * self.tx.as_secs_f64()
            + profile.p_rx_mw * self.rx.as_secs_f64()
            + profile.p_sleep_mw * self.sleep.as_secs_f64())
            / total
            + profile.mac_overhead_mw
    }
}

/// Mean power of one device's timeline in milliwatts.
pub fn average_power(intervals: &[RadioStateInterval], profile: &PowerProfile) -> Result<f64, EnergyError> {
    profile.validate()?;
    Ok(StateTotals::from_intervals(intervals)?.average_power(profile))
}

/// Radio usage of one device in one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceUsage {
    pub device: u32,
    pub role: DeviceRole,
    pub inbound_flows: usize,
    pub stack: Stack,
    pub txi_s: u32,
    pub totals: StateTotals,
}

pub fn device_usage(scenario: &ScenarioConfig, run: &RunOutput) -> Result<Vec<DeviceUsage>, EnergyError> {
    let txi_s = scenario.traffic.mean_interval_s().round() as u32;
    scenario
        .devices
        .iter()
        .map(|d| {
            Ok(DeviceUsage {
                device: d.id,
                role: d.role,
                inbound_flows: scenario.inbound_flows(d.id),
                stack: scenario.stack,
                txi_s,
                totals: StateTotals::from_intervals(run.device_intervals(d.id))?,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceEnergy {
    pub device: u32,
    pub stack: Stack,
    pub txi_s: u32,
    pub avg_mw: f64,
}

pub const ENERGY_CSV_HEADER: &str = "device,stack,txi,avg_mw";

pub fn energy_csv(rows: &[DeviceEnergy]) -> String {
    let mut out = String::from(ENERGY_CSV_HEADER);
    out.push('\n');
    for r in rows {
        out.push_str(&format!("{},{},{},{:.6}\n", r.device, r.stack.label(), r.txi_s, r.avg_mw));
    }
    out
}

pub fn device_energy(usage: &[DeviceUsage], profiles: &StackProfiles) -> Vec<DeviceEnergy> {
    usage
        .iter()
        .map(|u| DeviceEnergy {
            device: u.device,
            stack: u.stack,
            txi_s: u.txi_s,
            avg_mw: u.totals.average_power(profiles.for_stack(u.stack)),
        })
        .collect()
}

/// One table row: mean power per stack.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyRow {
    pub label: String,
    pub class_a_mw: f64,
    pub class_c_mw: f64,
    pub sixlora_mw: f64,
}

impl EnergyRow {
    pub fn ordered(&self) -> bool {
        self.class_a_mw < self.sixlora_mw && self.sixlora_mw < self.class_c_mw
    }
}

/// Sensor rows at TXi 20 s and 10 s and an actuator row. The actuator row
/// averages actuators with exactly three inbound flows in the 20 s runs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyTable {
    pub sensor_20s: EnergyRow,
    pub sensor_10s: EnergyRow,
    pub actuator: EnergyRow,
}

impl EnergyTable {
    pub fn rows(&self) -> [&EnergyRow; 3] {
        [&self.sensor_20s, &self.sensor_10s, &self.actuator]
    }

    /// classA < 6LoRa < classC in every row, and sensors draw more at 10 s.
    pub fn orderings_hold(&self) -> bool {
        self.rows().iter().all(|r| r.ordered())
            && self.sensor_10s.class_a_mw > self.sensor_20s.class_a_mw
            && self.sensor_10s.class_c_mw > self.sensor_20s.class_c_mw
            && self.sensor_10s.sixlora_mw > self.sensor_20s.sixlora_mw
    }

    pub fn markdown(&self) -> String {
        let mut s = String::from("| Device | TXi (s) | Class A (mW) | Class C (mW) | 6LoRa (mW) |\n|---|---|---|---|---|\n");
        for (r, txi) in [(&self.sensor_20s, "20"), (&self.sensor_10s, "10"), (&self.actuator, "20")] {
            s.push_str(&format!(
                "| {} | {} | {:.3} | {:.3} | {:.3} |\n",
                r.label, txi, r.class_a_mw, r.class_c_mw, r.sixlora_mw
            ));
        }
        s
    }
}

pub fn energy_report(usage: &[DeviceUsage], profiles: &StackProfiles) -> Result<EnergyTable, EnergyError> {
    let mut groups: BTreeMap<(Stack, u32, bool), Vec<f64>> = BTreeMap::new();
    for u in usage {
        let avg = u.totals.average_power(profiles.for_stack(u.stack));
        match u.role {
            DeviceRole::Sensor => groups.entry((u.stack, u.txi_s, true)).or_default().push(avg),
            DeviceRole::Actuator if u.inbound_flows == 3 => {
                groups.entry((u.stack, u.txi_s, false)).or_default().push(avg)
            }
            DeviceRole::Actuator => {}
        }
    }
    let mean = |stack: Stack, txi_s: u32, sensor: bool| -> Result<f64, EnergyError> {
        match groups.get(&(stack, txi_s, sensor)) {
            Some(v) if !v.is_empty() => Ok(v.iter().sum::<f64>() / v.len() as f64),
            _ => Err(EnergyError::MissingConfiguration {
                stack: stack.label(),
                txi_s,
            }),
        }
    };
    let row = |label: &str, txi: u32, sensor: bool| -> Result<EnergyRow, EnergyError> {
        Ok(EnergyRow {
            label: label.to_string(),
            class_a_mw: mean(Stack::LorawanClassA, txi, sensor)?,
            class_c_mw: mean(Stack::LorawanClassC, txi, sensor)?,
            sixlora_mw: mean(Stack::DsmeLora, txi, sensor)?,
        })
    };
    Ok(EnergyTable {
        sensor_20s: row("Sensor", 20, true)?,
        sensor_10s: row("Sensor", 10, true)?,
        actuator: row("Actuator", 20, false)?,
    })
}

/// Energy table under one profile pair and the checks made on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileCheck {
    pub profiles: StackProfiles,
    pub table: EnergyTable,
    pub orderings_hold: bool,
    /// Class C actuator power over the LoRaWAN receive power.
    pub class_c_actuator_vs_rx: f64,
    /// 6LoRa actuator power over class C actuator power.
    pub actuator_ratio: f64,
}

impl ProfileCheck {
    pub fn passes(&self) -> bool {
        self.orderings_hold
            && (self.class_c_actuator_vs_rx - 1.0).abs() <= 0.10
            && (0.15..=0.35).contains(&self.actuator_ratio)
    }
}

pub const PROFILE_CSV_HEADER: &str =
    "profile,p_tx_mw,p_rx_mw,p_sleep_mw,dsme_overhead_mw,lorawan_overhead_mw,orderings_hold,class_c_actuator_vs_rx,actuator_ratio,pass";

pub fn check_profiles(usage: &[DeviceUsage], grid: &[StackProfiles]) -> Result<Vec<ProfileCheck>, EnergyError> {
    grid.iter()
        .map(|profiles| {
            let table = energy_report(usage, profiles)?;
            Ok(ProfileCheck {
                orderings_hold: table.orderings_hold(),
                class_c_actuator_vs_rx: table.actuator.class_c_mw / profiles.lorawan.p_rx_mw,
                actuator_ratio: table.actuator.sixlora_mw / table.actuator.class_c_mw,
                profiles: *profiles,
                table,
            })
        })
        .collect()
}

pub fn profile_csv(checks: &[ProfileCheck]) -> String {
    let mut out = format!("{PROFILE_CSV_HEADER}\n");
    for (i, c) in checks.iter().enumerate() {
        let p = &c.profiles;
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{:.6},{:.6},{}\n",
            i,
            p.lorawan.p_tx_mw,
            p.lorawan.p_rx_mw,
            p.lorawan.p_sleep_mw,
            p.dsme.mac_overhead_mw,
            p.lorawan.mac_overhead_mw,
            c.orderings_hold,
            c.class_c_actuator_vs_rx,
            c.actuator_ratio,
            c.passes()
        ));
    }
    out
}

/// Admissible profiles: p_tx > p_rx >> p_sleep and a DSME overhead above
/// the LoRaWAN one.
pub fn profile_grid() -> Vec<StackProfiles> {
    let mut grid = Vec::new();
    for &(p_tx, p_rx) in &[(90.0, 40.0), (120.0, 36.0), (75.0, 45.0), (130.0, 30.0), (60.0, 50.0)] {
        for &p_sleep in &[0.001, 0.05] {
            for &(dsme_oh, lora_oh) in &[(0.3, 0.0), (1.5, 0.5)] {
                let base = PowerProfile {
                    p_tx_mw: p_tx,
                    p_rx_mw: p_rx,
                    p_sleep_mw: p_sleep,
                    mac_overhead_mw: 0.0,
                };
                grid.push(StackProfiles::shared(base, dsme_oh, lora_oh));
            }
        }
    }
    grid
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(ms: u64) -> TimeInstant {
        TimeInstant::from_micros(ms * 1000)
    }

    #[test]
    fn tile_priorities_and_coverage() {
        let spans = [
            (RadioState::Rx, t(10), t(50)),
            (RadioState::Tx, t(20), t(30)),
            (RadioState::Rx, t(90), t(200)),
        ];
        let iv = tile(7, t(100), RadioState::Sleep, &spans);
        let got: Vec<_> = iv.iter().map(|i| (i.state, i.start, i.end)).collect();
        assert_eq!(
            got,
            vec![
                (RadioState::Sleep, t(0), t(10)),
                (RadioState::Rx, t(10), t(20)),
                (RadioState::Tx, t(20), t(30)),
                (RadioState::Rx, t(30), t(50)),
                (RadioState::Sleep, t(50), t(90)),
                (RadioState::Rx, t(90), t(100)),
            ]
        );
        let totals = StateTotals::from_intervals(&iv).unwrap();
        assert_eq!(totals.total(), Duration::from_millis(100));
    }

    #[test]
    fn always_listening() {
        let iv = tile(0, t(1000), RadioState::Rx, &[]);
        let p = PowerProfile {
            mac_overhead_mw: 0.5,
            ..PowerProfile::default()
        };
        assert!((average_power(&iv, &p).unwrap() - 40.5).abs() < 1e-12);
    }

    #[test]
    fn quarter_duty_cycle() {
        let iv = tile(0, t(1600), RadioState::Sleep, &[(RadioState::Rx, t(0), t(400))]);
        let p = PowerProfile {
            p_sleep_mw: 0.0,
            ..PowerProfile::default()
        };
        assert!((average_power(&iv, &p).unwrap() - 10.0).abs() < 1e-12);
    }

    #[test]
    fn broken_traces_rejected() {
        assert_eq!(average_power(&[], &PowerProfile::default()), Err(EnergyError::EmptyTrace));
        let a = RadioStateInterval { device: 1, state: RadioState::Rx, start: t(0), end: t(10) };
        let b = RadioStateInterval { device: 1, state: RadioState::Sleep, start: t(5), end: t(20) };
        assert!(matches!(average_power(&[a, b], &PowerProfile::default()), Err(EnergyError::Overlap { .. })));
        let c = RadioStateInterval { start: t(15), ..b };
        assert!(matches!(average_power(&[a, c], &PowerProfile::default()), Err(EnergyError::Gap { .. })));
    }

    #[test]
    fn linear_in_rx_power() {
        let totals = StateTotals {
            tx: Duration::from_millis(10),
            rx: Duration::from_millis(300),
            sleep: Duration::from_millis(690),
        };
        let p1 = PowerProfile { p_sleep_mw: 0.0, p_tx_mw: 0.0, p_rx_mw: 20.0, mac_overhead_mw: 0.0 };
        let p2 = PowerProfile { p_rx_mw: 40.0, ..p1 };
        assert!((totals.average_power(&p2) - 2.0 * totals.average_power(&p1)).abs() < 1e-12);
    }

    #[test]
    fn grid_is_admissible() {
        let g = profile_grid();
        assert!(g.len() >= 10);
        for p in g {
            p.dsme.validate().unwrap();
            assert!(p.dsme.p_tx_mw > p.dsme.p_rx_mw);
            assert!(p.dsme.mac_overhead_mw > p.lorawan.mac_overhead_mw);
        }
    }
}
