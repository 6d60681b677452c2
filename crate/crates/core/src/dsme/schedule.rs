use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::config::{CellPlacement, SuperframeConfig};
use crate::engine::scenario::Flow;

/// One (slot, channel) resource owned by a sender-receiver pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct GtsCell {
    pub msf_slot_index: u32,
    pub channel_index: u32,
    pub sender: u32,
    pub receiver: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GtsSchedule {
    /// Sorted by slot, then channel.
    pub cells: Vec<GtsCell>,
}

/// The allocation failed; `reason` says which constraint was exhausted.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("schedule infeasible for flow {flow} ({sender} -> {receiver}): {reason}")]
pub struct ScheduleInfeasible {
    pub flow: usize,
    pub sender: u32,
    pub receiver: u32,
    pub reason: String,
}

pub const GTS_CSV_HEADER: &str = "slot,channel,sender,receiver";

impl GtsSchedule {
    pub fn cells_in_slot(&self, slot: u32) -> impl Iterator<Item = &GtsCell> {
        self.cells.iter().filter(move |c| c.msf_slot_index == slot)
    }

    pub fn tx_cells(&self, device: u32) -> impl Iterator<Item = &GtsCell> {
        self.cells.iter().filter(move |c| c.sender == device)
    }

    pub fn rx_cells(&self, device: u32) -> impl Iterator<Item = &GtsCell> {
        self.cells.iter().filter(move |c| c.receiver == device)
    }

    /// Checks both the resource and the single-radio constraint.
    pub fn is_valid(&self, config: &SuperframeConfig) -> bool {
        let mut resources = BTreeSet::new();
        let mut radios = BTreeSet::new();
        self.cells.iter().all(|c| {
            c.msf_slot_index < config.msf_slots()
                && c.channel_index < config.channels
                && c.sender != c.receiver
                && resources.insert((c.msf_slot_index, c.channel_index))
                && radios.insert((c.msf_slot_index, c.sender))
                && radios.insert((c.msf_slot_index, c.receiver))
        })
    }

    pub fn csv(&self) -> String {
        let mut out = String::from(GTS_CSV_HEADER);
        out.push('\n');
        for c in &self.cells {
            out.push_str(&format!("{},{},{},{}\n", c.msf_slot_index, c.channel_index, c.sender, c.receiver));
        }
        out
    }
}

struct Occupancy {
    channels: u32,
    cells: BTreeSet<(u32, u32)>,
    radios: BTreeSet<(u32, u32)>,
}

impl Occupancy {
    fn free_channel(&self, slot: u32, sender: u32, receiver: u32) -> Option<u32> {
        if self.radios.contains(&(slot, sender)) || self.radios.contains(&(slot, receiver)) {
            return None;
        }
        (0..self.channels).find(|ch| !self.cells.contains(&(slot, *ch)))
    }

    fn take(&mut self, slot: u32, channel: u32, sender: u32, receiver: u32) {
        self.cells.insert((slot, channel));
        self.radios.insert((slot, sender));
        self.radios.insert((slot, receiver));
    }
}

/// Greedy deterministic allocation. Flows are served in order of receiver
/// load (descending), then flow index; each takes the earliest free cells
/// honouring the single-radio constraint at both ends.
pub fn build_schedule(
    config: &SuperframeConfig,
    flows: &[Flow],
    slots_per_flow: u32,
    placement: CellPlacement,
) -> Result<GtsSchedule, ScheduleInfeasible> {
    assert!(slots_per_flow >= 1, "slots_per_flow must be >= 1");
    let slots = config.msf_slots();
    let mut load: BTreeMap<u32, u32> = BTreeMap::new();
    let mut radio_load: BTreeMap<u32, u32> = BTreeMap::new();
    for f in flows {
        *load.entry(f.receiver).or_default() += 1;
        *radio_load.entry(f.receiver).or_default() += slots_per_flow;
        *radio_load.entry(f.sender).or_default() += slots_per_flow;
    }
    // Pigeonhole: a radio cannot take part in more cells than there are slots.
    for (i, f) in flows.iter().enumerate() {
        for dev in [f.receiver, f.sender] {
            if radio_load[&dev] > slots {
                return Err(ScheduleInfeasible {
                    flow: i,
                    sender: f.sender,
                    receiver: f.receiver,
                    reason: format!(
                        "device {dev} needs {} cells but a multisuperframe has {slots} CFP slots",
                        radio_load[&dev]
                    ),
                });
            }
        }
    }
    if flows.len() as u64 * u64::from(slots_per_flow) > u64::from(slots) * u64::from(config.channels) {
        return Err(ScheduleInfeasible {
            flow: 0,
            sender: flows[0].sender,
            receiver: flows[0].receiver,
            reason: format!(
                "{} cells requested but only {} exist",
                flows.len() as u64 * u64::from(slots_per_flow),
                slots * config.channels
            ),
        });
    }

    let mut order: Vec<usize> = (0..flows.len()).collect();
    order.sort_by_key(|&i| (std::cmp::Reverse(load[&flows[i].receiver]), i));
    let mut occ = Occupancy {
        channels: config.channels,
        cells: BTreeSet::new(),
        radios: BTreeSet::new(),
    };
    let mut cells = Vec::new();
    for i in order {
        let f = flows[i];
        let picked = match placement {
            CellPlacement::Contiguous => contiguous(&occ, slots, slots_per_flow, f),
            CellPlacement::Spread => spread(&occ, slots, slots_per_flow, f),
        };
        let Some(picked) = picked else {
            return Err(ScheduleInfeasible {
                flow: i,
                sender: f.sender,
                receiver: f.receiver,
                reason: format!("no {slots_per_flow} free cells left with both radios idle"),
            });
        };
        for (slot, ch) in picked {
            occ.take(slot, ch, f.sender, f.receiver);
            cells.push(GtsCell {
                msf_slot_index: slot,
                channel_index: ch,
                sender: f.sender,
                receiver: f.receiver,
            });
        }
    }
    cells.sort();
    Ok(GtsSchedule { cells })
}

fn contiguous(occ: &Occupancy, slots: u32, k: u32, f: Flow) -> Option<Vec<(u32, u32)>> {
    (0..=slots.checked_sub(k)?).find_map(|start| {
        (start..start + k)
            .map(|s| occ.free_channel(s, f.sender, f.receiver).map(|ch| (s, ch)))
            .collect::<Option<Vec<_>>>()
    })
}

fn spread(occ: &Occupancy, slots: u32, k: u32, f: Flow) -> Option<Vec<(u32, u32)>> {
    let mut picked: Vec<(u32, u32)> = Vec::new();
    for j in 0..k {
        let target = j * slots / k;
        let hit = (0..slots).map(|d| (target + d) % slots).find_map(|s| {
            if picked.iter().any(|p| p.0 == s) {
                return None;
            }
            occ.free_channel(s, f.sender, f.receiver).map(|ch| (s, ch))
        })?;
        picked.push(hit);
    }
    Some(picked)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::scenario::{ScenarioConfig, Stack};
    use proptest::prelude::*;

    fn testbed_flows() -> Vec<Flow> {
        ScenarioConfig::testbed(Stack::DsmeLora, 10.0, 1).flows
    }

    #[test]
    fn testbed_is_feasible() {
        let cfg = SuperframeConfig::default();
        let s = build_schedule(&cfg, &testbed_flows(), 1, CellPlacement::Spread).unwrap();
        assert!(s.is_valid(&cfg));
        assert_eq!(s.cells.len(), 12);
        let slots: BTreeSet<u32> = s.rx_cells(0).map(|c| c.msf_slot_index).collect();
        assert_eq!(slots.len(), 6);
    }

    #[test]
    fn pigeonhole_on_receiver() {
        let flows: Vec<Flow> = (1..=8).map(|s| Flow { sender: s, receiver: 0 }).collect();
        let err = build_schedule(&SuperframeConfig::default(), &flows, 1, CellPlacement::Spread).unwrap_err();
        assert_eq!(err.receiver, 0);
        assert!(err.reason.contains("7 CFP slots"));
    }

    #[test]
    fn single_flow_takes_first_cell() {
        let s = build_schedule(
            &SuperframeConfig::default(),
            &[Flow { sender: 1, receiver: 0 }],
            1,
            CellPlacement::Spread,
        )
        .unwrap();
        assert_eq!(
            s.cells,
            vec![GtsCell { msf_slot_index: 0, channel_index: 0, sender: 1, receiver: 0 }]
        );
    }

    #[test]
    fn placements() {
        let cfg = SuperframeConfig::default();
        let f = [Flow { sender: 1, receiver: 0 }];
        let c = build_schedule(&cfg, &f, 3, CellPlacement::Contiguous).unwrap();
        let slots: Vec<u32> = c.cells.iter().map(|c| c.msf_slot_index).collect();
        assert_eq!(slots, vec![0, 1, 2]);
        let s = build_schedule(&cfg, &f, 3, CellPlacement::Spread).unwrap();
        let slots: Vec<u32> = s.cells.iter().map(|c| c.msf_slot_index).collect();
        assert_eq!(slots, vec![0, 2, 4]);
    }

    #[test]
    fn csv_dump() {
        let s = build_schedule(
            &SuperframeConfig::default(),
            &[Flow { sender: 4, receiver: 0 }],
            1,
            CellPlacement::Spread,
        )
        .unwrap();
        assert_eq!(s.csv(), "slot,channel,sender,receiver\n0,0,4,0\n");
    }

    proptest! {
        #[test]
        fn successful_schedules_are_valid(
            pairs in proptest::collection::vec((0u32..12, 0u32..12), 1..20),
            k in 1u32..3,
            contiguous in any::<bool>(),
        ) {
            let flows: Vec<Flow> = pairs
                .into_iter()
                .filter(|(a, b)| a != b)
                .map(|(sender, receiver)| Flow { sender, receiver })
                .collect();
            prop_assume!(!flows.is_empty());
            let cfg = SuperframeConfig::default();
            let placement = if contiguous { CellPlacement::Contiguous } else { CellPlacement::Spread };
            if let Ok(s) = build_schedule(&cfg, &flows, k, placement) {
                prop_assert!(s.is_valid(&cfg));
                prop_assert_eq!(s.cells.len(), flows.len() * k as usize);
                let again = build_schedule(&cfg, &flows, k, placement).unwrap();
                prop_assert_eq!(s, again);
            }
        }
    }
}
