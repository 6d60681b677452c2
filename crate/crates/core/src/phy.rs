//! LoRa physical layer: time on air and the collision rules used by both
//! simulators.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::engine::time::{Duration, TimeInstant};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PhyError {
    #[error("spreading factor {0} outside 7..=12")]
    SpreadingFactor(u8),
    #[error("bandwidth {0} Hz not one of 125000, 250000, 500000")]
    Bandwidth(u32),
    #[error("coding rate {0} outside 1..=4")]
    CodingRate(u8),
    #[error("PHY payload of {0} bytes exceeds 255")]
    PayloadTooLarge(usize),
}

/// LoRa modem settings.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhyParams {
    pub spreading_factor: u8,
    pub bandwidth_hz: u32,
    /// Coding rate 4/(4+cr).
    pub coding_rate: u8,
    pub preamble_symbols: u16,
    pub explicit_header: bool,
    pub crc_on: bool,
    pub low_datarate_optimize: bool,
}

impl Default for PhyParams {
    /// SF7BW125, CR 4/5, 8 preamble symbols, explicit header, CRC on.
    /// This is data rate 5 in the EU868 region.
    fn default() -> Self {
        PhyParams {
            spreading_factor: 7,
            bandwidth_hz: 125_000,
            coding_rate: 1,
            preamble_symbols: 8,
            explicit_header: true,
            crc_on: true,
            low_datarate_optimize: false,
        }
    }
}

impl PhyParams {
    /// LoRaWAN downlinks carry no payload CRC.
    pub fn downlink(self) -> Self {
        PhyParams {
            crc_on: false,
            ..self
        }
    }

    pub fn validate(&self) -> Result<(), PhyError> {
        if !(7..=12).contains(&self.spreading_factor) {
            return Err(PhyError::SpreadingFactor(self.spreading_factor));
        }
        if !matches!(self.bandwidth_hz, 125_000 | 250_000 | 500_000) {
            return Err(PhyError::Bandwidth(self.bandwidth_hz));
        }
        if !(1..=4).contains(&self.coding_rate) {
            return Err(PhyError::CodingRate(self.coding_rate));
        }
        Ok(())
    }

    /// Symbol duration 2^SF / BW. Exact in microseconds for every supported pair.
    pub fn symbol_time(&self) -> Result<Duration, PhyError> {
        self.validate()?;
        let per_chip_us = 1_000_000 / u64::from(self.bandwidth_hz);
        Ok(Duration::from_micros(
            (1u64 << self.spreading_factor) * per_chip_us,
        ))
    }

    /// Number of payload symbols (header and CRC included, preamble excluded).
    pub fn payload_symbols(&self, phy_payload_bytes: usize) -> Result<u64, PhyError> {
        self.validate()?;
        if phy_payload_bytes > 255 {
            return Err(PhyError::PayloadTooLarge(phy_payload_bytes));
        }
        let sf = i64::from(self.spreading_factor);
        let numerator = 8 * phy_payload_bytes as i64 - 4 * sf
            + 28
            + if self.crc_on { 16 } else { 0 }
            - if self.explicit_header { 0 } else { 20 };
        let de = i64::from(self.low_datarate_optimize);
        let denominator = 4 * (sf - 2 * de);
        let blocks = if numerator > 0 {
            (numerator + denominator - 1) / denominator
        } else {
            0
        };
        Ok(8 + (blocks * (i64::from(self.coding_rate) + 4)) as u64)
    }
}

/// Time on air of a LoRa frame: (preamble + 4.25) symbols plus the payload symbols.
pub fn time_on_air(phy: &PhyParams, phy_payload_bytes: usize) -> Result<Duration, PhyError> {
    let tsym = phy.symbol_time()?.as_micros();
    let payload = phy.payload_symbols(phy_payload_bytes)?;
    // (n + 4.25) * tsym, with tsym always a multiple of 4 us.
    let preamble_us = u64::from(phy.preamble_symbols) * tsym + (17 * tsym) / 4;
    Ok(Duration::from_micros(preamble_us + payload * tsym))
}

/// One frame on the air.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Transmission {
    pub start: TimeInstant,
    pub airtime: Duration,
    pub channel_hz: u32,
    pub sf: u8,
    pub tx_power_dbm: f64,
    pub source: u32,
}

impl Transmission {
    pub fn end(&self) -> TimeInstant {
        self.start + self.airtime
    }

    /// Half-open interval intersection, ignoring channel and SF.
    pub fn intersects_in_time(&self, other: &Transmission) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

/// True iff the frames share channel and SF and their [start, end) intervals intersect.
pub fn overlaps(a: &Transmission, b: &Transmission) -> bool {
    a.channel_hz == b.channel_hz && a.sf == b.sf && a.intersects_in_time(b)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RxOutcome {
    Ok,
    Lost,
}

/// Collision model at a single receiver.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CaptureModel {
    pub enabled: bool,
    pub threshold_db: f64,
}

impl Default for CaptureModel {
    fn default() -> Self {
        CaptureModel {
            enabled: false,
            threshold_db: 6.0,
        }
    }
}

impl CaptureModel {
    /// Outcome of `target` given the other frames present at the same receiver.
    pub fn outcome<'a>(
        &self,
        target: &Transmission,
        others: impl IntoIterator<Item = &'a Transmission>,
    ) -> RxOutcome {
        let mut interferers = others.into_iter().filter(|o| overlaps(target, o)).peekable();
        if interferers.peek().is_none() {
            return RxOutcome::Ok;
        }
        if !self.enabled {
            return RxOutcome::Lost;
        }
        if interferers.all(|o| target.tx_power_dbm - o.tx_power_dbm >= self.threshold_db) {
            RxOutcome::Ok
        } else {
            RxOutcome::Lost
        }
    }
}

/// Resolves every frame in `concurrent` against all the others.
pub fn resolve_collisions(
    concurrent: &[Transmission],
    capture_enabled: bool,
    capture_threshold_db: f64,
) -> Vec<RxOutcome> {
    let model = CaptureModel {
        enabled: capture_enabled,
        threshold_db: capture_threshold_db,
    };
    concurrent
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let others = concurrent
                .iter()
                .enumerate()
                .filter(move |(j, _)| *j != i)
                .map(|(_, o)| o);
            model.outcome(t, others)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Independent evaluation of the modem formula in floating point.
    fn toa_oracle_ms(sf: u32, bw: f64, cr: u32, preamble: u32, crc: bool, ih: bool, de: bool, pl: u32) -> f64 {
        let tsym = (2f64).powi(sf as i32) / bw * 1000.0;
        let tpre = (preamble as f64 + 4.25) * tsym;
        let num = 8.0 * pl as f64 - 4.0 * sf as f64 + 28.0 + if crc { 16.0 } else { 0.0 }
            - if ih { 20.0 } else { 0.0 };
        let den = 4.0 * (sf as f64 - if de { 2.0 } else { 0.0 });
        let n = 8.0 + ((num / den).ceil() * (cr as f64 + 4.0)).max(0.0);
        tpre + n * tsym
    }

    #[test]
    fn empty_payload_sf7() {
        let toa = time_on_air(&PhyParams::default(), 0).unwrap();
        assert_eq!(toa.as_micros(), 25_856);
        assert_eq!(PhyParams::default().payload_symbols(0).unwrap(), 13);
    }

    #[test]
    fn reference_payloads_sf7() {
        let phy = PhyParams::default();
        assert_eq!(time_on_air(&phy, 40).unwrap().as_micros(), 82_176);
        assert_eq!(time_on_air(&phy, 56).unwrap().as_micros(), 107_776);
        assert!((time_on_air(&phy, 56).unwrap().as_millis_f64() - 108.0).abs() < 1.0);
        assert!(time_on_air(&phy, 10).unwrap() < time_on_air(&phy, 20).unwrap());
    }

    #[test]
    fn downlink_drops_crc_bits() {
        let up = PhyParams::default();
        // 14 B needs one block less without the CRC; 36 B does not.
        assert!(time_on_air(&up.downlink(), 14).unwrap() < time_on_air(&up, 14).unwrap());
        assert_eq!(time_on_air(&up.downlink(), 36).unwrap(), time_on_air(&up, 36).unwrap());
    }

    #[test]
    fn rejects_bad_parameters() {
        let mut p = PhyParams::default();
        p.spreading_factor = 6;
        assert_eq!(time_on_air(&p, 1), Err(PhyError::SpreadingFactor(6)));
        let mut p = PhyParams::default();
        p.bandwidth_hz = 62_500;
        assert_eq!(time_on_air(&p, 1), Err(PhyError::Bandwidth(62_500)));
        assert_eq!(
            time_on_air(&PhyParams::default(), 256),
            Err(PhyError::PayloadTooLarge(256))
        );
    }

    fn tx(start: u64, len: u64, ch: u32, power: f64) -> Transmission {
        Transmission {
            start: TimeInstant::from_micros(start),
            airtime: Duration::from_micros(len),
            channel_hz: ch,
            sf: 7,
            tx_power_dbm: power,
            source: 0,
        }
    }

    #[test]
    fn overlap_rules() {
        assert!(!overlaps(&tx(0, 10, 1, 14.0), &tx(10, 10, 1, 14.0)));
        assert!(!overlaps(&tx(0, 10, 1, 14.0), &tx(0, 10, 2, 14.0)));
        assert!(overlaps(&tx(0, 100, 1, 14.0), &tx(20, 10, 1, 14.0)));
        let mut other_sf = tx(0, 10, 1, 14.0);
        other_sf.sf = 9;
        assert!(!overlaps(&tx(0, 10, 1, 14.0), &other_sf));
    }

    #[test]
    fn collision_examples() {
        let both = [tx(0, 100, 1, 14.0), tx(50, 100, 1, 14.0)];
        assert_eq!(resolve_collisions(&both, false, 6.0), vec![RxOutcome::Lost; 2]);

        let strong_weak = [tx(0, 100, 1, 14.0), tx(50, 100, 1, 2.0)];
        assert_eq!(
            resolve_collisions(&strong_weak, true, 6.0),
            vec![RxOutcome::Ok, RxOutcome::Lost]
        );

        let close = [tx(0, 100, 1, 14.0), tx(50, 100, 1, 10.0)];
        assert_eq!(resolve_collisions(&close, true, 6.0), vec![RxOutcome::Lost; 2]);

        let lone = [tx(0, 100, 1, 14.0), tx(200, 100, 1, 14.0)];
        assert_eq!(resolve_collisions(&lone, false, 6.0), vec![RxOutcome::Ok; 2]);
    }

    proptest! {
        #[test]
        fn matches_float_oracle(sf in 7u32..=12, bwi in 0usize..3, cr in 1u32..=4, pre in 6u32..=16,
                                crc: bool, explicit: bool, de: bool, pl in 0u32..=255) {
            let bw = [125_000u32, 250_000, 500_000][bwi];
            let phy = PhyParams {
                spreading_factor: sf as u8, bandwidth_hz: bw, coding_rate: cr as u8,
                preamble_symbols: pre as u16, explicit_header: explicit, crc_on: crc,
                low_datarate_optimize: de,
            };
            let got = time_on_air(&phy, pl as usize).unwrap().as_micros() as f64 / 1000.0;
            let want = toa_oracle_ms(sf, bw as f64, cr, pre, crc, !explicit, de, pl);
            prop_assert!((got - want).abs() < 1e-6, "{got} vs {want}");
        }

        #[test]
        fn toa_never_decreases(pl in 0usize..255) {
            let phy = PhyParams::default();
            prop_assert!(time_on_air(&phy, pl + 1).unwrap() >= time_on_air(&phy, pl).unwrap());
        }

        #[test]
        fn overlaps_is_symmetric(a in 0u64..1000, la in 1u64..500, b in 0u64..1000, lb in 1u64..500,
                                 ca in 0u32..2, cb in 0u32..2) {
            let x = tx(a, la, ca, 14.0);
            let y = tx(b, lb, cb, 14.0);
            prop_assert_eq!(overlaps(&x, &y), overlaps(&y, &x));
        }

        #[test]
        fn no_capture_outcome_is_permutation_invariant(
            frames in proptest::collection::vec((0u64..1000, 1u64..300, 0u32..3), 1..8),
            rot in 0usize..8,
        ) {
            let txs: Vec<_> = frames.iter().enumerate()
                .map(|(i, (s, l, c))| { let mut t = tx(*s, *l, *c, 14.0); t.source = i as u32; t })
                .collect();
            let base = resolve_collisions(&txs, false, 6.0);
            let mut rotated = txs.clone();
            let k = rot % rotated.len();
            rotated.rotate_left(k);
            let rotated_out = resolve_collisions(&rotated, false, 6.0);
            for (t, o) in rotated.iter().zip(rotated_out) {
                prop_assert_eq!(base[t.source as usize], o);
            }
        }
    }
}
