//! Metrics derived from packet ledgers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::record::{LossCause, PacketRecord};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricsError {
    #[error("no completed packet records")]
    Empty,
}

/// Right-continuous step function of completion time. Steps are 1/total,
/// so the final value equals the packet reception ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalCdf {
    /// (completion time in seconds, F at and after that time), one entry per
    /// distinct time, ascending.
    points: Vec<(f64, f64)>,
    total: usize,
}

impl EmpiricalCdf {
    pub fn from_samples(mut samples: Vec<f64>, total: usize) -> Result<Self, MetricsError> {
        if total == 0 {
            return Err(MetricsError::Empty);
        }
        assert!(samples.len() <= total, "more samples than packets");
        samples.sort_by(f64::total_cmp);
        let mut points: Vec<(f64, f64)> = Vec::new();
        for (k, t) in samples.iter().enumerate() {
            let f = (k + 1) as f64 / total as f64;
            match points.last_mut() {
                Some(last) if last.0 == *t => last.1 = f,
                _ => points.push((*t, f)),
            }
        }
        Ok(EmpiricalCdf { points, total })
    }

    pub fn at(&self, t_s: f64) -> f64 {
        match self.points.partition_point(|p| p.0 <= t_s) {
            0 => 0.0,
            i => self.points[i - 1].1,
        }
    }

    pub fn final_value(&self) -> f64 {
        self.points.last().map(|p| p.1).unwrap_or(0.0)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    pub fn total(&self) -> usize {
        self.total
    }

    pub fn is_monotone(&self) -> bool {
        self.points.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 <= w[1].1)
    }

    pub fn csv(&self) -> String {
        let mut out = String::from("t_s,F\n");
        for (t, f) in &self.points {
            out.push_str(&format!("{t:.6},{f:.9}\n"));
        }
        out
    }
}

fn counted(records: &[PacketRecord]) -> impl Iterator<Item = &PacketRecord> {
    records.iter().filter(|r| !r.is_in_flight())
}

/// Completion-time CDF over all packets that finished (delivered or lost).
pub fn completion_cdf(records: &[PacketRecord]) -> Result<EmpiricalCdf, MetricsError> {
    let total = counted(records).count();
    let samples = records
        .iter()
        .filter_map(|r| r.completion())
        .map(|d| d.as_secs_f64())
        .collect();
    EmpiricalCdf::from_samples(samples, total)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub scheduled: usize,
    pub delivered: usize,
    pub lost: usize,
    pub in_flight: usize,
    /// Delivered over scheduled-and-finished packets.
    pub prr: f64,
    pub data_extraction_ratio: f64,
    /// data_extraction_ratio - prr.
    pub delta: f64,
    /// Completion quantiles over delivered packets, seconds.
    pub completion_min_s: Option<f64>,
    pub completion_p50_s: Option<f64>,
    pub completion_p95_s: Option<f64>,
    pub completion_max_s: Option<f64>,
    pub loss_causes: BTreeMap<String, usize>,
}

/// Nearest-rank quantile of ascending `sorted`.
pub fn quantile(sorted: &[f64], q: f64) -> Option<f64> {
    if sorted.is_empty() {
        return None;
    }
    let rank = (q * sorted.len() as f64).ceil() as usize;
    Some(sorted[rank.clamp(1, sorted.len()) - 1])
}

pub fn summarize(records: &[PacketRecord]) -> MetricsReport {
    let scheduled = records.len();
    let in_flight = records.iter().filter(|r| r.is_in_flight()).count();
    let finished = scheduled - in_flight;
    let mut times: Vec<f64> = records
        .iter()
        .filter_map(|r| r.completion())
        .map(|d| d.as_secs_f64())
        .collect();
    times.sort_by(f64::total_cmp);
    let delivered = times.len();
    let uplinks = counted(records).filter(|r| r.uplink_succeeded()).count();
    let mut loss_causes: BTreeMap<String, usize> =
        LossCause::ALL.iter().map(|c| (c.as_str().to_string(), 0)).collect();
    for c in records.iter().filter_map(|r| r.loss_cause()) {
        *loss_causes.get_mut(c.as_str()).expect("listed") += 1;
    }
    let ratio = |n: usize| if finished == 0 { 0.0 } else { n as f64 / finished as f64 };
    let prr = ratio(delivered);
    let der = ratio(uplinks);
    MetricsReport {
        scheduled,
        delivered,
        lost: finished - delivered,
        in_flight,
        prr,
        data_extraction_ratio: der,
        delta: der - prr,
        completion_min_s: times.first().copied(),
        completion_p50_s: quantile(&times, 0.5),
        completion_p95_s: quantile(&times, 0.95),
        completion_max_s: times.last().copied(),
        loss_causes,
    }
}

/// Kolmogorov-Smirnov distance between the samples and the uniform law on [lo, hi].
pub fn ks_distance_uniform(samples: &[f64], lo: f64, hi: f64) -> f64 {
    assert!(hi > lo);
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len() as f64;
    s.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = ((x - lo) / (hi - lo)).clamp(0.0, 1.0);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::record::Outcome;
    use crate::engine::time::TimeInstant;
    use proptest::prelude::*;

    fn rec(sched_us: u64, outcome: Outcome) -> PacketRecord {
        let mut r = PacketRecord::new(0, 1, 0, TimeInstant::from_micros(sched_us));
        r.outcome = outcome;
        r
    }

    #[test]
    fn all_at_one_second() {
        let rs: Vec<_> = (0..4)
            .map(|i| rec(i * 10_000_000, Outcome::Delivered(TimeInstant::from_micros(i * 10_000_000 + 1_000_000))))
            .collect();
        let cdf = completion_cdf(&rs).unwrap();
        assert_eq!(cdf.at(0.999), 0.0);
        assert_eq!(cdf.at(1.0), 1.0);
        let m = summarize(&rs);
        assert_eq!((m.prr, m.data_extraction_ratio, m.delta), (1.0, 1.0, 0.0));
    }

    #[test]
    fn half_lost_plateaus() {
        let mut rs = Vec::new();
        for i in 0..10 {
            rs.push(rec(0, Outcome::Delivered(TimeInstant::from_micros(1000 + i))));
            rs.push(rec(0, Outcome::Lost(LossCause::UplinkCollision)));
        }
        let cdf = completion_cdf(&rs).unwrap();
        assert_eq!(cdf.final_value(), 0.5);
        let m = summarize(&rs);
        assert_eq!(m.prr, 0.5);
        assert_eq!(m.loss_causes["uplink-collision"], 10);
    }

    #[test]
    fn downlink_loss_opens_gap_and_in_flight_is_excluded() {
        let rs = vec![
            rec(0, Outcome::Delivered(TimeInstant::from_micros(5))),
            rec(0, Outcome::Lost(LossCause::DownlinkLoss)),
            rec(0, Outcome::Lost(LossCause::GatewayBusy)),
            rec(0, Outcome::InFlight),
        ];
        let m = summarize(&rs);
        assert_eq!(m.in_flight, 1);
        assert!((m.prr - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.data_extraction_ratio - 2.0 / 3.0).abs() < 1e-12);
        assert!(m.delta > 0.0);
    }

    #[test]
    fn empty_is_signalled() {
        assert_eq!(completion_cdf(&[]), Err(MetricsError::Empty));
        assert_eq!(completion_cdf(&[rec(0, Outcome::InFlight)]), Err(MetricsError::Empty));
    }

    #[test]
    fn ks_of_perfect_grid_is_small() {
        let xs: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        assert!(ks_distance_uniform(&xs, 0.0, 1.0) <= 0.0005 + 1e-12);
        assert!(ks_distance_uniform(&xs, 0.5, 1.5) > 0.4);
    }

    proptest! {
        #[test]
        fn cdf_final_value_is_prr(delays in proptest::collection::vec(proptest::option::of(1u64..5_000_000), 1..200)) {
            let rs: Vec<_> = delays
                .iter()
                .map(|d| match d {
                    Some(us) => rec(0, Outcome::Delivered(TimeInstant::from_micros(*us))),
                    None => rec(0, Outcome::Lost(LossCause::QueueDrop)),
                })
                .collect();
            let cdf = completion_cdf(&rs).unwrap();
            prop_assert!(cdf.is_monotone());
            prop_assert!((cdf.final_value() - summarize(&rs).prr).abs() < 1e-12);
            let m = summarize(&rs);
            prop_assert!(m.prr <= m.data_extraction_ratio);
        }
    }
}
