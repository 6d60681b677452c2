use std::fmt;

use serde::{Deserialize, Serialize};

use super::time::{Duration, TimeInstant};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossCause {
    QueueDrop,
    UplinkCollision,
    GatewayBusy,
    DownlinkLoss,
    Deadline,
}

impl LossCause {
    pub const ALL: [LossCause; 5] = [
        LossCause::QueueDrop,
        LossCause::UplinkCollision,
        LossCause::GatewayBusy,
        LossCause::DownlinkLoss,
        LossCause::Deadline,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LossCause::QueueDrop => "queue-drop",
            LossCause::UplinkCollision => "uplink-collision",
            LossCause::GatewayBusy => "gateway-busy",
            LossCause::DownlinkLoss => "downlink-loss",
            LossCause::Deadline => "deadline",
        }
    }

    /// Losses that happen after the infrastructure already holds the packet.
    pub fn after_uplink(self) -> bool {
        matches!(self, LossCause::DownlinkLoss)
    }
}

impl fmt::Display for LossCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Outcome {
    Delivered(TimeInstant),
    Lost(LossCause),
    /// Still queued or on the air when the run ended.
    InFlight,
}

/// Ledger entry of one application packet.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PacketRecord {
    pub flow: usize,
    pub sender: u32,
    pub receiver: u32,
    pub t_sched: TimeInstant,
    /// Start of the sender's transmission, once it happened.
    pub uplink_start: Option<TimeInstant>,
    pub uplink_airtime: Option<Duration>,
    pub outcome: Outcome,
}

impl PacketRecord {
    pub fn new(flow: usize, sender: u32, receiver: u32, t_sched: TimeInstant) -> Self {
        PacketRecord {
            flow,
            sender,
            receiver,
            t_sched,
            uplink_start: None,
            uplink_airtime: None,
            outcome: Outcome::InFlight,
        }
    }

    pub fn delivered_at(&self) -> Option<TimeInstant> {
        match self.outcome {
            Outcome::Delivered(t) => Some(t),
            _ => None,
        }
    }

    pub fn loss_cause(&self) -> Option<LossCause> {
        match self.outcome {
            Outcome::Lost(c) => Some(c),
            _ => None,
        }
    }

    pub fn is_in_flight(&self) -> bool {
        self.outcome == Outcome::InFlight
    }

    pub fn completion(&self) -> Option<Duration> {
        self.delivered_at().map(|t| t - self.t_sched)
    }

    /// The infrastructure received the sender's frame.
    pub fn uplink_succeeded(&self) -> bool {
        match self.outcome {
            Outcome::Delivered(_) => true,
            Outcome::Lost(c) => c.after_uplink(),
            Outcome::InFlight => false,
        }
    }

    /// CSV row: flow, t_sched_us, t_deliv_us, loss_cause. In-flight packets
    /// have both last fields empty.
    pub fn csv_row(&self) -> String {
        let deliv = self.delivered_at().map(|t| t.as_micros().to_string()).unwrap_or_default();
        let cause = self.loss_cause().map(|c| c.as_str()).unwrap_or("");
        format!("{},{},{},{}", self.flow, self.t_sched.as_micros(), deliv, cause)
    }
}

pub const RECORDS_CSV_HEADER: &str = "flow,t_sched_us,t_deliv_us,loss_cause";

pub fn records_csv(records: &[PacketRecord]) -> String {
    let mut out = String::with_capacity(32 * (records.len() + 1));
    out.push_str(RECORDS_CSV_HEADER);
    out.push('\n');
    for r in records {
        out.push_str(&r.csv_row());
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_rows() {
        let mut r = PacketRecord::new(3, 4, 0, TimeInstant::from_micros(10));
        r.outcome = Outcome::Delivered(TimeInstant::from_micros(250));
        assert_eq!(r.csv_row(), "3,10,250,");
        r.outcome = Outcome::Lost(LossCause::GatewayBusy);
        assert_eq!(r.csv_row(), "3,10,,gateway-busy");
        r.outcome = Outcome::InFlight;
        assert_eq!(r.csv_row(), "3,10,,");
    }

    #[test]
    fn completion_is_delivery_minus_schedule() {
        let mut r = PacketRecord::new(0, 1, 0, TimeInstant::from_micros(1_000));
        assert_eq!(r.completion(), None);
        r.outcome = Outcome::Delivered(TimeInstant::from_micros(3_500));
        assert_eq!(r.completion(), Some(Duration::from_micros(2_500)));
        assert!(r.uplink_succeeded());
    }
}
