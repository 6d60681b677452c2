//! Frame-size accounting for SCHC over LoRaWAN and 6LoWPAN over IEEE 802.15.4.
//!
//! Only lengths are computed; no octets are produced. Both simulators take
//! their payload sizes from here.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::phy::{time_on_air, PhyError, PhyParams};

pub const IPV6_HEADER_BYTES: usize = 40;
pub const UDP_HEADER_BYTES: usize = 8;
pub const COAP_FIXED_HEADER_BYTES: usize = 4;
pub const COAP_URI_PATH: u16 = 11;

/// MHDR 1 + DevAddr 4 + FCtrl 1 + FCnt 2 + FPort 1 + MIC 4, no FOpts.
pub const LORAWAN_L2_BYTES: usize = 13;
/// A LoRaWAN frame without FRMPayload omits FPort.
pub const LORAWAN_EMPTY_FRAME_BYTES: usize = LORAWAN_L2_BYTES - 1;
/// FCF 2 + seq 1 + PAN 2 + dst 2 + src 2 (intra-PAN short addressing) + FCS 2.
pub const IEEE802154_L2_BYTES: usize = 9 + 2;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Ipv6Fields {
    pub src_context: u8,
    pub dst_context: u8,
    pub traffic_class: u8,
    pub flow_label: u32,
    pub hop_limit: u8,
}

impl Default for Ipv6Fields {
    fn default() -> Self {
        Ipv6Fields {
            src_context: 0,
            dst_context: 0,
            traffic_class: 0,
            flow_label: 0,
            hop_limit: 64,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct UdpPorts {
    pub src_port: u16,
    pub dst_port: u16,
}

impl Default for UdpPorts {
    fn default() -> Self {
        UdpPorts {
            src_port: 5683,
            dst_port: 5683,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoapOption {
    pub number: u16,
    pub length: usize,
}

/// CoAP message header of a non-confirmable POST.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CoapHeader {
    pub token_length: u8,
    pub message_id: u16,
    pub options: Vec<CoapOption>,
}

impl Default for CoapHeader {
    fn default() -> Self {
        CoapHeader {
            token_length: 1,
            message_id: 0,
            options: vec![CoapOption {
                number: COAP_URI_PATH,
                length: 4,
            }],
        }
    }
}

/// Extra bytes needed to encode an option delta or length nibble value.
fn extended_nibble_bytes(v: usize) -> usize {
    match v {
        0..=12 => 0,
        13..=268 => 1,
        _ => 2,
    }
}

impl CoapHeader {
    /// Encoded size of the option list (delta encoding, sorted by number).
    pub fn options_bytes(&self) -> usize {
        let mut opts = self.options.clone();
        opts.sort_by_key(|o| o.number);
        let mut prev = 0u16;
        opts.iter()
            .map(|o| {
                let delta = usize::from(o.number - prev);
                prev = o.number;
                1 + extended_nibble_bytes(delta) + extended_nibble_bytes(o.length) + o.length
            })
            .sum()
    }

    pub fn header_bytes(&self) -> usize {
        COAP_FIXED_HEADER_BYTES + usize::from(self.token_length) + self.options_bytes()
    }
}

/// The application packet whose headers are compressed.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PacketTemplate {
    pub ipv6: Ipv6Fields,
    pub udp: UdpPorts,
    pub coap: CoapHeader,
    pub payload_bytes: usize,
}

impl Default for PacketTemplate {
    /// 12-byte CoAP NON POST with a 1-byte token and a 4-byte Uri-Path.
    fn default() -> Self {
        PacketTemplate {
            ipv6: Ipv6Fields::default(),
            udp: UdpPorts::default(),
            coap: CoapHeader::default(),
            payload_bytes: 12,
        }
    }
}

/// Application payload of the testbed frames. With the default headers this
/// gives a 56 B SCHC frame (107.8 ms) and a 63 B 6LoWPAN frame (118.0 ms).
pub const TESTBED_PAYLOAD_BYTES: usize = 32;

impl PacketTemplate {
    /// Template used by the testbed scenarios.
    pub fn testbed() -> Self {
        Self::with_payload(TESTBED_PAYLOAD_BYTES)
    }

    pub fn with_payload(payload_bytes: usize) -> Self {
        PacketTemplate {
            payload_bytes,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.coap.token_length > 8 {
            return Err(format!("token length {} > 8", self.coap.token_length));
        }
        if self.ipv6.src_context > 15 || self.ipv6.dst_context > 15 {
            return Err("6LoWPAN context ids must be < 16".into());
        }
        Ok(())
    }
}

/// Uncompressed header sizes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeaderSizes {
    pub ipv6: usize,
    pub udp: usize,
    pub coap: usize,
    /// 0xFF marker preceding a non-empty CoAP payload.
    pub payload_marker: usize,
    pub payload: usize,
}

impl HeaderSizes {
    pub fn ip_udp(&self) -> usize {
        self.ipv6 + self.udp
    }

    pub fn upper(&self) -> usize {
        self.coap + self.payload_marker
    }
}

pub fn uncompressed_sizes(template: &PacketTemplate) -> HeaderSizes {
    HeaderSizes {
        ipv6: IPV6_HEADER_BYTES,
        udp: UDP_HEADER_BYTES,
        coap: template.coap.header_bytes(),
        payload_marker: usize::from(template.payload_bytes > 0),
        payload: template.payload_bytes,
    }
}

/// Byte layout of one link-layer frame.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FrameLayout {
    pub l2_header_bytes: usize,
    /// In-payload compression residue (SCHC) or IPHC+NHC headers (6LoWPAN).
    pub adaptation_bytes: usize,
    /// Uncompressed upper-layer header (CoAP and payload marker).
    pub upper_header_bytes: usize,
    pub payload_bytes: usize,
    /// Bytes that stand in for the IPv6+UDP headers on the air.
    pub compressed_ip_udp_bytes: usize,
    pub uncompressed_ip_udp_bytes: usize,
    /// False when the packet could not use the intended compression.
    pub compressed: bool,
}

impl FrameLayout {
    pub fn total_phy_payload(&self) -> usize {
        self.l2_header_bytes + self.adaptation_bytes + self.upper_header_bytes + self.payload_bytes
    }

    pub fn compression_ratio(&self) -> f64 {
        self.uncompressed_ip_udp_bytes as f64 / self.compressed_ip_udp_bytes as f64
    }

    /// Empty-payload LoRaWAN uplink used by class A devices to poll.
    pub fn lorawan_poll() -> Self {
        FrameLayout {
            l2_header_bytes: LORAWAN_EMPTY_FRAME_BYTES,
            adaptation_bytes: 0,
            upper_header_bytes: 0,
            payload_bytes: 0,
            compressed_ip_udp_bytes: 0,
            uncompressed_ip_udp_bytes: 0,
            compressed: true,
        }
    }
}

// ---------------------------------------------------------------- SCHC

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchcField {
    Ipv6Version,
    Ipv6TrafficClass,
    Ipv6FlowLabel,
    Ipv6PayloadLength,
    Ipv6NextHeader,
    Ipv6HopLimit,
    Ipv6SrcPrefix,
    Ipv6SrcIid,
    Ipv6DstPrefix,
    Ipv6DstIid,
    UdpSrcPort,
    UdpDstPort,
    UdpLength,
    UdpChecksum,
}

impl SchcField {
    pub fn bits(self) -> usize {
        match self {
            SchcField::Ipv6Version => 4,
            SchcField::Ipv6TrafficClass => 8,
            SchcField::Ipv6FlowLabel => 20,
            SchcField::Ipv6PayloadLength => 16,
            SchcField::Ipv6NextHeader => 8,
            SchcField::Ipv6HopLimit => 8,
            SchcField::Ipv6SrcPrefix
            | SchcField::Ipv6SrcIid
            | SchcField::Ipv6DstPrefix
            | SchcField::Ipv6DstIid => 64,
            SchcField::UdpSrcPort
            | SchcField::UdpDstPort
            | SchcField::UdpLength
            | SchcField::UdpChecksum => 16,
        }
    }

    fn value_of(self, t: &PacketTemplate) -> Option<u64> {
        Some(match self {
            SchcField::Ipv6Version => 6,
            SchcField::Ipv6TrafficClass => u64::from(t.ipv6.traffic_class),
            SchcField::Ipv6FlowLabel => u64::from(t.ipv6.flow_label),
            SchcField::Ipv6NextHeader => 17,
            SchcField::Ipv6HopLimit => u64::from(t.ipv6.hop_limit),
            SchcField::Ipv6SrcPrefix | SchcField::Ipv6SrcIid => u64::from(t.ipv6.src_context),
            SchcField::Ipv6DstPrefix | SchcField::Ipv6DstIid => u64::from(t.ipv6.dst_context),
            SchcField::UdpSrcPort => u64::from(t.udp.src_port),
            SchcField::UdpDstPort => u64::from(t.udp.dst_port),
            SchcField::Ipv6PayloadLength | SchcField::UdpLength | SchcField::UdpChecksum => {
                return None
            }
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MatchingOperator {
    Equal,
    Ignore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CompressionAction {
    NotSent,
    ValueSent,
    Compute,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldDescriptor {
    pub field: SchcField,
    pub target: u64,
    pub mo: MatchingOperator,
    pub cda: CompressionAction,
}

/// A single compression rule covering IPv6 and UDP. CoAP is carried as is.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchcRule {
    pub rule_id: u8,
    pub fields: Vec<FieldDescriptor>,
}

impl SchcRule {
    /// Rule that elides every IPv6 and UDP field of `template`.
    pub fn full_elision(rule_id: u8, template: &PacketTemplate) -> Self {
        use CompressionAction::*;
        use SchcField::*;
        let all = [
            Ipv6Version,
            Ipv6TrafficClass,
            Ipv6FlowLabel,
            Ipv6PayloadLength,
            Ipv6NextHeader,
            Ipv6HopLimit,
            Ipv6SrcPrefix,
            Ipv6SrcIid,
            Ipv6DstPrefix,
            Ipv6DstIid,
            UdpSrcPort,
            UdpDstPort,
            UdpLength,
            UdpChecksum,
        ];
        let fields = all
            .into_iter()
            .map(|f| match f.value_of(template) {
                Some(v) => FieldDescriptor {
                    field: f,
                    target: v,
                    mo: MatchingOperator::Equal,
                    cda: NotSent,
                },
                None => FieldDescriptor {
                    field: f,
                    target: 0,
                    mo: MatchingOperator::Ignore,
                    cda: Compute,
                },
            })
            .collect();
        SchcRule { rule_id, fields }
    }

    pub fn matches(&self, template: &PacketTemplate) -> bool {
        self.fields.iter().all(|d| match d.mo {
            MatchingOperator::Ignore => true,
            MatchingOperator::Equal => d.field.value_of(template) == Some(d.target),
        })
    }

    pub fn residue_bits(&self) -> usize {
        self.fields
            .iter()
            .filter(|d| d.cda == CompressionAction::ValueSent)
            .map(|d| d.field.bits())
            .sum()
    }
}

/// SCHC over LoRaWAN. The Rule ID travels in FPort, which is part of the
/// LoRaWAN header, so a fully eliding rule leaves no in-payload residue.
/// A mismatching template falls back to the no-compression rule.
pub fn schc_frame(template: &PacketTemplate, rule: &SchcRule) -> FrameLayout {
    let sizes = uncompressed_sizes(template);
    let (adaptation, compressed) = if rule.matches(template) {
        (rule.residue_bits().div_ceil(8), true)
    } else {
        (sizes.ip_udp(), false)
    };
    FrameLayout {
        l2_header_bytes: LORAWAN_L2_BYTES,
        adaptation_bytes: adaptation,
        upper_header_bytes: sizes.upper(),
        payload_bytes: sizes.payload,
        // The FPort byte carrying the Rule ID stands in for the headers.
        compressed_ip_udp_bytes: adaptation + 1,
        uncompressed_ip_udp_bytes: sizes.ip_udp(),
        compressed,
    }
}

// ---------------------------------------------------------------- 6LoWPAN

/// 6LoWPAN context table; an entry lets IPHC elide the whole address.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SixlowpanContext {
    pub entries: BTreeMap<u8, String>,
}

impl SixlowpanContext {
    pub fn with_ids(ids: &[u8]) -> Self {
        SixlowpanContext {
            entries: ids
                .iter()
                .map(|id| (*id, format!("2001:db8:{id:x}::/64")))
                .collect(),
        }
    }

    pub fn covers(&self, id: u8) -> bool {
        self.entries.contains_key(&id)
    }
}

impl Default for SixlowpanContext {
    fn default() -> Self {
        Self::with_ids(&[0])
    }
}

/// Per-part breakdown of the IPHC + NHC-UDP encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct IphcBreakdown {
    pub base: usize,
    pub cid: usize,
    pub traffic_flow: usize,
    pub hop_limit: usize,
    pub src_addr: usize,
    pub dst_addr: usize,
    pub nhc_udp: usize,
    pub ports: usize,
    pub checksum: usize,
}

impl IphcBreakdown {
    pub fn total(&self) -> usize {
        self.base
            + self.cid
            + self.traffic_flow
            + self.hop_limit
            + self.src_addr
            + self.dst_addr
            + self.nhc_udp
            + self.ports
            + self.checksum
    }
}

fn udp_port_bytes(src: u16, dst: u16) -> usize {
    let nibble = |p: u16| p & 0xFFF0 == 0xF0B0;
    let byte = |p: u16| p & 0xFF00 == 0xF000;
    if nibble(src) && nibble(dst) {
        1
    } else if byte(dst) || byte(src) {
        3
    } else {
        4
    }
}

pub fn iphc_breakdown(template: &PacketTemplate, context: &SixlowpanContext) -> IphcBreakdown {
    let ip = &template.ipv6;
    let traffic_flow = match (ip.traffic_class, ip.flow_label) {
        (0, 0) => 0,
        (_, 0) => 1,
        // ECN only plus a flow label.
        (tc, _) if tc & 0xFC == 0 => 3,
        _ => 4,
    };
    let hop_limit = usize::from(!matches!(ip.hop_limit, 1 | 64 | 255));
    let addr = |id: u8| if context.covers(id) { 0 } else { 16 };
    let cid = usize::from(
        (context.covers(ip.src_context) && ip.src_context != 0)
            || (context.covers(ip.dst_context) && ip.dst_context != 0),
    );
    IphcBreakdown {
        base: 2,
        cid,
        traffic_flow,
        hop_limit,
        src_addr: addr(ip.src_context),
        dst_addr: addr(ip.dst_context),
        nhc_udp: 1,
        ports: udp_port_bytes(template.udp.src_port, template.udp.dst_port),
        checksum: 2,
    }
}

/// 6LoWPAN (IPHC + NHC-UDP) in an IEEE 802.15.4 data frame. Fields that
/// cannot be elided fall back to inline encodings; this never fails.
pub fn sixlowpan_frame(template: &PacketTemplate, context: &SixlowpanContext) -> FrameLayout {
    let sizes = uncompressed_sizes(template);
    let iphc = iphc_breakdown(template, context);
    FrameLayout {
        l2_header_bytes: IEEE802154_L2_BYTES,
        adaptation_bytes: iphc.total(),
        upper_header_bytes: sizes.upper(),
        payload_bytes: sizes.payload,
        compressed_ip_udp_bytes: iphc.total(),
        uncompressed_ip_udp_bytes: sizes.ip_udp(),
        compressed: iphc.src_addr == 0 && iphc.dst_addr == 0,
    }
}

/// Side-by-side comparison of both stacks for one packet.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameReport {
    pub template: PacketTemplate,
    pub schc: FrameLayout,
    pub sixlowpan: FrameLayout,
    pub schc_total_bytes: usize,
    pub sixlowpan_total_bytes: usize,
    pub schc_ratio: f64,
    pub sixlowpan_ratio: f64,
    pub toa_schc_ms: f64,
    pub toa_6lo_ms: f64,
    pub poll_bytes: usize,
    pub toa_poll_ms: f64,
}

pub fn compare(
    template: &PacketTemplate,
    rule: &SchcRule,
    context: &SixlowpanContext,
    phy: &PhyParams,
) -> Result<FrameReport, PhyError> {
    let schc = schc_frame(template, rule);
    let sixlowpan = sixlowpan_frame(template, context);
    let poll = FrameLayout::lorawan_poll();
    Ok(FrameReport {
        template: template.clone(),
        schc,
        sixlowpan,
        schc_total_bytes: schc.total_phy_payload(),
        sixlowpan_total_bytes: sixlowpan.total_phy_payload(),
        schc_ratio: schc.compression_ratio(),
        sixlowpan_ratio: sixlowpan.compression_ratio(),
        toa_schc_ms: time_on_air(phy, schc.total_phy_payload())?.as_millis_f64(),
        toa_6lo_ms: time_on_air(phy, sixlowpan.total_phy_payload())?.as_millis_f64(),
        poll_bytes: poll.total_phy_payload(),
        toa_poll_ms: time_on_air(phy, poll.total_phy_payload())?.as_millis_f64(),
    })
}

/// [`compare`] with the default template, a fully eliding rule, and SF7BW125.
pub fn default_report() -> FrameReport {
    let t = PacketTemplate::default();
    compare(
        &t,
        &SchcRule::full_elision(1, &t),
        &SixlowpanContext::default(),
        &PhyParams::default(),
    )
    .expect("default PHY parameters are valid")
}

/// [`compare`] for the testbed template.
pub fn testbed_report() -> FrameReport {
    let t = PacketTemplate::testbed();
    compare(
        &t,
        &SchcRule::full_elision(1, &t),
        &SixlowpanContext::default(),
        &PhyParams::default(),
    )
    .expect("default PHY parameters are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn uncompressed_baseline() {
        let s = uncompressed_sizes(&PacketTemplate::default());
        assert_eq!(s.ip_udp(), 48);
        // 4 fixed + 1 token + (1 option header + 4 value)
        assert_eq!(s.coap, 10);
        assert_eq!(s.payload, 12);
        assert_eq!(s.payload_marker, 1);
        assert_eq!(uncompressed_sizes(&PacketTemplate::with_payload(0)).payload_marker, 0);
    }

    #[test]
    fn coap_extended_option_delta() {
        let coap = CoapHeader {
            token_length: 0,
            message_id: 0,
            // Content-Format (12) then Uri-Query (15) with a 20-byte value.
            options: vec![
                CoapOption { number: 15, length: 20 },
                CoapOption { number: 12, length: 1 },
            ],
        };
        // (1 + 1) + (1 + 1 ext len + 20) with delta 3
        assert_eq!(coap.options_bytes(), 2 + 22);
        let far = CoapHeader {
            token_length: 0,
            message_id: 0,
            options: vec![CoapOption { number: 60, length: 0 }],
        };
        assert_eq!(far.options_bytes(), 2);
    }

    #[test]
    fn schc_default_layout() {
        let t = PacketTemplate::default();
        let f = schc_frame(&t, &SchcRule::full_elision(1, &t));
        assert!(f.compressed);
        assert_eq!(f.l2_header_bytes, 13);
        assert_eq!(f.adaptation_bytes, 0);
        assert_eq!(f.upper_header_bytes, 11);
        assert_eq!(f.total_phy_payload(), 13 + 0 + 11 + 12);
        assert_eq!(f.compressed_ip_udp_bytes, 1);
        assert_eq!(f.compression_ratio(), 48.0);
    }

    #[test]
    fn schc_mismatch_falls_back() {
        let t = PacketTemplate::default();
        let rule = SchcRule::full_elision(1, &t);
        let mut other = t.clone();
        other.udp.dst_port = 1234;
        let f = schc_frame(&other, &rule);
        assert!(!f.compressed);
        assert_eq!(f.adaptation_bytes, 48);
    }

    #[test]
    fn schc_value_sent_residue() {
        let t = PacketTemplate::default();
        let mut rule = SchcRule::full_elision(1, &t);
        for d in rule.fields.iter_mut().filter(|d| d.field == SchcField::Ipv6HopLimit) {
            d.mo = MatchingOperator::Ignore;
            d.cda = CompressionAction::ValueSent;
        }
        assert_eq!(schc_frame(&t, &rule).adaptation_bytes, 1);
    }

    #[test]
    fn poll_frame_is_bare_mac_header() {
        let poll = FrameLayout::lorawan_poll();
        assert_eq!(poll.total_phy_payload(), 12);
        let phy = PhyParams::default();
        // Omitting FPort saves one coding block.
        assert_eq!(time_on_air(&phy, 12).unwrap().as_micros(), 41_216);
        assert!(time_on_air(&phy, 12).unwrap() < time_on_air(&phy, 13).unwrap());
    }

    #[test]
    fn sixlowpan_default_layout() {
        let t = PacketTemplate::default();
        let f = sixlowpan_frame(&t, &SixlowpanContext::default());
        // IPHC 2 + NHC 1 + inline ports 4 + checksum 2
        assert_eq!(f.adaptation_bytes, 9);
        assert_eq!(f.l2_header_bytes, 11);
        assert_eq!(f.total_phy_payload(), 11 + 9 + 11 + 12);
        assert!(f.compressed);
    }

    #[test]
    fn sixlowpan_nibble_ports() {
        let mut t = PacketTemplate::default();
        t.udp = UdpPorts { src_port: 0xF0B1, dst_port: 0xF0B2 };
        assert_eq!(sixlowpan_frame(&t, &SixlowpanContext::default()).adaptation_bytes, 6);
        t.udp = UdpPorts { src_port: 5683, dst_port: 0xF012 };
        assert_eq!(sixlowpan_frame(&t, &SixlowpanContext::default()).adaptation_bytes, 8);
    }

    #[test]
    fn sixlowpan_fallbacks() {
        let mut t = PacketTemplate::default();
        t.ipv6.hop_limit = 17;
        t.ipv6.traffic_class = 0x20;
        t.ipv6.dst_context = 3;
        let ctx = SixlowpanContext::with_ids(&[0]);
        let b = iphc_breakdown(&t, &ctx);
        assert_eq!((b.hop_limit, b.traffic_flow, b.dst_addr, b.cid), (1, 1, 16, 0));
        let f = sixlowpan_frame(&t, &ctx);
        assert!(!f.compressed);
        assert_eq!(f.adaptation_bytes, 9 + 1 + 1 + 16);
        let ctx = SixlowpanContext::with_ids(&[0, 3]);
        assert_eq!(iphc_breakdown(&t, &ctx).cid, 1);
    }

    #[test]
    fn default_comparison_orders_stacks() {
        let r = default_report();
        assert!(r.schc.adaptation_bytes < r.sixlowpan.adaptation_bytes);
        assert!(r.schc_ratio > r.sixlowpan_ratio);
        assert!(r.toa_schc_ms < r.toa_6lo_ms);
        assert!(r.toa_poll_ms < r.toa_schc_ms);
        let empty = PacketTemplate::with_payload(0);
        let r0 = compare(
            &empty,
            &SchcRule::full_elision(1, &empty),
            &SixlowpanContext::default(),
            &PhyParams::default(),
        )
        .unwrap();
        assert!(r0.toa_schc_ms < r0.toa_6lo_ms);
    }

    #[test]
    fn testbed_frames_match_measured_airtime() {
        let r = testbed_report();
        assert_eq!((r.schc_total_bytes, r.sixlowpan_total_bytes), (56, 63));
        assert!((r.toa_schc_ms - 108.0).abs() < 1.0);
        assert!((r.toa_6lo_ms - 118.0).abs() < 1.0);
        assert_eq!(r.schc.compressed_ip_udp_bytes, 1);
        assert!(r.sixlowpan.compressed_ip_udp_bytes >= 6);
    }

    #[test]
    fn equal_sizes_give_equal_airtime() {
        let t = PacketTemplate::default();
        let mut schc = schc_frame(&t, &SchcRule::full_elision(1, &t));
        let six = sixlowpan_frame(&t, &SixlowpanContext::default());
        schc.l2_header_bytes = six.l2_header_bytes;
        schc.adaptation_bytes = six.adaptation_bytes;
        let phy = PhyParams::default();
        assert_eq!(
            time_on_air(&phy, schc.total_phy_payload()).unwrap(),
            time_on_air(&phy, six.total_phy_payload()).unwrap()
        );
    }

    proptest! {
        #[test]
        fn layouts_conserve_bytes_and_grow_with_payload(
            payload in 0usize..120, opt_len in 0usize..40, tc in 0u8..4, hl in 0u8..=255,
        ) {
            let mut t = PacketTemplate::with_payload(payload);
            t.coap.options = vec![CoapOption { number: COAP_URI_PATH, length: opt_len }];
            t.ipv6.traffic_class = tc;
            t.ipv6.hop_limit = hl;
            let rule = SchcRule::full_elision(1, &t);
            let ctx = SixlowpanContext::default();
            for f in [schc_frame(&t, &rule), sixlowpan_frame(&t, &ctx)] {
                prop_assert_eq!(f.total_phy_payload(),
                    f.l2_header_bytes + f.adaptation_bytes + f.upper_header_bytes + f.payload_bytes);
            }
            let s = schc_frame(&t, &rule);
            let six = sixlowpan_frame(&t, &ctx);
            prop_assert!(s.adaptation_bytes < six.adaptation_bytes);
            prop_assert!(six.adaptation_bytes >= 6);

            let mut bigger = t.clone();
            bigger.payload_bytes += 1;
            bigger.coap.options[0].length += 1;
            prop_assert!(schc_frame(&bigger, &rule).total_phy_payload() >= s.total_phy_payload());
            prop_assert!(sixlowpan_frame(&bigger, &ctx).total_phy_payload() >= six.total_phy_payload());
        }
    }
}
