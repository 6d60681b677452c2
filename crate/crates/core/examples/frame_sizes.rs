//! Byte accounting of SCHC over LoRaWAN against 6LoWPAN over DSME.

use lpwan_sim::cli::artifacts::frame_table;
use lpwan_sim::compression::{
    compare, iphc_breakdown, testbed_report, PacketTemplate, SchcRule, SixlowpanContext,
};
use lpwan_sim::phy::PhyParams;

fn main() {
    println!("Testbed template\n{}", frame_table(&testbed_report()));

    let small = PacketTemplate::default();
    let r = compare(&small, &SchcRule::full_elision(1, &small), &SixlowpanContext::default(), &PhyParams::default())
        .unwrap();
    println!("12 B payload\n{}", frame_table(&r));
    println!("poll frame: {} B, {:.3} ms", r.poll_bytes, r.toa_poll_ms);

    // A hop limit the context does not know costs 6LoWPAN an inline byte.
    let mut t = PacketTemplate::testbed();
    t.ipv6.hop_limit = 17;
    println!("\nIPHC with hop limit 17: {:?}", iphc_breakdown(&t, &SixlowpanContext::default()));
}
