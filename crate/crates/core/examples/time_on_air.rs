//! LoRa time on air for a few payload sizes and spreading factors.

use lpwan_sim::phy::{time_on_air, PhyParams};

fn main() {
    let sizes = [0usize, 12, 36, 43, 56, 63, 100, 255];
    print!("{:>6}", "bytes");
    for sf in 7..=12 {
        print!("{:>12}", format!("SF{sf} (ms)"));
    }
    println!();
    for &n in &sizes {
        print!("{n:>6}");
        for sf in 7..=12 {
            let phy = PhyParams {
                spreading_factor: sf,
                low_datarate_optimize: sf >= 11,
                ..PhyParams::default()
            };
            let toa = time_on_air(&phy, n).expect("valid parameters");
            print!("{:>12.3}", toa.as_millis_f64());
        }
        println!();
    }
    let up = PhyParams::default();
    println!(
        "\n14 B at SF7: uplink {:.3} ms, downlink without CRC {:.3} ms",
        time_on_air(&up, 14).unwrap().as_millis_f64(),
        time_on_air(&up.downlink(), 14).unwrap().as_millis_f64()
    );
}
