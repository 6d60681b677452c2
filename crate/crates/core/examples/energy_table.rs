//! Mean power per stack and role, and the same table under a custom profile.

use lpwan_sim::cli::reproduce::{energy_usage, run_suite};
use lpwan_sim::energy::{energy_report, PowerProfile, StackProfiles};

fn main() {
    let defaults = StackProfiles::default();
    let runs = run_suite(&[1], 1800.0, &defaults, 4).expect("testbed runs");
    let usage = energy_usage(&runs, 1).unwrap();
    let table = energy_report(&usage, &defaults).unwrap();
    println!("{}", table.markdown());

    let custom = StackProfiles::shared(
        PowerProfile { p_tx_mw: 120.0, p_rx_mw: 36.0, p_sleep_mw: 0.005, mac_overhead_mw: 0.0 },
        1.0,
        0.2,
    );
    let table = energy_report(&usage, &custom).unwrap();
    println!("{}orderings hold: {}", table.markdown(), table.orderings_hold());
}
