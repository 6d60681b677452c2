//! Slotted DSME simulation against the analytic delay model.

use lpwan_sim::dsme::cross_check;

fn main() {
    for (rho, n) in [(0.3, 1), (0.6, 1), (0.9, 1), (1.5, 2), (2.7, 3)] {
        let c = cross_check(rho, n, 50_000, 8, 1).expect("valid parameters");
        println!("rho={rho:<4} N={n} packets={:>6} sup={:.4}", c.packets, c.sup_distance);
        for k in 1..=4 {
            println!("  F({k}) sim={:.4} model={:.4}", c.simulated.at(k), c.model.at(k));
        }
    }
}
