//! Delay CDF over utilization and slot count, as CSV on stdout.

use lpwan_sim::analytics::{find_utilization_for_target, sweep, sweep_csv, DEFAULT_T_MSF};

fn main() {
    let rhos: Vec<f64> = (1..=19).map(|i| i as f64 * 0.05).collect();
    let rows = sweep(&rhos, &[1, 2, 3], DEFAULT_T_MSF, 4).expect("valid grid");
    print!("{}", sweep_csv(&rows));
    let rho = find_utilization_for_target(2, 1, 0.92, 0.01, 1.99, DEFAULT_T_MSF).unwrap();
    eprintln!("F_(N=2)(1) = 0.92 at rho {rho:?}");
}
