//! Monte-Carlo queue simulation next to the analytic delay CDF.

use lpwan_sim::analytics::{mc_oracle, model_delay_cdf, ModelParams, DEFAULT_T_MSF};

fn main() {
    for (rho, n) in [(0.6, 1), (1.5, 2)] {
        let p = ModelParams::from_utilization(rho, DEFAULT_T_MSF, n).unwrap();
        let model = model_delay_cdf(&p).unwrap();
        let mc = mc_oracle(&p, 200_000, 7).unwrap();
        println!("rho {rho} N {n}: sup distance {:.4}", model.sup_distance(&mc.delay));
    }
}
