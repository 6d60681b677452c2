//! Stationary queue and delay CDF of the GTS queueing model.

use lpwan_sim::analytics::{
    delay_cdf, queue_length_distribution, solve_stationary, ModelParams, DEFAULT_T_MSF,
};

fn main() {
    let params = ModelParams::from_utilization(1.5, DEFAULT_T_MSF, 2).expect("valid parameters");
    let (p, boundary) = solve_stationary(&params).expect("stable");
    println!("rho {} N {}  states {}  residual {:.2e}", params.rho(), params.n_slots, p.size(), p.residual(boundary.probabilities()));
    println!("queue after service: {:?}", &boundary.probabilities()[..6]);
    let l = queue_length_distribution(&boundary, params.rho()).unwrap();
    println!("queue seen by arrivals, mean {:.3}", l.mean());
    let f = delay_cdf(&l, &params);
    for n in 1..=6 {
        println!("F({n}) = {:.5}", f.at(n));
    }
}
