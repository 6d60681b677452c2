//! One hour of the DSME testbed: completion bounds and radio duty.

use lpwan_sim::energy::StateTotals;
use lpwan_sim::engine::metrics::ks_distance_uniform;
use lpwan_sim::engine::{run, summarize, ScenarioConfig, Stack};
use lpwan_sim::phy::time_on_air;

fn main() {
    let s = ScenarioConfig::testbed(Stack::DsmeLora, 10.0, 1);
    let out = run(&s).expect("testbed is feasible");
    let m = summarize(&out.records);
    println!("PRR {:.4}  completion min {:.3} s  max {:.3} s", m.prr, m.completion_min_s.unwrap(), m.completion_max_s.unwrap());
    let toa = time_on_air(&s.phy, s.frame_bytes()).unwrap().as_secs_f64();
    let lo = toa + s.dsme.guard().as_secs_f64();
    let hi = lo + s.dsme.superframe.superframe().as_secs_f64();
    let samples: Vec<f64> = out.records.iter().filter_map(|r| r.completion()).map(|d| d.as_secs_f64()).collect();
    println!("KS distance to U[{lo:.3}, {hi:.3}]: {:.4}", ks_distance_uniform(&samples, lo, hi));
    for id in [0, 1, 3] {
        let t = StateTotals::from_intervals(out.device_intervals(id)).unwrap();
        println!("device {id}: radio active {:.1}% of the time", 100.0 * t.active_fraction());
    }
}
