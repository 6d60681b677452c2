//! Guaranteed time slot allocation for the testbed flows.

use lpwan_sim::dsme::{build_schedule, CellPlacement, DsmeConfig};
use lpwan_sim::engine::{ScenarioConfig, Stack};

fn main() {
    let s = ScenarioConfig::testbed(Stack::DsmeLora, 10.0, 1);
    let cfg = DsmeConfig::default();
    for placement in [CellPlacement::Spread, CellPlacement::Contiguous] {
        let schedule = build_schedule(&cfg.superframe, &s.flows, 1, placement).expect("feasible");
        println!("{placement:?}\n{}", schedule.csv());
        for d in s.actuators() {
            println!("actuator {} receives in {} cells", d.id, schedule.rx_cells(d.id).count());
        }
    }
    match build_schedule(&cfg.superframe, &s.flows, 4, CellPlacement::Spread) {
        Ok(_) => println!("four cells per flow fit"),
        Err(e) => println!("four cells per flow: {e}"),
    }
}
