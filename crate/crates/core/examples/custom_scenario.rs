//! Building a scenario in code, saving it as JSON and running it.

use lpwan_sim::engine::{run, summarize, DeviceRole, DeviceSpec, Flow, ScenarioConfig, Stack, Traffic};

fn main() {
    let mut s = ScenarioConfig::testbed(Stack::LorawanClassC, 20.0, 3);
    s.name = "two_sensors_poisson".into();
    s.devices = vec![
        DeviceSpec { id: 0, role: DeviceRole::Actuator, cluster: 0 },
        DeviceSpec { id: 1, role: DeviceRole::Sensor, cluster: 0 },
        DeviceSpec { id: 2, role: DeviceRole::Sensor, cluster: 0 },
    ];
    s.flows = vec![Flow { sender: 1, receiver: 0 }, Flow { sender: 2, receiver: 0 }];
    s.traffic = Traffic::Exponential { rate_per_s: 0.1 };
    s.lorawan.class_c_throttle_ms = 4000;
    s.duration_s = 1800.0;

    let json = s.to_json();
    let back = ScenarioConfig::from_json(&json).expect("round trip");
    let m = summarize(&run(&back).expect("valid scenario").records);
    println!("{json}");
    println!("PRR {:.3}  p95 {:.2} s  losses {:?}", m.prr, m.completion_p95_s.unwrap_or(f64::NAN), m.loss_causes);
}
