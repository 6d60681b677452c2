//! Class A against class C on the testbed topology, several seeds.

use lpwan_sim::engine::{run, summarize, ScenarioConfig, Stack, TimeInstant};

fn main() {
    let seeds: Vec<u64> = (1..=5).collect();
    println!("scenario                 seed   prr    der    delta  p95_s   q_mid q_end");
    for stack in [Stack::LorawanClassA, Stack::LorawanClassC] {
        for txi in [10.0, 20.0] {
            for &seed in &seeds {
                let sc = ScenarioConfig::testbed(stack, txi, seed);
                let out = run(&sc).expect("testbed scenario is valid");
                let m = summarize(&out.records);
                let trace = out.lorawan.as_ref().expect("lorawan trace");
                let half = TimeInstant::from_micros(sc.duration().as_micros() / 2);
                let end = TimeInstant::from_micros(sc.duration().as_micros());
                println!(
                    "{:<24} {:>4} {:>6.3} {:>6.3} {:>6.3} {:>7.2} {:>5} {:>5}",
                    sc.name,
                    seed,
                    m.prr,
                    m.data_extraction_ratio,
                    m.delta,
                    m.completion_p95_s.unwrap_or(f64::NAN),
                    trace.queue_len_at(0, half),
                    trace.queue_len_at(0, end),
                );
            }
        }
    }
}
