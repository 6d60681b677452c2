use std::fs;
use std::path::Path;

use lpwan_sim::engine::{run, summarize, ScenarioConfig};

#[test]
fn shipped_files_match_the_builtin_testbed() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("scenarios");
    let builtin = ScenarioConfig::testbed_suite(1);
    assert_eq!(fs::read_dir(&dir).unwrap().count(), builtin.len());
    for s in builtin {
        let text = fs::read_to_string(dir.join(format!("{}.json", s.name))).unwrap();
        assert_eq!(ScenarioConfig::from_json(&text).unwrap(), s, "{}", s.name);
    }
}

#[test]
fn every_testbed_scenario_runs_and_conserves_packets() {
    for mut s in ScenarioConfig::testbed_suite(11) {
        s.duration_s = 600.0;
        let m = summarize(&run(&s).unwrap().records);
        let lost: usize = m.loss_causes.values().sum();
        assert_eq!(m.scheduled, m.delivered + lost + m.in_flight, "{}", s.name);
        assert!(m.data_extraction_ratio >= m.prr);
    }
}
