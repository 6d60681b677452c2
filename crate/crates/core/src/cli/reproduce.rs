use std::fmt::Write as _;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::thread;

use serde::{Deserialize, Serialize};

use super::artifacts::{
    comparison, comparison_files, frame_artifacts, simulation_artifacts, sweep_artifacts, ArtifactError,
    ComparisonReport, SimulationArtifacts,
};
use crate::analytics::{find_utilization_for_target, model_delay_cdf, ModelParams, DEFAULT_T_MSF};
use crate::compression::PacketTemplate;
use crate::energy::{
    check_profiles, device_energy, device_usage, energy_csv, energy_report, profile_csv, profile_grid,
    DeviceUsage, EnergyTable, StackProfiles,
};
use crate::engine::metrics::ks_distance_uniform;
use crate::engine::{ScenarioConfig, Stack, TimeInstant};
use crate::output::OutputSet;
use crate::phy::{time_on_air, PhyParams};

/// Testbed measurements the simulated values are set against.
pub mod reference {
    /// (scenario, PRR, data extraction ratio)
    pub const PRR: [(&str, f64, Option<f64>); 6] = [
        ("6lora_10s", 1.0, None),
        ("6lora_20s", 0.996, None),
        ("schc_lorawan_a_10s", 0.732, Some(0.74)),
        ("schc_lorawan_a_20s", 0.767, Some(0.833)),
        ("schc_lorawan_c_10s", 0.79, Some(0.798)),
        ("schc_lorawan_c_20s", 0.852, Some(0.855)),
    ];
    pub const CLASS_C_P95_S: f64 = 7.0;
    pub const CLASS_A_P95_S: f64 = 17.0;
    pub const CLASS_C_KNEE_S: f64 = 35.0;
    pub const DSME_MAX_COMPLETION_S: f64 = 3.9;
    pub const DSME_MIN_COMPLETION_S: f64 = 0.140;
    pub const TOA_SCHC_MS: f64 = 108.0;
    pub const TOA_6LO_MS: f64 = 118.0;
    pub const MODEL_F_N2_AT_1: f64 = 0.92;
    /// Rows: sensor 20 s, sensor 10 s, actuator; columns: class A, class C, 6LoRa.
    pub const ENERGY_MW: [[f64; 3]; 3] = [[0.49, 12.87, 1.33], [0.87, 13.3, 2.04], [0.54, 12.41, 2.93]];

    pub fn prr(name: &str) -> Option<(f64, Option<f64>)> {
        PRR.iter().find(|(n, _, _)| *n == name).map(|&(_, p, d)| (p, d))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReproduceOptions {
    pub seed: u64,
    pub seeds: u64,
    pub duration_s: f64,
    pub oracle_arrivals: u64,
    pub sim_packets: usize,
    pub max_n: usize,
    pub profiles: StackProfiles,
    pub threads: usize,
}

impl Default for ReproduceOptions {
    fn default() -> Self {
        ReproduceOptions {
            seed: 1,
            seeds: 5,
            duration_s: 3600.0,
            oracle_arrivals: 1_000_000,
            sim_packets: 50_000,
            max_n: 10,
            profiles: StackProfiles::default(),
            threads: thread::available_parallelism().map(|n| n.get()).unwrap_or(1),
        }
    }
}

impl ReproduceOptions {
    pub fn seed_list(&self) -> Vec<u64> {
        (0..self.seeds.max(1)).map(|i| self.seed + i).collect()
    }
}

/// One scenario run inside the suite.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub scenario: ScenarioConfig,
    pub artifacts: SimulationArtifacts,
}

/// Runs every testbed scenario for every seed on `threads` workers.
/// Results come back sorted by (scenario name, seed).
pub fn run_suite(
    seeds: &[u64],
    duration_s: f64,
    profiles: &StackProfiles,
    threads: usize,
) -> Result<Vec<SuiteRun>, ArtifactError> {
    let mut jobs: Vec<ScenarioConfig> = seeds
        .iter()
        .flat_map(|&seed| ScenarioConfig::testbed_suite(seed))
        .map(|mut s| {
            s.duration_s = duration_s;
            s
        })
        .collect();
    jobs.sort_by(|a, b| a.name.cmp(&b.name).then(a.seed.cmp(&b.seed)));
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<SimulationArtifacts, ArtifactError>>>> =
        Mutex::new((0..jobs.len()).map(|_| None).collect());
    thread::scope(|scope| {
        for _ in 0..threads.clamp(1, jobs.len().max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                let Some(job) = jobs.get(i) else { break };
                let r = simulation_artifacts(job, profiles);
                results.lock().expect("no worker panics")[i] = Some(r);
            });
        }
    });
    let results = results.into_inner().expect("no worker panics");
    jobs.into_iter()
        .zip(results)
        .map(|(scenario, r)| {
            Ok(SuiteRun {
                scenario,
                artifacts: r.expect("every job ran")?,
            })
        })
        .collect()
}

/// Per-run numbers used by the report and the acceptance suite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioStats {
    pub name: String,
    pub stack: Stack,
    pub seed: u64,
    pub prr: f64,
    pub der: f64,
    pub delta: f64,
    pub p95_s: Option<f64>,
    pub min_s: Option<f64>,
    pub max_s: Option<f64>,
    /// Downlink queue of the busiest actuator at half time and at the end.
    pub queue_mid: Option<usize>,
    pub queue_end: Option<usize>,
    /// KS distance of completion times to the uniform law (DSME only).
    pub ks_uniform: Option<f64>,
}

pub const STATS_CSV_HEADER: &str = "scenario,seed,prr,der,delta,p95_s,min_s,max_s,queue_mid,queue_end,ks_uniform";

fn opt<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ScenarioStats {
    pub fn from_run(run: &SuiteRun) -> Self {
        let s = &run.scenario;
        let out = &run.artifacts.output;
        let m = &run.artifacts.summary.metrics;
        let busiest = s
            .actuators()
            .max_by_key(|d| (s.inbound_flows(d.id), std::cmp::Reverse(d.id)))
            .map(|d| d.id);
        let (queue_mid, queue_end) = match (&out.lorawan, busiest) {
            (Some(trace), Some(dev)) => {
                let end = s.duration().as_micros();
                (
                    Some(trace.queue_len_at(dev, TimeInstant::from_micros(end / 2))),
                    Some(trace.queue_len_at(dev, TimeInstant::from_micros(end))),
                )
            }
            _ => (None, None),
        };
        let ks_uniform = (s.stack == Stack::DsmeLora).then(|| {
            let toa = time_on_air(&s.phy, s.frame_bytes()).expect("validated PHY").as_secs_f64();
            let lo = toa + s.dsme.guard().as_secs_f64();
            let hi = lo + s.dsme.superframe.superframe().as_secs_f64();
            let samples: Vec<f64> = out.records.iter().filter_map(|r| r.completion()).map(|d| d.as_secs_f64()).collect();
            if samples.is_empty() {
                1.0
            } else {
                ks_distance_uniform(&samples, lo, hi)
            }
        });
        ScenarioStats {
            name: s.name.clone(),
            stack: s.stack,
            seed: s.seed,
            prr: m.prr,
            der: m.data_extraction_ratio,
            delta: m.delta,
            p95_s: m.completion_p95_s,
            min_s: m.completion_min_s,
            max_s: m.completion_max_s,
            queue_mid,
            queue_end,
            ks_uniform,
        }
    }

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{:.6},{:.6},{:.6},{},{},{},{},{},{}",
            self.name,
            self.seed,
            self.prr,
            self.der,
            self.delta,
            opt(self.p95_s.map(|v| format!("{v:.6}"))),
            opt(self.min_s.map(|v| format!("{v:.6}"))),
            opt(self.max_s.map(|v| format!("{v:.6}"))),
            opt(self.queue_mid),
            opt(self.queue_end),
            opt(self.ks_uniform.map(|v| format!("{v:.6}"))),
        )
    }
}

/// Where F_{N=2}(1) reaches its target and how much slots two and three add there.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelAnchor {
    pub target: f64,
    /// Root within [0.90, 1.00), if any.
    pub rho_in_range: Option<f64>,
    /// Root anywhere in [0.01, 1.999].
    pub rho_any: Option<f64>,
    pub f_n2_at_090: f64,
    pub f_n2_at_0999: f64,
    /// Utilization the gains are evaluated at.
    pub rho_eval: f64,
    pub gain_1_to_2: f64,
    pub gain_2_to_3: f64,
}

impl ModelAnchor {
    pub fn compute(target: f64, t_msf: f64) -> Result<Self, ArtifactError> {
        let f = |rho: f64, n: u32| -> Result<f64, ArtifactError> {
            let p = ModelParams::from_utilization(rho, t_msf, n)?;
            if !p.is_stable() {
                return Ok(0.0);
            }
            Ok(model_delay_cdf(&p)?.at(1))
        };
        let rho_in_range = find_utilization_for_target(2, 1, target, 0.90, 0.999, t_msf)?;
        let rho_any = find_utilization_for_target(2, 1, target, 0.01, 1.999, t_msf)?;
        let rho_eval = rho_in_range.unwrap_or(0.90);
        let (f1, f2, f3) = (f(rho_eval, 1)?, f(rho_eval, 2)?, f(rho_eval, 3)?);
        Ok(ModelAnchor {
            target,
            rho_in_range,
            rho_any,
            f_n2_at_090: f(0.90, 2)?,
            f_n2_at_0999: f(0.999, 2)?,
            rho_eval,
            gain_1_to_2: f2 - f1,
            gain_2_to_3: f3 - f2,
        })
    }
}

/// Everything `reproduce` computes, before rendering.
#[derive(Debug, Clone)]
pub struct Reproduction {
    pub options: ReproduceOptions,
    pub runs: Vec<SuiteRun>,
    pub stats: Vec<ScenarioStats>,
    pub comparisons: Vec<ComparisonReport>,
    pub cross_model: Vec<ComparisonReport>,
    pub anchor: ModelAnchor,
    pub frames: crate::compression::FrameReport,
    pub frames_small: crate::compression::FrameReport,
    pub energy: EnergyTable,
    pub profile_checks: Vec<crate::energy::ProfileCheck>,
    pub files: OutputSet,
}

pub const ORACLE_PAIRS: [(f64, u32); 5] = [(0.3, 1), (0.6, 1), (0.9, 1), (1.5, 2), (2.7, 3)];
pub const CROSS_MODEL_PAIRS: [(f64, u32); 2] = [(0.6, 1), (1.5, 2)];

pub fn sweep_utilizations() -> Vec<f64> {
    (1..=19).map(|i| f64::from(i) * 0.05).chain([0.99]).collect()
}

pub fn energy_usage(runs: &[SuiteRun], seed: u64) -> Result<Vec<DeviceUsage>, ArtifactError> {
    let mut usage = Vec::new();
    for r in runs.iter().filter(|r| r.scenario.seed == seed) {
        usage.extend(device_usage(&r.scenario, &r.artifacts.output)?);
    }
    Ok(usage)
}

pub fn reproduce(options: &ReproduceOptions) -> Result<Reproduction, ArtifactError> {
    let seeds = options.seed_list();
    let runs = run_suite(&seeds, options.duration_s, &options.profiles, options.threads)?;
    let stats: Vec<ScenarioStats> = runs.iter().map(ScenarioStats::from_run).collect();
    let mut files = OutputSet::new();

    for r in runs.iter().filter(|r| r.scenario.seed == options.seed) {
        files.extend_under(format!("scenarios/{}", r.scenario.name), r.artifacts.files.clone());
    }
    let mut csv = format!("{STATS_CSV_HEADER}\n");
    for s in &stats {
        csv.push_str(&s.csv_line());
        csv.push('\n');
    }
    files.add("scenario_stats.csv", csv);

    let (_, sweep_files) = sweep_artifacts(&sweep_utilizations(), &[1, 2, 3], DEFAULT_T_MSF, options.max_n)?;
    files.extend_under("", sweep_files);

    let comparisons = thread::scope(|scope| {
        let handles: Vec<_> = ORACLE_PAIRS
            .iter()
            .map(|&(rho, n)| {
                scope.spawn(move || {
                    comparison(rho, n, options.oracle_arrivals, options.sim_packets, options.max_n, options.seed)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("comparison threads do not panic"))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let cross_model: Vec<ComparisonReport> = comparisons
        .iter()
        .filter(|c| CROSS_MODEL_PAIRS.contains(&(c.rho, c.n_slots)))
        .cloned()
        .collect();
    files.extend_under("", comparison_files(&comparisons, options.max_n));

    let anchor = ModelAnchor::compute(reference::MODEL_F_N2_AT_1, DEFAULT_T_MSF)?;
    files.add_json("model_anchor.json", &anchor);

    let (frames, frame_files) = frame_artifacts(&PacketTemplate::testbed(), &PhyParams::default())?;
    files.extend_under("", frame_files);
    let (frames_small, _) = frame_artifacts(&PacketTemplate::default(), &PhyParams::default())?;

    let usage = energy_usage(&runs, options.seed)?;
    files.add("energy.csv", energy_csv(&device_energy(&usage, &options.profiles)));
    let energy = energy_report(&usage, &options.profiles)?;
    files.add("energy_table.md", energy.markdown());
    let profile_checks = check_profiles(&usage, &profile_grid())?;
    files.add("energy_profiles.csv", profile_csv(&profile_checks));

    let mut rep = Reproduction {
        options: options.clone(),
        runs,
        stats,
        comparisons,
        cross_model,
        anchor,
        frames,
        frames_small,
        energy,
        profile_checks,
        files,
    };
    let md = report_markdown(&rep);
    rep.files.add("REPORT.md", md);
    Ok(rep)
}

fn mean(v: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = v.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    if n == 0 {
        f64::NAN
    } else {
        s / n as f64
    }
}

fn status(ok: bool) -> &'static str {
    if ok {
        "holds"
    } else {
        "deviates"
    }
}

pub fn report_markdown(r: &Reproduction) -> String {
    let mut s = String::new();
    let o = &r.options;
    let _ = writeln!(s, "# Reproduction report\n");
    let _ = writeln!(
        s,
        "Seeds {:?}, {} s per scenario, oracle {} arrivals, cross-model simulation ~{} packets.\n",
        o.seed_list(),
        o.duration_s,
        o.oracle_arrivals,
        o.sim_packets
    );

    let _ = writeln!(s, "## Packet reception\n");
    let _ = writeln!(
        s,
        "| Scenario | PRR (mean) | Reference PRR | Deviation | DER (mean) | Reference DER | Delta (mean) | p95 completion (s) |"
    );
    let _ = writeln!(s, "|---|---|---|---|---|---|---|---|");
    let names: Vec<String> = {
        let mut v: Vec<String> = r.stats.iter().map(|x| x.name.clone()).collect();
        v.dedup();
        v
    };
    for name in &names {
        let rows: Vec<&ScenarioStats> = r.stats.iter().filter(|x| &x.name == name).collect();
        let prr = mean(rows.iter().map(|x| x.prr));
        let der = mean(rows.iter().map(|x| x.der));
        let delta = mean(rows.iter().map(|x| x.delta));
        let p95 = mean(rows.iter().filter_map(|x| x.p95_s));
        let (rp, rd) = reference::prr(name).unwrap_or((f64::NAN, None));
        let _ = writeln!(
            s,
            "| {} | {:.3} | {:.3} | {:+.3} | {:.3} | {} | {:.4} | {:.2} |",
            name,
            prr,
            rp,
            prr - rp,
            der,
            rd.map(|d| format!("{d:.3}")).unwrap_or_else(|| "-".into()),
            delta,
            p95
        );
    }

    let per_seed = |f: &dyn Fn(u64) -> bool| -> usize { o.seed_list().into_iter().filter(|&sd| f(sd)).count() };
    let get = |name: &str, seed: u64| r.stats.iter().find(|x| x.name == name && x.seed == seed);
    let n_seeds = o.seed_list().len();
    let _ = writeln!(s, "\n## LoRaWAN orderings (seeds holding / {n_seeds})\n");
    for txi in ["10s", "20s"] {
        let a = format!("schc_lorawan_a_{txi}");
        let c = format!("schc_lorawan_c_{txi}");
        let k = per_seed(&|sd| matches!((get(&c, sd), get(&a, sd)), (Some(c), Some(a)) if c.prr > a.prr));
        let _ = writeln!(s, "- PRR class C > class A at {txi}: {k}");
    }
    for class in ["a", "c"] {
        let lo = format!("schc_lorawan_{class}_10s");
        let hi = format!("schc_lorawan_{class}_20s");
        let k = per_seed(&|sd| matches!((get(&hi, sd), get(&lo, sd)), (Some(h), Some(l)) if h.prr > l.prr));
        let _ = writeln!(s, "- class {}: PRR 20 s > PRR 10 s: {k}", class.to_uppercase());
    }
    let k = per_seed(&|sd| {
        matches!((get("schc_lorawan_c_20s", sd), get("schc_lorawan_a_20s", sd)),
            (Some(c), Some(a)) if c.p95_s.unwrap_or(f64::INFINITY) < a.p95_s.unwrap_or(f64::INFINITY))
    });
    let _ = writeln!(
        s,
        "- class C p95 < class A p95 at 20 s: {k} (reference {} s vs {} s)",
        reference::CLASS_C_P95_S,
        reference::CLASS_A_P95_S
    );
    let growth = per_seed(&|sd| matches!(get("schc_lorawan_c_10s", sd), Some(x) if x.queue_end > x.queue_mid));
    let _ = writeln!(
        s,
        "- class C 10 s, busiest actuator queue at end > at half time: {growth} (reference: continuous build-up, knee near {} s)",
        reference::CLASS_C_KNEE_S
    );

    let _ = writeln!(s, "\n## DSME bounds\n");
    let _ = writeln!(s, "| Scenario | Seed | PRR | min (s) | max (s) | KS to uniform |");
    let _ = writeln!(s, "|---|---|---|---|---|---|");
    for x in r.stats.iter().filter(|x| x.stack == Stack::DsmeLora) {
        let _ = writeln!(
            s,
            "| {} | {} | {:.4} | {:.4} | {:.4} | {:.4} |",
            x.name,
            x.seed,
            x.prr,
            x.min_s.unwrap_or(f64::NAN),
            x.max_s.unwrap_or(f64::NAN),
            x.ks_uniform.unwrap_or(f64::NAN)
        );
    }
    let max_all = r
        .stats
        .iter()
        .filter(|x| x.stack == Stack::DsmeLora)
        .filter_map(|x| x.max_s)
        .fold(0.0, f64::max);
    let min_all = r
        .stats
        .iter()
        .filter(|x| x.stack == Stack::DsmeLora)
        .filter_map(|x| x.min_s)
        .fold(f64::INFINITY, f64::min);
    let _ = writeln!(
        s,
        "\nReference max ~{} s: simulated {:.3} s ({}). Reference min < {} s: simulated {:.3} s ({}).",
        reference::DSME_MAX_COMPLETION_S,
        max_all,
        status(max_all <= 3.90),
        reference::DSME_MIN_COMPLETION_S,
        min_all,
        status(min_all <= reference::DSME_MIN_COMPLETION_S)
    );

    let _ = writeln!(s, "\n## Delay model\n");
    let a = &r.anchor;
    let _ = writeln!(
        s,
        "Target F_(N=2)(1) = {}: root in [0.90, 1.00) {}; root anywhere {}. F_(N=2)(1) is {:.4} at rho 0.90 and {:.4} at rho 0.999 ({}).",
        a.target,
        a.rho_in_range.map(|x| format!("{x:.4}")).unwrap_or_else(|| "none".into()),
        a.rho_any.map(|x| format!("{x:.4}")).unwrap_or_else(|| "none".into()),
        a.f_n2_at_090,
        a.f_n2_at_0999,
        status(a.rho_in_range.is_some())
    );
    let _ = writeln!(
        s,
        "At rho {:.4}: gain N 1->2 = {:.4}, gain N 2->3 = {:.4} ({}).\n",
        a.rho_eval,
        a.gain_1_to_2,
        a.gain_2_to_3,
        status(a.gain_1_to_2 > a.gain_2_to_3)
    );
    let _ = writeln!(s, "| rho | N | sup model-oracle | sup model-simulation | sup oracle-simulation |");
    let _ = writeln!(s, "|---|---|---|---|---|");
    for c in &r.comparisons {
        let _ = writeln!(
            s,
            "| {} | {} | {:.4} | {:.4} | {:.4} |",
            c.rho, c.n_slots, c.sup_model_oracle, c.sup_model_simulation, c.sup_oracle_simulation
        );
    }

    let _ = writeln!(s, "\n## Frames\n");
    let f = &r.frames;
    let _ = writeln!(s, "{}", super::artifacts::frame_table(f));
    let within = |v: f64, reference: f64| (v - reference).abs() <= 0.15 * reference;
    let _ = writeln!(
        s,
        "Testbed template ({} B payload): SCHC {:.1} ms vs reference {} ms ({}), 6LoWPAN {:.1} ms vs reference {} ms ({}).",
        f.template.payload_bytes,
        f.toa_schc_ms,
        reference::TOA_SCHC_MS,
        status(within(f.toa_schc_ms, reference::TOA_SCHC_MS)),
        f.toa_6lo_ms,
        reference::TOA_6LO_MS,
        status(within(f.toa_6lo_ms, reference::TOA_6LO_MS))
    );
    let g = &r.frames_small;
    let _ = writeln!(
        s,
        "{} B payload template: SCHC {} B / {:.1} ms, 6LoWPAN {} B / {:.1} ms.",
        g.template.payload_bytes, g.schc_total_bytes, g.toa_schc_ms, g.sixlowpan_total_bytes, g.toa_6lo_ms
    );

    let _ = writeln!(s, "\n## Energy\n");
    let _ = writeln!(s, "{}", r.energy.markdown());
    let _ = writeln!(s, "Reference (mW, class A / class C / 6LoRa):\n");
    for (row, label) in reference::ENERGY_MW.iter().zip(["Sensor 20 s", "Sensor 10 s", "Actuator"]) {
        let _ = writeln!(s, "- {label}: {} / {} / {}", row[0], row[1], row[2]);
    }
    let passing = r.profile_checks.iter().filter(|c| c.passes()).count();
    let _ = writeln!(
        s,
        "\nOrderings class A < 6LoRa < class C: {} under the default profile. Profile grid: {passing} of {} profiles pass every energy check.",
        status(r.energy.orderings_hold()),
        r.profile_checks.len()
    );
    s
}
