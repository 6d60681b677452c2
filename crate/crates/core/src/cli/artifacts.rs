use serde::{Deserialize, Serialize};

use crate::analytics::{
    mc_oracle, model_delay_cdf, sweep, sweep_csv, AnalyticsError, DelayCdf, ModelParams, SweepRow,
};
use crate::compression::{compare, FrameReport, PacketTemplate, SchcRule, SixlowpanContext};
use crate::dsme::{cross_check, CrossCheckError};
use crate::energy::{device_energy, device_usage, energy_csv, EnergyError, StackProfiles};
use crate::engine::metrics::{completion_cdf, summarize, MetricsReport};
use crate::engine::record::records_csv;
use crate::engine::{run, RunError, RunOutput, ScenarioConfig, Stack};
use crate::output::OutputSet;
use crate::phy::{time_on_air, PhyParams, PhyError};

/// Contents of `summary.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub scenario: String,
    pub stack: Stack,
    pub seed: u64,
    pub duration_s: f64,
    pub frame_bytes: usize,
    pub time_on_air_ms: f64,
    pub metrics: MetricsReport,
}

/// One simulated scenario and the files describing it.
#[derive(Debug, Clone)]
pub struct SimulationArtifacts {
    pub output: RunOutput,
    pub summary: RunSummary,
    pub files: OutputSet,
}

#[derive(Debug, thiserror::Error)]
pub enum ArtifactError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Analytics(#[from] AnalyticsError),
    #[error(transparent)]
    CrossCheck(#[from] CrossCheckError),
    #[error(transparent)]
    Phy(#[from] PhyError),
    #[error("every (utilization, slots) combination is unstable")]
    AllUnstable,
}

/// records.csv, cdf.csv, summary.json, energy.csv and the stack's trace file.
pub fn simulation_artifacts(
    scenario: &ScenarioConfig,
    profiles: &StackProfiles,
) -> Result<SimulationArtifacts, ArtifactError> {
    let output = run(scenario)?;
    let metrics = summarize(&output.records);
    let summary = RunSummary {
        scenario: scenario.name.clone(),
        stack: scenario.stack,
        seed: scenario.seed,
        duration_s: scenario.duration_s,
        frame_bytes: scenario.frame_bytes(),
        time_on_air_ms: time_on_air(&scenario.phy, scenario.frame_bytes())?.as_millis_f64(),
        metrics,
    };
    let mut files = OutputSet::new();
    files.add("records.csv", records_csv(&output.records));
    let cdf = match completion_cdf(&output.records) {
        Ok(c) => c.csv(),
        Err(_) => "t_s,F\n".to_string(),
    };
    files.add("cdf.csv", cdf);
    files.add_json("summary.json", &summary);
    let usage = device_usage(scenario, &output)?;
    files.add("energy.csv", energy_csv(&device_energy(&usage, profiles)));
    if let Some(schedule) = &output.schedule {
        files.add("gts_schedule.csv", schedule.csv());
    }
    if let Some(trace) = &output.lorawan {
        files.add("lorawan_events.csv", trace.events_csv());
    }
    Ok(SimulationArtifacts {
        output,
        summary,
        files,
    })
}

/// model_sweep.csv; fails when no combination is stable.
pub fn sweep_artifacts(
    utilizations: &[f64],
    slot_counts: &[u32],
    t_msf: f64,
    max_n: usize,
) -> Result<(Vec<SweepRow>, OutputSet), ArtifactError> {
    let rows = sweep(utilizations, slot_counts, t_msf, max_n)?;
    if rows.iter().all(SweepRow::is_unstable) {
        return Err(ArtifactError::AllUnstable);
    }
    let mut files = OutputSet::new();
    files.add("model_sweep.csv", sweep_csv(&rows));
    Ok((rows, files))
}

/// The analytic CDF, the Monte-Carlo oracle and the slotted simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rho: f64,
    pub n_slots: u32,
    pub t_msf: f64,
    pub oracle_arrivals: u64,
    pub simulated_packets: usize,
    pub model: DelayCdf,
    pub oracle: DelayCdf,
    pub simulation: DelayCdf,
    pub sup_model_oracle: f64,
    pub sup_model_simulation: f64,
    pub sup_oracle_simulation: f64,
}

pub const COMPARE_CSV_HEADER: &str = "rho,n_slots,n_msf,model,oracle,simulation";

impl ComparisonReport {
    pub fn csv_rows(&self, max_n: usize) -> String {
        let mut s = String::new();
        for n in 0..=max_n {
            s.push_str(&format!(
                "{},{},{},{:.9},{:.9},{:.9}\n",
                self.rho,
                self.n_slots,
                n,
                self.model.at(n),
                self.oracle.at(n),
                self.simulation.at(n)
            ));
        }
        s
    }
}

fn sup(a: &DelayCdf, b: &DelayCdf, max_n: usize) -> f64 {
    (1..=max_n).map(|n| (a.at(n) - b.at(n)).abs()).fold(0.0, f64::max)
}

pub fn comparison(
    rho: f64,
    n_slots: u32,
    oracle_arrivals: u64,
    sim_packets: usize,
    max_n: usize,
    seed: u64,
) -> Result<ComparisonReport, ArtifactError> {
    let check = cross_check(rho, n_slots, sim_packets, max_n, seed)?;
    let t_msf = crate::dsme::DsmeConfig::default().superframe.multisuperframe().as_secs_f64();
    let params = ModelParams::from_utilization(rho, t_msf, n_slots)?;
    let model = model_delay_cdf(&params)?;
    let oracle = mc_oracle(&params, oracle_arrivals, seed)?.delay;
    Ok(ComparisonReport {
        rho,
        n_slots,
        t_msf,
        oracle_arrivals,
        simulated_packets: check.packets,
        sup_model_oracle: sup(&model, &oracle, max_n),
        sup_model_simulation: sup(&model, &check.simulated, max_n),
        sup_oracle_simulation: sup(&oracle, &check.simulated, max_n),
        model,
        oracle,
        simulation: check.simulated,
    })
}

/// compare.csv and compare.json for a list of comparisons.
pub fn comparison_files(reports: &[ComparisonReport], max_n: usize) -> OutputSet {
    let mut csv = format!("{COMPARE_CSV_HEADER}\n");
    for r in reports {
        csv.push_str(&r.csv_rows(max_n));
    }
    let mut files = OutputSet::new();
    files.add("compare.csv", csv);
    files.add_json("compare.json", &reports);
    files
}

/// frame_report.json for a template with a fully eliding rule.
pub fn frame_artifacts(template: &PacketTemplate, phy: &PhyParams) -> Result<(FrameReport, OutputSet), ArtifactError> {
    let report = compare(
        template,
        &SchcRule::full_elision(1, template),
        &SixlowpanContext::default(),
        phy,
    )?;
    let mut files = OutputSet::new();
    files.add_json("frame_report.json", &report);
    Ok((report, files))
}

pub fn frame_table(r: &FrameReport) -> String {
    let mut s = String::from("| | SCHC / LoRaWAN | 6LoWPAN / DSME |\n|---|---|---|\n");
    let rows: [(&str, usize, usize); 5] = [
        ("L2 header (B)", r.schc.l2_header_bytes, r.sixlowpan.l2_header_bytes),
        ("adaptation residue (B)", r.schc.adaptation_bytes, r.sixlowpan.adaptation_bytes),
        ("IPv6+UDP on air (B)", r.schc.compressed_ip_udp_bytes, r.sixlowpan.compressed_ip_udp_bytes),
        ("CoAP header + marker (B)", r.schc.upper_header_bytes, r.sixlowpan.upper_header_bytes),
        ("total PHY payload (B)", r.schc_total_bytes, r.sixlowpan_total_bytes),
    ];
    for (label, a, b) in rows {
        s.push_str(&format!("| {label} | {a} | {b} |\n"));
    }
    s.push_str(&format!(
        "| IPv6+UDP compression ratio | {:.1} | {:.1} |\n",
        r.schc_ratio, r.sixlowpan_ratio
    ));
    s.push_str(&format!("| time on air (ms) | {:.3} | {:.3} |\n", r.toa_schc_ms, r.toa_6lo_ms));
    s
}
