//! Command-line front end. Every subcommand renders its files in memory and
//! writes them only after all of them succeeded.
//!
//! Exit codes: 0 success, 1 I/O or internal error, 2 invalid arguments or
//! scenario, 3 infeasible GTS schedule, 4 every sweep combination unstable.

pub mod artifacts;
pub mod reproduce;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};

use crate::analytics::DEFAULT_T_MSF;
use crate::compression::PacketTemplate;
use crate::energy::StackProfiles;
use crate::engine::{RunError, ScenarioConfig};
use crate::output::OutputSet;
use crate::phy::PhyParams;
use artifacts::{
    comparison, comparison_files, frame_artifacts, frame_table, simulation_artifacts, sweep_artifacts, ArtifactError,
};
use reproduce::{reproduce, run_suite, ReproduceOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_INVALID: i32 = 2;
pub const EXIT_INFEASIBLE: i32 = 3;
pub const EXIT_UNSTABLE: i32 = 4;

/// Environment variable naming the default output directory.
pub const OUT_ENV: &str = "LPWAN_SIM_OUT";

#[derive(Debug, Parser)]
#[command(name = "lpwan-sim", version, about = "DSME-LoRa and LoRaWAN class A/C simulation and delay model")]
pub struct Cli {
    /// Output directory.
    #[arg(long, global = true, env = OUT_ENV, default_value = "out")]
    pub out: PathBuf,
    /// Format of the summary printed on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run one scenario file.
    Simulate {
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        /// Override the scenario duration, seconds.
        #[arg(long)]
        duration: Option<f64>,
        /// Power profiles for energy.csv (JSON).
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Sweep the analytic delay model over utilizations and slot counts.
    Analyze {
        /// System utilizations in percent (rho = lambda * T_msf).
        #[arg(long, value_delimiter = ',', default_values_t = default_utilization_pct())]
        utilization: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1u32, 2, 3])]
        slots: Vec<u32>,
        #[arg(long, default_value_t = DEFAULT_T_MSF)]
        t_msf: f64,
        #[arg(long, default_value_t = 10)]
        max_n: usize,
    },
    /// Analytic model against the Monte-Carlo oracle and the slotted simulation.
    Compare {
        #[arg(long, default_value_t = 0.6)]
        rho: f64,
        #[arg(long, default_value_t = 1)]
        slots: u32,
        #[arg(long, default_value_t = 1_000_000)]
        arrivals: u64,
        #[arg(long, default_value_t = 50_000)]
        sim_packets: usize,
        #[arg(long, default_value_t = 10)]
        max_n: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
    },
    /// Frame layouts and time on air of both stacks.
    Frames {
        /// Application payload bytes; ignored when --template is given.
        #[arg(long, default_value_t = crate::compression::TESTBED_PAYLOAD_BYTES)]
        payload: usize,
        /// Packet template (JSON).
        #[arg(long)]
        template: Option<PathBuf>,
    },
    /// Energy table over the six testbed scenarios.
    Energy {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long, default_value_t = 3600.0)]
        duration: f64,
        #[arg(long)]
        profiles: Option<PathBuf>,
    },
    /// Regenerate every artifact and REPORT.md.
    Reproduce {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Number of consecutive seeds per scenario.
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long, default_value_t = 3600.0)]
        duration: f64,
        #[arg(long, default_value_t = 1_000_000)]
        arrivals: u64,
        #[arg(long, default_value_t = 50_000)]
        sim_packets: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
}

fn default_utilization_pct() -> Vec<f64> {
    reproduce::sweep_utilizations().iter().map(|r| (r * 100.0).round()).collect()
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Invalid(String),
    #[error("{0}")]
    Infeasible(String),
    #[error("{0}")]
    Unstable(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Invalid(_) => EXIT_INVALID,
            CliError::Infeasible(_) => EXIT_INFEASIBLE,
            CliError::Unstable(_) => EXIT_UNSTABLE,
            CliError::Io(_) => EXIT_IO,
        }
    }
}

impl From<ArtifactError> for CliError {
    fn from(e: ArtifactError) -> Self {
        match e {
            ArtifactError::Run(RunError::Schedule(s)) => CliError::Infeasible(s.to_string()),
            ArtifactError::Run(RunError::Scenario(s)) => CliError::Invalid(s.to_string()),
            ArtifactError::CrossCheck(crate::dsme::CrossCheckError::Run(RunError::Schedule(s))) => {
                CliError::Infeasible(s.to_string())
            }
            ArtifactError::AllUnstable => CliError::Unstable(e.to_string()),
            other => CliError::Invalid(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Invalid(format!("{}: {e}", path.display())))
}

fn load_profiles(path: Option<&Path>) -> Result<StackProfiles, CliError> {
    let Some(p) = path else { return Ok(StackProfiles::default()) };
    let profiles: StackProfiles =
        serde_json::from_str(&read(p)?).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?;
    profiles.lorawan.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    profiles.dsme.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
    Ok(profiles)
}

/// Result of one command: files to write and a summary for stdout.
pub struct CommandOutput {
    pub files: OutputSet,
    pub text: String,
    pub json: serde_json::Value,
}

pub fn execute(command: &Command) -> Result<CommandOutput, CliError> {
    match command {
        Command::Simulate { config, seed, duration, profiles } => {
            let mut scenario = ScenarioConfig::from_json(&read(config)?)
                .map_err(|e| CliError::Invalid(format!("{}: {e}", config.display())))?;
            if let Some(seed) = seed {
                scenario.seed = *seed;
            }
            if let Some(d) = duration {
                scenario.duration_s = *d;
            }
            scenario.validate().map_err(|e| CliError::Invalid(e.to_string()))?;
            let profiles = load_profiles(profiles.as_deref())?;
            let a = simulation_artifacts(&scenario, &profiles)?;
            let m = &a.summary.metrics;
            let text = format!(
                "{}: scheduled {} delivered {} lost {} in flight {}\nPRR {:.4}  DER {:.4}  delta {:.4}\ncompletion p50 {} s  p95 {} s  max {} s\n",
                scenario.name,
                m.scheduled,
                m.delivered,
                m.lost,
                m.in_flight,
                m.prr,
                m.data_extraction_ratio,
                m.delta,
                fmt_opt(m.completion_p50_s),
                fmt_opt(m.completion_p95_s),
                fmt_opt(m.completion_max_s),
            );
            Ok(CommandOutput {
                json: serde_json::to_value(&a.summary).expect("serializable"),
                files: a.files,
                text,
            })
        }
        Command::Analyze { utilization, slots, t_msf, max_n } => {
            if utilization.is_empty() || slots.is_empty() || slots.contains(&0) {
                return Err(CliError::Invalid("need at least one utilization and slot counts >= 1".into()));
            }
            let rhos: Vec<f64> = utilization.iter().map(|p| p / 100.0).collect();
            let (rows, files) = sweep_artifacts(&rhos, slots, *t_msf, *max_n)?;
            let unstable = rows.iter().filter(|r| r.is_unstable()).count();
            let mut text = String::from("utilization %  N  F(1)\n");
            for r in rows.iter().filter(|r| r.n_msf == Some(1) || r.is_unstable()) {
                let f = r.cdf.map(|v| format!("{v:.4}")).unwrap_or_else(|| "unstable".into());
                text.push_str(&format!("{:>13}  {}  {}\n", r.utilization_pct, r.n_slots, f));
            }
            Ok(CommandOutput {
                files,
                json: serde_json::json!({ "rows": rows.len(), "unstable": unstable }),
                text,
            })
        }
        Command::Compare { rho, slots, arrivals, sim_packets, max_n, seed } => {
            let c = comparison(*rho, *slots, *arrivals, *sim_packets, *max_n, *seed)?;
            let mut text = format!("rho {} N {}\n n  model    oracle   simulation\n", c.rho, c.n_slots);
            for n in 1..=*max_n {
                text.push_str(&format!(
                    "{n:>2}  {:.4}   {:.4}   {:.4}\n",
                    c.model.at(n),
                    c.oracle.at(n),
                    c.simulation.at(n)
                ));
            }
            text.push_str(&format!(
                "sup |model-oracle| {:.4}  |model-simulation| {:.4}  |oracle-simulation| {:.4}\n",
                c.sup_model_oracle, c.sup_model_simulation, c.sup_oracle_simulation
            ));
            Ok(CommandOutput {
                files: comparison_files(std::slice::from_ref(&c), *max_n),
                json: serde_json::to_value(&c).expect("serializable"),
                text,
            })
        }
        Command::Frames { payload, template } => {
            let t = match template {
                Some(p) => serde_json::from_str::<PacketTemplate>(&read(p)?)
                    .map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))?,
                None => PacketTemplate::with_payload(*payload),
            };
            t.validate().map_err(CliError::Invalid)?;
            let (report, files) = frame_artifacts(&t, &PhyParams::default())?;
            Ok(CommandOutput {
                files,
                text: frame_table(&report),
                json: serde_json::to_value(&report).expect("serializable"),
            })
        }
        Command::Energy { seed, duration, profiles } => {
            if !(*duration > 0.0) {
                return Err(CliError::Invalid("duration must be > 0".into()));
            }
            let profiles = load_profiles(profiles.as_deref())?;
            let threads = std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1);
            let runs = run_suite(&[*seed], *duration, &profiles, threads)?;
            let usage = reproduce::energy_usage(&runs, *seed)?;
            let table = crate::energy::energy_report(&usage, &profiles).map_err(ArtifactError::from)?;
            let checks = crate::energy::check_profiles(&usage, &crate::energy::profile_grid())
                .map_err(ArtifactError::from)?;
            let mut files = OutputSet::new();
            files.add(
                "energy.csv",
                crate::energy::energy_csv(&crate::energy::device_energy(&usage, &profiles)),
            );
            files.add("energy_table.md", table.markdown());
            files.add("energy_profiles.csv", crate::energy::profile_csv(&checks));
            Ok(CommandOutput {
                files,
                text: table.markdown(),
                json: serde_json::to_value(&table).expect("serializable"),
            })
        }
        Command::Reproduce { seed, seeds, duration, arrivals, sim_packets, threads } => {
            let mut options = ReproduceOptions {
                seed: *seed,
                seeds: *seeds,
                duration_s: *duration,
                oracle_arrivals: *arrivals,
                sim_packets: *sim_packets,
                ..ReproduceOptions::default()
            };
            if let Some(t) = threads {
                options.threads = *t;
            }
            if !(options.duration_s > 0.0) || options.seeds == 0 {
                return Err(CliError::Invalid("duration must be > 0 and seeds >= 1".into()));
            }
            let r = reproduce(&options)?;
            let text = r.files.get("REPORT.md").unwrap_or_default().to_string();
            Ok(CommandOutput {
                json: serde_json::json!({ "files": r.files.len() }),
                files: r.files,
                text,
            })
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "-".into())
}

/// Parses `args`, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INVALID } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(out) => match out.files.write_to(&cli.out) {
            Ok(paths) => {
                let mut stdout = std::io::stdout().lock();
                let _ = match cli.format {
                    Format::Text => write!(stdout, "{}", out.text),
                    Format::Json => writeln!(stdout, "{}", out.json),
                };
                for p in paths {
                    eprintln!("wrote {}", p.display());
                }
                EXIT_OK
            }
            Err(e) => {
                eprintln!("error: writing to {}: {e}", cli.out.display());
                EXIT_IO
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
