//! Command-line front end. [`run`] parses arguments, executes one command
//! and returns the process exit code: 0 on success, 1 for configuration
//! errors, 2 for runtime or numerical failures.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use coherence_core::harness::{self, EvalMode, ExperimentKind, ExperimentReport, ExperimentSpec};
use coherence_core::scheduler::{
    advance_delays, brute_force_schedule, objective, submod_max_cardinality, ApproxConfig, SchedulingInstance,
    BRUTE_FORCE_GUARD,
};
use coherence_core::Error;

pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;

#[derive(Parser, Debug)]
#[command(name = "coherence", version, about = "Uplink training experiments for multi-cell massive MIMO with channel aging")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Per-cell spectral-efficiency distributions of both schemes
    Cdf(ExperimentArgs),
    /// Closed-form bound and simulated rate versus antenna count
    RateVsM(ExperimentArgs),
    /// Scheduler objective versus training budget
    WeightedVsTau(ExperimentArgs),
    /// Solve one scheduling instance
    Schedule(ScheduleArgs),
    /// Run the built-in property checks
    Validate(ValidateArgs),
}

#[derive(Args, Debug)]
struct ExperimentArgs {
    /// `key = value` configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory
    #[arg(long)]
    out: Option<PathBuf>,
    /// Monte-Carlo drops per point
    #[arg(long)]
    drops: Option<usize>,
    /// Scenario redraws
    #[arg(long)]
    redraws: Option<usize>,
    /// closed_form, monte_carlo or both
    #[arg(long)]
    mode: Option<EvalMode>,
}

#[derive(Args, Debug)]
struct ScheduleArgs {
    /// JSON instance; without it one is built from the weighted-vs-tau
    /// configuration and written next to the result
    #[arg(long)]
    instance: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Local-search improvement threshold
    #[arg(long)]
    eps: Option<f64>,
}

#[derive(Args, Debug)]
struct ValidateArgs {
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        if e.is_config_error() {
            Failure::Config(e.to_string())
        } else {
            Failure::Runtime(e.to_string())
        }
    }
}

pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Cdf(a) => experiment(ExperimentKind::Cdf, a),
        Command::RateVsM(a) => experiment(ExperimentKind::RateVsM, a),
        Command::WeightedVsTau(a) => experiment(ExperimentKind::WeightedVsTau, a),
        Command::Schedule(a) => schedule(a),
        Command::Validate(a) => validate(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Config(m)) => {
            eprintln!("configuration error: {m}");
            EXIT_CONFIG
        }
        Err(Failure::Runtime(m)) => {
            eprintln!("error: {m}");
            EXIT_RUNTIME
        }
    }
}

fn load_spec(kind: ExperimentKind, config: Option<&Path>, seed: Option<u64>) -> Result<ExperimentSpec, Failure> {
    let mut spec = ExperimentSpec::preset(kind);
    if let Some(path) = config {
        // an unreadable config file is a configuration problem
        spec.apply_file(path).map_err(|e| Failure::Config(e.to_string()))?;
    }
    if let Some(seed) = seed {
        spec.scenario.rng_seed = seed;
    }
    Ok(spec)
}

fn experiment(kind: ExperimentKind, a: ExperimentArgs) -> Result<(), Failure> {
    let mut spec = load_spec(kind, a.config.as_deref(), a.seed)?;
    if let Some(d) = a.drops {
        spec.num_drops = d;
    }
    if let Some(r) = a.redraws {
        spec.redraws = r;
    }
    if let Some(m) = a.mode {
        spec.mode = m;
    }
    spec.validate(kind)?;
    let report = harness::run(kind, &spec)?;
    let out = a.out.unwrap_or_else(|| PathBuf::from("out").join(kind.name()));
    harness::emit_report(&report, &out)?;
    summarize(&report, &spec);
    println!("wrote {}", out.display());
    Ok(())
}

fn summarize(report: &ExperimentReport, spec: &ExperimentSpec) {
    let mbps = spec.bandwidth / 1e6;
    for o in &report.outages {
        println!(
            "{:<28} {:>4.0}%-outage {:>9.3} bit/s/Hz ({:.1} Mbit/s)",
            o.name,
            o.quantile * 100.0,
            o.value,
            o.value * mbps
        );
    }
    if report.kind != ExperimentKind::Cdf {
        for c in &report.curves {
            let values: Vec<String> = c.points.iter().map(|p| format!("{}:{:.4}", p.x, p.y)).collect();
            println!("{:<24} {}", c.name, values.join(" "));
        }
    }
}

fn schedule(a: ScheduleArgs) -> Result<(), Failure> {
    let out = a.out.unwrap_or_else(|| PathBuf::from("out").join("schedule"));
    std::fs::create_dir_all(&out).map_err(|e| Failure::Runtime(format!("{}: {e}", out.display())))?;
    let spec = load_spec(ExperimentKind::WeightedVsTau, a.config.as_deref(), a.seed)?;
    let instance: SchedulingInstance = match &a.instance {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
            serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?
        }
        None => {
            spec.validate(ExperimentKind::WeightedVsTau)?;
            let real = harness::realize(&spec, 0)?;
            let budget = *spec.trained.iter().max().unwrap_or(&0);
            let mut inst = SchedulingInstance::from_scenario(
                &real.scenario,
                &real.groups,
                real.weights.clone(),
                real.delays(),
                budget,
                spec.antennas[0],
            )?;
            inst.refresh = spec.refresh;
            let path = out.join("instance.json");
            let text = serde_json::to_string_pretty(&inst).map_err(|e| Failure::Runtime(e.to_string()))?;
            std::fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
            inst
        }
    };
    instance.validate()?;
    let config = ApproxConfig {
        local_search_eps: a.eps.unwrap_or(spec.approx.local_search_eps),
        ..spec.approx
    };
    let sol = submod_max_cardinality(&instance, &config)?;
    let oracle = if instance.num_groups() <= BRUTE_FORCE_GUARD {
        Some(brute_force_schedule(&instance)?)
    } else {
        None
    };
    let next = advance_delays(&instance.delays, &sol.schedule);
    let path = out.join("schedule.csv");
    let mut text = String::from("group,selected,delay,next_delay\n");
    for g in 0..instance.num_groups() {
        text.push_str(&format!(
            "{g},{},{},{}\n",
            u8::from(sol.schedule.contains(g)),
            instance.delays[g],
            next[g]
        ));
    }
    std::fs::write(&path, text).map_err(|e| Failure::Runtime(format!("{}: {e}", path.display())))?;
    let baseline = objective(&instance, &coherence_core::ScheduleVector::empty(instance.num_groups()))?;
    println!("selected {:?}", sol.schedule.selected());
    println!("objective {:.6} (no training {:.6}, alpha {})", sol.objective, baseline, sol.alpha);
    if let Some(o) = oracle {
        println!("optimum   {:.6} {:?}", o.objective, o.schedule.selected());
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn validate(a: ValidateArgs) -> Result<(), Failure> {
    let checks = harness::run_checks(a.seed)?;
    let mut failed = 0;
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
        failed += usize::from(!c.passed);
    }
    if failed > 0 {
        return Err(Failure::Runtime(format!("{failed} check(s) failed")));
    }
    Ok(())
}
