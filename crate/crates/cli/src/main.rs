use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use swarm_planner::environment::{load_scenario, Scenario};
use swarm_planner::evaluation::{ConstraintKind, CostTerm};
use swarm_planner::replanner::{run_simulation, write_outputs, CycleConfig, Planner, ReplanError};

const EXIT_VALIDATION: u8 = 2;
const EXIT_PLANNING: u8 = 3;

#[derive(Parser)]
#[command(name = "swarm-planner", version, about = "Particle swarm motion planning on scenario files")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one planning cycle and write the trajectory, cost breakdown and swarm stats.
    Plan {
        scenario: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Run the closed planning loop and write per-cycle traces.
    Simulate {
        scenario: PathBuf,
        /// Simulated seconds; defaults to the scenario's simulation.duration.
        #[arg(long)]
        duration: Option<f64>,
        /// Replanning rate in Hz; defaults to the scenario's simulation.rate.
        #[arg(long)]
        rate: Option<f64>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Report the distribution of cycle times.
    Bench {
        scenario: PathBuf,
        #[arg(long, default_value_t = 50)]
        cycles: usize,
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Parse and check a scenario without planning.
    Validate { scenario: PathBuf },
}

/// Failure classes mapped onto exit codes.
enum Failure {
    Validation(String),
    Planning(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Other(e)
    }
}

fn load(path: &Path, seed: Option<u64>) -> Result<Scenario, Failure> {
    let mut scenario = load_scenario(path).map_err(|e| Failure::Validation(format!("{}: {e}", path.display())))?;
    if let Some(seed) = seed {
        scenario.planner.swarm.seed = seed;
    }
    Ok(scenario)
}

fn plan(scenario_path: &Path, seed: Option<u64>, out: &Path, threads: Option<usize>) -> Result<(), Failure> {
    let scenario = load(scenario_path, seed)?;
    let mut planner = Planner::new(&scenario, CycleConfig::from_scenario(&scenario), threads)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let result = planner.plan(0.0).map_err(|e| Failure::Planning(e.to_string()))?;

    std::fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    std::fs::write(out.join("trajectory.csv"), result.trajectory.to_csv()).context("writing trajectory")?;
    let mut costs = String::from("term,raw,weighted\n");
    for t in CostTerm::ALL {
        costs.push_str(&format!("{},{},{}\n", t.name(), result.costs.raw(t), result.costs.weighted(t)));
    }
    costs.push_str(&format!("total,,{}\n", result.costs.total));
    std::fs::write(out.join("costs.csv"), costs).context("writing costs")?;
    std::fs::write(out.join("stats.csv"), result.stats.to_csv()).context("writing stats")?;
    let mut margins = String::from("constraint,margin\n");
    for k in ConstraintKind::ALL {
        margins.push_str(&format!("{},{}\n", k.name(), result.constraints.margin(k)));
    }
    std::fs::write(out.join("constraints.csv"), margins).context("writing constraints")?;

    println!(
        "total cost {:.6}, {} of {} particles valid, {} iterations ({:?}), {:.1} ms",
        result.costs.total,
        result.stats.valid_final(),
        scenario.planner.swarm.n_particles,
        result.stats.iterations_run,
        result.stats.termination,
        result.wall_time * 1e3
    );
    for t in CostTerm::ALL {
        println!("  {:<20} {:.6}", t.name(), result.costs.weighted(t));
    }
    println!("wrote {}", out.display());
    Ok(())
}

fn simulate(
    scenario_path: &Path,
    duration: Option<f64>,
    rate: Option<f64>,
    seed: Option<u64>,
    out: &Path,
    threads: Option<usize>,
) -> Result<(), Failure> {
    let mut scenario = load(scenario_path, seed)?;
    if let Some(d) = duration {
        scenario.simulation.duration = d;
    }
    if let Some(r) = rate {
        scenario.simulation.rate = r;
    }
    scenario.validate().map_err(|e| Failure::Validation(e.to_string()))?;
    let outcome = run_simulation(&scenario, CycleConfig::from_scenario(&scenario), threads)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    write_outputs(out, &outcome.results, scenario.planner.swarm.n_particles)
        .with_context(|| format!("writing outputs to {}", out.display()))?;
    let n = outcome.results.len();
    let mean_ms = outcome.results.iter().map(|r| r.wall_time).sum::<f64>() * 1e3 / n.max(1) as f64;
    println!("{n} cycles planned, mean {mean_ms:.1} ms per cycle");
    if outcome.reached_end {
        println!("ego reached the end of the driving area");
    }
    println!("wrote {}", out.display());
    match outcome.failure {
        Some(e @ (ReplanError::PlanningFailure { .. } | ReplanError::Trajectory { .. })) => Err(Failure::Planning(e.to_string())),
        Some(e) => Err(Failure::Validation(e.to_string())),
        None => Ok(()),
    }
}

fn percentile(sorted: &[f64], q: f64) -> f64 {
    let rank = (q * (sorted.len() - 1) as f64).round() as usize;
    sorted[rank]
}

fn bench(scenario_path: &Path, cycles: usize, threads: Option<usize>) -> Result<(), Failure> {
    let mut scenario = load(scenario_path, None)?;
    scenario.simulation.duration = cycles as f64 / scenario.simulation.rate;
    let outcome = run_simulation(&scenario, CycleConfig::from_scenario(&scenario), threads)
        .map_err(|e| Failure::Validation(e.to_string()))?;
    let mut ms: Vec<f64> = outcome.results.iter().map(|r| r.wall_time * 1e3).collect();
    if ms.is_empty() {
        return Err(Failure::Planning("no cycle completed".into()));
    }
    ms.sort_by(f64::total_cmp);
    let threads_used = Planner::new(&scenario, CycleConfig::from_scenario(&scenario), threads)
        .map(|p| p.threads())
        .unwrap_or(0);
    println!(
        "{} cycles, {} particles, {} threads: median {:.2} ms, p95 {:.2} ms, max {:.2} ms",
        ms.len(),
        scenario.planner.swarm.n_particles,
        threads_used,
        percentile(&ms, 0.5),
        percentile(&ms, 0.95),
        ms[ms.len() - 1]
    );
    match outcome.failure {
        Some(e) => Err(Failure::Planning(e.to_string())),
        None => Ok(()),
    }
}

fn validate(scenario_path: &Path) -> Result<(), Failure> {
    let scenario = load(scenario_path, None)?;
    println!(
        "{}: ok ({} static, {} dynamic obstacles, {} stop lines)",
        scenario_path.display(),
        scenario.static_obstacles.len(),
        scenario.dynamic_obstacles.len(),
        scenario.stop_lines.len()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Plan {
            scenario,
            seed,
            out,
            threads,
        } => plan(&scenario, seed, &out, threads),
        Command::Simulate {
            scenario,
            duration,
            rate,
            seed,
            out,
            threads,
        } => simulate(&scenario, duration, rate, seed, &out, threads),
        Command::Bench {
            scenario,
            cycles,
            threads,
        } => bench(&scenario, cycles, threads),
        Command::Validate { scenario } => validate(&scenario),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Validation(msg)) => {
            eprintln!("validation failed: {msg}");
            ExitCode::from(EXIT_VALIDATION)
        }
        Err(Failure::Planning(msg)) => {
            eprintln!("planning failed: {msg}");
            ExitCode::from(EXIT_PLANNING)
        }
        Err(Failure::Other(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
