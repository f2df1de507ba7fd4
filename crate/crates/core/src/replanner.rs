//! The continuous planning loop.
//!
//! Every cycle cuts the previous plan at the current time, freezes the part
//! that will be executed before the new plan can take over, and lets the swarm
//! optimize the rest. The ego vehicle follows the plan exactly.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use thiserror::Error;

use crate::control_space::Pose;
use crate::environment::Scenario;
use crate::evaluation::{cost_trace_header, cost_trace_row, ConstraintReport, CostBreakdown, Evaluator};
use crate::pso::{best_outcome, Engine, PlanError, Problem, SwarmMemory, SwarmStats};
use crate::trajectory::{truncate_and_freeze, Trajectory, TrajectoryError};

/// The simulation stops once the ego front is this close to the end of the
/// centerline.
pub const END_OF_AREA_MARGIN: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ReplanError {
    #[error("planning failed in cycle {cycle}: {source}")]
    PlanningFailure { cycle: usize, source: PlanError },
    #[error("cycle {cycle}: {source}")]
    Trajectory { cycle: usize, source: TrajectoryError },
    #[error("invalid cycle configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CycleConfig {
    pub replan_period: f64,
    pub pipeline_latency: f64,
    pub sim_duration: f64,
}

impl CycleConfig {
    pub fn from_scenario(scenario: &Scenario) -> Self {
        Self {
            replan_period: 1.0 / scenario.simulation.rate,
            pipeline_latency: scenario.planner.pipeline_latency,
            sim_duration: scenario.simulation.duration,
        }
    }

    pub fn freeze_duration(&self) -> f64 {
        self.replan_period + self.pipeline_latency
    }

    /// Number of cycles, started at `k · replan_period` for every `k` with
    /// `k · replan_period < sim_duration`.
    pub fn cycles(&self) -> usize {
        let n = self.sim_duration / self.replan_period;
        (n - 1e-9).ceil().max(0.0) as usize
    }

    pub fn validate(&self, horizon: f64) -> Result<(), String> {
        if !(self.replan_period > 0.0) {
            return Err(format!("replan_period must be positive, got {}", self.replan_period));
        }
        if !(self.pipeline_latency >= 0.0) || !(self.sim_duration >= 0.0) {
            return Err("pipeline_latency and sim_duration must be >= 0".into());
        }
        if horizon <= self.freeze_duration() {
            return Err(format!(
                "horizon of {horizon:.3} s must exceed replan period plus latency ({:.3} s)",
                self.freeze_duration()
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanResult {
    pub cycle_index: usize,
    /// Simulated time at which the cycle started.
    pub time: f64,
    /// Ego pose at `time`, interpolated on the previous plan.
    pub ego_pose: Pose,
    pub trajectory: Trajectory,
    pub costs: CostBreakdown,
    pub constraints: ConstraintReport,
    pub stats: SwarmStats,
    /// Seconds of wall-clock time spent on the cycle.
    pub wall_time: f64,
}

/// Runs planning cycles for one scenario and carries the swarm between them.
pub struct Planner<'s> {
    scenario: &'s Scenario,
    cycle: CycleConfig,
    engine: Engine,
    previous: Option<Trajectory>,
    memory: Option<SwarmMemory>,
    cycles_run: usize,
}

impl<'s> Planner<'s> {
    pub fn new(scenario: &'s Scenario, cycle: CycleConfig, threads: Option<usize>) -> Result<Self, ReplanError> {
        cycle
            .validate(scenario.planner.horizon_duration())
            .map_err(ReplanError::Config)?;
        let engine = Engine::new(threads.or(scenario.planner.threads))
            .map_err(|e| ReplanError::Config(e.to_string()))?;
        Ok(Self {
            scenario,
            cycle,
            engine,
            previous: None,
            memory: None,
            cycles_run: 0,
        })
    }

    pub fn threads(&self) -> usize {
        self.engine.threads()
    }

    pub fn previous(&self) -> Option<&Trajectory> {
        self.previous.as_ref()
    }

    fn initial_template(&self) -> Trajectory {
        let p = &self.scenario.planner;
        let mut poses = self.scenario.ego_prefix.clone();
        poses.push(self.scenario.ego_start);
        // only the head is read; the free part is generated by the swarm
        Trajectory {
            poses,
            dt: p.dt,
            t0: -(p.prefix_len as f64) * p.dt,
            prefix_len: p.prefix_len,
            frozen_len: 0,
        }
    }

    /// Plans the cycle starting at simulated time `now`.
    pub fn plan(&mut self, now: f64) -> Result<PlanResult, ReplanError> {
        let started = Instant::now();
        let index = self.cycles_run;
        let cfg = &self.scenario.planner;
        let (template, ego_pose) = match &self.previous {
            None => (self.initial_template(), self.scenario.ego_start),
            Some(prev) => {
                let template = truncate_and_freeze(prev, now, self.cycle.freeze_duration())
                    .map_err(|source| ReplanError::Trajectory { cycle: index, source })?;
                let ego = prev.pose_at_time(now).unwrap_or(*template.anchor());
                (template, ego)
            }
        };
        let anchor_time = template.time_at(template.anchor_index());
        let snapshot = self.scenario.snapshot_at(
            now,
            anchor_time,
            *template.anchor(),
            template.poses[..template.prefix_len].to_vec(),
        );
        let fail = |source: PlanError| ReplanError::PlanningFailure { cycle: index, source };
        let exact = Evaluator::new(&snapshot, cfg.weights, cfg.limits, cfg.costs, cfg.horizon_steps)
            .map_err(|e| fail(e.into()))?;
        let fast = exact.clone().with_bounded_clearance();
        let problem = Problem::new(&template, &fast, cfg.horizon_steps, index as u64).map_err(fail)?;

        let mut swarm = self
            .engine
            .initialize_swarm(&problem, self.memory.as_ref(), &cfg.swarm)
            .map_err(fail)?;
        let stats = self.engine.optimize(&problem, &mut swarm, &cfg.swarm).map_err(fail)?;
        let outcome = best_outcome(&problem, &swarm, &exact).map_err(fail)?;
        if !outcome.constraints.valid {
            return Err(fail(PlanError::NoValidParticle {
                rounds: swarm.sampling_rounds,
            }));
        }

        self.memory = swarm.memory(problem.start_tick());
        self.previous = Some(outcome.trajectory.clone());
        self.cycles_run += 1;
        Ok(PlanResult {
            cycle_index: index,
            time: now,
            ego_pose,
            trajectory: outcome.trajectory,
            costs: outcome.costs,
            constraints: outcome.constraints,
            stats,
            wall_time: started.elapsed().as_secs_f64(),
        })
    }

    /// Whether the ego front has reached the end of the driving area.
    pub fn reached_end(&self, ego: &Pose) -> bool {
        let centerline = &self.scenario.centerline;
        let front = centerline.project(ego.position()).station + 0.5 * self.scenario.footprint.length();
        front >= centerline.length() - END_OF_AREA_MARGIN
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationOutcome {
    pub results: Vec<PlanResult>,
    /// Set when a cycle failed; the simulation stops there.
    pub failure: Option<ReplanError>,
    pub reached_end: bool,
}

impl SimulationOutcome {
    pub fn failed_cycle(&self) -> Option<usize> {
        match &self.failure {
            Some(ReplanError::PlanningFailure { cycle, .. } | ReplanError::Trajectory { cycle, .. }) => Some(*cycle),
            _ => None,
        }
    }
}

/// Runs the closed loop for `cfg.sim_duration` seconds or until the ego
/// reaches the end of the driving area.
pub fn run_simulation(
    scenario: &Scenario,
    cfg: CycleConfig,
    threads: Option<usize>,
) -> Result<SimulationOutcome, ReplanError> {
    let mut planner = Planner::new(scenario, cfg, threads)?;
    let mut results = Vec::new();
    let mut failure = None;
    let mut reached_end = false;
    for k in 0..cfg.cycles() {
        let now = k as f64 * cfg.replan_period;
        let ego = match planner.previous() {
            Some(prev) => prev.pose_at_time(now).unwrap_or(*prev.anchor()),
            None => scenario.ego_start,
        };
        if planner.reached_end(&ego) {
            reached_end = true;
            break;
        }
        match planner.plan(now) {
            Ok(r) => results.push(r),
            Err(e) => {
                failure = Some(e);
                break;
            }
        }
    }
    Ok(SimulationOutcome {
        results,
        failure,
        reached_end,
    })
}

/// First fixed pose of `next` that differs bit-wise from the pose `prev`
/// planned for the same tick, or a pose `prev` never planned.
pub fn continuity_violation(prev: &Trajectory, next: &Trajectory) -> Option<usize> {
    let shift = next.tick_at(0) - prev.tick_at(0);
    (0..=next.last_fixed_index()).find(|&i| {
        let j = i as i64 + shift;
        if j < 0 || j as usize >= prev.len() {
            return true;
        }
        let (a, b) = (next.poses[i], prev.poses[j as usize]);
        a.x.to_bits() != b.x.to_bits() || a.y.to_bits() != b.y.to_bits() || a.theta.to_bits() != b.theta.to_bits()
    })
}

pub fn cost_trace_csv(results: &[PlanResult]) -> String {
    let mut out = cost_trace_header();
    out.push('\n');
    for r in results {
        out.push_str(&cost_trace_row(r.cycle_index, r.time, &r.costs));
        out.push('\n');
    }
    out
}

/// `cycle,timestamp,particles,valid_after_init,valid_final,carried_over,iterations` rows.
pub fn valid_particles_csv(results: &[PlanResult], particles: usize) -> String {
    let mut out = String::from("cycle,timestamp,particles,valid_after_init,valid_final,carried_over,iterations\n");
    for r in results {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.cycle_index,
            r.time,
            particles,
            r.stats.valid_after_init,
            r.stats.valid_final(),
            r.stats.carried_over,
            r.stats.iterations_run
        );
    }
    out
}

/// `cycle,iteration,best_fitness,valid_count` rows for every cycle.
pub fn swarm_stats_csv(results: &[PlanResult]) -> String {
    let mut out = String::from("cycle,iteration,best_fitness,valid_count\n");
    for r in results {
        for s in &r.stats.iterations {
            let _ = writeln!(out, "{},{},{},{}", r.cycle_index, s.iteration, s.best_fitness, s.valid_count);
        }
    }
    out
}

/// `cycle,wall_ms` rows; the only output that varies between runs.
pub fn timing_csv(results: &[PlanResult]) -> String {
    let mut out = String::from("cycle,wall_ms\n");
    for r in results {
        let _ = writeln!(out, "{},{:.3}", r.cycle_index, r.wall_time * 1e3);
    }
    out
}

/// Writes every output file of a run into `dir`.
///
/// `timing.csv` holds wall-clock measurements; all other files are
/// reproducible for a fixed seed.
pub fn write_outputs(dir: &Path, results: &[PlanResult], particles: usize) -> std::io::Result<()> {
    let traj_dir = dir.join("trajectories");
    std::fs::create_dir_all(&traj_dir)?;
    std::fs::write(dir.join("cost_trace.csv"), cost_trace_csv(results))?;
    std::fs::write(dir.join("valid_particles.csv"), valid_particles_csv(results, particles))?;
    std::fs::write(dir.join("swarm_stats.csv"), swarm_stats_csv(results))?;
    std::fs::write(dir.join("timing.csv"), timing_csv(results))?;
    for r in results {
        std::fs::write(
            traj_dir.join(format!("cycle_{:04}.csv", r.cycle_index)),
            r.trajectory.to_csv(),
        )?;
    }
    Ok(())
}
