//! Constrained particle swarm optimization over control sequences.
//!
//! A particle is the flattened control vector `[l0, κ0, l1, κ1, ...]` of the
//! free part of a trajectory. Its velocity and all swarm arithmetic live in
//! that vector space, so blending two particles blends their controls rather
//! than their Cartesian poses.
//!
//! Invalid particles keep moving, but their fitness and personal best are only
//! updated after a valid evaluation.

mod sampler;
mod streams;

pub use sampler::{GuidedSampler, MotionState};
pub use streams::{stream, Purpose};

use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::Deserialize;
use thiserror::Error;

use crate::control_space::{rollout_controls, Control};
use crate::evaluation::{ConstraintReport, CostBreakdown, EvaluationError, Evaluator};
use crate::trajectory::Trajectory;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PlanError {
    #[error("no valid particle after {rounds} sampling rounds")]
    NoValidParticle { rounds: usize },
    #[error(transparent)]
    Evaluation(#[from] EvaluationError),
    #[error("invalid swarm configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SwarmConfig {
    pub n_particles: usize,
    pub max_iterations: usize,
    pub w_v: f64,
    pub w_p: f64,
    pub w_g: f64,
    /// Wall-clock budget in seconds. Unset keeps results independent of timing.
    pub time_budget: Option<f64>,
    pub fitness_target: Option<f64>,
    pub diversity_epsilon: f64,
    pub carryover_drop_rate: f64,
    pub seed: u64,
    /// Fraction of the swarm that must be valid after initialization.
    pub min_valid_fraction: f64,
    pub retry_cap: usize,
    /// Draw `u1, u2` per dimension instead of once per particle. Per-particle
    /// draws blend whole control sequences, which keeps blends of smooth
    /// sequences smooth.
    pub per_dimension_random: bool,
}

impl Default for SwarmConfig {
    fn default() -> Self {
        Self {
            n_particles: 60,
            max_iterations: 50,
            w_v: 0.7298,
            w_p: 1.4962,
            w_g: 1.4962,
            time_budget: None,
            fitness_target: None,
            diversity_epsilon: 1e-3,
            carryover_drop_rate: 0.30,
            seed: 0,
            min_valid_fraction: 0.10,
            retry_cap: 5,
            per_dimension_random: false,
        }
    }
}

impl SwarmConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n_particles < 2 {
            return Err(format!("n_particles must be >= 2, got {}", self.n_particles));
        }
        if !(0.0..=1.0).contains(&self.carryover_drop_rate) {
            return Err(format!(
                "carryover_drop_rate must be within [0, 1], got {}",
                self.carryover_drop_rate
            ));
        }
        if !(0.0..=1.0).contains(&self.min_valid_fraction) {
            return Err(format!(
                "min_valid_fraction must be within [0, 1], got {}",
                self.min_valid_fraction
            ));
        }
        for (name, w) in [("w_v", self.w_v), ("w_p", self.w_p), ("w_g", self.w_g)] {
            if !w.is_finite() {
                return Err(format!("{name} must be finite"));
            }
        }
        Ok(())
    }

    pub fn min_valid(&self) -> usize {
        ((self.min_valid_fraction * self.n_particles as f64).ceil() as usize).max(1)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Particle {
    pub position: Vec<f64>,
    pub velocity: Vec<f64>,
    pub best_position: Vec<f64>,
    /// `+∞` until the particle has been valid once.
    pub best_fitness: f64,
    pub valid: bool,
    /// Fitness of the last valid evaluation.
    pub fitness: f64,
}

impl Particle {
    fn new(position: Vec<f64>) -> Self {
        Self {
            velocity: vec![0.0; position.len()],
            best_position: position.clone(),
            position,
            best_fitness: f64::INFINITY,
            valid: false,
            fitness: f64::INFINITY,
        }
    }

    fn record(&mut self, outcome: &Outcome) {
        self.valid = outcome.report.valid;
        if let Some(costs) = &outcome.costs {
            self.fitness = costs.total;
            if costs.total < self.best_fitness {
                self.best_fitness = costs.total;
                self.best_position.clone_from(&self.position);
            }
        }
    }
}

/// `w_v·v + w_p·u1·(x_p − x) + w_g·u2·(x_g − x)`, component-wise.
pub fn update_velocity(
    particle: &Particle,
    global_best: &[f64],
    cfg: &SwarmConfig,
    u1: &[f64],
    u2: &[f64],
) -> Vec<f64> {
    let n = particle.position.len();
    let pick = |u: &[f64], i: usize| if u.len() == 1 { u[0] } else { u[i] };
    (0..n)
        .map(|i| {
            let x = particle.position[i];
            cfg.w_v * particle.velocity[i]
                + cfg.w_p * pick(u1, i) * (particle.best_position[i] - x)
                + cfg.w_g * pick(u2, i) * (global_best[i] - x)
        })
        .collect()
}

/// `x + v`, with every step length projected onto `[0, l_max]`.
pub fn update_position(position: &[f64], velocity: &[f64], l_max: f64) -> Vec<f64> {
    position
        .iter()
        .zip(velocity)
        .enumerate()
        .map(|(i, (x, v))| {
            let next = x + v;
            if i % 2 == 0 {
                next.clamp(0.0, l_max)
            } else {
                next
            }
        })
        .collect()
}

/// Best fitness and valid count after initialization (iteration 0) and after
/// every swarm update.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationStats {
    pub iteration: usize,
    pub best_fitness: f64,
    pub valid_count: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    IterationCap,
    FitnessTarget,
    TimeBudget,
    DiversityLoss,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SwarmStats {
    pub iterations: Vec<IterationStats>,
    pub valid_after_init: usize,
    pub carried_over: usize,
    pub sampling_rounds: usize,
    pub iterations_run: usize,
    pub termination: Termination,
    /// Seconds; excluded from reproducible outputs.
    pub wall_time: f64,
}

impl SwarmStats {
    pub fn valid_final(&self) -> usize {
        self.iterations.last().map_or(self.valid_after_init, |s| s.valid_count)
    }

    /// `iteration,best_fitness,valid_count` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,best_fitness,valid_count\n");
        for s in &self.iterations {
            out.push_str(&format!("{},{},{}\n", s.iteration, s.best_fitness, s.valid_count));
        }
        out
    }
}

/// The control memory handed from one cycle to the next.
#[derive(Debug, Clone, PartialEq)]
pub struct SwarmMemory {
    /// Grid tick of the pose the controls start from.
    pub start_tick: i64,
    pub best: Vec<Control>,
    pub particles: Vec<Vec<Control>>,
}

impl SwarmMemory {
    /// Drops controls consumed between `start_tick` and `new_start_tick` and
    /// pads the tail by repeating the last control.
    fn refit(controls: &[Control], shift: usize, len: usize) -> Option<Vec<Control>> {
        let rest = controls.get(shift..)?;
        let last = *rest.last()?;
        let mut out: Vec<Control> = rest.iter().copied().take(len).collect();
        out.resize(len, last);
        Some(out)
    }
}

struct Outcome {
    report: ConstraintReport,
    costs: Option<CostBreakdown>,
}

/// One cycle's optimization problem: a fixed trajectory head plus
/// `free_steps` controls to choose.
pub struct Problem<'e, 'a> {
    template: &'e Trajectory,
    evaluator: &'e Evaluator<'a>,
    free_steps: usize,
    cycle: u64,
    l_max: f64,
}

impl<'e, 'a> Problem<'e, 'a> {
    /// `horizon_steps` counts steps after the anchor; the frozen steps of the
    /// template are part of it.
    pub fn new(
        template: &'e Trajectory,
        evaluator: &'e Evaluator<'a>,
        horizon_steps: usize,
        cycle: u64,
    ) -> Result<Self, PlanError> {
        if horizon_steps <= template.frozen_len {
            return Err(PlanError::Config(format!(
                "horizon of {horizon_steps} steps leaves nothing to optimize after {} frozen steps",
                template.frozen_len
            )));
        }
        Ok(Self {
            template,
            evaluator,
            free_steps: horizon_steps - template.frozen_len,
            cycle,
            l_max: evaluator.snapshot().mode.speed_limit * template.dt,
        })
    }

    pub fn dimension(&self) -> usize {
        2 * self.free_steps
    }

    pub fn free_steps(&self) -> usize {
        self.free_steps
    }

    pub fn start_tick(&self) -> i64 {
        self.template.tick_at(self.template.last_fixed_index())
    }

    fn fixed_poses(&self) -> &[crate::control_space::Pose] {
        &self.template.poses[..=self.template.last_fixed_index()]
    }

    pub fn decode(&self, position: &[f64]) -> Trajectory {
        let controls: Vec<Control> = position
            .chunks_exact(2)
            .map(|c| Control::new(c[0], c[1]))
            .collect();
        let fixed = self.fixed_poses();
        let tail = rollout_controls(fixed.last().unwrap(), &controls);
        let mut poses = Vec::with_capacity(fixed.len() + controls.len());
        poses.extend_from_slice(fixed);
        poses.extend_from_slice(&tail[1..]);
        Trajectory {
            poses,
            dt: self.template.dt,
            t0: self.template.t0,
            prefix_len: self.template.prefix_len,
            frozen_len: self.template.frozen_len,
        }
    }

    fn evaluate(&self, position: &[f64]) -> Result<Outcome, EvaluationError> {
        let traj = self.decode(position);
        let (report, costs) = self.evaluator.evaluate(&traj)?;
        Ok(Outcome { report, costs })
    }

    fn motion_state(&self) -> MotionState {
        MotionState::from_poses(self.fixed_poses(), self.template.dt)
    }
}

fn flatten(controls: &[Control]) -> Vec<f64> {
    controls.iter().flat_map(|c| [c.l, c.kappa]).collect()
}

fn unflatten(position: &[f64]) -> Vec<Control> {
    position.chunks_exact(2).map(|c| Control::new(c[0], c[1])).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct Swarm {
    pub particles: Vec<Particle>,
    pub valid_after_init: usize,
    pub carried_over: usize,
    pub sampling_rounds: usize,
}

impl Swarm {
    /// Index of the best particle, lowest index on ties.
    pub fn global_best(&self) -> Option<usize> {
        let mut best: Option<usize> = None;
        for (i, p) in self.particles.iter().enumerate() {
            if p.best_fitness.is_finite() && best.is_none_or(|b| p.best_fitness < self.particles[b].best_fitness) {
                best = Some(i);
            }
        }
        best
    }

    pub fn valid_count(&self) -> usize {
        self.particles.iter().filter(|p| p.valid).count()
    }

    /// Mean pairwise Euclidean distance between particle positions.
    pub fn diversity(&self) -> f64 {
        let n = self.particles.len();
        if n < 2 {
            return 0.0;
        }
        let mut sum = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let a = &self.particles[i].position;
                let b = &self.particles[j].position;
                sum += a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
            }
        }
        sum / (n * (n - 1) / 2) as f64
    }

    pub fn memory(&self, start_tick: i64) -> Option<SwarmMemory> {
        let best = self.global_best()?;
        Some(SwarmMemory {
            start_tick,
            best: unflatten(&self.particles[best].best_position),
            particles: self
                .particles
                .iter()
                .enumerate()
                .filter(|(i, p)| *i != best && p.best_fitness.is_finite())
                .map(|(_, p)| unflatten(&p.best_position))
                .collect(),
        })
    }
}

/// Executes swarm work on a fixed-size thread pool. Results never depend on
/// the number of threads.
pub struct Engine {
    pool: rayon::ThreadPool,
}

impl Engine {
    pub fn new(threads: Option<usize>) -> Result<Self, PlanError> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(n) = threads {
            builder = builder.num_threads(n.max(1));
        }
        let pool = builder
            .build()
            .map_err(|e| PlanError::Config(format!("thread pool: {e}")))?;
        Ok(Self { pool })
    }

    pub fn threads(&self) -> usize {
        self.pool.current_num_threads()
    }

    fn evaluate_all(
        &self,
        problem: &Problem<'_, '_>,
        positions: &[&[f64]],
    ) -> Result<Vec<Outcome>, EvaluationError> {
        self.pool.install(|| {
            positions
                .par_iter()
                .map(|x| problem.evaluate(x))
                .collect::<Result<Vec<_>, _>>()
        })
    }

    /// Builds the initial swarm: the previous best first, then surviving
    /// previous particles, then guided samples.
    pub fn initialize_swarm(
        &self,
        problem: &Problem<'_, '_>,
        memory: Option<&SwarmMemory>,
        cfg: &SwarmConfig,
    ) -> Result<Swarm, PlanError> {
        cfg.validate().map_err(PlanError::Config)?;
        let steps = problem.free_steps;
        let sampler = GuidedSampler::new(problem.evaluator, problem.template.dt);
        let state = problem.motion_state();
        let mut particles: Vec<Particle> = Vec::with_capacity(cfg.n_particles);

        let mut carried_over = 0;
        if let Some(mem) = memory {
            let shift = problem.start_tick() - mem.start_tick;
            if shift >= 0 {
                let shift = shift as usize;
                let mut best_candidates = Vec::new();
                if let Some(c) = SwarmMemory::refit(&mem.best, shift, steps) {
                    best_candidates.push(flatten(&c));
                    // the repeated tail may run out of the area; a guided tail is the fallback
                    if let Some(kept) = mem.best.get(shift..) {
                        let kept = &kept[..kept.len().min(steps)];
                        let fixed = problem.fixed_poses();
                        let mut poses = fixed.to_vec();
                        poses.extend_from_slice(&rollout_controls(fixed.last().unwrap(), kept)[1..]);
                        let tail_state = MotionState::from_poses(&poses, problem.template.dt);
                        for attempt in 0..cfg.retry_cap as u64 {
                            let mut rng = stream(cfg.seed, problem.cycle, u64::MAX, attempt, Purpose::Padding);
                            let mut controls = kept.to_vec();
                            controls.extend(sampler.sample(&mut rng, tail_state, steps - kept.len()));
                            best_candidates.push(flatten(&controls));
                        }
                    }
                }
                for candidate in best_candidates {
                    let outcome = problem.evaluate(&candidate)?;
                    if outcome.report.valid {
                        let mut p = Particle::new(candidate);
                        p.record(&outcome);
                        particles.push(p);
                        carried_over += 1;
                        break;
                    }
                }

                let survivors: Vec<Vec<f64>> = mem
                    .particles
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| {
                        let mut rng = stream(cfg.seed, problem.cycle, *i as u64, 0, Purpose::Drop);
                        !rng.random_bool(cfg.carryover_drop_rate)
                    })
                    .filter_map(|(_, c)| SwarmMemory::refit(c, shift, steps).map(|c| flatten(&c)))
                    .take(cfg.n_particles - particles.len())
                    .collect();
                let refs: Vec<&[f64]> = survivors.iter().map(Vec::as_slice).collect();
                let outcomes = self.evaluate_all(problem, &refs)?;
                for (position, outcome) in survivors.into_iter().zip(outcomes) {
                    if outcome.report.valid && particles.len() < cfg.n_particles {
                        let mut p = Particle::new(position);
                        p.record(&outcome);
                        particles.push(p);
                        carried_over += 1;
                    }
                }
            }
        }

        let first_sampled = particles.len();
        let slots = cfg.n_particles - first_sampled;
        let mut sampled: Vec<Option<(Vec<f64>, Outcome)>> = (0..slots).map(|_| None).collect();
        let mut rounds = 0;
        loop {
            let pending: Vec<usize> = (0..slots)
                .filter(|&k| sampled[k].as_ref().is_none_or(|(_, o)| !o.report.valid))
                .collect();
            if pending.is_empty() {
                break;
            }
            let positions: Vec<Vec<f64>> = pending
                .iter()
                .map(|&k| {
                    let mut rng = stream(
                        cfg.seed,
                        problem.cycle,
                        (first_sampled + k) as u64,
                        rounds as u64,
                        Purpose::Sampling,
                    );
                    flatten(&sampler.sample(&mut rng, state, steps))
                })
                .collect();
            let refs: Vec<&[f64]> = positions.iter().map(Vec::as_slice).collect();
            let outcomes = self.evaluate_all(problem, &refs)?;
            for ((k, position), outcome) in pending.iter().zip(positions).zip(outcomes) {
                // a later round only replaces a slot with a valid sample
                if sampled[*k].is_none() || outcome.report.valid {
                    sampled[*k] = Some((position, outcome));
                }
            }
            rounds += 1;
            let valid = carried_over
                + sampled
                    .iter()
                    .filter(|s| s.as_ref().is_some_and(|(_, o)| o.report.valid))
                    .count();
            if valid >= cfg.min_valid() || rounds >= cfg.retry_cap.max(1) {
                break;
            }
        }
        for (position, outcome) in sampled.into_iter().flatten() {
            let mut p = Particle::new(position);
            p.record(&outcome);
            particles.push(p);
        }

        let swarm = Swarm {
            valid_after_init: particles.iter().filter(|p| p.valid).count(),
            particles,
            carried_over,
            sampling_rounds: rounds,
        };
        if swarm.valid_after_init == 0 {
            return Err(PlanError::NoValidParticle { rounds });
        }
        Ok(swarm)
    }

    /// Runs the swarm until a termination criterion fires.
    pub fn optimize(
        &self,
        problem: &Problem<'_, '_>,
        swarm: &mut Swarm,
        cfg: &SwarmConfig,
    ) -> Result<SwarmStats, PlanError> {
        let started = Instant::now();
        let best_fitness = |s: &Swarm| s.global_best().map_or(f64::INFINITY, |i| s.particles[i].best_fitness);
        let mut rows = vec![IterationStats {
            iteration: 0,
            best_fitness: best_fitness(swarm),
            valid_count: swarm.valid_count(),
        }];
        let initial_diversity = swarm.diversity();
        let mut termination = Termination::IterationCap;

        for iteration in 1..=cfg.max_iterations {
            let g = swarm
                .global_best()
                .ok_or(PlanError::NoValidParticle { rounds: 0 })?;
            let global = swarm.particles[g].best_position.clone();
            let dim = problem.dimension();
            for (i, p) in swarm.particles.iter_mut().enumerate() {
                let mut rng = stream(cfg.seed, problem.cycle, i as u64, iteration as u64, Purpose::Velocity);
                let draws = if cfg.per_dimension_random { dim } else { 1 };
                let u1: Vec<f64> = (0..draws).map(|_| rng.random::<f64>()).collect();
                let u2: Vec<f64> = (0..draws).map(|_| rng.random::<f64>()).collect();
                p.velocity = update_velocity(p, &global, cfg, &u1, &u2);
                p.position = update_position(&p.position, &p.velocity, problem.l_max);
            }
            let refs: Vec<&[f64]> = swarm.particles.iter().map(|p| p.position.as_slice()).collect();
            let outcomes = self.evaluate_all(problem, &refs)?;
            for (p, outcome) in swarm.particles.iter_mut().zip(&outcomes) {
                p.record(outcome);
            }
            let best = best_fitness(swarm);
            rows.push(IterationStats {
                iteration,
                best_fitness: best,
                valid_count: swarm.valid_count(),
            });

            if cfg.fitness_target.is_some_and(|t| best <= t) {
                termination = Termination::FitnessTarget;
                break;
            }
            if cfg
                .time_budget
                .is_some_and(|b| started.elapsed().as_secs_f64() >= b)
            {
                termination = Termination::TimeBudget;
                break;
            }
            if initial_diversity > 0.0 && swarm.diversity() / initial_diversity < cfg.diversity_epsilon {
                termination = Termination::DiversityLoss;
                break;
            }
        }

        Ok(SwarmStats {
            iterations_run: rows.len() - 1,
            iterations: rows,
            valid_after_init: swarm.valid_after_init,
            carried_over: swarm.carried_over,
            sampling_rounds: swarm.sampling_rounds,
            termination,
            wall_time: started.elapsed().as_secs_f64(),
        })
    }
}

/// Best trajectory of a finished swarm with its exact evaluation.
pub struct SwarmOutcome {
    pub trajectory: Trajectory,
    pub costs: CostBreakdown,
    pub constraints: ConstraintReport,
}

pub fn best_outcome(
    problem: &Problem<'_, '_>,
    swarm: &Swarm,
    exact: &Evaluator<'_>,
) -> Result<SwarmOutcome, PlanError> {
    let g = swarm
        .global_best()
        .ok_or(PlanError::NoValidParticle { rounds: swarm.sampling_rounds })?;
    let trajectory = problem.decode(&swarm.particles[g].best_position);
    let constraints = exact.constraints(&trajectory)?;
    let costs = exact.costs(&trajectory)?;
    Ok(SwarmOutcome {
        trajectory,
        costs,
        constraints,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn particle(x: f64, xp: f64, v: f64) -> Particle {
        Particle {
            position: vec![x],
            velocity: vec![v],
            best_position: vec![xp],
            best_fitness: 1.0,
            valid: true,
            fitness: 1.0,
        }
    }

    #[test]
    fn converged_particle_stays_put() {
        let cfg = SwarmConfig::default();
        let p = particle(3.0, 3.0, 0.0);
        assert_eq!(update_velocity(&p, &[3.0], &cfg, &[0.7], &[0.2]), vec![0.0]);
    }

    #[test]
    fn pure_inertia() {
        let cfg = SwarmConfig {
            w_v: 1.0,
            w_p: 0.0,
            w_g: 0.0,
            ..SwarmConfig::default()
        };
        let p = particle(1.0, 5.0, 2.5);
        assert_eq!(update_velocity(&p, &[9.0], &cfg, &[1.0], &[1.0]), vec![2.5]);
    }

    #[test]
    fn hand_evaluated_update() {
        let cfg = SwarmConfig {
            w_v: 0.5,
            w_p: 1.0,
            w_g: 1.0,
            ..SwarmConfig::default()
        };
        let p = particle(0.0, 2.0, 2.0);
        let v = update_velocity(&p, &[4.0], &cfg, &[1.0], &[1.0]);
        assert_eq!(v, vec![7.0]);
        // the κ slot is unclamped, so place the scalar there
        assert_eq!(update_position(&[0.0, 0.0], &[0.0, 7.0], 10.0), vec![0.0, 7.0]);
    }

    #[test]
    fn zero_velocity_keeps_position() {
        assert_eq!(update_position(&[1.0, 0.2], &[0.0, 0.0], 3.0), vec![1.0, 0.2]);
    }

    #[test]
    fn step_length_is_projected() {
        assert_eq!(update_position(&[0.5, 0.1, 1.0, 0.0], &[-1.0, 0.0, 5.0, -9.0], 3.0), vec![0.0, 0.1, 3.0, -9.0]);
    }

    #[test]
    fn one_step_convergence_without_inertia() {
        let cfg = SwarmConfig {
            w_v: 0.0,
            w_p: 1.0,
            w_g: 1.0,
            ..SwarmConfig::default()
        };
        let p = Particle {
            position: vec![1.0, 0.1],
            velocity: vec![0.3, -0.2],
            best_position: vec![1.0, 0.1],
            best_fitness: 2.0,
            valid: true,
            fitness: 2.0,
        };
        let g = [1.6, -0.05];
        let v = update_velocity(&p, &g, &cfg, &[1.0, 1.0], &[1.0, 1.0]);
        let x = update_position(&p.position, &v, 5.0);
        for (a, b) in x.iter().zip(g) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn scalar_draws_broadcast() {
        let cfg = SwarmConfig {
            w_v: 0.0,
            w_p: 0.0,
            w_g: 1.0,
            ..SwarmConfig::default()
        };
        let p = Particle::new(vec![0.0, 0.0]);
        assert_eq!(update_velocity(&p, &[2.0, 4.0], &cfg, &[0.5], &[0.5]), vec![1.0, 2.0]);
    }

    #[test]
    fn refit_drops_and_pads() {
        let c = |l| Control::new(l, 0.0);
        let controls = vec![c(1.0), c(2.0), c(3.0)];
        assert_eq!(SwarmMemory::refit(&controls, 1, 4), Some(vec![c(2.0), c(3.0), c(3.0), c(3.0)]));
        assert_eq!(SwarmMemory::refit(&controls, 0, 2), Some(vec![c(1.0), c(2.0)]));
        assert_eq!(SwarmMemory::refit(&controls, 3, 2), None);
    }

    #[test]
    fn config_validation() {
        assert!(SwarmConfig::default().validate().is_ok());
        let bad = SwarmConfig {
            n_particles: 1,
            ..SwarmConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SwarmConfig {
            carryover_drop_rate: 1.5,
            ..SwarmConfig::default()
        };
        assert!(bad.validate().is_err());
        assert_eq!(SwarmConfig::default().min_valid(), 6);
    }
}
