//! Scenario files: a YAML document describing the world, the ego vehicle and
//! the planner configuration.
//!
//! ```yaml
//! driving_area: [[0, -3.5], [120, -3.5], [120, 3.5], [0, 3.5]]
//! mode: { desired_velocity: 8.0, speed_limit: 10.0 }
//! ego: { start: [5, 0, 0], footprint: { length: 4.5, width: 1.8 } }
//! planner: { dt: 0.3, horizon_steps: 24, particles: 60, max_iterations: 50 }
//! ```
//!
//! Unknown fields are rejected so that typos surface as parse errors.

use std::path::Path;

use serde::Deserialize;
use thiserror::Error;

use super::{extract_obstacle_polygons, Centerline, DrivingMode, DynamicObstacle, EnvironmentSnapshot, OccupancyGrid, StopLine, DEFAULT_OCCUPANCY_THRESHOLD};
use crate::control_space::{Point, Pose};
use crate::evaluation::{CostParams, CostWeights, Limits};
use crate::geometry::{FootprintModel, Polygon};
use crate::pso::SwarmConfig;
use crate::trajectory::DEFAULT_PREFIX_LEN;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Validation(String),
}

fn invalid(msg: impl Into<String>) -> ScenarioError {
    ScenarioError::Validation(msg.into())
}

type XY = [f64; 2];
type XYTheta = [f64; 3];

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    driving_area: Vec<XY>,
    #[serde(default)]
    centerline: Option<Vec<XY>>,
    mode: RawMode,
    #[serde(default)]
    static_obstacles: Vec<Vec<XY>>,
    #[serde(default)]
    grid: Option<RawGrid>,
    #[serde(default)]
    dynamic_obstacles: Vec<RawDynamic>,
    ego: RawEgo,
    planner: RawPlanner,
    #[serde(default)]
    simulation: SimulationConfig,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawMode {
    desired_velocity: f64,
    speed_limit: f64,
    #[serde(default)]
    stop_lines: Vec<RawStopLine>,
    #[serde(default)]
    lateral_bias: f64,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawStopLine {
    p1: XY,
    p2: XY,
    #[serde(default = "yes")]
    active: bool,
    #[serde(default)]
    active_from: Option<f64>,
    #[serde(default)]
    active_until: Option<f64>,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawGrid {
    origin: XYTheta,
    resolution: f64,
    #[serde(default)]
    threshold: Option<u8>,
    /// Text rows, top row first; `#` is occupied, `.` is free.
    #[serde(default)]
    rows: Option<Vec<String>>,
    /// Occupancy values, bottom row (row 0) first.
    #[serde(default)]
    cells: Option<Vec<Vec<u8>>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDynamic {
    shape: Vec<XY>,
    #[serde(default)]
    poses: Option<Vec<XYTheta>>,
    #[serde(default)]
    pose: Option<XYTheta>,
    #[serde(default)]
    velocity: Option<XY>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawEgo {
    start: XYTheta,
    #[serde(default)]
    prefix: Option<Vec<XYTheta>>,
    #[serde(default)]
    initial_speed: f64,
    footprint: RawFootprint,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFootprint {
    length: f64,
    width: f64,
    #[serde(default = "default_circles")]
    circles: usize,
}

fn default_circles() -> usize {
    3
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawPlanner {
    dt: f64,
    horizon_steps: usize,
    #[serde(default)]
    particles: Option<usize>,
    #[serde(default)]
    max_iterations: Option<usize>,
    #[serde(default)]
    seed: Option<u64>,
    #[serde(default)]
    threads: Option<usize>,
    #[serde(default)]
    prefix_len: Option<usize>,
    #[serde(default)]
    pipeline_latency: f64,
    #[serde(default)]
    weights: CostWeights,
    #[serde(default)]
    limits: Limits,
    #[serde(default)]
    costs: CostParams,
    #[serde(default)]
    swarm: SwarmConfig,
}

/// Everything the planner needs besides the world.
#[derive(Debug, Clone, PartialEq)]
pub struct PlannerConfig {
    pub dt: f64,
    /// Number of controls after the anchor pose.
    pub horizon_steps: usize,
    pub prefix_len: usize,
    /// Worker threads for particle evaluation; unset uses all cores.
    pub threads: Option<usize>,
    /// Seconds between the start of a cycle and the moment its plan is executed.
    pub pipeline_latency: f64,
    pub swarm: SwarmConfig,
    pub weights: CostWeights,
    pub limits: Limits,
    pub costs: CostParams,
}

impl PlannerConfig {
    pub fn horizon_duration(&self) -> f64 {
        self.dt * self.horizon_steps as f64
    }
}

/// Closed-loop simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulationConfig {
    /// Seconds of simulated time.
    pub duration: f64,
    /// Replanning rate in Hz.
    pub rate: f64,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        Self {
            duration: 30.0,
            rate: 10.0,
        }
    }
}

/// A stop line together with the time window in which it is active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopLineSchedule {
    pub p1: Point,
    pub p2: Point,
    pub active: bool,
    pub active_from: Option<f64>,
    pub active_until: Option<f64>,
}

impl StopLineSchedule {
    pub fn is_active(&self, t: f64) -> bool {
        self.active && self.active_from.is_none_or(|a| t >= a) && self.active_until.is_none_or(|u| t < u)
    }

    pub fn at(&self, t: f64) -> StopLine {
        StopLine {
            p1: self.p1,
            p2: self.p2,
            active: self.is_active(t),
        }
    }
}

/// Motion of a dynamic obstacle over absolute time.
#[derive(Debug, Clone, PartialEq)]
pub enum DynamicTrack {
    /// Poses sampled every `dt` from `t = 0`. Beyond the last sample the
    /// obstacle keeps the velocity of the final segment.
    Sampled { shape: Polygon, poses: Vec<Pose>, dt: f64 },
    ConstantVelocity { shape: Polygon, start: Pose, velocity: Point },
}

impl DynamicTrack {
    pub fn shape(&self) -> &Polygon {
        match self {
            DynamicTrack::Sampled { shape, .. } | DynamicTrack::ConstantVelocity { shape, .. } => shape,
        }
    }

    /// Number of explicitly given poses, `None` for unbounded tracks.
    pub fn samples(&self) -> Option<usize> {
        match self {
            DynamicTrack::Sampled { poses, .. } => Some(poses.len()),
            DynamicTrack::ConstantVelocity { .. } => None,
        }
    }

    pub fn pose_at(&self, t: f64) -> Pose {
        match self {
            DynamicTrack::ConstantVelocity { start, velocity, .. } => {
                Pose::new(start.x + velocity.x * t, start.y + velocity.y * t, start.theta)
            }
            DynamicTrack::Sampled { poses, dt, .. } => {
                let s = (t / dt).max(0.0);
                let n = poses.len();
                if n == 1 {
                    return poses[0];
                }
                let i = (s.floor() as usize).min(n - 2);
                let f = s - i as f64;
                let (a, b) = (poses[i], poses[i + 1]);
                let dtheta = crate::control_space::normalize_angle(b.theta - a.theta);
                Pose::new(a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), a.theta + f * dtheta)
            }
        }
    }

    /// Prediction of `count` poses spaced `dt` apart, starting at time `t`.
    pub fn predict(&self, t: f64, dt: f64, count: usize) -> DynamicObstacle {
        DynamicObstacle {
            shape: self.shape().clone(),
            predicted_poses: (0..count).map(|k| self.pose_at(t + k as f64 * dt)).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub driving_area: Polygon,
    pub centerline: Centerline,
    pub desired_velocity: f64,
    pub speed_limit: f64,
    pub lateral_bias: f64,
    pub stop_lines: Vec<StopLineSchedule>,
    /// Listed obstacles plus those extracted from the grid.
    pub static_obstacles: Vec<Polygon>,
    pub dynamic_obstacles: Vec<DynamicTrack>,
    pub ego_start: Pose,
    /// Past poses, oldest first, exactly `planner.prefix_len` of them.
    pub ego_prefix: Vec<Pose>,
    pub footprint: FootprintModel,
    pub planner: PlannerConfig,
    pub simulation: SimulationConfig,
}

impl Scenario {
    pub fn mode_at(&self, t: f64) -> DrivingMode {
        DrivingMode {
            desired_velocity: self.desired_velocity,
            speed_limit: self.speed_limit,
            stop_lines: self.stop_lines.iter().map(|s| s.at(t)).collect(),
            lateral_bias: self.lateral_bias,
        }
    }

    /// World state for a cycle running at time `now` whose trajectory is
    /// anchored at `ego_start` at time `anchor_time`. Dynamic predictions
    /// cover the anchor plus `horizon_steps` steps.
    pub fn snapshot_at(&self, now: f64, anchor_time: f64, ego_start: Pose, ego_prefix: Vec<Pose>) -> EnvironmentSnapshot {
        let count = self.planner.horizon_steps + 1;
        EnvironmentSnapshot {
            driving_area: self.driving_area.clone(),
            centerline: self.centerline.clone(),
            mode: self.mode_at(now),
            static_obstacles: self.static_obstacles.clone(),
            dynamic_obstacles: self
                .dynamic_obstacles
                .iter()
                .map(|d| d.predict(anchor_time, self.planner.dt, count))
                .collect(),
            ego_start,
            ego_prefix,
            footprint: self.footprint.clone(),
            timestamp: anchor_time,
        }
    }

    /// Snapshot at `t = 0` with the ego at its configured start.
    pub fn initial_snapshot(&self) -> EnvironmentSnapshot {
        self.snapshot_at(0.0, 0.0, self.ego_start, self.ego_prefix.clone())
    }

    /// Checks every cross-section invariant. Run by the loaders; call it
    /// again after editing a scenario in code.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let p = &self.planner;
        if !(p.dt > 0.0) || !p.dt.is_finite() {
            return Err(invalid(format!("planner.dt must be positive, got {}", p.dt)));
        }
        if p.horizon_steps < 2 {
            return Err(invalid(format!("planner.horizon_steps must be >= 2, got {}", p.horizon_steps)));
        }
        if p.prefix_len < 3 {
            return Err(invalid(format!("planner.prefix_len must be >= 3, got {}", p.prefix_len)));
        }
        if !(p.pipeline_latency >= 0.0) {
            return Err(invalid("planner.pipeline_latency must be >= 0"));
        }
        if p.threads == Some(0) {
            return Err(invalid("planner.threads must be >= 1"));
        }
        p.weights.validate().map_err(|e| invalid(format!("planner.weights: {e}")))?;
        p.limits.validate().map_err(|e| invalid(format!("planner.limits: {e}")))?;
        p.swarm.validate().map_err(|e| invalid(format!("planner: {e}")))?;
        if self.ego_prefix.len() != p.prefix_len {
            return Err(invalid(format!(
                "ego.prefix must hold {} poses, got {}",
                p.prefix_len,
                self.ego_prefix.len()
            )));
        }
        for (i, track) in self.dynamic_obstacles.iter().enumerate() {
            if let Some(n) = track.samples() {
                if n < p.horizon_steps + 1 {
                    return Err(invalid(format!(
                        "dynamic_obstacles[{i}] predicts {n} poses but the horizon needs {}",
                        p.horizon_steps + 1
                    )));
                }
            }
        }
        let s = &self.simulation;
        if !(s.duration >= 0.0) || !(s.rate > 0.0) {
            return Err(invalid("simulation.duration must be >= 0 and simulation.rate > 0"));
        }
        let freeze = 1.0 / s.rate + p.pipeline_latency;
        if p.horizon_duration() <= freeze {
            return Err(invalid(format!(
                "horizon of {:.3} s must exceed replan period plus latency ({freeze:.3} s)",
                p.horizon_duration()
            )));
        }
        self.initial_snapshot().validate().map_err(invalid)
    }
}

fn point(xy: XY) -> Point {
    Point::new(xy[0], xy[1])
}

fn pose(p: XYTheta) -> Pose {
    Pose::new(p[0], p[1], p[2])
}

fn polygon(ring: &[XY], what: &str) -> Result<Polygon, ScenarioError> {
    Polygon::from_ring(ring.iter().copied().map(point).collect()).map_err(|e| invalid(format!("{what}: {e}")))
}

fn grid_from_raw(raw: &RawGrid) -> Result<(OccupancyGrid, u8), ScenarioError> {
    let cells: Vec<Vec<u8>> = match (&raw.rows, &raw.cells) {
        (Some(rows), None) => rows
            .iter()
            .rev()
            .map(|row| {
                row.chars()
                    .map(|c| match c {
                        '#' => Ok(255),
                        '.' => Ok(0),
                        other => Err(invalid(format!("grid.rows: unexpected character {other:?}"))),
                    })
                    .collect()
            })
            .collect::<Result<_, _>>()?,
        (None, Some(cells)) => cells.clone(),
        _ => return Err(invalid("grid needs exactly one of rows or cells")),
    };
    let height = cells.len();
    let width = cells.first().map_or(0, Vec::len);
    if cells.iter().any(|r| r.len() != width) {
        return Err(invalid("grid rows must all have the same length"));
    }
    let grid = OccupancyGrid::new(pose(raw.origin), raw.resolution, width, height, cells.concat())
        .map_err(|e| invalid(format!("grid: {e}")))?;
    Ok((grid, raw.threshold.unwrap_or(DEFAULT_OCCUPANCY_THRESHOLD)))
}

fn build(raw: RawScenario) -> Result<Scenario, ScenarioError> {
    let driving_area = polygon(&raw.driving_area, "driving_area")?;
    let centerline = match &raw.centerline {
        Some(points) => Centerline::new(points.iter().copied().map(point).collect()),
        None => Centerline::from_driving_area(&driving_area),
    }
    .map_err(|e| invalid(e.to_string()))?;

    let mut static_obstacles = raw
        .static_obstacles
        .iter()
        .enumerate()
        .map(|(i, ring)| polygon(ring, &format!("static_obstacles[{i}]")))
        .collect::<Result<Vec<_>, _>>()?;
    if let Some(g) = &raw.grid {
        let (grid, threshold) = grid_from_raw(g)?;
        static_obstacles.extend(extract_obstacle_polygons(&grid, threshold));
    }

    let rp = raw.planner;
    let mut swarm = rp.swarm;
    if let Some(n) = rp.particles {
        swarm.n_particles = n;
    }
    if let Some(n) = rp.max_iterations {
        swarm.max_iterations = n;
    }
    if let Some(s) = rp.seed {
        swarm.seed = s;
    }
    let planner = PlannerConfig {
        dt: rp.dt,
        horizon_steps: rp.horizon_steps,
        prefix_len: rp.prefix_len.unwrap_or(DEFAULT_PREFIX_LEN),
        threads: rp.threads,
        pipeline_latency: rp.pipeline_latency,
        swarm,
        weights: rp.weights,
        limits: rp.limits,
        costs: rp.costs,
    };

    let dynamic_obstacles = raw
        .dynamic_obstacles
        .iter()
        .enumerate()
        .map(|(i, d)| {
            let shape = polygon(&d.shape, &format!("dynamic_obstacles[{i}].shape"))?;
            match (&d.poses, d.pose, d.velocity) {
                (Some(poses), None, None) if !poses.is_empty() => Ok(DynamicTrack::Sampled {
                    shape,
                    poses: poses.iter().copied().map(pose).collect(),
                    dt: planner.dt,
                }),
                (None, Some(start), velocity) => Ok(DynamicTrack::ConstantVelocity {
                    shape,
                    start: pose(start),
                    velocity: point(velocity.unwrap_or([0.0, 0.0])),
                }),
                _ => Err(invalid(format!(
                    "dynamic_obstacles[{i}] needs either a non-empty poses list or a pose with optional velocity"
                ))),
            }
        })
        .collect::<Result<Vec<_>, _>>()?;

    let ego_start = pose(raw.ego.start);
    let ego_prefix = match &raw.ego.prefix {
        Some(p) => p.iter().copied().map(pose).collect(),
        None => {
            // steady motion along the start heading
            let step = raw.ego.initial_speed * planner.dt;
            let (s, c) = ego_start.theta.sin_cos();
            (0..planner.prefix_len)
                .rev()
                .map(|k| {
                    let back = step * (k + 1) as f64;
                    Pose::new(ego_start.x - c * back, ego_start.y - s * back, ego_start.theta)
                })
                .collect()
        }
    };
    if !(raw.ego.initial_speed >= 0.0) {
        return Err(invalid("ego.initial_speed must be >= 0"));
    }
    let fp = &raw.ego.footprint;
    let footprint = FootprintModel::covering_rectangle(fp.length, fp.width, fp.circles)
        .map_err(|e| invalid(format!("ego.footprint: {e}")))?;

    let scenario = Scenario {
        driving_area,
        centerline,
        desired_velocity: raw.mode.desired_velocity,
        speed_limit: raw.mode.speed_limit,
        lateral_bias: raw.mode.lateral_bias,
        stop_lines: raw
            .mode
            .stop_lines
            .iter()
            .map(|s| StopLineSchedule {
                p1: point(s.p1),
                p2: point(s.p2),
                active: s.active,
                active_from: s.active_from,
                active_until: s.active_until,
            })
            .collect(),
        static_obstacles,
        dynamic_obstacles,
        ego_start,
        ego_prefix,
        footprint,
        planner,
        simulation: raw.simulation,
    };
    scenario.validate()?;
    Ok(scenario)
}

/// Parses and validates a scenario document.
pub fn parse_scenario(text: &str) -> Result<Scenario, ScenarioError> {
    let raw: RawScenario = serde_yaml::from_str(text).map_err(|e| {
        let (line, column) = e.location().map_or((0, 0), |l| (l.line(), l.column()));
        ScenarioError::Parse {
            line,
            column,
            message: e.to_string(),
        }
    })?;
    build(raw)
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario, ScenarioError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| ScenarioError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    parse_scenario(&text)
}
