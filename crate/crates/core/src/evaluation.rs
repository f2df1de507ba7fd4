//! Fitness and hard-constraint evaluation of candidate trajectories.
//!
//! Every cost term is a mean of a per-step penalty over the future part of a
//! trajectory (halting additionally sums a penalty over steps past an active
//! stop line). The weighted sum of the terms is the fitness minimized by the
//! swarm. Hard constraints are expressed as margins `g(x) >= 0`.

use std::fmt;

use serde::Deserialize;
use thiserror::Error;

use crate::environment::{EnvironmentError, EnvironmentSnapshot};
use crate::geometry::{containment_margin_bounded, footprint_clearance_bounded, Polygon};
use crate::trajectory::{kinematics_of, KinematicProfile, Trajectory, TrajectoryError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvaluationError {
    #[error("trajectory needs {needed} predicted steps but the snapshot covers {available}")]
    HorizonMismatch { needed: usize, available: usize },
    #[error(transparent)]
    Trajectory(#[from] TrajectoryError),
    #[error(transparent)]
    Environment(#[from] EnvironmentError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostTerm {
    Velocity,
    Acceleration,
    Jolt,
    DrivingArea,
    Orientation,
    YawRate,
    Halting,
    ObstacleClearance,
    LateralBias,
}

impl CostTerm {
    pub const ALL: [CostTerm; 9] = [
        CostTerm::Velocity,
        CostTerm::Acceleration,
        CostTerm::Jolt,
        CostTerm::DrivingArea,
        CostTerm::Orientation,
        CostTerm::YawRate,
        CostTerm::Halting,
        CostTerm::ObstacleClearance,
        CostTerm::LateralBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CostTerm::Velocity => "velocity",
            CostTerm::Acceleration => "acceleration",
            CostTerm::Jolt => "jolt",
            CostTerm::DrivingArea => "driving_area",
            CostTerm::Orientation => "orientation",
            CostTerm::YawRate => "yaw_rate",
            CostTerm::Halting => "halting",
            CostTerm::ObstacleClearance => "obstacle_clearance",
            CostTerm::LateralBias => "lateral_bias",
        }
    }

    fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for CostTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostWeights {
    pub velocity: f64,
    pub acceleration: f64,
    pub jolt: f64,
    pub driving_area: f64,
    pub orientation: f64,
    pub yaw_rate: f64,
    pub halting: f64,
    pub obstacle_clearance: f64,
    pub lateral_bias: f64,
}

impl Default for CostWeights {
    fn default() -> Self {
        Self {
            velocity: 1.0,
            acceleration: 0.5,
            jolt: 0.2,
            driving_area: 4.0,
            orientation: 2.0,
            yaw_rate: 0.5,
            halting: 2.0,
            obstacle_clearance: 8.0,
            lateral_bias: 0.2,
        }
    }
}

impl CostWeights {
    pub fn zero() -> Self {
        Self::from_array([0.0; 9])
    }

    pub fn get(&self, term: CostTerm) -> f64 {
        self.to_array()[term.index()]
    }

    pub fn to_array(&self) -> [f64; 9] {
        [
            self.velocity,
            self.acceleration,
            self.jolt,
            self.driving_area,
            self.orientation,
            self.yaw_rate,
            self.halting,
            self.obstacle_clearance,
            self.lateral_bias,
        ]
    }

    pub fn from_array(w: [f64; 9]) -> Self {
        Self {
            velocity: w[0],
            acceleration: w[1],
            jolt: w[2],
            driving_area: w[3],
            orientation: w[4],
            yaw_rate: w[5],
            halting: w[6],
            obstacle_clearance: w[7],
            lateral_bias: w[8],
        }
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_array(self.to_array().map(|w| w * factor))
    }

    pub fn validate(&self) -> Result<(), String> {
        let w = self.to_array();
        if let Some(i) = w.iter().position(|x| !(*x >= 0.0) || !x.is_finite()) {
            return Err(format!("weight {} must be a finite value >= 0", CostTerm::ALL[i]));
        }
        if w.iter().all(|x| *x == 0.0) {
            return Err("at least one cost weight must be positive".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Limits {
    pub max_accel: f64,
    pub max_decel: f64,
    pub max_jolt: f64,
    pub max_yaw_rate: f64,
    /// Largest curvature change per second, 1/(m·s).
    pub max_steer_rate: f64,
    pub min_clearance: f64,
}

impl Default for Limits {
    fn default() -> Self {
        Self {
            max_accel: 2.0,
            max_decel: 4.0,
            max_jolt: 3.0,
            max_yaw_rate: 0.6,
            max_steer_rate: 0.3,
            min_clearance: 0.2,
        }
    }
}

impl Limits {
    pub fn validate(&self) -> Result<(), String> {
        let named = [
            ("max_accel", self.max_accel),
            ("max_decel", self.max_decel),
            ("max_jolt", self.max_jolt),
            ("max_yaw_rate", self.max_yaw_rate),
            ("max_steer_rate", self.max_steer_rate),
            ("min_clearance", self.min_clearance),
        ];
        for (name, v) in named {
            if !(v > 0.0) || !v.is_finite() {
                return Err(format!("limit {name} must be strictly positive, got {v}"));
            }
        }
        Ok(())
    }
}

/// Shape parameters of the cost terms.
#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CostParams {
    /// Containment margin below which the driving-area term grows.
    pub driving_area_margin: f64,
    /// Safe obstacle distance at standstill.
    pub safe_distance: f64,
    /// Additional safe distance per m/s of speed.
    pub safe_time_gap: f64,
    /// Deceleration regarded as comfortable when braking for a stop line.
    pub halting_decel: f64,
    /// Smallest remaining distance used in the stop-line braking ramp.
    pub halting_distance_floor: f64,
}

impl Default for CostParams {
    fn default() -> Self {
        Self {
            driving_area_margin: 0.5,
            safe_distance: 0.5,
            safe_time_gap: 0.2,
            halting_decel: 2.0,
            halting_distance_floor: 0.5,
        }
    }
}

impl CostParams {
    pub fn safe_distance_at(&self, speed: f64) -> f64 {
        self.safe_distance + self.safe_time_gap * speed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostBreakdown {
    pub raw: [f64; 9],
    pub weighted: [f64; 9],
    pub total: f64,
}

impl CostBreakdown {
    fn from_raw(raw: [f64; 9], weights: &CostWeights) -> Self {
        let w = weights.to_array();
        let mut weighted = [0.0; 9];
        for i in 0..9 {
            weighted[i] = raw[i] * w[i];
        }
        Self {
            raw,
            weighted,
            total: weighted.iter().sum(),
        }
    }

    pub fn raw(&self, term: CostTerm) -> f64 {
        self.raw[term.index()]
    }

    pub fn weighted(&self, term: CostTerm) -> f64 {
        self.weighted[term.index()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ConstraintKind {
    Clearance,
    Containment,
    MaxAccel,
    MaxDecel,
    Jolt,
    YawRate,
    SteerRate,
    SpeedLimit,
}

impl ConstraintKind {
    pub const ALL: [ConstraintKind; 8] = [
        ConstraintKind::Clearance,
        ConstraintKind::Containment,
        ConstraintKind::MaxAccel,
        ConstraintKind::MaxDecel,
        ConstraintKind::Jolt,
        ConstraintKind::YawRate,
        ConstraintKind::SteerRate,
        ConstraintKind::SpeedLimit,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ConstraintKind::Clearance => "clearance",
            ConstraintKind::Containment => "containment",
            ConstraintKind::MaxAccel => "max_accel",
            ConstraintKind::MaxDecel => "max_decel",
            ConstraintKind::Jolt => "jolt",
            ConstraintKind::YawRate => "yaw_rate",
            ConstraintKind::SteerRate => "steer_rate",
            ConstraintKind::SpeedLimit => "speed_limit",
        }
    }
}

/// Smallest margin per constraint family; `valid` iff all are `>= 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstraintReport {
    pub margins: [f64; 8],
    pub valid: bool,
}

impl ConstraintReport {
    pub fn margin(&self, kind: ConstraintKind) -> f64 {
        self.margins[kind as usize]
    }

    /// The most violated family, if any.
    pub fn worst(&self) -> Option<(ConstraintKind, f64)> {
        ConstraintKind::ALL
            .iter()
            .map(|&k| (k, self.margin(k)))
            .filter(|(_, m)| *m < 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1))
    }
}

/// Index ranges of the signals that depend on the future part of a trajectory.
#[derive(Debug, Clone, Copy)]
struct FutureWindow {
    prefix: usize,
}

impl FutureWindow {
    fn speed_start(&self) -> usize {
        self.prefix
    }
    fn accel_start(&self) -> usize {
        self.prefix.saturating_sub(1)
    }
    fn jolt_start(&self) -> usize {
        self.prefix.saturating_sub(2)
    }
}

/// Per-cycle evaluation context shared by all particles.
///
/// Obstacles are resolved per step once; the snapshot itself is only read.
#[derive(Debug, Clone)]
pub struct Evaluator<'a> {
    snapshot: &'a EnvironmentSnapshot,
    weights: CostWeights,
    limits: Limits,
    params: CostParams,
    step_obstacles: Vec<Vec<Polygon>>,
    stop_stations: Vec<f64>,
    clearance_cutoff: f64,
    containment_cutoff: f64,
}

/// Per-pose measurements of one trajectory.
struct Analysis {
    kin: KinematicProfile,
    clearance: Vec<f64>,
    containment: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    /// Prepares evaluation of trajectories with up to `future_steps` steps
    /// after the anchor.
    pub fn new(
        snapshot: &'a EnvironmentSnapshot,
        weights: CostWeights,
        limits: Limits,
        params: CostParams,
        future_steps: usize,
    ) -> Result<Self, EvaluationError> {
        let available = snapshot.prediction_horizon();
        if future_steps + 1 > available {
            return Err(EvaluationError::HorizonMismatch {
                needed: future_steps + 1,
                available,
            });
        }
        let step_obstacles = (0..=future_steps)
            .map(|s| snapshot.obstacles_at_step(s))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            snapshot,
            weights,
            limits,
            params,
            step_obstacles,
            stop_stations: snapshot.active_stop_stations(),
            clearance_cutoff: f64::INFINITY,
            containment_cutoff: f64::INFINITY,
        })
    }

    /// Lets clearance and containment queries stop early once a circle is
    /// known to be farther from obstacles or the area boundary than any cost
    /// or constraint can notice. Costs and validity are unchanged; margins
    /// reported for such far poses become lower bounds.
    pub fn with_bounded_clearance(mut self) -> Self {
        let v_max = self.snapshot.mode.speed_limit;
        self.clearance_cutoff = self
            .limits
            .min_clearance
            .max(self.params.safe_distance_at(v_max))
            + 1.0;
        self.containment_cutoff = self.params.driving_area_margin.max(0.0) + 1.0;
        self
    }

    pub fn snapshot(&self) -> &EnvironmentSnapshot {
        self.snapshot
    }

    pub fn weights(&self) -> &CostWeights {
        &self.weights
    }

    pub fn limits(&self) -> &Limits {
        &self.limits
    }

    pub fn params(&self) -> &CostParams {
        &self.params
    }

    pub fn with_weights(&self, weights: CostWeights) -> Self {
        let mut e = self.clone();
        e.weights = weights;
        e
    }

    fn check_horizon(&self, traj: &Trajectory) -> Result<(), EvaluationError> {
        let needed = traj.future_steps() + 1;
        if needed > self.step_obstacles.len() {
            return Err(EvaluationError::HorizonMismatch {
                needed,
                available: self.step_obstacles.len(),
            });
        }
        Ok(())
    }

    fn analyze(&self, traj: &Trajectory) -> Result<Analysis, EvaluationError> {
        self.check_horizon(traj)?;
        let kin = kinematics_of(&traj.poses, traj.dt)?;
        let fp = &self.snapshot.footprint;
        let future = &traj.poses[traj.prefix_len..];
        let clearance = future
            .iter()
            .enumerate()
            .map(|(step, pose)| {
                footprint_clearance_bounded(pose, fp, &self.step_obstacles[step], self.clearance_cutoff)
            })
            .collect();
        let containment = future
            .iter()
            .map(|pose| containment_margin_bounded(pose, fp, &self.snapshot.driving_area, self.containment_cutoff))
            .collect();
        Ok(Analysis {
            kin,
            clearance,
            containment,
        })
    }

    pub fn constraints(&self, traj: &Trajectory) -> Result<ConstraintReport, EvaluationError> {
        let analysis = self.analyze(traj)?;
        Ok(self.constraints_from(traj, &analysis))
    }

    pub fn costs(&self, traj: &Trajectory) -> Result<CostBreakdown, EvaluationError> {
        let analysis = self.analyze(traj)?;
        Ok(self.costs_from(traj, &analysis))
    }

    /// Constraints, and costs when the trajectory is valid.
    pub fn evaluate(
        &self,
        traj: &Trajectory,
    ) -> Result<(ConstraintReport, Option<CostBreakdown>), EvaluationError> {
        let analysis = self.analyze(traj)?;
        let report = self.constraints_from(traj, &analysis);
        let costs = report.valid.then(|| self.costs_from(traj, &analysis));
        Ok((report, costs))
    }

    fn constraints_from(&self, traj: &Trajectory, a: &Analysis) -> ConstraintReport {
        let lim = &self.limits;
        let win = FutureWindow {
            prefix: traj.prefix_len,
        };
        let kin = &a.kin;
        let min = |it: &mut dyn Iterator<Item = f64>| it.fold(f64::INFINITY, f64::min);

        let clearance = min(&mut a.clearance.iter().map(|c| c - lim.min_clearance));
        let containment = min(&mut a.containment.iter().copied());
        let accel = &kin.accel[win.accel_start()..];
        let max_accel = min(&mut accel.iter().map(|x| lim.max_accel - x));
        let max_decel = min(&mut accel.iter().map(|x| x + lim.max_decel));
        let jolt = min(&mut kin.jolt[win.jolt_start()..].iter().map(|j| lim.max_jolt - j.abs()));
        let yaw = min(&mut kin.yaw_rate[win.speed_start()..]
            .iter()
            .map(|w| lim.max_yaw_rate - w.abs()));
        let steer = min(&mut kin.curvature[win.accel_start()..]
            .windows(2)
            .map(|k| lim.max_steer_rate - (k[1] - k[0]).abs() / traj.dt));
        let v_max = self.snapshot.mode.speed_limit;
        let speed = min(&mut kin.speed[win.speed_start()..].iter().map(|v| v_max - v));

        let margins = [clearance, containment, max_accel, max_decel, jolt, yaw, steer, speed];
        ConstraintReport {
            valid: margins.iter().all(|m| *m >= 0.0),
            margins,
        }
    }

    fn costs_from(&self, traj: &Trajectory, a: &Analysis) -> CostBreakdown {
        let lim = &self.limits;
        let p = &self.params;
        let mode = &self.snapshot.mode;
        let centerline = &self.snapshot.centerline;
        let win = FutureWindow {
            prefix: traj.prefix_len,
        };
        let kin = &a.kin;
        let speeds = &kin.speed[win.speed_start()..];
        // poses after the anchor, each paired with the speed of the step reaching it
        let poses = &traj.poses[traj.prefix_len + 1..];
        let arrival_speed = |k: usize| speeds[k];

        let velocity = mean(speeds.iter().map(|v| (v - mode.desired_velocity).powi(2)));
        let acceleration = mean(kin.accel[win.accel_start()..].iter().map(|x| (x / lim.max_accel).powi(2)));
        let jolt = mean(kin.jolt[win.jolt_start()..].iter().map(|x| (x / lim.max_jolt).powi(2)));
        let yaw_rate = mean(kin.yaw_rate[win.speed_start()..]
            .iter()
            .map(|w| (w / lim.max_yaw_rate).powi(2)));
        let driving_area = mean(a.containment[1..]
            .iter()
            .map(|m| hinge(p.driving_area_margin - m).powi(2)));
        let obstacle_clearance = mean(a.clearance[1..]
            .iter()
            .enumerate()
            .map(|(k, c)| hinge(p.safe_distance_at(arrival_speed(k)) - c).powi(2)));

        let projections: Vec<_> = poses.iter().map(|pose| centerline.project(pose.position())).collect();
        let orientation = mean(poses
            .iter()
            .zip(&projections)
            .map(|(pose, proj)| 1.0 - (pose.theta - proj.heading).cos()));
        let lateral_bias = mean(projections
            .iter()
            .map(|proj| (proj.lateral - mode.lateral_bias).powi(2)));

        let anchor_front = centerline.project(traj.anchor().position()).station
            + 0.5 * self.snapshot.footprint.length();
        let mut halting = 0.0;
        for &line in self.stop_stations.iter().filter(|&&s| s > anchor_front) {
            let mut beyond = 0.0;
            let mut ramp = Vec::with_capacity(poses.len());
            for (k, proj) in projections.iter().enumerate() {
                let v = arrival_speed(k);
                let remaining = line - (proj.station + 0.5 * self.snapshot.footprint.length());
                if remaining < 0.0 {
                    beyond += v * v;
                } else {
                    let needed_decel = v * v / (2.0 * remaining.max(p.halting_distance_floor));
                    ramp.push((needed_decel / p.halting_decel).powi(2));
                }
            }
            halting += beyond + mean(ramp.into_iter());
        }

        let mut raw = [0.0; 9];
        raw[CostTerm::Velocity.index()] = velocity;
        raw[CostTerm::Acceleration.index()] = acceleration;
        raw[CostTerm::Jolt.index()] = jolt;
        raw[CostTerm::DrivingArea.index()] = driving_area;
        raw[CostTerm::Orientation.index()] = orientation;
        raw[CostTerm::YawRate.index()] = yaw_rate;
        raw[CostTerm::Halting.index()] = halting;
        raw[CostTerm::ObstacleClearance.index()] = obstacle_clearance;
        raw[CostTerm::LateralBias.index()] = lateral_bias;
        CostBreakdown::from_raw(raw, &self.weights)
    }
}

fn hinge(x: f64) -> f64 {
    x.max(0.0)
}

fn mean(values: impl Iterator<Item = f64>) -> f64 {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    if n == 0 {
        0.0
    } else {
        sum / n as f64
    }
}

/// Weighted cost breakdown of one trajectory.
pub fn evaluate_costs(
    traj: &Trajectory,
    snapshot: &EnvironmentSnapshot,
    weights: &CostWeights,
    limits: &Limits,
    params: &CostParams,
) -> Result<CostBreakdown, EvaluationError> {
    Evaluator::new(snapshot, *weights, *limits, *params, traj.future_steps())?.costs(traj)
}

/// Hard-constraint margins of one trajectory.
pub fn evaluate_constraints(
    traj: &Trajectory,
    snapshot: &EnvironmentSnapshot,
    limits: &Limits,
) -> Result<ConstraintReport, EvaluationError> {
    Evaluator::new(
        snapshot,
        CostWeights::default(),
        *limits,
        CostParams::default(),
        traj.future_steps(),
    )?
    .constraints(traj)
}

/// One row per planning cycle: `cycle,timestamp,<weighted terms...>,total`.
pub fn cost_trace_header() -> String {
    let mut h = String::from("cycle,timestamp");
    for t in CostTerm::ALL {
        h.push(',');
        h.push_str(t.name());
    }
    h.push_str(",total");
    h
}

pub fn cost_trace_row(cycle: usize, timestamp: f64, costs: &CostBreakdown) -> String {
    let mut row = format!("{cycle},{timestamp}");
    for w in costs.weighted {
        row.push_str(&format!(",{w}"));
    }
    row.push_str(&format!(",{}", costs.total));
    row
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_space::{Point, Pose};
    use crate::environment::{Centerline, DrivingMode, StopLine};
    use crate::geometry::FootprintModel;
    use approx::assert_abs_diff_eq;

    fn snapshot(half_width: f64, obstacles: Vec<Polygon>) -> EnvironmentSnapshot {
        let area = Polygon::rectangle(Point::new(-50.0, -half_width), Point::new(500.0, half_width)).unwrap();
        EnvironmentSnapshot {
            centerline: Centerline::from_driving_area(&area).unwrap(),
            driving_area: area,
            mode: DrivingMode {
                desired_velocity: 5.0,
                speed_limit: 8.0,
                stop_lines: vec![],
                lateral_bias: 0.0,
            },
            static_obstacles: obstacles,
            dynamic_obstacles: vec![],
            ego_start: Pose::default(),
            ego_prefix: vec![],
            footprint: FootprintModel::covering_rectangle(4.0, 1.8, 3).unwrap(),
            timestamp: 0.0,
        }
    }

    fn straight(speed: f64, y: f64) -> Trajectory {
        let dt = 0.3;
        let poses = (0..28)
            .map(|i| Pose::new((i as f64 - 3.0) * speed * dt, y, 0.0))
            .collect();
        Trajectory::new(poses, dt, -0.9, 3, 0).unwrap()
    }

    fn eval(snap: &EnvironmentSnapshot, traj: &Trajectory) -> (ConstraintReport, CostBreakdown) {
        let e = Evaluator::new(snap, CostWeights::default(), Limits::default(), CostParams::default(), 24).unwrap();
        (e.constraints(traj).unwrap(), e.costs(traj).unwrap())
    }

    #[test]
    fn steady_centered_drive_costs_nothing_dynamic() {
        let snap = snapshot(20.0, vec![]);
        let (report, costs) = eval(&snap, &straight(5.0, 0.0));
        assert!(report.valid);
        for term in [CostTerm::Velocity, CostTerm::Acceleration, CostTerm::Jolt, CostTerm::YawRate] {
            assert_abs_diff_eq!(costs.raw(term), 0.0, epsilon = 1e-20);
        }
        assert_abs_diff_eq!(costs.raw(CostTerm::DrivingArea), 0.0);
        assert_abs_diff_eq!(costs.raw(CostTerm::LateralBias), 0.0);
        assert_abs_diff_eq!(costs.raw(CostTerm::Orientation), 0.0);
    }

    #[test]
    fn velocity_deficit_is_quadratic() {
        let snap = snapshot(20.0, vec![]);
        let (_, costs) = eval(&snap, &straight(4.0, 0.0));
        assert_abs_diff_eq!(costs.raw(CostTerm::Velocity), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn total_is_weighted_sum_and_scales() {
        let snap = snapshot(3.0, vec![Polygon::rectangle(Point::new(40.0, 1.5), Point::new(45.0, 3.0)).unwrap()]);
        let traj = straight(6.0, 0.4);
        let (_, costs) = eval(&snap, &traj);
        let sum: f64 = costs.weighted.iter().sum();
        assert!((costs.total - sum).abs() <= 1e-12 * sum.abs());
        let doubled = evaluate_costs(&traj, &snap, &CostWeights::default().scaled(2.0), &Limits::default(), &CostParams::default()).unwrap();
        assert_abs_diff_eq!(doubled.total, 2.0 * costs.total, epsilon = 1e-12);
    }

    #[test]
    fn obstacle_in_path_is_invalid() {
        let snap = snapshot(20.0, vec![Polygon::rectangle(Point::new(20.0, -1.0), Point::new(22.0, 1.0)).unwrap()]);
        let (report, _) = eval(&snap, &straight(5.0, 0.0));
        assert!(!report.valid);
        assert!(report.margin(ConstraintKind::Clearance) < 0.0);
        assert_eq!(report.worst().unwrap().0, ConstraintKind::Clearance);
    }

    #[test]
    fn speeding_is_invalid() {
        let snap = snapshot(20.0, vec![]);
        let (report, _) = eval(&snap, &straight(9.0, 0.0));
        assert!(!report.valid);
        assert!(report.margin(ConstraintKind::SpeedLimit) < 0.0);
    }

    #[test]
    fn leaving_area_is_invalid() {
        let snap = snapshot(2.0, vec![]);
        let (report, costs) = eval(&snap, &straight(5.0, 1.5));
        assert!(report.margin(ConstraintKind::Containment) < 0.0);
        assert!(costs.raw(CostTerm::DrivingArea) > 0.0);
    }

    #[test]
    fn stop_line_ahead_costs_until_stopped() {
        let mut snap = snapshot(20.0, vec![]);
        snap.mode.stop_lines.push(StopLine {
            p1: Point::new(60.0, -30.0),
            p2: Point::new(60.0, 30.0),
            active: true,
        });
        let (_, moving) = eval(&snap, &straight(5.0, 0.0));
        assert!(moving.raw(CostTerm::Halting) > 0.0);
        let (_, stopped) = eval(&snap, &straight(0.0, 0.0));
        assert_eq!(stopped.raw(CostTerm::Halting), 0.0);
        snap.mode.stop_lines[0].active = false;
        let (_, inactive) = eval(&snap, &straight(5.0, 0.0));
        assert_eq!(inactive.raw(CostTerm::Halting), 0.0);
    }

    #[test]
    fn closer_obstacle_costs_more() {
        let far = snapshot(20.0, vec![Polygon::rectangle(Point::new(0.0, 2.5), Point::new(200.0, 3.0)).unwrap()]);
        let near = snapshot(20.0, vec![Polygon::rectangle(Point::new(0.0, 2.0), Point::new(200.0, 3.0)).unwrap()]);
        let traj = straight(5.0, 0.0);
        let (_, a) = eval(&far, &traj);
        let (_, b) = eval(&near, &traj);
        assert!(b.raw(CostTerm::ObstacleClearance) > a.raw(CostTerm::ObstacleClearance));
    }

    #[test]
    fn horizon_mismatch_is_reported() {
        let mut snap = snapshot(20.0, vec![]);
        let shape = Polygon::rectangle(Point::new(-1.0, -1.0), Point::new(1.0, 1.0)).unwrap();
        snap.dynamic_obstacles.push(crate::environment::DynamicObstacle::constant_velocity(
            shape,
            Pose::new(100.0, 10.0, 0.0),
            Point::new(0.0, 0.0),
            0.3,
            10,
        ));
        let err = evaluate_constraints(&straight(5.0, 0.0), &snap, &Limits::default()).unwrap_err();
        assert!(matches!(err, EvaluationError::HorizonMismatch { .. }));
    }

    #[test]
    fn bounded_clearance_keeps_verdicts() {
        // one obstacle overlapping the path, one close beside it
        for y0 in [1.2, 2.5] {
            let snap = snapshot(20.0, vec![Polygon::rectangle(Point::new(20.0, y0), Point::new(22.0, y0 + 1.8)).unwrap()]);
            let traj = straight(5.0, 0.0);
            let exact = Evaluator::new(&snap, CostWeights::default(), Limits::default(), CostParams::default(), 24).unwrap();
            let fast = exact.clone().with_bounded_clearance();
            let (ra, ca) = exact.evaluate(&traj).unwrap();
            let (rb, cb) = fast.evaluate(&traj).unwrap();
            assert_eq!(ra.valid, rb.valid);
            assert_eq!(ca, cb);
            for (a, b) in ra.margins.iter().zip(&rb.margins) {
                assert!(b <= a);
                // small margins are exact
                if *b < 1.0 {
                    assert_eq!(a, b);
                }
            }
        }
    }

    #[test]
    fn trace_header_lists_all_terms() {
        let h = cost_trace_header();
        assert_eq!(h.split(',').count(), 2 + 9 + 1);
        assert!(h.starts_with("cycle,timestamp,velocity,"));
    }
}
