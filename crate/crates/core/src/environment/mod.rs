//! World inputs for one planning cycle.

mod grid;
pub mod scenario;

pub use grid::{extract_obstacle_polygons, OccupancyGrid, DEFAULT_OCCUPANCY_THRESHOLD};
pub use scenario::{
    load_scenario, parse_scenario, DynamicTrack, PlannerConfig, Scenario, ScenarioError, SimulationConfig, StopLineSchedule,
};

use thiserror::Error;

use crate::control_space::{normalize_angle, Point, Pose};
use crate::geometry::{project_onto_segment, Aabb, segments_intersect, FootprintModel, Polygon};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnvironmentError {
    #[error("step {step} is beyond the predicted horizon of {horizon} poses")]
    IndexOutOfHorizon { step: usize, horizon: usize },
    #[error("invalid centerline: {0}")]
    Centerline(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StopLine {
    pub p1: Point,
    pub p2: Point,
    pub active: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DrivingMode {
    pub desired_velocity: f64,
    pub speed_limit: f64,
    pub stop_lines: Vec<StopLine>,
    /// Target signed offset from the centerline, positive to the left.
    pub lateral_bias: f64,
}

impl DrivingMode {
    pub fn validate(&self) -> Result<(), String> {
        if !(self.speed_limit > 0.0) {
            return Err(format!("speed_limit must be positive, got {}", self.speed_limit));
        }
        if !(0.0..=self.speed_limit).contains(&self.desired_velocity) {
            return Err(format!(
                "0 <= desired_velocity <= speed_limit violated ({} vs {})",
                self.desired_velocity, self.speed_limit
            ));
        }
        Ok(())
    }
}

/// A moving obstacle: a body-frame outline plus one predicted pose per step.
#[derive(Debug, Clone, PartialEq)]
pub struct DynamicObstacle {
    pub shape: Polygon,
    pub predicted_poses: Vec<Pose>,
}

impl DynamicObstacle {
    pub fn constant_velocity(shape: Polygon, start: Pose, velocity: Point, dt: f64, steps: usize) -> Self {
        let predicted_poses = (0..steps)
            .map(|k| {
                let t = k as f64 * dt;
                Pose::new(start.x + velocity.x * t, start.y + velocity.y * t, start.theta)
            })
            .collect();
        Self {
            shape,
            predicted_poses,
        }
    }
}

/// Where a point sits relative to the centerline.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CenterlineProjection {
    /// Arc length of the closest point.
    pub station: f64,
    /// Signed offset, positive to the left of the driving direction.
    pub lateral: f64,
    /// Direction of the closest segment.
    pub heading: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Centerline {
    points: Vec<Point>,
    stations: Vec<f64>,
    /// Bounding boxes of runs of `SEGMENT_CHUNK` segments.
    chunks: Vec<Aabb>,
}

const SEGMENT_CHUNK: usize = 8;

impl Centerline {
    pub fn new(points: Vec<Point>) -> Result<Self, EnvironmentError> {
        if points.len() < 2 {
            return Err(EnvironmentError::Centerline("needs at least two points".into()));
        }
        let mut stations = Vec::with_capacity(points.len());
        stations.push(0.0);
        for pair in points.windows(2) {
            let d = pair[0].distance(pair[1]);
            if d <= 0.0 {
                return Err(EnvironmentError::Centerline("consecutive points coincide".into()));
            }
            stations.push(stations.last().unwrap() + d);
        }
        let chunks = (0..points.len() - 1)
            .step_by(SEGMENT_CHUNK)
            .map(|start| Aabb::of(&points[start..(start + SEGMENT_CHUNK + 1).min(points.len())]))
            .collect();
        Ok(Self {
            points,
            stations,
            chunks,
        })
    }

    /// Midpoints between the right and left boundary chains of a driving area.
    ///
    /// The counter-clockwise area ring must list the right boundary in driving
    /// direction followed by the left boundary backwards, both with the same
    /// number of vertices.
    pub fn from_driving_area(area: &Polygon) -> Result<Self, EnvironmentError> {
        let v = area.vertices();
        if !v.len().is_multiple_of(2) {
            return Err(EnvironmentError::Centerline(format!(
                "driving area has {} vertices; an even count is needed to pair boundary chains",
                v.len()
            )));
        }
        let half = v.len() / 2;
        let points = (0..half)
            .map(|i| {
                let right = v[i];
                let left = v[v.len() - 1 - i];
                (right + left) * 0.5
            })
            .collect();
        Self::new(points)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn length(&self) -> f64 {
        *self.stations.last().unwrap()
    }

    /// Point and direction at arc length `station`, clamped to the ends.
    pub fn point_at(&self, station: f64) -> (Point, f64) {
        let s = station.clamp(0.0, self.length());
        let i = match self.stations.partition_point(|&x| x <= s) {
            0 => 0,
            k => (k - 1).min(self.points.len() - 2),
        };
        let (a, b) = (self.points[i], self.points[i + 1]);
        let seg = self.stations[i + 1] - self.stations[i];
        let t = (s - self.stations[i]) / seg;
        let dir = b - a;
        (a + dir * t, dir.y.atan2(dir.x))
    }

    pub fn project(&self, p: Point) -> CenterlineProjection {
        let mut best = (f64::INFINITY, 0usize, 0.0);
        let segments = self.points.len() - 1;
        for (k, chunk) in self.chunks.iter().enumerate() {
            if chunk.distance(p) >= best.0 {
                continue;
            }
            for i in k * SEGMENT_CHUNK..((k + 1) * SEGMENT_CHUNK).min(segments) {
                let (t, d) = project_onto_segment(p, self.points[i], self.points[i + 1]);
                if d < best.0 {
                    best = (d, i, t);
                }
            }
        }
        let (_, i, t) = best;
        let (a, b) = (self.points[i], self.points[i + 1]);
        let dir = b - a;
        let closest = a + dir * t;
        let side = dir.cross(p - closest).signum();
        CenterlineProjection {
            station: self.stations[i] + t * (self.stations[i + 1] - self.stations[i]),
            lateral: side * p.distance(closest),
            heading: dir.y.atan2(dir.x),
        }
    }

    /// Heading error of `pose` against the local lane direction.
    pub fn heading_error(&self, pose: &Pose) -> f64 {
        normalize_angle(pose.theta - self.project(pose.position()).heading)
    }
}

/// Frozen world state for one planning cycle.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvironmentSnapshot {
    pub driving_area: Polygon,
    pub centerline: Centerline,
    pub mode: DrivingMode,
    pub static_obstacles: Vec<Polygon>,
    pub dynamic_obstacles: Vec<DynamicObstacle>,
    pub ego_start: Pose,
    /// Past ego poses, oldest first, one per time step.
    pub ego_prefix: Vec<Pose>,
    pub footprint: FootprintModel,
    /// Time of `ego_start`; dynamic predictions start here.
    pub timestamp: f64,
}

impl EnvironmentSnapshot {
    /// Number of steps covered by every dynamic prediction (`usize::MAX` when
    /// nothing moves).
    pub fn prediction_horizon(&self) -> usize {
        self.dynamic_obstacles
            .iter()
            .map(|d| d.predicted_poses.len())
            .min()
            .unwrap_or(usize::MAX)
    }

    pub fn validate(&self) -> Result<(), String> {
        self.mode.validate()?;
        if !(self.driving_area.signed_distance(self.ego_start.position()) < 0.0) {
            return Err("ego_start must lie strictly inside driving_area".into());
        }
        Ok(())
    }

    /// Static obstacles plus every dynamic obstacle moved to its pose at `step`.
    pub fn obstacles_at_step(&self, step: usize) -> Result<Vec<Polygon>, EnvironmentError> {
        let horizon = self.prediction_horizon();
        if step >= horizon {
            return Err(EnvironmentError::IndexOutOfHorizon { step, horizon });
        }
        let mut out = self.static_obstacles.clone();
        out.extend(
            self.dynamic_obstacles
                .iter()
                .map(|d| d.shape.transformed(&d.predicted_poses[step])),
        );
        Ok(out)
    }

    /// Arc-length stations of active stop lines that cross the driving area.
    pub fn active_stop_stations(&self) -> Vec<f64> {
        self.mode
            .stop_lines
            .iter()
            .filter(|line| line.active && crosses_polygon(line, &self.driving_area))
            .map(|line| self.centerline.project((line.p1 + line.p2) * 0.5).station)
            .collect()
    }
}

fn crosses_polygon(line: &StopLine, area: &Polygon) -> bool {
    area.contains(line.p1)
        || area.contains(line.p2)
        || area.edges().any(|(a, b)| segments_intersect(line.p1, line.p2, a, b))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn corridor() -> Polygon {
        Polygon::rectangle(Point::new(0.0, -2.0), Point::new(100.0, 2.0)).unwrap()
    }

    fn snapshot() -> EnvironmentSnapshot {
        let area = corridor();
        EnvironmentSnapshot {
            centerline: Centerline::from_driving_area(&area).unwrap(),
            driving_area: area,
            mode: DrivingMode {
                desired_velocity: 5.0,
                speed_limit: 8.0,
                stop_lines: vec![],
                lateral_bias: 0.0,
            },
            static_obstacles: vec![Polygon::rectangle(Point::new(20.0, -1.0), Point::new(22.0, 1.0)).unwrap()],
            dynamic_obstacles: vec![],
            ego_start: Pose::new(5.0, 0.0, 0.0),
            ego_prefix: vec![],
            footprint: FootprintModel::covering_rectangle(4.0, 1.8, 3).unwrap(),
            timestamp: 0.0,
        }
    }

    #[test]
    fn static_world_is_time_invariant() {
        let s = snapshot();
        assert_eq!(s.obstacles_at_step(0).unwrap(), s.obstacles_at_step(40).unwrap());
    }

    #[test]
    fn dynamic_obstacle_advances_each_step() {
        let mut s = snapshot();
        let shape = Polygon::rectangle(Point::new(-1.0, -0.5), Point::new(1.0, 0.5)).unwrap();
        s.dynamic_obstacles.push(DynamicObstacle::constant_velocity(
            shape,
            Pose::new(30.0, 0.0, 0.0),
            Point::new(1.0, 0.0),
            1.0,
            5,
        ));
        for step in 0..5 {
            let obs = s.obstacles_at_step(step).unwrap();
            assert_eq!(obs.len(), 2);
            assert_abs_diff_eq!(obs[1].centroid().x, 30.0 + step as f64, epsilon = 1e-12);
        }
        assert_eq!(
            s.obstacles_at_step(5),
            Err(EnvironmentError::IndexOutOfHorizon { step: 5, horizon: 5 })
        );
    }

    #[test]
    fn centerline_of_rectangle() {
        let c = Centerline::from_driving_area(&corridor()).unwrap();
        assert_eq!(c.points(), &[Point::new(0.0, 0.0), Point::new(100.0, 0.0)]);
        let p = c.project(Point::new(10.0, 1.5));
        assert_abs_diff_eq!(p.station, 10.0);
        assert_abs_diff_eq!(p.lateral, 1.5);
        assert_abs_diff_eq!(c.project(Point::new(10.0, -0.5)).lateral, -0.5);
    }

    #[test]
    fn centerline_of_right_turn() {
        let area = Polygon::new(vec![
            Point::new(2.0, 0.0),
            Point::new(2.0, 18.0),
            Point::new(40.0, 18.0),
            Point::new(40.0, 22.0),
            Point::new(-2.0, 22.0),
            Point::new(-2.0, 0.0),
        ])
        .unwrap();
        let c = Centerline::from_driving_area(&area).unwrap();
        assert_eq!(c.points(), &[Point::new(0.0, 0.0), Point::new(0.0, 20.0), Point::new(40.0, 20.0)]);
        assert_abs_diff_eq!(c.length(), 60.0);
        let p = c.project(Point::new(30.0, 19.0));
        assert_abs_diff_eq!(p.heading, 0.0);
        assert_abs_diff_eq!(p.lateral, -1.0);
        assert_abs_diff_eq!(p.station, 50.0);
        let (q, heading) = c.point_at(25.0);
        assert_abs_diff_eq!(q.x, 5.0);
        assert_abs_diff_eq!(q.y, 20.0);
        assert_abs_diff_eq!(heading, 0.0);
        assert_eq!(c.point_at(100.0).0, Point::new(40.0, 20.0));
        assert_eq!(c.point_at(-1.0).0, Point::new(0.0, 0.0));
    }

    #[test]
    fn odd_ring_needs_explicit_centerline() {
        let tri = Polygon::new(vec![Point::new(0.0, 0.0), Point::new(1.0, 0.0), Point::new(0.0, 1.0)]).unwrap();
        assert!(Centerline::from_driving_area(&tri).is_err());
    }

    #[test]
    fn stop_line_stations() {
        let mut s = snapshot();
        s.mode.stop_lines.push(StopLine {
            p1: Point::new(40.0, -3.0),
            p2: Point::new(40.0, 3.0),
            active: true,
        });
        s.mode.stop_lines.push(StopLine {
            p1: Point::new(60.0, -3.0),
            p2: Point::new(60.0, 3.0),
            active: false,
        });
        s.mode.stop_lines.push(StopLine {
            p1: Point::new(70.0, 10.0),
            p2: Point::new(70.0, 12.0),
            active: true,
        });
        assert_eq!(s.active_stop_stations(), vec![40.0]);
    }

    #[test]
    fn snapshot_validation() {
        let mut s = snapshot();
        assert!(s.validate().is_ok());
        s.ego_start = Pose::new(-1.0, 0.0, 0.0);
        assert!(s.validate().is_err());
        let mut s = snapshot();
        s.mode.desired_velocity = 9.0;
        assert!(s.validate().is_err());
    }
}
