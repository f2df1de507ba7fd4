//! Time-stamped pose sequences with a past prefix and a frozen horizon.

use std::fmt::Write as _;

use thiserror::Error;

use crate::control_space::{normalize_angle, Pose};

/// Number of past poses kept in front of the current pose.
pub const DEFAULT_PREFIX_LEN: usize = 3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TrajectoryError {
    #[error("trajectory has {len} poses, {required} are required")]
    TooShort { len: usize, required: usize },
    #[error("previous trajectory ends before the frozen window ({needed} poses needed, {available} available)")]
    HorizonExhausted { needed: usize, available: usize },
    #[error("previous trajectory has no {prefix_len} poses before t={now}")]
    PrefixUnavailable { now: f64, prefix_len: usize },
    #[error("invalid trajectory layout: {0}")]
    Layout(String),
}

/// Poses on an equidistant time grid.
///
/// Layout: `poses[..prefix_len]` lie in the past, `poses[prefix_len]` is the
/// anchor (the current pose), the next `frozen_len` poses are fixed, and the
/// rest may be optimized.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub poses: Vec<Pose>,
    pub dt: f64,
    pub t0: f64,
    pub prefix_len: usize,
    pub frozen_len: usize,
}

impl Trajectory {
    pub fn new(
        poses: Vec<Pose>,
        dt: f64,
        t0: f64,
        prefix_len: usize,
        frozen_len: usize,
    ) -> Result<Self, TrajectoryError> {
        if !(dt > 0.0) {
            return Err(TrajectoryError::Layout(format!("dt must be positive, got {dt}")));
        }
        let required = prefix_len + frozen_len + 2;
        if poses.len() < required {
            return Err(TrajectoryError::TooShort {
                len: poses.len(),
                required,
            });
        }
        Ok(Self {
            poses,
            dt,
            t0,
            prefix_len,
            frozen_len,
        })
    }

    pub fn len(&self) -> usize {
        self.poses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.poses.is_empty()
    }

    pub fn anchor_index(&self) -> usize {
        self.prefix_len
    }

    pub fn anchor(&self) -> &Pose {
        &self.poses[self.prefix_len]
    }

    /// Index of the last fixed pose; controls after it are free.
    pub fn last_fixed_index(&self) -> usize {
        self.prefix_len + self.frozen_len
    }

    pub fn time_at(&self, index: usize) -> f64 {
        self.t0 + index as f64 * self.dt
    }

    /// The grid tick of `poses[index]`, assuming the grid is anchored at `t = 0`.
    pub fn tick_at(&self, index: usize) -> i64 {
        (self.t0 / self.dt).round() as i64 + index as i64
    }

    /// Number of steps from the anchor to the last pose.
    pub fn future_steps(&self) -> usize {
        self.len() - 1 - self.prefix_len
    }

    pub fn is_frozen(&self, index: usize) -> bool {
        index > self.prefix_len && index <= self.last_fixed_index()
    }

    /// Pose at an arbitrary time, interpolated between grid poses.
    pub fn pose_at_time(&self, t: f64) -> Option<Pose> {
        let s = (t - self.t0) / self.dt;
        if s < -1e-9 || s > (self.len() - 1) as f64 + 1e-9 {
            return None;
        }
        let i = (s.floor().max(0.0) as usize).min(self.len() - 1);
        let frac = s - i as f64;
        if i + 1 >= self.len() || frac.abs() < 1e-12 {
            return Some(self.poses[i]);
        }
        let a = self.poses[i];
        let b = self.poses[i + 1];
        let dtheta = normalize_angle(b.theta - a.theta);
        Some(Pose::new(
            a.x + frac * (b.x - a.x),
            a.y + frac * (b.y - a.y),
            a.theta + frac * dtheta,
        ))
    }

    /// Renders the trajectory as `index,t_abs_s,x_m,y_m,theta_rad,frozen_flag` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,t_abs_s,x_m,y_m,theta_rad,frozen_flag\n");
        for (i, p) in self.poses.iter().enumerate() {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                i,
                self.time_at(i),
                p.x,
                p.y,
                p.theta,
                u8::from(self.is_frozen(i))
            );
        }
        out
    }
}

/// Finite-difference signals of a trajectory.
///
/// `speed[i]` and `curvature[i]` belong to the segment `poses[i] -> poses[i+1]`,
/// `accel[i]` to the speed pair `(i, i+1)` and `jolt[i]` to the accel pair.
/// Stationary segments carry the curvature of the segment before them.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct KinematicProfile {
    pub speed: Vec<f64>,
    pub accel: Vec<f64>,
    pub jolt: Vec<f64>,
    pub yaw_rate: Vec<f64>,
    pub curvature: Vec<f64>,
}

pub fn derive_kinematics(traj: &Trajectory) -> Result<KinematicProfile, TrajectoryError> {
    kinematics_of(&traj.poses, traj.dt)
}

pub fn kinematics_of(poses: &[Pose], dt: f64) -> Result<KinematicProfile, TrajectoryError> {
    if poses.len() < 4 {
        return Err(TrajectoryError::TooShort {
            len: poses.len(),
            required: 4,
        });
    }
    let mut speed = Vec::with_capacity(poses.len() - 1);
    let mut yaw_rate = Vec::with_capacity(poses.len() - 1);
    let mut curvature = Vec::with_capacity(poses.len() - 1);
    for pair in poses.windows(2) {
        let chord = pair[0].position().distance(pair[1].position());
        let dtheta = normalize_angle(pair[1].theta - pair[0].theta);
        speed.push(chord / dt);
        yaw_rate.push(dtheta / dt);
        // a stationary step keeps the previous curvature
        let held = curvature.last().copied().unwrap_or(0.0);
        curvature.push(if chord < crate::control_space::DEGENERATE_LENGTH {
            held
        } else {
            dtheta / chord
        });
    }
    let accel = differences(&speed, dt);
    let jolt = differences(&accel, dt);
    Ok(KinematicProfile {
        speed,
        accel,
        jolt,
        yaw_rate,
        curvature,
    })
}

fn differences(values: &[f64], dt: f64) -> Vec<f64> {
    values.windows(2).map(|w| (w[1] - w[0]) / dt).collect()
}

/// Cuts the previous plan at `now` and freezes the window that is already
/// being executed.
///
/// The anchor of the template is the last grid pose at or before `now`. The
/// frozen window covers `now + freeze_duration`, rounded up to whole steps.
pub fn truncate_and_freeze(
    prev: &Trajectory,
    now: f64,
    freeze_duration: f64,
) -> Result<Trajectory, TrajectoryError> {
    let eps = 1e-9;
    let offset = (now - prev.t0) / prev.dt;
    let anchor = (offset + eps).floor();
    if anchor < prev.prefix_len as f64 {
        return Err(TrajectoryError::PrefixUnavailable {
            now,
            prefix_len: prev.prefix_len,
        });
    }
    let anchor = anchor as usize;
    let lag = (offset - anchor as f64).max(0.0);
    let frozen_len = (lag + freeze_duration.max(0.0) / prev.dt - eps).ceil().max(0.0) as usize;
    // at least one optimizable pose must follow the frozen window
    let needed = anchor + frozen_len + 2;
    if needed > prev.len() {
        return Err(TrajectoryError::HorizonExhausted {
            needed,
            available: prev.len(),
        });
    }
    let start = anchor - prev.prefix_len;
    let tick = (prev.t0 / prev.dt).round() as i64 + start as i64;
    Trajectory::new(
        prev.poses[start..].to_vec(),
        prev.dt,
        tick as f64 * prev.dt,
        prev.prefix_len,
        frozen_len,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control_space::{rollout, Control, ControlSequence};
    use approx::assert_abs_diff_eq;

    fn straight(n: usize, step: f64, dt: f64) -> Trajectory {
        let poses = (0..n).map(|i| Pose::new(i as f64 * step, 0.0, 0.0)).collect();
        Trajectory::new(poses, dt, -3.0 * dt, 3, 0).unwrap()
    }

    #[test]
    fn uniform_straight_motion() {
        let k = derive_kinematics(&straight(8, 1.0, 0.5)).unwrap();
        assert!(k.speed.iter().all(|&v| (v - 2.0).abs() < 1e-12));
        assert!(k.accel.iter().all(|&a| a.abs() < 1e-12));
        assert!(k.jolt.iter().all(|&j| j.abs() < 1e-12));
    }

    #[test]
    fn constant_control_rollout() {
        let seq = ControlSequence::constant(Control::new(0.6, 0.2), 10, 0.3);
        let poses = rollout(&Pose::new(1.0, 2.0, 0.5), &seq);
        let k = kinematics_of(&poses, 0.3).unwrap();
        for v in &k.speed {
            assert_abs_diff_eq!(*v, 2.0, epsilon = 1e-12);
        }
        for w in &k.yaw_rate {
            assert_abs_diff_eq!(*w, 0.4, epsilon = 1e-12);
        }
        assert!(k.accel.iter().chain(&k.jolt).all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn hand_differences() {
        // speeds 2, 3, 3, 2 with dt = 1
        let xs = [0.0, 2.0, 5.0, 8.0, 10.0];
        let poses: Vec<Pose> = xs.iter().map(|&x| Pose::new(x, 0.0, 0.0)).collect();
        let k = kinematics_of(&poses, 1.0).unwrap();
        assert_eq!(k.speed, vec![2.0, 3.0, 3.0, 2.0]);
        assert_eq!(k.accel, vec![1.0, 0.0, -1.0]);
        assert_eq!(k.jolt, vec![-1.0, -1.0]);
    }

    #[test]
    fn too_short_for_jolt() {
        let poses = vec![Pose::default(); 3];
        assert!(matches!(
            kinematics_of(&poses, 0.1),
            Err(TrajectoryError::TooShort { .. })
        ));
    }

    #[test]
    fn layout_invariant_enforced() {
        let poses = vec![Pose::default(); 5];
        assert!(Trajectory::new(poses.clone(), 0.3, 0.0, 3, 1).is_err());
        assert!(Trajectory::new(poses, 0.3, 0.0, 3, 0).is_ok());
    }

    #[test]
    fn zero_freeze_keeps_prefix() {
        let prev = straight(28, 1.0, 0.3);
        let t = truncate_and_freeze(&prev, 0.0, 0.0).unwrap();
        assert_eq!(t.frozen_len, 0);
        assert_eq!(t.prefix_len, 3);
        assert_eq!(&t.poses[..4], &prev.poses[..4]);
    }

    #[test]
    fn freeze_rounds_up_to_whole_steps() {
        let prev = straight(28, 1.0, 0.3);
        let t = truncate_and_freeze(&prev, 0.0, 0.05).unwrap();
        assert_eq!(t.frozen_len, 1);
    }

    #[test]
    fn advancing_two_steps_drops_two_poses() {
        let prev = straight(28, 1.0, 0.3);
        let t = truncate_and_freeze(&prev, 0.6, 0.0).unwrap();
        assert_eq!(t.future_steps(), prev.future_steps() - 2);
        assert_eq!(t.tick_at(t.anchor_index()), 2);
        assert_eq!(t.anchor(), &prev.poses[5]);
    }

    #[test]
    fn off_grid_time_freezes_the_straddled_step() {
        let prev = straight(28, 1.0, 0.3);
        let t = truncate_and_freeze(&prev, 0.1, 0.0).unwrap();
        assert_eq!(t.tick_at(t.anchor_index()), 0);
        assert_eq!(t.frozen_len, 1);
    }

    #[test]
    fn exhausted_horizon() {
        let prev = straight(8, 1.0, 0.3);
        assert!(matches!(
            truncate_and_freeze(&prev, 0.9, 0.3),
            Err(TrajectoryError::HorizonExhausted { .. })
        ));
        assert!(matches!(
            truncate_and_freeze(&prev, -0.3, 0.0),
            Err(TrajectoryError::PrefixUnavailable { .. })
        ));
    }

    #[test]
    fn interpolated_pose_lies_between_grid_poses() {
        let prev = straight(8, 1.0, 0.5);
        let p = prev.pose_at_time(0.25).unwrap();
        assert_abs_diff_eq!(p.x, 3.5, epsilon = 1e-12);
        assert!(prev.pose_at_time(100.0).is_none());
    }

    #[test]
    fn csv_dump_marks_frozen_rows() {
        let mut t = straight(6, 1.0, 0.5);
        t.frozen_len = 1;
        let csv = t.to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows[0], "index,t_abs_s,x_m,y_m,theta_rad,frozen_flag");
        assert_eq!(rows.len(), 7);
        assert!(rows[5].ends_with(",1"));
        assert!(rows[4].ends_with(",0"));
    }
}
