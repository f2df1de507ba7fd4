//! SE2 poses, the polar (length, curvature) control model and its inverse.
//!
//! A control `(l, κ)` moves a pose by the body-frame offset
//! `(l·cos(½κl), l·sin(½κl), κl)`: the step is a circular arc whose chord has
//! length `l` and whose heading change is `κl`. The chord direction is half of
//! the heading change, which is what makes the inverse kinematics closed-form.

use std::f64::consts::PI;

use thiserror::Error;

/// Below this chord length a step is treated as stationary.
pub const DEGENERATE_LENGTH: f64 = 1e-6;
/// Largest accepted heading change for a stationary step.
pub const DEGENERATE_ROTATION: f64 = 1e-6;
/// Largest accepted mismatch between chord direction and half the heading change.
pub const REACHABILITY_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum ControlError {
    #[error("pose pair is not reachable by one control (direction mismatch {mismatch:.3e} rad)")]
    NotReachable { mismatch: f64 },
    #[error("in-place rotation of {dtheta:.3e} rad cannot be expressed by a control")]
    ZeroLengthRotation { dtheta: f64 },
    #[error("control sequences differ in length ({left} vs {right})")]
    LengthMismatch { left: usize, right: usize },
    #[error("control sequences use different time steps ({left} vs {right})")]
    TimeStepMismatch { left: f64, right: f64 },
}

/// Wraps an angle into `(-π, π]`.
pub fn normalize_angle(angle: f64) -> f64 {
    let mut a = angle.rem_euclid(2.0 * PI);
    if a > PI {
        a -= 2.0 * PI;
    }
    a
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dot(self, other: Point) -> f64 {
        self.x * other.x + self.y * other.y
    }

    pub fn cross(self, other: Point) -> f64 {
        self.x * other.y - self.y * other.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self - other).norm()
    }

    pub fn rotated(self, angle: f64) -> Point {
        let (s, c) = angle.sin_cos();
        Point::new(c * self.x - s * self.y, s * self.x + c * self.y)
    }
}

impl std::ops::Add for Point {
    type Output = Point;
    fn add(self, rhs: Point) -> Point {
        Point::new(self.x + rhs.x, self.y + rhs.y)
    }
}

impl std::ops::Sub for Point {
    type Output = Point;
    fn sub(self, rhs: Point) -> Point {
        Point::new(self.x - rhs.x, self.y - rhs.y)
    }
}

impl std::ops::Mul<f64> for Point {
    type Output = Point;
    fn mul(self, rhs: f64) -> Point {
        Point::new(self.x * rhs, self.y * rhs)
    }
}

/// An SE2 state. The heading is kept in `(-π, π]`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Pose {
    pub x: f64,
    pub y: f64,
    pub theta: f64,
}

impl Pose {
    pub fn new(x: f64, y: f64, theta: f64) -> Self {
        Self {
            x,
            y,
            theta: normalize_angle(theta),
        }
    }

    pub fn position(&self) -> Point {
        Point::new(self.x, self.y)
    }

    /// Maps a body-frame point into the world frame.
    pub fn transform_point(&self, local: Point) -> Point {
        self.position() + local.rotated(self.theta)
    }

    /// Maps a world-frame point into this pose's body frame.
    pub fn inverse_transform_point(&self, world: Point) -> Point {
        (world - self.position()).rotated(-self.theta)
    }

    /// Group composition `self ∘ other`.
    pub fn compose(&self, other: &Pose) -> Pose {
        let p = self.transform_point(other.position());
        Pose::new(p.x, p.y, self.theta + other.theta)
    }
}

/// A polar control: chord length `l` (metres per step) and curvature `kappa`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Control {
    pub l: f64,
    pub kappa: f64,
}

impl Control {
    pub const fn new(l: f64, kappa: f64) -> Self {
        Self { l, kappa }
    }

    pub fn is_valid(&self) -> bool {
        self.l >= 0.0 && self.l.is_finite() && self.kappa.is_finite()
    }

    /// Heading change produced by this control.
    pub fn heading_change(&self) -> f64 {
        self.kappa * self.l
    }

    /// The body-frame offset `(Δx, Δy, Δθ)` of this control.
    pub fn offset(&self) -> Pose {
        let dtheta = self.heading_change();
        let (s, c) = (0.5 * dtheta).sin_cos();
        Pose {
            x: self.l * c,
            y: self.l * s,
            theta: dtheta,
        }
    }
}

/// An ordered control list with a uniform time step.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlSequence {
    pub controls: Vec<Control>,
    pub dt: f64,
}

impl ControlSequence {
    pub fn new(controls: Vec<Control>, dt: f64) -> Self {
        Self { controls, dt }
    }

    pub fn constant(control: Control, len: usize, dt: f64) -> Self {
        Self::new(vec![control; len], dt)
    }

    pub fn len(&self) -> usize {
        self.controls.len()
    }

    pub fn is_empty(&self) -> bool {
        self.controls.is_empty()
    }

    /// Flattens into `[l0, κ0, l1, κ1, ...]`.
    pub fn to_flat(&self) -> Vec<f64> {
        self.controls.iter().flat_map(|c| [c.l, c.kappa]).collect()
    }

    pub fn from_flat(flat: &[f64], dt: f64) -> Self {
        debug_assert!(flat.len().is_multiple_of(2));
        let controls = flat
            .chunks_exact(2)
            .map(|pair| Control::new(pair[0], pair[1]))
            .collect();
        Self::new(controls, dt)
    }
}

/// Applies one control to a pose.
pub fn apply_control(pose: &Pose, control: &Control) -> Pose {
    let offset = control.offset();
    let p = pose.transform_point(Point::new(offset.x, offset.y));
    Pose::new(p.x, p.y, pose.theta + offset.theta)
}

/// Rolls a control sequence out from `start`. The result has `len + 1` poses.
pub fn rollout(start: &Pose, seq: &ControlSequence) -> Vec<Pose> {
    rollout_controls(start, &seq.controls)
}

pub fn rollout_controls(start: &Pose, controls: &[Control]) -> Vec<Pose> {
    let mut poses = Vec::with_capacity(controls.len() + 1);
    poses.push(*start);
    let mut current = *start;
    for c in controls {
        current = apply_control(&current, c);
        poses.push(current);
    }
    poses
}

/// Recovers the control that moves `from` onto `to`.
///
/// The chord direction in `from`'s body frame must equal half of the heading
/// change. Heading changes up to `±2π` are recovered from the chord direction,
/// so controls with `|κl| < 2π` round-trip exactly.
pub fn inverse_control(from: &Pose, to: &Pose) -> Result<Control, ControlError> {
    let local = from.inverse_transform_point(to.position());
    let l = local.norm();
    let dtheta = normalize_angle(to.theta - from.theta);
    if l < DEGENERATE_LENGTH {
        if dtheta.abs() < DEGENERATE_ROTATION {
            return Ok(Control::new(0.0, 0.0));
        }
        return Err(ControlError::ZeroLengthRotation { dtheta });
    }
    let direction = local.y.atan2(local.x);
    let turn = 2.0 * direction;
    let mismatch = 0.5 * normalize_angle(turn - dtheta).abs();
    if mismatch > REACHABILITY_TOLERANCE {
        return Err(ControlError::NotReachable { mismatch });
    }
    Ok(Control::new(l, turn / l))
}

/// The unique control whose arc passes from `from` through the point `target`,
/// regardless of the heading it arrives with.
pub fn control_towards(from: &Pose, target: Point) -> Control {
    let local = from.inverse_transform_point(target);
    let l = local.norm();
    if l < DEGENERATE_LENGTH {
        return Control::new(0.0, 0.0);
    }
    Control::new(l, 2.0 * local.y.atan2(local.x) / l)
}

/// Element-wise affine blend of two control sequences.
pub fn interpolate_controls(
    a: &ControlSequence,
    b: &ControlSequence,
    alpha: f64,
) -> Result<ControlSequence, ControlError> {
    if a.len() != b.len() {
        return Err(ControlError::LengthMismatch {
            left: a.len(),
            right: b.len(),
        });
    }
    if a.dt != b.dt {
        return Err(ControlError::TimeStepMismatch {
            left: a.dt,
            right: b.dt,
        });
    }
    let controls = a
        .controls
        .iter()
        .zip(&b.controls)
        .map(|(ca, cb)| {
            Control::new(
                (1.0 - alpha) * ca.l + alpha * cb.l,
                (1.0 - alpha) * ca.kappa + alpha * cb.kappa,
            )
        })
        .collect();
    Ok(ControlSequence::new(controls, a.dt))
}
