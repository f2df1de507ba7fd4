//! Guided initial sampling in control space.
//!
//! Each sampled particle follows a randomly drawn intent (target speed, lane
//! offset, look-ahead) and builds its controls step by step. Every step is
//! clipped into the set of controls that keep the internal limits satisfied:
//! acceleration, deceleration, jolt, speed limit, yaw rate and steering rate.
//! The next position on the intended path is reached through the inverse
//! kinematics of the polar control.

use rand::Rng;

use crate::control_space::{apply_control, control_towards, Control, Point, Pose, DEGENERATE_LENGTH};
use crate::evaluation::{Evaluator, Limits};
use crate::trajectory::kinematics_of;

/// Fraction of each limit the sampler allows itself, so rounding in the
/// pose-derived signals never tips a sample over a bound.
const LIMIT_SLACK: f64 = 0.98;

/// Kinematic state at the end of a control prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MotionState {
    pub pose: Pose,
    pub speed: f64,
    pub accel: f64,
    pub kappa: f64,
}

impl MotionState {
    /// State after the last of `poses` (at least two poses).
    pub fn from_poses(poses: &[Pose], dt: f64) -> Self {
        let pose = *poses.last().expect("non-empty pose list");
        if poses.len() >= 4 {
            let k = kinematics_of(poses, dt).expect("length checked");
            return Self {
                pose,
                speed: *k.speed.last().unwrap(),
                accel: *k.accel.last().unwrap(),
                kappa: *k.curvature.last().unwrap(),
            };
        }
        let speeds: Vec<f64> = poses
            .windows(2)
            .map(|w| w[0].position().distance(w[1].position()) / dt)
            .collect();
        let speed = speeds.last().copied().unwrap_or(0.0);
        let accel = if speeds.len() >= 2 {
            (speeds[speeds.len() - 1] - speeds[speeds.len() - 2]) / dt
        } else {
            0.0
        };
        Self {
            pose,
            speed,
            accel,
            kappa: 0.0,
        }
    }
}

/// Per-particle heuristic intent.
#[derive(Debug, Clone, Copy)]
struct Intent {
    target_speed: f64,
    speed_gain: f64,
    accel_noise: f64,
    braking: f64,
    offset_near: f64,
    offset_far: f64,
    switch_step: usize,
    lookahead: f64,
    kappa_noise: f64,
}

pub struct GuidedSampler<'e, 'a> {
    evaluator: &'e Evaluator<'a>,
    dt: f64,
    stop_stations: Vec<f64>,
}

impl<'e, 'a> GuidedSampler<'e, 'a> {
    pub fn new(evaluator: &'e Evaluator<'a>, dt: f64) -> Self {
        let snapshot = evaluator.snapshot();
        let mut stop_stations = snapshot.active_stop_stations();
        stop_stations.push(snapshot.centerline.length());
        Self {
            evaluator,
            dt,
            stop_stations,
        }
    }

    fn draw_intent<R: Rng>(&self, rng: &mut R, steps: usize) -> Intent {
        let snap = self.evaluator.snapshot();
        let v_max = snap.mode.speed_limit * LIMIT_SLACK;
        let desired = snap.mode.desired_velocity;
        let target_speed = if rng.random_bool(0.15) {
            rng.random_range(0.0..=v_max)
        } else {
            (desired * rng.random_range(0.6..1.15)).min(v_max)
        };
        let lim = self.evaluator.limits();
        let (near, far) = (rng.random::<f64>(), rng.random::<f64>());
        Intent {
            target_speed,
            speed_gain: rng.random_range(0.3..1.5),
            accel_noise: rng.random_range(-0.25..0.25) * lim.max_accel,
            braking: rng.random_range(0.3..0.8) * lim.max_decel,
            offset_near: near,
            offset_far: far,
            switch_step: rng.random_range(0..=steps.max(1)),
            lookahead: rng.random_range(0.8..2.0),
            kappa_noise: rng.random_range(-1.0..1.0),
        }
    }

    /// Lateral offset bounds that keep the footprint inside the area at `station`.
    fn lateral_bounds(&self, station: f64) -> (f64, f64) {
        let snap = self.evaluator.snapshot();
        let (center, heading) = snap.centerline.point_at(station);
        let normal = Point::new(-heading.sin(), heading.cos());
        let reach = snap.footprint.max_radius() + self.evaluator.params().driving_area_margin.min(0.3);
        // distance from the centerline to each side along the normal, found by stepping outwards
        let side = |sign: f64| {
            let mut lo = 0.0;
            let mut hi = 50.0;
            if snap.driving_area.signed_distance(center) >= 0.0 {
                return 0.0;
            }
            for _ in 0..30 {
                let mid = 0.5 * (lo + hi);
                if snap.driving_area.signed_distance(center + normal * (sign * mid)) < 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            lo
        };
        let left = (side(1.0) - reach).max(0.0);
        let right = (side(-1.0) - reach).max(0.0);
        (-right, left)
    }

    /// Samples `steps` controls continuing from `state`.
    pub fn sample<R: Rng>(&self, rng: &mut R, state: MotionState, steps: usize) -> Vec<Control> {
        let intent = self.draw_intent(rng, steps);
        let snap = self.evaluator.snapshot();
        let lim = *self.evaluator.limits();
        let length = snap.footprint.length();
        let bias = snap.mode.lateral_bias;

        let start_station = snap.centerline.project(state.pose.position()).station;
        let (lo, hi) = self.lateral_bounds(start_station + 10.0);
        let pick = |u: f64| {
            let (a, b) = (lo.min(hi), hi.max(lo));
            // half of the draws stay near the requested bias
            let spread = a + u * (b - a);
            if u < 0.5 {
                (bias + (spread - bias) * 0.5).clamp(a, b)
            } else {
                spread
            }
        };
        let offsets = (pick(intent.offset_near), pick(intent.offset_far));

        let mut s = state;
        let mut controls = Vec::with_capacity(steps);
        for step in 0..steps {
            let proj = snap.centerline.project(s.pose.position());
            let front = proj.station + 0.5 * length;
            let stop_gap = self
                .stop_stations
                .iter()
                .filter(|&&st| st > front - 0.5)
                .map(|st| st - front - 1.0)
                .fold(f64::INFINITY, f64::min)
                .max(0.0);
            let target = intent
                .target_speed
                .min((2.0 * intent.braking * stop_gap).sqrt());
            let wanted = intent.speed_gain * (target - s.speed) + intent.accel_noise;
            let accel = next_accel(&lim, snap.mode.speed_limit, s.speed, s.accel, wanted, self.dt);
            let speed = (s.speed + accel * self.dt).max(0.0);
            let accel = (speed - s.speed) / self.dt;
            let l = speed * self.dt;

            let kappa = if l < DEGENERATE_LENGTH {
                s.kappa
            } else {
                let offset = if step < intent.switch_step { offsets.0 } else { offsets.1 };
                let ahead = (4.0 + intent.lookahead * 2.0 * speed).max(2.0 * l);
                let (point, heading) = snap.centerline.point_at(proj.station + ahead);
                let aim = point + Point::new(-heading.sin(), heading.cos()) * offset;
                let wanted = control_towards(&s.pose, aim).kappa + 0.01 * intent.kappa_noise;
                let steer = lim.max_steer_rate * LIMIT_SLACK * self.dt;
                let yaw_cap = lim.max_yaw_rate * LIMIT_SLACK / speed.max(1e-9);
                wanted
                    .clamp(s.kappa - steer, s.kappa + steer)
                    .clamp(-yaw_cap, yaw_cap)
            };
            let control = Control::new(l, kappa);
            controls.push(control);
            s = MotionState {
                pose: apply_control(&s.pose, &control),
                speed,
                accel,
                kappa,
            };
        }
        controls
    }
}

fn toward_zero(accel: f64, step: f64) -> f64 {
    accel - accel.signum() * accel.abs().min(step)
}

/// Whether easing `accel` back to zero at full jolt keeps the speed inside
/// `[0, v_max]`.
fn viable(speed: f64, accel: f64, v_max: f64, jolt_step: f64, dt: f64) -> bool {
    let (mut s, mut a) = (speed, accel);
    if !(0.0..=v_max).contains(&s) {
        return false;
    }
    while a != 0.0 {
        a = toward_zero(a, jolt_step);
        s += a * dt;
        if s < -1e-12 || s > v_max {
            return false;
        }
    }
    true
}

/// Next acceleration closest to `wanted` that respects the acceleration, jolt
/// and speed bounds and leaves a way to settle at constant speed.
fn next_accel(lim: &Limits, speed_limit: f64, speed: f64, accel: f64, wanted: f64, dt: f64) -> f64 {
    let v_max = speed_limit * LIMIT_SLACK;
    let jolt_step = lim.max_jolt * LIMIT_SLACK * dt;
    let lo = (accel - jolt_step).max(-lim.max_decel * LIMIT_SLACK);
    let hi = (accel + jolt_step).min(lim.max_accel * LIMIT_SLACK);
    let fallback = toward_zero(accel, jolt_step).clamp(lo.min(hi), hi.max(lo));
    let ok = |a: f64| {
        let s = speed + a * dt;
        s >= 0.0 && viable(s, a, v_max, jolt_step, dt)
    };
    let candidate = wanted.clamp(lo.min(hi), hi.max(lo));
    if ok(candidate) {
        return candidate;
    }
    if !ok(fallback) {
        // not recoverable within the bounds; stop accelerating as fast as allowed
        let s_floor = -speed / dt;
        return fallback.max(s_floor.min(hi));
    }
    let (mut good, mut bad) = (fallback, candidate);
    for _ in 0..20 {
        let mid = 0.5 * (good + bad);
        if ok(mid) {
            good = mid;
        } else {
            bad = mid;
        }
    }
    good
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn viability_of_settled_states() {
        assert!(viable(5.0, 0.0, 10.0, 0.3, 0.3));
        assert!(!viable(9.9, 2.0, 10.0, 0.3, 0.3));
        assert!(!viable(0.05, -2.0, 10.0, 0.3, 0.3));
    }

    #[test]
    fn next_accel_respects_bounds() {
        let lim = Limits::default();
        let dt = 0.3;
        let mut speed = 0.0;
        let mut accel = 0.0;
        // chase an unreachable target and then brake hard; bounds must hold throughout
        for k in 0..80 {
            let wanted = if k < 40 { 100.0 } else { -100.0 };
            let a = next_accel(&lim, 8.0, speed, accel, wanted, dt);
            assert!(a <= lim.max_accel && a >= -lim.max_decel);
            assert!((a - accel).abs() <= lim.max_jolt * dt + 1e-12);
            speed += a * dt;
            assert!((-1e-12..=8.0).contains(&speed), "speed {speed} at {k}");
            accel = a;
        }
    }
}
