use approx::assert_abs_diff_eq;
use proptest::prelude::*;
use swarm_planner::control_space::{
    apply_control, interpolate_controls, inverse_control, rollout_controls, Control, ControlSequence, Pose,
};
use swarm_planner::trajectory::{derive_kinematics, truncate_and_freeze, Trajectory};

fn straight(speed: f64, dt: f64, steps: usize) -> Trajectory {
    let start = Pose::new(0.0, 0.0, 0.0);
    let mut poses: Vec<Pose> = (1..=3).rev().map(|k| Pose::new(-(k as f64) * speed * dt, 0.0, 0.0)).collect();
    poses.extend(rollout_controls(&start, &vec![Control::new(speed * dt, 0.0); steps]));
    Trajectory::new(poses, dt, -3.0 * dt, 3, 0).unwrap()
}

#[test]
fn constant_speed_has_flat_profile() {
    let traj = straight(6.0, 0.2, 20);
    let k = derive_kinematics(&traj).unwrap();
    for v in &k.speed {
        assert_abs_diff_eq!(*v, 6.0, epsilon = 1e-12);
    }
    assert!(k.accel.iter().chain(&k.jolt).all(|a| a.abs() < 1e-9));
}

#[test]
fn circle_of_controls_closes() {
    let r = 10.0;
    let n = 40;
    let arc = 2.0 * std::f64::consts::PI * r / n as f64;
    let chord = 2.0 * r * (arc / (2.0 * r)).sin();
    let c = Control::new(chord, 1.0 / r * arc / chord);
    let end = rollout_controls(&Pose::new(1.0, 2.0, 0.3), &vec![c; n]).pop().unwrap();
    assert_abs_diff_eq!(end.x, 1.0, epsilon = 1e-9);
    assert_abs_diff_eq!(end.y, 2.0, epsilon = 1e-9);
}

#[test]
fn interpolation_endpoints_are_inputs() {
    let a = ControlSequence::constant(Control::new(2.0, 0.1), 5, 0.3);
    let b = ControlSequence::constant(Control::new(1.0, -0.2), 5, 0.3);
    assert_eq!(interpolate_controls(&a, &b, 0.0).unwrap(), a);
    assert_eq!(interpolate_controls(&a, &b, 1.0).unwrap(), b);
    let short = ControlSequence::constant(Control::new(1.0, 0.0), 4, 0.3);
    assert!(interpolate_controls(&a, &short, 0.5).is_err());
}

#[test]
fn freezing_keeps_executed_window() {
    let prev = straight(5.0, 0.3, 24);
    let next = truncate_and_freeze(&prev, 0.1, 0.3).unwrap();
    assert_eq!(next.anchor(), prev.anchor());
    assert!(next.frozen_len >= 2);
    for i in 0..=next.last_fixed_index() {
        let j = prev.poses.iter().position(|p| *p == next.poses[i]).unwrap();
        assert_eq!(prev.tick_at(j), next.tick_at(i));
    }
}

#[test]
fn freezing_past_the_horizon_fails() {
    let prev = straight(5.0, 0.3, 6);
    assert!(truncate_and_freeze(&prev, 1.5, 0.3).is_err());
}

proptest! {
    #[test]
    fn inverse_recovers_control(
        x in -50.0..50.0f64, y in -50.0..50.0f64, th in -3.1..3.1f64,
        l in 0.1..4.0f64, turn in -5.5..5.5f64,
    ) {
        let pose = Pose::new(x, y, th);
        let c = Control::new(l, turn / l);
        let back = inverse_control(&pose, &apply_control(&pose, &c)).unwrap();
        prop_assert!((back.l - c.l).abs() < 1e-9);
        prop_assert!((back.kappa - c.kappa).abs() < 1e-9);
    }
}
