use std::path::PathBuf;

use swarm_planner::environment::{load_scenario, parse_scenario, ScenarioError};

#[test]
fn shipped_scenarios_validate() {
    let dir: PathBuf = [env!("CARGO_MANIFEST_DIR"), "..", "..", "scenarios"].iter().collect();
    let mut count = 0;
    for entry in std::fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "yaml") {
            load_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            count += 1;
        }
    }
    assert!(count >= 5);
}

#[test]
fn unknown_keys_are_rejected() {
    let text = "
driving_area: [[0, -3], [100, -3], [100, 3], [0, 3]]
mode: { desired_velocity: 5, speed_limit: 8, top_speed: 9 }
ego: { start: [5, 0, 0], initial_speed: 5, footprint: { length: 4, width: 1.8 } }
planner: { dt: 0.3, horizon_steps: 20 }
";
    assert!(matches!(parse_scenario(text), Err(ScenarioError::Parse { .. })));
}

#[test]
fn missing_file_is_io_error() {
    assert!(matches!(load_scenario("/nonexistent/x.yaml"), Err(ScenarioError::Io { .. })));
}

#[test]
fn desired_above_limit_is_invalid() {
    let text = "
driving_area: [[0, -3], [100, -3], [100, 3], [0, 3]]
mode: { desired_velocity: 9, speed_limit: 8 }
ego: { start: [5, 0, 0], initial_speed: 5, footprint: { length: 4, width: 1.8 } }
planner: { dt: 0.3, horizon_steps: 20 }
";
    assert!(matches!(parse_scenario(text), Err(ScenarioError::Validation(_))));
}
