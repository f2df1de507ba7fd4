//! Motion planning by constrained particle swarm optimization over SE2
//! control sequences.
//!
//! The crate is organised bottom-up:
//!
//! - [`control_space`]: poses, polar controls, rollout and inverse kinematics.
//! - [`trajectory`]: discrete trajectories, derived kinematics and the frozen horizon.
//! - [`geometry`]: polygons, signed distances and the circle footprint.
//! - [`environment`]: driving area, obstacles, driving mode and scenario files.
//! - [`evaluation`]: cost terms and hard constraints.
//! - [`pso`]: the swarm engine.
//! - [`replanner`]: the continuous planning loop.

// `!(x > 0.0)` deliberately rejects NaN along with non-positive values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod control_space;
pub mod environment;
pub mod evaluation;
pub mod geometry;
pub mod pso;
pub mod replanner;
pub mod trajectory;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/control-space.md")]
    mod control_space {}
    #[doc = include_str!("../../../book/src/trajectories.md")]
    mod trajectories {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/scenarios.md")]
    mod scenarios {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/swarm.md")]
    mod swarm {}
    #[doc = include_str!("../../../book/src/replanning.md")]
    mod replanning {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
