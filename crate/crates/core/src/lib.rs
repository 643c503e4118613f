//! Quality-driven power control for multi-user video transmission.
//!
//! The crate has two halves. The exact half models per-user rates in an
//! interference channel, the logarithmic quality of the delivered video, and
//! solves the weighted sum quality maximization globally by polyblock outer
//! approximation, with a linear-algebra feasibility oracle underneath. The
//! learned half trains a small fully connected network on solver-labeled
//! channel draws so that near-optimal power allocations come out of a single
//! forward pass.

pub mod feasibility;
pub mod model;
pub mod polyblock;

pub use feasibility::{max_scale_on_ray, min_power_for_rates, Infeasible};
pub use model::{
    min_rate_targets, quality, rates, video_preset, weighted_sum_quality,
    weighted_sum_quality_floored, ChannelRealization, ModelError, QualityProfile, SystemParams,
    RATE_FLOOR, VIDEO_PRESETS,
};
pub use polyblock::{initial_box, recover_power, solve, MoSolution, SolverOptions, SolveStatus};
