//! Forecast algebra over finite MDPs plus the robot microworld it runs in.
//!
//! A *forecast* is a general value function: the expected sum of per-step
//! cumulants plus a terminal value, accumulated while following an option
//! (a policy with initiation and termination conditions). This crate
//! provides three independent routes to a forecast's value — an exact
//! dynamic-programming solver, a truncated absorbing-chain series, and
//! Monte-Carlo rollouts — together with online temporal-difference
//! learners that are verified against the exact route.
//!
//! The `world` module implements a deterministic 2D robot microworld
//! (lattice kinematics, a 1D scanline camera, a touch sensor) and exports
//! it as a finite MDP so every forecast defined on it has an exact
//! oracle. The `curriculum` module builds the standard layered registry
//! of 47 forecasts, 18 options and 13 aliases on top of that world and
//! trains/verifies them layer by layer.

pub mod curriculum;
pub mod dp;
pub mod features;
pub mod mc;
pub mod mdp;
pub mod optlearn;
pub mod render;
pub mod rng;
pub mod td;
pub mod world;

pub use dp::{evaluate_forecast_series, solve_forecast_dp, solve_forecast_dp_mode, SolveParams};
pub use mc::{mc_return, sample_termination};
pub use mdp::{
    FiniteMdp, ForecastDef, ForecastId, GvfError, OutcomeTable, TabularOption, TerminationMode,
    ValueKind, ValueTable,
};
pub use optlearn::{learn_option_policy_dp, learn_option_policy_q, LearnedPolicy, QSchedule};
pub use rng::RngStreams;
pub use td::{td_step, td_target, GatingMode, TdLearner, TdStep, TargetStyle};
pub use world::{
    Action, Observation, PixelPermutation, Pose, RobotParams, WorldError, WorldSpec,
};
