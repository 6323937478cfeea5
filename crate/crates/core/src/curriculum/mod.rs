//! The layered forecast curriculum: the standard registry of 47
//! forecasts, 18 options and 13 aliases, its materialization on a world
//! (exact option tables and DP oracle values), layer-ordered training of
//! the online estimates, and verification against the oracle.

pub mod alias;
pub mod config;
pub mod materialize;
pub mod registry;
pub mod run;
pub mod train;
pub mod verify;

pub use alias::{evaluate_alias, AliasExpr};
pub use config::{AlphaConfig, BehaviorKind, CurriculumConfig, OptionTraining, TrainingMode};
pub use materialize::{materialize, Materialized};
pub use registry::{
    build_standard_curriculum, AliasSpec, CurriculumError, EntityRef, ForecastSpec, LayerSpec,
    OptionSpec, Registry, RingFamily,
};
pub use run::{run_curriculum, RunOutcome, RunSpec};
pub use train::{train_layer, TrainStats, Trainer};
pub use verify::{verify_layer, ForecastVerification, VerificationReport};
