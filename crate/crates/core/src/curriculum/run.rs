//! The full curriculum protocol: build the registry, materialize the
//! oracle, then train and verify layer by layer, persisting parameters
//! and a deterministic aggregate report.

use super::config::{CurriculumConfig, TrainingMode};
use super::materialize::{materialize, Materialized};
use super::registry::{build_standard_curriculum, CurriculumError, Registry};
use super::train::{seed_from_oracle, train_layer, Trainer};
use super::verify::{verify_layer, VerificationReport};
use crate::features::BackendKind;
use crate::rng::RngStreams;
use crate::world::file::world_digest;
use crate::world::{RobotParams, WorldSpec};
use std::collections::BTreeMap;
use std::path::PathBuf;

#[derive(Clone, Debug)]
pub struct RunSpec {
    pub world: WorldSpec,
    pub robot_params: RobotParams,
    pub config: CurriculumConfig,
    pub seed: u64,
    pub backend: BackendKind,
    pub through_layer: u32,
    pub out_dir: Option<PathBuf>,
}

pub struct RunOutcome {
    pub registry: Registry,
    pub mat: Materialized,
    pub trainer: Trainer,
    pub reports: BTreeMap<u32, VerificationReport>,
    pub report_text: String,
    /// The layer whose gate failure halted the run, if any.
    pub halted_at: Option<u32>,
}

/// Runs the curriculum through `through_layer`: per layer, train the
/// online estimates (unless oracle-seeded), verify against the DP
/// oracle, and halt on a gate failure with a partial report.
pub fn run_curriculum(spec: RunSpec) -> Result<RunOutcome, CurriculumError> {
    let registry = build_standard_curriculum(spec.config.clone())?;
    let streams = RngStreams::new(spec.seed);
    let mat = materialize(
        &registry,
        spec.world.clone(),
        spec.robot_params,
        &streams,
        spec.through_layer,
    )?;
    let mut trainer = Trainer::new(
        spec.backend,
        &registry,
        &mat,
        &streams,
        spec.robot_params.camera_rays,
    )?;
    if registry.config.training_mode == TrainingMode::Oracle {
        seed_from_oracle(&mut trainer, &mat)?;
    }

    let digest = world_digest(&spec.world);
    let mut report_text = format!(
        "FORECAST RUN seed={} world={} backend={} layers=1..{} mode={}\n",
        spec.seed,
        digest,
        spec.backend.label(),
        spec.through_layer,
        match registry.config.training_mode {
            TrainingMode::Td => "td",
            TrainingMode::Oracle => "oracle",
        },
    );
    let mut reports = BTreeMap::new();
    let mut halted_at = None;

    for layer in 1..=spec.through_layer.min(registry.max_layer()) {
        if registry.config.training_mode == TrainingMode::Td {
            let budget = registry.config.budget(layer);
            let stats = train_layer(&mut trainer, &mat, &registry, layer, budget, &reports)?;
            report_text.push_str(&format!(
                "layer {layer}: trained {} steps, actions [rf {}, rb {}, rotl {}, rotr {}, ef {}]\n",
                stats.steps,
                stats.action_counts[0],
                stats.action_counts[1],
                stats.action_counts[2],
                stats.action_counts[3],
                stats.action_counts[4],
            ));
        } else {
            report_text.push_str(&format!("layer {layer}: oracle-seeded, no training\n"));
        }
        let report = verify_layer(&trainer, &mat, &registry, layer, registry.config.verify_tol)?;
        report_text.push_str(&report.to_text());
        let failing = report.failing(registry.config.gate_mean_abs_err);
        reports.insert(layer, report);
        if !failing.is_empty() {
            report_text.push_str(&format!(
                "layer {layer}: gate FAILED for {failing:?}; halting\n"
            ));
            halted_at = Some(layer);
            break;
        }
        report_text.push_str(&format!("layer {layer}: gate ok\n"));
    }

    // Aggregate summary, stable ordering.
    let mut worst: Vec<(u32, String, f64)> = reports
        .values()
        .flat_map(|r| r.forecasts.iter().map(|f| (f.layer, f.abbrev.clone(), f.mean_abs_err)))
        .collect();
    worst.sort_by(|a, b| (a.0, &a.1).cmp(&(b.0, &b.1)));
    report_text.push_str("summary: layer, forecast, mean_abs_err\n");
    for (layer, abbrev, err) in worst {
        report_text.push_str(&format!("  {layer}, {abbrev}, {err:.6}\n"));
    }

    if let Some(dir) = &spec.out_dir {
        std::fs::create_dir_all(dir)
            .map_err(|e| CurriculumError::Config(format!("cannot create {dir:?}: {e}")))?;
        let params = trainer.approx.to_text(spec.seed, &digest);
        std::fs::write(dir.join("params.txt"), params)
            .map_err(|e| CurriculumError::Config(format!("cannot write params: {e}")))?;
        std::fs::write(dir.join("report.txt"), &report_text)
            .map_err(|e| CurriculumError::Config(format!("cannot write report: {e}")))?;
    }

    Ok(RunOutcome { registry, mat, trainer, reports, report_text, halted_at })
}
