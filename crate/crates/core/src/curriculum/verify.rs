//! Verification: compares the backend's estimates against the DP oracle
//! over the full reachable pose set, and learned option policies against
//! their exact counterparts.

use super::materialize::Materialized;
use super::registry::{CurriculumError, OptionId, Registry};
use super::train::Trainer;
use crate::features::{build_state_vector, discretize_pose, BackendKind, Query};
use crate::mdp::ForecastId;
use crate::world::{sense, Events};

#[derive(Clone, Debug)]
pub struct ForecastVerification {
    pub layer: u32,
    pub id: ForecastId,
    pub abbrev: String,
    pub max_abs_err: f64,
    pub mean_abs_err: f64,
    pub frac_within_tol: f64,
    pub samples: usize,
}

#[derive(Clone, Debug)]
pub struct OptionVerification {
    pub id: OptionId,
    pub abbrev: String,
    /// Fraction of initiable states where the operative policy's greedy
    /// action matches the exact DP policy.
    pub greedy_match_frac: f64,
}

#[derive(Clone, Debug)]
pub struct VerificationReport {
    pub layer: u32,
    pub tol: f64,
    pub forecasts: Vec<ForecastVerification>,
    pub options: Vec<OptionVerification>,
}

impl VerificationReport {
    /// One line per forecast: layer, id, name, max_err, mean_err,
    /// frac_within_tol.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for f in &self.forecasts {
            out.push_str(&format!(
                "{}, {}, {}, {:.6}, {:.6}, {:.6}\n",
                f.layer, f.id, f.abbrev, f.max_abs_err, f.mean_abs_err, f.frac_within_tol
            ));
        }
        for o in &self.options {
            out.push_str(&format!(
                "option {}, {}, greedy_match {:.6}\n",
                o.id, o.abbrev, o.greedy_match_frac
            ));
        }
        out
    }

    pub fn failing(&self, gate: f64) -> Vec<String> {
        self.forecasts
            .iter()
            .filter(|f| f.mean_abs_err > gate)
            .map(|f| f.abbrev.clone())
            .collect()
    }
}

/// Backend predictions per state for one forecast. The linear backend
/// is evaluated on canonical state vectors: the pose's rendered
/// observation (touch bit = touch feasibility) concatenated with a
/// two-pass bootstrap of the estimate recurrence.
fn predictions(
    trainer: &Trainer,
    mat: &Materialized,
    id: ForecastId,
) -> Result<Vec<f64>, CurriculumError> {
    let n = mat.pose_mdp.state_count();
    let mut out = Vec::with_capacity(n);
    match trainer.approx.kind() {
        BackendKind::TabularPose => {
            for s in 0..n {
                let key = discretize_pose(mat.pose_mdp.pose(s));
                out.push(trainer.approx.predict(id, Query::Key(key))?);
            }
        }
        BackendKind::Linear => {
            let ids = trainer.forecast_ids().to_vec();
            for s in 0..n {
                let obs = sense(
                    &mat.world,
                    mat.pose_mdp.pose(s),
                    Events { contact: mat.pose_mdp.touch(s) },
                    trainer.permutation(),
                    &mat.robot_params,
                );
                let zeros = vec![0.0; ids.len()];
                let v0 = build_state_vector(&obs, &zeros);
                let mut est = Vec::with_capacity(ids.len());
                for &f in &ids {
                    est.push(trainer.approx.predict(f, Query::Vector(&v0))?);
                }
                let v1 = build_state_vector(&obs, &est);
                out.push(trainer.approx.predict(id, Query::Vector(&v1))?);
            }
        }
    }
    Ok(out)
}

/// Compares every forecast of the layer to its DP oracle over all
/// reachable poses, and each learned option of the layer to the exact
/// DP policy.
pub fn verify_layer(
    trainer: &Trainer,
    mat: &Materialized,
    registry: &Registry,
    layer: u32,
    tol: f64,
) -> Result<VerificationReport, CurriculumError> {
    let mut forecasts = Vec::new();
    for id in registry.forecasts_in_layer(layer) {
        let spec = registry.forecast(id)?;
        let table = mat.table(id)?;
        let preds = predictions(trainer, mat, id)?;
        let mut max_err = 0.0f64;
        let mut sum_err = 0.0;
        let mut within = 0usize;
        for (p, v) in preds.iter().zip(&table.values) {
            let e = (p - v).abs();
            max_err = max_err.max(e);
            sum_err += e;
            if e <= tol {
                within += 1;
            }
        }
        let n = preds.len();
        forecasts.push(ForecastVerification {
            layer,
            id,
            abbrev: spec.abbrev.clone(),
            max_abs_err: max_err,
            mean_abs_err: sum_err / n as f64,
            frac_within_tol: within as f64 / n as f64,
            samples: n,
        });
    }

    let mut options = Vec::new();
    for oid in registry.options_in_layer(layer) {
        if let Some(reference) = mat.dp_policies.get(&oid) {
            let spec = registry.option(oid)?;
            let operative = mat.option(oid)?;
            let mut total = 0usize;
            let mut agree = 0usize;
            for s in 0..mat.pose_mdp.state_count() {
                if !operative.initiation[s] {
                    continue;
                }
                total += 1;
                let greedy = operative.policy[s].first().map(|&(a, _)| a);
                if greedy == Some(reference.policy[s]) {
                    agree += 1;
                }
            }
            options.push(OptionVerification {
                id: oid,
                abbrev: spec.abbrev.to_string(),
                greedy_match_frac: if total == 0 { 1.0 } else { agree as f64 / total as f64 },
            });
        }
    }
    Ok(VerificationReport { layer, tol, forecasts, options })
}
