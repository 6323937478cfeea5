//! Layer-ordered training: a single behavior trajectory whose every
//! transition fans out to all active forecasts, each applying a gated TD
//! update against its own option's semantics.

use super::alias::evaluate_alias;
use super::config::{AlphaConfig, BehaviorKind, CurriculumConfig};
use super::materialize::Materialized;
use super::registry::{CurriculumError, OptionId, PolicySpec, Registry, TerminalSpec};
use super::verify::VerificationReport;
use crate::features::{build_state_vector, discretize_pose, Approximator, BackendKind, Query};
use crate::mdp::{ForecastId, TerminationMode};
use crate::rng::RngStreams;
use crate::td::{
    expected_termination, td_step, AlphaMode, GatingMode, TargetStyle, TdLearner, TerminationInfo,
    Transition,
};
use crate::world::{make_pixel_permutation, sense, Action, Events, PixelPermutation};
use rand::Rng;
use rand_chacha::ChaCha12Rng;
use std::collections::BTreeMap;

/// Statistics from one training phase.
#[derive(Clone, Debug, Default)]
pub struct TrainStats {
    pub steps: usize,
    pub applied: BTreeMap<ForecastId, usize>,
    pub action_counts: [usize; Action::COUNT],
}

/// Online training state: the approximator, one TD learner per
/// forecast, and the behavior trajectory.
pub struct Trainer {
    pub approx: Approximator,
    learners: BTreeMap<ForecastId, TdLearner>,
    forecast_ids: Vec<ForecastId>,
    permutation: PixelPermutation,
    state: usize,
    prev_contact: bool,
    /// Estimates computed at the previous step, by forecast-id order
    /// (the Eq.-5 recurrence input).
    est_prev: Vec<f64>,
    behavior_rng: ChaCha12Rng,
    term_rng: ChaCha12Rng,
    following: Option<OptionId>,
}

impl Trainer {
    /// Registers every forecast up front (the state vector length is
    /// fixed for the whole run) and seeds the behavior streams.
    pub fn new(
        backend: BackendKind,
        registry: &Registry,
        mat: &Materialized,
        streams: &RngStreams,
        camera_rays: usize,
    ) -> Result<Self, CurriculumError> {
        let mut approx = Approximator::new(backend);
        let forecast_ids: Vec<ForecastId> = registry.forecasts.keys().copied().collect();
        let dim = camera_rays + 1 + forecast_ids.len();
        let mut learners = BTreeMap::new();
        for &id in &forecast_ids {
            let spec = registry.forecast(id)?;
            approx.register(id, spec.kind, dim)?;
            let gating = match registry.option(spec.option)?.policy {
                PolicySpec::UniformRandom => GatingMode::ImportanceRatio,
                _ => GatingMode::MatchSupport,
            };
            let alpha = match registry.config.alpha {
                AlphaConfig::Fixed(a) => AlphaMode::Fixed(a),
                AlphaConfig::VisitDecay => AlphaMode::VisitDecay,
                AlphaConfig::Auto => match gating {
                    GatingMode::MatchSupport => AlphaMode::Fixed(1.0),
                    GatingMode::ImportanceRatio => AlphaMode::VisitDecay,
                },
            };
            learners.insert(id, TdLearner::new(id, alpha, gating));
        }
        let state = mat.start_state();
        let est_prev = vec![0.0; forecast_ids.len()];
        Ok(Self {
            approx,
            learners,
            forecast_ids,
            permutation: make_pixel_permutation(streams.master(), camera_rays),
            state,
            prev_contact: false,
            est_prev,
            behavior_rng: streams.labeled("behavior"),
            term_rng: streams.labeled("termination"),
            following: None,
        })
    }

    pub fn forecast_ids(&self) -> &[ForecastId] {
        &self.forecast_ids
    }

    pub fn permutation(&self) -> &PixelPermutation {
        &self.permutation
    }

    /// Estimate of one forecast at a state (tabular path).
    fn estimate_key(&self, id: ForecastId, state: usize, mat: &Materialized) -> f64 {
        let key = discretize_pose(mat.pose_mdp.pose(state));
        self.approx.predict(id, Query::Key(key)).unwrap_or(0.0)
    }

    /// Terminal value of a forecast at a state, computed from the
    /// current estimates (composition: z may reference another forecast
    /// or an alias of estimates). `touch_obs` is the sensed touch bit
    /// at that state, when the transition carries one.
    fn terminal_estimate(
        &self,
        registry: &Registry,
        id: ForecastId,
        state: usize,
        touch_obs: bool,
        mat: &Materialized,
    ) -> Result<f64, CurriculumError> {
        let spec = registry.forecast(id)?;
        Ok(match spec.terminal {
            TerminalSpec::Zero => 0.0,
            TerminalSpec::Touch => {
                if touch_obs {
                    1.0
                } else {
                    0.0
                }
            }
            TerminalSpec::Forecast(f) => self.estimate_key(f, state, mat),
            TerminalSpec::ForecastAbove(f, key) => {
                if self.estimate_key(f, state, mat) > registry.config.theta(key)? {
                    1.0
                } else {
                    0.0
                }
            }
            TerminalSpec::Alias(a) => {
                let lookup = |f: ForecastId| Some(self.estimate_key(f, state, mat));
                evaluate_alias(registry, a, &lookup)?
            }
        })
    }

    /// One behavior action plus its selection probability.
    fn choose_action(
        &mut self,
        mat: &Materialized,
        registry: &Registry,
        layer: u32,
        config: &CurriculumConfig,
    ) -> (usize, f64) {
        let s = self.state;
        match config.behavior {
            BehaviorKind::StepMixture => {
                let candidates: Vec<&OptionId> = registry
                    .options
                    .iter()
                    .filter(|(_, spec)| spec.layer <= layer)
                    .map(|(id, _)| id)
                    .filter(|id| {
                        mat.options.get(id).map(|o| o.initiation[s]).unwrap_or(false)
                    })
                    .collect();
                let p_opt = if candidates.is_empty() { 0.0 } else { config.behavior_option_prob };
                let a = if p_opt > 0.0 && self.behavior_rng.gen::<f64>() < p_opt {
                    let k = self.behavior_rng.gen_range(0..candidates.len());
                    let option = &mat.options[candidates[k]];
                    sample_policy(&option.policy[s], &mut self.behavior_rng)
                } else {
                    self.behavior_rng.gen_range(0..Action::COUNT)
                };
                let mut b = (1.0 - p_opt) / Action::COUNT as f64;
                if !candidates.is_empty() {
                    let mix: f64 = candidates
                        .iter()
                        .map(|id| mat.options[id].action_prob(s, a))
                        .sum::<f64>()
                        / candidates.len() as f64;
                    b += p_opt * mix;
                }
                (a, b)
            }
            BehaviorKind::OptionEpisodes => {
                if self.following.is_none()
                    && self.behavior_rng.gen::<f64>() < config.behavior_option_prob
                {
                    let candidates: Vec<OptionId> = registry
                        .options
                        .iter()
                        .filter(|(_, spec)| spec.layer <= layer && spec.layer > 0)
                        .map(|(id, _)| *id)
                        .filter(|id| {
                            mat.options.get(id).map(|o| o.initiation[s]).unwrap_or(false)
                        })
                        .collect();
                    if !candidates.is_empty() {
                        let k = self.behavior_rng.gen_range(0..candidates.len());
                        self.following = Some(candidates[k]);
                    }
                }
                match self.following {
                    Some(oid) => {
                        let option = &mat.options[&oid];
                        let a = sample_policy(&option.policy[s], &mut self.behavior_rng);
                        (a, option.action_prob(s, a))
                    }
                    None => {
                        let a = self.behavior_rng.gen_range(0..Action::COUNT);
                        (a, 1.0 / Action::COUNT as f64)
                    }
                }
            }
        }
    }
}

fn sample_policy(row: &[(usize, f64)], rng: &mut ChaCha12Rng) -> usize {
    if row.len() == 1 {
        return row[0].0;
    }
    let mut u = rng.gen::<f64>();
    for &(a, p) in row {
        if u < p {
            return a;
        }
        u -= p;
    }
    row.last().map(|&(a, _)| a).unwrap_or(0)
}

/// Runs `budget` behavior steps, fanning every transition out to all
/// forecasts of layers 1..=layer. Refuses when a prerequisite layer's
/// verification misses the gate.
pub fn train_layer(
    trainer: &mut Trainer,
    mat: &Materialized,
    registry: &Registry,
    layer: u32,
    budget: usize,
    verified: &BTreeMap<u32, VerificationReport>,
) -> Result<TrainStats, CurriculumError> {
    let config = &registry.config;
    // Prerequisite gate.
    let mut failing = Vec::new();
    for (l, report) in verified.iter().filter(|(l, _)| **l < layer) {
        for fv in &report.forecasts {
            if fv.mean_abs_err > config.gate_mean_abs_err {
                failing.push(format!("layer {l} {}", fv.abbrev));
            }
        }
    }
    if !failing.is_empty() {
        return Err(CurriculumError::Gate { layer, failing });
    }

    let active: Vec<ForecastId> = registry
        .forecasts
        .values()
        .filter(|f| f.layer <= layer)
        .map(|f| f.id)
        .collect();
    let linear = trainer.approx.kind() == BackendKind::Linear;
    let mut stats = TrainStats::default();
    let n_forecasts = trainer.forecast_ids.len();

    for _ in 0..budget {
        let s = trainer.state;
        let (a, behavior_prob) = trainer.choose_action(mat, registry, layer, config);
        let s2 = mat.pose_mdp.successor(s, a);
        let contact_event = a == Action::ExtendFinger.index() && mat.pose_mdp.touch(s);

        // State vectors (linear backend only): obs_t ∘ estimates_{t-1}.
        let (vec_from, vec_to, est_now) = if linear {
            let world = &mat.world;
            let obs_from = sense(
                world,
                mat.pose_mdp.pose(s),
                Events { contact: trainer.prev_contact },
                &trainer.permutation,
                &mat.robot_params,
            );
            let vec_from = build_state_vector(&obs_from, &trainer.est_prev);
            let mut est_now = vec![0.0; n_forecasts];
            for (i, &id) in trainer.forecast_ids.iter().enumerate() {
                est_now[i] = trainer.approx.predict(id, Query::Vector(&vec_from)).unwrap_or(0.0);
            }
            let obs_to = sense(
                world,
                mat.pose_mdp.pose(s2),
                Events { contact: contact_event },
                &trainer.permutation,
                &mat.robot_params,
            );
            let vec_to = build_state_vector(&obs_to, &est_now);
            (vec_from, vec_to, est_now)
        } else {
            (Vec::new(), Vec::new(), Vec::new())
        };

        let key_from = discretize_pose(mat.pose_mdp.pose(s));
        let key_to = discretize_pose(mat.pose_mdp.pose(s2));

        for &fid in &active {
            let def = mat.forecast(fid)?;
            let option = &def.option;
            let mode = option.termination_mode;
            // Skip transitions the option could not have generated at
            // all (not initiable and not mid-flight anywhere useful).
            let termination = match config.target_style {
                TargetStyle::Expected => {
                    let z_here = trainer.terminal_estimate(
                        registry,
                        fid,
                        s,
                        mat.pose_mdp.touch(s),
                        mat,
                    )?;
                    let z_next =
                        trainer.terminal_estimate(registry, fid, s2, contact_event, mat)?;
                    expected_termination(
                        mode,
                        option.termination[s],
                        z_here,
                        option.termination[s2],
                        z_next,
                    )
                }
                TargetStyle::Sampled => {
                    let z_next =
                        trainer.terminal_estimate(registry, fid, s2, contact_event, mat)?;
                    match mode {
                        TerminationMode::OneStep => TerminationInfo::OneStep { terminal_next: z_next },
                        TerminationMode::PostStep => {
                            let beta = option.termination[s2];
                            let terminated = beta >= 1.0
                                || (beta > 0.0 && trainer.term_rng.gen::<f64>() < beta);
                            TerminationInfo::SampledPost { terminated, terminal_next: z_next }
                        }
                        TerminationMode::PreStep => {
                            let beta = option.termination[s];
                            let terminated = beta >= 1.0
                                || (beta > 0.0 && trainer.term_rng.gen::<f64>() < beta);
                            let z_here = trainer.terminal_estimate(
                                registry,
                                fid,
                                s,
                                mat.pose_mdp.touch(s),
                                mat,
                            )?;
                            TerminationInfo::Sampled { terminated, terminal_value: z_here }
                        }
                    }
                }
            };
            let (from, to) = if linear {
                (Query::Vector(vec_from.as_slice()), Query::Vector(vec_to.as_slice()))
            } else {
                (Query::Key(key_from), Query::Key(key_to))
            };
            let transition = Transition {
                state: s,
                action: a,
                from,
                to,
                cumulant: def.outcome.cumulant(s, a),
                termination,
            };
            let learner = trainer.learners.get_mut(&fid).expect("registered learner");
            let step =
                td_step(learner, &mut trainer.approx, option, &transition, Some(behavior_prob))?;
            if step.applied {
                *stats.applied.entry(fid).or_insert(0) += 1;
            }
        }

        // Advance the trajectory and the recurrence snapshot.
        if let BehaviorKind::OptionEpisodes = config.behavior {
            if let Some(oid) = trainer.following {
                let option = &mat.options[&oid];
                let beta = option.termination[s2];
                if beta >= 1.0 || (beta > 0.0 && trainer.behavior_rng.gen::<f64>() < beta) {
                    trainer.following = None;
                }
            }
        }
        stats.action_counts[a] += 1;
        stats.steps += 1;
        trainer.state = s2;
        trainer.prev_contact = contact_event;
        if linear {
            trainer.est_prev = est_now;
        }
    }
    Ok(stats)
}

/// Seeds the tabular backend with the exact DP values of every
/// materialized forecast (oracle mode).
pub fn seed_from_oracle(trainer: &mut Trainer, mat: &Materialized) -> Result<(), CurriculumError> {
    if trainer.approx.kind() != BackendKind::TabularPose {
        return Err(CurriculumError::Config(
            "oracle seeding requires the tabular backend".into(),
        ));
    }
    for (id, table) in &mat.tables {
        let pairs: Vec<(u64, f64)> = table
            .values
            .iter()
            .enumerate()
            .map(|(s, &v)| (discretize_pose(mat.pose_mdp.pose(s)), v))
            .collect();
        trainer.approx.seed_values(*id, pairs)?;
    }
    Ok(())
}

/// Per-forecast alpha override, exposed for experiments.
pub fn set_alpha(trainer: &mut Trainer, id: ForecastId, alpha: AlphaMode) {
    if let Some(l) = trainer.learners.get_mut(&id) {
        l.alpha = alpha;
    }
}
