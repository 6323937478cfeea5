//! Online temporal-difference learning of forecast estimates, gated for
//! off-policy use: a forecast only learns from transitions its option
//! could have generated.

use crate::features::{Approximator, FeatureError, Query};
use crate::mdp::{ActionId, ForecastId, GvfError, StateId, TabularOption, TerminationMode};
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GatingMode {
    /// Update only when the executed action is in the option policy's
    /// support. Exact for deterministic option policies.
    MatchSupport,
    /// Update on every transition, scaled by π(a|s)/b(a|s).
    ImportanceRatio,
}

#[derive(Clone, Copy, Debug)]
pub enum AlphaMode {
    Fixed(f64),
    /// 1 / visit-count per table key (weighted by the importance ratio),
    /// turning the estimate into a running weighted mean of targets.
    VisitDecay,
}

/// How the bootstrap target is assembled from a transition.
#[derive(Clone, Copy, Debug)]
pub enum TargetStyle {
    /// Termination is a sampled event carried by the transition.
    Sampled,
    /// Termination is mixed in by its probability (expected update);
    /// lower variance, same fixed point.
    Expected,
}

/// One observed transition, as seen by a single forecast's learner.
/// `from`/`to` address the approximator (table key or feature vector);
/// `state` addresses the option tables for gating.
#[derive(Clone, Copy, Debug)]
pub struct Transition<'a> {
    pub state: StateId,
    pub action: ActionId,
    pub from: Query<'a>,
    pub to: Query<'a>,
    pub cumulant: f64,
    pub termination: TerminationInfo,
}

/// Termination information for target construction.
#[derive(Clone, Copy, Debug)]
pub enum TerminationInfo {
    /// Pre-step sampled form: ξ = z when terminated, else c + f̂(s').
    Sampled { terminated: bool, terminal_value: f64 },
    /// Post-step sampled form: ξ = c + z(s') when terminated, else c + f̂(s').
    SampledPost { terminated: bool, terminal_next: f64 },
    /// Expected pre-step target: ξ = β(s)z(s) + (1-β(s))(c + f̂(s')).
    ExpectedPre { beta_here: f64, terminal_here: f64 },
    /// Expected post-step target: ξ = c + β(s')z(s') + (1-β(s'))f̂(s').
    ExpectedPost { beta_next: f64, terminal_next: f64 },
    /// One action then unconditional termination: ξ = c + z(s').
    OneStep { terminal_next: f64 },
}

impl TerminationInfo {
    pub fn terminated(&self) -> bool {
        match *self {
            TerminationInfo::Sampled { terminated, .. }
            | TerminationInfo::SampledPost { terminated, .. } => terminated,
            TerminationInfo::ExpectedPre { beta_here, .. } => beta_here >= 1.0,
            TerminationInfo::ExpectedPost { beta_next, .. } => beta_next >= 1.0,
            TerminationInfo::OneStep { .. } => true,
        }
    }
}

/// The TD target ξ for a transition: the terminal value when the option
/// terminated, otherwise the cumulant plus the bootstrapped estimate at
/// the next state.
pub fn td_target(
    transition: &Transition,
    approx: &Approximator,
    forecast_id: ForecastId,
) -> Result<f64, FeatureError> {
    let estimate_next = || approx.predict(forecast_id, transition.to);
    let c = transition.cumulant;
    Ok(match transition.termination {
        TerminationInfo::Sampled { terminated, terminal_value } => {
            if terminated {
                terminal_value
            } else {
                c + estimate_next()?
            }
        }
        TerminationInfo::SampledPost { terminated, terminal_next } => {
            if terminated {
                c + terminal_next
            } else {
                c + estimate_next()?
            }
        }
        TerminationInfo::ExpectedPre { beta_here, terminal_here } => {
            let cont = if beta_here < 1.0 { c + estimate_next()? } else { 0.0 };
            beta_here * terminal_here + (1.0 - beta_here) * cont
        }
        TerminationInfo::ExpectedPost { beta_next, terminal_next } => {
            let cont = if beta_next < 1.0 { estimate_next()? } else { 0.0 };
            c + beta_next * terminal_next + (1.0 - beta_next) * cont
        }
        TerminationInfo::OneStep { terminal_next } => c + terminal_next,
    })
}

/// Expected-target termination info for a forecast's mode, from the β
/// and terminal tables. Used by trainers that know the option exactly.
pub fn expected_termination(
    mode: TerminationMode,
    beta_here: f64,
    terminal_here: f64,
    beta_next: f64,
    terminal_next: f64,
) -> TerminationInfo {
    match mode {
        TerminationMode::PreStep => TerminationInfo::ExpectedPre { beta_here, terminal_here },
        TerminationMode::PostStep => TerminationInfo::ExpectedPost { beta_next, terminal_next },
        TerminationMode::OneStep => TerminationInfo::OneStep { terminal_next },
    }
}

/// The outcome of one TD step: target, error, whether the option
/// terminated, and whether the update was applied (false when gated out).
#[derive(Clone, Copy, Debug)]
pub struct TdStep {
    pub target: f64,
    pub error: f64,
    pub terminated: bool,
    pub applied: bool,
}

/// Per-forecast learner state. Each learner exclusively owns its
/// parameter block inside the shared approximator.
#[derive(Clone, Debug)]
pub struct TdLearner {
    pub forecast_id: ForecastId,
    pub alpha: AlphaMode,
    pub gating: GatingMode,
    /// Cumulative update weight per table key (visit decay).
    counts: BTreeMap<u64, f64>,
}

impl TdLearner {
    pub fn new(forecast_id: ForecastId, alpha: AlphaMode, gating: GatingMode) -> Self {
        Self { forecast_id, alpha, gating, counts: BTreeMap::new() }
    }
}

/// Applies one gated TD update.
///
/// With `MatchSupport` gating, transitions whose executed action is
/// outside the option policy's support leave every parameter untouched.
/// With `ImportanceRatio`, the update is scaled by π(a|s)/behavior_prob.
pub fn td_step(
    learner: &mut TdLearner,
    approx: &mut Approximator,
    option: &TabularOption,
    transition: &Transition,
    behavior_prob: Option<f64>,
) -> Result<TdStep, GvfError> {
    let id = learner.forecast_id;
    let wrap = |e: FeatureError| GvfError::Config(e.to_string());
    let target = td_target(transition, approx, id).map_err(wrap)?;
    let estimate = approx.predict(id, transition.from).map_err(wrap)?;
    let error = target - estimate;
    let terminated = transition.termination.terminated();

    let ratio = match learner.gating {
        GatingMode::MatchSupport => {
            if !option.supports(transition.state, transition.action) {
                return Ok(TdStep { target, error, terminated, applied: false });
            }
            1.0
        }
        GatingMode::ImportanceRatio => {
            let b = behavior_prob.ok_or_else(|| {
                GvfError::Argument("importance-ratio gating requires a behavior probability".into())
            })?;
            if b <= 0.0 {
                return Err(GvfError::Argument(format!(
                    "behavior probability must be positive, got {b}"
                )));
            }
            option.action_prob(transition.state, transition.action) / b
        }
    };
    if ratio == 0.0 {
        return Ok(TdStep { target, error, terminated, applied: false });
    }

    let (alpha_eff, weight) = match learner.alpha {
        AlphaMode::Fixed(a) => (a, ratio),
        AlphaMode::VisitDecay => {
            let Query::Key(k) = transition.from else {
                return Err(GvfError::Config(
                    "visit-decay step sizes require the tabular backend".into(),
                ));
            };
            let w = learner.counts.entry(k).or_insert(0.0);
            *w += ratio;
            (ratio / *w, 1.0)
        }
    };
    approx
        .apply_update(id, transition.from, error, alpha_eff, weight)
        .map_err(wrap)?;
    Ok(TdStep { target, error, terminated, applied: true })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{discretize_pose, Approximator, BackendKind};
    use crate::mdp::ValueKind;
    use crate::world::Pose;

    fn keyed(state: StateId, action: ActionId, k0: u64, k1: u64) -> Transition<'static> {
        Transition {
            state,
            action,
            from: Query::Key(k0),
            to: Query::Key(k1),
            cumulant: 0.0,
            termination: TerminationInfo::Sampled { terminated: false, terminal_value: 0.0 },
        }
    }

    fn tab() -> Approximator {
        let mut a = Approximator::new(BackendKind::TabularPose);
        a.register(1, ValueKind::Raw, 0).unwrap();
        a
    }

    #[test]
    fn target_cases_from_the_recursion() {
        let a = tab();
        let k0 = discretize_pose(Pose::new(0, 0, 0));
        let k1 = discretize_pose(Pose::new(0, 0, 1));
        // Terminated with z = 1 -> ξ = 1.
        let mut t = keyed(0, 0, k0, k1);
        t.termination = TerminationInfo::Sampled { terminated: true, terminal_value: 1.0 };
        assert_eq!(td_target(&t, &a, 1).unwrap(), 1.0);
        // Not terminated, c = 0, estimate(s') = 0.7 -> ξ = 0.7.
        let mut b = tab();
        b.seed_values(1, [(k1, 0.7)]).unwrap();
        t.termination = TerminationInfo::Sampled { terminated: false, terminal_value: 0.0 };
        assert_eq!(td_target(&t, &b, 1).unwrap(), 0.7);
        // Not terminated, c = 1, estimate(s') = 4 -> ξ = 5.
        let mut c = tab();
        c.seed_values(1, [(k1, 4.0)]).unwrap();
        t.cumulant = 1.0;
        assert_eq!(td_target(&t, &c, 1).unwrap(), 5.0);
    }

    #[test]
    fn gated_out_step_leaves_parameters_bit_identical() {
        let mut a = tab();
        let k0 = discretize_pose(Pose::new(0, 0, 0));
        a.seed_values(1, [(k0, 0.25)]).unwrap();
        let before = a.to_text(0, "w");
        let option = TabularOption::fixed_action(2, 4, vec![0.0; 4], TerminationMode::PostStep);
        let mut learner = TdLearner::new(1, AlphaMode::Fixed(0.5), GatingMode::MatchSupport);
        let mut t = keyed(0, 0, k0, k0); // executed action 0, policy wants 2
        t.termination = TerminationInfo::Sampled { terminated: true, terminal_value: 1.0 };
        let step = td_step(&mut learner, &mut a, &option, &t, None).unwrap();
        assert!(!step.applied);
        assert_eq!(a.to_text(0, "w"), before);
    }

    #[test]
    fn terminal_update_moves_estimate_by_alpha_delta() {
        let mut a = tab();
        let k0 = discretize_pose(Pose::new(0, 0, 0));
        let option = TabularOption::fixed_action(0, 4, vec![0.0; 4], TerminationMode::PostStep);
        let mut learner = TdLearner::new(1, AlphaMode::Fixed(0.5), GatingMode::MatchSupport);
        let mut t = keyed(0, 0, k0, k0);
        t.termination = TerminationInfo::Sampled { terminated: true, terminal_value: 1.0 };
        let step = td_step(&mut learner, &mut a, &option, &t, None).unwrap();
        assert!(step.applied);
        assert_eq!(step.error, 1.0);
        assert_eq!(a.predict(1, Query::Key(k0)).unwrap(), 0.5);
    }

    #[test]
    fn importance_ratio_requires_behavior_probability() {
        let mut a = tab();
        let k0 = discretize_pose(Pose::new(0, 0, 0));
        let option = TabularOption::fixed_action(0, 4, vec![0.0; 4], TerminationMode::PostStep);
        let mut learner = TdLearner::new(1, AlphaMode::Fixed(0.5), GatingMode::ImportanceRatio);
        let t = keyed(0, 0, k0, k0);
        assert!(matches!(
            td_step(&mut learner, &mut a, &option, &t, None),
            Err(GvfError::Argument(_))
        ));
        assert!(matches!(
            td_step(&mut learner, &mut a, &option, &t, Some(0.0)),
            Err(GvfError::Argument(_))
        ));
    }

    #[test]
    fn importance_ratio_scales_the_update() {
        let mut a = tab();
        let k0 = discretize_pose(Pose::new(0, 0, 0));
        let option = TabularOption::uniform(4, 1, vec![0.0], TerminationMode::PostStep);
        let mut learner = TdLearner::new(1, AlphaMode::Fixed(1.0), GatingMode::ImportanceRatio);
        let mut t = keyed(0, 3, k0, k0);
        t.termination = TerminationInfo::Sampled { terminated: true, terminal_value: 1.0 };
        // π(a|s) = 0.25, b = 0.5: ratio 0.5, update = α·ρ·δ = 0.5.
        let step = td_step(&mut learner, &mut a, &option, &t, Some(0.5)).unwrap();
        assert!(step.applied);
        assert_eq!(a.predict(1, Query::Key(k0)).unwrap(), 0.5);
    }

    #[test]
    fn visit_decay_averages_targets() {
        let mut a = tab();
        let k0 = discretize_pose(Pose::new(0, 0, 0));
        let option = TabularOption::fixed_action(0, 4, vec![0.0; 4], TerminationMode::PostStep);
        let mut learner = TdLearner::new(1, AlphaMode::VisitDecay, GatingMode::MatchSupport);
        for target in [1.0, 0.0, 1.0, 0.0] {
            let mut t = keyed(0, 0, k0, k0);
            t.termination = TerminationInfo::Sampled { terminated: true, terminal_value: target };
            td_step(&mut learner, &mut a, &option, &t, None).unwrap();
        }
        assert!((a.predict(1, Query::Key(k0)).unwrap() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn expected_post_target_mixes_by_beta() {
        let mut a = tab();
        let k1 = discretize_pose(Pose::new(0, 0, 1));
        a.seed_values(1, [(k1, 2.0)]).unwrap();
        let t = Transition {
            state: 0,
            action: 0,
            from: Query::Key(discretize_pose(Pose::new(0, 0, 0))),
            to: Query::Key(k1),
            cumulant: 1.0,
            termination: TerminationInfo::ExpectedPost { beta_next: 0.25, terminal_next: 8.0 },
        };
        // ξ = 1 + 0.25·8 + 0.75·2 = 4.5.
        assert_eq!(td_target(&t, &a, 1).unwrap(), 4.5);
    }
}
