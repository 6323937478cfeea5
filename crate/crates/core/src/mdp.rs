//! Core domain types: finite MDPs, options, outcomes and forecast
//! definitions, all materialized as per-state tables so the solvers can
//! treat them uniformly.

use std::sync::Arc;
use thiserror::Error;

pub type StateId = usize;
pub type ActionId = usize;
pub type ForecastId = u32;

/// Probability mass must balance to within this slack.
pub const PROB_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GvfError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("argument error: {0}")]
    Argument(String),
    #[error(
        "divergent forecast {forecast}: zero termination probability on a reachable cycle \
         with nonzero cumulant; cycle states {cycle:?}"
    )]
    DivergentForecast { forecast: ForecastId, cycle: Vec<StateId> },
    #[error("forecast {forecast} did not converge within {sweeps} sweeps (residual {residual:e})")]
    NonConvergence { forecast: ForecastId, sweeps: usize, residual: f64 },
    #[error("option not initiable at state {state}")]
    NotInitiable { state: StateId },
    #[error("rollout overran the step cap of {cap} steps")]
    RolloutOverrun { cap: usize },
    #[error("dead state: no admissible action at reachable initiable state {state}")]
    DeadState { state: StateId },
}

/// A finite MDP with an opaque per-state annotation.
///
/// Transition rows are sparse `(next_state, probability)` lists; each row
/// sums to 1 within [`PROB_TOL`]. The annotation carries whatever payload
/// downstream code needs to evaluate cumulants, terminal values and
/// termination probabilities on states (the microworld stores the pose,
/// touch feasibility and rendered pixels there).
#[derive(Clone, Debug)]
pub struct FiniteMdp<A = ()> {
    state_count: usize,
    action_count: usize,
    /// `transition[s * action_count + a]` = distribution over next states.
    transition: Vec<Vec<(StateId, f64)>>,
    annotations: Vec<A>,
}

impl<A> FiniteMdp<A> {
    pub fn new(
        state_count: usize,
        action_count: usize,
        transition: Vec<Vec<(StateId, f64)>>,
        annotations: Vec<A>,
    ) -> Result<Self, GvfError> {
        if transition.len() != state_count * action_count {
            return Err(GvfError::Config(format!(
                "transition table has {} rows, expected {}",
                transition.len(),
                state_count * action_count
            )));
        }
        if annotations.len() != state_count {
            return Err(GvfError::Config(format!(
                "{} annotations for {} states",
                annotations.len(),
                state_count
            )));
        }
        for (row_idx, row) in transition.iter().enumerate() {
            let mut sum = 0.0;
            for &(s, p) in row {
                if s >= state_count {
                    return Err(GvfError::Config(format!(
                        "transition row {row_idx} references state {s} >= {state_count}"
                    )));
                }
                if !(0.0..=1.0 + PROB_TOL).contains(&p) {
                    return Err(GvfError::Config(format!(
                        "transition row {row_idx} has probability {p}"
                    )));
                }
                sum += p;
            }
            if (sum - 1.0).abs() > PROB_TOL {
                return Err(GvfError::Config(format!(
                    "transition row {row_idx} sums to {sum}, expected 1"
                )));
            }
        }
        Ok(Self { state_count, action_count, transition, annotations })
    }

    pub fn state_count(&self) -> usize {
        self.state_count
    }

    pub fn action_count(&self) -> usize {
        self.action_count
    }

    pub fn successors(&self, state: StateId, action: ActionId) -> &[(StateId, f64)] {
        &self.transition[state * self.action_count + action]
    }

    pub fn annotation(&self, state: StateId) -> &A {
        &self.annotations[state]
    }

    pub fn annotations(&self) -> &[A] {
        &self.annotations
    }
}

/// Where the termination probability is assessed relative to action
/// execution.
///
/// * `PreStep`: β is assessed at the current state before acting; with
///   β(s) = 1 the option ends with zero actions taken.
/// * `PostStep`: one action is always executed, then β is assessed at the
///   arrived state. This is the default for the layered curriculum.
/// * `OneStep`: exactly one action, then unconditional termination
///   (primitive options).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum TerminationMode {
    PreStep,
    PostStep,
    OneStep,
}

impl TerminationMode {
    pub fn label(self) -> &'static str {
        match self {
            TerminationMode::PreStep => "pre_step",
            TerminationMode::PostStep => "post_step",
            TerminationMode::OneStep => "one_step",
        }
    }

    pub fn parse(s: &str) -> Result<Self, GvfError> {
        match s {
            "pre" | "pre_step" => Ok(TerminationMode::PreStep),
            "post" | "post_step" => Ok(TerminationMode::PostStep),
            "one" | "one_step" => Ok(TerminationMode::OneStep),
            other => Err(GvfError::Argument(format!("unknown termination mode '{other}'"))),
        }
    }
}

/// An option materialized on a finite MDP: per-state policy rows, an
/// initiation predicate and a termination probability.
#[derive(Clone, Debug)]
pub struct TabularOption {
    /// `policy[s]` = distribution over actions; may be empty on states
    /// where the option is undefined (never initiable, never entered).
    pub policy: Vec<Vec<(ActionId, f64)>>,
    pub initiation: Vec<bool>,
    pub termination: Vec<f64>,
    pub termination_mode: TerminationMode,
}

impl TabularOption {
    /// Option that always takes `action` everywhere.
    pub fn fixed_action(
        action: ActionId,
        state_count: usize,
        termination: Vec<f64>,
        mode: TerminationMode,
    ) -> Self {
        Self {
            policy: vec![vec![(action, 1.0)]; state_count],
            initiation: vec![true; state_count],
            termination,
            termination_mode: mode,
        }
    }

    /// Uniform-random option over all actions.
    pub fn uniform(
        action_count: usize,
        state_count: usize,
        termination: Vec<f64>,
        mode: TerminationMode,
    ) -> Self {
        let p = 1.0 / action_count as f64;
        Self {
            policy: vec![(0..action_count).map(|a| (a, p)).collect(); state_count],
            initiation: vec![true; state_count],
            termination,
            termination_mode: mode,
        }
    }

    /// Validates distribution sums and the β range. With `strict_beta`
    /// set, β = 0 is rejected anywhere (termination must stay in (0,1]).
    pub fn validate(&self, strict_beta: bool) -> Result<(), GvfError> {
        for (s, &beta) in self.termination.iter().enumerate() {
            if !(0.0..=1.0).contains(&beta) {
                return Err(GvfError::Config(format!("termination({s}) = {beta} outside [0,1]")));
            }
            if strict_beta && beta == 0.0 {
                return Err(GvfError::Config(format!(
                    "strict-beta: termination({s}) = 0 is not allowed"
                )));
            }
        }
        for (s, row) in self.policy.iter().enumerate() {
            if row.is_empty() {
                continue;
            }
            let sum: f64 = row.iter().map(|&(_, p)| p).sum();
            if self.initiation[s] && (sum - 1.0).abs() > PROB_TOL {
                return Err(GvfError::Config(format!("policy row {s} sums to {sum}")));
            }
        }
        Ok(())
    }

    /// Probability the option's policy assigns to `action` in `state`.
    pub fn action_prob(&self, state: StateId, action: ActionId) -> f64 {
        self.policy[state]
            .iter()
            .find(|&&(a, _)| a == action)
            .map(|&(_, p)| p)
            .unwrap_or(0.0)
    }

    /// Whether `action` has positive probability under the policy.
    pub fn supports(&self, state: StateId, action: ActionId) -> bool {
        self.action_prob(state, action) > 0.0
    }
}

/// The outcome of a forecast: a per-(state, action) cumulant accumulated
/// while the option runs, and a per-state terminal value added once at
/// termination.
#[derive(Clone, Debug)]
pub struct OutcomeTable {
    /// `cumulant[s * action_count + a]`.
    cumulant: Vec<f64>,
    terminal: Vec<f64>,
    action_count: usize,
}

impl OutcomeTable {
    pub fn new(cumulant: Vec<f64>, terminal: Vec<f64>, action_count: usize) -> Self {
        debug_assert_eq!(cumulant.len(), terminal.len() * action_count);
        Self { cumulant, terminal, action_count }
    }

    pub fn from_fns<A>(
        mdp: &FiniteMdp<A>,
        mut c: impl FnMut(StateId, ActionId) -> f64,
        mut z: impl FnMut(StateId) -> f64,
    ) -> Self {
        let n = mdp.state_count();
        let m = mdp.action_count();
        let mut cumulant = Vec::with_capacity(n * m);
        for s in 0..n {
            for a in 0..m {
                cumulant.push(c(s, a));
            }
        }
        let terminal = (0..n).map(|s| z(s)).collect();
        Self { cumulant, terminal, action_count: m }
    }

    /// c ≡ 0 with the given terminal values.
    pub fn terminal_only(terminal: Vec<f64>, action_count: usize) -> Self {
        Self { cumulant: vec![0.0; terminal.len() * action_count], terminal, action_count }
    }

    /// c ≡ 1, z ≡ 0 (step counting).
    pub fn step_counter(state_count: usize, action_count: usize) -> Self {
        Self {
            cumulant: vec![1.0; state_count * action_count],
            terminal: vec![0.0; state_count],
            action_count,
        }
    }

    pub fn cumulant(&self, state: StateId, action: ActionId) -> f64 {
        self.cumulant[state * self.action_count + action]
    }

    pub fn terminal(&self, state: StateId) -> f64 {
        self.terminal[state]
    }

    pub fn terminal_values(&self) -> &[f64] {
        &self.terminal
    }

    /// Policy-averaged cumulant c̄(s) under the given option.
    pub fn mean_cumulant(&self, state: StateId, option: &TabularOption) -> f64 {
        option.policy[state].iter().map(|&(a, p)| p * self.cumulant(state, a)).sum()
    }
}

/// How a forecast's values should be clamped and reported.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ValueKind {
    /// Values live in [0,1].
    Probability,
    /// Non-negative step counts.
    Count,
    /// No clamping.
    Raw,
}

impl ValueKind {
    pub fn label(self) -> &'static str {
        match self {
            ValueKind::Probability => "probability",
            ValueKind::Count => "count",
            ValueKind::Raw => "raw",
        }
    }

    pub fn clamp(self, v: f64) -> f64 {
        match self {
            ValueKind::Probability => v.clamp(0.0, 1.0),
            ValueKind::Count => v.max(0.0),
            ValueKind::Raw => v,
        }
    }
}

/// A forecast definition: the option to follow plus the outcome to
/// accumulate. The unit of knowledge everything else is built from.
#[derive(Clone, Debug)]
pub struct ForecastDef {
    pub id: ForecastId,
    pub name: String,
    pub option: Arc<TabularOption>,
    pub outcome: Arc<OutcomeTable>,
    pub value_kind: ValueKind,
}

impl ForecastDef {
    pub fn mode(&self) -> TerminationMode {
        self.option.termination_mode
    }
}

/// Exact per-state forecast values from the DP solver, together with the
/// residual actually achieved and the termination mode used.
#[derive(Clone, Debug)]
pub struct ValueTable {
    pub forecast_id: ForecastId,
    pub values: Vec<f64>,
    pub residual: f64,
    pub mode: TerminationMode,
}

impl ValueTable {
    pub fn value(&self, state: StateId) -> f64 {
        self.values[state]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transition_rows_must_sum_to_one() {
        let bad = FiniteMdp::new(1, 1, vec![vec![(0, 0.5)]], vec![()]);
        assert!(matches!(bad, Err(GvfError::Config(_))));
        let good = FiniteMdp::new(1, 1, vec![vec![(0, 1.0)]], vec![()]);
        assert!(good.is_ok());
    }

    #[test]
    fn transition_state_bounds_checked() {
        let bad = FiniteMdp::new(1, 1, vec![vec![(3, 1.0)]], vec![()]);
        assert!(matches!(bad, Err(GvfError::Config(_))));
    }

    #[test]
    fn strict_beta_rejects_zero() {
        let opt = TabularOption::fixed_action(0, 2, vec![0.0, 1.0], TerminationMode::PostStep);
        assert!(opt.validate(false).is_ok());
        assert!(opt.validate(true).is_err());
    }

    #[test]
    fn mean_cumulant_averages_over_policy() {
        let mut opt = TabularOption::uniform(2, 1, vec![0.5], TerminationMode::PostStep);
        opt.policy[0] = vec![(0, 0.25), (1, 0.75)];
        let out = OutcomeTable::new(vec![4.0, 8.0], vec![0.0], 2);
        assert!((out.mean_cumulant(0, &opt) - 7.0).abs() < 1e-12);
    }
}
