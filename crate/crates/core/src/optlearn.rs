//! Option-policy learning: exact policy iteration on the
//! Bellman-optimality variant of the forecast recursion, and a tabular
//! Q-learning route verified against it.

use crate::mdp::{ActionId, FiniteMdp, GvfError, OutcomeTable, StateId, TabularOption, TerminationMode};
use rand::Rng;

/// Finite stand-in for a prohibitively negative cumulant on masked
/// actions. Any sufficiently large negative number works; this default is
/// far below every achievable outcome in the curriculum.
pub const DEFAULT_MASK_PENALTY: f64 = -1e6;

/// A learned deterministic policy with its value function.
#[derive(Clone, Debug)]
pub struct LearnedPolicy {
    pub policy: Vec<ActionId>,
    pub values: Vec<f64>,
}

impl LearnedPolicy {
    /// Wraps the policy as an option with the given termination mapping.
    pub fn into_option(self, termination: Vec<f64>, mode: TerminationMode) -> TabularOption {
        TabularOption {
            policy: self.policy.iter().map(|&a| vec![(a, 1.0)]).collect(),
            initiation: vec![true; self.policy.len()],
            termination,
            termination_mode: mode,
        }
    }
}

/// Effective cumulant: masked actions are replaced by the penalty.
fn effective_cumulant(
    outcome: &OutcomeTable,
    admissible: &[bool],
    penalty: f64,
    s: StateId,
    a: ActionId,
) -> f64 {
    if admissible[a] {
        outcome.cumulant(s, a)
    } else {
        penalty
    }
}

fn q_value<A>(
    mdp: &FiniteMdp<A>,
    outcome: &OutcomeTable,
    termination: &[f64],
    admissible: &[bool],
    penalty: f64,
    values: &[f64],
    s: StateId,
    a: ActionId,
) -> f64 {
    let c = effective_cumulant(outcome, admissible, penalty, s, a);
    let mut acc = c;
    for &(s2, p) in mdp.successors(s, a) {
        let beta = termination[s2];
        acc += p * (beta * outcome.terminal(s2) + (1.0 - beta) * values[s2]);
    }
    acc
}

/// Greedy action with ties broken by the lowest action index.
fn greedy_action<A>(
    mdp: &FiniteMdp<A>,
    outcome: &OutcomeTable,
    termination: &[f64],
    admissible: &[bool],
    penalty: f64,
    values: &[f64],
    s: StateId,
) -> (ActionId, f64) {
    let mut best_a = 0;
    let mut best_q = f64::NEG_INFINITY;
    for a in 0..mdp.action_count() {
        let q = q_value(mdp, outcome, termination, admissible, penalty, values, s, a);
        if q > best_q {
            best_q = q;
            best_a = a;
        }
    }
    (best_a, best_q)
}

/// Policy iteration for the option objective: maximize the expected sum
/// of cumulants plus the terminal value under post-step termination.
/// Returns a deterministic policy (ties broken by lowest action index).
pub fn learn_option_policy_dp<A>(
    mdp: &FiniteMdp<A>,
    objective: &OutcomeTable,
    termination: &[f64],
    admissible: &[bool],
    penalty: f64,
) -> Result<LearnedPolicy, GvfError> {
    let n = mdp.state_count();
    let m = mdp.action_count();
    if admissible.len() != m {
        return Err(GvfError::Argument(format!(
            "admissible mask has {} entries for {m} actions",
            admissible.len()
        )));
    }
    if !admissible.iter().any(|&x| x) {
        return Err(GvfError::DeadState { state: 0 });
    }
    let first_admissible = admissible.iter().position(|&x| x).unwrap();

    let mut policy = vec![first_admissible; n];
    let mut values = vec![0.0; n];
    let eval_tol = 1e-12;
    let eval_sweeps = 100_000;
    let max_outer = 1_000;

    for _ in 0..max_outer {
        // Policy evaluation.
        let mut residual = f64::INFINITY;
        for _ in 0..eval_sweeps {
            residual = 0.0;
            for s in 0..n {
                let v = q_value(
                    mdp, objective, termination, admissible, penalty, &values, s, policy[s],
                );
                residual = residual.max((v - values[s]).abs());
                values[s] = v;
            }
            if residual <= eval_tol {
                break;
            }
        }
        if residual > 1e-6 {
            return Err(GvfError::NonConvergence {
                forecast: 0,
                sweeps: eval_sweeps,
                residual,
            });
        }
        // Policy improvement.
        let mut stable = true;
        for s in 0..n {
            let (a, _) =
                greedy_action(mdp, objective, termination, admissible, penalty, &values, s);
            if a != policy[s] {
                policy[s] = a;
                stable = false;
            }
        }
        if stable {
            // Final values under the stable policy.
            for s in 0..n {
                values[s] = q_value(
                    mdp, objective, termination, admissible, penalty, &values, s, policy[s],
                );
            }
            return Ok(LearnedPolicy { policy, values });
        }
    }
    Err(GvfError::NonConvergence { forecast: 0, sweeps: max_outer, residual: f64::NAN })
}

/// How the Q-learning step size evolves.
#[derive(Clone, Copy, Debug)]
pub enum QAlpha {
    Fixed(f64),
    /// 1 / visit-count per (state, action) pair.
    VisitDecay,
}

#[derive(Clone, Copy, Debug)]
pub struct QSchedule {
    pub episodes: usize,
    pub alpha: QAlpha,
    pub epsilon_start: f64,
    pub epsilon_end: f64,
    pub max_episode_len: usize,
}

impl Default for QSchedule {
    fn default() -> Self {
        Self {
            episodes: 150_000,
            alpha: QAlpha::VisitDecay,
            epsilon_start: 1.0,
            epsilon_end: 0.1,
            max_episode_len: 200,
        }
    }
}

/// Tabular Q-learning on the termination-augmented process: episodes end
/// when the β draw at the arrived state fires, collecting the terminal
/// value. Greedy extraction breaks ties by lowest action index.
pub fn learn_option_policy_q<A, R: Rng>(
    mdp: &FiniteMdp<A>,
    objective: &OutcomeTable,
    termination: &[f64],
    admissible: &[bool],
    penalty: f64,
    schedule: QSchedule,
    rng: &mut R,
) -> Result<LearnedPolicy, GvfError> {
    if schedule.episodes == 0 {
        return Err(GvfError::Argument("schedule with zero episodes".into()));
    }
    let n = mdp.state_count();
    let m = mdp.action_count();
    if !admissible.iter().any(|&x| x) {
        return Err(GvfError::DeadState { state: 0 });
    }
    let mut q = vec![0.0f64; n * m];
    let mut visits = vec![0u32; n * m];

    // Greedy over admissible actions only: an unvisited masked action
    // would otherwise tie at zero and steal the tie-break.
    let greedy = |q: &[f64], s: StateId| -> ActionId {
        let mut best_a = usize::MAX;
        let mut best = f64::NEG_INFINITY;
        for a in 0..m {
            if !admissible[a] {
                continue;
            }
            let v = q[s * m + a];
            if v > best {
                best = v;
                best_a = a;
            }
        }
        best_a
    };
    let admissible_actions: Vec<ActionId> =
        (0..m).filter(|&a| admissible[a]).collect();

    for ep in 0..schedule.episodes {
        let frac = if schedule.episodes > 1 {
            ep as f64 / (schedule.episodes - 1) as f64
        } else {
            1.0
        };
        let eps = schedule.epsilon_start + frac * (schedule.epsilon_end - schedule.epsilon_start);
        let mut s = rng.gen_range(0..n);
        for _ in 0..schedule.max_episode_len {
            let a = if eps > 0.0 && rng.gen::<f64>() < eps {
                admissible_actions[rng.gen_range(0..admissible_actions.len())]
            } else {
                greedy(&q, s)
            };
            let s2 = {
                let row = mdp.successors(s, a);
                let mut u = rng.gen::<f64>();
                let mut pick = row.last().unwrap().0;
                for &(t, p) in row {
                    if u < p {
                        pick = t;
                        break;
                    }
                    u -= p;
                }
                pick
            };
            let r = effective_cumulant(objective, admissible, penalty, s, a);
            let beta = termination[s2];
            let terminated = beta >= 1.0 || (beta > 0.0 && rng.gen::<f64>() < beta);
            let target = if terminated {
                r + objective.terminal(s2)
            } else {
                r + q[s2 * m + greedy(&q, s2)]
            };
            let idx = s * m + a;
            visits[idx] += 1;
            let alpha = match schedule.alpha {
                QAlpha::Fixed(x) => x,
                QAlpha::VisitDecay => 1.0 / visits[idx] as f64,
            };
            q[idx] += alpha * (target - q[idx]);
            if terminated {
                break;
            }
            s = s2;
        }
    }

    let policy: Vec<ActionId> = (0..n).map(|s| greedy(&q, s)).collect();
    let values: Vec<f64> = (0..n).map(|s| q[s * m + policy[s]]).collect();
    Ok(LearnedPolicy { policy, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::RngStreams;

    /// Line world: states 0..n-1, action 0 moves left, action 1 moves
    /// right, both clamped at the ends.
    fn line_mdp(n: usize) -> FiniteMdp {
        let mut rows = Vec::new();
        for s in 0..n {
            rows.push(vec![(s.saturating_sub(1), 1.0)]);
            rows.push(vec![((s + 1).min(n - 1), 1.0)]);
        }
        FiniteMdp::new(n, 2, rows, vec![(); n]).unwrap()
    }

    #[test]
    fn dp_policy_walks_to_the_goal() {
        // Terminal value 1 at state 4, β = 1 there, floor 0.1 elsewhere.
        let n = 5;
        let mdp = line_mdp(n);
        let mut beta = vec![0.1; n];
        beta[4] = 1.0;
        let mut terminal = vec![0.0; n];
        terminal[4] = 1.0;
        let objective = OutcomeTable::terminal_only(terminal, 2);
        let learned =
            learn_option_policy_dp(&mdp, &objective, &beta, &[true, true], -1e6).unwrap();
        // Everyone should move right, toward the goal.
        assert_eq!(learned.policy, vec![1; n]);
        // Value at state 3 (one step away): survive nothing, terminate on
        // arrival: 0.9^0 * 1 = 1. At state 2: one β = 0.1 assessment.
        assert!((learned.values[3] - 1.0).abs() < 1e-9);
        assert!((learned.values[2] - 0.9).abs() < 1e-9);
    }

    #[test]
    fn ties_break_to_the_lowest_action_index() {
        // Symmetric world: both ends are goals, middle state equidistant.
        let n = 5;
        let mdp = line_mdp(n);
        let mut beta = vec![0.1; n];
        beta[0] = 1.0;
        beta[4] = 1.0;
        let mut terminal = vec![0.0; n];
        terminal[0] = 1.0;
        terminal[4] = 1.0;
        let objective = OutcomeTable::terminal_only(terminal, 2);
        let learned =
            learn_option_policy_dp(&mdp, &objective, &beta, &[true, true], -1e6).unwrap();
        // State 2 is a perfect tie: lowest index (0 = left) must win.
        assert_eq!(learned.policy[2], 0);
        assert_eq!(learned.policy[1], 0);
        assert_eq!(learned.policy[3], 1);
    }

    #[test]
    fn masked_actions_are_never_selected() {
        let n = 5;
        let mdp = line_mdp(n);
        let mut beta = vec![0.1; n];
        beta[0] = 1.0;
        let mut terminal = vec![0.0; n];
        terminal[0] = 1.0;
        let objective = OutcomeTable::terminal_only(terminal, 2);
        // Mask "left": the only admissible action walks away from the goal.
        let learned =
            learn_option_policy_dp(&mdp, &objective, &beta, &[false, true], -1e6).unwrap();
        assert!(learned.policy.iter().all(|&a| a == 1));
    }

    #[test]
    fn all_masked_is_a_dead_state() {
        let mdp = line_mdp(3);
        let objective = OutcomeTable::step_counter(3, 2);
        let err = learn_option_policy_dp(&mdp, &objective, &[0.1; 3], &[false, false], -1e6);
        assert!(matches!(err, Err(GvfError::DeadState { .. })));
    }

    #[test]
    fn q_learning_matches_dp_on_the_line() {
        let n = 9;
        let mdp = line_mdp(n);
        let mut beta = vec![0.1; n];
        beta[n - 1] = 1.0;
        let mut terminal = vec![0.0; n];
        terminal[n - 1] = 1.0;
        let objective = OutcomeTable::terminal_only(terminal, 2);
        let dp = learn_option_policy_dp(&mdp, &objective, &beta, &[true, true], -1e6).unwrap();
        let mut rng = RngStreams::new(11).labeled("q-line");
        let schedule = QSchedule { episodes: 30_000, ..QSchedule::default() };
        let q = learn_option_policy_q(
            &mdp, &objective, &beta, &[true, true], -1e6, schedule, &mut rng,
        )
        .unwrap();
        let agree = dp
            .policy
            .iter()
            .zip(&q.policy)
            .filter(|(a, b)| a == b)
            .count();
        assert!(agree as f64 / n as f64 >= 0.95, "only {agree}/{n} agree");
    }

    #[test]
    fn zero_episodes_is_an_argument_error() {
        let mdp = line_mdp(3);
        let objective = OutcomeTable::step_counter(3, 2);
        let mut rng = RngStreams::new(0).labeled("q");
        let schedule = QSchedule { episodes: 0, ..QSchedule::default() };
        assert!(matches!(
            learn_option_policy_q(&mdp, &objective, &[0.1; 3], &[true, true], -1e6, schedule, &mut rng),
            Err(GvfError::Argument(_))
        ));
    }

    #[test]
    fn greedy_from_silent_zero_table_is_all_lowest_index() {
        // ε = 0 with a zero-initialized table and a zero objective: no
        // learning signal ever propagates past the all-equal ties.
        const N: usize = 6;
        let n = N;
        let mdp = line_mdp(n);
        let objective = OutcomeTable::terminal_only(vec![0.0; n], 2);
        let mut rng = RngStreams::new(3).labeled("q-flat");
        let schedule = QSchedule {
            episodes: 500,
            epsilon_start: 0.0,
            epsilon_end: 0.0,
            ..QSchedule::default()
        };
        let q = learn_option_policy_q(
            &mdp, &objective, &[0.1; N], &[true, true], -1e6, schedule, &mut rng,
        )
        .unwrap();
        assert_eq!(q.policy, vec![0; n]);
    }
}
