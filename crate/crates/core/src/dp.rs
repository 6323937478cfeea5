//! Exact forecast evaluation: fixed-point solving of the one-step
//! recursion, and the truncated absorbing-chain series it is derived
//! from. The two routes are independent and tested against each other.

use crate::mdp::{
    FiniteMdp, ForecastDef, GvfError, StateId, TabularOption, TerminationMode, ValueTable,
};

#[derive(Clone, Copy, Debug)]
pub struct SolveParams {
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for SolveParams {
    fn default() -> Self {
        Self { tol: 1e-10, max_sweeps: 20_000 }
    }
}

/// Solves the forecast recursion in the mode declared by its option.
pub fn solve_forecast_dp<A>(
    mdp: &FiniteMdp<A>,
    forecast: &ForecastDef,
    params: SolveParams,
) -> Result<ValueTable, GvfError> {
    solve_forecast_dp_mode(mdp, forecast, forecast.mode(), params)
}

/// Solves the forecast recursion in an explicit termination mode.
///
/// * pre_step:  f(s) = β(s)z(s) + (1-β(s))(c̄(s) + E[f(s')])
/// * post_step: f(s) = E[c(s,a) + β(s')z(s') + (1-β(s'))f(s')]
/// * one_step:  f(s) = E[c(s,a) + z(s')]
pub fn solve_forecast_dp_mode<A>(
    mdp: &FiniteMdp<A>,
    forecast: &ForecastDef,
    mode: TerminationMode,
    params: SolveParams,
) -> Result<ValueTable, GvfError> {
    if params.tol <= 0.0 {
        return Err(GvfError::Argument(format!("tol must be positive, got {}", params.tol)));
    }
    let option = &*forecast.option;
    let outcome = &*forecast.outcome;
    let n = mdp.state_count();
    check_policy_defined(mdp, option, mode)?;
    if mode != TerminationMode::OneStep {
        if let Some(cycle) = divergent_cycle(mdp, forecast, mode) {
            return Err(GvfError::DivergentForecast { forecast: forecast.id, cycle });
        }
    }

    match mode {
        TerminationMode::OneStep => {
            let mut values = vec![0.0; n];
            for (s, v) in values.iter_mut().enumerate() {
                *v = expectation(mdp, option, s, |a, s2| {
                    outcome.cumulant(s, a) + outcome.terminal(s2)
                });
            }
            Ok(ValueTable { forecast_id: forecast.id, values, residual: 0.0, mode })
        }
        TerminationMode::PreStep | TerminationMode::PostStep => {
            // Only states in the option's domain (the closure of the
            // initiation set under its policy) are swept; values
            // elsewhere stay 0.
            let domain = option_domain(mdp, option, mode);
            let mut values = vec![0.0; n];
            let mut next = vec![0.0; n];
            let mut residual = f64::INFINITY;
            for _sweep in 0..params.max_sweeps {
                sweep(mdp, forecast, mode, &domain, &values, &mut next);
                residual = values
                    .iter()
                    .zip(&next)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0f64, f64::max);
                std::mem::swap(&mut values, &mut next);
                if residual <= params.tol {
                    return Ok(ValueTable { forecast_id: forecast.id, values, residual, mode });
                }
            }
            Err(GvfError::NonConvergence {
                forecast: forecast.id,
                sweeps: params.max_sweeps,
                residual,
            })
        }
    }
}

fn sweep<A>(
    mdp: &FiniteMdp<A>,
    forecast: &ForecastDef,
    mode: TerminationMode,
    domain: &[bool],
    values: &[f64],
    out: &mut [f64],
) {
    let option = &*forecast.option;
    let outcome = &*forecast.outcome;
    match mode {
        TerminationMode::PreStep => {
            for (s, o) in out.iter_mut().enumerate() {
                if !domain[s] {
                    *o = 0.0;
                    continue;
                }
                let beta = option.termination[s];
                let z = outcome.terminal(s);
                if beta >= 1.0 {
                    *o = z;
                    continue;
                }
                let cont = outcome.mean_cumulant(s, option)
                    + expectation(mdp, option, s, |_a, s2| values[s2]);
                *o = beta * z + (1.0 - beta) * cont;
            }
        }
        TerminationMode::PostStep => {
            for (s, o) in out.iter_mut().enumerate() {
                if !domain[s] {
                    *o = 0.0;
                    continue;
                }
                *o = expectation(mdp, option, s, |a, s2| {
                    let beta = option.termination[s2];
                    outcome.cumulant(s, a)
                        + beta * outcome.terminal(s2)
                        + (1.0 - beta) * values[s2]
                });
            }
        }
        TerminationMode::OneStep => unreachable!(),
    }
}

/// The closure of the initiation set under the option's policy: states
/// the option can start in or pass through. In pre_step mode a β = 1
/// state never acts; in post_step mode even a β = 1 start takes one
/// action before the first assessment.
fn option_domain<A>(
    mdp: &FiniteMdp<A>,
    option: &TabularOption,
    mode: TerminationMode,
) -> Vec<bool> {
    let n = mdp.state_count();
    let mut reached = vec![false; n];
    let mut is_start = vec![false; n];
    let mut stack: Vec<StateId> = Vec::new();
    for s in 0..n {
        if option.initiation[s] {
            reached[s] = true;
            is_start[s] = true;
            stack.push(s);
        }
    }
    while let Some(s) = stack.pop() {
        let can_act = match mode {
            TerminationMode::PreStep => option.termination[s] < 1.0,
            TerminationMode::PostStep => is_start[s] || option.termination[s] < 1.0,
            TerminationMode::OneStep => is_start[s],
        };
        if !can_act || option.policy[s].is_empty() {
            continue;
        }
        for &(a, pa) in &option.policy[s] {
            if pa == 0.0 {
                continue;
            }
            for &(s2, p) in mdp.successors(s, a) {
                if p > 0.0 && !reached[s2] {
                    reached[s2] = true;
                    stack.push(s2);
                }
            }
        }
    }
    reached
}

fn expectation<A>(
    mdp: &FiniteMdp<A>,
    option: &TabularOption,
    state: StateId,
    mut f: impl FnMut(usize, StateId) -> f64,
) -> f64 {
    let mut acc = 0.0;
    for &(a, pa) in &option.policy[state] {
        if pa == 0.0 {
            continue;
        }
        for &(s2, p) in mdp.successors(state, a) {
            if p > 0.0 {
                acc += pa * p * f(a, s2);
            }
        }
    }
    acc
}

fn check_policy_defined<A>(
    mdp: &FiniteMdp<A>,
    option: &TabularOption,
    mode: TerminationMode,
) -> Result<(), GvfError> {
    let domain = option_domain(mdp, option, mode);
    for s in 0..mdp.state_count() {
        if !domain[s] {
            continue;
        }
        let undefined = option.policy[s].is_empty();
        let needs_policy = match mode {
            TerminationMode::PreStep => option.termination[s] < 1.0,
            TerminationMode::PostStep | TerminationMode::OneStep => true,
        };
        if undefined && needs_policy {
            return Err(GvfError::Config(format!(
                "{} mode requires the option policy at state {s}, but it is undefined",
                mode.label()
            )));
        }
    }
    Ok(())
}

/// Looks for a cycle on which termination can never fire (β = 0 at every
/// assessment point) while a nonzero cumulant accumulates — the
/// configuration whose value is a divergent sum. Only states reachable
/// from the initiation set under the option's policy are considered.
/// Returns the offending strongly connected component, sorted.
fn divergent_cycle<A>(
    mdp: &FiniteMdp<A>,
    forecast: &ForecastDef,
    mode: TerminationMode,
) -> Option<Vec<StateId>> {
    let option = &*forecast.option;
    let outcome = &*forecast.outcome;
    let n = mdp.state_count();
    let reached = option_domain(mdp, option, mode);

    // Zero-termination subgraph restricted to reached states.
    let in_zero: Vec<bool> =
        (0..n).map(|s| reached[s] && option.termination[s] == 0.0).collect();
    let mut adj: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for s in 0..n {
        if !in_zero[s] || option.policy[s].is_empty() {
            continue;
        }
        for &(a, pa) in &option.policy[s] {
            if pa == 0.0 {
                continue;
            }
            for &(s2, p) in mdp.successors(s, a) {
                if p > 0.0 && in_zero[s2] {
                    adj[s].push(s2);
                }
            }
        }
    }

    // Peel nodes with no outgoing edges inside the subgraph until only
    // cycle-supporting nodes remain (Kahn on out-degree).
    let mut out_deg: Vec<usize> = adj.iter().map(Vec::len).collect();
    let mut rev: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for s in 0..n {
        for &s2 in &adj[s] {
            rev[s2].push(s);
        }
    }
    let mut queue: Vec<StateId> = (0..n).filter(|&s| in_zero[s] && out_deg[s] == 0).collect();
    let mut alive = in_zero.clone();
    while let Some(s) = queue.pop() {
        alive[s] = false;
        for &p in &rev[s] {
            if alive[p] {
                out_deg[p] -= 1;
                if out_deg[p] == 0 {
                    queue.push(p);
                }
            }
        }
    }

    // Any surviving node lies on or feeds a cycle of zero-β states. The
    // sum diverges if a nonzero cumulant is collectable on that cycle.
    let mut cycle: Vec<StateId> = Vec::new();
    for s in 0..n {
        if !alive[s] {
            continue;
        }
        let has_cumulant = match mode {
            TerminationMode::PreStep => outcome.mean_cumulant(s, option).abs() > 0.0,
            _ => option.policy[s]
                .iter()
                .any(|&(a, pa)| pa > 0.0 && outcome.cumulant(s, a).abs() > 0.0),
        };
        if has_cumulant {
            cycle.push(s);
        }
    }
    if cycle.is_empty() {
        None
    } else {
        cycle.sort_unstable();
        Some(cycle)
    }
}

/// Truncated series evaluation of the pre_step recursion: builds the
/// option's absorbing Markov chain explicitly (one extra absorbing state
/// that every state reaches with probability β) and accumulates
/// Σ_{k=0}^{K} Σ_{s'} P_k(s,s')·[β(s')z(s') + (1-β(s'))c̄(s')].
pub fn evaluate_forecast_series<A>(
    mdp: &FiniteMdp<A>,
    forecast: &ForecastDef,
    k_max: i64,
) -> Result<ValueTable, GvfError> {
    if k_max < 0 {
        return Err(GvfError::Argument(format!("K must be non-negative, got {k_max}")));
    }
    if forecast.mode() != TerminationMode::PreStep {
        return Err(GvfError::Config(format!(
            "series evaluation is defined for pre_step options, got {}",
            forecast.mode().label()
        )));
    }
    let option = &*forecast.option;
    let outcome = &*forecast.outcome;
    let n = mdp.state_count();
    check_policy_defined(mdp, option, TerminationMode::PreStep)?;

    // Absorbing chain over n+1 states; index n is the absorbing state
    // with c = z = 0 and a self-loop.
    let absorb = n;
    let mut rows: Vec<Vec<(StateId, f64)>> = Vec::with_capacity(n + 1);
    for s in 0..n {
        let beta = option.termination[s];
        let mut row: Vec<(StateId, f64)> = Vec::new();
        if beta > 0.0 {
            row.push((absorb, beta));
        }
        if beta < 1.0 {
            for &(a, pa) in &option.policy[s] {
                if pa == 0.0 {
                    continue;
                }
                for &(s2, p) in mdp.successors(s, a) {
                    if p > 0.0 {
                        row.push((s2, (1.0 - beta) * pa * p));
                    }
                }
            }
        }
        rows.push(row);
    }
    rows.push(vec![(absorb, 1.0)]);

    // Per-visit payoff g(s') = β(s')z(s') + (1-β(s'))c̄(s'), zero at the
    // absorbing state.
    let mut payoff = vec![0.0; n + 1];
    for (s, g) in payoff.iter_mut().enumerate().take(n) {
        let beta = option.termination[s];
        let c_bar = if beta < 1.0 { outcome.mean_cumulant(s, option) } else { 0.0 };
        *g = beta * outcome.terminal(s) + (1.0 - beta) * c_bar;
    }

    let mut total = payoff.clone(); // k = 0 term: P_0 = I
    let mut y = payoff;
    let mut y_next = vec![0.0; n + 1];
    for _k in 1..=k_max {
        for (s, out) in y_next.iter_mut().enumerate() {
            *out = rows[s].iter().map(|&(s2, p)| p * y[s2]).sum();
        }
        std::mem::swap(&mut y, &mut y_next);
        for (t, v) in total.iter_mut().zip(&y) {
            *t += v;
        }
    }
    total.truncate(n);
    Ok(ValueTable {
        forecast_id: forecast.id,
        values: total,
        residual: f64::NAN,
        mode: TerminationMode::PreStep,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mdp::{OutcomeTable, ValueKind};
    use std::sync::Arc;

    /// Single action, deterministic ring over n states.
    fn ring_mdp(n: usize) -> FiniteMdp {
        let rows = (0..n).map(|s| vec![((s + 1) % n, 1.0)]).collect();
        FiniteMdp::new(n, 1, rows, vec![(); n]).unwrap()
    }

    fn forecast_on(
        mdp: &FiniteMdp,
        beta: Vec<f64>,
        cumulant: f64,
        terminal: Vec<f64>,
        mode: TerminationMode,
    ) -> ForecastDef {
        let n = mdp.state_count();
        let option = TabularOption::fixed_action(0, n, beta, mode);
        let outcome = OutcomeTable::new(vec![cumulant; n], terminal, 1);
        ForecastDef {
            id: 1,
            name: "test".into(),
            option: Arc::new(option),
            outcome: Arc::new(outcome),
            value_kind: ValueKind::Raw,
        }
    }

    #[test]
    fn beta_one_pre_step_returns_terminal() {
        let mdp = ring_mdp(4);
        let z = vec![3.0, -1.0, 0.5, 7.0];
        let f = forecast_on(&mdp, vec![1.0; 4], 5.0, z.clone(), TerminationMode::PreStep);
        let table = solve_forecast_dp(&mdp, &f, SolveParams::default()).unwrap();
        for s in 0..4 {
            assert!((table.value(s) - z[s]).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_beta_post_step_hits_the_geometric_cap() {
        // β ≡ 0.1, c ≡ 1, z ≡ 0, goal never satisfied: Σ(1-0.1)^t = 10.
        let mdp = ring_mdp(5);
        let f = forecast_on(&mdp, vec![0.1; 5], 1.0, vec![0.0; 5], TerminationMode::PostStep);
        let table = solve_forecast_dp(&mdp, &f, SolveParams { tol: 1e-12, max_sweeps: 50_000 })
            .unwrap();
        for s in 0..5 {
            assert!((table.value(s) - 10.0).abs() < 1e-9, "got {}", table.value(s));
        }
    }

    #[test]
    fn constant_beta_pre_step_is_one_step_shorter() {
        // Literal pre-step recursion fixed point: (1-β)/β = 9.
        let mdp = ring_mdp(5);
        let f = forecast_on(&mdp, vec![0.1; 5], 1.0, vec![0.0; 5], TerminationMode::PreStep);
        let table = solve_forecast_dp(&mdp, &f, SolveParams { tol: 1e-12, max_sweeps: 50_000 })
            .unwrap();
        for s in 0..5 {
            assert!((table.value(s) - 9.0).abs() < 1e-9, "got {}", table.value(s));
        }
    }

    #[test]
    fn one_step_adds_cumulant_and_next_terminal() {
        let mdp = ring_mdp(3);
        let f = forecast_on(
            &mdp,
            vec![1.0; 3],
            2.0,
            vec![10.0, 20.0, 30.0],
            TerminationMode::OneStep,
        );
        let table = solve_forecast_dp(&mdp, &f, SolveParams::default()).unwrap();
        assert_eq!(table.values, vec![22.0, 32.0, 12.0]);
        assert_eq!(table.residual, 0.0);
    }

    #[test]
    fn zero_beta_cycle_with_cumulant_is_reported_divergent() {
        let mdp = ring_mdp(3);
        let f = forecast_on(&mdp, vec![0.0; 3], 1.0, vec![0.0; 3], TerminationMode::PostStep);
        match solve_forecast_dp(&mdp, &f, SolveParams::default()) {
            Err(GvfError::DivergentForecast { cycle, .. }) => {
                assert_eq!(cycle, vec![0, 1, 2]);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
    }

    #[test]
    fn zero_beta_cycle_without_cumulant_is_fine() {
        let mdp = ring_mdp(3);
        let f = forecast_on(&mdp, vec![0.0; 3], 0.0, vec![0.0; 3], TerminationMode::PostStep);
        let table = solve_forecast_dp(&mdp, &f, SolveParams::default()).unwrap();
        assert!(table.values.iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn unreachable_zero_beta_cycle_is_ignored() {
        // State 2 self-loops with β = 0 and c = 1 but is not initiable and
        // not reachable from states 0/1, which terminate immediately.
        let rows = vec![vec![(1, 1.0)], vec![(0, 1.0)], vec![(2, 1.0)]];
        let mdp = FiniteMdp::new(3, 1, rows, vec![(); 3]).unwrap();
        let mut option =
            TabularOption::fixed_action(0, 3, vec![1.0, 1.0, 0.0], TerminationMode::PostStep);
        option.initiation = vec![true, true, false];
        let outcome = OutcomeTable::new(vec![1.0; 3], vec![0.0; 3], 1);
        let f = ForecastDef {
            id: 9,
            name: "unreachable".into(),
            option: Arc::new(option),
            outcome: Arc::new(outcome),
            value_kind: ValueKind::Raw,
        };
        assert!(solve_forecast_dp(&mdp, &f, SolveParams::default()).is_ok());
    }

    #[test]
    fn residual_bound_holds_after_one_extra_sweep() {
        let mdp = ring_mdp(6);
        let z = vec![0.0, 1.0, 0.0, 2.0, 0.0, 0.5];
        let beta = vec![0.3, 0.9, 0.15, 1.0, 0.4, 0.6];
        let f = forecast_on(&mdp, beta, 0.7, z, TerminationMode::PostStep);
        let tol = 1e-9;
        let table = solve_forecast_dp(&mdp, &f, SolveParams { tol, max_sweeps: 100_000 }).unwrap();
        let mut extra = vec![0.0; 6];
        sweep(&mdp, &f, TerminationMode::PostStep, &[true; 6], &table.values, &mut extra);
        let bellman = table
            .values
            .iter()
            .zip(&extra)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        assert!(bellman <= tol, "bellman residual {bellman}");
    }

    #[test]
    fn series_k0_is_the_immediate_payoff() {
        let mdp = ring_mdp(4);
        let beta = vec![0.25, 0.5, 0.0, 1.0];
        let z = vec![4.0, 2.0, 8.0, 6.0];
        let f = forecast_on(&mdp, beta.clone(), 3.0, z.clone(), TerminationMode::PreStep);
        let table = evaluate_forecast_series(&mdp, &f, 0).unwrap();
        for s in 0..4 {
            let expect = beta[s] * z[s] + (1.0 - beta[s]) * 3.0;
            assert!((table.value(s) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn series_with_beta_one_equals_terminal_for_any_k() {
        let mdp = ring_mdp(3);
        let z = vec![1.0, -2.0, 5.0];
        let f = forecast_on(&mdp, vec![1.0; 3], 9.0, z.clone(), TerminationMode::PreStep);
        for k in [0, 1, 10, 100] {
            let table = evaluate_forecast_series(&mdp, &f, k).unwrap();
            for s in 0..3 {
                assert!((table.value(s) - z[s]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn series_rejects_negative_k_and_wrong_mode() {
        let mdp = ring_mdp(3);
        let f = forecast_on(&mdp, vec![0.5; 3], 1.0, vec![0.0; 3], TerminationMode::PreStep);
        assert!(matches!(evaluate_forecast_series(&mdp, &f, -1), Err(GvfError::Argument(_))));
        let g = forecast_on(&mdp, vec![0.5; 3], 1.0, vec![0.0; 3], TerminationMode::PostStep);
        assert!(matches!(evaluate_forecast_series(&mdp, &g, 10), Err(GvfError::Config(_))));
    }

    #[test]
    fn series_matches_fixed_point_with_geometric_tail() {
        let mdp = ring_mdp(8);
        let beta: Vec<f64> = (0..8).map(|i| 0.1 + 0.1 * (i as f64 % 4.0)).collect();
        let z: Vec<f64> = (0..8).map(|i| (i as f64) * 0.3 - 1.0).collect();
        let f = forecast_on(&mdp, beta, 0.4, z, TerminationMode::PreStep);
        let dp = solve_forecast_dp(&mdp, &f, SolveParams { tol: 1e-13, max_sweeps: 100_000 })
            .unwrap();
        let series = evaluate_forecast_series(&mdp, &f, 500).unwrap();
        for s in 0..8 {
            assert!(
                (dp.value(s) - series.value(s)).abs() < 1e-6,
                "state {s}: dp {} vs series {}",
                dp.value(s),
                series.value(s)
            );
        }
    }
}
