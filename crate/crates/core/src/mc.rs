//! Monte-Carlo evaluation: sampled option rollouts whose mean is the
//! forecast's ideal value. Used as an independent check on the DP route.

use crate::mdp::{FiniteMdp, ForecastDef, GvfError, StateId, TabularOption, TerminationMode};
use rand::Rng;

pub const DEFAULT_STEP_CAP: usize = 1_000_000;

/// Bernoulli draw with p = termination(state).
pub fn sample_termination<R: Rng>(option: &TabularOption, state: StateId, rng: &mut R) -> bool {
    let beta = option.termination[state];
    if beta >= 1.0 {
        true
    } else if beta <= 0.0 {
        false
    } else {
        rng.gen::<f64>() < beta
    }
}

fn sample_weighted<R: Rng>(rng: &mut R, items: &[(usize, f64)]) -> usize {
    debug_assert!(!items.is_empty());
    if items.len() == 1 {
        return items[0].0;
    }
    let mut u = rng.gen::<f64>();
    for &(id, p) in items {
        if u < p {
            return id;
        }
        u -= p;
    }
    items.last().unwrap().0
}

/// One sampled return of the forecast's option from `start`, in the
/// option's termination mode. Cumulants accrue on non-terminating steps;
/// the terminal value is added exactly once, at termination.
pub fn mc_return<A, R: Rng>(
    mdp: &FiniteMdp<A>,
    start: StateId,
    forecast: &ForecastDef,
    rng: &mut R,
    step_cap: usize,
) -> Result<f64, GvfError> {
    let option = &*forecast.option;
    let outcome = &*forecast.outcome;
    if !option.initiation[start] {
        return Err(GvfError::NotInitiable { state: start });
    }
    let mut s = start;
    let mut total = 0.0;
    match option.termination_mode {
        TerminationMode::OneStep => {
            let a = sample_weighted(rng, &option.policy[s]);
            let s2 = sample_weighted(rng, mdp.successors(s, a));
            Ok(outcome.cumulant(s, a) + outcome.terminal(s2))
        }
        TerminationMode::PreStep => {
            for _ in 0..step_cap {
                if sample_termination(option, s, rng) {
                    return Ok(total + outcome.terminal(s));
                }
                let a = sample_weighted(rng, &option.policy[s]);
                total += outcome.cumulant(s, a);
                s = sample_weighted(rng, mdp.successors(s, a));
            }
            Err(GvfError::RolloutOverrun { cap: step_cap })
        }
        TerminationMode::PostStep => {
            for _ in 0..step_cap {
                let a = sample_weighted(rng, &option.policy[s]);
                total += outcome.cumulant(s, a);
                let s2 = sample_weighted(rng, mdp.successors(s, a));
                if sample_termination(option, s2, rng) {
                    return Ok(total + outcome.terminal(s2));
                }
                s = s2;
            }
            Err(GvfError::RolloutOverrun { cap: step_cap })
        }
    }
}

/// Mean and standard error of `n` sampled returns.
pub fn mc_estimate<A, R: Rng>(
    mdp: &FiniteMdp<A>,
    start: StateId,
    forecast: &ForecastDef,
    rng: &mut R,
    n: usize,
    step_cap: usize,
) -> Result<(f64, f64), GvfError> {
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..n {
        let x = mc_return(mdp, start, forecast, rng, step_cap)?;
        sum += x;
        sum_sq += x * x;
    }
    let mean = sum / n as f64;
    let var = (sum_sq / n as f64 - mean * mean).max(0.0);
    Ok((mean, (var / n as f64).sqrt()))
}
