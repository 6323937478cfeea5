//! Aliases: pure feedforward functions of forecast estimates and
//! lower-numbered aliases, with named thresholds. Boolean expressions
//! emit exactly 0 or 1.

use super::registry::{CurriculumError, Registry};
use crate::mdp::ForecastId;
use std::collections::BTreeMap;

pub type AliasId = u32;

#[derive(Clone, Debug)]
pub enum AliasExpr {
    Forecast(ForecastId),
    Alias(AliasId),
    Theta(&'static str),
    Const(f64),
    Add(Box<AliasExpr>, Box<AliasExpr>),
    Mul(Box<AliasExpr>, Box<AliasExpr>),
    /// 1 when left > right.
    Gt(Box<AliasExpr>, Box<AliasExpr>),
    /// 1 when left < right.
    Lt(Box<AliasExpr>, Box<AliasExpr>),
    /// 1 when |left − right| ≤ tol.
    AbsDiffLe(Box<AliasExpr>, Box<AliasExpr>, Box<AliasExpr>),
    And(Vec<AliasExpr>),
    Or(Vec<AliasExpr>),
}

impl AliasExpr {
    pub fn forecast(id: ForecastId) -> AliasExpr {
        AliasExpr::Forecast(id)
    }

    pub fn gt(self, rhs: AliasExpr) -> AliasExpr {
        AliasExpr::Gt(Box::new(self), Box::new(rhs))
    }

    pub fn lt(self, rhs: AliasExpr) -> AliasExpr {
        AliasExpr::Lt(Box::new(self), Box::new(rhs))
    }

    pub fn add(self, rhs: AliasExpr) -> AliasExpr {
        AliasExpr::Add(Box::new(self), Box::new(rhs))
    }

    pub fn mul(self, rhs: AliasExpr) -> AliasExpr {
        AliasExpr::Mul(Box::new(self), Box::new(rhs))
    }

    /// Forecast ids this expression reads, directly.
    pub fn forecast_refs(&self, out: &mut Vec<ForecastId>) {
        match self {
            AliasExpr::Forecast(id) => out.push(*id),
            AliasExpr::Alias(_) | AliasExpr::Theta(_) | AliasExpr::Const(_) => {}
            AliasExpr::Add(a, b) | AliasExpr::Mul(a, b) | AliasExpr::Gt(a, b) | AliasExpr::Lt(a, b) => {
                a.forecast_refs(out);
                b.forecast_refs(out);
            }
            AliasExpr::AbsDiffLe(a, b, c) => {
                a.forecast_refs(out);
                b.forecast_refs(out);
                c.forecast_refs(out);
            }
            AliasExpr::And(xs) | AliasExpr::Or(xs) => {
                for x in xs {
                    x.forecast_refs(out);
                }
            }
        }
    }

    /// Alias ids this expression reads, directly.
    pub fn alias_refs(&self, out: &mut Vec<AliasId>) {
        match self {
            AliasExpr::Alias(id) => out.push(*id),
            AliasExpr::Forecast(_) | AliasExpr::Theta(_) | AliasExpr::Const(_) => {}
            AliasExpr::Add(a, b) | AliasExpr::Mul(a, b) | AliasExpr::Gt(a, b) | AliasExpr::Lt(a, b) => {
                a.alias_refs(out);
                b.alias_refs(out);
            }
            AliasExpr::AbsDiffLe(a, b, c) => {
                a.alias_refs(out);
                b.alias_refs(out);
                c.alias_refs(out);
            }
            AliasExpr::And(xs) | AliasExpr::Or(xs) => {
                for x in xs {
                    x.alias_refs(out);
                }
            }
        }
    }
}

fn eval(
    registry: &Registry,
    expr: &AliasExpr,
    estimates: &dyn Fn(ForecastId) -> Option<f64>,
    memo: &mut BTreeMap<AliasId, f64>,
) -> Result<f64, CurriculumError> {
    Ok(match expr {
        AliasExpr::Forecast(id) => estimates(*id)
            .ok_or_else(|| CurriculumError::Config(format!("missing estimate for forecast {id}")))?,
        AliasExpr::Alias(id) => {
            if let Some(&v) = memo.get(id) {
                v
            } else {
                let spec = registry
                    .aliases
                    .get(id)
                    .ok_or(CurriculumError::UnknownAlias(*id))?;
                let v = eval(registry, &spec.expr, estimates, memo)?;
                memo.insert(*id, v);
                v
            }
        }
        AliasExpr::Theta(key) => registry.config.theta(key)?,
        AliasExpr::Const(v) => *v,
        AliasExpr::Add(a, b) => {
            eval(registry, a, estimates, memo)? + eval(registry, b, estimates, memo)?
        }
        AliasExpr::Mul(a, b) => {
            eval(registry, a, estimates, memo)? * eval(registry, b, estimates, memo)?
        }
        AliasExpr::Gt(a, b) => {
            bool_val(eval(registry, a, estimates, memo)? > eval(registry, b, estimates, memo)?)
        }
        AliasExpr::Lt(a, b) => {
            bool_val(eval(registry, a, estimates, memo)? < eval(registry, b, estimates, memo)?)
        }
        AliasExpr::AbsDiffLe(a, b, tol) => bool_val(
            (eval(registry, a, estimates, memo)? - eval(registry, b, estimates, memo)?).abs()
                <= eval(registry, tol, estimates, memo)?,
        ),
        AliasExpr::And(xs) => {
            let mut all = true;
            for x in xs {
                all &= eval(registry, x, estimates, memo)? != 0.0;
            }
            bool_val(all)
        }
        AliasExpr::Or(xs) => {
            let mut any = false;
            for x in xs {
                any |= eval(registry, x, estimates, memo)? != 0.0;
            }
            bool_val(any)
        }
    })
}

fn bool_val(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

/// Evaluates an alias from forecast estimates, recursively computing any
/// lower aliases it references.
///
/// The estimate lookup returning `None` for a referenced forecast is an
/// error: composition never proceeds past missing inputs.
pub fn evaluate_alias(
    registry: &Registry,
    alias_id: AliasId,
    estimates: &dyn Fn(ForecastId) -> Option<f64>,
) -> Result<f64, CurriculumError> {
    let spec = registry
        .aliases
        .get(&alias_id)
        .ok_or(CurriculumError::UnknownAlias(alias_id))?;
    let mut memo = BTreeMap::new();
    eval(registry, &spec.expr, estimates, &mut memo)
}
