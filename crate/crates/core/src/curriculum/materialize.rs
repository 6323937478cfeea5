//! Materialization: instantiates the symbolic registry on a concrete
//! world, layer by layer — learned option policies, per-state option
//! tables, forecast definitions and their exact DP value tables, and
//! per-state alias values. The result is the oracle everything else is
//! verified against.

use super::alias::{evaluate_alias, AliasId};
use super::config::{CurriculumConfig, OptionTraining};
use super::registry::{
    BetaSpec, ConditionSpec, CumulantSpec, CurriculumError, EntityRef, OptionId, PolicySpec,
    Registry, TerminalSpec,
};
use crate::dp::{solve_forecast_dp, SolveParams};
use crate::mdp::{ForecastDef, ForecastId, OutcomeTable, TabularOption, ValueTable};
use crate::optlearn::{learn_option_policy_dp, learn_option_policy_q, LearnedPolicy};
use crate::rng::RngStreams;
use crate::world::{as_finite_mdp, Action, PoseMdp, RobotParams, WorldSpec, DEFAULT_POSE_CAP};
use std::collections::BTreeMap;
use std::sync::Arc;

/// The registry instantiated on a world: exact option tables, forecast
/// definitions, DP oracle values and alias tables, through some layer.
pub struct Materialized {
    pub world: WorldSpec,
    pub robot_params: RobotParams,
    pub pose_mdp: PoseMdp,
    pub options: BTreeMap<OptionId, Arc<TabularOption>>,
    pub forecasts: BTreeMap<ForecastId, ForecastDef>,
    pub tables: BTreeMap<ForecastId, ValueTable>,
    pub alias_values: BTreeMap<AliasId, Vec<f64>>,
    /// Exact optimal policies for learned options (the verification
    /// reference, regardless of how the operative policy was trained).
    pub dp_policies: BTreeMap<OptionId, LearnedPolicy>,
    pub through_layer: u32,
}

impl Materialized {
    /// The enumeration index of the world's start pose.
    pub fn start_state(&self) -> usize {
        self.pose_mdp
            .state_of(self.world.start)
            .expect("start pose is in its own closure")
    }

    pub fn option(&self, id: OptionId) -> Result<&Arc<TabularOption>, CurriculumError> {
        self.options.get(&id).ok_or(CurriculumError::UnknownOption(id))
    }

    pub fn forecast(&self, id: ForecastId) -> Result<&ForecastDef, CurriculumError> {
        self.forecasts.get(&id).ok_or(CurriculumError::UnknownForecast(id))
    }

    pub fn table(&self, id: ForecastId) -> Result<&ValueTable, CurriculumError> {
        self.tables.get(&id).ok_or(CurriculumError::UnknownForecast(id))
    }

    /// Ideal value of a forecast at a state.
    pub fn value(&self, id: ForecastId, state: usize) -> Option<f64> {
        self.tables.get(&id).map(|t| t.values[state])
    }

    /// Per-state value of an alias.
    pub fn alias_value(&self, id: AliasId, state: usize) -> Option<f64> {
        self.alias_values.get(&id).map(|v| v[state])
    }
}

struct Builder<'a> {
    registry: &'a Registry,
    config: &'a CurriculumConfig,
    pose_mdp: &'a PoseMdp,
    streams: &'a RngStreams,
    options: BTreeMap<OptionId, Arc<TabularOption>>,
    forecasts: BTreeMap<ForecastId, ForecastDef>,
    tables: BTreeMap<ForecastId, ValueTable>,
    alias_values: BTreeMap<AliasId, Vec<f64>>,
    dp_policies: BTreeMap<OptionId, LearnedPolicy>,
}

impl<'a> Builder<'a> {
    fn value(&self, id: ForecastId, state: usize) -> Result<f64, CurriculumError> {
        self.tables
            .get(&id)
            .map(|t| t.values[state])
            .ok_or(CurriculumError::UnknownForecast(id))
    }

    fn eval_condition(&self, cond: &ConditionSpec, state: usize) -> Result<bool, CurriculumError> {
        Ok(match cond {
            ConditionSpec::Always => true,
            ConditionSpec::Touch => self.pose_mdp.touch(state),
            ConditionSpec::ForecastAbove(id, key) => {
                self.value(*id, state)? > self.config.theta(key)?
            }
            ConditionSpec::ForecastBand { forecast, lo, hi } => {
                let v = self.value(*forecast, state)?;
                self.config.theta(lo)? < v && v < self.config.theta(hi)?
            }
            ConditionSpec::AliasTrue(id) => {
                *self
                    .alias_values
                    .get(id)
                    .ok_or(CurriculumError::UnknownAlias(*id))?
                    .get(state)
                    .unwrap_or(&0.0)
                    != 0.0
            }
            ConditionSpec::Not(inner) => !self.eval_condition(inner, state)?,
            ConditionSpec::Or(xs) => {
                let mut any = false;
                for x in xs {
                    any |= self.eval_condition(x, state)?;
                }
                any
            }
        })
    }

    fn eval_terminal(&self, term: &TerminalSpec, state: usize) -> Result<f64, CurriculumError> {
        Ok(match term {
            TerminalSpec::Zero => 0.0,
            TerminalSpec::Touch => {
                if self.pose_mdp.touch(state) {
                    1.0
                } else {
                    0.0
                }
            }
            TerminalSpec::Forecast(id) => self.value(*id, state)?,
            TerminalSpec::ForecastAbove(id, key) => {
                if self.value(*id, state)? > self.config.theta(key)? {
                    1.0
                } else {
                    0.0
                }
            }
            TerminalSpec::Alias(id) => *self
                .alias_values
                .get(id)
                .ok_or(CurriculumError::UnknownAlias(*id))?
                .get(state)
                .unwrap_or(&0.0),
        })
    }

    fn beta_table(
        &self,
        beta: &BetaSpec,
        floor: f64,
        n: usize,
    ) -> Result<Vec<f64>, CurriculumError> {
        Ok(match beta {
            BetaSpec::One => vec![1.0; n],
            BetaSpec::ConditionalFloor(cond) => {
                let mut out = Vec::with_capacity(n);
                for s in 0..n {
                    out.push(if self.eval_condition(cond, s)? { 1.0 } else { floor });
                }
                out
            }
            BetaSpec::ForecastValue(id) => {
                let mut out = Vec::with_capacity(n);
                for s in 0..n {
                    out.push(self.value(*id, s)?.clamp(0.0, 1.0).max(floor));
                }
                out
            }
        })
    }

    fn cumulant_table(&self, c: CumulantSpec, n: usize) -> Vec<f64> {
        match c {
            CumulantSpec::Zero => vec![0.0; n * Action::COUNT],
            CumulantSpec::One => vec![1.0; n * Action::COUNT],
        }
    }

    fn terminal_table(&self, term: &TerminalSpec, n: usize) -> Result<Vec<f64>, CurriculumError> {
        let mut out = Vec::with_capacity(n);
        for s in 0..n {
            out.push(self.eval_terminal(term, s)?);
        }
        Ok(out)
    }

    fn build_option(&mut self, id: OptionId) -> Result<(), CurriculumError> {
        let spec = self.registry.option(id)?;
        let n = self.pose_mdp.state_count();
        let floor = self.config.beta_floor(spec.abbrev);
        let termination = self.beta_table(&spec.beta, floor, n)?;

        let policy: Vec<Vec<(usize, f64)>> = match &spec.policy {
            PolicySpec::Primitive(a) | PolicySpec::Fixed(a) => {
                vec![vec![(a.index(), 1.0)]; n]
            }
            PolicySpec::UniformRandom => {
                let p = 1.0 / Action::COUNT as f64;
                vec![(0..Action::COUNT).map(|a| (a, p)).collect(); n]
            }
            PolicySpec::Learned(obj) => {
                let outcome = OutcomeTable::new(
                    self.cumulant_table(obj.cumulant, n),
                    self.terminal_table(&obj.terminal, n)?,
                    Action::COUNT,
                );
                let dp = learn_option_policy_dp(
                    &self.pose_mdp.mdp,
                    &outcome,
                    &termination,
                    &obj.admissible,
                    self.config.mask_penalty,
                )?;
                let operative = match self.config.options_training {
                    OptionTraining::Dp => dp.policy.clone(),
                    OptionTraining::Q => {
                        let mut rng =
                            self.streams.labeled(&format!("option/{}/q", spec.abbrev));
                        learn_option_policy_q(
                            &self.pose_mdp.mdp,
                            &outcome,
                            &termination,
                            &obj.admissible,
                            self.config.mask_penalty,
                            self.config.q_schedule,
                            &mut rng,
                        )?
                        .policy
                    }
                };
                self.dp_policies.insert(id, dp);
                operative.into_iter().map(|a| vec![(a, 1.0)]).collect()
            }
        };

        let mut initiation = Vec::with_capacity(n);
        for s in 0..n {
            initiation.push(self.eval_condition(&spec.initiation, s)?);
        }
        let option =
            TabularOption { policy, initiation, termination, termination_mode: spec.mode };
        option.validate(false).map_err(CurriculumError::Gvf)?;
        self.options.insert(id, Arc::new(option));
        Ok(())
    }

    fn build_forecast(&mut self, id: ForecastId) -> Result<(), CurriculumError> {
        let spec = self.registry.forecast(id)?;
        let n = self.pose_mdp.state_count();
        let option = self
            .options
            .get(&spec.option)
            .ok_or(CurriculumError::UnknownOption(spec.option))?
            .clone();
        let outcome = OutcomeTable::new(
            self.cumulant_table(spec.cumulant, n),
            self.terminal_table(&spec.terminal, n)?,
            Action::COUNT,
        );
        let def = ForecastDef {
            id,
            name: spec.name.clone(),
            option,
            outcome: Arc::new(outcome),
            value_kind: spec.kind,
        };
        let table = solve_forecast_dp(
            &self.pose_mdp.mdp,
            &def,
            SolveParams { tol: self.config.solver_tol, max_sweeps: self.config.solver_max_sweeps },
        )?;
        self.forecasts.insert(id, def);
        self.tables.insert(id, table);
        Ok(())
    }

    fn build_alias(&mut self, id: AliasId) -> Result<(), CurriculumError> {
        let n = self.pose_mdp.state_count();
        let mut values = Vec::with_capacity(n);
        for s in 0..n {
            let estimates = |f: ForecastId| self.tables.get(&f).map(|t| t.values[s]);
            values.push(evaluate_alias(self.registry, id, &estimates)?);
        }
        self.alias_values.insert(id, values);
        Ok(())
    }
}

/// Materializes the registry on the world through `through_layer`,
/// learning option policies (exactly, and online when configured) and
/// solving every forecast's DP oracle along the way.
pub fn materialize(
    registry: &Registry,
    world: WorldSpec,
    robot_params: RobotParams,
    streams: &RngStreams,
    through_layer: u32,
) -> Result<Materialized, CurriculumError> {
    let pose_mdp = as_finite_mdp(&world, &robot_params, DEFAULT_POSE_CAP)?;
    let mut builder = Builder {
        registry,
        config: &registry.config,
        pose_mdp: &pose_mdp,
        streams,
        options: BTreeMap::new(),
        forecasts: BTreeMap::new(),
        tables: BTreeMap::new(),
        alias_values: BTreeMap::new(),
        dp_policies: BTreeMap::new(),
    };
    for layer in &registry.layers {
        if layer.layer > through_layer {
            break;
        }
        for entity in &layer.entities {
            match *entity {
                EntityRef::Option(id) => builder.build_option(id)?,
                EntityRef::Forecast(id) => builder.build_forecast(id)?,
                EntityRef::Alias(id) => builder.build_alias(id)?,
            }
        }
    }
    let Builder { options, forecasts, tables, alias_values, dp_policies, .. } = builder;
    Ok(Materialized {
        options,
        forecasts,
        tables,
        alias_values,
        dp_policies,
        world,
        robot_params,
        pose_mdp,
        through_layer,
    })
}
