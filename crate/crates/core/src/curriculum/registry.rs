//! The curriculum registry: the standard layered set of forecasts,
//! options and aliases, held symbolically so it can be materialized on
//! any world.

use super::alias::{AliasExpr, AliasId};
use super::config::CurriculumConfig;
use crate::features::FeatureError;
use crate::mdp::{ForecastId, GvfError, TerminationMode, ValueKind};
use crate::world::{Action, WorldError};
use std::collections::{BTreeMap, BTreeSet};
use thiserror::Error;

pub type OptionId = u32;

#[derive(Debug, Error)]
pub enum CurriculumError {
    #[error("curriculum configuration: {0}")]
    Config(String),
    #[error("missing threshold {0}")]
    MissingThreshold(String),
    #[error("unknown forecast id {0}")]
    UnknownForecast(ForecastId),
    #[error("unknown option id {0}")]
    UnknownOption(OptionId),
    #[error("unknown alias id {0}")]
    UnknownAlias(AliasId),
    #[error("registry build failed:\n{}", .0.join("\n"))]
    Build(Vec<String>),
    #[error("layer {layer} prerequisite gate failed for: {failing:?}")]
    Gate { layer: u32, failing: Vec<String> },
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Gvf(#[from] GvfError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
}

/// Well-known entity ids, matching the collected index numbering:
/// forecasts 1–47, options 1–18, aliases 1–13.
pub mod ids {
    use super::{AliasId, ForecastId, OptionId};

    pub const T: ForecastId = 1;
    pub const TL: ForecastId = 2;
    pub const TR: ForecastId = 3;
    pub const TA: ForecastId = 15;
    pub const DTA: ForecastId = 16;
    pub const NTA: ForecastId = 17;
    pub const WRF: ForecastId = 29;
    pub const WLF: ForecastId = 30;
    pub const WRB: ForecastId = 31;
    pub const WLB: ForecastId = 32;
    pub const WDA: ForecastId = 33;
    pub const WDB: ForecastId = 34;
    pub const DW: ForecastId = 35;
    pub const DR: ForecastId = 47;

    /// TOUCHMAP slot i ∈ 0..=12; slots 0 and 12 are identified with T.
    pub fn tm(i: usize) -> ForecastId {
        debug_assert!(i <= 12);
        if i % 12 == 0 {
            T
        } else {
            3 + i as ForecastId
        }
    }

    /// DISTANCE-TO-TA MAP slot; slots 0/12 are DTA itself.
    pub fn dtam(i: usize) -> ForecastId {
        debug_assert!(i <= 12);
        if i % 12 == 0 {
            DTA
        } else {
            17 + i as ForecastId
        }
    }

    /// DISTANCE-TO-WALL MAP slot; slots 0/12 are DW itself.
    pub fn dwm(i: usize) -> ForecastId {
        debug_assert!(i <= 12);
        if i % 12 == 0 {
            DW
        } else {
            35 + i as ForecastId
        }
    }

    pub const O_RF: OptionId = 1;
    pub const O_RB: OptionId = 2;
    pub const O_ROTL: OptionId = 3;
    pub const O_ROTR: OptionId = 4;
    pub const O_EF: OptionId = 5;
    pub const O_RTT: OptionId = 6;
    pub const O_RFTA: OptionId = 7;
    pub const O_RFTT: OptionId = 8;
    pub const O_RFWR: OptionId = 9;
    pub const O_RFWL: OptionId = 10;
    pub const O_RBWR: OptionId = 11;
    pub const O_RBWL: OptionId = 12;
    pub const O_MRW: OptionId = 13;
    pub const O_MCWP: OptionId = 14;
    pub const O_RFW: OptionId = 15;
    pub const O_GMH: OptionId = 16;
    pub const O_GCR: OptionId = 17;
    pub const O_GFR: OptionId = 18;

    pub const A_WLR: AliasId = 1;
    pub const A_WA: AliasId = 2;
    pub const A_LRFS: AliasId = 3;
    pub const A_FBFS: AliasId = 4;
    pub const A_LRC: AliasId = 5;
    pub const A_FBC: AliasId = 6;
    pub const A_R: AliasId = 7;
    pub const A_CR: AliasId = 8;
    pub const A_MH: AliasId = 9;
    pub const A_RA: AliasId = 10;
    pub const A_SR: AliasId = 11;
    pub const A_LR: AliasId = 12;
    pub const A_D: AliasId = 13;
}

/// Boolean per-state condition used in initiation sets and termination
/// clauses, evaluated against ideal forecast values and alias tables.
#[derive(Clone, Debug)]
pub enum ConditionSpec {
    Always,
    /// The touch sensor would fire (T's ideal value is 1).
    Touch,
    ForecastAbove(ForecastId, &'static str),
    /// θ_lo < forecast < θ_hi.
    ForecastBand { forecast: ForecastId, lo: &'static str, hi: &'static str },
    AliasTrue(AliasId),
    Not(Box<ConditionSpec>),
    Or(Vec<ConditionSpec>),
}

impl ConditionSpec {
    fn forecast_refs(&self, out: &mut Vec<ForecastId>) {
        match self {
            ConditionSpec::Always | ConditionSpec::Touch | ConditionSpec::AliasTrue(_) => {}
            ConditionSpec::ForecastAbove(id, _) => out.push(*id),
            ConditionSpec::ForecastBand { forecast, .. } => out.push(*forecast),
            ConditionSpec::Not(inner) => inner.forecast_refs(out),
            ConditionSpec::Or(xs) => xs.iter().for_each(|x| x.forecast_refs(out)),
        }
    }

    fn alias_refs(&self, out: &mut Vec<AliasId>) {
        match self {
            ConditionSpec::AliasTrue(id) => out.push(*id),
            ConditionSpec::Not(inner) => inner.alias_refs(out),
            ConditionSpec::Or(xs) => xs.iter().for_each(|x| x.alias_refs(out)),
            _ => {}
        }
    }
}

/// Termination probability as a function of state.
#[derive(Clone, Debug)]
pub enum BetaSpec {
    /// Always terminate (primitive one-step options).
    One,
    /// 1 where the condition holds, else the option's configured floor.
    ConditionalFloor(ConditionSpec),
    /// The referenced forecast's value clamped to [0,1], floored.
    ForecastValue(ForecastId),
}

/// Per-step cumulant of a forecast.
#[derive(Clone, Copy, Debug)]
pub enum CumulantSpec {
    Zero,
    One,
}

/// Terminal value of a forecast or option objective.
#[derive(Clone, Copy, Debug)]
pub enum TerminalSpec {
    Zero,
    /// The raw touch sensor (1 when contact fires).
    Touch,
    /// The referenced forecast's value (ideal in oracle evaluation, the
    /// current estimate during online training).
    Forecast(ForecastId),
    /// 1 when the referenced forecast exceeds the threshold.
    ForecastAbove(ForecastId, &'static str),
    /// The alias's value.
    Alias(AliasId),
}

impl TerminalSpec {
    fn forecast_refs(&self, out: &mut Vec<ForecastId>) {
        match self {
            TerminalSpec::Forecast(id) | TerminalSpec::ForecastAbove(id, _) => out.push(*id),
            _ => {}
        }
    }

    fn alias_refs(&self, out: &mut Vec<AliasId>) {
        if let TerminalSpec::Alias(id) = self {
            out.push(*id);
        }
    }
}

/// Objective for a learned option policy: maximize the expected sum of
/// cumulants plus terminal value; inadmissible actions carry the mask
/// penalty.
#[derive(Clone, Debug)]
pub struct ObjectiveSpec {
    pub cumulant: CumulantSpec,
    pub terminal: TerminalSpec,
    pub admissible: [bool; Action::COUNT],
}

#[derive(Clone, Debug)]
pub enum PolicySpec {
    /// The primitive action itself (options 1–5).
    Primitive(Action),
    /// A single fixed action under a non-trivial termination clause.
    Fixed(Action),
    /// Uniform over all five primitives.
    UniformRandom,
    /// Learned to maximize the objective.
    Learned(ObjectiveSpec),
}

#[derive(Clone, Debug)]
pub struct OptionSpec {
    pub id: OptionId,
    pub name: &'static str,
    pub abbrev: &'static str,
    pub layer: u32,
    pub policy: PolicySpec,
    pub initiation: ConditionSpec,
    pub beta: BetaSpec,
    pub mode: TerminationMode,
}

#[derive(Clone, Debug)]
pub struct ForecastSpec {
    pub id: ForecastId,
    pub name: String,
    pub abbrev: String,
    pub layer: u32,
    pub option: OptionId,
    pub cumulant: CumulantSpec,
    pub terminal: TerminalSpec,
    pub kind: ValueKind,
}

#[derive(Clone, Debug)]
pub struct AliasSpec {
    pub id: AliasId,
    pub name: &'static str,
    pub abbrev: &'static str,
    pub layer: u32,
    pub expr: AliasExpr,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EntityRef {
    Forecast(ForecastId),
    Option(OptionId),
    Alias(AliasId),
}

/// One curriculum layer: the entities it introduces, in construction
/// order (every reference resolves to an entity constructed earlier).
#[derive(Clone, Debug)]
pub struct LayerSpec {
    pub layer: u32,
    pub entities: Vec<EntityRef>,
}

/// A clock-ring family of map forecasts. Slot 0 (and 12) is the base
/// forecast itself; the identification is by reference, not by copies.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RingFamily {
    TouchMap,
    DtaMap,
    DwMap,
}

impl RingFamily {
    pub fn slot(self, i: usize) -> ForecastId {
        match self {
            RingFamily::TouchMap => ids::tm(i),
            RingFamily::DtaMap => ids::dtam(i),
            RingFamily::DwMap => ids::dwm(i),
        }
    }

    pub fn parse(s: &str) -> Option<RingFamily> {
        match s {
            "tm" => Some(RingFamily::TouchMap),
            "dtam" => Some(RingFamily::DtaMap),
            "dwm" => Some(RingFamily::DwMap),
            _ => None,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Registry {
    pub forecasts: BTreeMap<ForecastId, ForecastSpec>,
    pub options: BTreeMap<OptionId, OptionSpec>,
    pub aliases: BTreeMap<AliasId, AliasSpec>,
    pub layers: Vec<LayerSpec>,
    pub config: CurriculumConfig,
}

impl Registry {
    pub fn forecast(&self, id: ForecastId) -> Result<&ForecastSpec, CurriculumError> {
        self.forecasts.get(&id).ok_or(CurriculumError::UnknownForecast(id))
    }

    pub fn option(&self, id: OptionId) -> Result<&OptionSpec, CurriculumError> {
        self.options.get(&id).ok_or(CurriculumError::UnknownOption(id))
    }

    pub fn max_layer(&self) -> u32 {
        self.layers.last().map(|l| l.layer).unwrap_or(0)
    }

    pub fn forecasts_in_layer(&self, layer: u32) -> Vec<ForecastId> {
        self.layers
            .iter()
            .filter(|l| l.layer == layer)
            .flat_map(|l| &l.entities)
            .filter_map(|e| match e {
                EntityRef::Forecast(id) => Some(*id),
                _ => None,
            })
            .collect()
    }

    pub fn options_in_layer(&self, layer: u32) -> Vec<OptionId> {
        self.layers
            .iter()
            .filter(|l| l.layer == layer)
            .flat_map(|l| &l.entities)
            .filter_map(|e| match e {
                EntityRef::Option(id) => Some(*id),
                _ => None,
            })
            .collect()
    }

    /// Learned options, in id order.
    pub fn learned_options(&self) -> Vec<OptionId> {
        self.options
            .values()
            .filter(|o| matches!(o.policy, PolicySpec::Learned(_)))
            .map(|o| o.id)
            .collect()
    }

    /// Checks the dependency rule: every referenced entity is introduced
    /// at a strictly earlier construction position. Reports all
    /// violations, naming the offenders.
    pub fn validate(&self) -> Result<(), CurriculumError> {
        let mut problems = Vec::new();
        let mut seen_forecasts: BTreeSet<ForecastId> = BTreeSet::new();
        let mut seen_options: BTreeSet<OptionId> = BTreeSet::new();
        let mut seen_aliases: BTreeSet<AliasId> = BTreeSet::new();

        let check_refs = |who: String,
                          f_refs: &[ForecastId],
                          o_refs: &[OptionId],
                          a_refs: &[AliasId],
                          seen_f: &BTreeSet<ForecastId>,
                          seen_o: &BTreeSet<OptionId>,
                          seen_a: &BTreeSet<AliasId>,
                          problems: &mut Vec<String>| {
            for id in f_refs {
                if !seen_f.contains(id) {
                    problems.push(format!("{who} references forecast {id} before it is defined"));
                }
            }
            for id in o_refs {
                if !seen_o.contains(id) {
                    problems.push(format!("{who} references option {id} before it is defined"));
                }
            }
            for id in a_refs {
                if !seen_a.contains(id) {
                    problems.push(format!("{who} references alias {id} before it is defined"));
                }
            }
        };

        for layer in &self.layers {
            for entity in &layer.entities {
                match entity {
                    EntityRef::Option(id) => {
                        let Some(spec) = self.options.get(id) else {
                            problems.push(format!("layer {} lists missing option {id}", layer.layer));
                            continue;
                        };
                        let mut f_refs = Vec::new();
                        let mut a_refs = Vec::new();
                        spec.initiation.forecast_refs(&mut f_refs);
                        spec.initiation.alias_refs(&mut a_refs);
                        match &spec.beta {
                            BetaSpec::One => {}
                            BetaSpec::ConditionalFloor(c) => {
                                c.forecast_refs(&mut f_refs);
                                c.alias_refs(&mut a_refs);
                            }
                            BetaSpec::ForecastValue(f) => f_refs.push(*f),
                        }
                        if let PolicySpec::Learned(obj) = &spec.policy {
                            obj.terminal.forecast_refs(&mut f_refs);
                            obj.terminal.alias_refs(&mut a_refs);
                        }
                        check_refs(
                            format!("option {} ({})", spec.id, spec.abbrev),
                            &f_refs,
                            &[],
                            &a_refs,
                            &seen_forecasts,
                            &seen_options,
                            &seen_aliases,
                            &mut problems,
                        );
                        seen_options.insert(*id);
                    }
                    EntityRef::Forecast(id) => {
                        let Some(spec) = self.forecasts.get(id) else {
                            problems.push(format!("layer {} lists missing forecast {id}", layer.layer));
                            continue;
                        };
                        let mut f_refs = Vec::new();
                        let mut a_refs = Vec::new();
                        spec.terminal.forecast_refs(&mut f_refs);
                        spec.terminal.alias_refs(&mut a_refs);
                        check_refs(
                            format!("forecast {} ({})", spec.id, spec.abbrev),
                            &f_refs,
                            &[spec.option],
                            &a_refs,
                            &seen_forecasts,
                            &seen_options,
                            &seen_aliases,
                            &mut problems,
                        );
                        seen_forecasts.insert(*id);
                    }
                    EntityRef::Alias(id) => {
                        let Some(spec) = self.aliases.get(id) else {
                            problems.push(format!("layer {} lists missing alias {id}", layer.layer));
                            continue;
                        };
                        let mut f_refs = Vec::new();
                        let mut a_refs = Vec::new();
                        spec.expr.forecast_refs(&mut f_refs);
                        spec.expr.alias_refs(&mut a_refs);
                        check_refs(
                            format!("alias {} ({})", spec.id, spec.abbrev),
                            &f_refs,
                            &[],
                            &a_refs,
                            &seen_forecasts,
                            &seen_options,
                            &seen_aliases,
                            &mut problems,
                        );
                        seen_aliases.insert(*id);
                    }
                }
            }
        }

        // Every threshold named by an entity must exist in the config.
        for spec in self.options.values() {
            let mut keys = Vec::new();
            collect_condition_thetas(&spec.initiation, &mut keys);
            if let BetaSpec::ConditionalFloor(c) = &spec.beta {
                collect_condition_thetas(c, &mut keys);
            }
            if let PolicySpec::Learned(obj) = &spec.policy {
                if let TerminalSpec::ForecastAbove(_, k) = obj.terminal {
                    keys.push(k);
                }
            }
            for key in keys {
                if self.config.theta(key).is_err() {
                    problems.push(format!(
                        "option {} ({}) needs missing threshold {key}",
                        spec.id, spec.abbrev
                    ));
                }
            }
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(CurriculumError::Build(problems))
        }
    }
}

fn collect_condition_thetas(cond: &ConditionSpec, out: &mut Vec<&'static str>) {
    match cond {
        ConditionSpec::ForecastAbove(_, k) => out.push(k),
        ConditionSpec::ForecastBand { lo, hi, .. } => {
            out.push(lo);
            out.push(hi);
        }
        ConditionSpec::Not(inner) => collect_condition_thetas(inner, out),
        ConditionSpec::Or(xs) => xs.iter().for_each(|x| collect_condition_thetas(x, out)),
        _ => {}
    }
}

/// Builds the standard 11-layer curriculum: forecasts 1–47, options
/// 1–18, aliases 1–13, with the configured thresholds and termination
/// floors.
pub fn build_standard_curriculum(config: CurriculumConfig) -> Result<Registry, CurriculumError> {
    use ids::*;
    let mut forecasts: BTreeMap<ForecastId, ForecastSpec> = BTreeMap::new();
    let mut options: BTreeMap<OptionId, OptionSpec> = BTreeMap::new();
    let mut aliases: BTreeMap<AliasId, AliasSpec> = BTreeMap::new();

    // Layer 0: the five primitive options, termination probability
    // always 1 (one action to completion).
    let primitives: [(OptionId, &str, &str, Action); 5] = [
        (O_RF, "roll forward", "rf", Action::RollForward),
        (O_RB, "roll backward", "rb", Action::RollBackward),
        (O_ROTL, "rotate left", "rotl", Action::RotateLeft),
        (O_ROTR, "rotate right", "rotr", Action::RotateRight),
        (O_EF, "extend finger", "ef", Action::ExtendFinger),
    ];
    for (id, name, abbrev, action) in primitives {
        options.insert(
            id,
            OptionSpec {
                id,
                name,
                abbrev,
                layer: 0,
                policy: PolicySpec::Primitive(action),
                initiation: ConditionSpec::Always,
                beta: BetaSpec::One,
                mode: TerminationMode::OneStep,
            },
        );
    }

    let mode = config.default_mode;

    // Option 6, rtt: rotate to touch. Maximize with rolls masked out.
    options.insert(
        O_RTT,
        OptionSpec {
            id: O_RTT,
            name: "rotate to touch",
            abbrev: "rtt",
            layer: 4,
            policy: PolicySpec::Learned(ObjectiveSpec {
                cumulant: CumulantSpec::Zero,
                terminal: TerminalSpec::Forecast(T),
                admissible: [false, false, true, true, true],
            }),
            initiation: ConditionSpec::Always,
            beta: BetaSpec::ConditionalFloor(ConditionSpec::Touch),
            mode,
        },
    );

    // Options 7–8: roll forward toward touch-adjacent.
    options.insert(
        O_RFTA,
        OptionSpec {
            id: O_RFTA,
            name: "roll forward toward touch adjacent",
            abbrev: "rfta",
            layer: 5,
            policy: PolicySpec::Fixed(Action::RollForward),
            initiation: ConditionSpec::Always,
            beta: BetaSpec::ForecastValue(TA),
            mode,
        },
    );
    options.insert(
        O_RFTT,
        OptionSpec {
            id: O_RFTT,
            name: "roll forward until touch threshold",
            abbrev: "rftt",
            layer: 5,
            policy: PolicySpec::Fixed(Action::RollForward),
            initiation: ConditionSpec::Always,
            beta: BetaSpec::ConditionalFloor(ConditionSpec::ForecastAbove(TA, "theta.rftt.0")),
            mode,
        },
    );

    // Options 9–12: wall-following band options.
    let wall_follow: [(OptionId, &str, &str, Action, ForecastId); 4] = [
        (O_RFWR, "roll forward along wall on right", "rfwr", Action::RollForward, dtam(3)),
        (O_RFWL, "roll forward along wall on left", "rfwl", Action::RollForward, dtam(9)),
        (O_RBWR, "roll backward along wall on right", "rbwr", Action::RollBackward, dtam(3)),
        (O_RBWL, "roll backward along wall on left", "rbwl", Action::RollBackward, dtam(9)),
    ];
    for (id, name, abbrev, action, side) in wall_follow {
        let band = ConditionSpec::ForecastBand {
            forecast: side,
            lo: "theta.wallfollow.1",
            hi: "theta.wallfollow.2",
        };
        options.insert(
            id,
            OptionSpec {
                id,
                name,
                abbrev,
                layer: 7,
                policy: PolicySpec::Fixed(action),
                initiation: band.clone(),
                beta: BetaSpec::ConditionalFloor(ConditionSpec::Or(vec![
                    ConditionSpec::ForecastAbove(TA, "theta.wallfollow.3"),
                    ConditionSpec::Not(Box::new(band)),
                ])),
                mode,
            },
        );
    }

    // Options 13–14: move randomly / move to canonical wall position.
    options.insert(
        O_MRW,
        OptionSpec {
            id: O_MRW,
            name: "move randomly until wall left or right",
            abbrev: "mrw",
            layer: 8,
            policy: PolicySpec::UniformRandom,
            initiation: ConditionSpec::Always,
            beta: BetaSpec::ConditionalFloor(ConditionSpec::AliasTrue(A_WLR)),
            mode,
        },
    );
    options.insert(
        O_MCWP,
        OptionSpec {
            id: O_MCWP,
            name: "move to canonical wall position",
            abbrev: "mcwp",
            layer: 8,
            policy: PolicySpec::Learned(ObjectiveSpec {
                cumulant: CumulantSpec::Zero,
                terminal: TerminalSpec::Alias(A_WLR),
                admissible: [true; 5],
            }),
            initiation: ConditionSpec::Always,
            beta: BetaSpec::ConditionalFloor(ConditionSpec::AliasTrue(A_WLR)),
            mode,
        },
    );

    // Option 15: roll forward to wall.
    options.insert(
        O_RFW,
        OptionSpec {
            id: O_RFW,
            name: "roll forward to wall",
            abbrev: "rfw",
            layer: 9,
            policy: PolicySpec::Fixed(Action::RollForward),
            initiation: ConditionSpec::Always,
            beta: BetaSpec::ConditionalFloor(ConditionSpec::AliasTrue(A_WA)),
            mode,
        },
    );

    // Options 16–18: go to middle of hallway / center of room / forward
    // into room.
    options.insert(
        O_GMH,
        OptionSpec {
            id: O_GMH,
            name: "go to middle of hallway",
            abbrev: "gmh",
            layer: 10,
            policy: PolicySpec::Learned(ObjectiveSpec {
                cumulant: CumulantSpec::Zero,
                terminal: TerminalSpec::Alias(A_MH),
                admissible: [true; 5],
            }),
            initiation: ConditionSpec::Always,
            beta: BetaSpec::ConditionalFloor(ConditionSpec::AliasTrue(A_MH)),
            mode,
        },
    );
    options.insert(
        O_GCR,
        OptionSpec {
            id: O_GCR,
            name: "go to center of room",
            abbrev: "gcr",
            layer: 10,
            policy: PolicySpec::Learned(ObjectiveSpec {
                cumulant: CumulantSpec::Zero,
                terminal: TerminalSpec::Alias(A_CR),
                admissible: [true; 5],
            }),
            initiation: ConditionSpec::Always,
            beta: BetaSpec::ConditionalFloor(ConditionSpec::AliasTrue(A_CR)),
            mode,
        },
    );
    options.insert(
        O_GFR,
        OptionSpec {
            id: O_GFR,
            name: "go forward into room",
            abbrev: "gfr",
            layer: 10,
            policy: PolicySpec::Fixed(Action::RollForward),
            initiation: ConditionSpec::Always,
            beta: BetaSpec::ConditionalFloor(ConditionSpec::AliasTrue(A_R)),
            mode,
        },
    );

    // Forecast 1: T, the touch prediction under ef.
    forecasts.insert(
        T,
        ForecastSpec {
            id: T,
            name: "TOUCH".into(),
            abbrev: "T".into(),
            layer: 1,
            option: O_EF,
            cumulant: CumulantSpec::Zero,
            terminal: TerminalSpec::Touch,
            kind: ValueKind::Probability,
        },
    );
    // Forecasts 2–3: TL / TR.
    forecasts.insert(
        TL,
        ForecastSpec {
            id: TL,
            name: "TOUCHLEFT".into(),
            abbrev: "TL".into(),
            layer: 2,
            option: O_ROTL,
            cumulant: CumulantSpec::Zero,
            terminal: TerminalSpec::Forecast(T),
            kind: ValueKind::Probability,
        },
    );
    forecasts.insert(
        TR,
        ForecastSpec {
            id: TR,
            name: "TOUCHRIGHT".into(),
            abbrev: "TR".into(),
            layer: 2,
            option: O_ROTR,
            cumulant: CumulantSpec::Zero,
            terminal: TerminalSpec::Forecast(T),
            kind: ValueKind::Probability,
        },
    );
    // Forecasts 4–14: the TOUCHMAP ring. Slots 1–6 look one rotation
    // clockwise at the previous slot; slots 7–11 one rotation
    // counterclockwise at the next.
    for i in 1..=11usize {
        let (option, target) = if i <= 6 { (O_ROTR, tm(i - 1)) } else { (O_ROTL, tm(i + 1)) };
        forecasts.insert(
            tm(i),
            ForecastSpec {
                id: tm(i),
                name: "TOUCHMAP".into(),
                abbrev: format!("TM({i})"),
                layer: 3,
                option,
                cumulant: CumulantSpec::Zero,
                terminal: TerminalSpec::Forecast(target),
                kind: ValueKind::Probability,
            },
        );
    }
    // Forecast 15: TA.
    forecasts.insert(
        TA,
        ForecastSpec {
            id: TA,
            name: "TOUCH ADJACENT".into(),
            abbrev: "TA".into(),
            layer: 4,
            option: O_RTT,
            cumulant: CumulantSpec::Zero,
            terminal: TerminalSpec::Forecast(T),
            kind: ValueKind::Probability,
        },
    );
    // Forecasts 16–17: DTA / NTA on the configured forward option.
    let dta_option = if config.dta_option == "rfta" { O_RFTA } else { O_RFTT };
    forecasts.insert(
        DTA,
        ForecastSpec {
            id: DTA,
            name: "DISTANCE TO TOUCH ADJACENT".into(),
            abbrev: "DTA".into(),
            layer: 5,
            option: dta_option,
            cumulant: CumulantSpec::One,
            terminal: TerminalSpec::Zero,
            kind: ValueKind::Count,
        },
    );
    forecasts.insert(
        NTA,
        ForecastSpec {
            id: NTA,
            name: "NEARNESS TO TOUCH ADJACENT".into(),
            abbrev: "NTA".into(),
            layer: 5,
            option: dta_option,
            cumulant: CumulantSpec::Zero,
            terminal: TerminalSpec::ForecastAbove(TA, "theta.rftt.0"),
            kind: ValueKind::Probability,
        },
    );
    // Forecasts 18–28: DTAM ring.
    for i in 1..=11usize {
        let (option, target) = if i <= 6 { (O_ROTR, dtam(i - 1)) } else { (O_ROTL, dtam(i + 1)) };
        forecasts.insert(
            dtam(i),
            ForecastSpec {
                id: dtam(i),
                name: "DISTANCE-TO-TA MAP".into(),
                abbrev: format!("DTAM({i})"),
                layer: 6,
                option,
                cumulant: CumulantSpec::Zero,
                terminal: TerminalSpec::Forecast(target),
                kind: ValueKind::Count,
            },
        );
    }
    // Forecasts 29–32: the wall-following step counters.
    let walls: [(ForecastId, &str, &str, OptionId); 4] = [
        (WRF, "WALL RIGHT, FORWARD", "WRF", O_RFWR),
        (WLF, "WALL LEFT, FORWARD", "WLF", O_RFWL),
        (WRB, "WALL RIGHT, BACKWARD", "WRB", O_RBWR),
        (WLB, "WALL LEFT, BACKWARD", "WLB", O_RBWL),
    ];
    for (id, name, abbrev, option) in walls {
        forecasts.insert(
            id,
            ForecastSpec {
                id,
                name: name.into(),
                abbrev: abbrev.into(),
                layer: 7,
                option,
                cumulant: CumulantSpec::One,
                terminal: TerminalSpec::Zero,
                kind: ValueKind::Count,
            },
        );
    }
    // Forecasts 33–34: wall distances by random walk and learned policy.
    forecasts.insert(
        WDA,
        ForecastSpec {
            id: WDA,
            name: "WALL DISTANCE A".into(),
            abbrev: "WDA".into(),
            layer: 8,
            option: O_MRW,
            cumulant: CumulantSpec::One,
            terminal: TerminalSpec::Zero,
            kind: ValueKind::Count,
        },
    );
    forecasts.insert(
        WDB,
        ForecastSpec {
            id: WDB,
            name: "WALL DISTANCE B".into(),
            abbrev: "WDB".into(),
            layer: 8,
            option: O_MCWP,
            cumulant: CumulantSpec::One,
            terminal: TerminalSpec::Zero,
            kind: ValueKind::Count,
        },
    );
    // Forecast 35 + ring 36–46: distance to wall and its map.
    forecasts.insert(
        DW,
        ForecastSpec {
            id: DW,
            name: "DISTANCE TO WALL".into(),
            abbrev: "DW".into(),
            layer: 9,
            option: O_RFW,
            cumulant: CumulantSpec::One,
            terminal: TerminalSpec::Zero,
            kind: ValueKind::Count,
        },
    );
    for i in 1..=11usize {
        let (option, target) = if i <= 6 { (O_ROTR, dwm(i - 1)) } else { (O_ROTL, dwm(i + 1)) };
        forecasts.insert(
            dwm(i),
            ForecastSpec {
                id: dwm(i),
                name: "DISTANCE-TO-WALL MAP".into(),
                abbrev: format!("DWM({i})"),
                layer: 9,
                option,
                cumulant: CumulantSpec::Zero,
                terminal: TerminalSpec::Forecast(target),
                kind: ValueKind::Count,
            },
        );
    }
    // Forecast 47: distance to room.
    forecasts.insert(
        DR,
        ForecastSpec {
            id: DR,
            name: "DISTANCE TO ROOM".into(),
            abbrev: "DR".into(),
            layer: 11,
            option: O_GFR,
            cumulant: CumulantSpec::One,
            terminal: TerminalSpec::Zero,
            kind: ValueKind::Count,
        },
    );

    // Aliases.
    let theta_wlr = || Box::new(AliasExpr::Theta("theta.wlr.0"));
    aliases.insert(
        A_WLR,
        AliasSpec {
            id: A_WLR,
            name: "Wall Left or Right",
            abbrev: "WLR",
            layer: 8,
            expr: AliasExpr::Or(vec![
                AliasExpr::Gt(Box::new(AliasExpr::Forecast(WRF)), theta_wlr()),
                AliasExpr::Gt(Box::new(AliasExpr::Forecast(WLF)), theta_wlr()),
                AliasExpr::Gt(Box::new(AliasExpr::Forecast(WRB)), theta_wlr()),
                AliasExpr::Gt(Box::new(AliasExpr::Forecast(WLB)), theta_wlr()),
            ]),
        },
    );
    aliases.insert(
        A_WA,
        AliasSpec {
            id: A_WA,
            name: "Wall Adjacent",
            abbrev: "WA",
            layer: 9,
            expr: AliasExpr::And(vec![
                AliasExpr::forecast(TA).gt(AliasExpr::Theta("theta.wa.1")),
                AliasExpr::forecast(WDA).lt(AliasExpr::Theta("theta.wa.2")),
            ]),
        },
    );
    aliases.insert(
        A_LRFS,
        AliasSpec {
            id: A_LRFS,
            name: "Left-Right Free Space",
            abbrev: "LRFS",
            layer: 10,
            expr: AliasExpr::forecast(dwm(3)).add(AliasExpr::forecast(dwm(9))),
        },
    );
    aliases.insert(
        A_FBFS,
        AliasSpec {
            id: A_FBFS,
            name: "Front-back Free Space",
            abbrev: "FBFS",
            layer: 10,
            expr: AliasExpr::forecast(dwm(0)).add(AliasExpr::forecast(dwm(6))),
        },
    );
    aliases.insert(
        A_LRC,
        AliasSpec {
            id: A_LRC,
            name: "Left-right Centered",
            abbrev: "LRC",
            layer: 10,
            expr: AliasExpr::AbsDiffLe(
                Box::new(AliasExpr::Forecast(dwm(3))),
                Box::new(AliasExpr::Forecast(dwm(9))),
                Box::new(AliasExpr::Theta("theta.lrc.0")),
            ),
        },
    );
    aliases.insert(
        A_FBC,
        AliasSpec {
            id: A_FBC,
            name: "Front-Back Centered",
            abbrev: "FBC",
            layer: 10,
            expr: AliasExpr::AbsDiffLe(
                Box::new(AliasExpr::Forecast(dwm(0))),
                Box::new(AliasExpr::Forecast(dwm(6))),
                Box::new(AliasExpr::Theta("theta.fbc.0")),
            ),
        },
    );
    aliases.insert(
        A_R,
        AliasSpec {
            id: A_R,
            name: "Room",
            abbrev: "R",
            layer: 10,
            expr: AliasExpr::And(
                [0usize, 3, 6, 9]
                    .into_iter()
                    .map(|i| AliasExpr::forecast(dwm(i)).lt(AliasExpr::Theta("theta.r.1")))
                    .collect(),
            ),
        },
    );
    aliases.insert(
        A_CR,
        AliasSpec {
            id: A_CR,
            name: "Centered in a Room",
            abbrev: "CR",
            layer: 10,
            expr: AliasExpr::And(vec![
                AliasExpr::Alias(A_R),
                AliasExpr::Alias(A_LRC),
                AliasExpr::Alias(A_FBC),
            ]),
        },
    );
    aliases.insert(
        A_MH,
        AliasSpec {
            id: A_MH,
            name: "Middle of Hall",
            abbrev: "MH",
            layer: 10,
            expr: AliasExpr::And(vec![
                AliasExpr::Alias(A_CR),
                AliasExpr::Alias(A_LRFS).lt(AliasExpr::Theta("theta.mh.3")),
                AliasExpr::Alias(A_FBFS).gt(AliasExpr::Theta("theta.mh.4")),
            ]),
        },
    );
    aliases.insert(
        A_RA,
        AliasSpec {
            id: A_RA,
            name: "Room Area",
            abbrev: "RA",
            layer: 10,
            expr: AliasExpr::Alias(A_LRFS).mul(AliasExpr::Alias(A_FBFS)),
        },
    );
    aliases.insert(
        A_SR,
        AliasSpec {
            id: A_SR,
            name: "Small Room",
            abbrev: "SR",
            layer: 10,
            expr: AliasExpr::And(vec![
                AliasExpr::Alias(A_CR),
                AliasExpr::Alias(A_RA).lt(AliasExpr::Theta("theta.sr.5")),
            ]),
        },
    );
    aliases.insert(
        A_LR,
        AliasSpec {
            id: A_LR,
            name: "Large Room",
            abbrev: "LR",
            layer: 10,
            expr: AliasExpr::And(vec![
                AliasExpr::Alias(A_CR),
                AliasExpr::Theta("theta.lr.6").lt(AliasExpr::Alias(A_RA)),
                AliasExpr::Alias(A_RA).lt(AliasExpr::Theta("theta.lr.7")),
            ]),
        },
    );
    aliases.insert(
        A_D,
        AliasSpec {
            id: A_D,
            name: "Doorway",
            abbrev: "D",
            layer: 11,
            expr: AliasExpr::And(vec![
                AliasExpr::forecast(dtam(3)).lt(AliasExpr::Theta("theta.d.1")),
                AliasExpr::forecast(dtam(9)).lt(AliasExpr::Theta("theta.d.1")),
                AliasExpr::forecast(DR).lt(AliasExpr::Theta("theta.d.2")),
            ]),
        },
    );

    // Layer layout in construction order. The left ring slots descend
    // (TM(11) depends on T, TM(10) on TM(11), ...).
    let right_then_left = |f: fn(usize) -> ForecastId| -> Vec<EntityRef> {
        let mut v: Vec<EntityRef> = (1..=6).map(|i| EntityRef::Forecast(f(i))).collect();
        v.extend((7..=11).rev().map(|i| EntityRef::Forecast(f(i))));
        v
    };
    let mut layers = vec![
        LayerSpec { layer: 1, entities: vec![EntityRef::Forecast(T)] },
        LayerSpec {
            layer: 2,
            entities: vec![EntityRef::Forecast(TL), EntityRef::Forecast(TR)],
        },
        LayerSpec { layer: 3, entities: right_then_left(tm) },
        LayerSpec {
            layer: 4,
            entities: vec![EntityRef::Option(O_RTT), EntityRef::Forecast(TA)],
        },
        LayerSpec {
            layer: 5,
            entities: vec![
                EntityRef::Option(O_RFTA),
                EntityRef::Option(O_RFTT),
                EntityRef::Forecast(DTA),
                EntityRef::Forecast(NTA),
            ],
        },
        LayerSpec { layer: 6, entities: right_then_left(dtam) },
        LayerSpec {
            layer: 7,
            entities: vec![
                EntityRef::Option(O_RFWR),
                EntityRef::Option(O_RFWL),
                EntityRef::Option(O_RBWR),
                EntityRef::Option(O_RBWL),
                EntityRef::Forecast(WRF),
                EntityRef::Forecast(WLF),
                EntityRef::Forecast(WRB),
                EntityRef::Forecast(WLB),
            ],
        },
        LayerSpec {
            layer: 8,
            entities: vec![
                EntityRef::Alias(A_WLR),
                EntityRef::Option(O_MRW),
                EntityRef::Option(O_MCWP),
                EntityRef::Forecast(WDA),
                EntityRef::Forecast(WDB),
            ],
        },
    ];
    let mut layer9 = vec![
        EntityRef::Alias(A_WA),
        EntityRef::Option(O_RFW),
        EntityRef::Forecast(DW),
    ];
    layer9.extend(right_then_left(dwm));
    layers.push(LayerSpec { layer: 9, entities: layer9 });
    layers.push(LayerSpec {
        layer: 10,
        entities: vec![
            EntityRef::Alias(A_LRFS),
            EntityRef::Alias(A_FBFS),
            EntityRef::Alias(A_LRC),
            EntityRef::Alias(A_FBC),
            EntityRef::Alias(A_R),
            EntityRef::Alias(A_CR),
            EntityRef::Alias(A_MH),
            EntityRef::Alias(A_RA),
            EntityRef::Alias(A_SR),
            EntityRef::Alias(A_LR),
            EntityRef::Option(O_GMH),
            EntityRef::Option(O_GCR),
            EntityRef::Option(O_GFR),
        ],
    });
    layers.push(LayerSpec {
        layer: 11,
        entities: vec![EntityRef::Forecast(DR), EntityRef::Alias(A_D)],
    });

    // The five primitive options are layer 0, defined before everything.
    let mut layer0 = LayerSpec { layer: 0, entities: Vec::new() };
    for (id, ..) in primitives {
        layer0.entities.push(EntityRef::Option(id));
    }
    layers.insert(0, layer0);

    let registry = Registry { forecasts, options, aliases, layers, config };
    registry.validate()?;
    Ok(registry)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_registry_has_the_published_counts() {
        let registry = build_standard_curriculum(CurriculumConfig::default()).unwrap();
        assert_eq!(registry.forecasts.len(), 47);
        assert_eq!(registry.options.len(), 18);
        assert_eq!(registry.aliases.len(), 13);
        assert_eq!(registry.max_layer(), 11);
    }

    #[test]
    fn map_rings_have_eleven_slots_identified_with_their_base() {
        let registry = build_standard_curriculum(CurriculumConfig::default()).unwrap();
        for (family, base, lo, hi) in [
            (RingFamily::TouchMap, ids::T, 4, 14),
            (RingFamily::DtaMap, ids::DTA, 18, 28),
            (RingFamily::DwMap, ids::DW, 36, 46),
        ] {
            assert_eq!(family.slot(0), base);
            assert_eq!(family.slot(12), base);
            let slot_ids: Vec<ForecastId> = (1..=11).map(|i| family.slot(i)).collect();
            assert_eq!(slot_ids.first().copied(), Some(lo));
            assert_eq!(slot_ids.last().copied(), Some(hi));
            assert_eq!(slot_ids.len(), 11);
            for id in slot_ids {
                assert!(registry.forecasts.contains_key(&id));
            }
        }
    }

    #[test]
    fn deleting_touch_adjacent_reports_its_dependents() {
        let mut registry = build_standard_curriculum(CurriculumConfig::default()).unwrap();
        registry.forecasts.remove(&ids::TA);
        registry.layers.iter_mut().for_each(|l| {
            l.entities.retain(|e| *e != EntityRef::Forecast(ids::TA));
        });
        match registry.validate() {
            Err(CurriculumError::Build(problems)) => {
                let text = problems.join("\n");
                assert!(text.contains("option 7"), "{text}");
                assert!(text.contains("option 8"), "{text}");
                assert!(text.contains("forecast 17"), "{text}");
            }
            other => panic!("expected build failure, got {other:?}"),
        }
    }

    #[test]
    fn missing_threshold_is_a_build_error_naming_the_entity() {
        let mut config = CurriculumConfig::default();
        config.thresholds.remove("theta.rftt.0");
        match build_standard_curriculum(config) {
            Err(CurriculumError::Build(problems)) => {
                assert!(problems.iter().any(|p| p.contains("rftt")), "{problems:?}");
            }
            other => panic!("expected build failure, got {other:?}"),
        }
    }

    #[test]
    fn layer_assignments_follow_the_collected_index() {
        let registry = build_standard_curriculum(CurriculumConfig::default()).unwrap();
        let layer_of = |id: ForecastId| registry.forecasts[&id].layer;
        assert_eq!(layer_of(ids::T), 1);
        assert_eq!(layer_of(ids::tm(5)), 3);
        assert_eq!(layer_of(ids::TA), 4);
        assert_eq!(layer_of(ids::NTA), 5);
        assert_eq!(layer_of(ids::dtam(11)), 6);
        assert_eq!(layer_of(ids::WLB), 7);
        assert_eq!(layer_of(ids::WDB), 8);
        assert_eq!(layer_of(ids::dwm(1)), 9);
        assert_eq!(layer_of(ids::DR), 11);
        assert_eq!(registry.options[&ids::O_GFR].layer, 10);
        assert_eq!(registry.aliases[&ids::A_D].layer, 11);
    }
}
