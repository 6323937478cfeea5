//! Curriculum configuration: thresholds, per-layer training budgets,
//! termination floors and training knobs, parsed from a key=value text
//! file with '#' comments.

use super::registry::CurriculumError;
use crate::mdp::TerminationMode;
use crate::optlearn::{QAlpha, QSchedule};
use crate::td::TargetStyle;
use std::collections::BTreeMap;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OptionTraining {
    /// Learned options solved exactly by policy iteration.
    Dp,
    /// Learned options trained online by Q-learning (the DP policy is
    /// still computed as the verification reference).
    Q,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainingMode {
    /// Online TD training of the estimates.
    Td,
    /// Estimates seeded directly from the DP oracle; no training steps.
    Oracle,
}

/// Step-size policy for the TD learners.
#[derive(Clone, Copy, Debug)]
pub enum AlphaConfig {
    Fixed(f64),
    VisitDecay,
    /// α = 1 for support-gated learners (their expected targets are
    /// noise-free, so the update is exact asynchronous value iteration)
    /// and visit-decay averaging for importance-gated ones.
    Auto,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BehaviorKind {
    /// Per step: with option_prob pick a registered option and take one
    /// action from its policy, else a uniform random primitive. Mixture
    /// probabilities are closed-form, so importance-gated forecasts stay
    /// unbiased.
    StepMixture,
    /// Per decision point: with option_prob follow a uniformly chosen
    /// registered option to termination, else one uniform primitive.
    OptionEpisodes,
}

#[derive(Clone, Debug)]
pub struct CurriculumConfig {
    pub thresholds: BTreeMap<String, f64>,
    pub budgets: BTreeMap<u32, usize>,
    pub default_mode: TerminationMode,
    pub beta_floors: BTreeMap<String, f64>,
    pub alpha: AlphaConfig,
    pub behavior: BehaviorKind,
    pub behavior_option_prob: f64,
    pub options_training: OptionTraining,
    pub training_mode: TrainingMode,
    pub target_style: TargetStyle,
    pub q_schedule: QSchedule,
    pub mask_penalty: f64,
    pub rollout_cap: usize,
    pub gate_mean_abs_err: f64,
    pub verify_tol: f64,
    pub solver_tol: f64,
    pub solver_max_sweeps: usize,
    /// Which option defines DTA and NTA: "rftt" (default) or "rfta".
    pub dta_option: String,
}

impl Default for CurriculumConfig {
    fn default() -> Self {
        let mut thresholds = BTreeMap::new();
        for (k, v) in [
            ("theta.rftt.0", 0.5),
            ("theta.wallfollow.1", 1.5),
            ("theta.wallfollow.2", 4.5),
            ("theta.wallfollow.3", 0.5),
            ("theta.wlr.0", 4.0),
            ("theta.wa.1", 0.5),
            ("theta.wa.2", 3.0),
            ("theta.lrc.0", 1.0),
            ("theta.fbc.0", 1.0),
            ("theta.r.1", 6.0),
            ("theta.mh.3", 4.0),
            ("theta.mh.4", 8.0),
            ("theta.sr.5", 25.0),
            ("theta.lr.6", 40.0),
            ("theta.lr.7", 200.0),
            ("theta.d.1", 2.0),
            ("theta.d.2", 3.0),
        ] {
            thresholds.insert(k.to_string(), v);
        }
        let budgets = [
            (1u32, 200_000usize),
            (2, 200_000),
            (3, 400_000),
            (4, 250_000),
            (5, 350_000),
            (6, 600_000),
            (7, 350_000),
            (8, 350_000),
            (9, 450_000),
            (10, 0),
            (11, 250_000),
        ]
        .into_iter()
        .collect();
        let mut beta_floors = BTreeMap::new();
        for opt in
            ["rtt", "rfta", "rftt", "rfwr", "rfwl", "rbwr", "rbwl", "mrw", "mcwp", "rfw", "gmh", "gcr", "gfr"]
        {
            beta_floors.insert(opt.to_string(), 0.1);
        }
        Self {
            thresholds,
            budgets,
            default_mode: TerminationMode::PostStep,
            beta_floors,
            alpha: AlphaConfig::Fixed(0.1),
            behavior: BehaviorKind::StepMixture,
            behavior_option_prob: 0.5,
            options_training: OptionTraining::Q,
            training_mode: TrainingMode::Td,
            target_style: TargetStyle::Expected,
            q_schedule: QSchedule {
                episodes: 150_000,
                alpha: QAlpha::VisitDecay,
                epsilon_start: 1.0,
                epsilon_end: 0.1,
                max_episode_len: 150,
            },
            mask_penalty: -1e6,
            rollout_cap: 1_000_000,
            gate_mean_abs_err: 0.05,
            verify_tol: 0.05,
            solver_tol: 1e-10,
            solver_max_sweeps: 20_000,
            dta_option: "rftt".to_string(),
        }
    }
}

impl CurriculumConfig {
    pub fn theta(&self, key: &str) -> Result<f64, CurriculumError> {
        self.thresholds
            .get(key)
            .copied()
            .ok_or_else(|| CurriculumError::MissingThreshold(key.to_string()))
    }

    pub fn beta_floor(&self, option_abbrev: &str) -> f64 {
        self.beta_floors.get(option_abbrev).copied().unwrap_or(0.0)
    }

    pub fn budget(&self, layer: u32) -> usize {
        self.budgets.get(&layer).copied().unwrap_or(0)
    }

    /// Parses overrides from key=value lines into a default config.
    pub fn parse(text: &str) -> Result<Self, CurriculumError> {
        let mut cfg = Self::default();
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CurriculumError::Config(format!("line {line_no}: expected key=value, got '{line}'"))
            })?;
            let key = key.trim();
            let value = value.trim();
            let bad = |msg: String| CurriculumError::Config(format!("line {line_no}: {msg}"));
            let as_f64 = |v: &str| -> Result<f64, CurriculumError> {
                v.parse().map_err(|_| bad(format!("'{v}' is not a number")))
            };
            let as_usize = |v: &str| -> Result<usize, CurriculumError> {
                v.parse().map_err(|_| bad(format!("'{v}' is not a non-negative integer")))
            };
            if let Some(theta) = key.strip_prefix("theta.") {
                cfg.thresholds.insert(format!("theta.{theta}"), as_f64(value)?);
            } else if let Some(layer) = key.strip_prefix("budget.layer") {
                let layer: u32 =
                    layer.parse().map_err(|_| bad(format!("bad layer number '{layer}'")))?;
                cfg.budgets.insert(layer, as_usize(value)?);
            } else if let Some(opt) = key.strip_prefix("beta.floor.") {
                cfg.beta_floors.insert(opt.to_string(), as_f64(value)?);
            } else {
                match key {
                    "termination.default" => {
                        cfg.default_mode = TerminationMode::parse(value)
                            .map_err(|e| bad(e.to_string()))?;
                    }
                    "alpha.mode" => match value {
                        "fixed" => {
                            if !matches!(cfg.alpha, AlphaConfig::Fixed(_)) {
                                cfg.alpha = AlphaConfig::Fixed(0.1);
                            }
                        }
                        "visit_decay" => cfg.alpha = AlphaConfig::VisitDecay,
                        "auto" => cfg.alpha = AlphaConfig::Auto,
                        other => return Err(bad(format!("unknown alpha.mode '{other}'"))),
                    },
                    "alpha.value" => {
                        cfg.alpha = AlphaConfig::Fixed(as_f64(value)?);
                    }
                    "behavior.kind" => match value {
                        "step_mixture" => cfg.behavior = BehaviorKind::StepMixture,
                        "option_episodes" => cfg.behavior = BehaviorKind::OptionEpisodes,
                        other => return Err(bad(format!("unknown behavior.kind '{other}'"))),
                    },
                    "behavior.option_prob" => cfg.behavior_option_prob = as_f64(value)?,
                    "options.training" => match value {
                        "dp" => cfg.options_training = OptionTraining::Dp,
                        "q" => cfg.options_training = OptionTraining::Q,
                        other => return Err(bad(format!("unknown options.training '{other}'"))),
                    },
                    "training.mode" => match value {
                        "td" => cfg.training_mode = TrainingMode::Td,
                        "oracle" => cfg.training_mode = TrainingMode::Oracle,
                        other => return Err(bad(format!("unknown training.mode '{other}'"))),
                    },
                    "target.style" => match value {
                        "expected" => cfg.target_style = TargetStyle::Expected,
                        "sampled" => cfg.target_style = TargetStyle::Sampled,
                        other => return Err(bad(format!("unknown target.style '{other}'"))),
                    },
                    "q.episodes" => cfg.q_schedule.episodes = as_usize(value)?,
                    "q.alpha" => {
                        cfg.q_schedule.alpha = if value == "visit_decay" {
                            QAlpha::VisitDecay
                        } else {
                            QAlpha::Fixed(as_f64(value)?)
                        }
                    }
                    "q.epsilon.start" => cfg.q_schedule.epsilon_start = as_f64(value)?,
                    "q.epsilon.end" => cfg.q_schedule.epsilon_end = as_f64(value)?,
                    "q.max_episode_len" => cfg.q_schedule.max_episode_len = as_usize(value)?,
                    "mask.penalty" => cfg.mask_penalty = as_f64(value)?,
                    "rollout.cap" => cfg.rollout_cap = as_usize(value)?,
                    "gate.mean_abs_err" => cfg.gate_mean_abs_err = as_f64(value)?,
                    "verify.tol" => cfg.verify_tol = as_f64(value)?,
                    "solver.tol" => cfg.solver_tol = as_f64(value)?,
                    "solver.max_sweeps" => cfg.solver_max_sweeps = as_usize(value)?,
                    "dta.option" => {
                        if value != "rftt" && value != "rfta" {
                            return Err(bad(format!("dta.option must be rftt or rfta, got '{value}'")));
                        }
                        cfg.dta_option = value.to_string();
                    }
                    other => return Err(bad(format!("unknown key '{other}'"))),
                }
            }
        }
        Ok(cfg)
    }
}
