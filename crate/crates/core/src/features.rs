//! The agent's state vector and the two approximator backends: an exact
//! pose-keyed table (the sanctioned stand-in for a perfect function
//! approximator) and a linear map over the state vector.

use crate::mdp::{ForecastId, ValueKind};
use crate::world::{Observation, Pose};
use std::collections::BTreeMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("unknown forecast id {0}")]
    UnknownForecast(ForecastId),
    #[error("forecast ids must be registered in increasing order: {id} after {last}")]
    OutOfOrder { id: ForecastId, last: ForecastId },
    #[error("{0}")]
    Query(String),
    #[error("parameter file error: {0}")]
    Params(String),
}

/// Agent state: observation first, then forecast estimates ordered by
/// forecast id. The ordering is fixed across a run.
pub fn build_state_vector(obs: &Observation, prev_estimates: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(obs.pixels.len() + 1 + prev_estimates.len());
    v.extend_from_slice(&obs.pixels);
    v.push(if obs.touch { 1.0 } else { 0.0 });
    v.extend_from_slice(prev_estimates);
    v
}

/// Injective, run-stable key for the tabular backend: the pose packed
/// into 44 bits (20 bits per coordinate with a sign offset, 4 bits of
/// heading).
pub fn discretize_pose(pose: Pose) -> u64 {
    const OFFSET: i64 = 1 << 19;
    debug_assert!((pose.x + OFFSET) >= 0 && (pose.x + OFFSET) < (1 << 20));
    debug_assert!((pose.y + OFFSET) >= 0 && (pose.y + OFFSET) < (1 << 20));
    (((pose.x + OFFSET) as u64) << 24) | (((pose.y + OFFSET) as u64) << 4) | pose.heading as u64
}

pub fn key_to_pose(key: u64) -> Pose {
    const OFFSET: i64 = 1 << 19;
    Pose {
        x: ((key >> 24) & 0xFFFFF) as i64 - OFFSET,
        y: ((key >> 4) & 0xFFFFF) as i64 - OFFSET,
        heading: (key & 0xF) as u8,
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BackendKind {
    TabularPose,
    Linear,
}

impl BackendKind {
    pub fn label(self) -> &'static str {
        match self {
            BackendKind::TabularPose => "tabular",
            BackendKind::Linear => "linear",
        }
    }

    pub fn parse(s: &str) -> Result<Self, FeatureError> {
        match s {
            "tabular" | "tabular_pose" => Ok(BackendKind::TabularPose),
            "linear" => Ok(BackendKind::Linear),
            other => Err(FeatureError::Params(format!("unknown backend '{other}'"))),
        }
    }
}

/// What a prediction or update is keyed on: a table key for the tabular
/// backend, a feature vector for the linear one.
#[derive(Clone, Copy, Debug)]
pub enum Query<'a> {
    Key(u64),
    Vector(&'a [f64]),
}

#[derive(Clone, Debug)]
enum Block {
    Tabular { values: BTreeMap<u64, f64> },
    Linear { weights: Vec<f64>, bias: f64 },
}

/// Parameters Θ for every registered forecast. Each forecast owns its
/// block; updates never touch another forecast's parameters.
#[derive(Clone, Debug)]
pub struct Approximator {
    kind: BackendKind,
    blocks: BTreeMap<ForecastId, (Block, ValueKind)>,
}

impl Approximator {
    pub fn new(kind: BackendKind) -> Self {
        Self { kind, blocks: BTreeMap::new() }
    }

    pub fn kind(&self) -> BackendKind {
        self.kind
    }

    /// Registers a forecast's parameter block. Ids fix the state-vector
    /// ordering, so registration must arrive in increasing id order.
    pub fn register(
        &mut self,
        id: ForecastId,
        value_kind: ValueKind,
        dim: usize,
    ) -> Result<(), FeatureError> {
        if let Some((&last, _)) = self.blocks.iter().next_back() {
            if id <= last {
                return Err(FeatureError::OutOfOrder { id, last });
            }
        }
        let block = match self.kind {
            BackendKind::TabularPose => Block::Tabular { values: BTreeMap::new() },
            BackendKind::Linear => Block::Linear { weights: vec![0.0; dim], bias: 0.0 },
        };
        self.blocks.insert(id, (block, value_kind));
        Ok(())
    }

    pub fn registered_ids(&self) -> impl Iterator<Item = ForecastId> + '_ {
        self.blocks.keys().copied()
    }

    pub fn is_registered(&self, id: ForecastId) -> bool {
        self.blocks.contains_key(&id)
    }

    pub fn predict(&self, id: ForecastId, query: Query) -> Result<f64, FeatureError> {
        let (block, kind) = self.blocks.get(&id).ok_or(FeatureError::UnknownForecast(id))?;
        let raw = match (block, query) {
            (Block::Tabular { values }, Query::Key(k)) => values.get(&k).copied().unwrap_or(0.0),
            (Block::Linear { weights, bias }, Query::Vector(x)) => {
                if x.len() != weights.len() {
                    return Err(FeatureError::Query(format!(
                        "feature vector has {} components, expected {}",
                        x.len(),
                        weights.len()
                    )));
                }
                weights.iter().zip(x).map(|(w, f)| w * f).sum::<f64>() + bias
            }
            _ => {
                return Err(FeatureError::Query(format!(
                    "query does not match the {} backend",
                    self.kind.label()
                )))
            }
        };
        Ok(kind.clamp(raw))
    }

    /// Gradient step scaled by α·weight·δ. The tabular backend bumps the
    /// keyed cell; the linear backend moves every weight along the
    /// feature vector (bias feature 1).
    pub fn apply_update(
        &mut self,
        id: ForecastId,
        query: Query,
        delta: f64,
        alpha: f64,
        weight: f64,
    ) -> Result<(), FeatureError> {
        let (block, _) = self.blocks.get_mut(&id).ok_or(FeatureError::UnknownForecast(id))?;
        let scale = alpha * weight * delta;
        match (block, query) {
            (Block::Tabular { values }, Query::Key(k)) => {
                *values.entry(k).or_insert(0.0) += scale;
            }
            (Block::Linear { weights, bias }, Query::Vector(x)) => {
                if x.len() != weights.len() {
                    return Err(FeatureError::Query(format!(
                        "feature vector has {} components, expected {}",
                        x.len(),
                        weights.len()
                    )));
                }
                for (w, f) in weights.iter_mut().zip(x) {
                    *w += scale * f;
                }
                *bias += scale;
            }
            _ => {
                return Err(FeatureError::Query(format!(
                    "query does not match the {} backend",
                    self.kind.label()
                )))
            }
        }
        Ok(())
    }

    /// Direct copy path: seeds the tabular block with exact values
    /// (oracle seeding).
    pub fn seed_values(
        &mut self,
        id: ForecastId,
        pairs: impl IntoIterator<Item = (u64, f64)>,
    ) -> Result<(), FeatureError> {
        let (block, _) = self.blocks.get_mut(&id).ok_or(FeatureError::UnknownForecast(id))?;
        match block {
            Block::Tabular { values } => {
                for (k, v) in pairs {
                    values.insert(k, v);
                }
                Ok(())
            }
            Block::Linear { .. } => {
                Err(FeatureError::Query("seeding requires the tabular backend".into()))
            }
        }
    }

    /// Serializes all parameters losslessly (shortest round-trip float
    /// text), sorted by forecast id then key.
    pub fn to_text(&self, seed: u64, world_digest: &str) -> String {
        let mut out = format!(
            "FORECASTPARAMS v1 seed={seed} world={world_digest} backend={}\n",
            self.kind.label()
        );
        for (id, (block, _)) in &self.blocks {
            match block {
                Block::Tabular { values } => {
                    for (k, v) in values {
                        let p = key_to_pose(*k);
                        out.push_str(&format!("{id}\t{},{},{}\t{v}\n", p.x, p.y, p.heading));
                    }
                }
                Block::Linear { weights, bias } => {
                    out.push_str(&id.to_string());
                    for w in weights {
                        out.push_str(&format!("\t{w}"));
                    }
                    out.push_str(&format!("\t{bias}\n"));
                }
            }
        }
        out
    }

    /// Loads parameter records into already-registered blocks. The header
    /// must match this backend's kind; seeds and world digests are
    /// returned for the caller to verify.
    pub fn load_text(&mut self, text: &str) -> Result<ParamsHeader, FeatureError> {
        let mut lines = text.lines();
        let header = ParamsHeader::parse(
            lines.next().ok_or_else(|| FeatureError::Params("empty parameter file".into()))?,
        )?;
        if header.backend != self.kind {
            return Err(FeatureError::Params(format!(
                "file holds {} parameters, backend is {}",
                header.backend.label(),
                self.kind.label()
            )));
        }
        for (lineno, line) in lines.enumerate() {
            if line.is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            let bad = |msg: &str| FeatureError::Params(format!("line {}: {msg}", lineno + 2));
            let id: ForecastId =
                fields[0].parse().map_err(|_| bad("bad forecast id"))?;
            let (block, _) =
                self.blocks.get_mut(&id).ok_or(FeatureError::UnknownForecast(id))?;
            match block {
                Block::Tabular { values } => {
                    if fields.len() != 3 {
                        return Err(bad("tabular records need id, key, value"));
                    }
                    let coords: Vec<&str> = fields[1].split(',').collect();
                    if coords.len() != 3 {
                        return Err(bad("key must be x,y,heading"));
                    }
                    let pose = Pose {
                        x: coords[0].parse().map_err(|_| bad("bad key x"))?,
                        y: coords[1].parse().map_err(|_| bad("bad key y"))?,
                        heading: coords[2].parse().map_err(|_| bad("bad key heading"))?,
                    };
                    let v: f64 = fields[2].parse().map_err(|_| bad("bad value"))?;
                    values.insert(discretize_pose(pose), v);
                }
                Block::Linear { weights, bias } => {
                    if fields.len() != weights.len() + 2 {
                        return Err(bad(&format!(
                            "linear record needs {} weights plus bias",
                            weights.len()
                        )));
                    }
                    for (w, f) in weights.iter_mut().zip(&fields[1..fields.len() - 1]) {
                        *w = f.parse().map_err(|_| bad("bad weight"))?;
                    }
                    *bias = fields[fields.len() - 1].parse().map_err(|_| bad("bad bias"))?;
                }
            }
        }
        Ok(header)
    }
}

#[derive(Clone, Debug)]
pub struct ParamsHeader {
    pub seed: u64,
    pub world_digest: String,
    pub backend: BackendKind,
}

impl ParamsHeader {
    fn parse(line: &str) -> Result<Self, FeatureError> {
        let mut tok = line.split_whitespace();
        if tok.next() != Some("FORECASTPARAMS") || tok.next() != Some("v1") {
            return Err(FeatureError::Params("expected FORECASTPARAMS v1 header".into()));
        }
        let mut seed = None;
        let mut world = None;
        let mut backend = None;
        for field in tok {
            match field.split_once('=') {
                Some(("seed", v)) => {
                    seed = Some(v.parse().map_err(|_| {
                        FeatureError::Params(format!("bad seed '{v}' in header"))
                    })?)
                }
                Some(("world", v)) => world = Some(v.to_string()),
                Some(("backend", v)) => backend = Some(BackendKind::parse(v)?),
                _ => return Err(FeatureError::Params(format!("bad header field '{field}'"))),
            }
        }
        Ok(Self {
            seed: seed.ok_or_else(|| FeatureError::Params("header missing seed".into()))?,
            world_digest: world
                .ok_or_else(|| FeatureError::Params("header missing world digest".into()))?,
            backend: backend
                .ok_or_else(|| FeatureError::Params("header missing backend".into()))?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn obs(n: usize, touch: bool) -> Observation {
        Observation { pixels: vec![0.5; n], touch }
    }

    #[test]
    fn state_vector_concatenates_in_fixed_order() {
        assert_eq!(build_state_vector(&obs(32, false), &[]).len(), 33);
        let estimates = vec![0.0; 47];
        assert_eq!(build_state_vector(&obs(32, true), &estimates).len(), 80);
        let v = build_state_vector(&obs(2, true), &[7.0, 9.0]);
        assert_eq!(v, vec![0.5, 0.5, 1.0, 7.0, 9.0]);
    }

    #[test]
    fn registration_out_of_order_is_rejected() {
        let mut a = Approximator::new(BackendKind::TabularPose);
        a.register(3, ValueKind::Probability, 0).unwrap();
        a.register(5, ValueKind::Count, 0).unwrap();
        assert!(matches!(
            a.register(4, ValueKind::Count, 0),
            Err(FeatureError::OutOfOrder { id: 4, last: 5 })
        ));
    }

    #[test]
    fn pose_key_round_trips_and_is_injective() {
        let poses = [
            Pose::new(0, 0, 0),
            Pose::new(-13, 22, 11),
            Pose::new(100, -100, 6),
            Pose::new(1, 0, 1),
        ];
        let mut keys: Vec<u64> = poses.iter().map(|&p| discretize_pose(p)).collect();
        for (p, k) in poses.iter().zip(&keys) {
            assert_eq!(key_to_pose(*k), *p);
        }
        keys.sort_unstable();
        keys.dedup();
        assert_eq!(keys.len(), poses.len());
    }

    #[test]
    fn fresh_tabular_predicts_zero_and_updates_move_it() {
        let mut a = Approximator::new(BackendKind::TabularPose);
        a.register(1, ValueKind::Raw, 0).unwrap();
        let k = discretize_pose(Pose::new(2, 3, 4));
        assert_eq!(a.predict(1, Query::Key(k)).unwrap(), 0.0);
        // δ = 0: no change.
        a.apply_update(1, Query::Key(k), 0.0, 0.5, 1.0).unwrap();
        assert_eq!(a.predict(1, Query::Key(k)).unwrap(), 0.0);
        // v += α·weight·δ = 0.5.
        a.apply_update(1, Query::Key(k), 1.0, 0.5, 1.0).unwrap();
        assert_eq!(a.predict(1, Query::Key(k)).unwrap(), 0.5);
    }

    #[test]
    fn linear_with_zero_weights_predicts_bias() {
        let mut a = Approximator::new(BackendKind::Linear);
        a.register(1, ValueKind::Raw, 3).unwrap();
        let x = [1.0, 2.0, 3.0];
        assert_eq!(a.predict(1, Query::Vector(&x)).unwrap(), 0.0);
        a.apply_update(1, Query::Vector(&x), 2.0, 0.1, 1.0).unwrap();
        // weights = 0.2·x, bias = 0.2: prediction = 0.2·14 + 0.2.
        let got = a.predict(1, Query::Vector(&x)).unwrap();
        assert!((got - 3.0).abs() < 1e-12);
    }

    #[test]
    fn updates_are_isolated_per_forecast() {
        let mut a = Approximator::new(BackendKind::TabularPose);
        a.register(1, ValueKind::Raw, 0).unwrap();
        a.register(2, ValueKind::Raw, 0).unwrap();
        let k = discretize_pose(Pose::new(0, 0, 0));
        a.apply_update(1, Query::Key(k), 1.0, 1.0, 1.0).unwrap();
        assert_eq!(a.predict(2, Query::Key(k)).unwrap(), 0.0);
    }

    #[test]
    fn probability_kind_clamps_predictions() {
        let mut a = Approximator::new(BackendKind::TabularPose);
        a.register(1, ValueKind::Probability, 0).unwrap();
        a.register(2, ValueKind::Count, 0).unwrap();
        let k = discretize_pose(Pose::new(0, 0, 0));
        a.apply_update(1, Query::Key(k), 3.0, 1.0, 1.0).unwrap();
        assert_eq!(a.predict(1, Query::Key(k)).unwrap(), 1.0);
        a.apply_update(2, Query::Key(k), -5.0, 1.0, 1.0).unwrap();
        assert_eq!(a.predict(2, Query::Key(k)).unwrap(), 0.0);
    }

    #[test]
    fn linear_small_alpha_does_not_increase_squared_error() {
        let mut a = Approximator::new(BackendKind::Linear);
        a.register(1, ValueKind::Raw, 4).unwrap();
        let x = [0.3, -1.2, 0.7, 2.0];
        let target = 1.5;
        let norm_sq: f64 = x.iter().map(|v| v * v).sum::<f64>() + 1.0; // bias feature
        let alpha = 0.9 / norm_sq;
        let mut prev_err = f64::INFINITY;
        for _ in 0..50 {
            let est = a.predict(1, Query::Vector(&x)).unwrap();
            let err = (target - est).powi(2);
            assert!(err <= prev_err + 1e-12, "error increased: {err} > {prev_err}");
            prev_err = err;
            a.apply_update(1, Query::Vector(&x), target - est, alpha, 1.0).unwrap();
        }
        assert!(prev_err < 1e-6);
    }

    #[test]
    fn params_round_trip_is_byte_identical() {
        let mut a = Approximator::new(BackendKind::TabularPose);
        a.register(1, ValueKind::Raw, 0).unwrap();
        a.register(7, ValueKind::Raw, 0).unwrap();
        a.seed_values(
            1,
            [
                (discretize_pose(Pose::new(1, 2, 3)), 0.123456789012345),
                (discretize_pose(Pose::new(-4, 5, 0)), 1.0 / 3.0),
            ],
        )
        .unwrap();
        a.seed_values(7, [(discretize_pose(Pose::new(0, 0, 11)), f64::MIN_POSITIVE)]).unwrap();
        let text = a.to_text(42, "abcd1234");
        let mut b = Approximator::new(BackendKind::TabularPose);
        b.register(1, ValueKind::Raw, 0).unwrap();
        b.register(7, ValueKind::Raw, 0).unwrap();
        let header = b.load_text(&text).unwrap();
        assert_eq!(header.seed, 42);
        assert_eq!(header.world_digest, "abcd1234");
        assert_eq!(b.to_text(42, "abcd1234"), text);
    }

    #[test]
    fn linear_params_round_trip() {
        let mut a = Approximator::new(BackendKind::Linear);
        a.register(2, ValueKind::Raw, 3).unwrap();
        let x = [0.1, 0.9, -0.4];
        a.apply_update(2, Query::Vector(&x), 0.777, 0.3, 1.0).unwrap();
        let text = a.to_text(9, "feed");
        let mut b = Approximator::new(BackendKind::Linear);
        b.register(2, ValueKind::Raw, 3).unwrap();
        b.load_text(&text).unwrap();
        assert_eq!(b.to_text(9, "feed"), text);
        assert_eq!(
            a.predict(2, Query::Vector(&x)).unwrap(),
            b.predict(2, Query::Vector(&x)).unwrap()
        );
    }
}
