//! Pose enumeration and export of the microworld as a finite MDP, which
//! is what makes exact DP oracles possible.

use super::{step, touch_feasible, Action, Pose, RobotParams, WorldError, WorldSpec};
use crate::mdp::FiniteMdp;
use std::collections::HashMap;

pub const DEFAULT_POSE_CAP: usize = 5_000_000;

/// Per-state payload: enough to evaluate any curriculum cumulant,
/// terminal value or termination condition on states.
#[derive(Clone, Debug)]
pub struct PoseAnnotation {
    pub pose: Pose,
    pub touch: bool,
}

/// The microworld as a finite MDP over its reachable poses, with the
/// canonical pose ordering and index lookup.
#[derive(Clone, Debug)]
pub struct PoseMdp {
    pub mdp: FiniteMdp<PoseAnnotation>,
    pub poses: Vec<Pose>,
    index: HashMap<Pose, usize>,
}

impl PoseMdp {
    pub fn state_of(&self, pose: Pose) -> Option<usize> {
        self.index.get(&pose).copied()
    }

    pub fn pose(&self, state: usize) -> Pose {
        self.poses[state]
    }

    pub fn touch(&self, state: usize) -> bool {
        self.mdp.annotation(state).touch
    }

    pub fn state_count(&self) -> usize {
        self.poses.len()
    }

    /// Deterministic successor state: every transition row is a point
    /// distribution.
    pub fn successor(&self, state: usize, action: usize) -> usize {
        self.mdp.successors(state, action)[0].0
    }
}

/// The closure of the start pose under all five actions, sorted into the
/// canonical (x, y, heading) order. Finite because positions live on the
/// integer lattice inside the bounds.
pub fn enumerate_poses(
    world: &WorldSpec,
    params: &RobotParams,
    cap: usize,
) -> Result<Vec<Pose>, WorldError> {
    let mut seen: HashMap<Pose, ()> = HashMap::new();
    let mut frontier = vec![world.start];
    seen.insert(world.start, ());
    while let Some(pose) = frontier.pop() {
        for action in Action::ALL {
            let (next, _) = step(world, pose, action, params);
            if !seen.contains_key(&next) {
                if seen.len() >= cap {
                    return Err(WorldError::TooLarge { cap });
                }
                seen.insert(next, ());
                frontier.push(next);
            }
        }
    }
    let mut poses: Vec<Pose> = seen.into_keys().collect();
    poses.sort_unstable();
    Ok(poses)
}

/// Builds the deterministic transition table over enumerated poses.
pub fn as_finite_mdp(
    world: &WorldSpec,
    params: &RobotParams,
    cap: usize,
) -> Result<PoseMdp, WorldError> {
    let poses = enumerate_poses(world, params, cap)?;
    let index: HashMap<Pose, usize> = poses.iter().enumerate().map(|(i, &p)| (p, i)).collect();
    let mut rows = Vec::with_capacity(poses.len() * Action::COUNT);
    let mut annotations = Vec::with_capacity(poses.len());
    for &pose in &poses {
        for action in Action::ALL {
            let (next, _) = step(world, pose, action, params);
            rows.push(vec![(index[&next], 1.0)]);
        }
        annotations.push(PoseAnnotation { pose, touch: touch_feasible(world, pose, params) });
    }
    let mdp = FiniteMdp::new(poses.len(), Action::COUNT, rows, annotations)
        .expect("enumerated transition table is well-formed by construction");
    Ok(PoseMdp { mdp, poses, index })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn world(text: &str) -> WorldSpec {
        super::super::file::load_world(text, &RobotParams::default()).unwrap()
    }

    #[test]
    fn single_cell_world_has_twelve_poses() {
        // Bounds leave exactly one free lattice cell: rotations only.
        let w = world("BOUNDS 0 0 2 2\nSTART 1 1 0\n");
        let poses = enumerate_poses(&w, &RobotParams::default(), 1000).unwrap();
        assert_eq!(poses.len(), 12);
        assert!(poses.iter().all(|p| (p.x, p.y) == (1, 1)));
    }

    #[test]
    fn corridor_pose_count_grows_linearly_with_length() {
        let params = RobotParams::default();
        let count = |len: i64| {
            let w = world(&format!("BOUNDS 0 0 {len} 2\nSTART 1 1 0\n"));
            enumerate_poses(&w, &params, 100_000).unwrap().len()
        };
        let c10 = count(10);
        let c20 = count(20);
        let c30 = count(30);
        assert_eq!(c20 - c10, c30 - c20);
        // Height-2 corridor: only pure-horizontal rolls fit, so x keeps
        // the start parity: x in {1,3,5,7,9}.
        assert_eq!(c10, 12 * 5);
    }

    #[test]
    fn cap_overflow_is_reported() {
        let w = world("BOUNDS 0 0 40 40\nSTART 20 20 0\n");
        assert!(matches!(
            enumerate_poses(&w, &RobotParams::default(), 100),
            Err(WorldError::TooLarge { cap: 100 })
        ));
    }

    #[test]
    fn transition_rows_are_point_distributions() {
        let w = world("BOUNDS 0 0 8 8\nSTART 4 4 0\n");
        let pm = as_finite_mdp(&w, &RobotParams::default(), 100_000).unwrap();
        for s in 0..pm.state_count() {
            for a in 0..Action::COUNT {
                let row = pm.mdp.successors(s, a);
                assert_eq!(row.len(), 1);
                assert_eq!(row[0].1, 1.0);
            }
        }
    }

    #[test]
    fn rotl_rows_permute_headings_cyclically() {
        let w = world("BOUNDS 0 0 8 8\nSTART 4 4 0\n");
        let pm = as_finite_mdp(&w, &RobotParams::default(), 100_000).unwrap();
        for s in 0..pm.state_count() {
            let pose = pm.pose(s);
            let next = pm.successor(s, Action::RotateLeft.index());
            assert_eq!(pm.pose(next), pose.rotated(-1));
            let back = pm.successor(next, Action::RotateRight.index());
            assert_eq!(back, s);
        }
    }

    #[test]
    fn blocked_forward_rows_are_self_loops() {
        let w = world("BOUNDS 0 0 8 8\nSTART 4 4 0\n");
        let params = RobotParams::default();
        let pm = as_finite_mdp(&w, &params, 100_000).unwrap();
        // Facing the east bound from distance 1: rolling is blocked.
        let s = pm.state_of(Pose::new(7, 4, 0)).unwrap();
        assert_eq!(pm.successor(s, Action::RollForward.index()), s);
    }

    #[test]
    fn no_reachable_pose_penetrates_a_barrier() {
        let w = world("BOUNDS 0 0 16 12\nSEG 8 0 8 5\nCIRC 12 8 1.5\nSTART 3 3 0\n");
        let params = RobotParams::default();
        let poses = enumerate_poses(&w, &params, 100_000).unwrap();
        for p in poses {
            assert!(w.disc_free(p.center(), params.radius), "pose {p:?} penetrates");
        }
    }

    #[test]
    fn touch_annotation_matches_ef_events() {
        let w = world("BOUNDS 0 0 10 10\nSTART 5 5 0\n");
        let params = RobotParams::default();
        let pm = as_finite_mdp(&w, &params, 100_000).unwrap();
        for s in 0..pm.state_count() {
            let (_, ev) = step(&w, pm.pose(s), Action::ExtendFinger, &params);
            assert_eq!(ev.contact, pm.touch(s));
        }
    }
}
