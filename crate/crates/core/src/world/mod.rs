//! The deterministic 2D robot microworld: lattice kinematics, touch and
//! camera sensing, world files, and export as a finite MDP.

pub mod enumerate;
pub mod file;
pub mod geom;
pub mod sense;

pub use enumerate::{as_finite_mdp, enumerate_poses, PoseAnnotation, PoseMdp, DEFAULT_POSE_CAP};
pub use file::load_world;
pub use sense::{make_pixel_permutation, sense, Observation, PixelPermutation};

use geom::{Circle, Point, Segment};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum WorldError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("invalid world:\n{}", .0.join("\n"))]
    Validation(Vec<String>),
    #[error("world too large for DP: pose closure exceeds {cap} states")]
    TooLarge { cap: usize },
}

/// The five primitive actions, in canonical index order. Tie-breaking
/// everywhere selects the lowest index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Action {
    RollForward = 0,
    RollBackward = 1,
    RotateLeft = 2,
    RotateRight = 3,
    ExtendFinger = 4,
}

impl Action {
    pub const ALL: [Action; 5] = [
        Action::RollForward,
        Action::RollBackward,
        Action::RotateLeft,
        Action::RotateRight,
        Action::ExtendFinger,
    ];
    pub const COUNT: usize = 5;

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<Action> {
        Action::ALL.get(i).copied()
    }

    pub fn abbrev(self) -> &'static str {
        match self {
            Action::RollForward => "rf",
            Action::RollBackward => "rb",
            Action::RotateLeft => "rotl",
            Action::RotateRight => "rotr",
            Action::ExtendFinger => "ef",
        }
    }

    pub fn parse(s: &str) -> Option<Action> {
        Action::ALL.into_iter().find(|a| a.abbrev() == s)
    }
}

/// Robot configuration: lattice position plus one of twelve headings
/// (30° increments, increasing clockwise).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Pose {
    pub x: i64,
    pub y: i64,
    pub heading: u8,
}

impl Pose {
    pub fn new(x: i64, y: i64, heading: u8) -> Self {
        debug_assert!(heading < 12);
        Self { x, y, heading }
    }

    /// Facing direction as a unit vector.
    pub fn direction(&self) -> Point {
        let theta = heading_angle(self.heading);
        (theta.cos(), theta.sin())
    }

    pub fn center(&self) -> Point {
        (self.x as f64, self.y as f64)
    }

    pub fn rotated(&self, steps: i8) -> Pose {
        Pose { heading: ((self.heading as i16 + steps as i16).rem_euclid(12)) as u8, ..*self }
    }
}

/// Heading h points at angle −30°·h: h = 0 faces +x and rotating right
/// (clockwise, h+1) sweeps toward −y, matching a clock laid flat on the
/// map with 12 o'clock ahead.
pub fn heading_angle(heading: u8) -> f64 {
    -(heading as f64) * 30.0_f64.to_radians()
}

/// Lattice displacement for a forward roll at each heading:
/// round(2·cosθ, 2·sinθ). The twelve vectors are pairwise distinct.
pub const DISPLACEMENTS: [(i64, i64); 12] = [
    (2, 0),
    (2, -1),
    (1, -2),
    (0, -2),
    (-1, -2),
    (-2, -1),
    (-2, 0),
    (-2, 1),
    (-1, 2),
    (0, 2),
    (1, 2),
    (2, 1),
];

#[derive(Clone, Copy, Debug)]
pub struct RobotParams {
    /// Disc radius in lattice units.
    pub radius: f64,
    /// Number of camera rays across the field of view.
    pub camera_rays: usize,
    /// Field of view in degrees (fixed robot hardware).
    pub fov_degrees: f64,
    /// Rays hitting farther than this sample the floor instead.
    pub far_distance: f64,
    /// Maximum angle between heading and the inward barrier normal for a
    /// touch, in degrees.
    pub touch_cone_degrees: f64,
    /// How far beyond the disc edge the finger reaches.
    pub finger_reach: f64,
    /// Slack inside the disc edge still counted as contact.
    pub contact_tolerance: f64,
}

impl Default for RobotParams {
    fn default() -> Self {
        Self {
            radius: 0.9,
            camera_rays: 32,
            fov_degrees: 30.0,
            far_distance: 8.0,
            touch_cone_degrees: 10.0,
            finger_reach: 1.0,
            contact_tolerance: 0.25,
        }
    }
}

/// Contact events produced by a step; delivered to the agent in the
/// *following* observation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Events {
    pub contact: bool,
}

/// Static world geometry plus the start pose and named audit poses.
#[derive(Clone, Debug)]
pub struct WorldSpec {
    pub bounds: (i64, i64, i64, i64),
    pub segments: Vec<(i64, i64, i64, i64)>,
    pub circles: Vec<(i64, i64, f64)>,
    pub start: Pose,
    pub annotations: Vec<(String, Pose)>,
}

impl WorldSpec {
    /// All barrier segments: the four bounds edges plus interior walls.
    pub fn barrier_segments(&self) -> Vec<Segment> {
        let (x0, y0, x1, y1) = self.bounds;
        let (x0, y0, x1, y1) = (x0 as f64, y0 as f64, x1 as f64, y1 as f64);
        let mut out = vec![
            Segment { a: (x0, y0), b: (x1, y0) },
            Segment { a: (x1, y0), b: (x1, y1) },
            Segment { a: (x1, y1), b: (x0, y1) },
            Segment { a: (x0, y1), b: (x0, y0) },
        ];
        out.extend(self.segments.iter().map(|&(ax, ay, bx, by)| Segment {
            a: (ax as f64, ay as f64),
            b: (bx as f64, by as f64),
        }));
        out
    }

    pub fn barrier_circles(&self) -> Vec<Circle> {
        self.circles
            .iter()
            .map(|&(cx, cy, r)| Circle { center: (cx as f64, cy as f64), radius: r })
            .collect()
    }

    /// Whether a disc of radius `r` centered at `p` is free of barriers
    /// and inside the bounds.
    pub fn disc_free(&self, p: Point, r: f64) -> bool {
        let (x0, y0, x1, y1) = self.bounds;
        if p.0 <= x0 as f64 || p.0 >= x1 as f64 || p.1 <= y0 as f64 || p.1 >= y1 as f64 {
            return false;
        }
        for seg in self.barrier_segments() {
            if geom::dist_point_segment(p, &seg) < r {
                return false;
            }
        }
        for c in self.barrier_circles() {
            let d = ((p.0 - c.center.0).powi(2) + (p.1 - c.center.1).powi(2)).sqrt();
            if d < r + c.radius {
                return false;
            }
        }
        true
    }

    /// Whether the disc swept from `c0` to `c1` stays clear of barriers.
    pub fn sweep_free(&self, c0: Point, c1: Point, r: f64) -> bool {
        for seg in self.barrier_segments() {
            if geom::sweep_hits_segment(c0, c1, r, &seg) {
                return false;
            }
        }
        for c in self.barrier_circles() {
            if geom::sweep_hits_circle(c0, c1, r, &c) {
                return false;
            }
        }
        true
    }

    /// Nearest barrier hit along a ray.
    pub fn raycast(&self, origin: Point, dir: Point) -> Option<geom::Hit> {
        let mut best: Option<geom::Hit> = None;
        for seg in self.barrier_segments() {
            if let Some(h) = geom::ray_segment(origin, dir, &seg) {
                if best.as_ref().map_or(true, |b| h.t < b.t) {
                    best = Some(h);
                }
            }
        }
        for c in self.barrier_circles() {
            if let Some(h) = geom::ray_circle(origin, dir, &c) {
                if best.as_ref().map_or(true, |b| h.t < b.t) {
                    best = Some(h);
                }
            }
        }
        best
    }
}

/// Executes one primitive action. Rotations always succeed; rolls are
/// blocked (pose unchanged) when the swept disc would penetrate a
/// barrier; `ef` never moves the robot and reports the contact event.
pub fn step(world: &WorldSpec, pose: Pose, action: Action, params: &RobotParams) -> (Pose, Events) {
    match action {
        Action::RotateLeft => (pose.rotated(-1), Events::default()),
        Action::RotateRight => (pose.rotated(1), Events::default()),
        Action::ExtendFinger => {
            (pose, Events { contact: touch_feasible(world, pose, params) })
        }
        Action::RollForward | Action::RollBackward => {
            let (dx, dy) = DISPLACEMENTS[pose.heading as usize];
            let (dx, dy) = if action == Action::RollBackward { (-dx, -dy) } else { (dx, dy) };
            let target = Pose { x: pose.x + dx, y: pose.y + dy, ..pose };
            if world.sweep_free(pose.center(), target.center(), params.radius) {
                (target, Events::default())
            } else {
                (pose, Events::default())
            }
        }
    }
}

/// Whether extending the finger from this pose would touch a barrier:
/// the nearest barrier along the heading must lie within
/// [radius − contact_tolerance, radius + finger_reach] of the center and
/// the heading must be within the touch cone of the inward normal.
pub fn touch_feasible(world: &WorldSpec, pose: Pose, params: &RobotParams) -> bool {
    let dir = pose.direction();
    let Some(hit) = world.raycast(pose.center(), dir) else {
        return false;
    };
    let lo = params.radius - params.contact_tolerance;
    let hi = params.radius + params.finger_reach;
    if hit.t < lo || hit.t > hi {
        return false;
    }
    // Angle between the heading and the inward normal's opposite.
    let cos_angle = -(dir.0 * hit.normal.0 + dir.1 * hit.normal.1);
    cos_angle >= params.touch_cone_degrees.to_radians().cos() - 1e-12
}

#[cfg(test)]
mod tests {
    use super::*;

    fn open_world(size: i64) -> WorldSpec {
        WorldSpec {
            bounds: (0, 0, size, size),
            segments: vec![],
            circles: vec![],
            start: Pose::new(size / 2, size / 2, 0),
            annotations: vec![],
        }
    }

    #[test]
    fn displacements_are_pairwise_distinct_and_negate_exactly() {
        for i in 0..12 {
            for j in (i + 1)..12 {
                assert_ne!(DISPLACEMENTS[i], DISPLACEMENTS[j]);
            }
            let (dx, dy) = DISPLACEMENTS[i];
            let (ox, oy) = DISPLACEMENTS[(i + 6) % 12];
            assert_eq!((dx, dy), (-ox, -oy), "heading {i} vs opposite");
        }
    }

    #[test]
    fn twelve_left_rotations_return_home() {
        let world = open_world(20);
        let params = RobotParams::default();
        let mut pose = Pose::new(10, 10, 3);
        for _ in 0..12 {
            pose = step(&world, pose, Action::RotateLeft, &params).0;
        }
        assert_eq!(pose, Pose::new(10, 10, 3));
    }

    #[test]
    fn rotl_then_rotr_is_identity() {
        let world = open_world(20);
        let params = RobotParams::default();
        let pose = Pose::new(10, 10, 7);
        let (p1, _) = step(&world, pose, Action::RotateLeft, &params);
        let (p2, _) = step(&world, p1, Action::RotateRight, &params);
        assert_eq!(p2, pose);
    }

    #[test]
    fn forward_then_backward_returns_home_in_open_space() {
        let world = open_world(30);
        let params = RobotParams::default();
        for h in 0..12 {
            let pose = Pose::new(15, 15, h);
            let (p1, _) = step(&world, pose, Action::RollForward, &params);
            assert_ne!(p1, pose, "heading {h} should move in the open");
            let (p2, _) = step(&world, p1, Action::RollBackward, &params);
            assert_eq!(p2, pose, "heading {h}");
        }
    }

    #[test]
    fn roll_into_wall_is_blocked() {
        let world = open_world(20);
        let params = RobotParams::default();
        // Facing the x = 20 bound from distance 2: sweep would end on it.
        let pose = Pose::new(18, 10, 0);
        let (p, _) = step(&world, pose, Action::RollForward, &params);
        assert_eq!(p, pose);
        // From distance 3 the roll ends at distance 1: edge clearance 0.1.
        let pose = Pose::new(17, 10, 0);
        let (p, _) = step(&world, pose, Action::RollForward, &params);
        assert_eq!(p, Pose::new(19, 10, 0));
    }

    #[test]
    fn touch_needs_flush_contact_and_the_cone() {
        let world = open_world(20);
        let params = RobotParams::default();
        // Flush against the x = 20 bound, facing it squarely.
        assert!(touch_feasible(&world, Pose::new(19, 10, 0), &params));
        // Rotated 30°: exceeds the 10° cone.
        assert!(!touch_feasible(&world, Pose::new(19, 10, 1), &params));
        assert!(!touch_feasible(&world, Pose::new(19, 10, 11), &params));
        // Middle of the room: nothing within reach.
        assert!(!touch_feasible(&world, Pose::new(10, 10, 0), &params));
        // Distance 2 with default finger reach 1.0: just out of reach.
        assert!(!touch_feasible(&world, Pose::new(18, 10, 0), &params));
    }

    #[test]
    fn ef_reports_contact_and_never_moves() {
        let world = open_world(20);
        let params = RobotParams::default();
        let pose = Pose::new(19, 10, 0);
        let (p, ev) = step(&world, pose, Action::ExtendFinger, &params);
        assert_eq!(p, pose);
        assert!(ev.contact);
        let pose = Pose::new(10, 10, 0);
        let (p, ev) = step(&world, pose, Action::ExtendFinger, &params);
        assert_eq!(p, pose);
        assert!(!ev.contact);
    }

    #[test]
    fn circles_block_and_are_touchable() {
        let mut world = open_world(30);
        world.circles.push((15, 15, 2.0));
        let params = RobotParams::default();
        // Facing the circle from the left at surface distance 3:
        // rolls to surface distance 1.
        let pose = Pose::new(10, 15, 0);
        let (p, _) = step(&world, pose, Action::RollForward, &params);
        assert_eq!(p, Pose::new(12, 15, 0));
        // Surface distance 1, square on: touchable.
        assert!(touch_feasible(&world, Pose::new(12, 15, 0), &params));
        // Rolling on from there would penetrate: blocked.
        let (p2, _) = step(&world, p, Action::RollForward, &params);
        assert_eq!(p2, p);
    }
}
