//! Camera sensing: a 1D scanline of rays across the field of view. Walls
//! carry a high-frequency stripe texture parameterized by arc length,
//! the floor a low-frequency one, so contact, near-wall and open poses
//! render distinguishably.

use super::{heading_angle, Events, Pose, RobotParams, WorldSpec};
use crate::rng::RngStreams;
use rand::Rng;

/// What the agent receives each step: the permuted pixel row plus the
/// touch bit, which reflects contact events of the *previous* step only.
#[derive(Clone, Debug, PartialEq)]
pub struct Observation {
    pub pixels: Vec<f64>,
    pub touch: bool,
}

impl Observation {
    pub fn len(&self) -> usize {
        self.pixels.len() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }
}

/// A seeded bijection over pixel indices, hiding the camera's physical
/// layout from the agent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PixelPermutation {
    perm: Vec<usize>,
    seed: u64,
}

impl PixelPermutation {
    pub fn identity(n: usize) -> Self {
        Self { perm: (0..n).collect(), seed: 0 }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn len(&self) -> usize {
        self.perm.len()
    }

    pub fn is_empty(&self) -> bool {
        self.perm.is_empty()
    }

    /// Slot `i` of the observation reads physical ray `perm[i]`.
    pub fn apply(&self, raw: &[f64]) -> Vec<f64> {
        debug_assert_eq!(raw.len(), self.perm.len());
        self.perm.iter().map(|&j| raw[j]).collect()
    }

    pub fn inverse(&self) -> PixelPermutation {
        let mut inv = vec![0usize; self.perm.len()];
        for (i, &j) in self.perm.iter().enumerate() {
            inv[j] = i;
        }
        PixelPermutation { perm: inv, seed: self.seed }
    }
}

/// Deterministic Fisher–Yates shuffle from the seed.
pub fn make_pixel_permutation(seed: u64, n: usize) -> PixelPermutation {
    let mut perm: Vec<usize> = (0..n).collect();
    let mut rng = RngStreams::new(seed).labeled("pixel-permutation");
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        perm.swap(i, j);
    }
    PixelPermutation { perm, seed }
}

fn square_wave(u: f64, period: f64) -> f64 {
    if (u / period).rem_euclid(1.0) < 0.5 {
        1.0
    } else {
        -1.0
    }
}

/// Wall stripe texture: period 1 in arc length.
pub fn wall_texture(u: f64) -> f64 {
    0.5 * (1.0 + square_wave(u, 1.0))
}

/// Floor stripe texture: period 6 in radial distance from the world
/// origin (rotation- and mirror-invariant).
pub fn floor_texture(p: (f64, f64)) -> f64 {
    0.5 * (1.0 + square_wave((p.0 * p.0 + p.1 * p.1).sqrt(), 6.0))
}

/// Raw (pre-permutation) pixel row: `camera_rays` rays evenly spanning
/// the field of view about the heading, pixel 0 leftmost.
pub fn render_raw(world: &WorldSpec, pose: Pose, params: &RobotParams) -> Vec<f64> {
    let n = params.camera_rays;
    let fov = params.fov_degrees.to_radians();
    let theta = heading_angle(pose.heading);
    let origin = pose.center();
    (0..n)
        .map(|i| {
            // Offsets symmetric about the heading; positive = left (CCW).
            let offset = fov * (0.5 - (i as f64 + 0.5) / n as f64);
            let angle = theta + offset;
            let dir = (angle.cos(), angle.sin());
            match world.raycast(origin, dir) {
                Some(hit) if hit.t <= params.far_distance => wall_texture(hit.tex_u),
                _ => {
                    let p = (
                        origin.0 + params.far_distance * dir.0,
                        origin.1 + params.far_distance * dir.1,
                    );
                    floor_texture(p)
                }
            }
        })
        .collect()
}

/// Full observation: rendered pixels run through the permutation, plus
/// the previous step's contact event.
pub fn sense(
    world: &WorldSpec,
    pose: Pose,
    events_prev: Events,
    permutation: &PixelPermutation,
    params: &RobotParams,
) -> Observation {
    let raw = render_raw(world, pose, params);
    Observation { pixels: permutation.apply(&raw), touch: events_prev.contact }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_room() -> WorldSpec {
        // Symmetric about the x axis through the origin.
        WorldSpec {
            bounds: (-10, -6, 10, 6),
            segments: vec![],
            circles: vec![],
            start: Pose::new(0, 0, 0),
            annotations: vec![],
        }
    }

    #[test]
    fn permutation_is_deterministic_and_invertible() {
        let p1 = make_pixel_permutation(123, 32);
        let p2 = make_pixel_permutation(123, 32);
        assert_eq!(p1, p2);
        let p3 = make_pixel_permutation(124, 32);
        assert_ne!(p1, p3);
        // n = 1 is the identity.
        assert_eq!(make_pixel_permutation(9, 1).perm, vec![0]);
        // Applying a permutation then its inverse restores the input.
        let raw: Vec<f64> = (0..32).map(|i| i as f64).collect();
        let shuffled = p1.apply(&raw);
        assert_ne!(shuffled, raw);
        assert_eq!(p1.inverse().apply(&shuffled), raw);
    }

    #[test]
    fn mirrored_pose_renders_the_reversed_pixel_row() {
        let world = square_room();
        let params = RobotParams::default();
        // Mirror across the x axis: (x, y, h) -> (x, -y, 12-h).
        let pose = Pose::new(3, 2, 1);
        let mirrored = Pose::new(3, -2, 11);
        let a = render_raw(&world, pose, &params);
        let b = render_raw(&world, mirrored, &params);
        let reversed: Vec<f64> = b.into_iter().rev().collect();
        assert_eq!(a, reversed);
    }

    #[test]
    fn contact_pose_and_one_step_back_render_differently() {
        let world = square_room();
        let params = RobotParams::default();
        // Flush against the east bound vs two units back.
        let contact = Pose::new(9, 0, 0);
        let back = Pose::new(7, 0, 0);
        assert_ne!(
            render_raw(&world, contact, &params),
            render_raw(&world, back, &params)
        );
    }

    #[test]
    fn touch_bit_reflects_previous_events_only() {
        let world = square_room();
        let params = RobotParams::default();
        let perm = make_pixel_permutation(7, params.camera_rays);
        let pose = Pose::new(9, 0, 0);
        let o1 = sense(&world, pose, Events { contact: true }, &perm, &params);
        let o2 = sense(&world, pose, Events::default(), &perm, &params);
        assert!(o1.touch);
        assert!(!o2.touch);
        assert_eq!(o1.pixels, o2.pixels);
    }
}
