//! Planar geometry for the microworld: segment/circle barriers, disc
//! sweeps for collision, and ray casting for the camera and finger.

pub type Point = (f64, f64);

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Segment {
    pub a: Point,
    pub b: Point,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Circle {
    pub center: Point,
    pub radius: f64,
}

/// A ray hit: distance along the ray, the barrier's inward-facing unit
/// normal at the hit point, and the barrier-surface texture coordinate
/// (distance from the feature's midpoint, so mirrored geometry renders
/// mirrored pixels).
#[derive(Clone, Copy, Debug)]
pub struct Hit {
    pub t: f64,
    pub normal: Point,
    pub tex_u: f64,
}

fn dot(a: Point, b: Point) -> f64 {
    a.0 * b.0 + a.1 * b.1
}

fn sub(a: Point, b: Point) -> Point {
    (a.0 - b.0, a.1 - b.1)
}

fn norm(a: Point) -> f64 {
    dot(a, a).sqrt()
}

/// Distance from point `p` to the segment.
pub fn dist_point_segment(p: Point, seg: &Segment) -> f64 {
    let d = sub(seg.b, seg.a);
    let len_sq = dot(d, d);
    if len_sq == 0.0 {
        return norm(sub(p, seg.a));
    }
    let t = (dot(sub(p, seg.a), d) / len_sq).clamp(0.0, 1.0);
    norm(sub(p, (seg.a.0 + t * d.0, seg.a.1 + t * d.1)))
}

/// Distance between two segments (zero when they intersect).
pub fn dist_segment_segment(p: &Segment, q: &Segment) -> f64 {
    if segments_intersect(p, q) {
        return 0.0;
    }
    dist_point_segment(p.a, q)
        .min(dist_point_segment(p.b, q))
        .min(dist_point_segment(q.a, p))
        .min(dist_point_segment(q.b, p))
}

fn orient(a: Point, b: Point, c: Point) -> f64 {
    (b.0 - a.0) * (c.1 - a.1) - (b.1 - a.1) * (c.0 - a.0)
}

fn segments_intersect(p: &Segment, q: &Segment) -> bool {
    let d1 = orient(q.a, q.b, p.a);
    let d2 = orient(q.a, q.b, p.b);
    let d3 = orient(p.a, p.b, q.a);
    let d4 = orient(p.a, p.b, q.b);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    let on = |a: Point, b: Point, c: Point, d: f64| -> bool {
        d == 0.0
            && c.0 >= a.0.min(b.0)
            && c.0 <= a.0.max(b.0)
            && c.1 >= a.1.min(b.1)
            && c.1 <= a.1.max(b.1)
    };
    on(q.a, q.b, p.a, d1) || on(q.a, q.b, p.b, d2) || on(p.a, p.b, q.a, d3) || on(p.a, p.b, q.b, d4)
}

/// Whether a disc of the given radius, swept from `c0` to `c1`,
/// penetrates the segment barrier.
pub fn sweep_hits_segment(c0: Point, c1: Point, radius: f64, seg: &Segment) -> bool {
    dist_segment_segment(&Segment { a: c0, b: c1 }, seg) < radius
}

/// Whether the swept disc penetrates the circle barrier.
pub fn sweep_hits_circle(c0: Point, c1: Point, radius: f64, circle: &Circle) -> bool {
    dist_point_segment(circle.center, &Segment { a: c0, b: c1 }) < radius + circle.radius
}

/// First intersection of the ray `origin + t·dir` (t > 0, `dir` unit)
/// with the segment. Texture coordinate is |arc position − midpoint|.
pub fn ray_segment(origin: Point, dir: Point, seg: &Segment) -> Option<Hit> {
    let d = sub(seg.b, seg.a);
    let denom = dir.0 * (-d.1) - dir.1 * (-d.0);
    if denom.abs() < 1e-12 {
        return None; // parallel
    }
    let ao = sub(seg.a, origin);
    let t = (ao.0 * (-d.1) - ao.1 * (-d.0)) / denom;
    let s = (dir.0 * ao.1 - dir.1 * ao.0) / denom;
    if t <= 1e-9 || !(0.0..=1.0).contains(&s) {
        return None;
    }
    let len = norm(d);
    let mut normal = (-d.1 / len, d.0 / len);
    if dot(normal, dir) > 0.0 {
        normal = (-normal.0, -normal.1);
    }
    Some(Hit { t, normal, tex_u: (s * len - 0.5 * len).abs() })
}

/// First intersection of the ray with the circle (from outside). Texture
/// coordinate is arc length from the point nearest the world origin's
/// polar axis, measured symmetrically: R·|angle of the hit point|.
pub fn ray_circle(origin: Point, dir: Point, circle: &Circle) -> Option<Hit> {
    let oc = sub(origin, circle.center);
    let b = dot(oc, dir);
    let c = dot(oc, oc) - circle.radius * circle.radius;
    let disc = b * b - c;
    if disc < 0.0 {
        return None;
    }
    let t = -b - disc.sqrt();
    if t <= 1e-9 {
        return None;
    }
    let hit = (origin.0 + t * dir.0, origin.1 + t * dir.1);
    let rel = sub(hit, circle.center);
    let normal = (rel.0 / circle.radius, rel.1 / circle.radius);
    let angle = rel.1.atan2(rel.0);
    Some(Hit { t, normal, tex_u: circle.radius * angle.abs() })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_segment_distance() {
        let seg = Segment { a: (0.0, 0.0), b: (10.0, 0.0) };
        assert!((dist_point_segment((5.0, 3.0), &seg) - 3.0).abs() < 1e-12);
        assert!((dist_point_segment((-4.0, 3.0), &seg) - 5.0).abs() < 1e-12);
    }

    #[test]
    fn crossing_segments_have_zero_distance() {
        let p = Segment { a: (0.0, -1.0), b: (0.0, 1.0) };
        let q = Segment { a: (-1.0, 0.0), b: (1.0, 0.0) };
        assert_eq!(dist_segment_segment(&p, &q), 0.0);
    }

    #[test]
    fn sweep_blocked_by_wall_ahead() {
        let wall = Segment { a: (4.0, -5.0), b: (4.0, 5.0) };
        assert!(sweep_hits_segment((0.0, 0.0), (4.0, 0.0), 0.9, &wall));
        assert!(sweep_hits_segment((1.0, 0.0), (3.5, 0.0), 0.9, &wall));
        assert!(!sweep_hits_segment((0.0, 0.0), (3.0, 0.0), 0.9, &wall));
    }

    #[test]
    fn ray_hits_facing_wall_with_inward_normal() {
        let wall = Segment { a: (4.0, -5.0), b: (4.0, 5.0) };
        let hit = ray_segment((0.0, 0.0), (1.0, 0.0), &wall).unwrap();
        assert!((hit.t - 4.0).abs() < 1e-12);
        assert!((hit.normal.0 - -1.0).abs() < 1e-12);
        // Hit at (4,0) is the wall midpoint.
        assert!(hit.tex_u.abs() < 1e-12);
    }

    #[test]
    fn ray_misses_behind_and_parallel() {
        let wall = Segment { a: (4.0, -5.0), b: (4.0, 5.0) };
        assert!(ray_segment((0.0, 0.0), (-1.0, 0.0), &wall).is_none());
        let parallel = Segment { a: (0.0, 2.0), b: (10.0, 2.0) };
        assert!(ray_segment((0.0, 0.0), (1.0, 0.0), &parallel).is_none());
    }

    #[test]
    fn ray_circle_front_hit() {
        let c = Circle { center: (10.0, 0.0), radius: 2.0 };
        let hit = ray_circle((0.0, 0.0), (1.0, 0.0), &c).unwrap();
        assert!((hit.t - 8.0).abs() < 1e-12);
        assert!((hit.normal.0 - -1.0).abs() < 1e-12);
        assert!(ray_circle((0.0, 0.0), (-1.0, 0.0), &c).is_none());
    }

    #[test]
    fn mirrored_hits_share_texture_coordinates() {
        let wall = Segment { a: (4.0, -6.0), b: (4.0, 6.0) };
        let up = ray_segment((0.0, 0.0), (0.8, 0.6), &wall).unwrap();
        let down = ray_segment((0.0, 0.0), (0.8, -0.6), &wall).unwrap();
        assert!((up.tex_u - down.tex_u).abs() < 1e-12);
    }
}
