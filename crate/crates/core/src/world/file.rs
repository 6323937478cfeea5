//! Line-oriented world file format:
//!
//! ```text
//! # comment
//! BOUNDS x0 y0 x1 y1
//! SEG x1 y1 x2 y2
//! CIRC cx cy r
//! START x y heading
//! ANNOT name x y heading
//! ```
//!
//! All coordinates are integers (lattice units) except the circle
//! radius.

use super::{Pose, RobotParams, WorldError, WorldSpec};

pub fn load_world(text: &str, params: &RobotParams) -> Result<WorldSpec, WorldError> {
    let mut bounds: Option<((i64, i64, i64, i64), usize)> = None;
    let mut start: Option<(Pose, usize)> = None;
    let mut segments: Vec<((i64, i64, i64, i64), usize)> = Vec::new();
    let mut circles: Vec<((i64, i64, f64), usize)> = Vec::new();
    let mut annotations: Vec<(String, Pose, usize)> = Vec::new();

    for (idx, raw_line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw_line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tok = line.split_whitespace();
        let directive = tok.next().unwrap();
        let rest: Vec<&str> = tok.collect();
        let parse_int = |s: &str, what: &str| -> Result<i64, WorldError> {
            s.parse::<i64>().map_err(|_| WorldError::Parse {
                line: line_no,
                msg: format!("{what} '{s}' is not an integer"),
            })
        };
        let parse_real = |s: &str, what: &str| -> Result<f64, WorldError> {
            s.parse::<f64>().map_err(|_| WorldError::Parse {
                line: line_no,
                msg: format!("{what} '{s}' is not a number"),
            })
        };
        let arity = |n: usize| -> Result<(), WorldError> {
            if rest.len() != n {
                Err(WorldError::Parse {
                    line: line_no,
                    msg: format!("{directive} expects {n} arguments, got {}", rest.len()),
                })
            } else {
                Ok(())
            }
        };
        match directive {
            "BOUNDS" => {
                arity(4)?;
                if bounds.is_some() {
                    return Err(WorldError::Parse { line: line_no, msg: "duplicate BOUNDS".into() });
                }
                bounds = Some((
                    (
                        parse_int(rest[0], "x0")?,
                        parse_int(rest[1], "y0")?,
                        parse_int(rest[2], "x1")?,
                        parse_int(rest[3], "y1")?,
                    ),
                    line_no,
                ));
            }
            "SEG" => {
                arity(4)?;
                segments.push((
                    (
                        parse_int(rest[0], "x1")?,
                        parse_int(rest[1], "y1")?,
                        parse_int(rest[2], "x2")?,
                        parse_int(rest[3], "y2")?,
                    ),
                    line_no,
                ));
            }
            "CIRC" => {
                arity(3)?;
                circles.push((
                    (
                        parse_int(rest[0], "cx")?,
                        parse_int(rest[1], "cy")?,
                        parse_real(rest[2], "radius")?,
                    ),
                    line_no,
                ));
            }
            "START" => {
                arity(3)?;
                if start.is_some() {
                    return Err(WorldError::Parse { line: line_no, msg: "duplicate START".into() });
                }
                let h = parse_int(rest[2], "heading")?;
                if !(0..12).contains(&h) {
                    return Err(WorldError::Parse {
                        line: line_no,
                        msg: format!("heading {h} outside 0..11"),
                    });
                }
                start = Some((
                    Pose::new(parse_int(rest[0], "x")?, parse_int(rest[1], "y")?, h as u8),
                    line_no,
                ));
            }
            "ANNOT" => {
                arity(4)?;
                let h = parse_int(rest[3], "heading")?;
                if !(0..12).contains(&h) {
                    return Err(WorldError::Parse {
                        line: line_no,
                        msg: format!("heading {h} outside 0..11"),
                    });
                }
                annotations.push((
                    rest[0].to_string(),
                    Pose::new(parse_int(rest[1], "x")?, parse_int(rest[2], "y")?, h as u8),
                    line_no,
                ));
            }
            other => {
                return Err(WorldError::Parse {
                    line: line_no,
                    msg: format!("unknown directive '{other}'"),
                });
            }
        }
    }

    let (bounds, _) = bounds.ok_or(WorldError::Parse { line: 0, msg: "missing BOUNDS".into() })?;
    let (start, start_line) =
        start.ok_or(WorldError::Parse { line: 0, msg: "missing START".into() })?;

    // Validation: collect every offender.
    let mut problems: Vec<String> = Vec::new();
    let (x0, y0, x1, y1) = bounds;
    if x0 >= x1 || y0 >= y1 {
        problems.push(format!("BOUNDS {x0} {y0} {x1} {y1} is not a positive-area rectangle"));
    }
    let inside = |x: i64, y: i64| x >= x0 && x <= x1 && y >= y0 && y <= y1;
    for &((ax, ay, bx, by), line) in &segments {
        if (ax, ay) == (bx, by) {
            problems.push(format!("line {line}: zero-length segment"));
        }
        if !inside(ax, ay) || !inside(bx, by) {
            problems.push(format!("line {line}: segment endpoint outside bounds"));
        }
    }
    for &((cx, cy, r), line) in &circles {
        if r <= 0.0 {
            problems.push(format!("line {line}: circle radius {r} must be positive"));
        }
        let rc = r.ceil() as i64;
        if !inside(cx - rc, cy - rc) || !inside(cx + rc, cy + rc) {
            problems.push(format!("line {line}: circle extends outside bounds"));
        }
    }
    let world = WorldSpec {
        bounds,
        segments: segments.iter().map(|&(s, _)| s).collect(),
        circles: circles.iter().map(|&(c, _)| c).collect(),
        start,
        annotations: annotations.iter().map(|(n, p, _)| (n.clone(), *p)).collect(),
    };
    if problems.is_empty() {
        if !world.disc_free(start.center(), params.radius) {
            problems.push(format!("line {start_line}: START pose collides with a barrier"));
        }
        for (name, pose, line) in &annotations {
            if !world.disc_free(pose.center(), params.radius) {
                problems.push(format!("line {line}: ANNOT {name} pose collides with a barrier"));
            }
        }
    }
    if !problems.is_empty() {
        return Err(WorldError::Validation(problems));
    }
    Ok(world)
}

/// Canonical single-line rendering of the world, used for digests: the
/// same geometry always hashes identically regardless of file formatting.
pub fn canonical_text(world: &WorldSpec) -> String {
    let mut out = String::new();
    let (x0, y0, x1, y1) = world.bounds;
    out.push_str(&format!("BOUNDS {x0} {y0} {x1} {y1}\n"));
    let mut segs = world.segments.clone();
    segs.sort_unstable();
    for (ax, ay, bx, by) in segs {
        out.push_str(&format!("SEG {ax} {ay} {bx} {by}\n"));
    }
    let mut circs = world.circles.clone();
    circs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    for (cx, cy, r) in circs {
        out.push_str(&format!("CIRC {cx} {cy} {r}\n"));
    }
    let s = world.start;
    out.push_str(&format!("START {} {} {}\n", s.x, s.y, s.heading));
    let mut annots = world.annotations.clone();
    annots.sort();
    for (name, p) in annots {
        out.push_str(&format!("ANNOT {name} {} {} {}\n", p.x, p.y, p.heading));
    }
    out
}

/// Short hex digest of the canonical world text.
pub fn world_digest(world: &WorldSpec) -> String {
    use sha2::{Digest, Sha256};
    let mut hasher = Sha256::new();
    hasher.update(canonical_text(world).as_bytes());
    let digest = hasher.finalize();
    digest[..8].iter().map(|b| format!("{b:02x}")).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_world_parses() {
        let text = "# open space\nBOUNDS 0 0 10 10\nSTART 5 5 0\n";
        let world = load_world(text, &RobotParams::default()).unwrap();
        assert_eq!(world.bounds, (0, 0, 10, 10));
        assert_eq!(world.start, Pose::new(5, 5, 0));
        assert!(world.segments.is_empty());
    }

    #[test]
    fn segment_outside_bounds_names_the_line() {
        let text = "BOUNDS 0 0 10 10\nSEG 2 2 14 2\nSTART 5 5 0\n";
        match load_world(text, &RobotParams::default()) {
            Err(WorldError::Validation(problems)) => {
                assert!(problems[0].contains("line 2"), "{problems:?}");
            }
            other => panic!("expected validation error, got {other:?}"),
        }
    }

    #[test]
    fn bad_token_reports_parse_error_with_line() {
        let text = "BOUNDS 0 0 10 10\nSTART 5 five 0\n";
        match load_world(text, &RobotParams::default()) {
            Err(WorldError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn colliding_start_is_rejected() {
        let text = "BOUNDS 0 0 10 10\nSEG 5 0 5 10\nSTART 5 5 0\n";
        assert!(matches!(
            load_world(text, &RobotParams::default()),
            Err(WorldError::Validation(_))
        ));
    }

    #[test]
    fn annotations_parse_and_digest_is_format_independent() {
        let a = "BOUNDS 0 0 10 10\nSTART 5 5 0\nANNOT door 3 3 6\n";
        let b = "# different formatting\nBOUNDS 0 0 10 10   # bounds\n\nANNOT door 3 3 6\nSTART 5 5 0\n";
        let params = RobotParams::default();
        let wa = load_world(a, &params).unwrap();
        let wb = load_world(b, &params).unwrap();
        assert_eq!(wa.annotations, vec![("door".to_string(), Pose::new(3, 3, 6))]);
        assert_eq!(world_digest(&wa), world_digest(&wb));
        let c = "BOUNDS 0 0 10 11\nSTART 5 5 0\nANNOT door 3 3 6\n";
        let wc = load_world(c, &params).unwrap();
        assert_ne!(world_digest(&wa), world_digest(&wc));
    }
}
