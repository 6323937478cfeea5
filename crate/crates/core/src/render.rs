//! Rendering of forecast values: clock-ring layouts around a pose and
//! per-position heatmaps, emitted as text P2 graymaps plus aligned text
//! tables. Pure projections of the values passed in.

/// A rendered image plus its aligned text companion.
#[derive(Clone, Debug, PartialEq)]
pub struct Rendering {
    pub pgm: String,
    pub text: String,
}

fn pgm_header(width: usize, height: usize, scale: f64) -> String {
    format!("P2\n# scale max={scale:.6}\n{width} {height}\n255\n")
}

fn gray(v: f64, scale: f64) -> u8 {
    if scale <= 0.0 {
        0
    } else {
        ((v / scale).clamp(0.0, 1.0) * 255.0).round() as u8
    }
}

/// Renders twelve slot values laid out like a clock: slot 0 at twelve
/// o'clock (the facing direction), slots increasing clockwise. `scale`
/// of `None` normalizes to the maximum value in the ring.
pub fn render_ring(values: &[f64; 12], scale: Option<f64>) -> Rendering {
    const SIZE: usize = 96;
    const PATCH: i64 = 7; // half-width of each slot patch
    const RADIUS: f64 = 34.0;
    let max = scale.unwrap_or_else(|| values.iter().cloned().fold(0.0, f64::max));
    let mut img = vec![0u8; SIZE * SIZE];
    let center = (SIZE / 2) as f64;
    for (slot, &v) in values.iter().enumerate() {
        let angle = (slot as f64) * 30.0_f64.to_radians();
        let cx = (center + RADIUS * angle.sin()).round() as i64;
        let cy = (center - RADIUS * angle.cos()).round() as i64;
        let g = gray(v, max);
        for dy in -PATCH..=PATCH {
            for dx in -PATCH..=PATCH {
                let (x, y) = (cx + dx, cy + dy);
                if (0..SIZE as i64).contains(&x) && (0..SIZE as i64).contains(&y) {
                    img[y as usize * SIZE + x as usize] = g;
                }
            }
        }
    }
    let mut pgm = pgm_header(SIZE, SIZE, max);
    for row in img.chunks(SIZE) {
        let line: Vec<String> = row.iter().map(|g| g.to_string()).collect();
        pgm.push_str(&line.join(" "));
        pgm.push('\n');
    }
    let mut text = String::from("slot  value\n");
    for (slot, &v) in values.iter().enumerate() {
        text.push_str(&format!("{slot:>4}  {v:.6}\n"));
    }
    text.push_str(&format!("scale max={max:.6}\n"));
    Rendering { pgm, text }
}

/// Renders a per-(x, y) heatmap over the world footprint: each cell is
/// the maximum value over the headings present at that position.
/// `cells` holds ((x, y), value) pairs; bounds give the footprint.
pub fn render_heatmap(bounds: (i64, i64, i64, i64), cells: &[((i64, i64), f64)]) -> Rendering {
    let (x0, y0, x1, y1) = bounds;
    let width = (x1 - x0 + 1) as usize;
    let height = (y1 - y0 + 1) as usize;
    let mut grid = vec![f64::NEG_INFINITY; width * height];
    for &((x, y), v) in cells {
        if x < x0 || x > x1 || y < y0 || y > y1 {
            continue;
        }
        let idx = (y - y0) as usize * width + (x - x0) as usize;
        if v > grid[idx] {
            grid[idx] = v;
        }
    }
    let max = grid.iter().cloned().filter(|v| v.is_finite()).fold(0.0, f64::max);
    let mut pgm = pgm_header(width, height, max);
    let mut text = String::from("x  y  value\n");
    // Image rows top-down: y = y1 first.
    for row in 0..height {
        let y = y1 - row as i64;
        let line: Vec<String> = (0..width)
            .map(|col| {
                let v = grid[(y - y0) as usize * width + col];
                if v.is_finite() { gray(v, max) } else { 0 }.to_string()
            })
            .collect();
        pgm.push_str(&line.join(" "));
        pgm.push('\n');
    }
    let mut sorted: Vec<_> = cells.to_vec();
    sorted.sort_by(|a, b| a.0.cmp(&b.0));
    for ((x, y), v) in sorted {
        text.push_str(&format!("{x}  {y}  {v:.6}\n"));
    }
    text.push_str(&format!("scale max={max:.6}\n"));
    Rendering { pgm, text }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rendering_is_idempotent() {
        let values = [0.0, 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0];
        assert_eq!(render_ring(&values, None), render_ring(&values, None));
    }

    #[test]
    fn all_zero_ring_is_uniform_black() {
        let r = render_ring(&[0.0; 12], None);
        let body = r.pgm.lines().skip(4).collect::<Vec<_>>().join(" ");
        assert!(body.split_whitespace().all(|t| t == "0"));
    }

    #[test]
    fn rotating_the_values_rotates_the_text_table() {
        let values = [1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0, 9.0, 10.0, 11.0, 12.0];
        let mut rotated = values;
        rotated.rotate_left(1);
        let a = render_ring(&values, Some(12.0));
        let b = render_ring(&rotated, Some(12.0));
        let val = |r: &Rendering, slot: usize| r.text.lines().nth(slot + 1).unwrap().to_string();
        // Slot 1 of the original equals slot 0 of the rotated ring.
        assert_eq!(val(&a, 1).split_whitespace().last(), val(&b, 0).split_whitespace().last());
    }

    #[test]
    fn heatmap_dimensions_match_bounds() {
        let r = render_heatmap((0, 0, 4, 2), &[((1, 1), 3.0), ((4, 2), 6.0)]);
        let mut lines = r.pgm.lines();
        assert_eq!(lines.next(), Some("P2"));
        assert!(lines.next().unwrap().starts_with("# scale max=6.0"));
        assert_eq!(lines.next(), Some("5 3"));
        assert_eq!(lines.next(), Some("255"));
        assert_eq!(lines.count(), 3);
    }
}
