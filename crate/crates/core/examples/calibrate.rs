//! Calibration probe: materializes the standard curriculum on a world
//! with exact DP options and prints value distributions, alias zone
//! sizes and the doorway classification, so thresholds and geometry can
//! be tuned against real numbers.

use forecast_forge_core::curriculum::registry::ids;
use forecast_forge_core::curriculum::{
    build_standard_curriculum, materialize, CurriculumConfig, OptionTraining,
};
use forecast_forge_core::rng::RngStreams;
use forecast_forge_core::world::file::load_world;
use forecast_forge_core::world::RobotParams;

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let world_path = args.get(1).map(String::as_str).unwrap_or("worlds/tworoom.world");
    let config_path = args.get(2).map(String::as_str);
    let text = std::fs::read_to_string(world_path).expect("world file");
    let params = RobotParams::default();
    let world = load_world(&text, &params).expect("valid world");

    let mut config = match config_path {
        Some(p) => CurriculumConfig::parse(&std::fs::read_to_string(p).expect("config file"))
            .expect("valid config"),
        None => CurriculumConfig::default(),
    };
    config.options_training = OptionTraining::Dp;
    let registry = build_standard_curriculum(config).expect("registry");
    let streams = RngStreams::new(1);

    let mat = match materialize(&registry, world, params, &streams, 11) {
        Ok(m) => m,
        Err(e) => {
            eprintln!("MATERIALIZATION FAILED: {e}");
            std::process::exit(1);
        }
    };
    let n = mat.pose_mdp.state_count();
    println!("states: {n}");

    println!("\nforecast value distributions:");
    for (id, table) in &mat.tables {
        let spec = &registry.forecasts[id];
        let min = table.values.iter().cloned().fold(f64::INFINITY, f64::min);
        let max = table.values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mean: f64 = table.values.iter().sum::<f64>() / n as f64;
        println!(
            "  {:>2} {:<9} layer {:<2} min {:>8.4} mean {:>8.4} max {:>8.4}",
            id, spec.abbrev, spec.layer, min, mean, max
        );
    }

    println!("\nalias zone sizes (states with value != 0):");
    for (id, values) in &mat.alias_values {
        let spec = &registry.aliases[id];
        let nonzero = values.iter().filter(|v| **v != 0.0).count();
        let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        println!("  {:>2} {:<5} nonzero {:>6} / {n}  max {max:.3}", id, spec.abbrev, nonzero);
    }

    println!("\nwall-follow initiation set sizes:");
    for oid in [ids::O_RFWR, ids::O_RFWL, ids::O_RBWR, ids::O_RBWL] {
        let opt = &mat.options[&oid];
        let count = opt.initiation.iter().filter(|x| **x).count();
        println!("  option {oid}: {count} initiable");
    }

    // Doorway poses.
    let d = &mat.alias_values[&ids::A_D];
    let mut doorway: Vec<String> = Vec::new();
    for s in 0..n {
        if d[s] != 0.0 {
            let p = mat.pose_mdp.pose(s);
            doorway.push(format!("({}, {}, {})", p.x, p.y, p.heading));
        }
    }
    println!("\nD = 1 poses ({}):", doorway.len());
    for chunk in doorway.chunks(6) {
        println!("  {}", chunk.join(" "));
    }

    // Touch statistics.
    let touch = (0..n).filter(|&s| mat.pose_mdp.touch(s)).count();
    println!("\ntouch-feasible poses: {touch} / {n}");
    let ta = &mat.tables[&ids::TA];
    let ta_high = ta.values.iter().filter(|v| **v > 0.5).count();
    println!("TA > 0.5 poses: {ta_high} / {n}");

    // WDA conditioned on touch-adjacency (for the WA threshold).
    let wda = &mat.tables[&ids::WDA];
    let mut wda_at_ta: Vec<f64> = (0..n)
        .filter(|&s| ta.values[s] > 0.5)
        .map(|s| wda.values[s])
        .collect();
    wda_at_ta.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if !wda_at_ta.is_empty() {
        let pct = |p: f64| wda_at_ta[(p * (wda_at_ta.len() - 1) as f64) as usize];
        println!(
            "WDA | TA>0.5: p10 {:.2} p50 {:.2} p75 {:.2} p90 {:.2} max {:.2}",
            pct(0.10),
            pct(0.50),
            pct(0.75),
            pct(0.90),
            pct(1.0)
        );
        for theta in [3.0, 4.0, 5.0, 6.0, 7.0, 8.0] {
            let wa = wda_at_ta.iter().filter(|v| **v < theta).count();
            println!("  candidate theta.wa.2 = {theta}: WA zone {wa}");
        }
    }

    // Wall-forecast distribution over in-band poses (for theta.wlr.0).
    let wrf = &mat.tables[&ids::WRF];
    let rfwr = &mat.options[&ids::O_RFWR];
    let mut in_band: Vec<f64> = (0..n)
        .filter(|&s| rfwr.initiation[s])
        .map(|s| wrf.values[s])
        .collect();
    in_band.sort_by(|a, b| a.partial_cmp(b).unwrap());
    if !in_band.is_empty() {
        let pct = |p: f64| in_band[(p * (in_band.len() - 1) as f64) as usize];
        println!(
            "WRF | in-band: p10 {:.2} p50 {:.2} p75 {:.2} p90 {:.2} max {:.2}",
            pct(0.10),
            pct(0.50),
            pct(0.75),
            pct(0.90),
            pct(1.0)
        );
    }

    // DWM spread per region (for theta.r.1): sample a room center pose
    // and a door pose.
    let probe = |x: i64, y: i64, h: u8, label: &str| {
        use forecast_forge_core::world::Pose;
        if let Some(s) = mat.pose_mdp.state_of(Pose::new(x, y, h)) {
            let vals: Vec<String> = [0usize, 3, 6, 9]
                .iter()
                .map(|&i| format!("{:.2}", mat.tables[&ids::dwm(i)].values[s]))
                .collect();
            let dtam: Vec<String> = [3usize, 9]
                .iter()
                .map(|&i| format!("{:.2}", mat.tables[&ids::dtam(i)].values[s]))
                .collect();
            println!(
                "  {label} ({x},{y},{h}): DWM[0,3,6,9] = [{}]  DTAM[3,9] = [{}]  DR {:.2}",
                vals.join(", "),
                dtam.join(", "),
                mat.tables[&ids::DR].values[s]
            );
        } else {
            println!("  {label} ({x},{y},{h}): not reachable");
        }
    };
    println!("\nprobe poses:");
    probe(10, 10, 0, "room A center");
    probe(34, 10, 0, "room B center");
    probe(22, 10, 0, "door center E");
    probe(22, 10, 6, "door center W");
    probe(22, 8, 0, "door south E");
    probe(1, 10, 6, "west wall touch");
    probe(1, 10, 0, "west wall away");

    // Map-shift identity spot check for DTAM.
    let mut worst = 0.0f64;
    for s in 0..n {
        for i in 1..=6usize {
            let lhs = mat.tables[&ids::dtam(i)].values[s];
            let s2 = mat.pose_mdp.successor(s, 3); // rotr
            let rhs = mat.tables[&ids::dtam(i - 1)].values[s2];
            worst = worst.max((lhs - rhs).abs());
        }
    }
    println!("DTAM right-shift worst residual: {worst:e}");
}
