//! Prints training throughput for each variant on a world.

use std::time::Instant;

use macn_lab::agent::Variant;
use macn_lab::config::TrainConfig;
use macn_lab::gridsim::WorldId;
use macn_lab::trainer::Trainer;

fn main() {
    let mut args = std::env::args().skip(1);
    let world: WorldId = args
        .next()
        .as_deref()
        .unwrap_or("circuit")
        .parse()
        .expect("world");
    let episodes: usize = args.next().map_or(20, |s| s.parse().expect("episodes"));
    let cfg = match args.next() {
        Some(p) => TrainConfig::load(std::path::Path::new(&p)).expect("config"),
        None => TrainConfig::default(),
    };
    for v in Variant::ALL {
        let mut t = Trainer::new(v, world.load(), cfg.clone(), 1);
        let start = Instant::now();
        let mut steps = 0;
        for _ in 0..episodes {
            steps += t.run_episode().expect("episode").length;
        }
        let secs = start.elapsed().as_secs_f64();
        println!(
            "{v:<9} {episodes} episodes, {steps} steps, {:.3} ms/step, goal rate {:.2}",
            1e3 * secs / steps as f64,
            t.metrics().tail_goal_rate(episodes)
        );
    }
}
