//! Trains one run and prints trailing statistics every 100 episodes.
//!
//! cargo run --release --example progress -- circuit MA_AC_AR 1 3000 [config]

use std::time::Instant;

use macn_lab::agent::Variant;
use macn_lab::config::TrainConfig;
use macn_lab::gridsim::{Action, Env, GridMap, WorldId};
use macn_lab::trainer::{GreedyPolicy, Policy, Trainer};

fn main() {
    let a: Vec<String> = std::env::args().skip(1).collect();
    let map = match a[0].parse::<WorldId>() {
        Ok(w) => w.load(),
        Err(_) => GridMap::parse(&std::fs::read_to_string(&a[0]).expect("map file")).expect("map"),
    };
    let variant: Variant = a[1].parse().expect("variant");
    let seed: u64 = a[2].parse().expect("seed");
    let episodes: usize = a[3].parse().expect("episodes");
    let cfg = match a.get(4) {
        Some(p) => TrainConfig::load(std::path::Path::new(p)).expect("config"),
        None => TrainConfig::default(),
    };
    let mut t = Trainer::new(variant, map.clone(), cfg, seed);
    let start = Instant::now();
    for e in 1..=episodes {
        t.run_episode().expect("episode");
        if e % 100 == 0 {
            let m = t.metrics();
            let tail = &m.episodes[m.len() - 100..];
            let len = tail.iter().map(|r| r.length).sum::<usize>() as f64 / 100.0;
            let mut causes = std::collections::BTreeMap::new();
            for r in tail {
                *causes.entry(r.done_cause.name()).or_insert(0) += 1;
            }
            println!(
                "{e:5} reward {:8.1} pseudo {:7.1} len {len:6.1} goal {:.2} {causes:?} loss_ac {:.3} {:.0}s",
                m.tail_mean_reward(100),
                tail.iter().map(|r| r.pseudo_reward).sum::<f64>() / 100.0,
                m.tail_goal_rate(100),
                tail.iter().map(|r| r.loss_ac).sum::<f64>() / 100.0,
                start.elapsed().as_secs_f64()
            );
            if std::env::var_os("TRACE").is_some() {
                let mut policy = GreedyPolicy::new(t.agent());
                let mut env = Env::new(map.clone(), 500);
                let mut scan = env.reset_to(false);
                policy.begin_episode();
                let mut trace = String::new();
                for _ in 0..80 {
                    let a = policy.act(&scan).expect("act");
                    trace.push(match a {
                        Action::Forward => 'F',
                        Action::TurnLeft => 'L',
                        Action::TurnRight => 'R',
                    });
                    let (res, next) = env.step(a);
                    if res.done {
                        trace.push_str(&format!(" {}", res.done_cause));
                        break;
                    }
                    scan = next;
                }
                let agent = t.agent();
                let mut tape = diffcore::Tape::new();
                let p = agent.params.bind(&mut tape);
                let st = agent.net.initial_state().bind(&mut tape);
                let first = Env::new(map.clone(), 500).reset_to(false);
                let out = agent
                    .net
                    .forward(&mut tape, &p, &first, &st)
                    .expect("forward");
                println!(
                    "      greedy {trace} p0 {:.3?} v0 {:.2}",
                    tape.data(out.probs),
                    tape.item(out.value)
                );
            }
        }
    }
}
