//! Acceptance suite. Each test prints one `criterion N [PASS|FAIL]` line
//! and fails when its criterion fails. Criteria 6-8 train for hours and are
//! ignored by default:
//!
//!     cargo test --release -p macn-lab --test acceptance -- --nocapture --include-ignored
//!
//! Training runs of criteria 6-8 are cached under `$ACCEPTANCE_RUNS`
//! (default: cargo's target tmpdir) and reused when their config matches.

use std::path::PathBuf;
use std::time::{Duration, Instant};

use diffcore::{grad_check_inputs, Activation, Bound, Checkpoint, Tape, Tensor, Var};
use macn_lab::agent::{pseudo_reward, Agent, Variant};
use macn_lab::config::TrainConfig;
use macn_lab::gridsim::{DoneCause, WorldId};
use macn_lab::memory::{mem_read, mem_write, Dnc, InterfaceVector, MemoryConfig, MemoryState};
use macn_lab::metrics::Metrics;
use macn_lab::trainer::{bandit_run, evaluate_fixed, run_dir, train_run, GreedyPolicy, Trainer};
use macn_lab::vin::{oracle, vin_forward};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

mod support;
use support::{check_params, kink_free, random_scan, random_state, unroll};

const GRAD_TOL: f64 = 1e-4;
const GRAD_BUDGET: Duration = Duration::from_secs(120);
const VI_TOL: f64 = 1e-5;
const VI_BUDGET: Duration = Duration::from_secs(10);
const RECALL_COSINE: f64 = 0.9;
const DNC_STEPS: usize = 10_000;
const PSEUDO_SAMPLES: usize = 10_000;
const BANDIT_P_BEST: f64 = 0.9;
const BANDIT_UPDATES: usize = 500;
const BANDIT_BUDGET: Duration = Duration::from_secs(60);
const CIRCUIT_GOAL_RATE: f64 = 0.8;
const CIRCUIT_MAX_EPISODES: usize = 3000;
const CIRCUIT_RUN_BUDGET: Duration = Duration::from_secs(30 * 60);
const CIRCUIT2_EPISODES: usize = 4000;
const CIRCUIT2_BUDGET: Duration = Duration::from_secs(2 * 3600);
const BACKTRACK_EPISODES: usize = 10;
const BACKTRACK_SUCCESSES: usize = 7;
const SEEDS: [u64; 3] = [1, 2, 3];

fn verdict(n: usize, name: &str, pass: bool, detail: &str) {
    let tag = if pass { "PASS" } else { "FAIL" };
    println!("criterion {n} [{tag}] {name}: {detail}");
    assert!(pass, "criterion {n} failed: {detail}");
}

fn desk() -> TrainConfig {
    TrainConfig::parse(include_str!("../../../configs/desk.cfg")).expect("desk config")
}

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

type Primitive = fn(&mut Tape, &[Var]) -> diffcore::Result<Var>;

fn primitives() -> Vec<(&'static str, Vec<Vec<usize>>, Primitive)> {
    let s = |v: &[&[usize]]| v.iter().map(|x| x.to_vec()).collect::<Vec<_>>();
    vec![
        ("add", s(&[&[5], &[5]]), |t, v| t.add(v[0], v[1])),
        ("sub", s(&[&[5], &[5]]), |t, v| t.sub(v[0], v[1])),
        ("mul", s(&[&[5], &[5]]), |t, v| t.mul(v[0], v[1])),
        ("affine", s(&[&[5]]), |t, v| Ok(t.affine(v[0], -2.5, 0.3))),
        ("scale_by", s(&[&[5], &[1]]), |t, v| t.scale_by(v[0], v[1])),
        ("relu", s(&[&[6]]), |t, v| Ok(t.relu(v[0]))),
        ("tanh", s(&[&[6]]), |t, v| Ok(t.tanh(v[0]))),
        ("sigmoid", s(&[&[6]]), |t, v| Ok(t.sigmoid(v[0]))),
        ("softplus", s(&[&[6]]), |t, v| Ok(t.softplus(v[0]))),
        ("exp", s(&[&[6]]), |t, v| Ok(t.exp(v[0]))),
        ("square", s(&[&[6]]), |t, v| Ok(t.square(v[0]))),
        ("ln", s(&[&[6]]), |t, v| {
            let pos = t.affine(v[0], 1.0, 2.0);
            Ok(t.ln_floor(pos, 1e-12))
        }),
        ("sum", s(&[&[6]]), |t, v| Ok(t.sum(v[0]))),
        ("mean", s(&[&[6]]), |t, v| Ok(t.mean(v[0]))),
        ("concat", s(&[&[2], &[3]]), |t, v| {
            Ok(t.concat(&[v[0], v[1], v[0]]))
        }),
        ("slice", s(&[&[7]]), |t, v| t.slice(v[0], 2, 3)),
        ("reshape", s(&[&[6]]), |t, v| t.reshape(v[0], &[2, 3])),
        ("pick", s(&[&[4]]), |t, v| t.pick(v[0], 2)),
        ("dense-relu", s(&[&[5], &[4, 5], &[4]]), |t, v| {
            t.dense(v[0], v[1], Some(v[2]), Activation::Relu)
        }),
        ("dense-tanh", s(&[&[5], &[4, 5], &[4]]), |t, v| {
            t.dense(v[0], v[1], Some(v[2]), Activation::Tanh)
        }),
        ("dense-none", s(&[&[5], &[4, 5], &[4]]), |t, v| {
            t.dense(v[0], v[1], Some(v[2]), Activation::Identity)
        }),
        ("conv2d", s(&[&[2, 5, 5], &[3, 2, 3, 3], &[3]]), |t, v| {
            t.conv2d(v[0], v[1], Some(v[2]))
        }),
        ("maxpool2d", s(&[&[2, 4, 4]]), |t, v| t.maxpool2d(v[0])),
        ("channel_max", s(&[&[4, 3, 3]]), |t, v| t.channel_max(v[0])),
        ("softmax", s(&[&[5]]), |t, v| t.softmax(v[0])),
        ("log_softmax", s(&[&[5]]), |t, v| t.log_softmax(v[0])),
        (
            "lstm_step",
            s(&[&[3], &[4], &[4], &[16, 7], &[16]]),
            |t, v| {
                let (h, c) = t.lstm_step(v[0], v[1], v[2], v[3], v[4])?;
                Ok(t.concat(&[h, c]))
            },
        ),
        ("content_weights", s(&[&[6, 4], &[4], &[1]]), |t, v| {
            let st = t.affine(v[2], 1.0, 2.0);
            t.content_weights(v[0], v[1], st)
        }),
        ("allocation", s(&[&[6]]), |t, v| {
            let u = t.sigmoid(v[0]);
            Ok(t.allocation_weights(u))
        }),
        ("erase_add", s(&[&[5, 3], &[5], &[3], &[3]]), |t, v| {
            t.erase_add(v[0], v[1], v[2], v[3])
        }),
        ("weighted_read", s(&[&[5], &[5, 3]]), |t, v| {
            t.weighted_read(v[0], v[1])
        }),
    ]
}

fn primitive_error(f: Primitive, shapes: &[Vec<usize>], rng: &mut ChaCha8Rng) -> f64 {
    let inputs: Vec<Tensor> = shapes.iter().map(|s| random(rng, s)).collect();
    let mut probe = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|x| probe.leaf(x.clone())).collect();
    let out = f(&mut probe, &vars).unwrap();
    let out_len = probe.value(out).len();
    let proj = random(rng, &[out_len]);
    grad_check_inputs(
        |t, v| {
            let out = f(t, v)?;
            let flat = t.reshape(out, &[out_len])?;
            let w = t.leaf(proj.clone());
            let y = t.mul(flat, w)?;
            Ok(t.sum(y))
        },
        &inputs,
        1e-5,
        |_, _| true,
    )
    .unwrap()
    .max_rel_error
}

fn unrolled_error(variant: Variant, seed: u64) -> f64 {
    let agent = kink_free(variant, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed + 100);
    let start = random_state(&agent, &mut rng);
    let scans: Vec<_> = (0..3).map(|_| random_scan(&mut rng)).collect();
    let w: Vec<f64> = (0..9).map(|_| rng.gen_range(-1.0..1.0)).collect();
    check_params(&agent, |t, v: &[Var]| {
        let p = Bound::from_vars(v.to_vec());
        let outs = unroll(&agent, t, &p, &start, &scans)?;
        let parts: Vec<Var> = outs.iter().map(|o| o.log_probs).collect();
        let all = t.concat(&parts);
        let wv = t.leaf(Tensor::vector(w.clone()));
        let y = t.mul(all, wv)?;
        let mut total = t.sum(y);
        for o in &outs {
            total = t.add(total, o.value)?;
        }
        Ok(total)
    })
    .max_rel_error
}

#[test]
fn criterion_1_gradient_suite() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = (0.0f64, "");
    for (name, shapes, f) in primitives() {
        for _ in 0..5 {
            let e = primitive_error(f, &shapes, &mut rng);
            if e > worst.0 {
                worst = (e, name);
            }
        }
    }
    let mut unrolled = 0.0f64;
    for variant in [Variant::MaAcAr, Variant::Ac] {
        unrolled = unrolled.max(unrolled_error(variant, 21));
    }
    let elapsed = start.elapsed();
    verdict(
        1,
        "gradient suite",
        worst.0 < GRAD_TOL && unrolled < GRAD_TOL && elapsed < GRAD_BUDGET,
        &format!(
            "primitives max rel err {:.2e} ({}), 3-step unrolled forward {unrolled:.2e}, \
             threshold {GRAD_TOL:e}; {:.1}s of {}s",
            worst.0,
            worst.1,
            elapsed.as_secs_f64(),
            GRAD_BUDGET.as_secs()
        ),
    );
}

/// Deterministic-move value iteration; moves off the grid are worth 0.
fn tabular_vi(w: usize, h: usize, reward: &[f64], gamma: f64, iters: usize) -> Vec<f64> {
    let mut v = vec![0.0; w * h];
    for _ in 0..iters {
        v = (0..w * h)
            .map(|s| {
                let (x, y) = ((s % w) as isize, (s / w) as isize);
                oracle::MOVES
                    .iter()
                    .map(|(dx, dy)| {
                        let (nx, ny) = (x + dx, y + dy);
                        let inside = nx >= 0 && ny >= 0 && (nx as usize) < w && (ny as usize) < h;
                        let succ = if inside {
                            v[ny as usize * w + nx as usize]
                        } else {
                            0.0
                        };
                        reward[s] + gamma * succ
                    })
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
    }
    v
}

#[test]
fn criterion_2_vin_matches_value_iteration() {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let (w, h) = (rng.gen_range(2..=7), rng.gen_range(2..=7));
        let gamma = rng.gen_range(0.5..0.99);
        let reward: Vec<f64> = (0..w * h).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let iters = 2 * (w + h);
        let expected = tabular_vi(w, h, &reward, gamma, iters);
        let mut t = Tape::new();
        let r = t.leaf(Tensor::new(&[1, h, w], reward).unwrap());
        let k = t.leaf(oracle::moves_kernel(gamma));
        let v = vin_forward(&mut t, r, k, iters).unwrap();
        for (a, b) in expected.iter().zip(t.data(v)) {
            worst = worst.max((a - b).abs());
        }
    }
    let elapsed = start.elapsed();
    verdict(
        2,
        "VIN oracle equivalence",
        worst < VI_TOL && elapsed < VI_BUDGET,
        &format!(
            "20 gridworlds, max abs err {worst:.2e} < {VI_TOL:e}; {:.2}s of {}s",
            elapsed.as_secs_f64(),
            VI_BUDGET.as_secs()
        ),
    );
}

fn cosine(a: &[f64], b: &[f64]) -> f64 {
    let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
    let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
    let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
    dot / (na * nb).max(1e-12)
}

fn iface(t: &mut Tape, v: &[f64]) -> InterfaceVector {
    let vec = |t: &mut Tape, x: Vec<f64>| t.leaf(Tensor::vector(x));
    InterfaceVector {
        read_key: vec(t, v.to_vec()),
        read_strength: t.leaf(Tensor::scalar(20.0)),
        write_key: vec(t, v.to_vec()),
        write_strength: t.leaf(Tensor::scalar(20.0)),
        erase: vec(t, vec![1.0; v.len()]),
        add: vec(t, v.to_vec()),
        allocation_gate: t.leaf(Tensor::scalar(1.0)),
        write_gate: t.leaf(Tensor::scalar(1.0)),
    }
}

#[test]
fn criterion_3_memory_recall_and_invariants() {
    let cfg = MemoryConfig::default();
    assert_eq!((cfg.slots, cfg.word), (64, 8));
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let vectors: Vec<Vec<f64>> = (0..8)
        .map(|i| {
            (0..8)
                .map(|j| if i == j { 1.0 } else { 0.0 } + rng.gen_range(-0.05..0.05))
                .collect()
        })
        .collect();
    let mut t = Tape::new();
    let mut vars = MemoryState::fresh(&cfg).bind(&mut t);
    for v in &vectors {
        let i = iface(&mut t, v);
        vars = mem_write(&mut t, &vars, &i).unwrap();
    }
    let recall = vectors
        .iter()
        .map(|v| {
            let i = iface(&mut t, v);
            let (read, _) = mem_read(&mut t, &vars, &i).unwrap();
            cosine(t.data(read), v)
        })
        .fold(f64::INFINITY, f64::min);

    let mut store = diffcore::ParamStore::new();
    let dnc = Dnc::new(&mut store, "dnc", 12, cfg, &mut rng);
    let ids: Vec<_> = store.ids().collect();
    for id in ids {
        for x in store.get_mut(id).data_mut() {
            *x *= 4.0;
        }
    }
    let mut t = Tape::new();
    let p = store.bind(&mut t);
    let mark = t.len();
    let mut state = MemoryState::fresh(&cfg);
    let mut hc = (Tensor::zeros(&[cfg.hidden]), Tensor::zeros(&[cfg.hidden]));
    let mut violations = 0usize;
    for step in 0..DNC_STEPS {
        if step % 500 == 0 {
            state = MemoryState::fresh(&cfg);
        }
        t.truncate(mark);
        let h = t.leaf(hc.0.clone());
        let c = t.leaf(hc.1.clone());
        let x = t.leaf(random(&mut rng, &[12]));
        let vars = state.bind(&mut t);
        let out = dnc.step(&mut t, &p, h, c, x, &vars).unwrap();
        for wv in [out.state.read_weights, out.state.write_weights] {
            let w = t.data(wv);
            if w.iter().any(|&x| x < 0.0) || w.iter().sum::<f64>() > 1.0 + 1e-9 {
                violations += 1;
            }
        }
        if t.data(out.state.usage)
            .iter()
            .any(|&u| !(0.0..=1.0).contains(&u))
        {
            violations += 1;
        }
        state = out.state.snapshot(&t);
        hc = (t.value(out.h).clone(), t.value(out.c).clone());
    }
    verdict(
        3,
        "memory recall",
        recall > RECALL_COSINE && violations == 0,
        &format!(
            "worst cosine over 8 vectors {recall:.4} > {RECALL_COSINE}; \
             {violations} simplex/usage violations in {DNC_STEPS} dnc steps"
        ),
    );
}

#[test]
fn criterion_4_pseudo_reward_law() {
    let eta = 2.0;
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut wrong = 0usize;
    for _ in 0..PSEUDO_SAMPLES {
        let loss: f64 = rng.gen_range(-6.0..6.0);
        let expect = if loss.abs() <= eta { loss } else { 1.5 };
        if pseudo_reward(loss, eta, 1.5) != expect {
            wrong += 1;
        }
    }
    let bound = 2.0 * f64::max(eta, 1.5) * 500.0;
    let mut cfg = TrainConfig::default();
    cfg.net.conv_filters = 4;
    cfg.net.phi = 16;
    cfg.net.memory.hidden = 16;
    cfg.net.lstm_hidden = 16;
    cfg.net.head_hidden = 16;
    cfg.net.aux_hidden = 16;
    let mut trainer = Trainer::new(Variant::MaAcAr, WorldId::Circuit.load(), cfg, 4);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..20 {
        worst = worst.max(trainer.run_episode().unwrap().pseudo_reward);
    }
    verdict(
        4,
        "pseudo-reward law",
        wrong == 0 && worst <= bound,
        &format!(
            "{wrong} of {PSEUDO_SAMPLES} outputs off the law; \
             largest episode pseudo-reward sum {worst:.2} <= {bound}"
        ),
    );
}

#[test]
fn criterion_5_bandit_sanity() {
    let cfg = TrainConfig::default();
    let start = Instant::now();
    let p: Vec<f64> = SEEDS
        .iter()
        .map(|&s| {
            bandit_run([1.0, 0.0], BANDIT_UPDATES, 0.01, cfg.alpha, cfg.beta, s)
                .unwrap()
                .p_best
        })
        .collect();
    let elapsed = start.elapsed();
    let passed = p.iter().filter(|&&x| x > BANDIT_P_BEST).count();
    verdict(
        5,
        "bandit sanity",
        passed == 3 && elapsed < BANDIT_BUDGET,
        &format!(
            "p(best) after {BANDIT_UPDATES} updates {p:.3?}, {passed}/3 > {BANDIT_P_BEST}; {:.2}s",
            elapsed.as_secs_f64()
        ),
    );
}

#[test]
fn criterion_9_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = desk();
    cfg.episodes = 3;
    cfg.episode_cap = 60;
    let mut identical = 0;
    let mut total = 0;
    for world in WorldId::ALL {
        for variant in Variant::ALL {
            let csv = |sub: &str| {
                let out = dir.path().join(sub);
                train_run(variant, world, &cfg, 11, Some(&out)).unwrap();
                std::fs::read(run_dir(&out, world, variant, 11).join("metrics.csv")).unwrap()
            };
            total += 1;
            if csv("a") == csv("b") {
                identical += 1;
            }
        }
    }
    verdict(
        9,
        "determinism",
        identical == total,
        &format!(
            "{identical}/{total} (world, variant) reruns produced byte-identical metrics CSVs"
        ),
    );
}

fn runs_root() -> PathBuf {
    std::env::var_os("ACCEPTANCE_RUNS")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from(env!("CARGO_TARGET_TMPDIR")).join("acceptance-runs"))
}

/// Full-length training run, reused from the cache when the stored config
/// matches. The returned metrics carry the training time of the original run.
fn cached_run(
    variant: Variant,
    world: WorldId,
    cfg: &TrainConfig,
    seed: u64,
) -> (Metrics, Checkpoint) {
    let root = runs_root();
    let dir = run_dir(&root, world, variant, seed);
    let text = cfg.to_text();
    let stamp = dir.join("config.txt");
    let timing = dir.join("train_secs.txt");
    let cached_secs = std::fs::read_to_string(&timing)
        .ok()
        .and_then(|t| t.trim().parse::<f64>().ok());
    let fresh = std::fs::read_to_string(&stamp).ok().as_deref() == Some(text.as_str())
        && dir.join("final.ckpt").exists();
    let secs = match cached_secs {
        Some(secs) if fresh => secs,
        _ => {
            let secs = train_run(variant, world, cfg, seed, Some(&root))
                .unwrap()
                .wall_clock_secs;
            std::fs::write(&timing, format!("{secs}\n")).unwrap();
            std::fs::write(&stamp, &text).unwrap();
            secs
        }
    };
    let mut metrics = Metrics::load_csv(&dir.join("metrics.csv")).unwrap();
    metrics.wall_clock_secs = secs;
    let ckpt = Checkpoint::load(&dir.join("final.ckpt")).unwrap();
    eprintln!(
        "{world} {variant} seed {seed}: final-500 reward {:.1}",
        metrics.tail_mean_reward(500)
    );
    (metrics, ckpt)
}

/// Trains until the trailing-100 goal rate reaches the target or the
/// episode budget runs out; returns (episodes, best trailing rate, time).
fn circuit_run(variant: Variant, seed: u64) -> (usize, f64, Duration) {
    let mut cfg = desk();
    cfg.episodes = CIRCUIT_MAX_EPISODES;
    let start = Instant::now();
    let mut trainer = Trainer::new(variant, WorldId::Circuit.load(), cfg, seed);
    let mut best = 0.0f64;
    while trainer.episodes_done() < CIRCUIT_MAX_EPISODES {
        trainer.run_episode().unwrap();
        if trainer.episodes_done() >= 100 {
            best = best.max(trainer.metrics().tail_goal_rate(100));
            if best >= CIRCUIT_GOAL_RATE {
                break;
            }
        }
    }
    let done = trainer.episodes_done();
    eprintln!(
        "circuit {variant} seed {seed}: trailing-100 goal rate {best:.2} by episode {done}, {:.0}s",
        start.elapsed().as_secs_f64()
    );
    (done, best, start.elapsed())
}

#[test]
#[ignore = "trains 6 circuit runs of up to 3000 episodes"]
fn criterion_6_circuit_learning() {
    let mut lines = Vec::new();
    let mut pass = true;
    for variant in [Variant::AcAr, Variant::MaAcAr] {
        let runs: Vec<_> = SEEDS.iter().map(|&s| circuit_run(variant, s)).collect();
        let ok = runs
            .iter()
            .filter(|(_, rate, t)| *rate >= CIRCUIT_GOAL_RATE && *t < CIRCUIT_RUN_BUDGET)
            .count();
        pass &= ok >= 2;
        let detail: Vec<String> = runs
            .iter()
            .map(|(n, r, t)| format!("{r:.2}@{n} ({:.0}s)", t.as_secs_f64()))
            .collect();
        lines.push(format!("{variant} {ok}/3 [{}]", detail.join(", ")));
    }
    verdict(
        6,
        "scaled circuit learning",
        pass,
        &format!(
            "goal rate >= {CIRCUIT_GOAL_RATE} over the last 100 of <= {CIRCUIT_MAX_EPISODES} \
             episodes, need 2/3 seeds: {}",
            lines.join("; ")
        ),
    );
}

#[test]
#[ignore = "trains 12 circuit2 runs of 4000 episodes"]
fn criterion_7_circuit2_ordering() {
    let mut cfg = desk();
    cfg.episodes = CIRCUIT2_EPISODES;
    let mut train_secs = 0.0;
    let means: Vec<(Variant, f64)> = Variant::ALL
        .iter()
        .map(|&v| {
            let finals: Vec<f64> = SEEDS
                .iter()
                .map(|&s| {
                    let m = cached_run(v, WorldId::Circuit2, &cfg, s).0;
                    train_secs += m.wall_clock_secs;
                    m.tail_mean_reward(500)
                })
                .collect();
            (v, finals.iter().sum::<f64>() / finals.len() as f64)
        })
        .collect();
    let elapsed = Duration::from_secs_f64(train_secs);
    let full = means.iter().find(|(v, _)| *v == Variant::MaAcAr).unwrap().1;
    let ordered = means
        .iter()
        .filter(|(v, _)| *v != Variant::MaAcAr)
        .all(|(_, m)| full > *m);
    let table: Vec<String> = means.iter().map(|(v, m)| format!("{v} {m:.1}")).collect();
    verdict(
        7,
        "scaled circuit2 ordering",
        ordered && elapsed < CIRCUIT2_BUDGET,
        &format!(
            "final-500 mean over 3 seeds: {}; MA_AC_AR strictly highest: {ordered}; \
             {:.0}s of training against a {}s budget",
            table.join(", "),
            elapsed.as_secs_f64(),
            CIRCUIT2_BUDGET.as_secs()
        ),
    );
}

#[test]
#[ignore = "needs a 4000-episode circuit2 MA_AC_AR run"]
fn criterion_8_backtracking() {
    let mut cfg = desk();
    cfg.episodes = CIRCUIT2_EPISODES;
    let (_, ckpt) = cached_run(Variant::MaAcAr, WorldId::Circuit2, &cfg, SEEDS[0]);
    let agent = Agent::from_checkpoint(&ckpt, Some(Variant::MaAcAr)).unwrap();
    let mut policy = GreedyPolicy::new(&agent);
    let report = evaluate_fixed(
        &mut policy,
        &WorldId::Circuit2.load(),
        BACKTRACK_EPISODES,
        true,
        cfg.episode_cap,
    )
    .unwrap();
    let goals = report
        .episodes
        .iter()
        .filter(|e| e.cause == DoneCause::Goal)
        .count();
    let causes: Vec<&str> = report.episodes.iter().map(|e| e.cause.name()).collect();
    verdict(
        8,
        "backtracking",
        goals >= BACKTRACK_SUCCESSES,
        &format!(
            "bookshelf present, greedy: {goals}/{BACKTRACK_EPISODES} reached the goal \
             (need {BACKTRACK_SUCCESSES}); outcomes {causes:?}"
        ),
    );
}
