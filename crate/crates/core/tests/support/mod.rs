//! Helpers shared by the agent tests and the acceptance suite.
#![allow(dead_code)]

use diffcore::{grad_check_inputs, Bound, Tape, Tensor, Var};
use macn_lab::agent::{Agent, NetConfig, RecurrentState, StepOutput, Variant};
use macn_lab::gridsim::LidarScan;
use macn_lab::memory::{MemoryConfig, MemoryState};
use macn_lab::vin::VinConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn tiny() -> NetConfig {
    NetConfig {
        grid: 10,
        conv_filters: 2,
        phi: 5,
        vin: VinConfig {
            actions: 3,
            kernel: 3,
            iterations: 3,
        },
        memory: MemoryConfig {
            slots: 5,
            word: 3,
            hidden: 4,
        },
        lstm_hidden: 4,
        head_hidden: 4,
        aux_hidden: 3,
        max_range: 10.0,
    }
}

pub fn random_scan(rng: &mut ChaCha8Rng) -> LidarScan {
    LidarScan {
        ranges: (0..100).map(|_| rng.gen_range(0.1..10.0)).collect(),
    }
}

pub const RESOLVABLE: f64 = 1e-5;

/// Gradient check over every parameter coordinate with a resolvable
/// gradient. At most a quarter of the nonzero coordinates may be skipped.
pub fn check_params<F>(agent: &Agent, f: F) -> diffcore::GradCheck
where
    F: Fn(&mut Tape, &[Var]) -> diffcore::Result<Var>,
{
    let mut t = Tape::new();
    let vars: Vec<Var> = agent
        .params
        .tensors()
        .iter()
        .map(|x| t.leaf(x.clone()))
        .collect();
    let out = f(&mut t, &vars).unwrap();
    let grads = t.backward(out).unwrap();
    let g: Vec<Vec<f64>> = vars.iter().map(|&v| grads.wrt(v)).collect();
    let report = grad_check_inputs(&f, agent.params.tensors(), 1e-5, |i, j| {
        g[i][j].abs() >= RESOLVABLE
    })
    .unwrap();
    let nonzero = g.iter().flatten().filter(|x| **x != 0.0).count();
    let tiny = g
        .iter()
        .flatten()
        .filter(|x| **x != 0.0 && x.abs() < RESOLVABLE)
        .count();
    assert!(
        tiny * 4 <= nonzero,
        "{tiny} of {nonzero} gradients below {RESOLVABLE}"
    );
    report
}

/// Strictly positive encoder convolutions keep every relu active, which
/// leaves no pooling ties or relu kinks at the check point.
pub fn kink_free(variant: Variant, seed: u64) -> Agent {
    let mut agent = Agent::new(variant, tiny(), seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ids: Vec<_> = agent.params.ids().collect();
    for id in ids {
        if agent.params.name(id).starts_with("enc.conv") {
            for x in agent.params.get_mut(id).data_mut() {
                *x = rng.gen_range(0.01..0.1);
            }
        }
    }
    agent
}

/// Random recurrent state. A fresh memory reads and writes almost
/// uniformly, which leaves gradients near round-off, and gives unwritten
/// slots tied usage where the allocation sort has a kink.
pub fn random_state(agent: &Agent, rng: &mut ChaCha8Rng) -> RecurrentState {
    let mut vec =
        |n: usize, lo: f64, hi: f64| (0..n).map(|_| rng.gen_range(lo..hi)).collect::<Vec<f64>>();
    match agent.net.initial_state() {
        RecurrentState::Lstm { h, c } => RecurrentState::Lstm {
            h: Tensor::vector(vec(h.len(), -0.5, 0.5)),
            c: Tensor::vector(vec(c.len(), -0.5, 0.5)),
        },
        RecurrentState::Dnc { h, c, memory } => {
            let (n, w) = (memory.usage.len(), memory.last_read.len());
            let norm = |v: Vec<f64>| {
                let s: f64 = v.iter().sum();
                Tensor::vector(v.iter().map(|x| x / s).collect())
            };
            RecurrentState::Dnc {
                h: Tensor::vector(vec(h.len(), -0.5, 0.5)),
                c: Tensor::vector(vec(c.len(), -0.5, 0.5)),
                memory: MemoryState {
                    memory: Tensor::new(&[n, w], vec(n * w, -1.0, 1.0)).unwrap(),
                    usage: Tensor::vector(vec(n, 0.05, 0.95)),
                    read_weights: norm(vec(n, 0.1, 1.0)),
                    write_weights: norm(vec(n, 0.1, 1.0)),
                    last_read: Tensor::vector(vec(w, -1.0, 1.0)),
                },
            }
        }
    }
}

/// Unroll from `start` returning every per-step output.
pub fn unroll(
    agent: &Agent,
    t: &mut Tape,
    p: &Bound,
    start: &RecurrentState,
    scans: &[LidarScan],
) -> diffcore::Result<Vec<StepOutput>> {
    let mut state = start.bind(t);
    let mut outs = Vec::new();
    for s in scans {
        let o = agent.net.forward(t, p, s, &state)?;
        state = o.state;
        outs.push(o);
    }
    Ok(outs)
}
