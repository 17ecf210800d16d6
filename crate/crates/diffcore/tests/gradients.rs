//! Finite-difference checks for every primitive, plus properties of the
//! reverse sweep itself.

use diffcore::{grad_check, grad_check_inputs, Activation, Result, Tape, Tensor, Var};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const H: f64 = 1e-5;
const TOL: f64 = 1e-4;
const POINTS: u64 = 10;

fn random(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect()).unwrap()
}

/// Reduces any output to a scalar through fixed random weights so that
/// every output element contributes a distinct sensitivity.
fn project(tape: &mut Tape, out: Var, weights: &Tensor) -> Result<Var> {
    let w = tape.leaf(weights.clone());
    let flat = tape.reshape(out, &[weights.len()])?;
    let p = tape.mul(flat, w)?;
    Ok(tape.sum(p))
}

/// Runs a multi-input check at `POINTS` random points.
fn check_primitive<F>(name: &str, shapes: &[&[usize]], out_len: usize, f: F)
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(name.bytes().map(u64::from).sum());
    let mut worst: f64 = 0.0;
    for _ in 0..POINTS {
        let inputs: Vec<Tensor> = shapes.iter().map(|s| random(&mut rng, s)).collect();
        let proj = random(&mut rng, &[out_len]);
        let report = grad_check_inputs(
            |tape, vars| {
                let out = f(tape, vars)?;
                project(tape, out, &proj)
            },
            &inputs,
            H,
            |_, _| true,
        )
        .unwrap();
        worst = worst.max(report.max_rel_error);
    }
    assert!(worst < TOL, "{name}: max relative error {worst:e}");
}

#[test]
fn elementwise_primitives() {
    check_primitive("add", &[&[5], &[5]], 5, |t, v| t.add(v[0], v[1]));
    check_primitive("sub", &[&[5], &[5]], 5, |t, v| t.sub(v[0], v[1]));
    check_primitive("mul", &[&[5], &[5]], 5, |t, v| t.mul(v[0], v[1]));
    check_primitive("mul-self", &[&[5]], 5, |t, v| t.mul(v[0], v[0]));
    check_primitive("affine", &[&[5]], 5, |t, v| Ok(t.affine(v[0], -2.5, 0.3)));
    check_primitive("scale_by", &[&[5], &[1]], 5, |t, v| t.scale_by(v[0], v[1]));
    check_primitive("relu", &[&[6]], 6, |t, v| Ok(t.relu(v[0])));
    check_primitive("tanh", &[&[6]], 6, |t, v| Ok(t.tanh(v[0])));
    check_primitive("sigmoid", &[&[6]], 6, |t, v| Ok(t.sigmoid(v[0])));
    check_primitive("softplus", &[&[6]], 6, |t, v| Ok(t.softplus(v[0])));
    check_primitive("exp", &[&[6]], 6, |t, v| Ok(t.exp(v[0])));
    check_primitive("square", &[&[6]], 6, |t, v| Ok(t.square(v[0])));
    check_primitive("ln", &[&[6]], 6, |t, v| {
        let pos = t.affine(v[0], 1.0, 2.0);
        Ok(t.ln_floor(pos, 1e-12))
    });
    check_primitive("sum", &[&[6]], 1, |t, v| Ok(t.sum(v[0])));
    check_primitive("mean", &[&[6]], 1, |t, v| Ok(t.mean(v[0])));
    check_primitive("concat", &[&[2], &[3]], 5, |t, v| {
        Ok(t.concat(&[v[0], v[1], v[0]])).and_then(|c| t.slice(c, 0, 5))
    });
    check_primitive("slice", &[&[7]], 3, |t, v| t.slice(v[0], 2, 3));
    check_primitive("reshape", &[&[6]], 6, |t, v| t.reshape(v[0], &[2, 3]));
    check_primitive("pick", &[&[4]], 1, |t, v| t.pick(v[0], 2));
}

#[test]
fn network_primitives() {
    for act in [
        Activation::Identity,
        Activation::Relu,
        Activation::Tanh,
        Activation::Sigmoid,
    ] {
        check_primitive(
            &format!("dense-{act:?}"),
            &[&[5], &[4, 5], &[4]],
            4,
            |t, v| t.dense(v[0], v[1], Some(v[2]), act),
        );
    }
    check_primitive(
        "conv2d-3",
        &[&[2, 5, 5], &[3, 2, 3, 3], &[3]],
        75,
        |t, v| t.conv2d(v[0], v[1], Some(v[2])),
    );
    check_primitive("conv2d-1", &[&[3, 4, 4], &[1, 3, 1, 1]], 16, |t, v| {
        t.conv2d(v[0], v[1], None)
    });
    check_primitive("maxpool2d", &[&[2, 4, 4]], 8, |t, v| t.maxpool2d(v[0]));
    check_primitive("channel_max", &[&[4, 3, 3]], 9, |t, v| t.channel_max(v[0]));
    check_primitive("softmax", &[&[5]], 5, |t, v| t.softmax(v[0]));
    check_primitive("log_softmax", &[&[5]], 5, |t, v| t.log_softmax(v[0]));
    check_primitive("lstm", &[&[3], &[4], &[4], &[16, 7], &[16]], 8, |t, v| {
        let (h, c) = t.lstm_step(v[0], v[1], v[2], v[3], v[4])?;
        Ok(t.concat(&[h, c]))
    });
}

#[test]
fn memory_primitives() {
    check_primitive("content_weights", &[&[6, 4], &[4], &[1]], 6, |t, v| {
        let s = t.affine(v[2], 1.0, 2.0);
        t.content_weights(v[0], v[1], s)
    });
    check_primitive("allocation", &[&[6]], 6, |t, v| {
        let u = t.sigmoid(v[0]);
        Ok(t.allocation_weights(u))
    });
    check_primitive("erase_add", &[&[5, 3], &[5], &[3], &[3]], 15, |t, v| {
        t.erase_add(v[0], v[1], v[2], v[3])
    });
    check_primitive("weighted_read", &[&[5], &[5, 3]], 3, |t, v| {
        t.weighted_read(v[0], v[1])
    });
}

#[test]
fn linear_function_is_exact() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let coeffs = random(&mut rng, &[8]);
    let point = random(&mut rng, &[8]);
    let report = grad_check(|t, x| project(t, x, &coeffs), &point, H).unwrap();
    assert!(report.max_rel_error < 1e-10, "{report:?}");
}

#[test]
fn softmax_cross_entropy_composite() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let w = random(&mut rng, &[4, 6]);
    let point = random(&mut rng, &[6]);
    let report = grad_check(
        |t, x| {
            let wv = t.leaf(w.clone());
            let logits = t.dense(x, wv, None, Activation::Identity)?;
            let p = t.softmax(logits)?;
            let logp = t.ln_floor(p, 1e-12);
            let pick = t.pick(logp, 2)?;
            Ok(t.scale(pick, -1.0))
        },
        &point,
        H,
    )
    .unwrap();
    assert!(report.max_rel_error < 1e-6, "{report:?}");
}

#[test]
fn maxpool_tie_points_are_excluded() {
    // Window (0,0) holds a tie; the tie entries are non-differentiable and skipped.
    let mut data: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
    data[0] = 0.9;
    data[1] = 0.9;
    let point = Tensor::new(&[1, 4, 4], data).unwrap();
    let tie = [0usize, 1];
    let report = grad_check_inputs(
        |t, v| {
            let y = t.maxpool2d(v[0])?;
            Ok(t.sum(y))
        },
        std::slice::from_ref(&point),
        H,
        |_, j| !tie.contains(&j),
    )
    .unwrap();
    assert_eq!(report.skipped, 2);
    assert_eq!(report.checked, 14);
    assert!(report.max_rel_error < 1e-10);
}

fn branch_f(t: &mut Tape, x: Var) -> Result<Var> {
    let y = t.tanh(x);
    let s = t.softmax(y)?;
    let q = t.square(s);
    Ok(t.sum(q))
}

fn branch_g(t: &mut Tape, x: Var) -> Result<Var> {
    let e = t.sigmoid(x);
    let m = t.mul(e, x)?;
    Ok(t.sum(m))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn softmax_is_a_distribution(xs in prop::collection::vec(-1e300f64..1e300, 1..12)) {
        let mut t = Tape::new();
        let x = t.leaf(Tensor::vector(xs));
        let s = t.softmax(x).unwrap();
        prop_assert!(t.data(s).iter().all(|&p| p >= 0.0));
        let total: f64 = t.data(s).iter().sum();
        prop_assert!((total - 1.0).abs() < 1e-9);
    }

    #[test]
    fn backward_is_linear(
        xs in prop::collection::vec(-2.0f64..2.0, 5),
        a in -3.0f64..3.0,
        b in -3.0f64..3.0,
    ) {
        let grad_of = |combo: &dyn Fn(&mut Tape, Var) -> Result<Var>| {
            let mut t = Tape::new();
            let x = t.leaf(Tensor::vector(xs.clone()));
            let out = combo(&mut t, x).unwrap();
            t.backward(out).unwrap().wrt(x)
        };
        let gf = grad_of(&|t, x| branch_f(t, x));
        let gg = grad_of(&|t, x| branch_g(t, x));
        let gc = grad_of(&|t, x| {
            let f = branch_f(t, x)?;
            let g = branch_g(t, x)?;
            let fa = t.scale(f, a);
            let gb = t.scale(g, b);
            t.add(fa, gb)
        });
        for i in 0..xs.len() {
            prop_assert!((gc[i] - (a * gf[i] + b * gg[i])).abs() < 1e-9);
        }
    }
}
