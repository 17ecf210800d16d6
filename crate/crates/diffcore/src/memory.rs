//! Fused addressing primitives for an external memory matrix `[N, W]`.

use crate::error::{mismatch, Result};
use crate::nn::softmax;
use crate::tape::{add_into, Grads, Op, Tape, Var};
use crate::tensor::Tensor;

/// Norm floor used by cosine similarity.
pub const NORM_FLOOR: f64 = 1e-8;

fn memory_dims(tape: &Tape, memory: Var, op: &'static str) -> Result<(usize, usize)> {
    match tape.shape(memory) {
        [n, w] => Ok((*n, *w)),
        other => Err(mismatch(op, &[0, 0], other)),
    }
}

/// Floored norm; a floored value is returned negated so the backward pass
/// knows to treat it as constant.
fn floored_norm(v: &[f64]) -> f64 {
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if n < NORM_FLOOR {
        -NORM_FLOOR
    } else {
        n
    }
}

impl Tape {
    /// Softmax over rows of `strength · cos(memory[i], key)`.
    pub fn content_weights(&mut self, memory: Var, key: Var, strength: Var) -> Result<Var> {
        let (n, w) = memory_dims(self, memory, "content_weights")?;
        if self.value(key).len() != w {
            return Err(mismatch("content_weights key", &[w], self.shape(key)));
        }
        if self.value(strength).len() != 1 {
            return Err(mismatch(
                "content_weights strength",
                &[1],
                self.shape(strength),
            ));
        }
        let m = self.data(memory);
        let k = self.data(key);
        let s = self.item(strength);
        let key_norm = floored_norm(k);
        let mut row_norms = Vec::with_capacity(n);
        let mut cos = Vec::with_capacity(n);
        for row in m.chunks_exact(w) {
            let rn = floored_norm(row);
            let dot: f64 = row.iter().zip(k).map(|(a, b)| a * b).sum();
            cos.push(dot / (rn.abs() * key_norm.abs()));
            row_norms.push(rn);
        }
        let z: Vec<f64> = cos.iter().map(|c| s * c).collect();
        let v = Tensor::vector(softmax(&z));
        Ok(self.push(
            v,
            Op::ContentWeights {
                memory,
                key,
                strength,
                cos,
                row_norms,
                key_norm,
            },
        ))
    }

    /// Usage-sorted allocation weighting: slots are visited in order of
    /// increasing usage (ties by index) and slot `j` in that order receives
    /// `(1 - u_j) · Π_{i<j} u_i`.
    pub fn allocation_weights(&mut self, usage: Var) -> Var {
        let u = self.data(usage);
        let mut order: Vec<usize> = (0..u.len()).collect();
        order.sort_by(|&a, &b| u[a].total_cmp(&u[b]));
        let mut out = vec![0.0; u.len()];
        let mut prod = 1.0;
        for &slot in &order {
            out[slot] = (1.0 - u[slot]) * prod;
            prod *= u[slot];
        }
        self.push(Tensor::vector(out), Op::Allocation { usage, order })
    }

    /// `memory ⊙ (1 − weights ⊗ erase) + weights ⊗ add`.
    pub fn erase_add(&mut self, memory: Var, weights: Var, erase: Var, add: Var) -> Result<Var> {
        let (n, w) = memory_dims(self, memory, "erase_add")?;
        if self.value(weights).len() != n {
            return Err(mismatch("erase_add weights", &[n], self.shape(weights)));
        }
        if self.value(erase).len() != w || self.value(add).len() != w {
            return Err(mismatch("erase_add vectors", &[w], self.shape(erase)));
        }
        let m = self.data(memory);
        let wt = self.data(weights);
        let e = self.data(erase);
        let a = self.data(add);
        let mut out = Vec::with_capacity(n * w);
        for i in 0..n {
            for j in 0..w {
                out.push(m[i * w + j] * (1.0 - wt[i] * e[j]) + wt[i] * a[j]);
            }
        }
        let t = Tensor::new(&[n, w], out)?;
        Ok(self.push(
            t,
            Op::EraseAdd {
                memory,
                weights,
                erase,
                add,
            },
        ))
    }

    /// `weightsᵀ · memory`, a length-`W` read vector.
    pub fn weighted_read(&mut self, weights: Var, memory: Var) -> Result<Var> {
        let (n, w) = memory_dims(self, memory, "weighted_read")?;
        if self.value(weights).len() != n {
            return Err(mismatch("weighted_read weights", &[n], self.shape(weights)));
        }
        let m = self.data(memory);
        let wt = self.data(weights);
        let mut out = vec![0.0; w];
        for (row, &wi) in m.chunks_exact(w).zip(wt) {
            for (o, x) in out.iter_mut().zip(row) {
                *o += wi * x;
            }
        }
        Ok(self.push(Tensor::vector(out), Op::WeightedRead { weights, memory }))
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn backward_content_weights(
    tape: &Tape,
    [memory, key, strength]: [Var; 3],
    cos: &[f64],
    row_norms: &[f64],
    key_norm: f64,
    out: &[f64],
    g: &[f64],
    grads: &mut Grads,
) {
    let m = tape.data(memory);
    let k = tape.data(key);
    let s = tape.item(strength);
    let w = k.len();
    let dot: f64 = g.iter().zip(out).map(|(gi, y)| gi * y).sum();
    let dz: Vec<f64> = g.iter().zip(out).map(|(gi, y)| y * (gi - dot)).collect();
    let ds: f64 = dz.iter().zip(cos).map(|(a, b)| a * b).sum();
    tape.acc(grads, strength)[0] += ds;

    let kn = key_norm.abs();
    let mut dk = vec![0.0; w];
    let mut dkey_norm_term = 0.0;
    {
        let dm = tape.acc(grads, memory);
        for i in 0..cos.len() {
            let dcos = s * dz[i];
            if dcos == 0.0 {
                continue;
            }
            let rn = row_norms[i].abs();
            let row = &m[i * w..(i + 1) * w];
            let drow = &mut dm[i * w..(i + 1) * w];
            let row_floored = row_norms[i] < 0.0;
            for j in 0..w {
                let mut d = k[j] / (rn * kn);
                if !row_floored {
                    d -= cos[i] * row[j] / (rn * rn);
                }
                drow[j] += dcos * d;
                dk[j] += dcos * row[j] / (rn * kn);
            }
            dkey_norm_term += dcos * cos[i];
        }
    }
    if key_norm > 0.0 {
        for j in 0..w {
            dk[j] -= dkey_norm_term * k[j] / (kn * kn);
        }
    }
    add_into(tape.acc(grads, key), &dk);
}

pub(crate) fn backward_allocation(
    tape: &Tape,
    usage: Var,
    order: &[usize],
    g: &[f64],
    grads: &mut Grads,
) {
    let u = tape.data(usage);
    let n = order.len();
    // prefix[j] = Π_{i<j} u[order[i]]
    let mut prefix = vec![1.0; n + 1];
    for j in 0..n {
        prefix[j + 1] = prefix[j] * u[order[j]];
    }
    // tail[j] = Σ_{l>j} g_l (1 − u_l) Π_{j<i<l} u_i, all indices in sorted order
    let mut tail = vec![0.0; n];
    for j in (0..n.saturating_sub(1)).rev() {
        let next = order[j + 1];
        tail[j] = g[next] * (1.0 - u[next]) + u[next] * tail[j + 1];
    }
    let du = tape.acc(grads, usage);
    for j in 0..n {
        let slot = order[j];
        du[slot] += -g[slot] * prefix[j] + prefix[j] * tail[j];
    }
}

pub(crate) fn backward_erase_add(
    tape: &Tape,
    [memory, weights, erase, add]: [Var; 4],
    g: &[f64],
    grads: &mut Grads,
) {
    let m = tape.data(memory);
    let wt = tape.data(weights);
    let e = tape.data(erase);
    let a = tape.data(add);
    let (n, w) = (wt.len(), e.len());
    let mut dw = vec![0.0; n];
    let mut de = vec![0.0; w];
    let mut da = vec![0.0; w];
    {
        let dm = tape.acc(grads, memory);
        for i in 0..n {
            for j in 0..w {
                let gij = g[i * w + j];
                dm[i * w + j] += gij * (1.0 - wt[i] * e[j]);
                dw[i] += gij * (a[j] - m[i * w + j] * e[j]);
                de[j] -= gij * m[i * w + j] * wt[i];
                da[j] += gij * wt[i];
            }
        }
    }
    add_into(tape.acc(grads, weights), &dw);
    add_into(tape.acc(grads, erase), &de);
    add_into(tape.acc(grads, add), &da);
}

pub(crate) fn backward_weighted_read(
    tape: &Tape,
    weights: Var,
    memory: Var,
    g: &[f64],
    grads: &mut Grads,
) {
    let m = tape.data(memory);
    let wt = tape.data(weights);
    let w = g.len();
    let dw: Vec<f64> = m
        .chunks_exact(w)
        .map(|row| row.iter().zip(g).map(|(a, b)| a * b).sum())
        .collect();
    {
        let dm = tape.acc(grads, memory);
        for (i, &wi) in wt.iter().enumerate() {
            for j in 0..w {
                dm[i * w + j] += wi * g[j];
            }
        }
    }
    add_into(tape.acc(grads, weights), &dw);
}
