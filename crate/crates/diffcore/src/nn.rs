//! Network primitives: dense layers, same-padded convolution, pooling,
//! softmax and the gated recurrent cell.

use crate::elementwise::sigmoid;
use crate::error::{mismatch, DiffError, Result};
use crate::tape::{add_into, Activation, Grads, Op, Tape, Var};
use crate::tensor::Tensor;

fn activate(act: Activation, z: f64) -> f64 {
    match act {
        Activation::Identity => z,
        Activation::Relu => z.max(0.0),
        Activation::Tanh => z.tanh(),
        Activation::Sigmoid => sigmoid(z),
    }
}

fn activation_slope(act: Activation, y: f64) -> f64 {
    match act {
        Activation::Identity => 1.0,
        Activation::Relu => {
            if y > 0.0 {
                1.0
            } else {
                0.0
            }
        }
        Activation::Tanh => 1.0 - y * y,
        Activation::Sigmoid => y * (1.0 - y),
    }
}

/// Index range of output rows/cols that read a valid input position at `offset`.
fn valid_range(extent: usize, offset: isize) -> std::ops::Range<usize> {
    let lo = (-offset).max(0) as usize;
    let hi = (extent as isize - offset).clamp(0, extent as isize) as usize;
    lo..hi.max(lo)
}

/// Flat input index of the first valid column for output row `y`.
fn src_offset(base: usize, y: usize, oy: isize, w: usize, ox: isize, x0: usize) -> usize {
    (base as isize + (y as isize + oy) * w as isize + x0 as isize + ox) as usize
}

impl Tape {
    /// `act(w · x + b)` with `w: [m, n]`, `x: [n]`, `b: [m]`.
    pub fn dense(&mut self, x: Var, w: Var, b: Option<Var>, act: Activation) -> Result<Var> {
        let ws = self.shape(w);
        if ws.len() != 2 || ws[1] != self.value(x).len() {
            return Err(mismatch("dense", &[self.value(x).len()], ws));
        }
        let (m, n) = (ws[0], ws[1]);
        if let Some(b) = b {
            if self.value(b).len() != m {
                return Err(mismatch("dense bias", &[m], self.shape(b)));
            }
        }
        let xv = self.data(x);
        let wv = self.data(w);
        let mut out = match b {
            Some(b) => self.data(b).to_vec(),
            None => vec![0.0; m],
        };
        for (r, o) in out.iter_mut().enumerate() {
            let row = &wv[r * n..(r + 1) * n];
            *o += row.iter().zip(xv).map(|(a, b)| a * b).sum::<f64>();
            *o = activate(act, *o);
        }
        Ok(self.push(Tensor::vector(out), Op::Dense { x, w, b, act }))
    }

    /// Same-padded 2-D convolution, `input: [C,H,W]`, `kernel: [F,C,k,k]`
    /// with odd `k`, optional `bias: [F]`. Output is `[F,H,W]`.
    pub fn conv2d(&mut self, input: Var, kernel: Var, bias: Option<Var>) -> Result<Var> {
        let is = self.shape(input);
        let ks = self.shape(kernel);
        if is.len() != 3 || ks.len() != 4 || ks[1] != is[0] || ks[2] != ks[3] {
            return Err(mismatch("conv2d", is, ks));
        }
        if ks[2].is_multiple_of(2) {
            return Err(DiffError::InvalidArgument {
                op: "conv2d",
                msg: format!("kernel extent {} must be odd", ks[2]),
            });
        }
        let (c_in, h, w) = (is[0], is[1], is[2]);
        let (f_out, k) = (ks[0], ks[2]);
        if let Some(b) = bias {
            if self.value(b).len() != f_out {
                return Err(mismatch("conv2d bias", &[f_out], self.shape(b)));
            }
        }
        let pad = (k / 2) as isize;
        let src = self.data(input);
        let kv = self.data(kernel);
        let plane = h * w;
        let mut out = vec![0.0; f_out * plane];
        if let Some(b) = bias {
            for (f, &bf) in self.data(b).iter().enumerate() {
                out[f * plane..(f + 1) * plane].fill(bf);
            }
        }
        for f in 0..f_out {
            for c in 0..c_in {
                for ky in 0..k {
                    let oy = ky as isize - pad;
                    for kx in 0..k {
                        let ox = kx as isize - pad;
                        let wt = kv[((f * c_in + c) * k + ky) * k + kx];
                        if wt == 0.0 {
                            continue;
                        }
                        let xr = valid_range(w, ox);
                        for y in valid_range(h, oy) {
                            let o = f * plane + y * w;
                            let s = src_offset(c * plane, y, oy, w, ox, xr.start);
                            let orow = &mut out[o + xr.start..o + xr.end];
                            let srow = &src[s..s + xr.len()];
                            for (a, b) in orow.iter_mut().zip(srow) {
                                *a += wt * b;
                            }
                        }
                    }
                }
            }
        }
        let t = Tensor::new(&[f_out, h, w], out)?;
        Ok(self.push(
            t,
            Op::Conv2d {
                input,
                kernel,
                bias,
            },
        ))
    }

    /// 2×2 max pooling with stride 2 over `[C,H,W]`; ties go to the first
    /// element of the window in row-major order.
    pub fn maxpool2d(&mut self, input: Var) -> Result<Var> {
        let s = self.shape(input);
        if s.len() != 3 || !s[1].is_multiple_of(2) || !s[2].is_multiple_of(2) {
            return Err(DiffError::InvalidArgument {
                op: "maxpool2d",
                msg: format!("expected [C,H,W] with even H and W, got {s:?}"),
            });
        }
        let (c, h, w) = (s[0], s[1], s[2]);
        let (oh, ow) = (h / 2, w / 2);
        let src = self.data(input);
        let mut out = Vec::with_capacity(c * oh * ow);
        let mut argmax = Vec::with_capacity(c * oh * ow);
        for ch in 0..c {
            for y in 0..oh {
                for x in 0..ow {
                    let mut best = usize::MAX;
                    for (dy, dx) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
                        let idx = ch * h * w + (2 * y + dy) * w + 2 * x + dx;
                        if best == usize::MAX || src[idx] > src[best] {
                            best = idx;
                        }
                    }
                    out.push(src[best]);
                    argmax.push(best);
                }
            }
        }
        let t = Tensor::new(&[c, oh, ow], out)?;
        Ok(self.push(t, Op::MaxPool2d { input, argmax }))
    }

    /// Maximum over the channel axis of `[C,H,W]`, giving `[1,H,W]`.
    /// Ties go to the lowest channel.
    pub fn channel_max(&mut self, input: Var) -> Result<Var> {
        let s = self.shape(input);
        if s.len() != 3 || s[0] == 0 {
            return Err(mismatch("channel_max", &[0, 0, 0], s));
        }
        let (c, plane) = (s[0], s[1] * s[2]);
        let (h, w) = (s[1], s[2]);
        let src = self.data(input);
        let mut out = src[..plane].to_vec();
        let mut argmax: Vec<usize> = (0..plane).collect();
        for ch in 1..c {
            let layer = &src[ch * plane..(ch + 1) * plane];
            for i in 0..plane {
                if layer[i] > out[i] {
                    out[i] = layer[i];
                    argmax[i] = ch * plane + i;
                }
            }
        }
        let t = Tensor::new(&[1, h, w], out)?;
        Ok(self.push(t, Op::ChannelMax { input, argmax }))
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        if self.value(a).is_empty() {
            return Err(mismatch("softmax", &[1], &[0]));
        }
        let v = Tensor::vector(softmax(self.data(a)));
        Ok(self.push(v, Op::Softmax(a)))
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        let x = self.data(a);
        if x.is_empty() {
            return Err(mismatch("log_softmax", &[1], &[0]));
        }
        let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + x.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        let v = Tensor::vector(x.iter().map(|v| v - lse).collect());
        Ok(self.push(v, Op::LogSoftmax(a)))
    }

    /// One step of the gated recurrent cell. `w: [4u, d+u]` holds the input
    /// and recurrent weights for the gates in the order input, forget,
    /// candidate, output; `b: [4u]`. Returns `(h', c')`.
    pub fn lstm_step(&mut self, x: Var, h: Var, c: Var, w: Var, b: Var) -> Result<(Var, Var)> {
        let d = self.value(x).len();
        let u = self.value(h).len();
        if self.value(c).len() != u {
            return Err(mismatch("lstm c", &[u], self.shape(c)));
        }
        if self.shape(w) != [4 * u, d + u] {
            return Err(mismatch("lstm w", &[4 * u, d + u], self.shape(w)));
        }
        if self.value(b).len() != 4 * u {
            return Err(mismatch("lstm b", &[4 * u], self.shape(b)));
        }
        let xv = self.data(x);
        let hv = self.data(h);
        let cv = self.data(c);
        let wv = self.data(w);
        let bv = self.data(b);
        let cols = d + u;
        let mut gates = vec![0.0; 4 * u];
        for (r, gate) in gates.iter_mut().enumerate() {
            let row = &wv[r * cols..(r + 1) * cols];
            let z = bv[r]
                + row[..d].iter().zip(xv).map(|(a, b)| a * b).sum::<f64>()
                + row[d..].iter().zip(hv).map(|(a, b)| a * b).sum::<f64>();
            *gate = if (2 * u..3 * u).contains(&r) {
                z.tanh()
            } else {
                sigmoid(z)
            };
        }
        let mut out = vec![0.0; 2 * u];
        for k in 0..u {
            let (i, f, g, o) = (gates[k], gates[u + k], gates[2 * u + k], gates[3 * u + k]);
            let c_new = f * cv[k] + i * g;
            out[u + k] = c_new;
            out[k] = o * c_new.tanh();
        }
        let node = self.push(
            Tensor::vector(out),
            Op::Lstm {
                x,
                h,
                c,
                w,
                b,
                gates,
            },
        );
        let h_new = self.slice(node, 0, u)?;
        let c_new = self.slice(node, u, u)?;
        Ok((h_new, c_new))
    }
}

/// Max-shifted softmax of a slice.
pub fn softmax(x: &[f64]) -> Vec<f64> {
    let max = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = x.iter().map(|v| (v - max).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn backward_dense(
    tape: &Tape,
    x: Var,
    w: Var,
    b: Option<Var>,
    act: Activation,
    out: &[f64],
    g: &[f64],
    grads: &mut Grads,
) {
    let dz: Vec<f64> = g
        .iter()
        .zip(out)
        .map(|(gi, y)| gi * activation_slope(act, *y))
        .collect();
    let n = tape.value(x).len();
    let xv = tape.data(x);
    let wv = tape.data(w);
    let mut dx = vec![0.0; n];
    {
        let dw = tape.acc(grads, w);
        for (r, &dzr) in dz.iter().enumerate() {
            if dzr == 0.0 {
                continue;
            }
            let row = &wv[r * n..(r + 1) * n];
            let drow = &mut dw[r * n..(r + 1) * n];
            for j in 0..n {
                dx[j] += row[j] * dzr;
                drow[j] += dzr * xv[j];
            }
        }
    }
    add_into(tape.acc(grads, x), &dx);
    if let Some(b) = b {
        add_into(tape.acc(grads, b), &dz);
    }
}

pub(crate) fn backward_conv2d(
    tape: &Tape,
    input: Var,
    kernel: Var,
    bias: Option<Var>,
    g: &[f64],
    grads: &mut Grads,
) {
    let is = tape.shape(input);
    let ks = tape.shape(kernel);
    let (c_in, h, w) = (is[0], is[1], is[2]);
    let (f_out, k) = (ks[0], ks[2]);
    let pad = (k / 2) as isize;
    let plane = h * w;
    let src = tape.data(input);
    let kv = tape.data(kernel);
    let mut din = vec![0.0; src.len()];
    let mut dk = vec![0.0; kv.len()];
    for f in 0..f_out {
        for c in 0..c_in {
            for ky in 0..k {
                let oy = ky as isize - pad;
                for kx in 0..k {
                    let ox = kx as isize - pad;
                    let ki = ((f * c_in + c) * k + ky) * k + kx;
                    let wt = kv[ki];
                    let xr = valid_range(w, ox);
                    let mut acc = 0.0;
                    for y in valid_range(h, oy) {
                        let o = f * plane + y * w;
                        let s = src_offset(c * plane, y, oy, w, ox, xr.start);
                        let grow = &g[o + xr.start..o + xr.end];
                        let srow = &src[s..s + xr.len()];
                        acc += grow.iter().zip(srow).map(|(a, b)| a * b).sum::<f64>();
                        if wt != 0.0 {
                            let drow = &mut din[s..s + xr.len()];
                            for (d, gv) in drow.iter_mut().zip(grow) {
                                *d += wt * gv;
                            }
                        }
                    }
                    dk[ki] += acc;
                }
            }
        }
    }
    add_into(tape.acc(grads, input), &din);
    add_into(tape.acc(grads, kernel), &dk);
    if let Some(b) = bias {
        let db = tape.acc(grads, b);
        for (f, d) in db.iter_mut().enumerate() {
            *d += g[f * plane..(f + 1) * plane].iter().sum::<f64>();
        }
    }
}

pub(crate) fn backward_softmax(tape: &Tape, a: Var, out: &[f64], g: &[f64], grads: &mut Grads) {
    let dot: f64 = g.iter().zip(out).map(|(gi, y)| gi * y).sum();
    for ((d, gi), y) in tape.acc(grads, a).iter_mut().zip(g).zip(out) {
        *d += y * (gi - dot);
    }
}

pub(crate) fn backward_log_softmax(tape: &Tape, a: Var, out: &[f64], g: &[f64], grads: &mut Grads) {
    let total: f64 = g.iter().sum();
    for ((d, gi), y) in tape.acc(grads, a).iter_mut().zip(g).zip(out) {
        *d += gi - y.exp() * total;
    }
}

pub(crate) fn backward_lstm(
    tape: &Tape,
    [x, h, c, w, b]: [Var; 5],
    gates: &[f64],
    out: &[f64],
    g: &[f64],
    grads: &mut Grads,
) {
    let d = tape.value(x).len();
    let u = tape.value(h).len();
    let cols = d + u;
    let cv = tape.data(c);
    let mut dz = vec![0.0; 4 * u];
    let mut dc_prev = vec![0.0; u];
    for k in 0..u {
        let (i, f, gg, o) = (gates[k], gates[u + k], gates[2 * u + k], gates[3 * u + k]);
        let tc = out[u + k].tanh();
        let dh = g[k];
        let dc = g[u + k] + dh * o * (1.0 - tc * tc);
        let do_ = dh * tc;
        dz[k] = dc * gg * i * (1.0 - i);
        dz[u + k] = dc * cv[k] * f * (1.0 - f);
        dz[2 * u + k] = dc * i * (1.0 - gg * gg);
        dz[3 * u + k] = do_ * o * (1.0 - o);
        dc_prev[k] = dc * f;
    }
    let xv = tape.data(x);
    let hv = tape.data(h);
    let wv = tape.data(w);
    let mut dxh = vec![0.0; cols];
    {
        let dw = tape.acc(grads, w);
        for (r, &dzr) in dz.iter().enumerate() {
            if dzr == 0.0 {
                continue;
            }
            let row = &wv[r * cols..(r + 1) * cols];
            let drow = &mut dw[r * cols..(r + 1) * cols];
            for j in 0..d {
                dxh[j] += row[j] * dzr;
                drow[j] += dzr * xv[j];
            }
            for j in 0..u {
                dxh[d + j] += row[d + j] * dzr;
                drow[d + j] += dzr * hv[j];
            }
        }
    }
    add_into(tape.acc(grads, b), &dz);
    add_into(tape.acc(grads, x), &dxh[..d]);
    add_into(tape.acc(grads, h), &dxh[d..]);
    add_into(tape.acc(grads, c), &dc_prev);
}
