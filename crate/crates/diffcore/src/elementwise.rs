//! Shape-preserving arithmetic, reductions and plumbing (concat, slice, reshape).

use crate::error::{mismatch, DiffError, Result};
use crate::tape::{Grads, Op, Tape, Unary, Var};
use crate::tensor::Tensor;

impl Tape {
    fn same_len(&self, op: &'static str, a: Var, b: Var) -> Result<()> {
        if self.value(a).len() != self.value(b).len() {
            return Err(mismatch(op, self.shape(a), self.shape(b)));
        }
        Ok(())
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(f64, f64) -> f64) -> Tensor {
        let data = self
            .data(a)
            .iter()
            .zip(self.data(b))
            .map(|(&x, &y)| f(x, y))
            .collect();
        Tensor::new(self.shape(a), data).expect("shape preserved")
    }

    fn map(&self, a: Var, f: impl Fn(f64) -> f64) -> Tensor {
        let data = self.data(a).iter().map(|&x| f(x)).collect();
        Tensor::new(self.shape(a), data).expect("shape preserved")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len("add", a, b)?;
        let v = self.zip_with(a, b, |x, y| x + y);
        Ok(self.push(v, Op::Add(a, b)))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len("sub", a, b)?;
        let v = self.zip_with(a, b, |x, y| x - y);
        Ok(self.push(v, Op::Sub(a, b)))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.same_len("mul", a, b)?;
        let v = self.zip_with(a, b, |x, y| x * y);
        Ok(self.push(v, Op::Mul(a, b)))
    }

    /// `scale * a + shift`.
    pub fn affine(&mut self, a: Var, scale: f64, shift: f64) -> Var {
        let v = self.map(a, |x| scale * x + shift);
        self.push(v, Op::Affine(a, scale))
    }

    pub fn scale(&mut self, a: Var, scale: f64) -> Var {
        self.affine(a, scale, 0.0)
    }

    /// Multiplies every element of `a` by the single-element `s`.
    pub fn scale_by(&mut self, a: Var, s: Var) -> Result<Var> {
        if self.value(s).len() != 1 {
            return Err(mismatch("scale_by", &[1], self.shape(s)));
        }
        let k = self.item(s);
        let v = self.map(a, |x| k * x);
        Ok(self.push(v, Op::ScaleBy(a, s)))
    }

    pub fn unary(&mut self, a: Var, f: Unary) -> Var {
        let v = match f {
            Unary::Relu => self.map(a, |x| x.max(0.0)),
            Unary::Tanh => self.map(a, f64::tanh),
            Unary::Sigmoid => self.map(a, sigmoid),
            Unary::Softplus => self.map(a, softplus),
            Unary::Exp => self.map(a, f64::exp),
            Unary::Square => self.map(a, |x| x * x),
        };
        self.push(v, Op::Unary(a, f))
    }

    pub fn relu(&mut self, a: Var) -> Var {
        self.unary(a, Unary::Relu)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        self.unary(a, Unary::Tanh)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        self.unary(a, Unary::Sigmoid)
    }

    pub fn softplus(&mut self, a: Var) -> Var {
        self.unary(a, Unary::Softplus)
    }

    pub fn exp(&mut self, a: Var) -> Var {
        self.unary(a, Unary::Exp)
    }

    pub fn square(&mut self, a: Var) -> Var {
        self.unary(a, Unary::Square)
    }

    /// `ln(max(a, floor))`; the gradient is zero where the floor is active.
    pub fn ln_floor(&mut self, a: Var, floor: f64) -> Var {
        let v = self.map(a, |x| x.max(floor).ln());
        self.push(v, Op::LnFloor(a, floor))
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.data(a).iter().sum();
        self.push(Tensor::scalar(s), Op::Sum(a))
    }

    pub fn mean(&mut self, a: Var) -> Var {
        let n = self.value(a).len().max(1) as f64;
        let s = self.sum(a);
        self.scale(s, 1.0 / n)
    }

    /// Flat concatenation; the result is one-dimensional.
    pub fn concat(&mut self, parts: &[Var]) -> Var {
        let mut data = Vec::with_capacity(parts.iter().map(|p| self.value(*p).len()).sum());
        for p in parts {
            data.extend_from_slice(self.data(*p));
        }
        self.push(Tensor::vector(data), Op::Concat(parts.to_vec()))
    }

    /// Flat slice `a[start..start+len]`.
    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        let n = self.value(a).len();
        if start + len > n {
            return Err(DiffError::InvalidArgument {
                op: "slice",
                msg: format!("range {start}..{} exceeds length {n}", start + len),
            });
        }
        let v = Tensor::vector(self.data(a)[start..start + len].to_vec());
        Ok(self.push(v, Op::Slice(a, start)))
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        let v = self.value(a).clone().reshaped(shape)?;
        Ok(self.push(v, Op::Reshape(a)))
    }

    /// Single element `a[idx]` as a scalar node.
    pub fn pick(&mut self, a: Var, idx: usize) -> Result<Var> {
        let n = self.value(a).len();
        if idx >= n {
            return Err(DiffError::InvalidArgument {
                op: "pick",
                msg: format!("index {idx} out of range for length {n}"),
            });
        }
        let v = Tensor::scalar(self.data(a)[idx]);
        Ok(self.push(v, Op::Pick(a, idx)))
    }
}

pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x
    } else {
        x.exp().ln_1p()
    }
}

pub(crate) fn backward_mul(tape: &Tape, a: Var, b: Var, g: &[f64], grads: &mut Grads) {
    let bv = tape.data(b).to_vec();
    for ((d, gi), y) in tape.acc(grads, a).iter_mut().zip(g).zip(&bv) {
        *d += gi * y;
    }
    let av = tape.data(a);
    let db = tape.acc(grads, b);
    for ((d, gi), x) in db.iter_mut().zip(g).zip(av) {
        *d += gi * x;
    }
}

pub(crate) fn backward_scale_by(tape: &Tape, a: Var, s: Var, g: &[f64], grads: &mut Grads) {
    let k = tape.item(s);
    for (d, gi) in tape.acc(grads, a).iter_mut().zip(g) {
        *d += k * gi;
    }
    let ds: f64 = tape.data(a).iter().zip(g).map(|(x, gi)| x * gi).sum();
    tape.acc(grads, s)[0] += ds;
}

pub(crate) fn backward_unary(
    tape: &Tape,
    a: Var,
    f: Unary,
    out: &[f64],
    g: &[f64],
    grads: &mut Grads,
) {
    let x = tape.data(a);
    let d = tape.acc(grads, a);
    for i in 0..g.len() {
        let dydx = match f {
            Unary::Relu => {
                if x[i] > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Unary::Tanh => 1.0 - out[i] * out[i],
            Unary::Sigmoid => out[i] * (1.0 - out[i]),
            Unary::Softplus => sigmoid(x[i]),
            Unary::Exp => out[i],
            Unary::Square => 2.0 * x[i],
        };
        d[i] += g[i] * dydx;
    }
}

pub(crate) fn backward_ln(tape: &Tape, a: Var, floor: f64, g: &[f64], grads: &mut Grads) {
    let x = tape.data(a);
    let d = tape.acc(grads, a);
    for i in 0..g.len() {
        if x[i] > floor {
            d[i] += g[i] / x[i];
        }
    }
}
