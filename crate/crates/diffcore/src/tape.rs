//! Append-only record of primitive applications and the reverse sweep over it.
//!
//! Every primitive evaluates eagerly when it is pushed, so values are
//! available immediately (action sampling needs them mid-rollout). Nodes are
//! stored in creation order, which is a topological order by construction.

use crate::error::{DiffError, Result};
use crate::tensor::Tensor;
use crate::{elementwise, memory, nn};

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Var(pub(crate) usize);

impl Var {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Activation {
    Identity,
    Relu,
    Tanh,
    Sigmoid,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unary {
    Relu,
    Tanh,
    Sigmoid,
    Softplus,
    Exp,
    Square,
}

pub(crate) enum Op {
    Leaf,
    Add(Var, Var),
    Sub(Var, Var),
    Mul(Var, Var),
    Affine(Var, f64),
    ScaleBy(Var, Var),
    Unary(Var, Unary),
    LnFloor(Var, f64),
    Sum(Var),
    Concat(Vec<Var>),
    Slice(Var, usize),
    Reshape(Var),
    Pick(Var, usize),
    Dense {
        x: Var,
        w: Var,
        b: Option<Var>,
        act: Activation,
    },
    Conv2d {
        input: Var,
        kernel: Var,
        bias: Option<Var>,
    },
    MaxPool2d {
        input: Var,
        argmax: Vec<usize>,
    },
    ChannelMax {
        input: Var,
        argmax: Vec<usize>,
    },
    Softmax(Var),
    LogSoftmax(Var),
    Lstm {
        x: Var,
        h: Var,
        c: Var,
        w: Var,
        b: Var,
        /// Activated gates laid out as `[i | f | g | o]`.
        gates: Vec<f64>,
    },
    ContentWeights {
        memory: Var,
        key: Var,
        strength: Var,
        cos: Vec<f64>,
        /// Row norms after flooring; a floored norm is stored negated.
        row_norms: Vec<f64>,
        key_norm: f64,
    },
    Allocation {
        usage: Var,
        order: Vec<usize>,
    },
    EraseAdd {
        memory: Var,
        weights: Var,
        erase: Var,
        add: Var,
    },
    WeightedRead {
        weights: Var,
        memory: Var,
    },
}

pub(crate) struct Node {
    pub(crate) value: Tensor,
    pub(crate) op: Op,
}

/// Single-owner recording of a computation.
#[derive(Default)]
pub struct Tape {
    pub(crate) nodes: Vec<Node>,
}

impl Tape {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Drops every node recorded at or after `len`. Handles to dropped nodes
    /// must not be used again.
    pub fn truncate(&mut self, len: usize) {
        self.nodes.truncate(len);
    }

    /// Records an input. Leaves receive gradients like any other node.
    pub fn leaf(&mut self, value: Tensor) -> Var {
        self.push(value, Op::Leaf)
    }

    /// Copies the current value of `v` into a fresh leaf, cutting the graph.
    pub fn detach(&mut self, v: Var) -> Var {
        let value = self.nodes[v.0].value.clone();
        self.leaf(value)
    }

    pub fn value(&self, v: Var) -> &Tensor {
        &self.nodes[v.0].value
    }

    pub fn shape(&self, v: Var) -> &[usize] {
        self.nodes[v.0].value.shape()
    }

    pub fn data(&self, v: Var) -> &[f64] {
        self.nodes[v.0].value.data()
    }

    pub fn item(&self, v: Var) -> f64 {
        self.nodes[v.0].value.item()
    }

    pub(crate) fn push(&mut self, value: Tensor, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    /// Reverse sweep from a scalar `loss`. Nodes that do not influence the
    /// loss end up with a zero gradient.
    pub fn backward(&self, loss: Var) -> Result<Gradients> {
        let shape = self.shape(loss);
        if self.value(loss).len() != 1 {
            return Err(DiffError::NonScalarLoss(shape.to_vec()));
        }
        let mut grads: Vec<Vec<f64>> = vec![Vec::new(); loss.0 + 1];
        grads[loss.0] = vec![1.0];
        for i in (0..=loss.0).rev() {
            let g = std::mem::take(&mut grads[i]);
            if g.is_empty() {
                continue;
            }
            self.backward_node(i, &g, &mut grads);
            grads[i] = g;
        }
        let lens = self.nodes.iter().map(|n| n.value.len()).collect();
        Ok(Gradients { grads, lens })
    }

    fn backward_node(&self, i: usize, g: &[f64], grads: &mut Grads) {
        let node = &self.nodes[i];
        let out = node.value.data();
        match &node.op {
            Op::Leaf => {}
            Op::Add(a, b) => {
                add_into(self.acc(grads, *a), g);
                add_into(self.acc(grads, *b), g);
            }
            Op::Sub(a, b) => {
                add_into(self.acc(grads, *a), g);
                for (d, gi) in self.acc(grads, *b).iter_mut().zip(g) {
                    *d -= gi;
                }
            }
            Op::Mul(a, b) => elementwise::backward_mul(self, *a, *b, g, grads),
            Op::Affine(a, scale) => {
                for (d, gi) in self.acc(grads, *a).iter_mut().zip(g) {
                    *d += scale * gi;
                }
            }
            Op::ScaleBy(a, s) => elementwise::backward_scale_by(self, *a, *s, g, grads),
            Op::Unary(a, f) => elementwise::backward_unary(self, *a, *f, out, g, grads),
            Op::LnFloor(a, floor) => elementwise::backward_ln(self, *a, *floor, g, grads),
            Op::Sum(a) => {
                let g0 = g[0];
                for d in self.acc(grads, *a).iter_mut() {
                    *d += g0;
                }
            }
            Op::Concat(parts) => {
                let mut offset = 0;
                for p in parts {
                    let n = self.nodes[p.0].value.len();
                    add_into(self.acc(grads, *p), &g[offset..offset + n]);
                    offset += n;
                }
            }
            Op::Slice(a, start) => {
                let d = self.acc(grads, *a);
                add_into(&mut d[*start..*start + g.len()], g);
            }
            Op::Reshape(a) => add_into(self.acc(grads, *a), g),
            Op::Pick(a, idx) => self.acc(grads, *a)[*idx] += g[0],
            Op::Dense { x, w, b, act } => nn::backward_dense(self, *x, *w, *b, *act, out, g, grads),
            Op::Conv2d {
                input,
                kernel,
                bias,
            } => nn::backward_conv2d(self, *input, *kernel, *bias, g, grads),
            Op::MaxPool2d { input, argmax } | Op::ChannelMax { input, argmax } => {
                let d = self.acc(grads, *input);
                for (gi, &src) in g.iter().zip(argmax) {
                    d[src] += gi;
                }
            }
            Op::Softmax(a) => nn::backward_softmax(self, *a, out, g, grads),
            Op::LogSoftmax(a) => nn::backward_log_softmax(self, *a, out, g, grads),
            Op::Lstm {
                x,
                h,
                c,
                w,
                b,
                gates,
            } => nn::backward_lstm(self, [*x, *h, *c, *w, *b], gates, out, g, grads),
            Op::ContentWeights {
                memory,
                key,
                strength,
                cos,
                row_norms,
                key_norm,
            } => memory::backward_content_weights(
                self,
                [*memory, *key, *strength],
                cos,
                row_norms,
                *key_norm,
                out,
                g,
                grads,
            ),
            Op::Allocation { usage, order } => {
                memory::backward_allocation(self, *usage, order, g, grads)
            }
            Op::EraseAdd {
                memory,
                weights,
                erase,
                add,
            } => memory::backward_erase_add(self, [*memory, *weights, *erase, *add], g, grads),
            Op::WeightedRead { weights, memory } => {
                memory::backward_weighted_read(self, *weights, *memory, g, grads)
            }
        }
    }

    /// Gradient slot for `v`, zero-initialized on first touch.
    pub(crate) fn acc<'a>(&self, grads: &'a mut Grads, v: Var) -> &'a mut [f64] {
        let slot = &mut grads[v.0];
        if slot.is_empty() {
            *slot = vec![0.0; self.nodes[v.0].value.len()];
        }
        slot
    }
}

pub(crate) type Grads = Vec<Vec<f64>>;

pub(crate) fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

/// Result of [`Tape::backward`].
pub struct Gradients {
    grads: Vec<Vec<f64>>,
    lens: Vec<usize>,
}

impl Gradients {
    /// Gradient of the loss with respect to `v`; `None` when `v` does not
    /// influence the loss.
    pub fn get(&self, v: Var) -> Option<&[f64]> {
        self.grads
            .get(v.0)
            .filter(|g| !g.is_empty())
            .map(|g| g.as_slice())
    }

    /// Gradient with respect to `v`, zero-filled when unreachable.
    pub fn wrt(&self, v: Var) -> Vec<f64> {
        match self.get(v) {
            Some(g) => g.to_vec(),
            None => vec![0.0; self.lens[v.0]],
        }
    }
}
