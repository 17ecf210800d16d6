//! Parameterized layers over the diffcore tape.

use diffcore::{Activation, Bound, ParamId, ParamStore, Result, Tape, Tensor, Var};
use rand::Rng;

#[derive(Clone, Debug)]
pub struct Dense {
    w: ParamId,
    b: ParamId,
    act: Activation,
    inputs: usize,
    outputs: usize,
}

impl Dense {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        outputs: usize,
        act: Activation,
        rng: &mut R,
    ) -> Self {
        let w = store.insert_uniform(format!("{name}.w"), &[outputs, inputs], inputs, rng);
        let b = store.insert_zeros(format!("{name}.b"), &[outputs]);
        Self {
            w,
            b,
            act,
            inputs,
            outputs,
        }
    }

    pub fn apply(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        tape.dense(x, p[self.w], Some(p[self.b]), self.act)
    }

    pub fn inputs(&self) -> usize {
        self.inputs
    }

    pub fn outputs(&self) -> usize {
        self.outputs
    }
}

#[derive(Clone, Debug)]
pub struct Conv {
    kernel: ParamId,
    bias: ParamId,
    relu: bool,
}

impl Conv {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        channels: usize,
        filters: usize,
        k: usize,
        relu: bool,
        rng: &mut R,
    ) -> Self {
        let kernel = store.insert_uniform(
            format!("{name}.k"),
            &[filters, channels, k, k],
            channels * k * k,
            rng,
        );
        let bias = store.insert_zeros(format!("{name}.b"), &[filters]);
        Self { kernel, bias, relu }
    }

    pub fn apply(&self, tape: &mut Tape, p: &Bound, x: Var) -> Result<Var> {
        let y = tape.conv2d(x, p[self.kernel], Some(p[self.bias]))?;
        Ok(if self.relu { tape.relu(y) } else { y })
    }
}

/// LSTM cell with gate layout `[i|f|g|o]` and forget bias +1.
#[derive(Clone, Debug)]
pub struct LstmCell {
    w: ParamId,
    b: ParamId,
    hidden: usize,
}

impl LstmCell {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        inputs: usize,
        hidden: usize,
        rng: &mut R,
    ) -> Self {
        let w = store.insert_uniform(
            format!("{name}.w"),
            &[4 * hidden, inputs + hidden],
            inputs + hidden,
            rng,
        );
        let mut bias = vec![0.0; 4 * hidden];
        bias[hidden..2 * hidden].fill(1.0);
        let b = store.insert(format!("{name}.b"), Tensor::vector(bias));
        Self { w, b, hidden }
    }

    pub fn hidden(&self) -> usize {
        self.hidden
    }

    pub fn step(&self, tape: &mut Tape, p: &Bound, x: Var, h: Var, c: Var) -> Result<(Var, Var)> {
        tape.lstm_step(x, h, c, p[self.w], p[self.b])
    }
}
