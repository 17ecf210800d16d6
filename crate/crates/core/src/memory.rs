//! Simplified DNC: one read head, one write head, content and allocation
//! addressing, LSTM controller.

use diffcore::{Activation, Bound, DiffError, ParamStore, Result, Tape, Tensor, Var};
use rand::Rng;

use crate::layers::{Dense, LstmCell};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MemoryConfig {
    pub slots: usize,
    pub word: usize,
    pub hidden: usize,
}

impl Default for MemoryConfig {
    fn default() -> Self {
        Self {
            slots: 64,
            word: 8,
            hidden: 128,
        }
    }
}

impl MemoryConfig {
    /// Raw interface width: two keys, erase and add vectors, two strengths
    /// and two gates.
    pub fn interface_len(&self) -> usize {
        4 * self.word + 4
    }
}

/// Memory contents between steps, detached from any tape.
#[derive(Clone, Debug, PartialEq)]
pub struct MemoryState {
    pub memory: Tensor,
    pub usage: Tensor,
    pub read_weights: Tensor,
    pub write_weights: Tensor,
    pub last_read: Tensor,
}

impl MemoryState {
    pub fn fresh(cfg: &MemoryConfig) -> Self {
        Self {
            memory: Tensor::zeros(&[cfg.slots, cfg.word]),
            usage: Tensor::zeros(&[cfg.slots]),
            read_weights: Tensor::zeros(&[cfg.slots]),
            write_weights: Tensor::zeros(&[cfg.slots]),
            last_read: Tensor::zeros(&[cfg.word]),
        }
    }

    /// Records the state as leaves, cutting gradient flow to earlier steps.
    pub fn bind(&self, tape: &mut Tape) -> MemoryVars {
        MemoryVars {
            memory: tape.leaf(self.memory.clone()),
            usage: tape.leaf(self.usage.clone()),
            read_weights: tape.leaf(self.read_weights.clone()),
            write_weights: tape.leaf(self.write_weights.clone()),
            last_read: tape.leaf(self.last_read.clone()),
        }
    }
}

/// Memory state living on a tape.
#[derive(Clone, Copy, Debug)]
pub struct MemoryVars {
    pub memory: Var,
    pub usage: Var,
    pub read_weights: Var,
    pub write_weights: Var,
    pub last_read: Var,
}

impl MemoryVars {
    pub fn snapshot(&self, tape: &Tape) -> MemoryState {
        MemoryState {
            memory: tape.value(self.memory).clone(),
            usage: tape.value(self.usage).clone(),
            read_weights: tape.value(self.read_weights).clone(),
            write_weights: tape.value(self.write_weights).clone(),
            last_read: tape.value(self.last_read).clone(),
        }
    }
}

/// Squashed controller outputs.
#[derive(Clone, Copy, Debug)]
pub struct InterfaceVector {
    pub read_key: Var,
    pub read_strength: Var,
    pub write_key: Var,
    pub write_strength: Var,
    pub erase: Var,
    pub add: Var,
    pub allocation_gate: Var,
    pub write_gate: Var,
}

impl InterfaceVector {
    /// Splits a raw vector laid out as
    /// `[read_key | write_key | erase | add | β_r | β_w | g_a | g_w]`.
    /// Strengths pass through `1 + softplus`, erase and gates through sigmoid.
    pub fn from_raw(tape: &mut Tape, raw: Var, word: usize) -> Result<Self> {
        let n = tape.value(raw).len();
        if n != 4 * word + 4 {
            return Err(DiffError::ShapeMismatch {
                op: "interface",
                expected: vec![4 * word + 4],
                found: tape.shape(raw).to_vec(),
            });
        }
        let read_key = tape.slice(raw, 0, word)?;
        let write_key = tape.slice(raw, word, word)?;
        let erase = tape.slice(raw, 2 * word, word)?;
        let erase = tape.sigmoid(erase);
        let add = tape.slice(raw, 3 * word, word)?;
        let strengths = tape.slice(raw, 4 * word, 2)?;
        let strengths = tape.softplus(strengths);
        let strengths = tape.affine(strengths, 1.0, 1.0);
        let gates = tape.slice(raw, 4 * word + 2, 2)?;
        let gates = tape.sigmoid(gates);
        Ok(Self {
            read_key,
            read_strength: tape.slice(strengths, 0, 1)?,
            write_key,
            write_strength: tape.slice(strengths, 1, 1)?,
            erase,
            add,
            allocation_gate: tape.slice(gates, 0, 1)?,
            write_gate: tape.slice(gates, 1, 1)?,
        })
    }
}

/// `softmax_i(β · cos(M[i], key))`.
pub fn content_weights(tape: &mut Tape, memory: Var, key: Var, strength: Var) -> Result<Var> {
    tape.content_weights(memory, key, strength)
}

/// Write head: blends allocation and content addressing, then erases and
/// adds along the write weights and updates usage.
pub fn mem_write(
    tape: &mut Tape,
    state: &MemoryVars,
    iface: &InterfaceVector,
) -> Result<MemoryVars> {
    let content = tape.content_weights(state.memory, iface.write_key, iface.write_strength)?;
    let alloc = tape.allocation_weights(state.usage);
    let a = tape.scale_by(alloc, iface.allocation_gate)?;
    let not_gate = tape.affine(iface.allocation_gate, -1.0, 1.0);
    let c = tape.scale_by(content, not_gate)?;
    let mix = tape.add(a, c)?;
    let w = tape.scale_by(mix, iface.write_gate)?;
    let memory = tape.erase_add(state.memory, w, iface.erase, iface.add)?;
    let uw = tape.mul(state.usage, w)?;
    let grown = tape.add(state.usage, w)?;
    let usage = tape.sub(grown, uw)?;
    Ok(MemoryVars {
        memory,
        usage,
        write_weights: w,
        ..*state
    })
}

/// Read head: content lookup with the read key; the result becomes
/// `last_read`.
pub fn mem_read(
    tape: &mut Tape,
    state: &MemoryVars,
    iface: &InterfaceVector,
) -> Result<(Var, MemoryVars)> {
    let w = tape.content_weights(state.memory, iface.read_key, iface.read_strength)?;
    let read = tape.weighted_read(w, state.memory)?;
    Ok((
        read,
        MemoryVars {
            read_weights: w,
            last_read: read,
            ..*state
        },
    ))
}

#[derive(Clone, Copy, Debug)]
pub struct DncOutput {
    /// `h' ⊕ read`.
    pub output: Var,
    pub h: Var,
    pub c: Var,
    pub state: MemoryVars,
}

/// Controller plus memory. The LSTM sees `input ⊕ last_read`.
#[derive(Clone, Debug)]
pub struct Dnc {
    cfg: MemoryConfig,
    input: usize,
    controller: LstmCell,
    interface: Dense,
}

impl Dnc {
    pub fn new<R: Rng>(
        store: &mut ParamStore,
        name: &str,
        input: usize,
        cfg: MemoryConfig,
        rng: &mut R,
    ) -> Self {
        let controller = LstmCell::new(
            store,
            &format!("{name}.lstm"),
            input + cfg.word,
            cfg.hidden,
            rng,
        );
        let interface = Dense::new(
            store,
            &format!("{name}.iface"),
            cfg.hidden,
            cfg.interface_len(),
            Activation::Identity,
            rng,
        );
        Self {
            cfg,
            input,
            controller,
            interface,
        }
    }

    pub fn config(&self) -> &MemoryConfig {
        &self.cfg
    }

    pub fn output_len(&self) -> usize {
        self.cfg.hidden + self.cfg.word
    }

    pub fn step(
        &self,
        tape: &mut Tape,
        p: &Bound,
        h: Var,
        c: Var,
        input: Var,
        state: &MemoryVars,
    ) -> Result<DncOutput> {
        if tape.value(input).len() != self.input {
            return Err(DiffError::ShapeMismatch {
                op: "dnc_step",
                expected: vec![self.input],
                found: tape.shape(input).to_vec(),
            });
        }
        let x = tape.concat(&[input, state.last_read]);
        let (h, c) = self.controller.step(tape, p, x, h, c)?;
        let raw = self.interface.apply(tape, p, h)?;
        let iface = InterfaceVector::from_raw(tape, raw, self.cfg.word)?;
        let written = mem_write(tape, state, &iface)?;
        let (read, state) = mem_read(tape, &written, &iface)?;
        let output = tape.concat(&[h, read]);
        Ok(DncOutput {
            output,
            h,
            c,
            state,
        })
    }
}
