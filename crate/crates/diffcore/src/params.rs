//! Named parameter tensors, their initialization, and the checkpoint format.
//!
//! Checkpoints are plain text:
//!
//! ```text
//! diffcore-checkpoint v1
//! meta <key> <value...>
//! param <name> <dims...>
//! <values, whitespace separated>
//! end
//! ```
//!
//! Values are written with Rust's shortest round-trip formatting, so a
//! save/load cycle is bit-exact.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use rand::Rng;

use crate::error::{DiffError, Result};
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

const MAGIC: &str = "diffcore-checkpoint v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct ParamId(usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, name: impl Into<String>, value: Tensor) -> ParamId {
        self.names.push(name.into());
        self.tensors.push(value);
        ParamId(self.tensors.len() - 1)
    }

    /// Weights drawn from `U(-sqrt(1/fan_in), sqrt(1/fan_in))`.
    pub fn insert_uniform<R: Rng>(
        &mut self,
        name: impl Into<String>,
        shape: &[usize],
        fan_in: usize,
        rng: &mut R,
    ) -> ParamId {
        let bound = (1.0 / fan_in.max(1) as f64).sqrt();
        let n: usize = shape.iter().product();
        let data = (0..n).map(|_| rng.gen_range(-bound..=bound)).collect();
        let t = Tensor::new(shape, data).expect("length matches shape");
        self.insert(name, t)
    }

    pub fn insert_zeros(&mut self, name: impl Into<String>, shape: &[usize]) -> ParamId {
        self.insert(name, Tensor::zeros(shape))
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Total scalar count.
    pub fn numel(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn get(&self, id: ParamId) -> &Tensor {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor {
        &mut self.tensors[id.0]
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.names.iter().position(|n| n == name).map(ParamId)
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub(crate) fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    /// Records every parameter as a leaf on `tape`.
    pub fn bind(&self, tape: &mut Tape) -> Bound {
        Bound(self.tensors.iter().map(|t| tape.leaf(t.clone())).collect())
    }
}

/// Tape handles for every parameter of a [`ParamStore`], index-aligned.
#[derive(Clone, Debug)]
pub struct Bound(Vec<Var>);

impl Bound {
    /// Wraps handles that are already on a tape, in parameter order.
    pub fn from_vars(vars: Vec<Var>) -> Self {
        Self(vars)
    }

    pub fn var(&self, id: ParamId) -> Var {
        self.0[id.0]
    }

    pub fn vars(&self) -> &[Var] {
        &self.0
    }
}

impl std::ops::Index<ParamId> for Bound {
    type Output = Var;

    fn index(&self, id: ParamId) -> &Var {
        &self.0[id.0]
    }
}

/// Parameters plus free-form string metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Checkpoint {
    pub meta: BTreeMap<String, String>,
    pub params: ParamStore,
}

impl Checkpoint {
    pub fn write_to<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{MAGIC}")?;
        for (k, v) in &self.meta {
            writeln!(out, "meta {k} {v}")?;
        }
        for (name, t) in self.params.names.iter().zip(&self.params.tensors) {
            write!(out, "param {name}")?;
            for d in t.shape() {
                write!(out, " {d}")?;
            }
            writeln!(out)?;
            let mut first = true;
            for x in t.data() {
                if !first {
                    out.write_all(b" ")?;
                }
                write!(out, "{x:e}")?;
                first = false;
            }
            writeln!(out)?;
        }
        writeln!(out, "end")?;
        Ok(())
    }

    pub fn read_from<R: BufRead>(input: R) -> Result<Self> {
        let mut lines = input.lines().enumerate();
        let (n, header) = next_line(&mut lines)?;
        if header.trim() != MAGIC {
            return Err(bad(n, format!("expected header {MAGIC:?}")));
        }
        let mut ckpt = Checkpoint::default();
        loop {
            let (n, line) = next_line(&mut lines)?;
            let line = line.trim();
            if line == "end" {
                return Ok(ckpt);
            }
            if let Some(rest) = line.strip_prefix("meta ") {
                let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                ckpt.meta.insert(k.to_string(), v.to_string());
            } else if let Some(rest) = line.strip_prefix("param ") {
                let mut parts = rest.split_whitespace();
                let name = parts.next().ok_or_else(|| bad(n, "missing name".into()))?;
                let shape = parts
                    .map(|d| d.parse::<usize>().map_err(|e| bad(n, e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                let (vn, values) = next_line(&mut lines)?;
                let data = values
                    .split_whitespace()
                    .map(|x| x.parse::<f64>().map_err(|e| bad(vn, e.to_string())))
                    .collect::<Result<Vec<_>>>()?;
                let t = Tensor::new(&shape, data).map_err(|e| bad(vn, e.to_string()))?;
                ckpt.params.insert(name, t);
            } else {
                return Err(bad(n, format!("unrecognized line {line:?}")));
            }
        }
    }

    pub fn save(&self, path: &std::path::Path) -> Result<()> {
        let f = std::fs::File::create(path)?;
        let mut w = std::io::BufWriter::new(f);
        self.write_to(&mut w)?;
        w.flush()?;
        Ok(())
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let f = std::fs::File::open(path)?;
        Self::read_from(std::io::BufReader::new(f))
    }
}

fn next_line<I>(lines: &mut I) -> Result<(usize, String)>
where
    I: Iterator<Item = (usize, std::io::Result<String>)>,
{
    match lines.next() {
        Some((i, l)) => Ok((i + 1, l?)),
        None => Err(bad(0, "unexpected end of file".into())),
    }
}

fn bad(line: usize, msg: String) -> DiffError {
    DiffError::Checkpoint { line, msg }
}
