//! Value-iteration module: `K` rounds of convolution over the stacked
//! reward and value maps followed by a max over action channels.

use diffcore::{DiffError, Result, Tape, Tensor, Var};

/// Side of the pooled value summary.
pub const SUMMARY_SIDE: usize = 5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct VinConfig {
    /// Abstract action channels `A`.
    pub actions: usize,
    /// Odd kernel side `k`.
    pub kernel: usize,
    /// Iterations `K`.
    pub iterations: usize,
}

impl Default for VinConfig {
    fn default() -> Self {
        Self {
            actions: 8,
            kernel: 3,
            iterations: 10,
        }
    }
}

impl VinConfig {
    /// Shape of the transition kernel: one filter per action over the
    /// (reward, value) input pair.
    pub fn kernel_shape(&self) -> [usize; 4] {
        [self.actions, 2, self.kernel, self.kernel]
    }

    pub fn kernel_len(&self) -> usize {
        self.kernel_shape().iter().product()
    }
}

/// One Bellman backup: `q = conv2d([r̄; v], kernel)`, `v' = max_a q`.
pub fn vi_step(tape: &mut Tape, v: Var, r_bar: Var, kernel: Var) -> Result<Var> {
    let (rs, vs) = (tape.shape(r_bar).to_vec(), tape.shape(v).to_vec());
    if rs.len() != 3 || rs[0] != 1 || rs != vs {
        return Err(DiffError::ShapeMismatch {
            op: "vi_step",
            expected: rs,
            found: vs,
        });
    }
    let stacked = tape.concat(&[r_bar, v]);
    let stacked = tape.reshape(stacked, &[2, rs[1], rs[2]])?;
    let q = tape.conv2d(stacked, kernel, None)?;
    tape.channel_max(q)
}

/// `K` backups starting from `v₀ = 0`.
pub fn vin_forward(tape: &mut Tape, r_bar: Var, kernel: Var, iterations: usize) -> Result<Var> {
    let v0 = tape.leaf(Tensor::zeros(tape.shape(r_bar)));
    vin_forward_from(tape, v0, r_bar, kernel, iterations)
}

/// `K` backups from an explicit starting value map.
pub fn vin_forward_from(
    tape: &mut Tape,
    v0: Var,
    r_bar: Var,
    kernel: Var,
    iterations: usize,
) -> Result<Var> {
    let mut v = v0;
    for _ in 0..iterations {
        v = vi_step(tape, v, r_bar, kernel)?;
    }
    Ok(v)
}

/// Max-pools `[1,H,W]` by 2×2 windows down to 5×5 and flattens to 25.
pub fn local_value_summary(tape: &mut Tape, v: Var) -> Result<Var> {
    let s = tape.shape(v).to_vec();
    let reachable = |n: usize| {
        n >= SUMMARY_SIDE && n.is_multiple_of(SUMMARY_SIDE) && (n / SUMMARY_SIDE).is_power_of_two()
    };
    if s.len() != 3 || s[0] != 1 || s[1] != s[2] || !reachable(s[1]) {
        return Err(DiffError::InvalidArgument {
            op: "local_value_summary",
            msg: format!("cannot pool {s:?} to {SUMMARY_SIDE}x{SUMMARY_SIDE}"),
        });
    }
    let mut out = v;
    while tape.shape(out)[1] > SUMMARY_SIDE {
        out = tape.maxpool2d(out)?;
    }
    tape.reshape(out, &[SUMMARY_SIDE * SUMMARY_SIDE])
}

/// Hand-set kernels for tests and demos. Channels are
/// `[stay, N, E, S, W]` over a 3×3 window.
pub mod oracle {
    use diffcore::Tensor;

    /// Neighbor offsets `(dx, dy)` for the five channels.
    pub const MOVES: [(isize, isize); 5] = [(0, 0), (0, -1), (1, 0), (0, 1), (-1, 0)];

    fn kernel(weights: impl Fn(usize, usize, isize, isize) -> f64) -> Tensor {
        let mut data = vec![0.0; 5 * 2 * 9];
        for a in 0..5 {
            for c in 0..2 {
                for ky in 0..3 {
                    for kx in 0..3 {
                        data[((a * 2 + c) * 3 + ky) * 3 + kx] =
                            weights(a, c, kx as isize - 1, ky as isize - 1);
                    }
                }
            }
        }
        Tensor::new(&[5, 2, 3, 3], data).expect("fixed shape")
    }

    /// `q_a(s) = r(s) + γ·V(s + δ_a)`; off-grid neighbors contribute 0.
    pub fn moves_kernel(gamma: f64) -> Tensor {
        kernel(|a, c, dx, dy| match c {
            0 if dx == 0 && dy == 0 => 1.0,
            1 if (dx, dy) == MOVES[a] => gamma,
            _ => 0.0,
        })
    }

    /// Terminal-reward variant: the stay channel collects `r(s)` and ends,
    /// the move channels carry `γ·V(s + δ_a)` without reward.
    pub fn terminal_kernel(gamma: f64) -> Tensor {
        kernel(|a, c, dx, dy| match (a, c) {
            (0, 0) if dx == 0 && dy == 0 => 1.0,
            (1.., 1) if (dx, dy) == MOVES[a] => gamma,
            _ => 0.0,
        })
    }
}
