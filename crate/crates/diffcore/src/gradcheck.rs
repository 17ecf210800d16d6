//! Central-difference verification of reverse-mode gradients.

use crate::error::Result;
use crate::tape::{Tape, Var};
use crate::tensor::Tensor;

/// Outcome of a gradient check.
#[derive(Clone, Debug, PartialEq)]
pub struct GradCheck {
    pub max_rel_error: f64,
    /// `(input, element)` where the worst error occurred.
    pub worst: Option<(usize, usize)>,
    /// `(analytic, numeric)` at `worst`.
    pub worst_values: Option<(f64, f64)>,
    pub checked: usize,
    pub skipped: usize,
}

/// Relative error with denominator `max(|a|, |b|, 1e-8)`.
pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-8)
}

/// Checks the gradient of scalar `f` at `point` against
/// `(f(x+h) − f(x−h)) / 2h`, element by element.
pub fn grad_check<F>(f: F, point: &Tensor, h: f64) -> Result<GradCheck>
where
    F: Fn(&mut Tape, Var) -> Result<Var>,
{
    grad_check_inputs(
        |tape, vars| f(tape, vars[0]),
        std::slice::from_ref(point),
        h,
        |_, _| true,
    )
}

/// Multi-input check. `select(input, element)` chooses which coordinates
/// are perturbed; unselected coordinates count as skipped. Use it to leave
/// out known non-differentiable points such as pooling ties.
pub fn grad_check_inputs<F, S>(f: F, inputs: &[Tensor], h: f64, select: S) -> Result<GradCheck>
where
    F: Fn(&mut Tape, &[Var]) -> Result<Var>,
    S: Fn(usize, usize) -> bool,
{
    let eval = |points: &[Tensor]| -> Result<f64> {
        let mut tape = Tape::new();
        let vars: Vec<Var> = points.iter().map(|p| tape.leaf(p.clone())).collect();
        let out = f(&mut tape, &vars)?;
        Ok(tape.item(out))
    };

    let mut tape = Tape::new();
    let vars: Vec<Var> = inputs.iter().map(|p| tape.leaf(p.clone())).collect();
    let out = f(&mut tape, &vars)?;
    let grads = tape.backward(out)?;
    let analytic: Vec<Vec<f64>> = vars.iter().map(|v| grads.wrt(*v)).collect();

    let mut report = GradCheck {
        max_rel_error: 0.0,
        worst: None,
        worst_values: None,
        checked: 0,
        skipped: 0,
    };
    let mut work: Vec<Tensor> = inputs.to_vec();
    for (i, input) in inputs.iter().enumerate() {
        #[allow(clippy::needless_range_loop)]
        for j in 0..input.len() {
            if !select(i, j) {
                report.skipped += 1;
                continue;
            }
            let x = input.data()[j];
            work[i].data_mut()[j] = x + h;
            let plus = eval(&work)?;
            work[i].data_mut()[j] = x - h;
            let minus = eval(&work)?;
            work[i].data_mut()[j] = x;
            let numeric = (plus - minus) / (2.0 * h);
            let err = relative_error(analytic[i][j], numeric);
            report.checked += 1;
            if report.worst.is_none() || err > report.max_rel_error {
                report.max_rel_error = err;
                report.worst = Some((i, j));
                report.worst_values = Some((analytic[i][j], numeric));
            }
        }
    }
    Ok(report)
}
