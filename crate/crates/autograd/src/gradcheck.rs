//! Central finite differences, the independent oracle for every analytic
//! gradient in this workspace. Only forward evaluations are used, so the
//! check shares nothing with the tape's backward pass.

use crate::tensor::{no_grad, Tensor};

/// Numerical gradient of `loss_fn` w.r.t. every element of `param`, by
/// central differences with the given step.
///
/// `loss_fn` must re-evaluate the forward pass from current parameter
/// values; it runs with gradient recording disabled.
pub fn central_diff_grad(
    param: &Tensor,
    step: f64,
    mut loss_fn: impl FnMut() -> f64,
) -> Vec<f64> {
    let n = param.numel();
    let mut grad = vec![0.0; n];
    for i in 0..n {
        let original = param.data()[i];
        param.data_mut()[i] = original + step;
        let plus = no_grad(&mut loss_fn);
        param.data_mut()[i] = original - step;
        let minus = no_grad(&mut loss_fn);
        param.data_mut()[i] = original;
        grad[i] = (plus - minus) / (2.0 * step);
    }
    grad
}

/// Elementwise relative error `|a - b| / max(|a|, |b|, floor)`, maximized
/// over the buffer. The floor keeps near-zero gradients from blowing up
/// the ratio.
pub fn max_relative_error(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric.iter())
        .map(|(&a, &b)| (a - b).abs() / a.abs().max(b.abs()).max(1e-6))
        .fold(0.0, f64::max)
}
