//! Minimal dense-array engine with reverse-mode automatic differentiation.
//!
//! Everything is 64-bit floats in row-major order. Operations record a
//! define-by-run graph; [`backward`] replays it in reverse and accumulates
//! gradients on `requires_grad` leaves. The tape is rebuilt on every
//! forward pass and dropped with the output tensors.
//!
//! Determinism: all reductions run in a fixed order, so the same graph on
//! the same inputs yields bitwise-identical values and gradients.

mod chunk;
mod error;
mod gradcheck;
mod kernels;
mod op;
mod optim;
mod tensor;

use std::ops::Range;

pub use chunk::{chunk_per_head, rms, ProjectionKind, ProjectionShape};
pub use error::TensorError;
pub use gradcheck::{central_diff_grad, max_relative_error};
pub use optim::{AdamW, AdamWConfig};
pub use tensor::{backward, grad_enabled, no_grad, stop_gradient, Tensor};

/// The primitive operation set, with per-op attributes.
#[derive(Debug, Clone)]
pub enum PrimitiveOp {
    Matmul,
    Add,
    Mul,
    Scale(f64),
    SoftmaxLastDim,
    LayerNorm { eps: f64 },
    Gelu,
    Reshape(Vec<usize>),
    Concat(usize),
    Slice(Vec<Range<usize>>),
    EmbedLookup(Vec<usize>),
    Mse,
}

/// Applies one primitive to its inputs, recording it on the gradient tape
/// when any input is tracked. Shape violations return a dimension error
/// naming the op and the offending shapes.
pub fn apply_primitive(op: &PrimitiveOp, inputs: &[&Tensor]) -> Result<Tensor, TensorError> {
    let arity = |n: usize| -> Result<(), TensorError> {
        if inputs.len() != n {
            Err(TensorError::contract(
                "apply_primitive",
                format!("{op:?} expects {n} inputs, got {}", inputs.len()),
            ))
        } else {
            Ok(())
        }
    };
    match op {
        PrimitiveOp::Matmul => {
            arity(2)?;
            inputs[0].try_matmul(inputs[1])
        }
        PrimitiveOp::Add => {
            arity(2)?;
            inputs[0].try_add(inputs[1])
        }
        PrimitiveOp::Mul => {
            arity(2)?;
            inputs[0].try_mul(inputs[1])
        }
        PrimitiveOp::Scale(c) => {
            arity(1)?;
            Ok(inputs[0].scale(*c))
        }
        PrimitiveOp::SoftmaxLastDim => {
            arity(1)?;
            inputs[0].try_softmax_lastdim()
        }
        PrimitiveOp::LayerNorm { eps } => {
            arity(3)?;
            inputs[0].try_layer_norm(inputs[1], inputs[2], *eps)
        }
        PrimitiveOp::Gelu => {
            arity(1)?;
            Ok(inputs[0].gelu())
        }
        PrimitiveOp::Reshape(shape) => {
            arity(1)?;
            inputs[0].try_reshape(shape)
        }
        PrimitiveOp::Concat(axis) => Tensor::try_concat(inputs, *axis),
        PrimitiveOp::Slice(ranges) => {
            arity(1)?;
            inputs[0].try_slice(ranges)
        }
        PrimitiveOp::EmbedLookup(ids) => {
            arity(1)?;
            Tensor::try_embed_lookup(inputs[0], ids)
        }
        PrimitiveOp::Mse => {
            arity(2)?;
            inputs[0].try_mse(inputs[1])
        }
    }
}
