//! Per-head partitioning of projection weight gradients.
//!
//! Multi-head attention stores each projection as one `[d_out, d_in]`
//! matrix. Head-level scoring needs that matrix split back into per-head
//! blocks: along output rows for Q/K/V and along input columns for OUT.

use crate::error::TensorError;

/// Which projection of an attention module a weight matrix belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum ProjectionKind {
    Q,
    K,
    V,
    Out,
}

impl ProjectionKind {
    pub const ALL: [ProjectionKind; 4] = [
        ProjectionKind::Q,
        ProjectionKind::K,
        ProjectionKind::V,
        ProjectionKind::Out,
    ];

    pub fn label(self) -> &'static str {
        match self {
            ProjectionKind::Q => "q",
            ProjectionKind::K => "k",
            ProjectionKind::V => "v",
            ProjectionKind::Out => "out",
        }
    }
}

/// Dimensions of one attention projection matrix.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ProjectionShape {
    pub d_out: usize,
    pub d_in: usize,
    pub heads: usize,
    pub dim_head: usize,
}

impl ProjectionShape {
    /// The axis a projection splits across heads: output rows for Q/K/V,
    /// input columns for OUT.
    pub fn split_dim(&self, kind: ProjectionKind) -> usize {
        match kind {
            ProjectionKind::Out => self.d_in,
            _ => self.d_out,
        }
    }

    /// Checks the head-partition invariant for the given projection kind.
    pub fn validate(&self, kind: ProjectionKind) -> Result<(), TensorError> {
        let split = self.split_dim(kind);
        if self.heads == 0 || split != self.heads * self.dim_head {
            return Err(TensorError::contract(
                "chunk_per_head",
                format!(
                    "{} heads of width {} do not partition the split axis of size {split}",
                    self.heads, self.dim_head
                ),
            ));
        }
        Ok(())
    }
}

/// Splits a `[d_out, d_in]` weight gradient into one block per head.
///
/// Concatenating the blocks along the split axis reconstructs the input
/// exactly.
pub fn chunk_per_head(
    weight_grad: &[f64],
    shape: &ProjectionShape,
    kind: ProjectionKind,
) -> Result<Vec<Vec<f64>>, TensorError> {
    if weight_grad.len() != shape.d_out * shape.d_in {
        return Err(TensorError::shape(
            "chunk_per_head",
            format!(
                "grad has {} elements, projection shape is {}x{}",
                weight_grad.len(),
                shape.d_out,
                shape.d_in
            ),
        ));
    }
    shape.validate(kind)?;

    let mut chunks = Vec::with_capacity(shape.heads);
    match kind {
        ProjectionKind::Out => {
            // Column blocks of width dim_head.
            for h in 0..shape.heads {
                let mut block = Vec::with_capacity(shape.d_out * shape.dim_head);
                for row in 0..shape.d_out {
                    let start = row * shape.d_in + h * shape.dim_head;
                    block.extend_from_slice(&weight_grad[start..start + shape.dim_head]);
                }
                chunks.push(block);
            }
        }
        _ => {
            // Row blocks of height dim_head.
            let rows_per_head = shape.dim_head * shape.d_in;
            for h in 0..shape.heads {
                chunks.push(weight_grad[h * rows_per_head..(h + 1) * rows_per_head].to_vec());
            }
        }
    }
    Ok(chunks)
}

/// Root-mean-square of a buffer: `sqrt(mean(x²))`.
pub fn rms(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let sum_sq: f64 = values.iter().map(|v| v * v).sum();
    (sum_sq / values.len() as f64).sqrt()
}
