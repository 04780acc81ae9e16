//! Recorded operations and their vector-Jacobian products.

use std::ops::Range;

use crate::kernels;
use crate::tensor::{scatter_block, Tensor};

pub(crate) enum Op {
    MatmulNN,
    MatmulNT,
    MatmulTN,
    Add,
    Mul,
    Scale(f64),
    SoftmaxLastDim,
    LayerNorm { eps: f64 },
    Gelu,
    Reshape,
    Concat { axis: usize },
    Slice { ranges: Vec<Range<usize>> },
    EmbedLookup { ids: Vec<usize> },
    Mse,
    CrossEntropyRows { targets: Vec<usize> },
    IndexSelectLastDim { indices: Vec<usize> },
    IndexAddLastDim { indices: Vec<usize> },
}

impl Op {
    /// Gradient of the output w.r.t. each input, given the output adjoint.
    /// Entries are `None` for inputs that receive no gradient from this op.
    pub(crate) fn vjp(&self, adj: &[f64], out: &Tensor, inputs: &[Tensor]) -> Vec<Option<Vec<f64>>> {
        match self {
            Op::MatmulNN => {
                let (a, b) = (&inputs[0], &inputs[1]);
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = b.shape()[1];
                let mut da = vec![0.0; m * k];
                kernels::matmul_nt(adj, &b.data(), m, n, k, &mut da);
                let mut db = vec![0.0; k * n];
                kernels::matmul_tn(&a.data(), adj, k, m, n, &mut db);
                vec![Some(da), Some(db)]
            }
            Op::MatmulNT => {
                // out[m,n] = a[m,k] · b[n,k]ᵀ
                let (a, b) = (&inputs[0], &inputs[1]);
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = b.shape()[0];
                let mut da = vec![0.0; m * k];
                kernels::matmul_nn(adj, &b.data(), m, n, k, &mut da);
                let mut db = vec![0.0; n * k];
                kernels::matmul_tn(adj, &a.data(), n, m, k, &mut db);
                vec![Some(da), Some(db)]
            }
            Op::MatmulTN => {
                // out[m,n] = a[k,m]ᵀ · b[k,n]
                let (a, b) = (&inputs[0], &inputs[1]);
                let (k, m) = (a.shape()[0], a.shape()[1]);
                let n = b.shape()[1];
                let mut da = vec![0.0; k * m];
                kernels::matmul_nt(&b.data(), adj, k, n, m, &mut da);
                let mut db = vec![0.0; k * n];
                kernels::matmul_nn(&a.data(), adj, k, m, n, &mut db);
                vec![Some(da), Some(db)]
            }
            Op::Add => {
                let da = adj.to_vec();
                let rlen = inputs[1].numel();
                let db = if rlen == adj.len() {
                    adj.to_vec()
                } else {
                    let mut db = vec![0.0; rlen];
                    for (i, &g) in adj.iter().enumerate() {
                        db[i % rlen] += g;
                    }
                    db
                };
                vec![Some(da), Some(db)]
            }
            Op::Mul => {
                let a = inputs[0].data();
                let b = inputs[1].data();
                let da: Vec<f64> = adj.iter().zip(b.iter()).map(|(g, y)| g * y).collect();
                let db: Vec<f64> = adj.iter().zip(a.iter()).map(|(g, x)| g * x).collect();
                vec![Some(da), Some(db)]
            }
            Op::Scale(c) => vec![Some(adj.iter().map(|g| g * c).collect())],
            Op::SoftmaxLastDim => {
                let width = *out.shape().last().unwrap();
                let y = out.data();
                let mut dx = vec![0.0; adj.len()];
                for ((yrow, grow), drow) in y
                    .chunks(width)
                    .zip(adj.chunks(width))
                    .zip(dx.chunks_mut(width))
                {
                    let s: f64 = yrow.iter().zip(grow.iter()).map(|(yv, gv)| yv * gv).sum();
                    for j in 0..width {
                        drow[j] = yrow[j] * (grow[j] - s);
                    }
                }
                vec![Some(dx)]
            }
            Op::LayerNorm { eps } => {
                let x = inputs[0].data();
                let gamma = inputs[1].data();
                let width = *inputs[0].shape().last().unwrap();
                let rows = x.len() / width;
                let mut dx = vec![0.0; x.len()];
                let mut dgamma = vec![0.0; width];
                let mut dbeta = vec![0.0; width];
                for r in 0..rows {
                    let xrow = &x[r * width..(r + 1) * width];
                    let grow = &adj[r * width..(r + 1) * width];
                    let mean = xrow.iter().sum::<f64>() / width as f64;
                    let var =
                        xrow.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / width as f64;
                    let inv = 1.0 / (var + eps).sqrt();
                    let mut m1 = 0.0;
                    let mut m2 = 0.0;
                    for j in 0..width {
                        let xhat = (xrow[j] - mean) * inv;
                        let dxhat = grow[j] * gamma[j];
                        dgamma[j] += grow[j] * xhat;
                        dbeta[j] += grow[j];
                        m1 += dxhat;
                        m2 += dxhat * xhat;
                    }
                    m1 /= width as f64;
                    m2 /= width as f64;
                    let drow = &mut dx[r * width..(r + 1) * width];
                    for j in 0..width {
                        let xhat = (xrow[j] - mean) * inv;
                        let dxhat = grow[j] * gamma[j];
                        drow[j] = (dxhat - m1 - xhat * m2) * inv;
                    }
                }
                vec![Some(dx), Some(dgamma), Some(dbeta)]
            }
            Op::Gelu => {
                let x = inputs[0].data();
                let dx: Vec<f64> = adj
                    .iter()
                    .zip(x.iter())
                    .map(|(g, &v)| g * kernels::gelu_grad_scalar(v))
                    .collect();
                vec![Some(dx)]
            }
            Op::Reshape => vec![Some(adj.to_vec())],
            Op::Concat { axis } => {
                let out_shape = out.shape();
                let outer: usize = out_shape[..*axis].iter().product();
                let inner: usize = out_shape[*axis + 1..].iter().product();
                let axis_total = out_shape[*axis];
                let mut grads = Vec::with_capacity(inputs.len());
                let mut offset = 0;
                for p in inputs {
                    let pa = p.shape()[*axis];
                    let mut dp = vec![0.0; p.numel()];
                    for o in 0..outer {
                        let src_start = (o * axis_total + offset) * inner;
                        dp[o * pa * inner..(o + 1) * pa * inner]
                            .copy_from_slice(&adj[src_start..src_start + pa * inner]);
                    }
                    offset += pa;
                    grads.push(Some(dp));
                }
                grads
            }
            Op::Slice { ranges } => {
                let input = &inputs[0];
                let mut dx = vec![0.0; input.numel()];
                scatter_block(&mut dx, input.shape(), ranges, adj);
                vec![Some(dx)]
            }
            Op::EmbedLookup { ids } => {
                let table = &inputs[0];
                let dim = table.shape()[1];
                let mut dt = vec![0.0; table.numel()];
                for (row, &id) in ids.iter().enumerate() {
                    let src = &adj[row * dim..(row + 1) * dim];
                    let dst = &mut dt[id * dim..(id + 1) * dim];
                    for (d, g) in dst.iter_mut().zip(src.iter()) {
                        *d += g;
                    }
                }
                vec![Some(dt)]
            }
            Op::Mse => {
                let a = inputs[0].data();
                let b = inputs[1].data();
                let g0 = adj[0];
                let scale = 2.0 * g0 / a.len() as f64;
                let da: Vec<f64> = a
                    .iter()
                    .zip(b.iter())
                    .map(|(x, y)| scale * (x - y))
                    .collect();
                let db: Vec<f64> = da.iter().map(|v| -v).collect();
                vec![Some(da), Some(db)]
            }
            Op::CrossEntropyRows { targets } => {
                let x = inputs[0].data();
                let classes = inputs[0].shape()[1];
                let rows = targets.len();
                let g0 = adj[0] / rows as f64;
                let mut dx = vec![0.0; x.len()];
                for (r, &t) in targets.iter().enumerate() {
                    let row = &x[r * classes..(r + 1) * classes];
                    let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                    let denom: f64 = row.iter().map(|v| (v - max).exp()).sum();
                    let drow = &mut dx[r * classes..(r + 1) * classes];
                    for j in 0..classes {
                        let p = (row[j] - max).exp() / denom;
                        drow[j] = g0 * (p - if j == t { 1.0 } else { 0.0 });
                    }
                }
                vec![Some(dx)]
            }
            Op::IndexSelectLastDim { indices } => {
                let input = &inputs[0];
                let width = *input.shape().last().unwrap();
                let rows = input.numel() / width;
                let mut dx = vec![0.0; input.numel()];
                for r in 0..rows {
                    let grow = &adj[r * indices.len()..(r + 1) * indices.len()];
                    let drow = &mut dx[r * width..(r + 1) * width];
                    for (&ix, &g) in indices.iter().zip(grow.iter()) {
                        drow[ix] += g;
                    }
                }
                vec![Some(dx)]
            }
            Op::IndexAddLastDim { indices } => {
                let base = &inputs[0];
                let width = *base.shape().last().unwrap();
                let rows = base.numel() / width;
                let dbase = adj.to_vec();
                let mut ddelta = vec![0.0; rows * indices.len()];
                for r in 0..rows {
                    let grow = &adj[r * width..(r + 1) * width];
                    let drow = &mut ddelta[r * indices.len()..(r + 1) * indices.len()];
                    for (d, &ix) in drow.iter_mut().zip(indices.iter()) {
                        *d = grow[ix];
                    }
                }
                vec![Some(dbase), Some(ddelta)]
            }
        }
    }
}
