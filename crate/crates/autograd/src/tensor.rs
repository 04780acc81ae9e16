//! Define-by-run tensors: each operation records its inputs so a later
//! [`backward`] pass can replay the graph in reverse.

use std::cell::{Cell, Ref, RefCell, RefMut};
use std::collections::HashMap;
use std::ops::Range;
use std::rc::Rc;
use std::sync::atomic::{AtomicU64, Ordering};

use crate::error::TensorError;
use crate::kernels;
use crate::op::Op;

static NEXT_ID: AtomicU64 = AtomicU64::new(0);

thread_local! {
    static GRAD_ENABLED: Cell<bool> = const { Cell::new(true) };
}

/// Runs `f` with gradient recording disabled on the current thread.
///
/// Operations executed inside the closure produce plain constant tensors,
/// so inference passes carry no tape.
pub fn no_grad<R>(f: impl FnOnce() -> R) -> R {
    let prev = GRAD_ENABLED.with(|g| g.replace(false));
    let out = f();
    GRAD_ENABLED.with(|g| g.set(prev));
    out
}

pub fn grad_enabled() -> bool {
    GRAD_ENABLED.with(|g| g.get())
}

pub(crate) struct Record {
    pub op: Op,
    pub inputs: Vec<Tensor>,
}

struct TensorInner {
    id: u64,
    shape: Vec<usize>,
    data: RefCell<Vec<f64>>,
    requires_grad: Cell<bool>,
    grad: RefCell<Option<Vec<f64>>>,
    record: Option<Record>,
}

/// Dense row-major f64 array with optional reverse-mode gradient tracking.
///
/// Cloning is cheap: clones share the same storage and graph node.
#[derive(Clone)]
pub struct Tensor {
    inner: Rc<TensorInner>,
}

impl std::fmt::Debug for Tensor {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Tensor")
            .field("shape", &self.inner.shape)
            .field("requires_grad", &self.inner.requires_grad.get())
            .finish()
    }
}

impl Tensor {
    fn new(data: Vec<f64>, shape: Vec<usize>, requires_grad: bool, record: Option<Record>) -> Self {
        debug_assert_eq!(data.len(), shape.iter().product::<usize>());
        Tensor {
            inner: Rc::new(TensorInner {
                id: NEXT_ID.fetch_add(1, Ordering::Relaxed),
                shape,
                data: RefCell::new(data),
                requires_grad: Cell::new(requires_grad),
                grad: RefCell::new(None),
                record,
            }),
        }
    }

    /// Constant leaf tensor (no gradient tracking).
    pub fn from_vec(data: Vec<f64>, shape: &[usize]) -> Self {
        assert_eq!(
            data.len(),
            shape.iter().product::<usize>(),
            "from_vec: data length {} does not match shape {:?}",
            data.len(),
            shape
        );
        Tensor::new(data, shape.to_vec(), false, None)
    }

    /// Trainable leaf tensor: `requires_grad` is set and `backward` will
    /// populate its gradient buffer.
    pub fn param(data: Vec<f64>, shape: &[usize]) -> Self {
        let t = Tensor::from_vec(data, shape);
        t.inner.requires_grad.set(true);
        t
    }

    pub fn zeros(shape: &[usize]) -> Self {
        Tensor::from_vec(vec![0.0; shape.iter().product()], shape)
    }

    pub fn scalar(v: f64) -> Self {
        Tensor::from_vec(vec![v], &[1])
    }

    pub fn shape(&self) -> &[usize] {
        &self.inner.shape
    }

    pub fn numel(&self) -> usize {
        self.inner.shape.iter().product()
    }

    pub fn data(&self) -> Ref<'_, Vec<f64>> {
        self.inner.data.borrow()
    }

    /// Mutable access to the raw buffer, for optimizers and checkpoint
    /// loading. Mutating a non-leaf between forward and backward corrupts
    /// the tape; callers only touch leaves between passes.
    pub fn data_mut(&self) -> RefMut<'_, Vec<f64>> {
        self.inner.data.borrow_mut()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        self.inner.data.borrow().clone()
    }

    /// Value of a scalar tensor.
    pub fn item(&self) -> f64 {
        assert_eq!(self.numel(), 1, "item() requires a scalar, got {:?}", self.shape());
        self.inner.data.borrow()[0]
    }

    pub fn requires_grad(&self) -> bool {
        self.inner.requires_grad.get()
    }

    /// Toggles gradient tracking on a leaf (used to freeze base weights).
    pub fn set_requires_grad(&self, value: bool) {
        self.inner.requires_grad.set(value);
    }

    pub fn grad(&self) -> Option<Vec<f64>> {
        self.inner.grad.borrow().clone()
    }

    pub fn zero_grad(&self) {
        *self.inner.grad.borrow_mut() = None;
    }

    pub(crate) fn is_tracked(&self) -> bool {
        self.inner.requires_grad.get() || self.inner.record.is_some()
    }

    fn accumulate_grad(&self, delta: &[f64]) {
        let mut slot = self.inner.grad.borrow_mut();
        match slot.as_mut() {
            Some(g) => {
                for (gi, di) in g.iter_mut().zip(delta.iter()) {
                    *gi += di;
                }
            }
            None => *slot = Some(delta.to_vec()),
        }
    }

    /// Value copy that no gradient flows through (the stop-gradient op).
    pub fn detach(&self) -> Tensor {
        Tensor::from_vec(self.to_vec(), &self.inner.shape)
    }

    pub(crate) fn from_op(
        data: Vec<f64>,
        shape: Vec<usize>,
        op: Op,
        inputs: Vec<Tensor>,
    ) -> Tensor {
        let track = grad_enabled() && inputs.iter().any(Tensor::is_tracked);
        let record = track.then_some(Record { op, inputs });
        Tensor::new(data, shape, false, record)
    }
}

/// Alias for [`Tensor::detach`] matching the loss-side naming: the result
/// contributes no derivative to its inputs.
pub fn stop_gradient(x: &Tensor) -> Tensor {
    x.detach()
}

/// Reverse-mode pass from a scalar loss.
///
/// Every `requires_grad` leaf reachable from `loss` receives (accumulates)
/// its gradient; repeated calls without `zero_grad` keep accumulating.
pub fn backward(loss: &Tensor) -> Result<(), TensorError> {
    if loss.numel() != 1 {
        return Err(TensorError::NonScalarLoss {
            shape: loss.shape().to_vec(),
        });
    }

    // Iterative post-order DFS: children (inputs) first, fixed order.
    let mut topo: Vec<Tensor> = Vec::new();
    let mut visited: HashMap<u64, ()> = HashMap::new();
    let mut stack: Vec<(Tensor, bool)> = vec![(loss.clone(), false)];
    while let Some((node, expanded)) = stack.pop() {
        if expanded {
            topo.push(node);
            continue;
        }
        if visited.contains_key(&node.inner.id) {
            continue;
        }
        visited.insert(node.inner.id, ());
        stack.push((node.clone(), true));
        if let Some(rec) = &node.inner.record {
            for input in &rec.inputs {
                if !visited.contains_key(&input.inner.id) {
                    stack.push((input.clone(), false));
                }
            }
        }
    }

    let mut adjoints: HashMap<u64, Vec<f64>> = HashMap::new();
    adjoints.insert(loss.inner.id, vec![1.0]);

    for node in topo.iter().rev() {
        let Some(adj) = adjoints.remove(&node.inner.id) else {
            continue;
        };
        match &node.inner.record {
            Some(rec) => {
                let grads = rec.op.vjp(&adj, node, &rec.inputs);
                for (input, grad) in rec.inputs.iter().zip(grads.into_iter()) {
                    let Some(grad) = grad else { continue };
                    if !input.is_tracked() {
                        continue;
                    }
                    match adjoints.get_mut(&input.inner.id) {
                        Some(acc) => {
                            for (a, g) in acc.iter_mut().zip(grad.iter()) {
                                *a += g;
                            }
                        }
                        None => {
                            adjoints.insert(input.inner.id, grad);
                        }
                    }
                }
            }
            None => {
                if node.requires_grad() {
                    node.accumulate_grad(&adj);
                }
            }
        }
    }
    Ok(())
}

// ── shape helpers ────────────────────────────────────────────────────

fn fmt_shapes(shapes: &[&[usize]]) -> String {
    shapes
        .iter()
        .map(|s| format!("{s:?}"))
        .collect::<Vec<_>>()
        .join(" vs ")
}

fn mat_dims(op: &'static str, t: &Tensor) -> Result<(usize, usize), TensorError> {
    match t.shape() {
        [r, c] => Ok((*r, *c)),
        other => Err(TensorError::shape(
            op,
            format!("expected a 2-d operand, got {other:?}"),
        )),
    }
}

// ── op constructors ──────────────────────────────────────────────────

impl Tensor {
    pub fn try_matmul(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let (m, k) = mat_dims("matmul", self)?;
        let (k2, n) = mat_dims("matmul", rhs)?;
        if k != k2 {
            return Err(TensorError::shape(
                "matmul",
                fmt_shapes(&[self.shape(), rhs.shape()]),
            ));
        }
        let mut out = vec![0.0; m * n];
        kernels::matmul_nn(&self.data(), &rhs.data(), m, k, n, &mut out);
        Ok(Tensor::from_op(
            out,
            vec![m, n],
            Op::MatmulNN,
            vec![self.clone(), rhs.clone()],
        ))
    }

    /// `self · rhsᵀ` — the matmul variant used for `x·Wᵀ` projections and
    /// attention scores.
    pub fn try_matmul_nt(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let (m, k) = mat_dims("matmul_nt", self)?;
        let (n, k2) = mat_dims("matmul_nt", rhs)?;
        if k != k2 {
            return Err(TensorError::shape(
                "matmul_nt",
                fmt_shapes(&[self.shape(), rhs.shape()]),
            ));
        }
        let mut out = vec![0.0; m * n];
        kernels::matmul_nt(&self.data(), &rhs.data(), m, k, n, &mut out);
        Ok(Tensor::from_op(
            out,
            vec![m, n],
            Op::MatmulNT,
            vec![self.clone(), rhs.clone()],
        ))
    }

    /// `selfᵀ · rhs`.
    pub fn try_matmul_tn(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let (k, m) = mat_dims("matmul_tn", self)?;
        let (k2, n) = mat_dims("matmul_tn", rhs)?;
        if k != k2 {
            return Err(TensorError::shape(
                "matmul_tn",
                fmt_shapes(&[self.shape(), rhs.shape()]),
            ));
        }
        let mut out = vec![0.0; m * n];
        kernels::matmul_tn(&self.data(), &rhs.data(), m, k, n, &mut out);
        Ok(Tensor::from_op(
            out,
            vec![m, n],
            Op::MatmulTN,
            vec![self.clone(), rhs.clone()],
        ))
    }

    /// Elementwise addition. The right operand may broadcast when its shape
    /// is a suffix of the left shape (e.g. a bias row added to a matrix).
    pub fn try_add(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        let ls = self.shape();
        let rs = rhs.shape();
        let suffix_ok = rs.len() <= ls.len() && ls[ls.len() - rs.len()..] == *rs;
        if !suffix_ok {
            return Err(TensorError::shape("add", fmt_shapes(&[ls, rs])));
        }
        let rlen = rhs.numel().max(1);
        let mut out = self.to_vec();
        {
            let r = rhs.data();
            for (i, o) in out.iter_mut().enumerate() {
                *o += r[i % rlen];
            }
        }
        Ok(Tensor::from_op(
            out,
            ls.to_vec(),
            Op::Add,
            vec![self.clone(), rhs.clone()],
        ))
    }

    /// Elementwise product of equal-shape tensors.
    pub fn try_mul(&self, rhs: &Tensor) -> Result<Tensor, TensorError> {
        if self.shape() != rhs.shape() {
            return Err(TensorError::shape(
                "mul",
                fmt_shapes(&[self.shape(), rhs.shape()]),
            ));
        }
        let out: Vec<f64> = {
            let a = self.data();
            let b = rhs.data();
            a.iter().zip(b.iter()).map(|(x, y)| x * y).collect()
        };
        Ok(Tensor::from_op(
            out,
            self.shape().to_vec(),
            Op::Mul,
            vec![self.clone(), rhs.clone()],
        ))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        let out: Vec<f64> = self.data().iter().map(|x| x * c).collect();
        Tensor::from_op(out, self.shape().to_vec(), Op::Scale(c), vec![self.clone()])
    }

    /// Softmax over the last axis; each row of the result sums to 1.
    pub fn try_softmax_lastdim(&self) -> Result<Tensor, TensorError> {
        let width = *self.shape().last().ok_or_else(|| {
            TensorError::shape("softmax_lastdim", "zero-rank tensor".to_string())
        })?;
        if width == 0 {
            return Err(TensorError::shape(
                "softmax_lastdim",
                format!("empty last axis in {:?}", self.shape()),
            ));
        }
        let mut out = self.to_vec();
        kernels::softmax_rows(&mut out, width);
        Ok(Tensor::from_op(
            out,
            self.shape().to_vec(),
            Op::SoftmaxLastDim,
            vec![self.clone()],
        ))
    }

    /// Layer normalization over the last axis with learned gain and bias.
    pub fn try_layer_norm(
        &self,
        gamma: &Tensor,
        beta: &Tensor,
        eps: f64,
    ) -> Result<Tensor, TensorError> {
        let width = *self.shape().last().unwrap_or(&0);
        if width == 0 || gamma.shape() != [width] || beta.shape() != [width] {
            return Err(TensorError::shape(
                "layer_norm",
                format!(
                    "x {:?}, gamma {:?}, beta {:?}",
                    self.shape(),
                    gamma.shape(),
                    beta.shape()
                ),
            ));
        }
        let mut out = vec![0.0; self.numel()];
        {
            let x = self.data();
            let g = gamma.data();
            let b = beta.data();
            for (row, orow) in x.chunks(width).zip(out.chunks_mut(width)) {
                let mean = row.iter().sum::<f64>() / width as f64;
                let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / width as f64;
                let inv = 1.0 / (var + eps).sqrt();
                for j in 0..width {
                    orow[j] = (row[j] - mean) * inv * g[j] + b[j];
                }
            }
        }
        Ok(Tensor::from_op(
            out,
            self.shape().to_vec(),
            Op::LayerNorm { eps },
            vec![self.clone(), gamma.clone(), beta.clone()],
        ))
    }

    pub fn gelu(&self) -> Tensor {
        let out: Vec<f64> = self.data().iter().map(|&x| kernels::gelu_scalar(x)).collect();
        Tensor::from_op(out, self.shape().to_vec(), Op::Gelu, vec![self.clone()])
    }

    pub fn try_reshape(&self, shape: &[usize]) -> Result<Tensor, TensorError> {
        if shape.iter().product::<usize>() != self.numel() {
            return Err(TensorError::shape(
                "reshape",
                format!("{:?} -> {:?}", self.shape(), shape),
            ));
        }
        Ok(Tensor::from_op(
            self.to_vec(),
            shape.to_vec(),
            Op::Reshape,
            vec![self.clone()],
        ))
    }

    /// Concatenates tensors along `axis`; all other axes must agree.
    pub fn try_concat(parts: &[&Tensor], axis: usize) -> Result<Tensor, TensorError> {
        let first = parts
            .first()
            .ok_or_else(|| TensorError::contract("concat", "no inputs"))?;
        let rank = first.shape().len();
        if axis >= rank {
            return Err(TensorError::shape(
                "concat",
                format!("axis {axis} out of range for rank {rank}"),
            ));
        }
        let mut axis_total = 0;
        for p in parts {
            if p.shape().len() != rank {
                return Err(TensorError::shape(
                    "concat",
                    fmt_shapes(&[first.shape(), p.shape()]),
                ));
            }
            for d in 0..rank {
                if d != axis && p.shape()[d] != first.shape()[d] {
                    return Err(TensorError::shape(
                        "concat",
                        fmt_shapes(&[first.shape(), p.shape()]),
                    ));
                }
            }
            axis_total += p.shape()[axis];
        }
        let mut out_shape = first.shape().to_vec();
        out_shape[axis] = axis_total;

        let outer: usize = out_shape[..axis].iter().product();
        let inner: usize = out_shape[axis + 1..].iter().product();
        let mut out = vec![0.0; outer * axis_total * inner];
        let mut offset = 0;
        for p in parts {
            let pa = p.shape()[axis];
            let data = p.data();
            for o in 0..outer {
                let src = &data[o * pa * inner..(o + 1) * pa * inner];
                let dst_start = (o * axis_total + offset) * inner;
                out[dst_start..dst_start + pa * inner].copy_from_slice(src);
            }
            offset += pa;
        }
        Ok(Tensor::from_op(
            out,
            out_shape,
            Op::Concat { axis },
            parts.iter().map(|p| (*p).clone()).collect(),
        ))
    }

    /// Rectangular sub-block given one index range per axis.
    pub fn try_slice(&self, ranges: &[Range<usize>]) -> Result<Tensor, TensorError> {
        let shape = self.shape();
        if ranges.len() != shape.len() {
            return Err(TensorError::shape(
                "slice",
                format!("{} ranges for rank {}", ranges.len(), shape.len()),
            ));
        }
        for (r, &d) in ranges.iter().zip(shape.iter()) {
            if r.start > r.end || r.end > d {
                return Err(TensorError::shape(
                    "slice",
                    format!("range {r:?} out of bounds for axis of size {d}"),
                ));
            }
        }
        let out_shape: Vec<usize> = ranges.iter().map(|r| r.end - r.start).collect();
        let mut out = vec![0.0; out_shape.iter().product()];
        copy_block(&self.data(), shape, ranges, &mut out);
        Ok(Tensor::from_op(
            out,
            out_shape,
            Op::Slice {
                ranges: ranges.to_vec(),
            },
            vec![self.clone()],
        ))
    }

    /// Gathers rows `ids` of an embedding table `[vocab, dim]`.
    pub fn try_embed_lookup(table: &Tensor, ids: &[usize]) -> Result<Tensor, TensorError> {
        let (vocab, dim) = mat_dims("embed_lookup", table)?;
        if let Some(&bad) = ids.iter().find(|&&i| i >= vocab) {
            return Err(TensorError::contract(
                "embed_lookup",
                format!("id {bad} out of range for vocab {vocab}"),
            ));
        }
        let data = table.data();
        let mut out = Vec::with_capacity(ids.len() * dim);
        for &id in ids {
            out.extend_from_slice(&data[id * dim..(id + 1) * dim]);
        }
        drop(data);
        Ok(Tensor::from_op(
            out,
            vec![ids.len(), dim],
            Op::EmbedLookup { ids: ids.to_vec() },
            vec![table.clone()],
        ))
    }

    /// Mean squared error between equal-shape tensors (scalar output).
    pub fn try_mse(&self, target: &Tensor) -> Result<Tensor, TensorError> {
        if self.shape() != target.shape() {
            return Err(TensorError::shape(
                "mse",
                fmt_shapes(&[self.shape(), target.shape()]),
            ));
        }
        let n = self.numel() as f64;
        let s: f64 = {
            let a = self.data();
            let b = target.data();
            a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
        };
        Ok(Tensor::from_op(
            vec![s / n],
            vec![1],
            Op::Mse,
            vec![self.clone(), target.clone()],
        ))
    }

    /// Mean cross-entropy of `[rows, classes]` logits against one target
    /// class per row.
    pub fn try_cross_entropy_rows(&self, targets: &[usize]) -> Result<Tensor, TensorError> {
        let (rows, classes) = mat_dims("cross_entropy_rows", self)?;
        if targets.len() != rows {
            return Err(TensorError::shape(
                "cross_entropy_rows",
                format!("{rows} rows but {} targets", targets.len()),
            ));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
            return Err(TensorError::contract(
                "cross_entropy_rows",
                format!("target {bad} out of range for {classes} classes"),
            ));
        }
        let mut total = 0.0;
        {
            let x = self.data();
            for (row, &t) in x.chunks(classes).zip(targets.iter()) {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                total += lse - row[t];
            }
        }
        Ok(Tensor::from_op(
            vec![total / rows as f64],
            vec![1],
            Op::CrossEntropyRows {
                targets: targets.to_vec(),
            },
            vec![self.clone()],
        ))
    }

    /// `out[.., j] = self[.., indices[j]]` over the last axis.
    pub fn try_index_select_lastdim(&self, indices: &[usize]) -> Result<Tensor, TensorError> {
        let width = *self.shape().last().unwrap_or(&0);
        if let Some(&bad) = indices.iter().find(|&&i| i >= width) {
            return Err(TensorError::shape(
                "index_select_lastdim",
                format!("index {bad} out of bounds for last axis of size {width}"),
            ));
        }
        let rows = self.numel() / width.max(1);
        let mut out = vec![0.0; rows * indices.len()];
        {
            let x = self.data();
            for r in 0..rows {
                let src = &x[r * width..(r + 1) * width];
                let dst = &mut out[r * indices.len()..(r + 1) * indices.len()];
                for (d, &ix) in dst.iter_mut().zip(indices.iter()) {
                    *d = src[ix];
                }
            }
        }
        let mut out_shape = self.shape().to_vec();
        *out_shape.last_mut().unwrap() = indices.len();
        Ok(Tensor::from_op(
            out,
            out_shape,
            Op::IndexSelectLastDim {
                indices: indices.to_vec(),
            },
            vec![self.clone()],
        ))
    }

    /// Adds `delta` into the last-axis coordinates `indices` of `self`:
    /// `out = self; out[.., indices[j]] += delta[.., j]`.
    pub fn try_index_add_lastdim(
        &self,
        delta: &Tensor,
        indices: &[usize],
    ) -> Result<Tensor, TensorError> {
        let width = *self.shape().last().unwrap_or(&0);
        let dwidth = *delta.shape().last().unwrap_or(&0);
        let rows = self.numel() / width.max(1);
        let drows = delta.numel() / dwidth.max(1);
        if dwidth != indices.len() || rows != drows {
            return Err(TensorError::shape(
                "index_add_lastdim",
                format!(
                    "base {:?}, delta {:?}, {} indices",
                    self.shape(),
                    delta.shape(),
                    indices.len()
                ),
            ));
        }
        if let Some(&bad) = indices.iter().find(|&&i| i >= width) {
            return Err(TensorError::shape(
                "index_add_lastdim",
                format!("index {bad} out of bounds for last axis of size {width}"),
            ));
        }
        let mut out = self.to_vec();
        {
            let d = delta.data();
            for r in 0..rows {
                let dst = &mut out[r * width..(r + 1) * width];
                let src = &d[r * dwidth..(r + 1) * dwidth];
                for (&ix, &v) in indices.iter().zip(src.iter()) {
                    dst[ix] += v;
                }
            }
        }
        Ok(Tensor::from_op(
            out,
            self.shape().to_vec(),
            Op::IndexAddLastDim {
                indices: indices.to_vec(),
            },
            vec![self.clone(), delta.clone()],
        ))
    }
}

/// Extracts the `ranges` block of a full buffer into a packed block.
pub(crate) fn copy_block(
    full: &[f64],
    full_shape: &[usize],
    ranges: &[Range<usize>],
    block: &mut [f64],
) {
    let rank = full_shape.len();
    let block_shape: Vec<usize> = ranges.iter().map(|r| r.end - r.start).collect();
    let total: usize = block_shape.iter().product();
    let mut strides = vec![1usize; rank];
    for d in (0..rank.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * full_shape[d + 1];
    }
    for flat in 0..total {
        let mut rem = flat;
        let mut src = 0;
        for d in (0..rank).rev() {
            let c = rem % block_shape[d];
            rem /= block_shape[d];
            src += (ranges[d].start + c) * strides[d];
        }
        block[flat] = full[src];
    }
}

pub(crate) fn scatter_block(
    full: &mut [f64],
    full_shape: &[usize],
    ranges: &[Range<usize>],
    block: &[f64],
) {
    let rank = full_shape.len();
    let block_shape: Vec<usize> = ranges.iter().map(|r| r.end - r.start).collect();
    let total: usize = block_shape.iter().product();
    let mut strides = vec![1usize; rank];
    for d in (0..rank.saturating_sub(1)).rev() {
        strides[d] = strides[d + 1] * full_shape[d + 1];
    }
    for flat in 0..total {
        let mut rem = flat;
        let mut dst = 0;
        for d in (0..rank).rev() {
            let c = rem % block_shape[d];
            rem /= block_shape[d];
            dst += (ranges[d].start + c) * strides[d];
        }
        full[dst] += block[flat];
    }
}

// Panicking sugar for model code where shapes are static.
macro_rules! unwrap_op {
    ($($(#[$meta:meta])* $name:ident ( $($arg:ident : $ty:ty),* ) => $try_name:ident;)*) => {
        impl Tensor {
            $(
                $(#[$meta])*
                pub fn $name(&self, $($arg: $ty),*) -> Tensor {
                    self.$try_name($($arg),*).unwrap_or_else(|e| panic!("{e}"))
                }
            )*
        }
    };
}

unwrap_op! {
    /// Panicking [`Tensor::try_matmul`].
    matmul(rhs: &Tensor) => try_matmul;
    /// Panicking [`Tensor::try_matmul_nt`].
    matmul_nt(rhs: &Tensor) => try_matmul_nt;
    /// Panicking [`Tensor::try_matmul_tn`].
    matmul_tn(rhs: &Tensor) => try_matmul_tn;
    /// Panicking [`Tensor::try_add`].
    add(rhs: &Tensor) => try_add;
    /// Panicking [`Tensor::try_mul`].
    mul(rhs: &Tensor) => try_mul;
    /// Panicking [`Tensor::try_softmax_lastdim`].
    softmax_lastdim() => try_softmax_lastdim;
    /// Panicking [`Tensor::try_reshape`].
    reshape(shape: &[usize]) => try_reshape;
    /// Panicking [`Tensor::try_slice`].
    slice(ranges: &[Range<usize>]) => try_slice;
    /// Panicking [`Tensor::try_mse`].
    mse(target: &Tensor) => try_mse;
    /// Panicking [`Tensor::try_cross_entropy_rows`].
    cross_entropy_rows(targets: &[usize]) => try_cross_entropy_rows;
    /// Panicking [`Tensor::try_index_select_lastdim`].
    index_select_lastdim(indices: &[usize]) => try_index_select_lastdim;
}

impl Tensor {
    /// Panicking [`Tensor::try_layer_norm`].
    pub fn layer_norm(&self, gamma: &Tensor, beta: &Tensor, eps: f64) -> Tensor {
        self.try_layer_norm(gamma, beta, eps)
            .unwrap_or_else(|e| panic!("{e}"))
    }

    /// Panicking [`Tensor::try_concat`].
    pub fn concat(parts: &[&Tensor], axis: usize) -> Tensor {
        Tensor::try_concat(parts, axis).unwrap_or_else(|e| panic!("{e}"))
    }

    /// Panicking [`Tensor::try_embed_lookup`].
    pub fn embed_lookup(table: &Tensor, ids: &[usize]) -> Tensor {
        Tensor::try_embed_lookup(table, ids).unwrap_or_else(|e| panic!("{e}"))
    }

    /// Panicking [`Tensor::try_index_add_lastdim`].
    pub fn index_add_lastdim(&self, delta: &Tensor, indices: &[usize]) -> Tensor {
        self.try_index_add_lastdim(delta, indices)
            .unwrap_or_else(|e| panic!("{e}"))
    }
}
