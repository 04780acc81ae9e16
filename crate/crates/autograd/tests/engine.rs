//! Contract, determinism, and head-chunking behavior of the engine.

use autograd::{
    apply_primitive, backward, chunk_per_head, stop_gradient, PrimitiveOp, ProjectionKind,
    ProjectionShape, Tensor, TensorError,
};
use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn softmax_rows_sum_to_one() {
    let x = Tensor::from_vec(vec![3.0, -1.0, 0.5, 100.0, 99.0, 98.0], &[2, 3]);
    let y = apply_primitive(&PrimitiveOp::SoftmaxLastDim, &[&x]).unwrap();
    for row in y.to_vec().chunks(3) {
        let s: f64 = row.iter().sum();
        assert!((s - 1.0).abs() < 1e-12, "row sum {s}");
    }
}

#[test]
fn matmul_shape_algebra() {
    let a = Tensor::zeros(&[2, 3]);
    let b = Tensor::zeros(&[3, 4]);
    let c = apply_primitive(&PrimitiveOp::Matmul, &[&a, &b]).unwrap();
    assert_eq!(c.shape(), &[2, 4]);
}

#[test]
fn mse_of_identical_inputs_is_zero() {
    let x = Tensor::from_vec(vec![0.3, -2.0, 7.5], &[3]);
    let loss = apply_primitive(&PrimitiveOp::Mse, &[&x, &x]).unwrap();
    assert_eq!(loss.item(), 0.0);
}

#[test]
fn shape_mismatch_names_op_and_shapes() {
    let a = Tensor::zeros(&[2, 3]);
    let b = Tensor::zeros(&[4, 5]);
    let err = apply_primitive(&PrimitiveOp::Matmul, &[&a, &b]).unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains("matmul"), "{msg}");
    assert!(msg.contains("[2, 3]") && msg.contains("[4, 5]"), "{msg}");
}

#[test]
fn non_scalar_loss_is_rejected() {
    let x = Tensor::param(vec![1.0, 2.0], &[2]);
    let y = x.scale(2.0);
    match backward(&y) {
        Err(TensorError::NonScalarLoss { shape }) => assert_eq!(shape, vec![2]),
        other => panic!("expected NonScalarLoss, got {other:?}"),
    }
}

#[test]
fn stop_gradient_target_gets_no_grad() {
    // loss = mse(pred, sg(target)): target parameters stay grad-free.
    let w = Tensor::param(vec![0.5, -0.25], &[2]);
    let t = Tensor::param(vec![1.0, 1.0], &[2]);
    let loss = w.mse(&stop_gradient(&t));
    backward(&loss).unwrap();
    assert!(w.grad().is_some());
    assert!(t.grad().is_none());
}

#[test]
fn identical_branches_give_zero_loss_and_grads() {
    // Both branches share inputs, one behind stop-gradient: the loss and
    // every gradient vanish exactly.
    let w = Tensor::param(vec![0.7, -1.2, 0.05, 2.0], &[2, 2]);
    let x = Tensor::from_vec(vec![1.0, 2.0, 3.0, 4.0], &[2, 2]);
    let pred = x.matmul(&w);
    let loss = pred.mse(&stop_gradient(&pred));
    backward(&loss).unwrap();
    assert_eq!(loss.item(), 0.0);
    assert!(w.grad().unwrap().iter().all(|&g| g == 0.0));
}

#[test]
fn tape_is_deterministic_across_runs() {
    let run = || {
        let mut r = ChaCha8Rng::seed_from_u64(42);
        let data: Vec<f64> = (0..24).map(|_| r.random_range(-1.0..1.0)).collect();
        let w = Tensor::param(data, &[4, 6]);
        let x = Tensor::from_vec((0..12).map(|i| i as f64 * 0.3).collect(), &[2, 6]);
        let y = x.matmul_nt(&w).gelu().softmax_lastdim();
        let loss = y.mse(&Tensor::zeros(&[2, 4]));
        backward(&loss).unwrap();
        (loss.item(), w.grad().unwrap())
    };
    let (l1, g1) = run();
    let (l2, g2) = run();
    assert_eq!(l1.to_bits(), l2.to_bits());
    assert_eq!(g1.len(), g2.len());
    for (a, b) in g1.iter().zip(g2.iter()) {
        assert_eq!(a.to_bits(), b.to_bits());
    }
}

#[test]
fn chunk_rows_for_q_projection() {
    let shape = ProjectionShape {
        d_out: 4,
        d_in: 4,
        heads: 2,
        dim_head: 2,
    };
    let grad: Vec<f64> = (0..16).map(|i| i as f64).collect();
    let chunks = chunk_per_head(&grad, &shape, ProjectionKind::Q).unwrap();
    assert_eq!(chunks.len(), 2);
    // Two 2x4 row blocks.
    assert_eq!(chunks[0], (0..8).map(|i| i as f64).collect::<Vec<_>>());
    assert_eq!(chunks[1], (8..16).map(|i| i as f64).collect::<Vec<_>>());
}

#[test]
fn chunk_cols_for_out_projection() {
    let shape = ProjectionShape {
        d_out: 4,
        d_in: 4,
        heads: 2,
        dim_head: 2,
    };
    let grad: Vec<f64> = (0..16).map(|i| i as f64).collect();
    let chunks = chunk_per_head(&grad, &shape, ProjectionKind::Out).unwrap();
    assert_eq!(chunks.len(), 2);
    // Two 4x2 column blocks.
    assert_eq!(chunks[0], vec![0.0, 1.0, 4.0, 5.0, 8.0, 9.0, 12.0, 13.0]);
    assert_eq!(chunks[1], vec![2.0, 3.0, 6.0, 7.0, 10.0, 11.0, 14.0, 15.0]);
}

#[test]
fn chunk_rejects_non_dividing_heads() {
    let shape = ProjectionShape {
        d_out: 4,
        d_in: 4,
        heads: 3,
        dim_head: 2,
    };
    let grad = vec![0.0; 16];
    assert!(chunk_per_head(&grad, &shape, ProjectionKind::Q).is_err());
}

fn reassemble(chunks: &[Vec<f64>], shape: &ProjectionShape, kind: ProjectionKind) -> Vec<f64> {
    match kind {
        ProjectionKind::Out => {
            let mut out = vec![0.0; shape.d_out * shape.d_in];
            for (h, chunk) in chunks.iter().enumerate() {
                for row in 0..shape.d_out {
                    for c in 0..shape.dim_head {
                        out[row * shape.d_in + h * shape.dim_head + c] =
                            chunk[row * shape.dim_head + c];
                    }
                }
            }
            out
        }
        _ => chunks.concat(),
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// Blocks are disjoint and exhaustive: reassembling them along the
    /// split axis reproduces the gradient bitwise.
    #[test]
    fn chunks_partition_the_gradient(
        heads in 1usize..5,
        dim_head in 1usize..5,
        other in 1usize..9,
        kind_idx in 0usize..4,
        seed in any::<u64>(),
    ) {
        let kind = ProjectionKind::ALL[kind_idx];
        let (d_out, d_in) = match kind {
            ProjectionKind::Out => (other, heads * dim_head),
            _ => (heads * dim_head, other),
        };
        let shape = ProjectionShape { d_out, d_in, heads, dim_head };
        let mut r = ChaCha8Rng::seed_from_u64(seed);
        let grad: Vec<f64> = (0..d_out * d_in).map(|_| r.random_range(-5.0..5.0)).collect();
        let chunks = chunk_per_head(&grad, &shape, kind).unwrap();
        prop_assert_eq!(chunks.len(), heads);
        let rebuilt = reassemble(&chunks, &shape, kind);
        prop_assert_eq!(rebuilt, grad);
    }

    /// Gradients flow only to inputs on the path to the loss: the grad of
    /// a detached branch stays absent.
    #[test]
    fn off_path_leaves_stay_clean(vals in prop::collection::vec(-3.0f64..3.0, 4)) {
        let a = Tensor::param(vals.clone(), &[4]);
        let b = Tensor::param(vals, &[4]);
        let loss = a.mse(&Tensor::zeros(&[4]));
        backward(&loss).unwrap();
        prop_assert!(a.grad().is_some());
        prop_assert!(b.grad().is_none());
    }
}
