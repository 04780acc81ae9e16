//! Finite-difference oracle checks: every primitive's analytic gradient is
//! compared against central differences (step 1e-5, relative error < 1e-4)
//! on randomized small shapes, plus an end-to-end check on a small net.

use autograd::{backward, central_diff_grad, max_relative_error, no_grad, Tensor};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
const RTOL: f64 = 1e-4;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn rand_param(rng: &mut ChaCha8Rng, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    let data: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    Tensor::param(data, shape)
}

/// Runs `forward` once with the tape, backpropagates, and checks every
/// listed parameter against the finite-difference oracle.
fn check_grads(params: &[&Tensor], forward: impl Fn() -> Tensor) {
    for p in params {
        p.zero_grad();
    }
    let loss = forward();
    backward(&loss).unwrap();
    for p in params {
        let analytic = p.grad().expect("parameter missing gradient");
        let numeric = central_diff_grad(p, STEP, || forward().item());
        let err = max_relative_error(&analytic, &numeric);
        assert!(
            err < RTOL,
            "gradient mismatch: relative error {err:.3e} (shape {:?})",
            p.shape()
        );
    }
}

#[test]
fn matmul_variants_match_finite_differences() {
    let mut r = rng(1);
    let a = rand_param(&mut r, &[3, 4]);
    let b = rand_param(&mut r, &[4, 5]);
    let target = Tensor::from_vec((0..15).map(|i| i as f64 * 0.1).collect(), &[3, 5]);
    check_grads(&[&a, &b], || a.matmul(&b).mse(&target));

    let bt = rand_param(&mut r, &[5, 4]);
    check_grads(&[&a, &bt], || a.matmul_nt(&bt).mse(&target));

    let at = rand_param(&mut r, &[4, 3]);
    check_grads(&[&at, &b], || at.matmul_tn(&b).mse(&target));
}

#[test]
fn elementwise_ops_match_finite_differences() {
    let mut r = rng(2);
    let a = rand_param(&mut r, &[2, 6]);
    let b = rand_param(&mut r, &[2, 6]);
    let bias = rand_param(&mut r, &[6]);
    let target = Tensor::zeros(&[2, 6]);

    check_grads(&[&a, &b], || a.mul(&b).mse(&target));
    check_grads(&[&a, &b], || a.add(&b).mse(&target));
    check_grads(&[&a, &bias], || a.add(&bias).mse(&target));
    check_grads(&[&a], || a.scale(-1.7).mse(&target));
    check_grads(&[&a], || a.gelu().mse(&target));
}

#[test]
fn softmax_and_layer_norm_match_finite_differences() {
    let mut r = rng(3);
    let x = rand_param(&mut r, &[3, 5]);
    let target = Tensor::from_vec(vec![0.2; 15], &[3, 5]);
    check_grads(&[&x], || x.softmax_lastdim().mse(&target));

    let gamma = rand_param(&mut r, &[5]);
    let beta = rand_param(&mut r, &[5]);
    check_grads(&[&x, &gamma, &beta], || {
        x.layer_norm(&gamma, &beta, 1e-5).mse(&target)
    });
}

#[test]
fn shape_ops_match_finite_differences() {
    let mut r = rng(4);
    let a = rand_param(&mut r, &[2, 6]);
    let b = rand_param(&mut r, &[3, 6]);
    let target_cat = Tensor::zeros(&[5, 6]);
    check_grads(&[&a, &b], || {
        Tensor::concat(&[&a, &b], 0).mse(&target_cat)
    });

    let target_slice = Tensor::zeros(&[2, 3]);
    check_grads(&[&b], || b.slice(&[1..3, 2..5]).mse(&target_slice));

    let target_flat = Tensor::zeros(&[12]);
    check_grads(&[&a], || a.reshape(&[12]).mse(&target_flat));
}

#[test]
fn lookup_and_index_ops_match_finite_differences() {
    let mut r = rng(5);
    let table = rand_param(&mut r, &[7, 4]);
    let target = Tensor::zeros(&[3, 4]);
    // Repeated id exercises gradient accumulation into one row.
    check_grads(&[&table], || {
        Tensor::embed_lookup(&table, &[2, 5, 2]).mse(&target)
    });

    let x = rand_param(&mut r, &[3, 8]);
    let sel_target = Tensor::zeros(&[3, 3]);
    check_grads(&[&x], || {
        x.index_select_lastdim(&[1, 4, 6]).mse(&sel_target)
    });

    let base = rand_param(&mut r, &[3, 8]);
    let delta = rand_param(&mut r, &[3, 2]);
    let add_target = Tensor::zeros(&[3, 8]);
    check_grads(&[&base, &delta], || {
        base.index_add_lastdim(&delta, &[2, 5]).mse(&add_target)
    });
}

#[test]
fn loss_ops_match_finite_differences() {
    let mut r = rng(6);
    let pred = rand_param(&mut r, &[4, 3]);
    let target = rand_param(&mut r, &[4, 3]);
    check_grads(&[&pred, &target], || pred.mse(&target));

    let logits = rand_param(&mut r, &[5, 4]);
    check_grads(&[&logits], || logits.cross_entropy_rows(&[0, 3, 1, 1, 2]));
}

/// The spec's end-to-end case: a random 3-layer net, all parameter
/// gradients against central differences.
#[test]
fn three_layer_net_matches_finite_differences() {
    let mut r = rng(7);
    let x = Tensor::from_vec((0..12).map(|i| (i as f64) * 0.13 - 0.7).collect(), &[2, 6]);
    let w1 = rand_param(&mut r, &[5, 6]);
    let b1 = rand_param(&mut r, &[5]);
    let w2 = rand_param(&mut r, &[5, 5]);
    let b2 = rand_param(&mut r, &[5]);
    let w3 = rand_param(&mut r, &[3, 5]);
    let b3 = rand_param(&mut r, &[3]);
    let target = Tensor::from_vec(vec![0.1, -0.4, 0.9, 0.0, 0.2, -0.3], &[2, 3]);

    let forward = || {
        let h1 = x.matmul_nt(&w1).add(&b1).gelu();
        let h2 = h1.matmul_nt(&w2).add(&b2).gelu();
        h2.matmul_nt(&w3).add(&b3).mse(&target)
    };
    check_grads(&[&w1, &b1, &w2, &b2, &w3, &b3], forward);
}

#[test]
fn square_gradient_is_analytic() {
    // f(x) = x·x at x = 3 → grad 6
    let x = Tensor::param(vec![3.0], &[1]);
    let y = x.mul(&x);
    backward(&y).unwrap();
    assert_eq!(x.grad().unwrap(), vec![6.0]);
}

#[test]
fn stop_gradient_blocks_one_path() {
    // f(x) = sg(x)·x at x = 3 → grad 3
    let x = Tensor::param(vec![3.0], &[1]);
    let y = autograd::stop_gradient(&x).mul(&x);
    backward(&y).unwrap();
    assert_eq!(y.item(), 9.0);
    assert_eq!(x.grad().unwrap(), vec![3.0]);
}

#[test]
fn repeated_backward_accumulates() {
    let x = Tensor::param(vec![2.0], &[1]);
    let y = x.mul(&x);
    backward(&y).unwrap();
    backward(&y).unwrap();
    assert_eq!(x.grad().unwrap(), vec![8.0]);
    x.zero_grad();
    backward(&y).unwrap();
    assert_eq!(x.grad().unwrap(), vec![4.0]);
}

#[test]
fn no_grad_suppresses_tracking() {
    let x = Tensor::param(vec![1.5], &[1]);
    let y = no_grad(|| x.mul(&x));
    assert!(backward(&y).is_ok());
    assert!(x.grad().is_none());
}
