//! Finite-difference verification of every backward rule.

use semcom_core::gradcheck::{grad_check, DEFAULT_STEP};
use semcom_core::graph::{Graph, NodeId};
use semcom_core::rng::SplitMix64;
use semcom_core::Tensor;

fn random_tensor(rng: &mut SplitMix64, rows: usize, cols: usize) -> Tensor {
    let mut t = Tensor::zeros(rows, cols);
    for v in t.data.iter_mut() {
        *v = rng.uniform(-1.5, 1.5);
    }
    t
}

fn check(
    build: impl Fn(&mut Graph, &[NodeId]) -> semcom_core::Result<NodeId>,
    inputs: &[Tensor],
    tol: f64,
) {
    let report = grad_check(build, inputs, DEFAULT_STEP, tol).unwrap();
    assert!(
        report.passed,
        "max rel err {} above tolerance {tol}",
        report.max_rel_err
    );
}

#[test]
fn matmul_gradient() {
    let mut rng = SplitMix64::new(1);
    for _ in 0..5 {
        let a = random_tensor(&mut rng, 3, 4);
        let w = random_tensor(&mut rng, 4, 2);
        check(
            |g, ids| {
                let y = g.matmul(ids[0], ids[1])?;
                g.sum(y)
            },
            &[a, w],
            1e-6,
        );
    }
}

#[test]
fn add_bias_gradient() {
    let mut rng = SplitMix64::new(2);
    let a = random_tensor(&mut rng, 4, 3);
    let b = random_tensor(&mut rng, 1, 3);
    check(
        |g, ids| {
            let y = g.add_bias(ids[0], ids[1])?;
            let sq = g.mul(y, y)?;
            g.sum(sq)
        },
        &[a, b],
        1e-6,
    );
}

#[test]
fn relu_gradient_away_from_zero() {
    let x = Tensor::from_rows(&[&[-1.0, 2.0, -0.3, 0.7]]).unwrap();
    check(
        |g, ids| {
            let y = g.relu(ids[0])?;
            let sq = g.mul(y, y)?;
            g.sum(sq)
        },
        &[x],
        1e-6,
    );
}

#[test]
fn sigmoid_softmax_log_gradients() {
    let mut rng = SplitMix64::new(3);
    for _ in 0..5 {
        let x = random_tensor(&mut rng, 2, 4);
        check(
            |g, ids| {
                let s = g.sigmoid(ids[0])?;
                let p = g.softmax_rows(s)?;
                let lp = g.log_clamped(p)?;
                let sq = g.mul(lp, lp)?;
                g.sum(sq)
            },
            &[x],
            1e-5,
        );
    }
}

#[test]
fn batchnorm_gradient_matches_finite_differences() {
    // Backward must include the mean/variance terms; spot-checked on
    // random 4x3 inputs.
    let mut rng = SplitMix64::new(4);
    for _ in 0..5 {
        let x = random_tensor(&mut rng, 4, 3);
        let gamma = random_tensor(&mut rng, 1, 3);
        let beta = random_tensor(&mut rng, 1, 3);
        check(
            |g, ids| {
                let (y, _, _) = g.batchnorm_train(ids[0], ids[1], ids[2])?;
                let sq = g.mul(y, y)?;
                g.sum(sq)
            },
            &[x, gamma, beta],
            1e-4,
        );
    }
}

#[test]
fn concat_and_scale_gradient() {
    let mut rng = SplitMix64::new(5);
    let a = random_tensor(&mut rng, 3, 2);
    let b = random_tensor(&mut rng, 3, 4);
    check(
        |g, ids| {
            let c = g.concat_cols(&[ids[0], ids[1]])?;
            let y = g.scale(c, 0.7)?;
            let sq = g.mul(y, y)?;
            g.sum(sq)
        },
        &[a, b],
        1e-6,
    );
}

#[test]
fn power_normalize_gradient() {
    let mut rng = SplitMix64::new(6);
    for _ in 0..5 {
        let x = random_tensor(&mut rng, 3, 4);
        check(
            |g, ids| {
                let y = g.power_normalize(ids[0])?;
                let sq = g.mul(y, y)?;
                g.sum(sq)
            },
            &[x],
            1e-5,
        );
    }
}

#[test]
fn channel_pass_through_gradient() {
    // For the realized (h, n) the Jacobian of transmit is diag(h).
    let mut rng = SplitMix64::new(7);
    let x = random_tensor(&mut rng, 2, 3);
    let h: Vec<f64> = (0..6).map(|_| rng.uniform(0.1, 2.0)).collect();
    let n: Vec<f64> = (0..6).map(|_| rng.uniform(-0.5, 0.5)).collect();
    check(
        |g, ids| {
            let y = g.channel_affine(ids[0], h.clone(), &n)?;
            let sq = g.mul(y, y)?;
            g.sum(sq)
        },
        &[x],
        1e-6,
    );
}

#[test]
fn diamond_sharing_gradient() {
    let mut rng = SplitMix64::new(8);
    let x = random_tensor(&mut rng, 2, 2);
    check(
        |g, ids| {
            let a = g.sigmoid(ids[0])?;
            let b = g.relu(ids[0])?;
            let y = g.mul(a, b)?;
            g.sum(y)
        },
        &[x],
        1e-5,
    );
}

#[test]
fn every_op_passes_at_many_random_shapes() {
    // 20 random small shapes through a mixed-op block.
    let mut rng = SplitMix64::new(9);
    for trial in 0..20 {
        let n = 2 + (trial % 4);
        let c = 2 + (trial % 3);
        let x = random_tensor(&mut rng, n, c);
        let w = random_tensor(&mut rng, c, 3);
        let b = random_tensor(&mut rng, 1, 3);
        let gamma = random_tensor(&mut rng, 1, 3);
        let beta = random_tensor(&mut rng, 1, 3);
        check(
            |g, ids| {
                let h = g.matmul(ids[0], ids[1])?;
                let h = g.add_bias(h, ids[2])?;
                let (h, _, _) = g.batchnorm_train(h, ids[3], ids[4])?;
                let h = g.sigmoid(h)?;
                let p = g.softmax_rows(h)?;
                let lp = g.log_clamped(p)?;
                let s = g.power_normalize(lp)?;
                let sq = g.mul(s, s)?;
                g.sum(sq)
            },
            &[x, w, b, gamma, beta],
            1e-4,
        );
    }
}
