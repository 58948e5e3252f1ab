//! Property tests for the op-level invariants.

use proptest::prelude::*;
use semcom_core::{Graph, Tensor};

fn tensor_strategy(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-10.0f64..10.0, rows * cols)
        .prop_map(move |data| Tensor::new(rows, cols, data).unwrap())
}

proptest! {
    #[test]
    fn softmax_rows_sum_to_one(t in tensor_strategy(3, 5)) {
        let mut g = Graph::new();
        let x = g.leaf(t, false).unwrap();
        let y = g.softmax_rows(x).unwrap();
        for i in 0..3 {
            let sum: f64 = g.value(y).row(i).iter().sum();
            prop_assert!((sum - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn sigmoid_in_open_unit_interval(t in tensor_strategy(2, 6)) {
        let mut g = Graph::new();
        let x = g.leaf(t, false).unwrap();
        let y = g.sigmoid(x).unwrap();
        prop_assert!(g.value(y).data.iter().all(|&v| v > 0.0 && v < 1.0));
    }

    #[test]
    fn relu_nonnegative(t in tensor_strategy(2, 6)) {
        let mut g = Graph::new();
        let x = g.leaf(t, false).unwrap();
        let y = g.relu(x).unwrap();
        prop_assert!(g.value(y).data.iter().all(|&v| v >= 0.0));
    }

    #[test]
    fn shared_input_adjoints_sum(t in tensor_strategy(2, 3)) {
        // grad of sum(x) + sum(2x) through a shared leaf is 3 everywhere.
        let mut g = Graph::new();
        let x = g.leaf(t, true).unwrap();
        let a = g.sum(x).unwrap();
        let doubled = g.scale(x, 2.0).unwrap();
        let b = g.sum(doubled).unwrap();
        let total = g.add(a, b).unwrap();
        g.backward(total).unwrap();
        prop_assert!(g.grad(x).unwrap().iter().all(|&v| (v - 3.0).abs() < 1e-12));
    }

    #[test]
    fn power_normalize_rows_have_unit_power(t in tensor_strategy(3, 8)) {
        let mut g = Graph::new();
        let x = g.leaf(t, false).unwrap();
        let y = g.power_normalize(x).unwrap();
        for i in 0..3 {
            let p: f64 = g.value(y).row(i).iter().map(|&v| v * v).sum::<f64>() / 8.0;
            // Rows of the strategy are never exactly zero in practice,
            // but guard the degenerate rule anyway.
            if g.value(x).row(i).iter().any(|&v| v != 0.0) {
                prop_assert!((p - 1.0).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn concat_then_split_is_identity(a in tensor_strategy(2, 3), b in tensor_strategy(2, 4)) {
        let mut g = Graph::new();
        let na = g.leaf(a.clone(), false).unwrap();
        let nb = g.leaf(b.clone(), false).unwrap();
        let c = g.concat_cols(&[na, nb]).unwrap();
        let v = g.value(c);
        for i in 0..2 {
            prop_assert_eq!(&v.row(i)[..3], a.row(i));
            prop_assert_eq!(&v.row(i)[3..], b.row(i));
        }
    }
}
