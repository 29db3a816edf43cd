//! Property-based invariants over randomized inputs.

use proptest::prelude::*;
use sparseout::{
    bernoulli_mask, hoyer, mse_loss, relu, sigmoid, Layer, LinearLayer, Mode, Network, RegConfig,
    RegKind, RegLayer, ReluLayer, Rng, SigmoidLayer, Tensor,
};

fn naive_matmul(a: &Tensor, b: &Tensor) -> Tensor {
    let mut out = Tensor::zeros(a.rows(), b.cols());
    for i in 0..a.rows() {
        for j in 0..b.cols() {
            let mut acc = 0.0;
            for k in 0..a.cols() {
                acc += a.get(i, k) * b.get(k, j);
            }
            out.set(i, j, acc);
        }
    }
    out
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// The production matmul agrees elementwise with the textbook triple
    /// loop on every shape up to 32x32.
    #[test]
    fn matmul_matches_naive_oracle(
        m in 1usize..=32,
        k in 1usize..=32,
        n in 1usize..=32,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::new(seed);
        let a = rng.uniform_tensor(m, k, -10.0, 10.0);
        let b = rng.uniform_tensor(k, n, -10.0, 10.0);
        let fast = a.matmul(&b).unwrap();
        let slow = naive_matmul(&a, &b);
        for (x, y) in fast.data().iter().zip(slow.data()) {
            let rel = (x - y).abs() / y.abs().max(1e-30);
            prop_assert!(rel <= 1e-12, "{x} vs {y}");
        }
    }

    /// Mask elements are exactly 0 or exactly 1/p, never anything between.
    #[test]
    fn mask_values_are_two_point(
        p in 0.05f64..=1.0,
        seed in any::<u64>(),
        rows in 1usize..=8,
        cols in 1usize..=8,
    ) {
        let mut rng = Rng::new(seed);
        let mask = bernoulli_mask(rows, cols, p, &mut rng).unwrap();
        let inv_p = 1.0 / p;
        for &v in mask.data() {
            prop_assert!(v == 0.0 || v == inv_p, "unexpected mask value {v}");
        }
    }

    /// Hoyer stays in [0, 1] (1e-12 slack) and is invariant to rescaling.
    #[test]
    fn hoyer_range_and_scale_invariance(
        values in prop::collection::vec(-100.0f64..100.0, 2..40),
        c in prop::sample::select(vec![2.0f64, -1.0, 0.5, 1e3, -1e-3]),
    ) {
        prop_assume!(values.iter().any(|&v| v != 0.0));
        let h = hoyer(&values).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&h), "h = {h}");
        let scaled: Vec<f64> = values.iter().map(|v| v * c).collect();
        let hs = hoyer(&scaled).unwrap();
        prop_assert!((h - hs).abs() < 1e-12, "{h} vs {hs}");
    }

    /// A validly constructed network never raises a shape error on forward,
    /// in either mode, whatever the widths.
    #[test]
    fn shape_propagation_never_fails(
        d_in in 1usize..=12,
        hidden in 2usize..=12,
        batch in 1usize..=6,
        q in 1.0f64..=3.0,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::new(seed);
        let mut net = Network::new(vec![
            Layer::Linear(LinearLayer::new(d_in, hidden, &mut rng).unwrap()),
            Layer::Relu(ReluLayer::new()),
            Layer::Reg(RegLayer::new(RegKind::Sparseout, RegConfig::new(0.5, q).unwrap()).unwrap()),
            Layer::Linear(LinearLayer::new(hidden, d_in, &mut rng).unwrap()),
            Layer::Sigmoid(SigmoidLayer::new()),
        ]).unwrap();
        let x = rng.uniform_tensor(batch, d_in, -1.0, 1.0);
        let out = net.forward(&x, &mut rng).unwrap();
        prop_assert_eq!(out.shape(), (batch, d_in));
        prop_assert!(out.all_finite());
        let eval = net.forward_eval(&x).unwrap();
        prop_assert_eq!(eval.shape(), (batch, d_in));
    }

    /// Training-mode outputs stay finite for any mask draw and q in the
    /// supported range, including activations straddling zero.
    #[test]
    fn sparseout_forward_stays_finite(
        q in 0.5f64..=4.0,
        p in 0.1f64..=1.0,
        seed in any::<u64>(),
    ) {
        let mut rng = Rng::new(seed);
        let a = rng.uniform_tensor(3, 7, -5.0, 5.0);
        let mut layer = RegLayer::new(RegKind::Sparseout, RegConfig::new(p, q).unwrap()).unwrap();
        let out = layer.forward(&a, Mode::Train, &mut rng).unwrap();
        prop_assert!(out.all_finite());
        let (_, grad) = mse_loss(&out, &a).unwrap();
        let back = layer.backward(&grad).unwrap();
        prop_assert!(back.all_finite());
    }

    /// Activations are monotone and bounded where they claim to be.
    #[test]
    fn activation_bounds(seed in any::<u64>()) {
        let mut rng = Rng::new(seed);
        let x = rng.uniform_tensor(4, 9, -50.0, 50.0);
        let r = relu(&x);
        prop_assert!(r.data().iter().all(|&v| v >= 0.0));
        let s = sigmoid(&x);
        prop_assert!(s.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
