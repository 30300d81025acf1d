mod oracles;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use lumen_rem::mlp::{AdamParams, Architecture};
use lumen_rem::{AdamState, MlpConfig, MlpModel};

fn small_net(seed: u64) -> MlpModel {
    let cfg = MlpConfig {
        input_dim: 5,
        hidden: vec![8, 8],
        adam: AdamParams::default(),
        epochs: 1,
        batch_size: 4,
        seed,
    };
    let mut model = MlpModel::init(&cfg).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xb1a5);
    for layer in &mut model.layers {
        for b in &mut layer.biases {
            *b = rng.random_range(-0.5..0.5);
        }
    }
    model
}

fn random_batch(rng: &mut ChaCha8Rng, n: usize, d: usize) -> (Vec<f64>, Vec<f64>) {
    let x = (0..n * d).map(|_| rng.random_range(-2.0..2.0)).collect();
    let y = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    (x, y)
}

#[test]
fn backprop_matches_central_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for draw in 0..20 {
        let model = small_net(draw);
        let (x, y) = random_batch(&mut rng, 6, 5);
        let (_, grads) = model.loss_and_gradients(&x, &y).unwrap();
        let analytic: Vec<f64> = grads.slices().concat();
        let numeric = oracles::numeric_gradient(&model, &x, &y, 1e-5);
        assert_eq!(analytic.len(), model.parameter_count());
        let err = oracles::relative_error(&analytic, &numeric);
        assert!(err < 1e-5, "draw {draw}: relative error {err}");
    }
}

#[test]
fn adam_follows_the_scalar_recurrence() {
    let hp = AdamParams {
        learning_rate: 0.01,
        ..AdamParams::default()
    };
    let grad = |t: f64| 2.0 * (t - 3.0);
    let want = oracles::adam_scalar(0.5, grad, 5, hp.learning_rate, hp.beta1, hp.beta2, hp.epsilon);
    let mut state = AdamState::new(&[1]);
    let mut theta = [0.5f64];
    for (k, w) in want.iter().enumerate() {
        let g = [grad(theta[0])];
        state.step(&mut [&mut theta[..]], &[&g[..]], &hp);
        assert!((theta[0] - w).abs() < 1e-12, "step {k}: {} vs {w}", theta[0]);
    }
    // The bias-corrected first step moves by almost exactly the learning rate.
    assert!(((want[0] - 0.5) - 0.01).abs() < 1e-8);
}

#[test]
fn preset_parameter_counts() {
    let a = MlpModel::init(&MlpConfig::preset(Architecture::Mlp32x128, 3)).unwrap();
    assert_eq!(a.parameter_count(), 3 * 32 + 32 + 32 * 128 + 128 + 128 + 1);
    let b = MlpModel::init(&MlpConfig::preset(Architecture::Mlp64x256, 5)).unwrap();
    assert_eq!(b.parameter_count(), 5 * 64 + 64 + 64 * 256 + 256 + 256 + 1);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn batched_forward_equals_row_by_row(seed in 0u64..1000, n in 1usize..40) {
        let model = small_net(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (x, _) = random_batch(&mut rng, n, 5);
        let batch = model.forward_batch(&x).unwrap();
        for (row, b) in x.chunks(5).zip(&batch) {
            prop_assert_eq!(model.forward(row).unwrap(), *b);
        }
    }

    #[test]
    fn loss_is_mean_squared_residual(seed in 0u64..1000, n in 1usize..20) {
        let model = small_net(seed);
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 1);
        let (x, y) = random_batch(&mut rng, n, 5);
        let out = model.forward_batch(&x).unwrap();
        let want = out.iter().zip(&y).map(|(o, t)| (o - t) * (o - t)).sum::<f64>() / n as f64;
        let (loss, _) = model.loss_and_gradients(&x, &y).unwrap();
        prop_assert!((loss - want).abs() <= 1e-12 * want.max(1.0));
    }

    #[test]
    fn json_round_trip_is_exact(seed in 0u64..1000) {
        let model = small_net(seed);
        let back = MlpModel::from_json(&model.to_json()).unwrap();
        prop_assert_eq!(back, model);
    }
}
