//! Regression checks frozen against the fixed-seed reference training runs.

use vdkl::kl::{kl_value, PriorConstant, SeriesConfig};
use vdkl::vdnet::{
    builtin_linear, builtin_sine, sparsity_report, train, Activation, LayerMode, NetworkConfig,
    TrainConfig,
};

fn reference_cfg() -> TrainConfig {
    TrainConfig {
        learning_rate: 8e-5,
        epochs: 4000,
        batch_size: 200,
        seed: 7,
        kl_scale: 1.0,
        prior_c: 1.0,
    }
}

fn reference_net(mode: LayerMode) -> NetworkConfig {
    NetworkConfig {
        layer_sizes: vec![10, 1],
        modes: vec![mode],
        activation: Activation::Identity,
        sigma_n: 0.2,
    }
}

/// The KL total starts high (every weight initialises at u = 200), drops
/// by more than twenty nats within the first few hundred epochs, and the
/// descent is permanent: late-epoch values never climb back toward the
/// start. (Strict per-epoch monotonicity does not hold: the single-sample
/// likelihood gradient jitters theta, so kl_total fluctuates inside a
/// narrow band once settled.)
#[test]
fn reference_run_kl_total_descends_and_stays_down() {
    let (train_data, test_data) = builtin_linear(42);
    let out = train(
        &reference_net(LayerMode::Additive),
        &reference_cfg(),
        &train_data,
        &test_data,
    )
    .unwrap();
    let kl: Vec<f64> = out.trace.iter().map(|s| s.kl_total).collect();
    assert!(
        kl[0] > 10.0,
        "initial KL total {} unexpectedly small",
        kl[0]
    );
    let settled_max = kl[500..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    assert!(
        settled_max < -8.0,
        "KL total climbed back to {settled_max} after settling"
    );
    let overall_min = kl.iter().cloned().fold(f64::INFINITY, f64::min);
    assert!(
        overall_min > -12.0,
        "KL total fell to {overall_min}, below the frozen band"
    );
}

/// Signal weights survive training close to their generating values while
/// the KL term keeps noise weights near zero.
#[test]
fn reference_run_recovers_the_generating_weights() {
    let (train_data, test_data) = builtin_linear(42);
    let out = train(
        &reference_net(LayerMode::Additive),
        &reference_cfg(),
        &train_data,
        &test_data,
    )
    .unwrap();
    let theta = out.network.layers()[0].theta();
    assert!(
        (theta.get(0, 0) - 1.5).abs() < 0.05,
        "signal weight 0: {}",
        theta.get(0, 0)
    );
    assert!(
        (theta.get(0, 1) + 2.0).abs() < 0.05,
        "signal weight 1: {}",
        theta.get(0, 1)
    );
    for i in 2..10 {
        assert!(
            theta.get(0, i).abs() < 0.05,
            "noise weight {i}: {}",
            theta.get(0, i)
        );
    }
    let last = out.trace.last().unwrap();
    assert!(last.rmse_test < 0.2, "held-out RMSE {}", last.rmse_test);
}

/// Pruned networks keep only signal weights on the reference run when the
/// threshold is placed between the two median groups.
#[test]
fn pruning_between_the_medians_removes_only_noise_weights() {
    let (train_data, test_data) = builtin_linear(42);
    let out = train(
        &reference_net(LayerMode::Additive),
        &reference_cfg(),
        &train_data,
        &test_data,
    )
    .unwrap();
    let (report, pruned) = sparsity_report(&out.network, -2.0, &test_data).unwrap();
    assert!(
        (report.pruned_fraction - 0.8).abs() < 1e-12,
        "fraction {}",
        report.pruned_fraction
    );
    let theta = pruned.layers()[0].theta();
    assert!(theta.get(0, 0) != 0.0 && theta.get(0, 1) != 0.0);
    for i in 2..10 {
        assert_eq!(theta.get(0, i), 0.0, "noise weight {i} survived");
    }
    assert!(
        (report.rmse_after - report.rmse_before).abs() / report.rmse_before < 0.05,
        "pruning moved RMSE from {} to {}",
        report.rmse_before,
        report.rmse_after
    );
}

/// A hidden-layer network on the sine task trains to a sensible fit with
/// the exact KL term in place; a pure smoke-level bound on held-out error.
#[test]
fn sine_task_smoke_run() {
    let (train_data, test_data) = builtin_sine(5);
    let net_cfg = NetworkConfig {
        layer_sizes: vec![1, 16, 1],
        modes: vec![LayerMode::Additive, LayerMode::Additive],
        activation: Activation::Relu,
        sigma_n: 0.2,
    };
    let cfg = TrainConfig {
        learning_rate: 5e-5,
        epochs: 5000,
        batch_size: 100,
        seed: 1,
        kl_scale: 1.0,
        prior_c: 1.0,
    };
    let out = train(&net_cfg, &cfg, &train_data, &test_data).unwrap();
    let last = out.trace.last().unwrap();
    assert!(
        last.rmse_test < 0.35,
        "sine fit did not converge: held-out RMSE {}",
        last.rmse_test
    );
    let kl0 = kl_value(0.0, &PriorConstant::default(), &SeriesConfig::default()).unwrap();
    assert!(last.kl_total.is_finite());
    assert!(last.min_weight_kl >= kl0);
}
