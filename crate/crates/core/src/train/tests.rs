use super::*;
use crate::data::{synthetic, SyntheticKind};
use crate::nn::DenseLayer;
use ndarray::{array, Array1};
use proptest::prelude::*;

fn scalar_model(w: f64, b: f64) -> MlpModel {
    let layer = DenseLayer::new(array![[w]], Array1::from(vec![b]), Activation::Identity).unwrap();
    MlpModel::new(1, vec![layer]).unwrap()
}

fn blob_splits(m: usize, seed: u64) -> Splits {
    Splits::from_tail(&synthetic(SyntheticKind::Blobs, m, seed).unwrap(), m / 5, m / 5).unwrap()
}

fn small_cfg(kind: LossKind) -> TrainConfig {
    TrainConfig {
        learning_rate: 0.5,
        epochs: 5,
        batch_size: 16,
        seed: 3,
        loss_kind: kind,
        ..TrainConfig::default()
    }
}

#[test]
fn scalar_fixture_step() {
    let mut model = scalar_model(1.0, 0.0);
    let mut lambda = ConvexityIndex::with_default_floor(2.0).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.1,
        loss: LossConfig::new(2, 2, 1, 0.1).unwrap(),
        ..TrainConfig::default()
    };
    let obj = anrat_step(&mut model, &mut lambda, array![[1.0], [1.0]].view(), array![[0.5], [0.0]].view(), &cfg)
        .unwrap();
    assert!((obj - 0.8888600427534492).abs() < 1e-14);
    let layer = &model.layers()[0];
    assert!((layer.weights()[[0, 0]] - 0.8047425873177567).abs() < 1e-14);
    assert!((layer.bias()[0] + 0.1952574126822433).abs() < 1e-14);
    assert!((lambda.value() - 1.9899429447636625).abs() < 1e-14);
}

#[test]
fn zero_residual_step_changes_nothing() {
    let spec = ModelSpec::classifier(&[2, 3, 2], Activation::Tanh, Activation::Softmax).unwrap();
    let mut model = init_model(&spec, 5).unwrap();
    let x = array![[0.1, 0.9], [0.4, 0.2]];
    let (targets, _) = model.forward(x.view()).unwrap();
    let before = model.parameters();
    let mut lambda = ConvexityIndex::with_default_floor(10.0).unwrap();
    let cfg = TrainConfig {
        loss: LossConfig::new(2, 2, 1, 0.0).unwrap(),
        ..TrainConfig::default()
    };
    anrat_step(&mut model, &mut lambda, x.view(), targets.view(), &cfg).unwrap();
    assert_eq!(model.parameters(), before);
    assert_eq!(lambda.value(), 10.0);
}

#[test]
fn single_sample_step_equals_mse_step() {
    let spec = ModelSpec::classifier(&[2, 4, 3], Activation::Sigmoid, Activation::Softmax).unwrap();
    let x = array![[0.3, 0.7]];
    let y = array![[0.0, 1.0, 0.0]];
    let cfg = TrainConfig::default();
    let mut a = init_model(&spec, 9).unwrap();
    let mut lambda = ConvexityIndex::with_default_floor(10.0).unwrap();
    anrat_step(&mut a, &mut lambda, x.view(), y.view(), &cfg).unwrap();

    let mut b = init_model(&spec, 9).unwrap();
    let (out, trace) = b.forward(x.view()).unwrap();
    let g = loss::lp_grad_outputs(out.view(), y.view(), 2).unwrap();
    let grads = b.backward(&trace, g.view()).unwrap();
    b.apply_gradients(&grads, cfg.learning_rate).unwrap();
    for (p, q) in a.parameters().iter().zip(b.parameters()) {
        assert!((p - q).abs() <= 1e-15 * q.abs().max(1.0));
    }
}

#[test]
fn gdc_schedule_examples() {
    assert_eq!(gdc_schedule(7, 10.0, 1.0, 1e-3), 10.0);
    assert_eq!(gdc_schedule(3, 10.0, 0.5, 1e-3), 1.25);
    assert_eq!(gdc_schedule(10000, 10.0, 0.5, 1e-3), 1e-3);
    assert_eq!(gdc_schedule(usize::MAX, 10.0, 0.9, 1e-3), 1e-3);
}

#[test]
fn one_full_batch_epoch_descends() {
    let splits = blob_splits(60, 1);
    let spec = ModelSpec::classifier(&[2, 2], Activation::Identity, Activation::Softmax).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.05,
        epochs: 1,
        batch_size: 0,
        ..TrainConfig::default()
    };
    let lambda = ConvexityIndex::with_default_floor(cfg.lambda0).unwrap();
    let before = dataset_objective(&init_model(&spec, cfg.seed).unwrap(), &lambda, &splits.train, &cfg).unwrap();
    let run = train(&spec, &splits, &cfg).unwrap();
    let after_lambda = ConvexityIndex::with_default_floor(run.best_lambda).unwrap();
    let after = dataset_objective(&run.best_model, &after_lambda, &splits.train, &cfg).unwrap();
    assert!(after <= before, "{after} > {before}");
    assert_eq!(run.records[0].objective, before);
}

#[test]
fn full_batch_descent_is_monotone_on_a_linear_model() {
    let data = synthetic(SyntheticKind::Xor, 40, 2).unwrap();
    let targets = one_hot(data.labels(), 2).unwrap();
    let spec = ModelSpec::classifier(&[2, 2], Activation::Identity, Activation::Identity).unwrap();
    let mut model = init_model(&spec, 4).unwrap();
    // Steps at lr = 0.01 already oscillate: at λ = 10 the objective's
    // curvature is several hundred.
    let cfg = TrainConfig {
        learning_rate: 0.004,
        ..TrainConfig::default()
    };
    let mut lambda = ConvexityIndex::with_default_floor(cfg.lambda0).unwrap();
    let mut last = f64::INFINITY;
    for _ in 0..1000 {
        let obj = anrat_step(&mut model, &mut lambda, data.inputs(), targets.view(), &cfg).unwrap();
        assert!(obj <= last + 1e-12, "{obj} > {last}");
        last = obj;
    }
}

#[test]
fn tiny_frozen_lambda_tracks_mse() {
    let data = synthetic(SyntheticKind::Spirals, 64, 8).unwrap();
    let targets = one_hot(data.labels(), 2).unwrap();
    let spec = ModelSpec::classifier(&[2, 8, 2], Activation::Tanh, Activation::Softmax).unwrap();
    let anrat_cfg = TrainConfig {
        learning_rate: 0.5,
        lambda0: 1e-6,
        lambda_min: 1e-9,
        freeze_lambda: true,
        loss: LossConfig::new(2, 2, 1, 0.0).unwrap(),
        ..TrainConfig::default()
    };
    let mse_cfg = TrainConfig {
        loss_kind: LossKind::Mse,
        ..anrat_cfg.clone()
    };
    let mut a = init_model(&spec, 1).unwrap();
    let mut b = a.clone();
    let mut la = ConvexityIndex::new(1e-6, 1e-9).unwrap();
    let mut lb = la;
    let labels = data.labels().to_vec();
    for idx in (0..64).collect::<Vec<_>>().chunks(16).cycle().take(40) {
        let x = data.inputs().select(Axis(0), idx);
        let y = targets.select(Axis(0), idx);
        let lab: Vec<usize> = idx.iter().map(|i| labels[*i]).collect();
        step(&mut a, &mut la, x.view(), y.view(), &lab, &anrat_cfg).unwrap();
        step(&mut b, &mut lb, x.view(), y.view(), &lab, &mse_cfg).unwrap();
        for (p, q) in a.parameters().iter().zip(b.parameters()) {
            assert!((p - q).abs() <= 1e-6 * q.abs().max(1e-3), "{p} vs {q}");
        }
    }
    assert_eq!(la.value(), 1e-6);
}

#[test]
fn training_is_deterministic_and_keeps_the_best_snapshot() {
    let splits = blob_splits(100, 2);
    let spec = ModelSpec::classifier(&[2, 4, 2], Activation::Tanh, Activation::Softmax).unwrap();
    for kind in [LossKind::Anrat, LossKind::Mse, LossKind::CrossEntropy, LossKind::Gdc] {
        let cfg = small_cfg(kind);
        let a = train(&spec, &splits, &cfg).unwrap();
        let b = train(&spec, &splits, &cfg).unwrap();
        assert_eq!(a.records, b.records);
        assert_eq!(a.lambda_trace, b.lambda_trace);
        assert_eq!(a.best_model.parameters(), b.best_model.parameters());
        assert_eq!(a.records.len(), 5);
        let best = a.best_record();
        assert!(a.records.iter().all(|r| r.valid_err >= best.valid_err));
        assert!(a.records[..a.best_epoch - 1].iter().all(|r| r.valid_err > best.valid_err));
        assert_eq!(a.test_error, best.test_err);
        let outputs = a.best_model.predict(splits.test.inputs(), 7).unwrap();
        assert_eq!(crate::nn::error_rate(outputs.view(), splits.test.labels()).unwrap(), a.test_error);
    }
}

#[test]
fn gdc_follows_its_schedule() {
    let splits = blob_splits(50, 4);
    let spec = ModelSpec::classifier(&[2, 2], Activation::Identity, Activation::Softmax).unwrap();
    let cfg = TrainConfig {
        gdc_decay: 0.5,
        ..small_cfg(LossKind::Gdc)
    };
    let run = train(&spec, &splits, &cfg).unwrap();
    for r in &run.records {
        assert_eq!(r.lambda, gdc_schedule(r.epoch - 1, 10.0, 0.5, cfg.lambda_min));
    }
}

#[test]
fn cross_entropy_needs_softmax() {
    let splits = blob_splits(50, 4);
    let spec = ModelSpec::classifier(&[2, 2], Activation::Identity, Activation::Sigmoid).unwrap();
    assert!(matches!(train(&spec, &splits, &small_cfg(LossKind::CrossEntropy)), Err(Error::Config(_))));
}

#[test]
fn divergence_keeps_completed_epochs() {
    let splits = blob_splits(50, 4);
    let spec = ModelSpec::classifier(&[2, 6, 2], Activation::Relu, Activation::Identity).unwrap();
    let cfg = TrainConfig {
        learning_rate: 1e3,
        epochs: 50,
        loss_kind: LossKind::Mse,
        ..small_cfg(LossKind::Mse)
    };
    match train(&spec, &splits, &cfg) {
        Err(Error::Diverged { epoch, records }) => assert_eq!(records.len(), epoch - 1),
        other => panic!("expected divergence, got {other:?}"),
    }
}

#[test]
fn spirals_are_learnable() {
    // Plain SGD on this network plateaus near 25% error for many data seeds;
    // this seed is a fixed fixture, not a claim about every seed.
    let data = synthetic(SyntheticKind::Spirals, 200, 1).unwrap();
    let splits = Splits::new(data.clone(), data.slice(0, 50).unwrap(), data.slice(150, 200).unwrap()).unwrap();
    let spec = ModelSpec::classifier(&[2, 16, 16, 2], Activation::Tanh, Activation::Softmax).unwrap();
    let cfg = TrainConfig {
        learning_rate: 0.5,
        epochs: 900,
        batch_size: 10,
        seed: 1,
        eval_train_full: true,
        ..TrainConfig::default()
    };
    let run = train(&spec, &splits, &cfg).unwrap();
    let best = run.records.iter().map(|r| r.train_err).fold(1.0, f64::min);
    assert!(best <= 0.10, "train error never below {best}");
}

#[test]
fn config_validation() {
    let bad = [
        TrainConfig { epochs: 0, ..TrainConfig::default() },
        TrainConfig { learning_rate: 0.0, ..TrainConfig::default() },
        TrainConfig { lambda_learning_rate: Some(-1.0), ..TrainConfig::default() },
        TrainConfig { lambda0: 1e-4, ..TrainConfig::default() },
        TrainConfig { gdc_decay: 1.5, ..TrainConfig::default() },
    ];
    for cfg in bad {
        assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
    }
    assert_eq!("CE".parse::<LossKind>().unwrap(), LossKind::CrossEntropy);
    assert!("hinge".parse::<LossKind>().is_err());
}

#[test]
fn grid_search_contracts() {
    let splits = blob_splits(80, 6);
    let spec = ModelSpec::classifier(&[2, 3, 2], Activation::Tanh, Activation::Softmax).unwrap();
    let base = TrainConfig { epochs: 3, ..small_cfg(LossKind::Anrat) };

    let single = grid_search(&spec, &splits, &base, &[0.5], &[0.1]).unwrap();
    let direct = train(&spec, &splits, &base).unwrap();
    assert_eq!(single.cells.len(), 1);
    assert_eq!(single.best.records, direct.records);

    let full = grid_search(&spec, &splits, &base, &DEFAULT_LR_GRID, &DEFAULT_A_GRID).unwrap();
    assert_eq!(full.cells.len(), 9);
    let win = full.cells[full.winner].best_valid_err().unwrap();
    assert!(full.cells.iter().filter_map(GridCell::best_valid_err).all(|v| v >= win));
    assert_eq!(full.best.best_record().valid_err, win);

    let mse = TrainConfig { loss_kind: LossKind::Mse, ..base.clone() };
    assert_eq!(grid_search(&spec, &splits, &mse, &DEFAULT_LR_GRID, &DEFAULT_A_GRID).unwrap().cells.len(), 3);
    assert!(grid_search(&spec, &splits, &base, &[], &[0.1]).is_err());
}

#[test]
fn all_diverged_grid_is_an_error() {
    let splits = blob_splits(50, 4);
    let spec = ModelSpec::classifier(&[2, 6, 2], Activation::Relu, Activation::Identity).unwrap();
    let base = TrainConfig { epochs: 50, ..small_cfg(LossKind::Mse) };
    assert!(matches!(
        grid_search(&spec, &splits, &base, &[1e3, 1e4], &[0.1]),
        Err(Error::AllCellsDiverged { cells: 2 })
    ));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]
    #[test]
    fn lambda_never_crosses_the_floor(seed in any::<u64>(), lr in 0.05f64..2.0, a in 0.0f64..1.0) {
        let splits = blob_splits(40, seed);
        let spec = ModelSpec::classifier(&[2, 3, 2], Activation::Sigmoid, Activation::Softmax).unwrap();
        let cfg = TrainConfig {
            learning_rate: lr,
            lambda_learning_rate: Some(50.0),
            epochs: 3,
            batch_size: 8,
            seed,
            loss: LossConfig::new(2, 2, 1, a).unwrap(),
            ..TrainConfig::default()
        };
        let run = train(&spec, &splits, &cfg).unwrap();
        prop_assert!(run.lambda_trace.iter().all(|l| *l >= cfg.lambda_min));
        prop_assert!(run.records.iter().all(|r| r.lambda >= cfg.lambda_min));
        prop_assert!(run.records.iter().all(|r| (0.0..=1.0).contains(&r.train_err)));
    }
}
