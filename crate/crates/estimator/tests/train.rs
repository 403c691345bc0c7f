use nrdk_core::config::GeneratorConfig;
use nrdk_core::invariants::InvariantKind;
use nrdk_core::render::{sample_clip, TextureSource};
use nrdk_estimator::net::Network;
use nrdk_estimator::{train, AdamConfig, NetConfig, Sample, Split, TrainConfig, TrainState};

fn one_clip(seed: u64) -> Vec<Sample> {
    let clip = sample_clip(&GeneratorConfig::default(), &TextureSource::Procedural, seed, 0).unwrap();
    vec![Sample::from_clip(&clip).unwrap()]
}

/// Trains on one clip for `steps` single-sample steps, validating on the same clip.
fn fit_one(kind: InvariantKind, steps: usize, lr: f64) -> TrainState {
    let data = one_clip(21);
    let split = Split {
        train: vec![0],
        val: vec![0],
        test: vec![],
    };
    let cfg = TrainConfig {
        epochs: steps,
        batch_size: 1,
        loss: kind,
        seed: 21,
        optimizer: AdamConfig {
            lr,
            ..AdamConfig::default()
        },
        ..TrainConfig::default()
    };
    train(Network::init(&NetConfig::tiny(), 21).unwrap(), &data, &split, &cfg, None).unwrap()
}

#[test]
fn overfits_a_single_clip() {
    let state = fit_one(InvariantKind::Gbr, 200, 1e-2);
    let (first, last) = (state.history[0].train_loss, state.history.last().unwrap().train_loss);
    assert!(last <= 0.1 * first, "{first} -> {last}");
    assert_eq!(state.history.len(), 201);
    let best = state.best_val.unwrap();
    assert!(state.history.iter().all(|r| r.val_loss.unwrap() >= best));
}

#[test]
fn same_seed_same_history() {
    let a = fit_one(InvariantKind::TrSc, 3, 1e-3);
    let b = fit_one(InvariantKind::TrSc, 3, 1e-3);
    assert_eq!(a.history, b.history);
    assert_eq!(a.best.params, b.best.params);
}
