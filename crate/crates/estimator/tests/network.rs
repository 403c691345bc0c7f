use nrdk_core::invariants::InvariantKind;
use nrdk_core::losses::invariant_loss;
use nrdk_core::{SeededRng, VideoTensor};
use nrdk_estimator::net::Network;
use nrdk_estimator::{NetConfig, Volume};

fn random_volume(seed: u64, t: usize, h: usize, w: usize) -> Volume {
    let mut r = SeededRng::new(seed);
    Volume {
        c: 1,
        t,
        h,
        w,
        data: (0..t * h * w).map(|_| r.uniform(0.0, 1.0)).collect(),
    }
}

fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Central differences of `f` at 100 random parameters against `grad`.
fn check_gradient(net: &Network, grad: &[f64], f: impl Fn(&Network) -> f64, seed: u64) -> f64 {
    let mut r = SeededRng::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..100 {
        let k = r.index(net.param_count());
        let h = 1e-6 * net.params[k].abs().max(1.0);
        let mut plus = net.clone();
        plus.params[k] += h;
        let mut minus = net.clone();
        minus.params[k] -= h;
        let fd = (f(&plus) - f(&minus)) / (2.0 * h);
        worst = worst.max(rel_err(grad[k], fd));
    }
    worst
}

#[test]
fn parameter_gradient_matches_finite_differences() {
    let net = Network::init(&NetConfig::tiny(), 1).unwrap();
    let x = random_volume(2, 4, 8, 8);
    let (out, cache) = net.forward_cached(&x).unwrap();
    let r = random_volume(3, out.t, out.h, out.w);
    let grad = net.backward(&cache, &r).unwrap();
    let functional = |n: &Network| -> f64 { n.forward(&x).unwrap().data.iter().zip(&r.data).map(|(a, b)| a * b).sum() };
    let worst = check_gradient(&net, &grad, functional, 4);
    assert!(worst <= 1e-4, "worst relative error {worst:e}");
}

#[test]
fn loss_gradient_through_network_matches_finite_differences() {
    let net = Network::init(&NetConfig::tiny(), 5).unwrap();
    let x = random_volume(6, 4, 16, 16);
    let truth = VideoTensor::from_fn(8, 8, 4, 1, |i, j, t, _| {
        let (u, v) = (i as f64 / 8.0, j as f64 / 8.0);
        (2.0 * u + t as f64 * 0.1).sin() * (1.3 * v).cos() + u * v
    });
    for kind in [InvariantKind::Gbr, InvariantKind::TrSc] {
        let (out, cache) = net.forward_cached(&x).unwrap();
        let l = invariant_loss(&out.into_video().unwrap(), &truth, kind, 1e-6).unwrap();
        let grad = net.backward(&cache, &Volume::from_video(&l.gradient).unwrap()).unwrap();
        let f = |n: &Network| invariant_loss(&n.forward(&x).unwrap().into_video().unwrap(), &truth, kind, 1e-6).unwrap().loss;
        let worst = check_gradient(&net, &grad, f, 7);
        assert!(worst <= 1e-4, "{kind:?}: worst relative error {worst:e}");
    }
}

#[test]
fn default_config_output_shape() {
    let net = Network::init(&NetConfig::default(), 0).unwrap();
    let clip = VideoTensor::from_fn(64, 64, 16, 1, |x, y, t, _| ((x * 7 + y * 3 + t) % 11) as f64 / 11.0);
    let out = net.predict_clip(&clip).unwrap();
    assert_eq!(out.dims(), (32, 32, 16, 1));
    assert!(out.is_finite());
    let wrong = VideoTensor::zeros(64, 64, 8, 1);
    assert!(net.predict_clip(&wrong).is_err());
}

#[test]
fn zero_weights_give_head_bias() {
    let mut net = Network::zeroed(&NetConfig::tiny()).unwrap();
    let head = net.layer("head").unwrap().clone();
    net.params[head.offset + head.weight_len()] = 0.75;
    let out = net.forward(&random_volume(1, 4, 8, 8)).unwrap();
    assert!(out.data.iter().all(|&v| v == 0.75));
}

#[test]
fn output_is_linear_in_head_weights() {
    let mut net = Network::init(&NetConfig::tiny(), 9).unwrap();
    let x = random_volume(2, 4, 8, 8);
    let a = net.forward(&x).unwrap();
    let head = net.layer("head").unwrap().clone();
    for v in &mut net.params[head.offset..head.offset + head.weight_len()] {
        *v *= 2.0;
    }
    let b = net.forward(&x).unwrap();
    for (u, v) in a.data.iter().zip(&b.data) {
        assert!((2.0 * u - v).abs() <= 1e-12 * u.abs().max(1.0));
    }
}

#[test]
fn frozen_layers_get_zero_gradient() {
    let cfg = NetConfig {
        frozen: vec!["enc1".into(), "head".into()],
        ..NetConfig::tiny()
    };
    let net = Network::init(&cfg, 2).unwrap();
    let x = random_volume(8, 4, 8, 8);
    let (out, cache) = net.forward_cached(&x).unwrap();
    let g = net.backward(&cache, &random_volume(9, out.t, out.h, out.w)).unwrap();
    for c in net.layers() {
        let part = &g[c.offset..c.offset + c.param_len()];
        if c.name.starts_with("enc1.") || c.name == "head" {
            assert!(part.iter().all(|&v| v == 0.0), "{} not frozen", c.name);
        } else {
            assert!(part.iter().any(|&v| v != 0.0), "{} has no gradient", c.name);
        }
    }
}

#[test]
fn deeper_config_shapes_and_registry() {
    let cfg = NetConfig {
        widths: vec![2, 3, 4, 5],
        ..NetConfig::default()
    };
    let net = Network::init(&cfg, 0).unwrap();
    let out = net.forward(&random_volume(1, 4, 12, 10)).unwrap();
    assert_eq!((out.c, out.t, out.h, out.w), (1, 4, 6, 5));
    let total: usize = net.registry().iter().map(|e| e.len()).sum();
    assert_eq!(total, net.param_count());
    assert!(net.registry().iter().all(|e| e.shape.len() == 1 || e.shape[2..] == [3, 3, 3]));
    let names: Vec<&str> = net.layers().iter().map(|c| c.name.as_str()).collect();
    assert!(names.contains(&"enc3.r2") && !names.contains(&"enc3.r3") && names.contains(&"enc2.r3"));
    assert!(names.contains(&"dec3.fuse") && names.contains(&"dec2.fuse"));
}

#[test]
fn same_seed_same_network() {
    assert_eq!(Network::init(&NetConfig::tiny(), 4).unwrap(), Network::init(&NetConfig::tiny(), 4).unwrap());
    assert_ne!(Network::init(&NetConfig::tiny(), 4).unwrap(), Network::init(&NetConfig::tiny(), 5).unwrap());
}

#[test]
fn odd_or_multichannel_input_is_shape_error() {
    let net = Network::init(&NetConfig::tiny(), 0).unwrap();
    assert!(matches!(net.forward(&random_volume(0, 4, 7, 8)), Err(nrdk_core::Error::Shape(_))));
    let two = Volume::zeros(2, 4, 8, 8);
    assert!(matches!(net.forward(&two), Err(nrdk_core::Error::Shape(_))));
}
