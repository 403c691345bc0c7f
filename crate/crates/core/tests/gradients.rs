//! Finite-difference oracles for the invariant losses.

use nrdk_core::invariants::{InvariantKind, DEFAULT_EPS};
use nrdk_core::losses::invariant_loss;
use nrdk_core::{Frame, SeededRng, VideoTensor};

fn random_video(rng: &mut SeededRng, w: usize, t: usize) -> VideoTensor {
    let frames: Vec<Frame> = (0..t)
        .map(|_| {
            let mut terms = Vec::new();
            for _ in 0..4 {
                terms.push((
                    rng.uniform(-3.0, 3.0),
                    rng.uniform(-3.0, 3.0),
                    rng.uniform(0.0, 6.3),
                    rng.uniform(0.2, 1.0),
                ));
            }
            let noise: Vec<f64> = (0..w * w).map(|_| 0.01 * rng.normal()).collect();
            Frame::from_fn(w, w, |i, j| {
                let (x, y) = (-1.0 + (2 * i + 1) as f64 / w as f64, -1.0 + (2 * j + 1) as f64 / w as f64);
                terms.iter().map(|&(a, b, c, m)| m * (a * x + b * y + c).sin()).sum::<f64>() + noise[j * w + i]
            })
        })
        .collect();
    VideoTensor::from_frames(&frames).unwrap()
}

/// Max relative error of the analytic gradient over `samples` random coordinates,
/// against central differences with step `h`.
pub fn worst_relative_error(kind: InvariantKind, seed: u64, samples: usize, h: f64) -> f64 {
    let mut rng = SeededRng::new(seed);
    let pred = random_video(&mut rng, 32, 4);
    let truth = random_video(&mut rng, 32, 4);
    let base = invariant_loss(&pred, &truth, kind, DEFAULT_EPS).unwrap();
    let mut worst: f64 = 0.0;
    for _ in 0..samples {
        // interior coordinates so each sample moves at least one valid stencil
        let (x, y, t) = (1 + rng.index(30), 1 + rng.index(30), rng.index(4));
        let at = |d: f64| {
            let mut p = pred.clone();
            let v = p.get(x, y, t, 0);
            p.set(x, y, t, 0, v + d);
            invariant_loss(&p, &truth, kind, DEFAULT_EPS).unwrap().loss
        };
        let fd = (at(h) - at(-h)) / (2.0 * h);
        let an = base.gradient.get(x, y, t, 0);
        let rel = (an - fd).abs() / an.abs().max(fd.abs()).max(f64::MIN_POSITIVE);
        worst = worst.max(rel);
    }
    worst
}

#[test]
fn gbr_loss_gradient_matches_finite_differences() {
    let e = worst_relative_error(InvariantKind::Gbr, 11, 50, 1e-6);
    assert!(e <= 1e-5, "worst relative error {e:e}");
}

#[test]
fn trsc_loss_gradient_matches_finite_differences() {
    let e = worst_relative_error(InvariantKind::TrSc, 12, 50, 1e-6);
    assert!(e <= 1e-5, "worst relative error {e:e}");
}
