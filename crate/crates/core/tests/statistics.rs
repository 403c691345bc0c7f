use nrdk_core::invariants::{fit_linear, FitMode};
use nrdk_core::render::crop_origin;
use nrdk_core::{Frame, SeededRng};
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn crop_origins_are_uniform() {
    const BINS: usize = 8;
    let (side, size) = (512, 256);
    let span = side - size + 1;
    let bin = |v: usize| v * BINS / span;
    let mut width = [0usize; BINS];
    for v in 0..span {
        width[bin(v)] += 1;
    }
    let mut counts = [[0usize; BINS]; BINS];
    let mut rng = SeededRng::new(11);
    let draws = 10_000;
    for _ in 0..draws {
        let (x, y) = crop_origin(&mut rng, side, side, size);
        assert!(x < span && y < span);
        counts[bin(y)][bin(x)] += 1;
    }
    let mut chi2 = 0.0;
    for by in 0..BINS {
        for bx in 0..BINS {
            let expected = draws as f64 * (width[bx] * width[by]) as f64 / (span * span) as f64;
            chi2 += (counts[by][bx] as f64 - expected).powi(2) / expected;
        }
    }
    let dof = (BINS * BINS - 1) as f64;
    let p = 1.0 - ChiSquared::new(dof).unwrap().cdf(chi2);
    assert!(p > 0.01, "chi2 {chi2:.1} on {dof} dof, p = {p:.4}");
}

#[test]
fn fit_standard_errors_cover_truth() {
    let truth = [0.4, -0.7, 1.3, 2.0];
    let sigma = 0.05;
    let mut rng = SeededRng::new(7);
    let src = Frame::from_world_fn(24, 24, |x, y| (2.0 * x).sin() + x * y + 0.5 * y * y);
    let (mut covered, mut total) = (0, 0);
    for _ in 0..500 {
        let dst = Frame::from_fn(24, 24, |i, j| {
            let (x, y) = src.world(i, j);
            truth[0] * x + truth[1] * y + truth[2] * src.get(i, j) + truth[3] + sigma * rng.normal()
        });
        let f = fit_linear(&src, &dst, None, FitMode::Full).unwrap();
        for k in 0..4 {
            total += 1;
            if (f.coeffs[k] - truth[k]).abs() <= 3.0 * f.std_err[k] {
                covered += 1;
            }
        }
    }
    let rate = covered as f64 / total as f64;
    assert!(rate >= 0.99, "3-sigma coverage {rate}");
}
