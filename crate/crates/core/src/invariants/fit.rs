use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tensor::Frame;

use super::gbr::GbrParams;

/// Which subgroup a least-squares alignment searches.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitMode {
    /// All four parameters `(alpha, beta, lambda, tau)`.
    #[default]
    Full,
    /// `(lambda, tau)` with `alpha = beta = 0`.
    ScaleShift,
}

/// Unconstrained least-squares solution, in `(alpha, beta, lambda, tau)` order.
/// Parameters outside the fitted model are reported as their identity values.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearFit {
    pub coeffs: [f64; 4],
    /// Standard errors `sqrt(diag(s^2 (A^T A)^-1))`, zero for parameters not fitted.
    pub std_err: [f64; 4],
    pub rss: f64,
    pub n: usize,
}

/// Relative eigenvalue below which the column-normalized normal matrix counts as singular.
const RANK_TOL: f64 = 1e-10;

const NAMES: [&str; 4] = ["alpha", "beta", "lambda", "tau"];

/// Least squares `dst ≈ sum_c coeff_c * col_c` over masked pixels.
/// `cols[c]` is the parameter slot (0..4) and the column generator.
fn solve(
    dst: &Frame,
    mask: Option<&[bool]>,
    slots: &[usize],
    column: impl Fn(usize, usize, usize) -> f64,
) -> Result<LinearFit> {
    let (w, h) = (dst.width(), dst.height());
    if let Some(m) = mask {
        if m.len() != w * h {
            return Err(Error::Shape(format!("mask of {} for a {w}x{h} frame", m.len())));
        }
    }
    let p = slots.len();
    let mut ata = DMatrix::<f64>::zeros(p, p);
    let mut atb = DVector::<f64>::zeros(p);
    let mut btb = 0.0;
    let mut n = 0usize;
    let mut row = vec![0.0; p];
    for j in 0..h {
        for i in 0..w {
            if mask.is_some_and(|m| !m[j * w + i]) {
                continue;
            }
            let b = dst.get(i, j);
            for (c, r) in row.iter_mut().enumerate() {
                *r = column(c, i, j);
            }
            for a in 0..p {
                atb[a] += row[a] * b;
                for c in a..p {
                    ata[(a, c)] += row[a] * row[c];
                }
            }
            btb += b * b;
            n += 1;
        }
    }
    if n < p.max(4) {
        return Err(Error::Fit(format!("{n} valid pixels, need at least {}", p.max(4))));
    }
    for a in 0..p {
        for c in 0..a {
            ata[(a, c)] = ata[(c, a)];
        }
    }
    if !ata.iter().chain(atb.iter()).all(|v| v.is_finite()) {
        return Err(Error::NonFinite("fit design".into()));
    }
    // column equilibration before the rank test and solve
    let scale: Vec<f64> = (0..p).map(|a| ata[(a, a)].sqrt()).collect();
    if let Some(a) = (0..p).find(|&a| scale[a] == 0.0) {
        return Err(Error::Fit(format!("rank-deficient design: `{}` column is zero", NAMES[slots[a]])));
    }
    let normed = DMatrix::from_fn(p, p, |a, c| ata[(a, c)] / (scale[a] * scale[c]));
    let eig = SymmetricEigen::new(normed.clone());
    let (kmin, &emin) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .unwrap();
    let emax = eig.eigenvalues.iter().cloned().fold(0.0, f64::max);
    if !(emin > RANK_TOL * emax) {
        let v = eig.eigenvectors.column(kmin);
        let dir: Vec<String> = (0..p)
            .filter(|&a| v[a].abs() > 1e-3)
            .map(|a| format!("{:+.3} {}", v[a] / scale[a], NAMES[slots[a]]))
            .collect();
        return Err(Error::Fit(format!("rank-deficient design along {}", dir.join(" "))));
    }
    let rhs = DVector::from_fn(p, |a, _| atb[a] / scale[a]);
    let chol = normed
        .clone()
        .cholesky()
        .ok_or_else(|| Error::Fit("normal matrix not positive definite".into()))?;
    let y = chol.solve(&rhs);
    let inv = chol.inverse();
    let mut coeffs = [0.0; 4];
    let mut sol = vec![0.0; p];
    for a in 0..p {
        sol[a] = y[a] / scale[a];
    }
    // rss = b'b - 2 x'A'b + x'A'Ax
    let mut rss = btb;
    for a in 0..p {
        rss -= 2.0 * sol[a] * atb[a];
        for c in 0..p {
            rss += sol[a] * ata[(a, c)] * sol[c];
        }
    }
    let rss = rss.max(0.0);
    let s2 = if n > p { rss / (n - p) as f64 } else { 0.0 };
    let mut std_err = [0.0; 4];
    let mut fitted = [false; 4];
    for a in 0..p {
        coeffs[slots[a]] = sol[a];
        std_err[slots[a]] = (s2 * inv[(a, a)]).sqrt() / scale[a];
        fitted[slots[a]] = true;
    }
    if !fitted[2] {
        coeffs[2] = 1.0;
    }
    if !coeffs.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("fit solution".into()));
    }
    Ok(LinearFit { coeffs, std_err, rss, n })
}

fn check_shapes(src: &Frame, dst: &Frame) -> Result<()> {
    if src.width() != dst.width() || src.height() != dst.height() {
        return Err(Error::Shape(format!(
            "fit source {}x{} vs target {}x{}",
            src.width(),
            src.height(),
            dst.width(),
            dst.height()
        )));
    }
    Ok(())
}

/// Unconstrained least squares `alpha x + beta y + lambda src + tau ≈ dst` over `mask`.
pub fn fit_linear(src: &Frame, dst: &Frame, mask: Option<&[bool]>, mode: FitMode) -> Result<LinearFit> {
    check_shapes(src, dst)?;
    match mode {
        FitMode::Full => solve(dst, mask, &[0, 1, 2, 3], |c, i, j| {
            let (x, y) = src.world(i, j);
            [x, y, src.get(i, j), 1.0][c]
        }),
        FitMode::ScaleShift => solve(dst, mask, &[2, 3], |c, i, j| [src.get(i, j), 1.0][c]),
    }
}

/// Least-squares plane `alpha x + beta y + tau ≈ dst`; `lambda` is reported as 0.
pub fn fit_plane(dst: &Frame, mask: Option<&[bool]>) -> Result<LinearFit> {
    let mut f = solve(dst, mask, &[0, 1, 3], |c, i, j| {
        let (x, y) = dst.world(i, j);
        [x, y, 1.0][c]
    })?;
    f.coeffs[2] = 0.0;
    Ok(f)
}

/// Best GBR element mapping `src` onto `dst` in the least-squares sense.
/// A fitted `lambda <= 0` lies outside the group and is a fit error.
pub fn gbr_fit(src: &Frame, dst: &Frame, mask: Option<&[bool]>, mode: FitMode) -> Result<GbrParams> {
    let f = fit_linear(src, dst, mask, mode)?;
    let [alpha, beta, lambda, tau] = f.coeffs;
    if !(lambda > 0.0) {
        return Err(Error::Fit(format!("fitted lambda {lambda:e} is not positive")));
    }
    GbrParams::new(alpha, beta, lambda, tau)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariants::gbr_apply;
    use crate::rng::SeededRng;

    fn smooth(seed: u64, n: usize) -> Frame {
        let mut r = SeededRng::new(seed);
        let (a, b, c, d) = (r.uniform(1.0, 3.0), r.uniform(1.0, 3.0), r.uniform(0.0, 6.0), r.uniform(0.0, 6.0));
        Frame::from_world_fn(n, n, |x, y| (a * x + c).sin() * (b * y + d).cos() + 0.3 * x * y)
    }

    #[test]
    fn recovers_exact_gbr() {
        for seed in 0..20 {
            let src = smooth(seed, 24);
            let mut r = SeededRng::new(100 + seed);
            let g = GbrParams::new(r.uniform(-2.0, 2.0), r.uniform(-2.0, 2.0), r.uniform(0.2, 5.0), r.uniform(-10.0, 10.0)).unwrap();
            let dst = gbr_apply(&src, &g).unwrap();
            let fit = gbr_fit(&src, &dst, None, FitMode::Full).unwrap();
            for (a, b) in fit.as_array().iter().zip(g.as_array()) {
                assert!((a - b).abs() < 1e-9, "{fit:?} vs {g:?}");
            }
        }
    }

    #[test]
    fn self_fit_is_identity() {
        let z = smooth(3, 16);
        let g = gbr_fit(&z, &z, None, FitMode::Full).unwrap();
        for (a, b) in g.as_array().iter().zip(GbrParams::IDENTITY.as_array()) {
            assert!((a - b).abs() < 1e-12);
        }
        let g = gbr_fit(&z, &z, None, FitMode::ScaleShift).unwrap();
        assert_eq!((g.alpha, g.beta), (0.0, 0.0));
        assert!((g.lambda - 1.0).abs() < 1e-12 && g.tau.abs() < 1e-12);
    }

    #[test]
    fn constant_source_is_rank_deficient() {
        let src = Frame::filled(8, 8, 2.0);
        let dst = smooth(1, 8);
        let err = gbr_fit(&src, &dst, None, FitMode::Full).unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Fit(_)));
        assert!(msg.contains("lambda") && msg.contains("tau"), "{msg}");
    }

    #[test]
    fn plane_source_is_rank_deficient() {
        let src = Frame::from_world_fn(8, 8, |x, y| x - y);
        assert!(matches!(gbr_fit(&src, &smooth(2, 8), None, FitMode::Full), Err(Error::Fit(_))));
    }

    #[test]
    fn masked_fit_ignores_outliers() {
        let src = smooth(5, 16);
        let g = GbrParams::new(0.5, -0.25, 1.5, 2.0).unwrap();
        let mut dst = gbr_apply(&src, &g).unwrap();
        let mut mask = vec![true; 256];
        for k in [3, 40, 100] {
            dst.data_mut()[k] += 1000.0;
            mask[k] = false;
        }
        let fit = gbr_fit(&src, &dst, Some(&mask), FitMode::Full).unwrap();
        assert!((fit.lambda - 1.5).abs() < 1e-9);
    }

    #[test]
    fn too_few_pixels() {
        let z = smooth(1, 8);
        let mut mask = vec![false; 64];
        mask[..3].iter_mut().for_each(|m| *m = true);
        assert!(matches!(gbr_fit(&z, &z, Some(&mask), FitMode::Full), Err(Error::Fit(_))));
    }

    #[test]
    fn plane_fit_exact() {
        let z = Frame::from_world_fn(10, 10, |x, y| 2.0 * x - y + 0.5);
        let f = fit_plane(&z, None).unwrap();
        let want = [2.0, -1.0, 0.0, 0.5];
        for (a, b) in f.coeffs.iter().zip(want) {
            assert!((a - b).abs() < 1e-12);
        }
    }
}
