//! Orthonormal 2D discrete Fourier transforms on power-of-two grids.
//!
//! Both directions scale by `1 / sqrt(W * H)`, so `ifft2(fft2(x)) == x` and
//! Parseval holds without extra factors. Index `(0, 0)` is DC; index `k`
//! along an axis of length `n` is the signed frequency [`signed_frequency`].

use rustfft::num_complex::Complex64;
use rustfft::{FftDirection, FftPlanner};

use crate::error::{Error, Result};

/// Signed frequency of bin `k` on an axis of length `n`: `k` for `k < n/2`, else `k - n`.
/// Covers `[-n/2, n/2)`.
#[inline]
pub fn signed_frequency(k: usize, n: usize) -> f64 {
    if k < n / 2 {
        k as f64
    } else {
        k as f64 - n as f64
    }
}

/// Complex `W x H` grid, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexGrid {
    width: usize,
    height: usize,
    re: Vec<f64>,
    im: Vec<f64>,
}

impl ComplexGrid {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            re: vec![0.0; width * height],
            im: vec![0.0; width * height],
        }
    }

    pub fn new(width: usize, height: usize, re: Vec<f64>, im: Vec<f64>) -> Result<Self> {
        if re.len() != width * height || im.len() != width * height {
            return Err(Error::Shape(format!(
                "complex grid {width}x{height} needs {} values per part, got re={} im={}",
                width * height,
                re.len(),
                im.len()
            )));
        }
        Ok(Self { width, height, re, im })
    }

    pub fn from_real(width: usize, height: usize, re: Vec<f64>) -> Result<Self> {
        let n = re.len();
        Self::new(width, height, re, vec![0.0; n])
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn re(&self) -> &[f64] {
        &self.re
    }

    pub fn im(&self) -> &[f64] {
        &self.im
    }

    pub fn re_mut(&mut self) -> &mut [f64] {
        &mut self.re
    }

    pub fn im_mut(&mut self) -> &mut [f64] {
        &mut self.im
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> (f64, f64) {
        let i = y * self.width + x;
        (self.re[i], self.im[i])
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, re: f64, im: f64) {
        let i = y * self.width + x;
        self.re[i] = re;
        self.im[i] = im;
    }

    /// Sum of squared magnitudes.
    pub fn energy(&self) -> f64 {
        self.re
            .iter()
            .zip(&self.im)
            .map(|(r, i)| r * r + i * i)
            .sum()
    }

    pub fn into_real(self) -> Vec<f64> {
        self.re
    }
}

fn check_pow2(g: &ComplexGrid) -> Result<()> {
    let ok = |n: usize| n > 0 && n.is_power_of_two();
    if !ok(g.width) || !ok(g.height) {
        return Err(Error::Size(format!(
            "FFT needs power-of-two dimensions, got {}x{}",
            g.width, g.height
        )));
    }
    Ok(())
}

fn transform(grid: &ComplexGrid, direction: FftDirection) -> Result<ComplexGrid> {
    check_pow2(grid)?;
    let (w, h) = (grid.width, grid.height);
    let mut buf: Vec<Complex64> = grid
        .re
        .iter()
        .zip(&grid.im)
        .map(|(&r, &i)| Complex64::new(r, i))
        .collect();

    let mut planner = FftPlanner::<f64>::new();
    let row_fft = planner.plan_fft(w, direction);
    for row in buf.chunks_exact_mut(w) {
        row_fft.process(row);
    }

    let col_fft = planner.plan_fft(h, direction);
    let mut col = vec![Complex64::new(0.0, 0.0); h];
    for x in 0..w {
        for y in 0..h {
            col[y] = buf[y * w + x];
        }
        col_fft.process(&mut col);
        for y in 0..h {
            buf[y * w + x] = col[y];
        }
    }

    let scale = 1.0 / ((w * h) as f64).sqrt();
    let (re, im) = buf.iter().map(|c| (c.re * scale, c.im * scale)).unzip();
    Ok(ComplexGrid {
        width: w,
        height: h,
        re,
        im,
    })
}

/// Forward orthonormal 2D DFT.
pub fn fft2(grid: &ComplexGrid) -> Result<ComplexGrid> {
    transform(grid, FftDirection::Forward)
}

/// Inverse orthonormal 2D DFT.
pub fn ifft2(spectrum: &ComplexGrid) -> Result<ComplexGrid> {
    transform(spectrum, FftDirection::Inverse)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;

    fn random_grid(w: usize, h: usize, rng: &mut SeededRng) -> ComplexGrid {
        let re = (0..w * h).map(|_| rng.uniform(-1.0, 1.0)).collect();
        let im = (0..w * h).map(|_| rng.uniform(-1.0, 1.0)).collect();
        ComplexGrid::new(w, h, re, im).unwrap()
    }

    fn max_diff(a: &ComplexGrid, b: &ComplexGrid) -> f64 {
        a.re.iter()
            .zip(&b.re)
            .chain(a.im.iter().zip(&b.im))
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn dc_delta_inverts_to_ones() {
        let (w, h) = (16, 8);
        let mut s = ComplexGrid::zeros(w, h);
        s.set(0, 0, ((w * h) as f64).sqrt(), 0.0);
        let g = ifft2(&s).unwrap();
        for (r, i) in g.re().iter().zip(g.im()) {
            assert!((r - 1.0).abs() < 1e-12 && i.abs() < 1e-12);
        }
    }

    #[test]
    fn ones_forward_to_dc_delta() {
        let g = ComplexGrid::from_real(8, 8, vec![1.0; 64]).unwrap();
        let s = fft2(&g).unwrap();
        assert!((s.get(0, 0).0 - 8.0).abs() < 1e-12);
        let rest: f64 = s.re()[1..].iter().chain(s.im()).map(|v| v.abs()).sum();
        assert!(rest < 1e-12);
    }

    #[test]
    fn roundtrip_all_pow2_sizes() {
        let mut rng = SeededRng::new(11);
        for &(w, h) in &[(1, 1), (2, 4), (8, 8), (64, 64), (32, 128), (256, 256)] {
            let x = random_grid(w, h, &mut rng);
            let back = fft2(&ifft2(&x).unwrap()).unwrap();
            let norm = x.energy().sqrt() / ((w * h) as f64).sqrt();
            assert!(max_diff(&x, &back) <= 1e-12 * norm.max(1.0), "{w}x{h}");
        }
    }

    #[test]
    fn linearity_and_parseval() {
        let mut rng = SeededRng::new(3);
        let x = random_grid(32, 16, &mut rng);
        let y = random_grid(32, 16, &mut rng);
        let (a, b) = (1.7, -0.4);
        let combo = ComplexGrid::new(
            32,
            16,
            x.re.iter().zip(&y.re).map(|(p, q)| a * p + b * q).collect(),
            x.im.iter().zip(&y.im).map(|(p, q)| a * p + b * q).collect(),
        )
        .unwrap();
        let (fx, fy, fc) = (fft2(&x).unwrap(), fft2(&y).unwrap(), fft2(&combo).unwrap());
        let expect = ComplexGrid::new(
            32,
            16,
            fx.re.iter().zip(&fy.re).map(|(p, q)| a * p + b * q).collect(),
            fx.im.iter().zip(&fy.im).map(|(p, q)| a * p + b * q).collect(),
        )
        .unwrap();
        assert!(max_diff(&fc, &expect) < 1e-12);
        assert!((x.energy() - fx.energy()).abs() <= 1e-10 * x.energy());
    }

    #[test]
    fn hermitian_spectrum_gives_real_field() {
        let n = 16;
        let mut rng = SeededRng::new(5);
        let mut s = ComplexGrid::zeros(n, n);
        for y in 0..n {
            for x in 0..n {
                let (mx, my) = ((n - x) % n, (n - y) % n);
                if (y, x) > (my, mx) {
                    continue;
                }
                let re = rng.uniform(-1.0, 1.0);
                let im = if (x, y) == (mx, my) { 0.0 } else { rng.uniform(-1.0, 1.0) };
                s.set(x, y, re, im);
                s.set(mx, my, re, -im);
            }
        }
        let g = ifft2(&s).unwrap();
        assert!(g.im().iter().all(|v| v.abs() <= 1e-12));
    }

    #[test]
    fn rejects_non_pow2() {
        assert!(matches!(fft2(&ComplexGrid::zeros(12, 8)), Err(Error::Size(_))));
        assert!(ifft2(&ComplexGrid::zeros(8, 0)).is_err());
    }
}
