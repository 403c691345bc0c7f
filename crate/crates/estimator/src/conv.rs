//! 3x3x3 dilated convolutions with zero padding equal to the dilation, so
//! unit-stride layers keep the grid. A spatial stride of 2 halves `h` and `w`;
//! time is never strided.

use crate::volume::Volume;

pub const KERNEL_TAPS: usize = 27;

#[derive(Clone, Debug, PartialEq)]
pub struct Conv {
    pub name: String,
    pub cin: usize,
    pub cout: usize,
    pub dilation: usize,
    pub stride: usize,
    /// Start of this layer's weights in the flat parameter vector; biases follow.
    pub offset: usize,
}

/// Output positions `o` with `0 <= stride * o + off < n_in`.
fn valid_range(n_in: usize, n_out: usize, stride: usize, off: isize) -> std::ops::Range<usize> {
    let s = stride as isize;
    let lo = if off < 0 { ((-off) + s - 1) / s } else { 0 };
    let last = n_in as isize - 1 - off;
    let hi = if last < 0 { 0 } else { (last / s + 1).min(n_out as isize) };
    lo as usize..(hi.max(lo)) as usize
}

fn out_len(n: usize, stride: usize) -> usize {
    (n + stride - 1) / stride
}

struct Tap {
    t: std::ops::Range<usize>,
    y: std::ops::Range<usize>,
    x: std::ops::Range<usize>,
    dt: isize,
    dy: isize,
    dx: isize,
}

impl Conv {
    pub fn weight_len(&self) -> usize {
        self.cout * self.cin * KERNEL_TAPS
    }

    pub fn param_len(&self) -> usize {
        self.weight_len() + self.cout
    }

    pub fn fan_in(&self) -> usize {
        self.cin * KERNEL_TAPS
    }

    pub fn params<'a>(&self, p: &'a [f64]) -> (&'a [f64], &'a [f64]) {
        let w = &p[self.offset..self.offset + self.weight_len()];
        let b = &p[self.offset + self.weight_len()..self.offset + self.param_len()];
        (w, b)
    }

    pub fn output_grid(&self, x: &Volume) -> (usize, usize, usize) {
        (x.t, out_len(x.h, self.stride), out_len(x.w, self.stride))
    }

    fn taps(&self, x: &Volume, t: usize, ho: usize, wo: usize) -> Vec<Tap> {
        let d = self.dilation as isize;
        let mut taps = Vec::with_capacity(KERNEL_TAPS);
        for kt in 0..3isize {
            for ky in 0..3isize {
                for kx in 0..3isize {
                    let (dt, dy, dx) = ((kt - 1) * d, (ky - 1) * d, (kx - 1) * d);
                    taps.push(Tap {
                        t: valid_range(x.t, t, 1, dt),
                        y: valid_range(x.h, ho, self.stride, dy),
                        x: valid_range(x.w, wo, self.stride, dx),
                        dt,
                        dy,
                        dx,
                    });
                }
            }
        }
        taps
    }

    pub fn forward(&self, p: &[f64], x: &Volume) -> Volume {
        assert_eq!(x.c, self.cin, "{}: input channels", self.name);
        let (t, ho, wo) = self.output_grid(x);
        let (w, b) = self.params(p);
        let taps = self.taps(x, t, ho, wo);
        let s = self.stride;
        let mut out = Volume::zeros(self.cout, t, ho, wo);
        for o in 0..self.cout {
            let oplane = out.channel_mut(o);
            oplane.fill(b[o]);
            for i in 0..self.cin {
                let iplane = x.channel(i);
                let wk = &w[(o * self.cin + i) * KERNEL_TAPS..][..KERNEL_TAPS];
                for (tap, &wv) in taps.iter().zip(wk) {
                    for to in tap.t.clone() {
                        let ti = (to as isize + tap.dt) as usize;
                        for yo in tap.y.clone() {
                            let yi = (s as isize * yo as isize + tap.dy) as usize;
                            let orow = &mut oplane[(to * ho + yo) * wo..][..wo];
                            let irow = &iplane[(ti * x.h + yi) * x.w..][..x.w];
                            let xs = tap.x.clone();
                            if s == 1 {
                                let xi0 = (xs.start as isize + tap.dx) as usize;
                                let src = &irow[xi0..xi0 + xs.len()];
                                for (a, v) in orow[xs].iter_mut().zip(src) {
                                    *a += wv * v;
                                }
                            } else {
                                for xo in xs {
                                    orow[xo] += wv * irow[(s as isize * xo as isize + tap.dx) as usize];
                                }
                            }
                        }
                    }
                }
            }
        }
        out
    }

    /// Accumulates parameter gradients into `grad` (same layout as the parameter
    /// vector) and returns the input gradient when `need_input` is set.
    pub fn backward(&self, p: &[f64], x: &Volume, dout: &Volume, grad: &mut [f64], need_input: bool) -> Option<Volume> {
        let (t, ho, wo) = self.output_grid(x);
        debug_assert_eq!((dout.c, dout.t, dout.h, dout.w), (self.cout, t, ho, wo));
        let (w, _) = self.params(p);
        let taps = self.taps(x, t, ho, wo);
        let s = self.stride;
        let mut dx = need_input.then(|| Volume::zeros(x.c, x.t, x.h, x.w));
        let wl = self.weight_len();
        for o in 0..self.cout {
            let gplane = dout.channel(o);
            grad[self.offset + wl + o] += gplane.iter().sum::<f64>();
            for i in 0..self.cin {
                let iplane = x.channel(i);
                let base = (o * self.cin + i) * KERNEL_TAPS;
                for (k, tap) in taps.iter().enumerate() {
                    let wv = w[base + k];
                    let mut acc = 0.0;
                    for to in tap.t.clone() {
                        let ti = (to as isize + tap.dt) as usize;
                        for yo in tap.y.clone() {
                            let yi = (s as isize * yo as isize + tap.dy) as usize;
                            let grow = &gplane[(to * ho + yo) * wo..][..wo];
                            let irow_at = (ti * x.h + yi) * x.w;
                            let xs = tap.x.clone();
                            if s == 1 {
                                let xi0 = (xs.start as isize + tap.dx) as usize;
                                let n = xs.len();
                                let irow = &iplane[irow_at + xi0..][..n];
                                acc += grow[xs.clone()].iter().zip(irow).map(|(g, v)| g * v).sum::<f64>();
                                if let Some(dx) = dx.as_mut() {
                                    let drow = &mut dx.channel_mut(i)[irow_at + xi0..][..n];
                                    for (d, g) in drow.iter_mut().zip(&grow[xs]) {
                                        *d += wv * g;
                                    }
                                }
                            } else {
                                for xo in xs {
                                    let xi = (s as isize * xo as isize + tap.dx) as usize;
                                    acc += grow[xo] * iplane[irow_at + xi];
                                    if let Some(dx) = dx.as_mut() {
                                        dx.channel_mut(i)[irow_at + xi] += wv * grow[xo];
                                    }
                                }
                            }
                        }
                    }
                    grad[self.offset + base + k] += acc;
                }
            }
        }
        dx
    }
}

pub fn leaky(v: &mut Volume, slope: f64) {
    for a in v.data.iter_mut() {
        if *a <= 0.0 {
            *a *= slope;
        }
    }
}

/// Multiplies `grad` by the leaky-ReLU derivative, read off the activation's output sign.
pub fn leaky_backward(grad: &mut Volume, out: &Volume, slope: f64) {
    for (g, &y) in grad.data.iter_mut().zip(&out.data) {
        if y <= 0.0 {
            *g *= slope;
        }
    }
}
