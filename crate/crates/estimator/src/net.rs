//! Encoder-decoder with atrous context modules.
//!
//! ```text
//! input 1 x T x H x W
//!   enc1   context module, width w1, full resolution
//!   down   strided conv, w1 -> w2, H/2 x W/2
//!   enc2   context module, width w2
//!   enc3.. context modules, width w3..
//!   dec_k  context module on concat(deeper, enc_k), for k = n-1 .. 2
//!   head   linear conv -> 1 channel
//! ```
//! A context module runs one dilated conv per rate in parallel, concatenates
//! their leaky-ReLU outputs and fuses them with a further conv.

use nrdk_core::stitcher::DepthPredictor;
use nrdk_core::{Error, Result, SeededRng, VideoTensor};
use serde::{Deserialize, Serialize};

use crate::config::NetConfig;
use crate::conv::{leaky, leaky_backward, Conv};
use crate::volume::Volume;

pub const INPUT_SIDE: usize = 64;
pub const OUTPUT_SIDE: usize = 32;
pub const CLIP_FRAMES: usize = 16;

const INIT_STREAM: u64 = 0x1417;

/// One named tensor inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub offset: usize,
}

impl ParamEntry {
    pub fn len(&self) -> usize {
        self.shape.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq)]
struct Context {
    branches: Vec<Conv>,
    fuse: Conv,
}

#[derive(Clone, Debug)]
struct ContextCache {
    input: Volume,
    cat: Volume,
    out: Volume,
}

/// Activations recorded by [`Network::forward_cached`].
#[derive(Clone, Debug)]
pub struct ForwardCache {
    enc: Vec<ContextCache>,
    down_in: Volume,
    down_out: Volume,
    dec: Vec<ContextCache>,
    head_in: Volume,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Network {
    config: NetConfig,
    enc: Vec<Context>,
    down: Conv,
    /// Deepest first.
    dec: Vec<Context>,
    head: Conv,
    registry: Vec<ParamEntry>,
    convs: Vec<Conv>,
    pub params: Vec<f64>,
}

struct Builder {
    offset: usize,
    convs: Vec<Conv>,
}

impl Builder {
    fn conv(&mut self, name: String, cin: usize, cout: usize, dilation: usize, stride: usize) -> Conv {
        let c = Conv {
            name,
            cin,
            cout,
            dilation,
            stride,
            offset: self.offset,
        };
        self.offset += c.param_len();
        self.convs.push(c.clone());
        c
    }

    fn context(&mut self, name: &str, cin: usize, width: usize, rates: &[usize]) -> Context {
        let branches = rates
            .iter()
            .map(|&r| self.conv(format!("{name}.r{r}"), cin, width, r, 1))
            .collect();
        let fuse = self.conv(format!("{name}.fuse"), rates.len() * width, width, 1, 1);
        Context { branches, fuse }
    }
}

fn check_finite(v: &Volume, layer: &str, what: &str) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("layer {layer}: non-finite {what}")))
    }
}

impl Network {
    /// Builds the layer graph with zero parameters.
    pub fn zeroed(config: &NetConfig) -> Result<Self> {
        config.validate()?;
        let w = &config.widths;
        let n = w.len();
        let mut b = Builder {
            offset: 0,
            convs: Vec::new(),
        };
        let mut enc = vec![b.context("enc1", 1, w[0], &config.dilations[0])];
        let down = b.conv("down".into(), w[0], w[1], 1, 2);
        for s in 1..n {
            let cin = if s == 1 { w[1] } else { w[s - 1] };
            enc.push(b.context(&format!("enc{}", s + 1), cin, w[s], &config.dilations[s]));
        }
        let mut dec = Vec::new();
        for k in (1..n - 1).rev() {
            dec.push(b.context(&format!("dec{}", k + 1), w[k + 1] + w[k], w[k], &config.dilations[k]));
        }
        let head = b.conv("head".into(), w[1], 1, 1, 1);
        let mut registry = Vec::new();
        for c in &b.convs {
            registry.push(ParamEntry {
                name: format!("{}.weight", c.name),
                shape: vec![c.cout, c.cin, 3, 3, 3],
                offset: c.offset,
            });
            registry.push(ParamEntry {
                name: format!("{}.bias", c.name),
                shape: vec![c.cout],
                offset: c.offset + c.weight_len(),
            });
        }
        Ok(Self {
            config: config.clone(),
            enc,
            down,
            dec,
            head,
            registry,
            params: vec![0.0; b.offset],
            convs: b.convs,
        })
    }

    /// Fan-in scaled uniform weights, zero biases.
    pub fn init(config: &NetConfig, seed: u64) -> Result<Self> {
        let mut net = Self::zeroed(config)?;
        let mut rng = SeededRng::new(seed).child(INIT_STREAM);
        let gain = 2.0 / (1.0 + config.leaky_slope * config.leaky_slope);
        for c in net.convs.clone() {
            let g = if c.name == "head" { 1.0 } else { gain };
            let bound = config.init_scale * (3.0 * g / c.fan_in() as f64).sqrt();
            for v in &mut net.params[c.offset..c.offset + c.weight_len()] {
                *v = rng.uniform(-bound, bound);
            }
        }
        Ok(net)
    }

    pub fn config(&self) -> &NetConfig {
        &self.config
    }

    pub fn registry(&self) -> &[ParamEntry] {
        &self.registry
    }

    pub fn param_count(&self) -> usize {
        self.params.len()
    }

    pub fn layers(&self) -> &[Conv] {
        &self.convs
    }

    pub fn layer(&self, name: &str) -> Option<&Conv> {
        self.convs.iter().find(|c| c.name == name)
    }

    pub fn is_frozen(&self, layer: &str) -> bool {
        self.config
            .frozen
            .iter()
            .any(|f| layer == f || layer.strip_prefix(f.as_str()).is_some_and(|r| r.starts_with('.')))
    }

    fn standardize(&self, x: &Volume) -> Volume {
        if !self.config.standardize_input {
            return x.clone();
        }
        let n = x.data.len() as f64;
        let mean = x.data.iter().sum::<f64>() / n;
        let var = x.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
        let scale = 1.0 / var.sqrt().max(1e-6);
        Volume {
            data: x.data.iter().map(|v| (v - mean) * scale).collect(),
            ..x.clone()
        }
    }

    fn check_input(&self, x: &Volume) -> Result<()> {
        if x.c != 1 || x.h % 2 != 0 || x.w % 2 != 0 || x.t == 0 || x.h == 0 || x.w == 0 {
            return Err(Error::Shape(format!(
                "network input must be 1 channel with even height and width, got {}x{}x{}x{}",
                x.c, x.t, x.h, x.w
            )));
        }
        if !x.is_finite() {
            return Err(Error::NonFinite("network input".into()));
        }
        Ok(())
    }

    fn context_forward(&self, m: &Context, x: Volume) -> Result<ContextCache> {
        let slope = self.config.leaky_slope;
        let mut outs = Vec::with_capacity(m.branches.len());
        for b in &m.branches {
            let mut y = b.forward(&self.params, &x);
            leaky(&mut y, slope);
            check_finite(&y, &b.name, "activation")?;
            outs.push(y);
        }
        let cat = Volume::concat(&outs.iter().collect::<Vec<_>>())?;
        let mut out = m.fuse.forward(&self.params, &cat);
        leaky(&mut out, slope);
        check_finite(&out, &m.fuse.name, "activation")?;
        Ok(ContextCache { input: x, cat, out })
    }

    fn context_backward(&self, m: &Context, cache: &ContextCache, mut dy: Volume, grad: &mut [f64], need_input: bool) -> Result<Option<Volume>> {
        let slope = self.config.leaky_slope;
        leaky_backward(&mut dy, &cache.out, slope);
        let dcat = m.fuse.backward(&self.params, &cache.cat, &dy, grad, true).expect("input gradient requested");
        check_finite(&dcat, &m.fuse.name, "gradient")?;
        let width = m.fuse.cout;
        let mut dx: Option<Volume> = None;
        for (k, b) in m.branches.iter().enumerate() {
            let n = width * dcat.plane_len();
            let slice = |v: &Volume| Volume {
                c: width,
                t: v.t,
                h: v.h,
                w: v.w,
                data: v.data[k * n..(k + 1) * n].to_vec(),
            };
            let (mut db, bout) = (slice(&dcat), slice(&cache.cat));
            leaky_backward(&mut db, &bout, slope);
            if let Some(g) = b.backward(&self.params, &cache.input, &db, grad, need_input) {
                check_finite(&g, &b.name, "gradient")?;
                match dx.as_mut() {
                    Some(acc) => acc.add_assign(&g),
                    None => dx = Some(g),
                }
            }
        }
        Ok(dx)
    }

    /// Output on the half-resolution grid, one channel.
    pub fn forward(&self, x: &Volume) -> Result<Volume> {
        Ok(self.forward_cached(x)?.0)
    }

    pub fn forward_cached(&self, x: &Volume) -> Result<(Volume, ForwardCache)> {
        self.check_input(x)?;
        let mut enc_caches = Vec::with_capacity(self.enc.len());
        enc_caches.push(self.context_forward(&self.enc[0], self.standardize(x))?);
        let down_in = enc_caches[0].out.clone();
        let mut down_out = self.down.forward(&self.params, &down_in);
        leaky(&mut down_out, self.config.leaky_slope);
        check_finite(&down_out, &self.down.name, "activation")?;
        let mut prev = down_out.clone();
        for m in &self.enc[1..] {
            let c = self.context_forward(m, prev)?;
            prev = c.out.clone();
            enc_caches.push(c);
        }
        let n = self.enc.len();
        let mut deep = prev;
        let mut dec_caches = Vec::with_capacity(self.dec.len());
        for (m, k) in self.dec.iter().zip((1..n - 1).rev()) {
            let cat = Volume::concat(&[&deep, &enc_caches[k].out])?;
            let c = self.context_forward(m, cat)?;
            deep = c.out.clone();
            dec_caches.push(c);
        }
        let out = self.head.forward(&self.params, &deep);
        check_finite(&out, &self.head.name, "output")?;
        Ok((
            out,
            ForwardCache {
                enc: enc_caches,
                down_in,
                down_out,
                dec: dec_caches,
                head_in: deep,
            },
        ))
    }

    /// Reverse-mode gradient of `<dout, forward(x)>` with respect to the parameters.
    /// Parameters of frozen layers get exactly zero.
    pub fn backward(&self, cache: &ForwardCache, dout: &Volume) -> Result<Vec<f64>> {
        let mut grad = vec![0.0; self.params.len()];
        let n = self.enc.len();
        let mut d_deep = self
            .head
            .backward(&self.params, &cache.head_in, dout, &mut grad, true)
            .expect("input gradient requested");
        check_finite(&d_deep, &self.head.name, "gradient")?;
        let mut d_enc: Vec<Option<Volume>> = vec![None; n];
        for ((m, c), k) in self.dec.iter().zip(&cache.dec).zip((1..n - 1).rev()).rev() {
            let dcat = self.context_backward(m, c, d_deep, &mut grad, true)?.expect("input gradient requested");
            let deeper = dcat.c - self.config.widths[k];
            let (dd, de) = dcat.split_at(deeper);
            d_enc[k] = Some(de);
            d_deep = dd;
        }
        let mut d = d_deep;
        for s in (1..n).rev() {
            if let Some(extra) = d_enc[s].take() {
                d.add_assign(&extra);
            }
            d = self
                .context_backward(&self.enc[s], &cache.enc[s], d, &mut grad, true)?
                .expect("input gradient requested");
        }
        leaky_backward(&mut d, &cache.down_out, self.config.leaky_slope);
        let d0 = self
            .down
            .backward(&self.params, &cache.down_in, &d, &mut grad, true)
            .expect("input gradient requested");
        check_finite(&d0, &self.down.name, "gradient")?;
        self.context_backward(&self.enc[0], &cache.enc[0], d0, &mut grad, false)?;
        for c in &self.convs {
            if self.is_frozen(&c.name) {
                grad[c.offset..c.offset + c.param_len()].fill(0.0);
            }
        }
        if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
            let layer = self.convs.iter().find(|c| k >= c.offset && k < c.offset + c.param_len());
            return Err(Error::NonFinite(format!(
                "gradient of parameter {k} (layer {})",
                layer.map_or("?", |c| c.name.as_str())
            )));
        }
        Ok(grad)
    }

    /// One 64x64x16 grayscale clip to a 32x32x16 depth clip.
    pub fn predict_clip(&self, clip: &VideoTensor) -> Result<VideoTensor> {
        let dims = clip.dims();
        if dims != (INPUT_SIDE, INPUT_SIDE, CLIP_FRAMES, 1) {
            return Err(Error::Shape(format!(
                "predict_clip expects {INPUT_SIDE}x{INPUT_SIDE}x{CLIP_FRAMES}x1, got {dims:?}"
            )));
        }
        self.forward(&Volume::from_video(clip)?)?.into_video()
    }
}

impl DepthPredictor for Network {
    fn predict(&self, clip: &VideoTensor) -> Result<VideoTensor> {
        self.predict_clip(clip)
    }
}
