use nrdk_core::{Error, Result, VideoTensor};

/// Dense activations stored channel-major: `data[((c * t + k) * h + y) * w + x]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Volume {
    pub c: usize,
    pub t: usize,
    pub h: usize,
    pub w: usize,
    pub data: Vec<f64>,
}

impl Volume {
    pub fn zeros(c: usize, t: usize, h: usize, w: usize) -> Self {
        Self {
            c,
            t,
            h,
            w,
            data: vec![0.0; c * t * h * w],
        }
    }

    pub fn plane_len(&self) -> usize {
        self.t * self.h * self.w
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.plane_len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_mut(&mut self, c: usize) -> &mut [f64] {
        let n = self.plane_len();
        &mut self.data[c * n..(c + 1) * n]
    }

    pub fn same_grid(&self, other: &Volume) -> bool {
        (self.t, self.h, self.w) == (other.t, other.h, other.w)
    }

    /// Stacks channels of volumes on the same grid.
    pub fn concat(parts: &[&Volume]) -> Result<Volume> {
        let first = parts.first().ok_or_else(|| Error::Shape("concat of nothing".into()))?;
        if let Some(p) = parts.iter().find(|p| !p.same_grid(first)) {
            return Err(Error::Shape(format!(
                "concat grids differ: {}x{}x{} vs {}x{}x{}",
                first.t, first.h, first.w, p.t, p.h, p.w
            )));
        }
        let mut data = Vec::with_capacity(parts.iter().map(|p| p.data.len()).sum());
        for p in parts {
            data.extend_from_slice(&p.data);
        }
        Ok(Volume {
            c: parts.iter().map(|p| p.c).sum(),
            t: first.t,
            h: first.h,
            w: first.w,
            data,
        })
    }

    /// Splits off the first `c` channels.
    pub fn split_at(&self, c: usize) -> (Volume, Volume) {
        let n = c * self.plane_len();
        let part = |c, data: &[f64]| Volume {
            c,
            t: self.t,
            h: self.h,
            w: self.w,
            data: data.to_vec(),
        };
        (part(c, &self.data[..n]), part(self.c - c, &self.data[n..]))
    }

    pub fn add_assign(&mut self, other: &Volume) {
        debug_assert_eq!(self.data.len(), other.data.len());
        self.data.iter_mut().zip(&other.data).for_each(|(a, b)| *a += b);
    }

    /// One-channel volume from a one-channel video.
    pub fn from_video(v: &VideoTensor) -> Result<Volume> {
        let (w, h, t, c) = v.dims();
        if c != 1 {
            return Err(Error::Shape(format!("network input must have 1 channel, got {c}")));
        }
        Ok(Volume {
            c: 1,
            t,
            h,
            w,
            data: v.data().to_vec(),
        })
    }

    pub fn into_video(self) -> Result<VideoTensor> {
        if self.c != 1 {
            return Err(Error::Shape(format!("expected 1 channel, got {}", self.c)));
        }
        VideoTensor::from_vec(self.w, self.h, self.t, 1, self.data)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_split_roundtrip() {
        let a = Volume {
            c: 2,
            t: 1,
            h: 2,
            w: 2,
            data: (0..8).map(f64::from).collect(),
        };
        let b = Volume {
            c: 1,
            t: 1,
            h: 2,
            w: 2,
            data: vec![9.0; 4],
        };
        let ab = Volume::concat(&[&a, &b]).unwrap();
        assert_eq!(ab.c, 3);
        assert_eq!(ab.channel(2), &[9.0; 4]);
        let (x, y) = ab.split_at(2);
        assert_eq!((x, y), (a, b));
    }

    #[test]
    fn video_layout_matches() {
        let v = VideoTensor::from_fn(3, 2, 2, 1, |x, y, t, _| (100 * t + 10 * y + x) as f64);
        let vol = Volume::from_video(&v).unwrap();
        assert_eq!(vol.data[(1 * 2 + 1) * 3 + 2], 112.0);
        assert_eq!(vol.into_video().unwrap(), v);
    }
}
