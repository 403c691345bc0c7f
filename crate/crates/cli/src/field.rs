//! NRIF invariant-field container written by `nrdk invariants`.
//!
//! ```text
//! header   "NRIF" | u16 version = 1 | u16 kind (0 gbr, 1 trsc) | u32 clip count
//! per clip u32 W, H, T, K | f64 values[T][H][W][K]
//!          u8 mask[ceil(W*H*T / 8)]   valid bits, LSB first, same pixel order
//! ```
//!
//! Little-endian throughout. Masked pixels hold zeros.

use std::path::Path;

use nrdk_core::dataset::{pack_bits, unpack_bits};
use nrdk_core::invariants::{invariant, jet, InvariantKind};
use nrdk_core::{Error, Result, VideoTensor};

pub const MAGIC: &[u8; 4] = b"NRIF";
pub const VERSION: u16 = 1;

/// Invariant fields of every frame of one depth video.
#[derive(Clone, Debug, PartialEq)]
pub struct FieldVideo {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub channels: usize,
    pub values: Vec<f64>,
    pub mask: Vec<bool>,
}

pub fn field_video(depth: &VideoTensor, kind: InvariantKind, eps: f64) -> Result<FieldVideo> {
    let (w, h, t, _) = depth.dims();
    let k = kind.channels();
    let mut values = Vec::with_capacity(w * h * t * k);
    let mut mask = Vec::with_capacity(w * h * t);
    for f in depth.frames_iter() {
        let field = invariant(&jet(&f)?, eps, kind);
        values.extend_from_slice(&field.values);
        mask.extend_from_slice(&field.mask);
    }
    Ok(FieldVideo {
        width: w,
        height: h,
        frames: t,
        channels: k,
        values,
        mask,
    })
}

fn kind_code(kind: InvariantKind) -> u16 {
    match kind {
        InvariantKind::Gbr => 0,
        InvariantKind::TrSc => 1,
    }
}

pub fn encode(kind: InvariantKind, clips: &[FieldVideo]) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&kind_code(kind).to_le_bytes());
    out.extend_from_slice(&(clips.len() as u32).to_le_bytes());
    for c in clips {
        for d in [c.width, c.height, c.frames, c.channels] {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
        for v in &c.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&pack_bits(&c.mask));
    }
    out
}

pub fn decode(bytes: &[u8], path: &Path) -> Result<(InvariantKind, Vec<FieldVideo>)> {
    let corrupt = |detail: String| Error::Corrupt {
        path: path.to_path_buf(),
        detail,
    };
    let mut pos = 0usize;
    let mut take = |n: usize| -> Result<&[u8]> {
        if bytes.len() - pos < n {
            return Err(corrupt(format!("truncated at byte {pos}")));
        }
        pos += n;
        Ok(&bytes[pos - n..pos])
    };
    if take(4)? != MAGIC {
        return Err(corrupt("bad magic".into()));
    }
    let u16_at = |b: &[u8]| u16::from_le_bytes([b[0], b[1]]);
    let u32_at = |b: &[u8]| u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize;
    let version = u16_at(take(2)?);
    if version != VERSION {
        return Err(corrupt(format!("unsupported version {version}")));
    }
    let kind = match u16_at(take(2)?) {
        0 => InvariantKind::Gbr,
        1 => InvariantKind::TrSc,
        k => return Err(corrupt(format!("unknown kind {k}"))),
    };
    let count = u32_at(take(4)?);
    let mut clips = Vec::with_capacity(count.min(1024));
    for _ in 0..count {
        let (width, height, frames, channels) = (u32_at(take(4)?), u32_at(take(4)?), u32_at(take(4)?), u32_at(take(4)?));
        let n = width * height * frames;
        let values = take(n * channels * 8)?
            .chunks_exact(8)
            .map(|b| f64::from_le_bytes(b.try_into().unwrap()))
            .collect();
        let mask = unpack_bits(take(n.div_ceil(8))?, n);
        clips.push(FieldVideo {
            width,
            height,
            frames,
            channels,
            values,
            mask,
        });
    }
    if pos != bytes.len() {
        return Err(corrupt(format!("{} trailing bytes", bytes.len() - pos)));
    }
    Ok((kind, clips))
}

pub fn save(path: &Path, kind: InvariantKind, clips: &[FieldVideo]) -> Result<()> {
    std::fs::write(path, encode(kind, clips)).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<(InvariantKind, Vec<FieldVideo>)> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip() {
        let depth = VideoTensor::from_fn(9, 7, 2, 1, |i, j, t, _| ((i * i + 2 * j * j) as f64) * 0.01 + t as f64 * (i as f64).sin());
        for kind in [InvariantKind::Gbr, InvariantKind::TrSc] {
            let f = field_video(&depth, kind, 1e-6).unwrap();
            assert_eq!(f.values.len(), 9 * 7 * 2 * kind.channels());
            let bytes = encode(kind, &[f.clone(), f.clone()]);
            let (k, back) = decode(&bytes, Path::new("f.bin")).unwrap();
            assert_eq!(k, kind);
            assert_eq!(back, vec![f.clone(), f]);
            assert!(decode(&bytes[..bytes.len() - 1], Path::new("f.bin")).is_err());
        }
    }
}
