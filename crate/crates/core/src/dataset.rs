//! NRSD clip container.
//!
//! ```text
//! header   "NRSD" | u16 version = 1 | u16 flags | u32 clip count
//! per clip u32 W, H, T, C | f32 render[W*H*T*C]
//!          u32 W, H, T    | f32 depth[W*H*T]
//!          u8 mask[ceil(W*H*T / 8)]        hit bits, LSB first, depth order
//!          64-byte digest: u64 seed | u64 stream | sha256 param hash | 16 zero bytes
//! ```
//!
//! All integers and floats are little-endian. Tensor data follows the
//! [`VideoTensor`] layout (frame, row, column, channel). A JSON manifest with
//! the full generation parameters sits next to the container.

use std::fs::File;
use std::io::{BufReader, BufWriter, ErrorKind, Read, Seek, SeekFrom, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::GeneratorConfig;
use crate::error::{Error, Result};
use crate::render::{sample_clip, ClipDigest, ClipMeta, ClipSample, TextureSource};
use crate::tensor::VideoTensor;

pub const MAGIC: [u8; 4] = *b"NRSD";
pub const VERSION: u16 = 1;
/// Header flag: render videos hold one luma channel.
pub const FLAG_GRAYSCALE: u16 = 1;
pub const DIGEST_BYTES: usize = 64;
const HEADER_BYTES: u64 = 12;

/// File name of the container inside a dataset directory.
pub const CLIPS_FILE: &str = "clips.nrsd";

/// Container path for `path`: `path/clips.nrsd` for a directory, else `path` itself.
pub fn resolve_container(path: &Path) -> PathBuf {
    if path.is_dir() {
        path.join(CLIPS_FILE)
    } else {
        path.to_path_buf()
    }
}

/// `clips.nrsd` -> `clips.manifest.json`.
pub fn manifest_path(container: &Path) -> PathBuf {
    container.with_extension("manifest.json")
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub index: usize,
    pub seed: u64,
    pub stream: u64,
    pub param_hash: String,
    pub render_dims: [usize; 4],
    pub depth_dims: [usize; 3],
    pub hit_fraction: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub meta: Option<ClipMeta>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub version: u16,
    pub count: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub textures: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorConfig>,
    /// Free-form provenance for derived files (predictions, reconstructions).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<serde_json::Value>,
    pub clips: Vec<ManifestEntry>,
}

impl Manifest {
    pub fn new() -> Self {
        Self {
            format: "NRSD".into(),
            version: VERSION,
            count: 0,
            seed: None,
            textures: None,
            generator: None,
            source: None,
            clips: Vec::new(),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    fn push(&mut self, clip: &ClipSample) {
        let (w, h, t, c) = clip.render.dims();
        let (dw, dh, dt, _) = clip.depth.dims();
        self.clips.push(ManifestEntry {
            index: self.clips.len(),
            seed: clip.digest.seed,
            stream: clip.digest.stream,
            param_hash: clip.digest.hash_hex(),
            render_dims: [w, h, t, c],
            depth_dims: [dw, dh, dt],
            hit_fraction: clip.hit_fraction(),
            meta: clip.meta.clone(),
        });
        self.count = self.clips.len();
    }
}

impl Default for Manifest {
    fn default() -> Self {
        Self::new()
    }
}

/// Streaming writer; the clip count in the header is patched on [`NrsdWriter::finish`].
pub struct NrsdWriter {
    path: PathBuf,
    out: BufWriter<File>,
    count: u32,
}

impl NrsdWriter {
    pub fn create(path: &Path, flags: u16) -> Result<Self> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = Self {
            path: path.to_path_buf(),
            out: BufWriter::new(file),
            count: 0,
        };
        let mut header = Vec::with_capacity(HEADER_BYTES as usize);
        header.extend_from_slice(&MAGIC);
        header.extend_from_slice(&VERSION.to_le_bytes());
        header.extend_from_slice(&flags.to_le_bytes());
        header.extend_from_slice(&0u32.to_le_bytes());
        w.put(&header)?;
        Ok(w)
    }

    fn put(&mut self, bytes: &[u8]) -> Result<()> {
        self.out.write_all(bytes).map_err(|e| Error::io(&self.path, e))
    }

    /// Values are stored as f32; data that is not f32-representable is rounded.
    pub fn write_clip(&mut self, clip: &ClipSample) -> Result<()> {
        let (w, h, t, c) = clip.render.dims();
        let (dw, dh, dt, _) = clip.depth.dims();
        let mut buf = Vec::with_capacity(16 + 4 * (w * h * t * c + dw * dh * dt) + DIGEST_BYTES);
        for d in [w, h, t, c] {
            buf.extend_from_slice(&u32_dim(d)?.to_le_bytes());
        }
        for &v in clip.render.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        for d in [dw, dh, dt] {
            buf.extend_from_slice(&u32_dim(d)?.to_le_bytes());
        }
        for &v in clip.depth.data() {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        buf.extend_from_slice(&pack_bits(&clip.mask));
        buf.extend_from_slice(&encode_digest(&clip.digest));
        self.put(&buf)?;
        self.count = self
            .count
            .checked_add(1)
            .ok_or_else(|| Error::Size("more than u32::MAX clips".into()))?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<u32> {
        let count = self.count;
        let path = self.path.clone();
        self.out.flush().map_err(|e| Error::io(&path, e))?;
        let mut file = self.out.into_inner().map_err(|e| Error::io(&path, e.into_error()))?;
        file.seek(SeekFrom::Start(8)).map_err(|e| Error::io(&path, e))?;
        file.write_all(&count.to_le_bytes()).map_err(|e| Error::io(&path, e))?;
        file.sync_all().map_err(|e| Error::io(&path, e))?;
        Ok(count)
    }
}

fn u32_dim(d: usize) -> Result<u32> {
    u32::try_from(d).map_err(|_| Error::Size(format!("dimension {d} exceeds u32")))
}

pub fn pack_bits(bits: &[bool]) -> Vec<u8> {
    let mut out = vec![0u8; bits.len().div_ceil(8)];
    for (i, &b) in bits.iter().enumerate() {
        if b {
            out[i / 8] |= 1 << (i % 8);
        }
    }
    out
}

pub fn unpack_bits(bytes: &[u8], n: usize) -> Vec<bool> {
    (0..n).map(|i| bytes[i / 8] >> (i % 8) & 1 == 1).collect()
}

fn encode_digest(d: &ClipDigest) -> [u8; DIGEST_BYTES] {
    let mut out = [0u8; DIGEST_BYTES];
    out[0..8].copy_from_slice(&d.seed.to_le_bytes());
    out[8..16].copy_from_slice(&d.stream.to_le_bytes());
    out[16..48].copy_from_slice(&d.param_hash);
    out
}

fn decode_digest(b: &[u8]) -> ClipDigest {
    ClipDigest {
        seed: u64::from_le_bytes(b[0..8].try_into().unwrap()),
        stream: u64::from_le_bytes(b[8..16].try_into().unwrap()),
        param_hash: b[16..48].try_into().unwrap(),
    }
}

/// Streaming reader over the clips of one container.
pub struct NrsdReader {
    path: PathBuf,
    input: BufReader<File>,
    flags: u16,
    count: u32,
    next: u32,
    remaining: u64,
}

impl NrsdReader {
    pub fn open(path: &Path) -> Result<Self> {
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        let len = file.metadata().map_err(|e| Error::io(path, e))?.len();
        let mut r = Self {
            path: path.to_path_buf(),
            input: BufReader::new(file),
            flags: 0,
            count: 0,
            next: 0,
            remaining: len,
        };
        let mut header = [0u8; HEADER_BYTES as usize];
        r.take_bytes(&mut header, "header")?;
        if header[0..4] != MAGIC {
            return Err(r.corrupt(format!("bad magic {:?}", &header[0..4])));
        }
        let version = u16::from_le_bytes([header[4], header[5]]);
        if version != VERSION {
            return Err(r.corrupt(format!("unsupported version {version}")));
        }
        r.flags = u16::from_le_bytes([header[6], header[7]]);
        r.count = u32::from_le_bytes(header[8..12].try_into().unwrap());
        Ok(r)
    }

    pub fn flags(&self) -> u16 {
        self.flags
    }

    pub fn count(&self) -> u32 {
        self.count
    }

    fn corrupt(&self, detail: impl Into<String>) -> Error {
        Error::Corrupt {
            path: self.path.clone(),
            detail: detail.into(),
        }
    }

    fn take_bytes(&mut self, buf: &mut [u8], what: &str) -> Result<()> {
        if (buf.len() as u64) > self.remaining {
            return Err(self.corrupt(format!(
                "truncated {what}: need {} bytes, {} left",
                buf.len(),
                self.remaining
            )));
        }
        self.input.read_exact(buf).map_err(|e| match e.kind() {
            ErrorKind::UnexpectedEof => self.corrupt(format!("truncated {what}")),
            _ => Error::io(&self.path, e),
        })?;
        self.remaining -= buf.len() as u64;
        Ok(())
    }

    fn dims<const N: usize>(&mut self, what: &str) -> Result<[usize; N]> {
        let mut b = vec![0u8; 4 * N];
        self.take_bytes(&mut b, what)?;
        let mut out = [0usize; N];
        for (i, o) in out.iter_mut().enumerate() {
            *o = u32::from_le_bytes(b[4 * i..4 * i + 4].try_into().unwrap()) as usize;
        }
        Ok(out)
    }

    fn floats(&mut self, n: usize, what: &str) -> Result<Vec<f64>> {
        let bytes = n
            .checked_mul(4)
            .filter(|&b| b as u64 <= self.remaining)
            .ok_or_else(|| self.corrupt(format!("{what} of {n} samples exceeds file size")))?;
        let mut b = vec![0u8; bytes];
        self.take_bytes(&mut b, what)?;
        let vals: Vec<f64> = b
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        if vals.iter().any(|v| !v.is_finite()) {
            return Err(self.corrupt(format!("non-finite value in {what}")));
        }
        Ok(vals)
    }

    fn read_clip(&mut self) -> Result<ClipSample> {
        let i = self.next;
        let [w, h, t, c] = self.dims::<4>(&format!("clip {i} render dims"))?;
        let n = w
            .checked_mul(h)
            .and_then(|v| v.checked_mul(t))
            .and_then(|v| v.checked_mul(c))
            .ok_or_else(|| self.corrupt(format!("clip {i}: render dims overflow")))?;
        let render = self.floats(n, &format!("clip {i} render"))?;
        let [dw, dh, dt] = self.dims::<3>(&format!("clip {i} depth dims"))?;
        let dn = dw
            .checked_mul(dh)
            .and_then(|v| v.checked_mul(dt))
            .ok_or_else(|| self.corrupt(format!("clip {i}: depth dims overflow")))?;
        let depth = self.floats(dn, &format!("clip {i} depth"))?;
        let mut bits = vec![0u8; dn.div_ceil(8)];
        self.take_bytes(&mut bits, &format!("clip {i} mask"))?;
        let mut digest = [0u8; DIGEST_BYTES];
        self.take_bytes(&mut digest, &format!("clip {i} digest"))?;
        let render = VideoTensor::from_vec(w, h, t, c, render)?;
        let depth = VideoTensor::from_vec(dw, dh, dt, 1, depth)?;
        ClipSample::new(render, depth, unpack_bits(&bits, dn), decode_digest(&digest))
    }
}

impl Iterator for NrsdReader {
    type Item = Result<ClipSample>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.count {
            return None;
        }
        let r = self.read_clip();
        self.next = if r.is_ok() { self.next + 1 } else { self.count };
        Some(r)
    }
}

/// Writes `clips` to `path` and returns the count written.
pub fn write_nrsd<'a>(path: &Path, flags: u16, clips: impl IntoIterator<Item = &'a ClipSample>) -> Result<u32> {
    let mut w = NrsdWriter::create(path, flags)?;
    for c in clips {
        w.write_clip(c)?;
    }
    w.finish()
}

pub fn read_nrsd(path: &Path) -> Result<Vec<ClipSample>> {
    let r = NrsdReader::open(path)?;
    let clips = r.collect::<Result<Vec<_>>>()?;
    Ok(clips)
}

/// Container plus manifest; clip metadata is attached from the manifest when present.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub manifest: Manifest,
    pub clips: Vec<ClipSample>,
}

impl Dataset {
    /// Reads a dataset directory or a bare container file.
    pub fn load(path: &Path) -> Result<Self> {
        let container = resolve_container(path);
        let mut clips = read_nrsd(&container)?;
        let mpath = manifest_path(&container);
        let manifest = if mpath.exists() {
            let m = Manifest::load(&mpath)?;
            if m.clips.len() != clips.len() {
                return Err(Error::Corrupt {
                    path: mpath,
                    detail: format!("manifest lists {} clips, container holds {}", m.clips.len(), clips.len()),
                });
            }
            for (clip, entry) in clips.iter_mut().zip(&m.clips) {
                if entry.param_hash != clip.digest.hash_hex() {
                    return Err(Error::Corrupt {
                        path: mpath.clone(),
                        detail: format!("clip {} digest does not match manifest", entry.index),
                    });
                }
                clip.meta = entry.meta.clone();
            }
            m
        } else {
            let mut m = Manifest::new();
            clips.iter().for_each(|c| m.push(c));
            m
        };
        Ok(Self { manifest, clips })
    }

    pub fn len(&self) -> usize {
        self.clips.len()
    }

    pub fn is_empty(&self) -> bool {
        self.clips.is_empty()
    }
}

/// Writes a container and its manifest. `template` supplies the dataset-level
/// manifest fields; the clip list and count are filled in here.
pub fn write_dataset<'a>(
    container: &Path,
    flags: u16,
    template: Manifest,
    clips: impl IntoIterator<Item = &'a ClipSample>,
) -> Result<Manifest> {
    let mut manifest = Manifest {
        clips: Vec::new(),
        count: 0,
        ..template
    };
    let mut w = NrsdWriter::create(container, flags)?;
    for c in clips {
        w.write_clip(c)?;
        manifest.push(c);
    }
    w.finish()?;
    manifest.save(&manifest_path(container))?;
    Ok(manifest)
}

/// Clips are rendered in parallel this many at a time, then written in index order.
const GENERATE_CHUNK: usize = 32;

/// Renders `count` clips seeded by `seed` into `out_dir/clips.nrsd` plus manifest.
/// Output is independent of the number of worker threads.
pub fn generate_dataset(
    cfg: &GeneratorConfig,
    textures: &TextureSource,
    texture_label: &str,
    seed: u64,
    count: usize,
    out_dir: &Path,
) -> Result<Manifest> {
    cfg.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let container = out_dir.join(CLIPS_FILE);
    let flags = if cfg.clip.grayscale { FLAG_GRAYSCALE } else { 0 };
    let mut manifest = Manifest {
        seed: Some(seed),
        textures: Some(texture_label.to_string()),
        generator: Some(cfg.clone()),
        ..Manifest::new()
    };
    let mut w = NrsdWriter::create(&container, flags)?;
    let mut start = 0;
    while start < count {
        let end = (start + GENERATE_CHUNK).min(count);
        let chunk: Vec<ClipSample> = (start..end)
            .into_par_iter()
            .map(|i| sample_clip(cfg, textures, seed, i as u64))
            .collect::<Result<_>>()?;
        for c in &chunk {
            w.write_clip(c)?;
            manifest.push(c);
        }
        log::info!("generated {end}/{count} clips");
        start = end;
    }
    w.finish()?;
    manifest.save(&manifest_path(&container))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::ClipShape;

    fn tiny_cfg() -> GeneratorConfig {
        GeneratorConfig {
            clip: ClipShape {
                resolution: 8,
                frames: 3,
                grid_n: 8,
                grayscale: false,
            },
            ..Default::default()
        }
    }

    #[test]
    fn bits_roundtrip() {
        let bits: Vec<bool> = (0..21).map(|i| i % 3 == 0 || i == 20).collect();
        let packed = pack_bits(&bits);
        assert_eq!(packed.len(), 3);
        assert_eq!(packed[0], 0b0100_1001);
        assert_eq!(unpack_bits(&packed, 21), bits);
    }

    #[test]
    fn roundtrip_ten_clips_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_dataset(&tiny_cfg(), &TextureSource::Procedural, "procedural", 11, 10, dir.path()).unwrap();
        assert_eq!(m.count, 10);
        let ds = Dataset::load(dir.path()).unwrap();
        assert_eq!(ds.len(), 10);
        let cfg = tiny_cfg();
        for (i, c) in ds.clips.iter().enumerate() {
            let fresh = sample_clip(&cfg, &TextureSource::Procedural, 11, i as u64).unwrap();
            assert_eq!(*c, fresh);
            let a: Vec<u64> = c.render.data().iter().map(|v| v.to_bits()).collect();
            let b: Vec<u64> = fresh.render.data().iter().map(|v| v.to_bits()).collect();
            assert_eq!(a, b);
        }
    }

    #[test]
    fn header_count_matches_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_dataset(&tiny_cfg(), &TextureSource::Procedural, "procedural", 1, 3, dir.path()).unwrap();
        let r = NrsdReader::open(&dir.path().join(CLIPS_FILE)).unwrap();
        assert_eq!(r.count() as usize, m.count);
        assert_eq!(Manifest::load(&manifest_path(&dir.path().join(CLIPS_FILE))).unwrap(), m);
    }

    #[test]
    fn empty_dataset_is_valid() {
        let dir = tempfile::tempdir().unwrap();
        let m = generate_dataset(&tiny_cfg(), &TextureSource::Procedural, "procedural", 1, 0, dir.path()).unwrap();
        assert_eq!(m.count, 0);
        assert!(Dataset::load(dir.path()).unwrap().is_empty());
    }

    #[test]
    fn truncation_is_reported_not_panicked() {
        let dir = tempfile::tempdir().unwrap();
        generate_dataset(&tiny_cfg(), &TextureSource::Procedural, "procedural", 1, 2, dir.path()).unwrap();
        let path = dir.path().join(CLIPS_FILE);
        let bytes = std::fs::read(&path).unwrap();
        for cut in [3, 11, 40, bytes.len() / 2, bytes.len() - 1] {
            let p = dir.path().join(format!("cut{cut}.nrsd"));
            std::fs::write(&p, &bytes[..cut]).unwrap();
            let err = read_nrsd(&p).unwrap_err();
            assert!(matches!(err, Error::Corrupt { .. }), "cut {cut}: {err}");
        }
    }

    #[test]
    fn bad_magic_and_version() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.nrsd");
        std::fs::write(&p, b"NRSX\x01\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(read_nrsd(&p), Err(Error::Corrupt { .. })));
        std::fs::write(&p, b"NRSD\x02\x00\x00\x00\x00\x00\x00\x00").unwrap();
        assert!(matches!(read_nrsd(&p), Err(Error::Corrupt { .. })));
    }
}
