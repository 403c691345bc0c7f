//! NRCK checkpoint: magic `NRCK`, u16 version, u16 reserved, u32 length of the
//! JSON network config followed by the JSON, u32 registry entry count, per entry
//! (u16 name length, name, u8 rank, u32 dims), u64 parameter count, then the
//! parameters as little-endian f64. All integers little-endian.

use std::io::{Read, Write};
use std::path::Path;

use nrdk_core::{Error, Result};

use crate::config::NetConfig;
use crate::net::{Network, ParamEntry};

pub const MAGIC: &[u8; 4] = b"NRCK";
pub const VERSION: u16 = 1;

pub fn encode(net: &Network) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&0u16.to_le_bytes());
    let json = serde_json::to_vec(net.config())?;
    out.extend_from_slice(&(json.len() as u32).to_le_bytes());
    out.extend_from_slice(&json);
    out.extend_from_slice(&(net.registry().len() as u32).to_le_bytes());
    for e in net.registry() {
        out.extend_from_slice(&(e.name.len() as u16).to_le_bytes());
        out.extend_from_slice(e.name.as_bytes());
        out.push(e.shape.len() as u8);
        for &d in &e.shape {
            out.extend_from_slice(&(d as u32).to_le_bytes());
        }
    }
    out.extend_from_slice(&(net.params.len() as u64).to_le_bytes());
    for p in &net.params {
        out.extend_from_slice(&p.to_le_bytes());
    }
    Ok(out)
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> Cursor<'a> {
    fn take_bytes(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.bytes.len() - self.pos < n {
            return Err(self.corrupt(format!("truncated at byte {}", self.pos)));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn corrupt(&self, detail: String) -> Error {
        Error::Corrupt {
            path: self.path.to_path_buf(),
            detail,
        }
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take_bytes(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take_bytes(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take_bytes(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take_bytes(8)?.try_into().unwrap()))
    }
}

/// `path` is only used in error messages.
pub fn decode(bytes: &[u8], path: &Path) -> Result<Network> {
    let mut c = Cursor { bytes, pos: 0, path };
    if c.take_bytes(4)? != MAGIC {
        return Err(c.corrupt("bad magic".into()));
    }
    let version = c.u16()?;
    if version != VERSION {
        return Err(c.corrupt(format!("unsupported version {version}")));
    }
    c.u16()?;
    let json_len = c.u32()? as usize;
    let config: NetConfig = serde_json::from_slice(c.take_bytes(json_len)?)?;
    let mut net = Network::zeroed(&config)?;
    let count = c.u32()? as usize;
    let mut registry = Vec::with_capacity(count);
    for _ in 0..count {
        let len = c.u16()? as usize;
        let name = String::from_utf8(c.take_bytes(len)?.to_vec()).map_err(|_| c.corrupt("non-UTF-8 name".into()))?;
        let rank = c.u8()? as usize;
        let shape = (0..rank).map(|_| c.u32().map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        registry.push((name, shape));
    }
    let expected: Vec<(String, Vec<usize>)> = net
        .registry()
        .iter()
        .map(|ParamEntry { name, shape, .. }| (name.clone(), shape.clone()))
        .collect();
    if registry != expected {
        return Err(c.corrupt("parameter registry does not match the stored network config".into()));
    }
    let n = c.u64()? as usize;
    if n != net.param_count() {
        return Err(c.corrupt(format!("{n} parameters, network has {}", net.param_count())));
    }
    let raw = c.take_bytes(n * 8)?;
    net.params = raw.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
    if c.pos != bytes.len() {
        return Err(c.corrupt(format!("{} trailing bytes", bytes.len() - c.pos)));
    }
    if net.params.iter().any(|p| !p.is_finite()) {
        return Err(Error::NonFinite(format!("parameters in {}", path.display())));
    }
    Ok(net)
}

pub fn save(net: &Network, path: &Path) -> Result<()> {
    let bytes = encode(net)?;
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}

pub fn load(path: &Path) -> Result<Network> {
    let mut bytes = Vec::new();
    std::fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}
