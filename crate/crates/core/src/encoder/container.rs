//! Binary model container.
//!
//! Layout (all integers little-endian `u32`, floats little-endian `f64`):
//!
//! ```text
//! b"MEDKGMDL" | version | n_meta | (key, value)* | n_tensors | (name, rows, cols, data)*
//! ```
//!
//! Strings are length-prefixed UTF-8. Metadata keys are written sorted so
//! identical models serialize to identical bytes.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use ndarray::Array2;

use super::{EncoderConfig, EncoderParams};
use crate::error::{Error, Result};
use crate::tensor::Tensors;

pub const MAGIC: &[u8; 8] = b"MEDKGMDL";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Default)]
pub struct ModelFile {
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<(String, Array2<f64>)>,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&(v as u32).to_le_bytes());
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    put_u32(out, s.len());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::ModelFormat(format!("truncated at byte {}", self.pos)))?;
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()) as usize)
    }

    fn string(&mut self) -> Result<String> {
        let n = self.u32()?;
        String::from_utf8(self.take(n)?.to_vec()).map_err(|_| Error::ModelFormat("invalid UTF-8 string".into()))
    }
}

impl ModelFile {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        put_u32(&mut out, FORMAT_VERSION as usize);
        put_u32(&mut out, self.meta.len());
        for (k, v) in &self.meta {
            put_str(&mut out, k);
            put_str(&mut out, v);
        }
        put_u32(&mut out, self.tensors.len());
        for (name, t) in &self.tensors {
            put_str(&mut out, name);
            put_u32(&mut out, t.nrows());
            put_u32(&mut out, t.ncols());
            for v in t.iter() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::ModelFormat("bad magic".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION as usize {
            return Err(Error::ModelFormat(format!("unsupported format version {version}")));
        }
        let mut meta = BTreeMap::new();
        for _ in 0..r.u32()? {
            let k = r.string()?;
            let v = r.string()?;
            meta.insert(k, v);
        }
        let n = r.u32()?;
        let mut tensors = Vec::with_capacity(n);
        for _ in 0..n {
            let name = r.string()?;
            let rows = r.u32()?;
            let cols = r.u32()?;
            let bytes = r.take(rows * cols * 8)?;
            let data: Vec<f64> = bytes.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
            tensors.push((name, Array2::from_shape_vec((rows, cols), data).expect("sized above")));
        }
        if r.pos != buf.len() {
            return Err(Error::ModelFormat("trailing bytes".into()));
        }
        Ok(Self { meta, tensors })
    }

    /// Write via a temporary file and rename.
    pub fn write(&self, path: &Path) -> Result<()> {
        crate::pipeline::write_atomic(path, &self.to_bytes())
    }

    pub fn read(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingPath(path.to_path_buf()));
        }
        Self::from_bytes(&fs::read(path)?)
    }

    pub fn meta(&self, key: &str) -> Result<&str> {
        self.meta.get(key).map(String::as_str).ok_or_else(|| Error::ModelFormat(format!("missing header field {key}")))
    }

    pub fn meta_parse<T: std::str::FromStr>(&self, key: &str) -> Result<T> {
        self.meta(key)?.parse().map_err(|_| Error::ModelFormat(format!("bad header field {key}")))
    }

    pub fn push_tensors<T: Tensors>(&mut self, params: &T) {
        self.tensors.extend(params.named().into_iter().map(|(n, t)| (n, t.clone())));
    }

    /// Fill every tensor of `params` from the same-named entry, checking shapes.
    pub fn load_tensors<T: Tensors>(&self, params: &mut T) -> Result<()> {
        for (name, slot) in params.named_mut() {
            let t = self
                .tensors
                .iter()
                .find(|(n, _)| *n == name)
                .map(|(_, t)| t)
                .ok_or_else(|| Error::ModelFormat(format!("missing tensor {name}")))?;
            if t.dim() != slot.dim() {
                return Err(Error::ModelFormat(format!("tensor {name} has shape {:?}, expected {:?}", t.dim(), slot.dim())));
            }
            slot.assign(t);
        }
        Ok(())
    }

    pub fn put_encoder_config(&mut self, config: &EncoderConfig, seed: u64) {
        let m = &mut self.meta;
        m.insert("config.n_layers".into(), config.n_layers.to_string());
        m.insert("config.n_heads".into(), config.n_heads.to_string());
        m.insert("config.hidden_size".into(), config.hidden_size.to_string());
        m.insert("config.max_len".into(), config.max_len.to_string());
        m.insert("config.ff_size".into(), config.ff_size.to_string());
        m.insert("config.vocab_size".into(), config.vocab_size.to_string());
        m.insert("seed".into(), seed.to_string());
    }

    pub fn encoder_config(&self) -> Result<EncoderConfig> {
        let c = EncoderConfig {
            n_layers: self.meta_parse("config.n_layers")?,
            n_heads: self.meta_parse("config.n_heads")?,
            hidden_size: self.meta_parse("config.hidden_size")?,
            max_len: self.meta_parse("config.max_len")?,
            ff_size: self.meta_parse("config.ff_size")?,
            vocab_size: self.meta_parse("config.vocab_size")?,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn encoder_params(&self, config: &EncoderConfig) -> Result<EncoderParams> {
        let mut p = EncoderParams::zeros(config);
        self.load_tensors(&mut p)?;
        Ok(p)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let config = EncoderConfig { n_layers: 1, n_heads: 2, hidden_size: 4, max_len: 8, ff_size: 6, vocab_size: 10 };
        let params = EncoderParams::init(&config, 9).unwrap();
        let mut f = ModelFile::default();
        f.put_encoder_config(&config, 9);
        f.meta.insert("kind".into(), "test".into());
        f.push_tensors(&params);
        let bytes = f.to_bytes();
        assert_eq!(&bytes[..8], MAGIC);
        let back = ModelFile::from_bytes(&bytes).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.encoder_config().unwrap(), config);
        assert_eq!(back.encoder_params(&config).unwrap(), params);
        assert!(ModelFile::from_bytes(&bytes[..bytes.len() - 1]).is_err());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(ModelFile::from_bytes(&bad).is_err());
    }
}
