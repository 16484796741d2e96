//! Binary checkpoint container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! "MAGI-CKPT"            9-byte magic
//! version: u32
//! n_sections: u32
//! per section:
//!   name_len: u32, name: UTF-8 bytes
//!   n_layers: u32, per layer: in_dim u32, out_dim u32, activation u8
//!   n_values: u64, values: f64 (IEEE-754, little-endian)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{Activation, LayerSpec, ParamSet};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 9] = b"MAGI-CKPT";
pub const FORMAT_VERSION: u32 = 1;

/// Ordered collection of named parameter sets.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Checkpoint {
    sections: Vec<(String, ParamSet)>,
}

impl Checkpoint {
    pub fn new() -> Self {
        Self::default()
    }

    /// Inserts or replaces a section, keeping first-insertion order.
    pub fn insert(&mut self, name: impl Into<String>, params: ParamSet) {
        let name = name.into();
        match self.sections.iter_mut().find(|(n, _)| *n == name) {
            Some(slot) => slot.1 = params,
            None => self.sections.push((name, params)),
        }
    }

    pub fn get(&self, name: &str) -> Option<&ParamSet> {
        self.sections.iter().find(|(n, _)| n == name).map(|(_, p)| p)
    }

    pub fn require(&self, name: &str) -> Result<&ParamSet> {
        self.get(name)
            .ok_or_else(|| Error::Checkpoint(format!("missing section `{name}`")))
    }

    pub fn contains(&self, name: &str) -> bool {
        self.get(name).is_some()
    }

    pub fn sections(&self) -> impl Iterator<Item = (&str, &ParamSet)> {
        self.sections.iter().map(|(n, p)| (n.as_str(), p))
    }

    pub fn len(&self) -> usize {
        self.sections.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sections.is_empty()
    }

    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        w.write_all(&FORMAT_VERSION.to_le_bytes())?;
        w.write_all(&u32_len(self.sections.len())?.to_le_bytes())?;
        for (name, params) in &self.sections {
            w.write_all(&u32_len(name.len())?.to_le_bytes())?;
            w.write_all(name.as_bytes())?;
            w.write_all(&u32_len(params.layout.len())?.to_le_bytes())?;
            for layer in &params.layout {
                w.write_all(&u32_len(layer.in_dim)?.to_le_bytes())?;
                w.write_all(&u32_len(layer.out_dim)?.to_le_bytes())?;
                w.write_all(&[layer.activation.tag()])?;
            }
            w.write_all(&(params.values.len() as u64).to_le_bytes())?;
            for v in &params.values {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut magic = [0u8; 9];
        r.read_exact(&mut magic)
            .map_err(|_| Error::Checkpoint("file too short for header".into()))?;
        if &magic != MAGIC {
            return Err(Error::Checkpoint("bad magic string".into()));
        }
        let version = read_u32(&mut r)?;
        if version != FORMAT_VERSION {
            return Err(Error::Checkpoint(format!("unsupported format version {version}")));
        }
        let n_sections = read_u32(&mut r)?;
        let mut ckpt = Checkpoint::new();
        for _ in 0..n_sections {
            let name_len = read_u32(&mut r)? as usize;
            let mut name = vec![0u8; name_len];
            r.read_exact(&mut name).map_err(truncated)?;
            let name =
                String::from_utf8(name).map_err(|_| Error::Checkpoint("section name is not UTF-8".into()))?;
            let n_layers = read_u32(&mut r)?;
            let mut layout = Vec::with_capacity(n_layers as usize);
            for _ in 0..n_layers {
                let in_dim = read_u32(&mut r)? as usize;
                let out_dim = read_u32(&mut r)? as usize;
                let mut tag = [0u8; 1];
                r.read_exact(&mut tag).map_err(truncated)?;
                layout.push(LayerSpec::new(in_dim, out_dim, Activation::from_tag(tag[0])?));
            }
            let mut n = [0u8; 8];
            r.read_exact(&mut n).map_err(truncated)?;
            let n_values = u64::from_le_bytes(n) as usize;
            let mut values = Vec::with_capacity(n_values.min(1 << 24));
            let mut buf = [0u8; 8];
            for _ in 0..n_values {
                r.read_exact(&mut buf).map_err(truncated)?;
                values.push(f64::from_le_bytes(buf));
            }
            let params = ParamSet::new(layout, values)
                .map_err(|e| Error::Checkpoint(format!("section `{name}`: {e}")))?;
            ckpt.insert(name, params);
        }
        Ok(ckpt)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_to(BufWriter::new(File::create(path)?))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::read_from(BufReader::new(File::open(path)?))
    }
}

fn u32_len(n: usize) -> Result<u32> {
    u32::try_from(n).map_err(|_| Error::Checkpoint(format!("length {n} exceeds u32")))
}

fn truncated(_: std::io::Error) -> Error {
    Error::Checkpoint("unexpected end of data".into())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}
