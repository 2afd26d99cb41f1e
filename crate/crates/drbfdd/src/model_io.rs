//! Model persistence: the `DRBF` binary container.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic    4 bytes  "DRBF"
//! version  u32      currently 1
//! input    shape list (u32 rank, then u64 per dim)
//! layers   u32 count, then per layer a u32 kind tag plus its fields:
//!            0 conv2d   stride u64, pad u64, weights tensor, bias tensor
//!            1 conv1d   stride u64, pad u64, weights tensor, bias tensor
//!            2 maxpool  window u64
//!            3 dense    weights tensor, bias tensor
//!            4 tanh     (no fields)
//!            5 flatten  (no fields)
//!            6 zeropad  pad u64
//! head     centers, spreads, weights tensors
//! ```
//!
//! Tensors are a shape list followed by raw f64 little-endian data.
//! Round-trips are bit-exact.

use std::fs;
use std::io::{self, Read, Write};
use std::path::Path;

use crate::deep::{DrbfddModel, FeatureExtractor, Layer};
use crate::error::{Error, Result};
use crate::rbfdd::RbfddParams;
use crate::tensor::Tensor;

pub const MAGIC: &[u8; 4] = b"DRBF";
pub const FORMAT_VERSION: u32 = 1;

fn corrupt(path: &str, detail: impl Into<String>) -> Error {
    Error::CorruptModel {
        path: path.to_string(),
        detail: detail.into(),
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
    path: &'a str,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.buf.len() {
            return Err(corrupt(self.path, format!("truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn shape(&mut self) -> Result<Vec<usize>> {
        let rank = self.u32()? as usize;
        if rank > 8 {
            return Err(corrupt(self.path, format!("implausible tensor rank {}", rank)));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(self.u64()? as usize);
        }
        Ok(shape)
    }

    fn tensor(&mut self) -> Result<Tensor> {
        let shape = self.shape()?;
        let n: usize = shape.iter().product();
        let raw = self.take(n * 8)?;
        let data: Vec<f64> = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Tensor::new(shape, data)
    }
}

fn write_shape(out: &mut Vec<u8>, shape: &[usize]) {
    out.extend_from_slice(&(shape.len() as u32).to_le_bytes());
    for &d in shape {
        out.extend_from_slice(&(d as u64).to_le_bytes());
    }
}

fn write_tensor(out: &mut Vec<u8>, t: &Tensor) {
    write_shape(out, t.shape());
    for v in t.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

/// Serializes a model to its byte representation.
pub fn to_bytes(model: &DrbfddModel) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    write_shape(&mut out, model.extractor().input_shape());
    let layers = model.extractor().layers();
    out.extend_from_slice(&(layers.len() as u32).to_le_bytes());
    for layer in layers {
        match layer {
            Layer::Conv2d { weights, bias, stride, pad } => {
                out.extend_from_slice(&0u32.to_le_bytes());
                out.extend_from_slice(&(*stride as u64).to_le_bytes());
                out.extend_from_slice(&(*pad as u64).to_le_bytes());
                write_tensor(&mut out, weights);
                write_tensor(&mut out, bias);
            }
            Layer::Conv1d { weights, bias, stride, pad } => {
                out.extend_from_slice(&1u32.to_le_bytes());
                out.extend_from_slice(&(*stride as u64).to_le_bytes());
                out.extend_from_slice(&(*pad as u64).to_le_bytes());
                write_tensor(&mut out, weights);
                write_tensor(&mut out, bias);
            }
            Layer::MaxPool { window } => {
                out.extend_from_slice(&2u32.to_le_bytes());
                out.extend_from_slice(&(*window as u64).to_le_bytes());
            }
            Layer::Dense { weights, bias } => {
                out.extend_from_slice(&3u32.to_le_bytes());
                write_tensor(&mut out, weights);
                write_tensor(&mut out, bias);
            }
            Layer::ScaledTanh => out.extend_from_slice(&4u32.to_le_bytes()),
            Layer::Flatten => out.extend_from_slice(&5u32.to_le_bytes()),
            Layer::ZeroPad1d { pad } => {
                out.extend_from_slice(&6u32.to_le_bytes());
                out.extend_from_slice(&(*pad as u64).to_le_bytes());
            }
        }
    }
    write_tensor(&mut out, model.head().centers());
    write_tensor(&mut out, model.head().spreads());
    write_tensor(&mut out, model.head().weights());
    out
}

/// Parses a model from bytes, validating magic, version, and architecture.
pub fn from_bytes(buf: &[u8], path: &str) -> Result<DrbfddModel> {
    let mut r = Reader { buf, pos: 0, path };
    let magic = r.take(4)?;
    if magic != MAGIC {
        return Err(corrupt(path, format!("bad magic {:02x?}", magic)));
    }
    let version = r.u32()?;
    if version != FORMAT_VERSION {
        return Err(corrupt(path, format!("unsupported format version {}", version)));
    }
    let input_shape = r.shape()?;
    let n_layers = r.u32()? as usize;
    if n_layers > 64 {
        return Err(corrupt(path, format!("implausible layer count {}", n_layers)));
    }
    let mut layers = Vec::with_capacity(n_layers);
    for _ in 0..n_layers {
        let tag = r.u32()?;
        let layer = match tag {
            0 => {
                let stride = r.u64()? as usize;
                let pad = r.u64()? as usize;
                let weights = r.tensor()?;
                let bias = r.tensor()?;
                Layer::Conv2d { weights, bias, stride, pad }
            }
            1 => {
                let stride = r.u64()? as usize;
                let pad = r.u64()? as usize;
                let weights = r.tensor()?;
                let bias = r.tensor()?;
                Layer::Conv1d { weights, bias, stride, pad }
            }
            2 => Layer::MaxPool { window: r.u64()? as usize },
            3 => {
                let weights = r.tensor()?;
                let bias = r.tensor()?;
                Layer::Dense { weights, bias }
            }
            4 => Layer::ScaledTanh,
            5 => Layer::Flatten,
            6 => Layer::ZeroPad1d { pad: r.u64()? as usize },
            t => return Err(corrupt(path, format!("unknown layer tag {}", t))),
        };
        layers.push(layer);
    }
    let centers = r.tensor()?;
    let spreads = r.tensor()?;
    let weights = r.tensor()?;
    if r.pos != buf.len() {
        return Err(corrupt(path, format!("{} trailing bytes", buf.len() - r.pos)));
    }

    let extractor = FeatureExtractor::new(layers, input_shape)
        .map_err(|e| corrupt(path, format!("invalid architecture: {}", e)))?;
    let head = RbfddParams::new(centers, spreads, weights)
        .map_err(|e| corrupt(path, format!("invalid head: {}", e)))?;
    DrbfddModel::new(extractor, head).map_err(|e| corrupt(path, format!("{}", e)))
}

pub fn save_model(model: &DrbfddModel, path: &Path) -> Result<()> {
    let bytes = to_bytes(model);
    let mut f = fs::File::create(path).map_err(|e| Error::io(path.display().to_string(), e))?;
    f.write_all(&bytes)
        .map_err(|e| Error::io(path.display().to_string(), e))
}

pub fn load_model(path: &Path) -> Result<DrbfddModel> {
    let mut f = fs::File::open(path).map_err(|e| {
        Error::io(
            path.display().to_string(),
            io::Error::new(e.kind(), format!("cannot open model file: {}", e)),
        )
    })?;
    let mut buf = Vec::new();
    f.read_to_end(&mut buf)
        .map_err(|e| Error::io(path.display().to_string(), e))?;
    from_bytes(&buf, &path.display().to_string())
}
