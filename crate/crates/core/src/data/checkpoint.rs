//! Parameter checkpoints: a text header followed by little-endian values.
//!
//! ```text
//! HGPFCKPT 1
//! dtype f64
//! meta <key> <value>
//! tensor <name> <rows> <cols> <byte offset>
//! end
//! <binary payload>
//! ```

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::diff::{ParamStore, Tensor};
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub const MAGIC: &str = "HGPFCKPT";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint<S> {
    pub meta: BTreeMap<String, String>,
    pub tensors: Vec<(String, Tensor<S>)>,
}

impl<S: Scalar> Checkpoint<S> {
    pub fn from_store(store: &ParamStore<S>, meta: BTreeMap<String, String>) -> Self {
        Checkpoint { meta, tensors: store.iter().map(|p| (p.name.clone(), p.value.clone())).collect() }
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut head = format!("{MAGIC} {VERSION}\ndtype {}\n", S::DTYPE);
        for (k, v) in &self.meta {
            let _ = writeln!(head, "meta {k} {v}");
        }
        let mut offset = 0;
        for (name, t) in &self.tensors {
            let _ = writeln!(head, "tensor {name} {} {} {offset}", t.rows(), t.cols());
            offset += t.len() * S::BYTES;
        }
        head.push_str("end\n");
        let mut out = head.into_bytes();
        for (_, t) in &self.tensors {
            for &x in t.data() {
                x.write_le(&mut out);
            }
        }
        out
    }

    pub fn from_bytes(bytes: &[u8], path: &Path) -> Result<Self> {
        let err = |msg: String| Error::Checkpoint { path: path.to_path_buf(), msg };
        let end = bytes
            .windows(5)
            .position(|w| w == b"\nend\n")
            .ok_or_else(|| err("truncated header".into()))?;
        let head = std::str::from_utf8(&bytes[..end]).map_err(|_| err("header is not UTF-8".into()))?;
        let payload = &bytes[end + 5..];
        let mut lines = head.lines();
        let first = lines.next().unwrap_or("");
        let mut magic = first.split_whitespace();
        if magic.next() != Some(MAGIC) {
            return Err(err(format!("not a checkpoint (header {first:?})")));
        }
        match magic.next().and_then(|v| v.parse::<u32>().ok()) {
            Some(VERSION) => {}
            Some(v) => return Err(err(format!("unsupported version {v}, expected {VERSION}"))),
            None => return Err(err(format!("unreadable version in header {first:?}"))),
        }
        let mut meta = BTreeMap::new();
        let mut table = Vec::new();
        for line in lines {
            let words: Vec<&str> = line.splitn(2, ' ').collect();
            match words[..] {
                ["dtype", d] if d == S::DTYPE => {}
                ["dtype", d] => return Err(err(format!("dtype {d} cannot be read as {}", S::DTYPE))),
                ["meta", rest] => {
                    let (k, v) = rest.split_once(' ').unwrap_or((rest, ""));
                    meta.insert(k.to_string(), v.to_string());
                }
                ["tensor", rest] => {
                    let f: Vec<&str> = rest.split(' ').collect();
                    let parsed = match f[..] {
                        [name, r, c, o] => r.parse::<usize>().ok().zip(c.parse::<usize>().ok()).zip(o.parse::<usize>().ok()).map(|((r, c), o)| (name, r, c, o)),
                        _ => None,
                    };
                    table.push(parsed.ok_or_else(|| err(format!("bad tensor line {line:?}")))?);
                }
                _ => return Err(err(format!("unexpected header line {line:?}"))),
            }
        }
        let mut tensors = Vec::with_capacity(table.len());
        for (name, r, c, o) in table {
            let n = r * c * S::BYTES;
            let chunk = payload.get(o..o + n).ok_or_else(|| err(format!("truncated data for tensor {name}")))?;
            let data = chunk.chunks_exact(S::BYTES).map(S::read_le).collect();
            tensors.push((name.to_string(), Tensor::new(r, c, data)?));
        }
        let expected: usize = tensors.iter().map(|(_, t)| t.len() * S::BYTES).sum();
        if payload.len() != expected {
            return Err(err(format!("{} payload bytes, expected {expected}", payload.len())));
        }
        Ok(Checkpoint { meta, tensors })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes, path)
    }

    /// Copies the tensors into `store`, which must have exactly the same
    /// names and shapes in the same order.
    pub fn apply(&self, store: &mut ParamStore<S>, path: &Path) -> Result<()> {
        let err = |msg: String| Error::Checkpoint { path: path.to_path_buf(), msg: format!("incompatible checkpoint: {msg}") };
        if self.tensors.len() != store.len() {
            return Err(err(format!("{} tensors, model has {}", self.tensors.len(), store.len())));
        }
        for ((name, t), p) in self.tensors.iter().zip(store.iter()) {
            if *name != p.name {
                return Err(err(format!("tensor {name} where model expects {}", p.name)));
            }
            if t.shape() != p.value.shape() {
                return Err(err(format!("{name} has shape {:?}, model expects {:?}", t.shape(), p.value.shape())));
            }
        }
        for ((_, t), p) in self.tensors.iter().zip(store.iter_mut()) {
            p.value = t.clone();
        }
        Ok(())
    }
}
