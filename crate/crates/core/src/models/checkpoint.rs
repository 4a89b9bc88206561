//! Binary checkpoint container.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic      8 bytes   "PYRCKPT\0"
//! version    u32       CHECKPOINT_VERSION
//! spec_len   u32       length of the JSON-encoded ModelSpec
//! spec       bytes     UTF-8 JSON
//! n_arrays   u32
//! repeated n_arrays times:
//!   name_len u32, name bytes (e.g. "ch0.head1.weight")
//!   rank     u32, dims u64 * rank
//!   data     f64 * product(dims), row-major, IEEE-754 bit patterns
//! ```
//!
//! Arrays appear in canonical layer order, weight before bias.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::{ModelSpec, ModelState};
use crate::error::{Error, Result};
use crate::numeric::{DenseArray, LinearLayer};

pub const CHECKPOINT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"PYRCKPT\0";

pub fn write_checkpoint<W: Write>(state: &ModelState, mut w: W) -> Result<()> {
    let io = |e| Error::Checkpoint(format!("write failed: {e}"));
    w.write_all(MAGIC).map_err(io)?;
    w.write_all(&CHECKPOINT_VERSION.to_le_bytes()).map_err(io)?;
    let spec = serde_json::to_vec(&state.spec).map_err(|e| Error::Checkpoint(e.to_string()))?;
    w.write_all(&(spec.len() as u32).to_le_bytes()).map_err(io)?;
    w.write_all(&spec).map_err(io)?;

    let named = state.named_layers();
    w.write_all(&(2 * named.len() as u32).to_le_bytes()).map_err(io)?;
    for (name, layer) in named {
        for (suffix, arr) in [("weight", layer.weight()), ("bias", layer.bias())] {
            let full = format!("{name}.{suffix}");
            w.write_all(&(full.len() as u32).to_le_bytes()).map_err(io)?;
            w.write_all(full.as_bytes()).map_err(io)?;
            w.write_all(&(arr.shape().len() as u32).to_le_bytes()).map_err(io)?;
            for d in arr.shape() {
                w.write_all(&(*d as u64).to_le_bytes()).map_err(io)?;
            }
            for v in arr.data() {
                w.write_all(&v.to_le_bytes()).map_err(io)?;
            }
        }
    }
    w.flush().map_err(io)
}

pub fn read_checkpoint<R: Read>(mut r: R) -> Result<ModelState> {
    let mut magic = [0u8; 8];
    read_exact(&mut r, &mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Checkpoint("not a checkpoint file (bad magic)".into()));
    }
    let version = read_u32(&mut r)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!(
            "unsupported version {version}, expected {CHECKPOINT_VERSION}"
        )));
    }
    let spec_len = read_u32(&mut r)? as usize;
    let mut spec_bytes = vec![0u8; spec_len];
    read_exact(&mut r, &mut spec_bytes)?;
    let spec: ModelSpec =
        serde_json::from_slice(&spec_bytes).map_err(|e| Error::Checkpoint(format!("spec: {e}")))?;
    let layout = spec.layer_layout()?;

    let n_arrays = read_u32(&mut r)? as usize;
    let expected = 2 * layout.len() * spec.groups();
    if n_arrays != expected {
        return Err(Error::Checkpoint(format!(
            "expected {expected} arrays for this spec, found {n_arrays}"
        )));
    }
    let mut arrays = Vec::with_capacity(n_arrays);
    for _ in 0..n_arrays {
        let name_len = read_u32(&mut r)? as usize;
        let mut name = vec![0u8; name_len];
        read_exact(&mut r, &mut name)?;
        let name = String::from_utf8(name).map_err(|_| Error::Checkpoint("array name is not UTF-8".into()))?;
        let rank = read_u32(&mut r)? as usize;
        if rank > 2 {
            return Err(Error::Checkpoint(format!("array `{name}` has rank {rank}")));
        }
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(read_u64(&mut r)? as usize);
        }
        let count: usize = shape.iter().product();
        let mut data = Vec::with_capacity(count);
        let mut buf = [0u8; 8];
        for _ in 0..count {
            read_exact(&mut r, &mut buf)?;
            data.push(f64::from_le_bytes(buf));
        }
        arrays.push((name, DenseArray::new(shape, data)?));
    }

    let zeroed = ModelState::zeroed(&spec)?;
    let names: Vec<String> = zeroed.named_layers().into_iter().map(|(n, _)| n).collect();
    let mut it = arrays.into_iter();
    let mut groups = Vec::with_capacity(spec.groups());
    let mut names_it = names.iter();
    for _ in 0..spec.groups() {
        let mut group = Vec::with_capacity(layout.len());
        for _ in 0..layout.len() {
            let want = names_it.next().unwrap();
            let (wn, w) = it.next().unwrap();
            let (bn, b) = it.next().unwrap();
            if wn != format!("{want}.weight") || bn != format!("{want}.bias") {
                return Err(Error::Checkpoint(format!(
                    "expected arrays for `{want}`, found `{wn}` / `{bn}`"
                )));
            }
            group.push(LinearLayer::new(w, b)?);
        }
        groups.push(group);
    }
    ModelState::from_groups(spec, groups)
}

pub fn save_checkpoint(state: &ModelState, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_checkpoint(state, BufWriter::new(file))
}

pub fn load_checkpoint(path: impl AsRef<Path>) -> Result<ModelState> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_checkpoint(BufReader::new(file))
}

fn read_exact<R: Read>(r: &mut R, buf: &mut [u8]) -> Result<()> {
    r.read_exact(buf)
        .map_err(|e| Error::Checkpoint(format!("truncated or unreadable: {e}")))
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(r, &mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(r: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(r, &mut b)?;
    Ok(u64::from_le_bytes(b))
}
