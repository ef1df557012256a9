//! MDL1 checkpoints.
//!
//! Little-endian: `b"MDL1"`, `u32` version, nine `u32` config fields (mode,
//! N, V, d_model, layers, heads, ffn_mult, max_len, teacher_dim), then every
//! tensor as `u32` name length, name bytes, `u32` rank, `u32` dims, `f32`
//! data. Tensors appear in [`Params::named`](super::Params::named) order.

use std::io::{Read, Write};

use super::{Mode, StudentConfig, StudentModel};
use crate::embedding::attribute_count;
use crate::error::{Error, Result};
use crate::inventory::AttributeTable;

pub const CHECKPOINT_MAGIC: &[u8; 4] = b"MDL1";
pub const CHECKPOINT_VERSION: u32 = 1;

fn u32_of(v: usize, what: &str) -> Result<u32> {
    u32::try_from(v).map_err(|_| Error::Checkpoint(format!("{what} {v} does not fit in u32")))
}

pub fn save_checkpoint<W: Write>(model: &StudentModel, mut writer: W) -> Result<()> {
    let cfg = model.config();
    let mut buf = Vec::new();
    buf.extend_from_slice(CHECKPOINT_MAGIC);
    buf.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    let header = [
        cfg.mode.code() as usize,
        model.attribute_dims(),
        model.vocab(),
        cfg.d_model,
        cfg.layers,
        cfg.heads,
        cfg.ffn_mult,
        cfg.max_len,
        cfg.teacher_dim,
    ];
    for v in header {
        buf.extend_from_slice(&u32_of(v, "config value")?.to_le_bytes());
    }
    for (name, m) in model.params.named() {
        buf.extend_from_slice(&u32_of(name.len(), "name length")?.to_le_bytes());
        buf.extend_from_slice(name.as_bytes());
        buf.extend_from_slice(&2u32.to_le_bytes());
        buf.extend_from_slice(&u32_of(m.rows, "rows")?.to_le_bytes());
        buf.extend_from_slice(&u32_of(m.cols, "cols")?.to_le_bytes());
        for &x in &m.data {
            buf.extend_from_slice(&(x as f32).to_le_bytes());
        }
    }
    writer.write_all(&buf)?;
    Ok(())
}

struct Cursor<R> {
    inner: R,
}

impl<R: Read> Cursor<R> {
    fn bytes(&mut self, n: usize, what: &str) -> Result<Vec<u8>> {
        let mut b = vec![0u8; n];
        self.inner.read_exact(&mut b).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::Checkpoint(format!("truncated while reading {what}")),
            _ => Error::from(e),
        })?;
        Ok(b)
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        let b = self.bytes(4, what)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

/// Load a checkpoint written for `table`. Hyperparameters that are not part
/// of the format (seed, learning rate, batch size, epochs) take defaults.
pub fn load_checkpoint<R: Read>(reader: R, table: &AttributeTable) -> Result<StudentModel> {
    let mut r = Cursor { inner: reader };
    if r.bytes(4, "magic")? != CHECKPOINT_MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let version = r.u32("version")?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::Checkpoint(format!("unsupported version {version}, expected {CHECKPOINT_VERSION}")));
    }
    let mut h = [0usize; 9];
    for (i, slot) in h.iter_mut().enumerate() {
        *slot = r.u32(&format!("config field {i}"))? as usize;
    }
    let mode = Mode::from_code(h[0] as u32).ok_or_else(|| Error::Checkpoint(format!("unknown mode code {}", h[0])))?;
    let n = attribute_count(table);
    if h[1] != n || h[2] != table.len() {
        return Err(Error::Checkpoint(format!(
            "attribute table mismatch: checkpoint has N={} V={}, table has N={} V={}",
            h[1],
            h[2],
            n,
            table.len()
        )));
    }
    let mut cfg = StudentConfig::new(mode, h[3], h[4], h[5], h[8]);
    cfg.ffn_mult = h[6];
    cfg.max_len = h[7];
    cfg.validate().map_err(|e| Error::Checkpoint(format!("invalid config: {e}")))?;
    let mut model = StudentModel::new(cfg, table)?;
    let expected: Vec<(String, usize, usize)> =
        model.params.named().into_iter().map(|(name, m)| (name, m.rows, m.cols)).collect();
    for ((name, rows, cols), tensor) in expected.into_iter().zip(model.params.tensors_mut()) {
        let len = r.u32("tensor name length")? as usize;
        let got = String::from_utf8(r.bytes(len, "tensor name")?)
            .map_err(|_| Error::Checkpoint("tensor name is not UTF-8".into()))?;
        if got != name {
            return Err(Error::Checkpoint(format!("expected tensor {name}, found {got}")));
        }
        let rank = r.u32("rank")? as usize;
        let dims = (0..rank).map(|_| r.u32("dims").map(|d| d as usize)).collect::<Result<Vec<_>>>()?;
        if dims != [rows, cols] {
            return Err(Error::Checkpoint(format!(
                "tensor {name}: shape {dims:?} does not match config [{rows}, {cols}]"
            )));
        }
        let raw = r.bytes(rows * cols * 4, &format!("tensor {name} data"))?;
        for (slot, b) in tensor.data.iter_mut().zip(raw.chunks_exact(4)) {
            let x = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
            if !x.is_finite() {
                return Err(Error::Checkpoint(format!("tensor {name}: non-finite value")));
            }
            *slot = f64::from(x);
        }
    }
    let mut rest = Vec::new();
    r.inner.read_to_end(&mut rest)?;
    if !rest.is_empty() {
        return Err(Error::Checkpoint(format!("{} unexpected trailing bytes", rest.len())));
    }
    Ok(model)
}
