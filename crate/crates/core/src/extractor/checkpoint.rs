//! Binary model checkpoints: a versioned header, the model dimensions,
//! then named tensors as little-endian 64-bit floats. Loading restores the
//! parameters bit-exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use super::{Dims, ExtractorError, ExtractorParams};

const MAGIC: &[u8; 8] = b"EXTCKPT1";
const VERSION: u32 = 1;

fn io_err(path: &Path, source: std::io::Error) -> ExtractorError {
    ExtractorError::Io {
        path: path.display().to_string(),
        source,
    }
}

fn bad(path: &Path, reason: impl Into<String>) -> ExtractorError {
    ExtractorError::BadCheckpoint {
        path: path.display().to_string(),
        reason: reason.into(),
    }
}

pub fn save_checkpoint(params: &ExtractorParams, path: &Path) -> Result<(), ExtractorError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for dim in [
        params.dims.input_dim,
        params.dims.hidden_dim,
        params.dims.pos_dim,
        params.dims.max_pos,
    ] {
        out.extend_from_slice(&(dim as u32).to_le_bytes());
    }
    let tensors = params.tensors();
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, tensor) in tensors {
        out.extend_from_slice(&(name.len() as u32).to_le_bytes());
        out.extend_from_slice(name.as_bytes());
        out.extend_from_slice(&(tensor.rows as u32).to_le_bytes());
        out.extend_from_slice(&(tensor.cols as u32).to_le_bytes());
        for v in &tensor.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    File::create(path)
        .map_err(|e| io_err(path, e))?
        .write_all(&out)
        .map_err(|e| io_err(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    cursor: usize,
    path: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], ExtractorError> {
        if self.cursor + n > self.bytes.len() {
            return Err(bad(self.path, "truncated checkpoint"));
        }
        let slice = &self.bytes[self.cursor..self.cursor + n];
        self.cursor += n;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, ExtractorError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64, ExtractorError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<ExtractorParams, ExtractorError> {
    let mut bytes = Vec::new();
    File::open(path)
        .map_err(|e| io_err(path, e))?
        .read_to_end(&mut bytes)
        .map_err(|e| io_err(path, e))?;
    let mut r = Reader {
        bytes: &bytes,
        cursor: 0,
        path,
    };

    if r.take(8)? != MAGIC {
        return Err(bad(path, "not a model checkpoint (bad magic)"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(bad(path, format!("unsupported version {version}")));
    }
    let dims = Dims {
        input_dim: r.u32()? as usize,
        hidden_dim: r.u32()? as usize,
        pos_dim: r.u32()? as usize,
        max_pos: r.u32()? as usize,
    };
    let n_tensors = r.u32()? as usize;

    let mut params = ExtractorParams::zeros(dims);
    let expected = params.tensors().len();
    if n_tensors != expected {
        return Err(bad(
            path,
            format!("{n_tensors} tensors stored, model has {expected}"),
        ));
    }
    for (name, tensor) in params.tensors_mut() {
        let name_len = r.u32()? as usize;
        let stored_name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| bad(path, "tensor name is not UTF-8"))?;
        if stored_name != name {
            return Err(bad(
                path,
                format!("expected tensor `{name}`, found `{stored_name}`"),
            ));
        }
        let rows = r.u32()? as usize;
        let cols = r.u32()? as usize;
        if rows != tensor.rows || cols != tensor.cols {
            return Err(bad(
                path,
                format!(
                    "tensor `{name}` has shape {rows}x{cols}, expected {}x{}",
                    tensor.rows, tensor.cols
                ),
            ));
        }
        for v in tensor.data.iter_mut() {
            *v = r.f64()?;
        }
    }
    if r.cursor != bytes.len() {
        return Err(bad(path, "trailing bytes after final tensor"));
    }
    Ok(params)
}
