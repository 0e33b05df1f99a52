//! Middlebury `.flo` optical flow codec.
//!
//! Layout: float32 magic `202021.25`, int32 width, int32 height, then
//! row-major interleaved `(u, v)` float32 pairs, all little-endian.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

const FORMAT: &str = "FLO";
pub const FLO_MAGIC: f32 = 202021.25;
const MAX_DIM: usize = 1 << 20;

pub fn read_flo(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_flo(&bytes).map_err(|e| e.with_path(path))
}

pub fn write_flo(buffer: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_flo(buffer).map_err(|reason| Error::malformed(path, FORMAT, reason))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) enum DecodeError {
    Malformed(String),
    Truncated { expected: usize, found: usize },
}

impl DecodeError {
    fn with_path(self, path: &Path) -> Error {
        match self {
            DecodeError::Malformed(reason) => Error::malformed(path, FORMAT, reason),
            DecodeError::Truncated { expected, found } => Error::Truncated {
                path: path.to_path_buf(),
                format: FORMAT,
                expected,
                found,
            },
        }
    }
}

pub(crate) fn encode_flo(buffer: &ImageBuffer) -> std::result::Result<Vec<u8>, String> {
    if buffer.channels() != 2 {
        return Err(format!("flow needs 2 channels, got {}", buffer.channels()));
    }
    let (w, h) = buffer.dims();
    let mut out = Vec::with_capacity(12 + buffer.data().len() * 4);
    out.extend_from_slice(&FLO_MAGIC.to_le_bytes());
    out.extend_from_slice(&(w as i32).to_le_bytes());
    out.extend_from_slice(&(h as i32).to_le_bytes());
    for v in buffer.data() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

pub(crate) fn decode_flo(bytes: &[u8]) -> std::result::Result<ImageBuffer, DecodeError> {
    if bytes.len() < 12 {
        return Err(DecodeError::Truncated {
            expected: 12,
            found: bytes.len(),
        });
    }
    let word = |i: usize| [bytes[i], bytes[i + 1], bytes[i + 2], bytes[i + 3]];
    let magic = f32::from_le_bytes(word(0));
    if magic != FLO_MAGIC {
        return Err(DecodeError::Malformed(format!("bad magic {magic}")));
    }
    let dim = |i: usize| -> std::result::Result<usize, DecodeError> {
        let d = i32::from_le_bytes(word(i));
        if d <= 0 || d as usize > MAX_DIM {
            return Err(DecodeError::Malformed(format!("bad dimension {d}")));
        }
        Ok(d as usize)
    };
    let width = dim(4)?;
    let height = dim(8)?;
    let expected = width * height * 8;
    let payload = &bytes[12..];
    if payload.len() < expected {
        return Err(DecodeError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let data = payload[..expected]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    ImageBuffer::new(width, height, 2, data).map_err(|e| DecodeError::Malformed(e.to_string()))
}
