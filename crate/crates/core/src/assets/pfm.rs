//! Portable float map codec (`Pf` grayscale, `PF` RGB).
//!
//! Scanlines are stored bottom-to-top. A negative scale marks little-endian
//! payloads; we always write little-endian with scale `-1.0`.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

const FORMAT: &str = "PFM";

pub fn read_pfm(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_pfm(&bytes).map_err(|e| match e {
        DecodeError::Header(reason) => Error::malformed(path, FORMAT, reason),
        DecodeError::Truncated { expected, found } => Error::Truncated {
            path: path.to_path_buf(),
            format: FORMAT,
            expected,
            found,
        },
        DecodeError::Sample(reason) => Error::malformed(path, FORMAT, reason),
    })
}

pub fn write_pfm(buffer: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pfm(buffer).map_err(|reason| Error::malformed(path, FORMAT, reason))?;
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub(crate) enum DecodeError {
    Header(String),
    Truncated { expected: usize, found: usize },
    Sample(String),
}

pub(crate) fn encode_pfm(buffer: &ImageBuffer) -> std::result::Result<Vec<u8>, String> {
    let tag = match buffer.channels() {
        1 => "Pf",
        3 => "PF",
        c => return Err(format!("cannot store {c}-channel image")),
    };
    let (w, h) = buffer.dims();
    let row = w * buffer.channels();
    let mut out = format!("{tag}\n{w} {h}\n-1.0\n").into_bytes();
    out.reserve(buffer.data().len() * 4);
    for y in (0..h).rev() {
        for v in &buffer.data()[y * row..(y + 1) * row] {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    Ok(out)
}

pub(crate) fn decode_pfm(bytes: &[u8]) -> std::result::Result<ImageBuffer, DecodeError> {
    let mut pos = 0usize;
    let mut token = || -> std::result::Result<&[u8], DecodeError> {
        while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        let start = pos;
        while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
            pos += 1;
        }
        if start == pos {
            return Err(DecodeError::Header("unexpected end of header".into()));
        }
        Ok(&bytes[start..pos])
    };
    let channels = match token()? {
        b"Pf" => 1,
        b"PF" => 3,
        other => {
            return Err(DecodeError::Header(format!(
                "bad magic {:?}",
                String::from_utf8_lossy(other)
            )))
        }
    };
    let parse_dim = |t: &[u8]| -> std::result::Result<usize, DecodeError> {
        std::str::from_utf8(t)
            .ok()
            .and_then(|s| s.parse::<usize>().ok())
            .filter(|&d| d > 0)
            .ok_or_else(|| {
                DecodeError::Header(format!("bad dimension {:?}", String::from_utf8_lossy(t)))
            })
    };
    let width = parse_dim(token()?)?;
    let height = parse_dim(token()?)?;
    let scale_tok = token()?;
    let scale: f64 = std::str::from_utf8(scale_tok)
        .ok()
        .and_then(|s| s.parse().ok())
        .filter(|s: &f64| s.is_finite() && *s != 0.0)
        .ok_or_else(|| {
            DecodeError::Header(format!(
                "bad scale {:?}",
                String::from_utf8_lossy(scale_tok)
            ))
        })?;
    // Exactly one whitespace byte separates the header from the raster.
    if pos >= bytes.len() || !bytes[pos].is_ascii_whitespace() {
        return Err(DecodeError::Truncated {
            expected: width * height * channels * 4,
            found: 0,
        });
    }
    pos += 1;
    let little_endian = scale < 0.0;

    let row = width * channels;
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels * 4))
        .ok_or_else(|| DecodeError::Header("dimensions overflow".into()))?;
    let payload = &bytes[pos..];
    if payload.len() < expected {
        return Err(DecodeError::Truncated {
            expected,
            found: payload.len(),
        });
    }
    let mut data = vec![0f32; width * height * channels];
    for (i, chunk) in payload[..expected].chunks_exact(4).enumerate() {
        let raw = [chunk[0], chunk[1], chunk[2], chunk[3]];
        let v = if little_endian {
            f32::from_le_bytes(raw)
        } else {
            f32::from_be_bytes(raw)
        };
        let file_row = i / row;
        let y = height - 1 - file_row;
        data[y * row + i % row] = v;
    }
    ImageBuffer::new(width, height, channels, data).map_err(|e| DecodeError::Sample(e.to_string()))
}
