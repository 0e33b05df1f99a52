//! 8-bit PNG carriers for color images and binary masks.

use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImageBuffer;

/// Maps a `[0, 1]` sample to its 8-bit code.
#[inline]
pub fn to_u8(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[inline]
pub fn from_u8(v: u8) -> f32 {
    v as f32 / 255.0
}

/// Snaps every sample onto the 8-bit grid so that a PNG round trip is exact.
pub fn quantize(buffer: &mut ImageBuffer) {
    for v in buffer.data_mut() {
        *v = from_u8(to_u8(*v));
    }
}

fn open(path: &Path) -> Result<image::DynamicImage> {
    if !path.exists() {
        return Err(Error::MissingFile {
            path: path.to_path_buf(),
        });
    }
    image::open(path).map_err(|e| Error::malformed(path, "PNG", e.to_string()))
}

/// Decodes any PNG as a 3-channel color image in `[0, 1]`.
pub fn read_color_png(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let rgb = open(path)?.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let data = rgb.into_raw().into_iter().map(from_u8).collect();
    ImageBuffer::new(w, h, 3, data)
}

/// Decodes a PNG as a binary 1-channel mask (`0.0` / `1.0`).
pub fn read_mask_png(path: impl AsRef<Path>) -> Result<ImageBuffer> {
    let path = path.as_ref();
    let luma = open(path)?.to_luma8();
    let (w, h) = (luma.width() as usize, luma.height() as usize);
    let data = luma
        .into_raw()
        .into_iter()
        .map(|v| if v >= 128 { 1.0 } else { 0.0 })
        .collect();
    ImageBuffer::new(w, h, 1, data)
}

/// Writes a 1-channel (grayscale) or 3-channel (RGB) buffer as 8-bit PNG.
pub fn write_png(buffer: &ImageBuffer, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let (w, h) = (buffer.width() as u32, buffer.height() as u32);
    let raw: Vec<u8> = buffer.data().iter().map(|&v| to_u8(v)).collect();
    let color = match buffer.channels() {
        1 => image::ExtendedColorType::L8,
        3 => image::ExtendedColorType::Rgb8,
        c => {
            return Err(Error::malformed(
                path,
                "PNG",
                format!("cannot store {c}-channel image"),
            ))
        }
    };
    image::save_buffer_with_format(path, &raw, w, h, color, image::ImageFormat::Png).map_err(|e| {
        match e {
            image::ImageError::IoError(io) => Error::io(path, io),
            other => Error::Image(other),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn u8_grid_is_a_fixed_point() {
        for k in 0..=255u8 {
            assert_eq!(to_u8(from_u8(k)), k);
        }
    }

    #[test]
    fn color_and_mask_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = ImageBuffer::from_fn(3, 2, |x, y| [x as f32 / 3.0, y as f32 / 2.0, 0.7]);
        quantize(&mut img);
        let p = dir.path().join("c.png");
        write_png(&img, &p).unwrap();
        assert_eq!(read_color_png(&p).unwrap(), img);

        let mask = ImageBuffer::from_fn(3, 2, |x, _| [(x % 2) as f32]);
        let p = dir.path().join("m.png");
        write_png(&mask, &p).unwrap();
        assert_eq!(read_mask_png(&p).unwrap(), mask);
    }

    #[test]
    fn missing_file_is_reported() {
        let err = read_color_png("/nonexistent/x.png").unwrap_err();
        assert!(matches!(err, Error::MissingFile { .. }));
    }
}
