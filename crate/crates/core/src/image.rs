//! Dense row-major floating point images.

use crate::error::{Error, Result};

/// A `width x height x channels` image stored row-major with interleaved
/// channels.
///
/// Color data lives in `[0, 1]`; depth and flow are unbounded. Every sample
/// is finite.
#[derive(Clone, Debug, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f32>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, channels: usize, data: Vec<f32>) -> Result<Self> {
        if !(1..=3).contains(&channels) {
            return Err(Error::InvalidArgument(format!(
                "image channel count must be 1, 2 or 3, got {channels}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidArgument(format!(
                "image dimensions must be non-zero, got {width}x{height}"
            )));
        }
        if data.len() != width * height * channels {
            return Err(Error::InvalidArgument(format!(
                "image data length {} does not match {width}x{height}x{channels}",
                data.len()
            )));
        }
        let buf = ImageBuffer {
            width,
            height,
            channels,
            data,
        };
        buf.check_finite("image")?;
        Ok(buf)
    }

    pub fn filled(width: usize, height: usize, channels: usize, value: f32) -> Self {
        assert!((1..=3).contains(&channels) && width > 0 && height > 0);
        ImageBuffer {
            width,
            height,
            channels,
            data: vec![value; width * height * channels],
        }
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn<const C: usize>(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> [f32; C],
    ) -> Self {
        let mut buf = ImageBuffer::filled(width, height, C, 0.0);
        for y in 0..height {
            for x in 0..width {
                buf.pixel_mut(x, y).copy_from_slice(&f(x, y));
            }
        }
        buf
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn channels(&self) -> usize {
        self.channels
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    #[inline]
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    #[inline]
    pub fn data_mut(&mut self) -> &mut [f32] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f32> {
        self.data
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> &[f32] {
        let i = (y * self.width + x) * self.channels;
        &self.data[i..i + self.channels]
    }

    #[inline]
    pub fn pixel_mut(&mut self, x: usize, y: usize) -> &mut [f32] {
        let i = (y * self.width + x) * self.channels;
        &mut self.data[i..i + self.channels]
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, c: usize) -> f32 {
        self.data[(y * self.width + x) * self.channels + c]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, c: usize, v: f32) {
        self.data[(y * self.width + x) * self.channels + c] = v;
    }

    /// Reads a binary mask sample (`> 0.5` counts as set).
    #[inline]
    pub fn is_set(&self, x: usize, y: usize) -> bool {
        self.get(x, y, 0) > 0.5
    }

    /// Copies the `w x h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, w: usize, h: usize) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height || w == 0 || h == 0 {
            return Err(Error::InvalidArgument(format!(
                "crop window {w}x{h}+{x0}+{y0} outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut data = Vec::with_capacity(w * h * self.channels);
        for y in y0..y0 + h {
            let start = (y * self.width + x0) * self.channels;
            data.extend_from_slice(&self.data[start..start + w * self.channels]);
        }
        Ok(ImageBuffer {
            width: w,
            height: h,
            channels: self.channels,
            data,
        })
    }

    pub fn ensure_dims(&self, what: &str, expected: (usize, usize)) -> Result<()> {
        if self.dims() != expected {
            return Err(Error::DimensionMismatch {
                what: what.to_string(),
                expected,
                found: self.dims(),
            });
        }
        Ok(())
    }

    pub fn check_finite(&self, what: &str) -> Result<()> {
        if let Some(i) = self.data.iter().position(|v| !v.is_finite()) {
            let px = i / self.channels;
            return Err(Error::NonFinite {
                what: what.to_string(),
                x: px % self.width,
                y: px / self.width,
                channel: i % self.channels,
            });
        }
        Ok(())
    }

    pub fn check_positive(&self, what: &str) -> Result<()> {
        if let Some(i) = self.data.iter().position(|&v| !(v > 0.0)) {
            let px = i / self.channels;
            return Err(Error::NonPositiveDepth {
                what: what.to_string(),
                x: px % self.width,
                y: px / self.width,
                value: self.data[i],
            });
        }
        Ok(())
    }

    /// Number of set pixels in a mask image.
    pub fn count_set(&self) -> usize {
        self.data
            .chunks_exact(self.channels)
            .filter(|p| p[0] > 0.5)
            .count()
    }
}
