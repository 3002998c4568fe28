use serde::{Deserialize, Serialize};

use super::ImagingError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Channels {
    Rgb8,
    Gray8,
}

impl Channels {
    pub fn count(self) -> usize {
        match self {
            Channels::Rgb8 => 3,
            Channels::Gray8 => 1,
        }
    }
}

/// An 8-bit raster with row-major, channel-interleaved pixels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Image {
    id: String,
    width: usize,
    height: usize,
    channels: Channels,
    pixels: Vec<u8>,
}

impl Image {
    pub fn new(
        id: impl Into<String>,
        width: usize,
        height: usize,
        channels: Channels,
        pixels: Vec<u8>,
    ) -> Result<Self, ImagingError> {
        if width == 0 || height == 0 {
            return Err(ImagingError::EmptyImage);
        }
        let expected = width * height * channels.count();
        if pixels.len() != expected {
            return Err(ImagingError::BufferSize { expected, actual: pixels.len() });
        }
        Ok(Self { id: id.into(), width, height, channels, pixels })
    }

    /// A constant image. Panics on zero dimensions.
    pub fn filled(id: impl Into<String>, width: usize, height: usize, channels: Channels, value: u8) -> Self {
        assert!(width > 0 && height > 0, "image dimensions must be positive");
        let pixels = vec![value; width * height * channels.count()];
        Self { id: id.into(), width, height, channels, pixels }
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn set_id(&mut self, id: impl Into<String>) {
        self.id = id.into();
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let c = self.channels.count();
        let at = (y * self.width + x) * c;
        &self.pixels[at..at + c]
    }

    pub fn put_pixel(&mut self, x: usize, y: usize, value: &[u8]) {
        let c = self.channels.count();
        let at = (y * self.width + x) * c;
        self.pixels[at..at + c].copy_from_slice(value);
    }

    pub fn row(&self, y: usize) -> &[u8] {
        let stride = self.width * self.channels.count();
        &self.pixels[y * stride..(y + 1) * stride]
    }

    /// Left-right mirror image.
    pub fn mirrored_horizontal(&self) -> Image {
        let c = self.channels.count();
        let mut out = self.clone();
        for y in 0..self.height {
            for x in 0..self.width {
                let src = (y * self.width + (self.width - 1 - x)) * c;
                let dst = (y * self.width + x) * c;
                out.pixels[dst..dst + c].copy_from_slice(&self.pixels[src..src + c]);
            }
        }
        out
    }

    /// Rec. 601 luma; Gray8 images are returned unchanged.
    pub fn to_gray(&self) -> Image {
        match self.channels {
            Channels::Gray8 => self.clone(),
            Channels::Rgb8 => {
                let pixels = self
                    .pixels
                    .chunks_exact(3)
                    .map(|p| {
                        let l = 0.299 * f64::from(p[0]) + 0.587 * f64::from(p[1]) + 0.114 * f64::from(p[2]);
                        l.round().clamp(0.0, 255.0) as u8
                    })
                    .collect();
                Image { id: self.id.clone(), width: self.width, height: self.height, channels: Channels::Gray8, pixels }
            }
        }
    }

    /// Per-channel mean in [0, 255].
    pub fn mean_channels(&self) -> Vec<f64> {
        let c = self.channels.count();
        let mut sums = vec![0.0; c];
        for px in self.pixels.chunks_exact(c) {
            for (s, &v) in sums.iter_mut().zip(px) {
                *s += f64::from(v);
            }
        }
        let n = (self.width * self.height) as f64;
        sums.iter().map(|s| s / n).collect()
    }
}
