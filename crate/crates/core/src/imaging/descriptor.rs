use serde::{Deserialize, Serialize};

use super::{Channels, Image, ImagingError, Patch};

/// Per-patch appearance descriptor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DescriptorKind {
    /// Raw RGB window, `3 m^2` values in [0, 1].
    #[serde(rename = "RGB")]
    Rgb,
    /// 256-bin local binary pattern histogram of a grey window.
    #[serde(rename = "LBP")]
    Lbp,
}

impl DescriptorKind {
    pub fn channels(self) -> Channels {
        match self {
            DescriptorKind::Rgb => Channels::Rgb8,
            DescriptorKind::Lbp => Channels::Gray8,
        }
    }
}

pub fn descriptor_dim(kind: DescriptorKind, m: usize) -> usize {
    match kind {
        DescriptorKind::Rgb => 3 * m * m,
        DescriptorKind::Lbp => 256,
    }
}

pub fn rgb_descriptor(patch: &Patch) -> Result<Vec<f32>, ImagingError> {
    if patch.channels != Channels::Rgb8 {
        return Err(ImagingError::WrongChannels { expected: Channels::Rgb8, actual: patch.channels });
    }
    Ok(patch.pixels.iter().map(|&v| f32::from(v) / 255.0).collect())
}

// Neighbour offsets, bit 0 first: E, NE, N, NW, W, SW, S, SE (y grows downwards).
const LBP_OFFSETS: [(isize, isize); 8] = [(1, 0), (1, -1), (0, -1), (-1, -1), (-1, 0), (-1, 1), (0, 1), (1, 1)];

/// Radius-1 LBP codes of the interior pixels of a `width x height` grey
/// buffer, row-major. A bit is set when the neighbour is at least as bright
/// as the center.
pub fn lbp_codes(pixels: &[u8], width: usize, height: usize) -> Vec<u8> {
    if width < 3 || height < 3 {
        return Vec::new();
    }
    let mut codes = Vec::with_capacity((width - 2) * (height - 2));
    for y in 1..height - 1 {
        for x in 1..width - 1 {
            let center = pixels[y * width + x];
            let mut code = 0u8;
            for (bit, (dx, dy)) in LBP_OFFSETS.iter().enumerate() {
                let nx = (x as isize + dx) as usize;
                let ny = (y as isize + dy) as usize;
                if pixels[ny * width + nx] >= center {
                    code |= 1 << bit;
                }
            }
            codes.push(code);
        }
    }
    codes
}

fn normalized_histogram(codes: &[u8]) -> Vec<f64> {
    let mut hist = vec![0.0; 256];
    for &c in codes {
        hist[c as usize] += 1.0;
    }
    let n = codes.len() as f64;
    if n > 0.0 {
        hist.iter_mut().for_each(|h| *h /= n);
    }
    hist
}

pub fn lbp_descriptor(patch: &Patch) -> Result<Vec<f64>, ImagingError> {
    if patch.channels != Channels::Gray8 {
        return Err(ImagingError::WrongChannels { expected: Channels::Gray8, actual: patch.channels });
    }
    if patch.size < 3 {
        return Err(ImagingError::WindowTooSmall(patch.size));
    }
    Ok(normalized_histogram(&lbp_codes(&patch.pixels, patch.size, patch.size)))
}

/// Whole-image LBP histogram (RGB input is converted to luma first).
pub fn lbp_histogram_of(image: &Image) -> Vec<f64> {
    let gray = image.to_gray();
    normalized_histogram(&lbp_codes(gray.pixels(), gray.width(), gray.height()))
}

/// Descriptor of `patch` as consumed by the vocabulary.
pub fn describe(patch: &Patch, kind: DescriptorKind) -> Result<Vec<f32>, ImagingError> {
    match kind {
        DescriptorKind::Rgb => rgb_descriptor(patch),
        DescriptorKind::Lbp => Ok(lbp_descriptor(patch)?.into_iter().map(|v| v as f32).collect()),
    }
}
