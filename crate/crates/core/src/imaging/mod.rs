//! Images, collage synthesis, fixation patches and low-level descriptors.

mod collage;
mod descriptor;
mod image;
pub mod io;
mod patch;

pub use self::collage::{
    default_grid, plan_collage, render_collage, synthesize_collage, Cell, CollageLayout, CollageView, GridSpec,
    Placement, Rect, DEFAULT_MARGIN,
};
pub use self::descriptor::{
    describe, descriptor_dim, lbp_codes, lbp_descriptor, lbp_histogram_of, rgb_descriptor, DescriptorKind,
};
pub use self::image::{Channels, Image};
pub use self::patch::{extract_fixation_patches, extract_image_patch, extract_patch, CanvasSource, Patch, FILL_VALUE};
pub(crate) use self::patch::{fixation_patches_from, ring_center};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImagingError {
    #[error("grid {rows}x{cols} cannot hold a pool of {pool} images")]
    GridTooSmall { rows: usize, cols: usize, pool: usize },
    #[error("target `{0}` is not in the image pool")]
    UnknownTarget(String),
    #[error("image pool mixes channel types")]
    MixedChannels,
    #[error("image `{0}` differs in size from the rest of the pool")]
    MixedDimensions(String),
    #[error("image pool is empty")]
    EmptyPool,
    #[error("duplicate image id `{0}`")]
    DuplicateId(String),
    #[error("fixation ({x}, {y}) lies outside the {width}x{height} canvas")]
    OutOfCanvas { x: f64, y: f64, width: usize, height: usize },
    #[error("window size {0} is even")]
    EvenWindow(usize),
    #[error("window size {0} is smaller than 3")]
    WindowTooSmall(usize),
    #[error("expected a {expected:?} patch, got {actual:?}")]
    WrongChannels { expected: Channels, actual: Channels },
    #[error("pixel buffer holds {actual} bytes, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("image dimensions must be positive")]
    EmptyImage,
    #[error("layout references image `{0}` missing from the pool")]
    MissingImage(String),
    #[error("png codec: {0}")]
    Codec(#[from] ::image::ImageError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
