//! Graph-based visual saliency and saliency-driven point sampling.

mod gbvs;
mod markov;
mod plane;
mod sampling;

pub use self::gbvs::{gbvs, gbvs_traced, query_bow, query_bow_with_map, ChainReport, SaliencyMap, GBVS_EPSILON};
pub use self::markov::MarkovChain;
pub use self::plane::{resample, Plane};
pub use self::sampling::{sample_points, top_mass_region, SampleSet, SamplingMode};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SaliencyError {
    #[error("image {width}x{height} is smaller than the 16x16 minimum")]
    ImageTooSmall { width: usize, height: usize },
    #[error("need at least one sample for a query histogram")]
    NoSamples,
    #[error(transparent)]
    Imaging(#[from] crate::imaging::ImagingError),
    #[error(transparent)]
    Features(#[from] crate::features::FeatureError),
}
