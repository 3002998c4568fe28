//! Visual vocabulary and bag-of-words encoding.

mod bow;
mod featurize;
mod kmeans;
mod vocabulary;

pub use self::bow::{encode_bow, BowHistogram};
pub use self::featurize::{featurize_trial, fixation_descriptors, patch_descriptor, PatchRef};
pub use self::kmeans::{fit_kmeans, train_vocabulary, KMeansFit, KMeansOptions};
pub use self::vocabulary::{assign_word, squared_distance, DescriptorSet, Vocabulary};

use thiserror::Error;

use crate::imaging::{DescriptorKind, ImagingError};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("no descriptors to cluster")]
    EmptyInput,
    #[error("k = {k} exceeds the {distinct} distinct descriptors")]
    TooFewPoints { k: usize, distinct: usize },
    #[error("descriptor has dimension {actual}, vocabulary expects {expected}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("k must be at least 1")]
    ZeroK,
    #[error("vocabulary centroids are not finite")]
    NonFinite,
    #[error("vocabulary file: {0}")]
    Format(String),
    #[error("vocabulary was trained on {vocab:?} descriptors, task uses {task:?}")]
    KindMismatch { vocab: DescriptorKind, task: DescriptorKind },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
}
