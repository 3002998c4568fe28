//! Evaluation protocols: closed-world classification within and across
//! participants, open-world compatibility learning, the random-fixation
//! control, parameter sweeps and reporting.

mod closed;
mod config;
mod control;
mod engine;
mod open;
mod report;
mod stats;
mod sweep;
mod trial;

pub use self::closed::{closed_world_eval, split_within};
pub use self::config::{EvalConfig, KernelChoice, Setting};
pub use self::control::{control_dataset, control_experiment, CollageSaliency};
pub use self::engine::dataset_vocabulary;
pub use self::open::{
    build_compatibility_set, open_world_eval, open_world_predict, stack, target_splits, CompatibilitySample,
    TargetSplit, TrialFeatures, OPEN_TRAIN_TARGETS,
};
pub use self::report::{mean_std, reports_to_csv, summary_to_csv, AccuracyReport, FoldResult, KPolicy, CSV_HEADER};
pub use self::stats::{fixation_stats, FixationStats, FixationSummary};
pub use self::sweep::{average_k, cell_seed, run_setting, sampling_win_rate, sweep, SweepGrid, SweepResult, AVERAGE_K};
pub use self::trial::{Fixation, Task, Trial};

use thiserror::Error;

use crate::data::DataError;
use crate::features::FeatureError;
use crate::imaging::ImagingError;
use crate::learn::SvmError;
use crate::saliency::SaliencyError;

#[derive(Debug, Error)]
pub enum ProtocolError {
    #[error("target `{target}` has {count} trial(s); at least 2 are needed")]
    InsufficientTrials { target: String, count: usize },
    #[error("setting needs exactly {expected} participants, dataset has {actual}")]
    WrongParticipantCount { expected: usize, actual: usize },
    #[error("open-world evaluation needs at least {needed} targets, dataset has {actual}")]
    TooFewTargets { needed: usize, actual: usize },
    #[error("query `{0}` is unknown")]
    UnknownQuery(String),
    #[error("no candidates to rank")]
    EmptyCandidates,
    #[error("sweep grid is empty")]
    EmptyGrid,
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Saliency(#[from] SaliencyError),
    #[error(transparent)]
    Svm(#[from] SvmError),
    #[error(transparent)]
    Data(#[from] DataError),
}
