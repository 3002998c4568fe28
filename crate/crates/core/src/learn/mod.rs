//! Kernel SVMs: a binary soft-margin classifier trained by sequential minimal
//! optimization, and a one-vs-all wrapper on top of it.

mod cache;
mod kernel;
mod ova;
mod smo;

pub use self::kernel::KernelSpec;
pub use self::ova::{argmax_first, ova_margins, ova_predict, ova_train, OvaModel};
pub use self::smo::{
    dual_objective, max_kkt_violation, svm_decision, svm_train, svm_train_full, SvmFit, SvmModel, SvmParams, TrainMeta,
    MODEL_VERSION,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum SvmError {
    #[error("training labels contain a single class")]
    DegenerateLabels,
    #[error("training data contains non-finite values")]
    NonFiniteInput,
    #[error("need at least two samples, got {0}")]
    TooFewSamples(usize),
    #[error("{rows} rows but {labels} labels")]
    LabelCount { rows: usize, labels: usize },
    #[error("labels must be -1 or +1, got {0}")]
    BadLabel(i8),
    #[error("input has dimension {actual}, model expects {expected}")]
    DimMismatch { expected: usize, actual: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("one-vs-all needs at least two classes")]
    SingleClass,
    #[error("model file: {0}")]
    Format(String),
}
