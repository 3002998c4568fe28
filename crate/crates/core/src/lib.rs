//! Predicting the target of a visual search from the fixations a searcher
//! makes on an image collage.

pub mod data;
pub mod features;
pub mod imaging;
pub mod learn;
pub mod protocol;
pub mod saliency;
pub mod seed;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Imaging(#[from] imaging::ImagingError),
    #[error(transparent)]
    Features(#[from] features::FeatureError),
    #[error(transparent)]
    Saliency(#[from] saliency::SaliencyError),
    #[error(transparent)]
    Svm(#[from] learn::SvmError),
    #[error(transparent)]
    Data(#[from] data::DataError),
    #[error(transparent)]
    Protocol(#[from] protocol::ProtocolError),
}

const WRAPPERS: [&str; 7] = ["Imaging", "Features", "Saliency", "Svm", "Data", "Protocol", "Error"];

impl Error {
    /// Name of the innermost error variant, e.g. `TooFewTargets`.
    pub fn kind(&self) -> String {
        let debug = format!("{self:?}");
        let mut rest = debug.as_str();
        loop {
            let end = rest.find(|c: char| !c.is_alphanumeric() && c != '_').unwrap_or(rest.len());
            let (ident, tail) = rest.split_at(end);
            match tail.strip_prefix('(') {
                Some(inner) if WRAPPERS.contains(&ident) => rest = inner,
                _ => return ident.to_string(),
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kind_names_innermost_variant() {
        let e: Error = protocol::ProtocolError::TooFewTargets { needed: 5, actual: 4 }.into();
        assert_eq!(e.kind(), "TooFewTargets");
        let e: Error = protocol::ProtocolError::Imaging(imaging::ImagingError::EvenWindow(4)).into();
        assert_eq!(e.kind(), "EvenWindow");
        let e: Error = protocol::ProtocolError::EmptyGrid.into();
        assert_eq!(e.kind(), "EmptyGrid");
    }
}
