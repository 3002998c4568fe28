use super::vocabulary::nearest;
use super::{BowHistogram, FeatureError, Vocabulary};
use crate::imaging::{
    describe, extract_patch, fixation_patches_from, ring_center, CanvasSource, CollageLayout, DescriptorKind,
};

/// Address of one sampled patch: fixation index and ring position (0 = center).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct PatchRef {
    pub fixation: usize,
    pub neighbor: u8,
}

/// Descriptors of the patches around each fixation, in fixation order, with
/// the eight ring patches following each center when `sampling_on`.
pub fn fixation_descriptors<S: CanvasSource + ?Sized>(
    layout: &CollageLayout,
    source: &S,
    fixations: &[(f64, f64)],
    m: usize,
    sampling_on: bool,
    kind: DescriptorKind,
) -> Result<Vec<Vec<f32>>, FeatureError> {
    let mut out = Vec::with_capacity(fixations.len() * if sampling_on { 9 } else { 1 });
    for &f in fixations {
        for patch in fixation_patches_from(layout, source, f, m, sampling_on)? {
            out.push(describe(&patch, kind)?);
        }
    }
    Ok(out)
}

/// Descriptor of a single addressed patch.
pub fn patch_descriptor<S: CanvasSource + ?Sized>(
    layout: &CollageLayout,
    source: &S,
    fixation: (f64, f64),
    neighbor: u8,
    m: usize,
    kind: DescriptorKind,
) -> Result<Vec<f32>, FeatureError> {
    if neighbor > 8 {
        return Err(FeatureError::Format(format!("ring position {neighbor} out of range")));
    }
    let center = ring_center(layout, fixation, neighbor, m)?;
    Ok(describe(&extract_patch(layout, source, center, m)?, kind)?)
}

/// Bag-of-words histogram of all patches sampled around a trial's fixations.
pub fn featurize_trial<S: CanvasSource + ?Sized>(
    layout: &CollageLayout,
    source: &S,
    fixations: &[(f64, f64)],
    vocab: &Vocabulary,
    m: usize,
    sampling_on: bool,
) -> Result<BowHistogram, FeatureError> {
    let kind = vocab.descriptor_kind();
    if kind.channels() != source.channels() {
        return Err(FeatureError::KindMismatch {
            vocab: kind,
            task: if source.channels().count() == 1 { DescriptorKind::Lbp } else { DescriptorKind::Rgb },
        });
    }
    let mut hist = BowHistogram::zeros(vocab.k());
    for &f in fixations {
        for patch in fixation_patches_from(layout, source, f, m, sampling_on)? {
            let d = describe(&patch, kind)?;
            if d.len() != vocab.dim() {
                return Err(FeatureError::DimMismatch { expected: vocab.dim(), actual: d.len() });
            }
            hist.add_word(nearest(vocab.flat(), vocab.dim(), &d).0);
        }
    }
    Ok(hist)
}
