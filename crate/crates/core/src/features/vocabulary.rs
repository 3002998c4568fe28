use serde::{Deserialize, Serialize};

use super::FeatureError;
use crate::imaging::DescriptorKind;

/// Row-major set of equal-length descriptors.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DescriptorSet {
    dim: usize,
    data: Vec<f32>,
}

impl DescriptorSet {
    pub fn new(dim: usize) -> Self {
        Self { dim, data: Vec::new() }
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self, FeatureError> {
        let dim = rows.first().map(|r| r.as_ref().len()).ok_or(FeatureError::EmptyInput)?;
        let mut set = Self::new(dim);
        for r in rows {
            set.push(r.as_ref())?;
        }
        Ok(set)
    }

    pub fn push(&mut self, row: &[f32]) -> Result<(), FeatureError> {
        if row.len() != self.dim {
            return Err(FeatureError::DimMismatch { expected: self.dim, actual: row.len() });
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f32]> {
        self.data.chunks_exact(self.dim.max(1))
    }
}

/// Squared Euclidean distance, accumulated in eight independent lanes.
pub fn squared_distance(a: &[f32], b: &[f32]) -> f32 {
    debug_assert_eq!(a.len(), b.len());
    let mut acc = [0.0f32; 8];
    let mut ca = a.chunks_exact(8);
    let mut cb = b.chunks_exact(8);
    for (x, y) in (&mut ca).zip(&mut cb) {
        for l in 0..8 {
            let d = x[l] - y[l];
            acc[l] += d * d;
        }
    }
    let mut tail = 0.0f32;
    for (x, y) in ca.remainder().iter().zip(cb.remainder()) {
        let d = x - y;
        tail += d * d;
    }
    acc.iter().sum::<f32>() + tail
}

/// Distance that gives up once the running sum exceeds `bound`. Returns
/// `None` when abandoned.
fn bounded_distance(a: &[f32], b: &[f32], bound: f32) -> Option<f32> {
    const BLOCK: usize = 512;
    let mut total = 0.0f32;
    for (x, y) in a.chunks(BLOCK).zip(b.chunks(BLOCK)) {
        total += squared_distance(x, y);
        if total > bound {
            return None;
        }
    }
    Some(total)
}

/// Index and squared distance of the nearest row of `centroids` (flat, `k x dim`).
/// Ties go to the lowest index.
pub(crate) fn nearest(centroids: &[f32], dim: usize, x: &[f32]) -> (usize, f32) {
    let mut best = (0usize, f32::INFINITY);
    for (j, c) in centroids.chunks_exact(dim).enumerate() {
        if let Some(d) = bounded_distance(x, c, best.1) {
            if d < best.1 {
                best = (j, d);
            }
        }
    }
    best
}

/// The k centroids of a visual vocabulary.
#[derive(Clone, Debug, PartialEq)]
pub struct Vocabulary {
    k: usize,
    dim: usize,
    centroids: Vec<f32>,
    descriptor_kind: DescriptorKind,
    train_seed: u64,
}

const VOCAB_FORMAT: u32 = 1;

#[derive(Serialize, Deserialize)]
struct VocabularyFile {
    version: u32,
    descriptor_kind: DescriptorKind,
    k: usize,
    dim: usize,
    seed: u64,
    centroids: Vec<Vec<f32>>,
}

impl Vocabulary {
    pub fn from_centroids(
        centroids: &DescriptorSet,
        descriptor_kind: DescriptorKind,
        train_seed: u64,
    ) -> Result<Self, FeatureError> {
        if centroids.is_empty() {
            return Err(FeatureError::ZeroK);
        }
        if centroids.data.iter().any(|v| !v.is_finite()) {
            return Err(FeatureError::NonFinite);
        }
        Ok(Self {
            k: centroids.len(),
            dim: centroids.dim(),
            centroids: centroids.data.clone(),
            descriptor_kind,
            train_seed,
        })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn descriptor_kind(&self) -> DescriptorKind {
        self.descriptor_kind
    }

    pub fn train_seed(&self) -> u64 {
        self.train_seed
    }

    pub fn centroid(&self, i: usize) -> &[f32] {
        &self.centroids[i * self.dim..(i + 1) * self.dim]
    }

    pub(crate) fn flat(&self) -> &[f32] {
        &self.centroids
    }

    /// Reorders words so that new word `i` is old word `order[i]`.
    pub fn permuted(&self, order: &[usize]) -> Vocabulary {
        let mut centroids = Vec::with_capacity(self.centroids.len());
        for &o in order {
            centroids.extend_from_slice(self.centroid(o));
        }
        Vocabulary { centroids, ..self.clone() }
    }

    pub fn to_json(&self) -> String {
        let file = VocabularyFile {
            version: VOCAB_FORMAT,
            descriptor_kind: self.descriptor_kind,
            k: self.k,
            dim: self.dim,
            seed: self.train_seed,
            centroids: (0..self.k).map(|i| self.centroid(i).to_vec()).collect(),
        };
        serde_json::to_string(&file).expect("vocabulary serializes")
    }

    pub fn from_json(text: &str) -> Result<Self, FeatureError> {
        let file: VocabularyFile = serde_json::from_str(text).map_err(|e| FeatureError::Format(e.to_string()))?;
        if file.version != VOCAB_FORMAT {
            return Err(FeatureError::Format(format!("unsupported version {}", file.version)));
        }
        if file.centroids.len() != file.k {
            return Err(FeatureError::Format(format!("k = {} but {} centroids", file.k, file.centroids.len())));
        }
        let mut set = DescriptorSet::new(file.dim);
        for c in &file.centroids {
            set.push(c)?;
        }
        Self::from_centroids(&set, file.descriptor_kind, file.seed)
    }
}

/// Nearest word under Euclidean distance; ties go to the lowest index.
pub fn assign_word(descriptor: &[f32], vocab: &Vocabulary) -> Result<usize, FeatureError> {
    if descriptor.len() != vocab.dim {
        return Err(FeatureError::DimMismatch { expected: vocab.dim, actual: descriptor.len() });
    }
    Ok(nearest(&vocab.centroids, vocab.dim, descriptor).0)
}
