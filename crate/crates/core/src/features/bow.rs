use serde::{Deserialize, Serialize};

use super::{assign_word, FeatureError, Vocabulary};

/// Word counts over a vocabulary.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BowHistogram {
    counts: Vec<u32>,
    total: u64,
}

impl BowHistogram {
    pub fn zeros(k: usize) -> Self {
        Self { counts: vec![0; k], total: 0 }
    }

    pub fn from_counts(counts: Vec<u32>) -> Self {
        let total = counts.iter().map(|&c| u64::from(c)).sum();
        Self { counts, total }
    }

    pub fn add_word(&mut self, word: usize) {
        self.counts[word] += 1;
        self.total += 1;
    }

    pub fn merge(&mut self, other: &BowHistogram) {
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += b;
        }
        self.total += other.total;
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn k(&self) -> usize {
        self.counts.len()
    }

    /// Counts divided by the total; all zeros for an empty histogram.
    pub fn normalized(&self) -> Vec<f64> {
        if self.total == 0 {
            return vec![0.0; self.counts.len()];
        }
        let t = self.total as f64;
        self.counts.iter().map(|&c| f64::from(c) / t).collect()
    }

    /// Classifier input: normalized frequencies, or raw counts.
    pub fn features(&self, normalize: bool) -> Vec<f64> {
        if normalize {
            self.normalized()
        } else {
            self.counts.iter().map(|&c| f64::from(c)).collect()
        }
    }
}

pub fn encode_bow<I, D>(descriptors: I, vocab: &Vocabulary) -> Result<BowHistogram, FeatureError>
where
    I: IntoIterator<Item = D>,
    D: AsRef<[f32]>,
{
    let mut hist = BowHistogram::zeros(vocab.k());
    for d in descriptors {
        hist.add_word(assign_word(d.as_ref(), vocab)?);
    }
    Ok(hist)
}
