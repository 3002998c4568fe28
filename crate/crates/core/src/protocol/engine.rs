//! Shared featurization: collage layouts, vocabulary training on a fold's
//! training patches, and per-trial histograms.

use std::collections::HashMap;

use rand::seq::index;
use rayon::prelude::*;

use super::{EvalConfig, ProtocolError};
use crate::data::Dataset;
use crate::features::{
    featurize_trial, fit_kmeans, patch_descriptor, BowHistogram, DescriptorSet, KMeansOptions, PatchRef, Vocabulary,
};
use crate::imaging::{describe, extract_image_patch, CollageLayout, CollageView, DescriptorKind};
use crate::saliency::{gbvs, query_bow_with_map, sample_points, SaliencyMap, SamplingMode};
use crate::seed;

pub(crate) struct Prepared<'a> {
    pub ds: &'a Dataset,
    pub layouts: Vec<CollageLayout>,
    pub kind: DescriptorKind,
    query_maps: HashMap<String, SaliencyMap>,
}

impl<'a> Prepared<'a> {
    pub fn new(ds: &'a Dataset) -> Result<Self, ProtocolError> {
        let layouts = ds.trials.par_iter().map(|t| ds.layout(t)).collect::<Result<Vec<_>, _>>()?;
        Ok(Self { ds, layouts, kind: ds.task.descriptor_kind(), query_maps: HashMap::new() })
    }

    /// Adds saliency maps of the query images (needed by the open settings).
    pub fn with_query_maps(mut self) -> Result<Self, ProtocolError> {
        let maps = self
            .ds
            .queries
            .par_iter()
            .map(|q| {
                let img = self.ds.image(q).ok_or_else(|| ProtocolError::UnknownQuery(q.clone()))?;
                Ok((q.clone(), gbvs(img)?))
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        self.query_maps = maps.into_iter().collect();
        Ok(self)
    }

    fn patches_per_fixation(cfg: &EvalConfig) -> u8 {
        if cfg.sampling_on {
            9
        } else {
            1
        }
    }

    /// Extra descriptors for the vocabulary: saliency-proportional patches
    /// of each listed query image.
    pub fn query_descriptors(
        &self,
        queries: &[String],
        cfg: &EvalConfig,
        seed: u64,
    ) -> Result<Vec<Vec<f32>>, ProtocolError> {
        let mut out = Vec::new();
        for (qi, q) in queries.iter().enumerate() {
            let img = self.ds.image(q).ok_or_else(|| ProtocolError::UnknownQuery(q.clone()))?;
            let map = self.query_maps.get(q).ok_or_else(|| ProtocolError::UnknownQuery(q.clone()))?;
            let s = seed::derive_labeled(seed, "vocab-query", &[qi as u64, seed::hash_str(q)]);
            let samples = sample_points(map, cfg.query_vocab_samples, SamplingMode::Proportional, s);
            for &(x, y) in &samples.points {
                let patch = extract_image_patch(img, (x.floor() as i64, y.floor() as i64), cfg.m)?;
                out.push(describe(&patch, self.kind)?);
            }
        }
        Ok(out)
    }

    /// Clusters a seeded subsample (at most `vocab_sample_cap`) of the
    /// patches around the given trials' fixations, plus `extra`.
    pub fn train_vocabulary(
        &self,
        trials: &[usize],
        extra: Vec<Vec<f32>>,
        cfg: &EvalConfig,
        seed: u64,
    ) -> Result<Vocabulary, ProtocolError> {
        let per = Self::patches_per_fixation(cfg);
        let refs: Vec<(usize, PatchRef)> = trials
            .iter()
            .flat_map(|&t| {
                (0..self.ds.trials[t].fixations.len())
                    .flat_map(move |f| (0..per).map(move |n| (t, PatchRef { fixation: f, neighbor: n })))
            })
            .collect();
        let take = refs.len().min(cfg.vocab_sample_cap);
        let mut rng = seed::rng(seed::derive_labeled(seed, "vocab-subsample", &[]));
        let mut chosen = index::sample(&mut rng, refs.len(), take).into_vec();
        chosen.sort_unstable();
        let descriptors = chosen
            .par_iter()
            .map(|&i| {
                let (t, r) = refs[i];
                let fx = &self.ds.trials[t].fixations[r.fixation];
                let view = CollageView::new(&self.layouts[t], &self.ds.pool)?;
                Ok(patch_descriptor(&self.layouts[t], &view, (fx.x, fx.y), r.neighbor, cfg.m, self.kind)?)
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        let mut set = DescriptorSet::from_rows(&descriptors)?;
        for d in &extra {
            set.push(d)?;
        }
        let opts = KMeansOptions { max_iter: cfg.kmeans_max_iter, tol: cfg.kmeans_tol };
        let s = seed::derive_labeled(seed, "kmeans", &[]);
        Ok(fit_kmeans(&set, cfg.k, self.kind, s, opts)?.vocabulary)
    }

    pub fn histogram(&self, trial: usize, vocab: &Vocabulary, cfg: &EvalConfig) -> Result<BowHistogram, ProtocolError> {
        let view = CollageView::new(&self.layouts[trial], &self.ds.pool)?;
        let points = self.ds.trials[trial].points();
        Ok(featurize_trial(&self.layouts[trial], &view, &points, vocab, cfg.m, cfg.sampling_on)?)
    }

    /// Classifier inputs for the given trials, in order.
    pub fn features(
        &self,
        trials: &[usize],
        vocab: &Vocabulary,
        cfg: &EvalConfig,
    ) -> Result<Vec<Vec<f64>>, ProtocolError> {
        trials.par_iter().map(|&t| Ok(self.histogram(t, vocab, cfg)?.features(cfg.normalize))).collect()
    }

    /// Bag of words of `n` saliency samples of a query, seeded per (trial, query).
    pub fn query_features(
        &self,
        trial: usize,
        query: &str,
        n: usize,
        vocab: &Vocabulary,
        cfg: &EvalConfig,
    ) -> Result<Vec<f64>, ProtocolError> {
        let img = self.ds.image(query).ok_or_else(|| ProtocolError::UnknownQuery(query.to_string()))?;
        let map = self.query_maps.get(query).ok_or_else(|| ProtocolError::UnknownQuery(query.to_string()))?;
        let s = seed::derive_labeled(cfg.seed, "query-sample", &[trial as u64, seed::hash_str(query)]);
        Ok(query_bow_with_map(img, map, vocab, n, cfg.m, s)?.features(cfg.normalize))
    }
}

/// Vocabulary over the fixation patches of every trial in `ds`.
pub fn dataset_vocabulary(ds: &Dataset, cfg: &EvalConfig) -> Result<Vocabulary, ProtocolError> {
    cfg.check().map_err(ProtocolError::InvalidConfig)?;
    let prep = Prepared::new(ds)?;
    let all: Vec<usize> = (0..ds.trials.len()).collect();
    prep.train_vocabulary(&all, Vec::new(), cfg, seed::derive_labeled(cfg.seed, "dataset-vocab", &[]))
}
