use rayon::prelude::*;

use super::closed::closed_eval_prepared;
use super::engine::Prepared;
use super::{AccuracyReport, EvalConfig, Fixation, ProtocolError, Setting};
use crate::data::Dataset;
use crate::imaging::render_collage;
use crate::saliency::{gbvs, sample_points, SaliencyMap, SamplingMode};
use crate::seed;

/// Saliency map of every trial's rendered collage, in trial order.
#[derive(Clone, Debug)]
pub struct CollageSaliency {
    pub maps: Vec<SaliencyMap>,
}

impl CollageSaliency {
    pub fn compute(ds: &Dataset) -> Result<Self, ProtocolError> {
        let maps = ds
            .trials
            .par_iter()
            .map(|t| {
                let layout = ds.layout(t)?;
                let canvas = render_collage(&layout, &ds.pool)?;
                Ok(gbvs(&canvas)?)
            })
            .collect::<Result<Vec<_>, ProtocolError>>()?;
        Ok(Self { maps })
    }
}

/// Copy of `ds` whose fixation positions are drawn uniformly from the top
/// `fraction` of each collage's saliency mass. Counts, durations and onsets
/// are kept.
pub fn control_dataset(ds: &Dataset, saliency: &CollageSaliency, fraction: f64, seed: u64) -> Dataset {
    let mut out = ds.clone();
    out.trials.par_iter_mut().zip(&saliency.maps).enumerate().for_each(|(i, (trial, map))| {
        let s = seed::derive_labeled(seed, "control", &[i as u64]);
        let samples = sample_points(map, trial.fixations.len(), SamplingMode::TopMassUniform(fraction), s);
        trial.fixations = trial
            .fixations
            .iter()
            .zip(&samples.points)
            .map(|(f, &(x, y))| Fixation { x, y, dur_ms: f.dur_ms, t_ms: f.t_ms })
            .collect();
        trial.found = false;
    });
    out
}

/// Closed-world evaluation on fixations replaced by salient-region samples.
/// Pass precomputed maps to reuse them across seeds.
pub fn control_experiment(
    ds: &Dataset,
    cfg: &EvalConfig,
    saliency: Option<&CollageSaliency>,
) -> Result<AccuracyReport, ProtocolError> {
    cfg.check().map_err(ProtocolError::InvalidConfig)?;
    let owned;
    let saliency = match saliency {
        Some(s) => s,
        None => {
            owned = CollageSaliency::compute(ds)?;
            &owned
        }
    };
    if saliency.maps.len() != ds.trials.len() {
        return Err(ProtocolError::InvalidConfig("saliency maps do not match the trials".into()));
    }
    let replaced = control_dataset(ds, saliency, cfg.control_fraction, cfg.seed);
    let prep = Prepared::new(&replaced)?;
    closed_eval_prepared(&prep, cfg, cfg.control_base, Setting::Control)
}
