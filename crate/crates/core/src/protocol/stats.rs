use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::report::mean_std;
use super::Task;
use crate::data::Dataset;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixationSummary {
    pub participant: String,
    pub task: Task,
    pub n_trials: usize,
    pub mean: f64,
    pub std: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixationStats {
    pub participants: Vec<FixationSummary>,
    /// Pooled over the selected participants; absent when none are selected.
    pub task: Option<FixationSummary>,
}

/// Fixations per trial, per participant and pooled. `filter = Some(ids)`
/// restricts to those participants.
pub fn fixation_stats(ds: &Dataset, filter: Option<&[String]>) -> FixationStats {
    let mut by: BTreeMap<&str, Vec<f64>> = BTreeMap::new();
    for t in &ds.trials {
        if filter.is_some_and(|f| !f.contains(&t.participant)) {
            continue;
        }
        by.entry(t.participant.as_str()).or_default().push(t.fixations.len() as f64);
    }
    let summary = |participant: &str, counts: &[f64]| {
        let (mean, std) = mean_std(counts);
        FixationSummary { participant: participant.to_string(), task: ds.task, n_trials: counts.len(), mean, std }
    };
    let participants: Vec<FixationSummary> = by.iter().map(|(p, c)| summary(p, c)).collect();
    let all: Vec<f64> = by.values().flatten().copied().collect();
    FixationStats { task: (!all.is_empty()).then(|| summary("*", &all)), participants }
}
