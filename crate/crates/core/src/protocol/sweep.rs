use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::control::CollageSaliency;
use super::{
    closed_world_eval, control_experiment, open_world_eval, AccuracyReport, EvalConfig, FoldResult, KPolicy,
    ProtocolError, Setting,
};
use crate::data::Dataset;
use crate::seed;

/// The vocabulary size the "average k" policy fixes.
pub const AVERAGE_K: usize = 60;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    pub ms: Vec<usize>,
    pub ks: Vec<usize>,
    pub sampling: Vec<bool>,
}

impl SweepGrid {
    pub fn cells(&self) -> Vec<(usize, usize, bool)> {
        let mut ms = self.ms.clone();
        let mut ks = self.ks.clone();
        let mut ss = self.sampling.clone();
        ms.sort_unstable();
        ms.dedup();
        ks.sort_unstable();
        ks.dedup();
        ss.sort_unstable();
        ss.dedup();
        let mut out = Vec::new();
        for &m in &ms {
            for &s in &ss {
                for &k in &ks {
                    out.push((m, k, s));
                }
            }
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub cells: Vec<AccuracyReport>,
    pub summaries: Vec<AccuracyReport>,
}

pub fn cell_seed(base: u64, m: usize, k: usize, sampling_on: bool) -> u64 {
    seed::derive_labeled(base, "sweep-cell", &[m as u64, k as u64, u64::from(sampling_on)])
}

/// Runs one setting on one configuration.
pub fn run_setting(
    ds: &Dataset,
    cfg: &EvalConfig,
    setting: Setting,
    saliency: Option<&CollageSaliency>,
) -> Result<AccuracyReport, ProtocolError> {
    match setting {
        Setting::ClosedWithin | Setting::ClosedCross => closed_world_eval(ds, cfg, setting),
        Setting::OpenWithin | Setting::OpenCross => open_world_eval(ds, cfg, setting),
        Setting::Control => control_experiment(ds, cfg, saliency),
    }
}

/// Nearest grid k to [`AVERAGE_K`], the smaller on ties.
pub fn average_k(ks: &[usize]) -> Option<usize> {
    ks.iter().copied().min_by_key(|&k| (k.abs_diff(AVERAGE_K), k))
}

fn summarize(group: &[&AccuracyReport], base: &EvalConfig) -> Vec<AccuracyReport> {
    let ks: Vec<usize> = group.iter().map(|r| r.config.k).collect();
    let first = group[0];
    let n_folds = first.per_fold.len();
    let pick = |choose: &dyn Fn(usize) -> usize| -> Vec<FoldResult> {
        (0..n_folds)
            .map(|f| {
                let r = group[choose(f)];
                FoldResult { k: Some(r.config.k), ..r.per_fold[f].clone() }
            })
            .collect()
    };
    let by = |f: usize, better: &dyn Fn(f64, f64) -> bool, key: &dyn Fn(&FoldResult) -> f64| -> usize {
        let mut best = 0;
        for i in 1..group.len() {
            if better(key(&group[i].per_fold[f]), key(&group[best].per_fold[f])) {
                best = i;
            }
        }
        best
    };
    let acc = |fr: &FoldResult| fr.accuracy;
    let mut cfg = base.clone();
    cfg.m = first.window_m;
    cfg.sampling_on = first.sampling_on;
    let make = |policy: KPolicy, folds: Vec<FoldResult>| {
        let mut r = AccuracyReport::from_folds(first.task, first.setting, policy, &cfg, folds);
        r.config.k = 0;
        r
    };
    let mut out = vec![make(KPolicy::Min { ks: ks.clone() }, pick(&|f| by(f, &|a, b| a < b, &acc)))];
    let avg = average_k(&ks).expect("non-empty group");
    let avg_i = ks.iter().position(|&k| k == avg).expect("k from group");
    out.push(make(KPolicy::Average { k: avg }, pick(&|_| avg_i)));
    out.push(make(KPolicy::Optimum { ks: ks.clone() }, pick(&|f| by(f, &|a, b| a > b, &acc))));
    if first.per_fold.iter().all(|f| f.validation_accuracy.is_some()) {
        let val = |fr: &FoldResult| fr.validation_accuracy.unwrap_or(f64::NEG_INFINITY);
        out.push(make(KPolicy::Validated { ks }, pick(&|f| by(f, &|a, b| a > b, &val))));
    }
    out
}

/// Every (m, k, sampling) cell of the grid, plus Min / Average / Optimum-k
/// summaries per window size and sampling mode. Cells are independent and
/// seeded from their key, so results do not depend on execution order.
pub fn sweep(
    ds: &Dataset,
    grid: &SweepGrid,
    setting: Setting,
    base: &EvalConfig,
) -> Result<SweepResult, ProtocolError> {
    let cells = grid.cells();
    if cells.is_empty() {
        return Err(ProtocolError::EmptyGrid);
    }
    let saliency = if setting == Setting::Control { Some(CollageSaliency::compute(ds)?) } else { None };
    let reports = cells
        .par_iter()
        .map(|&(m, k, s)| {
            let cfg = EvalConfig { m, k, sampling_on: s, seed: cell_seed(base.seed, m, k, s), ..base.clone() };
            run_setting(ds, &cfg, setting, saliency.as_ref())
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut groups: BTreeMap<(usize, bool), Vec<&AccuracyReport>> = BTreeMap::new();
    for r in &reports {
        groups.entry((r.window_m, r.sampling_on)).or_default().push(r);
    }
    let summaries = groups.values().flat_map(|g| summarize(g, base)).collect();
    Ok(SweepResult { cells: reports, summaries })
}

/// Fraction of (m, k) cells where sampling on scores at least as well as off.
pub fn sampling_win_rate(result: &SweepResult) -> Option<f64> {
    let mut on = BTreeMap::new();
    let mut off = BTreeMap::new();
    for r in &result.cells {
        let key = (r.window_m, r.config.k);
        if r.sampling_on {
            on.insert(key, r.mean_accuracy);
        } else {
            off.insert(key, r.mean_accuracy);
        }
    }
    let paired: Vec<bool> = on.iter().filter_map(|(key, a)| off.get(key).map(|b| a >= b)).collect();
    (!paired.is_empty()).then(|| paired.iter().filter(|&&w| w).count() as f64 / paired.len() as f64)
}
