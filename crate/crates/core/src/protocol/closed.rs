use std::collections::BTreeMap;

use rayon::prelude::*;

use super::engine::Prepared;
use super::{AccuracyReport, EvalConfig, FoldResult, KPolicy, ProtocolError, Setting};
use crate::data::Dataset;
use crate::learn::{ova_predict, ova_train, SvmParams};
use crate::protocol::Trial;
use crate::seed;

/// Per target, the first half (rounded up) of that target's trials in
/// session order go to training and the rest to testing. Returns indices
/// into `trials`.
pub fn split_within(trials: &[&Trial]) -> Result<(Vec<usize>, Vec<usize>), ProtocolError> {
    let mut by_target: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, t) in trials.iter().enumerate() {
        by_target.entry(t.target_id.as_str()).or_default().push(i);
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (target, idx) in by_target {
        if idx.len() < 2 {
            return Err(ProtocolError::InsufficientTrials { target: target.to_string(), count: idx.len() });
        }
        let half = idx.len().div_ceil(2);
        train.extend_from_slice(&idx[..half]);
        test.extend_from_slice(&idx[half..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub(crate) struct Fold {
    pub name: String,
    pub train: Vec<usize>,
    pub test: Vec<usize>,
    /// Held-out part of `train` for validation scoring.
    pub validation: Option<(Vec<usize>, Vec<usize>)>,
}

fn participant_trials(ds: &Dataset, participant: &str) -> Vec<usize> {
    (0..ds.trials.len()).filter(|&i| ds.trials[i].participant == participant).collect()
}

fn within_split(ds: &Dataset, subset: &[usize]) -> Result<(Vec<usize>, Vec<usize>), ProtocolError> {
    let refs: Vec<&Trial> = subset.iter().map(|&i| &ds.trials[i]).collect();
    let (a, b) = split_within(&refs)?;
    Ok((a.into_iter().map(|i| subset[i]).collect(), b.into_iter().map(|i| subset[i]).collect()))
}

pub(crate) fn closed_folds(ds: &Dataset, setting: Setting, validation: bool) -> Result<Vec<Fold>, ProtocolError> {
    let participants = ds.participants();
    let mut folds = Vec::new();
    match setting {
        Setting::ClosedWithin => {
            for p in &participants {
                let (train, test) = within_split(ds, &participant_trials(ds, p))?;
                let validation = if validation { Some(within_split(ds, &train)?) } else { None };
                folds.push(Fold { name: p.clone(), train, test, validation });
            }
        }
        Setting::ClosedCross => {
            if participants.len() != 6 {
                return Err(ProtocolError::WrongParticipantCount { expected: 6, actual: participants.len() });
            }
            for f in 0..3 {
                let group: Vec<&String> = (0..3).map(|i| &participants[(2 * f + i) % 6]).collect();
                let (train, test): (Vec<usize>, Vec<usize>) =
                    (0..ds.trials.len()).partition(|&i| group.contains(&&ds.trials[i].participant));
                let validation = if validation { Some(within_split(ds, &train)?) } else { None };
                let name = group.iter().map(|s| s.as_str()).collect::<Vec<_>>().join("+");
                folds.push(Fold { name, train, test, validation });
            }
        }
        _ => unreachable!("closed setting expected"),
    }
    Ok(folds)
}

/// Trains vocabulary and one-vs-all classifier on `train`; accuracy on `test`.
fn train_and_score(
    prep: &Prepared<'_>,
    train: &[usize],
    test: &[usize],
    cfg: &EvalConfig,
    fold_seed: u64,
) -> Result<f64, ProtocolError> {
    let vocab = prep.train_vocabulary(train, Vec::new(), cfg, fold_seed)?;
    let x = prep.features(train, &vocab, cfg)?;
    let labels: Vec<String> = train.iter().map(|&i| prep.ds.trials[i].target_id.clone()).collect();
    let params = SvmParams::new(cfg.kernel.resolve(vocab.k()), cfg.c).with_tol(cfg.tol).with_seed(fold_seed);
    let model = ova_train(&x, &labels, &params)?;
    let xt = prep.features(test, &vocab, cfg)?;
    let mut correct = 0usize;
    for (row, &i) in xt.iter().zip(test) {
        if ova_predict(&model, row)? == prep.ds.trials[i].target_id {
            correct += 1;
        }
    }
    Ok(correct as f64 / test.len().max(1) as f64)
}

pub(crate) fn closed_eval_prepared(
    prep: &Prepared<'_>,
    cfg: &EvalConfig,
    setting: Setting,
    report_as: Setting,
) -> Result<AccuracyReport, ProtocolError> {
    let folds = closed_folds(prep.ds, setting, cfg.validation)?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(fi, fold)| {
            let fold_seed = seed::derive_labeled(cfg.seed, setting.name(), &[fi as u64]);
            let accuracy = train_and_score(prep, &fold.train, &fold.test, cfg, fold_seed)?;
            let validation_accuracy = match &fold.validation {
                Some((tr, va)) => {
                    let vs = seed::derive_labeled(fold_seed, "validation", &[]);
                    Some(train_and_score(prep, tr, va, cfg, vs)?)
                }
                None => None,
            };
            Ok(FoldResult {
                fold: fold.name.clone(),
                accuracy,
                n_test: fold.test.len(),
                ranking_accuracy: None,
                validation_accuracy,
                k: None,
            })
        })
        .collect::<Result<Vec<_>, ProtocolError>>()?;
    Ok(AccuracyReport::from_folds(prep.ds.task, report_as, KPolicy::Fixed { k: cfg.k }, cfg, results))
}

/// Closed-world accuracy: one-vs-all classifiers over the five targets,
/// with vocabularies trained only on each fold's training fixations.
pub fn closed_world_eval(ds: &Dataset, cfg: &EvalConfig, setting: Setting) -> Result<AccuracyReport, ProtocolError> {
    cfg.check().map_err(ProtocolError::InvalidConfig)?;
    if !matches!(setting, Setting::ClosedWithin | Setting::ClosedCross) {
        return Err(ProtocolError::InvalidConfig(format!("{setting} is not a closed-world setting")));
    }
    let prep = Prepared::new(ds)?;
    closed_eval_prepared(&prep, cfg, setting, setting)
}
