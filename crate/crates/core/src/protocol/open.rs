use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;

use super::engine::Prepared;
use super::{AccuracyReport, EvalConfig, FoldResult, KPolicy, ProtocolError, Setting};
use crate::data::Dataset;
use crate::learn::{argmax_first, svm_decision, svm_train, SvmModel, SvmParams};
use crate::seed;

pub const OPEN_TRAIN_TARGETS: usize = 3;
const MIN_TARGETS: usize = 5;

/// Fixation-side classifier input of one trial.
#[derive(Clone, Debug)]
pub struct TrialFeatures {
    pub trial: usize,
    pub target_id: String,
    pub features: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct CompatibilitySample {
    /// Fixation features followed by query features.
    pub features: Vec<f64>,
    pub label: u8,
    pub trial_ref: usize,
    pub query_ref: String,
}

pub fn stack(fix: &[f64], query: &[f64]) -> Vec<f64> {
    let mut v = Vec::with_capacity(fix.len() + query.len());
    v.extend_from_slice(fix);
    v.extend_from_slice(query);
    v
}

/// Pairs every trial with every query; label 1 exactly when the query is
/// the trial's target. `query_features(trial, query)` supplies the query side.
pub fn build_compatibility_set<F>(
    trials: &[TrialFeatures],
    queries: &[String],
    mut query_features: F,
) -> Result<Vec<CompatibilitySample>, ProtocolError>
where
    F: FnMut(usize, &str) -> Result<Vec<f64>, ProtocolError>,
{
    let mut out = Vec::with_capacity(trials.len() * queries.len());
    for t in trials {
        if !queries.contains(&t.target_id) {
            return Err(ProtocolError::UnknownQuery(t.target_id.clone()));
        }
        for q in queries {
            let qf = query_features(t.trial, q)?;
            out.push(CompatibilitySample {
                features: stack(&t.features, &qf),
                label: u8::from(*q == t.target_id),
                trial_ref: t.trial,
                query_ref: q.clone(),
            });
        }
    }
    Ok(out)
}

/// The candidate whose stacked vector gets the largest decision value;
/// ties go to the earliest candidate.
pub fn open_world_predict<'a>(
    model: &SvmModel,
    fixation_features: &[f64],
    candidates: &'a [(String, Vec<f64>)],
) -> Result<&'a str, ProtocolError> {
    if candidates.is_empty() {
        return Err(ProtocolError::EmptyCandidates);
    }
    let scores = candidates
        .iter()
        .map(|(_, q)| svm_decision(model, &stack(fixation_features, q)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(&candidates[argmax_first(&scores).expect("non-empty")].0)
}

/// Training targets and the complementary test targets.
pub type TargetSplit = (Vec<String>, Vec<String>);

/// All train-target subsets of size three, in lexicographic order, each
/// with its complementary test targets.
pub fn target_splits(queries: &[String]) -> Result<Vec<TargetSplit>, ProtocolError> {
    let mut sorted = queries.to_vec();
    sorted.sort();
    sorted.dedup();
    if sorted.len() < MIN_TARGETS {
        return Err(ProtocolError::TooFewTargets { needed: MIN_TARGETS, actual: sorted.len() });
    }
    let n = sorted.len();
    let mut out = Vec::new();
    for a in 0..n {
        for b in a + 1..n {
            for c in b + 1..n {
                let train = vec![sorted[a].clone(), sorted[b].clone(), sorted[c].clone()];
                let test: Vec<String> = sorted.iter().filter(|q| !train.contains(q)).cloned().collect();
                out.push((train, test));
            }
        }
    }
    Ok(out)
}

struct OpenFold {
    name: String,
    train_trials: Vec<usize>,
    test_trials: Vec<usize>,
    train_queries: Vec<String>,
    test_queries: Vec<String>,
}

fn open_folds(ds: &Dataset, setting: Setting) -> Result<Vec<OpenFold>, ProtocolError> {
    let splits = target_splits(&ds.queries)?;
    let participants = ds.participants();
    let groups: Vec<(String, Vec<String>, Vec<String>)> = match setting {
        Setting::OpenWithin => participants.iter().map(|p| (p.clone(), vec![p.clone()], vec![p.clone()])).collect(),
        Setting::OpenCross => {
            if participants.len() != 6 {
                return Err(ProtocolError::WrongParticipantCount { expected: 6, actual: participants.len() });
            }
            let (a, b) = participants.split_at(3);
            vec![(format!("{}>{}", a.join("+"), b.join("+")), a.to_vec(), b.to_vec())]
        }
        _ => unreachable!("open setting expected"),
    };
    let mut folds = Vec::new();
    for (gname, train_p, test_p) in &groups {
        for (train_q, test_q) in &splits {
            assert!(train_q.iter().all(|q| !test_q.contains(q)), "train and test targets must be disjoint");
            let pick = |ps: &[String], qs: &[String]| -> Vec<usize> {
                (0..ds.trials.len())
                    .filter(|&i| ps.contains(&ds.trials[i].participant) && qs.contains(&ds.trials[i].target_id))
                    .collect()
            };
            folds.push(OpenFold {
                name: format!("{gname}/{}", train_q.join("+")),
                train_trials: pick(train_p, train_q),
                test_trials: pick(test_p, test_q),
                train_queries: train_q.clone(),
                test_queries: test_q.clone(),
            });
        }
    }
    Ok(folds)
}

fn run_fold(
    prep: &Prepared<'_>,
    fold: &OpenFold,
    cfg: &EvalConfig,
    fold_seed: u64,
) -> Result<FoldResult, ProtocolError> {
    if fold.train_trials.is_empty() || fold.test_trials.is_empty() {
        return Err(ProtocolError::InsufficientTrials { target: fold.name.clone(), count: 0 });
    }
    let extra = prep.query_descriptors(&fold.train_queries, cfg, fold_seed)?;
    let vocab = prep.train_vocabulary(&fold.train_trials, extra, cfg, fold_seed)?;
    let ds = prep.ds;
    let mean_fix = fold.train_trials.iter().map(|&i| ds.trials[i].fixations.len()).sum::<usize>() as f64
        / fold.train_trials.len() as f64;
    let n_samples = cfg.query_samples.unwrap_or((mean_fix.round() as usize).max(1));

    let all: Vec<usize> = fold.train_trials.iter().chain(&fold.test_trials).copied().collect();
    let fix = prep.features(&all, &vocab, cfg)?;
    let fix: HashMap<usize, Vec<f64>> = all.iter().copied().zip(fix).collect();

    let pairs: Vec<(usize, &String)> = fold
        .train_trials
        .iter()
        .flat_map(|&t| fold.train_queries.iter().map(move |q| (t, q)))
        .chain(fold.test_trials.iter().flat_map(|&t| fold.test_queries.iter().map(move |q| (t, q))))
        .collect();
    let qf = pairs
        .par_iter()
        .map(|&(t, q)| prep.query_features(t, q, n_samples, &vocab, cfg))
        .collect::<Result<Vec<_>, _>>()?;
    let qf: HashMap<(usize, &str), Vec<f64>> = pairs.iter().map(|&(t, q)| (t, q.as_str())).zip(qf).collect();

    let train_tf: Vec<TrialFeatures> = fold
        .train_trials
        .iter()
        .map(|&t| TrialFeatures { trial: t, target_id: ds.trials[t].target_id.clone(), features: fix[&t].clone() })
        .collect();
    let samples = build_compatibility_set(&train_tf, &fold.train_queries, |t, q| Ok(qf[&(t, q)].clone()))?;
    let x: Vec<Vec<f64>> = samples.iter().map(|s| s.features.clone()).collect();
    let y: Vec<i8> = samples.iter().map(|s| if s.label == 1 { 1 } else { -1 }).collect();
    let params = SvmParams::new(cfg.kernel.resolve(2 * vocab.k()), cfg.c).with_tol(cfg.tol).with_seed(fold_seed);
    let model = svm_train(&x, &y, &params)?;

    // Per test participant: pairwise target-vs-nontarget decisions and argmax ranking.
    let mut per_participant: BTreeMap<&str, (usize, usize, usize, usize)> = BTreeMap::new();
    for &t in &fold.test_trials {
        let trial = &ds.trials[t];
        let candidates: Vec<(String, Vec<f64>)> =
            fold.test_queries.iter().map(|q| (q.clone(), qf[&(t, q.as_str())].clone())).collect();
        let entry = per_participant.entry(trial.participant.as_str()).or_default();
        for (q, qv) in &candidates {
            let d = svm_decision(&model, &stack(&fix[&t], qv))?;
            entry.0 += usize::from((d > 0.0) == (*q == trial.target_id));
            entry.1 += 1;
        }
        entry.2 += usize::from(open_world_predict(&model, &fix[&t], &candidates)? == trial.target_id);
        entry.3 += 1;
    }
    let n = per_participant.len() as f64;
    let pair = per_participant.values().map(|e| e.0 as f64 / e.1 as f64).sum::<f64>() / n;
    let rank = per_participant.values().map(|e| e.2 as f64 / e.3 as f64).sum::<f64>() / n;
    Ok(FoldResult {
        fold: fold.name.clone(),
        accuracy: pair,
        n_test: fold.test_trials.len(),
        ranking_accuracy: Some(rank),
        validation_accuracy: None,
        k: None,
    })
}

/// Open-world accuracy of the compatibility classifier on targets never
/// seen in training, over every three-target training split.
pub fn open_world_eval(ds: &Dataset, cfg: &EvalConfig, setting: Setting) -> Result<AccuracyReport, ProtocolError> {
    cfg.check().map_err(ProtocolError::InvalidConfig)?;
    if !setting.is_open() {
        return Err(ProtocolError::InvalidConfig(format!("{setting} is not an open-world setting")));
    }
    let folds = open_folds(ds, setting)?;
    let prep = Prepared::new(ds)?.with_query_maps()?;
    let results = folds
        .par_iter()
        .enumerate()
        .map(|(fi, fold)| run_fold(&prep, fold, cfg, seed::derive_labeled(cfg.seed, setting.name(), &[fi as u64])))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(AccuracyReport::from_folds(ds.task, setting, KPolicy::Fixed { k: cfg.k }, cfg, results))
}
