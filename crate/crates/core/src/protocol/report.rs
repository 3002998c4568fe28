use serde::{Deserialize, Serialize};

use super::{EvalConfig, Setting, Task};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "policy", rename_all = "lowercase")]
pub enum KPolicy {
    /// A single vocabulary size.
    Fixed { k: usize },
    /// Per fold, the worst k of the sweep.
    Min { ks: Vec<usize> },
    /// The sweep's k closest to 60.
    Average { k: usize },
    /// Per fold, the best k of the sweep.
    Optimum { ks: Vec<usize> },
    /// Per fold, the k with the best validation accuracy.
    Validated { ks: Vec<usize> },
}

impl KPolicy {
    pub fn label(&self) -> String {
        match self {
            KPolicy::Fixed { k } => k.to_string(),
            KPolicy::Min { .. } => "min".into(),
            KPolicy::Average { k } => format!("avg{k}"),
            KPolicy::Optimum { .. } => "opt".into(),
            KPolicy::Validated { .. } => "val".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FoldResult {
    pub fold: String,
    pub accuracy: f64,
    pub n_test: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking_accuracy: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub validation_accuracy: Option<f64>,
    /// Vocabulary size the fold's value came from (summaries only).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AccuracyReport {
    pub task: Task,
    pub setting: Setting,
    pub window_m: usize,
    pub k_policy: KPolicy,
    pub sampling_on: bool,
    pub mean_accuracy: f64,
    pub std_accuracy: f64,
    pub chance: f64,
    /// Argmax-over-candidates accuracy for the open settings.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ranking_accuracy: Option<f64>,
    pub n_test: usize,
    pub per_fold: Vec<FoldResult>,
    pub config: EvalConfig,
}

/// Arithmetic mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

impl AccuracyReport {
    pub(crate) fn from_folds(
        task: Task,
        setting: Setting,
        k_policy: KPolicy,
        config: &EvalConfig,
        per_fold: Vec<FoldResult>,
    ) -> Self {
        let acc: Vec<f64> = per_fold.iter().map(|f| f.accuracy).collect();
        let (mean, std) = mean_std(&acc);
        let ranking: Vec<f64> = per_fold.iter().filter_map(|f| f.ranking_accuracy).collect();
        Self {
            task,
            setting,
            window_m: config.m,
            k_policy,
            sampling_on: config.sampling_on,
            mean_accuracy: mean,
            std_accuracy: std,
            chance: setting.chance(),
            ranking_accuracy: (!ranking.is_empty()).then(|| mean_std(&ranking).0),
            n_test: per_fold.iter().map(|f| f.n_test).sum(),
            per_fold,
            config: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

pub const CSV_HEADER: [&str; 8] = ["task", "setting", "m", "k", "sampling", "fold", "accuracy", "chance"];

fn sampling(on: bool) -> &'static str {
    if on {
        "on"
    } else {
        "off"
    }
}

fn finish(w: csv::Writer<Vec<u8>>) -> String {
    String::from_utf8(w.into_inner().expect("in-memory writer")).expect("csv output is utf-8")
}

fn row_prefix(r: &AccuracyReport) -> [String; 5] {
    [
        r.task.to_string(),
        r.setting.to_string(),
        r.window_m.to_string(),
        r.k_policy.label(),
        sampling(r.sampling_on).to_string(),
    ]
}

/// One row per fold followed by a `mean` row, per report.
pub fn reports_to_csv(reports: &[AccuracyReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in reports {
        let prefix = row_prefix(r);
        for f in &r.per_fold {
            let tail = [f.fold.clone(), f.accuracy.to_string(), r.chance.to_string()];
            w.write_record(prefix.iter().chain(&tail)).expect("in-memory write");
        }
        let tail = ["mean".to_string(), r.mean_accuracy.to_string(), r.chance.to_string()];
        w.write_record(prefix.iter().chain(&tail)).expect("in-memory write");
    }
    finish(w)
}

/// One `mean` row per report, with the standard deviation across folds.
pub fn summary_to_csv(reports: &[AccuracyReport]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER.iter().chain(&["std"])).expect("in-memory write");
    for r in reports {
        let tail = ["mean".to_string(), r.mean_accuracy.to_string(), r.chance.to_string(), r.std_accuracy.to_string()];
        w.write_record(row_prefix(r).iter().chain(&tail)).expect("in-memory write");
    }
    finish(w)
}
