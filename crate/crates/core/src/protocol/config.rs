use std::fmt;

use serde::{Deserialize, Serialize};

use crate::learn::KernelSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Setting {
    ClosedWithin,
    ClosedCross,
    OpenWithin,
    OpenCross,
    Control,
}

impl Setting {
    pub const ALL: [Setting; 5] =
        [Setting::ClosedWithin, Setting::ClosedCross, Setting::OpenWithin, Setting::OpenCross, Setting::Control];

    pub fn name(self) -> &'static str {
        match self {
            Setting::ClosedWithin => "closed-within",
            Setting::ClosedCross => "closed-cross",
            Setting::OpenWithin => "open-within",
            Setting::OpenCross => "open-cross",
            Setting::Control => "control",
        }
    }

    pub fn is_open(self) -> bool {
        matches!(self, Setting::OpenWithin | Setting::OpenCross)
    }

    /// One in five targets for the closed settings, target vs non-target for the open ones.
    pub fn chance(self) -> f64 {
        if self.is_open() {
            0.5
        } else {
            0.2
        }
    }
}

impl fmt::Display for Setting {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Setting {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Setting::ALL.into_iter().find(|v| v.name() == s).ok_or_else(|| format!("unknown setting `{s}`"))
    }
}

/// Kernel as configured; an RBF without `gamma` uses 1 / feature dimension.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum KernelChoice {
    Linear,
    Rbf {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        gamma: Option<f64>,
    },
}

impl KernelChoice {
    pub fn resolve(self, dim: usize) -> KernelSpec {
        match self {
            KernelChoice::Linear => KernelSpec::Linear,
            KernelChoice::Rbf { gamma } => KernelSpec::Rbf { gamma: gamma.unwrap_or(1.0 / dim.max(1) as f64) },
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Patch window side in pixels (odd).
    pub m: usize,
    /// Vocabulary size.
    pub k: usize,
    pub kernel: KernelChoice,
    #[serde(rename = "C")]
    pub c: f64,
    pub tol: f64,
    /// Eight extra patches around every fixation.
    pub sampling_on: bool,
    /// l1-normalize histograms before classification.
    pub normalize: bool,
    pub seed: u64,
    /// Upper bound on the patches clustered into a vocabulary.
    pub vocab_sample_cap: usize,
    pub kmeans_max_iter: usize,
    pub kmeans_tol: f64,
    /// Saliency patches drawn from every training query for the open-world vocabulary.
    pub query_vocab_samples: usize,
    /// Saliency samples per query histogram; by default the rounded mean
    /// fixation count of the training trials.
    pub query_samples: Option<usize>,
    /// Salient-mass fraction used by the random-fixation control.
    pub control_fraction: f64,
    /// Closed setting re-run by the control.
    pub control_base: Setting,
    /// Also score each fold on a validation split of its training data.
    pub validation: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            m: 41,
            k: 60,
            kernel: KernelChoice::Rbf { gamma: None },
            c: 1.0,
            tol: 1e-3,
            sampling_on: true,
            normalize: true,
            seed: 0,
            vocab_sample_cap: 2000,
            kmeans_max_iter: 300,
            kmeans_tol: 1e-4,
            query_vocab_samples: 100,
            query_samples: None,
            control_fraction: 0.75,
            control_base: Setting::ClosedWithin,
            validation: false,
        }
    }
}

impl EvalConfig {
    pub fn check(&self) -> Result<(), String> {
        if self.m < 3 || self.m.is_multiple_of(2) {
            return Err(format!("m must be odd and >= 3, got {}", self.m));
        }
        if self.k == 0 {
            return Err("k must be >= 1".into());
        }
        if !(self.c.is_finite() && self.c > 0.0) {
            return Err(format!("C must be positive, got {}", self.c));
        }
        if !(self.tol.is_finite() && self.tol > 0.0) {
            return Err(format!("tol must be positive, got {}", self.tol));
        }
        if let KernelChoice::Rbf { gamma: Some(g) } = self.kernel {
            if !(g.is_finite() && g > 0.0) {
                return Err(format!("gamma must be positive, got {g}"));
            }
        }
        if self.vocab_sample_cap < self.k {
            return Err("vocab_sample_cap must be at least k".into());
        }
        if self.query_samples == Some(0) {
            return Err("query_samples must be >= 1".into());
        }
        if !(self.control_fraction > 0.0 && self.control_fraction <= 1.0) {
            return Err(format!("control_fraction must be in (0, 1], got {}", self.control_fraction));
        }
        if !matches!(self.control_base, Setting::ClosedWithin | Setting::ClosedCross) {
            return Err("control_base must be a closed setting".into());
        }
        Ok(())
    }
}
