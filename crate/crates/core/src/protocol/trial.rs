use std::fmt;

use serde::{Deserialize, Serialize};

use crate::imaging::DescriptorKind;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Task {
    #[serde(rename = "oreilly")]
    OReilly,
    #[serde(rename = "amazon")]
    Amazon,
    #[serde(rename = "mugshots")]
    Mugshots,
}

impl Task {
    pub const ALL: [Task; 3] = [Task::OReilly, Task::Amazon, Task::Mugshots];

    pub fn name(self) -> &'static str {
        match self {
            Task::OReilly => "oreilly",
            Task::Amazon => "amazon",
            Task::Mugshots => "mugshots",
        }
    }

    /// Colour patches for the book covers, texture histograms for the greyscale faces.
    pub fn descriptor_kind(self) -> DescriptorKind {
        match self {
            Task::Mugshots => DescriptorKind::Lbp,
            Task::OReilly | Task::Amazon => DescriptorKind::Rgb,
        }
    }

    pub fn default_pool_size(self) -> usize {
        match self {
            Task::Amazon => 84,
            Task::OReilly | Task::Mugshots => 78,
        }
    }
}

impl fmt::Display for Task {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Task {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Task::ALL
            .into_iter()
            .find(|t| t.name() == s)
            .ok_or_else(|| format!("unknown task `{s}` (expected oreilly, amazon or mugshots)"))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Fixation {
    pub x: f64,
    pub y: f64,
    pub dur_ms: f64,
    pub t_ms: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Trial {
    pub participant: String,
    pub task: Task,
    pub target_id: String,
    pub layout_seed: u64,
    pub found: bool,
    pub fixations: Vec<Fixation>,
}

impl Trial {
    pub fn points(&self) -> Vec<(f64, f64)> {
        self.fixations.iter().map(|f| (f.x, f.y)).collect()
    }

    /// Structural checks that do not need the collage: non-empty, finite,
    /// non-negative durations, non-decreasing onsets.
    pub fn check(&self) -> Result<(), String> {
        if self.fixations.is_empty() {
            return Err("trial has no fixations".into());
        }
        let mut last = f64::NEG_INFINITY;
        for (i, f) in self.fixations.iter().enumerate() {
            if ![f.x, f.y, f.dur_ms, f.t_ms].iter().all(|v| v.is_finite()) {
                return Err(format!("fixation {i} has a non-finite field"));
            }
            if f.dur_ms < 0.0 {
                return Err(format!("fixation {i} has negative duration"));
            }
            if f.t_ms < last {
                return Err(format!("fixation {i} starts before its predecessor"));
            }
            last = f.t_ms;
        }
        Ok(())
    }
}
