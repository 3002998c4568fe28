//! Datasets: the on-disk format, synthetic image pools and the fixation
//! simulator.

mod io;
mod pool;
mod simulate;

pub use self::io::{load_dataset, save_dataset, write_atomic, Manifest, FORMAT_VERSION};
pub use self::pool::{synthetic_pool, PoolSpec};
pub use self::simulate::{
    choose_queries, similar_distractors, simulate_dataset, simulate_trial, FixationCount, SimilarityMetric,
    SimulatorParams,
};

use std::collections::HashSet;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{plan_collage, CollageLayout, GridSpec, Image, ImagingError};
use crate::protocol::{Task, Trial};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("missing file: {0}")]
    MissingFile(PathBuf),
    #[error("{file}:{line}: {message}")]
    SchemaViolation { file: String, line: usize, message: String },
    #[error("trial {trial} (line {line}): fixation ({x}, {y}) lies outside the {width}x{height} canvas")]
    OutOfBoundsFixation { trial: usize, line: usize, x: f64, y: f64, width: usize, height: usize },
    #[error("target `{0}` is not among the queries")]
    UnknownTarget(String),
    #[error("invalid `{field}`: {message}")]
    InvalidParameter { field: String, message: String },
    #[error(transparent)]
    Imaging(#[from] ImagingError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

impl DataError {
    pub(crate) fn invalid(field: &str, message: impl Into<String>) -> Self {
        DataError::InvalidParameter { field: field.to_string(), message: message.into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
pub enum Provenance {
    #[serde(rename = "human")]
    Human,
    #[serde(rename = "simulated")]
    Simulated(SimulatorParams),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub task: Task,
    pub pool: Vec<Image>,
    pub queries: Vec<String>,
    pub trials: Vec<Trial>,
    pub grid: GridSpec,
    pub margin: usize,
    pub provenance: Provenance,
}

impl Dataset {
    /// Sorted distinct participant ids.
    pub fn participants(&self) -> Vec<String> {
        let mut p: Vec<String> = self.trials.iter().map(|t| t.participant.clone()).collect();
        p.sort();
        p.dedup();
        p
    }

    pub fn layout(&self, trial: &Trial) -> Result<CollageLayout, ImagingError> {
        let mut layout = plan_collage(&self.pool, self.grid, &trial.target_id, trial.layout_seed)?;
        layout.margin = self.margin;
        Ok(layout)
    }

    pub fn canvas_size(&self) -> (usize, usize) {
        let (w, h) = self.pool.first().map_or((0, 0), |img| (img.width(), img.height()));
        (self.grid.cols * (w + self.margin) + self.margin, self.grid.rows * (h + self.margin) + self.margin)
    }

    pub fn image(&self, id: &str) -> Option<&Image> {
        self.pool.iter().find(|img| img.id() == id)
    }

    /// Checks every dataset invariant. Trial `i` is reported as line `i + 1`.
    pub fn validate(&self) -> Result<(), DataError> {
        let schema =
            |line: usize, message: String| DataError::SchemaViolation { file: "trials.jsonl".into(), line, message };
        if self.pool.is_empty() {
            return Err(DataError::invalid("images", "image pool is empty"));
        }
        if self.grid.rows * self.grid.cols < self.pool.len() {
            return Err(ImagingError::GridTooSmall {
                rows: self.grid.rows,
                cols: self.grid.cols,
                pool: self.pool.len(),
            }
            .into());
        }
        let ids: HashSet<&str> = self.pool.iter().map(|i| i.id()).collect();
        if ids.len() != self.pool.len() {
            return Err(DataError::invalid("images", "duplicate image ids"));
        }
        for q in &self.queries {
            if !ids.contains(q.as_str()) {
                return Err(DataError::invalid("queries", format!("query `{q}` is not in the image pool")));
            }
        }
        let (w, h) = self.canvas_size();
        for (i, t) in self.trials.iter().enumerate() {
            let line = i + 1;
            if t.task != self.task {
                return Err(schema(line, format!("task `{}` differs from dataset task `{}`", t.task, self.task)));
            }
            if !self.queries.contains(&t.target_id) {
                return Err(schema(line, format!("target `{}` is not among the queries", t.target_id)));
            }
            t.check().map_err(|m| schema(line, m))?;
            for f in &t.fixations {
                if !(f.x >= 0.0 && f.y >= 0.0 && f.x < w as f64 && f.y < h as f64) {
                    return Err(DataError::OutOfBoundsFixation { trial: i, line, x: f.x, y: f.y, width: w, height: h });
                }
            }
        }
        Ok(())
    }
}
