use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Provenance};
use crate::imaging::io::{encode_png, load_pool};
use crate::imaging::{default_grid, GridSpec, DEFAULT_MARGIN};
use crate::protocol::{Task, Trial};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub format_version: u32,
    pub generator_seed: Option<u64>,
    pub task: Task,
    pub grid: GridSpec,
    pub margin: usize,
    pub image_count: usize,
    pub trial_count: usize,
    pub provenance: Provenance,
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io { path: path.to_path_buf(), source }
}

/// Writes `bytes` to `path` through a temporary file in the same directory.
/// Writes through a temporary file in the same directory, then renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| DataError::Io { path: path.to_path_buf(), source: e.error })?;
    Ok(())
}

pub fn save_dataset(dir: &Path, dataset: &Dataset) -> Result<(), DataError> {
    let images = dir.join("images");
    fs::create_dir_all(&images).map_err(io_err(&images))?;
    for img in &dataset.pool {
        write_atomic(&images.join(format!("{}.png", img.id())), &encode_png(img)?)?;
    }
    let queries = serde_json::to_vec_pretty(&dataset.queries).expect("strings serialize");
    write_atomic(&dir.join("queries.json"), &queries)?;
    let mut lines = Vec::new();
    for t in &dataset.trials {
        serde_json::to_writer(&mut lines, t).expect("trial serializes");
        lines.push(b'\n');
    }
    write_atomic(&dir.join("trials.jsonl"), &lines)?;
    let manifest = Manifest {
        format_version: FORMAT_VERSION,
        generator_seed: match &dataset.provenance {
            Provenance::Simulated(p) => Some(p.seed),
            Provenance::Human => None,
        },
        task: dataset.task,
        grid: dataset.grid,
        margin: dataset.margin,
        image_count: dataset.pool.len(),
        trial_count: dataset.trials.len(),
        provenance: dataset.provenance.clone(),
    };
    write_atomic(&dir.join("manifest.json"), &serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))
}

fn require(path: &Path) -> Result<(), DataError> {
    if path.exists() {
        Ok(())
    } else {
        Err(DataError::MissingFile(path.to_path_buf()))
    }
}

/// Reads and validates a dataset directory. `manifest.json` is optional;
/// without it the grid is the squarest fit and the margin is the default.
pub fn load_dataset(dir: &Path) -> Result<Dataset, DataError> {
    let images = dir.join("images");
    let queries_path = dir.join("queries.json");
    let trials_path = dir.join("trials.jsonl");
    for p in [&images, &queries_path, &trials_path] {
        require(p)?;
    }
    let pool = load_pool(&images)?;
    let queries_text = fs::read_to_string(&queries_path).map_err(io_err(&queries_path))?;
    let queries: Vec<String> = serde_json::from_str(&queries_text).map_err(|e| DataError::SchemaViolation {
        file: "queries.json".into(),
        line: e.line(),
        message: e.to_string(),
    })?;

    let file = fs::File::open(&trials_path).map_err(io_err(&trials_path))?;
    let mut trials = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(&trials_path))?;
        if line.trim().is_empty() {
            continue;
        }
        let trial: Trial = serde_json::from_str(&line).map_err(|e| DataError::SchemaViolation {
            file: "trials.jsonl".into(),
            line: i + 1,
            message: e.to_string(),
        })?;
        trials.push(trial);
    }

    let manifest_path = dir.join("manifest.json");
    let manifest: Option<Manifest> = if manifest_path.exists() {
        let text = fs::read_to_string(&manifest_path).map_err(io_err(&manifest_path))?;
        let m: Manifest = serde_json::from_str(&text).map_err(|e| DataError::SchemaViolation {
            file: "manifest.json".into(),
            line: e.line(),
            message: e.to_string(),
        })?;
        if m.format_version != FORMAT_VERSION {
            return Err(DataError::SchemaViolation {
                file: "manifest.json".into(),
                line: 1,
                message: format!("unsupported format version {}", m.format_version),
            });
        }
        Some(m)
    } else {
        None
    };

    let task = match (&manifest, trials.first()) {
        (Some(m), _) => m.task,
        (None, Some(t)) => t.task,
        (None, None) => {
            return Err(DataError::SchemaViolation {
                file: "trials.jsonl".into(),
                line: 1,
                message: "no trials and no manifest to name the task".into(),
            })
        }
    };
    let dataset = Dataset {
        task,
        grid: manifest.as_ref().map_or_else(|| default_grid(pool.len()), |m| m.grid),
        margin: manifest.as_ref().map_or(DEFAULT_MARGIN, |m| m.margin),
        provenance: manifest.map_or(Provenance::Human, |m| m.provenance),
        pool,
        queries,
        trials,
    };
    dataset.validate()?;
    Ok(dataset)
}
