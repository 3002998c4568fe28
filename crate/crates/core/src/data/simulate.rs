use std::collections::{HashMap, HashSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{DataError, Dataset, Provenance};
use crate::imaging::{lbp_histogram_of, plan_collage, Cell, GridSpec, Image, DEFAULT_MARGIN};
use crate::protocol::{Fixation, Task, Trial};
use crate::seed;

const SIMILAR_DISTRACTORS: usize = 5;
const MIN_DURATION_MS: f64 = 60.0;
const MAX_DURATION_MS: f64 = 600.0;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum FixationCount {
    /// Poisson counts conditioned on being at least one.
    #[serde(rename = "poisson")]
    Poisson { mean: f64 },
    #[serde(rename = "fixed")]
    Fixed { count: usize },
}

impl FixationCount {
    pub fn sample(&self, rng: &mut impl Rng) -> usize {
        match *self {
            FixationCount::Fixed { count } => count,
            FixationCount::Poisson { mean } => {
                let p = Poisson::new(mean).expect("validated mean");
                loop {
                    let n = p.sample(rng) as usize;
                    if n > 0 {
                        return n;
                    }
                }
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum SimilarityMetric {
    #[serde(rename = "mean_rgb_distance")]
    MeanRgbDistance,
    #[serde(rename = "lbp_chi2")]
    LbpChi2,
}

/// Missing keys take their [`Default`] values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulatorParams {
    pub fidelity: f64,
    pub gaze_noise_px: f64,
    pub fixation_count: FixationCount,
    pub similarity_metric: SimilarityMetric,
    pub distractor_pull: f64,
    /// Half-width of the per-participant uniform fidelity perturbation.
    pub participant_jitter: f64,
    pub seed: u64,
}

impl Default for SimulatorParams {
    fn default() -> Self {
        Self {
            fidelity: 0.8,
            gaze_noise_px: 15.0,
            fixation_count: FixationCount::Poisson { mean: 20.0 },
            similarity_metric: SimilarityMetric::MeanRgbDistance,
            distractor_pull: 0.0,
            participant_jitter: 0.05,
            seed: 0,
        }
    }
}

impl SimulatorParams {
    pub fn validate(&self) -> Result<(), DataError> {
        let unit = |v: f64| v.is_finite() && (0.0..=1.0).contains(&v);
        if !unit(self.fidelity) {
            return Err(DataError::invalid("fidelity", format!("{} is outside [0, 1]", self.fidelity)));
        }
        if !unit(self.distractor_pull) {
            return Err(DataError::invalid("distractor_pull", format!("{} is outside [0, 1]", self.distractor_pull)));
        }
        if !unit(self.participant_jitter) {
            return Err(DataError::invalid(
                "participant_jitter",
                format!("{} is outside [0, 1]", self.participant_jitter),
            ));
        }
        if !(self.gaze_noise_px.is_finite() && self.gaze_noise_px >= 0.0) {
            return Err(DataError::invalid("gaze_noise_px", format!("{} must be finite and >= 0", self.gaze_noise_px)));
        }
        match self.fixation_count {
            FixationCount::Poisson { mean } if !(mean.is_finite() && mean > 0.0) => {
                Err(DataError::invalid("fixation_count", format!("Poisson mean {mean} must be positive")))
            }
            FixationCount::Fixed { count: 0 } => Err(DataError::invalid("fixation_count", "fixed count must be >= 1")),
            _ => Ok(()),
        }
    }
}

fn chi2(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| if x + y > 0.0 { (x - y) * (x - y) / (x + y) } else { 0.0 }).sum()
}

/// The pool images most similar to `target` (excluding it), closest first;
/// ties are broken by pool order.
pub fn similar_distractors(pool: &[Image], target: &str, metric: SimilarityMetric, count: usize) -> Vec<String> {
    let Some(t) = pool.iter().find(|i| i.id() == target) else {
        return Vec::new();
    };
    let distance: Box<dyn Fn(&Image) -> f64> = match metric {
        SimilarityMetric::MeanRgbDistance => {
            let tm = t.mean_channels();
            Box::new(move |img: &Image| {
                img.mean_channels().iter().zip(&tm).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
            })
        }
        SimilarityMetric::LbpChi2 => {
            let th = lbp_histogram_of(t);
            Box::new(move |img: &Image| chi2(&lbp_histogram_of(img), &th))
        }
    };
    let mut scored: Vec<(f64, usize)> =
        pool.iter().enumerate().filter(|(_, i)| i.id() != target).map(|(k, i)| (distance(i), k)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    scored.into_iter().take(count).map(|(_, k)| pool[k].id().to_string()).collect()
}

struct Scene<'a> {
    pool: &'a [Image],
    grid: GridSpec,
    margin: usize,
    similar: &'a [String],
}

fn simulate_in_scene(
    scene: &Scene<'_>,
    task: Task,
    participant: &str,
    target_id: &str,
    fidelity: f64,
    params: &SimulatorParams,
    layout_seed: u64,
) -> Result<Trial, DataError> {
    let mut layout = plan_collage(scene.pool, scene.grid, target_id, layout_seed)?;
    layout.margin = scene.margin;
    let mut rng = seed::rng(seed::derive_labeled(params.seed, "fixations", &[layout_seed]));
    let occupied: Vec<Cell> = layout.placements.iter().map(|p| Cell { row: p.row, col: p.col }).collect();
    let similar_cells: Vec<Cell> = scene.similar.iter().filter_map(|id| layout.cell_of(id)).collect();
    let (w, h) = (layout.canvas_width() as f64, layout.canvas_height() as f64);
    let noise = Normal::new(0.0, params.gaze_noise_px).expect("validated noise");
    let target_rect = layout.cell_rect(layout.target_cell);
    let n = params.fixation_count.sample(&mut rng);
    let mut fixations = Vec::with_capacity(n);
    let mut t = 0.0;
    let mut found = false;
    for _ in 0..n {
        let cell = if rng.random_bool(fidelity) {
            if !similar_cells.is_empty() && rng.random_bool(params.distractor_pull) {
                similar_cells[rng.random_range(0..similar_cells.len())]
            } else {
                layout.target_cell
            }
        } else {
            occupied[rng.random_range(0..occupied.len())]
        };
        let r = layout.cell_rect(cell);
        let mut x = r.x0 as f64 + rng.random::<f64>() * (r.x1 - r.x0) as f64;
        let mut y = r.y0 as f64 + rng.random::<f64>() * (r.y1 - r.y0) as f64;
        if params.gaze_noise_px > 0.0 {
            x += noise.sample(&mut rng);
            y += noise.sample(&mut rng);
        }
        let x = x.clamp(0.0, w - 1e-6);
        let y = y.clamp(0.0, h - 1e-6);
        found |= target_rect.contains(x.floor() as i64, y.floor() as i64);
        let dur = rng.random_range(MIN_DURATION_MS..MAX_DURATION_MS);
        fixations.push(Fixation { x, y, dur_ms: dur, t_ms: t });
        t += dur;
    }
    Ok(Trial {
        participant: participant.to_string(),
        task,
        target_id: target_id.to_string(),
        layout_seed,
        found,
        fixations,
    })
}

/// One simulated search episode on the collage planned from `layout_seed`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_trial(
    pool: &[Image],
    queries: &[String],
    target_id: &str,
    task: Task,
    participant: &str,
    params: &SimulatorParams,
    grid: GridSpec,
    layout_seed: u64,
) -> Result<Trial, DataError> {
    params.validate()?;
    if !queries.iter().any(|q| q == target_id) {
        return Err(DataError::UnknownTarget(target_id.to_string()));
    }
    let similar = similar_distractors(pool, target_id, params.similarity_metric, SIMILAR_DISTRACTORS);
    let scene = Scene { pool, grid, margin: DEFAULT_MARGIN, similar: &similar };
    simulate_in_scene(&scene, task, participant, target_id, params.fidelity, params, layout_seed)
}

/// `count` distinct pool ids chosen by `seed`, in pool order.
pub fn choose_queries(pool: &[Image], count: usize, seed: u64) -> Vec<String> {
    let mut rng = seed::rng(seed::derive_labeled(seed, "queries", &[]));
    let mut picked = index::sample(&mut rng, pool.len(), count.min(pool.len())).into_vec();
    picked.sort_unstable();
    picked.into_iter().map(|i| pool[i].id().to_string()).collect()
}

/// Participants `p01, p02, ...`, each searching every query
/// `trials_per_target` times in a seeded random order, on fresh layouts.
pub fn simulate_dataset(
    task: Task,
    pool: Vec<Image>,
    queries: Vec<String>,
    n_participants: usize,
    trials_per_target: usize,
    params: &SimulatorParams,
    grid: GridSpec,
) -> Result<Dataset, DataError> {
    params.validate()?;
    if n_participants == 0 {
        return Err(DataError::invalid("participants", "need at least one participant"));
    }
    for q in &queries {
        if !pool.iter().any(|i| i.id() == q) {
            return Err(DataError::UnknownTarget(q.clone()));
        }
    }
    let similar: HashMap<&str, Vec<String>> = queries
        .iter()
        .map(|q| (q.as_str(), similar_distractors(&pool, q, params.similarity_metric, SIMILAR_DISTRACTORS)))
        .collect();

    struct Job {
        participant: String,
        fidelity: f64,
        target: usize,
        layout_seed: u64,
    }
    let mut jobs = Vec::new();
    let mut seen = HashSet::new();
    for p in 0..n_participants {
        let mut prng = seed::rng(seed::derive_labeled(params.seed, "participant", &[p as u64]));
        let fidelity = (params.fidelity + prng.random_range(-1.0..=1.0) * params.participant_jitter).clamp(0.0, 1.0);
        let mut order: Vec<usize> =
            (0..queries.len()).flat_map(|q| std::iter::repeat_n(q, trials_per_target)).collect();
        order.shuffle(&mut prng);
        for (pos, target) in order.into_iter().enumerate() {
            let mut attempt = 0u64;
            let layout_seed = loop {
                let s = seed::derive_labeled(params.seed, "layout", &[p as u64, pos as u64, attempt]);
                if seen.insert(s) {
                    break s;
                }
                attempt += 1;
            };
            jobs.push(Job { participant: format!("p{:02}", p + 1), fidelity, target, layout_seed });
        }
    }
    let trials = jobs
        .par_iter()
        .map(|job| {
            let target = &queries[job.target];
            let scene = Scene { pool: &pool, grid, margin: DEFAULT_MARGIN, similar: &similar[target.as_str()] };
            simulate_in_scene(&scene, task, &job.participant, target, job.fidelity, params, job.layout_seed)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Dataset {
        task,
        pool,
        queries,
        trials,
        grid,
        margin: DEFAULT_MARGIN,
        provenance: Provenance::Simulated(*params),
    })
}
