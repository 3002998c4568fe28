use rand::Rng;
use serde::{Deserialize, Serialize};

use super::SaliencyMap;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum SamplingMode {
    /// Cells drawn i.i.d. with probability equal to their saliency.
    Proportional,
    /// Uniform over the smallest set of top cells holding at least this
    /// fraction of the mass.
    TopMassUniform(f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleSet {
    pub points: Vec<(f64, f64)>,
    pub mode: SamplingMode,
    pub seed: u64,
    pub n: usize,
}

/// Cells (by index) of the smallest highest-saliency set reaching `fraction`
/// of the total mass. Zero-mass cells are never included.
pub fn top_mass_region(map: &SaliencyMap, fraction: f64) -> Vec<usize> {
    let mut order: Vec<usize> = (0..map.values.len()).filter(|&i| map.values[i] > 0.0).collect();
    order.sort_by(|&a, &b| map.values[b].total_cmp(&map.values[a]).then(a.cmp(&b)));
    let total: f64 = map.values.iter().sum();
    let goal = fraction.clamp(0.0, 1.0) * total - 1e-12;
    let mut acc = 0.0;
    let mut region = Vec::new();
    for i in order {
        region.push(i);
        acc += map.values[i];
        if acc >= goal {
            break;
        }
    }
    region
}

fn jitter(map: &SaliencyMap, cell: usize, rng: &mut impl Rng) -> (f64, f64) {
    let (x0, y0, x1, y1) = map.footprint(cell);
    let x = (x0 + rng.random::<f64>() * (x1 - x0)).min(map.image_width as f64 - 1e-9);
    let y = (y0 + rng.random::<f64>() * (y1 - y0)).min(map.image_height as f64 - 1e-9);
    (x, y)
}

/// Draws `n` image points from a saliency map.
pub fn sample_points(map: &SaliencyMap, n: usize, mode: SamplingMode, seed: u64) -> SampleSet {
    let mut rng = seed::rng(seed);
    let mut points = Vec::with_capacity(n);
    match mode {
        SamplingMode::Proportional => {
            let mut cumulative = Vec::with_capacity(map.values.len());
            let mut acc = 0.0;
            for &v in &map.values {
                acc += v;
                cumulative.push(acc);
            }
            let last_positive = map.values.iter().rposition(|&v| v > 0.0).unwrap_or(0);
            for _ in 0..n {
                let u = rng.random::<f64>() * acc;
                let cell = cumulative.partition_point(|&c| c <= u).min(last_positive);
                points.push(jitter(map, cell, &mut rng));
            }
        }
        SamplingMode::TopMassUniform(fraction) => {
            let region = top_mass_region(map, fraction);
            for _ in 0..n {
                let cell = region[rng.random_range(0..region.len())];
                points.push(jitter(map, cell, &mut rng));
            }
        }
    }
    SampleSet { points, mode, seed, n }
}
