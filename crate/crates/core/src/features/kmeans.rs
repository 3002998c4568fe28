//! Lloyd's k-means with k-means++ seeding.

use rand::Rng;
use rayon::prelude::*;

use super::vocabulary::nearest;
use super::{DescriptorSet, FeatureError, Vocabulary};
use crate::imaging::DescriptorKind;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KMeansOptions {
    pub max_iter: usize,
    /// Convergence threshold on the summed squared centroid shift, relative
    /// to the mean per-dimension variance of the data.
    pub tol: f64,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self { max_iter: 300, tol: 1e-4 }
    }
}

#[derive(Clone, Debug)]
pub struct KMeansFit {
    pub vocabulary: Vocabulary,
    /// Inertia after each assignment step.
    pub inertia_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

fn distinct_rows(data: &DescriptorSet) -> usize {
    let mut keyed: Vec<(u64, usize)> = (0..data.len())
        .map(|i| {
            let mut h: u64 = 0xCBF2_9CE4_8422_2325;
            for v in data.row(i) {
                h ^= u64::from(v.to_bits());
                h = h.wrapping_mul(0x0000_0100_0000_01B3);
            }
            (h, i)
        })
        .collect();
    keyed.sort_unstable();
    let mut distinct = 0;
    let mut group_start = 0;
    for i in 0..keyed.len() {
        if i > 0 && keyed[i].0 != keyed[i - 1].0 {
            group_start = i;
        }
        // count a row unless an earlier member of its hash group is bitwise equal
        let row = data.row(keyed[i].1);
        let dup = keyed[group_start..i]
            .iter()
            .any(|&(_, j)| data.row(j).iter().zip(row).all(|(a, b)| a.to_bits() == b.to_bits()));
        if !dup {
            distinct += 1;
        }
    }
    distinct
}

fn sq_dist_f64(a: &[f32], b: &[f32]) -> f64 {
    a.iter().zip(b).map(|(x, y)| f64::from(x - y).powi(2)).sum()
}

fn plus_plus_init(data: &DescriptorSet, k: usize, rng: &mut impl Rng) -> Vec<f32> {
    let n = data.len();
    let dim = data.dim();
    let mut centroids = Vec::with_capacity(k * dim);
    let first = rng.random_range(0..n);
    centroids.extend_from_slice(data.row(first));
    let mut d2: Vec<f64> = (0..n).map(|i| sq_dist_f64(data.row(i), data.row(first))).collect();
    for _ in 1..k {
        let total: f64 = d2.iter().sum();
        let pick = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut chosen = None;
            for (i, &w) in d2.iter().enumerate() {
                acc += w;
                if w > 0.0 && acc >= target {
                    chosen = Some(i);
                    break;
                }
            }
            // rounding can leave `acc` a hair short of `target`
            chosen.unwrap_or_else(|| d2.iter().rposition(|&w| w > 0.0).expect("positive mass"))
        } else {
            rng.random_range(0..n)
        };
        let row = data.row(pick);
        centroids.extend_from_slice(row);
        let fresh: Vec<f64> = (0..n).into_par_iter().map(|i| sq_dist_f64(data.row(i), row)).collect();
        for (d, f) in d2.iter_mut().zip(fresh) {
            if f < *d {
                *d = f;
            }
        }
    }
    centroids
}

fn mean_variance(data: &DescriptorSet) -> f64 {
    let n = data.len() as f64;
    let dim = data.dim();
    let mut mean = vec![0.0f64; dim];
    for r in data.rows() {
        for (m, &v) in mean.iter_mut().zip(r) {
            *m += f64::from(v);
        }
    }
    mean.iter_mut().for_each(|m| *m /= n);
    let mut var = 0.0;
    for r in data.rows() {
        var += r.iter().zip(&mean).map(|(&v, m)| (f64::from(v) - m).powi(2)).sum::<f64>();
    }
    var / (n * dim as f64)
}

/// Clusters `data` into `k` words. The assignment step runs in parallel but
/// every reduction is performed in index order, so results do not depend on
/// the thread count.
pub fn fit_kmeans(
    data: &DescriptorSet,
    k: usize,
    kind: DescriptorKind,
    seed: u64,
    options: KMeansOptions,
) -> Result<KMeansFit, FeatureError> {
    if data.is_empty() {
        return Err(FeatureError::EmptyInput);
    }
    if k == 0 {
        return Err(FeatureError::ZeroK);
    }
    let distinct = distinct_rows(data);
    if k > distinct {
        return Err(FeatureError::TooFewPoints { k, distinct });
    }
    let n = data.len();
    let dim = data.dim();
    let mut rng = seed::rng(seed);
    let mut centroids = plus_plus_init(data, k, &mut rng);
    let threshold = options.tol * mean_variance(data);

    let mut history = Vec::new();
    let mut iterations = 0;
    let mut converged = false;
    while iterations < options.max_iter {
        iterations += 1;
        let assigned: Vec<(usize, f32)> =
            (0..n).into_par_iter().map(|i| nearest(&centroids, dim, data.row(i))).collect();
        history.push(assigned.iter().map(|&(_, d)| f64::from(d)).sum());

        let mut sums = vec![0.0f64; k * dim];
        let mut counts = vec![0usize; k];
        for (i, &(label, _)) in assigned.iter().enumerate() {
            counts[label] += 1;
            for (s, &v) in sums[label * dim..(label + 1) * dim].iter_mut().zip(data.row(i)) {
                *s += f64::from(v);
            }
        }
        let mut next = vec![0.0f32; k * dim];
        let mut by_distance: Vec<usize> = (0..n).collect();
        by_distance.sort_by(|&a, &b| assigned[b].1.total_cmp(&assigned[a].1).then(a.cmp(&b)));
        let mut donors = by_distance.into_iter();
        for j in 0..k {
            let slot = &mut next[j * dim..(j + 1) * dim];
            if counts[j] > 0 {
                let c = counts[j] as f64;
                for (t, s) in slot.iter_mut().zip(&sums[j * dim..(j + 1) * dim]) {
                    *t = (s / c) as f32;
                }
            } else {
                // empty cluster: move it onto the worst-served point
                let donor = donors.next().expect("k <= n");
                slot.copy_from_slice(data.row(donor));
            }
        }
        let shift: f64 = centroids.chunks_exact(dim).zip(next.chunks_exact(dim)).map(|(a, b)| sq_dist_f64(a, b)).sum();
        centroids = next;
        if shift <= threshold {
            converged = true;
            break;
        }
    }

    let set = {
        let mut s = DescriptorSet::new(dim);
        for c in centroids.chunks_exact(dim) {
            s.push(c)?;
        }
        s
    };
    let vocabulary = Vocabulary::from_centroids(&set, kind, seed)?;
    Ok(KMeansFit { vocabulary, inertia_history: history, iterations, converged })
}

pub fn train_vocabulary(
    descriptors: &DescriptorSet,
    k: usize,
    kind: DescriptorKind,
    seed: u64,
    options: KMeansOptions,
) -> Result<Vocabulary, FeatureError> {
    fit_kmeans(descriptors, k, kind, seed, options).map(|f| f.vocabulary)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::assign_word;
    use rand::Rng;

    fn set(rows: &[Vec<f32>]) -> DescriptorSet {
        DescriptorSet::from_rows(rows).unwrap()
    }

    #[test]
    fn k_equal_to_distinct_points_recovers_them() {
        let pts = vec![vec![0.0, 1.0], vec![3.0, 3.0], vec![-2.0, 5.0], vec![7.0, -1.0]];
        let fit = fit_kmeans(&set(&pts), 4, DescriptorKind::Rgb, 3, KMeansOptions::default()).unwrap();
        assert_eq!(*fit.inertia_history.last().unwrap(), 0.0);
        let mut got: Vec<Vec<f32>> = (0..4).map(|i| fit.vocabulary.centroid(i).to_vec()).collect();
        let mut want = pts.clone();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        want.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, want);
    }

    #[test]
    fn single_cluster_is_the_mean() {
        let pts = vec![vec![1.0, 2.0, 3.0], vec![3.0, 2.0, 1.0], vec![2.0, 5.0, 2.0]];
        let v = train_vocabulary(&set(&pts), 1, DescriptorKind::Rgb, 0, KMeansOptions::default()).unwrap();
        let c = v.centroid(0);
        assert!((c[0] - 2.0).abs() < 1e-6 && (c[1] - 3.0).abs() < 1e-6 && (c[2] - 2.0).abs() < 1e-6);
    }

    #[test]
    fn two_tight_clusters_recover_their_means() {
        let mut rng = crate::seed::rng(5);
        let dim = 6;
        let mut rows = Vec::new();
        let mut means = [vec![0.0f64; dim], vec![0.0f64; dim]];
        for (c, center) in [0.0f32, 10.0].iter().enumerate() {
            for _ in 0..50 {
                // uniform in a ball of radius 0.1 (by rejection)
                let offset = loop {
                    let o: Vec<f32> = (0..dim).map(|_| rng.random_range(-0.1f32..0.1)).collect();
                    if o.iter().map(|v| v * v).sum::<f32>() <= 0.01 {
                        break o;
                    }
                };
                let row: Vec<f32> = offset.iter().map(|o| center + o).collect();
                for (m, v) in means[c].iter_mut().zip(&row) {
                    *m += f64::from(*v) / 50.0;
                }
                rows.push(row);
            }
        }
        let v = train_vocabulary(&set(&rows), 2, DescriptorKind::Rgb, 9, KMeansOptions::default()).unwrap();
        for mean in &means {
            let probe: Vec<f32> = mean.iter().map(|&m| m as f32).collect();
            let w = assign_word(&probe, &v).unwrap();
            let dist = sq_dist_f64(v.centroid(w), &probe).sqrt();
            assert!(dist < 0.2, "centroid {dist} away from the cluster mean");
        }
    }

    #[test]
    fn inertia_never_increases_and_runs_are_reproducible() {
        let mut rng = crate::seed::rng(8);
        let rows: Vec<Vec<f32>> = (0..400).map(|_| (0..12).map(|_| rng.random::<f32>()).collect()).collect();
        let data = set(&rows);
        let a = fit_kmeans(&data, 9, DescriptorKind::Rgb, 1, KMeansOptions::default()).unwrap();
        for w in a.inertia_history.windows(2) {
            assert!(w[1] <= w[0] * (1.0 + 1e-6), "{} -> {}", w[0], w[1]);
        }
        let b = fit_kmeans(&data, 9, DescriptorKind::Rgb, 1, KMeansOptions::default()).unwrap();
        assert_eq!(a.vocabulary, b.vocabulary);
        let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = single.install(|| fit_kmeans(&data, 9, DescriptorKind::Rgb, 1, KMeansOptions::default()).unwrap());
        assert_eq!(a.vocabulary, c.vocabulary);
    }

    #[test]
    fn too_few_points_and_empty_input() {
        let pts = vec![vec![1.0], vec![1.0], vec![2.0]];
        assert!(matches!(
            train_vocabulary(&set(&pts), 3, DescriptorKind::Rgb, 0, KMeansOptions::default()),
            Err(FeatureError::TooFewPoints { k: 3, distinct: 2 })
        ));
        assert!(matches!(
            train_vocabulary(&DescriptorSet::new(4), 1, DescriptorKind::Rgb, 0, KMeansOptions::default()),
            Err(FeatureError::EmptyInput)
        ));
        assert_eq!(distinct_rows(&set(&pts)), 2);
    }
}
