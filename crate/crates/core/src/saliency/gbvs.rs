//! Graph-based visual saliency.
//!
//! Feature maps (luminance, and for colour images red-green and blue-yellow
//! opponency) are computed on three lattices whose longer side is 32, 16 and
//! 8 cells. Each map goes through two Markov chains over its lattice:
//!
//! * activation: `w(i, j) = |M(i) - M(j)| * F(i, j) + eps`
//! * normalization: `w(i, j) = A(j) * (F(i, j) + eps)`
//!
//! with `F(i, j) = exp(-d(i, j)^2 / (2 sigma^2))` and `sigma = 0.15` times the
//! longer lattice side. Both weight matrices have the form `g(j) * S(i, j)` with
//! `S` symmetric, so the chains are reversible and `pi(i) ~ g(i) * sum_j g(j)
//! S(i, j)`. That closed form seeds a power iteration which then certifies the
//! equilibrium to `EQUILIBRIUM_TOL`.

use rayon::prelude::*;

use super::markov::MarkovChain;
use super::plane::{resample, Plane};
use super::sampling::{sample_points, SamplingMode};
use super::SaliencyError;
use crate::features::{encode_bow, BowHistogram, Vocabulary};
use crate::imaging::{describe, extract_image_patch, Channels, Image};

pub const GBVS_EPSILON: f64 = 1e-6;
const LATTICE_MAX: usize = 32;
const SCALES: usize = 3;
const SIGMA_FRACTION: f64 = 0.15;
const EQUILIBRIUM_TOL: f64 = 1e-9;
const EQUILIBRIUM_MAX_ITER: usize = 10_000;
const MIN_SIDE: usize = 16;

/// Saliency over a coarse lattice laid on top of an image. Values sum to 1.
#[derive(Clone, Debug, PartialEq)]
pub struct SaliencyMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub image_width: usize,
    pub image_height: usize,
}

impl SaliencyMap {
    /// Image pixels per lattice cell along x and y.
    pub fn scale_factor(&self) -> (f64, f64) {
        (self.image_width as f64 / self.width as f64, self.image_height as f64 / self.height as f64)
    }

    pub fn value(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn argmax(&self) -> (usize, usize) {
        let i = self.values.iter().enumerate().fold(0, |best, (i, &v)| if v > self.values[best] { i } else { best });
        (i % self.width, i / self.width)
    }

    /// Image-pixel footprint `[x0, x1) x [y0, y1)` of lattice cell `index`.
    pub fn footprint(&self, index: usize) -> (f64, f64, f64, f64) {
        let (sx, sy) = self.scale_factor();
        let (cx, cy) = ((index % self.width) as f64, (index / self.width) as f64);
        (cx * sx, cy * sy, (cx + 1.0) * sx, (cy + 1.0) * sy)
    }

    /// A map over a caller-supplied lattice; values are normalized to sum 1.
    pub fn from_values(
        width: usize,
        height: usize,
        mut values: Vec<f64>,
        image_width: usize,
        image_height: usize,
    ) -> Self {
        assert_eq!(values.len(), width * height);
        let s: f64 = values.iter().sum();
        assert!(s > 0.0 && values.iter().all(|&v| v >= 0.0), "saliency must be non-negative with positive mass");
        values.iter_mut().for_each(|v| *v /= s);
        Self { width, height, values, image_width, image_height }
    }

    /// Binary 16-bit PGM, scaled so the maximum maps to 65535.
    pub fn to_pgm(&self) -> Vec<u8> {
        let max = self.values.iter().copied().fold(0.0, f64::max);
        let mut out = format!("P5\n{} {}\n65535\n", self.width, self.height).into_bytes();
        for &v in &self.values {
            let q = if max > 0.0 { (v / max * 65535.0).round() as u16 } else { 0 };
            out.extend_from_slice(&q.to_be_bytes());
        }
        out
    }
}

/// Equilibrium diagnostics for one chain built during [`gbvs_traced`].
#[derive(Clone, Debug)]
pub struct ChainReport {
    pub scale: usize,
    pub channel: usize,
    pub stage: &'static str,
    pub nodes: usize,
    pub iterations: usize,
    pub residual: f64,
}

fn lattice_dims(width: usize, height: usize, target: usize) -> (usize, usize) {
    let longest = width.max(height);
    let target = target.min(longest);
    let shorter = |side: usize| ((side as f64 * target as f64 / longest as f64).round() as usize).max(1);
    if width >= height {
        (target, shorter(height))
    } else {
        (shorter(width), target)
    }
}

fn feature_planes(image: &Image) -> Vec<Plane> {
    let (w, h) = (image.width(), image.height());
    match image.channels() {
        Channels::Gray8 => {
            vec![Plane { width: w, height: h, data: image.pixels().iter().map(|&v| f64::from(v) / 255.0).collect() }]
        }
        Channels::Rgb8 => {
            let mut lum = Plane::zeros(w, h);
            let mut rg = Plane::zeros(w, h);
            let mut by = Plane::zeros(w, h);
            for (i, px) in image.pixels().chunks_exact(3).enumerate() {
                let (r, g, b) = (f64::from(px[0]) / 255.0, f64::from(px[1]) / 255.0, f64::from(px[2]) / 255.0);
                lum.data[i] = (r + g + b) / 3.0;
                rg.data[i] = r - g;
                by.data[i] = b - 0.5 * (r + g);
            }
            vec![lum, rg, by]
        }
    }
}

/// `F(i, j)` over a lattice, row-major `n x n`.
fn distance_kernel(width: usize, height: usize) -> Vec<f64> {
    let sigma = SIGMA_FRACTION * width.max(height) as f64;
    let denom = 2.0 * sigma * sigma;
    let n = width * height;
    let mut f = vec![0.0; n * n];
    for i in 0..n {
        let (xi, yi) = ((i % width) as f64, (i / width) as f64);
        for j in 0..n {
            let (xj, yj) = ((j % width) as f64, (j / width) as f64);
            f[i * n + j] = (-((xi - xj).powi(2) + (yi - yj).powi(2)) / denom).exp();
        }
    }
    f
}

/// Equilibrium of the chain with weights `g(j) * S(i, j)`.
fn reversible_equilibrium(n: usize, symmetric: Vec<f64>, g: &[f64]) -> (Vec<f64>, MarkovChain, usize) {
    let mut w = symmetric;
    let mut init = vec![0.0; n];
    for (i, row) in w.chunks_exact_mut(n).enumerate() {
        let mut s = 0.0;
        for (v, &gj) in row.iter_mut().zip(g) {
            *v *= gj;
            s += *v;
        }
        init[i] = g[i] * s;
    }
    let chain = MarkovChain::from_weights(n, w);
    let (pi, iterations) = chain.stationary(init, EQUILIBRIUM_TOL, EQUILIBRIUM_MAX_ITER);
    (pi, chain, iterations)
}

struct MapOutcome {
    map: Plane,
    reports: Vec<ChainReport>,
}

fn activate_and_normalize(feature: &Plane, kernel: &[f64], scale: usize, channel: usize, trace: bool) -> MapOutcome {
    let n = feature.data.len();
    let m = &feature.data;
    let mut act_w = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..n {
            act_w[i * n + j] = (m[i] - m[j]).abs() * kernel[i * n + j] + GBVS_EPSILON;
        }
    }
    let ones = vec![1.0; n];
    let (activation, chain_a, it_a) = reversible_equilibrium(n, act_w, &ones);

    let peak = activation.iter().copied().fold(0.0, f64::max);
    let scaled: Vec<f64> = activation.iter().map(|a| a / peak).collect();
    let norm_w: Vec<f64> = kernel.iter().map(|f| f + GBVS_EPSILON).collect();
    let (normalized, chain_n, it_n) = reversible_equilibrium(n, norm_w, &scaled);

    let mut reports = Vec::new();
    if trace {
        reports.push(ChainReport {
            scale,
            channel,
            stage: "activation",
            nodes: n,
            iterations: it_a,
            residual: chain_a.residual(&activation),
        });
        reports.push(ChainReport {
            scale,
            channel,
            stage: "normalization",
            nodes: n,
            iterations: it_n,
            residual: chain_n.residual(&normalized),
        });
    }
    MapOutcome { map: Plane { width: feature.width, height: feature.height, data: normalized }, reports }
}

fn run(image: &Image, trace: bool) -> Result<(SaliencyMap, Vec<ChainReport>), SaliencyError> {
    let (w, h) = (image.width(), image.height());
    if w < MIN_SIDE || h < MIN_SIDE {
        return Err(SaliencyError::ImageTooSmall { width: w, height: h });
    }
    let planes = feature_planes(image);
    let (fw, fh) = lattice_dims(w, h, LATTICE_MAX);
    let jobs: Vec<(usize, usize)> = (0..SCALES).flat_map(|s| (0..planes.len()).map(move |c| (s, c))).collect();
    let kernels: Vec<Vec<f64>> = (0..SCALES)
        .map(|s| {
            let (lw, lh) = lattice_dims(w, h, LATTICE_MAX >> s);
            distance_kernel(lw, lh)
        })
        .collect();
    let outcomes: Vec<MapOutcome> = jobs
        .par_iter()
        .map(|&(s, c)| {
            let (lw, lh) = lattice_dims(w, h, LATTICE_MAX >> s);
            let feature = resample(&planes[c], lw, lh);
            let mut out = activate_and_normalize(&feature, &kernels[s], s, c, trace);
            let mut up = resample(&out.map, fw, fh);
            up.normalize_sum();
            out.map = up;
            out
        })
        .collect();
    let mut total = Plane::zeros(fw, fh);
    let mut reports = Vec::new();
    for o in outcomes {
        for (t, v) in total.data.iter_mut().zip(&o.map.data) {
            *t += v;
        }
        reports.extend(o.reports);
    }
    total.normalize_sum();
    Ok((SaliencyMap { width: fw, height: fh, values: total.data, image_width: w, image_height: h }, reports))
}

pub fn gbvs(image: &Image) -> Result<SaliencyMap, SaliencyError> {
    run(image, false).map(|(m, _)| m)
}

/// Like [`gbvs`], also reporting the equilibrium residual of every chain.
pub fn gbvs_traced(image: &Image) -> Result<(SaliencyMap, Vec<ChainReport>), SaliencyError> {
    run(image, true)
}

/// Bag of words of a query image from `n` saliency-proportional samples.
/// Samples carry no surrounding ring.
pub fn query_bow(
    query: &Image,
    vocab: &Vocabulary,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<BowHistogram, SaliencyError> {
    let map = gbvs(query)?;
    query_bow_with_map(query, &map, vocab, n, m, seed)
}

pub fn query_bow_with_map(
    query: &Image,
    map: &SaliencyMap,
    vocab: &Vocabulary,
    n: usize,
    m: usize,
    seed: u64,
) -> Result<BowHistogram, SaliencyError> {
    if n == 0 {
        return Err(SaliencyError::NoSamples);
    }
    let samples = sample_points(map, n, SamplingMode::Proportional, seed);
    let mut descriptors = Vec::with_capacity(n);
    for &(x, y) in &samples.points {
        let patch = extract_image_patch(query, (x.floor() as i64, y.floor() as i64), m)?;
        descriptors.push(describe(&patch, vocab.descriptor_kind())?);
    }
    Ok(encode_bow(&descriptors, vocab)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{assign_word, DescriptorSet};
    use crate::imaging::{rgb_descriptor, DescriptorKind};
    use rand::Rng;

    fn noise_image(w: usize, h: usize, seed: u64) -> Image {
        let mut rng = crate::seed::rng(seed);
        let px = (0..w * h * 3).map(|_| rng.random::<u8>()).collect();
        Image::new("noise", w, h, Channels::Rgb8, px).unwrap()
    }

    #[test]
    fn lattice_shapes() {
        assert_eq!(lattice_dims(64, 64, 32), (32, 32));
        assert_eq!(lattice_dims(1318, 1188, 32), (32, 29));
        assert_eq!(lattice_dims(100, 200, 8), (4, 8));
        assert_eq!(lattice_dims(16, 16, 32), (16, 16));
    }

    #[test]
    fn output_is_a_distribution() {
        let map = gbvs(&noise_image(48, 40, 1)).unwrap();
        assert!((map.values.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(map.values.iter().all(|&v| v >= 0.0));
        assert_eq!((map.width, map.height), (32, 27));
    }

    #[test]
    fn constant_image_is_uniform() {
        let map = gbvs(&Image::filled("c", 32, 32, Channels::Gray8, 77)).unwrap();
        let u = 1.0 / map.values.len() as f64;
        // only the normalization chain's spatial kernel shapes a flat activation
        assert!(map.values.iter().all(|&v| v > 0.0 && (v - u).abs() < u));
    }

    #[test]
    fn closed_form_agrees_with_plain_power_iteration() {
        let feature = Plane { width: 6, height: 5, data: (0..30).map(|i| ((i * 37) % 11) as f64 / 10.0).collect() };
        let kernel = distance_kernel(6, 5);
        let n = 30;
        let mut w = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                w[i * n + j] = (feature.data[i] - feature.data[j]).abs() * kernel[i * n + j] + GBVS_EPSILON;
            }
        }
        let chain = MarkovChain::from_weights(n, w.clone());
        let (from_uniform, _) = chain.stationary(vec![1.0; n], 1e-14, 100_000);
        let (seeded, _, iterations) = reversible_equilibrium(n, w, &vec![1.0; n]);
        assert!(iterations <= 3, "closed form should already be stationary");
        for (a, b) in from_uniform.iter().zip(&seeded) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn query_histograms() {
        let img = noise_image(40, 40, 4);
        let rows: Vec<Vec<f32>> = (0..5).map(|i| vec![i as f32 / 4.0; 27]).collect();
        let vocab =
            Vocabulary::from_centroids(&DescriptorSet::from_rows(&rows).unwrap(), DescriptorKind::Rgb, 0).unwrap();
        let one = query_bow(&img, &vocab, 1, 3, 9).unwrap();
        assert_eq!(one.total(), 1);
        let a = query_bow(&img, &vocab, 25, 3, 9).unwrap();
        assert_eq!(a, query_bow(&img, &vocab, 25, 3, 9).unwrap());
        assert!(matches!(query_bow(&img, &vocab, 0, 3, 9), Err(SaliencyError::NoSamples)));

        // a flat query at the fill level yields identical descriptors, even at the border
        let gray = Image::filled("g", 40, 40, Channels::Rgb8, 128);
        let h = query_bow(&gray, &vocab, 30, 3, 2).unwrap();
        let patch = extract_image_patch(&gray, (20, 20), 3).unwrap();
        let word = assign_word(&rgb_descriptor(&patch).unwrap(), &vocab).unwrap();
        assert_eq!(h.counts()[word], 30);
    }

    #[test]
    fn small_images_are_rejected() {
        assert!(matches!(
            gbvs(&Image::filled("s", 15, 40, Channels::Gray8, 0)),
            Err(SaliencyError::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn pgm_header_and_peak() {
        let map = SaliencyMap::from_values(2, 1, vec![1.0, 3.0], 4, 2);
        let pgm = map.to_pgm();
        let header = b"P5\n2 1\n65535\n";
        assert_eq!(&pgm[..header.len()], header);
        assert_eq!(&pgm[header.len() + 2..], &[0xFF, 0xFF]);
    }
}
