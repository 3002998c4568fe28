use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::imaging::{Channels, Image};
use crate::protocol::Task;
use crate::seed;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoolSpec {
    pub task: Task,
    pub n_images: usize,
    pub width: usize,
    pub height: usize,
    pub seed: u64,
}

impl PoolSpec {
    pub fn new(task: Task, seed: u64) -> Self {
        Self { task, n_images: task.default_pool_size(), width: 64, height: 84, seed }
    }
}

/// Shared palette: covers differ in how they combine these colours, so
/// visual words recur across images.
const PALETTE: [[u8; 3]; 10] = [
    [200, 40, 40],
    [230, 140, 30],
    [240, 210, 60],
    [60, 150, 70],
    [40, 90, 170],
    [110, 60, 150],
    [30, 30, 35],
    [235, 235, 225],
    [120, 190, 210],
    [150, 100, 60],
];

struct Canvas {
    w: usize,
    h: usize,
    c: usize,
    px: Vec<u8>,
}

impl Canvas {
    fn new(w: usize, h: usize, c: usize, fill: &[u8]) -> Self {
        let mut px = Vec::with_capacity(w * h * c);
        for _ in 0..w * h {
            px.extend_from_slice(&fill[..c]);
        }
        Self { w, h, c, px }
    }

    fn put(&mut self, x: i64, y: i64, color: &[u8]) {
        if x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h {
            let i = (y as usize * self.w + x as usize) * self.c;
            self.px[i..i + self.c].copy_from_slice(&color[..self.c]);
        }
    }

    fn rect(&mut self, x0: f64, y0: f64, x1: f64, y1: f64, color: &[u8]) {
        for y in y0.floor() as i64..y1.ceil() as i64 {
            for x in x0.floor() as i64..x1.ceil() as i64 {
                self.put(x, y, color);
            }
        }
    }

    fn ellipse(&mut self, cx: f64, cy: f64, rx: f64, ry: f64, color: &[u8]) {
        for y in (cy - ry).floor() as i64..=(cy + ry).ceil() as i64 {
            for x in (cx - rx).floor() as i64..=(cx + rx).ceil() as i64 {
                let dx = (x as f64 + 0.5 - cx) / rx;
                let dy = (y as f64 + 0.5 - cy) / ry;
                if dx * dx + dy * dy <= 1.0 {
                    self.put(x, y, color);
                }
            }
        }
    }

    fn triangle(&mut self, cx: f64, top: f64, half: f64, height: f64, color: &[u8]) {
        for y in top.floor() as i64..(top + height).ceil() as i64 {
            let frac = ((y as f64 - top) / height).clamp(0.0, 1.0);
            let span = half * frac;
            for x in (cx - span).floor() as i64..=(cx + span).ceil() as i64 {
                self.put(x, y, color);
            }
        }
    }

    fn stripes(&mut self, y0: f64, y1: f64, period: usize, color: &[u8]) {
        for y in y0.floor() as i64..y1.ceil() as i64 {
            for x in 0..self.w as i64 {
                if ((x + y) as usize / period.max(1)).is_multiple_of(2) {
                    self.put(x, y, color);
                }
            }
        }
    }

    fn noise(&mut self, rng: &mut impl Rng, sigma: f64) {
        let n = Normal::new(0.0, sigma).expect("finite sigma");
        for v in &mut self.px {
            *v = (f64::from(*v) + n.sample(rng)).round().clamp(0.0, 255.0) as u8;
        }
    }
}

fn pick<'a>(rng: &mut impl Rng, exclude: &[usize]) -> (usize, &'a [u8; 3]) {
    loop {
        let i = rng.random_range(0..PALETTE.len());
        if !exclude.contains(&i) {
            return (i, &PALETTE[i]);
        }
    }
}

fn amazon(rng: &mut impl Rng, w: usize, h: usize) -> Canvas {
    let (bg_i, bg) = pick(rng, &[]);
    let mut cv = Canvas::new(w, h, 3, bg);
    let (wf, hf) = (w as f64, h as f64);
    let n_shapes = rng.random_range(2..=4);
    let mut used = vec![bg_i];
    for _ in 0..n_shapes {
        let (ci, color) = pick(rng, &used);
        used.push(ci);
        match rng.random_range(0..5) {
            0 => {
                let y0 = rng.random_range(0.0..hf * 0.8);
                cv.rect(0.0, y0, wf, y0 + rng.random_range(hf * 0.1..hf * 0.35), color);
            }
            1 => cv.ellipse(
                rng.random_range(wf * 0.2..wf * 0.8),
                rng.random_range(hf * 0.2..hf * 0.8),
                rng.random_range(wf * 0.12..wf * 0.4),
                rng.random_range(hf * 0.1..hf * 0.3),
                color,
            ),
            2 => cv.triangle(
                rng.random_range(wf * 0.3..wf * 0.7),
                rng.random_range(hf * 0.1..hf * 0.5),
                rng.random_range(wf * 0.2..wf * 0.5),
                rng.random_range(hf * 0.2..hf * 0.45),
                color,
            ),
            3 => {
                let y0 = rng.random_range(0.0..hf * 0.6);
                cv.stripes(y0, y0 + rng.random_range(hf * 0.15..hf * 0.4), rng.random_range(3..9), color);
            }
            _ => {
                let x0 = rng.random_range(0.0..wf * 0.6);
                let y0 = rng.random_range(0.0..hf * 0.6);
                cv.rect(
                    x0,
                    y0,
                    x0 + rng.random_range(wf * 0.2..wf * 0.5),
                    y0 + rng.random_range(hf * 0.15..hf * 0.4),
                    color,
                );
            }
        }
    }
    // Title and author lines.
    let (_, text) = pick(rng, &[bg_i]);
    let ty = rng.random_range(hf * 0.05..hf * 0.75);
    for line in 0..rng.random_range(1..=3) {
        let y = ty + line as f64 * hf * 0.07;
        cv.rect(wf * 0.12, y, wf * rng.random_range(0.5..0.9), y + hf * 0.035, text);
    }
    cv.noise(rng, 5.0);
    cv
}

fn oreilly(rng: &mut impl Rng, w: usize, h: usize) -> Canvas {
    let mut cv = Canvas::new(w, h, 3, &[244, 244, 240]);
    let (wf, hf) = (w as f64, h as f64);
    let (band_i, band) = pick(rng, &[6, 7]);
    cv.rect(0.0, 0.0, wf, hf * 0.06, band);
    // Woodcut animal: a cluster of dark ellipses with hatching.
    let ink = [40u8, 40, 40];
    let cx = wf * rng.random_range(0.4..0.6);
    let cy = hf * rng.random_range(0.3..0.4);
    cv.ellipse(cx, cy, wf * rng.random_range(0.18..0.32), hf * rng.random_range(0.1..0.16), &ink);
    for _ in 0..rng.random_range(2..5) {
        cv.ellipse(
            cx + wf * rng.random_range(-0.25..0.25),
            cy + hf * rng.random_range(-0.12..0.12),
            wf * rng.random_range(0.04..0.12),
            hf * rng.random_range(0.03..0.1),
            &ink,
        );
    }
    let hatch = [244u8, 244, 240];
    let period = rng.random_range(3..6);
    for y in (cy - hf * 0.12) as i64..(cy + hf * 0.12) as i64 {
        if y.rem_euclid(period) == 0 {
            for x in 0..w as i64 {
                if rng.random_bool(0.5) {
                    cv.put(x, y, &hatch);
                }
            }
        }
    }
    // Title block in the band colour.
    cv.rect(wf * 0.08, hf * 0.58, wf * 0.92, hf * 0.72, band);
    let (_, light) = pick(rng, &[band_i]);
    cv.rect(wf * 0.14, hf * 0.62, wf * rng.random_range(0.5..0.86), hf * 0.66, light);
    cv.rect(wf * 0.55, hf * 0.9, wf * 0.9, hf * 0.94, &[200, 30, 30]);
    cv.noise(rng, 4.0);
    cv
}

fn mugshot(rng: &mut impl Rng, w: usize, h: usize) -> Canvas {
    let bg = rng.random_range(170..235u8);
    let mut cv = Canvas::new(w, h, 1, &[bg]);
    let (wf, hf) = (w as f64, h as f64);
    let skin = [rng.random_range(110..200u8)];
    let hair = [rng.random_range(20..90u8)];
    let cx = wf * rng.random_range(0.45..0.55);
    cv.ellipse(cx, hf * 1.0, wf * 0.45, hf * 0.2, &[rng.random_range(30..120u8)]);
    cv.rect(cx - wf * 0.1, hf * 0.6, cx + wf * 0.1, hf * 0.85, &skin);
    let (rx, ry) = (wf * rng.random_range(0.22..0.3), hf * rng.random_range(0.22..0.28));
    let cy = hf * 0.45;
    cv.ellipse(cx, cy - ry * rng.random_range(0.3..0.6), rx * 1.05, ry * rng.random_range(0.6..0.9), &hair);
    cv.ellipse(cx, cy, rx, ry, &skin);
    let eye = [rng.random_range(10..60u8)];
    let ey = cy - ry * 0.2;
    let sep = rx * rng.random_range(0.35..0.5);
    cv.ellipse(cx - sep, ey, rx * 0.14, ry * 0.07, &eye);
    cv.ellipse(cx + sep, ey, rx * 0.14, ry * 0.07, &eye);
    cv.rect(cx - rx * 0.05, cy - ry * 0.05, cx + rx * 0.05, cy + ry * 0.25, &[skin[0].saturating_sub(30)]);
    cv.rect(cx - rx * 0.35, cy + ry * 0.45, cx + rx * 0.35, cy + ry * 0.53, &[skin[0] / 2]);
    cv.noise(rng, 6.0);
    cv
}

/// Deterministic stand-in image pool in the visual style of a task.
pub fn synthetic_pool(spec: &PoolSpec) -> Vec<Image> {
    (0..spec.n_images)
        .map(|i| {
            let mut rng = seed::rng(seed::derive_labeled(spec.seed, spec.task.name(), &[i as u64]));
            let cv = match spec.task {
                Task::Amazon => amazon(&mut rng, spec.width, spec.height),
                Task::OReilly => oreilly(&mut rng, spec.width, spec.height),
                Task::Mugshots => mugshot(&mut rng, spec.width, spec.height),
            };
            let channels = if cv.c == 1 { Channels::Gray8 } else { Channels::Rgb8 };
            Image::new(format!("{}_{i:03}", spec.task.name()), cv.w, cv.h, channels, cv.px)
                .expect("buffer sized by construction")
        })
        .collect()
}
