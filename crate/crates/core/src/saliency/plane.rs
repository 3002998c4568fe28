/// A dense single-channel float raster.
#[derive(Clone, Debug, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn zeros(width: usize, height: usize) -> Self {
        Self { width, height, data: vec![0.0; width * height] }
    }

    pub fn at(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn normalize_sum(&mut self) {
        let s = self.sum();
        if s > 0.0 {
            self.data.iter_mut().for_each(|v| *v /= s);
        }
    }
}

/// Box-filter weights mapping `src` samples onto `dst` samples: each target
/// sample averages the source interval it covers.
fn box_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|j| {
            let lo = j as f64 * scale;
            let hi = (j + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            (first..last)
                .filter_map(|i| {
                    let overlap = (hi.min(i as f64 + 1.0) - lo.max(i as f64)).max(0.0);
                    (overlap > 0.0).then_some((i, overlap / scale))
                })
                .collect()
        })
        .collect()
}

/// Area-weighted resampling, separable in x then y. Mirror-symmetric.
pub fn resample(src: &Plane, width: usize, height: usize) -> Plane {
    let wx = box_weights(src.width, width);
    let wy = box_weights(src.height, height);
    let mut tmp = Plane::zeros(width, src.height);
    for y in 0..src.height {
        let row = &src.data[y * src.width..(y + 1) * src.width];
        for (x, ws) in wx.iter().enumerate() {
            tmp.data[y * width + x] = ws.iter().map(|&(i, w)| row[i] * w).sum();
        }
    }
    let mut out = Plane::zeros(width, height);
    for (y, ws) in wy.iter().enumerate() {
        for x in 0..width {
            out.data[y * width + x] = ws.iter().map(|&(i, w)| tmp.data[i * width + x] * w).sum();
        }
    }
    out
}
