use super::{Cell, Channels, CollageLayout, CollageView, Image, ImagingError, Rect};

/// Value written wherever a patch leaves the image slot owning its center.
pub const FILL_VALUE: u8 = 128;

/// Ring offsets in units of the window size, row-major with the center removed.
const RING: [(i64, i64); 8] = [(-1, -1), (0, -1), (1, -1), (-1, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

#[derive(Clone, Debug, PartialEq)]
pub struct Patch {
    pub size: usize,
    pub channels: Channels,
    pub pixels: Vec<u8>,
    /// Canvas pixel the patch is centered on.
    pub origin: (i64, i64),
    pub fixation_index: usize,
    /// 0 for the fixation-centered patch, 1..=8 for the surrounding ring.
    pub neighbor_index: u8,
    pub fill_fraction: f64,
}

impl Patch {
    pub fn pixel(&self, x: usize, y: usize) -> &[u8] {
        let c = self.channels.count();
        let at = (y * self.size + x) * c;
        &self.pixels[at..at + c]
    }
}

/// Pixel access for collage canvases, rendered or virtual.
pub trait CanvasSource {
    fn channels(&self) -> Channels;
    fn occupied(&self, cell: Cell) -> bool;
    /// Copies canvas row `y` starting at column `x0` into `out`. The span lies
    /// inside the image slot at `cell`.
    fn copy_span(&self, cell: Cell, x0: usize, y: usize, out: &mut [u8]);
}

impl CanvasSource for CollageView<'_> {
    fn channels(&self) -> Channels {
        CollageView::channels(self)
    }

    fn occupied(&self, cell: Cell) -> bool {
        self.image_at(cell).is_some()
    }

    fn copy_span(&self, cell: Cell, x0: usize, y: usize, out: &mut [u8]) {
        let img = self.image_at(cell).expect("span inside an occupied cell");
        let rect = self.layout().cell_rect(cell);
        let (lx, ly) = (x0 - rect.x0 as usize, y - rect.y0 as usize);
        let c = img.channels().count();
        let start = (ly * img.width() + lx) * c;
        out.copy_from_slice(&img.pixels()[start..start + out.len()]);
    }
}

struct RenderedCollage<'a> {
    canvas: &'a Image,
    cols: usize,
    occupied: Vec<bool>,
}

impl CanvasSource for RenderedCollage<'_> {
    fn channels(&self) -> Channels {
        self.canvas.channels()
    }

    fn occupied(&self, cell: Cell) -> bool {
        self.occupied[cell.row * self.cols + cell.col]
    }

    fn copy_span(&self, _cell: Cell, x0: usize, y: usize, out: &mut [u8]) {
        let c = self.canvas.channels().count();
        let start = (y * self.canvas.width() + x0) * c;
        out.copy_from_slice(&self.canvas.pixels()[start..start + out.len()]);
    }
}

fn check_window(m: usize) -> Result<(), ImagingError> {
    if m.is_multiple_of(2) {
        return Err(ImagingError::EvenWindow(m));
    }
    Ok(())
}

/// Copies the part of the `m x m` window around `center` that lies inside
/// `rect`; everything else is [`FILL_VALUE`].
fn window_from<F>(center: (i64, i64), m: usize, channels: Channels, rect: Option<Rect>, mut copy: F) -> (Vec<u8>, f64)
where
    F: FnMut(usize, usize, &mut [u8]),
{
    let c = channels.count();
    let mut pixels = vec![FILL_VALUE; m * m * c];
    let h = (m / 2) as i64;
    let (wx0, wy0) = (center.0 - h, center.1 - h);
    let mut kept = 0usize;
    if let Some(r) = rect {
        let x0 = wx0.max(r.x0);
        let x1 = (wx0 + m as i64).min(r.x1);
        let y0 = wy0.max(r.y0);
        let y1 = (wy0 + m as i64).min(r.y1);
        if x0 < x1 && y0 < y1 {
            let span = (x1 - x0) as usize;
            for y in y0..y1 {
                let py = (y - wy0) as usize;
                let px = (x0 - wx0) as usize;
                let at = (py * m + px) * c;
                copy(x0 as usize, y as usize, &mut pixels[at..at + span * c]);
            }
            kept = span * (y1 - y0) as usize;
        }
    }
    let fill_fraction = 1.0 - kept as f64 / (m * m) as f64;
    (pixels, fill_fraction)
}

/// A single `m x m` collage patch centered on a canvas pixel. Pixels outside
/// the occupied image slot containing `center` are filled.
pub fn extract_patch<S: CanvasSource + ?Sized>(
    layout: &CollageLayout,
    source: &S,
    center: (i64, i64),
    m: usize,
) -> Result<Patch, ImagingError> {
    check_window(m)?;
    let cell = layout.cell_at(center.0, center.1).filter(|&c| source.occupied(c));
    let rect = cell.map(|c| layout.cell_rect(c));
    let (pixels, fill_fraction) = window_from(center, m, source.channels(), rect, |x0, y, out| {
        source.copy_span(cell.expect("rect implies cell"), x0, y, out)
    });
    Ok(Patch {
        size: m,
        channels: source.channels(),
        pixels,
        origin: center,
        fixation_index: 0,
        neighbor_index: 0,
        fill_fraction,
    })
}

fn fixation_pixel(layout: &CollageLayout, fixation: (f64, f64)) -> Result<(i64, i64), ImagingError> {
    let (w, h) = (layout.canvas_width(), layout.canvas_height());
    let (x, y) = fixation;
    if !(x >= 0.0 && y >= 0.0 && x < w as f64 && y < h as f64) {
        return Err(ImagingError::OutOfCanvas { x, y, width: w, height: h });
    }
    Ok((x.floor() as i64, y.floor() as i64))
}

/// Center pixel of ring patch `neighbor` (0 = the fixation itself).
pub(crate) fn ring_center(
    layout: &CollageLayout,
    fixation: (f64, f64),
    neighbor: u8,
    m: usize,
) -> Result<(i64, i64), ImagingError> {
    let c = fixation_pixel(layout, fixation)?;
    if neighbor == 0 {
        return Ok(c);
    }
    let (dx, dy) = RING[usize::from(neighbor) - 1];
    Ok((c.0 + dx * m as i64, c.1 + dy * m as i64))
}

pub(crate) fn fixation_patches_from<S: CanvasSource + ?Sized>(
    layout: &CollageLayout,
    source: &S,
    fixation: (f64, f64),
    m: usize,
    ring: bool,
) -> Result<Vec<Patch>, ImagingError> {
    check_window(m)?;
    let center = fixation_pixel(layout, fixation)?;
    let mut out = Vec::with_capacity(if ring { 9 } else { 1 });
    out.push(extract_patch(layout, source, center, m)?);
    if ring {
        let step = m as i64;
        for (i, (dx, dy)) in RING.iter().enumerate() {
            let mut p = extract_patch(layout, source, (center.0 + dx * step, center.1 + dy * step), m)?;
            p.neighbor_index = (i + 1) as u8;
            out.push(p);
        }
    }
    Ok(out)
}

/// The fixation-centered patch plus its eight adjacent, non-overlapping
/// neighbours at offsets of exactly `m` pixels.
pub fn extract_fixation_patches(
    layout: &CollageLayout,
    canvas: &Image,
    fixation: (f64, f64),
    m: usize,
) -> Result<Vec<Patch>, ImagingError> {
    let mut occupied = vec![false; layout.rows * layout.cols];
    for p in &layout.placements {
        occupied[p.row * layout.cols + p.col] = true;
    }
    let source = RenderedCollage { canvas, cols: layout.cols, occupied };
    fixation_patches_from(layout, &source, fixation, m, true)
}

/// Window of a standalone image; pixels beyond its border are filled.
pub fn extract_image_patch(image: &Image, center: (i64, i64), m: usize) -> Result<Patch, ImagingError> {
    check_window(m)?;
    let rect = Rect { x0: 0, y0: 0, x1: image.width() as i64, y1: image.height() as i64 };
    let c = image.channels().count();
    let (pixels, fill_fraction) = window_from(center, m, image.channels(), Some(rect), |x0, y, out| {
        let start = (y * image.width() + x0) * c;
        out.copy_from_slice(&image.pixels()[start..start + out.len()]);
    });
    Ok(Patch {
        size: m,
        channels: image.channels(),
        pixels,
        origin: center,
        fixation_index: 0,
        neighbor_index: 0,
        fill_fraction,
    })
}
