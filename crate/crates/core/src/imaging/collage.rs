use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{Channels, Image, ImagingError};
use crate::seed;

pub const DEFAULT_MARGIN: usize = 18;
const BACKGROUND: u8 = 128;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub rows: usize,
    pub cols: usize,
}

/// The squarest grid that holds `pool_size` images.
pub fn default_grid(pool_size: usize) -> GridSpec {
    let cols = ((pool_size.max(1) as f64).sqrt().ceil() as usize).max(1);
    let rows = pool_size.max(1).div_ceil(cols);
    GridSpec { rows, cols }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Cell {
    pub row: usize,
    pub col: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Placement {
    pub id: String,
    pub row: usize,
    pub col: usize,
}

/// Half-open pixel rectangle `[x0, x1) x [y0, y1)` in canvas coordinates.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Rect {
    pub x0: i64,
    pub y0: i64,
    pub x1: i64,
    pub y1: i64,
}

impl Rect {
    pub fn contains(&self, x: i64, y: i64) -> bool {
        x >= self.x0 && x < self.x1 && y >= self.y0 && y < self.y1
    }
}

fn default_background() -> u8 {
    BACKGROUND
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollageLayout {
    pub rows: usize,
    pub cols: usize,
    pub cell_width: usize,
    pub cell_height: usize,
    pub margin: usize,
    #[serde(default = "default_background")]
    pub background_value: u8,
    pub seed: u64,
    pub placements: Vec<Placement>,
    pub target_cell: Cell,
}

impl CollageLayout {
    pub fn canvas_width(&self) -> usize {
        self.cols * (self.cell_width + self.margin) + self.margin
    }

    pub fn canvas_height(&self) -> usize {
        self.rows * (self.cell_height + self.margin) + self.margin
    }

    /// Pixel rectangle of the image slot at `cell`.
    pub fn cell_rect(&self, cell: Cell) -> Rect {
        let x0 = (self.margin + cell.col * (self.cell_width + self.margin)) as i64;
        let y0 = (self.margin + cell.row * (self.cell_height + self.margin)) as i64;
        Rect { x0, y0, x1: x0 + self.cell_width as i64, y1: y0 + self.cell_height as i64 }
    }

    /// Grid slot whose image rectangle contains the pixel, if any. Margins and
    /// off-canvas pixels map to `None`.
    pub fn cell_at(&self, x: i64, y: i64) -> Option<Cell> {
        if x < 0 || y < 0 {
            return None;
        }
        let (x, y) = (x as usize, y as usize);
        let pitch_x = self.cell_width + self.margin;
        let pitch_y = self.cell_height + self.margin;
        if x < self.margin || y < self.margin {
            return None;
        }
        let (col, ox) = ((x - self.margin) / pitch_x, (x - self.margin) % pitch_x);
        let (row, oy) = ((y - self.margin) / pitch_y, (y - self.margin) % pitch_y);
        (col < self.cols && row < self.rows && ox < self.cell_width && oy < self.cell_height)
            .then_some(Cell { row, col })
    }

    /// Cell -> index into `placements`.
    pub fn occupancy(&self) -> HashMap<Cell, usize> {
        self.placements.iter().enumerate().map(|(i, p)| (Cell { row: p.row, col: p.col }, i)).collect()
    }

    pub fn cell_of(&self, id: &str) -> Option<Cell> {
        self.placements.iter().find(|p| p.id == id).map(|p| Cell { row: p.row, col: p.col })
    }
}

fn validate_pool(pool: &[Image]) -> Result<(), ImagingError> {
    let first = pool.first().ok_or(ImagingError::EmptyPool)?;
    let mut ids = HashSet::new();
    for img in pool {
        if img.channels() != first.channels() {
            return Err(ImagingError::MixedChannels);
        }
        if img.width() != first.width() || img.height() != first.height() {
            return Err(ImagingError::MixedDimensions(img.id().to_string()));
        }
        if !ids.insert(img.id()) {
            return Err(ImagingError::DuplicateId(img.id().to_string()));
        }
    }
    Ok(())
}

/// Places every pool image into a distinct grid cell by a seeded random
/// permutation of the cells. Pool order and seed fully determine the layout.
pub fn plan_collage(pool: &[Image], grid: GridSpec, target_id: &str, seed: u64) -> Result<CollageLayout, ImagingError> {
    validate_pool(pool)?;
    let n_cells = grid.rows * grid.cols;
    if n_cells < pool.len() {
        return Err(ImagingError::GridTooSmall { rows: grid.rows, cols: grid.cols, pool: pool.len() });
    }
    if !pool.iter().any(|img| img.id() == target_id) {
        return Err(ImagingError::UnknownTarget(target_id.to_string()));
    }
    let mut cells: Vec<usize> = (0..n_cells).collect();
    cells.shuffle(&mut seed::rng(seed));
    let placements: Vec<Placement> = pool
        .iter()
        .zip(&cells)
        .map(|(img, &c)| Placement { id: img.id().to_string(), row: c / grid.cols, col: c % grid.cols })
        .collect();
    let target = placements.iter().find(|p| p.id == target_id).expect("target checked above");
    let target_cell = Cell { row: target.row, col: target.col };
    Ok(CollageLayout {
        rows: grid.rows,
        cols: grid.cols,
        cell_width: pool[0].width(),
        cell_height: pool[0].height(),
        margin: DEFAULT_MARGIN,
        background_value: BACKGROUND,
        seed,
        placements,
        target_cell,
    })
}

/// Paints a layout onto a background canvas.
pub fn render_collage(layout: &CollageLayout, pool: &[Image]) -> Result<Image, ImagingError> {
    let view = CollageView::new(layout, pool)?;
    let channels = view.channels();
    let (w, h) = (layout.canvas_width(), layout.canvas_height());
    let mut canvas = Image::filled("collage", w, h, channels, layout.background_value);
    let c = channels.count();
    for p in &layout.placements {
        let img = view.image_at(Cell { row: p.row, col: p.col }).expect("placed");
        let rect = layout.cell_rect(Cell { row: p.row, col: p.col });
        for y in 0..layout.cell_height {
            let dst = ((rect.y0 as usize + y) * w + rect.x0 as usize) * c;
            canvas.pixels_mut()[dst..dst + layout.cell_width * c].copy_from_slice(img.row(y));
        }
    }
    Ok(canvas)
}

/// Plans and renders a collage in one step.
pub fn synthesize_collage(
    pool: &[Image],
    grid: GridSpec,
    target_id: &str,
    seed: u64,
) -> Result<(CollageLayout, Image), ImagingError> {
    let layout = plan_collage(pool, grid, target_id, seed)?;
    let canvas = render_collage(&layout, pool)?;
    Ok((layout, canvas))
}

/// A collage that reads pixels straight from the pool instead of a rendered
/// canvas. Only image-slot pixels are addressable.
pub struct CollageView<'a> {
    layout: &'a CollageLayout,
    channels: Channels,
    cells: Vec<Option<&'a Image>>,
}

impl<'a> CollageView<'a> {
    pub fn new(layout: &'a CollageLayout, pool: &'a [Image]) -> Result<Self, ImagingError> {
        let by_id: HashMap<&str, &Image> = pool.iter().map(|img| (img.id(), img)).collect();
        let mut cells = vec![None; layout.rows * layout.cols];
        let mut channels = None;
        for p in &layout.placements {
            let img = *by_id.get(p.id.as_str()).ok_or_else(|| ImagingError::MissingImage(p.id.clone()))?;
            if img.width() != layout.cell_width || img.height() != layout.cell_height {
                return Err(ImagingError::MixedDimensions(p.id.clone()));
            }
            match channels {
                None => channels = Some(img.channels()),
                Some(c) if c != img.channels() => return Err(ImagingError::MixedChannels),
                _ => {}
            }
            cells[p.row * layout.cols + p.col] = Some(img);
        }
        let channels = channels.ok_or(ImagingError::EmptyPool)?;
        Ok(Self { layout, channels, cells })
    }

    pub fn layout(&self) -> &CollageLayout {
        self.layout
    }

    pub fn channels(&self) -> Channels {
        self.channels
    }

    pub fn image_at(&self, cell: Cell) -> Option<&'a Image> {
        self.cells.get(cell.row * self.layout.cols + cell.col).copied().flatten()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool(n: usize, w: usize, h: usize) -> Vec<Image> {
        (0..n).map(|i| Image::filled(format!("img{i:03}"), w, h, Channels::Rgb8, (i % 250) as u8)).collect()
    }

    #[test]
    fn oreilly_sized_pool_places_each_id_once() {
        let pool = pool(78, 8, 10);
        let layout = plan_collage(&pool, GridSpec { rows: 6, cols: 13 }, "img005", 7).unwrap();
        assert_eq!(layout.placements.len(), 78);
        let ids: HashSet<_> = layout.placements.iter().map(|p| p.id.clone()).collect();
        assert_eq!(ids.len(), 78);
        let cells: HashSet<_> = layout.placements.iter().map(|p| (p.row, p.col)).collect();
        assert_eq!(cells.len(), 78);
        assert_eq!(layout.cell_of("img005"), Some(layout.target_cell));
    }

    #[test]
    fn rendering_is_deterministic_and_sized() {
        let pool = pool(10, 6, 4);
        let (l1, c1) = synthesize_collage(&pool, GridSpec { rows: 3, cols: 4 }, "img002", 99).unwrap();
        let (l2, c2) = synthesize_collage(&pool, GridSpec { rows: 3, cols: 4 }, "img002", 99).unwrap();
        assert_eq!(l1, l2);
        assert_eq!(c1.pixels(), c2.pixels());
        assert_eq!(c1.width(), 4 * (6 + 18) + 18);
        assert_eq!(c1.height(), 3 * (4 + 18) + 18);
        // two unused cells and every margin stay at the background value
        let rendered = c1.pixels().iter().filter(|&&v| v != 128).count();
        let expected: usize = pool.iter().filter(|i| i.pixel(0, 0)[0] != 128).count() * 6 * 4 * 3;
        assert_eq!(rendered, expected);
    }

    #[test]
    fn target_cell_covers_grid_over_many_seeds() {
        let pool = pool(84, 2, 2);
        let grid = GridSpec { rows: 7, cols: 12 };
        let distinct: HashSet<_> =
            (0..1000).map(|s| plan_collage(&pool, grid, "img000", s).unwrap().target_cell).collect();
        assert!(distinct.len() >= 60, "{}", distinct.len());
    }

    #[test]
    fn errors() {
        let p = pool(5, 2, 2);
        assert!(matches!(
            plan_collage(&p, GridSpec { rows: 2, cols: 2 }, "img000", 0),
            Err(ImagingError::GridTooSmall { .. })
        ));
        assert!(matches!(
            plan_collage(&p, GridSpec { rows: 2, cols: 3 }, "nope", 0),
            Err(ImagingError::UnknownTarget(_))
        ));
        let mut mixed = p.clone();
        mixed.push(Image::filled("gray", 2, 2, Channels::Gray8, 0));
        assert!(matches!(
            plan_collage(&mixed, GridSpec { rows: 3, cols: 3 }, "img000", 0),
            Err(ImagingError::MixedChannels)
        ));
    }

    #[test]
    fn cell_lookup_respects_margins() {
        let layout = plan_collage(&pool(4, 10, 5), GridSpec { rows: 2, cols: 2 }, "img000", 1).unwrap();
        assert_eq!(layout.cell_at(17, 18), None);
        assert_eq!(layout.cell_at(18, 18), Some(Cell { row: 0, col: 0 }));
        assert_eq!(layout.cell_at(27, 22), Some(Cell { row: 0, col: 0 }));
        assert_eq!(layout.cell_at(28, 22), None);
        assert_eq!(layout.cell_at(46, 41), Some(Cell { row: 1, col: 1 }));
        assert_eq!(layout.cell_at(-1, 20), None);
        assert_eq!(layout.cell_at(500, 20), None);
    }

    #[test]
    fn default_grid_is_squarest() {
        assert_eq!(default_grid(84), GridSpec { rows: 9, cols: 10 });
        assert_eq!(default_grid(78), GridSpec { rows: 9, cols: 9 });
        assert_eq!(default_grid(64), GridSpec { rows: 8, cols: 8 });
        assert_eq!(default_grid(1), GridSpec { rows: 1, cols: 1 });
    }

    #[test]
    fn layout_json_shape() {
        let layout = plan_collage(&pool(2, 2, 2), GridSpec { rows: 1, cols: 2 }, "img001", 3).unwrap();
        let v: serde_json::Value = serde_json::to_value(&layout).unwrap();
        for key in ["rows", "cols", "cell_width", "cell_height", "margin", "seed", "placements", "target_cell"] {
            assert!(v.get(key).is_some(), "missing {key}");
        }
        assert!(v["placements"][0].get("id").is_some());
    }
}
