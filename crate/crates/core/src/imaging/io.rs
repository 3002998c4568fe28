//! PNG pools: a directory of `<id>.png` files.

use std::path::Path;

use ::image::{DynamicImage, GrayImage, RgbImage};

use super::{Channels, Image, ImagingError};

pub fn load_png(path: &Path, id: &str) -> Result<Image, ImagingError> {
    let decoded = ::image::open(path)?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(g) => Image::new(id, w, h, Channels::Gray8, g.into_raw()),
        other => Image::new(id, w, h, Channels::Rgb8, other.into_rgb8().into_raw()),
    }
}

pub fn encode_png(image: &Image) -> Result<Vec<u8>, ImagingError> {
    let (w, h) = (image.width() as u32, image.height() as u32);
    let dynamic = match image.channels() {
        Channels::Rgb8 => DynamicImage::ImageRgb8(
            RgbImage::from_raw(w, h, image.pixels().to_vec()).expect("buffer length checked on construction"),
        ),
        Channels::Gray8 => DynamicImage::ImageLuma8(
            GrayImage::from_raw(w, h, image.pixels().to_vec()).expect("buffer length checked on construction"),
        ),
    };
    let mut out = std::io::Cursor::new(Vec::new());
    dynamic.write_to(&mut out, ::image::ImageFormat::Png)?;
    Ok(out.into_inner())
}

/// Loads every `*.png` in `dir`, sorted by id (the file stem).
pub fn load_pool(dir: &Path) -> Result<Vec<Image>, ImagingError> {
    let mut entries: Vec<_> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|ext| ext.eq_ignore_ascii_case("png")))
        .collect();
    entries.sort();
    let mut pool = Vec::with_capacity(entries.len());
    for path in entries {
        let id = path.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        pool.push(load_png(&path, &id)?);
    }
    pool.sort_by(|a, b| a.id().cmp(b.id()));
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn png_round_trip_keeps_pixels_and_channels() {
        let dir = tempfile::tempdir().unwrap();
        let rgb = Image::new("b", 3, 2, Channels::Rgb8, (0..18).collect()).unwrap();
        let gray = Image::new("a", 2, 2, Channels::Gray8, vec![1, 2, 3, 4]).unwrap();
        for img in [&rgb, &gray] {
            std::fs::write(dir.path().join(format!("{}.png", img.id())), encode_png(img).unwrap()).unwrap();
        }
        std::fs::write(dir.path().join("notes.txt"), b"ignored").unwrap();
        let pool = load_pool(dir.path()).unwrap();
        assert_eq!(pool, vec![gray, rgb]);
    }
}
