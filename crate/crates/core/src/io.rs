//! Grayscale image files. Binary PGM (P5) is the canonical interchange format;
//! PNG is accepted on input and written when the extension asks for it.
//! Intensities are quantised to 8 bits only here.

use std::io::Write;
use std::path::Path;

use image::{DynamicImage, ImageFormat};

use crate::error::{Error, Result};
use crate::image::ImageGrid;

fn format_err(path: &Path, message: impl Into<String>) -> Error {
    Error::Format {
        path: path.to_path_buf(),
        message: message.into(),
    }
}

/// Reads an 8- or 16-bit grayscale PGM/PNG. 8-bit data gets a ceiling of 255,
/// 16-bit data 65535.
pub fn read_image(path: &Path) -> Result<ImageGrid> {
    let bytes = std::fs::read(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let format = image::guess_format(&bytes).map_err(|e| format_err(path, e.to_string()))?;
    if !matches!(format, ImageFormat::Pnm | ImageFormat::Png) {
        return Err(format_err(path, format!("unsupported format {format:?}")));
    }
    let decoded = image::load_from_memory_with_format(&bytes, format).map_err(|e| format_err(path, e.to_string()))?;
    let (w, h) = (decoded.width() as usize, decoded.height() as usize);
    match decoded {
        DynamicImage::ImageLuma8(buf) => {
            ImageGrid::new(w, h, buf.into_raw().into_iter().map(f64::from).collect(), 255.0)
        }
        DynamicImage::ImageLuma16(buf) => {
            ImageGrid::new(w, h, buf.into_raw().into_iter().map(f64::from).collect(), 65535.0)
        }
        other => Err(format_err(
            path,
            format!("expected a grayscale image, found {:?}", other.color()),
        )),
    }
}

/// Rounds to 8 bits relative to the image's ceiling.
pub fn quantize(img: &ImageGrid) -> Vec<u8> {
    let scale = 255.0 / img.max_level();
    img.data()
        .iter()
        .map(|v| (v * scale).round().clamp(0.0, 255.0) as u8)
        .collect()
}

/// Binary PGM bytes: `P5\n<w> <h>\n255\n` followed by row-major samples.
pub fn encode_pgm(img: &ImageGrid) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", img.width(), img.height()).into_bytes();
    out.extend(quantize(img));
    out
}

/// Writes PGM unless the extension is `.png`.
pub fn write_image(img: &ImageGrid, path: &Path) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let is_png = path
        .extension()
        .and_then(|e| e.to_str())
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    if is_png {
        let buf = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, quantize(img))
            .ok_or_else(|| format_err(path, "buffer size mismatch"))?;
        buf.save_with_format(path, ImageFormat::Png)
            .map_err(|e| format_err(path, e.to_string()))
    } else {
        let mut f = std::fs::File::create(path).map_err(io_err)?;
        f.write_all(&encode_pgm(img)).map_err(io_err)
    }
}
