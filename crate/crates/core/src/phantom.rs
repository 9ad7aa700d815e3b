//! Deterministic synthetic test scenes on an 8-bit ceiling.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::ImageGrid;

pub const MIN_PHANTOM_SIZE: usize = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhantomKind {
    /// Bright disk of radius `size / 4` centred on a dark background.
    Circle,
    /// Square tiles of side `size / 8`, starting with `lo` at the origin.
    Checkerboard,
    /// Horizontal ramp from `lo` at column 0 to `hi` at the last column.
    Ramp,
}

impl std::str::FromStr for PhantomKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "circle" => Ok(Self::Circle),
            "checkerboard" => Ok(Self::Checkerboard),
            "ramp" => Ok(Self::Ramp),
            other => Err(Error::param("kind", format!("unknown phantom `{other}`"))),
        }
    }
}

/// Whether the centre of pixel `(x, y)` lies inside the circle phantom's disk.
pub fn in_disk(x: usize, y: usize, size: usize) -> bool {
    let c = size as f64 / 2.0;
    let r = size as f64 / 4.0;
    let (dx, dy) = (x as f64 + 0.5 - c, y as f64 + 0.5 - c);
    dx * dx + dy * dy <= r * r
}

pub fn phantom(kind: PhantomKind, size: usize, lo: f64, hi: f64) -> Result<ImageGrid> {
    if size < MIN_PHANTOM_SIZE {
        return Err(Error::param(
            "size",
            format!("must be at least {MIN_PHANTOM_SIZE}, got {size}"),
        ));
    }
    for (name, v) in [("lo", lo), ("hi", hi)] {
        if !(0.0..=255.0).contains(&v) {
            return Err(Error::param(name, format!("level {v} outside [0, 255]")));
        }
    }
    let tile = size / 8;
    ImageGrid::from_fn(size, size, 255.0, |x, y| match kind {
        PhantomKind::Circle => {
            if in_disk(x, y, size) {
                hi
            } else {
                lo
            }
        }
        PhantomKind::Checkerboard => {
            if (x / tile + y / tile).is_multiple_of(2) {
                lo
            } else {
                hi
            }
        }
        PhantomKind::Ramp => lo + (hi - lo) * x as f64 / (size - 1) as f64,
    })
}
