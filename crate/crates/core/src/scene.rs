//! Objects and the bucket detector.

use std::path::Path;

use crate::error::{ensure_dims, Error, Result};
use crate::pgm;
use crate::speckle::Frame;

/// Per-pixel transmittance in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectMask {
    width: usize,
    height: usize,
    transmittance: Vec<f64>,
}

impl ObjectMask {
    pub fn new(width: usize, height: usize, transmittance: Vec<f64>) -> Result<Self> {
        if transmittance.len() != width * height {
            return Err(Error::Contract(format!(
                "mask of {width}x{height} needs {} values, got {}",
                width * height,
                transmittance.len()
            )));
        }
        if let Some(bad) = transmittance.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Config(format!(
                "transmittance must lie in [0, 1], found {bad}"
            )));
        }
        Ok(ObjectMask {
            width,
            height,
            transmittance,
        })
    }

    fn from_fn(width: usize, height: usize, inside: impl Fn(usize, usize) -> bool) -> Self {
        let mut transmittance = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                transmittance.push(if inside(x, y) { 1.0 } else { 0.0 });
            }
        }
        ObjectMask {
            width,
            height,
            transmittance,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn values(&self) -> &[f64] {
        &self.transmittance
    }

    pub fn get(&self, column: usize, row: usize) -> f64 {
        self.transmittance[row * self.width + column]
    }

    /// Mean transmittance `Σ T / (width·height)`.
    pub fn fill_factor(&self) -> f64 {
        self.transmittance.iter().sum::<f64>() / self.transmittance.len() as f64
    }
}

pub const BUILTIN_MASKS: [&str; 4] = ["TH", "double-slit", "disk", "checker"];

/// Renders one of the [`BUILTIN_MASKS`] as a binary mask.
pub fn builtin_mask(name: &str, width: usize, height: usize) -> Result<ObjectMask> {
    if width < 8 || height < 8 {
        return Err(Error::Config(format!(
            "builtin masks need at least 8x8 pixels, got {width}x{height}"
        )));
    }
    let mask = match name {
        "TH" => letters_th(width, height),
        "double-slit" => {
            let slit = (width / 10).max(1);
            let left = width / 3 - slit / 2;
            let right = 2 * width / 3 - slit / 2;
            let (top, bottom) = central_span(height);
            ObjectMask::from_fn(width, height, |x, y| {
                (top..bottom).contains(&y)
                    && ((left..left + slit).contains(&x) || (right..right + slit).contains(&x))
            })
        }
        "disk" => {
            let cx = (width as f64 - 1.0) / 2.0;
            let cy = (height as f64 - 1.0) / 2.0;
            let r = 0.3 * width.min(height) as f64;
            ObjectMask::from_fn(width, height, |x, y| {
                let dx = x as f64 - cx;
                let dy = y as f64 - cy;
                dx * dx + dy * dy <= r * r
            })
        }
        "checker" => {
            let cell = (width.min(height) / 8).max(1);
            ObjectMask::from_fn(width, height, |x, y| {
                (x / cell + y / cell).is_multiple_of(2)
            })
        }
        other => {
            return Err(Error::Config(format!(
                "unknown mask {other:?}; expected one of {}",
                BUILTIN_MASKS.join(", ")
            )))
        }
    };
    Ok(mask)
}

/// Start and end of the central 60% of `len`.
fn central_span(len: usize) -> (usize, usize) {
    let lo = (0.2 * len as f64).round() as usize;
    let hi = (0.8 * len as f64).round() as usize;
    (lo, hi.max(lo + 1))
}

/// Block letters T and H side by side in the central 60% of the grid.
fn letters_th(width: usize, height: usize) -> ObjectMask {
    let (x0, x1) = central_span(width);
    let (y0, y1) = central_span(height);
    let gap = ((x1 - x0) / 10).max(1);
    let letter = ((x1 - x0).saturating_sub(gap) / 2).max(1);
    let stroke = ((0.3 * letter as f64).round() as usize).max(1);
    let t_left = x0;
    let h_left = x0 + letter + gap;
    let bar_top = y0 + (y1 - y0 - stroke) / 2;

    ObjectMask::from_fn(width, height, |x, y| {
        if !(y0..y1).contains(&y) {
            return false;
        }
        let in_t = (t_left..t_left + letter).contains(&x) && {
            let stem = t_left + (letter - stroke) / 2;
            y < y0 + stroke || (stem..stem + stroke).contains(&x)
        };
        let in_h = (h_left..h_left + letter).contains(&x) && {
            let dx = x - h_left;
            dx < stroke || dx >= letter - stroke || (bar_top..bar_top + stroke).contains(&y)
        };
        in_t || in_h
    })
}

/// Loads an 8-bit binary PGM, mapping pixel `p` to transmittance `p / 255`.
pub fn load_mask(path: &Path) -> Result<ObjectMask> {
    let img = pgm::read_gray8(path)?;
    let transmittance = img.pixels.iter().map(|&p| p as f64 / 255.0).collect();
    Ok(ObjectMask {
        width: img.width,
        height: img.height,
        transmittance,
    })
}

/// Saves as 8-bit PGM with `round(T·255)`; binary masks round-trip exactly.
pub fn save_mask(mask: &ObjectMask, path: &Path) -> Result<()> {
    let pixels: Vec<u8> = mask
        .transmittance
        .iter()
        .map(|t| (t * 255.0).round() as u8)
        .collect();
    pgm::write_gray8(path, mask.width, mask.height, &pixels)
}

/// Total light reaching the bucket detector: `Σ I(x)·T(x)`.
pub fn bucket_signal(frame: &Frame, mask: &ObjectMask) -> Result<f64> {
    ensure_dims("bucket_signal", mask.dims(), frame.dims())?;
    Ok(frame
        .values()
        .iter()
        .zip(&mask.transmittance)
        .map(|(i, t)| i * t)
        .sum())
}
