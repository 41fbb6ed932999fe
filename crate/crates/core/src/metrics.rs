//! Image quality against a known object, plus a brute-force covariance oracle.

use serde::{Deserialize, Serialize};

use crate::error::{ensure_dims, Error, Result};
use crate::measurement::MeasurementSeries;
use crate::reconstruct::ReconImage;
use crate::scene::ObjectMask;

/// Pixels with transmittance at or above this count as object.
pub const OBJECT_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    pub cnr: f64,
    pub pearson_r: f64,
    pub mse: f64,
}

impl QualityReport {
    pub fn evaluate(image: &ReconImage, truth: &ObjectMask) -> Result<Self> {
        Ok(QualityReport {
            cnr: cnr(image, truth)?,
            pearson_r: pearson(image, truth)?,
            mse: affine_mse(image, truth)?,
        })
    }
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// Pearson correlation of two equally long samples.
pub fn pearson_slices(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::Contract(format!(
            "pearson needs equal lengths, got {} and {}",
            a.len(),
            b.len()
        )));
    }
    let (ma, mb) = (mean(a), mean(b));
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if !(saa > 0.0 && sbb > 0.0) {
        return Err(Error::Degenerate(
            "pearson correlation of a constant sample".into(),
        ));
    }
    Ok((sab / (saa.sqrt() * sbb.sqrt())).clamp(-1.0, 1.0))
}

pub fn pearson(image: &ReconImage, truth: &ObjectMask) -> Result<f64> {
    ensure_dims("pearson", truth.dims(), image.dims())?;
    pearson_slices(image.values(), truth.values())
}

/// Pixelwise correlation between two reconstructions.
pub fn pearson_images(a: &ReconImage, b: &ReconImage) -> Result<f64> {
    ensure_dims("pearson_images", a.dims(), b.dims())?;
    pearson_slices(a.values(), b.values())
}

/// `(mean(object) − mean(background)) / std(background)`, population std.
pub fn cnr(image: &ReconImage, truth: &ObjectMask) -> Result<f64> {
    ensure_dims("cnr", truth.dims(), image.dims())?;
    let (mut object, mut background) = (Vec::new(), Vec::new());
    for (v, t) in image.values().iter().zip(truth.values()) {
        if *t >= OBJECT_THRESHOLD {
            object.push(*v);
        } else {
            background.push(*v);
        }
    }
    if object.is_empty() || background.len() < 2 {
        return Err(Error::Contract(format!(
            "cnr needs >= 1 object and >= 2 background pixels, got {} and {}",
            object.len(),
            background.len()
        )));
    }
    let mb = mean(&background);
    let var = background.iter().map(|v| (v - mb).powi(2)).sum::<f64>() / background.len() as f64;
    if var.is_nan() || var <= 0.0 {
        return Err(Error::Degenerate("background has zero spread".into()));
    }
    Ok((mean(&object) - mb) / var.sqrt())
}

/// Mean squared error after the least-squares fit `truth ≈ a·image + b`.
pub fn affine_mse(image: &ReconImage, truth: &ObjectMask) -> Result<f64> {
    ensure_dims("affine_mse", truth.dims(), image.dims())?;
    let x = image.values();
    let y = truth.values();
    let (mx, my) = (mean(x), mean(y));
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx.is_nan() || sxx <= 0.0 {
        return Err(Error::Degenerate("cannot fit a constant image".into()));
    }
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let slope = sxy / sxx;
    let offset = my - slope * mx;
    let sse: f64 = x
        .iter()
        .zip(y)
        .map(|(a, b)| (slope * a + offset - b).powi(2))
        .sum();
    Ok((sse / x.len() as f64).max(0.0))
}

/// Textbook population covariance between the bucket value and every
/// reference pixel, one pixel at a time.
///
/// Deliberately shares no code with [`crate::reconstruct::gi_reconstruct`];
/// tests use it as an independent reference.
pub fn oracle_covariance_image(series: &MeasurementSeries) -> Result<ReconImage> {
    let records = series.records();
    let n = records.len();
    if n < 2 {
        return Err(Error::Contract(format!(
            "need at least two measurements, got {n}"
        )));
    }
    let (w, h) = (series.width(), series.height());
    let buckets: Vec<f64> = records.iter().map(|r| r.s).collect();
    let bucket_mean = buckets.iter().sum::<f64>() / n as f64;
    let mut out = Vec::with_capacity(w * h);
    for row in 0..h {
        for col in 0..w {
            let pixel: Vec<f64> = records.iter().map(|r| r.frame.get(col, row)).collect();
            let pixel_mean = pixel.iter().sum::<f64>() / n as f64;
            let mut acc = 0.0;
            for k in 0..n {
                acc += (buckets[k] - bucket_mean) * (pixel[k] - pixel_mean);
            }
            out.push(acc / n as f64);
        }
    }
    ReconImage::new(w, h, out)
}
