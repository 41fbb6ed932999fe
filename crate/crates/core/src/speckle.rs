//! Pseudothermal speckle synthesis.
//!
//! A frame is the squared magnitude of a circular complex Gaussian field that
//! has been low-pass filtered with a Gaussian kernel `exp(-d²/r²)`, where `r`
//! is [`SpeckleParams::grain_radius`]. The filtered field stays circular
//! Gaussian, so intensities follow the negative-exponential law with contrast 1.
//! Its intensity autocorrelation is `exp(-d²/r²)`, giving a half-width at half
//! maximum of `r·√ln2 ≈ 0.83·r`.
//!
//! Filtering is circular (periodic boundaries) so the statistics are the same
//! at every pixel.

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{indexed_rng, Domain};

/// Kernel taps extend to `KERNEL_REACH · grain_radius` on each side.
const KERNEL_REACH: f64 = 3.0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpeckleParams {
    pub width: usize,
    pub height: usize,
    pub grain_radius: f64,
    pub mean_intensity: f64,
    pub seed: u64,
}

impl SpeckleParams {
    pub fn validate(&self) -> Result<()> {
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config(format!(
                "speckle grid must be non-empty, got {}x{}",
                self.width, self.height
            )));
        }
        if !(self.grain_radius.is_finite() && self.grain_radius > 0.0) {
            return Err(Error::Config(format!(
                "grain_radius must be positive and finite, got {}",
                self.grain_radius
            )));
        }
        if !(self.mean_intensity.is_finite() && self.mean_intensity > 0.0) {
            return Err(Error::Config(format!(
                "mean_intensity must be positive and finite, got {}",
                self.mean_intensity
            )));
        }
        Ok(())
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// A 2D intensity grid, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Frame {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl Frame {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Contract(format!(
                "frame of {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(Frame {
            width,
            height,
            values,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Frame {
            width,
            height,
            values: vec![value; width * height],
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
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn get(&self, column: usize, row: usize) -> f64 {
        self.values[row * self.width + column]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Precomputed filter state for one [`SpeckleParams`].
///
/// Reusing a generator across frames avoids rebuilding the kernel and index
/// tables; the output is identical to [`generate_frame`].
#[derive(Debug, Clone)]
pub struct SpeckleGenerator {
    params: SpeckleParams,
    kernel: Vec<f64>,
    reach: usize,
    scale: f64,
}

impl SpeckleGenerator {
    pub fn new(params: SpeckleParams) -> Result<Self> {
        params.validate()?;
        let r = params.grain_radius;
        let reach = (KERNEL_REACH * r).ceil() as usize;
        let kernel: Vec<f64> = (0..=2 * reach)
            .map(|i| {
                let d = i as f64 - reach as f64;
                (-(d * d) / (r * r)).exp()
            })
            .collect();
        // E|field|² = (Σk²)² for a unit-power circular input; rescale to the
        // requested mean.
        let energy: f64 = kernel.iter().map(|k| k * k).sum();
        let scale = params.mean_intensity / (energy * energy);
        Ok(SpeckleGenerator {
            params,
            kernel,
            reach,
            scale,
        })
    }

    pub fn params(&self) -> &SpeckleParams {
        &self.params
    }

    /// Frame `index` (1-based) of the sequence.
    pub fn frame(&self, index: u64) -> Result<Frame> {
        if index == 0 {
            return Err(Error::Contract("frame index must be >= 1".into()));
        }
        let (w, h) = self.params.dims();
        let npix = w * h;
        let mut rng = indexed_rng(self.params.seed, Domain::Speckle, index);
        let mut re = vec![0.0; npix];
        let mut im = vec![0.0; npix];
        // Unit-power circular complex Gaussian: each quadrature has variance 1/2.
        let half = std::f64::consts::FRAC_1_SQRT_2;
        for (a, b) in re.iter_mut().zip(im.iter_mut()) {
            let x: f64 = StandardNormal.sample(&mut rng);
            let y: f64 = StandardNormal.sample(&mut rng);
            *a = x * half;
            *b = y * half;
        }
        let mut scratch = vec![0.0; npix];
        self.filter(&mut re, &mut scratch);
        self.filter(&mut im, &mut scratch);
        let values = re
            .iter()
            .zip(&im)
            .map(|(a, b)| (a * a + b * b) * self.scale)
            .collect();
        Ok(Frame {
            width: w,
            height: h,
            values,
        })
    }

    /// Separable circular convolution of `field` with the kernel, in place.
    fn filter(&self, field: &mut [f64], scratch: &mut [f64]) {
        let (w, h) = self.params.dims();
        let reach = self.reach;
        let taps = self.kernel.len();

        // Horizontal pass: field -> scratch, through a wrapped row buffer.
        let mut padded = vec![0.0; w + 2 * reach];
        for y in 0..h {
            let row = &field[y * w..(y + 1) * w];
            for (i, p) in padded.iter_mut().enumerate() {
                *p = row[(i + w * (reach / w + 1) - reach) % w];
            }
            let out = &mut scratch[y * w..(y + 1) * w];
            for (x, o) in out.iter_mut().enumerate() {
                let window = &padded[x..x + taps];
                *o = window.iter().zip(&self.kernel).map(|(v, k)| v * k).sum();
            }
        }

        // Vertical pass: scratch -> field, accumulating whole rows.
        field.fill(0.0);
        for y in 0..h {
            let out = &mut field[y * w..(y + 1) * w];
            for (j, k) in self.kernel.iter().enumerate() {
                let src = (y + j + h * (reach / h + 1) - reach) % h;
                let row = &scratch[src * w..(src + 1) * w];
                for (o, v) in out.iter_mut().zip(row) {
                    *o += k * v;
                }
            }
        }
    }
}

/// Frame `frame_index` (1-based) of the speckle sequence defined by `params`.
pub fn generate_frame(params: &SpeckleParams, frame_index: u64) -> Result<Frame> {
    SpeckleGenerator::new(params.clone())?.frame(frame_index)
}

/// Iterator over frames `1..=count`. Clone it before consuming, or call
/// [`generate_sequence`] again, to replay.
#[derive(Debug, Clone)]
pub struct SpeckleSequence {
    generator: SpeckleGenerator,
    next: u64,
    count: u64,
}

impl Iterator for SpeckleSequence {
    type Item = Frame;

    fn next(&mut self) -> Option<Frame> {
        if self.next > self.count {
            return None;
        }
        let frame = self
            .generator
            .frame(self.next)
            .expect("sequence indices start at 1");
        self.next += 1;
        Some(frame)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let left = (self.count + 1 - self.next) as usize;
        (left, Some(left))
    }
}

impl ExactSizeIterator for SpeckleSequence {}

pub fn generate_sequence(params: &SpeckleParams, count: u64) -> Result<SpeckleSequence> {
    if count < 2 {
        return Err(Error::Config(format!(
            "a sequence needs at least 2 frames, got {count}"
        )));
    }
    Ok(SpeckleSequence {
        generator: SpeckleGenerator::new(params.clone())?,
        next: 1,
        count,
    })
}
