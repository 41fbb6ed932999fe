//! Ghost image reconstruction.
//!
//! * GI: `G(x) = ⟨[S − ⟨S⟩][I(x) − ⟨I(x)⟩]⟩`, evaluated in two passes
//!   (means first, then centered products) so large constant offsets in `S`
//!   do not cancel catastrophically.
//! * IGI: `G(x) = 1/(2(N−1)) Σ_{n=1}^{N−1} [S_{n+1} − S_n][I_{n+1}(x) − I_n(x)]`,
//!   which needs only the previous record and so runs in constant memory via
//!   [`IgiAccumulator`].

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dims, Error, Result};
use crate::measurement::{bucket_curve, MeasurementRecord, NoiseSpec, Position, RecordSource};
use crate::noise::per_step_noise_delta_bound;
use crate::pgm;
use crate::scene::ObjectMask;

/// Consecutive pairs summed together by the batch IGI reduction.
const IGI_CHUNK: usize = 64;

/// A signed reconstruction, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ReconImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl ReconImage {
    pub fn new(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::Contract(format!(
                "image of {width}x{height} needs {} values, got {}",
                width * height,
                values.len()
            )));
        }
        Ok(ReconImage {
            width,
            height,
            values,
        })
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

    pub fn get(&self, column: usize, row: usize) -> f64 {
        self.values[row * self.width + column]
    }

    /// Raw dump: `"GF64"`, width `u32`, height `u32`, four zero bytes, then
    /// the values as little-endian `f64`.
    pub fn write_f64(&self, path: &Path) -> Result<()> {
        let mut bytes = Vec::with_capacity(16 + 8 * self.values.len());
        bytes.extend_from_slice(b"GF64");
        bytes.extend_from_slice(&(self.width as u32).to_le_bytes());
        bytes.extend_from_slice(&(self.height as u32).to_le_bytes());
        bytes.extend_from_slice(&[0u8; 4]);
        for v in &self.values {
            bytes.extend_from_slice(&v.to_le_bytes());
        }
        std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
    }

    pub fn read_f64(path: &Path) -> Result<Self> {
        let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
        if bytes.len() < 16 || &bytes[..4] != b"GF64" {
            return Err(Error::format(path, "missing GF64 header"));
        }
        let width = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        let height = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let body = &bytes[16..];
        if body.len() != 8 * width * height {
            return Err(Error::format(
                path,
                format!(
                    "expected {} value bytes, found {}",
                    8 * width * height,
                    body.len()
                ),
            ));
        }
        let values = body
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(ReconImage {
            width,
            height,
            values,
        })
    }

    /// Writes a 16-bit PGM with `[min, max]` mapped onto `[0, 65535]`, and the
    /// two constants to a sidecar `<stem>.norm.txt` so the mapping can be
    /// inverted. Returns the sidecar path.
    pub fn write_pgm16(&self, path: &Path) -> Result<PathBuf> {
        let (min, max) = self
            .values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = max - min;
        let pixels: Vec<u16> = self
            .values
            .iter()
            .map(|v| {
                if span > 0.0 {
                    ((v - min) / span * 65535.0).round() as u16
                } else {
                    0
                }
            })
            .collect();
        pgm::write_gray16(path, self.width, self.height, &pixels)?;
        let sidecar = path.with_extension("norm.txt");
        std::fs::write(&sidecar, format!("min {min}\nmax {max}\n"))
            .map_err(|e| Error::io(&sidecar, e))?;
        Ok(sidecar)
    }
}

fn require_pairs(source: &dyn RecordSource) -> Result<()> {
    if source.len() < 2 {
        return Err(Error::Contract(format!(
            "need at least two measurements, got {}",
            source.len()
        )));
    }
    Ok(())
}

fn check_batch(dims: (usize, usize), batch: &[MeasurementRecord]) -> Result<()> {
    batch
        .iter()
        .try_for_each(|r| ensure_dims("record frame", dims, r.frame.dims()))
}

/// Conventional background-subtracted GI.
pub fn gi_reconstruct(source: &dyn RecordSource) -> Result<ReconImage> {
    gi_two_pass(source, &mut |_| Ok(()))
}

/// GI with a hook that sees every record of the first (mean) pass in order.
fn gi_two_pass(
    source: &dyn RecordSource,
    first_pass: &mut dyn FnMut(&MeasurementRecord) -> Result<()>,
) -> Result<ReconImage> {
    require_pairs(source)?;
    let dims = source.dims();
    let npix = dims.0 * dims.1;
    let n = source.len() as f64;

    let mut s_sum = 0.0;
    let mut i_sum = vec![0.0; npix];
    source.for_each_batch(&mut |batch| {
        check_batch(dims, batch)?;
        for r in batch {
            s_sum += r.s;
            for (acc, v) in i_sum.iter_mut().zip(r.frame.values()) {
                *acc += v;
            }
            first_pass(r)?;
        }
        Ok(())
    })?;
    let s_mean = s_sum / n;
    let i_mean: Vec<f64> = i_sum.iter().map(|v| v / n).collect();

    let mut cov = vec![0.0; npix];
    source.for_each_batch(&mut |batch| {
        for r in batch {
            let ds = r.s - s_mean;
            for ((acc, v), m) in cov.iter_mut().zip(r.frame.values()).zip(&i_mean) {
                *acc += ds * (v - m);
            }
        }
        Ok(())
    })?;
    for v in &mut cov {
        *v /= n;
    }
    ReconImage::new(dims.0, dims.1, cov)
}

/// GI and streaming IGI from one source in two passes instead of three.
///
/// `observe` sees every record exactly once, in order.
pub fn reconstruct_both(
    source: &dyn RecordSource,
    normalization: IgiNormalization,
    observe: &mut dyn FnMut(&MeasurementRecord),
) -> Result<(ReconImage, ReconImage)> {
    let mut acc = IgiAccumulator::new();
    let gi = gi_two_pass(source, &mut |r| {
        observe(r);
        acc.push(r)
    })?;
    Ok((gi, acc.finalize_with(normalization)?))
}

fn add_pair(sum: &mut [f64], prev: &MeasurementRecord, next: &MeasurementRecord) {
    let ds = next.s - prev.s;
    for ((acc, a), b) in sum
        .iter_mut()
        .zip(next.frame.values())
        .zip(prev.frame.values())
    {
        *acc += ds * (a - b);
    }
}

/// IGI over a whole series with the unbiased `1/(2(N−1))` normalization.
///
/// Pairs are summed in fixed-size chunks (in parallel where threads are
/// available) and the chunk sums combined in order, so the result is
/// deterministic but may differ from [`IgiAccumulator`] in the last bits.
pub fn igi_reconstruct(source: &dyn RecordSource) -> Result<ReconImage> {
    require_pairs(source)?;
    let dims = source.dims();
    let npix = dims.0 * dims.1;
    let mut total = vec![0.0; npix];
    let mut carry: Option<MeasurementRecord> = None;
    source.for_each_batch(&mut |batch| {
        check_batch(dims, batch)?;
        if batch.is_empty() {
            return Ok(());
        }
        if let Some(prev) = &carry {
            add_pair(&mut total, prev, &batch[0]);
        }
        let partials: Vec<Vec<f64>> = batch
            .par_windows(2)
            .chunks(IGI_CHUNK)
            .map(|pairs| {
                let mut sum = vec![0.0; npix];
                for pair in pairs {
                    add_pair(&mut sum, &pair[0], &pair[1]);
                }
                sum
            })
            .collect();
        for partial in partials {
            for (t, p) in total.iter_mut().zip(partial) {
                *t += p;
            }
        }
        carry = batch.last().cloned();
        Ok(())
    })?;
    let norm = 2.0 * (source.len() - 1) as f64;
    ReconImage::new(
        dims.0,
        dims.1,
        total.into_iter().map(|v| v / norm).collect(),
    )
}

/// How the IGI pair sum is scaled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IgiNormalization {
    /// `1 / (2·pairs)`, an unbiased covariance estimate.
    #[default]
    Unbiased,
    /// `1 / (2·N)` with `N = pairs + 1` records.
    PaperLiteral,
}

/// One-pass IGI state: the previous record plus the running pair sum.
#[derive(Debug, Clone, Default)]
pub struct IgiAccumulator {
    prev: Option<MeasurementRecord>,
    sum: Vec<f64>,
    pairs: u64,
}

impl IgiAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn pairs(&self) -> u64 {
        self.pairs
    }

    pub fn sum(&self) -> &[f64] {
        &self.sum
    }

    pub fn push(&mut self, record: &MeasurementRecord) -> Result<()> {
        match &mut self.prev {
            None => {
                self.sum = vec![0.0; record.frame.values().len()];
                self.prev = Some(record.clone());
            }
            Some(prev) => {
                ensure_dims("igi_push", prev.frame.dims(), record.frame.dims())?;
                add_pair(&mut self.sum, prev, record);
                self.pairs += 1;
                prev.s = record.s;
                prev.n = record.n;
                prev.frame
                    .values_mut()
                    .copy_from_slice(record.frame.values());
            }
        }
        Ok(())
    }

    /// Feeds every record of `source` in order.
    pub fn push_all(&mut self, source: &dyn RecordSource) -> Result<()> {
        source.for_each_batch(&mut |batch| batch.iter().try_for_each(|r| self.push(r)))
    }

    /// Snapshot with the unbiased normalization.
    pub fn finalize(&self) -> Result<ReconImage> {
        self.finalize_with(IgiNormalization::Unbiased)
    }

    pub fn finalize_with(&self, normalization: IgiNormalization) -> Result<ReconImage> {
        let prev = match &self.prev {
            Some(prev) if self.pairs > 0 => prev,
            _ => {
                return Err(Error::Contract(
                    "need at least two measurements before finalizing".into(),
                ))
            }
        };
        let norm = match normalization {
            IgiNormalization::Unbiased => 2.0 * self.pairs as f64,
            IgiNormalization::PaperLiteral => 2.0 * (self.pairs + 1) as f64,
        };
        let (w, h) = prev.frame.dims();
        ReconImage::new(w, h, self.sum.iter().map(|v| v / norm).collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ValidityRegime {
    #[serde(rename = "IGI regime")]
    Igi,
    #[serde(rename = "marginal")]
    Marginal,
    #[serde(rename = "breakdown")]
    Breakdown,
}

/// Whether per-step noise changes stay well below per-step signal changes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    pub signal_delta_rms: f64,
    pub noise_delta_bound: f64,
    pub ratio: f64,
    pub regime: ValidityRegime,
}

impl ValidityReport {
    pub fn new(signal_delta_rms: f64, noise_delta_bound: f64) -> Result<Self> {
        if signal_delta_rms.is_nan() || signal_delta_rms <= 0.0 {
            return Err(Error::Degenerate(
                "clean signal never changes between measurements".into(),
            ));
        }
        let ratio = noise_delta_bound / signal_delta_rms;
        let regime = if ratio < 0.1 {
            ValidityRegime::Igi
        } else if ratio < 1.0 {
            ValidityRegime::Marginal
        } else {
            ValidityRegime::Breakdown
        };
        Ok(ValidityReport {
            signal_delta_rms,
            noise_delta_bound,
            ratio,
            regime,
        })
    }
}

/// RMS of `v[n+1] − v[n]`.
pub fn delta_rms(values: &[f64]) -> f64 {
    if values.len() < 2 {
        return 0.0;
    }
    let ss: f64 = values.windows(2).map(|p| (p[1] - p[0]).powi(2)).sum();
    (ss / (values.len() - 1) as f64).sqrt()
}

/// Noise step bound as seen by the arm it corrupts.
pub fn effective_noise_delta_bound(noise: &NoiseSpec, object: &ObjectMask) -> Result<f64> {
    let bound = per_step_noise_delta_bound(&noise.waveform);
    Ok(match noise.position {
        Position::None => 0.0,
        Position::A => bound * object.fill_factor(),
        Position::B => bound,
        Position::C => {
            let (w, h) = object.dims();
            let weights = noise
                .spatial
                .as_ref()
                .ok_or_else(|| Error::Config("position C requires a spatial noise mask".into()))?
                .weights(w, h)?;
            bound * weights.iter().fold(0.0f64, |m, v| m.max(*v))
        }
    })
}

/// Validity report computed from a clean bucket sequence; positions none, A and B.
pub fn validity_from_bucket(
    clean_bucket: &[f64],
    noise: &NoiseSpec,
    object: &ObjectMask,
) -> Result<ValidityReport> {
    if noise.position == Position::C {
        return Err(Error::Contract(
            "position C compares against reference-pixel differences; use validity_diagnostic"
                .into(),
        ));
    }
    ValidityReport::new(
        delta_rms(clean_bucket),
        effective_noise_delta_bound(noise, object)?,
    )
}

/// Compares the per-step noise bound with the RMS per-step change of the clean
/// signal in the arm the noise enters.
pub fn validity_diagnostic(
    clean: &dyn RecordSource,
    noise: &NoiseSpec,
    object: &ObjectMask,
) -> Result<ValidityReport> {
    ensure_dims("validity_diagnostic", object.dims(), clean.dims())?;
    ValidityReport::new(
        arm_delta_rms(clean, noise)?,
        effective_noise_delta_bound(noise, object)?,
    )
}

/// RMS per-step change of the clean signal where `noise` would enter: the
/// bucket for positions none, A and B, the reference pixels under the spatial
/// mask for C.
pub fn arm_delta_rms(clean: &dyn RecordSource, noise: &NoiseSpec) -> Result<f64> {
    require_pairs(clean)?;
    if noise.position != Position::C {
        return Ok(delta_rms(&bucket_curve(clean)?));
    }
    let (w, h) = clean.dims();
    let weights = noise
        .spatial
        .as_ref()
        .ok_or_else(|| Error::Config("position C requires a spatial noise mask".into()))?
        .weights(w, h)?;
    let lit: Vec<usize> = (0..w * h).filter(|&i| weights[i] > 0.0).collect();
    let mut prev: Option<Vec<f64>> = None;
    let mut ss = 0.0;
    let mut terms = 0u64;
    clean.for_each_batch(&mut |batch| {
        for r in batch {
            let current: Vec<f64> = lit.iter().map(|&i| r.frame.values()[i]).collect();
            if let Some(p) = &prev {
                ss += current
                    .iter()
                    .zip(p)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>();
                terms += current.len() as u64;
            }
            prev = Some(current);
        }
        Ok(())
    })?;
    Ok(if terms > 0 {
        (ss / terms as f64).sqrt()
    } else {
        0.0
    })
}
