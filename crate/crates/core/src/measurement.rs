//! The simulated experiment: speckle, object and background noise composed
//! into a sequence of `(S_n, I_n(x))` records.
//!
//! Noise enters exactly one arm:
//!
//! | position | bucket `S_n`              | reference `I_n(x)`        |
//! |----------|---------------------------|---------------------------|
//! | none     | `S⁰_n`                    | `F_n(x)`                  |
//! | A        | `S⁰_n + κ·Q_n`, `κ = ΣT/(w·h)` | `F_n(x)`             |
//! | B        | `S⁰_n + Q_n`              | `F_n(x)`                  |
//! | C        | `S⁰_n`                    | `F_n(x) + Q_n·weight(x)`  |
//!
//! where `F_n` is speckle frame `n` and `S⁰_n = Σ F_n(x)·T(x)`.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dims, Error, Result};
use crate::noise::{noise_value, NoiseWaveform, SpatialNoiseMask};
use crate::scene::{bucket_signal, ObjectMask};
use crate::speckle::{Frame, SpeckleGenerator, SpeckleParams};

/// Records generated together when streaming a scenario.
const STREAM_BATCH: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Position {
    #[serde(rename = "none")]
    None,
    /// Between the source and the object.
    A,
    /// Between the object and the bucket detector.
    B,
    /// Onto the reference detector.
    C,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub waveform: NoiseWaveform,
    pub position: Position,
    pub spatial: Option<SpatialNoiseMask>,
}

impl NoiseSpec {
    pub fn off() -> Self {
        NoiseSpec {
            waveform: NoiseWaveform::off(),
            position: Position::None,
            spatial: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub speckle: SpeckleParams,
    pub object: ObjectMask,
    pub count: usize,
    pub noise: NoiseSpec,
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        self.speckle.validate()?;
        self.noise.waveform.validate()?;
        if self.count < 2 {
            return Err(Error::Config(format!(
                "count must be at least 2, got {}",
                self.count
            )));
        }
        ensure_dims(
            "object mask vs speckle grid",
            self.speckle.dims(),
            self.object.dims(),
        )?;
        if self.noise.position == Position::C {
            match &self.noise.spatial {
                None => {
                    return Err(Error::Config(
                        "position C requires a spatial noise mask".into(),
                    ))
                }
                Some(mask) => {
                    mask.weights(self.speckle.width, self.speckle.height)?;
                }
            }
        }
        Ok(())
    }

    /// The same scenario with the noise source switched off.
    pub fn clean(&self) -> Scenario {
        Scenario {
            noise: NoiseSpec::off(),
            ..self.clone()
        }
    }

    /// FNV-1a digest of the full scenario description.
    pub fn digest(&self) -> u64 {
        let text = format!("{self:?}");
        text.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
            (h ^ b as u64).wrapping_mul(0x0000_0100_0000_01b3)
        })
    }

    /// Builds a record generator; validates first.
    pub fn stream(&self) -> Result<ScenarioStream<'_>> {
        ScenarioStream::new(self)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementRecord {
    pub n: u64,
    /// Bucket value `S_n`.
    pub s: f64,
    /// Reference intensities `I_n(x)`.
    pub frame: Frame,
}

/// Anything that can replay a measurement series in order.
///
/// Reconstructors take a `RecordSource` so the same code runs on a series held
/// in memory and on a scenario regenerated on the fly.
pub trait RecordSource {
    fn dims(&self) -> (usize, usize);

    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Visits records `n = 1..=len` in order, in consecutive batches.
    fn for_each_batch(
        &self,
        visit: &mut dyn FnMut(&[MeasurementRecord]) -> Result<()>,
    ) -> Result<()>;
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSeries {
    width: usize,
    height: usize,
    records: Vec<MeasurementRecord>,
    digest: u64,
}

impl MeasurementSeries {
    /// Checks ordinals are `1..=N` and all frames share one size.
    pub fn from_records(records: Vec<MeasurementRecord>, digest: u64) -> Result<Self> {
        let first = records
            .first()
            .ok_or_else(|| Error::Contract("a series needs at least one record".into()))?;
        let (width, height) = first.frame.dims();
        for (i, r) in records.iter().enumerate() {
            if r.n != i as u64 + 1 {
                return Err(Error::Contract(format!(
                    "record {i} has ordinal {}, expected {}",
                    r.n,
                    i + 1
                )));
            }
            ensure_dims("series frame", (width, height), r.frame.dims())?;
        }
        Ok(MeasurementSeries {
            width,
            height,
            records,
            digest,
        })
    }

    /// Convenience constructor from bucket values and frames; ordinals are
    /// assigned from 1.
    pub fn from_parts(buckets: &[f64], frames: Vec<Frame>) -> Result<Self> {
        if buckets.len() != frames.len() {
            return Err(Error::Contract(format!(
                "{} bucket values for {} frames",
                buckets.len(),
                frames.len()
            )));
        }
        let records = buckets
            .iter()
            .zip(frames)
            .enumerate()
            .map(|(i, (&s, frame))| MeasurementRecord {
                n: i as u64 + 1,
                s,
                frame,
            })
            .collect();
        Self::from_records(records, 0)
    }

    pub fn records(&self) -> &[MeasurementRecord] {
        &self.records
    }

    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }
}

impl RecordSource for MeasurementSeries {
    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    fn len(&self) -> usize {
        self.records.len()
    }

    fn for_each_batch(
        &self,
        visit: &mut dyn FnMut(&[MeasurementRecord]) -> Result<()>,
    ) -> Result<()> {
        visit(&self.records)
    }
}

/// Index-addressable record generator for one scenario.
#[derive(Debug)]
pub struct ScenarioStream<'a> {
    scenario: &'a Scenario,
    speckle: SpeckleGenerator,
    coupling: f64,
    weights: Option<Vec<f64>>,
}

impl<'a> ScenarioStream<'a> {
    fn new(scenario: &'a Scenario) -> Result<Self> {
        scenario.validate()?;
        let (w, h) = scenario.speckle.dims();
        let weights = match scenario.noise.position {
            Position::C => Some(
                scenario
                    .noise
                    .spatial
                    .as_ref()
                    .expect("validated")
                    .weights(w, h)?,
            ),
            _ => None,
        };
        Ok(ScenarioStream {
            scenario,
            speckle: SpeckleGenerator::new(scenario.speckle.clone())?,
            coupling: scenario.object.fill_factor(),
            weights,
        })
    }

    /// Record `n` (1-based).
    pub fn record(&self, n: u64) -> Result<MeasurementRecord> {
        let mut frame = self.speckle.frame(n)?;
        let clean = bucket_signal(&frame, &self.scenario.object)?;
        let noise = &self.scenario.noise;
        let s = match noise.position {
            Position::None | Position::C => clean,
            Position::A => clean + self.coupling * noise_value(&noise.waveform, n),
            Position::B => clean + noise_value(&noise.waveform, n),
        };
        if let Some(weights) = &self.weights {
            let q = noise_value(&noise.waveform, n);
            for (v, m) in frame.values_mut().iter_mut().zip(weights) {
                *v += q * m;
            }
        }
        Ok(MeasurementRecord { n, s, frame })
    }
}

impl RecordSource for ScenarioStream<'_> {
    fn dims(&self) -> (usize, usize) {
        self.scenario.speckle.dims()
    }

    fn len(&self) -> usize {
        self.scenario.count
    }

    fn for_each_batch(
        &self,
        visit: &mut dyn FnMut(&[MeasurementRecord]) -> Result<()>,
    ) -> Result<()> {
        let count = self.scenario.count as u64;
        let mut start = 1u64;
        while start <= count {
            let end = (start + STREAM_BATCH as u64 - 1).min(count);
            let batch = (start..=end)
                .into_par_iter()
                .map(|n| self.record(n))
                .collect::<Result<Vec<_>>>()?;
            visit(&batch)?;
            start = end + 1;
        }
        Ok(())
    }
}

/// Runs the scenario and keeps every record in memory.
pub fn simulate(scenario: &Scenario) -> Result<MeasurementSeries> {
    let stream = scenario.stream()?;
    let mut records = Vec::with_capacity(scenario.count);
    stream.for_each_batch(&mut |batch| {
        records.extend_from_slice(batch);
        Ok(())
    })?;
    let (width, height) = scenario.speckle.dims();
    Ok(MeasurementSeries {
        width,
        height,
        records,
        digest: scenario.digest(),
    })
}

/// `Σ_rows I_n(column, row)` for every `n`.
pub fn column_curve(source: &dyn RecordSource, column: usize) -> Result<Vec<f64>> {
    let (w, h) = source.dims();
    if column >= w {
        return Err(Error::Contract(format!(
            "column {column} out of range for width {w}"
        )));
    }
    let mut curve = Vec::with_capacity(source.len());
    source.for_each_batch(&mut |batch| {
        curve.extend(
            batch
                .iter()
                .map(|r| (0..h).map(|row| r.frame.get(column, row)).sum::<f64>()),
        );
        Ok(())
    })?;
    Ok(curve)
}

/// The bucket sequence `S_1..S_N`.
pub fn bucket_curve(source: &dyn RecordSource) -> Result<Vec<f64>> {
    let mut curve = Vec::with_capacity(source.len());
    source.for_each_batch(&mut |batch| {
        curve.extend(batch.iter().map(|r| r.s));
        Ok(())
    })?;
    Ok(curve)
}

/// Writes `n,value` rows with `n` starting at 1.
pub fn write_curve_csv(path: &Path, values: &[f64]) -> Result<()> {
    let io = |e| Error::io(path, e);
    let mut out = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    writeln!(out, "n,value").map_err(io)?;
    for (i, v) in values.iter().enumerate() {
        writeln!(out, "{},{}", i + 1, v).map_err(io)?;
    }
    out.flush().map_err(io)
}

const SERIES_MAGIC: &[u8; 4] = b"GSIM";
const SERIES_VERSION: u32 = 1;

/// Writes the binary series container.
///
/// Layout, little-endian: `"GSIM"`, version `u32`, width `u32`, height `u32`,
/// N `u64`, then per record `S` as `f64` followed by `width·height` `f32`
/// reference intensities. Intensities are narrowed to single precision.
pub fn write_series(source: &dyn RecordSource, path: &Path) -> Result<()> {
    let io = |e| Error::io(path, e);
    let (w, h) = source.dims();
    let dim = |v: usize| {
        u32::try_from(v).map_err(|_| Error::Contract(format!("dimension {v} exceeds u32")))
    };
    let mut out = BufWriter::new(std::fs::File::create(path).map_err(io)?);
    let mut header = Vec::with_capacity(24);
    header.extend_from_slice(SERIES_MAGIC);
    header.extend_from_slice(&SERIES_VERSION.to_le_bytes());
    header.extend_from_slice(&dim(w)?.to_le_bytes());
    header.extend_from_slice(&dim(h)?.to_le_bytes());
    header.extend_from_slice(&(source.len() as u64).to_le_bytes());
    out.write_all(&header).map_err(io)?;
    let mut buf = Vec::with_capacity(8 + 4 * w * h);
    source.for_each_batch(&mut |batch| {
        for r in batch {
            buf.clear();
            buf.extend_from_slice(&r.s.to_le_bytes());
            for v in r.frame.values() {
                buf.extend_from_slice(&(*v as f32).to_le_bytes());
            }
            out.write_all(&buf).map_err(io)?;
        }
        Ok(())
    })?;
    out.flush().map_err(io)
}

/// Reads a container written by [`write_series`].
pub fn read_series(path: &Path) -> Result<MeasurementSeries> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut input = BufReader::new(file);
    let mut read = |buf: &mut [u8], what: &str| -> Result<()> {
        input.read_exact(buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => Error::format(path, format!("truncated {what}")),
            _ => Error::io(path, e),
        })
    };
    let mut header = [0u8; 24];
    read(&mut header, "header")?;
    if &header[..4] != SERIES_MAGIC {
        return Err(Error::format(path, "missing GSIM magic"));
    }
    let u32_at = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != SERIES_VERSION {
        return Err(Error::format(
            path,
            format!("unsupported version {version}"),
        ));
    }
    let (w, h) = (u32_at(8) as usize, u32_at(12) as usize);
    let count = u64::from_le_bytes(header[16..24].try_into().unwrap());
    let mut records = Vec::with_capacity(count.min(1 << 20) as usize);
    let mut buf = vec![0u8; 8 + 4 * w * h];
    for n in 1..=count {
        read(&mut buf, "record")?;
        let s = f64::from_le_bytes(buf[..8].try_into().unwrap());
        let values = buf[8..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
            .collect();
        records.push(MeasurementRecord {
            n,
            s,
            frame: Frame::new(w, h, values)?,
        });
    }
    MeasurementSeries::from_records(records, 0)
}
