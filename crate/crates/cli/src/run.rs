//! End-to-end scenario execution and artifact emission.

use std::cell::RefCell;
use std::path::{Path, PathBuf};

use ghostsim::measurement::write_curve_csv;
use ghostsim::reconstruct::{delta_rms, effective_noise_delta_bound};
use ghostsim::{
    arm_delta_rms, reconstruct_both, MeasurementRecord, NoiseSpec, ObjectMask, QualityReport,
    ReconImage, RecordSource, Scenario, ValidityReport,
};
use serde::Serialize;

use crate::config::{AmplitudeReference, ScenarioConfig};
use crate::error::Result;

/// Statistics of the noise-free measurement series.
#[derive(Debug, Clone, PartialEq)]
pub struct CleanStats {
    pub bucket_std: f64,
    /// RMS per-step change in the arm the configured noise enters.
    pub arm_delta_rms: f64,
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub scenario: Scenario,
    /// Noise amplitude after resolving `relative_amplitude`.
    pub amplitude: f64,
    pub clean: CleanStats,
    pub gi: ReconImage,
    pub igi: ReconImage,
    pub metrics_gi: QualityReport,
    pub metrics_igi: QualityReport,
    pub validity: ValidityReport,
    /// Recorded bucket values, noise included.
    pub bucket: Vec<f64>,
    /// Column sums of the reference frames at a quarter and three quarters of
    /// the width, when curves are requested.
    pub columns: Option<(Vec<f64>, Vec<f64>)>,
}

/// Passes records through while keeping the bucket values.
struct BucketTap<'a> {
    inner: &'a dyn RecordSource,
    bucket: RefCell<Vec<f64>>,
}

impl RecordSource for BucketTap<'_> {
    fn dims(&self) -> (usize, usize) {
        self.inner.dims()
    }

    fn len(&self) -> usize {
        self.inner.len()
    }

    fn for_each_batch(
        &self,
        visit: &mut dyn FnMut(&[MeasurementRecord]) -> ghostsim::Result<()>,
    ) -> ghostsim::Result<()> {
        self.inner.for_each_batch(&mut |batch| {
            self.bucket.borrow_mut().extend(batch.iter().map(|r| r.s));
            visit(batch)
        })
    }
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n).sqrt()
}

/// One generation pass over the noise-free version of `scenario`.
pub fn clean_stats(scenario: &Scenario, noise: &NoiseSpec) -> Result<CleanStats> {
    let clean = scenario.clean();
    let stream = clean.stream()?;
    let tap = BucketTap {
        inner: &stream,
        bucket: RefCell::new(Vec::with_capacity(scenario.count)),
    };
    let arm = arm_delta_rms(&tap, noise)?;
    let bucket = tap.bucket.into_inner();
    Ok(CleanStats {
        bucket_std: population_std(&bucket),
        arm_delta_rms: arm,
    })
}

/// Builds the noise-free scenario described by `config`.
pub fn base_scenario(config: &ScenarioConfig) -> Result<(Scenario, ObjectMask)> {
    let object = config.object_mask()?;
    let scenario = Scenario {
        speckle: config.speckle.clone(),
        object: object.clone(),
        count: config.count,
        noise: NoiseSpec::off(),
    };
    scenario.validate()?;
    Ok((scenario, object))
}

/// Runs the scenario and scores both reconstructions without writing files.
///
/// `clean` may carry statistics from an earlier run that shares the grid,
/// object, count and noise position; otherwise they are computed here.
pub fn evaluate(config: &ScenarioConfig, clean: Option<&CleanStats>) -> Result<RunOutcome> {
    let (mut scenario, object) = base_scenario(config)?;
    let probe = config.noise.spec(0.0);
    let active = config.noise.is_active();
    let known = match clean {
        Some(stats) => Some(stats.clone()),
        None if active => Some(clean_stats(&scenario, &probe)?),
        None => None,
    };
    let bucket_std = known.as_ref().map(|s| s.bucket_std);

    let amplitude = match (&config.noise.relative_amplitude, active) {
        (Some(rel), true) => {
            rel.factor
                * match rel.reference {
                    AmplitudeReference::BucketStd => bucket_std.expect("computed when active"),
                    AmplitudeReference::MeanIntensity => config.speckle.mean_intensity,
                }
        }
        _ => config.noise.waveform.amplitude,
    };
    scenario.noise = config.noise.spec(amplitude);
    scenario.validate()?;

    let stream = scenario.stream()?;
    let (w, _) = scenario.speckle.dims();
    let curve_columns = (w / 4, 3 * w / 4);
    let mut bucket = Vec::with_capacity(scenario.count);
    let mut columns = config.output.emit_curves.then(|| (Vec::new(), Vec::new()));
    let (gi, igi) = reconstruct_both(&stream, config.output.igi_normalization, &mut |r| {
        bucket.push(r.s);
        if let Some((left, right)) = &mut columns {
            let (_, h) = r.frame.dims();
            left.push((0..h).map(|row| r.frame.get(curve_columns.0, row)).sum());
            right.push((0..h).map(|row| r.frame.get(curve_columns.1, row)).sum());
        }
    })?;

    // Without noise the recorded bucket is the clean one.
    let clean = match known {
        Some(stats) => stats,
        None => CleanStats {
            bucket_std: population_std(&bucket),
            arm_delta_rms: delta_rms(&bucket),
        },
    };
    let validity = ValidityReport::new(
        clean.arm_delta_rms,
        effective_noise_delta_bound(&scenario.noise, &object)?,
    )?;
    Ok(RunOutcome {
        metrics_gi: QualityReport::evaluate(&gi, &object)?,
        metrics_igi: QualityReport::evaluate(&igi, &object)?,
        scenario,
        amplitude,
        clean,
        gi,
        igi,
        validity,
        bucket,
        columns,
    })
}

#[derive(Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    seed: u64,
    noise_seed: u64,
    scenario_digest: String,
    resolved_noise_amplitude: f64,
    clean_bucket_std: f64,
    artifacts: &'a [String],
    config: &'a ScenarioConfig,
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    std::fs::write(path, text).map_err(|source| {
        ghostsim::Error::Io {
            path: path.to_path_buf(),
            source,
        }
        .into()
    })
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

/// Writes every artifact of `outcome` into `config.output.dir` and returns
/// the manifest path.
pub fn write_artifacts(config: &ScenarioConfig, outcome: &RunOutcome) -> Result<PathBuf> {
    let dir = &config.output.dir;
    std::fs::create_dir_all(dir).map_err(|source| ghostsim::Error::Io {
        path: dir.clone(),
        source,
    })?;
    let mut artifacts = Vec::new();
    let mut record = |p: PathBuf| {
        let name = file_name(&p);
        artifacts.push(name);
        p
    };

    for (stem, image, metrics) in [
        ("gi", &outcome.gi, &outcome.metrics_gi),
        ("igi", &outcome.igi, &outcome.metrics_igi),
    ] {
        let sidecar = image.write_pgm16(&record(dir.join(format!("{stem}.pgm"))))?;
        record(sidecar);
        image.write_f64(&record(dir.join(format!("{stem}.f64"))))?;
        write_json(&record(dir.join(format!("metrics_{stem}.json"))), metrics)?;
    }
    write_curve_csv(&record(dir.join("bucket_curve.csv")), &outcome.bucket)?;
    write_json(&record(dir.join("validity.json")), &outcome.validity)?;
    if let Some((left, right)) = &outcome.columns {
        write_curve_csv(&record(dir.join("column_left.csv")), left)?;
        write_curve_csv(&record(dir.join("column_right.csv")), right)?;
    }
    if config.output.emit_frames {
        let stream = outcome.scenario.stream()?;
        ghostsim::measurement::write_series(&stream, &record(dir.join("series.gsim")))?;
    }

    let manifest_path = dir.join("manifest.json");
    artifacts.push(file_name(&manifest_path));
    let manifest = Manifest {
        tool: "ghostsim",
        version: env!("CARGO_PKG_VERSION"),
        seed: config.speckle.seed,
        noise_seed: outcome.scenario.noise.waveform.seed,
        scenario_digest: format!("{:016x}", outcome.scenario.digest()),
        resolved_noise_amplitude: outcome.amplitude,
        clean_bucket_std: outcome.clean.bucket_std,
        artifacts: &artifacts,
        config,
    };
    write_json(&manifest_path, &manifest)?;
    Ok(manifest_path)
}

/// `evaluate` followed by `write_artifacts`.
pub fn run_scenario(config: &ScenarioConfig) -> Result<RunOutcome> {
    let outcome = evaluate(config, None)?;
    write_artifacts(config, &outcome)?;
    Ok(outcome)
}
