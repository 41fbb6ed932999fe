//! Acceptance suite: ten criteria, one PASS/FAIL line each.
//!
//! Runs without the libtest harness so every line is printed even when an
//! earlier criterion fails. Exits non-zero if any criterion fails.

use std::path::Path;
use std::time::{Duration, Instant};

use ghostsim::metrics::pearson_images;
use ghostsim::{
    generate_frame, gi_reconstruct, igi_reconstruct, oracle_covariance_image, Frame,
    IgiAccumulator, MeasurementSeries, ReconImage, RecordSource, SpeckleParams,
};
use ghostsim_cli::config::{AmplitudeReference, RelativeAmplitude};
use ghostsim_cli::sweep::write_sweep_file;
use ghostsim_cli::{evaluate, preset, run_scenario, sweep, Axis, RunOutcome, ScenarioConfig};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const ORACLE_TOL: f64 = 1e-9;
const ORACLE_BUDGET: Duration = Duration::from_secs(1);
const STREAM_TOL: f64 = 1e-9;
const STREAM_BUDGET: Duration = Duration::from_secs(30);
const DC_OFFSET: f64 = 940_000.0;
const DC_TOL: f64 = 1e-9;
const AGREEMENT_MIN: f64 = 0.95;
const CLEAN_MIN: f64 = 0.8;
const CLEAN_BUDGET: Duration = Duration::from_secs(60);
const GI_BROKEN_MAX: f64 = 0.2;
const IGI_INTACT_MIN: f64 = 0.8;
const C_IGI_SHIFT_MAX: f64 = 0.1;
const C_GI_DROP_MIN: f64 = 0.2;
const SWEEP_LOW_RATIO: f64 = 0.1;
const SWEEP_HIGH_RATIO: f64 = 10.0;
const SWEEP_IGI_LOW_MIN: f64 = 0.8;
const SWEEP_IGI_HIGH_MAX: f64 = 0.3;
const SWEEP_FACTORS: [f64; 8] = [0.0, 0.05, 0.1, 0.5, 2.0, 5.0, 30.0, 100.0];
const CONTRAST_TOL: f64 = 0.15;
const FRAME_CORRELATION_MAX: f64 = 0.05;

type Verdict = Result<String, String>;

/// Largest per-pixel deviation relative to `max(|a|, |b|, rms(a))`.
fn relative_deviation(a: &ReconImage, b: &ReconImage) -> f64 {
    let rms = (a.values().iter().map(|v| v * v).sum::<f64>() / a.values().len() as f64).sqrt();
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs() / x.abs().max(y.abs()).max(rms))
        .fold(0.0, f64::max)
}

fn random_series(seed: u64, bucket_offset: f64) -> MeasurementSeries {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let buckets: Vec<f64> = (0..50).map(|_| rng.random_range(0.0..10.0)).collect();
    let frames: Vec<Frame> = (0..50)
        .map(|_| Frame::new(8, 8, (0..64).map(|_| rng.random_range(0.0..3.0)).collect()).unwrap())
        .collect();
    let shifted: Vec<f64> = buckets.iter().map(|s| s + bucket_offset).collect();
    MeasurementSeries::from_parts(&shifted, frames).unwrap()
}

fn streamed_igi(source: &dyn RecordSource) -> ReconImage {
    let mut acc = IgiAccumulator::new();
    acc.push_all(source).unwrap();
    acc.finalize().unwrap()
}

fn oracle_equivalence() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let series = random_series(seed, 0.0);
        let gi = gi_reconstruct(&series).map_err(|e| e.to_string())?;
        worst = worst.max(relative_deviation(
            &gi,
            &oracle_covariance_image(&series).unwrap(),
        ));
    }
    let elapsed = start.elapsed();
    let detail = format!("max rel dev {worst:.2e} (tol {ORACLE_TOL:e}), {elapsed:.2?}");
    if worst <= ORACLE_TOL && elapsed < ORACLE_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn streaming_matches_batch() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let series = random_series(seed, 0.0);
        worst = worst.max(relative_deviation(
            &igi_reconstruct(&series).unwrap(),
            &streamed_igi(&series),
        ));
    }
    let config = preset("position-B").map_err(|e| e.to_string())?;
    let scenario = ghostsim_cli::run::base_scenario(&config)
        .map_err(|e| e.to_string())?
        .0;
    let stream = scenario.stream().map_err(|e| e.to_string())?;
    let large = relative_deviation(&igi_reconstruct(&stream).unwrap(), &streamed_igi(&stream));
    let elapsed = start.elapsed();
    let detail = format!(
        "20 small series {worst:.2e}, 64x64 N=20000 {large:.2e} (tol {STREAM_TOL:e}), {elapsed:.2?}"
    );
    if worst.max(large) <= STREAM_TOL && elapsed < STREAM_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn hand_example() -> Verdict {
    let frames = vec![
        Frame::new(1, 1, vec![2.0]).unwrap(),
        Frame::new(1, 1, vec![6.0]).unwrap(),
    ];
    let series = MeasurementSeries::from_parts(&[1.0, 3.0], frames).unwrap();
    let gi = gi_reconstruct(&series).unwrap().values()[0];
    let igi = igi_reconstruct(&series).unwrap().values()[0];
    let streamed = streamed_igi(&series).values()[0];
    let detail = format!("GI {gi}, IGI {igi}, streamed IGI {streamed}");
    if gi == 2.0 && igi == 4.0 && streamed == 4.0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn dc_cancellation() -> Verdict {
    let mut worst = 0.0f64;
    for seed in 0..20 {
        let (plain, shifted) = (random_series(seed, 0.0), random_series(seed, DC_OFFSET));
        worst = worst
            .max(relative_deviation(
                &gi_reconstruct(&plain).unwrap(),
                &gi_reconstruct(&shifted).unwrap(),
            ))
            .max(relative_deviation(
                &igi_reconstruct(&plain).unwrap(),
                &igi_reconstruct(&shifted).unwrap(),
            ));
    }
    let detail = format!("+{DC_OFFSET} on every S: max rel dev {worst:.2e} (tol {DC_TOL:e})");
    if worst <= DC_TOL {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn run_preset(name: &str) -> Result<RunOutcome, String> {
    evaluate(&preset(name).map_err(|e| e.to_string())?, None).map_err(|e| e.to_string())
}

fn clean_agreement(clean: &Result<RunOutcome, String>, elapsed: Duration) -> Verdict {
    let o = clean.as_ref().map_err(Clone::clone)?;
    let cross = pearson_images(&o.gi, &o.igi).map_err(|e| e.to_string())?;
    let (gi, igi) = (o.metrics_gi.pearson_r, o.metrics_igi.pearson_r);
    let detail = format!(
        "GI/IGI pixel r {cross:.4} (min {AGREEMENT_MIN}), truth r GI {gi:.4} IGI {igi:.4} (min {CLEAN_MIN}), {elapsed:.2?}"
    );
    if cross >= AGREEMENT_MIN && gi >= CLEAN_MIN && igi >= CLEAN_MIN && elapsed < CLEAN_BUDGET {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn robustness_gap() -> Verdict {
    let mut ok = true;
    let mut parts = Vec::new();
    for name in ["position-A", "position-B"] {
        let o = run_preset(name)?;
        let (gi, igi) = (o.metrics_gi.pearson_r, o.metrics_igi.pearson_r);
        ok &= gi <= GI_BROKEN_MAX && igi >= IGI_INTACT_MIN;
        parts.push(format!(
            "{name}: GI {gi:.4} IGI {igi:.4} ratio {:.2}",
            o.validity.ratio
        ));
    }
    let detail = format!(
        "{} (need GI <= {GI_BROKEN_MAX}, IGI >= {IGI_INTACT_MIN})",
        parts.join("; ")
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn spatial_locality(clean: &Result<RunOutcome, String>) -> Verdict {
    let clean = clean.as_ref().map_err(Clone::clone)?;
    let noisy = run_preset("position-C-half")?;
    let quiet = noisy.scenario.clean();
    let (noisy_stream, clean_stream) = (
        noisy.scenario.stream().map_err(|e| e.to_string())?,
        quiet.stream().map_err(|e| e.to_string())?,
    );
    let (w, h) = noisy.scenario.speckle.dims();
    let mut mismatched = 0usize;
    noisy_stream
        .for_each_batch(&mut |batch| {
            for r in batch {
                let reference = clean_stream.record(r.n)?;
                for row in 0..h {
                    for col in 0..w / 2 {
                        if r.frame.get(col, row).to_bits()
                            != reference.frame.get(col, row).to_bits()
                        {
                            mismatched += 1;
                        }
                    }
                }
            }
            Ok(())
        })
        .map_err(|e| e.to_string())?;
    let igi_shift = (noisy.metrics_igi.pearson_r - clean.metrics_igi.pearson_r).abs();
    let gi_drop = clean.metrics_gi.pearson_r - noisy.metrics_gi.pearson_r;
    let detail = format!(
        "IGI {:.4} vs clean {:.4} (shift {igi_shift:.4}, max {C_IGI_SHIFT_MAX}); GI {:.4} vs clean {:.4} (drop {gi_drop:.4}, min {C_GI_DROP_MIN}); left-half pixel mismatches {mismatched}",
        noisy.metrics_igi.pearson_r,
        clean.metrics_igi.pearson_r,
        noisy.metrics_gi.pearson_r,
        clean.metrics_gi.pearson_r,
    );
    if igi_shift <= C_IGI_SHIFT_MAX && gi_drop >= C_GI_DROP_MIN && mismatched == 0 {
        Ok(detail)
    } else {
        Err(detail)
    }
}

/// Position B at the Nyquist frequency; a quarter-period phase keeps the
/// samples away from the zero crossings.
fn nyquist_config() -> Result<ScenarioConfig, String> {
    let mut config = preset("position-B").map_err(|e| e.to_string())?;
    config.noise.waveform.frequency = config.noise.waveform.sample_rate / 2.0;
    config.noise.waveform.phase = std::f64::consts::FRAC_PI_2;
    config.noise.relative_amplitude = Some(RelativeAmplitude {
        reference: AmplitudeReference::BucketStd,
        factor: 1.0,
    });
    Ok(config)
}

fn breakdown_sweep(out_dir: &Path) -> Verdict {
    let config = nyquist_config()?;
    let rows = sweep(&config, Axis::NoiseAmplitude, &SWEEP_FACTORS).map_err(|e| e.to_string())?;
    let csv = out_dir.join("sweep_noise-amplitude.csv");
    write_sweep_file(&csv, Axis::NoiseAmplitude, &rows).map_err(|e| e.to_string())?;
    let mut ok = true;
    let (mut low, mut high) = (0, 0);
    let mut cells = Vec::new();
    for row in &rows {
        let m = row
            .outcome
            .as_ref()
            .map_err(|e| format!("row {}: {e}", row.value))?;
        if m.validity_ratio < SWEEP_LOW_RATIO {
            low += 1;
            ok &= m.igi_pearson_r >= SWEEP_IGI_LOW_MIN;
        }
        if m.validity_ratio >= SWEEP_HIGH_RATIO {
            high += 1;
            ok &= m.igi_pearson_r <= SWEEP_IGI_HIGH_MAX;
        }
        cells.push(format!("{:.3}->{:.3}", m.validity_ratio, m.igi_pearson_r));
    }
    let written = std::fs::read_to_string(&csv).map_err(|e| e.to_string())?;
    ok &= low > 0 && high > 0 && written.lines().count() == rows.len() + 1;
    let detail = format!(
        "ratio->IGI r: {} (IGI >= {SWEEP_IGI_LOW_MIN} below {SWEEP_LOW_RATIO}, <= {SWEEP_IGI_HIGH_MAX} from {SWEEP_HIGH_RATIO})",
        cells.join(", ")
    );
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn determinism(out_dir: &Path) -> Verdict {
    let name = "position-C-double-slit";
    let mut dumps = Vec::new();
    for run in ["first", "second"] {
        let mut config = preset(name).map_err(|e| e.to_string())?;
        config.output.dir = out_dir.join(run);
        run_scenario(&config).map_err(|e| e.to_string())?;
        let read = |f: &str| std::fs::read(config.output.dir.join(f)).map_err(|e| e.to_string());
        dumps.push((read("gi.f64")?, read("igi.f64")?));
    }
    let detail = format!("{name}: gi.f64 and igi.f64 compared across two runs");
    if dumps[0] == dumps[1] {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn frame_stats(f: &Frame) -> (f64, f64) {
    let n = f.values().len() as f64;
    let m = f.values().iter().sum::<f64>() / n;
    let var = f.values().iter().map(|v| (v - m).powi(2)).sum::<f64>() / n;
    (m, var.sqrt() / m)
}

fn frame_correlation(a: &Frame, b: &Frame) -> f64 {
    let (ma, mb) = (frame_stats(a).0, frame_stats(b).0);
    let (mut ab, mut aa, mut bb) = (0.0, 0.0, 0.0);
    for (x, y) in a.values().iter().zip(b.values()) {
        ab += (x - ma) * (y - mb);
        aa += (x - ma).powi(2);
        bb += (y - mb).powi(2);
    }
    ab / (aa * bb).sqrt()
}

fn speckle_statistics() -> Verdict {
    let params = SpeckleParams {
        width: 256,
        height: 256,
        grain_radius: 2.0,
        mean_intensity: 1.0,
        seed: 42,
    };
    let frames: Vec<Frame> = (1..=6)
        .map(|n| generate_frame(&params, n).unwrap())
        .collect();
    let contrast_dev = frames
        .iter()
        .map(|f| (frame_stats(f).1 - 1.0).abs())
        .fold(0.0, f64::max);
    let corr = frames
        .windows(2)
        .map(|p| frame_correlation(&p[0], &p[1]).abs())
        .fold(0.0, f64::max);
    let detail = format!(
        "max |contrast - 1| {contrast_dev:.4} (tol {CONTRAST_TOL}), max |r(n, n+1)| {corr:.4} (max {FRAME_CORRELATION_MAX})"
    );
    if contrast_dev <= CONTRAST_TOL && corr < FRAME_CORRELATION_MAX {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn main() {
    let scratch = tempfile::tempdir().expect("temp dir");
    let mut failures = 0;
    let mut report = |id: usize, name: &str, verdict: Verdict| match verdict {
        Ok(detail) => println!("PASS [{id:2}] {name}: {detail}"),
        Err(detail) => {
            failures += 1;
            println!("FAIL [{id:2}] {name}: {detail}");
        }
    };

    report(1, "GI matches brute-force covariance", oracle_equivalence());
    report(
        2,
        "streaming IGI matches batch IGI",
        streaming_matches_batch(),
    );
    report(3, "two-sample hand example", hand_example());
    report(4, "constant bucket offset cancels", dc_cancellation());
    let start = Instant::now();
    let clean = run_preset("clean");
    report(
        5,
        "GI and IGI agree on clean data",
        clean_agreement(&clean, start.elapsed()),
    );
    report(6, "position A/B robustness gap", robustness_gap());
    report(
        7,
        "position C locality and robustness",
        spatial_locality(&clean),
    );
    report(
        8,
        "IGI breaks down with the validity ratio",
        breakdown_sweep(scratch.path()),
    );
    report(
        9,
        "preset runs are byte-identical",
        determinism(scratch.path()),
    );
    report(
        10,
        "speckle contrast and frame independence",
        speckle_statistics(),
    );

    println!("{} of 10 criteria passed", 10 - failures);
    if failures > 0 {
        std::process::exit(1);
    }
}
