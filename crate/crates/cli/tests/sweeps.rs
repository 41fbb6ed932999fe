//! Sweep semantics and the behaviour of both estimators across noise regimes.

use ghostsim::{NoiseKind, NoiseWaveform, Position, SpeckleParams};
use ghostsim_cli::config::{
    AmplitudeReference, NoiseConfig, ObjectSource, OutputConfig, RelativeAmplitude,
};
use ghostsim_cli::{evaluate, sweep, Axis, ScenarioConfig};

fn config(
    size: usize,
    count: usize,
    position: Position,
    frequency: f64,
    factor: f64,
) -> ScenarioConfig {
    ScenarioConfig {
        speckle: SpeckleParams {
            width: size,
            height: size,
            grain_radius: 1.5,
            mean_intensity: 1.0,
            seed: 5,
        },
        object: ObjectSource::Builtin("TH".into()),
        count,
        noise: NoiseConfig {
            position,
            waveform: NoiseWaveform {
                kind: NoiseKind::Sinusoid,
                amplitude: 0.0,
                frequency,
                phase: std::f64::consts::FRAC_PI_2,
                sample_rate: 25.0,
                seed: 0,
            },
            relative_amplitude: Some(RelativeAmplitude {
                reference: AmplitudeReference::BucketStd,
                factor,
            }),
            spatial: None,
        },
        output: OutputConfig::default(),
    }
}

fn metrics(rows: &[ghostsim_cli::SweepRow]) -> Vec<(f64, f64, f64)> {
    rows.iter()
        .map(|r| {
            let m = r.outcome.as_ref().expect("row succeeds");
            (m.gi_pearson_r, m.igi_pearson_r, m.validity_ratio)
        })
        .collect()
}

#[test]
fn zero_amplitude_row_equals_the_noise_free_run() {
    let base = config(24, 1500, Position::B, 5.0, 20.0);
    let rows = sweep(&base, Axis::NoiseAmplitude, &[0.0]).unwrap();
    let mut clean = base.clone();
    clean.noise = NoiseConfig::default();
    let reference = evaluate(&clean, None).unwrap();
    let (gi, igi, ratio) = metrics(&rows)[0];
    assert_eq!(gi, reference.metrics_gi.pearson_r);
    assert_eq!(igi, reference.metrics_igi.pearson_r);
    assert_eq!(ratio, 0.0);
}

#[test]
fn ratio_grows_with_frequency_up_to_nyquist() {
    let base = config(16, 300, Position::B, 1.0, 5.0);
    let freqs = [0.1, 0.5, 1.0, 2.0, 3.0, 5.0, 7.5, 10.0, 12.0, 12.5];
    let ratios: Vec<f64> = metrics(&sweep(&base, Axis::NoiseFrequency, &freqs).unwrap())
        .iter()
        .map(|m| m.2)
        .collect();
    for pair in ratios.windows(2) {
        assert!(pair[1] >= pair[0], "{ratios:?}");
    }
    assert!(ratios[9] > 10.0 * ratios[0]);
}

#[test]
fn igi_degrades_once_the_ratio_passes_one() {
    let base = config(24, 3000, Position::B, 12.5, 1.0);
    let rows = metrics(&sweep(&base, Axis::NoiseAmplitude, &[0.02, 0.5, 5.0, 50.0]).unwrap());
    let below: Vec<_> = rows.iter().filter(|m| m.2 < 1.0).collect();
    let above: Vec<_> = rows.iter().filter(|m| m.2 > 1.0).collect();
    assert!(!below.is_empty() && !above.is_empty(), "{rows:?}");
    let worst_below = below.iter().map(|m| m.1).fold(f64::INFINITY, f64::min);
    let best_above = above.iter().map(|m| m.1).fold(f64::NEG_INFINITY, f64::max);
    assert!(best_above < worst_below, "{rows:?}");
    for pair in rows.windows(2) {
        assert!(pair[1].1 < pair[0].1, "{rows:?}");
    }
}

#[test]
fn slow_background_defeats_gi_but_not_igi() {
    // A 0.5 Hz swing of 200 bucket standard deviations: per-step changes stay
    // small while the absolute excursion swamps the covariance.
    let noisy = evaluate(&config(32, 5000, Position::B, 0.5, 200.0), None).unwrap();
    assert!(noisy.validity.ratio < 20.0);
    assert!(
        noisy.metrics_gi.pearson_r < 0.4,
        "gi {}",
        noisy.metrics_gi.pearson_r
    );
    assert!(
        noisy.metrics_igi.pearson_r > 0.75,
        "igi {}",
        noisy.metrics_igi.pearson_r
    );
}

#[test]
fn position_a_enters_scaled_by_the_fill_factor() {
    let a = evaluate(&config(16, 200, Position::A, 5.0, 3.0), None).unwrap();
    let b = evaluate(&config(16, 200, Position::B, 5.0, 3.0), None).unwrap();
    let fill = a.scenario.object.fill_factor();
    assert_eq!(a.amplitude, b.amplitude);
    assert!((a.validity.noise_delta_bound - fill * b.validity.noise_delta_bound).abs() < 1e-9);
}
