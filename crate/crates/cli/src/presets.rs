//! Built-in desk-scale scenarios: 64×64 grid, grain radius 2, 20000
//! measurements at 25 per second, seed 42, TH object.
//!
//! Noise presets use a 5 Hz sinusoid whose swing is 20 times the standard
//! deviation of the noise-free bucket signal.

use std::path::PathBuf;

use ghostsim::{NoiseKind, NoiseWaveform, Position, SpatialNoiseMask, SpeckleParams};

use crate::config::{
    AmplitudeReference, NoiseConfig, ObjectSource, OutputConfig, RelativeAmplitude, ScenarioConfig,
};
use crate::error::{CliError, Result};

pub const PRESETS: [&str; 5] = [
    "clean",
    "position-A",
    "position-B",
    "position-C-half",
    "position-C-double-slit",
];

pub const PRESET_SIZE: usize = 64;
pub const PRESET_COUNT: usize = 20_000;
pub const PRESET_SEED: u64 = 42;
pub const NOISE_FACTOR: f64 = 20.0;
pub const NOISE_FREQUENCY: f64 = 5.0;
pub const SAMPLE_RATE: f64 = 25.0;

fn sinusoid(position: Position, spatial: Option<SpatialNoiseMask>) -> NoiseConfig {
    NoiseConfig {
        position,
        waveform: NoiseWaveform {
            kind: NoiseKind::Sinusoid,
            amplitude: 0.0,
            frequency: NOISE_FREQUENCY,
            phase: 0.0,
            sample_rate: SAMPLE_RATE,
            seed: 0,
        },
        relative_amplitude: Some(RelativeAmplitude {
            reference: AmplitudeReference::BucketStd,
            factor: NOISE_FACTOR,
        }),
        spatial,
    }
}

/// The pinned config for `name`, writing into `runs/<name>`.
pub fn preset(name: &str) -> Result<ScenarioConfig> {
    let noise = match name {
        "clean" => NoiseConfig::default(),
        "position-A" => sinusoid(Position::A, None),
        "position-B" => sinusoid(Position::B, None),
        "position-C-half" => sinusoid(Position::C, Some(SpatialNoiseMask::RightHalf)),
        "position-C-double-slit" => {
            sinusoid(Position::C, Some(SpatialNoiseMask::DoubleSlitRightHalf))
        }
        other => {
            return Err(CliError::Usage(format!(
                "unknown preset '{other}'; expected one of {}",
                PRESETS.join(", ")
            )))
        }
    };
    Ok(ScenarioConfig {
        speckle: SpeckleParams {
            width: PRESET_SIZE,
            height: PRESET_SIZE,
            grain_radius: 2.0,
            mean_intensity: 1.0,
            seed: PRESET_SEED,
        },
        object: ObjectSource::Builtin("TH".into()),
        count: PRESET_COUNT,
        noise,
        output: OutputConfig {
            dir: PathBuf::from("runs").join(name),
            ..OutputConfig::default()
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_validates() {
        for name in PRESETS {
            let config = preset(name).unwrap();
            config.check().unwrap();
            assert_eq!(config.count, PRESET_COUNT);
        }
    }

    #[test]
    fn unknown_preset_is_a_usage_error() {
        let err = preset("position-D").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(err.to_string().contains("position-D"));
    }
}
