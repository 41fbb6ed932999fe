//! Scenario files: JSON with unknown keys rejected, validated before any
//! frame is generated.

use std::path::{Path, PathBuf};

use ghostsim::{
    builtin_mask, load_mask, IgiNormalization, NoiseSpec, NoiseWaveform, ObjectMask, Position,
    SpatialNoiseMask, SpeckleParams,
};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub speckle: SpeckleParams,
    pub object: ObjectSource,
    pub count: usize,
    #[serde(default)]
    pub noise: NoiseConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectSource {
    /// One of the built-in mask names, drawn at the speckle grid size.
    Builtin(String),
    /// An 8-bit PGM; relative paths are taken from the config file's directory.
    Pgm(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    #[serde(default = "no_position")]
    pub position: Position,
    #[serde(default = "NoiseWaveform::off")]
    pub waveform: NoiseWaveform,
    /// When present, replaces `waveform.amplitude` by `factor` times the
    /// reference quantity.
    #[serde(default)]
    pub relative_amplitude: Option<RelativeAmplitude>,
    #[serde(default)]
    pub spatial: Option<SpatialNoiseMask>,
}

fn no_position() -> Position {
    Position::None
}

impl Default for NoiseConfig {
    fn default() -> Self {
        NoiseConfig {
            position: Position::None,
            waveform: NoiseWaveform::off(),
            relative_amplitude: None,
            spatial: None,
        }
    }
}

impl NoiseConfig {
    pub fn is_active(&self) -> bool {
        self.position != Position::None && !self.waveform.is_off()
    }

    /// The noise description with a concrete amplitude.
    pub fn spec(&self, amplitude: f64) -> NoiseSpec {
        if !self.is_active() {
            return NoiseSpec::off();
        }
        NoiseSpec {
            waveform: NoiseWaveform {
                amplitude,
                ..self.waveform.clone()
            },
            position: self.position,
            spatial: self.spatial.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RelativeAmplitude {
    pub reference: AmplitudeReference,
    pub factor: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AmplitudeReference {
    /// Population standard deviation of the noise-free bucket sequence.
    BucketStd,
    /// The speckle mean intensity.
    MeanIntensity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_dir")]
    pub dir: PathBuf,
    #[serde(default)]
    pub emit_curves: bool,
    #[serde(default)]
    pub emit_frames: bool,
    #[serde(default)]
    pub igi_normalization: IgiNormalization,
}

fn default_dir() -> PathBuf {
    PathBuf::from("out")
}

impl Default for OutputConfig {
    fn default() -> Self {
        OutputConfig {
            dir: default_dir(),
            emit_curves: false,
            emit_frames: false,
            igi_normalization: IgiNormalization::default(),
        }
    }
}

/// 1-based line of the first occurrence of `"key"`, or 1.
fn line_of(text: &str, key: &str) -> usize {
    let quoted = format!("\"{key}\"");
    text.lines()
        .position(|l| l.contains(&quoted))
        .map_or(1, |i| i + 1)
}

impl ScenarioConfig {
    /// Parses and validates `text`; `path` is used for messages and as the
    /// base for relative paths.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let fail = |line: usize, msg: String| CliError::Config {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut config: ScenarioConfig = serde_json::from_str(text).map_err(|e| {
            let full = e.to_string();
            let msg = full
                .rsplit_once(" at line ")
                .map_or(full.as_str(), |(m, _)| m);
            fail(e.line().max(1), msg.to_string())
        })?;
        let base = path.parent().unwrap_or(Path::new(""));
        config.resolve_paths(base);
        config
            .check()
            .map_err(|(key, msg)| fail(line_of(text, key), msg))?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| {
            CliError::Sim(ghostsim::Error::Io {
                path: path.to_path_buf(),
                source,
            })
        })?;
        Self::parse(&text, path)
    }

    /// Makes the object and output paths absolute relative to `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        let absolute = |p: &Path| {
            if p.is_absolute() {
                p.to_path_buf()
            } else {
                let joined = base.join(p);
                std::path::absolute(&joined).unwrap_or(joined)
            }
        };
        if let ObjectSource::Pgm(p) = &self.object {
            self.object = ObjectSource::Pgm(absolute(p));
        }
        self.output.dir = absolute(&self.output.dir);
    }

    /// Checks that do not need file access. Errors name the offending key.
    pub fn check(&self) -> Result<(), (&'static str, String)> {
        self.speckle
            .validate()
            .map_err(|e| ("speckle", e.to_string()))?;
        if self.count < 2 {
            return Err((
                "count",
                format!("count must be at least 2 measurements, got {}", self.count),
            ));
        }
        if let ObjectSource::Builtin(name) = &self.object {
            builtin_mask(name, self.speckle.width, self.speckle.height)
                .map_err(|e| ("builtin", e.to_string()))?;
        }
        self.noise
            .waveform
            .validate()
            .map_err(|e| ("waveform", e.to_string()))?;
        if let Some(rel) = &self.noise.relative_amplitude {
            if !(rel.factor.is_finite() && rel.factor >= 0.0) {
                return Err((
                    "factor",
                    format!(
                        "relative amplitude factor must be finite and >= 0, got {}",
                        rel.factor
                    ),
                ));
            }
        }
        if self.noise.position == Position::C {
            match &self.noise.spatial {
                None => {
                    return Err((
                        "position",
                        "position C requires a spatial noise mask".into(),
                    ))
                }
                Some(mask) => {
                    mask.weights(self.speckle.width, self.speckle.height)
                        .map_err(|e| ("spatial", e.to_string()))?;
                }
            }
        }
        Ok(())
    }

    pub fn object_mask(&self) -> Result<ObjectMask> {
        let mask = match &self.object {
            ObjectSource::Builtin(name) => {
                builtin_mask(name, self.speckle.width, self.speckle.height)?
            }
            ObjectSource::Pgm(path) => load_mask(path)?,
        };
        Ok(mask)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }
}
