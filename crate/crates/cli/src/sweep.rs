//! One-axis parameter sweeps over a base scenario.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::config::ScenarioConfig;
use crate::error::{CliError, Result};
use crate::run::{base_scenario, clean_stats, evaluate, CleanStats};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    NoiseAmplitude,
    NoiseFrequency,
    N,
}

impl FromStr for Axis {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "noise-amplitude" => Ok(Axis::NoiseAmplitude),
            "noise-frequency" => Ok(Axis::NoiseFrequency),
            "N" => Ok(Axis::N),
            other => Err(CliError::Usage(format!(
                "unknown sweep axis '{other}'; expected noise-amplitude, noise-frequency or N"
            ))),
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Axis::NoiseAmplitude => "noise-amplitude",
            Axis::NoiseFrequency => "noise-frequency",
            Axis::N => "N",
        })
    }
}

/// Comma-separated numbers.
pub fn parse_values(list: &str) -> Result<Vec<f64>> {
    let values = list
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Usage(format!("sweep value '{s}' is not a number")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    Ok(values)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RowMetrics {
    pub gi_pearson_r: f64,
    pub igi_pearson_r: f64,
    pub validity_ratio: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub value: f64,
    pub outcome: std::result::Result<RowMetrics, String>,
}

/// `base` with the axis set to `value`. Amplitudes replace the relative
/// factor when the base config gives one.
pub fn apply(base: &ScenarioConfig, axis: Axis, value: f64) -> Result<ScenarioConfig> {
    let mut config = base.clone();
    match axis {
        Axis::NoiseAmplitude => match &mut config.noise.relative_amplitude {
            Some(rel) => rel.factor = value,
            None => config.noise.waveform.amplitude = value,
        },
        Axis::NoiseFrequency => config.noise.waveform.frequency = value,
        Axis::N => {
            if !(value >= 0.0 && value.fract() == 0.0 && value <= usize::MAX as f64) {
                return Err(CliError::Usage(format!(
                    "N must be a whole number of measurements, got {value}"
                )));
            }
            config.count = value as usize;
        }
    }
    config
        .check()
        .map_err(|(key, msg)| CliError::Usage(format!("{axis}={value}: {msg} (key '{key}')")))?;
    Ok(config)
}

/// Runs one row per value with the base seed. Row failures are kept in the
/// result instead of aborting the sweep.
pub fn sweep(base: &ScenarioConfig, axis: Axis, values: &[f64]) -> Result<Vec<SweepRow>> {
    if values.is_empty() {
        return Err(CliError::Usage("sweep needs at least one value".into()));
    }
    // Clean statistics do not depend on noise amplitude or frequency.
    let shared: Option<CleanStats> = match axis {
        Axis::N => None,
        _ if base.noise.is_active() => {
            let (scenario, _) = base_scenario(base)?;
            Some(clean_stats(&scenario, &base.noise.spec(0.0))?)
        }
        _ => None,
    };
    Ok(values
        .iter()
        .map(|&value| {
            let outcome = apply(base, axis, value)
                .and_then(|config| evaluate(&config, shared.as_ref()))
                .map(|o| RowMetrics {
                    gi_pearson_r: o.metrics_gi.pearson_r,
                    igi_pearson_r: o.metrics_igi.pearson_r,
                    validity_ratio: o.validity.ratio,
                })
                .map_err(|e| e.to_string());
            SweepRow { value, outcome }
        })
        .collect())
}

/// `<axis>,gi_pearson_r,igi_pearson_r,validity_ratio,error`; failed rows leave
/// the metric columns empty and carry the message.
pub fn write_sweep_csv(out: &mut dyn Write, axis: Axis, rows: &[SweepRow]) -> std::io::Result<()> {
    writeln!(
        out,
        "{axis},gi_pearson_r,igi_pearson_r,validity_ratio,error"
    )?;
    for row in rows {
        match &row.outcome {
            Ok(m) => writeln!(
                out,
                "{},{},{},{},",
                row.value, m.gi_pearson_r, m.igi_pearson_r, m.validity_ratio
            )?,
            Err(msg) => {
                let clean: String = msg
                    .chars()
                    .map(|c| {
                        if c == ',' || c == '\n' || c == '"' {
                            ' '
                        } else {
                            c
                        }
                    })
                    .collect();
                writeln!(out, "{},,,,ERROR: {}", row.value, clean)?
            }
        }
    }
    Ok(())
}

pub fn write_sweep_file(path: &Path, axis: Axis, rows: &[SweepRow]) -> Result<()> {
    let io = |source| ghostsim::Error::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(io)?;
    }
    let mut file = std::io::BufWriter::new(std::fs::File::create(path).map_err(io)?);
    write_sweep_csv(&mut file, axis, rows).map_err(io)?;
    file.flush().map_err(io)?;
    Ok(())
}
