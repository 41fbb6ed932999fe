//! Optical background noise: temporal waveforms `Q_n` and their spatial
//! footprint `Q_n(x)` on the reference detector.
//!
//! All waveforms are non-negative (the noise is extra light) and every value is
//! a pure function of the waveform and the measurement ordinal `n`.

use std::f64::consts::PI;

use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{ensure_dims, Error, Result};
use crate::rng::{indexed_rng, Domain};
use crate::speckle::Frame;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKind {
    Sinusoid,
    GaussianWhite,
    Poisson,
    Constant,
    Off,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseWaveform {
    pub kind: NoiseKind,
    /// Peak-to-trough swing for sinusoids; level for constant; mean for the
    /// stochastic kinds.
    #[serde(default)]
    pub amplitude: f64,
    /// Hz, sinusoid only.
    #[serde(default)]
    pub frequency: f64,
    /// Radians, sinusoid only.
    #[serde(default)]
    pub phase: f64,
    /// Measurements per second.
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
    #[serde(default)]
    pub seed: u64,
}

fn default_sample_rate() -> f64 {
    25.0
}

impl NoiseWaveform {
    pub fn off() -> Self {
        NoiseWaveform {
            kind: NoiseKind::Off,
            amplitude: 0.0,
            frequency: 0.0,
            phase: 0.0,
            sample_rate: default_sample_rate(),
            seed: 0,
        }
    }

    pub fn constant(amplitude: f64) -> Self {
        NoiseWaveform {
            kind: NoiseKind::Constant,
            amplitude,
            ..Self::off()
        }
    }

    pub fn sinusoid(amplitude: f64, frequency: f64, sample_rate: f64, phase: f64) -> Self {
        NoiseWaveform {
            kind: NoiseKind::Sinusoid,
            amplitude,
            frequency,
            phase,
            sample_rate,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude.is_finite() && self.amplitude >= 0.0) {
            return Err(Error::Config(format!(
                "noise amplitude must be finite and >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.sample_rate.is_finite() && self.sample_rate > 0.0) {
            return Err(Error::Config(format!(
                "sample_rate must be finite and > 0, got {}",
                self.sample_rate
            )));
        }
        if !(self.frequency.is_finite() && self.frequency >= 0.0) {
            return Err(Error::Config(format!(
                "noise frequency must be finite and >= 0, got {}",
                self.frequency
            )));
        }
        if !self.phase.is_finite() {
            return Err(Error::Config("noise phase must be finite".into()));
        }
        Ok(())
    }

    pub fn is_off(&self) -> bool {
        self.kind == NoiseKind::Off
    }
}

/// Where the noise lands on the reference detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "region", deny_unknown_fields)]
pub enum SpatialNoiseMask {
    Full,
    /// Weight 1 on columns `>= width / 2`.
    RightHalf,
    /// Two vertical slits inside the right half.
    DoubleSlitRightHalf,
    Custom {
        width: usize,
        height: usize,
        weights: Vec<f64>,
    },
}

impl SpatialNoiseMask {
    /// Per-pixel weights in `[0, 1]` for a `width`×`height` grid, row-major.
    pub fn weights(&self, width: usize, height: usize) -> Result<Vec<f64>> {
        let half = width / 2;
        let by_column = |lit: &dyn Fn(usize) -> bool| -> Vec<f64> {
            let row: Vec<f64> = (0..width).map(|x| if lit(x) { 1.0 } else { 0.0 }).collect();
            row.iter().copied().cycle().take(width * height).collect()
        };
        match self {
            SpatialNoiseMask::Full => Ok(vec![1.0; width * height]),
            SpatialNoiseMask::RightHalf => Ok(by_column(&|x| x >= half)),
            SpatialNoiseMask::DoubleSlitRightHalf => {
                // Slits at 1/4 and 3/4 of the right half, each 1/10 of the
                // half wide.
                let span = width - half;
                let slit = (span / 10).max(1);
                let first = half + span / 4 - slit / 2;
                let second = half + 3 * span / 4 - slit / 2;
                Ok(by_column(&|x| {
                    (first..first + slit).contains(&x) || (second..second + slit).contains(&x)
                }))
            }
            SpatialNoiseMask::Custom {
                width: cw,
                height: ch,
                weights,
            } => {
                ensure_dims("custom spatial noise mask", (width, height), (*cw, *ch))?;
                if weights.len() != cw * ch {
                    return Err(Error::Contract(format!(
                        "custom mask of {cw}x{ch} needs {} weights, got {}",
                        cw * ch,
                        weights.len()
                    )));
                }
                if let Some(bad) = weights.iter().find(|w| !(0.0..=1.0).contains(*w)) {
                    return Err(Error::Config(format!(
                        "spatial noise weights must lie in [0, 1], found {bad}"
                    )));
                }
                Ok(weights.clone())
            }
        }
    }
}

/// `Q_n`, the background level at measurement `n` (1-based).
pub fn noise_value(w: &NoiseWaveform, n: u64) -> f64 {
    assert!(n >= 1, "measurement ordinals start at 1");
    let a = w.amplitude;
    match w.kind {
        NoiseKind::Off => 0.0,
        NoiseKind::Constant => a,
        NoiseKind::Sinusoid => {
            // f·(n-1) mod fs is exact in IEEE arithmetic, so the waveform
            // repeats bit-for-bit whenever fs/f is rational in binary.
            let cycles = (w.frequency * (n - 1) as f64) % w.sample_rate / w.sample_rate;
            let q = 0.5 * a * (1.0 + (2.0 * PI * cycles + w.phase).sin());
            q.max(0.0)
        }
        NoiseKind::GaussianWhite => {
            if a == 0.0 {
                return 0.0;
            }
            let normal = Normal::new(a, a / 4.0).expect("positive finite std");
            normal
                .sample(&mut indexed_rng(w.seed, Domain::Noise, n))
                .max(0.0)
        }
        NoiseKind::Poisson => {
            if a == 0.0 {
                return 0.0;
            }
            let poisson = Poisson::new(a).expect("positive finite rate");
            poisson.sample(&mut indexed_rng(w.seed, Domain::Noise, n))
        }
    }
}

/// `Q_n(x) = Q_n · weight(x)`.
pub fn noise_field(
    w: &NoiseWaveform,
    mask: &SpatialNoiseMask,
    n: u64,
    width: usize,
    height: usize,
) -> Result<Frame> {
    let q = noise_value(w, n);
    let values = mask
        .weights(width, height)?
        .into_iter()
        .map(|m| q * m)
        .collect();
    Frame::new(width, height, values)
}

/// Upper bound on `|Q_{n+1} - Q_n|`.
///
/// Exact for sinusoids (`A·|sin(π f / fs)|`) and zero for flat kinds. For the
/// stochastic kinds it is five standard deviations of the difference of two
/// independent draws, which is exceeded about 6 times in 10⁷ steps.
pub fn per_step_noise_delta_bound(w: &NoiseWaveform) -> f64 {
    let a = w.amplitude;
    match w.kind {
        NoiseKind::Off | NoiseKind::Constant => 0.0,
        NoiseKind::Sinusoid => a * (PI * w.frequency / w.sample_rate).sin().abs(),
        NoiseKind::GaussianWhite => 5.0 * std::f64::consts::SQRT_2 * (a / 4.0),
        NoiseKind::Poisson => 5.0 * std::f64::consts::SQRT_2 * a.sqrt(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sinusoid_starts_at_midpoint() {
        let w = NoiseWaveform::sinusoid(1_050_000.0, 5.0, 25.0, 0.0);
        assert_eq!(noise_value(&w, 1), 525_000.0);
    }

    #[test]
    fn flat_kinds() {
        assert_eq!(noise_value(&NoiseWaveform::off(), 17), 0.0);
        assert_eq!(
            noise_value(&NoiseWaveform::constant(940_000.0), 123),
            940_000.0
        );
    }

    #[test]
    fn sinusoid_is_exactly_periodic() {
        let w = NoiseWaveform::sinusoid(1_050_000.0, 5.0, 25.0, 0.3);
        for n in 1..2000 {
            assert_eq!(noise_value(&w, n), noise_value(&w, n + 5));
        }
        let w = NoiseWaveform::sinusoid(3.0, 0.5, 25.0, 0.0);
        for n in 1..500 {
            assert_eq!(noise_value(&w, n), noise_value(&w, n + 50));
        }
    }

    #[test]
    fn sinusoid_stays_in_range() {
        let w = NoiseWaveform::sinusoid(10.0, 3.7, 25.0, 1.1);
        for n in 1..10_000 {
            let q = noise_value(&w, n);
            assert!((0.0..=10.0).contains(&q));
        }
    }

    #[test]
    fn stochastic_kinds_are_indexed() {
        for kind in [NoiseKind::GaussianWhite, NoiseKind::Poisson] {
            let w = NoiseWaveform {
                kind,
                amplitude: 50.0,
                seed: 11,
                ..NoiseWaveform::off()
            };
            let forward: Vec<f64> = (1..100).map(|n| noise_value(&w, n)).collect();
            let backward: Vec<f64> = (1..100).rev().map(|n| noise_value(&w, n)).collect();
            assert!(forward.iter().eq(backward.iter().rev()));
            assert!(forward.iter().all(|q| *q >= 0.0));
            let reseeded = NoiseWaveform { seed: 12, ..w };
            assert_ne!(noise_value(&reseeded, 1), forward[0]);
        }
    }

    #[test]
    fn stochastic_means() {
        let n = 20_000u64;
        for kind in [NoiseKind::GaussianWhite, NoiseKind::Poisson] {
            let w = NoiseWaveform {
                kind,
                amplitude: 100.0,
                seed: 3,
                ..NoiseWaveform::off()
            };
            let mean = (1..=n).map(|i| noise_value(&w, i)).sum::<f64>() / n as f64;
            assert!((mean - 100.0).abs() < 1.0, "{kind:?} mean {mean}");
        }
    }

    #[test]
    fn field_examples() {
        let off = noise_field(&NoiseWaveform::off(), &SpatialNoiseMask::Full, 3, 64, 64).unwrap();
        assert!(off.values().iter().all(|v| *v == 0.0));

        let f = noise_field(
            &NoiseWaveform::constant(8.0),
            &SpatialNoiseMask::RightHalf,
            1,
            4,
            4,
        )
        .unwrap();
        for y in 0..4 {
            assert_eq!(f.get(0, y), 0.0);
            assert_eq!(f.get(1, y), 0.0);
            assert_eq!(f.get(2, y), 8.0);
            assert_eq!(f.get(3, y), 8.0);
        }

        let w = NoiseWaveform::sinusoid(1_050_000.0, 5.0, 25.0, 0.0);
        let f = noise_field(&w, &SpatialNoiseMask::Full, 1, 2, 2).unwrap();
        assert_eq!(f.values(), &[525_000.0; 4]);
    }

    #[test]
    fn double_slit_right_half_is_two_bands_on_the_right() {
        let weights = SpatialNoiseMask::DoubleSlitRightHalf
            .weights(64, 2)
            .unwrap();
        let row = &weights[..64];
        assert!(row[..32].iter().all(|w| *w == 0.0));
        let rising = row
            .windows(2)
            .filter(|p| p[0] == 0.0 && p[1] == 1.0)
            .count();
        assert_eq!(rising, 2);
        assert_eq!(&weights[..64], &weights[64..]);
    }

    #[test]
    fn custom_mask_checks() {
        let m = SpatialNoiseMask::Custom {
            width: 2,
            height: 2,
            weights: vec![0.0, 0.5, 1.0, 0.25],
        };
        assert!(matches!(m.weights(3, 2), Err(Error::Contract(_))));
        let f = noise_field(&NoiseWaveform::constant(4.0), &m, 1, 2, 2).unwrap();
        assert_eq!(f.values(), &[0.0, 2.0, 4.0, 1.0]);
        let bad = SpatialNoiseMask::Custom {
            width: 1,
            height: 1,
            weights: vec![2.0],
        };
        assert!(bad.weights(1, 1).is_err());
    }

    #[test]
    fn delta_bound_examples() {
        assert_eq!(
            per_step_noise_delta_bound(&NoiseWaveform::constant(5.0)),
            0.0
        );
        assert_eq!(per_step_noise_delta_bound(&NoiseWaveform::off()), 0.0);
        let nyquist = NoiseWaveform::sinusoid(2.0, 12.5, 25.0, 0.0);
        assert_eq!(per_step_noise_delta_bound(&nyquist), 2.0);
    }

    /// Largest observed |Q_{n+1} - Q_n| over `steps` steps.
    fn brute_max_step(w: &NoiseWaveform, steps: u64) -> f64 {
        let mut prev = noise_value(w, 1);
        let mut worst: f64 = 0.0;
        for n in 2..=steps + 1 {
            let q = noise_value(w, n);
            worst = worst.max((q - prev).abs());
            prev = q;
        }
        worst
    }

    #[test]
    fn large_sinusoid_bound_matches_brute_force() {
        let w = NoiseWaveform::sinusoid(1_050_000.0, 5.0, 25.0, 0.0);
        let bound = per_step_noise_delta_bound(&w);
        // 1050000·sin(π/5) = 617174.5...
        assert!((bound - 617_174.5).abs() < 0.1, "{bound}");
        let observed = brute_max_step(&w, 1_000_000);
        assert!(
            (observed - bound).abs() <= 1e-9 * bound,
            "{observed} vs {bound}"
        );
    }

    #[test]
    fn sinusoid_bound_is_sound_beyond_nyquist() {
        for f in [0.3, 5.0, 11.0, 12.5, 18.0, 25.0, 31.0, 40.0] {
            let w = NoiseWaveform::sinusoid(7.0, f, 25.0, 0.4);
            let bound = per_step_noise_delta_bound(&w);
            let observed = brute_max_step(&w, 20_000);
            assert!(
                observed <= bound * (1.0 + 1e-9) + 1e-12,
                "f={f}: {observed} > {bound}"
            );
        }
    }

    #[test]
    fn stochastic_bounds_hold_over_a_million_steps() {
        for (kind, amplitude) in [
            (NoiseKind::GaussianWhite, 1000.0),
            (NoiseKind::Poisson, 1000.0),
            (NoiseKind::Poisson, 2.0),
        ] {
            let w = NoiseWaveform {
                kind,
                amplitude,
                seed: 99,
                ..NoiseWaveform::off()
            };
            let bound = per_step_noise_delta_bound(&w);
            let mut prev = noise_value(&w, 1);
            let mut violations = 0;
            for n in 2..=1_000_001 {
                let q = noise_value(&w, n);
                if (q - prev).abs() > bound {
                    violations += 1;
                }
                prev = q;
            }
            assert!(violations <= 10, "{kind:?}: {violations} violations");
        }
    }
}
