//! Monte Carlo baseline for the speckle generator at 256x256, grain radius 2.
//!
//! Prints one CSV row per seed (frame mean, contrast, correlation with a
//! frame of another seed and with the next frame of the same seed), then a
//! summary with the pooled Kolmogorov-Smirnov distance to the exponential law
//! and the measured autocorrelation half-width.
//!
//!     cargo run --release -p ghostsim --example speckle_calibration > calibration/speckle_256.csv

use ghostsim::{generate_frame, Frame, SpeckleParams};

const SIZE: usize = 256;
const SEEDS: u64 = 100;

fn params(seed: u64) -> SpeckleParams {
    SpeckleParams {
        width: SIZE,
        height: SIZE,
        grain_radius: 2.0,
        mean_intensity: 1.0,
        seed,
    }
}

fn correlation(a: &Frame, b: &Frame) -> f64 {
    let (ma, mb) = (a.mean(), b.mean());
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.values().iter().zip(b.values()) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma).powi(2);
        sbb += (y - mb).powi(2);
    }
    sab / (saa * sbb).sqrt()
}

fn contrast(f: &Frame) -> f64 {
    let m = f.mean();
    let var = f.values().iter().map(|v| (v - m).powi(2)).sum::<f64>() / f.values().len() as f64;
    var.sqrt() / m
}

/// Normalized horizontal autocovariance at integer lags, circular.
fn autocorrelation(frames: &[Frame], max_lag: usize) -> Vec<f64> {
    let mut acc = vec![0.0; max_lag + 1];
    for f in frames {
        let m = f.mean();
        for y in 0..SIZE {
            for x in 0..SIZE {
                let a = f.get(x, y) - m;
                for (lag, slot) in acc.iter_mut().enumerate() {
                    *slot += a * (f.get((x + lag) % SIZE, y) - m);
                }
            }
        }
    }
    let zero = acc[0];
    acc.iter().map(|v| v / zero).collect()
}

fn half_width(acf: &[f64]) -> f64 {
    for lag in 1..acf.len() {
        if acf[lag] <= 0.5 {
            let (a, b) = (acf[lag - 1], acf[lag]);
            return (lag - 1) as f64 + (a - 0.5) / (a - b);
        }
    }
    f64::NAN
}

fn main() {
    println!("seed,mean,contrast,cross_seed_r,next_frame_r");
    let mut pooled = Vec::with_capacity(SIZE * SIZE * SEEDS as usize);
    let mut firsts = Vec::new();
    for seed in 0..SEEDS {
        let f1 = generate_frame(&params(seed), 1).unwrap();
        let f2 = generate_frame(&params(seed), 2).unwrap();
        let other = generate_frame(&params(seed + 1_000), 1).unwrap();
        println!(
            "{seed},{},{},{},{}",
            f1.mean(),
            contrast(&f1),
            correlation(&f1, &other),
            correlation(&f1, &f2)
        );
        pooled.extend_from_slice(f1.values());
        if firsts.len() < 10 {
            firsts.push(f1);
        }
    }
    pooled.sort_by(f64::total_cmp);
    let n = pooled.len() as f64;
    let ks = pooled
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let cdf = 1.0 - (-v).exp();
            (cdf - i as f64 / n)
                .abs()
                .max(((i + 1) as f64 / n - cdf).abs())
        })
        .fold(0.0f64, f64::max);
    let acf = autocorrelation(&firsts, 6);
    eprintln!("pooled KS distance to Exp(1): {ks}");
    eprintln!("autocorrelation: {acf:?}");
    eprintln!("half width at half maximum: {}", half_width(&acf));
}
