//! Seeded synthetic chest-film stand-in.
//!
//! Class 0 ("normal") is a smooth background plus pixel noise. Class 1
//! ("pneumonia") is the same kind of background with 1 to 3 bright Gaussian
//! blobs added. Every sample is drawn from its own sub-stream of the seed.

use crate::data::dataset::LabeledImages;
use crate::data::pgm::Image;
use crate::error::{Error, Result};
use crate::rng::{stream, Rng};

pub const CLASS_NAMES: [&str; 2] = ["normal", "pneumonia"];
pub const MIN_SIDE: usize = 16;

pub const BASE_LEVEL: (f64, f64) = (80.0, 120.0);
/// Number of cosine components in the background and the amplitude range of each.
pub const WAVES: usize = 2;
pub const WAVE_AMPLITUDE: (f64, f64) = (0.0, 10.0);
pub const NOISE_STD: f64 = 6.0;
/// Noise is clamped to `±NOISE_CLIP·NOISE_STD`.
pub const NOISE_CLIP: f64 = 2.5;
pub const BLOB_COUNT: (usize, usize) = (1, 3);
pub const BLOB_AMPLITUDE: (f64, f64) = (45.0, 70.0);
/// Blob σ range as fractions of the image side.
pub const BLOB_SIGMA: (f64, f64) = (1.0 / 16.0, 1.0 / 8.0);

#[derive(Clone, Debug, PartialEq)]
pub struct SynthSample {
    pub image: Image,
    pub label: usize,
    /// Noise-free background the image was built on.
    pub background: Vec<f64>,
}

/// `2·n_per_class` samples with labels alternating 0, 1, 0, 1, ...
pub fn synth_generate(rng: &mut Rng, n_per_class: usize, hw: usize) -> Result<Vec<SynthSample>> {
    if hw < MIN_SIDE {
        return Err(Error::Geometry(format!(
            "synthetic images need side >= {MIN_SIDE}, got {hw}"
        )));
    }
    let base_seed = rng.next_u64();
    Ok((0..2 * n_per_class)
        .map(|i| sample(&mut Rng::derive(base_seed, stream::DATA, i as u64), i % 2, hw))
        .collect())
}

/// Generates and wraps the samples as a labelled image set with ids `synth_00000`, ...
pub fn synth_dataset(seed: u64, n_per_class: usize, hw: usize) -> Result<LabeledImages> {
    let samples = synth_generate(&mut Rng::new(seed), n_per_class, hw)?;
    let ids = (0..samples.len()).map(|i| format!("synth_{i:05}")).collect();
    let labels = samples.iter().map(|s| s.label).collect();
    LabeledImages::new(
        samples.into_iter().map(|s| s.image).collect(),
        labels,
        ids,
        CLASS_NAMES.iter().map(|s| s.to_string()).collect(),
    )
}

fn sample(rng: &mut Rng, label: usize, hw: usize) -> SynthSample {
    let n = hw as f64;
    let base = rng.uniform(BASE_LEVEL.0, BASE_LEVEL.1);
    let waves: Vec<(f64, f64, f64, f64)> = (0..WAVES)
        .map(|_| {
            let amp = rng.uniform(WAVE_AMPLITUDE.0, WAVE_AMPLITUDE.1);
            let mut fx = rng.below(2) as f64;
            let fy = rng.below(2) as f64;
            if fx == 0.0 && fy == 0.0 {
                fx = 1.0;
            }
            let phase = rng.uniform(0.0, std::f64::consts::TAU);
            (amp, fx, fy, phase)
        })
        .collect();
    let mut background = vec![0.0; hw * hw];
    for y in 0..hw {
        for x in 0..hw {
            let mut v = base;
            for &(amp, fx, fy, phase) in &waves {
                v += amp * (std::f64::consts::TAU * (fx * x as f64 + fy * y as f64) / n + phase).cos();
            }
            background[y * hw + x] = v;
        }
    }

    let mut signal = background.clone();
    if label == 1 {
        let count = BLOB_COUNT.0 + rng.below(BLOB_COUNT.1 - BLOB_COUNT.0 + 1);
        let margin = hw / 8;
        for _ in 0..count {
            let cx = (margin + rng.below(hw - 2 * margin)) as f64;
            let cy = (margin + rng.below(hw - 2 * margin)) as f64;
            let sigma = rng.uniform(BLOB_SIGMA.0 * n, BLOB_SIGMA.1 * n);
            let amp = rng.uniform(BLOB_AMPLITUDE.0, BLOB_AMPLITUDE.1);
            for y in 0..hw {
                for x in 0..hw {
                    let d2 = (x as f64 - cx).powi(2) + (y as f64 - cy).powi(2);
                    signal[y * hw + x] += amp * (-d2 / (2.0 * sigma * sigma)).exp();
                }
            }
        }
    }

    let clip = NOISE_CLIP * NOISE_STD;
    let pixels = signal
        .iter()
        .map(|&v| {
            let noise = rng.normal(0.0, NOISE_STD).clamp(-clip, clip);
            (v + noise).round().clamp(0.0, 255.0) as u8
        })
        .collect();
    SynthSample {
        image: Image::new(hw, hw, pixels).expect("hw >= 16"),
        label,
        background,
    }
}
