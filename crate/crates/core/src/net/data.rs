//! Small synthetic classification sets and an IDX loader.

use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};

/// Fraction of samples held out for testing by the built-in generators.
pub const TEST_FRACTION: f64 = 0.2;

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Vec<f64>,
    dim: usize,
    labels: Vec<usize>,
    classes: usize,
    train: Vec<usize>,
    test: Vec<usize>,
}

impl Dataset {
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        classes: usize,
        train: Vec<usize>,
        test: Vec<usize>,
    ) -> Result<Self> {
        if dim == 0 || features.len() != dim * labels.len() {
            return Err(Error::DimensionMismatch(format!(
                "{} features for {} samples of dimension {dim}",
                features.len(),
                labels.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parse("dataset contains non-finite features".into()));
        }
        if let Some(l) = labels.iter().find(|&&l| l >= classes) {
            return Err(Error::Parse(format!("label {l} outside 0..{classes}")));
        }
        if let Some(i) = train.iter().chain(&test).find(|&&i| i >= labels.len()) {
            return Err(Error::IndexOutOfRange {
                index: *i,
                len: labels.len(),
            });
        }
        Ok(Self {
            features,
            dim,
            labels,
            classes,
            train,
            test,
        })
    }

    /// Shuffles `0..n` and holds out `test_fraction` of it.
    pub fn with_random_split(
        features: Vec<f64>,
        dim: usize,
        labels: Vec<usize>,
        classes: usize,
        test_fraction: f64,
        seed: u64,
    ) -> Result<Self> {
        let mut idx: Vec<usize> = (0..labels.len()).collect();
        idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed ^ 0x5eed_0517));
        let n_test = (labels.len() as f64 * test_fraction).round() as usize;
        let test = idx.split_off(idx.len() - n_test.min(idx.len()));
        Self::new(features, dim, labels, classes, idx, test)
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn classes(&self) -> usize {
        self.classes
    }

    pub fn sample(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn train(&self) -> &[usize] {
        &self.train
    }

    pub fn test(&self) -> &[usize] {
        &self.test
    }
}

/// Isotropic Gaussian clusters with centers evenly spaced on a circle of
/// radius 3 (in the first two coordinates).
pub fn blobs(per_class: usize, classes: usize, dim: usize, spread: f64, seed: u64) -> Result<Dataset> {
    if classes < 2 || dim < 2 || per_class == 0 {
        return Err(Error::Domain("blobs need >= 2 classes, dim >= 2 and samples".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, spread).map_err(|e| Error::Domain(e.to_string()))?;
    let mut features = Vec::with_capacity(per_class * classes * dim);
    let mut labels = Vec::with_capacity(per_class * classes);
    for class in 0..classes {
        let angle = std::f64::consts::TAU * class as f64 / classes as f64;
        let mut center = vec![0.0; dim];
        center[0] = 3.0 * angle.cos();
        center[1] = 3.0 * angle.sin();
        for _ in 0..per_class {
            features.extend(center.iter().map(|c| c + noise.sample(&mut rng)));
            labels.push(class);
        }
    }
    Dataset::with_random_split(features, dim, labels, classes, TEST_FRACTION, seed)
}

/// Two interleaving half circles in the plane.
pub fn two_moons(per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::Domain(e.to_string()))?;
    let mut features = Vec::with_capacity(per_class * 4);
    let mut labels = Vec::with_capacity(per_class * 2);
    for class in 0..2 {
        for _ in 0..per_class {
            let t = rng.random::<f64>() * std::f64::consts::PI;
            let (x, y) = if class == 0 {
                (t.cos(), t.sin())
            } else {
                (1.0 - t.cos(), 0.5 - t.sin())
            };
            features.push(x + jitter.sample(&mut rng));
            features.push(y + jitter.sample(&mut rng));
            labels.push(class);
        }
    }
    Dataset::with_random_split(features, 2, labels, 2, TEST_FRACTION, seed)
}

// Seven-segment glyphs: a b c d e f g (top, upper right, lower right,
// bottom, lower left, upper left, middle).
const SEGMENTS: [[bool; 7]; 10] = [
    [true, true, true, true, true, true, false],
    [false, true, true, false, false, false, false],
    [true, true, false, true, true, false, true],
    [true, true, true, true, false, false, true],
    [false, true, true, false, false, true, true],
    [true, false, true, true, false, true, true],
    [true, false, true, true, true, true, true],
    [true, true, true, false, false, false, false],
    [true, true, true, true, true, true, true],
    [true, true, true, true, false, true, true],
];

fn glyph(digit: usize) -> [f64; 64] {
    let mut g = [0.0; 64];
    let mut set = |x: usize, y: usize| g[y * 8 + x] = 1.0;
    let s = SEGMENTS[digit];
    for x in 2..6 {
        if s[0] {
            set(x, 1);
        }
        if s[6] {
            set(x, 4);
        }
        if s[3] {
            set(x, 7);
        }
    }
    for y in 1..5 {
        if s[5] {
            set(1, y);
        }
        if s[1] {
            set(6, y);
        }
    }
    for y in 4..8 {
        if s[4] {
            set(1, y);
        }
        if s[2] {
            set(6, y);
        }
    }
    g
}

/// 8x8 digit-like images (seven-segment glyphs) with random one-pixel
/// horizontal shifts and additive Gaussian noise. Ten classes.
pub fn digits(per_class: usize, noise: f64, seed: u64) -> Result<Dataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let jitter = Normal::new(0.0, noise).map_err(|e| Error::Domain(e.to_string()))?;
    let mut features = Vec::with_capacity(per_class * 10 * 64);
    let mut labels = Vec::with_capacity(per_class * 10);
    for digit in 0..10 {
        let g = glyph(digit);
        for _ in 0..per_class {
            let shift = rng.random_range(-1i32..=1);
            for y in 0..8 {
                for x in 0..8 {
                    let sx = x as i32 - shift;
                    let v = if (0..8).contains(&sx) { g[y * 8 + sx as usize] } else { 0.0 };
                    features.push(v + jitter.sample(&mut rng));
                }
            }
            labels.push(digit);
        }
    }
    Dataset::with_random_split(features, 64, labels, 10, TEST_FRACTION, seed)
}

fn be_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::Parse("truncated IDX header".into()))
}

/// Loads an IDX image file (`0x00000803`, unsigned bytes) and its label file
/// (`0x00000801`). Pixels are scaled to `[0, 1]`.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>, seed: u64) -> Result<Dataset> {
    let img = fs::read(images)?;
    let lab = fs::read(labels)?;
    if be_u32(&img, 0)? != 0x0803 || be_u32(&lab, 0)? != 0x0801 {
        return Err(Error::Parse("not an unsigned-byte IDX image/label pair".into()));
    }
    let count = be_u32(&img, 4)? as usize;
    let (rows, cols) = (be_u32(&img, 8)? as usize, be_u32(&img, 12)? as usize);
    if be_u32(&lab, 4)? as usize != count {
        return Err(Error::Parse("image and label counts differ".into()));
    }
    let dim = rows * cols;
    let pixels = img
        .get(16..16 + count * dim)
        .ok_or_else(|| Error::Parse("truncated IDX image data".into()))?;
    let label_bytes = lab
        .get(8..8 + count)
        .ok_or_else(|| Error::Parse("truncated IDX label data".into()))?;
    let labels: Vec<usize> = label_bytes.iter().map(|&l| l as usize).collect();
    let classes = labels.iter().max().map_or(0, |m| m + 1);
    let features = pixels.iter().map(|&p| p as f64 / 255.0).collect();
    Dataset::with_random_split(features, dim, labels, classes, TEST_FRACTION, seed)
}
