use super::{ImageTensor, CHANNELS};
use crate::error::Result;

const DYNAMIC_RANGE: f64 = 255.0;
const K1: f64 = 0.01;
const K2: f64 = 0.03;
const SIGMA: f64 = 1.5;
const RADIUS: usize = 5;

/// PSNR of two identical images.
pub const PSNR_IDENTICAL: f64 = f64::INFINITY;

/// Normalized 11-tap Gaussian, sigma 1.5.
fn gaussian_kernel() -> [f64; 2 * RADIUS + 1] {
    let mut k = [0.0; 2 * RADIUS + 1];
    for (i, v) in k.iter_mut().enumerate() {
        let x = i as f64 - RADIUS as f64;
        *v = (-0.5 * x * x / (SIGMA * SIGMA)).exp();
    }
    let total: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= total);
    k
}

/// Half-sample symmetric extension: `d c b a | a b c d | d c b a`.
fn reflect(i: isize, n: usize) -> usize {
    let period = 2 * n as isize;
    let m = i.rem_euclid(period) as usize;
    if m < n {
        m
    } else {
        2 * n - 1 - m
    }
}

/// Separable Gaussian blur with symmetric boundary extension.
fn blur(src: &[f64], width: usize, height: usize) -> Vec<f64> {
    let k = gaussian_kernel();
    let r = RADIUS as isize;
    let mut tmp = vec![0.0; src.len()];
    for y in 0..height {
        let row = &src[y * width..(y + 1) * width];
        for x in 0..width {
            tmp[y * width + x] = k
                .iter()
                .enumerate()
                .map(|(t, w)| w * row[reflect(x as isize + t as isize - r, width)])
                .sum();
        }
    }
    let mut out = vec![0.0; src.len()];
    for y in 0..height {
        for x in 0..width {
            out[y * width + x] = k
                .iter()
                .enumerate()
                .map(|(t, w)| w * tmp[reflect(y as isize + t as isize - r, height) * width + x])
                .sum();
        }
    }
    out
}

/// Mean SSIM between two planes of the same `width x height`: Gaussian
/// window (11 taps, sigma 1.5), K1 = 0.01, K2 = 0.03, L = 255, symmetric
/// boundary extension, averaged over every pixel.
pub fn ssim_channel(a: &[u8], b: &[u8], width: usize, height: usize) -> f64 {
    let x: Vec<f64> = a.iter().map(|&v| v as f64).collect();
    let y: Vec<f64> = b.iter().map(|&v| v as f64).collect();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();
    let (mx, my) = (blur(&x, width, height), blur(&y, width, height));
    let (exx, eyy, exy) = (
        blur(&xx, width, height),
        blur(&yy, width, height),
        blur(&xy, width, height),
    );
    let c1 = (K1 * DYNAMIC_RANGE).powi(2);
    let c2 = (K2 * DYNAMIC_RANGE).powi(2);
    let total: f64 = (0..x.len())
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = exx[i] - ux * ux;
            let vy = eyy[i] - uy * uy;
            let cxy = exy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cxy + c2))
                / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    total / x.len() as f64
}

/// Mean of the per-channel SSIM values.
pub fn ssim(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    a.same_shape(b)?;
    let total: f64 = (0..CHANNELS)
        .map(|c| ssim_channel(a.plane(c), b.plane(c), a.width(), a.height()))
        .sum();
    Ok(total / CHANNELS as f64)
}

fn squared_error(a: &[u8], b: &[u8]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&p, &q)| {
            let d = p as f64 - q as f64;
            d * d
        })
        .sum()
}

fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        PSNR_IDENTICAL
    } else {
        10.0 * (DYNAMIC_RANGE * DYNAMIC_RANGE / mse).log10()
    }
}

pub fn psnr_channel(a: &[u8], b: &[u8]) -> f64 {
    psnr_from_mse(squared_error(a, b) / a.len() as f64)
}

/// `10 log10(255^2 / MSE)` over all pixel-channels; `+inf` for identical
/// images.
pub fn psnr(a: &ImageTensor, b: &ImageTensor) -> Result<f64> {
    a.same_shape(b)?;
    let se: f64 = (0..CHANNELS).map(|c| squared_error(a.plane(c), b.plane(c))).sum();
    Ok(psnr_from_mse(se / (a.pixel_count() * CHANNELS) as f64))
}
