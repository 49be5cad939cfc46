use rayon::prelude::*;
use serde::Serialize;

use super::metrics::{psnr, psnr_channel, ssim, ssim_channel};
use super::{ImageTensor, CHANNELS};
use crate::error::Result;
use crate::partition::Partition;
use crate::rule::{check_beta, emp_decide, ScoreVector};

/// Per-channel bookkeeping of a pruning run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelReport {
    pub channel: usize,
    pub mean: f64,
    pub kept: usize,
    pub dropped: usize,
    pub sparsity: f64,
    pub ssim: f64,
    #[serde(serialize_with = "serialize_db")]
    pub psnr_db: f64,
    /// Constant channel: nothing to rank, every pixel kept.
    pub passthrough: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PruneOutcome {
    pub pruned: ImageTensor,
    pub masks: [Vec<bool>; CHANNELS],
    /// Dropped pixel-channels over `3 * width * height`.
    pub sparsity: f64,
    pub ssim: f64,
    /// `+inf` when nothing changed.
    pub psnr_db: f64,
    pub channels: Vec<ChannelReport>,
}

pub(crate) fn serialize_db<S: serde::Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
    if v.is_infinite() && *v > 0.0 {
        s.serialize_str("inf")
    } else {
        s.serialize_f64(*v)
    }
}

fn channel_mean(plane: &[u8]) -> f64 {
    plane.iter().map(|&v| v as f64).sum::<f64>() / plane.len() as f64
}

/// `X_c - mean(X_c)`, flattened row-major. The mean is not rounded.
pub fn channel_scores(img: &ImageTensor, c: usize) -> ScoreVector {
    let plane = img.plane(c);
    let mu = channel_mean(plane);
    ScoreVector::new(plane.iter().map(|&v| v as f64 - mu).collect())
        .expect("centered 8-bit values are finite and non-empty")
}

/// Where patch-mode scores are centered, and which mean refills dropped
/// pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Centering {
    /// Each tile is centered on its own mean.
    #[default]
    Tile,
    /// Every tile uses the whole-channel mean.
    Channel,
}

fn fill_value(mean: f64) -> u8 {
    mean.round().clamp(0.0, 255.0) as u8
}

/// Keep-mask for one group of scores. All-zero groups keep everything.
fn group_mask(scores: &ScoreVector, beta: f64) -> Result<Vec<bool>> {
    if scores.is_zero() {
        return Ok(vec![true; scores.len()]);
    }
    Ok(emp_decide(scores, beta)?.mask)
}

struct ChannelPlan {
    mask: Vec<bool>,
    /// Replacement value for each pixel if dropped.
    fill: Vec<u8>,
    passthrough: bool,
}

fn channel_plan(img: &ImageTensor, c: usize, beta: f64, tiles: Option<(&Partition, Centering)>) -> Result<ChannelPlan> {
    let plane = img.plane(c);
    let scores = channel_scores(img, c);
    let channel_fill = fill_value(channel_mean(plane));
    if scores.is_zero() {
        return Ok(ChannelPlan {
            mask: vec![true; plane.len()],
            fill: vec![channel_fill; plane.len()],
            passthrough: true,
        });
    }
    let Some((tiles, centering)) = tiles else {
        return Ok(ChannelPlan {
            mask: group_mask(&scores, beta)?,
            fill: vec![channel_fill; plane.len()],
            passthrough: false,
        });
    };
    let per_tile = tiles
        .groups()
        .par_iter()
        .map(|g| match centering {
            Centering::Channel => Ok((group_mask(&scores.restrict(g)?, beta)?, channel_fill)),
            Centering::Tile => {
                let mu = g.iter().map(|&i| plane[i] as f64).sum::<f64>() / g.len() as f64;
                let local = ScoreVector::new(g.iter().map(|&i| plane[i] as f64 - mu).collect())?;
                Ok((group_mask(&local, beta)?, fill_value(mu)))
            }
        })
        .collect::<Result<Vec<_>>>()?;
    let mut mask = vec![false; plane.len()];
    let mut fill = vec![channel_fill; plane.len()];
    for (g, (m, f)) in tiles.groups().iter().zip(per_tile) {
        for (&i, keep) in g.iter().zip(m) {
            mask[i] = keep;
            fill[i] = f;
        }
    }
    Ok(ChannelPlan {
        mask,
        fill,
        passthrough: false,
    })
}

fn run(img: &ImageTensor, beta: f64, tiles: Option<(&Partition, Centering)>) -> Result<PruneOutcome> {
    check_beta(beta)?;
    let plans = (0..CHANNELS)
        .into_par_iter()
        .map(|c| channel_plan(img, c, beta, tiles))
        .collect::<Result<Vec<_>>>()?;

    let mut planes: [Vec<u8>; CHANNELS] = Default::default();
    let mut masks: [Vec<bool>; CHANNELS] = Default::default();
    let mut passthrough = [false; CHANNELS];
    for (c, plan) in plans.into_iter().enumerate() {
        planes[c] = img
            .plane(c)
            .iter()
            .zip(&plan.mask)
            .zip(&plan.fill)
            .map(|((&v, &keep), &f)| if keep { v } else { f })
            .collect();
        masks[c] = plan.mask;
        passthrough[c] = plan.passthrough;
    }
    let pruned = ImageTensor::new(img.width(), img.height(), planes)?;

    let channels = (0..CHANNELS)
        .map(|c| {
            let kept = masks[c].iter().filter(|&&m| m).count();
            let n = masks[c].len();
            ChannelReport {
                channel: c,
                mean: channel_mean(img.plane(c)),
                kept,
                dropped: n - kept,
                sparsity: (n - kept) as f64 / n as f64,
                ssim: ssim_channel(img.plane(c), pruned.plane(c), img.width(), img.height()),
                psnr_db: psnr_channel(img.plane(c), pruned.plane(c)),
                passthrough: passthrough[c],
            }
        })
        .collect::<Vec<_>>();
    let dropped: usize = channels.iter().map(|r| r.dropped).sum();
    Ok(PruneOutcome {
        sparsity: dropped as f64 / (img.pixel_count() * CHANNELS) as f64,
        ssim: ssim(img, &pruned)?,
        psnr_db: psnr(img, &pruned)?,
        pruned,
        masks,
        channels,
    })
}

/// EMP over each whole channel. Dropped pixels become the rounded channel
/// mean; kept pixels are copied unchanged.
pub fn prune_image_global(img: &ImageTensor, beta: f64) -> Result<PruneOutcome> {
    run(img, beta, None)
}

/// EMP within `patch x patch` tiles (smaller at the right/bottom edges),
/// each tile centered on its own mean. Dropped pixels become the rounded
/// tile mean.
pub fn prune_image_patch(img: &ImageTensor, beta: f64, patch: usize) -> Result<PruneOutcome> {
    prune_image_patch_with(img, beta, patch, Centering::Tile)
}

pub fn prune_image_patch_with(img: &ImageTensor, beta: f64, patch: usize, centering: Centering) -> Result<PruneOutcome> {
    let tiles = Partition::tiles(img.width(), img.height(), patch)?;
    run(img, beta, Some((&tiles, centering)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rule::{effective_number, normalize};

    fn gradient_image(w: usize, h: usize) -> ImageTensor {
        let planes = std::array::from_fn(|c| {
            (0..w * h)
                .map(|i| {
                    let (x, y) = (i % w, i / w);
                    ((x * 29 + y * 13 + c * 71 + (x * y) % 7 * 11) % 256) as u8
                })
                .collect()
        });
        ImageTensor::new(w, h, planes).unwrap()
    }

    #[test]
    fn centered_scores() {
        let img = ImageTensor::new(2, 1, [vec![0, 200], vec![5, 5], vec![1, 2]]).unwrap();
        assert_eq!(channel_scores(&img, 0).values(), &[-100.0, 100.0]);
        assert!(channel_scores(&img, 1).is_zero());
    }

    #[test]
    fn checkerboard_has_full_effective_number() {
        let plane: Vec<u8> = (0..64).map(|i| if (i % 8 + i / 8) % 2 == 0 { 0 } else { 255 }).collect();
        let img = ImageTensor::new(8, 8, [plane.clone(), plane.clone(), plane]).unwrap();
        let s = channel_scores(&img, 0);
        assert!(s.values().iter().all(|v| v.abs() == 127.5));
        assert_eq!(effective_number(&normalize(&s).unwrap()), 64);
        let out = prune_image_global(&img, 1.0).unwrap();
        assert_eq!(out.sparsity, 0.0);
    }

    #[test]
    fn constant_image_passes_through() {
        let img = ImageTensor::filled(5, 4, [10, 128, 255]).unwrap();
        for out in [prune_image_global(&img, 1.0).unwrap(), prune_image_patch(&img, 1.0, 4).unwrap()] {
            assert_eq!(out.sparsity, 0.0);
            assert!((out.ssim - 1.0).abs() < 1e-12);
            assert_eq!(out.psnr_db, f64::INFINITY);
            assert!(out.channels.iter().all(|c| c.passthrough));
            assert_eq!(out.pruned, img);
        }
    }

    #[test]
    fn retained_pixels_are_exact_and_dropped_are_mean() {
        let img = gradient_image(13, 9);
        let runs = [
            prune_image_global(&img, 1.0).unwrap(),
            prune_image_patch_with(&img, 1.0, 4, Centering::Channel).unwrap(),
        ];
        for out in runs {
            for c in 0..CHANNELS {
                let fill = channel_mean(img.plane(c)).round() as u8;
                for (i, &keep) in out.masks[c].iter().enumerate() {
                    let expected = if keep { img.plane(c)[i] } else { fill };
                    assert_eq!(out.pruned.plane(c)[i], expected);
                }
            }
            let dropped: usize = out.masks.iter().flatten().filter(|m| !**m).count();
            assert!((out.sparsity * (3 * 13 * 9) as f64 - dropped as f64).abs() < 1e-9);
            assert!(out.sparsity > 0.0 && out.sparsity < 1.0);
        }
    }

    #[test]
    fn tile_centering_refills_with_tile_mean() {
        let img = gradient_image(8, 8);
        let out = prune_image_patch(&img, 1.0, 4).unwrap();
        assert!(out.sparsity > 0.0);
        let tiles = Partition::tiles(8, 8, 4).unwrap();
        for c in 0..CHANNELS {
            for g in tiles.groups() {
                let mu = g.iter().map(|&i| img.plane(c)[i] as f64).sum::<f64>() / g.len() as f64;
                for &i in g {
                    let expected = if out.masks[c][i] { img.plane(c)[i] } else { mu.round() as u8 };
                    assert_eq!(out.pruned.plane(c)[i], expected);
                }
            }
        }
    }

    #[test]
    fn patch_degeneracies() {
        let img = gradient_image(10, 6);
        let global = prune_image_global(&img, 1.0).unwrap();
        for centering in [Centering::Tile, Centering::Channel] {
            let single = prune_image_patch_with(&img, 1.0, 10, centering).unwrap();
            assert_eq!(single, global);
            let ones = prune_image_patch_with(&img, 1.0, 1, centering).unwrap();
            assert_eq!(ones.sparsity, 0.0);
            assert_eq!(ones.pruned, img);
            assert!(prune_image_patch_with(&img, 1.0, 0, centering).is_err());
        }
    }

    #[test]
    fn sparsity_shrinks_with_beta() {
        let img = gradient_image(16, 12);
        let betas = [0.5, 0.75, 1.0, 1.25, 1.5, 2.0];
        for patch in [None, Some(4)] {
            let sp: Vec<f64> = betas
                .iter()
                .map(|&b| match patch {
                    None => prune_image_global(&img, b).unwrap().sparsity,
                    Some(p) => prune_image_patch(&img, b, p).unwrap().sparsity,
                })
                .collect();
            assert!(sp.windows(2).all(|w| w[1] <= w[0]), "{sp:?}");
        }
    }
}
