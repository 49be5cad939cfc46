use std::path::PathBuf;

use emp_core::image::{prune_image_global, prune_image_patch, read_png, ssim, ssim_channel, CHANNELS};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(name)
}

#[test]
fn ssim_matches_offline_reference() {
    let a = read_png(fixture("ssim_a.png")).unwrap();
    let b = read_png(fixture("ssim_b.png")).unwrap();
    let reference: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("ssim_reference.json")).unwrap()).unwrap();
    let expected = reference["ssim"].as_f64().unwrap();
    assert!((ssim(&a, &b).unwrap() - expected).abs() < 1e-6);
    for c in 0..CHANNELS {
        let want = reference["per_channel"][c].as_f64().unwrap();
        let got = ssim_channel(a.plane(c), b.plane(c), 8, 8);
        assert!((got - want).abs() < 1e-6, "channel {c}: {got} vs {want}");
    }
}

#[test]
fn photo_patch_beats_global() {
    let img = read_png(fixture("photo.png")).unwrap();
    let global = prune_image_global(&img, 1.0).unwrap();
    let patch = prune_image_patch(&img, 1.0, 8).unwrap();
    for out in [&global, &patch] {
        assert!(out.sparsity > 0.0 && out.sparsity < 1.0);
        for c in 0..CHANNELS {
            for (i, &keep) in out.masks[c].iter().enumerate() {
                if keep {
                    assert_eq!(out.pruned.plane(c)[i], img.plane(c)[i]);
                }
            }
        }
    }
    assert!(patch.ssim >= global.ssim, "patch {} < global {}", patch.ssim, global.ssim);
    assert!(patch.psnr_db >= global.psnr_db);
}

/// Values from an independent numpy/scipy implementation of the same rule.
#[test]
fn photo_matches_offline_oracle() {
    let img = read_png(fixture("photo.png")).unwrap();
    let global = prune_image_global(&img, 1.0).unwrap();
    let patch = prune_image_patch(&img, 1.0, 4).unwrap();
    let pixels = (3 * 96 * 64) as f64;
    assert_eq!((global.sparsity * pixels).round(), (0.2234157986111111 * pixels).round());
    assert_eq!((patch.sparsity * pixels).round(), (0.3678385416666667 * pixels).round());
    assert!((global.ssim - 0.911575080042278).abs() < 1e-9);
    assert!((patch.ssim - 0.9834882108903563).abs() < 1e-9);
    assert!((global.psnr_db - 29.037043917886876).abs() < 1e-9);
    assert!((patch.psnr_db - 35.77500409422458).abs() < 1e-9);
}
