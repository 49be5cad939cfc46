"""Offline SSIM reference for fixtures/ssim_{a,b}.png.

Gaussian window sigma 1.5 truncated at 3.5 sigma (11 taps), K1 0.01,
K2 0.03, L 255, 'reflect' boundary, mean over all pixels, then mean over
channels. Cross-checked against scikit-image when it is installed.
"""

import json
from pathlib import Path

import numpy as np
from PIL import Image
from scipy.ndimage import gaussian_filter

ROOT = Path(__file__).resolve().parent.parent / "fixtures"


def ssim_channel(x, y):
    x = x.astype(np.float64)
    y = y.astype(np.float64)
    f = lambda v: gaussian_filter(v, sigma=1.5, truncate=3.5, mode="reflect")
    mx, my = f(x), f(y)
    vx = f(x * x) - mx * mx
    vy = f(y * y) - my * my
    cxy = f(x * y) - mx * my
    c1, c2 = (0.01 * 255) ** 2, (0.03 * 255) ** 2
    s = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx**2 + my**2 + c1) * (vx + vy + c2))
    return float(s.mean())


def cross_check():
    """scikit-image needs at least 11x11 for this window; compare on 32x32."""
    try:
        from skimage.metrics import structural_similarity
    except ImportError:
        return
    rng = np.random.default_rng(0)
    x = rng.integers(0, 256, (32, 32))
    y = np.clip(x + rng.integers(-30, 31, x.shape), 0, 255)
    _, smap = structural_similarity(
        x, y, data_range=255, gaussian_weights=True, sigma=1.5,
        use_sample_covariance=False, full=True,
    )
    assert abs(smap.mean() - ssim_channel(x, y)) < 1e-12, (smap.mean(), ssim_channel(x, y))
    print("scikit-image agrees on 32x32:", float(smap.mean()))


def main():
    a = np.asarray(Image.open(ROOT / "ssim_a.png").convert("RGB"))
    b = np.asarray(Image.open(ROOT / "ssim_b.png").convert("RGB"))
    per_channel = [ssim_channel(a[..., c], b[..., c]) for c in range(3)]
    value = float(np.mean(per_channel))
    cross_check()
    out = {"ssim": value, "per_channel": per_channel}
    (ROOT / "ssim_reference.json").write_text(json.dumps(out, indent=2) + "\n")
    print(json.dumps(out, indent=2))


if __name__ == "__main__":
    main()
