"""Generate the bundled test images under fixtures/.

photo.png    96x64 procedural scene (sky gradient, sun, hills, textured
             ground, noise) standing in for a natural photo.
ssim_a.png, ssim_b.png
             8x8 pair for the SSIM reference check.
"""

from pathlib import Path

import numpy as np
from PIL import Image

ROOT = Path(__file__).resolve().parent.parent / "fixtures"


def photo(width=96, height=64, seed=2024):
    rng = np.random.default_rng(seed)
    y, x = np.mgrid[0:height, 0:width].astype(np.float64)
    img = np.zeros((height, width, 3))
    sky = 1.0 - y / height
    img[..., 0] = 90 + 80 * sky
    img[..., 1] = 140 + 70 * sky
    img[..., 2] = 200 + 50 * sky
    sun = (x - 72) ** 2 + (y - 14) ** 2 < 81
    img[sun] = [250, 220, 120]
    hill = y > 40 + 8 * np.sin(x / 11.0) + 4 * np.cos(x / 5.0)
    texture = 25 * np.sin(x / 2.3) * np.cos(y / 3.1)
    img[hill, 0] = 60 + texture[hill]
    img[hill, 1] = 120 + 0.6 * texture[hill] + 0.8 * (y[hill] - 40)
    img[hill, 2] = 50 + 0.3 * texture[hill]
    house = (x > 20) & (x < 34) & (y > 30) & (y < 44)
    img[house] = [170, 60, 50]
    img += rng.normal(0, 6, img.shape)
    return np.clip(np.rint(img), 0, 255).astype(np.uint8)


def ssim_pair(seed=8):
    rng = np.random.default_rng(seed)
    a = rng.integers(0, 256, (8, 8, 3), dtype=np.int64)
    b = np.clip(a + rng.integers(-40, 41, a.shape), 0, 255)
    b[2:5, 3:6] = 128
    return a.astype(np.uint8), b.astype(np.uint8)


def main():
    ROOT.mkdir(exist_ok=True)
    Image.fromarray(photo(), "RGB").save(ROOT / "photo.png")
    a, b = ssim_pair()
    Image.fromarray(a, "RGB").save(ROOT / "ssim_a.png")
    Image.fromarray(b, "RGB").save(ROOT / "ssim_b.png")


if __name__ == "__main__":
    main()
