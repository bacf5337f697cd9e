"""Regenerate the synthetic fixture images (deterministic, no RNG).

Run from the repository root:  python3 fixtures/generate.py
"""

from pathlib import Path

import numpy as np

from graphinterp.imaging import write_ppm


def gradient(h=24, w=24):
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    img = np.empty((h, w, 3))
    img[..., 0] = 255.0 * rr / (h - 1)
    img[..., 1] = 255.0 * cc / (w - 1)
    img[..., 2] = 255.0 * (rr + cc) / (h + w - 2)
    return np.rint(img)


def blocks(h=24, w=24):
    img = np.full((h, w, 3), 60.0)
    img[:, w // 2 :, 0] = 220.0
    img[h // 2 :, :, 1] = 180.0
    img[h // 3 : 2 * h // 3, w // 4 : 3 * w // 4, 2] = 240.0
    return img


def rings(h=24, w=24):
    rr, cc = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    rad = np.hypot(rr - (h - 1) / 2.0, cc - (w - 1) / 2.0)
    img = np.empty((h, w, 3))
    img[..., 0] = 127.5 * (1.0 + np.sin(rad * 1.1))
    img[..., 1] = 127.5 * (1.0 + np.cos(rad * 0.7))
    img[..., 2] = 127.5 * (1.0 + np.sin(rad * 0.4 + 1.0))
    return np.rint(img)


def flat(h=16, w=16):
    img = np.empty((h, w, 3))
    img[..., 0], img[..., 1], img[..., 2] = 80.0, 160.0, 240.0
    return img


def tall_gradient(h=21, w=17):
    # odd dimensions exercise the ceil-halved low-resolution grid
    return gradient(h, w)


def main():
    here = Path(__file__).parent
    for name, make in [
        ("gradient", gradient),
        ("blocks", blocks),
        ("rings", rings),
        ("flat", flat),
        ("odd_gradient", tall_gradient),
    ]:
        write_ppm(here / f"{name}.ppm", make())
        print(f"wrote {name}.ppm")


if __name__ == "__main__":
    main()
